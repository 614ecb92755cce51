//! A rule-table ALU in the style of a hardware description, and its
//! refinement check against the R-type instruction semantics.

use std::collections::BTreeMap;

use rand::Rng;

use super::{first_failure, sample_rng, Evidence, Verdict};
use crate::effects::{interp_state, ExecResult, Reg, Xlen};
use crate::isa::{encode, exec, Instr, RtypeOp};
use crate::machine::{combined_handler, MachineState};

pub const RTYPE_OPS: [RtypeOp; 10] = [
    RtypeOp::Add,
    RtypeOp::Sub,
    RtypeOp::Sll,
    RtypeOp::Slt,
    RtypeOp::Sltu,
    RtypeOp::Xor,
    RtypeOp::Srl,
    RtypeOp::Sra,
    RtypeOp::Or,
    RtypeOp::And,
];

struct Rule {
    funct7: u32,
    funct3: u32,
    f: fn(u32, u32) -> u32,
}

const RULES: [Rule; 10] = [
    Rule { funct7: 0x00, funct3: 0, f: |a, b| a.wrapping_add(b) },
    Rule { funct7: 0x20, funct3: 0, f: |a, b| a.wrapping_sub(b) },
    Rule { funct7: 0x00, funct3: 1, f: |a, b| a << (b & 31) },
    Rule { funct7: 0x00, funct3: 2, f: |a, b| ((a as i32) < (b as i32)) as u32 },
    Rule { funct7: 0x00, funct3: 3, f: |a, b| (a < b) as u32 },
    Rule { funct7: 0x00, funct3: 4, f: |a, b| a ^ b },
    Rule { funct7: 0x00, funct3: 5, f: |a, b| a >> (b & 31) },
    Rule { funct7: 0x20, funct3: 5, f: |a, b| ((a as i32) >> (b & 31)) as u32 },
    Rule { funct7: 0x00, funct3: 6, f: |a, b| a | b },
    Rule { funct7: 0x00, funct3: 7, f: |a, b| a & b },
];

/// Combinational 32-bit ALU driven by the funct fields of an OP-major
/// instruction word.
pub struct RuleALU;

impl RuleALU {
    /// `None` unless `inst` is one of the ten base R-type encodings.
    pub fn eval(inst: u32, a: u32, b: u32) -> Option<u32> {
        if inst & 0x7F != 0x33 {
            return None;
        }
        let (funct3, funct7) = ((inst >> 12) & 7, inst >> 25);
        RULES
            .iter()
            .find(|r| r.funct7 == funct7 && r.funct3 == funct3)
            .map(|r| (r.f)(a, b))
    }
}

/// Runs `i` on `s` through the full handler and returns the final state
/// and result.
fn interp_exec(i: Instr, s: MachineState) -> (MachineState, ExecResult) {
    let xlen = s.xlen;
    interp_state(combined_handler, exec(i, xlen), s)
        .run_with(|e| unreachable!("combined handler declines nothing: {e:?}"), 10_000)
        .expect("handler tags match")
        .returned()
        .expect("R-type semantics is finite")
}

/// ISA-side value of `op` on RV32 operands.
pub fn isa_rtype(op: RtypeOp, a: u32, b: u32) -> u32 {
    let mut s = MachineState::new(Xlen::Rv32);
    s.set_gp(Reg::A0, a as u64);
    s.set_gp(Reg::A1, b as u64);
    let (s, _) = interp_exec(Instr::Rtype { rs1: Reg::A0, rs2: Reg::A1, rd: Reg::A2, op }, s);
    s.x[Reg::A2.index()] as u32
}

fn operand<R: Rng>(rng: &mut R) -> u64 {
    match rng.gen_range(0..8) {
        0 => [0, 1, 0xFFFF_FFFF, 0x8000_0000, 0x7FFF_FFFF][rng.gen_range(0..5)],
        1 => rng.gen_range(0..64),
        _ => rng.gen::<u32>() as u64,
    }
}

/// For each R-type op and each sample, runs the instruction on a random RV32
/// state and the rule ALU on the same encoding and operand values. The ISA
/// side must write only rd and the ALU must produce the written value.
pub fn check_alu_refinement(samples: usize, seed: u64) -> Verdict {
    first_failure(samples * RTYPE_OPS.len(), |k| {
        let (op, i) = (RTYPE_OPS[k % RTYPE_OPS.len()], k / RTYPE_OPS.len());
        let mut rng = sample_rng(seed, k);
        let mut s = MachineState::new(Xlen::Rv32);
        for r in Reg::all().skip(1) {
            let v = operand(&mut rng);
            s.set_gp(r, v);
        }
        s.pc = rng.gen::<u32>() as u64 & !3;
        let rs1 = Reg::from_bits(rng.gen());
        let rs2 = Reg::from_bits(rng.gen());
        let rd = Reg::from_bits(rng.gen_range(1..32));
        let instr = Instr::Rtype { rs1, rs2, rd, op };
        let word = encode(&instr).expect("R-type encodes");
        let (a, b) = (s.x[rs1.index()] as u32, s.x[rs2.index()] as u32);

        let ctx = BTreeMap::from([
            ("op".to_string(), format!("{op:?}")),
            ("a".to_string(), format!("{a:#010x}")),
            ("b".to_string(), format!("{b:#010x}")),
            ("rd".to_string(), rd.abi_name().to_string()),
        ]);
        let fail = |what: &str, l: String, r: String| Verdict::Mismatch(Evidence::new(0, what, l, r).in_sample(i, ctx.clone()));

        let (after, res) = interp_exec(instr, s.clone());
        if res != ExecResult::Success {
            return fail("isa result", "Success".into(), format!("{res:?}"));
        }
        let v = after.x[rd.index()];
        let mut expect = s;
        expect.set_gp(rd, v);
        if after != expect {
            return fail("isa state", "only rd written".into(), format!("{after:?}"));
        }
        match RuleALU::eval(word, a, b) {
            None => fail("alu", format!("{v:#010x}"), "no result".into()),
            Some(r) if r as u64 != v => fail("alu", format!("{v:#010x}"), format!("{r:#010x}")),
            Some(_) => Verdict::Equivalent,
        }
    })
}
