//! Random machine states and the differential runs of the instruction
//! semantics against the direct reference.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use rvfx_core::effects::{interp_state, record_trace, Event, ExecResult, Privilege, ProcessorEvent, Reg, Response, TrapCause, Width, Xlen};
use rvfx_core::isa::{assemble, csr, encode, exec, Instr};
use rvfx_core::machine::mstatus;
use rvfx_core::machine::{combined_handler, MachineState, StepOutcome};

use super::reference::reference_exec;
use super::{all_ops, build};

pub const STATES_PER_OP: usize = 1000;
const WINDOW: u64 = 0x8000_0000;
const WINDOW_LEN: u64 = 0x2000;

const CSRS: &[u16] = &[
    csr::FFLAGS,
    csr::FRM,
    csr::FCSR,
    csr::SSTATUS,
    csr::SIE,
    csr::STVEC,
    csr::SSCRATCH,
    csr::SEPC,
    csr::SCAUSE,
    csr::STVAL,
    csr::SIP,
    csr::SATP,
    csr::MHARTID,
    csr::MSTATUS,
    csr::MISA,
    csr::MEDELEG,
    csr::MIDELEG,
    csr::MIE,
    csr::MTVEC,
    csr::MSCRATCH,
    csr::MEPC,
    csr::MCAUSE,
    csr::MTVAL,
    csr::MIP,
    csr::CYCLE,
    csr::PMPADDR0,
];

const SPECIAL_F32: &[u32] = &[
    0x0000_0000,
    0x8000_0000,
    0x3F80_0000,
    0xBF80_0000,
    0x7F80_0000,
    0xFF80_0000,
    0x7FC0_0000,
    0x7F80_0001,
    0xFFC0_0001,
    0x0000_0001,
    0x807F_FFFF,
    0x7F7F_FFFF,
    0x4F00_0000,
    0xCF00_0000,
    0x5F00_0000,
    0x3F00_0000,
    0x3FC0_0000,
];

fn biased_int<R: Rng>(rng: &mut R, xlen: Xlen) -> u64 {
    let v = match rng.gen_range(0..8) {
        0 => rng.gen_range(0..16),
        1 => (rng.gen_range(0..16) as u64).wrapping_neg(),
        2 => 1 << rng.gen_range(0..64),
        3 => (1u64 << rng.gen_range(0..64)).wrapping_sub(1),
        4 => [0x8000_0000, 0x7FFF_FFFF, 0xFFFF_FFFF, 1 << 63, i64::MAX as u64][rng.gen_range(0..5)],
        5 => rng.gen::<i32>() as i64 as u64,
        _ => rng.gen(),
    };
    v & xlen.mask()
}

fn biased_f32<R: Rng>(rng: &mut R) -> u32 {
    if rng.gen_bool(0.4) {
        SPECIAL_F32[rng.gen_range(0..SPECIAL_F32.len())] ^ (rng.gen_range(0..2) << 31)
    } else {
        rng.gen()
    }
}

/// Target address of a memory access, with the base register solved for it.
fn aim<R: Rng>(rng: &mut R, s: &mut MachineState, base: Reg, imm: u64) {
    if base.is_zero() || rng.gen_bool(0.15) {
        return;
    }
    let target = WINDOW - 16 + rng.gen_range(0..WINDOW_LEN + 32);
    let target = match rng.gen_range(0..3) {
        0 => target & !7,
        1 => target & !3,
        _ => target,
    };
    s.x[base.index()] = target.wrapping_sub(imm) & s.xlen.mask();
}

fn sext12(imm: rvfx_core::BitVec) -> u64 {
    imm.signed() as u64
}

pub fn random_state<R: Rng>(rng: &mut R, i: &Instr, xlen: Xlen) -> MachineState {
    let mut s = MachineState::new(xlen);
    for r in 1..32 {
        s.x[r] = biased_int(rng, xlen);
    }
    for r in 0..32 {
        s.f[r] = biased_f32(rng);
    }
    s.pc = (WINDOW + rng.gen_range(0..WINDOW_LEN)) & !3;
    s.privilege = [Privilege::Machine, Privilege::Supervisor, Privilege::User][rng.gen_range(0..3)];
    s.csrs.fflags = rng.gen_range(0..32);
    s.csrs.frm = if rng.gen_bool(0.8) { rng.gen_range(0..5) } else { rng.gen_range(5..8) };
    s.csrs.mstatus = rng.gen::<u64>() & mstatus::WRITABLE & !mstatus::MPP;
    s.csrs.mscratch = biased_int(rng, xlen);
    s.csrs.mtvec = biased_int(rng, xlen) & !2;
    s.csrs.medeleg = rng.gen::<u64>() & 0xB3FF;
    s.trap_misaligned = rng.gen_bool(0.2);
    s.mem.map(WINDOW, WINDOW_LEN);
    let bytes: Vec<u8> = (0..WINDOW_LEN).map(|_| rng.gen()).collect();
    s.mem.load(WINDOW, &bytes);

    use Instr::*;
    match *i {
        Load { imm, rs1, .. } | Store { imm, rs1, .. } | Fload { imm, rs1, .. } | Fstore { imm, rs1, .. } => {
            aim(rng, &mut s, rs1, sext12(imm))
        }
        Jalr { imm, rs1, .. } => {
            if rng.gen_bool(0.5) {
                aim(rng, &mut s, rs1, sext12(imm))
            }
        }
        Atype { rs1, width, .. } => {
            aim(rng, &mut s, rs1, 0);
            let a = s.x[rs1.index()];
            s.reservation = match rng.gen_range(0..4) {
                0 => None,
                1 => Some((a, width)),
                2 => Some((a, if width == Width::Word { Width::Double } else { Width::Word })),
                _ => Some(((WINDOW + rng.gen_range(0..WINDOW_LEN)) & !3, Width::Word)),
            };
        }
        _ => {}
    }
    if s.reservation.is_none() && rng.gen_bool(0.3) {
        s.reservation = Some(((WINDOW + rng.gen_range(0..WINDOW_LEN)) & !7, Width::Double));
    }
    s
}

/// Picks a CSR address that exists for most cases.
pub fn retarget_csr<R: Rng>(rng: &mut R, i: Instr) -> Instr {
    use Instr::*;
    let pick = |rng: &mut R, c: rvfx_core::BitVec| {
        if rng.gen_bool(0.85) {
            rvfx_core::BitVec::new(12, CSRS[rng.gen_range(0..CSRS.len())] as u64)
        } else {
            c
        }
    };
    match i {
        Csr { csr, rs1, rd, op } => Csr { csr: pick(rng, csr), rs1, rd, op },
        CsrI { csr, uimm, rd, op } => CsrI { csr: pick(rng, csr), uimm, rd, op },
        other => other,
    }
}

pub fn run_semantics(s: &MachineState, i: Instr) -> (MachineState, ExecResult) {
    let t = interp_state(combined_handler, exec(i, s.xlen), s.clone());
    t.run_with(|e| panic!("handler declined {e:?}"), 1_000_000)
        .expect("well-tagged")
        .returned()
        .expect("finite")
}

/// Every operation on both XLENs against the reference, `states` random
/// states each. Returns the number of operations checked.
pub fn exec_vs_reference(states: usize) -> Result<usize, String> {
    let mut checked = 0;
    for xlen in [Xlen::Rv32, Xlen::Rv64] {
        let ops = all_ops(xlen);
        let failures: Vec<String> = ops
            .par_iter()
            .enumerate()
            .filter_map(|(k, (ctor, op))| {
                let mut rng = ChaCha8Rng::seed_from_u64(0x5eed_0000 + k as u64 + xlen.bits() as u64 * 1000);
                for n in 0..states {
                    let raw: [u64; 8] = rng.gen();
                    let i = retarget_csr(&mut rng, build(ctor, *op, &raw, xlen));
                    let s = random_state(&mut rng, &i, xlen);
                    let got = run_semantics(&s, i);
                    let want = reference_exec(&s, &i);
                    if got != want {
                        return Some(format!(
                            "{xlen:?} {ctor}#{op} case {n}: {i:?}\n got  {:?} next_pc={:?} x={:x?} res={:?}\n want {:?} next_pc={:?} x={:x?} res={:?}",
                            got.0.reservation, got.0.next_pc, got.0.x, got.1,
                            want.0.reservation, want.0.next_pc, want.0.x, want.1
                        ));
                    }
                }
                None
            })
            .collect();
        if !failures.is_empty() {
            return Err(format!("{} operations disagree:\n{}", failures.len(), failures.join("\n")));
        }
        checked += ops.len();
    }
    Ok(checked)
}

/// `csrrs a0, mhartid, x0` retires without a CSR write event;
/// `csrrw a0, mhartid, x1` raises an illegal-instruction trap.
pub fn csr_x0_corner() -> Result<(), String> {
    let read = assemble("csrrs a0, mhartid, x0").unwrap();
    let write = assemble("csrrw a0, mhartid, x1").unwrap();
    for xlen in [Xlen::Rv32, Xlen::Rv64] {
        let mut s = MachineState::new(xlen);
        let mut trace_s = s.clone();
        let (trace, out) = record_trace(exec(read, xlen), |e| trace_s.handle(e), 1000).map_err(|e| e.to_string())?;
        if out.returned() != Some(ExecResult::Success) {
            return Err(format!("{xlen:?}: csrrs did not succeed"));
        }
        if trace.iter().any(|(e, _)| matches!(e, Event::Proc(ProcessorEvent::CsrWrite { .. }))) {
            return Err(format!("{xlen:?}: csrrs with x0 emitted a CSR write"));
        }
        if !trace.iter().any(|(e, r)| {
            matches!(e, Event::Proc(ProcessorEvent::CsrRead { .. })) && matches!(r, Response::Read(Ok(_)))
        }) {
            return Err(format!("{xlen:?}: csrrs did not read mhartid"));
        }
        if s.exec_instr(read, encode(&read).unwrap()) != StepOutcome::Retired || s.x[10] != 0 {
            return Err(format!("{xlen:?}: csrrs did not retire with a0 = 0"));
        }

        let mut t = MachineState::new(xlen);
        t.csrs.mtvec = 0x100;
        let word = encode(&write).unwrap();
        match t.exec_instr(write, word) {
            StepOutcome::Trapped(trap) if trap.cause == TrapCause::IllegalInstruction && t.csrs.mtval == word as u64 => {}
            other => return Err(format!("{xlen:?}: csrrw to mhartid gave {other:?}")),
        }
    }
    Ok(())
}
