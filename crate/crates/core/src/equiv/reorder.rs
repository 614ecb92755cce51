//! Translation validation of reordered straight-line code, as produced when
//! instructions are moved next to each other for macro-op fusion.

use std::cell::RefCell;
use std::collections::BTreeMap;
use std::sync::Arc;

use rand::Rng;
use serde::Serialize;

use super::{check_eutt, first_failure, sample_rng, EuttConfig, Evidence, Verdict};
use crate::effects::{Computation, Event, Reg, Response, Xlen};
use crate::isa::{assemble_with, encode, AsmError, Instr};
use crate::machine::{step_lemma_table, MachineState, StepOutcome};

/// The unfused sequence: a lui/addi constant pair and an auipc/jalr call
/// pair, interleaved with an unrelated `sub`.
pub const BASELINE: &str = "\
lui a0, imm_hi
sub t0, t1, t2
auipc ra, pc_off
addi a0, a0, imm_lo
jalr ra, call_off(ra)
";

/// Only the lui/addi pair made adjacent.
pub const PARTIAL_FUSED: &str = "\
lui a0, imm_hi
addi a0, a0, imm_lo
auipc ra, pc_off
sub t0, t1, t2
jalr ra, call_off(ra)
";

/// Both pairs adjacent. Moving the auipc changes the pc it captures.
pub const FULL_FUSED: &str = "\
lui a0, imm_hi
addi a0, a0, imm_lo
sub t0, t1, t2
auipc ra, pc_off
jalr ra, call_off(ra)
";

/// Writable scratch memory present in every sampled state; `sp` points
/// into its middle.
const SCRATCH: u64 = 0x8000_0000;
const SCRATCH_LEN: usize = 0x1000;

/// Instruction steps allowed per template instruction before the run
/// counts as non-terminating.
const STEPS_PER_INSTR: usize = 16;

/// Values for the symbolic immediates of a template.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize)]
pub struct Params {
    pub imm_hi: i64,
    pub imm_lo: i64,
    pub pc_off: i64,
    pub call_off: i64,
}

impl Params {
    pub fn lookup(&self, name: &str) -> Option<i64> {
        match name {
            "imm_hi" => Some(self.imm_hi),
            "imm_lo" => Some(self.imm_lo),
            "pc_off" => Some(self.pc_off),
            "call_off" => Some(self.call_off),
            _ => None,
        }
    }

    pub fn sample<R: Rng>(rng: &mut R) -> Params {
        Params {
            imm_hi: rng.gen_range(0..1 << 20),
            imm_lo: rng.gen_range(-2048..2048),
            pc_off: rng.gen_range(-(1 << 19)..1 << 19),
            call_off: rng.gen_range(-2048..2048),
        }
    }

    fn context(&self) -> BTreeMap<String, String> {
        BTreeMap::from([
            ("imm_hi".into(), format!("{:#x}", self.imm_hi)),
            ("imm_lo".into(), self.imm_lo.to_string()),
            ("pc_off".into(), format!("{:#x}", self.pc_off)),
            ("call_off".into(), self.call_off.to_string()),
        ])
    }
}

/// Assembly lines whose immediates may name [`Params`] fields.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Template {
    lines: Vec<String>,
}

impl Template {
    /// One instruction per line; `#` comments and blank lines are skipped.
    /// Every line must assemble with all parameters zero.
    pub fn parse(text: &str) -> Result<Template, AsmError> {
        let lines: Vec<String> = text
            .lines()
            .map(|l| l.split('#').next().unwrap_or("").trim())
            .filter(|l| !l.is_empty())
            .map(String::from)
            .collect();
        let t = Template { lines };
        t.instantiate(&Params::default())?;
        Ok(t)
    }

    pub fn from_instrs(code: &[Instr]) -> Template {
        Template { lines: code.iter().map(|i| crate::isa::disassemble(i)).collect() }
    }

    pub fn len(&self) -> usize {
        self.lines.len()
    }

    pub fn is_empty(&self) -> bool {
        self.lines.is_empty()
    }

    pub fn lines(&self) -> &[String] {
        &self.lines
    }

    pub fn instantiate(&self, p: &Params) -> Result<Vec<Instr>, AsmError> {
        self.lines.iter().map(|l| assemble_with(l, &|name| p.lookup(name))).collect()
    }
}

/// Runs `code`, placed at `base`, until the pc leaves it or an instruction
/// traps. Instructions covered by the step-lemma table advance through
/// their net effect; the rest through their full semantics. The result is a
/// pure computation with one tau per executed instruction.
pub fn run_block(s: MachineState, code: Arc<Vec<Instr>>, base: u64) -> Computation<Event, MachineState> {
    Computation::lazy(move || {
        let mut s = s;
        let end = base.wrapping_add(4 * code.len() as u64);
        let off = s.pc.wrapping_sub(base);
        if s.pc % 4 != 0 || off >= end.wrapping_sub(base) {
            return Computation::ret(s);
        }
        let i = code[(off / 4) as usize];
        let out = match step_lemma_table(i, s.xlen) {
            Some(net) => net.apply(&mut s),
            None => s.exec_instr(i, encode(&i).unwrap_or(0)),
        };
        match out {
            StepOutcome::Retired => Computation::tau(run_block(s, code, base)),
            StepOutcome::Trapped(_) | StepOutcome::Wfi => Computation::ret(s),
        }
    })
}

/// The first observable difference between two final states, comparing
/// the given registers in ascending order, then pc, privilege and trap
/// CSRs, then memory.
pub fn result_equiv(a: &MachineState, b: &MachineState, written: &[Reg]) -> Option<(String, String, String)> {
    let hex = |v: u64| format!("{v:#x}");
    for r in written {
        let (x, y) = (a.x[r.index()], b.x[r.index()]);
        if x != y {
            return Some((r.abi_name().into(), hex(x), hex(y)));
        }
    }
    if a.pc != b.pc {
        return Some(("pc".into(), hex(a.pc), hex(b.pc)));
    }
    if a.privilege != b.privilege {
        return Some(("privilege".into(), format!("{:?}", a.privilege), format!("{:?}", b.privilege)));
    }
    let (c, d) = (&a.csrs, &b.csrs);
    for (name, x, y) in [("mcause", c.mcause, d.mcause), ("mepc", c.mepc, d.mepc), ("mtval", c.mtval, d.mtval)] {
        if x != y {
            return Some((name.into(), hex(x), hex(y)));
        }
    }
    if c != d {
        return Some(("csrs".into(), format!("{c:?}"), format!("{d:?}")));
    }
    if a.mem != b.mem {
        let at = a
            .mem
            .mapped_pages()
            .chain(b.mem.mapped_pages())
            .flat_map(|p| p..p + 4096)
            .find(|&addr| a.mem.read_byte(addr) != b.mem.read_byte(addr));
        let show = |m: &MachineState, addr: Option<u64>| match addr.and_then(|x| m.mem.read_byte(x)) {
            Some(v) => format!("{v:#04x}"),
            None => "unmapped".into(),
        };
        let what = at.map_or("memory".into(), |x| format!("memory[{x:#x}]"));
        return Some((what, show(a, at), show(b, at)));
    }
    None
}

fn written(code: &[Instr]) -> Vec<Reg> {
    let mut rs: Vec<Reg> = code.iter().filter_map(|i| i.int_rd()).filter(|r| !r.is_zero()).collect();
    rs.sort_by_key(|r| r.index());
    rs.dedup();
    rs
}

fn random_state<R: Rng>(rng: &mut R, xlen: Xlen) -> MachineState {
    let mut s = MachineState::new(xlen);
    for r in Reg::all().skip(1) {
        let v = rng.gen();
        s.set_gp(r, v);
    }
    s.set_gp(Reg::SP, SCRATCH + SCRATCH_LEN as u64 / 2);
    let mut bytes = vec![0u8; SCRATCH_LEN];
    rng.fill(&mut bytes[..]);
    s.mem.load(SCRATCH, &bytes);
    s.pc = rng.gen::<u64>() & xlen.mask() & !3;
    s
}

/// Compares one instantiation of `a` and `b` from one state.
fn compare_once(a: &[Instr], b: &[Instr], s: &MachineState) -> Verdict {
    let mut regs = written(a);
    regs.extend(written(b));
    regs.sort_by_key(|r| r.index());
    regs.dedup();

    let bound = STEPS_PER_INSTR * a.len().max(b.len()).max(1);
    let diff = RefCell::new(None);
    let cfg = EuttConfig::new(|x: &MachineState, y: &MachineState| {
        let d = result_equiv(x, y, &regs);
        let same = d.is_none();
        *diff.borrow_mut() = d;
        same
    })
    .with_fuel(bound as u64, 1);
    let ta = run_block(s.clone(), Arc::new(a.to_vec()), s.pc);
    let tb = run_block(s.clone(), Arc::new(b.to_vec()), s.pc);
    let no_events = |e: &Event| -> Response { unreachable!("block runs are pure, got {e:?}") };
    match check_eutt(ta, tb, no_events, &cfg).expect("no events are answered") {
        Verdict::Mismatch(ev) if ev.what == "result" => match diff.take() {
            Some((what, l, r)) => Verdict::Mismatch(Evidence::new(0, what, l, r)),
            None => Verdict::Mismatch(ev),
        },
        Verdict::Undecided(_) => Verdict::Undecided(format!("block did not finish within {bound} steps")),
        v => v,
    }
}

/// Samples parameters and RV64 machine states, runs both templates from the
/// same state, and compares the results with [`result_equiv`].
pub fn validate_reorder(a: &Template, b: &Template, samples: usize, seed: u64) -> Verdict {
    first_failure(samples, |i| {
        let mut rng = sample_rng(seed, i);
        let p = Params::sample(&mut rng);
        let s = random_state(&mut rng, Xlen::Rv64);
        let (ca, cb) = match (a.instantiate(&p), b.instantiate(&p)) {
            (Ok(x), Ok(y)) => (x, y),
            (Err(e), _) | (_, Err(e)) => return Verdict::Undecided(format!("sample {i}: {e}")),
        };
        let mut ctx = p.context();
        ctx.insert("pc0".into(), format!("{:#x}", s.pc));
        match compare_once(&ca, &cb, &s) {
            Verdict::Mismatch(ev) => Verdict::Mismatch(ev.in_sample(i, ctx)),
            Verdict::Undecided(why) => Verdict::Undecided(format!("sample {i}: {why}")),
            v => v,
        }
    })
}
