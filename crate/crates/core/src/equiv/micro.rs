//! A straight-line compiler IR over named locals, and the cross-level check
//! of its array load against the compiled RISC-V code.

use std::cell::RefCell;
use std::collections::{BTreeMap, HashMap};
use std::fmt;
use std::sync::Arc;

use rand::Rng;

use super::{check_rutt, first_failure, sample_rng, Evidence, RuttConfig, Verdict};
use crate::effects::{
    interp_state, trigger, Computation, Effect, Event, ExecResult, Reg, Response, VMemEvent, Width, Xlen,
};
use crate::isa::{assemble, exec, Instr};
use crate::machine::MachineState;

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Operand {
    Local(String),
    Const(u64),
}

impl Operand {
    pub fn local(name: &str) -> Operand {
        Operand::Local(name.into())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum MicroOp {
    Add,
    Sub,
    Mul,
    And,
    Or,
    Xor,
    Shl,
    Lshr,
}

impl MicroOp {
    fn apply(self, a: u64, b: u64) -> u64 {
        match self {
            MicroOp::Add => a.wrapping_add(b),
            MicroOp::Sub => a.wrapping_sub(b),
            MicroOp::Mul => a.wrapping_mul(b),
            MicroOp::And => a & b,
            MicroOp::Or => a | b,
            MicroOp::Xor => a ^ b,
            MicroOp::Shl => a.wrapping_shl(b as u32),
            MicroOp::Lshr => a.wrapping_shr(b as u32),
        }
    }
}

/// Pointers and integers are 64-bit; memory traffic is 32-bit words.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum MicroInstr {
    /// `dst = base + idx * scale`
    GetElemPtr { dst: String, base: Operand, idx: Operand, scale: u64 },
    Load { dst: String, addr: Operand },
    Store { addr: Operand, value: Operand },
    Const { dst: String, value: u64 },
    BinOp { dst: String, op: MicroOp, a: Operand, b: Operand },
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum MicroEvent {
    LocalRead(String),
    LocalWrite(String, u64),
    MemLoad { addr: u64 },
    MemStore { addr: u64, value: u32 },
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum MicroAnswer {
    Value(u64),
    Unit,
}

impl Effect for MicroEvent {
    type Answer = MicroAnswer;

    fn accepts(&self, a: &MicroAnswer) -> bool {
        match self {
            MicroEvent::LocalRead(_) | MicroEvent::MemLoad { .. } => matches!(a, MicroAnswer::Value(_)),
            MicroEvent::LocalWrite(..) | MicroEvent::MemStore { .. } => *a == MicroAnswer::Unit,
        }
    }
}

type Micro<R> = Computation<MicroEvent, R>;

fn value(a: MicroAnswer) -> u64 {
    match a {
        MicroAnswer::Value(v) => v,
        MicroAnswer::Unit => unreachable!("tag checked on resume"),
    }
}

fn eval(o: &Operand) -> Micro<u64> {
    match o {
        Operand::Const(v) => Computation::ret(*v),
        Operand::Local(n) => trigger(MicroEvent::LocalRead(n.clone())).map(value),
    }
}

fn assign(dst: &str, v: Micro<u64>) -> Micro<()> {
    let dst = dst.to_string();
    v.bind(move |v| trigger(MicroEvent::LocalWrite(dst, v)).map(|_| ()))
}

#[derive(Clone, Debug, PartialEq, Eq, Default)]
pub struct MicroIR {
    pub body: Vec<MicroInstr>,
}

impl MicroIR {
    /// Every event the body emits, locals included.
    pub fn computation(&self) -> Micro<()> {
        fn go(body: Arc<Vec<MicroInstr>>, k: usize) -> Micro<()> {
            let Some(i) = body.get(k).cloned() else {
                return Computation::ret(());
            };
            let this = match i {
                MicroInstr::Const { dst, value } => assign(&dst, Computation::ret(value)),
                MicroInstr::GetElemPtr { dst, base, idx, scale } => {
                    let idx = eval(&idx);
                    assign(&dst, eval(&base).bind(move |b| idx.map(move |i| b.wrapping_add(i.wrapping_mul(scale)))))
                }
                MicroInstr::BinOp { dst, op, a, b } => {
                    let b = eval(&b);
                    assign(&dst, eval(&a).bind(move |x| b.map(move |y| op.apply(x, y))))
                }
                MicroInstr::Load { dst, addr } => assign(
                    &dst,
                    eval(&addr).bind(|addr| trigger(MicroEvent::MemLoad { addr }).map(|a| value(a) & 0xFFFF_FFFF)),
                ),
                MicroInstr::Store { addr, value: v } => {
                    let v = eval(&v);
                    eval(&addr).bind(move |addr| {
                        v.bind(move |v| trigger(MicroEvent::MemStore { addr, value: v as u32 }).map(|_| ()))
                    })
                }
            };
            this.bind(move |()| go(body, k + 1))
        }
        go(Arc::new(self.body.clone()), 0)
    }
}

pub type Locals = BTreeMap<String, u64>;

/// Answers local reads and writes from `l`; memory events stay visible.
/// An unassigned local reads as zero.
pub fn locals_handler(e: &MicroEvent, l: &mut Locals) -> Option<MicroAnswer> {
    match e {
        MicroEvent::LocalRead(n) => Some(MicroAnswer::Value(l.get(n).copied().unwrap_or(0))),
        MicroEvent::LocalWrite(n, v) => {
            l.insert(n.clone(), *v);
            Some(MicroAnswer::Unit)
        }
        _ => None,
    }
}

/// `p = getelementptr i32, ptr base, i64 idx; v1 = load i32, ptr p`
pub fn array_load() -> MicroIR {
    MicroIR {
        body: vec![
            MicroInstr::GetElemPtr {
                dst: "p".into(),
                base: Operand::local("base"),
                idx: Operand::local("idx"),
                scale: 4,
            },
            MicroInstr::Load { dst: "v1".into(), addr: Operand::local("p") },
        ],
    }
}

fn asm(lines: &[&str]) -> Vec<Instr> {
    lines.iter().map(|l| assemble(l).expect("fixed program assembles")).collect()
}

/// The compiled form of [`array_load`]: base in a0, idx in a1, result in a2.
pub fn riscv_array_load() -> Vec<Instr> {
    asm(&["slli t0, a1, 2", "add t0, a0, t0", "lw a2, 0(t0)"])
}

/// [`riscv_array_load`] with a halfword load.
pub fn riscv_array_load_mutant() -> Vec<Instr> {
    asm(&["slli t0, a1, 2", "add t0, a0, t0", "lh a2, 0(t0)"])
}

/// Straight-line semantics, stopping at the first instruction that does not
/// succeed.
fn straight_line(code: Arc<Vec<Instr>>, xlen: Xlen, k: usize, mut done: Vec<ExecResult>) -> crate::effects::Rv<Vec<ExecResult>> {
    if k == code.len() {
        return Computation::ret(done);
    }
    exec(code[k], xlen).bind(move |r| {
        done.push(r);
        if r == ExecResult::Success {
            straight_line(code, xlen, k + 1, done)
        } else {
            Computation::ret(done)
        }
    })
}

/// Byte-addressed memory whose initial contents are a fixed function of
/// the seed, so two copies answer corresponding reads identically.
#[derive(Clone, Debug)]
struct SeededMemory {
    seed: u64,
    written: HashMap<u64, u8>,
}

impl SeededMemory {
    fn new(seed: u64) -> Self {
        SeededMemory { seed, written: HashMap::new() }
    }

    fn byte(&self, addr: u64) -> u8 {
        if let Some(b) = self.written.get(&addr) {
            return *b;
        }
        let mut z = self.seed ^ addr.wrapping_mul(0x9E37_79B9_7F4A_7C15);
        z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
        z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
        (z ^ (z >> 31)) as u8
    }

    fn read(&self, addr: u64, n: u64) -> u64 {
        (0..n).fold(0, |v, i| v | (self.byte(addr.wrapping_add(i)) as u64) << (8 * i))
    }

    fn write(&mut self, addr: u64, n: u64, v: u64) {
        for i in 0..n {
            self.written.insert(addr.wrapping_add(i), (v >> (8 * i)) as u8);
        }
    }
}

fn vmem_addr(vaddr: crate::BitVec, offset: crate::BitVec) -> u64 {
    vaddr.add(offset.sign_extend(vaddr.width())).value()
}

/// Load to word read at the same address, store to word write of the same
/// data.
fn obs_rev(e1: &MicroEvent, e2: &Event) -> bool {
    match (e1, e2) {
        (MicroEvent::MemLoad { addr }, Event::VMem(VMemEvent::VMemRead { vaddr, offset, width, res: false })) => {
            *addr == vmem_addr(*vaddr, *offset) && *width == Width::Word
        }
        (
            MicroEvent::MemStore { addr, value },
            Event::VMem(VMemEvent::VMemWrite { vaddr, offset, width, data, res: false }),
        ) => *addr == vmem_addr(*vaddr, *offset) && *width == Width::Word && data.value() as u32 == *value,
        _ => false,
    }
}

/// The access succeeded and both sides saw the same word.
fn obs_rans(e1: &MicroEvent, a1: &MicroAnswer, _e2: &Event, a2: &Response) -> bool {
    match (e1, a1, a2) {
        (MicroEvent::MemLoad { .. }, MicroAnswer::Value(v), Response::Read(Ok(b))) => {
            *v as u32 == b.extract(0, 32).value() as u32
        }
        (MicroEvent::MemStore { .. }, MicroAnswer::Unit, Response::Write(Ok(()))) => true,
        _ => false,
    }
}

fn sext32(v: u64) -> u64 {
    v as u32 as i32 as i64 as u64
}

/// Draws (base, idx) until the element address fits in 32 bits.
fn sample_inputs<R: Rng>(rng: &mut R) -> (u64, u64) {
    loop {
        let base = rng.gen::<u32>() as u64;
        let idx = if rng.gen_ratio(1, 8) { 0 } else { rng.gen_range(0..1u64 << 30) };
        if base + 4 * idx < 1 << 32 {
            return (base, idx);
        }
    }
}

/// Checks `code` (base in a0, idx in a1, result in a2) against the
/// micro-IR [`array_load`] on RV64.
pub fn check_crosslevel_with(code: &[Instr], samples: usize, seed: u64) -> Verdict {
    let code = Arc::new(code.to_vec());
    first_failure(samples, |i| {
        let mut rng = sample_rng(seed, i);
        let (base, idx) = sample_inputs(&mut rng);
        let mut st = MachineState::new(Xlen::Rv64);
        for r in Reg::all().skip(1) {
            let v = rng.gen();
            st.set_gp(r, v);
        }
        st.set_gp(Reg::A0, base);
        st.set_gp(Reg::A1, idx);
        let locals = Locals::from([("base".to_string(), base), ("idx".to_string(), idx)]);
        let mem_seed: u64 = rng.gen();

        let left = interp_state(locals_handler, array_load().computation(), locals);
        let regs_only = |e: &Event, s: &mut MachineState| e.is_processor().then(|| s.handle(e));
        let right = interp_state(regs_only, straight_line(code.clone(), Xlen::Rv64, 0, Vec::new()), st);

        let mut m1 = SeededMemory::new(mem_seed);
        let env1 = move |e: &MicroEvent| match e {
            MicroEvent::MemLoad { addr } => MicroAnswer::Value(m1.read(*addr, 4)),
            MicroEvent::MemStore { addr, value } => {
                m1.write(*addr, 4, *value as u64);
                MicroAnswer::Unit
            }
            other => unreachable!("locals are interpreted away, got {other:?}"),
        };
        let mut m2 = SeededMemory::new(mem_seed);
        let env2 = move |e: &Event| match e {
            Event::VMem(VMemEvent::VMemRead { vaddr, offset, width, .. }) => {
                let v = m2.read(vmem_addr(*vaddr, *offset), width.bytes());
                Response::Read(Ok(Xlen::Rv64.word(v)))
            }
            Event::VMem(VMemEvent::VMemWrite { vaddr, offset, width, data, .. }) => {
                m2.write(vmem_addr(*vaddr, *offset), width.bytes(), data.value());
                Response::Write(Ok(()))
            }
            other => unreachable!("registers are interpreted away, got {other:?}"),
        };

        let failed = RefCell::new(None);
        let final_rel = |l: &(Locals, ()), r: &(MachineState, Vec<ExecResult>)| {
            let (locals, (s, results)) = (&l.0, r);
            if let Some(bad) = results.iter().find(|r| **r != ExecResult::Success) {
                *failed.borrow_mut() = Some(("riscv result".to_string(), "Success".to_string(), format!("{bad:?}")));
                return false;
            }
            let v1 = locals.get("v1").copied().unwrap_or(0);
            let a2 = s.x[Reg::A2.index()];
            if a2 != sext32(v1) {
                *failed.borrow_mut() = Some(("v1 = a2".to_string(), format!("{v1:#x}"), format!("{a2:#x}")));
                return false;
            }
            true
        };
        let cfg = RuttConfig::new(obs_rev, obs_rans, final_rel);
        let ctx = BTreeMap::from([
            ("base".to_string(), format!("{base:#x}")),
            ("idx".to_string(), idx.to_string()),
        ]);
        match check_rutt(left, right, env1, env2, &cfg).expect("oracles answer with matching tags") {
            Verdict::Mismatch(ev) => {
                let ev = match (ev.what.as_str(), failed.take()) {
                    ("result", Some((what, l, r))) => Evidence { what, left: l, right: r, ..ev },
                    _ => ev,
                };
                Verdict::Mismatch(ev.in_sample(i, ctx))
            }
            Verdict::OracleViolation(ev) => Verdict::OracleViolation(ev.in_sample(i, ctx)),
            v => v,
        }
    })
}

/// [`check_crosslevel_with`] on [`riscv_array_load`].
pub fn check_crosslevel(samples: usize, seed: u64) -> Verdict {
    check_crosslevel_with(&riscv_array_load(), samples, seed)
}

impl fmt::Display for MicroIR {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let op = |o: &Operand| match o {
            Operand::Local(n) => format!("%{n}"),
            Operand::Const(v) => v.to_string(),
        };
        for i in &self.body {
            match i {
                MicroInstr::GetElemPtr { dst, base, idx, scale } => {
                    writeln!(f, "%{dst} = getelementptr {}, {} x {scale}", op(base), op(idx))?
                }
                MicroInstr::Load { dst, addr } => writeln!(f, "%{dst} = load i32, {}", op(addr))?,
                MicroInstr::Store { addr, value } => writeln!(f, "store i32 {}, {}", op(value), op(addr))?,
                MicroInstr::Const { dst, value } => writeln!(f, "%{dst} = {value}")?,
                MicroInstr::BinOp { dst, op: o, a, b } => writeln!(f, "%{dst} = {o:?} {}, {}", op(a), op(b))?,
            }
        }
        Ok(())
    }
}
