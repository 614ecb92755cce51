//! Closed-form net effects of single instructions, so a checker can advance
//! a machine one instruction in one move.

use std::fmt;

use crate::bitvec::BitVec;
use crate::effects::{Reg, Trap, TrapCause, Width, Xlen};
use crate::isa::{BranchOp, Instr, ItypeOp, MulOp, MulWOp, RtypeOp, RtypeWOp, ShiftOp, UtypeOp};

use super::{MachineState, StepOutcome};

#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub enum AluOp {
    Add,
    Sub,
    Sll,
    Srl,
    Sra,
    Slt,
    Sltu,
    Xor,
    Or,
    And,
    AddW,
    SubW,
    SllW,
    SrlW,
    SraW,
    Mul,
    Mulh,
    Mulhsu,
    Mulhu,
    Div,
    Divu,
    Rem,
    Remu,
    MulW,
    DivW,
    DivuW,
    RemW,
    RemuW,
}

impl AluOp {
    fn symbol(self) -> &'static str {
        match self {
            AluOp::Add => "+",
            AluOp::Sub => "-",
            AluOp::Sll => "<<",
            AluOp::Srl => ">>u",
            AluOp::Sra => ">>s",
            AluOp::Slt => "<s",
            AluOp::Sltu => "<u",
            AluOp::Xor => "^",
            AluOp::Or => "|",
            AluOp::And => "&",
            AluOp::AddW => "+w",
            AluOp::SubW => "-w",
            AluOp::SllW => "<<w",
            AluOp::SrlW => ">>uw",
            AluOp::SraW => ">>sw",
            AluOp::Mul => "*",
            AluOp::Mulh => "*hss",
            AluOp::Mulhsu => "*hsu",
            AluOp::Mulhu => "*huu",
            AluOp::Div => "/s",
            AluOp::Divu => "/u",
            AluOp::Rem => "%s",
            AluOp::Remu => "%u",
            AluOp::MulW => "*w",
            AluOp::DivW => "/sw",
            AluOp::DivuW => "/uw",
            AluOp::RemW => "%sw",
            AluOp::RemuW => "%uw",
        }
    }

    pub fn apply(self, a: BitVec, b: BitVec) -> BitVec {
        let w = a.width();
        let shamt = |b: BitVec, bits: u32| BitVec::new(bits, b.value() & (bits as u64 - 1));
        let word = |f: fn(BitVec, BitVec) -> BitVec| f(a.extract(0, 32), b.extract(0, 32)).sign_extend(w);
        match self {
            AluOp::Add => a.add(b),
            AluOp::Sub => a.sub(b),
            AluOp::Sll => a.sll(shamt(b, w)),
            AluOp::Srl => a.srl(shamt(b, w)),
            AluOp::Sra => a.sra(shamt(b, w)),
            AluOp::Slt => a.slt(b).zero_extend(w),
            AluOp::Sltu => a.ult(b).zero_extend(w),
            AluOp::Xor => a.xor(b),
            AluOp::Or => a.or(b),
            AluOp::And => a.and(b),
            AluOp::AddW => word(|x, y| x.add(y)),
            AluOp::SubW => word(|x, y| x.sub(y)),
            AluOp::SllW => word(|x, y| x.sll(BitVec::new(32, y.value() & 31))),
            AluOp::SrlW => word(|x, y| x.srl(BitVec::new(32, y.value() & 31))),
            AluOp::SraW => word(|x, y| x.sra(BitVec::new(32, y.value() & 31))),
            AluOp::Mul => a.mul(b),
            AluOp::Mulh => a.mulh_ss(b),
            AluOp::Mulhsu => a.mulh_su(b),
            AluOp::Mulhu => a.mulh_uu(b),
            AluOp::Div => a.sdiv(b),
            AluOp::Divu => a.udiv(b),
            AluOp::Rem => a.srem(b),
            AluOp::Remu => a.urem(b),
            AluOp::MulW => word(|x, y| x.mul(y)),
            AluOp::DivW => word(|x, y| x.sdiv(y)),
            AluOp::DivuW => word(|x, y| x.udiv(y)),
            AluOp::RemW => word(|x, y| x.srem(y)),
            AluOp::RemuW => word(|x, y| x.urem(y)),
        }
    }
}

/// A value computed from the state before the instruction.
#[derive(Clone, PartialEq, Eq, Debug)]
pub enum Expr {
    Reg(Reg),
    Const(BitVec),
    Pc,
    /// The instruction's memory read response, extended to XLEN.
    Loaded { width: Width, unsigned: bool },
    Alu(AluOp, Box<Expr>, Box<Expr>),
}

impl Expr {
    fn alu(op: AluOp, a: Expr, b: Expr) -> Expr {
        Expr::Alu(op, Box::new(a), Box::new(b))
    }

    pub fn eval(&self, s: &MachineState, loaded: Option<BitVec>) -> BitVec {
        match self {
            Expr::Reg(r) => s.get_gp(*r),
            Expr::Const(c) => *c,
            Expr::Pc => s.xlen.word(s.pc),
            Expr::Loaded { width, unsigned } => {
                let d = loaded.expect("loaded value without a memory read").extract(0, width.bits());
                if *unsigned {
                    d.zero_extend(s.xlen.bits())
                } else {
                    d.sign_extend(s.xlen.bits())
                }
            }
            Expr::Alu(op, a, b) => op.apply(a.eval(s, loaded), b.eval(s, loaded)),
        }
    }
}

impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Expr::Reg(r) => f.write_str(r.abi_name()),
            Expr::Const(c) => write!(f, "{}", c.signed()),
            Expr::Pc => f.write_str("pc"),
            Expr::Loaded { .. } => f.write_str("response"),
            Expr::Alu(op, a, b) => write!(f, "({a} {} {b})", op.symbol()),
        }
    }
}

#[derive(Clone, PartialEq, Eq, Debug)]
pub enum PcEffect {
    /// pc += 4
    Next,
    /// Unconditional jump; traps if the target is misaligned.
    Jump(Expr),
    Branch { op: BranchOp, rs1: Reg, rs2: Reg, target: Expr },
}

/// The observable memory access of an instruction.
#[derive(Clone, PartialEq, Eq, Debug)]
pub enum MemEffect {
    Read { base: Reg, offset: BitVec, width: Width },
    Write { base: Reg, offset: BitVec, width: Width, data: Reg },
}

impl fmt::Display for MemEffect {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            MemEffect::Read { base, offset, width } => {
                write!(f, "VMemRead({}, {}, {width:?})", base.abi_name(), offset.signed())
            }
            MemEffect::Write { base, offset, width, data } => {
                write!(f, "VMemWrite({}, {}, {width:?}, {})", base.abi_name(), offset.signed(), data.abi_name())
            }
        }
    }
}

/// Net effect of one instruction: at most one register write, a pc update,
/// and at most one memory access. Loads, stores, and jumps are conditional:
/// they may trap depending on data.
#[derive(Clone, PartialEq, Eq, Debug)]
pub struct NetEffect {
    pub rd: Option<(Reg, Expr)>,
    pub pc: PcEffect,
    pub mem: Option<MemEffect>,
}

impl fmt::Display for NetEffect {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if let Some(m) = &self.mem {
            write!(f, "memory event {m}; ")?;
        }
        if let Some((rd, e)) = &self.rd {
            write!(f, "{} := {e}; ", rd.abi_name())?;
        }
        match &self.pc {
            PcEffect::Next => f.write_str("pc += 4")?,
            PcEffect::Jump(t) => write!(f, "pc := {t}")?,
            PcEffect::Branch { op, rs1, rs2, target } => {
                write!(f, "pc := {op:?}({}, {}) ? {target} : pc + 4", rs1.abi_name(), rs2.abi_name())?
            }
        }
        if self.mem.is_none() {
            f.write_str("; no memory event")?;
        }
        Ok(())
    }
}

impl NetEffect {
    fn write(rd: Reg, e: Expr) -> NetEffect {
        NetEffect { rd: (!rd.is_zero()).then_some((rd, e)), pc: PcEffect::Next, mem: None }
    }

    /// Advances `s` by the instruction this effect summarizes, including
    /// trap entry when a conditional part fails.
    pub fn apply(&self, s: &mut MachineState) -> StepOutcome {
        let pc = s.pc;
        let target = match &self.pc {
            PcEffect::Next => None,
            PcEffect::Jump(t) => Some(t.eval(s, None)),
            PcEffect::Branch { op, rs1, rs2, target } => {
                let (a, b) = (s.get_gp(*rs1), s.get_gp(*rs2));
                branch_taken(*op, a, b).then(|| target.eval(s, None))
            }
        };
        if let Some(t) = target {
            if t.value() & 3 != 0 {
                let trap = Trap::new(TrapCause::InstrMisaligned, t.value());
                s.enter_trap(trap, pc);
                return StepOutcome::Trapped(trap);
            }
        }
        let mut loaded = None;
        let mem_result = match &self.mem {
            None => Ok(()),
            Some(MemEffect::Read { base, offset, width }) => {
                let va = s.get_gp(*base).add(offset.sign_extend(s.xlen.bits())).value();
                s.load(va, *width, false).map(|v| loaded = Some(v))
            }
            Some(MemEffect::Write { base, offset, width, data }) => {
                let va = s.get_gp(*base).add(offset.sign_extend(s.xlen.bits())).value();
                let d = s.get_gp(*data).extract(0, width.bits()).value();
                s.store(va, *width, d)
            }
        };
        if let Err(trap) = mem_result {
            s.enter_trap(trap, pc);
            return StepOutcome::Trapped(trap);
        }
        if let Some((rd, e)) = &self.rd {
            let v = e.eval(s, loaded);
            s.set_gp(*rd, v.value());
        }
        s.pc = target.map_or(pc.wrapping_add(4), |t| t.value()) & s.xlen.mask();
        s.instret += 1;
        StepOutcome::Retired
    }
}

fn branch_taken(op: BranchOp, a: BitVec, b: BitVec) -> bool {
    match op {
        BranchOp::Beq => a == b,
        BranchOp::Bne => a != b,
        BranchOp::Blt => a.signed() < b.signed(),
        BranchOp::Bge => a.signed() >= b.signed(),
        BranchOp::Bltu => a.value() < b.value(),
        BranchOp::Bgeu => a.value() >= b.value(),
    }
}

/// The net effect of `i` on an XLEN hart, for the integer base and M
/// instructions (plus fences, which have none). Other instructions have no
/// entry.
pub fn step_lemma_table(i: Instr, xlen: Xlen) -> Option<NetEffect> {
    use Instr::*;
    let w = xlen.bits();
    let sx = |imm: BitVec| Expr::Const(imm.sign_extend(w));
    let reg = Expr::Reg;
    if xlen == Xlen::Rv32 && i.rv64_only() {
        return None;
    }
    Some(match i {
        Itype { imm, rs1, rd, op } => {
            let op = match op {
                ItypeOp::Addi => AluOp::Add,
                ItypeOp::Slti => AluOp::Slt,
                ItypeOp::Sltiu => AluOp::Sltu,
                ItypeOp::Xori => AluOp::Xor,
                ItypeOp::Ori => AluOp::Or,
                ItypeOp::Andi => AluOp::And,
            };
            NetEffect::write(rd, Expr::alu(op, reg(rs1), sx(imm)))
        }
        ShiftIop { shamt, rs1, rd, op } => {
            let op = match op {
                ShiftOp::Sll => AluOp::Sll,
                ShiftOp::Srl => AluOp::Srl,
                ShiftOp::Sra => AluOp::Sra,
            };
            NetEffect::write(rd, Expr::alu(op, reg(rs1), Expr::Const(shamt.zero_extend(w))))
        }
        ShiftIwop { shamt, rs1, rd, op } => {
            let op = match op {
                ShiftOp::Sll => AluOp::SllW,
                ShiftOp::Srl => AluOp::SrlW,
                ShiftOp::Sra => AluOp::SraW,
            };
            NetEffect::write(rd, Expr::alu(op, reg(rs1), Expr::Const(shamt.zero_extend(w))))
        }
        Addiw { imm, rs1, rd } => NetEffect::write(rd, Expr::alu(AluOp::AddW, reg(rs1), sx(imm))),
        Rtype { rs1, rs2, rd, op } => {
            let op = match op {
                RtypeOp::Add => AluOp::Add,
                RtypeOp::Sub => AluOp::Sub,
                RtypeOp::Sll => AluOp::Sll,
                RtypeOp::Slt => AluOp::Slt,
                RtypeOp::Sltu => AluOp::Sltu,
                RtypeOp::Xor => AluOp::Xor,
                RtypeOp::Srl => AluOp::Srl,
                RtypeOp::Sra => AluOp::Sra,
                RtypeOp::Or => AluOp::Or,
                RtypeOp::And => AluOp::And,
            };
            NetEffect::write(rd, Expr::alu(op, reg(rs1), reg(rs2)))
        }
        RtypeW { rs1, rs2, rd, op } => {
            let op = match op {
                RtypeWOp::Addw => AluOp::AddW,
                RtypeWOp::Subw => AluOp::SubW,
                RtypeWOp::Sllw => AluOp::SllW,
                RtypeWOp::Srlw => AluOp::SrlW,
                RtypeWOp::Sraw => AluOp::SraW,
            };
            NetEffect::write(rd, Expr::alu(op, reg(rs1), reg(rs2)))
        }
        Mtype { rs1, rs2, rd, op } => {
            let op = match op {
                MulOp::Mul => AluOp::Mul,
                MulOp::Mulh => AluOp::Mulh,
                MulOp::Mulhsu => AluOp::Mulhsu,
                MulOp::Mulhu => AluOp::Mulhu,
                MulOp::Div => AluOp::Div,
                MulOp::Divu => AluOp::Divu,
                MulOp::Rem => AluOp::Rem,
                MulOp::Remu => AluOp::Remu,
            };
            NetEffect::write(rd, Expr::alu(op, reg(rs1), reg(rs2)))
        }
        MtypeW { rs1, rs2, rd, op } => {
            let op = match op {
                MulWOp::Mulw => AluOp::MulW,
                MulWOp::Divw => AluOp::DivW,
                MulWOp::Divuw => AluOp::DivuW,
                MulWOp::Remw => AluOp::RemW,
                MulWOp::Remuw => AluOp::RemuW,
            };
            NetEffect::write(rd, Expr::alu(op, reg(rs1), reg(rs2)))
        }
        Utype { imm, rd, op } => {
            let v = Expr::Const(BitVec::concat(imm, BitVec::zero(12)).sign_extend(w));
            match op {
                UtypeOp::Lui => NetEffect::write(rd, v),
                UtypeOp::Auipc => NetEffect::write(rd, Expr::alu(AluOp::Add, Expr::Pc, v)),
            }
        }
        Jal { imm, rd } => NetEffect {
            rd: (!rd.is_zero()).then(|| (rd, Expr::alu(AluOp::Add, Expr::Pc, Expr::Const(BitVec::new(w, 4))))),
            pc: PcEffect::Jump(Expr::alu(AluOp::Add, Expr::Pc, sx(imm))),
            mem: None,
        },
        Jalr { imm, rs1, rd } => NetEffect {
            rd: (!rd.is_zero()).then(|| (rd, Expr::alu(AluOp::Add, Expr::Pc, Expr::Const(BitVec::new(w, 4))))),
            pc: PcEffect::Jump(Expr::alu(
                AluOp::And,
                Expr::alu(AluOp::Add, reg(rs1), sx(imm)),
                Expr::Const(BitVec::from_i64(w, -2)),
            )),
            mem: None,
        },
        Btype { imm, rs1, rs2, op } => NetEffect {
            rd: None,
            pc: PcEffect::Branch { op, rs1, rs2, target: Expr::alu(AluOp::Add, Expr::Pc, sx(imm)) },
            mem: None,
        },
        Load { imm, rs1, rd, is_unsigned, width } => NetEffect {
            rd: (!rd.is_zero()).then_some((rd, Expr::Loaded { width, unsigned: is_unsigned })),
            pc: PcEffect::Next,
            mem: Some(MemEffect::Read { base: rs1, offset: imm, width }),
        },
        Store { imm, rs1, rs2, width } => NetEffect {
            rd: None,
            pc: PcEffect::Next,
            mem: Some(MemEffect::Write { base: rs1, offset: imm, width, data: rs2 }),
        },
        Fence { .. } | FenceI => NetEffect { rd: None, pc: PcEffect::Next, mem: None },
        _ => return None,
    })
}
