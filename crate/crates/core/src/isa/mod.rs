//! Instruction representation, binary decode/encode, and per-instruction
//! semantics for RV32/RV64 I, M, A, F and Zicsr.

mod asm;
pub mod csr;
mod decode;
mod exec;

pub use asm::{assemble, assemble_with, disassemble, AsmError};
pub use decode::{decode, encode, EncodeError};
pub use exec::exec;

use serde::{Deserialize, Serialize};

use crate::bitvec::BitVec;
use crate::effects::{Reg, Width};

#[derive(Clone, Copy, PartialEq, Eq, Hash, Debug, Serialize, Deserialize)]
pub enum ItypeOp {
    Addi,
    Slti,
    Sltiu,
    Xori,
    Ori,
    Andi,
}

#[derive(Clone, Copy, PartialEq, Eq, Hash, Debug, Serialize, Deserialize)]
pub enum ShiftOp {
    Sll,
    Srl,
    Sra,
}

#[derive(Clone, Copy, PartialEq, Eq, Hash, Debug, Serialize, Deserialize)]
pub enum RtypeOp {
    Add,
    Sub,
    Sll,
    Slt,
    Sltu,
    Xor,
    Srl,
    Sra,
    Or,
    And,
}

#[derive(Clone, Copy, PartialEq, Eq, Hash, Debug, Serialize, Deserialize)]
pub enum RtypeWOp {
    Addw,
    Subw,
    Sllw,
    Srlw,
    Sraw,
}

#[derive(Clone, Copy, PartialEq, Eq, Hash, Debug, Serialize, Deserialize)]
pub enum BranchOp {
    Beq,
    Bne,
    Blt,
    Bge,
    Bltu,
    Bgeu,
}

#[derive(Clone, Copy, PartialEq, Eq, Hash, Debug, Serialize, Deserialize)]
pub enum UtypeOp {
    Lui,
    Auipc,
}

#[derive(Clone, Copy, PartialEq, Eq, Hash, Debug, Serialize, Deserialize)]
pub enum MulOp {
    Mul,
    Mulh,
    Mulhsu,
    Mulhu,
    Div,
    Divu,
    Rem,
    Remu,
}

#[derive(Clone, Copy, PartialEq, Eq, Hash, Debug, Serialize, Deserialize)]
pub enum MulWOp {
    Mulw,
    Divw,
    Divuw,
    Remw,
    Remuw,
}

#[derive(Clone, Copy, PartialEq, Eq, Hash, Debug, Serialize, Deserialize)]
pub enum AmoOp {
    Lr,
    Sc,
    Swap,
    Add,
    Xor,
    And,
    Or,
    Min,
    Max,
    Minu,
    Maxu,
}

#[derive(Clone, Copy, PartialEq, Eq, Hash, Debug, Serialize, Deserialize)]
pub enum CsrOp {
    Rw,
    Rs,
    Rc,
}

#[derive(Clone, Copy, PartialEq, Eq, Hash, Debug, Serialize, Deserialize)]
pub enum FArithOp {
    Add,
    Sub,
    Mul,
    Div,
}

pub use crate::softfloat::{FmaOp, SgnjOp};

#[derive(Clone, Copy, PartialEq, Eq, Hash, Debug, Serialize, Deserialize)]
pub enum MinMaxOp {
    Min,
    Max,
}

#[derive(Clone, Copy, PartialEq, Eq, Hash, Debug, Serialize, Deserialize)]
pub enum FCmpOp {
    Eq,
    Lt,
    Le,
}

/// Integer side of an FCVT: W, WU, L, LU.
#[derive(Clone, Copy, PartialEq, Eq, Hash, Debug, Serialize, Deserialize)]
pub enum IntFmt {
    W,
    Wu,
    L,
    Lu,
}

/// A decoded instruction. Immediates are kept at their encoded width
/// (12, 13, 20, 21 bits) and sign-extended by the semantics.
#[derive(Clone, Copy, PartialEq, Eq, Hash, Debug, Serialize, Deserialize)]
pub enum Instr {
    Itype { imm: BitVec, rs1: Reg, rd: Reg, op: ItypeOp },
    /// SLLI/SRLI/SRAI; `shamt` is 6 bits (5 on RV32).
    ShiftIop { shamt: BitVec, rs1: Reg, rd: Reg, op: ShiftOp },
    Rtype { rs1: Reg, rs2: Reg, rd: Reg, op: RtypeOp },
    Btype { imm: BitVec, rs1: Reg, rs2: Reg, op: BranchOp },
    Utype { imm: BitVec, rd: Reg, op: UtypeOp },
    Jal { imm: BitVec, rd: Reg },
    Jalr { imm: BitVec, rs1: Reg, rd: Reg },
    Load { imm: BitVec, rs1: Reg, rd: Reg, is_unsigned: bool, width: Width },
    Store { imm: BitVec, rs1: Reg, rs2: Reg, width: Width },
    Fence { pred: BitVec, succ: BitVec },
    FenceI,
    Addiw { imm: BitVec, rs1: Reg, rd: Reg },
    /// SLLIW/SRLIW/SRAIW; 5-bit `shamt`.
    ShiftIwop { shamt: BitVec, rs1: Reg, rd: Reg, op: ShiftOp },
    RtypeW { rs1: Reg, rs2: Reg, rd: Reg, op: RtypeWOp },
    Mtype { rs1: Reg, rs2: Reg, rd: Reg, op: MulOp },
    MtypeW { rs1: Reg, rs2: Reg, rd: Reg, op: MulWOp },
    Atype { rs1: Reg, rs2: Reg, rd: Reg, width: Width, aq: bool, rl: bool, op: AmoOp },
    Csr { csr: BitVec, rs1: Reg, rd: Reg, op: CsrOp },
    CsrI { csr: BitVec, uimm: BitVec, rd: Reg, op: CsrOp },
    Fload { imm: BitVec, rs1: Reg, fd: Reg },
    Fstore { imm: BitVec, rs1: Reg, fs2: Reg },
    Farith { fs1: Reg, fs2: Reg, fd: Reg, rm: BitVec, op: FArithOp },
    Fsqrt { fs1: Reg, fd: Reg, rm: BitVec },
    Ffma { fs1: Reg, fs2: Reg, fs3: Reg, fd: Reg, rm: BitVec, op: FmaOp },
    Fsgnj { fs1: Reg, fs2: Reg, fd: Reg, op: SgnjOp },
    Fminmax { fs1: Reg, fs2: Reg, fd: Reg, op: MinMaxOp },
    Fcmp { fs1: Reg, fs2: Reg, rd: Reg, op: FCmpOp },
    /// FCVT.{W,WU,L,LU}.S
    FcvtToInt { fs1: Reg, rd: Reg, rm: BitVec, fmt: IntFmt },
    /// FCVT.S.{W,WU,L,LU}
    FcvtFromInt { rs1: Reg, fd: Reg, rm: BitVec, fmt: IntFmt },
    /// FMV.X.W
    FmvToInt { fs1: Reg, rd: Reg },
    /// FMV.W.X
    FmvFromInt { rs1: Reg, fd: Reg },
    Fclass { fs1: Reg, rd: Reg },
    Ecall,
    Ebreak,
    Mret,
    Sret,
    Wfi,
    SfenceVma { rs1: Reg, rs2: Reg },
    Illegal,
}

impl Instr {
    /// Destination integer register, if the instruction writes one.
    pub fn int_rd(&self) -> Option<Reg> {
        use Instr::*;
        match *self {
            Itype { rd, .. }
            | ShiftIop { rd, .. }
            | Rtype { rd, .. }
            | Utype { rd, .. }
            | Jal { rd, .. }
            | Jalr { rd, .. }
            | Load { rd, .. }
            | Addiw { rd, .. }
            | ShiftIwop { rd, .. }
            | RtypeW { rd, .. }
            | Mtype { rd, .. }
            | MtypeW { rd, .. }
            | Atype { rd, .. }
            | Csr { rd, .. }
            | CsrI { rd, .. }
            | Fcmp { rd, .. }
            | FcvtToInt { rd, .. }
            | FmvToInt { rd, .. }
            | Fclass { rd, .. } => Some(rd),
            _ => None,
        }
    }

    /// True for instructions that only exist on RV64.
    pub fn rv64_only(&self) -> bool {
        use Instr::*;
        match *self {
            Load { width, is_unsigned, .. } => {
                width == Width::Double || (width == Width::Word && is_unsigned)
            }
            Store { width, .. } | Atype { width, .. } => width == Width::Double,
            Addiw { .. } | ShiftIwop { .. } | RtypeW { .. } | MtypeW { .. } => true,
            ShiftIop { shamt, .. } => shamt.bit(5),
            FcvtToInt { fmt, .. } | FcvtFromInt { fmt, .. } => matches!(fmt, IntFmt::L | IntFmt::Lu),
            _ => false,
        }
    }
}
