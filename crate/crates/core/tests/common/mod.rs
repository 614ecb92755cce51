//! Random legal instructions, one family per `Instr` constructor.
#![allow(dead_code)]

pub mod fp;
pub mod instr;
pub mod pagewalk;
pub mod reference;
pub mod trees;

use rvfx_core::effects::{Reg, Width, Xlen};
use rvfx_core::isa::*;
use rvfx_core::BitVec;

pub const CONSTRUCTORS: &[&str] = &[
    "Itype", "ShiftIop", "Rtype", "Btype", "Utype", "Jal", "Jalr", "Load", "Store", "Fence", "FenceI", "Addiw",
    "ShiftIwop", "RtypeW", "Mtype", "MtypeW", "Atype", "Csr", "CsrI", "Fload", "Fstore", "Farith", "Fsqrt", "Ffma",
    "Fsgnj", "Fminmax", "Fcmp", "FcvtToInt", "FcvtFromInt", "FmvToInt", "FmvFromInt", "Fclass", "Ecall", "Ebreak",
    "Mret", "Sret", "Wfi", "SfenceVma",
];

const LOADS: [(Width, bool); 7] = [
    (Width::Byte, false),
    (Width::Half, false),
    (Width::Word, false),
    (Width::Byte, true),
    (Width::Half, true),
    (Width::Double, false),
    (Width::Word, true),
];
const STORES: [Width; 4] = [Width::Byte, Width::Half, Width::Word, Width::Double];
const AMOS: [AmoOp; 11] = [
    AmoOp::Lr,
    AmoOp::Sc,
    AmoOp::Swap,
    AmoOp::Add,
    AmoOp::Xor,
    AmoOp::And,
    AmoOp::Or,
    AmoOp::Min,
    AmoOp::Max,
    AmoOp::Minu,
    AmoOp::Maxu,
];
const FMTS: [IntFmt; 4] = [IntFmt::W, IntFmt::Wu, IntFmt::L, IntFmt::Lu];

/// Number of distinct operations (mnemonics) a constructor covers.
pub fn op_count(ctor: &str, xlen: Xlen) -> usize {
    let rv64 = xlen == Xlen::Rv64;
    match ctor {
        "Itype" => 6,
        "ShiftIop" => 3,
        "Rtype" => 10,
        "Btype" => 6,
        "Utype" => 2,
        "Load" => {
            if rv64 {
                7
            } else {
                5
            }
        }
        "Store" => {
            if rv64 {
                4
            } else {
                3
            }
        }
        "Addiw" => rv64 as usize,
        "ShiftIwop" => 3 * rv64 as usize,
        "RtypeW" => 5 * rv64 as usize,
        "MtypeW" => 5 * rv64 as usize,
        "Mtype" => 8,
        "Atype" => {
            if rv64 {
                22
            } else {
                11
            }
        }
        "Csr" | "CsrI" | "Fsgnj" | "Fcmp" => 3,
        "Farith" | "Ffma" => 4,
        "Fminmax" => 2,
        "FcvtToInt" | "FcvtFromInt" => {
            if rv64 {
                4
            } else {
                2
            }
        }
        _ => 1,
    }
}

fn reg(v: u64) -> Reg {
    Reg::from_bits(v as u32)
}

fn bv(width: u32, v: u64) -> BitVec {
    BitVec::new(width, v)
}

/// Builds the `op`-th operation of `ctor` with fields drawn from `raw`.
pub fn build(ctor: &str, op: usize, raw: &[u64; 8], xlen: Xlen) -> Instr {
    let (a, b, c, d) = (reg(raw[1]), reg(raw[2]), reg(raw[3]), reg(raw[4]));
    let imm12 = bv(12, raw[5]);
    let rm = bv(3, raw[6]);
    use Instr::*;
    match ctor {
        "Itype" => Itype {
            imm: imm12,
            rs1: a,
            rd: b,
            op: [ItypeOp::Addi, ItypeOp::Slti, ItypeOp::Sltiu, ItypeOp::Xori, ItypeOp::Ori, ItypeOp::Andi][op],
        },
        "ShiftIop" => ShiftIop {
            shamt: bv(6, raw[5] & if xlen == Xlen::Rv32 { 31 } else { 63 }),
            rs1: a,
            rd: b,
            op: [ShiftOp::Sll, ShiftOp::Srl, ShiftOp::Sra][op],
        },
        "Rtype" => Rtype {
            rs1: a,
            rs2: b,
            rd: c,
            op: [
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
            ][op],
        },
        "Btype" => Btype {
            imm: bv(13, raw[5] & !1),
            rs1: a,
            rs2: b,
            op: [BranchOp::Beq, BranchOp::Bne, BranchOp::Blt, BranchOp::Bge, BranchOp::Bltu, BranchOp::Bgeu][op],
        },
        "Utype" => Utype { imm: bv(20, raw[5]), rd: a, op: [UtypeOp::Lui, UtypeOp::Auipc][op] },
        "Jal" => Jal { imm: bv(21, raw[5] & !1), rd: a },
        "Jalr" => Jalr { imm: imm12, rs1: a, rd: b },
        "Load" => {
            let (width, is_unsigned) = LOADS[op];
            Load { imm: imm12, rs1: a, rd: b, is_unsigned, width }
        }
        "Store" => Store { imm: imm12, rs1: a, rs2: b, width: STORES[op] },
        "Fence" => Fence { pred: bv(4, raw[5]), succ: bv(4, raw[6]) },
        "FenceI" => FenceI,
        "Addiw" => Addiw { imm: imm12, rs1: a, rd: b },
        "ShiftIwop" => ShiftIwop { shamt: bv(5, raw[5]), rs1: a, rd: b, op: [ShiftOp::Sll, ShiftOp::Srl, ShiftOp::Sra][op] },
        "RtypeW" => RtypeW {
            rs1: a,
            rs2: b,
            rd: c,
            op: [RtypeWOp::Addw, RtypeWOp::Subw, RtypeWOp::Sllw, RtypeWOp::Srlw, RtypeWOp::Sraw][op],
        },
        "Mtype" => Mtype {
            rs1: a,
            rs2: b,
            rd: c,
            op: [
                MulOp::Mul,
                MulOp::Mulh,
                MulOp::Mulhsu,
                MulOp::Mulhu,
                MulOp::Div,
                MulOp::Divu,
                MulOp::Rem,
                MulOp::Remu,
            ][op],
        },
        "MtypeW" => MtypeW {
            rs1: a,
            rs2: b,
            rd: c,
            op: [MulWOp::Mulw, MulWOp::Divw, MulWOp::Divuw, MulWOp::Remw, MulWOp::Remuw][op],
        },
        "Atype" => {
            let amo = AMOS[op % 11];
            let width = if op < 11 { Width::Word } else { Width::Double };
            Atype {
                rs1: a,
                rs2: if amo == AmoOp::Lr { Reg::ZERO } else { b },
                rd: c,
                width,
                aq: raw[5] & 1 == 1,
                rl: raw[5] & 2 == 2,
                op: amo,
            }
        }
        "Csr" => Csr { csr: bv(12, raw[5]), rs1: a, rd: b, op: [CsrOp::Rw, CsrOp::Rs, CsrOp::Rc][op] },
        "CsrI" => CsrI { csr: bv(12, raw[5]), uimm: bv(5, raw[6]), rd: b, op: [CsrOp::Rw, CsrOp::Rs, CsrOp::Rc][op] },
        "Fload" => Fload { imm: imm12, rs1: a, fd: b },
        "Fstore" => Fstore { imm: imm12, rs1: a, fs2: b },
        "Farith" => Farith {
            fs1: a,
            fs2: b,
            fd: c,
            rm,
            op: [FArithOp::Add, FArithOp::Sub, FArithOp::Mul, FArithOp::Div][op],
        },
        "Fsqrt" => Fsqrt { fs1: a, fd: c, rm },
        "Ffma" => Ffma {
            fs1: a,
            fs2: b,
            fs3: d,
            fd: c,
            rm,
            op: [FmaOp::Madd, FmaOp::Msub, FmaOp::Nmadd, FmaOp::Nmsub][op],
        },
        "Fsgnj" => Fsgnj { fs1: a, fs2: b, fd: c, op: [SgnjOp::Sgnj, SgnjOp::Sgnjn, SgnjOp::Sgnjx][op] },
        "Fminmax" => Fminmax { fs1: a, fs2: b, fd: c, op: [MinMaxOp::Min, MinMaxOp::Max][op] },
        "Fcmp" => Fcmp { fs1: a, fs2: b, rd: c, op: [FCmpOp::Eq, FCmpOp::Lt, FCmpOp::Le][op] },
        "FcvtToInt" => FcvtToInt { fs1: a, rd: c, rm, fmt: FMTS[op] },
        "FcvtFromInt" => FcvtFromInt { rs1: a, fd: c, rm, fmt: FMTS[op] },
        "FmvToInt" => FmvToInt { fs1: a, rd: c },
        "FmvFromInt" => FmvFromInt { rs1: a, fd: c },
        "Fclass" => Fclass { fs1: a, rd: c },
        "Ecall" => Ecall,
        "Ebreak" => Ebreak,
        "Mret" => Mret,
        "Sret" => Sret,
        "Wfi" => Wfi,
        "SfenceVma" => SfenceVma { rs1: a, rs2: b },
        other => panic!("unknown constructor {other}"),
    }
}

/// The constructor name of `i`, matching [`CONSTRUCTORS`].
pub fn constructor_of(i: &Instr) -> &'static str {
    let dbg = format!("{i:?}");
    let name = dbg.split([' ', '{']).next().unwrap_or_default().to_string();
    CONSTRUCTORS.iter().copied().find(|c| *c == name).unwrap_or("Illegal")
}

pub fn random_instr<R: rand::Rng>(rng: &mut R, ctor: &str, op: usize, xlen: Xlen) -> Instr {
    let raw: [u64; 8] = rng.gen();
    build(ctor, op, &raw, xlen)
}

/// Every (constructor, operation) pair legal on `xlen`.
pub fn all_ops(xlen: Xlen) -> Vec<(&'static str, usize)> {
    CONSTRUCTORS
        .iter()
        .flat_map(|c| (0..op_count(c, xlen)).map(move |op| (*c, op)))
        .collect()
}
