//! Binary encoding of [`Instr`].

use super::*;
use crate::effects::Xlen;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum EncodeError {
    #[error("ILLEGAL has no encoding")]
    Illegal,
    #[error("field `{field}` has width {got}, expected {want}")]
    FieldWidth { field: &'static str, got: u32, want: u32 },
    #[error("field `{0}` out of range")]
    Range(&'static str),
}

fn bits(w: u32, lo: u32, len: u32) -> u32 {
    (w >> lo) & ((1 << len) - 1)
}

fn reg(w: u32, lo: u32) -> Reg {
    Reg::from_bits(bits(w, lo, 5))
}

fn i_imm(w: u32) -> BitVec {
    BitVec::new(12, (w >> 20) as u64)
}

fn s_imm(w: u32) -> BitVec {
    BitVec::new(12, ((bits(w, 25, 7) << 5) | bits(w, 7, 5)) as u64)
}

fn b_imm(w: u32) -> BitVec {
    let v = (bits(w, 31, 1) << 12)
        | (bits(w, 7, 1) << 11)
        | (bits(w, 25, 6) << 5)
        | (bits(w, 8, 4) << 1);
    BitVec::new(13, v as u64)
}

fn j_imm(w: u32) -> BitVec {
    let v = (bits(w, 31, 1) << 20)
        | (bits(w, 12, 8) << 12)
        | (bits(w, 20, 1) << 11)
        | (bits(w, 21, 10) << 1);
    BitVec::new(21, v as u64)
}

/// Decodes one 32-bit instruction word. Total: anything that is not a
/// supported encoding for `xlen` becomes [`Instr::Illegal`].
pub fn decode(w: u32, xlen: Xlen) -> Instr {
    let i = decode_any(w);
    if xlen == Xlen::Rv32 && i.rv64_only() {
        Instr::Illegal
    } else {
        i
    }
}

fn decode_any(w: u32) -> Instr {
    use Instr::*;
    let opcode = bits(w, 0, 7);
    let rd = reg(w, 7);
    let f3 = bits(w, 12, 3);
    let rs1 = reg(w, 15);
    let rs2 = reg(w, 20);
    let f7 = bits(w, 25, 7);
    let rm = BitVec::new(3, f3 as u64);
    match opcode {
        0x37 => Utype { imm: BitVec::new(20, (w >> 12) as u64), rd, op: UtypeOp::Lui },
        0x17 => Utype { imm: BitVec::new(20, (w >> 12) as u64), rd, op: UtypeOp::Auipc },
        0x6F => Jal { imm: j_imm(w), rd },
        0x67 if f3 == 0 => Jalr { imm: i_imm(w), rs1, rd },
        0x63 => {
            let op = match f3 {
                0 => BranchOp::Beq,
                1 => BranchOp::Bne,
                4 => BranchOp::Blt,
                5 => BranchOp::Bge,
                6 => BranchOp::Bltu,
                7 => BranchOp::Bgeu,
                _ => return Illegal,
            };
            Btype { imm: b_imm(w), rs1, rs2, op }
        }
        0x03 => {
            let (width, is_unsigned) = match f3 {
                0 => (Width::Byte, false),
                1 => (Width::Half, false),
                2 => (Width::Word, false),
                3 => (Width::Double, false),
                4 => (Width::Byte, true),
                5 => (Width::Half, true),
                6 => (Width::Word, true),
                _ => return Illegal,
            };
            Load { imm: i_imm(w), rs1, rd, is_unsigned, width }
        }
        0x23 => {
            let width = match f3 {
                0 => Width::Byte,
                1 => Width::Half,
                2 => Width::Word,
                3 => Width::Double,
                _ => return Illegal,
            };
            Store { imm: s_imm(w), rs1, rs2, width }
        }
        0x13 => {
            let op = match f3 {
                0 => ItypeOp::Addi,
                2 => ItypeOp::Slti,
                3 => ItypeOp::Sltiu,
                4 => ItypeOp::Xori,
                6 => ItypeOp::Ori,
                7 => ItypeOp::Andi,
                _ => {
                    let shamt = BitVec::new(6, bits(w, 20, 6) as u64);
                    let op = match (f3, bits(w, 26, 6)) {
                        (1, 0) => ShiftOp::Sll,
                        (5, 0) => ShiftOp::Srl,
                        (5, 0x10) => ShiftOp::Sra,
                        _ => return Illegal,
                    };
                    return ShiftIop { shamt, rs1, rd, op };
                }
            };
            Itype { imm: i_imm(w), rs1, rd, op }
        }
        0x1B => match (f3, f7) {
            (0, _) => Addiw { imm: i_imm(w), rs1, rd },
            (1, 0) | (5, 0) | (5, 0x20) => {
                let op = match (f3, f7) {
                    (1, _) => ShiftOp::Sll,
                    (_, 0) => ShiftOp::Srl,
                    _ => ShiftOp::Sra,
                };
                ShiftIwop { shamt: BitVec::new(5, bits(w, 20, 5) as u64), rs1, rd, op }
            }
            _ => Illegal,
        },
        0x33 => {
            let op = match (f7, f3) {
                (0, 0) => RtypeOp::Add,
                (0x20, 0) => RtypeOp::Sub,
                (0, 1) => RtypeOp::Sll,
                (0, 2) => RtypeOp::Slt,
                (0, 3) => RtypeOp::Sltu,
                (0, 4) => RtypeOp::Xor,
                (0, 5) => RtypeOp::Srl,
                (0x20, 5) => RtypeOp::Sra,
                (0, 6) => RtypeOp::Or,
                (0, 7) => RtypeOp::And,
                (1, _) => {
                    let op = [
                        MulOp::Mul,
                        MulOp::Mulh,
                        MulOp::Mulhsu,
                        MulOp::Mulhu,
                        MulOp::Div,
                        MulOp::Divu,
                        MulOp::Rem,
                        MulOp::Remu,
                    ][f3 as usize];
                    return Mtype { rs1, rs2, rd, op };
                }
                _ => return Illegal,
            };
            Rtype { rs1, rs2, rd, op }
        }
        0x3B => match (f7, f3) {
            (0, 0) => RtypeW { rs1, rs2, rd, op: RtypeWOp::Addw },
            (0x20, 0) => RtypeW { rs1, rs2, rd, op: RtypeWOp::Subw },
            (0, 1) => RtypeW { rs1, rs2, rd, op: RtypeWOp::Sllw },
            (0, 5) => RtypeW { rs1, rs2, rd, op: RtypeWOp::Srlw },
            (0x20, 5) => RtypeW { rs1, rs2, rd, op: RtypeWOp::Sraw },
            (1, 0) => MtypeW { rs1, rs2, rd, op: MulWOp::Mulw },
            (1, 4) => MtypeW { rs1, rs2, rd, op: MulWOp::Divw },
            (1, 5) => MtypeW { rs1, rs2, rd, op: MulWOp::Divuw },
            (1, 6) => MtypeW { rs1, rs2, rd, op: MulWOp::Remw },
            (1, 7) => MtypeW { rs1, rs2, rd, op: MulWOp::Remuw },
            _ => Illegal,
        },
        0x0F => match f3 {
            0 => Fence {
                pred: BitVec::new(4, bits(w, 24, 4) as u64),
                succ: BitVec::new(4, bits(w, 20, 4) as u64),
            },
            1 => FenceI,
            _ => Illegal,
        },
        0x73 => match f3 {
            0 => match w {
                0x0000_0073 => Ecall,
                0x0010_0073 => Ebreak,
                0x3020_0073 => Mret,
                0x1020_0073 => Sret,
                0x1050_0073 => Wfi,
                _ if f7 == 0x09 && rd.is_zero() => SfenceVma { rs1, rs2 },
                _ => Illegal,
            },
            4 => Illegal,
            _ => {
                let csr = BitVec::new(12, (w >> 20) as u64);
                let op = match f3 & 3 {
                    1 => CsrOp::Rw,
                    2 => CsrOp::Rs,
                    _ => CsrOp::Rc,
                };
                if f3 < 4 {
                    Csr { csr, rs1, rd, op }
                } else {
                    CsrI { csr, uimm: BitVec::new(5, bits(w, 15, 5) as u64), rd, op }
                }
            }
        },
        0x2F => {
            let width = match f3 {
                2 => Width::Word,
                3 => Width::Double,
                _ => return Illegal,
            };
            let op = match bits(w, 27, 5) {
                0x02 if rs2.is_zero() => AmoOp::Lr,
                0x03 => AmoOp::Sc,
                0x01 => AmoOp::Swap,
                0x00 => AmoOp::Add,
                0x04 => AmoOp::Xor,
                0x0C => AmoOp::And,
                0x08 => AmoOp::Or,
                0x10 => AmoOp::Min,
                0x14 => AmoOp::Max,
                0x18 => AmoOp::Minu,
                0x1C => AmoOp::Maxu,
                _ => return Illegal,
            };
            Atype { rs1, rs2, rd, width, aq: bits(w, 26, 1) == 1, rl: bits(w, 25, 1) == 1, op }
        }
        0x07 if f3 == 2 => Fload { imm: i_imm(w), rs1, fd: rd },
        0x27 if f3 == 2 => Fstore { imm: s_imm(w), rs1, fs2: rs2 },
        0x43 | 0x47 | 0x4B | 0x4F if bits(w, 25, 2) == 0 => {
            let op = match opcode {
                0x43 => FmaOp::Madd,
                0x47 => FmaOp::Msub,
                0x4B => FmaOp::Nmsub,
                _ => FmaOp::Nmadd,
            };
            Ffma { fs1: rs1, fs2: rs2, fs3: reg(w, 27), fd: rd, rm, op }
        }
        0x53 => decode_op_fp(w, f7, f3, rs1, rs2, rd, rm),
        _ => Illegal,
    }
}

fn decode_op_fp(w: u32, f7: u32, f3: u32, rs1: Reg, rs2: Reg, rd: Reg, rm: BitVec) -> Instr {
    use Instr::*;
    let _ = w;
    let fmt_of = |r: Reg| match r.index() {
        0 => Some(IntFmt::W),
        1 => Some(IntFmt::Wu),
        2 => Some(IntFmt::L),
        3 => Some(IntFmt::Lu),
        _ => None,
    };
    match f7 {
        0x00 => Farith { fs1: rs1, fs2: rs2, fd: rd, rm, op: FArithOp::Add },
        0x04 => Farith { fs1: rs1, fs2: rs2, fd: rd, rm, op: FArithOp::Sub },
        0x08 => Farith { fs1: rs1, fs2: rs2, fd: rd, rm, op: FArithOp::Mul },
        0x0C => Farith { fs1: rs1, fs2: rs2, fd: rd, rm, op: FArithOp::Div },
        0x2C if rs2.is_zero() => Fsqrt { fs1: rs1, fd: rd, rm },
        0x10 => {
            let op = match f3 {
                0 => SgnjOp::Sgnj,
                1 => SgnjOp::Sgnjn,
                2 => SgnjOp::Sgnjx,
                _ => return Illegal,
            };
            Fsgnj { fs1: rs1, fs2: rs2, fd: rd, op }
        }
        0x14 => match f3 {
            0 => Fminmax { fs1: rs1, fs2: rs2, fd: rd, op: MinMaxOp::Min },
            1 => Fminmax { fs1: rs1, fs2: rs2, fd: rd, op: MinMaxOp::Max },
            _ => Illegal,
        },
        0x50 => match f3 {
            2 => Fcmp { fs1: rs1, fs2: rs2, rd, op: FCmpOp::Eq },
            1 => Fcmp { fs1: rs1, fs2: rs2, rd, op: FCmpOp::Lt },
            0 => Fcmp { fs1: rs1, fs2: rs2, rd, op: FCmpOp::Le },
            _ => Illegal,
        },
        0x60 => match fmt_of(rs2) {
            Some(fmt) => FcvtToInt { fs1: rs1, rd, rm, fmt },
            None => Illegal,
        },
        0x68 => match fmt_of(rs2) {
            Some(fmt) => FcvtFromInt { rs1, fd: rd, rm, fmt },
            None => Illegal,
        },
        0x70 if rs2.is_zero() && f3 == 0 => FmvToInt { fs1: rs1, rd },
        0x70 if rs2.is_zero() && f3 == 1 => Fclass { fs1: rs1, rd },
        0x78 if rs2.is_zero() && f3 == 0 => FmvFromInt { rs1, fd: rd },
        _ => Illegal,
    }
}

fn field(name: &'static str, v: BitVec, want: u32) -> Result<u32, EncodeError> {
    if v.width() != want {
        return Err(EncodeError::FieldWidth { field: name, got: v.width(), want });
    }
    Ok(v.value() as u32)
}

fn r(x: Reg) -> u32 {
    x.index() as u32
}

fn r_type(f7: u32, rs2: Reg, rs1: Reg, f3: u32, rd: Reg, opcode: u32) -> u32 {
    (f7 << 25) | (r(rs2) << 20) | (r(rs1) << 15) | (f3 << 12) | (r(rd) << 7) | opcode
}

fn i_type(imm: u32, rs1: Reg, f3: u32, rd: Reg, opcode: u32) -> u32 {
    (imm << 20) | (r(rs1) << 15) | (f3 << 12) | (r(rd) << 7) | opcode
}

fn s_type(imm: u32, rs2: Reg, rs1: Reg, f3: u32, opcode: u32) -> u32 {
    ((imm >> 5) << 25) | (r(rs2) << 20) | (r(rs1) << 15) | (f3 << 12) | ((imm & 0x1F) << 7) | opcode
}

fn width_f3(w: Width) -> u32 {
    match w {
        Width::Byte => 0,
        Width::Half => 1,
        Width::Word => 2,
        Width::Double => 3,
    }
}

fn fmt_rs2(fmt: IntFmt) -> Reg {
    Reg::from_bits(match fmt {
        IntFmt::W => 0,
        IntFmt::Wu => 1,
        IntFmt::L => 2,
        IntFmt::Lu => 3,
    })
}

/// The standard encoding of `i`. Inverse of [`decode`] on every legal
/// instruction.
pub fn encode(i: &Instr) -> Result<u32, EncodeError> {
    use Instr::*;
    let z = Reg::ZERO;
    Ok(match *i {
        Itype { imm, rs1, rd, op } => {
            let f3 = match op {
                ItypeOp::Addi => 0,
                ItypeOp::Slti => 2,
                ItypeOp::Sltiu => 3,
                ItypeOp::Xori => 4,
                ItypeOp::Ori => 6,
                ItypeOp::Andi => 7,
            };
            i_type(field("imm", imm, 12)?, rs1, f3, rd, 0x13)
        }
        ShiftIop { shamt, rs1, rd, op } => {
            let sh = field("shamt", shamt, 6)?;
            let (f3, hi) = match op {
                ShiftOp::Sll => (1, 0),
                ShiftOp::Srl => (5, 0),
                ShiftOp::Sra => (5, 0x400),
            };
            i_type(hi | sh, rs1, f3, rd, 0x13)
        }
        Rtype { rs1, rs2, rd, op } => {
            let (f7, f3) = match op {
                RtypeOp::Add => (0, 0),
                RtypeOp::Sub => (0x20, 0),
                RtypeOp::Sll => (0, 1),
                RtypeOp::Slt => (0, 2),
                RtypeOp::Sltu => (0, 3),
                RtypeOp::Xor => (0, 4),
                RtypeOp::Srl => (0, 5),
                RtypeOp::Sra => (0x20, 5),
                RtypeOp::Or => (0, 6),
                RtypeOp::And => (0, 7),
            };
            r_type(f7, rs2, rs1, f3, rd, 0x33)
        }
        Btype { imm, rs1, rs2, op } => {
            let v = field("imm", imm, 13)?;
            if v & 1 != 0 {
                return Err(EncodeError::Range("imm"));
            }
            let f3 = match op {
                BranchOp::Beq => 0,
                BranchOp::Bne => 1,
                BranchOp::Blt => 4,
                BranchOp::Bge => 5,
                BranchOp::Bltu => 6,
                BranchOp::Bgeu => 7,
            };
            ((v >> 12) << 31)
                | (((v >> 5) & 0x3F) << 25)
                | (r(rs2) << 20)
                | (r(rs1) << 15)
                | (f3 << 12)
                | (((v >> 1) & 0xF) << 8)
                | (((v >> 11) & 1) << 7)
                | 0x63
        }
        Utype { imm, rd, op } => {
            let opcode = match op {
                UtypeOp::Lui => 0x37,
                UtypeOp::Auipc => 0x17,
            };
            (field("imm", imm, 20)? << 12) | (r(rd) << 7) | opcode
        }
        Jal { imm, rd } => {
            let v = field("imm", imm, 21)?;
            if v & 1 != 0 {
                return Err(EncodeError::Range("imm"));
            }
            ((v >> 20) << 31)
                | (((v >> 1) & 0x3FF) << 21)
                | (((v >> 11) & 1) << 20)
                | (((v >> 12) & 0xFF) << 12)
                | (r(rd) << 7)
                | 0x6F
        }
        Jalr { imm, rs1, rd } => i_type(field("imm", imm, 12)?, rs1, 0, rd, 0x67),
        Load { imm, rs1, rd, is_unsigned, width } => {
            if is_unsigned && width == Width::Double {
                return Err(EncodeError::Range("width"));
            }
            let f3 = width_f3(width) | if is_unsigned { 4 } else { 0 };
            i_type(field("imm", imm, 12)?, rs1, f3, rd, 0x03)
        }
        Store { imm, rs1, rs2, width } => s_type(field("imm", imm, 12)?, rs2, rs1, width_f3(width), 0x23),
        Fence { pred, succ } => {
            let v = (field("pred", pred, 4)? << 4) | field("succ", succ, 4)?;
            i_type(v, z, 0, z, 0x0F)
        }
        FenceI => i_type(0, z, 1, z, 0x0F),
        Addiw { imm, rs1, rd } => i_type(field("imm", imm, 12)?, rs1, 0, rd, 0x1B),
        ShiftIwop { shamt, rs1, rd, op } => {
            let sh = field("shamt", shamt, 5)?;
            let (f3, hi) = match op {
                ShiftOp::Sll => (1, 0),
                ShiftOp::Srl => (5, 0),
                ShiftOp::Sra => (5, 0x400),
            };
            i_type(hi | sh, rs1, f3, rd, 0x1B)
        }
        RtypeW { rs1, rs2, rd, op } => {
            let (f7, f3) = match op {
                RtypeWOp::Addw => (0, 0),
                RtypeWOp::Subw => (0x20, 0),
                RtypeWOp::Sllw => (0, 1),
                RtypeWOp::Srlw => (0, 5),
                RtypeWOp::Sraw => (0x20, 5),
            };
            r_type(f7, rs2, rs1, f3, rd, 0x3B)
        }
        Mtype { rs1, rs2, rd, op } => r_type(1, rs2, rs1, op as u32, rd, 0x33),
        MtypeW { rs1, rs2, rd, op } => {
            let f3 = match op {
                MulWOp::Mulw => 0,
                MulWOp::Divw => 4,
                MulWOp::Divuw => 5,
                MulWOp::Remw => 6,
                MulWOp::Remuw => 7,
            };
            r_type(1, rs2, rs1, f3, rd, 0x3B)
        }
        Atype { rs1, rs2, rd, width, aq, rl, op } => {
            let f3 = match width {
                Width::Word => 2,
                Width::Double => 3,
                _ => return Err(EncodeError::Range("width")),
            };
            let f5 = match op {
                AmoOp::Lr => 0x02,
                AmoOp::Sc => 0x03,
                AmoOp::Swap => 0x01,
                AmoOp::Add => 0x00,
                AmoOp::Xor => 0x04,
                AmoOp::And => 0x0C,
                AmoOp::Or => 0x08,
                AmoOp::Min => 0x10,
                AmoOp::Max => 0x14,
                AmoOp::Minu => 0x18,
                AmoOp::Maxu => 0x1C,
            };
            if op == AmoOp::Lr && !rs2.is_zero() {
                return Err(EncodeError::Range("rs2"));
            }
            let f7 = (f5 << 2) | ((aq as u32) << 1) | rl as u32;
            r_type(f7, rs2, rs1, f3, rd, 0x2F)
        }
        Csr { csr, rs1, rd, op } => i_type(field("csr", csr, 12)?, rs1, op as u32 + 1, rd, 0x73),
        CsrI { csr, uimm, rd, op } => {
            let u = Reg::from_bits(field("uimm", uimm, 5)?);
            i_type(field("csr", csr, 12)?, u, op as u32 + 5, rd, 0x73)
        }
        Fload { imm, rs1, fd } => i_type(field("imm", imm, 12)?, rs1, 2, fd, 0x07),
        Fstore { imm, rs1, fs2 } => s_type(field("imm", imm, 12)?, fs2, rs1, 2, 0x27),
        Farith { fs1, fs2, fd, rm, op } => {
            let f7 = match op {
                FArithOp::Add => 0x00,
                FArithOp::Sub => 0x04,
                FArithOp::Mul => 0x08,
                FArithOp::Div => 0x0C,
            };
            r_type(f7, fs2, fs1, field("rm", rm, 3)?, fd, 0x53)
        }
        Fsqrt { fs1, fd, rm } => r_type(0x2C, z, fs1, field("rm", rm, 3)?, fd, 0x53),
        Ffma { fs1, fs2, fs3, fd, rm, op } => {
            let opcode = match op {
                FmaOp::Madd => 0x43,
                FmaOp::Msub => 0x47,
                FmaOp::Nmsub => 0x4B,
                FmaOp::Nmadd => 0x4F,
            };
            r_type(r(fs3) << 2, fs2, fs1, field("rm", rm, 3)?, fd, opcode)
        }
        Fsgnj { fs1, fs2, fd, op } => r_type(0x10, fs2, fs1, op as u32, fd, 0x53),
        Fminmax { fs1, fs2, fd, op } => r_type(0x14, fs2, fs1, op as u32, fd, 0x53),
        Fcmp { fs1, fs2, rd, op } => {
            let f3 = match op {
                FCmpOp::Eq => 2,
                FCmpOp::Lt => 1,
                FCmpOp::Le => 0,
            };
            r_type(0x50, fs2, fs1, f3, rd, 0x53)
        }
        FcvtToInt { fs1, rd, rm, fmt } => r_type(0x60, fmt_rs2(fmt), fs1, field("rm", rm, 3)?, rd, 0x53),
        FcvtFromInt { rs1, fd, rm, fmt } => r_type(0x68, fmt_rs2(fmt), rs1, field("rm", rm, 3)?, fd, 0x53),
        FmvToInt { fs1, rd } => r_type(0x70, z, fs1, 0, rd, 0x53),
        Fclass { fs1, rd } => r_type(0x70, z, fs1, 1, rd, 0x53),
        FmvFromInt { rs1, fd } => r_type(0x78, z, rs1, 0, fd, 0x53),
        Ecall => 0x0000_0073,
        Ebreak => 0x0010_0073,
        Mret => 0x3020_0073,
        Sret => 0x1020_0073,
        Wfi => 0x1050_0073,
        SfenceVma { rs1, rs2 } => r_type(0x09, rs2, rs1, 0, z, 0x73),
        Illegal => return Err(EncodeError::Illegal),
    })
}
