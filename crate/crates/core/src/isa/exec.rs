//! Event-emitting semantics of each instruction.
//!
//! Register reads answer with XLEN-wide values (FP registers with 32-bit
//! values). A `VMemRead` answers with the accessed bytes zero-extended to
//! XLEN; the semantics keeps the low `width` bits and extends them itself.

use super::*;
use crate::effects::{
    read_csr, read_freg, read_pc, read_reg, vmem_read, vmem_write, vmem_write_conditional,
    write_csr, write_freg, write_pc, write_reg, ExecResult, Rv, Trap, TrapCause, Xlen,
};
use crate::softfloat::{self as sf, Fflags, RmField, RoundingMode, F32};

type Exec = Rv<ExecResult>;

fn ret(r: ExecResult) -> Exec {
    Rv::ret(r)
}

fn success() -> Exec {
    ret(ExecResult::Success)
}

fn fail(t: Trap) -> Exec {
    ret(ExecResult::Fail(t))
}

fn sext(v: BitVec, xlen: Xlen) -> BitVec {
    v.sign_extend(xlen.bits())
}

/// Sign-extends a 32-bit result to XLEN.
fn word_result(v: BitVec, xlen: Xlen) -> BitVec {
    v.extract(0, 32).sign_extend(xlen.bits())
}

fn write_then(rd: Reg, v: BitVec) -> Exec {
    write_reg(rd, v).then(success())
}

fn shamt_vec(shamt: BitVec, xlen: Xlen) -> BitVec {
    BitVec::new(xlen.bits(), shamt.value())
}

/// The semantics of `i` on an XLEN-wide hart.
pub fn exec(i: Instr, xlen: Xlen) -> Exec {
    use Instr::*;
    let w = xlen.bits();
    match i {
        Itype { imm, rs1, rd, op } => read_reg(rs1).bind(move |a| {
            let b = sext(imm, xlen);
            let v = match op {
                ItypeOp::Addi => a.add(b),
                ItypeOp::Slti => a.slt(b).zero_extend(w),
                ItypeOp::Sltiu => a.ult(b).zero_extend(w),
                ItypeOp::Xori => a.xor(b),
                ItypeOp::Ori => a.or(b),
                ItypeOp::Andi => a.and(b),
            };
            write_then(rd, v)
        }),
        ShiftIop { shamt, rs1, rd, op } => {
            if xlen == Xlen::Rv32 && shamt.bit(5) {
                return fail(Trap::illegal());
            }
            read_reg(rs1).bind(move |a| {
                let s = shamt_vec(shamt, xlen);
                let v = match op {
                    ShiftOp::Sll => a.sll(s),
                    ShiftOp::Srl => a.srl(s),
                    ShiftOp::Sra => a.sra(s),
                };
                write_then(rd, v)
            })
        }
        Rtype { rs1, rs2, rd, op } => exec_rtype(rs1, rs2, rd, op),
        Btype { imm, rs1, rs2, op } => read_reg(rs1).bind(move |a| {
            read_reg(rs2).bind(move |b| {
                let taken = match op {
                    BranchOp::Beq => a == b,
                    BranchOp::Bne => a != b,
                    BranchOp::Blt => a.signed() < b.signed(),
                    BranchOp::Bge => a.signed() >= b.signed(),
                    BranchOp::Bltu => a.value() < b.value(),
                    BranchOp::Bgeu => a.value() >= b.value(),
                };
                if !taken {
                    return success();
                }
                read_pc().bind(move |pc| {
                    let target = pc.add(sext(imm, xlen));
                    jump(target)
                })
            })
        }),
        Utype { imm, rd, op } => {
            let v = BitVec::concat(imm, BitVec::zero(12)).sign_extend(w);
            match op {
                UtypeOp::Lui => write_then(rd, v),
                UtypeOp::Auipc => read_pc().bind(move |pc| write_then(rd, pc.add(v))),
            }
        }
        Jal { imm, rd } => read_pc().bind(move |pc| {
            let target = pc.add(sext(imm, xlen));
            link_and_jump(rd, pc, target)
        }),
        Jalr { imm, rs1, rd } => read_reg(rs1).bind(move |a| {
            read_pc().bind(move |pc| {
                let target = a.add(sext(imm, xlen)).and(BitVec::ones(w).sub(BitVec::new(w, 1)));
                link_and_jump(rd, pc, target)
            })
        }),
        Load { imm, rs1, rd, is_unsigned, width } => exec_load(imm, rs1, rd, is_unsigned, width, xlen),
        Store { imm, rs1, rs2, width } => read_reg(rs1).bind(move |base| {
            read_reg(rs2).bind(move |v| {
                let data = v.extract(0, width.bits());
                vmem_write(base, sext(imm, xlen), width, data).map(retire_unit)
            })
        }),
        Fence { .. } | FenceI | SfenceVma { .. } => success(),
        Addiw { imm, rs1, rd } => read_reg(rs1).bind(move |a| {
            let v = a.add(sext(imm, xlen));
            write_then(rd, word_result(v, xlen))
        }),
        ShiftIwop { shamt, rs1, rd, op } => read_reg(rs1).bind(move |a| {
            let a = a.extract(0, 32);
            let s = BitVec::new(32, shamt.value());
            let v = match op {
                ShiftOp::Sll => a.sll(s),
                ShiftOp::Srl => a.srl(s),
                ShiftOp::Sra => a.sra(s),
            };
            write_then(rd, word_result(v, xlen))
        }),
        RtypeW { rs1, rs2, rd, op } => read_reg(rs1).bind(move |a| {
            read_reg(rs2).bind(move |b| {
                let (a, b) = (a.extract(0, 32), b.extract(0, 32));
                let sh = b.extract(0, 5).zero_extend(32);
                let v = match op {
                    RtypeWOp::Addw => a.add(b),
                    RtypeWOp::Subw => a.sub(b),
                    RtypeWOp::Sllw => a.sll(sh),
                    RtypeWOp::Srlw => a.srl(sh),
                    RtypeWOp::Sraw => a.sra(sh),
                };
                write_then(rd, word_result(v, xlen))
            })
        }),
        Mtype { rs1, rs2, rd, op } => read_reg(rs1).bind(move |a| {
            read_reg(rs2).bind(move |b| {
                let v = match op {
                    MulOp::Mul => a.mul(b),
                    MulOp::Mulh => a.mulh_ss(b),
                    MulOp::Mulhsu => a.mulh_su(b),
                    MulOp::Mulhu => a.mulh_uu(b),
                    MulOp::Div => a.sdiv(b),
                    MulOp::Divu => a.udiv(b),
                    MulOp::Rem => a.srem(b),
                    MulOp::Remu => a.urem(b),
                };
                write_then(rd, v)
            })
        }),
        MtypeW { rs1, rs2, rd, op } => read_reg(rs1).bind(move |a| {
            read_reg(rs2).bind(move |b| {
                let (a, b) = (a.extract(0, 32), b.extract(0, 32));
                let v = match op {
                    MulWOp::Mulw => a.mul(b),
                    MulWOp::Divw => a.sdiv(b),
                    MulWOp::Divuw => a.udiv(b),
                    MulWOp::Remw => a.srem(b),
                    MulWOp::Remuw => a.urem(b),
                };
                write_then(rd, word_result(v, xlen))
            })
        }),
        Atype { rs1, rs2, rd, width, op, .. } => exec_atype(rs1, rs2, rd, width, op, xlen),
        Csr { csr, rs1, rd, op } => {
            let addr = csr.value() as u16;
            // CSRRS/CSRRC with rs1 = x0 neither read x0 nor write the CSR
            if op != CsrOp::Rw && rs1.is_zero() {
                return exec_csr(addr, rd, op, None, xlen);
            }
            read_reg(rs1).bind(move |v| exec_csr(addr, rd, op, Some(v), xlen))
        }
        CsrI { csr, uimm, rd, op } => {
            let addr = csr.value() as u16;
            let src = if op != CsrOp::Rw && uimm.is_zero() {
                None
            } else {
                Some(uimm.zero_extend(w))
            };
            exec_csr(addr, rd, op, src, xlen)
        }
        Fload { imm, rs1, fd } => read_reg(rs1).bind(move |base| {
            vmem_read(base, sext(imm, xlen), Width::Word, false).bind(move |r| match r {
                Ok(data) => write_freg(fd, data.extract(0, 32)).then(success()),
                Err(e) => fail(e),
            })
        }),
        Fstore { imm, rs1, fs2 } => read_reg(rs1).bind(move |base| {
            read_freg(fs2).bind(move |v| vmem_write(base, sext(imm, xlen), Width::Word, v).map(retire_unit))
        }),
        Farith { fs1, fs2, fd, rm, op } => with_rm(rm, move |m| {
            read_freg(fs1).bind(move |a| {
                read_freg(fs2).bind(move |b| {
                    let f = match op {
                        FArithOp::Add => sf::f32_add,
                        FArithOp::Sub => sf::f32_sub,
                        FArithOp::Mul => sf::f32_mul,
                        FArithOp::Div => sf::f32_div,
                    };
                    let (r, flags) = f(f32_of(a), f32_of(b), m);
                    write_fp_result(fd, r, flags)
                })
            })
        }),
        Fsqrt { fs1, fd, rm } => with_rm(rm, move |m| {
            read_freg(fs1).bind(move |a| {
                let (r, flags) = sf::f32_sqrt(f32_of(a), m);
                write_fp_result(fd, r, flags)
            })
        }),
        Ffma { fs1, fs2, fs3, fd, rm, op } => exec_ffma(fs1, fs2, fs3, fd, rm, op),
        Fsgnj { fs1, fs2, fd, op } => read_freg(fs1).bind(move |a| {
            read_freg(fs2).bind(move |b| {
                let r = sf::f32_sgnj(op, f32_of(a), f32_of(b));
                write_freg(fd, fbits(r)).then(success())
            })
        }),
        Fminmax { fs1, fs2, fd, op } => read_freg(fs1).bind(move |a| {
            read_freg(fs2).bind(move |b| {
                let (r, flags) = match op {
                    MinMaxOp::Min => sf::f32_min(f32_of(a), f32_of(b)),
                    MinMaxOp::Max => sf::f32_max(f32_of(a), f32_of(b)),
                };
                write_fp_result(fd, r, flags)
            })
        }),
        Fcmp { fs1, fs2, rd, op } => read_freg(fs1).bind(move |a| {
            read_freg(fs2).bind(move |b| {
                let (t, flags) = match op {
                    FCmpOp::Eq => sf::f32_eq(f32_of(a), f32_of(b)),
                    FCmpOp::Lt => sf::f32_lt(f32_of(a), f32_of(b)),
                    FCmpOp::Le => sf::f32_le(f32_of(a), f32_of(b)),
                };
                write_reg(rd, BitVec::new(w, t as u64)).then(accrue(flags))
            })
        }),
        FcvtToInt { fs1, rd, rm, fmt } => with_rm(rm, move |m| {
            read_freg(fs1).bind(move |a| {
                let a = f32_of(a);
                let (v, flags) = match fmt {
                    IntFmt::W => {
                        let (v, f) = sf::f32_to_i32(a, m);
                        (v as i64 as u64, f)
                    }
                    IntFmt::Wu => {
                        let (v, f) = sf::f32_to_u32(a, m);
                        (v as i32 as i64 as u64, f)
                    }
                    IntFmt::L => {
                        let (v, f) = sf::f32_to_i64(a, m);
                        (v as u64, f)
                    }
                    IntFmt::Lu => sf::f32_to_u64(a, m),
                };
                write_reg(rd, BitVec::new(w, v)).then(accrue(flags))
            })
        }),
        FcvtFromInt { rs1, fd, rm, fmt } => with_rm(rm, move |m| {
            read_reg(rs1).bind(move |a| {
                let (r, flags) = match fmt {
                    IntFmt::W => sf::i32_to_f32(a.value() as i32, m),
                    IntFmt::Wu => sf::u32_to_f32(a.value() as u32, m),
                    IntFmt::L => sf::i64_to_f32(a.value() as i64, m),
                    IntFmt::Lu => sf::u64_to_f32(a.value(), m),
                };
                write_fp_result(fd, r, flags)
            })
        }),
        FmvToInt { fs1, rd } => read_freg(fs1).bind(move |a| write_then(rd, a.sign_extend(w))),
        FmvFromInt { rs1, fd } => {
            read_reg(rs1).bind(move |a| write_freg(fd, a.extract(0, 32)).then(success()))
        }
        Fclass { fs1, rd } => read_freg(fs1).bind(move |a| {
            let mask = sf::f32_classify(f32_of(a));
            write_then(rd, BitVec::new(w, mask as u64))
        }),
        Ecall => fail(Trap::new(TrapCause::EnvironmentCall, 0)),
        Ebreak => fail(Trap::new(TrapCause::Breakpoint, 0)),
        Mret => ret(ExecResult::TrapReturn(crate::effects::Privilege::Machine)),
        Sret => ret(ExecResult::TrapReturn(crate::effects::Privilege::Supervisor)),
        Wfi => ret(ExecResult::WaitForInterrupt),
        Illegal => fail(Trap::illegal()),
    }
}

/// `exec_RTYPE`: read rs1, read rs2, write rd.
pub(crate) fn exec_rtype(rs1: Reg, rs2: Reg, rd: Reg, op: RtypeOp) -> Exec {
    read_reg(rs1).bind(move |a| read_reg(rs2).bind(move |b| write_then(rd, rtype_value(op, a, b))))
}

pub(crate) fn rtype_value(op: RtypeOp, a: BitVec, b: BitVec) -> BitVec {
    let w = a.width();
    match op {
        RtypeOp::Add => a.add(b),
        RtypeOp::Sub => a.sub(b),
        RtypeOp::Sll => a.sll(b),
        RtypeOp::Slt => a.slt(b).zero_extend(w),
        RtypeOp::Sltu => a.ult(b).zero_extend(w),
        RtypeOp::Xor => a.xor(b),
        RtypeOp::Srl => a.srl(b),
        RtypeOp::Sra => a.sra(b),
        RtypeOp::Or => a.or(b),
        RtypeOp::And => a.and(b),
    }
}

fn retire_unit(r: Result<(), Trap>) -> ExecResult {
    match r {
        Ok(()) => ExecResult::Success,
        Err(e) => ExecResult::Fail(e),
    }
}

fn jump(target: BitVec) -> Exec {
    if target.value() & 3 != 0 {
        return fail(Trap::new(TrapCause::InstrMisaligned, target.value()));
    }
    write_pc(target).then(success())
}

fn link_and_jump(rd: Reg, pc: BitVec, target: BitVec) -> Exec {
    if target.value() & 3 != 0 {
        return fail(Trap::new(TrapCause::InstrMisaligned, target.value()));
    }
    let link = pc.add(BitVec::new(pc.width(), 4));
    write_reg(rd, link).then(write_pc(target)).then(success())
}

/// `exec_LOAD`: read the base, read memory, write the extended data.
fn exec_load(imm: BitVec, rs1: Reg, rd: Reg, is_unsigned: bool, width: Width, xlen: Xlen) -> Exec {
    read_reg(rs1).bind(move |base| {
        vmem_read(base, sext(imm, xlen), width, false).bind(move |r| match r {
            Ok(data) => {
                let data = data.extract(0, width.bits());
                let v = if is_unsigned {
                    data.zero_extend(xlen.bits())
                } else {
                    data.sign_extend(xlen.bits())
                };
                write_then(rd, v)
            }
            Err(e) => fail(e),
        })
    })
}

fn exec_atype(rs1: Reg, rs2: Reg, rd: Reg, width: Width, op: AmoOp, xlen: Xlen) -> Exec {
    let w = xlen.bits();
    let zero = BitVec::zero(w);
    let misaligned = move |addr: BitVec, cause| {
        (addr.value() % width.bytes() != 0).then(|| Trap::new(cause, addr.value()))
    };
    match op {
        AmoOp::Lr => read_reg(rs1).bind(move |addr| {
            if let Some(t) = misaligned(addr, TrapCause::LoadMisaligned) {
                return fail(t);
            }
            vmem_read(addr, zero, width, true).bind(move |r| match r {
                Ok(d) => write_then(rd, d.extract(0, width.bits()).sign_extend(w)),
                Err(e) => fail(e),
            })
        }),
        AmoOp::Sc => read_reg(rs1).bind(move |addr| {
            read_reg(rs2).bind(move |v| {
                if let Some(t) = misaligned(addr, TrapCause::StoreMisaligned) {
                    return fail(t);
                }
                let data = v.extract(0, width.bits());
                vmem_write_conditional(addr, zero, width, data).bind(move |r| match r {
                    Ok(stored) => write_then(rd, BitVec::new(w, !stored as u64)),
                    Err(e) => fail(e),
                })
            })
        }),
        _ => read_reg(rs1).bind(move |addr| {
            read_reg(rs2).bind(move |v| {
                if let Some(t) = misaligned(addr, TrapCause::StoreMisaligned) {
                    return fail(t);
                }
                let src = v.extract(0, width.bits());
                vmem_read(addr, zero, width, false).bind(move |r| match r {
                    Ok(old) => {
                        let old = old.extract(0, width.bits());
                        let new = amo_combine(op, old, src);
                        vmem_write(addr, zero, width, new).bind(move |r| match r {
                            Ok(()) => write_then(rd, old.sign_extend(w)),
                            Err(e) => fail(e),
                        })
                    }
                    Err(e) => fail(as_store_fault(e)),
                })
            })
        }),
    }
}

/// AMOs report their read half as a store/AMO fault.
fn as_store_fault(t: Trap) -> Trap {
    let cause = match t.cause {
        TrapCause::LoadAccessFault => TrapCause::StoreAccessFault,
        TrapCause::LoadPageFault => TrapCause::StorePageFault,
        TrapCause::LoadMisaligned => TrapCause::StoreMisaligned,
        c => c,
    };
    Trap::new(cause, t.tval)
}

pub(crate) fn amo_combine(op: AmoOp, old: BitVec, src: BitVec) -> BitVec {
    match op {
        AmoOp::Swap => src,
        AmoOp::Add => old.add(src),
        AmoOp::Xor => old.xor(src),
        AmoOp::And => old.and(src),
        AmoOp::Or => old.or(src),
        AmoOp::Min => pick(old.signed() <= src.signed(), old, src),
        AmoOp::Max => pick(old.signed() >= src.signed(), old, src),
        AmoOp::Minu => pick(old.value() <= src.value(), old, src),
        AmoOp::Maxu => pick(old.value() >= src.value(), old, src),
        AmoOp::Lr | AmoOp::Sc => unreachable!("not a read-modify-write"),
    }
}

fn pick(first: bool, a: BitVec, b: BitVec) -> BitVec {
    if first {
        a
    } else {
        b
    }
}

/// Zicsr. `src` is `None` when the instruction must not write the CSR.
fn exec_csr(addr: u16, rd: Reg, op: CsrOp, src: Option<BitVec>, xlen: Xlen) -> Exec {
    let w = xlen.bits();
    let write = move |val: BitVec, old: Option<BitVec>| {
        write_csr(addr, val).bind(move |r| match (r, old) {
            (Err(e), _) => fail(e),
            (Ok(()), Some(old)) => write_then(rd, old),
            (Ok(()), None) => success(),
        })
    };
    match (op, src) {
        (CsrOp::Rw, Some(v)) if rd.is_zero() => write(v, None),
        (_, src) => read_csr(addr).bind(move |r| {
            let old = match r {
                Ok(old) => old.zero_extend(w),
                Err(e) => return fail(e),
            };
            match (op, src) {
                (_, None) => write_then(rd, old),
                (CsrOp::Rw, Some(v)) => write(v, Some(old)),
                (CsrOp::Rs, Some(v)) => write(old.or(v), Some(old)),
                (CsrOp::Rc, Some(v)) => write(old.and(v.not()), Some(old)),
            }
        }),
    }
}

fn f32_of(v: BitVec) -> F32 {
    F32(v.value() as u32)
}

fn fbits(f: F32) -> BitVec {
    BitVec::new(32, f.0 as u64)
}

/// Resolves the instruction's rounding-mode field, reading `frm` only for
/// DYN. Reserved encodings retire as illegal.
fn with_rm<F>(rm_bits: BitVec, k: F) -> Exec
where
    F: FnOnce(RoundingMode) -> Exec + Send + 'static,
{
    match RmField::decode(rm_bits.value() as u8) {
        RmField::Static(m) => k(m),
        RmField::Reserved => fail(Trap::illegal()),
        RmField::Dyn => read_csr(csr::FRM).bind(move |r| match r {
            Ok(frm) => match RoundingMode::from_bits(frm.value() as u8) {
                Some(m) => k(m),
                None => fail(Trap::illegal()),
            },
            Err(e) => fail(e),
        }),
    }
}

/// ORs nonzero flags into `fflags` with a read-modify-write.
fn accrue(flags: Fflags) -> Exec {
    if flags.is_empty() {
        return success();
    }
    read_csr(csr::FFLAGS).bind(move |r| match r {
        Ok(old) => {
            let new = BitVec::new(old.width(), old.value() | flags.bits() as u64);
            write_csr(csr::FFLAGS, new).map(retire_unit)
        }
        Err(e) => fail(e),
    })
}

fn write_fp_result(fd: Reg, r: F32, flags: Fflags) -> Exec {
    write_freg(fd, fbits(r)).then(accrue(flags))
}

/// `exec_FFMA`: resolve rm, read three sources, write the destination, then
/// accrue flags.
fn exec_ffma(fs1: Reg, fs2: Reg, fs3: Reg, fd: Reg, rm: BitVec, op: FmaOp) -> Exec {
    with_rm(rm, move |m| {
        read_freg(fs1).bind(move |a| {
            read_freg(fs2).bind(move |b| {
                read_freg(fs3).bind(move |c| {
                    let (r, flags) = sf::f32_fma(op, f32_of(a), f32_of(b), f32_of(c), m);
                    write_fp_result(fd, r, flags)
                })
            })
        })
    })
}
