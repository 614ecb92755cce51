//! Direct state-update reference semantics: one instruction applied to a
//! machine state with plain integer arithmetic and Berkeley SoftFloat, using
//! only the state's register, CSR, and raw memory accessors.

use rvfx_core::effects::{ExecResult, Privilege, Reg, Trap, TrapCause, Width, Xlen};
use rvfx_core::isa::*;
use rvfx_core::machine::MachineState;
use softfloat_sys as sf;

struct Ref {
    s: MachineState,
    bits: u32,
    mask: u64,
}

fn illegal() -> ExecResult {
    ExecResult::Fail(Trap::new(TrapCause::IllegalInstruction, 0))
}

fn fail(c: TrapCause, tval: u64) -> ExecResult {
    ExecResult::Fail(Trap::new(c, tval))
}

fn sext(v: u64, from: u32) -> u64 {
    if from >= 64 {
        v
    } else {
        (((v << (64 - from)) as i64) >> (64 - from)) as u64
    }
}

impl Ref {
    fn x(&self, r: Reg) -> u64 {
        self.s.x[r.index()]
    }

    fn signed(&self, v: u64) -> i64 {
        sext(v, self.bits) as i64
    }

    fn set(&mut self, rd: Reg, v: u64) {
        self.s.set_gp(rd, v & self.mask);
    }

    fn imm(&self, imm: rvfx_core::BitVec) -> u64 {
        sext(imm.value(), imm.width()) & self.mask
    }

    fn addr(&self, base: Reg, imm: rvfx_core::BitVec) -> u64 {
        self.x(base).wrapping_add(self.imm(imm)) & self.mask
    }

    fn mem_ok(&self, addr: u64) -> bool {
        self.s.xlen == Xlen::Rv32 || addr >> 56 == 0
    }

    fn read(&self, addr: u64, n: u64, fault: TrapCause) -> Result<u64, Trap> {
        if self.s.trap_misaligned && addr % n != 0 {
            return Err(Trap::new(TrapCause::LoadMisaligned, addr));
        }
        if !self.mem_ok(addr) {
            return Err(Trap::new(fault, addr));
        }
        self.s.mem.read(addr, n).ok_or(Trap::new(fault, addr))
    }

    fn write(&mut self, addr: u64, n: u64, v: u64) -> Result<(), Trap> {
        if self.s.trap_misaligned && addr % n != 0 {
            return Err(Trap::new(TrapCause::StoreMisaligned, addr));
        }
        if !self.mem_ok(addr) {
            return Err(Trap::new(TrapCause::StoreAccessFault, addr));
        }
        self.s.mem.write(addr, n, v).ok_or(Trap::new(TrapCause::StoreAccessFault, addr))?;
        if let Some((r, w)) = self.s.reservation {
            if addr < r + w.bytes() && r < addr + n {
                self.s.reservation = None;
            }
        }
        Ok(())
    }

    fn jump(&mut self, target: u64) -> Result<(), ExecResult> {
        let target = target & self.mask;
        if target % 4 != 0 {
            return Err(fail(TrapCause::InstrMisaligned, target));
        }
        self.s.next_pc = Some(target);
        Ok(())
    }

    fn shamt_mask(&self) -> u64 {
        self.bits as u64 - 1
    }

    fn alu(&self, op: RtypeOp, a: u64, b: u64) -> u64 {
        let sh = (b & self.shamt_mask()) as u32;
        match op {
            RtypeOp::Add => a.wrapping_add(b),
            RtypeOp::Sub => a.wrapping_sub(b),
            RtypeOp::Sll => a << sh,
            RtypeOp::Slt => (self.signed(a) < self.signed(b)) as u64,
            RtypeOp::Sltu => (a < b) as u64,
            RtypeOp::Xor => a ^ b,
            RtypeOp::Srl => (a & self.mask) >> sh,
            RtypeOp::Sra => (self.signed(a) >> sh) as u64,
            RtypeOp::Or => a | b,
            RtypeOp::And => a & b,
        }
    }

    fn muldiv(&self, op: MulOp, a: u64, b: u64) -> u64 {
        let (sa, sb) = (self.signed(a) as i128, self.signed(b) as i128);
        let (ua, ub) = (a as u128, b as u128);
        let n = self.bits;
        let min = 1u64 << (n - 1);
        match op {
            MulOp::Mul => a.wrapping_mul(b),
            MulOp::Mulh => ((sa * sb) >> n) as u64,
            MulOp::Mulhsu => ((sa * ub as i128) >> n) as u64,
            MulOp::Mulhu => ((ua * ub) >> n) as u64,
            MulOp::Div => {
                if b == 0 {
                    u64::MAX
                } else if a == min && self.signed(b) == -1 {
                    min
                } else {
                    (sa / sb) as u64
                }
            }
            MulOp::Divu => {
                if b == 0 {
                    u64::MAX
                } else {
                    a / b
                }
            }
            MulOp::Rem => {
                if b == 0 {
                    a
                } else if a == min && self.signed(b) == -1 {
                    0
                } else {
                    (sa % sb) as u64
                }
            }
            MulOp::Remu => {
                if b == 0 {
                    a
                } else {
                    a % b
                }
            }
        }
    }

    fn rm(&self, rm: rvfx_core::BitVec) -> Option<u8> {
        match rm.value() as u8 {
            m @ 0..=4 => Some(m),
            7 if self.s.csrs.frm <= 4 => Some(self.s.csrs.frm),
            _ => None,
        }
    }

    fn accrue(&mut self, flags: u8) {
        self.s.csrs.fflags |= flags;
    }

    fn csr(&mut self, addr: u16, rd: Reg, op: CsrOp, src: u64, src_is_zero: bool) -> ExecResult {
        let write_only = op == CsrOp::Rw && rd.is_zero();
        let old = if write_only {
            None
        } else {
            match self.s.csr_read(addr) {
                Ok(v) => Some(v),
                Err(t) => return ExecResult::Fail(t),
            }
        };
        let new = match (op, old) {
            (CsrOp::Rw, _) => Some(src),
            (_, _) if src_is_zero => None,
            (CsrOp::Rs, Some(o)) => Some(o | src),
            (CsrOp::Rc, Some(o)) => Some(o & !src),
            _ => unreachable!(),
        };
        if let Some(v) = new {
            if let Err(t) = self.s.csr_write(addr, v & self.mask) {
                return ExecResult::Fail(t);
            }
        }
        if let Some(o) = old {
            self.set(rd, o);
        }
        ExecResult::Success
    }
}

fn with_mode<T>(rm: u8, f: impl FnOnce() -> T) -> (T, u8) {
    unsafe {
        sf::softfloat_roundingMode_write_helper(rm);
        sf::softfloat_exceptionFlags_write_helper(0);
        let r = f();
        (r, sf::softfloat_exceptionFlags_read_helper())
    }
}

fn f(v: u32) -> sf::float32_t {
    sf::float32_t { v }
}

fn is_nan(v: u32) -> bool {
    v & 0x7F80_0000 == 0x7F80_0000 && v & 0x007F_FFFF != 0
}

fn is_snan(v: u32) -> bool {
    is_nan(v) && v & 0x0040_0000 == 0
}

fn minmax(a: u32, b: u32, max: bool) -> (u32, u8) {
    let flags = if is_snan(a) || is_snan(b) { 0x10 } else { 0 };
    let (fa, fb) = (f32::from_bits(a), f32::from_bits(b));
    let r = if is_nan(a) && is_nan(b) {
        0x7FC0_0000
    } else if is_nan(a) {
        b
    } else if is_nan(b) {
        a
    } else if fa == fb {
        if (a >> 31 == 1) == max {
            b
        } else {
            a
        }
    } else if (fa < fb) != max {
        a
    } else {
        b
    };
    (r, flags)
}

fn classify(a: u32) -> u64 {
    let x = f32::from_bits(a);
    let neg = a >> 31 == 1;
    let bit = if is_nan(a) {
        if is_snan(a) {
            8
        } else {
            9
        }
    } else if x.is_infinite() {
        if neg {
            0
        } else {
            7
        }
    } else if x == 0.0 {
        if neg {
            3
        } else {
            4
        }
    } else if x.is_subnormal() {
        if neg {
            2
        } else {
            5
        }
    } else if neg {
        1
    } else {
        6
    };
    1 << bit
}

/// Applies `i` to `s` directly. Returns the updated state (with `next_pc`
/// set by control transfers) and how the instruction retired.
pub fn reference_exec(s: &MachineState, i: &Instr) -> (MachineState, ExecResult) {
    let mut r = Ref { s: s.clone(), bits: s.xlen.bits(), mask: s.xlen.mask() };
    r.s.next_pc = None;
    let res = exec_ref(&mut r, i);
    (r.s, res)
}

fn exec_ref(r: &mut Ref, i: &Instr) -> ExecResult {
    use Instr::*;
    let ok = ExecResult::Success;
    let pc = r.s.pc;
    let mask = r.mask;
    let rv64 = r.s.xlen == Xlen::Rv64;
    match *i {
        Itype { imm, rs1, rd, op } => {
            let (a, b) = (r.x(rs1), r.imm(imm));
            let v = match op {
                ItypeOp::Addi => r.alu(RtypeOp::Add, a, b),
                ItypeOp::Slti => r.alu(RtypeOp::Slt, a, b),
                ItypeOp::Sltiu => r.alu(RtypeOp::Sltu, a, b),
                ItypeOp::Xori => a ^ b,
                ItypeOp::Ori => a | b,
                ItypeOp::Andi => a & b,
            };
            r.set(rd, v);
            ok
        }
        ShiftIop { shamt, rs1, rd, op } => {
            if !rv64 && shamt.value() >= 32 {
                return illegal();
            }
            let a = r.x(rs1);
            let v = match op {
                ShiftOp::Sll => r.alu(RtypeOp::Sll, a, shamt.value()),
                ShiftOp::Srl => r.alu(RtypeOp::Srl, a, shamt.value()),
                ShiftOp::Sra => r.alu(RtypeOp::Sra, a, shamt.value()),
            };
            r.set(rd, v);
            ok
        }
        Rtype { rs1, rs2, rd, op } => {
            let v = r.alu(op, r.x(rs1), r.x(rs2));
            r.set(rd, v);
            ok
        }
        Btype { imm, rs1, rs2, op } => {
            let (a, b) = (r.x(rs1), r.x(rs2));
            let (sa, sb) = (r.signed(a), r.signed(b));
            let taken = match op {
                BranchOp::Beq => a == b,
                BranchOp::Bne => a != b,
                BranchOp::Blt => sa < sb,
                BranchOp::Bge => sa >= sb,
                BranchOp::Bltu => a < b,
                BranchOp::Bgeu => a >= b,
            };
            if taken {
                if let Err(e) = r.jump(pc.wrapping_add(r.imm(imm))) {
                    return e;
                }
            }
            ok
        }
        Utype { imm, rd, op } => {
            let v = sext(imm.value() << 12, 32);
            let v = match op {
                UtypeOp::Lui => v,
                UtypeOp::Auipc => pc.wrapping_add(v),
            };
            r.set(rd, v);
            ok
        }
        Jal { imm, rd } => {
            if let Err(e) = r.jump(pc.wrapping_add(r.imm(imm))) {
                return e;
            }
            r.set(rd, pc.wrapping_add(4));
            ok
        }
        Jalr { imm, rs1, rd } => {
            let t = r.x(rs1).wrapping_add(r.imm(imm)) & !1;
            if let Err(e) = r.jump(t) {
                return e;
            }
            r.set(rd, pc.wrapping_add(4));
            ok
        }
        Load { imm, rs1, rd, is_unsigned, width } => {
            let a = r.addr(rs1, imm);
            match r.read(a, width.bytes(), TrapCause::LoadAccessFault) {
                Ok(v) => {
                    let v = if is_unsigned { v } else { sext(v, width.bits()) };
                    r.set(rd, v);
                    ok
                }
                Err(t) => ExecResult::Fail(t),
            }
        }
        Store { imm, rs1, rs2, width } => {
            let a = r.addr(rs1, imm);
            match r.write(a, width.bytes(), r.x(rs2)) {
                Ok(()) => ok,
                Err(t) => ExecResult::Fail(t),
            }
        }
        Fence { .. } | FenceI | SfenceVma { .. } => ok,
        Addiw { imm, rs1, rd } => {
            r.set(rd, sext(r.x(rs1).wrapping_add(r.imm(imm)), 32));
            ok
        }
        ShiftIwop { shamt, rs1, rd, op } => {
            let a = r.x(rs1) as u32;
            let sh = shamt.value() as u32;
            let v = match op {
                ShiftOp::Sll => a << sh,
                ShiftOp::Srl => a >> sh,
                ShiftOp::Sra => ((a as i32) >> sh) as u32,
            };
            r.set(rd, sext(v as u64, 32));
            ok
        }
        RtypeW { rs1, rs2, rd, op } => {
            let (a, b) = (r.x(rs1) as u32, r.x(rs2) as u32);
            let sh = b & 31;
            let v = match op {
                RtypeWOp::Addw => a.wrapping_add(b),
                RtypeWOp::Subw => a.wrapping_sub(b),
                RtypeWOp::Sllw => a << sh,
                RtypeWOp::Srlw => a >> sh,
                RtypeWOp::Sraw => ((a as i32) >> sh) as u32,
            };
            r.set(rd, sext(v as u64, 32));
            ok
        }
        Mtype { rs1, rs2, rd, op } => {
            let v = r.muldiv(op, r.x(rs1), r.x(rs2));
            r.set(rd, v);
            ok
        }
        MtypeW { rs1, rs2, rd, op } => {
            let (a, b) = (r.x(rs1) as u32, r.x(rs2) as u32);
            let (sa, sb) = (a as i32, b as i32);
            let v = match op {
                MulWOp::Mulw => a.wrapping_mul(b),
                MulWOp::Divw => {
                    if b == 0 {
                        u32::MAX
                    } else {
                        sa.wrapping_div(sb) as u32
                    }
                }
                MulWOp::Divuw => a.checked_div(b).unwrap_or(u32::MAX),
                MulWOp::Remw => {
                    if b == 0 {
                        a
                    } else {
                        sa.wrapping_rem(sb) as u32
                    }
                }
                MulWOp::Remuw => {
                    if b == 0 {
                        a
                    } else {
                        a % b
                    }
                }
            };
            r.set(rd, sext(v as u64, 32));
            ok
        }
        Atype { rs1, rs2, rd, width, op, .. } => {
            let a = r.x(rs1);
            let n = width.bytes();
            let nb = width.bits();
            if a % n != 0 {
                let c = if op == AmoOp::Lr { TrapCause::LoadMisaligned } else { TrapCause::StoreMisaligned };
                return fail(c, a);
            }
            match op {
                AmoOp::Lr => match r.read(a, n, TrapCause::LoadAccessFault) {
                    Ok(v) => {
                        r.s.reservation = Some((a, width));
                        r.set(rd, sext(v, nb));
                        ok
                    }
                    Err(t) => ExecResult::Fail(t),
                },
                AmoOp::Sc => {
                    let held = r.s.reservation.take();
                    if !r.mem_ok(a) {
                        return fail(TrapCause::StoreAccessFault, a);
                    }
                    if held == Some((a, width)) {
                        if let Err(t) = r.write(a, n, r.x(rs2)) {
                            return ExecResult::Fail(t);
                        }
                        r.set(rd, 0);
                    } else {
                        r.set(rd, 1);
                    }
                    ok
                }
                _ => {
                    let old = match r.read(a, n, TrapCause::StoreAccessFault) {
                        Ok(v) => v,
                        Err(t) => return ExecResult::Fail(t),
                    };
                    let wmask = if nb == 64 { u64::MAX } else { (1 << nb) - 1 };
                    let src = r.x(rs2) & wmask;
                    let (so, ss) = (sext(old, nb) as i64, sext(src, nb) as i64);
                    let new = match op {
                        AmoOp::Swap => src,
                        AmoOp::Add => old.wrapping_add(src),
                        AmoOp::Xor => old ^ src,
                        AmoOp::And => old & src,
                        AmoOp::Or => old | src,
                        AmoOp::Min => if so <= ss { old } else { src },
                        AmoOp::Max => if so >= ss { old } else { src },
                        AmoOp::Minu => old.min(src),
                        AmoOp::Maxu => old.max(src),
                        AmoOp::Lr | AmoOp::Sc => unreachable!(),
                    };
                    if let Err(t) = r.write(a, n, new & wmask) {
                        return ExecResult::Fail(t);
                    }
                    r.set(rd, sext(old, nb));
                    ok
                }
            }
        }
        Csr { csr, rs1, rd, op } => r.csr(csr.value() as u16, rd, op, r.x(rs1), rs1.is_zero()),
        CsrI { csr, uimm, rd, op } => r.csr(csr.value() as u16, rd, op, uimm.value(), uimm.value() == 0),
        Fload { imm, rs1, fd } => {
            let a = r.addr(rs1, imm);
            match r.read(a, 4, TrapCause::LoadAccessFault) {
                Ok(v) => {
                    r.s.f[fd.index()] = v as u32;
                    ok
                }
                Err(t) => ExecResult::Fail(t),
            }
        }
        Fstore { imm, rs1, fs2 } => {
            let a = r.addr(rs1, imm);
            match r.write(a, 4, r.s.f[fs2.index()] as u64) {
                Ok(()) => ok,
                Err(t) => ExecResult::Fail(t),
            }
        }
        Farith { fs1, fs2, fd, rm, op } => {
            let Some(m) = r.rm(rm) else { return illegal() };
            let (a, b) = (f(r.s.f[fs1.index()]), f(r.s.f[fs2.index()]));
            let (v, fl) = with_mode(m, || unsafe {
                match op {
                    FArithOp::Add => sf::f32_add(a, b),
                    FArithOp::Sub => sf::f32_sub(a, b),
                    FArithOp::Mul => sf::f32_mul(a, b),
                    FArithOp::Div => sf::f32_div(a, b),
                }
            });
            r.s.f[fd.index()] = v.v;
            r.accrue(fl);
            ok
        }
        Fsqrt { fs1, fd, rm } => {
            let Some(m) = r.rm(rm) else { return illegal() };
            let a = f(r.s.f[fs1.index()]);
            let (v, fl) = with_mode(m, || unsafe { sf::f32_sqrt(a) });
            r.s.f[fd.index()] = v.v;
            r.accrue(fl);
            ok
        }
        Ffma { fs1, fs2, fs3, fd, rm, op } => {
            let Some(m) = r.rm(rm) else { return illegal() };
            let neg = |v: u32| v ^ 0x8000_0000;
            let (a, b, c) = (r.s.f[fs1.index()], r.s.f[fs2.index()], r.s.f[fs3.index()]);
            let (a, c) = match op {
                FmaOp::Madd => (a, c),
                FmaOp::Msub => (a, neg(c)),
                FmaOp::Nmadd => (neg(a), neg(c)),
                FmaOp::Nmsub => (neg(a), c),
            };
            let (v, fl) = with_mode(m, || unsafe { sf::f32_mulAdd(f(a), f(b), f(c)) });
            r.s.f[fd.index()] = v.v;
            r.accrue(fl);
            ok
        }
        Fsgnj { fs1, fs2, fd, op } => {
            let (a, b) = (r.s.f[fs1.index()], r.s.f[fs2.index()]);
            let sign = match op {
                SgnjOp::Sgnj => b,
                SgnjOp::Sgnjn => !b,
                SgnjOp::Sgnjx => a ^ b,
            } & 0x8000_0000;
            r.s.f[fd.index()] = (a & 0x7FFF_FFFF) | sign;
            ok
        }
        Fminmax { fs1, fs2, fd, op } => {
            let (v, fl) = minmax(r.s.f[fs1.index()], r.s.f[fs2.index()], op == MinMaxOp::Max);
            r.s.f[fd.index()] = v;
            r.accrue(fl);
            ok
        }
        Fcmp { fs1, fs2, rd, op } => {
            let (a, b) = (f(r.s.f[fs1.index()]), f(r.s.f[fs2.index()]));
            let (v, fl) = with_mode(0, || unsafe {
                match op {
                    FCmpOp::Eq => sf::f32_eq(a, b),
                    FCmpOp::Lt => sf::f32_lt(a, b),
                    FCmpOp::Le => sf::f32_le(a, b),
                }
            });
            r.set(rd, v as u64);
            r.accrue(fl);
            ok
        }
        FcvtToInt { fs1, rd, rm, fmt } => {
            let Some(m) = r.rm(rm) else { return illegal() };
            let a = f(r.s.f[fs1.index()]);
            let (v, fl) = with_mode(m, || unsafe {
                match fmt {
                    IntFmt::W => sext(sf::f32_to_i32(a, m, true) as u32 as u64, 32),
                    IntFmt::Wu => sext(sf::f32_to_ui32(a, m, true) as u64, 32),
                    IntFmt::L => sf::f32_to_i64(a, m, true) as u64,
                    IntFmt::Lu => sf::f32_to_ui64(a, m, true),
                }
            });
            r.set(rd, v);
            r.accrue(fl);
            ok
        }
        FcvtFromInt { rs1, fd, rm, fmt } => {
            let Some(m) = r.rm(rm) else { return illegal() };
            let a = r.x(rs1);
            let (v, fl) = with_mode(m, || unsafe {
                match fmt {
                    IntFmt::W => sf::i32_to_f32(a as u32 as i32),
                    IntFmt::Wu => sf::ui32_to_f32(a as u32),
                    IntFmt::L => sf::i64_to_f32(a as i64),
                    IntFmt::Lu => sf::ui64_to_f32(a),
                }
            });
            r.s.f[fd.index()] = v.v;
            r.accrue(fl);
            ok
        }
        FmvToInt { fs1, rd } => {
            r.set(rd, sext(r.s.f[fs1.index()] as u64, 32));
            ok
        }
        FmvFromInt { rs1, fd } => {
            r.s.f[fd.index()] = r.x(rs1) as u32;
            ok
        }
        Fclass { fs1, rd } => {
            r.set(rd, classify(r.s.f[fs1.index()]));
            ok
        }
        Ecall => fail(TrapCause::EnvironmentCall, 0),
        Ebreak => fail(TrapCause::Breakpoint, 0),
        Mret => ExecResult::TrapReturn(Privilege::Machine),
        Sret => ExecResult::TrapReturn(Privilege::Supervisor),
        Wfi => ExecResult::WaitForInterrupt,
        Illegal => illegal(),
    }
    .masked(mask)
}

trait Masked {
    fn masked(self, mask: u64) -> Self;
}

impl Masked for ExecResult {
    fn masked(self, mask: u64) -> Self {
        match self {
            ExecResult::Fail(t) => ExecResult::Fail(Trap::new(t.cause, t.tval & mask)),
            other => other,
        }
    }
}

pub fn width_of(bytes: u64) -> Width {
    Width::from_bytes(bytes).unwrap()
}
