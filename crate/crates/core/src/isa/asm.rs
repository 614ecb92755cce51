//! Textual assembly and disassembly, one instruction per line.
//!
//! Offsets are numeric and PC-relative; there are no labels. Immediates may
//! name symbols, which the caller resolves.

use super::*;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum AsmError {
    #[error("unknown mnemonic `{0}`")]
    Mnemonic(String),
    #[error("`{mnemonic}` expects {want} operands, got {got}")]
    Arity { mnemonic: String, want: usize, got: usize },
    #[error("bad register `{0}`")]
    Register(String),
    #[error("bad immediate `{0}`")]
    Immediate(String),
    #[error("immediate {value} out of range for `{mnemonic}`")]
    Range { mnemonic: String, value: i64 },
    #[error("unknown CSR `{0}`")]
    Csr(String),
    #[error("bad memory operand `{0}`")]
    Memory(String),
}

const FP_ABI: [&str; 32] = [
    "ft0", "ft1", "ft2", "ft3", "ft4", "ft5", "ft6", "ft7", "fs0", "fs1", "fa0", "fa1", "fa2", "fa3",
    "fa4", "fa5", "fa6", "fa7", "fs2", "fs3", "fs4", "fs5", "fs6", "fs7", "fs8", "fs9", "fs10",
    "fs11", "ft8", "ft9", "ft10", "ft11",
];

const RM_NAMES: [&str; 8] = ["rne", "rtz", "rdn", "rup", "rmm", "rm5", "rm6", "dyn"];

fn x(r: Reg) -> &'static str {
    r.abi_name()
}

fn f(r: Reg) -> &'static str {
    FP_ABI[r.index()]
}

fn csr_text(c: BitVec) -> String {
    csr::name(c.value() as u16).map_or_else(|| format!("{:#x}", c.value()), str::to_string)
}

fn rm_suffix(rm: BitVec) -> String {
    if rm.value() == 7 {
        String::new()
    } else {
        format!(", {}", RM_NAMES[rm.value() as usize])
    }
}

fn fence_set(v: BitVec) -> String {
    let s: String = "iorw"
        .chars()
        .enumerate()
        .filter(|(i, _)| v.bit(3 - *i as u32))
        .map(|(_, c)| c)
        .collect();
    if s.is_empty() {
        "0".into()
    } else {
        s
    }
}

fn width_letter(w: Width) -> char {
    match w {
        Width::Byte => 'b',
        Width::Half => 'h',
        Width::Word => 'w',
        Width::Double => 'd',
    }
}

fn lower<T: std::fmt::Debug>(op: T) -> String {
    format!("{op:?}").to_lowercase()
}

/// Renders `i` in the syntax [`assemble`] accepts.
pub fn disassemble(i: &Instr) -> String {
    use Instr::*;
    match *i {
        Itype { imm, rs1, rd, op } => format!("{} {}, {}, {}", lower(op), x(rd), x(rs1), imm.signed()),
        ShiftIop { shamt, rs1, rd, op } => {
            format!("{}i {}, {}, {}", lower(op), x(rd), x(rs1), shamt.value())
        }
        Rtype { rs1, rs2, rd, op } => format!("{} {}, {}, {}", lower(op), x(rd), x(rs1), x(rs2)),
        Btype { imm, rs1, rs2, op } => format!("{} {}, {}, {}", lower(op), x(rs1), x(rs2), imm.signed()),
        Utype { imm, rd, op } => format!("{} {}, {:#x}", lower(op), x(rd), imm.value()),
        Jal { imm, rd } => format!("jal {}, {}", x(rd), imm.signed()),
        Jalr { imm, rs1, rd } => format!("jalr {}, {}({})", x(rd), imm.signed(), x(rs1)),
        Load { imm, rs1, rd, is_unsigned, width } => format!(
            "l{}{} {}, {}({})",
            width_letter(width),
            if is_unsigned { "u" } else { "" },
            x(rd),
            imm.signed(),
            x(rs1)
        ),
        Store { imm, rs1, rs2, width } => {
            format!("s{} {}, {}({})", width_letter(width), x(rs2), imm.signed(), x(rs1))
        }
        Fence { pred, succ } => format!("fence {}, {}", fence_set(pred), fence_set(succ)),
        FenceI => "fence.i".into(),
        Addiw { imm, rs1, rd } => format!("addiw {}, {}, {}", x(rd), x(rs1), imm.signed()),
        ShiftIwop { shamt, rs1, rd, op } => {
            format!("{}iw {}, {}, {}", lower(op), x(rd), x(rs1), shamt.value())
        }
        RtypeW { rs1, rs2, rd, op } => format!("{} {}, {}, {}", lower(op), x(rd), x(rs1), x(rs2)),
        Mtype { rs1, rs2, rd, op } => format!("{} {}, {}, {}", lower(op), x(rd), x(rs1), x(rs2)),
        MtypeW { rs1, rs2, rd, op } => format!("{} {}, {}, {}", lower(op), x(rd), x(rs1), x(rs2)),
        Atype { rs1, rs2, rd, width, aq, rl, op } => {
            let name = match op {
                AmoOp::Lr | AmoOp::Sc => lower(op),
                _ => format!("amo{}", lower(op)),
            };
            let ord = format!("{}{}", if aq { ".aq" } else { "" }, if rl { ".rl" } else { "" });
            let m = format!("{name}.{}{ord}", width_letter(width));
            if op == AmoOp::Lr {
                format!("{m} {}, ({})", x(rd), x(rs1))
            } else {
                format!("{m} {}, {}, ({})", x(rd), x(rs2), x(rs1))
            }
        }
        Csr { csr, rs1, rd, op } => format!("csrr{} {}, {}, {}", lower(op).trim_start_matches('r'), x(rd), csr_text(csr), x(rs1)),
        CsrI { csr, uimm, rd, op } => format!(
            "csrr{}i {}, {}, {}",
            lower(op).trim_start_matches('r'),
            x(rd),
            csr_text(csr),
            uimm.value()
        ),
        Fload { imm, rs1, fd } => format!("flw {}, {}({})", f(fd), imm.signed(), x(rs1)),
        Fstore { imm, rs1, fs2 } => format!("fsw {}, {}({})", f(fs2), imm.signed(), x(rs1)),
        Farith { fs1, fs2, fd, rm, op } => {
            format!("f{}.s {}, {}, {}{}", lower(op), f(fd), f(fs1), f(fs2), rm_suffix(rm))
        }
        Fsqrt { fs1, fd, rm } => format!("fsqrt.s {}, {}{}", f(fd), f(fs1), rm_suffix(rm)),
        Ffma { fs1, fs2, fs3, fd, rm, op } => format!(
            "f{}.s {}, {}, {}, {}{}",
            lower(op),
            f(fd),
            f(fs1),
            f(fs2),
            f(fs3),
            rm_suffix(rm)
        ),
        Fsgnj { fs1, fs2, fd, op } => format!("f{}.s {}, {}, {}", lower(op), f(fd), f(fs1), f(fs2)),
        Fminmax { fs1, fs2, fd, op } => format!("f{}.s {}, {}, {}", lower(op), f(fd), f(fs1), f(fs2)),
        Fcmp { fs1, fs2, rd, op } => format!("f{}.s {}, {}, {}", lower(op), x(rd), f(fs1), f(fs2)),
        FcvtToInt { fs1, rd, rm, fmt } => {
            format!("fcvt.{}.s {}, {}{}", lower(fmt), x(rd), f(fs1), rm_suffix(rm))
        }
        FcvtFromInt { rs1, fd, rm, fmt } => {
            format!("fcvt.s.{} {}, {}{}", lower(fmt), f(fd), x(rs1), rm_suffix(rm))
        }
        FmvToInt { fs1, rd } => format!("fmv.x.w {}, {}", x(rd), f(fs1)),
        FmvFromInt { rs1, fd } => format!("fmv.w.x {}, {}", f(fd), x(rs1)),
        Fclass { fs1, rd } => format!("fclass.s {}, {}", x(rd), f(fs1)),
        Ecall => "ecall".into(),
        Ebreak => "ebreak".into(),
        Mret => "mret".into(),
        Sret => "sret".into(),
        Wfi => "wfi".into(),
        SfenceVma { rs1, rs2 } => format!("sfence.vma {}, {}", x(rs1), x(rs2)),
        Illegal => "illegal".into(),
    }
}

fn parse_xreg(s: &str) -> Result<Reg, AsmError> {
    let s = s.trim();
    if let Some(i) = Reg::ABI_NAMES.iter().position(|n| *n == s) {
        return Ok(Reg::from_bits(i as u32));
    }
    if s == "fp" {
        return Ok(Reg::from_bits(8));
    }
    s.strip_prefix('x')
        .and_then(|n| n.parse::<u8>().ok())
        .and_then(Reg::new)
        .ok_or_else(|| AsmError::Register(s.into()))
}

fn parse_freg(s: &str) -> Result<Reg, AsmError> {
    let s = s.trim();
    if let Some(i) = FP_ABI.iter().position(|n| *n == s) {
        return Ok(Reg::from_bits(i as u32));
    }
    s.strip_prefix('f')
        .and_then(|n| n.parse::<u8>().ok())
        .and_then(Reg::new)
        .ok_or_else(|| AsmError::Register(s.into()))
}

struct Ctx<'a> {
    mnemonic: &'a str,
    symbols: &'a dyn Fn(&str) -> Option<i64>,
}

impl Ctx<'_> {
    fn number(&self, s: &str) -> Result<i64, AsmError> {
        let s = s.trim();
        let (neg, body) = match s.strip_prefix('-') {
            Some(b) => (true, b.trim()),
            None => (false, s),
        };
        let v = if let Some(h) = body.strip_prefix("0x").or_else(|| body.strip_prefix("0X")) {
            i64::from_str_radix(h, 16).ok()
        } else if body.chars().next().is_some_and(|c| c.is_ascii_digit()) {
            body.parse::<i64>().ok()
        } else {
            (self.symbols)(body)
        };
        let v = v.ok_or_else(|| AsmError::Immediate(s.into()))?;
        Ok(if neg { -v } else { v })
    }

    /// A signed immediate of `bits` bits.
    fn simm(&self, s: &str, bits: u32) -> Result<BitVec, AsmError> {
        let v = self.number(s)?;
        let lim = 1i64 << (bits - 1);
        if !(-lim..lim).contains(&v) {
            return Err(AsmError::Range { mnemonic: self.mnemonic.into(), value: v });
        }
        Ok(BitVec::from_i64(bits, v))
    }

    /// An unsigned immediate of `bits` bits.
    fn uimm(&self, s: &str, bits: u32) -> Result<BitVec, AsmError> {
        let v = self.number(s)?;
        if !(0..(1i64 << bits)).contains(&v) {
            return Err(AsmError::Range { mnemonic: self.mnemonic.into(), value: v });
        }
        Ok(BitVec::new(bits, v as u64))
    }

    /// A 20-bit upper immediate; negative values wrap.
    fn upper(&self, s: &str) -> Result<BitVec, AsmError> {
        let v = self.number(s)?;
        if !(-(1i64 << 19)..(1i64 << 20)).contains(&v) {
            return Err(AsmError::Range { mnemonic: self.mnemonic.into(), value: v });
        }
        Ok(BitVec::from_i64(20, v))
    }

    /// A PC-relative offset that must be even.
    fn offset(&self, s: &str, bits: u32) -> Result<BitVec, AsmError> {
        let v = self.simm(s, bits)?;
        if v.bit(0) {
            return Err(AsmError::Range { mnemonic: self.mnemonic.into(), value: v.signed() });
        }
        Ok(v)
    }

    /// `imm(reg)` or `(reg)`.
    fn mem(&self, s: &str) -> Result<(BitVec, Reg), AsmError> {
        let s = s.trim();
        let open = s.find('(').ok_or_else(|| AsmError::Memory(s.into()))?;
        let inner = s[open + 1..]
            .strip_suffix(')')
            .ok_or_else(|| AsmError::Memory(s.into()))?;
        let off = s[..open].trim();
        let imm = if off.is_empty() {
            BitVec::zero(12)
        } else {
            self.simm(off, 12)?
        };
        Ok((imm, parse_xreg(inner)?))
    }

    fn csr(&self, s: &str) -> Result<BitVec, AsmError> {
        let s = s.trim();
        if let Some(a) = csr::by_name(s) {
            return Ok(BitVec::new(12, a as u64));
        }
        self.uimm(s, 12).map_err(|_| AsmError::Csr(s.into()))
    }

    fn rm(&self, s: Option<&&str>) -> Result<BitVec, AsmError> {
        match s {
            None => Ok(BitVec::new(3, 7)),
            Some(s) => RM_NAMES
                .iter()
                .position(|n| *n == s.trim())
                .map(|i| BitVec::new(3, i as u64))
                .ok_or_else(|| AsmError::Immediate(s.to_string())),
        }
    }
}

fn parse_fence_set(s: &str) -> Result<BitVec, AsmError> {
    let s = s.trim();
    if s == "0" {
        return Ok(BitVec::zero(4));
    }
    let mut v = 0;
    for c in s.chars() {
        let bit = "iorw".find(c).ok_or_else(|| AsmError::Immediate(s.into()))?;
        v |= 8 >> bit;
    }
    Ok(BitVec::new(4, v))
}

/// Splits on commas that are not inside parentheses.
fn operands(s: &str) -> Vec<&str> {
    let s = s.trim();
    if s.is_empty() {
        return Vec::new();
    }
    s.split(',').map(str::trim).collect()
}

pub fn assemble(line: &str) -> Result<Instr, AsmError> {
    assemble_with(line, &|_| None)
}

/// Assembles one line. Identifiers in immediate position are looked up in
/// `symbols`.
pub fn assemble_with(line: &str, symbols: &dyn Fn(&str) -> Option<i64>) -> Result<Instr, AsmError> {
    use Instr::*;
    let line = line.split('#').next().unwrap_or("").trim();
    let (mn, rest) = line.split_once(char::is_whitespace).unwrap_or((line, ""));
    let ops = operands(rest);
    let cx = Ctx { mnemonic: mn, symbols };
    let arity = |n: usize| -> Result<(), AsmError> {
        if ops.len() == n {
            Ok(())
        } else {
            Err(AsmError::Arity { mnemonic: mn.into(), want: n, got: ops.len() })
        }
    };
    let arity_rm = |n: usize| -> Result<(), AsmError> {
        if ops.len() == n || ops.len() == n + 1 {
            Ok(())
        } else {
            Err(AsmError::Arity { mnemonic: mn.into(), want: n, got: ops.len() })
        }
    };

    let itype = [
        ("addi", ItypeOp::Addi),
        ("slti", ItypeOp::Slti),
        ("sltiu", ItypeOp::Sltiu),
        ("xori", ItypeOp::Xori),
        ("ori", ItypeOp::Ori),
        ("andi", ItypeOp::Andi),
    ];
    if let Some((_, op)) = itype.iter().find(|(n, _)| *n == mn) {
        arity(3)?;
        return Ok(Itype { imm: cx.simm(ops[2], 12)?, rs1: parse_xreg(ops[1])?, rd: parse_xreg(ops[0])?, op: *op });
    }
    let shifts = [("sll", ShiftOp::Sll), ("srl", ShiftOp::Srl), ("sra", ShiftOp::Sra)];
    for (n, op) in shifts {
        if mn == format!("{n}i") {
            arity(3)?;
            return Ok(ShiftIop { shamt: cx.uimm(ops[2], 6)?, rs1: parse_xreg(ops[1])?, rd: parse_xreg(ops[0])?, op });
        }
        if mn == format!("{n}iw") {
            arity(3)?;
            return Ok(ShiftIwop { shamt: cx.uimm(ops[2], 5)?, rs1: parse_xreg(ops[1])?, rd: parse_xreg(ops[0])?, op });
        }
    }
    let rtype = [
        ("add", RtypeOp::Add),
        ("sub", RtypeOp::Sub),
        ("sll", RtypeOp::Sll),
        ("slt", RtypeOp::Slt),
        ("sltu", RtypeOp::Sltu),
        ("xor", RtypeOp::Xor),
        ("srl", RtypeOp::Srl),
        ("sra", RtypeOp::Sra),
        ("or", RtypeOp::Or),
        ("and", RtypeOp::And),
    ];
    let three_x = || -> Result<(Reg, Reg, Reg), AsmError> {
        arity(3)?;
        Ok((parse_xreg(ops[0])?, parse_xreg(ops[1])?, parse_xreg(ops[2])?))
    };
    if let Some((_, op)) = rtype.iter().find(|(n, _)| *n == mn) {
        let (rd, rs1, rs2) = three_x()?;
        return Ok(Rtype { rs1, rs2, rd, op: *op });
    }
    let rtypew = [
        ("addw", RtypeWOp::Addw),
        ("subw", RtypeWOp::Subw),
        ("sllw", RtypeWOp::Sllw),
        ("srlw", RtypeWOp::Srlw),
        ("sraw", RtypeWOp::Sraw),
    ];
    if let Some((_, op)) = rtypew.iter().find(|(n, _)| *n == mn) {
        let (rd, rs1, rs2) = three_x()?;
        return Ok(RtypeW { rs1, rs2, rd, op: *op });
    }
    let mtype = [
        ("mul", MulOp::Mul),
        ("mulh", MulOp::Mulh),
        ("mulhsu", MulOp::Mulhsu),
        ("mulhu", MulOp::Mulhu),
        ("div", MulOp::Div),
        ("divu", MulOp::Divu),
        ("rem", MulOp::Rem),
        ("remu", MulOp::Remu),
    ];
    if let Some((_, op)) = mtype.iter().find(|(n, _)| *n == mn) {
        let (rd, rs1, rs2) = three_x()?;
        return Ok(Mtype { rs1, rs2, rd, op: *op });
    }
    let mtypew = [
        ("mulw", MulWOp::Mulw),
        ("divw", MulWOp::Divw),
        ("divuw", MulWOp::Divuw),
        ("remw", MulWOp::Remw),
        ("remuw", MulWOp::Remuw),
    ];
    if let Some((_, op)) = mtypew.iter().find(|(n, _)| *n == mn) {
        let (rd, rs1, rs2) = three_x()?;
        return Ok(MtypeW { rs1, rs2, rd, op: *op });
    }
    let branches = [
        ("beq", BranchOp::Beq),
        ("bne", BranchOp::Bne),
        ("blt", BranchOp::Blt),
        ("bge", BranchOp::Bge),
        ("bltu", BranchOp::Bltu),
        ("bgeu", BranchOp::Bgeu),
    ];
    if let Some((_, op)) = branches.iter().find(|(n, _)| *n == mn) {
        arity(3)?;
        return Ok(Btype { imm: cx.offset(ops[2], 13)?, rs1: parse_xreg(ops[0])?, rs2: parse_xreg(ops[1])?, op: *op });
    }
    let loads = [
        ("lb", Width::Byte, false),
        ("lh", Width::Half, false),
        ("lw", Width::Word, false),
        ("ld", Width::Double, false),
        ("lbu", Width::Byte, true),
        ("lhu", Width::Half, true),
        ("lwu", Width::Word, true),
    ];
    if let Some((_, width, is_unsigned)) = loads.iter().find(|(n, ..)| *n == mn) {
        arity(2)?;
        let (imm, rs1) = cx.mem(ops[1])?;
        return Ok(Load { imm, rs1, rd: parse_xreg(ops[0])?, is_unsigned: *is_unsigned, width: *width });
    }
    let stores = [("sb", Width::Byte), ("sh", Width::Half), ("sw", Width::Word), ("sd", Width::Double)];
    if let Some((_, width)) = stores.iter().find(|(n, _)| *n == mn) {
        arity(2)?;
        let (imm, rs1) = cx.mem(ops[1])?;
        return Ok(Store { imm, rs1, rs2: parse_xreg(ops[0])?, width: *width });
    }
    if let Some(i) = assemble_atomic(mn, &ops)? {
        return Ok(i);
    }
    if let Some(i) = assemble_fp(&cx, &ops, &arity, &arity_rm)? {
        return Ok(i);
    }
    let csrs = [("csrrw", CsrOp::Rw), ("csrrs", CsrOp::Rs), ("csrrc", CsrOp::Rc)];
    for (n, op) in csrs {
        if mn == n {
            arity(3)?;
            return Ok(Csr { csr: cx.csr(ops[1])?, rs1: parse_xreg(ops[2])?, rd: parse_xreg(ops[0])?, op });
        }
        if mn == format!("{n}i") {
            arity(3)?;
            return Ok(CsrI { csr: cx.csr(ops[1])?, uimm: cx.uimm(ops[2], 5)?, rd: parse_xreg(ops[0])?, op });
        }
    }
    let z = Reg::ZERO;
    Ok(match mn {
        "lui" | "auipc" => {
            arity(2)?;
            let op = if mn == "lui" { UtypeOp::Lui } else { UtypeOp::Auipc };
            Utype { imm: cx.upper(ops[1])?, rd: parse_xreg(ops[0])?, op }
        }
        "jal" => match ops.len() {
            1 => Jal { imm: cx.offset(ops[0], 21)?, rd: Reg::RA },
            _ => {
                arity(2)?;
                Jal { imm: cx.offset(ops[1], 21)?, rd: parse_xreg(ops[0])? }
            }
        },
        "jalr" => match ops.len() {
            1 => Jalr { imm: BitVec::zero(12), rs1: parse_xreg(ops[0])?, rd: Reg::RA },
            3 => Jalr { imm: cx.simm(ops[2], 12)?, rs1: parse_xreg(ops[1])?, rd: parse_xreg(ops[0])? },
            _ => {
                arity(2)?;
                let (imm, rs1) = cx.mem(ops[1])?;
                Jalr { imm, rs1, rd: parse_xreg(ops[0])? }
            }
        },
        "addiw" => {
            arity(3)?;
            Addiw { imm: cx.simm(ops[2], 12)?, rs1: parse_xreg(ops[1])?, rd: parse_xreg(ops[0])? }
        }
        "fence" => match ops.len() {
            0 => Fence { pred: BitVec::new(4, 0xF), succ: BitVec::new(4, 0xF) },
            _ => {
                arity(2)?;
                Fence { pred: parse_fence_set(ops[0])?, succ: parse_fence_set(ops[1])? }
            }
        },
        "fence.i" => FenceI,
        "ecall" => Ecall,
        "ebreak" => Ebreak,
        "mret" => Mret,
        "sret" => Sret,
        "wfi" => Wfi,
        "sfence.vma" => match ops.len() {
            0 => SfenceVma { rs1: z, rs2: z },
            _ => {
                arity(2)?;
                SfenceVma { rs1: parse_xreg(ops[0])?, rs2: parse_xreg(ops[1])? }
            }
        },
        "illegal" => Illegal,
        // pseudo-instructions
        "nop" => Itype { imm: BitVec::zero(12), rs1: z, rd: z, op: ItypeOp::Addi },
        "mv" => {
            arity(2)?;
            Itype { imm: BitVec::zero(12), rs1: parse_xreg(ops[1])?, rd: parse_xreg(ops[0])?, op: ItypeOp::Addi }
        }
        "li" => {
            arity(2)?;
            Itype { imm: cx.simm(ops[1], 12)?, rs1: z, rd: parse_xreg(ops[0])?, op: ItypeOp::Addi }
        }
        "j" => {
            arity(1)?;
            Jal { imm: cx.offset(ops[0], 21)?, rd: z }
        }
        "ret" => Jalr { imm: BitVec::zero(12), rs1: Reg::RA, rd: z },
        "csrr" => {
            arity(2)?;
            Csr { csr: cx.csr(ops[1])?, rs1: z, rd: parse_xreg(ops[0])?, op: CsrOp::Rs }
        }
        "csrw" => {
            arity(2)?;
            Csr { csr: cx.csr(ops[0])?, rs1: parse_xreg(ops[1])?, rd: z, op: CsrOp::Rw }
        }
        _ => return Err(AsmError::Mnemonic(mn.into())),
    })
}

fn assemble_atomic(mn: &str, ops: &[&str]) -> Result<Option<Instr>, AsmError> {
    let mut parts = mn.split('.');
    let base = parts.next().unwrap_or("");
    let op = match base {
        "lr" => AmoOp::Lr,
        "sc" => AmoOp::Sc,
        "amoswap" => AmoOp::Swap,
        "amoadd" => AmoOp::Add,
        "amoxor" => AmoOp::Xor,
        "amoand" => AmoOp::And,
        "amoor" => AmoOp::Or,
        "amomin" => AmoOp::Min,
        "amomax" => AmoOp::Max,
        "amominu" => AmoOp::Minu,
        "amomaxu" => AmoOp::Maxu,
        _ => return Ok(None),
    };
    let width = match parts.next() {
        Some("w") => Width::Word,
        Some("d") => Width::Double,
        _ => return Err(AsmError::Mnemonic(mn.into())),
    };
    let (mut aq, mut rl) = (false, false);
    for p in parts {
        match p {
            "aq" => aq = true,
            "rl" => rl = true,
            "aqrl" => (aq, rl) = (true, true),
            _ => return Err(AsmError::Mnemonic(mn.into())),
        }
    }
    let addr = |s: &str| -> Result<Reg, AsmError> {
        let s = s.trim();
        let inner = s
            .strip_prefix("0(")
            .or_else(|| s.strip_prefix('('))
            .and_then(|r| r.strip_suffix(')'))
            .ok_or_else(|| AsmError::Memory(s.into()))?;
        parse_xreg(inner)
    };
    let want = if op == AmoOp::Lr { 2 } else { 3 };
    if ops.len() != want {
        return Err(AsmError::Arity { mnemonic: mn.into(), want, got: ops.len() });
    }
    let rd = parse_xreg(ops[0])?;
    let (rs2, rs1) = if op == AmoOp::Lr {
        (Reg::ZERO, addr(ops[1])?)
    } else {
        (parse_xreg(ops[1])?, addr(ops[2])?)
    };
    Ok(Some(Instr::Atype { rs1, rs2, rd, width, aq, rl, op }))
}

fn assemble_fp(
    cx: &Ctx,
    ops: &[&str],
    arity: &dyn Fn(usize) -> Result<(), AsmError>,
    arity_rm: &dyn Fn(usize) -> Result<(), AsmError>,
) -> Result<Option<Instr>, AsmError> {
    use Instr::*;
    let mn = cx.mnemonic;
    let fmt_of = |s: &str| match s {
        "w" => Some(IntFmt::W),
        "wu" => Some(IntFmt::Wu),
        "l" => Some(IntFmt::L),
        "lu" => Some(IntFmt::Lu),
        _ => None,
    };
    let i = match mn {
        "flw" => {
            arity(2)?;
            let (imm, rs1) = cx.mem(ops[1])?;
            Fload { imm, rs1, fd: parse_freg(ops[0])? }
        }
        "fsw" => {
            arity(2)?;
            let (imm, rs1) = cx.mem(ops[1])?;
            Fstore { imm, rs1, fs2: parse_freg(ops[0])? }
        }
        "fadd.s" | "fsub.s" | "fmul.s" | "fdiv.s" => {
            arity_rm(3)?;
            let op = match mn {
                "fadd.s" => FArithOp::Add,
                "fsub.s" => FArithOp::Sub,
                "fmul.s" => FArithOp::Mul,
                _ => FArithOp::Div,
            };
            Farith {
                fs1: parse_freg(ops[1])?,
                fs2: parse_freg(ops[2])?,
                fd: parse_freg(ops[0])?,
                rm: cx.rm(ops.get(3))?,
                op,
            }
        }
        "fsqrt.s" => {
            arity_rm(2)?;
            Fsqrt { fs1: parse_freg(ops[1])?, fd: parse_freg(ops[0])?, rm: cx.rm(ops.get(2))? }
        }
        "fmadd.s" | "fmsub.s" | "fnmadd.s" | "fnmsub.s" => {
            arity_rm(4)?;
            let op = match mn {
                "fmadd.s" => FmaOp::Madd,
                "fmsub.s" => FmaOp::Msub,
                "fnmadd.s" => FmaOp::Nmadd,
                _ => FmaOp::Nmsub,
            };
            Ffma {
                fs1: parse_freg(ops[1])?,
                fs2: parse_freg(ops[2])?,
                fs3: parse_freg(ops[3])?,
                fd: parse_freg(ops[0])?,
                rm: cx.rm(ops.get(4))?,
                op,
            }
        }
        "fsgnj.s" | "fsgnjn.s" | "fsgnjx.s" => {
            arity(3)?;
            let op = match mn {
                "fsgnj.s" => SgnjOp::Sgnj,
                "fsgnjn.s" => SgnjOp::Sgnjn,
                _ => SgnjOp::Sgnjx,
            };
            Fsgnj { fs1: parse_freg(ops[1])?, fs2: parse_freg(ops[2])?, fd: parse_freg(ops[0])?, op }
        }
        "fmin.s" | "fmax.s" => {
            arity(3)?;
            let op = if mn == "fmin.s" { MinMaxOp::Min } else { MinMaxOp::Max };
            Fminmax { fs1: parse_freg(ops[1])?, fs2: parse_freg(ops[2])?, fd: parse_freg(ops[0])?, op }
        }
        "feq.s" | "flt.s" | "fle.s" => {
            arity(3)?;
            let op = match mn {
                "feq.s" => FCmpOp::Eq,
                "flt.s" => FCmpOp::Lt,
                _ => FCmpOp::Le,
            };
            Fcmp { fs1: parse_freg(ops[1])?, fs2: parse_freg(ops[2])?, rd: parse_xreg(ops[0])?, op }
        }
        "fmv.x.w" => {
            arity(2)?;
            FmvToInt { fs1: parse_freg(ops[1])?, rd: parse_xreg(ops[0])? }
        }
        "fmv.w.x" => {
            arity(2)?;
            FmvFromInt { rs1: parse_xreg(ops[1])?, fd: parse_freg(ops[0])? }
        }
        "fclass.s" => {
            arity(2)?;
            Fclass { fs1: parse_freg(ops[1])?, rd: parse_xreg(ops[0])? }
        }
        _ => {
            let Some(rest) = mn.strip_prefix("fcvt.") else {
                return Ok(None);
            };
            let Some((a, b)) = rest.split_once('.') else {
                return Ok(None);
            };
            arity_rm(2)?;
            let rm = cx.rm(ops.get(2))?;
            match (a, b) {
                ("s", int) if fmt_of(int).is_some() => FcvtFromInt {
                    rs1: parse_xreg(ops[1])?,
                    fd: parse_freg(ops[0])?,
                    rm,
                    fmt: fmt_of(int).unwrap_or(IntFmt::W),
                },
                (int, "s") if fmt_of(int).is_some() => FcvtToInt {
                    fs1: parse_freg(ops[1])?,
                    rd: parse_xreg(ops[0])?,
                    rm,
                    fmt: fmt_of(int).unwrap_or(IntFmt::W),
                },
                _ => return Ok(None),
            }
        }
    };
    Ok(Some(i))
}
