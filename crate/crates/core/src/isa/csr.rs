//! CSR addresses and names.

pub const FFLAGS: u16 = 0x001;
pub const FRM: u16 = 0x002;
pub const FCSR: u16 = 0x003;
pub const CYCLE: u16 = 0xC00;
pub const TIME: u16 = 0xC01;
pub const INSTRET: u16 = 0xC02;
pub const CYCLEH: u16 = 0xC80;
pub const TIMEH: u16 = 0xC81;
pub const INSTRETH: u16 = 0xC82;
pub const SSTATUS: u16 = 0x100;
pub const SIE: u16 = 0x104;
pub const STVEC: u16 = 0x105;
pub const SCOUNTEREN: u16 = 0x106;
pub const SSCRATCH: u16 = 0x140;
pub const SEPC: u16 = 0x141;
pub const SCAUSE: u16 = 0x142;
pub const STVAL: u16 = 0x143;
pub const SIP: u16 = 0x144;
pub const SATP: u16 = 0x180;
pub const MVENDORID: u16 = 0xF11;
pub const MARCHID: u16 = 0xF12;
pub const MIMPID: u16 = 0xF13;
pub const MHARTID: u16 = 0xF14;
pub const MSTATUS: u16 = 0x300;
pub const MISA: u16 = 0x301;
pub const MEDELEG: u16 = 0x302;
pub const MIDELEG: u16 = 0x303;
pub const MIE: u16 = 0x304;
pub const MTVEC: u16 = 0x305;
pub const MCOUNTEREN: u16 = 0x306;
pub const MSCRATCH: u16 = 0x340;
pub const MEPC: u16 = 0x341;
pub const MCAUSE: u16 = 0x342;
pub const MTVAL: u16 = 0x343;
pub const MIP: u16 = 0x344;
pub const PMPCFG0: u16 = 0x3A0;
pub const PMPADDR0: u16 = 0x3B0;
pub const MCYCLE: u16 = 0xB00;
pub const MINSTRET: u16 = 0xB02;
pub const MNSTATUS: u16 = 0x744;

const NAMES: &[(&str, u16)] = &[
    ("fflags", FFLAGS),
    ("frm", FRM),
    ("fcsr", FCSR),
    ("cycle", CYCLE),
    ("time", TIME),
    ("instret", INSTRET),
    ("cycleh", CYCLEH),
    ("timeh", TIMEH),
    ("instreth", INSTRETH),
    ("sstatus", SSTATUS),
    ("sie", SIE),
    ("stvec", STVEC),
    ("scounteren", SCOUNTEREN),
    ("sscratch", SSCRATCH),
    ("sepc", SEPC),
    ("scause", SCAUSE),
    ("stval", STVAL),
    ("sip", SIP),
    ("satp", SATP),
    ("mvendorid", MVENDORID),
    ("marchid", MARCHID),
    ("mimpid", MIMPID),
    ("mhartid", MHARTID),
    ("mstatus", MSTATUS),
    ("misa", MISA),
    ("medeleg", MEDELEG),
    ("mideleg", MIDELEG),
    ("mie", MIE),
    ("mtvec", MTVEC),
    ("mcounteren", MCOUNTEREN),
    ("mscratch", MSCRATCH),
    ("mepc", MEPC),
    ("mcause", MCAUSE),
    ("mtval", MTVAL),
    ("mip", MIP),
    ("pmpcfg0", PMPCFG0),
    ("pmpaddr0", PMPADDR0),
    ("mcycle", MCYCLE),
    ("minstret", MINSTRET),
    ("mnstatus", MNSTATUS),
];

pub fn name(addr: u16) -> Option<&'static str> {
    NAMES.iter().find(|(_, a)| *a == addr).map(|(n, _)| *n)
}

pub fn by_name(name: &str) -> Option<u16> {
    NAMES.iter().find(|(n, _)| *n == name).map(|(_, a)| *a)
}

/// Lowest privilege level allowed to access the CSR (address bits 9:8).
pub fn min_privilege(addr: u16) -> u64 {
    ((addr >> 8) & 3) as u64
}

/// Addresses with bits 11:10 set are read-only.
pub fn is_read_only(addr: u16) -> bool {
    (addr >> 10) & 3 == 3
}
