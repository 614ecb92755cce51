//! The RISC-V event vocabulary: processor, virtual-memory, and
//! physical-memory requests, and the tagged answers they expect.

use std::fmt;

use serde::{Deserialize, Serialize};

use super::{trigger, Computation, Effect};
use crate::bitvec::BitVec;

/// Integer or floating-point register index in `[0, 32)`.
#[derive(Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(try_from = "u8", into = "u8")]
pub struct Reg(u8);

impl Reg {
    pub const ZERO: Reg = Reg(0);
    pub const RA: Reg = Reg(1);
    pub const SP: Reg = Reg(2);
    pub const GP: Reg = Reg(3);
    pub const TP: Reg = Reg(4);
    pub const T0: Reg = Reg(5);
    pub const T1: Reg = Reg(6);
    pub const T2: Reg = Reg(7);
    pub const A0: Reg = Reg(10);
    pub const A1: Reg = Reg(11);
    pub const A2: Reg = Reg(12);
    pub const A7: Reg = Reg(17);

    pub fn new(i: u8) -> Option<Reg> {
        (i < 32).then_some(Reg(i))
    }

    /// Low five bits of `bits`; always in range.
    pub fn from_bits(bits: u32) -> Reg {
        Reg((bits & 0x1F) as u8)
    }

    pub fn index(self) -> usize {
        self.0 as usize
    }

    pub fn is_zero(self) -> bool {
        self.0 == 0
    }

    pub fn all() -> impl Iterator<Item = Reg> {
        (0..32).map(Reg)
    }

    pub const ABI_NAMES: [&'static str; 32] = [
        "zero", "ra", "sp", "gp", "tp", "t0", "t1", "t2", "s0", "s1", "a0", "a1", "a2", "a3", "a4",
        "a5", "a6", "a7", "s2", "s3", "s4", "s5", "s6", "s7", "s8", "s9", "s10", "s11", "t3", "t4",
        "t5", "t6",
    ];

    pub fn abi_name(self) -> &'static str {
        Self::ABI_NAMES[self.index()]
    }
}

impl TryFrom<u8> for Reg {
    type Error = String;
    fn try_from(v: u8) -> Result<Self, String> {
        Reg::new(v).ok_or_else(|| format!("register index {v} out of range"))
    }
}

impl From<Reg> for u8 {
    fn from(r: Reg) -> u8 {
        r.0
    }
}

impl fmt::Debug for Reg {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "x{}", self.0)
    }
}

#[derive(Clone, Copy, PartialEq, Eq, Hash, Debug, Serialize, Deserialize)]
pub enum Xlen {
    #[serde(rename = "32")]
    Rv32,
    #[serde(rename = "64")]
    Rv64,
}

impl Xlen {
    pub fn bits(self) -> u32 {
        match self {
            Xlen::Rv32 => 32,
            Xlen::Rv64 => 64,
        }
    }

    pub fn mask(self) -> u64 {
        match self {
            Xlen::Rv32 => 0xFFFF_FFFF,
            Xlen::Rv64 => u64::MAX,
        }
    }

    pub fn word(self, v: u64) -> BitVec {
        BitVec::new(self.bits(), v)
    }
}

/// Memory access width.
#[derive(Clone, Copy, PartialEq, Eq, Hash, Debug, Serialize, Deserialize)]
pub enum Width {
    Byte,
    Half,
    Word,
    Double,
}

impl Width {
    pub fn bytes(self) -> u64 {
        match self {
            Width::Byte => 1,
            Width::Half => 2,
            Width::Word => 4,
            Width::Double => 8,
        }
    }

    pub fn bits(self) -> u32 {
        self.bytes() as u32 * 8
    }

    pub fn from_bytes(n: u64) -> Option<Width> {
        match n {
            1 => Some(Width::Byte),
            2 => Some(Width::Half),
            4 => Some(Width::Word),
            8 => Some(Width::Double),
            _ => None,
        }
    }
}

#[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Debug, Serialize, Deserialize)]
pub enum Privilege {
    User = 0,
    Supervisor = 1,
    Machine = 3,
}

impl Privilege {
    pub fn from_bits(b: u64) -> Option<Privilege> {
        match b {
            0 => Some(Privilege::User),
            1 => Some(Privilege::Supervisor),
            3 => Some(Privilege::Machine),
            _ => None,
        }
    }

    pub fn bits(self) -> u64 {
        self as u64
    }
}

/// Synchronous exception causes.
#[derive(Clone, Copy, PartialEq, Eq, Hash, Debug, Serialize, Deserialize)]
pub enum TrapCause {
    InstrMisaligned,
    InstrAccessFault,
    IllegalInstruction,
    Breakpoint,
    LoadMisaligned,
    LoadAccessFault,
    StoreMisaligned,
    StoreAccessFault,
    /// `ecall`; the architectural code depends on the privilege it came from.
    EnvironmentCall,
    InstrPageFault,
    LoadPageFault,
    StorePageFault,
}

impl TrapCause {
    /// The mcause/scause exception code, given the privilege the trap was
    /// taken from.
    pub fn code(self, from: Privilege) -> u64 {
        match self {
            TrapCause::InstrMisaligned => 0,
            TrapCause::InstrAccessFault => 1,
            TrapCause::IllegalInstruction => 2,
            TrapCause::Breakpoint => 3,
            TrapCause::LoadMisaligned => 4,
            TrapCause::LoadAccessFault => 5,
            TrapCause::StoreMisaligned => 6,
            TrapCause::StoreAccessFault => 7,
            TrapCause::EnvironmentCall => 8 + from.bits(),
            TrapCause::InstrPageFault => 12,
            TrapCause::LoadPageFault => 13,
            TrapCause::StorePageFault => 15,
        }
    }
}

#[derive(Clone, Copy, PartialEq, Eq, Hash, Debug, Serialize, Deserialize)]
pub struct Trap {
    pub cause: TrapCause,
    /// Value for mtval/stval: faulting address or instruction bits.
    pub tval: u64,
}

impl Trap {
    pub fn new(cause: TrapCause, tval: u64) -> Trap {
        Trap { cause, tval }
    }

    pub fn illegal() -> Trap {
        Trap::new(TrapCause::IllegalInstruction, 0)
    }
}

/// How an instruction retired.
#[derive(Clone, Copy, PartialEq, Eq, Debug, Serialize, Deserialize)]
pub enum ExecResult {
    Success,
    Fail(Trap),
    /// `mret`/`sret`: leave the trap handler of the given level.
    TrapReturn(Privilege),
    /// `wfi`
    WaitForInterrupt,
}

#[derive(Clone, PartialEq, Eq, Debug, Serialize, Deserialize)]
#[serde(tag = "kind")]
pub enum ProcessorEvent {
    RegRead { r: Reg },
    RegWrite { r: Reg, d: BitVec },
    FpRegRead { r: Reg },
    FpRegWrite { r: Reg, d: BitVec },
    PcRead,
    PcWrite { new_pc: BitVec },
    CsrRead { addr: BitVec },
    CsrWrite { addr: BitVec, val: BitVec },
}

#[derive(Clone, PartialEq, Eq, Debug, Serialize, Deserialize)]
#[serde(tag = "kind")]
pub enum VMemEvent {
    VMemRead {
        vaddr: BitVec,
        offset: BitVec,
        width: Width,
        res: bool,
    },
    VMemWrite {
        vaddr: BitVec,
        offset: BitVec,
        width: Width,
        data: BitVec,
        res: bool,
    },
    VMemInstrFetch { addr: BitVec },
}

#[derive(Clone, PartialEq, Eq, Debug, Serialize, Deserialize)]
#[serde(tag = "kind")]
pub enum PMemEvent {
    PMemRead { paddr: BitVec, width: Width },
    PMemWrite { paddr: BitVec, width: Width, data: BitVec },
}

#[derive(Clone, PartialEq, Eq, Debug, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Event {
    Proc(ProcessorEvent),
    VMem(VMemEvent),
    PMem(PMemEvent),
}

/// Tagged answer to an [`Event`].
#[derive(Clone, PartialEq, Eq, Debug, Serialize, Deserialize)]
#[serde(tag = "kind", content = "value")]
pub enum Response {
    Unit,
    Bits(BitVec),
    Read(Result<BitVec, Trap>),
    Write(Result<(), Trap>),
    /// Answer to a store-conditional write: `Ok(true)` when it took effect.
    Conditional(Result<bool, Trap>),
}

impl Response {
    fn kind(&self) -> &'static str {
        match self {
            Response::Unit => "Unit",
            Response::Bits(_) => "Bits",
            Response::Read(_) => "Read",
            Response::Write(_) => "Write",
            Response::Conditional(_) => "Conditional",
        }
    }
}

impl Event {
    /// The answer tag this event must be resumed with.
    pub fn answer_kind(&self) -> &'static str {
        use ProcessorEvent::*;
        use VMemEvent::*;
        match self {
            Event::Proc(RegRead { .. } | FpRegRead { .. } | PcRead) => "Bits",
            Event::Proc(RegWrite { .. } | FpRegWrite { .. } | PcWrite { .. }) => "Unit",
            Event::Proc(CsrRead { .. }) => "Read",
            Event::Proc(CsrWrite { .. }) => "Write",
            Event::VMem(VMemRead { .. } | VMemInstrFetch { .. }) => "Read",
            Event::VMem(VMemWrite { res: false, .. }) => "Write",
            Event::VMem(VMemWrite { res: true, .. }) => "Conditional",
            Event::PMem(PMemEvent::PMemRead { .. }) => "Read",
            Event::PMem(PMemEvent::PMemWrite { .. }) => "Write",
        }
    }

    pub fn is_processor(&self) -> bool {
        matches!(self, Event::Proc(_))
    }

    pub fn is_vmem(&self) -> bool {
        matches!(self, Event::VMem(_))
    }

    pub fn is_pmem(&self) -> bool {
        matches!(self, Event::PMem(_))
    }
}

impl Effect for Event {
    type Answer = Response;

    fn accepts(&self, answer: &Response) -> bool {
        self.answer_kind() == answer.kind()
    }
}

/// Computations over the RISC-V vocabulary.
pub type Rv<R> = Computation<Event, R>;

fn bits(r: Response) -> BitVec {
    match r {
        Response::Bits(b) => b,
        other => unreachable!("tag checked on resume: {other:?}"),
    }
}

fn read_result(r: Response) -> Result<BitVec, Trap> {
    match r {
        Response::Read(v) => v,
        other => unreachable!("tag checked on resume: {other:?}"),
    }
}

fn write_result(r: Response) -> Result<(), Trap> {
    match r {
        Response::Write(v) => v,
        other => unreachable!("tag checked on resume: {other:?}"),
    }
}

pub fn read_reg(r: Reg) -> Rv<BitVec> {
    trigger(Event::Proc(ProcessorEvent::RegRead { r })).map(bits)
}

pub fn write_reg(r: Reg, d: BitVec) -> Rv<()> {
    trigger(Event::Proc(ProcessorEvent::RegWrite { r, d })).map(|_| ())
}

pub fn read_freg(r: Reg) -> Rv<BitVec> {
    trigger(Event::Proc(ProcessorEvent::FpRegRead { r })).map(bits)
}

pub fn write_freg(r: Reg, d: BitVec) -> Rv<()> {
    trigger(Event::Proc(ProcessorEvent::FpRegWrite { r, d })).map(|_| ())
}

pub fn read_pc() -> Rv<BitVec> {
    trigger(Event::Proc(ProcessorEvent::PcRead)).map(bits)
}

pub fn write_pc(new_pc: BitVec) -> Rv<()> {
    trigger(Event::Proc(ProcessorEvent::PcWrite { new_pc })).map(|_| ())
}

pub fn read_csr(addr: u16) -> Rv<Result<BitVec, Trap>> {
    let addr = BitVec::new(12, addr as u64);
    trigger(Event::Proc(ProcessorEvent::CsrRead { addr })).map(read_result)
}

pub fn write_csr(addr: u16, val: BitVec) -> Rv<Result<(), Trap>> {
    let addr = BitVec::new(12, addr as u64);
    trigger(Event::Proc(ProcessorEvent::CsrWrite { addr, val })).map(write_result)
}

pub fn vmem_read(vaddr: BitVec, offset: BitVec, width: Width, res: bool) -> Rv<Result<BitVec, Trap>> {
    trigger(Event::VMem(VMemEvent::VMemRead {
        vaddr,
        offset,
        width,
        res,
    }))
    .map(read_result)
}

pub fn vmem_write(vaddr: BitVec, offset: BitVec, width: Width, data: BitVec) -> Rv<Result<(), Trap>> {
    trigger(Event::VMem(VMemEvent::VMemWrite {
        vaddr,
        offset,
        width,
        data,
        res: false,
    }))
    .map(write_result)
}

/// Store-conditional write; `Ok(false)` when the reservation was lost.
pub fn vmem_write_conditional(
    vaddr: BitVec,
    offset: BitVec,
    width: Width,
    data: BitVec,
) -> Rv<Result<bool, Trap>> {
    trigger(Event::VMem(VMemEvent::VMemWrite {
        vaddr,
        offset,
        width,
        data,
        res: true,
    }))
    .map(|r| match r {
        Response::Conditional(v) => v,
        other => unreachable!("tag checked on resume: {other:?}"),
    })
}

pub fn fetch(addr: BitVec) -> Rv<Result<BitVec, Trap>> {
    trigger(Event::VMem(VMemEvent::VMemInstrFetch { addr })).map(read_result)
}

pub fn pmem_read(paddr: BitVec, width: Width) -> Rv<Result<BitVec, Trap>> {
    trigger(Event::PMem(PMemEvent::PMemRead { paddr, width })).map(read_result)
}

pub fn pmem_write(paddr: BitVec, width: Width, data: BitVec) -> Rv<Result<(), Trap>> {
    trigger(Event::PMem(PMemEvent::PMemWrite { paddr, width, data })).map(write_result)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn answer_tags() {
        let rd = Event::Proc(ProcessorEvent::RegRead { r: Reg::A0 });
        assert!(rd.accepts(&Response::Bits(BitVec::new(64, 1))));
        assert!(!rd.accepts(&Response::Unit));
        let sc = Event::VMem(VMemEvent::VMemWrite {
            vaddr: BitVec::zero(64),
            offset: BitVec::zero(64),
            width: Width::Word,
            data: BitVec::zero(64),
            res: true,
        });
        assert!(sc.accepts(&Response::Conditional(Ok(false))));
        assert!(!sc.accepts(&Response::Write(Ok(()))));
    }

    #[test]
    fn ecall_code_tracks_privilege() {
        assert_eq!(TrapCause::EnvironmentCall.code(Privilege::User), 8);
        assert_eq!(TrapCause::EnvironmentCall.code(Privilege::Supervisor), 9);
        assert_eq!(TrapCause::EnvironmentCall.code(Privilege::Machine), 11);
    }

    #[test]
    fn event_json_shape() {
        let e = Event::Proc(ProcessorEvent::RegRead { r: Reg::T0 });
        assert_eq!(serde_json::to_string(&e).unwrap(), r#"{"kind":"RegRead","r":5}"#);
        let back: Event = serde_json::from_str(r#"{"kind":"RegRead","r":5}"#).unwrap();
        assert_eq!(back, e);
        assert!(serde_json::from_str::<Event>(r#"{"kind":"RegRead","r":40}"#).is_err());
    }
}
