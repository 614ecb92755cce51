//! Address translation: satp decoding, the configurable multi-level page
//! table walk, and the handler from virtual-memory events to
//! physical-memory events.

use serde::{Deserialize, Serialize};

use crate::bitvec::BitVec;
use crate::effects::events::{
    pmem_read, pmem_write, Event, PMemEvent, Privilege, Response, Rv, Trap, TrapCause, VMemEvent, Width, Xlen,
};
use crate::effects::{Computation, Outcome};

pub const PAGE_SHIFT: u32 = 12;
pub const PAGE_SIZE: u64 = 1 << PAGE_SHIFT;

#[derive(Clone, Copy, PartialEq, Eq, Hash, Debug, Serialize, Deserialize)]
pub enum TranslationMode {
    Bare,
    Sv32,
    Sv39,
    Sv48,
    Sv57,
}

impl TranslationMode {
    pub const PAGED: [TranslationMode; 4] = [
        TranslationMode::Sv32,
        TranslationMode::Sv39,
        TranslationMode::Sv48,
        TranslationMode::Sv57,
    ];

    pub fn levels(self) -> u32 {
        match self {
            TranslationMode::Bare => 0,
            TranslationMode::Sv32 => 2,
            TranslationMode::Sv39 => 3,
            TranslationMode::Sv48 => 4,
            TranslationMode::Sv57 => 5,
        }
    }

    /// Bytes per PTE.
    pub fn pte_size(self) -> u64 {
        match self {
            TranslationMode::Sv32 => 4,
            _ => 8,
        }
    }

    pub fn vpn_bits(self) -> u32 {
        match self {
            TranslationMode::Sv32 => 10,
            _ => 9,
        }
    }

    /// Significant virtual address bits.
    pub fn va_bits(self) -> u32 {
        PAGE_SHIFT + self.levels() * self.vpn_bits()
    }

    /// Width of the PTE's PPN field.
    pub fn ppn_bits(self) -> u32 {
        match self {
            TranslationMode::Sv32 => 22,
            _ => 44,
        }
    }

    pub fn paddr_bits(self) -> u32 {
        PAGE_SHIFT + self.ppn_bits()
    }

    pub fn xlen(self) -> Option<Xlen> {
        match self {
            TranslationMode::Bare => None,
            TranslationMode::Sv32 => Some(Xlen::Rv32),
            _ => Some(Xlen::Rv64),
        }
    }

    pub fn vpn(self, vaddr: u64, level: u32) -> u64 {
        (vaddr >> (PAGE_SHIFT + level * self.vpn_bits())) & ((1 << self.vpn_bits()) - 1)
    }
}

/// Physical address width for untranslated accesses.
pub fn paddr_bits(xlen: Xlen) -> u32 {
    match xlen {
        Xlen::Rv32 => 34,
        Xlen::Rv64 => 56,
    }
}

/// Decodes satp into (mode, root PPN). Unsupported mode encodings give
/// `None`; the CSR file never stores them.
pub fn decode_satp(satp: u64, xlen: Xlen) -> Option<(TranslationMode, u64)> {
    match xlen {
        Xlen::Rv32 => {
            let mode = if (satp >> 31) & 1 == 1 { TranslationMode::Sv32 } else { TranslationMode::Bare };
            Some((mode, satp & ((1 << 22) - 1)))
        }
        Xlen::Rv64 => {
            let mode = match satp >> 60 {
                0 => TranslationMode::Bare,
                8 => TranslationMode::Sv39,
                9 => TranslationMode::Sv48,
                10 => TranslationMode::Sv57,
                _ => return None,
            };
            Some((mode, satp & ((1 << 44) - 1)))
        }
    }
}

pub fn encode_satp(mode: TranslationMode, root_ppn: u64) -> u64 {
    match mode {
        TranslationMode::Bare => 0,
        TranslationMode::Sv32 => 1 << 31 | root_ppn,
        TranslationMode::Sv39 => 8 << 60 | root_ppn,
        TranslationMode::Sv48 => 9 << 60 | root_ppn,
        TranslationMode::Sv57 => 10 << 60 | root_ppn,
    }
}

#[derive(Clone, Copy, PartialEq, Eq, Hash, Debug, Serialize, Deserialize)]
pub enum AccessType {
    Read,
    Write,
    Fetch,
}

impl AccessType {
    pub fn page_fault(self) -> TrapCause {
        match self {
            AccessType::Read => TrapCause::LoadPageFault,
            AccessType::Write => TrapCause::StorePageFault,
            AccessType::Fetch => TrapCause::InstrPageFault,
        }
    }

    pub fn access_fault(self) -> TrapCause {
        match self {
            AccessType::Read => TrapCause::LoadAccessFault,
            AccessType::Write => TrapCause::StoreAccessFault,
            AccessType::Fetch => TrapCause::InstrAccessFault,
        }
    }
}

pub mod pte_bits {
    pub const V: u64 = 1 << 0;
    pub const R: u64 = 1 << 1;
    pub const W: u64 = 1 << 2;
    pub const X: u64 = 1 << 3;
    pub const U: u64 = 1 << 4;
    pub const G: u64 = 1 << 5;
    pub const A: u64 = 1 << 6;
    pub const D: u64 = 1 << 7;
}

#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub struct Pte {
    pub raw: BitVec,
}

impl Pte {
    pub fn new(mode: TranslationMode, raw: u64) -> Pte {
        Pte { raw: BitVec::new(mode.pte_size() as u32 * 8, raw) }
    }

    fn flag(self, f: u64) -> bool {
        self.raw.value() & f != 0
    }

    pub fn v(self) -> bool {
        self.flag(pte_bits::V)
    }
    pub fn r(self) -> bool {
        self.flag(pte_bits::R)
    }
    pub fn w(self) -> bool {
        self.flag(pte_bits::W)
    }
    pub fn x(self) -> bool {
        self.flag(pte_bits::X)
    }
    pub fn u(self) -> bool {
        self.flag(pte_bits::U)
    }
    pub fn g(self) -> bool {
        self.flag(pte_bits::G)
    }
    pub fn a(self) -> bool {
        self.flag(pte_bits::A)
    }
    pub fn d(self) -> bool {
        self.flag(pte_bits::D)
    }

    pub fn is_leaf(self) -> bool {
        self.r() || self.x()
    }

    pub fn is_invalid(self) -> bool {
        !self.v() || (self.w() && !self.r())
    }

    pub fn ppn(self, mode: TranslationMode) -> u64 {
        (self.raw.value() >> 10) & ((1 << mode.ppn_bits()) - 1)
    }

    /// Bits 63:54 of an Sv39+ PTE; nonzero values are reserved here.
    pub fn reserved(self, mode: TranslationMode) -> u64 {
        match mode {
            TranslationMode::Sv32 => 0,
            _ => self.raw.value() >> 54,
        }
    }
}

/// Inputs that shape a walk besides the address.
#[derive(Clone, Copy, PartialEq, Eq, Debug, Serialize, Deserialize)]
pub struct WalkCtx {
    pub mode: TranslationMode,
    pub root_ppn: u64,
    pub privilege: Privilege,
    pub sum: bool,
    pub mxr: bool,
}

fn fault(acc: AccessType, vaddr: u64) -> Trap {
    Trap::new(acc.page_fault(), vaddr)
}

fn canonical(mode: TranslationMode, vaddr: u64) -> bool {
    match mode {
        TranslationMode::Bare => true,
        TranslationMode::Sv32 => vaddr >> 32 == 0,
        _ => {
            let top = (vaddr as i64) >> (mode.va_bits() - 1);
            top == 0 || top == -1
        }
    }
}

fn leaf_permits(ctx: &WalkCtx, pte: Pte, acc: AccessType) -> bool {
    match ctx.privilege {
        Privilege::User if !pte.u() => return false,
        Privilege::Supervisor if pte.u() && (!ctx.sum || acc == AccessType::Fetch) => return false,
        _ => {}
    }
    let allowed = match acc {
        AccessType::Read => pte.r() || (ctx.mxr && pte.x()),
        AccessType::Write => pte.w(),
        AccessType::Fetch => pte.x(),
    };
    allowed && pte.a() && (acc != AccessType::Write || pte.d())
}

/// The page-table walk as a computation over physical-memory events: one
/// `PMemRead` per visited PTE, at most `levels` of them.
pub fn pt_walk(ctx: WalkCtx, vaddr: u64, acc: AccessType) -> Rv<Result<u64, Trap>> {
    assert!(ctx.mode != TranslationMode::Bare, "pt_walk needs a paged mode");
    if !canonical(ctx.mode, vaddr) {
        return Computation::ret(Err(fault(acc, vaddr)));
    }
    walk_level(ctx, vaddr, acc, ctx.root_ppn, ctx.mode.levels() - 1)
}

fn walk_level(ctx: WalkCtx, vaddr: u64, acc: AccessType, base_ppn: u64, level: u32) -> Rv<Result<u64, Trap>> {
    let mode = ctx.mode;
    let pte_addr = base_ppn * PAGE_SIZE + mode.vpn(vaddr, level) * mode.pte_size();
    let width = if mode.pte_size() == 4 { Width::Word } else { Width::Double };
    pmem_read(BitVec::new(64, pte_addr), width).bind(move |r| {
        let raw = match r {
            Ok(bits) => bits.value(),
            Err(_) => return Computation::ret(Err(fault(acc, vaddr))),
        };
        let pte = Pte::new(mode, raw);
        if pte.is_invalid() || pte.reserved(mode) != 0 {
            return Computation::ret(Err(fault(acc, vaddr)));
        }
        if !pte.is_leaf() {
            if level == 0 || pte.a() || pte.d() || pte.u() {
                return Computation::ret(Err(fault(acc, vaddr)));
            }
            return walk_level(ctx, vaddr, acc, pte.ppn(mode), level - 1);
        }
        if !leaf_permits(&ctx, pte, acc) {
            return Computation::ret(Err(fault(acc, vaddr)));
        }
        let low_bits = level * mode.vpn_bits();
        let low_mask = (1u64 << low_bits) - 1;
        let ppn = pte.ppn(mode);
        if ppn & low_mask != 0 {
            return Computation::ret(Err(fault(acc, vaddr)));
        }
        let vpn_low = (vaddr >> PAGE_SHIFT) & low_mask;
        let offset = vaddr & (PAGE_SIZE - 1);
        Computation::ret(Ok(((ppn | vpn_low) << PAGE_SHIFT) | offset))
    })
}

/// Runs [`pt_walk`] against a PTE reader. `read` gets the PTE's physical
/// address and width; `None` means the read failed.
pub fn translate<F>(ctx: WalkCtx, vaddr: u64, acc: AccessType, mut read: F) -> Result<u64, Trap>
where
    F: FnMut(u64, Width) -> Option<u64>,
{
    let answer = |e: &Event| match e {
        Event::PMem(PMemEvent::PMemRead { paddr, width }) => {
            let w = *width;
            Response::Read(
                read(paddr.value(), w)
                    .map(|v| BitVec::new(w.bits(), v))
                    .ok_or(Trap::new(TrapCause::LoadAccessFault, paddr.value())),
            )
        }
        other => unreachable!("page walk only reads physical memory: {other:?}"),
    };
    match pt_walk(ctx, vaddr, acc).run_with(answer, u64::MAX) {
        Ok(Outcome::Returned(r)) => r,
        other => unreachable!("page walk is finite and well-tagged: {other:?}"),
    }
}

/// Everything the handler needs from machine state.
#[derive(Clone, Copy, PartialEq, Eq, Debug, Serialize, Deserialize)]
pub struct TranslationCtx {
    pub xlen: Xlen,
    pub satp: u64,
    /// Privilege for instruction fetch.
    pub privilege: Privilege,
    /// Privilege for loads and stores (differs under mstatus.MPRV).
    pub data_privilege: Privilege,
    pub sum: bool,
    pub mxr: bool,
}

impl TranslationCtx {
    pub fn bare(xlen: Xlen) -> TranslationCtx {
        TranslationCtx {
            xlen,
            satp: 0,
            privilege: Privilege::Machine,
            data_privilege: Privilege::Machine,
            sum: false,
            mxr: false,
        }
    }

    /// The walk for an access, or `None` when the address is used directly.
    pub fn walk_ctx(&self, acc: AccessType) -> Option<WalkCtx> {
        let privilege = if acc == AccessType::Fetch { self.privilege } else { self.data_privilege };
        if privilege == Privilege::Machine {
            return None;
        }
        let (mode, root_ppn) = decode_satp(self.satp, self.xlen)?;
        (mode != TranslationMode::Bare).then_some(WalkCtx {
            mode,
            root_ppn,
            privilege,
            sum: self.sum,
            mxr: self.mxr,
        })
    }

    /// Bare-mode address check: the address must fit the physical space.
    pub fn bare_addr(&self, vaddr: u64, acc: AccessType) -> Result<u64, Trap> {
        let bits = paddr_bits(self.xlen);
        if self.xlen == Xlen::Rv64 && vaddr >> bits != 0 {
            Err(Trap::new(acc.access_fault(), vaddr))
        } else {
            Ok(vaddr)
        }
    }
}

/// Translation as a computation: the walk's PTE reads (if any) followed by
/// the resulting physical address.
pub fn translate_event(ctx: TranslationCtx, vaddr: u64, acc: AccessType) -> Rv<Result<u64, Trap>> {
    match ctx.walk_ctx(acc) {
        None => Computation::ret(ctx.bare_addr(vaddr, acc)),
        Some(w) => pt_walk(w, vaddr, acc),
    }
}

fn to_access_fault(acc: AccessType, vaddr: u64) -> impl FnOnce(Trap) -> Trap {
    move |_| Trap::new(acc.access_fault(), vaddr)
}

/// Interprets one virtual-memory event into physical-memory events. A
/// store-conditional depends on the machine's reservation and is declined
/// (`None`), as are events of other families.
pub fn vmem_handler(ctx: TranslationCtx) -> impl FnMut(&Event) -> Option<Rv<Response>> + Send + 'static {
    move |e| {
        let Event::VMem(v) = e else { return None };
        let xl = ctx.xlen;
        match v.clone() {
            VMemEvent::VMemRead { vaddr, offset, width, res: _ } => {
                let va = vaddr.add(offset).value();
                Some(translate_event(ctx, va, AccessType::Read).bind(move |pa| match pa {
                    Err(t) => Computation::ret(Response::Read(Err(t))),
                    Ok(pa) => pmem_read(BitVec::new(64, pa), width).map(move |r| {
                        Response::Read(
                            r.map(|d| d.zero_extend(xl.bits())).map_err(to_access_fault(AccessType::Read, va)),
                        )
                    }),
                }))
            }
            VMemEvent::VMemWrite { res: true, .. } => None,
            VMemEvent::VMemWrite { vaddr, offset, width, data, res: false } => {
                let va = vaddr.add(offset).value();
                Some(translate_event(ctx, va, AccessType::Write).bind(move |pa| match pa {
                    Err(t) => Computation::ret(Response::Write(Err(t))),
                    Ok(pa) => pmem_write(BitVec::new(64, pa), width, data.extract(0, width.bits())).map(move |r| {
                        Response::Write(r.map_err(to_access_fault(AccessType::Write, va)))
                    }),
                }))
            }
            VMemEvent::VMemInstrFetch { addr } => {
                let va = addr.value();
                Some(translate_event(ctx, va, AccessType::Fetch).bind(move |pa| match pa {
                    Err(t) => Computation::ret(Response::Read(Err(t))),
                    Ok(pa) => pmem_read(BitVec::new(64, pa), Width::Word).map(move |r| {
                        Response::Read(r.map_err(to_access_fault(AccessType::Fetch, va)))
                    }),
                }))
            }
        }
    }
}
