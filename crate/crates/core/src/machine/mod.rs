//! Concrete machine state, the combined handler for every event family,
//! trap entry and return, and the fetch-decode-execute loop.

mod csr_file;
mod lemma;
mod memory;

pub use csr_file::{misa, mstatus, CsrFile};
pub use lemma::{step_lemma_table, AluOp, Expr, MemEffect, NetEffect, PcEffect};
pub use memory::Memory;

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use crate::bitvec::BitVec;
use crate::effects::{
    fetch, read_pc, Computation, Event, ExecResult, PMemEvent, Privilege, ProcessorEvent, Reg, Response, Rv, Trap,
    TrapCause, VMemEvent, Width, Xlen,
};
use crate::isa::{decode, exec, Instr};
use crate::vmem::{self, AccessType, TranslationCtx};

#[derive(Clone, Copy, PartialEq, Eq, Debug, Serialize, Deserialize)]
pub enum StepOutcome {
    Retired,
    Trapped(Trap),
    Wfi,
}

#[derive(Clone, Copy, PartialEq, Eq, Debug, Serialize, Deserialize)]
pub enum RunOutcome {
    HtifExit(u64),
    OutOfFuel,
    Wfi,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct MachineState {
    pub xlen: Xlen,
    pub x: [u64; 32],
    pub f: [u32; 32],
    pub pc: u64,
    /// Set by a `PcWrite` during the current instruction.
    pub next_pc: Option<u64>,
    pub privilege: Privilege,
    pub csrs: CsrFile,
    pub mem: Memory,
    pub reservation: Option<(u64, Width)>,
    /// Raise misaligned-access traps instead of performing the access.
    pub trap_misaligned: bool,
    /// Physical address of the HTIF `tohost` word.
    pub tohost: Option<u64>,
    htif_pending: bool,
    /// Distinct values written to gp; riscv-tests keeps the case number there.
    pub gp_values: BTreeSet<u64>,
    pub instret: u64,
}

impl MachineState {
    /// Reset state: everything zero, M-mode, no memory.
    pub fn new(xlen: Xlen) -> MachineState {
        MachineState {
            xlen,
            x: [0; 32],
            f: [0; 32],
            pc: 0,
            next_pc: None,
            privilege: Privilege::Machine,
            csrs: CsrFile::new(xlen),
            mem: Memory::new(),
            reservation: None,
            trap_misaligned: false,
            tohost: None,
            htif_pending: false,
            gp_values: BTreeSet::new(),
            instret: 0,
        }
    }

    fn mask(&self) -> u64 {
        self.xlen.mask()
    }

    pub fn get_gp(&self, r: Reg) -> BitVec {
        self.xlen.word(self.x[r.index()])
    }

    /// Writes to x0 are dropped.
    pub fn set_gp(&mut self, r: Reg, v: u64) {
        if !r.is_zero() {
            self.x[r.index()] = v & self.mask();
            if r == Reg::GP {
                self.gp_values.insert(v & self.mask());
            }
        }
    }

    pub fn translation_ctx(&self) -> TranslationCtx {
        let data_privilege = if self.privilege == Privilege::Machine && self.csrs.bit(mstatus::MPRV) {
            self.csrs.mpp()
        } else {
            self.privilege
        };
        TranslationCtx {
            xlen: self.xlen,
            satp: self.csrs.satp,
            privilege: self.privilege,
            data_privilege,
            sum: self.csrs.bit(mstatus::SUM),
            mxr: self.csrs.bit(mstatus::MXR),
        }
    }

    /// Virtual to physical for a single byte address.
    pub fn translate(&self, vaddr: u64, acc: AccessType) -> Result<u64, Trap> {
        let ctx = self.translation_ctx();
        match ctx.walk_ctx(acc) {
            None => ctx.bare_addr(vaddr, acc),
            Some(w) => vmem::translate(w, vaddr, acc, |pa, width| self.mem.read(pa, width.bytes())),
        }
    }

    /// Physical addresses of each byte of an access; pages are translated
    /// once each.
    fn translate_range(&self, vaddr: u64, n: u64, acc: AccessType) -> Result<Vec<u64>, Trap> {
        let mut out = Vec::with_capacity(n as usize);
        let mut base = self.translate(vaddr, acc)?;
        for i in 0..n {
            let va = vaddr.wrapping_add(i) & self.mask();
            if i > 0 && va % vmem::PAGE_SIZE == 0 {
                base = self.translate(va, acc)?.wrapping_sub(i);
            }
            out.push(base.wrapping_add(i));
        }
        Ok(out)
    }

    fn contiguous(pas: &[u64]) -> bool {
        pas.windows(2).all(|w| w[1] == w[0] + 1)
    }

    fn phys_read(&self, pas: &[u64]) -> Option<u64> {
        if Self::contiguous(pas) {
            return self.mem.read(pas[0], pas.len() as u64);
        }
        let mut v = 0;
        for (i, pa) in pas.iter().enumerate() {
            v |= (self.mem.read_byte(*pa)? as u64) << (8 * i);
        }
        Some(v)
    }

    fn phys_write(&mut self, pas: &[u64], v: u64) -> Option<()> {
        if Self::contiguous(pas) {
            self.mem.write(pas[0], pas.len() as u64, v)?;
        } else {
            if pas.iter().any(|pa| !self.mem.is_mapped(*pa)) {
                return None;
            }
            for (i, pa) in pas.iter().enumerate() {
                self.mem.write_byte(*pa, (v >> (8 * i)) as u8)?;
            }
        }
        let (lo, hi) = (pas.iter().min().copied()?, pas.iter().max().copied()?);
        if let Some((r, w)) = self.reservation {
            if lo < r + w.bytes() && r <= hi {
                self.reservation = None;
            }
        }
        if let Some(t) = self.tohost {
            if lo < t + 8 && t <= hi {
                self.htif_pending = true;
            }
        }
        Some(())
    }

    pub fn load(&mut self, vaddr: u64, width: Width, reserve: bool) -> Result<BitVec, Trap> {
        let n = width.bytes();
        if (self.trap_misaligned || reserve) && vaddr % n != 0 {
            return Err(Trap::new(TrapCause::LoadMisaligned, vaddr));
        }
        let pas = self.translate_range(vaddr, n, AccessType::Read)?;
        let v = self.phys_read(&pas).ok_or(Trap::new(TrapCause::LoadAccessFault, vaddr))?;
        if reserve {
            self.reservation = Some((pas[0], width));
        }
        Ok(self.xlen.word(v))
    }

    pub fn store(&mut self, vaddr: u64, width: Width, data: u64) -> Result<(), Trap> {
        let n = width.bytes();
        if self.trap_misaligned && vaddr % n != 0 {
            return Err(Trap::new(TrapCause::StoreMisaligned, vaddr));
        }
        let pas = self.translate_range(vaddr, n, AccessType::Write)?;
        self.phys_write(&pas, data).ok_or(Trap::new(TrapCause::StoreAccessFault, vaddr))
    }

    /// Store-conditional: succeeds only on the exact reserved (address,
    /// width); the reservation is consumed either way.
    pub fn store_conditional(&mut self, vaddr: u64, width: Width, data: u64) -> Result<bool, Trap> {
        let held = self.reservation.take();
        if vaddr % width.bytes() != 0 {
            return Err(Trap::new(TrapCause::StoreMisaligned, vaddr));
        }
        let pa = self.translate(vaddr, AccessType::Write)?;
        if held != Some((pa, width)) {
            return Ok(false);
        }
        let pas: Vec<u64> = (0..width.bytes()).map(|i| pa + i).collect();
        self.phys_write(&pas, data).ok_or(Trap::new(TrapCause::StoreAccessFault, vaddr))?;
        Ok(true)
    }

    pub fn fetch_word(&self, vaddr: u64) -> Result<u32, Trap> {
        if vaddr % 4 != 0 {
            return Err(Trap::new(TrapCause::InstrMisaligned, vaddr));
        }
        let pa = self.translate(vaddr, AccessType::Fetch)?;
        self.mem.read(pa, 4).map(|v| v as u32).ok_or(Trap::new(TrapCause::InstrAccessFault, vaddr))
    }

    pub fn csr_read(&self, addr: u16) -> Result<u64, Trap> {
        self.csrs.read(addr, self.privilege)
    }

    pub fn csr_write(&mut self, addr: u16, v: u64) -> Result<(), Trap> {
        self.csrs.write(addr, v, self.privilege)
    }

    /// Answers one event against this state.
    pub fn handle(&mut self, e: &Event) -> Response {
        use ProcessorEvent::*;
        let xl = self.xlen;
        match e {
            Event::Proc(RegRead { r }) => Response::Bits(self.get_gp(*r)),
            Event::Proc(RegWrite { r, d }) => {
                self.set_gp(*r, d.value());
                Response::Unit
            }
            Event::Proc(FpRegRead { r }) => Response::Bits(BitVec::new(32, self.f[r.index()] as u64)),
            Event::Proc(FpRegWrite { r, d }) => {
                self.f[r.index()] = d.value() as u32;
                Response::Unit
            }
            Event::Proc(PcRead) => Response::Bits(xl.word(self.pc)),
            Event::Proc(PcWrite { new_pc }) => {
                self.next_pc = Some(new_pc.value() & self.mask());
                Response::Unit
            }
            Event::Proc(CsrRead { addr }) => {
                Response::Read(self.csr_read(addr.value() as u16).map(|v| xl.word(v)))
            }
            Event::Proc(CsrWrite { addr, val }) => Response::Write(self.csr_write(addr.value() as u16, val.value())),
            Event::VMem(VMemEvent::VMemRead { vaddr, offset, width, res }) => {
                let va = vaddr.add(offset.zero_extend(vaddr.width())).value() & self.mask();
                Response::Read(self.load(va, *width, *res))
            }
            Event::VMem(VMemEvent::VMemWrite { vaddr, offset, width, data, res }) => {
                let va = vaddr.add(offset.zero_extend(vaddr.width())).value() & self.mask();
                let d = data.value() & width_mask(*width);
                if *res {
                    Response::Conditional(self.store_conditional(va, *width, d))
                } else {
                    Response::Write(self.store(va, *width, d))
                }
            }
            Event::VMem(VMemEvent::VMemInstrFetch { addr }) => {
                Response::Read(self.fetch_word(addr.value() & self.mask()).map(|w| BitVec::new(32, w as u64)))
            }
            Event::PMem(PMemEvent::PMemRead { paddr, width }) => Response::Read(
                self.mem
                    .read(paddr.value(), width.bytes())
                    .map(|v| BitVec::new(width.bits(), v))
                    .ok_or(Trap::new(TrapCause::LoadAccessFault, paddr.value())),
            ),
            Event::PMem(PMemEvent::PMemWrite { paddr, width, data }) => {
                let pas: Vec<u64> = (0..width.bytes()).map(|i| paddr.value() + i).collect();
                Response::Write(
                    self.phys_write(&pas, data.value())
                        .ok_or(Trap::new(TrapCause::StoreAccessFault, paddr.value())),
                )
            }
        }
    }

    /// Trap entry, delegating to S-mode when medeleg asks for it.
    pub fn enter_trap(&mut self, t: Trap, epc: u64) {
        self.reservation = None;
        let from = self.privilege;
        let code = t.cause.code(from);
        let delegated = from != Privilege::Machine && (self.csrs.medeleg >> code) & 1 == 1;
        let c = &mut self.csrs;
        if delegated {
            c.sepc = epc;
            c.scause = code;
            c.stval = t.tval & self.xlen.mask();
            c.set_bit(mstatus::SPP, from == Privilege::Supervisor);
            c.set_bit(mstatus::SPIE, c.bit(mstatus::SIE));
            c.set_bit(mstatus::SIE, false);
            self.privilege = Privilege::Supervisor;
            self.pc = c.stvec & !3;
        } else {
            c.mepc = epc;
            c.mcause = code;
            c.mtval = t.tval & self.xlen.mask();
            c.set_mpp(from);
            c.set_bit(mstatus::MPIE, c.bit(mstatus::MIE));
            c.set_bit(mstatus::MIE, false);
            self.privilege = Privilege::Machine;
            self.pc = c.mtvec & !3;
        }
    }

    /// `mret`/`sret`. `None` when the return is illegal from the current
    /// privilege.
    fn trap_return(&mut self, level: Privilege) -> Option<()> {
        let c = &mut self.csrs;
        match level {
            Privilege::Machine => {
                if self.privilege != Privilege::Machine {
                    return None;
                }
                let to = c.mpp();
                c.set_bit(mstatus::MIE, c.bit(mstatus::MPIE));
                c.set_bit(mstatus::MPIE, true);
                c.set_mpp(Privilege::User);
                if to != Privilege::Machine {
                    c.set_bit(mstatus::MPRV, false);
                }
                self.privilege = to;
                self.pc = c.mepc & self.xlen.mask();
            }
            Privilege::Supervisor => {
                if self.privilege < Privilege::Supervisor
                    || (self.privilege == Privilege::Supervisor && c.bit(mstatus::TSR))
                {
                    return None;
                }
                let to = if c.bit(mstatus::SPP) { Privilege::Supervisor } else { Privilege::User };
                c.set_bit(mstatus::SIE, c.bit(mstatus::SPIE));
                c.set_bit(mstatus::SPIE, true);
                c.set_bit(mstatus::SPP, false);
                c.set_bit(mstatus::MPRV, false);
                self.privilege = to;
                self.pc = c.sepc & self.xlen.mask();
            }
            Privilege::User => return None,
        }
        self.reservation = None;
        Some(())
    }

    /// Applies an instruction's retirement to pc, privilege, and trap CSRs.
    fn retire(&mut self, pc: u64, word: u32, r: ExecResult) -> StepOutcome {
        let r = match r {
            ExecResult::Success | ExecResult::WaitForInterrupt if self.privilege_forbids(word) => {
                ExecResult::Fail(Trap::illegal())
            }
            r => r,
        };
        match r {
            ExecResult::Success => {
                self.pc = self.next_pc.take().unwrap_or(pc.wrapping_add(4)) & self.mask();
                self.instret += 1;
                StepOutcome::Retired
            }
            ExecResult::Fail(mut t) => {
                self.next_pc = None;
                match t.cause {
                    TrapCause::IllegalInstruction => t.tval = word as u64,
                    TrapCause::Breakpoint => t.tval = pc,
                    TrapCause::EnvironmentCall => t.tval = 0,
                    _ => {}
                }
                self.enter_trap(t, pc);
                StepOutcome::Trapped(t)
            }
            ExecResult::TrapReturn(level) => {
                self.next_pc = None;
                match self.trap_return(level) {
                    Some(()) => {
                        self.instret += 1;
                        StepOutcome::Retired
                    }
                    None => {
                        let t = Trap::new(TrapCause::IllegalInstruction, word as u64);
                        self.enter_trap(t, pc);
                        StepOutcome::Trapped(t)
                    }
                }
            }
            ExecResult::WaitForInterrupt => {
                self.pc = pc.wrapping_add(4) & self.mask();
                self.instret += 1;
                StepOutcome::Wfi
            }
        }
    }

    /// `sfence.vma` and `wfi` below M, subject to mstatus.TVM and TW. Neither
    /// touches state, so rejecting them after execution is exact.
    fn privilege_forbids(&self, word: u32) -> bool {
        if word & 0x7F != 0x73 {
            return false;
        }
        let guard = match decode(word, self.xlen) {
            Instr::SfenceVma { .. } => mstatus::TVM,
            Instr::Wfi => mstatus::TW,
            _ => return false,
        };
        match self.privilege {
            Privilege::Machine => false,
            Privilege::Supervisor => self.csrs.bit(guard),
            Privilege::User => true,
        }
    }

    /// One instruction, reporting every event with its answer to `observe`.
    pub fn step_with<F: FnMut(&Event, &Response)>(&mut self, mut observe: F) -> StepOutcome {
        let (pc, word, r) = self.drive(fetch_decode_exec(self.xlen), &mut observe);
        self.retire(pc, word, r)
    }

    pub fn step(&mut self) -> StepOutcome {
        self.step_with(|_, _| {})
    }

    /// Executes an already decoded instruction at the current pc, skipping
    /// the fetch. `word` only feeds mtval on an illegal-instruction trap.
    pub fn exec_instr(&mut self, i: Instr, word: u32) -> StepOutcome {
        let pc = self.pc;
        let t = exec(i, self.xlen).map(move |r| (pc, word, r));
        let (pc, word, r) = self.drive(t, &mut |_, _| {});
        self.retire(pc, word, r)
    }

    fn drive<R: Send + 'static>(
        &mut self,
        t: Rv<R>,
        observe: &mut dyn FnMut(&Event, &Response),
    ) -> R {
        self.next_pc = None;
        let answer = |e: &Event| {
            let r = self.handle(e);
            observe(e, &r);
            r
        };
        match t.run_with(answer, u64::MAX) {
            Ok(o) => o.returned().expect("instruction semantics is finite"),
            Err(e) => panic!("handler answered with the wrong tag: {e}"),
        }
    }

    /// Consumes a pending HTIF write: `Some(code)` for an exit request.
    fn poll_htif(&mut self) -> Option<u64> {
        if !std::mem::take(&mut self.htif_pending) {
            return None;
        }
        let t = self.tohost?;
        let v = self.mem.read(t, 8)?;
        if v == 0 {
            return None;
        }
        if v & 1 == 1 {
            return Some(v >> 1);
        }
        // Device requests other than exit are acknowledged and dropped.
        self.mem.write(t, 8, 0);
        None
    }

    /// Steps until an HTIF exit, a `wfi`, or `fuel` instructions.
    pub fn run(&mut self, fuel: u64) -> RunOutcome {
        self.run_with(fuel, |_, _| {})
    }

    pub fn run_with<F: FnMut(&Event, &Response)>(&mut self, fuel: u64, mut observe: F) -> RunOutcome {
        self.run_loop(fuel, |s| s.step_with(&mut observe))
    }

    /// One instruction whose events are answered by `answer` instead of the
    /// built-in handler. Retirement (pc, traps) still updates this state.
    pub fn step_answering<F>(&mut self, mut answer: F) -> StepOutcome
    where
        F: FnMut(&mut MachineState, &Event) -> Response,
    {
        self.next_pc = None;
        let t = fetch_decode_exec(self.xlen);
        let (pc, word, r) = match t.run_with(|e| answer(self, e), u64::MAX) {
            Ok(o) => o.returned().expect("instruction semantics is finite"),
            Err(e) => panic!("answer with the wrong tag: {e}"),
        };
        self.retire(pc, word, r)
    }

    pub fn run_answering<F>(&mut self, fuel: u64, mut answer: F) -> RunOutcome
    where
        F: FnMut(&mut MachineState, &Event) -> Response,
    {
        self.run_loop(fuel, |s| s.step_answering(&mut answer))
    }

    fn run_loop(&mut self, fuel: u64, mut step: impl FnMut(&mut Self) -> StepOutcome) -> RunOutcome {
        for _ in 0..fuel {
            let o = step(self);
            if let Some(code) = self.poll_htif() {
                return RunOutcome::HtifExit(code);
            }
            if o == StepOutcome::Wfi {
                return RunOutcome::Wfi;
            }
        }
        RunOutcome::OutOfFuel
    }
}

fn width_mask(w: Width) -> u64 {
    if w == Width::Double {
        u64::MAX
    } else {
        (1 << w.bits()) - 1
    }
}

/// PCRead, instruction fetch, decode, and the instruction's semantics, as
/// one computation returning (pc, instruction word, result).
pub fn fetch_decode_exec(xlen: Xlen) -> Rv<(u64, u32, ExecResult)> {
    read_pc().bind(move |pc| {
        let pcv = pc.value();
        fetch(pc).bind(move |r| match r {
            Ok(word) => {
                let w = word.value() as u32;
                exec(decode(w, xlen), xlen).map(move |res| (pcv, w, res))
            }
            Err(t) => Computation::ret((pcv, 0, ExecResult::Fail(t))),
        })
    })
}

/// State-monad form of [`MachineState::handle`] for use with `interp_state`.
pub fn combined_handler(e: &Event, s: &mut MachineState) -> Option<Response> {
    Some(s.handle(e))
}

/// Functional form of [`MachineState::step`].
pub fn step(mut s: MachineState) -> (MachineState, StepOutcome) {
    let o = s.step();
    (s, o)
}

/// Functional form of [`MachineState::run`].
pub fn run(mut s: MachineState, fuel: u64) -> (MachineState, RunOutcome) {
    let o = s.run(fuel);
    (s, o)
}
