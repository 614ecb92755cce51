//! Control and status registers with their access rules and WARL masks.

use serde::{Deserialize, Serialize};

use crate::effects::{Privilege, Trap, Xlen};
use crate::isa::csr::{self, *};

pub mod mstatus {
    pub const SIE: u64 = 1 << 1;
    pub const MIE: u64 = 1 << 3;
    pub const SPIE: u64 = 1 << 5;
    pub const MPIE: u64 = 1 << 7;
    pub const SPP: u64 = 1 << 8;
    pub const MPP_SHIFT: u32 = 11;
    pub const MPP: u64 = 3 << MPP_SHIFT;
    pub const FS: u64 = 3 << 13;
    pub const MPRV: u64 = 1 << 17;
    pub const SUM: u64 = 1 << 18;
    pub const MXR: u64 = 1 << 19;
    pub const TVM: u64 = 1 << 20;
    pub const TW: u64 = 1 << 21;
    pub const TSR: u64 = 1 << 22;
    pub const UXL: u64 = 3 << 32;
    pub const SXL: u64 = 3 << 34;

    pub const WRITABLE: u64 = SIE | MIE | SPIE | MPIE | SPP | MPP | FS | MPRV | SUM | MXR | TVM | TW | TSR;
    pub const SSTATUS: u64 = SIE | SPIE | SPP | FS | SUM | MXR;
}

/// Exceptions that may be delegated to S-mode: everything but ecall from M.
const MEDELEG_MASK: u64 = 0xB3FF;
const S_INTERRUPTS: u64 = 0x222;
const M_AND_S_INTERRUPTS: u64 = 0xAAA;

pub fn misa(xlen: Xlen) -> u64 {
    // I, M, A, F, S, U
    let ext = 1 << 8 | 1 << 12 | 1 << 0 | 1 << 5 | 1 << 18 | 1 << 20;
    match xlen {
        Xlen::Rv32 => 1 << 30 | ext,
        Xlen::Rv64 => 2 << 62 | ext,
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct CsrFile {
    pub xlen: Xlen,
    pub mstatus: u64,
    pub medeleg: u64,
    pub mideleg: u64,
    pub mie: u64,
    pub mip: u64,
    pub mtvec: u64,
    pub mcounteren: u64,
    pub mscratch: u64,
    pub mepc: u64,
    pub mcause: u64,
    pub mtval: u64,
    pub stvec: u64,
    pub scounteren: u64,
    pub sscratch: u64,
    pub sepc: u64,
    pub scause: u64,
    pub stval: u64,
    pub satp: u64,
    pub fflags: u8,
    pub frm: u8,
    pub mhartid: u64,
}

impl CsrFile {
    pub fn new(xlen: Xlen) -> CsrFile {
        CsrFile {
            xlen,
            mstatus: 0,
            medeleg: 0,
            mideleg: 0,
            mie: 0,
            mip: 0,
            mtvec: 0,
            mcounteren: 0,
            mscratch: 0,
            mepc: 0,
            mcause: 0,
            mtval: 0,
            stvec: 0,
            scounteren: 0,
            sscratch: 0,
            sepc: 0,
            scause: 0,
            stval: 0,
            satp: 0,
            fflags: 0,
            frm: 0,
            mhartid: 0,
        }
    }

    fn mask(&self) -> u64 {
        self.xlen.mask()
    }

    /// mstatus as software sees it: stored bits plus SD and the fixed XLEN
    /// fields.
    pub fn mstatus_view(&self) -> u64 {
        let mut v = self.mstatus;
        let dirty = v & mstatus::FS == mstatus::FS;
        match self.xlen {
            Xlen::Rv32 => {
                if dirty {
                    v |= 1 << 31;
                }
            }
            Xlen::Rv64 => {
                v |= 2 << 32 | 2 << 34;
                if dirty {
                    v |= 1 << 63;
                }
            }
        }
        v & self.mask()
    }

    fn sstatus_view(&self) -> u64 {
        let full = self.mstatus_view();
        let sd = match self.xlen {
            Xlen::Rv32 => 1 << 31,
            Xlen::Rv64 => 1 << 63 | mstatus::UXL,
        };
        full & (mstatus::SSTATUS | sd)
    }

    fn write_mstatus(&mut self, v: u64, writable: u64) {
        let mut new = (self.mstatus & !writable) | (v & writable);
        // MPP is WARL over {U, S, M}; the reserved value 2 keeps the old one.
        if (new & mstatus::MPP) >> mstatus::MPP_SHIFT == 2 {
            new = (new & !mstatus::MPP) | (self.mstatus & mstatus::MPP);
        }
        self.mstatus = new;
    }

    fn check_access(&self, addr: u16, privilege: Privilege) -> Result<(), Trap> {
        if privilege.bits() < csr::min_privilege(addr) {
            return Err(Trap::illegal());
        }
        if addr == SATP && privilege == Privilege::Supervisor && self.mstatus & mstatus::TVM != 0 {
            return Err(Trap::illegal());
        }
        Ok(())
    }

    pub fn read(&self, addr: u16, privilege: Privilege) -> Result<u64, Trap> {
        self.check_access(addr, privilege)?;
        let v = match addr {
            FFLAGS => self.fflags as u64,
            FRM => self.frm as u64,
            FCSR => (self.frm as u64) << 5 | self.fflags as u64,
            SSTATUS => self.sstatus_view(),
            SIE => self.mie & S_INTERRUPTS,
            STVEC => self.stvec,
            SCOUNTEREN => self.scounteren,
            SSCRATCH => self.sscratch,
            SEPC => self.sepc,
            SCAUSE => self.scause,
            STVAL => self.stval,
            SIP => self.mip & S_INTERRUPTS,
            SATP => self.satp,
            MVENDORID | MARCHID | MIMPID => 0,
            MHARTID => self.mhartid,
            MSTATUS => self.mstatus_view(),
            MISA => misa(self.xlen),
            MEDELEG => self.medeleg,
            MIDELEG => self.mideleg,
            MIE => self.mie,
            MTVEC => self.mtvec,
            MCOUNTEREN => self.mcounteren,
            MSCRATCH => self.mscratch,
            MEPC => self.mepc,
            MCAUSE => self.mcause,
            MTVAL => self.mtval,
            MIP => self.mip,
            _ => return Err(Trap::illegal()),
        };
        Ok(v & self.mask())
    }

    pub fn write(&mut self, addr: u16, v: u64, privilege: Privilege) -> Result<(), Trap> {
        self.check_access(addr, privilege)?;
        if csr::is_read_only(addr) {
            return Err(Trap::illegal());
        }
        let v = v & self.mask();
        match addr {
            FFLAGS => self.fflags = (v & 0x1F) as u8,
            FRM => self.frm = (v & 7) as u8,
            FCSR => {
                self.fflags = (v & 0x1F) as u8;
                self.frm = ((v >> 5) & 7) as u8;
            }
            SSTATUS => self.write_mstatus(v, mstatus::SSTATUS),
            SIE => self.mie = (self.mie & !S_INTERRUPTS) | (v & S_INTERRUPTS),
            STVEC => self.stvec = v & !2,
            SCOUNTEREN => self.scounteren = v & 0xFFFF_FFFF,
            SSCRATCH => self.sscratch = v,
            SEPC => self.sepc = v & !3,
            SCAUSE => self.scause = v,
            STVAL => self.stval = v,
            SIP => self.mip = (self.mip & !2) | (v & 2),
            SATP => self.write_satp(v),
            MSTATUS => self.write_mstatus(v, mstatus::WRITABLE),
            MISA => {}
            MEDELEG => self.medeleg = v & MEDELEG_MASK,
            MIDELEG => self.mideleg = v & S_INTERRUPTS,
            MIE => self.mie = v & M_AND_S_INTERRUPTS,
            MTVEC => self.mtvec = v & !2,
            MCOUNTEREN => self.mcounteren = v & 0xFFFF_FFFF,
            MSCRATCH => self.mscratch = v,
            MEPC => self.mepc = v & !3,
            MCAUSE => self.mcause = v,
            MTVAL => self.mtval = v,
            MIP => self.mip = (self.mip & !S_INTERRUPTS) | (v & S_INTERRUPTS),
            _ => return Err(Trap::illegal()),
        }
        Ok(())
    }

    fn write_satp(&mut self, v: u64) {
        match self.xlen {
            Xlen::Rv32 => self.satp = v & (1 << 31 | ((1 << 22) - 1)),
            Xlen::Rv64 => {
                if matches!(v >> 60, 0 | 8 | 9 | 10) {
                    self.satp = v & (0xF << 60 | ((1 << 44) - 1));
                }
            }
        }
    }

    pub fn mpp(&self) -> Privilege {
        Privilege::from_bits((self.mstatus & mstatus::MPP) >> mstatus::MPP_SHIFT).unwrap_or(Privilege::User)
    }

    pub fn set_mpp(&mut self, p: Privilege) {
        self.mstatus = (self.mstatus & !mstatus::MPP) | p.bits() << mstatus::MPP_SHIFT;
    }

    pub fn bit(&self, b: u64) -> bool {
        self.mstatus & b != 0
    }

    pub fn set_bit(&mut self, b: u64, on: bool) {
        if on {
            self.mstatus |= b;
        } else {
            self.mstatus &= !b;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn fcsr_aliases_frm_and_fflags() {
        let mut c = CsrFile::new(Xlen::Rv64);
        c.write(FCSR, 0xFF, Privilege::Machine).unwrap();
        assert_eq!(c.read(FFLAGS, Privilege::User), Ok(0x1F));
        assert_eq!(c.read(FRM, Privilege::User), Ok(7));
        c.write(FRM, 2, Privilege::User).unwrap();
        c.write(FFLAGS, 0x11, Privilege::User).unwrap();
        assert_eq!(c.read(FCSR, Privilege::User), Ok(2 << 5 | 0x11));
    }

    #[test]
    fn access_rules() {
        let mut c = CsrFile::new(Xlen::Rv32);
        assert_eq!(c.read(MHARTID, Privilege::Machine), Ok(0));
        assert!(c.write(MHARTID, 1, Privilege::Machine).is_err());
        assert!(c.read(MSTATUS, Privilege::Supervisor).is_err());
        assert!(c.read(SSTATUS, Privilege::User).is_err());
        assert!(c.read(PMPADDR0, Privilege::Machine).is_err());
        assert!(c.read(CYCLE, Privilege::Machine).is_err());
    }

    #[test]
    fn mstatus_warl_fields() {
        let mut c = CsrFile::new(Xlen::Rv64);
        c.write(MSTATUS, u64::MAX, Privilege::Machine).unwrap();
        let v = c.read(MSTATUS, Privilege::Machine).unwrap();
        assert_eq!(v & mstatus::MPP, mstatus::MPP);
        assert_eq!((v >> 32) & 0xF, 0xA);
        assert_eq!(v >> 63, 1);
        c.write(MSTATUS, 2 << 11, Privilege::Machine).unwrap();
        assert_eq!(c.mpp(), Privilege::Machine);
        let s = c.read(SSTATUS, Privilege::Supervisor).unwrap();
        assert_eq!(s & mstatus::MPP, 0);
    }

    #[test]
    fn satp_ignores_unsupported_modes() {
        let mut c = CsrFile::new(Xlen::Rv64);
        c.write(SATP, 8 << 60 | 5, Privilege::Machine).unwrap();
        c.write(SATP, 3 << 60 | 7, Privilege::Machine).unwrap();
        assert_eq!(c.satp, 8 << 60 | 5);
    }
}
