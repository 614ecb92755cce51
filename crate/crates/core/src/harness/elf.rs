//! ELF images for bare-metal RISC-V programs.

use std::collections::BTreeMap;

use goblin::elf::{header, program_header, Elf};
use serde::Serialize;
use thiserror::Error;

use crate::effects::Xlen;
use crate::machine::MachineState;

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct Segment {
    pub paddr: u64,
    /// File contents padded with zeros to the segment's memory size.
    pub bytes: Vec<u8>,
    pub executable: bool,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct LoadedImage {
    pub xlen: Xlen,
    pub entry: u64,
    pub segments: Vec<Segment>,
    pub symbols: BTreeMap<String, u64>,
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum LoadError {
    #[error("malformed ELF: {0}")]
    Malformed(String),
    #[error("big-endian ELF images are not supported")]
    BigEndian,
    #[error("not a RISC-V image (e_machine {0})")]
    NotRiscv(u16),
    #[error("not an executable (e_type {0})")]
    NotExecutable(u16),
    #[error("segments at {0:#x} and {1:#x} overlap")]
    Overlap(u64, u64),
}

pub fn load_elf(bytes: &[u8]) -> Result<LoadedImage, LoadError> {
    let elf = Elf::parse(bytes).map_err(|e| LoadError::Malformed(e.to_string()))?;
    if !elf.little_endian {
        return Err(LoadError::BigEndian);
    }
    if elf.header.e_machine != header::EM_RISCV {
        return Err(LoadError::NotRiscv(elf.header.e_machine));
    }
    if elf.header.e_type != header::ET_EXEC {
        return Err(LoadError::NotExecutable(elf.header.e_type));
    }
    let xlen = if elf.is_64 { Xlen::Rv64 } else { Xlen::Rv32 };

    let mut segments = Vec::new();
    for ph in elf.program_headers.iter().filter(|p| p.p_type == program_header::PT_LOAD) {
        if ph.p_memsz == 0 {
            continue;
        }
        let start = ph.p_offset as usize;
        let end = start
            .checked_add(ph.p_filesz as usize)
            .filter(|e| *e <= bytes.len())
            .ok_or_else(|| LoadError::Malformed(format!("segment at {:#x} extends past end of file", ph.p_paddr)))?;
        if ph.p_filesz > ph.p_memsz {
            return Err(LoadError::Malformed(format!("segment at {:#x} has filesz > memsz", ph.p_paddr)));
        }
        let mut data = bytes[start..end].to_vec();
        data.resize(ph.p_memsz as usize, 0);
        segments.push(Segment { paddr: ph.p_paddr, bytes: data, executable: ph.is_executable() });
    }
    segments.sort_by_key(|s| s.paddr);
    for w in segments.windows(2) {
        if w[0].paddr + w[0].bytes.len() as u64 > w[1].paddr {
            return Err(LoadError::Overlap(w[0].paddr, w[1].paddr));
        }
    }

    let mut symbols = BTreeMap::new();
    for sym in elf.syms.iter() {
        if let Some(name) = elf.strtab.get_at(sym.st_name) {
            if !name.is_empty() {
                symbols.insert(name.to_string(), sym.st_value);
            }
        }
    }
    Ok(LoadedImage { xlen, entry: elf.entry, segments, symbols })
}

impl LoadedImage {
    pub fn tohost(&self) -> Option<u64> {
        self.symbols.get("tohost").copied()
    }

    /// Reset machine with every segment mapped, pc at the entry point, and
    /// HTIF wired to `tohost` when the symbol exists.
    pub fn machine(&self) -> MachineState {
        let mut s = MachineState::new(self.xlen);
        for seg in &self.segments {
            s.mem.load(seg.paddr, &seg.bytes);
        }
        s.pc = self.entry;
        s.tohost = self.tohost();
        s
    }

    /// Nearest symbol at exactly `addr`, preferring non-local names.
    pub fn symbol_at(&self, addr: u64) -> Option<&str> {
        let mut best: Option<&str> = None;
        for (name, v) in &self.symbols {
            if *v == addr && (best.is_none() || best.is_some_and(|b| b.starts_with('.'))) {
                best = Some(name);
            }
        }
        best
    }
}
