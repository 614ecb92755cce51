//! Sparse little-endian physical memory in 4 KiB pages.

use std::collections::BTreeMap;

use crate::vmem::{PAGE_SHIFT, PAGE_SIZE};

#[derive(Clone, PartialEq, Eq, Default)]
pub struct Memory {
    pages: BTreeMap<u64, Box<[u8; PAGE_SIZE as usize]>>,
}

impl std::fmt::Debug for Memory {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Memory").field("pages", &self.pages.len()).finish()
    }
}

fn page_of(addr: u64) -> u64 {
    addr >> PAGE_SHIFT
}

fn offset_of(addr: u64) -> usize {
    (addr & (PAGE_SIZE - 1)) as usize
}

impl Memory {
    pub fn new() -> Memory {
        Memory::default()
    }

    /// Maps zero-filled pages covering `[base, base + len)`. Pages already
    /// mapped keep their contents.
    pub fn map(&mut self, base: u64, len: u64) {
        if len == 0 {
            return;
        }
        let last = page_of(base.saturating_add(len - 1));
        for p in page_of(base)..=last {
            self.pages.entry(p).or_insert_with(|| Box::new([0; PAGE_SIZE as usize]));
        }
    }

    pub fn is_mapped(&self, addr: u64) -> bool {
        self.pages.contains_key(&page_of(addr))
    }

    pub fn mapped_pages(&self) -> impl Iterator<Item = u64> + '_ {
        self.pages.keys().map(|p| p << PAGE_SHIFT)
    }

    pub fn read_byte(&self, addr: u64) -> Option<u8> {
        self.pages.get(&page_of(addr)).map(|p| p[offset_of(addr)])
    }

    pub fn write_byte(&mut self, addr: u64, v: u8) -> Option<()> {
        self.pages.get_mut(&page_of(addr)).map(|p| p[offset_of(addr)] = v)
    }

    /// Little-endian read of `n <= 8` bytes; `None` if any byte is unmapped.
    pub fn read(&self, addr: u64, n: u64) -> Option<u64> {
        let off = offset_of(addr);
        if off + n as usize <= PAGE_SIZE as usize {
            let p = self.pages.get(&page_of(addr))?;
            let mut buf = [0u8; 8];
            buf[..n as usize].copy_from_slice(&p[off..off + n as usize]);
            return Some(u64::from_le_bytes(buf));
        }
        let mut v = 0u64;
        for i in 0..n {
            v |= (self.read_byte(addr.wrapping_add(i))? as u64) << (8 * i);
        }
        Some(v)
    }

    /// Little-endian write of the low `n <= 8` bytes of `v`. Nothing is
    /// written unless every byte is mapped.
    pub fn write(&mut self, addr: u64, n: u64, v: u64) -> Option<()> {
        if (0..n).any(|i| !self.is_mapped(addr.wrapping_add(i))) {
            return None;
        }
        for i in 0..n {
            self.write_byte(addr.wrapping_add(i), (v >> (8 * i)) as u8)?;
        }
        Some(())
    }

    /// Maps and fills `[addr, addr + bytes.len())`.
    pub fn load(&mut self, addr: u64, bytes: &[u8]) {
        self.map(addr, bytes.len() as u64);
        for (i, b) in bytes.iter().enumerate() {
            self.write_byte(addr + i as u64, *b).expect("just mapped");
        }
    }

    pub fn read_bytes(&self, addr: u64, len: usize) -> Option<Vec<u8>> {
        (0..len as u64).map(|i| self.read_byte(addr + i)).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn little_endian_and_page_crossing() {
        let mut m = Memory::new();
        m.map(0x1000, 0x2000);
        m.write(0x1FFE, 4, 0xAABBCCDD).unwrap();
        assert_eq!(m.read_byte(0x1FFE), Some(0xDD));
        assert_eq!(m.read_byte(0x2001), Some(0xAA));
        assert_eq!(m.read(0x1FFE, 4), Some(0xAABBCCDD));
        assert_eq!(m.read(0x1FFF, 2), Some(0xBBCC));
    }

    #[test]
    fn unmapped_access_fails_without_partial_write() {
        let mut m = Memory::new();
        m.map(0x1000, 0x1000);
        assert_eq!(m.read(0x3000, 4), None);
        assert_eq!(m.write(0x1FFE, 4, u64::MAX), None);
        assert_eq!(m.read(0x1FFE, 2), Some(0));
    }
}
