//! Random hand-built page tables and a brute-force reference walker: the
//! reference flattens every table reachable from the root into a prefix map
//! by scanning memory, then answers a lookup from that map alone.

use std::collections::{BTreeMap, HashMap};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use rvfx_core::effects::{Privilege, Trap, TrapCause};
use rvfx_core::vmem::{pte_bits::*, translate, AccessType, TranslationMode, WalkCtx};

pub const TABLES_PER_MODE: usize = 10_000;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
enum Injected {
    None,
    MissingTable,
    InvalidPte,
    WriteOnly,
    Reserved,
    NonLeafFlags,
    NonLeafAtBottom,
    Permission,
    Superpage,
    NonCanonical,
}

#[derive(Clone, Copy, Debug)]
enum Node {
    Leaf { level: u32, pte: u64 },
    Fault,
}

struct Case {
    mode: TranslationMode,
    mem: HashMap<u64, u64>,
    ctx: WalkCtx,
    vaddr: u64,
    acc: AccessType,
    injected: Injected,
}

fn ppn_limit(mode: TranslationMode) -> u64 {
    match mode {
        TranslationMode::Sv32 => 1 << 22,
        _ => 1 << 44,
    }
}

fn entry_size(mode: TranslationMode) -> u64 {
    if mode == TranslationMode::Sv32 {
        4
    } else {
        8
    }
}

fn index_bits(mode: TranslationMode) -> u32 {
    if mode == TranslationMode::Sv32 {
        10
    } else {
        9
    }
}

fn depth(mode: TranslationMode) -> u32 {
    match mode {
        TranslationMode::Sv32 => 2,
        TranslationMode::Sv39 => 3,
        TranslationMode::Sv48 => 4,
        TranslationMode::Sv57 => 5,
        TranslationMode::Bare => unreachable!(),
    }
}

fn va_width(mode: TranslationMode) -> u32 {
    12 + depth(mode) * index_bits(mode)
}

fn random_ppn(rng: &mut ChaCha8Rng, mode: TranslationMode) -> u64 {
    // Keep tables in a small window so random noise entries can collide.
    rng.gen_range(1..(ppn_limit(mode).min(1 << 16)))
}

fn gen_case(rng: &mut ChaCha8Rng, mode: TranslationMode) -> Case {
    let levels = depth(mode);
    let bits = index_bits(mode);
    let esz = entry_size(mode);
    let mut mem = HashMap::new();
    let root = random_ppn(rng, mode);

    let injected = match rng.gen_range(0..20) {
        0 => Injected::MissingTable,
        1 => Injected::InvalidPte,
        2 => Injected::WriteOnly,
        3 if mode != TranslationMode::Sv32 => Injected::Reserved,
        4 => Injected::NonLeafFlags,
        5 => Injected::NonLeafAtBottom,
        6 | 7 => Injected::Permission,
        8 => Injected::Superpage,
        9 if mode != TranslationMode::Sv32 => Injected::NonCanonical,
        _ => Injected::None,
    };

    let va_bits = va_width(mode);
    let mut vaddr = rng.gen::<u64>() & ((1u64 << va_bits) - 1);
    if mode != TranslationMode::Sv32 && (vaddr >> (va_bits - 1)) & 1 == 1 {
        vaddr |= !0u64 << va_bits;
    }
    if injected == Injected::NonCanonical {
        vaddr ^= 1 << rng.gen_range(va_bits..64);
    }

    let leaf_level = rng.gen_range(0..levels);
    let fault_level = rng.gen_range(leaf_level..levels);
    let mut table = root;
    let mut level = levels - 1;
    loop {
        let idx = (vaddr >> (12 + level * bits)) & ((1 << bits) - 1);
        let addr = table * 4096 + idx * esz;
        let inject_here = level == fault_level;
        let is_leaf_level = level == leaf_level && injected != Injected::NonLeafAtBottom;
        if inject_here && injected == Injected::MissingTable {
            break;
        }
        if is_leaf_level {
            let mut pte = V;
            let mut ppn = rng.gen_range(0..ppn_limit(mode));
            let align = level * bits;
            if injected == Injected::Superpage && level > 0 {
                ppn |= 1 << rng.gen_range(0..align);
            } else {
                ppn &= !((1u64 << align) - 1);
            }
            if injected == Injected::Permission {
                for f in [R, W, X, U, A, D] {
                    if rng.gen_bool(0.5) {
                        pte |= f;
                    }
                }
                if pte & (R | X) == 0 {
                    pte |= X;
                }
            } else {
                pte |= R | W | X | A | D;
                if rng.gen_bool(0.5) {
                    pte |= U;
                }
            }
            if inject_here {
                match injected {
                    Injected::InvalidPte => pte &= !V,
                    Injected::WriteOnly => pte = (pte & !(R | X)) | W,
                    Injected::Reserved => pte |= 1 << rng.gen_range(54..64),
                    _ => {}
                }
            }
            mem.insert(addr, pte | ppn << 10);
            break;
        }
        let next = random_ppn(rng, mode);
        let mut pte = V | next << 10;
        if rng.gen_bool(0.3) {
            pte |= G;
        }
        if inject_here {
            match injected {
                Injected::InvalidPte => pte &= !V,
                Injected::WriteOnly => pte |= W,
                Injected::Reserved => pte |= 1 << rng.gen_range(54..64),
                Injected::NonLeafFlags => pte |= [A, D, U][rng.gen_range(0..3)],
                _ => {}
            }
        }
        mem.insert(addr, pte);
        if level == 0 {
            break;
        }
        table = next;
        level -= 1;
    }

    // Unrelated entries scattered through the same tables and elsewhere.
    let keys: Vec<u64> = mem.keys().copied().collect();
    for _ in 0..rng.gen_range(0..6) {
        let page = if !keys.is_empty() && rng.gen_bool(0.5) { keys[rng.gen_range(0..keys.len())] / 4096 } else { random_ppn(rng, mode) };
        let addr = page * 4096 + rng.gen_range(0..4096 / esz) * esz;
        mem.entry(addr).or_insert_with(|| rng.gen::<u64>() & if esz == 4 { 0xFFFF_FFFF } else { u64::MAX });
    }

    let acc = [AccessType::Read, AccessType::Write, AccessType::Fetch][rng.gen_range(0..3)];
    let privilege = if rng.gen_bool(0.5) { Privilege::Supervisor } else { Privilege::User };
    let ctx = WalkCtx { mode, root_ppn: root, privilege, sum: rng.gen_bool(0.5), mxr: rng.gen_bool(0.5) };
    Case { mode, mem, ctx, vaddr, acc, injected }
}

/// Flattens every table reachable from `table` into `(level, va prefix)` keys.
fn flatten(
    mode: TranslationMode,
    mem: &HashMap<u64, u64>,
    table: u64,
    level: u32,
    prefix: u64,
    out: &mut BTreeMap<(u32, u64), Node>,
) {
    let bits = index_bits(mode);
    let esz = entry_size(mode);
    let lo = table * 4096;
    let mut present: Vec<(u64, u64)> = mem
        .iter()
        .filter(|(a, _)| **a >= lo && **a < lo + 4096 && (**a - lo) % esz == 0)
        .map(|(a, v)| ((*a - lo) / esz, *v))
        .collect();
    present.sort();
    for (idx, raw) in present {
        let key = (level, prefix << bits | idx);
        let v = raw & 1 == 1;
        let r = raw & 2 != 0;
        let w = raw & 4 != 0;
        let x = raw & 8 != 0;
        let high = if esz == 8 { raw >> 54 } else { 0 };
        if !v || (w && !r) || high != 0 {
            out.insert(key, Node::Fault);
        } else if r || x {
            out.insert(key, Node::Leaf { level, pte: raw });
        } else if level == 0 || raw & (A | D | U) != 0 {
            out.insert(key, Node::Fault);
        } else {
            let ppn = (raw >> 10) & (ppn_limit(mode) - 1);
            flatten(mode, mem, ppn, level - 1, prefix << bits | idx, out);
        }
    }
}

fn reference(case: &Case) -> Result<u64, TrapCause> {
    let mode = case.mode;
    let pf = match case.acc {
        AccessType::Read => TrapCause::LoadPageFault,
        AccessType::Write => TrapCause::StorePageFault,
        AccessType::Fetch => TrapCause::InstrPageFault,
    };
    let va_bits = va_width(mode);
    let va = case.vaddr;
    let sext = if mode == TranslationMode::Sv32 {
        va & 0xFFFF_FFFF
    } else {
        (((va << (64 - va_bits)) as i64) >> (64 - va_bits)) as u64
    };
    if sext != va {
        return Err(pf);
    }
    let levels = depth(mode);
    let mut map = BTreeMap::new();
    flatten(mode, &case.mem, case.ctx.root_ppn, levels - 1, 0, &mut map);
    let vpn_all = (va & ((1u64 << va_bits) - 1)) >> 12;
    let bits = index_bits(mode);
    let node = (0..levels)
        .rev()
        .find_map(|l| map.get(&(l, vpn_all >> (l * bits))).copied())
        .unwrap_or(Node::Fault);
    let (level, pte) = match node {
        Node::Fault => return Err(pf),
        Node::Leaf { level, pte } => (level, pte),
    };
    let has = |f: u64| pte & f != 0;
    let user_page = has(U);
    let priv_ok = match case.ctx.privilege {
        Privilege::User => user_page,
        Privilege::Supervisor => !user_page || (case.ctx.sum && case.acc != AccessType::Fetch),
        Privilege::Machine => true,
    };
    let kind_ok = match case.acc {
        AccessType::Fetch => has(X),
        AccessType::Read => has(R) || (case.ctx.mxr && has(X)),
        AccessType::Write => has(W) && has(D),
    };
    if !priv_ok || !kind_ok || !has(A) {
        return Err(pf);
    }
    let page_bytes = 4096u64 << (level * bits);
    let base = ((pte >> 10) & (ppn_limit(mode) - 1)) * 4096;
    if base % page_bytes != 0 {
        return Err(pf);
    }
    Ok(base + va % page_bytes)
}

/// `tables` random tables per paged mode, compared with the reference.
/// Also requires every fault class and every leaf level to occur. Returns
/// the number of walks checked.
pub fn check_walks(tables: usize, seed: u64) -> Result<usize, String> {
    let mut total = 0;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut coverage: BTreeMap<(String, Injected), usize> = BTreeMap::new();
    let mut leaf_levels: BTreeMap<(String, u32), usize> = BTreeMap::new();
    for mode in TranslationMode::PAGED {
        for n in 0..tables {
            let case = gen_case(&mut rng, mode);
            let mut reads = 0u32;
            let mut sizes_ok = true;
            let got = translate(case.ctx, case.vaddr, case.acc, |a, w| {
                reads += 1;
                sizes_ok &= w.bytes() == entry_size(mode);
                case.mem.get(&a).copied()
            });
            let want = reference(&case);
            let where_ = || {
                format!("{mode:?} case {n}: va={:#x} acc={:?} ctx={:?} mem={:x?}", case.vaddr, case.acc, case.ctx, case.mem)
            };
            if !sizes_ok {
                return Err(format!("{}: PTE read of the wrong width", where_()));
            }
            if let Err(t) = got {
                if t.tval != case.vaddr {
                    return Err(format!("{}: tval {:#x}", where_(), t.tval));
                }
            }
            let got_c = got.map_err(|t: Trap| t.cause);
            if got_c != want {
                return Err(format!("{}: walk {got_c:x?} reference {want:x?}", where_()));
            }
            if reads > depth(mode) {
                return Err(format!("{}: {reads} PTE reads", where_()));
            }
            total += 1;
            *coverage.entry((format!("{mode:?}"), case.injected)).or_default() += 1;
            if got.is_ok() {
                *leaf_levels.entry((format!("{mode:?}"), depth(mode) - reads)).or_default() += 1;
            }
        }
    }
    for mode in TranslationMode::PAGED {
        let m = format!("{mode:?}");
        for inj in [
            Injected::None,
            Injected::MissingTable,
            Injected::InvalidPte,
            Injected::WriteOnly,
            Injected::NonLeafFlags,
            Injected::NonLeafAtBottom,
            Injected::Permission,
            Injected::Superpage,
        ] {
            if coverage.get(&(m.clone(), inj)).copied().unwrap_or(0) == 0 {
                return Err(format!("{m}: no {inj:?} cases"));
            }
        }
        for level in 0..depth(mode) {
            if leaf_levels.get(&(m.clone(), level)).copied().unwrap_or(0) == 0 {
                return Err(format!("{m}: no leaf at level {level}"));
            }
        }
    }
    Ok(total)
}
