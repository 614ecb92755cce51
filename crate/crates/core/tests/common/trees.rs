//! Random finite computation trees over a toy event vocabulary.

use rand::Rng;
use rvfx_core::effects::{Computation, Effect};
use rvfx_core::equiv::{check_eutt, EuttConfig, Verdict};

#[derive(Clone, Debug, PartialEq)]
pub struct Ask(pub u8);

impl Effect for Ask {
    type Answer = u64;
    fn accepts(&self, _: &u64) -> bool {
        true
    }
}

/// A finite computation tree; `Vis` branches on the answer modulo its arity.
#[derive(Clone, Debug)]
pub enum Prog {
    Ret(u8),
    Tau(Box<Prog>),
    Vis(u8, Vec<Prog>),
}

pub fn random_prog<R: Rng>(rng: &mut R, depth: u32) -> Prog {
    if depth == 0 || rng.gen_ratio(1, 4) {
        return Prog::Ret(rng.gen_range(0..4));
    }
    if rng.gen_bool(0.4) {
        Prog::Tau(Box::new(random_prog(rng, depth - 1)))
    } else {
        let arity = rng.gen_range(1..3);
        Prog::Vis(rng.gen_range(0..3), (0..arity).map(|_| random_prog(rng, depth - 1)).collect())
    }
}

pub fn build(p: &Prog) -> Computation<Ask, u8> {
    match p.clone() {
        Prog::Ret(v) => Computation::ret(v),
        Prog::Tau(k) => Computation::tau(build(&k)),
        Prog::Vis(e, ks) => Computation::vis(Ask(e), move |a: u64| build(&ks[a as usize % ks.len()])),
    }
}

/// Inserts `k` taus in front of every node whose index along a preorder walk
/// is selected by `mask`.
pub fn pad(p: &Prog, k: usize, mask: u64, at: &mut u32) -> Prog {
    let here = mask >> (*at % 64) & 1 == 1;
    *at += 1;
    let inner = match p {
        Prog::Ret(v) => Prog::Ret(*v),
        Prog::Tau(q) => Prog::Tau(Box::new(pad(q, k, mask, at))),
        Prog::Vis(e, ks) => Prog::Vis(*e, ks.iter().map(|q| pad(q, k, mask, at)).collect()),
    };
    if !here {
        return inner;
    }
    (0..k).fold(inner, |q, _| Prog::Tau(Box::new(q)))
}

pub fn env(e: &Ask) -> u64 {
    (e.0 as u64).wrapping_mul(7) + 1
}

pub fn eutt(a: Computation<Ask, u8>, b: Computation<Ask, u8>) -> Verdict {
    check_eutt(a, b, env, &EuttConfig::equality().with_fuel(64, 1000)).unwrap()
}
