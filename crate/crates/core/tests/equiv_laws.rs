//! Algebraic laws of the bounded equivalence checker on random finite
//! computations.

mod common;

use common::trees::{build, env, eutt, pad, Ask, Prog};
use proptest::prelude::*;

use rvfx_core::effects::{read_reg, Computation, Reg, Response};
use rvfx_core::equiv::{check_eutt, EuttConfig, Verdict};
use rvfx_core::BitVec;

fn prog() -> impl Strategy<Value = Prog> {
    let leaf = (0u8..4).prop_map(Prog::Ret);
    leaf.prop_recursive(5, 40, 3, |inner| {
        prop_oneof![
            inner.clone().prop_map(|p| Prog::Tau(Box::new(p))),
            ((0u8..3), prop::collection::vec(inner, 1..3)).prop_map(|(e, ks)| Prog::Vis(e, ks)),
        ]
    })
}

proptest! {
    #[test]
    fn reflexive(p in prog()) {
        prop_assert_eq!(eutt(build(&p), build(&p)), Verdict::Equivalent);
    }

    #[test]
    fn symmetric(p in prog(), q in prog()) {
        prop_assert_eq!(eutt(build(&p), build(&q)).is_equivalent(), eutt(build(&q), build(&p)).is_equivalent());
    }

    #[test]
    fn tau_insertion(p in prog(), k in 0usize..8, mask: u64, left: bool) {
        let padded = build(&pad(&p, k, mask, &mut 0));
        let v = if left { eutt(padded, build(&p)) } else { eutt(build(&p), padded) };
        prop_assert_eq!(v, Verdict::Equivalent);
    }

    #[test]
    fn bind_congruence(p in prog(), conts in prop::collection::vec(prog(), 4), mask: u64) {
        let q = pad(&p, 2, mask, &mut 0);
        prop_assume!(eutt(build(&p), build(&q)).is_equivalent());
        let k1 = conts.clone();
        let k2: Vec<Prog> = conts.iter().map(|c| pad(c, 3, !mask, &mut 0)).collect();
        for c in 0..4 {
            prop_assert!(eutt(build(&k1[c]), build(&k2[c])).is_equivalent());
        }
        let t1 = build(&p).bind(move |r| build(&k1[r as usize % 4]));
        let t2 = build(&q).bind(move |r| build(&k2[r as usize % 4]));
        prop_assert_eq!(eutt(t1, t2), Verdict::Equivalent);
    }

    #[test]
    fn different_results_mismatch(a in 0u8..4, b in 0u8..4, k in 0usize..5) {
        let t = (0..k).fold(Computation::ret(a), |t, _| Computation::tau(t));
        prop_assert_eq!(eutt(t, Computation::ret(b)).is_equivalent(), a == b);
    }
}

#[test]
fn tau_is_invisible() {
    let v = eutt(Computation::tau(Computation::ret(5)), Computation::ret(5));
    assert_eq!(v, Verdict::Equivalent);
}

#[test]
fn different_events_mismatch() {
    let a = read_reg(Reg::RA);
    let b = read_reg(Reg::SP);
    let v = check_eutt(a, b, |_| Response::Bits(BitVec::zero(64)), &EuttConfig::equality()).unwrap();
    let ev = v.evidence().expect("mismatch");
    assert_eq!((ev.what.as_str(), ev.step), ("event", 0));
}

#[test]
fn too_many_taus_is_undecided() {
    let deep = (0..100).fold(Computation::<Ask, u8>::ret(1), |t, _| Computation::tau(t));
    let v = check_eutt(deep, Computation::ret(1), env, &EuttConfig::equality().with_fuel(10, 10)).unwrap();
    assert!(matches!(v, Verdict::Undecided(_)));
}

#[test]
fn mistagged_answer_is_an_error() {
    let a = read_reg(Reg::RA);
    let b = read_reg(Reg::RA);
    assert!(check_eutt(a, b, |_| Response::Unit, &EuttConfig::equality()).is_err());
}

#[test]
fn verdict_json_shape() {
    let v = check_eutt(read_reg(Reg::RA), read_reg(Reg::SP), |_| Response::Bits(BitVec::zero(64)), &EuttConfig::equality())
        .unwrap();
    let j = v.to_json(1);
    assert_eq!(j["verdict"], "mismatch");
    assert_eq!(j["samples"], 1);
    assert_eq!(j["counterexample"]["what"], "event");
    assert!(Verdict::Equivalent.to_json(3).get("counterexample").is_none());
}
