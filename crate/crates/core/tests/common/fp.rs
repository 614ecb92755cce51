//! Bit-exact differential runs of the soft-float unit against Berkeley
//! SoftFloat built with RISC-V specialization. Each family returns its
//! mismatches (at most 20).

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rvfx_core::softfloat::*;
use softfloat_sys as sf;

pub const CASES: usize = 100_000;

fn with_mode<T>(rm: RoundingMode, f: impl FnOnce() -> T) -> (T, Fflags) {
    unsafe {
        sf::softfloat_roundingMode_write_helper(rm.bits());
        sf::softfloat_exceptionFlags_write_helper(0);
        let r = f();
        (r, Fflags(sf::softfloat_exceptionFlags_read_helper()))
    }
}

fn t(x: F32) -> sf::float32_t {
    sf::float32_t { v: x.0 }
}

fn oracle_fma(op: FmaOp, a: F32, b: F32, c: F32, rm: RoundingMode) -> FResult {
    let neg = |x: F32| F32(x.0 ^ 0x8000_0000);
    let (a, c) = match op {
        FmaOp::Madd => (a, c),
        FmaOp::Msub => (a, neg(c)),
        FmaOp::Nmadd => (neg(a), neg(c)),
        FmaOp::Nmsub => (neg(a), c),
    };
    let (r, fl) = with_mode(rm, || unsafe { sf::f32_mulAdd(t(a), t(b), t(c)) });
    (F32(r.v), fl)
}

/// min/max are not SoftFloat operations; this follows the ISA text directly.
fn oracle_minmax(a: F32, b: F32, max: bool) -> FResult {
    let (fa, fb) = (a.to_f32(), b.to_f32());
    let snan = |x: F32| x.is_nan() && x.0 & 0x0040_0000 == 0;
    let flags = if snan(a) || snan(b) { Fflags::NV } else { Fflags::NONE };
    let r = if fa.is_nan() && fb.is_nan() {
        F32(CANONICAL_NAN)
    } else if fa.is_nan() {
        b
    } else if fb.is_nan() {
        a
    } else if fa == fb {
        // only +0/-0 or identical values
        let a_neg = a.0 >> 31 == 1;
        if a_neg == max {
            b
        } else {
            a
        }
    } else if (fa < fb) != max {
        a
    } else {
        b
    };
    (r, flags)
}

fn oracle_class(a: F32) -> u32 {
    let x = a.to_f32();
    let neg = a.0 >> 31 == 1;
    let bit = if x.is_nan() {
        if a.0 & 0x0040_0000 == 0 {
            8
        } else {
            9
        }
    } else if x.is_infinite() {
        if neg {
            0
        } else {
            7
        }
    } else if x == 0.0 {
        if neg {
            3
        } else {
            4
        }
    } else if x.is_subnormal() {
        if neg {
            2
        } else {
            5
        }
    } else if neg {
        1
    } else {
        6
    };
    1 << bit
}

const EDGES: [u32; 22] = [
    0x0000_0000, 0x8000_0000, 0x7F80_0000, 0xFF80_0000, 0x7FC0_0000, 0xFFC0_0000,
    0x7F80_0001, 0xFFBF_FFFF, 0x0000_0001, 0x8000_0001, 0x007F_FFFF, 0x807F_FFFF,
    0x0080_0000, 0x8080_0000, 0x7F7F_FFFF, 0xFF7F_FFFF, 0x3F80_0000, 0xBF80_0000,
    0x4B00_0000, 0x4F00_0000, 0xCF00_0000, 0x5F00_0000,
];

/// Bit patterns biased toward the interesting corners of the format.
fn operand(rng: &mut ChaCha8Rng) -> F32 {
    match rng.gen_range(0..10) {
        0 => F32(EDGES[rng.gen_range(0..EDGES.len())]),
        1 => {
            // near a power of two or small exponent
            let exp: u32 = [0, 1, 2, 23, 24, 126, 127, 128, 150, 151, 157, 158, 189, 190, 253, 254]
                [rng.gen_range(0..16)];
            let frac = match rng.gen_range(0..3) {
                0 => rng.gen_range(0..4),
                1 => 0x7F_FFFF - rng.gen_range(0..4),
                _ => rng.gen::<u32>() & 0x7F_FFFF,
            };
            F32((rng.gen::<u32>() & 0x8000_0000) | (exp << 23) | frac)
        }
        2 => F32(rng.gen::<u32>() & 0x807F_FFFF),
        3 => {
            // values a few ulps apart to provoke cancellation
            let base = 0x3F80_0000 + rng.gen_range(0..0x0100_0000u32);
            F32(base ^ ((rng.gen::<u32>() & 1) << 31))
        }
        _ => F32(rng.gen()),
    }
}

fn rm(rng: &mut ChaCha8Rng) -> RoundingMode {
    RoundingMode::ALL[rng.gen_range(0..5)]
}

fn check<T: PartialEq + std::fmt::Debug>(what: &str, inputs: &[F32], ours: T, theirs: T, bad: &mut Vec<String>) {
    if ours != theirs && bad.len() < 20 {
        bad.push(format!("{what}{inputs:?}: ours {ours:?} oracle {theirs:?}"));
    }
}

fn run(seed: u64, cases: usize, bad: &mut Vec<String>, body: impl Fn(&mut ChaCha8Rng, &mut Vec<String>)) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for _ in 0..cases {
        body(&mut rng, bad);
    }
}

pub fn binary_arithmetic(cases: usize) -> Vec<String> {
    let mut bad = Vec::new();
    type Ours = fn(F32, F32, RoundingMode) -> FResult;
    type Theirs = unsafe extern "C" fn(sf::float32_t, sf::float32_t) -> sf::float32_t;
    let ops: [(&str, Ours, Theirs); 4] = [
        ("add", f32_add, sf::f32_add),
        ("sub", f32_sub, sf::f32_sub),
        ("mul", f32_mul, sf::f32_mul),
        ("div", f32_div, sf::f32_div),
    ];
    for (i, (name, ours, theirs)) in ops.into_iter().enumerate() {
        run(i as u64, cases, &mut bad, |rng, bad| {
            let (a, b, m) = (operand(rng), operand(rng), rm(rng));
            let (r, fl) = with_mode(m, || unsafe { theirs(t(a), t(b)) });
            check(name, &[a, b], ours(a, b, m), (F32(r.v), fl), bad);
        });
        for &x in &EDGES {
            for &y in &EDGES {
                for m in RoundingMode::ALL {
                    let (a, b) = (F32(x), F32(y));
                    let (r, fl) = with_mode(m, || unsafe { theirs(t(a), t(b)) });
                    check(name, &[a, b], ours(a, b, m), (F32(r.v), fl), &mut bad);
                }
            }
        }
    }
    bad
}

pub fn square_root(cases: usize) -> Vec<String> {
    let mut bad = Vec::new();
    run(10, cases, &mut bad, |rng, bad| {
        let (a, m) = (operand(rng), rm(rng));
        let (r, fl) = with_mode(m, || unsafe { sf::f32_sqrt(t(a)) });
        check("sqrt", &[a], f32_sqrt(a, m), (F32(r.v), fl), bad);
    });
    bad
}

pub fn fused_multiply_add(cases: usize) -> Vec<String> {
    let mut bad = Vec::new();
    let ops = [FmaOp::Madd, FmaOp::Msub, FmaOp::Nmadd, FmaOp::Nmsub];
    for (i, op) in ops.into_iter().enumerate() {
        run(20 + i as u64, cases, &mut bad, |rng, bad| {
            let (a, b, c, m) = (operand(rng), operand(rng), operand(rng), rm(rng));
            // half the cases put c near the product to exercise cancellation
            let c = if rng.gen_bool(0.5) {
                let p = f32_mul(a, b, RoundingMode::Rtz).0;
                F32(p.0 ^ 0x8000_0000 ^ (rng.gen_range(0..8u32)))
            } else {
                c
            };
            check("fma", &[a, b, c], f32_fma(op, a, b, c, m), oracle_fma(op, a, b, c, m), bad);
        });
    }
    bad
}

pub fn comparisons_and_min_max(cases: usize) -> Vec<String> {
    let mut bad = Vec::new();
    run(30, cases, &mut bad, |rng, bad| {
        let (a, b) = (operand(rng), operand(rng));
        let b = if rng.gen_bool(0.2) { a } else { b };
        let (eq, fe) = with_mode(RoundingMode::Rne, || unsafe { sf::f32_eq(t(a), t(b)) });
        let (lt, fl) = with_mode(RoundingMode::Rne, || unsafe { sf::f32_lt(t(a), t(b)) });
        let (le, fle) = with_mode(RoundingMode::Rne, || unsafe { sf::f32_le(t(a), t(b)) });
        check("feq", &[a, b], f32_eq(a, b), (eq, fe), bad);
        check("flt", &[a, b], f32_lt(a, b), (lt, fl), bad);
        check("fle", &[a, b], f32_le(a, b), (le, fle), bad);
        check("fmin", &[a, b], f32_min(a, b), oracle_minmax(a, b, false), bad);
        check("fmax", &[a, b], f32_max(a, b), oracle_minmax(a, b, true), bad);
        check("fclass", &[a], f32_classify(a), oracle_class(a), bad);
    });
    bad
}

pub fn float_to_integer(cases: usize) -> Vec<String> {
    let mut bad = Vec::new();
    run(40, cases, &mut bad, |rng, bad| {
        let (a, m) = (operand(rng), rm(rng));
        let r = m.bits();
        let w = with_mode(m, || unsafe { sf::f32_to_i32(t(a), r, true) as i32 });
        let wu = with_mode(m, || unsafe { sf::f32_to_ui32(t(a), r, true) as u32 });
        let l = with_mode(m, || unsafe { sf::f32_to_i64(t(a), r, true) });
        let lu = with_mode(m, || unsafe { sf::f32_to_ui64(t(a), r, true) });
        check("fcvt.w", &[a], f32_to_i32(a, m), w, bad);
        check("fcvt.wu", &[a], f32_to_u32(a, m), wu, bad);
        check("fcvt.l", &[a], f32_to_i64(a, m), l, bad);
        check("fcvt.lu", &[a], f32_to_u64(a, m), lu, bad);
    });
    bad
}

pub fn integer_to_float(cases: usize) -> Vec<String> {
    let mut bad = Vec::new();
    run(50, cases, &mut bad, |rng, bad| {
        let m = rm(rng);
        let shift = rng.gen_range(0..64);
        let x: u64 = rng.gen::<u64>() >> shift;
        let lift = |r: sf::float32_t| F32(r.v);
        let (r, f) = with_mode(m, || unsafe { sf::i32_to_f32(x as i32) });
        check("fcvt.s.w", &[], i32_to_f32(x as i32, m), (lift(r), f), bad);
        let (r, f) = with_mode(m, || unsafe { sf::ui32_to_f32(x as u32) });
        check("fcvt.s.wu", &[], u32_to_f32(x as u32, m), (lift(r), f), bad);
        let (r, f) = with_mode(m, || unsafe { sf::i64_to_f32(x as i64) });
        check("fcvt.s.l", &[], i64_to_f32(x as i64, m), (lift(r), f), bad);
        let (r, f) = with_mode(m, || unsafe { sf::ui64_to_f32(x) });
        check("fcvt.s.lu", &[], u64_to_f32(x, m), (lift(r), f), bad);
    });
    bad
}


/// Every family with `cases` random inputs each, plus the edge-case grid.
pub fn all_families(cases: usize) -> Vec<String> {
    let mut bad = binary_arithmetic(cases);
    bad.extend(square_root(cases));
    bad.extend(fused_multiply_add(cases));
    bad.extend(comparisons_and_min_max(cases));
    bad.extend(float_to_integer(cases));
    bad.extend(integer_to_float(cases));
    bad
}
