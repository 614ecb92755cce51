//! IEEE 754 single precision in software, with RISC-V NaN and flag rules.
//!
//! Every operation works on raw bit patterns and returns the result together
//! with the exception flags it raised. Finite operands are decoded into an
//! exact `m * 2^q` integer form, combined exactly (or with a sticky bit for
//! bits that cannot matter), and rounded once by [`round_pack`].

use std::fmt;

use serde::{Deserialize, Serialize};

pub const CANONICAL_NAN: u32 = 0x7FC0_0000;
const SIGN: u32 = 0x8000_0000;
const FRAC: u32 = 0x007F_FFFF;
const MAX_FINITE: u32 = 0x7F7F_FFFF;
const INF: u32 = 0x7F80_0000;

/// A single-precision value as its bit pattern.
#[derive(Clone, Copy, PartialEq, Eq, Hash, Default)]
pub struct F32(pub u32);

impl F32 {
    pub fn bits(self) -> u32 {
        self.0
    }

    pub fn from_f32(x: f32) -> F32 {
        F32(x.to_bits())
    }

    pub fn to_f32(self) -> f32 {
        f32::from_bits(self.0)
    }

    pub fn is_nan(self) -> bool {
        (self.0 & !SIGN) > INF
    }

    /// Signaling NaN: quiet bit clear, payload nonzero.
    pub fn is_snan(self) -> bool {
        self.is_nan() && self.0 & 0x0040_0000 == 0
    }
}

impl fmt::Debug for F32 {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "F32({:#010x} = {:e})", self.0, self.to_f32())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum RoundingMode {
    Rne,
    Rtz,
    Rdn,
    Rup,
    Rmm,
}

/// The decoded meaning of a 3-bit rounding-mode field.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum RmField {
    Static(RoundingMode),
    Dyn,
    Reserved,
}

impl RoundingMode {
    pub const ALL: [RoundingMode; 5] = [
        RoundingMode::Rne,
        RoundingMode::Rtz,
        RoundingMode::Rdn,
        RoundingMode::Rup,
        RoundingMode::Rmm,
    ];

    /// Modes 0..=4; anything else (including DYN) is not a mode.
    pub fn from_bits(bits: u8) -> Option<RoundingMode> {
        RoundingMode::ALL.get(bits as usize).copied()
    }

    pub fn bits(self) -> u8 {
        self as u8
    }
}

impl RmField {
    pub fn decode(bits: u8) -> RmField {
        match bits & 7 {
            7 => RmField::Dyn,
            b => RoundingMode::from_bits(b).map_or(RmField::Reserved, RmField::Static),
        }
    }
}

/// Accrued exception flags in `fflags` bit order.
#[derive(Clone, Copy, PartialEq, Eq, Hash, Default)]
pub struct Fflags(pub u8);

impl Fflags {
    pub const NX: Fflags = Fflags(0x01);
    pub const UF: Fflags = Fflags(0x02);
    pub const OF: Fflags = Fflags(0x04);
    pub const DZ: Fflags = Fflags(0x08);
    pub const NV: Fflags = Fflags(0x10);
    pub const NONE: Fflags = Fflags(0);

    pub fn bits(self) -> u8 {
        self.0
    }

    pub fn is_empty(self) -> bool {
        self.0 == 0
    }

    pub fn contains(self, other: Fflags) -> bool {
        self.0 & other.0 == other.0
    }
}

impl std::ops::BitOr for Fflags {
    type Output = Fflags;
    fn bitor(self, rhs: Fflags) -> Fflags {
        Fflags(self.0 | rhs.0)
    }
}

impl std::ops::BitOrAssign for Fflags {
    fn bitor_assign(&mut self, rhs: Fflags) {
        self.0 |= rhs.0;
    }
}

impl fmt::Debug for Fflags {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let names = [(0x10, "NV"), (0x08, "DZ"), (0x04, "OF"), (0x02, "UF"), (0x01, "NX")];
        let set: Vec<&str> = names
            .iter()
            .filter(|(b, _)| self.0 & b != 0)
            .map(|(_, n)| *n)
            .collect();
        write!(f, "{{{}}}", set.join(","))
    }
}

pub type FResult = (F32, Fflags);

enum Class {
    Zero,
    Inf,
    Nan,
    /// value = m * 2^q, m < 2^24
    Finite(u32, i32),
}

fn sign_of(x: u32) -> bool {
    x & SIGN != 0
}

fn classify(x: u32) -> Class {
    let exp = (x >> 23) & 0xFF;
    let frac = x & FRAC;
    match exp {
        0 if frac == 0 => Class::Zero,
        0 => Class::Finite(frac, -149),
        0xFF if frac == 0 => Class::Inf,
        0xFF => Class::Nan,
        e => Class::Finite(frac | 0x0080_0000, e as i32 - 150),
    }
}

/// `m * 2^q` with the leading bit moved to position 23.
fn normalized(m: u32, q: i32) -> (u32, i32) {
    let s = m.leading_zeros() as i32 - 8;
    (m << s, q - s)
}

fn signed_zero(sign: bool) -> u32 {
    if sign {
        SIGN
    } else {
        0
    }
}

fn nan_result(flags: Fflags) -> FResult {
    (F32(CANONICAL_NAN), flags)
}

fn invalid_if_snan(xs: &[u32]) -> Fflags {
    if xs.iter().any(|&x| F32(x).is_snan()) {
        Fflags::NV
    } else {
        Fflags::NONE
    }
}

/// Rounds `m >> shift` to an integer. `sticky` means the true value lies a
/// little above `m` (strictly below the next unit of `m`). Returns the
/// rounded integer and whether rounding was inexact.
fn round_shift(m: u128, shift: i32, sticky: bool, sign: bool, rm: RoundingMode) -> (u128, bool) {
    // where the discarded part sits relative to half a unit
    let (kept, below_half, exactly_half, rest_nonzero) = if shift <= 0 {
        let kept = m << (-shift) as u32;
        (kept, sticky, false, sticky)
    } else if shift >= 127 {
        let nonzero = m != 0 || sticky;
        (0, nonzero, false, nonzero)
    } else {
        let kept = m >> shift;
        let rem = m & ((1u128 << shift) - 1);
        let half = 1u128 << (shift - 1);
        let nonzero = rem != 0 || sticky;
        (
            kept,
            nonzero && rem < half,
            rem == half && !sticky,
            nonzero,
        )
    };
    if !rest_nonzero {
        return (kept, false);
    }
    let above_half = !below_half && !exactly_half;
    let up = match rm {
        RoundingMode::Rne => above_half || (exactly_half && kept & 1 == 1),
        RoundingMode::Rmm => !below_half,
        RoundingMode::Rtz => false,
        RoundingMode::Rdn => sign,
        RoundingMode::Rup => !sign,
    };
    (kept + up as u128, true)
}

fn bit_len(m: u128) -> i32 {
    128 - m.leading_zeros() as i32
}

fn overflow(sign: bool, rm: RoundingMode) -> FResult {
    let to_inf = match rm {
        RoundingMode::Rne | RoundingMode::Rmm => true,
        RoundingMode::Rtz => false,
        RoundingMode::Rdn => sign,
        RoundingMode::Rup => !sign,
    };
    let mag = if to_inf { INF } else { MAX_FINITE };
    (F32(signed_zero(sign) | mag), Fflags::OF | Fflags::NX)
}

/// Rounds the nonzero value `(-1)^sign * (m + sticky) * 2^q` to single
/// precision. Tininess is detected after rounding.
pub(crate) fn round_pack(sign: bool, m: u128, q: i32, sticky: bool, rm: RoundingMode) -> FResult {
    debug_assert!(m != 0);
    let top = q + bit_len(m) - 1;
    if top > 127 {
        return overflow(sign, rm);
    }
    let lsb = (top - 23).max(-149);
    let (mut kept, inexact) = round_shift(m, lsb - q, sticky, sign, rm);
    let mut lsb = lsb;
    if kept == 1 << 24 {
        kept >>= 1;
        lsb += 1;
    }
    let mut flags = if inexact { Fflags::NX } else { Fflags::NONE };
    if top < -126 && inexact {
        // tiny unless rounding to 24 bits with unbounded exponent reaches 2^-126
        let (k24, _) = round_shift(m, top - 23 - q, sticky, sign, rm);
        let reaches_normal = top == -127 && k24 == 1 << 24;
        if !reaches_normal {
            flags |= Fflags::UF;
        }
    }
    let bits = if kept >= 1 << 23 {
        let biased = lsb + 150;
        if biased >= 255 {
            return overflow(sign, rm);
        }
        ((biased as u32) << 23) | (kept as u32 & FRAC)
    } else {
        kept as u32
    };
    (F32(signed_zero(sign) | bits), flags)
}

/// Exact sum of two nonzero `m * 2^q` terms (m < 2^49), rounded once.
fn add_terms(
    (sa, ma, qa): (bool, u128, i32),
    (sb, mb, qb): (bool, u128, i32),
    rm: RoundingMode,
) -> FResult {
    let ((sb_, mb_, qb_), (ss, ms, qs)) = if qa >= qb {
        ((sa, ma, qa), (sb, mb, qb))
    } else {
        ((sb, mb, qb), (sa, ma, qa))
    };
    let gap = qb_ - qs;
    if gap > 64 {
        // the small term is below 2^(qb_ - 16); keep it only as a sticky bit
        let big = mb_ << 16;
        let m = if ss == sb_ { big } else { big - 1 };
        return round_pack(sb_, m, qb_ - 16, true, rm);
    }
    let big = (mb_ << gap) as i128;
    let small = ms as i128;
    let sum = if sb_ { -big } else { big } + if ss { -small } else { small };
    if sum == 0 {
        return (F32(signed_zero(rm == RoundingMode::Rdn)), Fflags::NONE);
    }
    round_pack(sum < 0, sum.unsigned_abs(), qs, false, rm)
}

pub fn f32_add(a: F32, b: F32, rm: RoundingMode) -> FResult {
    let (x, y) = (a.0, b.0);
    match (classify(x), classify(y)) {
        (Class::Nan, _) | (_, Class::Nan) => nan_result(invalid_if_snan(&[x, y])),
        (Class::Inf, Class::Inf) if sign_of(x) != sign_of(y) => nan_result(Fflags::NV),
        (Class::Inf, _) => (a, Fflags::NONE),
        (_, Class::Inf) => (b, Fflags::NONE),
        (Class::Zero, Class::Zero) => {
            let sign = if sign_of(x) == sign_of(y) {
                sign_of(x)
            } else {
                rm == RoundingMode::Rdn
            };
            (F32(signed_zero(sign)), Fflags::NONE)
        }
        (Class::Zero, _) => (b, Fflags::NONE),
        (_, Class::Zero) => (a, Fflags::NONE),
        (Class::Finite(ma, qa), Class::Finite(mb, qb)) => add_terms(
            (sign_of(x), ma as u128, qa),
            (sign_of(y), mb as u128, qb),
            rm,
        ),
    }
}

pub fn f32_sub(a: F32, b: F32, rm: RoundingMode) -> FResult {
    if b.is_nan() {
        return f32_add(a, b, rm);
    }
    f32_add(a, F32(b.0 ^ SIGN), rm)
}

pub fn f32_mul(a: F32, b: F32, rm: RoundingMode) -> FResult {
    let (x, y) = (a.0, b.0);
    let sign = sign_of(x) != sign_of(y);
    match (classify(x), classify(y)) {
        (Class::Nan, _) | (_, Class::Nan) => nan_result(invalid_if_snan(&[x, y])),
        (Class::Inf, Class::Zero) | (Class::Zero, Class::Inf) => nan_result(Fflags::NV),
        (Class::Inf, _) | (_, Class::Inf) => (F32(signed_zero(sign) | INF), Fflags::NONE),
        (Class::Zero, _) | (_, Class::Zero) => (F32(signed_zero(sign)), Fflags::NONE),
        (Class::Finite(ma, qa), Class::Finite(mb, qb)) => {
            round_pack(sign, ma as u128 * mb as u128, qa + qb, false, rm)
        }
    }
}

pub fn f32_div(a: F32, b: F32, rm: RoundingMode) -> FResult {
    let (x, y) = (a.0, b.0);
    let sign = sign_of(x) != sign_of(y);
    match (classify(x), classify(y)) {
        (Class::Nan, _) | (_, Class::Nan) => nan_result(invalid_if_snan(&[x, y])),
        (Class::Inf, Class::Inf) | (Class::Zero, Class::Zero) => nan_result(Fflags::NV),
        (Class::Inf, _) | (_, Class::Zero) => {
            let flags = if matches!(classify(x), Class::Finite(..)) {
                Fflags::DZ
            } else {
                Fflags::NONE
            };
            (F32(signed_zero(sign) | INF), flags)
        }
        (Class::Zero, _) | (_, Class::Inf) => (F32(signed_zero(sign)), Fflags::NONE),
        (Class::Finite(ma, qa), Class::Finite(mb, qb)) => {
            let (ma, qa) = normalized(ma, qa);
            let (mb, qb) = normalized(mb, qb);
            let num = (ma as u128) << 40;
            let quot = num / mb as u128;
            let sticky = num % mb as u128 != 0;
            round_pack(sign, quot, qa - 40 - qb, sticky, rm)
        }
    }
}

pub fn f32_sqrt(a: F32, rm: RoundingMode) -> FResult {
    let x = a.0;
    match classify(x) {
        Class::Nan => nan_result(invalid_if_snan(&[x])),
        Class::Zero => (a, Fflags::NONE),
        _ if sign_of(x) => nan_result(Fflags::NV),
        Class::Inf => (a, Fflags::NONE),
        Class::Finite(m, q) => {
            let (m, q) = normalized(m, q);
            let (m, q) = if q % 2 != 0 {
                ((m as u64) << 1, q - 1)
            } else {
                (m as u64, q)
            };
            let wide = m << 30;
            let root = wide.isqrt();
            let sticky = root * root != wide;
            round_pack(false, root as u128, (q - 30) / 2, sticky, rm)
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum FmaOp {
    /// a*b + c
    Madd,
    /// a*b - c
    Msub,
    /// -(a*b + c)
    Nmadd,
    /// -(a*b - c)
    Nmsub,
}

/// Fused `(-1)^neg_prod * a * b + (-1)^neg_c * c` with a single rounding.
fn mul_add(a: u32, b: u32, c: u32, neg_prod: bool, neg_c: bool, rm: RoundingMode) -> FResult {
    let (ca, cb, cc) = (classify(a), classify(b), classify(c));
    if matches!(ca, Class::Nan) || matches!(cb, Class::Nan) {
        return nan_result(invalid_if_snan(&[a, b, c]));
    }
    let inf_times_zero = matches!((&ca, &cb), (Class::Inf, Class::Zero) | (Class::Zero, Class::Inf));
    if inf_times_zero {
        return nan_result(Fflags::NV);
    }
    if matches!(cc, Class::Nan) {
        return nan_result(invalid_if_snan(&[c]));
    }
    let ps = (sign_of(a) != sign_of(b)) != neg_prod;
    let cs = sign_of(c) != neg_c;
    let c_signed = signed_zero(cs) | (c & !SIGN);
    let prod_inf = matches!(ca, Class::Inf) || matches!(cb, Class::Inf);
    if prod_inf {
        if matches!(cc, Class::Inf) && cs != ps {
            return nan_result(Fflags::NV);
        }
        return (F32(signed_zero(ps) | INF), Fflags::NONE);
    }
    if matches!(cc, Class::Inf) {
        return (F32(c_signed), Fflags::NONE);
    }
    let (Class::Finite(ma, qa), Class::Finite(mb, qb)) = (&ca, &cb) else {
        // product is zero
        return match cc {
            Class::Zero => {
                let sign = if ps == cs { ps } else { rm == RoundingMode::Rdn };
                (F32(signed_zero(sign)), Fflags::NONE)
            }
            _ => (F32(c_signed), Fflags::NONE),
        };
    };
    let pm = *ma as u128 * *mb as u128;
    let pq = qa + qb;
    match cc {
        Class::Zero => round_pack(ps, pm, pq, false, rm),
        Class::Finite(mc, qc) => add_terms((ps, pm, pq), (cs, mc as u128, qc), rm),
        _ => unreachable!(),
    }
}

pub fn f32_fma(op: FmaOp, a: F32, b: F32, c: F32, rm: RoundingMode) -> FResult {
    let (neg_prod, neg_c) = match op {
        FmaOp::Madd => (false, false),
        FmaOp::Msub => (false, true),
        FmaOp::Nmadd => (true, true),
        FmaOp::Nmsub => (true, false),
    };
    mul_add(a.0, b.0, c.0, neg_prod, neg_c, rm)
}

pub fn fmadd_s(a: F32, b: F32, c: F32, rm: RoundingMode) -> FResult {
    f32_fma(FmaOp::Madd, a, b, c, rm)
}

pub fn fmsub_s(a: F32, b: F32, c: F32, rm: RoundingMode) -> FResult {
    f32_fma(FmaOp::Msub, a, b, c, rm)
}

pub fn fnmadd_s(a: F32, b: F32, c: F32, rm: RoundingMode) -> FResult {
    f32_fma(FmaOp::Nmadd, a, b, c, rm)
}

pub fn fnmsub_s(a: F32, b: F32, c: F32, rm: RoundingMode) -> FResult {
    f32_fma(FmaOp::Nmsub, a, b, c, rm)
}

/// Total order key on non-NaN values where -0 sorts below +0.
fn order_key(x: u32) -> i64 {
    if sign_of(x) {
        -((x & !SIGN) as i64) - 1
    } else {
        x as i64
    }
}

fn min_max(a: F32, b: F32, want_max: bool) -> FResult {
    let flags = invalid_if_snan(&[a.0, b.0]);
    let r = match (a.is_nan(), b.is_nan()) {
        (true, true) => F32(CANONICAL_NAN),
        (true, false) => b,
        (false, true) => a,
        (false, false) => {
            let a_first = if want_max {
                order_key(a.0) >= order_key(b.0)
            } else {
                order_key(a.0) <= order_key(b.0)
            };
            if a_first {
                a
            } else {
                b
            }
        }
    };
    (r, flags)
}

pub fn f32_min(a: F32, b: F32) -> FResult {
    min_max(a, b, false)
}

pub fn f32_max(a: F32, b: F32) -> FResult {
    min_max(a, b, true)
}

/// Numeric comparison key; +0 and -0 compare equal.
fn num_key(x: u32) -> i64 {
    if x & !SIGN == 0 {
        0
    } else {
        order_key(x)
    }
}

/// FEQ.S: quiet comparison, NV only for signaling NaNs.
pub fn f32_eq(a: F32, b: F32) -> (bool, Fflags) {
    if a.is_nan() || b.is_nan() {
        return (false, invalid_if_snan(&[a.0, b.0]));
    }
    (num_key(a.0) == num_key(b.0), Fflags::NONE)
}

/// FLT.S: signaling comparison, NV for any NaN.
pub fn f32_lt(a: F32, b: F32) -> (bool, Fflags) {
    if a.is_nan() || b.is_nan() {
        return (false, Fflags::NV);
    }
    (num_key(a.0) < num_key(b.0), Fflags::NONE)
}

/// FLE.S: signaling comparison, NV for any NaN.
pub fn f32_le(a: F32, b: F32) -> (bool, Fflags) {
    if a.is_nan() || b.is_nan() {
        return (false, Fflags::NV);
    }
    (num_key(a.0) <= num_key(b.0), Fflags::NONE)
}

/// Rounds to an integer in `[min, max]`. NaN gives `nan_val`; out of range
/// saturates and raises NV instead of NX.
fn to_int(a: F32, rm: RoundingMode, min: i128, max: i128, nan_val: i128) -> (i128, Fflags) {
    let x = a.0;
    let sign = sign_of(x);
    let (m, q) = match classify(x) {
        Class::Nan => return (nan_val, Fflags::NV),
        Class::Inf => return (if sign { min } else { max }, Fflags::NV),
        Class::Zero => return (0, Fflags::NONE),
        Class::Finite(m, q) => (m, q),
    };
    if q > 64 {
        return (if sign { min } else { max }, Fflags::NV);
    }
    let (mag, inexact) = round_shift(m as u128, -q, false, sign, rm);
    let v = if sign { -(mag as i128) } else { mag as i128 };
    if v < min {
        return (min, Fflags::NV);
    }
    if v > max {
        return (max, Fflags::NV);
    }
    (v, if inexact { Fflags::NX } else { Fflags::NONE })
}

/// FCVT.W.S
pub fn f32_to_i32(a: F32, rm: RoundingMode) -> (i32, Fflags) {
    let (v, f) = to_int(a, rm, i32::MIN as i128, i32::MAX as i128, i32::MAX as i128);
    (v as i32, f)
}

/// FCVT.WU.S
pub fn f32_to_u32(a: F32, rm: RoundingMode) -> (u32, Fflags) {
    let (v, f) = to_int(a, rm, 0, u32::MAX as i128, u32::MAX as i128);
    (v as u32, f)
}

/// FCVT.L.S
pub fn f32_to_i64(a: F32, rm: RoundingMode) -> (i64, Fflags) {
    let (v, f) = to_int(a, rm, i64::MIN as i128, i64::MAX as i128, i64::MAX as i128);
    (v as i64, f)
}

/// FCVT.LU.S
pub fn f32_to_u64(a: F32, rm: RoundingMode) -> (u64, Fflags) {
    let (v, f) = to_int(a, rm, 0, u64::MAX as i128, u64::MAX as i128);
    (v as u64, f)
}

fn from_int(sign: bool, mag: u128, rm: RoundingMode) -> FResult {
    if mag == 0 {
        return (F32(0), Fflags::NONE);
    }
    round_pack(sign, mag, 0, false, rm)
}

pub fn i32_to_f32(x: i32, rm: RoundingMode) -> FResult {
    from_int(x < 0, x.unsigned_abs() as u128, rm)
}

pub fn u32_to_f32(x: u32, rm: RoundingMode) -> FResult {
    from_int(false, x as u128, rm)
}

pub fn i64_to_f32(x: i64, rm: RoundingMode) -> FResult {
    from_int(x < 0, x.unsigned_abs() as u128, rm)
}

pub fn u64_to_f32(x: u64, rm: RoundingMode) -> FResult {
    from_int(false, x as u128, rm)
}

/// FCLASS.S: a one-hot 10-bit mask.
pub fn f32_classify(a: F32) -> u32 {
    let x = a.0;
    let neg = sign_of(x);
    let bit = match classify(x) {
        Class::Inf if neg => 0,
        Class::Finite(m, _) if neg && m >= 1 << 23 => 1,
        Class::Finite(..) if neg => 2,
        Class::Zero if neg => 3,
        Class::Zero => 4,
        Class::Finite(m, _) if m < 1 << 23 => 5,
        Class::Finite(..) => 6,
        Class::Inf => 7,
        Class::Nan if a.is_snan() => 8,
        Class::Nan => 9,
    };
    1 << bit
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum SgnjOp {
    Sgnj,
    Sgnjn,
    Sgnjx,
}

/// FSGNJ.S family: magnitude of `a`, sign from `b`. Never raises flags.
pub fn f32_sgnj(op: SgnjOp, a: F32, b: F32) -> F32 {
    let sign = match op {
        SgnjOp::Sgnj => b.0 & SIGN,
        SgnjOp::Sgnjn => !b.0 & SIGN,
        SgnjOp::Sgnjx => (a.0 ^ b.0) & SIGN,
    };
    F32((a.0 & !SIGN) | sign)
}
