//! Fixed-width two's-complement bitvectors.
//!
//! A [`BitVec`] is an unsigned magnitude plus an explicit width in bits
//! (1..=64). Every operation truncates modulo `2^width`; signed views are
//! computed on demand. Mixing widths in a binary operation is a programming
//! error and panics.

use std::fmt;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

pub const MAX_WIDTH: u32 = 64;

#[derive(Clone, Copy, PartialEq, Eq, Hash)]
pub struct BitVec {
    width: u32,
    value: u64,
}

#[inline]
fn mask(width: u32) -> u64 {
    if width >= 64 {
        u64::MAX
    } else {
        (1u64 << width) - 1
    }
}

impl BitVec {
    /// Builds a bitvector, truncating `value` to `width` bits.
    pub fn new(width: u32, value: u64) -> Self {
        assert!(
            (1..=MAX_WIDTH).contains(&width),
            "bitvector width {width} out of range"
        );
        BitVec {
            width,
            value: value & mask(width),
        }
    }

    pub fn zero(width: u32) -> Self {
        Self::new(width, 0)
    }

    pub fn ones(width: u32) -> Self {
        Self::new(width, u64::MAX)
    }

    /// Builds from a signed value, wrapping into `width` bits.
    pub fn from_i64(width: u32, value: i64) -> Self {
        Self::new(width, value as u64)
    }

    pub fn from_bool(b: bool) -> Self {
        Self::new(1, b as u64)
    }

    #[inline]
    pub fn width(self) -> u32 {
        self.width
    }

    /// Unsigned view.
    #[inline]
    pub fn value(self) -> u64 {
        self.value
    }

    /// Two's-complement signed view.
    #[inline]
    pub fn signed(self) -> i64 {
        let shift = 64 - self.width;
        ((self.value << shift) as i64) >> shift
    }

    pub fn is_zero(self) -> bool {
        self.value == 0
    }

    pub fn msb(self) -> bool {
        (self.value >> (self.width - 1)) & 1 == 1
    }

    pub fn bit(self, i: u32) -> bool {
        assert!(i < self.width);
        (self.value >> i) & 1 == 1
    }

    #[inline]
    fn same_width(self, other: BitVec, op: &str) {
        assert_eq!(
            self.width, other.width,
            "{op}: width mismatch ({} vs {})",
            self.width, other.width
        );
    }

    fn with(self, value: u64) -> Self {
        Self::new(self.width, value)
    }

    pub fn add(self, rhs: BitVec) -> Self {
        self.same_width(rhs, "bv_add");
        self.with(self.value.wrapping_add(rhs.value))
    }

    pub fn sub(self, rhs: BitVec) -> Self {
        self.same_width(rhs, "bv_sub");
        self.with(self.value.wrapping_sub(rhs.value))
    }

    pub fn and(self, rhs: BitVec) -> Self {
        self.same_width(rhs, "bv_and");
        self.with(self.value & rhs.value)
    }

    pub fn or(self, rhs: BitVec) -> Self {
        self.same_width(rhs, "bv_or");
        self.with(self.value | rhs.value)
    }

    pub fn xor(self, rhs: BitVec) -> Self {
        self.same_width(rhs, "bv_xor");
        self.with(self.value ^ rhs.value)
    }

    pub fn not(self) -> Self {
        self.with(!self.value)
    }

    pub fn neg(self) -> Self {
        self.with(self.value.wrapping_neg())
    }

    /// Shift amount as hardware sees it: the low log2(width) bits.
    /// Non-power-of-two widths fall back to `amount mod width`.
    fn shamt(self, amount: BitVec) -> u32 {
        if self.width.is_power_of_two() {
            (amount.value & (self.width as u64 - 1)) as u32
        } else {
            (amount.value % self.width as u64) as u32
        }
    }

    pub fn sll(self, amount: BitVec) -> Self {
        let s = self.shamt(amount);
        self.with(self.value << s)
    }

    pub fn srl(self, amount: BitVec) -> Self {
        let s = self.shamt(amount);
        self.with(self.value >> s)
    }

    pub fn sra(self, amount: BitVec) -> Self {
        let s = self.shamt(amount);
        self.with((self.signed() >> s) as u64)
    }

    /// Signed less-than, as a 1-bit vector.
    pub fn slt(self, rhs: BitVec) -> Self {
        self.same_width(rhs, "bv_slt");
        Self::from_bool(self.signed() < rhs.signed())
    }

    /// Unsigned less-than, as a 1-bit vector.
    pub fn ult(self, rhs: BitVec) -> Self {
        self.same_width(rhs, "bv_ult");
        Self::from_bool(self.value < rhs.value)
    }

    pub fn sign_extend(self, target: u32) -> Self {
        assert!(target >= self.width, "sign_extend narrows {} -> {target}", self.width);
        Self::new(target, self.signed() as u64)
    }

    pub fn zero_extend(self, target: u32) -> Self {
        assert!(target >= self.width, "zero_extend narrows {} -> {target}", self.width);
        Self::new(target, self.value)
    }

    /// Bits `[lo, lo + len)`.
    pub fn extract(self, lo: u32, len: u32) -> Self {
        assert!(len >= 1 && lo + len <= self.width, "bv_extract({lo}, {len}) of width {}", self.width);
        Self::new(len, self.value >> lo)
    }

    /// `hi ++ lo`, with `lo` in the low bits.
    pub fn concat(hi: BitVec, lo: BitVec) -> Self {
        let w = hi.width + lo.width;
        assert!(w <= MAX_WIDTH, "bv_concat result width {w} exceeds {MAX_WIDTH}");
        Self::new(w, (hi.value << lo.width) | lo.value)
    }

    /// Low `width` bits of the full product.
    pub fn mul(self, rhs: BitVec) -> Self {
        self.same_width(rhs, "bv_mul");
        self.with(self.value.wrapping_mul(rhs.value))
    }

    /// High half of the signed x signed product.
    pub fn mulh_ss(self, rhs: BitVec) -> Self {
        self.same_width(rhs, "bv_mulh");
        let p = self.signed() as i128 * rhs.signed() as i128;
        self.with((p >> self.width) as u64)
    }

    /// High half of the signed x unsigned product.
    pub fn mulh_su(self, rhs: BitVec) -> Self {
        self.same_width(rhs, "bv_mulhsu");
        let p = self.signed() as i128 * rhs.value as i128;
        self.with((p >> self.width) as u64)
    }

    /// High half of the unsigned x unsigned product.
    pub fn mulh_uu(self, rhs: BitVec) -> Self {
        self.same_width(rhs, "bv_mulhu");
        let p = self.value as u128 * rhs.value as u128;
        self.with((p >> self.width) as u64)
    }

    /// Signed division with RISC-V corner cases: x/0 = -1, MIN/-1 = MIN.
    pub fn sdiv(self, rhs: BitVec) -> Self {
        self.same_width(rhs, "bv_sdiv");
        let (a, b) = (self.signed(), rhs.signed());
        if b == 0 {
            Self::ones(self.width)
        } else {
            self.with(a.wrapping_div(b) as u64)
        }
    }

    pub fn udiv(self, rhs: BitVec) -> Self {
        self.same_width(rhs, "bv_udiv");
        if rhs.value == 0 {
            Self::ones(self.width)
        } else {
            self.with(self.value / rhs.value)
        }
    }

    /// Signed remainder: x%0 = x, MIN%-1 = 0.
    pub fn srem(self, rhs: BitVec) -> Self {
        self.same_width(rhs, "bv_srem");
        let (a, b) = (self.signed(), rhs.signed());
        if b == 0 {
            self
        } else {
            self.with(a.wrapping_rem(b) as u64)
        }
    }

    pub fn urem(self, rhs: BitVec) -> Self {
        self.same_width(rhs, "bv_urem");
        if rhs.value == 0 {
            self
        } else {
            self.with(self.value % rhs.value)
        }
    }

    /// `0x`-prefixed hex, zero-padded to the width in nibbles.
    pub fn to_hex(self) -> String {
        let digits = self.width.div_ceil(4) as usize;
        format!("0x{:0digits$x}", self.value)
    }
}

impl fmt::Debug for BitVec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "bv{}({})", self.width, self.to_hex())
    }
}

impl fmt::Display for BitVec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.to_hex())
    }
}

#[derive(Serialize, Deserialize)]
struct Wire {
    width: u32,
    hex: String,
}

impl Serialize for BitVec {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        Wire {
            width: self.width,
            hex: self.to_hex(),
        }
        .serialize(s)
    }
}

impl<'de> Deserialize<'de> for BitVec {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        use serde::de::Error;
        let w = Wire::deserialize(d)?;
        if !(1..=MAX_WIDTH).contains(&w.width) {
            return Err(D::Error::custom(format!("width {} out of range", w.width)));
        }
        let digits = w.hex.strip_prefix("0x").unwrap_or(&w.hex);
        let value = u64::from_str_radix(digits, 16).map_err(D::Error::custom)?;
        if value & !mask(w.width) != 0 {
            return Err(D::Error::custom("value exceeds width"));
        }
        Ok(BitVec::new(w.width, value))
    }
}
