//! Exact arithmetic in the mod-2 cohomology ring of real projective space.
//!
//! `H^*(RP^n; Z_2)` is the truncated polynomial ring `Z_2[a]/(a^{n+1})` on
//! the degree-one generator `a`. [`Z2Poly`] stores an element as a bit row
//! indexed by degree, so the cup product is a carryless (XOR) convolution.
//! On top of the ring sit the total Stiefel-Whitney class of `T(RP^n)`, the
//! class of `T(RP^n) ⊕ T*(RP^n)`, the vanishing predicate for the latter,
//! and the stable-range bound for sums of stably trivial bundles.

use std::fmt;

use serde::de::Error as _;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};

/// Largest truncation degree the bit-row representation accepts.
pub const MAX_TRUNCATION_DEGREE: usize = 1024;

fn check_truncation(degree: usize) -> Result<()> {
    if degree > MAX_TRUNCATION_DEGREE {
        return Err(Error::TruncationTooLarge(degree));
    }
    Ok(())
}

/// Element of `Z_2[a]/(a^{n+1})`.
///
/// Bit `k` is the coefficient of `a^k`; bits above the truncation degree are
/// identically zero (the quotient discards them).
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct Z2Poly {
    trunc: usize,
    words: Vec<u64>,
}

impl Z2Poly {
    /// Zero element truncated at `trunc`.
    ///
    /// Panics above [`MAX_TRUNCATION_DEGREE`]; fallible entry points validate
    /// the degree before constructing.
    pub fn zero(trunc: usize) -> Self {
        assert!(
            trunc <= MAX_TRUNCATION_DEGREE,
            "truncation degree {trunc} out of range"
        );
        Z2Poly {
            trunc,
            words: vec![0; trunc / 64 + 1],
        }
    }

    /// Multiplicative identity.
    pub fn one(trunc: usize) -> Self {
        let mut p = Z2Poly::zero(trunc);
        p.words[0] = 1;
        p
    }

    /// The generator `a`. Zero when `trunc == 0`, where the quotient kills it.
    pub fn generator(trunc: usize) -> Self {
        let mut p = Z2Poly::zero(trunc);
        p.set_coeff(1, true);
        p
    }

    /// Polynomial with coefficient 1 exactly at the listed degrees. Degrees
    /// above the truncation are discarded, mirroring the quotient.
    pub fn from_degrees(trunc: usize, degrees: &[usize]) -> Result<Self> {
        check_truncation(trunc)?;
        let mut p = Z2Poly::zero(trunc);
        for &d in degrees {
            p.set_coeff(d, true);
        }
        Ok(p)
    }

    pub fn truncation_degree(&self) -> usize {
        self.trunc
    }

    pub fn coeff(&self, degree: usize) -> bool {
        degree <= self.trunc && (self.words[degree / 64] >> (degree % 64)) & 1 == 1
    }

    /// Sets one coefficient; degrees above the truncation are discarded.
    pub fn set_coeff(&mut self, degree: usize, value: bool) {
        if degree > self.trunc {
            return;
        }
        let (w, b) = (degree / 64, degree % 64);
        if value {
            self.words[w] |= 1 << b;
        } else {
            self.words[w] &= !(1 << b);
        }
    }

    pub fn is_zero(&self) -> bool {
        self.words.iter().all(|&w| w == 0)
    }

    pub fn is_one(&self) -> bool {
        self.words[0] == 1 && self.words[1..].iter().all(|&w| w == 0)
    }

    /// Degrees with coefficient 1, ascending.
    pub fn degrees(&self) -> impl Iterator<Item = usize> + '_ {
        (0..=self.trunc).filter(|&d| self.coeff(d))
    }

    /// Ring addition: XOR of coefficient rows.
    pub fn add(&self, other: &Z2Poly) -> Result<Z2Poly> {
        self.check_same_truncation(other)?;
        let words = self
            .words
            .iter()
            .zip(&other.words)
            .map(|(a, b)| a ^ b)
            .collect();
        Ok(Z2Poly {
            trunc: self.trunc,
            words,
        })
    }

    /// Ring product: coefficient `k` of the result is `⊕_i p_i q_{k-i}`,
    /// truncated at the top degree.
    pub fn mul(&self, other: &Z2Poly) -> Result<Z2Poly> {
        self.check_same_truncation(other)?;
        let mut out = Z2Poly::zero(self.trunc);
        for d in self.degrees() {
            out.xor_shifted(other, d);
        }
        out.mask_top();
        Ok(out)
    }

    /// `e`-fold product by binary exponentiation; `p^0 = 1`.
    pub fn pow(&self, e: u64) -> Z2Poly {
        let mut acc = Z2Poly::one(self.trunc);
        let mut base = self.clone();
        let mut e = e;
        while e > 0 {
            if e & 1 == 1 {
                acc = acc.mul(&base).expect("same truncation");
            }
            e >>= 1;
            if e > 0 {
                base = base.mul(&base).expect("same truncation");
            }
        }
        acc
    }

    /// Little-endian hex bitmask: byte `j` packs coefficients `8j..=8j+7`.
    pub fn to_hex(&self) -> String {
        use fmt::Write;
        let n_bytes = self.trunc / 8 + 1;
        let mut s = String::with_capacity(2 * n_bytes);
        for j in 0..n_bytes {
            let byte = (self.words[j / 8] >> (8 * (j % 8))) as u8;
            write!(s, "{byte:02x}").expect("write to String");
        }
        s
    }

    /// Inverse of [`Z2Poly::to_hex`]. Rejects masks with bits beyond the
    /// truncation degree.
    pub fn from_hex(trunc: usize, hex: &str) -> Result<Self> {
        check_truncation(trunc)?;
        let expected = 2 * (trunc / 8 + 1);
        if hex.len() != expected {
            return Err(Error::BadHex(format!(
                "expected {expected} hex digits for truncation degree {trunc}, got {}",
                hex.len()
            )));
        }
        let mut p = Z2Poly::zero(trunc);
        for (j, pair) in hex.as_bytes().chunks(2).enumerate() {
            let s = std::str::from_utf8(pair).map_err(|_| Error::BadHex(hex.into()))?;
            let byte =
                u8::from_str_radix(s, 16).map_err(|_| Error::BadHex(format!("bad byte `{s}`")))?;
            if j / 8 < p.words.len() {
                p.words[j / 8] |= (byte as u64) << (8 * (j % 8));
            }
        }
        let mut masked = p.clone();
        masked.mask_top();
        if masked != p {
            return Err(Error::BadHex(format!(
                "mask has coefficients beyond degree {trunc}"
            )));
        }
        Ok(masked)
    }

    fn check_same_truncation(&self, other: &Z2Poly) -> Result<()> {
        if self.trunc != other.trunc {
            return Err(Error::TruncationMismatch(self.trunc, other.trunc));
        }
        Ok(())
    }

    fn xor_shifted(&mut self, other: &Z2Poly, shift: usize) {
        let (ws, bs) = (shift / 64, shift % 64);
        for (i, &w) in other.words.iter().enumerate() {
            if w == 0 {
                continue;
            }
            let lo = i + ws;
            if lo < self.words.len() {
                self.words[lo] ^= w << bs;
            }
            if bs > 0 && lo + 1 < self.words.len() {
                self.words[lo + 1] ^= w >> (64 - bs);
            }
        }
    }

    fn mask_top(&mut self) {
        let top_bits = self.trunc % 64 + 1;
        let last = self.words.len() - 1;
        if top_bits < 64 {
            self.words[last] &= (1u64 << top_bits) - 1;
        }
    }
}

impl fmt::Display for Z2Poly {
    /// `1 + a + a^2` style, degrees ascending; `0` for the zero element.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_zero() {
            return write!(f, "0");
        }
        let mut first = true;
        for d in self.degrees() {
            if !first {
                write!(f, " + ")?;
            }
            match d {
                0 => write!(f, "1")?,
                1 => write!(f, "a")?,
                _ => write!(f, "a^{d}")?,
            }
            first = false;
        }
        Ok(())
    }
}

impl fmt::Debug for Z2Poly {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Z2Poly[{}; trunc {}]", self, self.trunc)
    }
}

#[derive(Serialize, Deserialize)]
struct Z2PolyRepr {
    truncation_degree: usize,
    hex: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    display: Option<String>,
}

impl Serialize for Z2Poly {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        Z2PolyRepr {
            truncation_degree: self.trunc,
            hex: self.to_hex(),
            display: Some(self.to_string()),
        }
        .serialize(serializer)
    }
}

impl<'de> Deserialize<'de> for Z2Poly {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        let repr = Z2PolyRepr::deserialize(deserializer)?;
        Z2Poly::from_hex(repr.truncation_degree, &repr.hex).map_err(D::Error::custom)
    }
}

/// `C(n, k) mod 2` via the digit-domination criterion: the coefficient is 1
/// exactly when every base-2 digit of `k` is at most the matching digit of
/// `n`, i.e. `k AND n == k`. Returns 0 for `k > n`.
pub fn binom_mod2(n: u64, k: u64) -> u8 {
    u8::from(k & n == k)
}

/// Total Stiefel-Whitney class of `T(RP^n)`: `(1 + a)^{n+1}` truncated at
/// degree `n`. For `n = 0` the quotient collapses it to `1` (a point).
///
/// The cotangent bundle has the same total class, so this value doubles as
/// `w(T*(RP^n))`.
pub fn sw_tangent_rpn(n: usize) -> Result<Z2Poly> {
    check_truncation(n)?;
    let mut base = Z2Poly::one(n);
    base.set_coeff(1, true); // discarded when n = 0
    Ok(base.pow(n as u64 + 1))
}

/// Total class of the generalized tangent bundle of `RP^n`: the Whitney
/// product of the (equal) tangent and cotangent classes, i.e. the square of
/// [`sw_tangent_rpn`].
pub fn sw_gen_tangent_rpn(n: usize) -> Result<Z2Poly> {
    Ok(sw_tangent_rpn(n)?.pow(2))
}

/// Whether the mod-2 obstruction for the generalized tangent bundle of
/// `RP^n` vanishes, i.e. whether [`sw_gen_tangent_rpn`] equals 1. This holds
/// exactly when `n + 1` is a power of two.
pub fn obstruction_trivial(n: usize) -> Result<bool> {
    Ok(sw_gen_tangent_rpn(n)?.is_one())
}

/// Smallest number of copies of a stably trivial bundle certified trivial by
/// the stable-range bound: least integer `r >= k + k/(m - k)`, where the
/// bundle of rank `m - k` becomes trivial of rank `m` after adding a trivial
/// rank-`k` summand. Exact integer arithmetic throughout.
pub fn allard_min_copies(k: u64, m: u64) -> Result<u64> {
    if k < 1 || m <= k {
        return Err(Error::StableRank { k, m });
    }
    Ok(k + k.div_ceil(m - k))
}

/// Parallelizability verdict for a projective space row. `Yes` is a
/// looked-up classical fact (n = 1, 3, 7); `No` follows from a nonvanishing
/// tangent class; a vanishing class with `n` outside {1, 3, 7} is beyond the
/// reach of characteristic classes, hence `NotDecided`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Parallelizable {
    Yes,
    No,
    NotDecided,
}

/// One classification row: the mod-2 data for `RP^n` plus the sphere facts
/// for the same dimension.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SwClassification {
    pub n: usize,
    pub tangent_sw: Z2Poly,
    pub gen_sw: Z2Poly,
    pub obstruction_trivial: bool,
    pub parallelizable_known: Parallelizable,
    /// `T(S^n)` is trivial exactly for n = 1, 3, 7 (looked up, not computed).
    pub sphere_tangent_trivial: bool,
    /// The generalized tangent bundle of `S^n` is trivial for every n, via
    /// the stable-range bound `1 + 1/n <= 2`.
    pub sphere_gen_trivial: bool,
}

/// Classification data for dimension `n`.
pub fn classify_rpn(n: usize) -> Result<SwClassification> {
    let tangent_sw = sw_tangent_rpn(n)?;
    let gen_sw = tangent_sw.pow(2);
    let obstruction_trivial = gen_sw.is_one();
    let parallelizable_known = if n == 0 || matches!(n, 1 | 3 | 7) {
        Parallelizable::Yes
    } else if !tangent_sw.is_one() {
        Parallelizable::No
    } else {
        Parallelizable::NotDecided
    };
    Ok(SwClassification {
        n,
        tangent_sw,
        gen_sw,
        obstruction_trivial,
        parallelizable_known,
        sphere_tangent_trivial: matches!(n, 1 | 3 | 7),
        sphere_gen_trivial: true,
    })
}

/// Rows for `n = 1..=n_max`.
pub fn classify_table(n_max: usize) -> Result<Vec<SwClassification>> {
    if n_max < 1 {
        return Err(Error::DimensionRange);
    }
    (1..=n_max).map(classify_rpn).collect()
}
