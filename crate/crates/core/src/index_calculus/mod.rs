//! Exact signed counts of blow-up configurations and the solution-count
//! bounds derived from them.
//!
//! A [`ParityConfig`] abstracts the set of critical points of `K` with
//! negative Laplacian: only the co-index parity of each point matters. From
//! it, three independent routes compute the signed counts `mu_p`:
//!
//! - [`mu_direct`] enumerates every blow-up configuration and sums the sign
//!   of its Morse index,
//! - [`mu_recurrence`] runs the position-by-position recurrence closed by
//!   the Morse equalities,
//! - [`mu_closed_form`] evaluates the binomial formulas available for the
//!   homogeneous and alternating parity families.
//!
//! All arithmetic is exact (`BigInt`).

mod cases;
mod closed_form;
mod direct;
mod recurrence;

pub use cases::{classify_case, solution_bounds, CaseClass, CaseLabel, LevelBound, SolutionBoundReport};
pub use closed_form::{mu_closed_form, ClosedForm, ClosedFormFamily};
pub use direct::mu_direct;
pub use recurrence::mu_recurrence;

use num_bigint::BigInt;
use num_traits::{One, Signed, Zero};
use serde::{Deserialize, Serialize};
use std::fmt;
use thiserror::Error;

/// Largest number of blow-up points accepted; subsets are enumerated as `u64` masks.
pub const MAX_POINTS: usize = 62;

/// Smallest dimension covered by the multiplicity theorems.
pub const THEOREM_MIN_DIMENSION: u32 = 7;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum IndexError {
    #[error("parity list is empty")]
    Empty,
    #[error("parities[0] must be even: position 0 is the global maximum")]
    FirstOdd,
    #[error("parity value {0} is not 0 or 1")]
    BadParity(i64),
    #[error("dimension n = {0} must be at least 3")]
    Dimension(u32),
    #[error("max level N must be at least 1")]
    ZeroLevel,
    #[error("{0} blow-up points exceed the supported maximum of {MAX_POINTS}")]
    TooManyPoints(usize),
    #[error("theorem bound {bound} at level {level} exceeds |mu_{level}| = {mu}")]
    Inconsistent { level: usize, bound: BigInt, mu: BigInt },
}

/// Co-index parity of one point of the blow-up set.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Parity {
    Even,
    Odd,
}

impl Parity {
    pub fn from_co_index(co_index: usize) -> Self {
        if co_index.is_multiple_of(2) {
            Parity::Even
        } else {
            Parity::Odd
        }
    }

    /// `(-1)^iota` as an `i64`.
    pub fn sign(self) -> i64 {
        match self {
            Parity::Even => 1,
            Parity::Odd => -1,
        }
    }

    pub fn is_odd(self) -> bool {
        self == Parity::Odd
    }

    fn bit(self) -> u8 {
        match self {
            Parity::Even => 0,
            Parity::Odd => 1,
        }
    }
}

impl Serialize for Parity {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_u8(self.bit())
    }
}

impl<'de> Deserialize<'de> for Parity {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        match i64::deserialize(d)? {
            0 => Ok(Parity::Even),
            1 => Ok(Parity::Odd),
            v => Err(serde::de::Error::custom(IndexError::BadParity(v))),
        }
    }
}

/// Conditions under which counts are still computed but theorem bounds do not apply.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum ConfigWarning {
    /// Fewer than two blow-up points.
    FewBlowUpPoints,
    /// `n < 7`.
    OutsideTheoremDimension,
}

impl fmt::Display for ConfigWarning {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ConfigWarning::FewBlowUpPoints => write!(f, "m < 2: the blow-up set has fewer than two points"),
            ConfigWarning::OutsideTheoremDimension => {
                write!(f, "n < {THEOREM_MIN_DIMENSION}: outside the dimension range of the multiplicity theorems")
            }
        }
    }
}

#[derive(Deserialize)]
struct RawParityConfig {
    n: u32,
    parities: Vec<Parity>,
    #[serde(rename = "N")]
    max_level: usize,
}

/// Abstract blow-up set: one co-index parity per point, with the global
/// maximum of `K` at position 0.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "RawParityConfig")]
pub struct ParityConfig {
    n: u32,
    parities: Vec<Parity>,
    #[serde(rename = "N")]
    max_level: usize,
}

impl TryFrom<RawParityConfig> for ParityConfig {
    type Error = IndexError;

    fn try_from(raw: RawParityConfig) -> Result<Self, Self::Error> {
        ParityConfig::new(raw.n, raw.parities, raw.max_level)
    }
}

impl ParityConfig {
    pub fn new(n: u32, parities: Vec<Parity>, max_level: usize) -> Result<Self, IndexError> {
        if n < 3 {
            return Err(IndexError::Dimension(n));
        }
        if max_level == 0 {
            return Err(IndexError::ZeroLevel);
        }
        match parities.first() {
            None => return Err(IndexError::Empty),
            Some(Parity::Odd) => return Err(IndexError::FirstOdd),
            Some(Parity::Even) => {}
        }
        if parities.len() > MAX_POINTS {
            return Err(IndexError::TooManyPoints(parities.len()));
        }
        Ok(Self { n, parities, max_level })
    }

    /// Builds a config from 0/1 bits.
    pub fn from_bits(n: u32, bits: &[u8], max_level: usize) -> Result<Self, IndexError> {
        let parities = bits
            .iter()
            .map(|&b| match b {
                0 => Ok(Parity::Even),
                1 => Ok(Parity::Odd),
                v => Err(IndexError::BadParity(v as i64)),
            })
            .collect::<Result<Vec<_>, _>>()?;
        Self::new(n, parities, max_level)
    }

    pub fn n(&self) -> u32 {
        self.n
    }

    /// Number of blow-up points `m`.
    pub fn m(&self) -> usize {
        self.parities.len()
    }

    /// Max level `N`.
    pub fn max_level(&self) -> usize {
        self.max_level
    }

    pub fn parities(&self) -> &[Parity] {
        &self.parities
    }

    pub fn bits(&self) -> Vec<u8> {
        self.parities.iter().map(|p| p.bit()).collect()
    }

    pub fn with_max_level(&self, max_level: usize) -> Result<Self, IndexError> {
        Self::new(self.n, self.parities.clone(), max_level)
    }

    /// Parity of the point at 1-based position `j`.
    pub(crate) fn parity(&self, j: usize) -> Parity {
        self.parities[j - 1]
    }

    pub(crate) fn odd_mask(&self) -> u64 {
        self.parities
            .iter()
            .enumerate()
            .filter(|(_, p)| p.is_odd())
            .fold(0u64, |mask, (j, _)| mask | (1 << j))
    }

    /// Number of even and odd parities among positions `2..=m`.
    pub fn tail_counts(&self) -> (usize, usize) {
        let odd = self.parities[1..].iter().filter(|p| p.is_odd()).count();
        (self.m() - 1 - odd, odd)
    }

    pub fn warnings(&self) -> Vec<ConfigWarning> {
        let mut out = Vec::new();
        if self.m() < 2 {
            out.push(ConfigWarning::FewBlowUpPoints);
        }
        if self.n < THEOREM_MIN_DIMENSION {
            out.push(ConfigWarning::OutsideTheoremDimension);
        }
        out
    }
}

/// `Index_K`: the sum of `(-1)^iota` over the blow-up set.
pub fn index_k(cfg: &ParityConfig) -> i64 {
    cfg.parities.iter().map(|p| p.sign()).sum()
}

/// Signed counts for levels `1..=N`.
///
/// `mu[p]` counts solutions near level `p`; `geq(k, p)` counts blow-up
/// configurations at level `p` using only points `y_j` with `j >= k`
/// (`k` up to `m + 1`, where it is zero); `geq_at(k, p)` additionally
/// requires `y_k` to be a blow-up point.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct IndexTable {
    m: usize,
    max_level: usize,
    #[serde(serialize_with = "count_serde::vec")]
    mu: Vec<BigInt>,
    #[serde(serialize_with = "count_serde::matrix")]
    mu_geq: Vec<Vec<BigInt>>,
    #[serde(serialize_with = "count_serde::matrix")]
    mu_geq_at: Vec<Vec<BigInt>>,
}

impl IndexTable {
    pub(crate) fn zeros(m: usize, max_level: usize) -> Self {
        Self {
            m,
            max_level,
            mu: vec![BigInt::zero(); max_level],
            mu_geq: vec![vec![BigInt::zero(); max_level]; m + 1],
            mu_geq_at: vec![vec![BigInt::zero(); max_level]; m],
        }
    }

    pub fn m(&self) -> usize {
        self.m
    }

    pub fn max_level(&self) -> usize {
        self.max_level
    }

    /// `mu_p` for `1 <= p <= N`.
    pub fn mu(&self, p: usize) -> &BigInt {
        &self.mu[p - 1]
    }

    /// All `mu_p`, index 0 holding `mu_1`.
    pub fn mu_values(&self) -> &[BigInt] {
        &self.mu
    }

    /// `mu_{>=k}^{infinity,p}` for `1 <= k <= m + 1`.
    pub fn geq(&self, k: usize, p: usize) -> &BigInt {
        &self.mu_geq[k - 1][p - 1]
    }

    /// `mu_{>=k;k}^{infinity,p}` for `1 <= k <= m`.
    pub fn geq_at(&self, k: usize, p: usize) -> &BigInt {
        &self.mu_geq_at[k - 1][p - 1]
    }

    pub(crate) fn set_mu(&mut self, p: usize, v: BigInt) {
        self.mu[p - 1] = v;
    }

    pub(crate) fn set_geq(&mut self, k: usize, p: usize, v: BigInt) {
        self.mu_geq[k - 1][p - 1] = v;
    }

    pub(crate) fn set_geq_at(&mut self, k: usize, p: usize, v: BigInt) {
        self.mu_geq_at[k - 1][p - 1] = v;
    }

    /// `mu_p` with one entry changed, for negative tests of the identities.
    pub fn with_mu_shifted(&self, p: usize, delta: i64) -> Self {
        let mut out = self.clone();
        out.mu[p - 1] += delta;
        out
    }
}

/// Checks both families of Morse equalities exactly:
/// `mu_1 + mu_{>=1}^1 = 1`, `mu_p + mu_{>=1}^p = 0` for `p >= 2`, and
/// `mu_p + mu_{>=2}^p = 0` for every `p`.
pub fn euler_poincare_check(t: &IndexTable) -> bool {
    (1..=t.max_level).all(|p| {
        let expected = if p == 1 { BigInt::one() } else { BigInt::zero() };
        let second = if t.m >= 1 { t.geq(2, p).clone() } else { BigInt::zero() };
        t.mu(p) + t.geq(1, p) == expected && (t.mu(p) + second).is_zero()
    })
}

/// `C(n, k)` as a `BigInt`, zero when `k > n`.
pub fn binomial(n: usize, k: usize) -> BigInt {
    if k > n {
        return BigInt::zero();
    }
    num_integer::binomial(BigInt::from(n), BigInt::from(k))
}

/// `(-1)^e` for a possibly "negative" exponent given as a parity count.
pub(crate) fn sign_of(exponent: usize) -> BigInt {
    if exponent.is_multiple_of(2) {
        BigInt::one()
    } else {
        -BigInt::one()
    }
}

pub(crate) fn abs(v: &BigInt) -> BigInt {
    v.abs()
}

/// Counts serialize as JSON integers when they fit in `i64`, as decimal strings otherwise.
pub mod count_serde {
    use num_bigint::BigInt;
    use num_traits::ToPrimitive;
    use serde::ser::{SerializeSeq, Serializer};

    pub fn one<S: Serializer>(v: &BigInt, s: S) -> Result<S::Ok, S::Error> {
        match v.to_i64() {
            Some(x) => s.serialize_i64(x),
            None => s.serialize_str(&v.to_string()),
        }
    }

    struct Wrap<'a>(&'a BigInt);

    impl serde::Serialize for Wrap<'_> {
        fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
            one(self.0, s)
        }
    }

    struct Row<'a>(&'a [BigInt]);

    impl serde::Serialize for Row<'_> {
        fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
            vec(self.0, s)
        }
    }

    pub fn vec<S: Serializer>(v: &[BigInt], s: S) -> Result<S::Ok, S::Error> {
        let mut seq = s.serialize_seq(Some(v.len()))?;
        for x in v {
            seq.serialize_element(&Wrap(x))?;
        }
        seq.end()
    }

    pub fn matrix<S: Serializer>(v: &[Vec<BigInt>], s: S) -> Result<S::Ok, S::Error> {
        let mut seq = s.serialize_seq(Some(v.len()))?;
        for row in v {
            seq.serialize_element(&Row(row))?;
        }
        seq.end()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn index_k_examples() {
        let cases: [(&[u8], i64); 3] = [(&[0, 0, 0], 3), (&[0, 1, 0], 1), (&[0, 1], 0)];
        for (bits, expected) in cases {
            let cfg = ParityConfig::from_bits(7, bits, 1).unwrap();
            assert_eq!(index_k(&cfg), expected, "{bits:?}");
        }
    }

    #[test]
    fn rejects_malformed_configs() {
        assert_eq!(ParityConfig::from_bits(7, &[1, 0], 2), Err(IndexError::FirstOdd));
        assert_eq!(ParityConfig::from_bits(7, &[], 2), Err(IndexError::Empty));
        assert_eq!(ParityConfig::from_bits(7, &[0, 2], 2), Err(IndexError::BadParity(2)));
        assert_eq!(ParityConfig::from_bits(2, &[0], 2), Err(IndexError::Dimension(2)));
        assert_eq!(ParityConfig::from_bits(7, &[0], 0), Err(IndexError::ZeroLevel));
        assert!(matches!(
            ParityConfig::new(7, vec![Parity::Even; MAX_POINTS + 1], 1),
            Err(IndexError::TooManyPoints(_))
        ));
    }

    #[test]
    fn warnings_flag_h3_and_dimension() {
        let cfg = ParityConfig::from_bits(3, &[0], 2).unwrap();
        assert_eq!(cfg.warnings(), vec![ConfigWarning::FewBlowUpPoints, ConfigWarning::OutsideTheoremDimension]);
        let cfg = ParityConfig::from_bits(7, &[0, 1], 2).unwrap();
        assert!(cfg.warnings().is_empty());
    }

    #[test]
    fn json_round_trip_uses_capital_n() {
        let cfg: ParityConfig = serde_json::from_str(r#"{"n": 7, "parities": [0,1,0], "N": 6}"#).unwrap();
        assert_eq!(cfg.m(), 3);
        assert_eq!(cfg.max_level(), 6);
        let back = serde_json::to_string(&cfg).unwrap();
        assert_eq!(back, r#"{"n":7,"parities":[0,1,0],"N":6}"#);
        assert!(serde_json::from_str::<ParityConfig>(r#"{"n": 7, "parities": [1], "N": 6}"#).is_err());
    }

    #[test]
    fn perturbed_table_fails_identities() {
        let cfg = ParityConfig::from_bits(7, &[0, 0], 2).unwrap();
        let t = mu_recurrence(&cfg);
        assert!(euler_poincare_check(&t));
        assert!(!euler_poincare_check(&t.with_mu_shifted(1, 1)));
    }

    #[test]
    fn binomial_small_values() {
        assert_eq!(binomial(5, 2), BigInt::from(10));
        assert_eq!(binomial(3, 0), BigInt::from(1));
        assert_eq!(binomial(2, 3), BigInt::from(0));
    }
}
