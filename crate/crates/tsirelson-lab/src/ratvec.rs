//! Finitely supported vectors over the rationals and the base norms.
//!
//! Everything here lives on finite sections of the space of eventually-zero
//! sequences. Coefficients are exact rationals end to end; only the `lp_norm`
//! with `p != 1` leaves exact arithmetic.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use num::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use serde::{Deserialize, Deserializer, Serialize, Serializer};

/// Exact rational scalar. Kept reduced with a positive denominator by
/// construction (the backing type normalizes on every operation).
pub type Rational = BigRational;

/// Convenience constructor for small rationals.
///
/// Panics on a zero denominator; intended for literals in code and tests.
pub fn rat(num: i64, den: i64) -> Rational {
    Rational::new(num.into(), den.into())
}

/// Convenience constructor for integer rationals.
pub fn rat_int(num: i64) -> Rational {
    Rational::from_integer(num.into())
}

/// Formats a rational as `num/den`, omitting `/den` when the value is an
/// integer. This is the canonical text form used by the vector literal
/// syntax, the CLI and the result files.
pub fn format_rational(r: &Rational) -> String {
    if r.denom().is_one() {
        r.numer().to_string()
    } else {
        format!("{}/{}", r.numer(), r.denom())
    }
}

/// Parses the canonical `num` / `num/den` text form.
pub fn parse_rational(s: &str) -> Result<Rational, RationalParseError> {
    let s = s.trim();
    if s.is_empty() {
        return Err(RationalParseError::Empty);
    }
    match s.split_once('/') {
        None => s
            .parse::<num::BigInt>()
            .map(Rational::from_integer)
            .map_err(|_| RationalParseError::Malformed(s.to_string())),
        Some((n, d)) => {
            let numer = n
                .trim()
                .parse::<num::BigInt>()
                .map_err(|_| RationalParseError::Malformed(s.to_string()))?;
            let denom = d
                .trim()
                .parse::<num::BigInt>()
                .map_err(|_| RationalParseError::Malformed(s.to_string()))?;
            if denom.is_zero() {
                return Err(RationalParseError::ZeroDenominator(s.to_string()));
            }
            Ok(Rational::new(numer, denom))
        }
    }
}

/// Error parsing a rational literal.
#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum RationalParseError {
    #[error("empty rational literal")]
    Empty,
    #[error("malformed rational literal `{0}`")]
    Malformed(String),
    #[error("zero denominator in rational literal `{0}`")]
    ZeroDenominator(String),
}

/// A closed interval of coordinate indices, `lo <= hi`.
///
/// For intervals `E` and `F`, `E <= F` means `max E <= min F`; the strict
/// form `E < F` (`max E < min F`) is what successive parts of an admissible
/// partition must satisfy.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct IndexInterval {
    lo: usize,
    hi: usize,
}

impl IndexInterval {
    /// Builds `[lo, hi]`; fails unless `lo <= hi`.
    pub fn new(lo: usize, hi: usize) -> Result<Self, IntervalError> {
        if lo <= hi {
            Ok(IndexInterval { lo, hi })
        } else {
            Err(IntervalError::Inverted { lo, hi })
        }
    }

    /// The singleton interval `[i, i]`.
    pub fn singleton(i: usize) -> Self {
        IndexInterval { lo: i, hi: i }
    }

    pub fn lo(&self) -> usize {
        self.lo
    }

    pub fn hi(&self) -> usize {
        self.hi
    }

    /// Number of indices covered.
    pub fn width(&self) -> usize {
        self.hi - self.lo + 1
    }

    pub fn contains(&self, i: usize) -> bool {
        self.lo <= i && i <= self.hi
    }

    pub fn contains_interval(&self, other: &IndexInterval) -> bool {
        self.lo <= other.lo && other.hi <= self.hi
    }

    /// Strict interval order: every index of `self` precedes every index of
    /// `other`.
    pub fn precedes(&self, other: &IndexInterval) -> bool {
        self.hi < other.lo
    }

    pub fn indices(&self) -> impl Iterator<Item = usize> {
        self.lo..=self.hi
    }
}

impl fmt::Display for IndexInterval {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "[{},{}]", self.lo, self.hi)
    }
}

/// Error building an [`IndexInterval`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, thiserror::Error)]
pub enum IntervalError {
    #[error("interval endpoints inverted: lo={lo} > hi={hi}")]
    Inverted { lo: usize, hi: usize },
}

impl Serialize for IndexInterval {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        #[derive(Serialize)]
        struct Repr {
            lo: usize,
            hi: usize,
        }
        Repr {
            lo: self.lo,
            hi: self.hi,
        }
        .serialize(serializer)
    }
}

impl<'de> Deserialize<'de> for IndexInterval {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        #[derive(Deserialize)]
        struct Repr {
            lo: usize,
            hi: usize,
        }
        let r = Repr::deserialize(deserializer)?;
        IndexInterval::new(r.lo, r.hi).map_err(serde::de::Error::custom)
    }
}

/// Error constructing a vector.
#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum VectorError {
    #[error("duplicate index {0} in vector construction")]
    DuplicateIndex(usize),
}

/// Error parsing a vector literal. `position` is the byte offset of the
/// offending token within the input.
#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("bad vector literal at byte {position}: {message}")]
pub struct VectorParseError {
    pub position: usize,
    pub message: String,
}

/// Domain errors for norm evaluation on [`Vec00`].
#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum NormDomainError {
    #[error("lp_norm requires p >= 1, got p = {0}")]
    ExponentBelowOne(String),
}

/// A finitely supported vector with exact rational coefficients.
///
/// Zero coefficients are never stored, so the key set of the map *is* the
/// support. Values are immutable after construction; all operations return
/// fresh vectors.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Default)]
pub struct Vec00 {
    coeffs: BTreeMap<usize, Rational>,
}

impl Vec00 {
    /// The zero vector.
    pub fn zero() -> Self {
        Vec00::default()
    }

    /// The standard basis vector `e_i`.
    pub fn unit(i: usize) -> Self {
        let mut coeffs = BTreeMap::new();
        coeffs.insert(i, Rational::one());
        Vec00 { coeffs }
    }

    /// The indicator of an interval: sum of `e_i` over `i` in `interval`.
    pub fn block(interval: IndexInterval) -> Self {
        let coeffs = interval
            .indices()
            .map(|i| (i, Rational::one()))
            .collect::<BTreeMap<_, _>>();
        Vec00 { coeffs }
    }

    /// Builds a vector from `(index, coefficient)` pairs. Zero coefficients
    /// are dropped; a repeated index is an error.
    pub fn from_pairs(
        pairs: impl IntoIterator<Item = (usize, Rational)>,
    ) -> Result<Self, VectorError> {
        let mut coeffs = BTreeMap::new();
        for (i, c) in pairs {
            // Zeros are inserted first so a duplicate is caught regardless of
            // which of the two entries is zero, then dropped below.
            if coeffs.insert(i, c).is_some() {
                return Err(VectorError::DuplicateIndex(i));
            }
        }
        coeffs.retain(|_, c: &mut Rational| !c.is_zero());
        Ok(Vec00 { coeffs })
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.is_empty()
    }

    /// Coefficient at index `i` (zero when outside the support).
    pub fn coeff(&self, i: usize) -> Rational {
        self.coeffs.get(&i).cloned().unwrap_or_else(Rational::zero)
    }

    /// Iterates the support in increasing index order.
    pub fn support(&self) -> impl Iterator<Item = usize> + '_ {
        self.coeffs.keys().copied()
    }

    /// Support entries in increasing index order.
    pub fn entries(&self) -> impl Iterator<Item = (usize, &Rational)> + '_ {
        self.coeffs.iter().map(|(i, c)| (*i, c))
    }

    /// Number of nonzero coordinates.
    pub fn support_width(&self) -> usize {
        self.coeffs.len()
    }

    /// Smallest interval containing the support; `None` for the zero vector.
    pub fn support_hull(&self) -> Option<IndexInterval> {
        let lo = *self.coeffs.keys().next()?;
        let hi = *self.coeffs.keys().next_back()?;
        Some(IndexInterval { lo, hi })
    }

    /// Restriction `Ex`: keeps the coefficients at indices inside `e`.
    pub fn restrict(&self, e: IndexInterval) -> Vec00 {
        let coeffs = self
            .coeffs
            .range(e.lo()..=e.hi())
            .map(|(i, c)| (*i, c.clone()))
            .collect();
        Vec00 { coeffs }
    }

    /// Scalar multiple `c * x`.
    pub fn scale(&self, c: &Rational) -> Vec00 {
        if c.is_zero() {
            return Vec00::zero();
        }
        let coeffs = self
            .coeffs
            .iter()
            .map(|(i, a)| (*i, a * c))
            .collect();
        Vec00 { coeffs }
    }

    /// Coordinatewise sum.
    pub fn add(&self, other: &Vec00) -> Vec00 {
        let mut coeffs = self.coeffs.clone();
        for (i, c) in &other.coeffs {
            let v = coeffs.entry(*i).or_insert_with(Rational::zero);
            *v += c;
            if v.is_zero() {
                coeffs.remove(i);
            }
        }
        Vec00 { coeffs }
    }

    /// Returns a copy with the coefficient at `i` replaced by `c` (removed
    /// when `c` is zero).
    pub fn with_coeff(&self, i: usize, c: Rational) -> Vec00 {
        let mut coeffs = self.coeffs.clone();
        if c.is_zero() {
            coeffs.remove(&i);
        } else {
            coeffs.insert(i, c);
        }
        Vec00 { coeffs }
    }

    /// The `l1` norm: sum of absolute coefficients, exact.
    pub fn l1_norm(&self) -> Rational {
        self.coeffs
            .values()
            .fold(Rational::zero(), |acc, c| acc + c.abs())
    }

    /// The sup norm (the norm of `c00` viewed inside `c0`): max absolute
    /// coefficient, exact; zero for the zero vector.
    pub fn sup_norm(&self) -> Rational {
        self.coeffs
            .values()
            .map(|c| c.abs())
            .max()
            .unwrap_or_else(Rational::zero)
    }

    /// The `lp` norm `(sum |a_i|^p)^(1/p)` as a float, `p >= 1`.
    ///
    /// With `p = 1` this returns the exact `l1` value converted to a float.
    pub fn lp_norm(&self, p: &Rational) -> Result<f64, NormDomainError> {
        if *p < Rational::one() {
            return Err(NormDomainError::ExponentBelowOne(format_rational(p)));
        }
        if p.is_one() {
            return Ok(self.l1_norm().to_f64().unwrap_or(f64::INFINITY));
        }
        if self.is_zero() {
            return Ok(0.0);
        }
        let pf = p.to_f64().expect("p is finite");
        // Factor out the largest coefficient so the powers stay in [0, 1].
        let sup = self.sup_norm().to_f64().unwrap_or(f64::INFINITY);
        let sum: f64 = self
            .coeffs
            .values()
            .map(|c| {
                let t = c.abs().to_f64().unwrap_or(0.0) / sup;
                t.powf(pf)
            })
            .sum();
        Ok(sup * sum.powf(1.0 / pf))
    }

    /// Parses the literal format `index:num/den,index:num/den,...`.
    /// Whitespace is ignored; duplicate indices are rejected.
    pub fn parse(literal: &str) -> Result<Self, VectorParseError> {
        let mut coeffs: BTreeMap<usize, Rational> = BTreeMap::new();
        let mut pos = 0usize;
        for token in literal.split(',') {
            let token_start = pos;
            pos += token.len() + 1; // account for the separating comma
            let t = token.trim();
            if t.is_empty() {
                return Err(VectorParseError {
                    position: token_start,
                    message: "empty term".to_string(),
                });
            }
            let (idx_part, coeff_part) = t.split_once(':').ok_or_else(|| VectorParseError {
                position: token_start,
                message: format!("term `{t}` is missing `:`"),
            })?;
            let index: usize =
                idx_part
                    .trim()
                    .parse()
                    .map_err(|_| VectorParseError {
                        position: token_start,
                        message: format!("bad index `{}`", idx_part.trim()),
                    })?;
            let coeff = parse_rational(coeff_part).map_err(|e| VectorParseError {
                position: token_start,
                message: e.to_string(),
            })?;
            if coeffs.contains_key(&index) {
                return Err(VectorParseError {
                    position: token_start,
                    message: format!("duplicate index {index}"),
                });
            }
            // Zeros are kept until the end so later duplicates still error.
            coeffs.insert(index, coeff);
        }
        coeffs.retain(|_, c| !c.is_zero());
        Ok(Vec00 { coeffs })
    }
}

impl fmt::Display for Vec00 {
    /// Writes the canonical literal form; the zero vector prints as `0:0`.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.coeffs.is_empty() {
            return write!(f, "0:0");
        }
        let mut first = true;
        for (i, c) in &self.coeffs {
            if !first {
                write!(f, ",")?;
            }
            write!(f, "{}:{}", i, format_rational(c))?;
            first = false;
        }
        Ok(())
    }
}

impl FromStr for Vec00 {
    type Err = VectorParseError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Vec00::parse(s)
    }
}

impl Serialize for Vec00 {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.serialize_str(&self.to_string())
    }
}

impl<'de> Deserialize<'de> for Vec00 {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let s = String::deserialize(deserializer)?;
        Vec00::parse(&s).map_err(serde::de::Error::custom)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn iv(lo: usize, hi: usize) -> IndexInterval {
        IndexInterval::new(lo, hi).unwrap()
    }

    #[test]
    fn make_vector_single_coordinate() {
        let x = Vec00::from_pairs([(0, rat_int(1))]).unwrap();
        assert_eq!(x.support().collect::<Vec<_>>(), vec![0]);
    }

    #[test]
    fn make_vector_drops_zero() {
        let x = Vec00::from_pairs([(2, rat(1, 2)), (3, rat_int(0))]).unwrap();
        assert_eq!(x.support().collect::<Vec<_>>(), vec![2]);
    }

    #[test]
    fn make_vector_rejects_duplicates() {
        let err = Vec00::from_pairs([(1, rat_int(1)), (1, rat_int(2))]).unwrap_err();
        assert_eq!(err, VectorError::DuplicateIndex(1));
    }

    #[test]
    fn restrict_projection() {
        let x = Vec00::from_pairs([(2, rat_int(1)), (3, rat_int(1))]).unwrap();
        assert_eq!(x.restrict(iv(2, 2)), Vec00::unit(2));
    }

    #[test]
    fn restrict_disjoint_support_is_zero() {
        let x = Vec00::unit(0);
        assert!(x.restrict(iv(1, 5)).is_zero());
    }

    #[test]
    fn restrict_full_cover_is_identity() {
        let x = Vec00::from_pairs([(1, rat_int(1)), (4, rat_int(2))]).unwrap();
        assert_eq!(x.restrict(iv(0, 4)), x);
    }

    #[test]
    fn l1_examples() {
        let x = Vec00::from_pairs([(2, rat_int(1)), (3, rat_int(1))]).unwrap();
        assert_eq!(x.l1_norm(), rat_int(2));
        assert_eq!(Vec00::zero().l1_norm(), rat_int(0));
        let y = Vec00::from_pairs([(0, rat(1, 2)), (7, rat(-1, 3))]).unwrap();
        assert_eq!(y.l1_norm(), rat(5, 6));
    }

    #[test]
    fn sup_examples() {
        let x = Vec00::from_pairs([(2, rat_int(1)), (3, rat_int(1))]).unwrap();
        assert_eq!(x.sup_norm(), rat_int(1));
        let y = Vec00::from_pairs([(0, rat(1, 2)), (7, rat(-1, 3))]).unwrap();
        assert_eq!(y.sup_norm(), rat(1, 2));
        assert_eq!(Vec00::zero().sup_norm(), rat_int(0));
    }

    #[test]
    fn lp_examples() {
        let x = Vec00::from_pairs([(0, rat_int(1)), (1, rat_int(1))]).unwrap();
        let v = x.lp_norm(&rat_int(2)).unwrap();
        assert!((v - 2f64.sqrt()).abs() < 1e-12);
        assert!((Vec00::unit(0).lp_norm(&rat(7, 2)).unwrap() - 1.0).abs() < 1e-12);
        let w = Vec00::block(iv(0, 3)).lp_norm(&rat_int(2)).unwrap();
        assert!((w - 2.0).abs() < 1e-12);
    }

    #[test]
    fn lp_rejects_p_below_one() {
        let x = Vec00::unit(0);
        assert!(matches!(
            x.lp_norm(&rat(1, 2)),
            Err(NormDomainError::ExponentBelowOne(_))
        ));
    }

    #[test]
    fn literal_round_trip_and_errors() {
        let x = Vec00::parse("2:1/2, 3:-1/3").unwrap();
        assert_eq!(x.coeff(2), rat(1, 2));
        assert_eq!(x.coeff(3), rat(-1, 3));
        assert_eq!(Vec00::parse(&x.to_string()).unwrap(), x);

        let err = Vec00::parse("2:1,,3:1").unwrap_err();
        assert_eq!(err.position, 4);

        let err = Vec00::parse("2:1,2:5").unwrap_err();
        assert!(err.message.contains("duplicate index 2"));

        assert!(Vec00::parse("x:1").is_err());
        assert!(Vec00::parse("1:1/0").is_err());
    }

    #[test]
    fn interval_rejects_inverted() {
        assert!(IndexInterval::new(3, 2).is_err());
    }

    prop_compose! {
        fn small_rational()(num in -9i64..=9, den in 1i64..=9) -> Rational {
            rat(num, den)
        }
    }

    prop_compose! {
        fn sparse_vector()(entries in prop::collection::btree_map(0usize..24, small_rational(), 0..8)) -> Vec00 {
            Vec00::from_pairs(entries).unwrap()
        }
    }

    proptest! {
        #[test]
        fn norm_axioms_exact(x in sparse_vector(), y in sparse_vector(), c in small_rational()) {
            // Absolute homogeneity and the triangle inequality for the two
            // exact base norms, plus definiteness.
            let cx = x.scale(&c);
            prop_assert_eq!(cx.l1_norm(), c.abs() * x.l1_norm());
            prop_assert_eq!(cx.sup_norm(), c.abs() * x.sup_norm());

            let s = x.add(&y);
            prop_assert!(s.l1_norm() <= x.l1_norm() + y.l1_norm());
            prop_assert!(s.sup_norm() <= x.sup_norm() + y.sup_norm());

            prop_assert_eq!(x.l1_norm().is_zero(), x.is_zero());
            prop_assert_eq!(x.sup_norm().is_zero(), x.is_zero());
        }

        #[test]
        fn unconditionality(x in sparse_vector(), flips in prop::collection::vec(any::<bool>(), 8)) {
            let flipped = Vec00::from_pairs(
                x.entries()
                    .enumerate()
                    .map(|(k, (i, c))| {
                        let sign = if flips.get(k).copied().unwrap_or(false) { -1 } else { 1 };
                        (i, c * rat_int(sign))
                    })
                    .collect::<Vec<_>>(),
            )
            .unwrap();
            prop_assert_eq!(flipped.l1_norm(), x.l1_norm());
            prop_assert_eq!(flipped.sup_norm(), x.sup_norm());
            let p = rat(3, 2);
            let a = flipped.lp_norm(&p).unwrap();
            let b = x.lp_norm(&p).unwrap();
            prop_assert!((a - b).abs() <= 1e-9 * (1.0 + b.abs()));
        }

        #[test]
        fn monotone_restriction(x in sparse_vector(), lo in 0usize..24, w1 in 0usize..24, w2 in 0usize..8) {
            // F ⊆ E implies norm(Fx) <= norm(Ex) for the base norms.
            let f = IndexInterval::new(lo, lo + w1).unwrap();
            let e = IndexInterval::new(lo.saturating_sub(w2), lo + w1 + w2).unwrap();
            let xf = x.restrict(f);
            let xe = x.restrict(e);
            prop_assert!(xf.l1_norm() <= xe.l1_norm());
            prop_assert!(xf.sup_norm() <= xe.sup_norm());
            let p = rat(5, 2);
            prop_assert!(xf.lp_norm(&p).unwrap() <= xe.lp_norm(&p).unwrap() + 1e-9);
        }

        #[test]
        fn norm_chain_sup_lp_l1(x in sparse_vector(), pn in 1i64..=6) {
            let p = rat_int(pn);
            let lp = x.lp_norm(&p).unwrap();
            let sup = x.sup_norm().to_f64().unwrap();
            let l1 = x.l1_norm().to_f64().unwrap();
            prop_assert!(sup <= lp + 1e-9);
            prop_assert!(lp <= l1 + 1e-9);
        }

        #[test]
        fn literal_display_round_trips(x in sparse_vector()) {
            prop_assert_eq!(Vec00::parse(&x.to_string()).unwrap(), x);
        }
    }
}
