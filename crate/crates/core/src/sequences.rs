//! The four indicator sequences under study and their counting functions
//! `N(x)` and `N_d(x)`.

use serde::{Deserialize, Serialize};

use crate::arith::GFunctionSpec;
use crate::error::{Error, Result};
use crate::factor::{count_primes_in_range, for_each_prime_in, DEFAULT_SIEVE_LIMIT};
use crate::poly::Polynomial;

/// Values of an irreducible polynomial `F(n)`, `n >= 1`, that are positive.
#[derive(Debug, Clone, PartialEq)]
pub struct PolySequence {
    poly: Polynomial,
    n0: u64,
    // Positive values F(m) for 1 <= m < n0, sorted and deduplicated.
    exceptions: Vec<u64>,
}

/// Exception lists beyond this length mean the polynomial is too large for
/// desk-scale work.
const MAX_EXCEPTIONS: u64 = 1_000_000;

impl PolySequence {
    pub fn new(poly: Polynomial) -> Result<Self> {
        if poly.degree() == 0 {
            return Err(Error::invalid("coeffs", "degree must be at least 1"));
        }
        if poly.leading() <= 0 {
            return Err(Error::invalid("coeffs", "leading coefficient must be positive"));
        }
        poly.check_irreducible()?;
        let n0 = poly.increasing_threshold();
        if n0 > MAX_EXCEPTIONS {
            return Err(Error::Budget {
                what: "polynomial monotonicity threshold",
                requested: n0 as u128,
                limit: MAX_EXCEPTIONS as u128,
            });
        }
        let mut exceptions: Vec<u64> = (1..n0)
            .filter_map(|m| poly.eval(m as i128))
            .filter(|&v| v >= 1 && v <= u64::MAX as i128)
            .map(|v| v as u64)
            .collect();
        exceptions.sort_unstable();
        exceptions.dedup();
        Ok(PolySequence {
            poly,
            n0,
            exceptions,
        })
    }

    pub fn poly(&self) -> &Polynomial {
        &self.poly
    }

    /// `F(m)` for `m >= n0`, saturating at `i128::MAX` on overflow.
    fn eval_sat(&self, m: u64) -> i128 {
        self.poly.eval(m as i128).unwrap_or(i128::MAX)
    }

    /// Largest `m >= n0` with `F(m) <= x`, or `None` if `F(n0) > x`.
    fn last_index_at_most(&self, x: u64) -> Option<u64> {
        let x = x as i128;
        if self.eval_sat(self.n0) > x {
            return None;
        }
        // F(m) >= m - n0 + F(n0) >= m - n0 + 1 on the increasing range.
        let (mut lo, mut hi) = (self.n0, self.n0 + x as u64);
        while lo < hi {
            let mid = lo + (hi - lo).div_ceil(2);
            if self.eval_sat(mid) <= x {
                lo = mid;
            } else {
                hi = mid - 1;
            }
        }
        Some(lo)
    }

    fn in_monotone_range(&self, n: u64) -> bool {
        self.last_index_at_most(n)
            .is_some_and(|m| self.eval_sat(m) == n as i128)
    }

    fn contains(&self, n: u64) -> bool {
        self.exceptions.binary_search(&n).is_ok() || self.in_monotone_range(n)
    }

    fn enumerate(&self, x: u64) -> Vec<u64> {
        let mut out: Vec<u64> = self.exceptions.iter().copied().filter(|&v| v <= x).collect();
        if let Some(last) = self.last_index_at_most(x) {
            out.extend((self.n0..=last).map(|m| self.eval_sat(m) as u64));
        }
        out.sort_unstable();
        out.dedup();
        out
    }

    fn count(&self, x: u64) -> u64 {
        let mono = self
            .last_index_at_most(x)
            .map_or(0, |last| last - self.n0 + 1);
        let extra = self
            .exceptions
            .iter()
            .filter(|&&v| v <= x && !self.in_monotone_range(v))
            .count() as u64;
        mono + extra
    }
}

/// Which arithmetic sequence `(a_n)` is sampled. All are 0/1 indicators.
///
/// Serialized with a `kind` tag: `{"kind":"uniform"}`,
/// `{"kind":"shifted_primes","shift":1}`, `{"kind":"poly","coeffs":[1,0,1]}`
/// (constant-first) and `{"kind":"thue_morse"}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawSpec", into = "RawSpec")]
pub enum SequenceSpec {
    /// Every positive integer.
    Uniform,
    /// `p - shift` over primes `p`, keeping positive values.
    ShiftedPrimes { shift: i64 },
    /// `F(n)` for `n >= 1`, keeping positive values.
    Poly(PolySequence),
    /// Positive integers with an even number of ones in binary.
    ThueMorse,
}

#[derive(Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
enum RawSpec {
    Uniform,
    ShiftedPrimes {
        #[serde(default = "default_shift")]
        shift: i64,
    },
    Poly {
        coeffs: Vec<i64>,
    },
    ThueMorse,
}

fn default_shift() -> i64 {
    1
}

impl TryFrom<RawSpec> for SequenceSpec {
    type Error = Error;

    fn try_from(raw: RawSpec) -> Result<Self> {
        Ok(match raw {
            RawSpec::Uniform => SequenceSpec::Uniform,
            RawSpec::ShiftedPrimes { shift } => SequenceSpec::ShiftedPrimes { shift },
            RawSpec::Poly { coeffs } => SequenceSpec::polynomial(coeffs)?,
            RawSpec::ThueMorse => SequenceSpec::ThueMorse,
        })
    }
}

impl From<SequenceSpec> for RawSpec {
    fn from(s: SequenceSpec) -> Self {
        match s {
            SequenceSpec::Uniform => RawSpec::Uniform,
            SequenceSpec::ShiftedPrimes { shift } => RawSpec::ShiftedPrimes { shift },
            SequenceSpec::Poly(p) => RawSpec::Poly {
                coeffs: p.poly.coeffs().to_vec(),
            },
            SequenceSpec::ThueMorse => RawSpec::ThueMorse,
        }
    }
}

/// `N(x)` and `N_d(x)` at one `(x, d)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct CountPair {
    pub n_total: u64,
    pub n_div: u64,
    pub x: u64,
    pub d: u64,
}

/// A rational number `num / den`, used for the level of distribution.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Level {
    pub num: u32,
    pub den: u32,
}

impl Level {
    pub fn value(&self) -> f64 {
        self.num as f64 / self.den as f64
    }
}

impl SequenceSpec {
    /// Polynomial values; rejects reducible, non-positive-leading or
    /// unsupported polynomials.
    pub fn polynomial(coeffs: Vec<i64>) -> Result<Self> {
        Ok(SequenceSpec::Poly(PolySequence::new(Polynomial::new(coeffs)?)?))
    }

    pub fn name(&self) -> String {
        match self {
            SequenceSpec::Uniform => "uniform".into(),
            SequenceSpec::ShiftedPrimes { shift } => format!("shifted_primes(a={shift})"),
            SequenceSpec::Poly(p) => format!("poly({})", p.poly),
            SequenceSpec::ThueMorse => "thue_morse".into(),
        }
    }

    /// Known level of distribution.
    pub fn level(&self) -> Level {
        match self {
            SequenceSpec::Uniform | SequenceSpec::ThueMorse => Level { num: 1, den: 1 },
            SequenceSpec::ShiftedPrimes { .. } => Level { num: 1, den: 2 },
            SequenceSpec::Poly(p) => Level {
                num: 1,
                den: p.poly.degree() as u32,
            },
        }
    }

    /// The multiplicative density `g` attached to the sequence. Thue-Morse
    /// uses `1/d`, an editorial default.
    pub fn g_function(&self) -> GFunctionSpec {
        match self {
            SequenceSpec::Uniform | SequenceSpec::ThueMorse => GFunctionSpec::Reciprocal,
            SequenceSpec::ShiftedPrimes { shift } => {
                GFunctionSpec::ReciprocalTotient { shift: *shift }
            }
            SequenceSpec::Poly(p) => GFunctionSpec::RootDensity {
                poly: p.poly.clone(),
            },
        }
    }

    /// Members are dense enough that a full sieve over `[1, x]` pays off.
    pub fn is_dense(&self) -> bool {
        !matches!(self, SequenceSpec::Poly(_))
    }

    /// True iff `a_n = 1`.
    pub fn membership(&self, n: u64) -> bool {
        if n == 0 {
            return false;
        }
        match self {
            SequenceSpec::Uniform => true,
            SequenceSpec::ThueMorse => n.count_ones() % 2 == 0,
            SequenceSpec::ShiftedPrimes { shift } => {
                let p = n as i128 + *shift as i128;
                p >= 2 && p <= u64::MAX as i128 && is_prime_u64(p as u64)
            }
            SequenceSpec::Poly(p) => p.contains(n),
        }
    }

    /// Prime range `[lo, hi]` whose shifts land in `[1, x]`.
    fn shifted_prime_range(shift: i64, x: u64) -> Option<(u64, u64)> {
        let lo = (shift as i128 + 1).max(2);
        let hi = x as i128 + shift as i128;
        if hi < lo {
            return None;
        }
        Some((lo as u64, hi.min(u64::MAX as i128) as u64))
    }

    fn check_budget(&self, x: u64, max: u64) -> Result<()> {
        let needed = match self {
            SequenceSpec::ShiftedPrimes { shift } => {
                Self::shifted_prime_range(*shift, x).map_or(0, |(_, hi)| hi)
            }
            SequenceSpec::Poly(_) => 0,
            _ => x,
        };
        if needed > max {
            return Err(Error::Budget {
                what: "sequence enumeration",
                requested: needed as u128,
                limit: max as u128,
            });
        }
        Ok(())
    }

    /// Members `<= x`, ascending, with the default capacity.
    pub fn enumerate(&self, x: u64) -> Result<Vec<u64>> {
        self.enumerate_within(x, DEFAULT_SIEVE_LIMIT)
    }

    /// Members `<= x`, ascending. Shifted primes come from a segmented prime
    /// sieve and polynomial values from evaluating `F`; `max` caps the range
    /// that may be sieved or scanned.
    pub fn enumerate_within(&self, x: u64, max: u64) -> Result<Vec<u64>> {
        if x == 0 {
            return Err(Error::invalid("x", "must be >= 1"));
        }
        self.check_budget(x, max)?;
        Ok(match self {
            SequenceSpec::Uniform => (1..=x).collect(),
            SequenceSpec::ThueMorse => (1..=x).filter(|n| n.count_ones() % 2 == 0).collect(),
            SequenceSpec::ShiftedPrimes { shift } => {
                let mut out = Vec::new();
                if let Some((lo, hi)) = Self::shifted_prime_range(*shift, x) {
                    for_each_prime_in(lo, hi, |p| out.push((p as i128 - *shift as i128) as u64));
                }
                out
            }
            SequenceSpec::Poly(p) => p.enumerate(x),
        })
    }

    /// `N(x)`.
    pub fn count(&self, x: u64) -> Result<u64> {
        if x == 0 {
            return Err(Error::invalid("x", "must be >= 1"));
        }
        self.check_budget(x, DEFAULT_SIEVE_LIMIT)?;
        Ok(match self {
            SequenceSpec::Uniform => x,
            SequenceSpec::ThueMorse => thue_morse_count(x),
            SequenceSpec::ShiftedPrimes { shift } => Self::shifted_prime_range(*shift, x)
                .map_or(0, |(lo, hi)| count_primes_in_range(lo, hi)),
            SequenceSpec::Poly(p) => p.count(x),
        })
    }

    /// `N_d(x)`: members `<= x` divisible by `d`.
    pub fn count_in_class(&self, x: u64, d: u64) -> Result<u64> {
        if d == 0 {
            return Err(Error::invalid("d", "must be >= 1"));
        }
        if x == 0 {
            return Err(Error::invalid("x", "must be >= 1"));
        }
        Ok(match self {
            SequenceSpec::Uniform => x / d,
            SequenceSpec::ThueMorse => {
                self.check_budget(x, DEFAULT_SIEVE_LIMIT)?;
                (1..=x / d)
                    .filter(|k| (k * d).count_ones() % 2 == 0)
                    .count() as u64
            }
            _ => self
                .enumerate(x)?
                .into_iter()
                .filter(|n| n % d == 0)
                .count() as u64,
        })
    }

    pub fn count_pair(&self, x: u64, d: u64) -> Result<CountPair> {
        Ok(CountPair {
            n_total: self.count(x)?,
            n_div: self.count_in_class(x, d)?,
            x,
            d,
        })
    }
}

/// Number of `1 <= n <= x` with an even number of binary ones.
pub fn thue_morse_count(x: u64) -> u64 {
    // Count over [0, x], then drop n = 0.
    let mut total = 0u64;
    let mut ones = 0u32;
    for bit in (0..64).rev() {
        if x >> bit & 1 == 1 {
            // Prefix of x above `bit`, a zero at `bit`, free lower bits.
            total += if bit >= 1 {
                1u64 << (bit - 1)
            } else {
                u64::from(ones % 2 == 0)
            };
            ones += 1;
        }
    }
    if ones % 2 == 0 {
        total += 1;
    }
    total - 1
}

/// Deterministic primality for `u64` by trial division (intended for
/// membership queries, not bulk work).
pub(crate) fn is_prime_u64(n: u64) -> bool {
    if n < 2 {
        return false;
    }
    for p in [2u64, 3, 5] {
        if n % p == 0 {
            return n == p;
        }
    }
    let mut d = 7u64;
    let steps = [4u64, 2, 4, 2, 4, 6, 2, 6];
    let mut i = 0;
    while d.saturating_mul(d) <= n {
        if n % d == 0 {
            return false;
        }
        d += steps[i];
        i = (i + 1) % 8;
    }
    true
}

#[cfg(test)]
mod tests {
    use super::*;

    fn poly(c: &[i64]) -> SequenceSpec {
        SequenceSpec::polynomial(c.to_vec()).unwrap()
    }

    #[test]
    fn membership_examples() {
        assert!(SequenceSpec::ThueMorse.membership(3));
        assert!(!SequenceSpec::ThueMorse.membership(7));
        assert!(SequenceSpec::ShiftedPrimes { shift: 1 }.membership(4));
        assert!(!SequenceSpec::ShiftedPrimes { shift: 1 }.membership(8));
        assert!(poly(&[1, 0, 1]).membership(10));
        assert!(!poly(&[1, 0, 1]).membership(11));
        assert!(!SequenceSpec::Uniform.membership(0));
    }

    #[test]
    fn enumerate_examples() {
        assert_eq!(SequenceSpec::Uniform.enumerate(5).unwrap(), vec![1, 2, 3, 4, 5]);
        assert_eq!(
            SequenceSpec::ShiftedPrimes { shift: 1 }.enumerate(10).unwrap(),
            vec![1, 2, 4, 6, 10]
        );
        assert_eq!(
            SequenceSpec::ShiftedPrimes { shift: -1 }.enumerate(10).unwrap(),
            vec![3, 4, 6, 8]
        );
        assert!(matches!(
            SequenceSpec::polynomial(vec![0, 0, 1]),
            Err(Error::Reducible { .. })
        ));
        assert!(SequenceSpec::polynomial(vec![1, 0, -1]).is_err());
        assert!(SequenceSpec::polynomial(vec![-1, 0, -1]).is_err());
    }

    #[test]
    fn count_examples() {
        let u = SequenceSpec::Uniform;
        assert_eq!(u.count_pair(100, 7).unwrap(), CountPair { n_total: 100, n_div: 14, x: 100, d: 7 });
        let sp = SequenceSpec::ShiftedPrimes { shift: 1 };
        assert_eq!(sp.count_in_class(10, 2).unwrap(), 4);
        assert_eq!(sp.count(10).unwrap(), 5);
        // X^2 + 1 at x = 101, d = 5: brute force over n <= 10.
        let f = poly(&[1, 0, 1]);
        let brute = (1..=10i64).map(|n| n * n + 1).filter(|v| v % 5 == 0).count() as u64;
        assert_eq!(f.count_in_class(101, 5).unwrap(), brute);
        assert_eq!(f.count(101).unwrap(), 10);
    }

    #[test]
    fn polynomial_with_small_exceptions() {
        // F = X^2 - 5X + 7: F(1..) = 3, 1, 1, 3, 7, 13, ... (not injective).
        let f = poly(&[7, -5, 1]);
        let members = f.enumerate(50).unwrap();
        let mut brute: Vec<u64> = (1..=60i64)
            .map(|n| n * n - 5 * n + 7)
            .filter(|&v| (1..=50).contains(&v))
            .map(|v| v as u64)
            .collect();
        brute.sort_unstable();
        brute.dedup();
        assert_eq!(members, brute);
        assert_eq!(f.count(50).unwrap(), brute.len() as u64);
    }

    #[test]
    fn enumerate_agrees_with_membership() {
        let specs = [
            SequenceSpec::Uniform,
            SequenceSpec::ThueMorse,
            SequenceSpec::ShiftedPrimes { shift: 1 },
            SequenceSpec::ShiftedPrimes { shift: -1 },
            SequenceSpec::ShiftedPrimes { shift: 3 },
            poly(&[1, 0, 1]),
            poly(&[-2, 0, 0, 1]),
            poly(&[-1, -1, 1]),
            poly(&[7, -5, 1]),
        ];
        for spec in &specs {
            let x = 10_000;
            let filtered: Vec<u64> = (1..=x).filter(|&n| spec.membership(n)).collect();
            assert_eq!(spec.enumerate(x).unwrap(), filtered, "{}", spec.name());
            assert_eq!(spec.count(x).unwrap(), filtered.len() as u64);
            for d in [1, 2, 3, 7, 10, 97] {
                let pair = spec.count_pair(x, d).unwrap();
                assert!(pair.n_div <= pair.n_total);
                assert_eq!(pair.n_div, filtered.iter().filter(|&&n| n % d == 0).count() as u64);
            }
        }
    }

    #[test]
    fn thue_morse_count_matches_filter() {
        for x in 1..2000u64 {
            let brute = (1..=x).filter(|n| n.count_ones() % 2 == 0).count() as u64;
            assert_eq!(thue_morse_count(x), brute, "x = {x}");
        }
    }

    #[test]
    fn regularity_ratios() {
        // N(x^c)/N(x) decreases along the x-grid for every family.
        for spec in [
            SequenceSpec::Uniform,
            SequenceSpec::ShiftedPrimes { shift: 1 },
            SequenceSpec::ThueMorse,
            poly(&[1, 0, 1]),
        ] {
            for c in [0.5, 0.9] {
                let ratios: Vec<f64> = [1e4, 1e5, 1e6]
                    .iter()
                    .map(|&x: &f64| {
                        let small = x.powf(c).floor() as u64;
                        spec.count(small).unwrap() as f64 / spec.count(x as u64).unwrap() as f64
                    })
                    .collect();
                assert!(ratios.windows(2).all(|w| w[1] <= w[0] * 1.02), "{} {c} {ratios:?}", spec.name());
                if c == 0.5 && spec.is_dense() {
                    assert!(ratios[2] < 0.2);
                }
            }
        }
    }

    #[test]
    fn levels_and_serde() {
        assert_eq!(SequenceSpec::Uniform.level().value(), 1.0);
        assert_eq!(SequenceSpec::ShiftedPrimes { shift: 1 }.level().value(), 0.5);
        assert_eq!(poly(&[-2, 0, 0, 1]).level(), Level { num: 1, den: 3 });
        assert_eq!(SequenceSpec::ThueMorse.level().value(), 1.0);

        let s: SequenceSpec = serde_json::from_str(r#"{"kind":"poly","coeffs":[1,0,1]}"#).unwrap();
        assert_eq!(s, poly(&[1, 0, 1]));
        assert_eq!(serde_json::to_string(&s).unwrap(), r#"{"kind":"poly","coeffs":[1,0,1]}"#);
        let s: SequenceSpec = serde_json::from_str(r#"{"kind":"shifted_primes","shift":-1}"#).unwrap();
        assert_eq!(s, SequenceSpec::ShiftedPrimes { shift: -1 });
        assert!(serde_json::from_str::<SequenceSpec>(r#"{"kind":"poly","coeffs":[0,0,1]}"#).is_err());
        assert!(serde_json::from_str::<SequenceSpec>(r#"{"kind":"primes"}"#).is_err());
    }
}
