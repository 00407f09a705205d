//! Multiplicative functions: `phi`, `Omega`, `tau_3`, polynomial root counts
//! `h(d)` and the densities `g(d)` attached to each sequence.

use std::collections::HashMap;

use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::{BigRational, Ratio};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::factor::{for_each_prime_in, SmallFactors, SpfSieve, DEFAULT_SIEVE_LIMIT};
use crate::poly::Polynomial;

/// Largest `x` accepted by [`partial_sums_gh`] and [`empirical_c`].
pub const PARTIAL_SUM_LIMIT: u64 = 10_000_000;

/// Partial sums are also returned as exact rationals up to this `x`.
pub const EXACT_SUM_LIMIT: u64 = 1_000;

/// Prime factorization of a machine word by trial division, ascending.
pub fn trial_factor(mut n: u64) -> SmallFactors {
    let mut out = SmallFactors::new();
    let mut take = |n: &mut u64, p: u64| {
        if *n % p == 0 {
            let mut e = 0;
            while *n % p == 0 {
                *n /= p;
                e += 1;
            }
            out.push((p, e));
        }
    };
    for p in [2u64, 3, 5] {
        take(&mut n, p);
    }
    let steps = [4u64, 2, 4, 2, 4, 6, 2, 6];
    let (mut p, mut i) = (7u64, 0);
    while p.saturating_mul(p) <= n {
        take(&mut n, p);
        p += steps[i];
        i = (i + 1) % 8;
    }
    if n > 1 {
        out.push((n, 1));
    }
    out
}

/// Euler's totient.
pub fn euler_phi(d: u64) -> u64 {
    assert!(d >= 1, "euler_phi needs d >= 1");
    trial_factor(d)
        .iter()
        .fold(d, |acc, &(p, _)| acc / p * (p - 1))
}

/// Number of prime factors counted with multiplicity.
pub fn big_omega(d: u64) -> u32 {
    assert!(d >= 1, "big_omega needs d >= 1");
    trial_factor(d).iter().map(|&(_, e)| e).sum()
}

/// Number of ordered triples `(d1, d2, d3)` with `d1 d2 d3 = d`.
pub fn tau3(d: u64) -> u64 {
    assert!(d >= 1, "tau3 needs d >= 1");
    trial_factor(d)
        .iter()
        .map(|&(_, e)| (e as u64 + 2) * (e as u64 + 1) / 2)
        .product()
}

/// `h(p^k)`: distinct roots of `F` modulo `p^k`.
pub fn poly_root_count_pk(f: &Polynomial, p: u64, k: u32) -> Result<u64> {
    if p < 2 || trial_factor(p).len() != 1 || trial_factor(p)[0].1 != 1 {
        return Err(Error::invalid("p", format!("{p} is not prime")));
    }
    if k == 0 {
        return Err(Error::invalid("k", "must be >= 1"));
    }
    f.root_count_prime_power(p, k)
}

/// `h(d)` as the product of `h(p^k)` over the prime powers of `d`.
pub fn poly_root_count(f: &Polynomial, d: u64) -> Result<u64> {
    if d == 0 {
        return Err(Error::invalid("d", "must be >= 1"));
    }
    let mut h = 1u64;
    for (p, e) in trial_factor(d) {
        h *= f.root_count_prime_power(p, e)?;
        if h == 0 {
            break;
        }
    }
    Ok(h)
}

/// `p` divides the leading coefficient or the discriminant of `f`.
fn is_ramified(f: &Polynomial, p: u64) -> bool {
    f.leading() % p as i64 == 0 || f.disc_divisible_by(p)
}

/// `h(p)` without the small-modulus residue scan, for bulk loops over primes.
fn h_prime(f: &Polynomial, p: u64) -> Result<u64> {
    if is_ramified(f, p) {
        f.root_count_prime_power(p, 1)
    } else {
        Ok(f.root_count_mod_prime(p))
    }
}

/// A multiplicative density `g` with values in `[0, 1]`.
///
/// Serialized as `{"kind":"reciprocal"}`,
/// `{"kind":"reciprocal_totient","shift":1}` or
/// `{"kind":"root_density","coeffs":[1,0,1]}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum GFunctionSpec {
    /// `g(d) = 1/d`.
    Reciprocal,
    /// `g(d) = 1/phi(d)` for `d` coprime to the shift, else 0.
    ReciprocalTotient {
        #[serde(default = "default_shift")]
        shift: i64,
    },
    /// `g(d) = h(d)/d` for the root count `h` of a polynomial.
    RootDensity {
        #[serde(rename = "coeffs")]
        poly: Polynomial,
    },
}

fn default_shift() -> i64 {
    1
}

impl GFunctionSpec {
    pub fn name(&self) -> String {
        match self {
            GFunctionSpec::Reciprocal => "1/d".into(),
            GFunctionSpec::ReciprocalTotient { shift } => format!("1/phi(d) (a={shift})"),
            GFunctionSpec::RootDensity { poly } => format!("h(d)/d for {poly}"),
        }
    }

    /// `g(p^e)` as a float, with `h(p)` supplied by the caller when needed.
    fn prime_power_value(&self, p: u64, e: u32, hp: &mut impl FnMut(u64, u32) -> Result<u64>) -> Result<f64> {
        let pe = (p as f64).powi(e as i32);
        Ok(match self {
            GFunctionSpec::Reciprocal => 1.0 / pe,
            GFunctionSpec::ReciprocalTotient { shift } => {
                if *shift as i128 % p as i128 == 0 {
                    0.0
                } else {
                    1.0 / (pe - pe / p as f64)
                }
            }
            GFunctionSpec::RootDensity { .. } => hp(p, e)? as f64 / pe,
        })
    }
}

/// `g(d)` as an exact reduced fraction.
pub fn g_eval(g: &GFunctionSpec, d: u64) -> Result<Ratio<u64>> {
    if d == 0 {
        return Err(Error::invalid("d", "must be >= 1"));
    }
    Ok(match g {
        GFunctionSpec::Reciprocal => Ratio::new(1, d),
        GFunctionSpec::ReciprocalTotient { shift } => {
            if (shift.unsigned_abs()).gcd(&d) != 1 {
                Ratio::from_integer(0)
            } else {
                Ratio::new(1, euler_phi(d))
            }
        }
        GFunctionSpec::RootDensity { poly } => Ratio::new(poly_root_count(poly, d)?, d),
    })
}

/// Kahan-Babuska compensated sum.
#[derive(Debug, Default, Clone, Copy)]
pub(crate) struct CompensatedSum {
    sum: f64,
    comp: f64,
}

impl CompensatedSum {
    pub(crate) fn add(&mut self, v: f64) {
        let t = self.sum + v;
        if self.sum.abs() >= v.abs() {
            self.comp += (self.sum - t) + v;
        } else {
            self.comp += (v - t) + self.sum;
        }
        self.sum = t;
    }

    pub(crate) fn value(&self) -> f64 {
        self.sum + self.comp
    }
}

/// `sum_{p <= x} g(p) log p - log x` at each requested `x` (any order),
/// in one pass over the primes up to the largest.
pub fn mertens_series(g: &GFunctionSpec, xs: &[u64]) -> Result<Vec<f64>> {
    if let Some(&bad) = xs.iter().find(|&&x| x < 2) {
        return Err(Error::invalid("x", format!("must be >= 2, got {bad}")));
    }
    let Some(&x_max) = xs.iter().max() else {
        return Ok(Vec::new());
    };
    if x_max > DEFAULT_SIEVE_LIMIT {
        return Err(Error::Budget {
            what: "prime sieve for the Mertens sum",
            requested: x_max as u128,
            limit: DEFAULT_SIEVE_LIMIT as u128,
        });
    }
    let mut order: Vec<usize> = (0..xs.len()).collect();
    order.sort_by_key(|&i| xs[i]);
    let mut out = vec![0.0; xs.len()];
    let mut next = 0;
    let mut acc = CompensatedSum::default();

    const BLOCK: u64 = 1 << 22;
    let mut lo = 2;
    while lo <= x_max {
        let hi = (lo + BLOCK - 1).min(x_max);
        let mut primes = Vec::new();
        for_each_prime_in(lo, hi, |p| primes.push(p));
        let terms: Vec<f64> = primes
            .par_iter()
            .map(|&p| {
                let gp = g.prime_power_value(p, 1, &mut |p, _| match g {
                    GFunctionSpec::RootDensity { poly } => h_prime(poly, p),
                    _ => Ok(0),
                })?;
                Ok(gp * (p as f64).ln())
            })
            .collect::<Result<_>>()?;
        for (&p, t) in primes.iter().zip(terms) {
            while next < order.len() && xs[order[next]] < p {
                out[order[next]] = acc.value() - (xs[order[next]] as f64).ln();
                next += 1;
            }
            acc.add(t);
        }
        lo = hi + 1;
    }
    for &i in &order[next..] {
        out[i] = acc.value() - (xs[i] as f64).ln();
    }
    Ok(out)
}

/// `sum_{p <= x} g(p) log p - log x`.
pub fn mertens_deviation(g: &GFunctionSpec, x: u64) -> Result<f64> {
    Ok(mertens_series(g, &[x])?[0])
}

/// Partial sums `sum_{n <= x} g(n)` and, for root densities,
/// `sum_{n <= x} h(n)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PartialSums {
    pub x: u64,
    pub sum_g: f64,
    pub sum_h: Option<u64>,
    /// Exact `sum g(n)` for `x <= EXACT_SUM_LIMIT`.
    #[serde(skip)]
    pub sum_g_exact: Option<BigRational>,
}

/// Evaluates `g(n)` for all `n <= limit` by factoring over a sieve.
struct BulkG<'a> {
    g: &'a GFunctionSpec,
    sieve: SpfSieve,
    // h(p) for unramified primes, indexed by p.
    h_unramified: Vec<u8>,
    h_ramified: HashMap<(u64, u32), u64>,
}

impl<'a> BulkG<'a> {
    fn new(g: &'a GFunctionSpec, limit: u64) -> Result<Self> {
        let sieve = SpfSieve::build(limit.max(2))?;
        let mut h_unramified = Vec::new();
        let mut h_ramified = HashMap::new();
        if let GFunctionSpec::RootDensity { poly } = g {
            let primes: Vec<u64> = (2..=limit).filter(|&n| sieve.is_prime(n)).collect();
            let hs: Vec<(u64, Option<u64>)> = primes
                .par_iter()
                .map(|&p| (p, (!is_ramified(poly, p)).then(|| poly.root_count_mod_prime(p))))
                .collect();
            h_unramified = vec![0u8; limit as usize + 1];
            for (p, h) in hs {
                match h {
                    Some(h) => h_unramified[p as usize] = h as u8,
                    None => {
                        let mut pe = p;
                        let mut e = 1;
                        loop {
                            h_ramified.insert((p, e), poly.root_count_prime_power(p, e)?);
                            match pe.checked_mul(p) {
                                Some(next) if next <= limit => {
                                    pe = next;
                                    e += 1;
                                }
                                _ => break,
                            }
                        }
                    }
                }
            }
        }
        Ok(BulkG {
            g,
            sieve,
            h_unramified,
            h_ramified,
        })
    }

    fn h_pe(&self, p: u64, e: u32) -> u64 {
        self.h_ramified
            .get(&(p, e))
            .copied()
            .unwrap_or(self.h_unramified[p as usize] as u64)
    }

    /// Returns `(g(n), h(n))`, with `h(n) = 0` unless `g` is a root density.
    fn eval(&self, n: u64, buf: &mut SmallFactors) -> (f64, u64) {
        self.sieve.factor(n, buf);
        match self.g {
            GFunctionSpec::RootDensity { .. } => {
                let h: u64 = buf.iter().map(|&(p, e)| self.h_pe(p, e)).product();
                (h as f64 / n as f64, h)
            }
            g => {
                let mut v = 1.0;
                for &(p, e) in buf.iter() {
                    v *= g
                        .prime_power_value(p, e, &mut |_, _| Ok(0))
                        .unwrap_or(0.0);
                }
                (v, 0)
            }
        }
    }
}

fn check_partial_limit(x: u64) -> Result<()> {
    if x == 0 {
        return Err(Error::invalid("x", "must be >= 1"));
    }
    if x > PARTIAL_SUM_LIMIT {
        return Err(Error::Budget {
            what: "partial sums of g",
            requested: x as u128,
            limit: PARTIAL_SUM_LIMIT as u128,
        });
    }
    Ok(())
}

/// Partial sums of `g` (and `h`) at each `x` in `xs`, in one pass.
pub fn partial_sums_series(g: &GFunctionSpec, xs: &[u64]) -> Result<Vec<PartialSums>> {
    for &x in xs {
        check_partial_limit(x)?;
    }
    let Some(&x_max) = xs.iter().max() else {
        return Ok(Vec::new());
    };
    let bulk = BulkG::new(g, x_max)?;
    let mut order: Vec<usize> = (0..xs.len()).collect();
    order.sort_by_key(|&i| xs[i]);
    let mut out: Vec<Option<PartialSums>> = vec![None; xs.len()];
    let mut acc = CompensatedSum::default();
    let mut sum_h = 0u64;
    let mut exact = BigRational::from_integer(BigInt::from(0));
    let mut buf = SmallFactors::new();
    let mut next = 0;
    for n in 1..=x_max {
        let (gn, hn) = bulk.eval(n, &mut buf);
        acc.add(gn);
        sum_h += hn;
        if n <= EXACT_SUM_LIMIT {
            exact += g_eval(g, n).map(|r| {
                BigRational::new(BigInt::from(*r.numer()), BigInt::from(*r.denom()))
            })?;
        }
        while next < order.len() && xs[order[next]] == n {
            out[order[next]] = Some(PartialSums {
                x: n,
                sum_g: acc.value(),
                sum_h: matches!(g, GFunctionSpec::RootDensity { .. }).then_some(sum_h),
                sum_g_exact: (n <= EXACT_SUM_LIMIT).then(|| exact.clone()),
            });
            next += 1;
        }
    }
    Ok(out.into_iter().map(|p| p.expect("every x visited")).collect())
}

/// `sum_{n <= x} g(n)` and `sum_{n <= x} h(n)`.
pub fn partial_sums_gh(g: &GFunctionSpec, x: u64) -> Result<PartialSums> {
    Ok(partial_sums_series(g, &[x])?.remove(0))
}

/// Smallest `C` with `g(d) <= C^Omega(d) / d` for all `2 <= d <= n_max`.
pub fn empirical_c(g: &GFunctionSpec, n_max: u64) -> Result<f64> {
    check_partial_limit(n_max)?;
    let bulk = BulkG::new(g, n_max)?;
    let mut c: f64 = 0.0;
    let mut buf = SmallFactors::new();
    for d in 2..=n_max {
        let (gd, _) = bulk.eval(d, &mut buf);
        let omega: u32 = buf.iter().map(|&(_, e)| e).sum();
        c = c.max((gd * d as f64).powf(1.0 / omega as f64));
    }
    Ok(c)
}

/// A constant `C` for which `g(d) <= C^Omega(d) / d` holds for every `d`:
/// 1 for `1/d`, 2 for `1/phi(d)`, and for root densities the largest of the
/// degree and the primes dividing the discriminant or leading coefficient.
pub fn recipe_c(g: &GFunctionSpec) -> Result<u64> {
    Ok(match g {
        GFunctionSpec::Reciprocal => 1,
        GFunctionSpec::ReciprocalTotient { .. } => 2,
        GFunctionSpec::RootDensity { poly } => {
            let mut c = poly.degree() as u64;
            for p in poly.disc_prime_divisors()? {
                c = c.max(p);
            }
            for (p, _) in trial_factor(poly.leading().unsigned_abs()) {
                c = c.max(p);
            }
            c
        }
    })
}
