//! Empirical estimators over the members of a sequence up to `x`.

use num_rational::Ratio;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use smallvec::SmallVec;

use crate::arith::{g_eval, CompensatedSum, GFunctionSpec};
use crate::dickman::{RhoTable, DEFAULT_PER_UNIT};
use crate::error::{Error, Result};
use crate::estimate::{map_chunks, Estimate, Moments};
use crate::factor::{
    for_each_prime_in, isqrt, log_spectrum_into, Factorizer, SmallFactors, DEFAULT_SIEVE_LIMIT,
    SPF_LIMIT,
};
use crate::pdprocess::BoxFunction;
use crate::rng::{stream, unit_hash};
use crate::sequences::SequenceSpec;

/// Default cap on the number of members kept before subsampling.
pub const DEFAULT_MAX_MEMBERS: u64 = 20_000_000;

/// Largest `x` accepted by [`lod_error_sum`] for sequences that must be
/// enumerated.
pub const LOD_ENUMERATION_LIMIT: u64 = 1_000_000_000;

/// Largest number of moduli `d` in [`lod_error_sum`].
pub const LOD_MODULI_LIMIT: u64 = 100_000_000;

/// Largest `x` for which members are factored.
pub const FACTOR_LIMIT: u64 = 1 << 62;

/// How a sample was thinned when the full member set was over budget.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Subsample {
    pub seed: u64,
    /// Expected fraction of members kept.
    pub rate: f64,
    /// `"draws"` (independent uniform draws) or `"bernoulli"` (each member
    /// kept independently with probability `rate`).
    pub method: String,
}

#[derive(Debug, Clone)]
enum Members {
    Range(u64),
    List(Vec<u64>),
}

/// The members `u <= x` of a sequence (or a seeded uniform subsample), with a
/// factorization back end able to factor all of them.
#[derive(Debug, Clone)]
pub struct SampleSet {
    spec: SequenceSpec,
    x: u64,
    members: Members,
    n_total: u64,
    subsample: Option<Subsample>,
    factorizer: Factorizer,
}

/// Build options for [`SampleSet`].
#[derive(Debug, Clone, Copy)]
pub struct SampleOptions {
    pub max_members: u64,
    pub seed: u64,
}

impl Default for SampleOptions {
    fn default() -> Self {
        SampleOptions {
            max_members: DEFAULT_MAX_MEMBERS,
            seed: 0,
        }
    }
}

impl SampleSet {
    /// All members up to `x`, or a uniform subsample of about
    /// `max_members` of them when there are more.
    pub fn build(spec: &SequenceSpec, x: u64, opts: SampleOptions) -> Result<Self> {
        if x == 0 {
            return Err(Error::invalid("x", "must be >= 1"));
        }
        if x > FACTOR_LIMIT {
            return Err(Error::Budget {
                what: "sample range x",
                requested: x as u128,
                limit: FACTOR_LIMIT as u128,
            });
        }
        if opts.max_members == 0 {
            return Err(Error::invalid("max_members", "must be >= 1"));
        }
        let n_total = spec.count(x)?;
        let exhaustive = n_total <= opts.max_members;
        let (members, subsample) = if exhaustive {
            let members = match spec {
                SequenceSpec::Uniform => Members::Range(x),
                _ => Members::List(spec.enumerate(x)?),
            };
            (members, None)
        } else {
            let rate = opts.max_members as f64 / n_total as f64;
            let (list, method) = match spec {
                SequenceSpec::Uniform | SequenceSpec::ThueMorse => {
                    (uniform_draws(spec, x, opts.max_members, opts.seed), "draws")
                }
                SequenceSpec::ShiftedPrimes { shift } => {
                    let (lo, hi) = shifted_range(*shift, x);
                    if hi > DEFAULT_SIEVE_LIMIT {
                        return Err(Error::Budget {
                            what: "prime sieve for shifted primes",
                            requested: hi as u128,
                            limit: DEFAULT_SIEVE_LIMIT as u128,
                        });
                    }
                    let mut out = Vec::new();
                    if lo <= hi {
                        for_each_prime_in(lo, hi, |p| {
                            let n = (p as i128 - *shift as i128) as u64;
                            if unit_hash(opts.seed, n) < rate {
                                out.push(n);
                            }
                        });
                    }
                    (out, "bernoulli")
                }
                SequenceSpec::Poly(_) => {
                    let mut out = spec.enumerate(x)?;
                    out.retain(|&n| unit_hash(opts.seed, n) < rate);
                    (out, "bernoulli")
                }
            };
            (
                Members::List(list),
                Some(Subsample {
                    seed: opts.seed,
                    rate,
                    method: method.into(),
                }),
            )
        };
        let factorizer = Factorizer::for_range(
            x,
            exhaustive && spec.is_dense() && x <= SPF_LIMIT,
            DEFAULT_SIEVE_LIMIT,
        )?;
        Ok(SampleSet {
            spec: spec.clone(),
            x,
            members,
            n_total,
            subsample,
            factorizer,
        })
    }

    /// A sample made of the given values, each of which must be a member
    /// `<= x`. Reported as exhaustive over those values.
    pub fn from_values(spec: &SequenceSpec, x: u64, mut values: Vec<u64>) -> Result<Self> {
        if let Some(&bad) = values.iter().find(|&&u| u > x || !spec.membership(u)) {
            return Err(Error::invalid(
                "values",
                format!("{bad} is not a member of {} up to {x}", spec.name()),
            ));
        }
        values.sort_unstable();
        Ok(SampleSet {
            spec: spec.clone(),
            x,
            n_total: values.len() as u64,
            members: Members::List(values),
            subsample: None,
            factorizer: Factorizer::for_range(x, false, DEFAULT_SIEVE_LIMIT)?,
        })
    }

    pub fn spec(&self) -> &SequenceSpec {
        &self.spec
    }

    pub fn x(&self) -> u64 {
        self.x
    }

    /// Number of sampled members.
    pub fn len(&self) -> u64 {
        match &self.members {
            Members::Range(x) => *x,
            Members::List(v) => v.len() as u64,
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// `N(x)`, the full member count.
    pub fn n_total(&self) -> u64 {
        self.n_total
    }

    pub fn is_exhaustive(&self) -> bool {
        self.subsample.is_none()
    }

    pub fn subsample(&self) -> Option<&Subsample> {
        self.subsample.as_ref()
    }

    #[inline]
    fn member(&self, i: u64) -> u64 {
        match &self.members {
            Members::Range(_) => i + 1,
            Members::List(v) => v[i as usize],
        }
    }

    /// Members in ascending order (draws may repeat).
    pub fn members(&self) -> Box<dyn Iterator<Item = u64> + '_> {
        match &self.members {
            Members::Range(x) => Box::new(1..=*x),
            Members::List(v) => Box::new(v.iter().copied()),
        }
    }

    /// Folds `f(acc, u, factors, spectrum)` over fixed chunks of members in
    /// parallel; the per-chunk results come back in member order.
    pub fn fold_spectra<T, I, F>(&self, init: I, f: F) -> Result<Vec<T>>
    where
        T: Send,
        I: Fn() -> T + Sync,
        F: Fn(&mut T, u64, &[(u64, u32)], &[f64]) + Sync,
    {
        self.fold(true, init, f)
    }

    /// As [`SampleSet::fold_spectra`] without computing spectra (the slice
    /// passed to `f` is empty).
    pub fn fold_factors<T, I, F>(&self, init: I, f: F) -> Result<Vec<T>>
    where
        T: Send,
        I: Fn() -> T + Sync,
        F: Fn(&mut T, u64, &[(u64, u32)], &[f64]) + Sync,
    {
        self.fold(false, init, f)
    }

    fn fold<T, I, F>(&self, spectra: bool, init: I, f: F) -> Result<Vec<T>>
    where
        T: Send,
        I: Fn() -> T + Sync,
        F: Fn(&mut T, u64, &[(u64, u32)], &[f64]) + Sync,
    {
        map_chunks(self.len(), |range| {
            let mut acc = init();
            let mut factors = SmallFactors::new();
            let mut spectrum: SmallVec<[f64; 32]> = SmallVec::new();
            for i in range {
                let u = self.member(i);
                self.factorizer.factor_into(u, &mut factors)?;
                if spectra {
                    log_spectrum_into(u, &factors, &mut spectrum);
                }
                f(&mut acc, u, &factors, &spectrum);
            }
            Ok(acc)
        })
        .into_iter()
        .collect()
    }

    fn count_where(&self, pred: impl Fn(u64, &[(u64, u32)], &[f64]) -> bool + Sync) -> Result<Estimate> {
        self.non_empty()?;
        let parts = self.fold_spectra(|| 0u64, |acc, u, fs, sp| *acc += pred(u, fs, sp) as u64)?;
        Ok(Estimate::binomial(parts.iter().sum(), self.len()))
    }

    fn non_empty(&self) -> Result<()> {
        if self.is_empty() {
            return Err(Error::EmptySample);
        }
        Ok(())
    }
}

fn shifted_range(shift: i64, x: u64) -> (u64, u64) {
    let lo = (shift as i128 + 1).max(2) as u64;
    let hi = (x as i128 + shift as i128).max(0) as u64;
    (lo, hi)
}

/// `n` independent uniform members of `[1, x]` by rejection, sorted.
fn uniform_draws(spec: &SequenceSpec, x: u64, n: u64, seed: u64) -> Vec<u64> {
    use rand::Rng;
    let mut out: Vec<u64> = map_chunks(n, |range| {
        let mut v = Vec::with_capacity((range.end - range.start) as usize);
        for i in range {
            let mut rng = stream(seed, i);
            loop {
                let u = rng.random_range(1..=x);
                if spec.membership(u) {
                    v.push(u);
                    break;
                }
            }
        }
        v
    })
    .concat();
    out.par_sort_unstable();
    out
}

/// `x^e`, snapped to the nearest integer when within rounding error of it.
pub fn real_pow(x: u64, e: f64) -> f64 {
    let v = (x as f64).powf(e);
    let r = v.round();
    if (v - r).abs() <= 1e-9 * v.max(1.0) {
        r
    } else {
        v
    }
}

/// Mean of the distinct-index tuple sum of `eta` over normalized spectra.
pub fn empirical_corr(s: &SampleSet, eta: &BoxFunction) -> Result<Estimate> {
    s.non_empty()?;
    let parts = s.fold_spectra(Moments::default, |m, _, _, sp| m.push(eta.distinct_tuple_sum(sp)))?;
    let mut total = Moments::default();
    for p in &parts {
        total.merge(p);
    }
    Ok(total.estimate())
}

fn check_thresholds(c: &[f64]) -> Result<()> {
    if c.is_empty() {
        return Err(Error::invalid("thresholds", "need at least one threshold"));
    }
    if c.iter().any(|&v| !(v > 0.0 && v <= 1.0)) {
        return Err(Error::invalid("thresholds", "each threshold must be in (0, 1]"));
    }
    Ok(())
}

/// Frequency of `log p_j / log u <= c_j` for every `j <= k`.
pub fn empirical_joint_cdf(s: &SampleSet, c: &[f64]) -> Result<Estimate> {
    check_thresholds(c)?;
    s.count_where(|_, _, sp| {
        c.iter()
            .enumerate()
            .all(|(j, &cj)| sp.get(j).copied().unwrap_or(0.0) <= cj)
    })
}

/// Frequency of `P+(u) >= u^(1 - eps)`, i.e. `log p_1 / log u >= 1 - eps`.
/// `u = 1` always counts.
pub fn tail_frequency(s: &SampleSet, eps: f64) -> Result<Estimate> {
    if !(eps > 0.0 && eps < 1.0) {
        return Err(Error::invalid("eps", "must be in (0, 1)"));
    }
    let t = 1.0 - eps;
    s.count_where(|_, _, sp| sp[0] >= t)
}

/// `log P+(u) / log u` for every sampled `u`, in member order.
pub fn largest_normalized(s: &SampleSet) -> Result<Vec<f64>> {
    Ok(s.fold_spectra(Vec::new, |v, _, _, sp| v.push(sp[0]))?.concat())
}

/// One-sample Kolmogorov-Smirnov statistic `sup |F_n - F|` against a
/// continuous reference CDF. Ties are handled by comparing against both
/// one-sided limits of the empirical CDF.
pub fn ks_distance(mut values: Vec<f64>, cdf: impl Fn(f64) -> Result<f64>) -> Result<f64> {
    if values.is_empty() {
        return Err(Error::EmptySample);
    }
    if values.iter().any(|v| v.is_nan()) {
        return Err(Error::invalid("values", "contains NaN"));
    }
    values.par_sort_unstable_by(f64::total_cmp);
    let n = values.len() as f64;
    let mut d: f64 = 0.0;
    let mut i = 0;
    while i < values.len() {
        let v = values[i];
        let mut j = i + 1;
        while j < values.len() && values[j] == v {
            j += 1;
        }
        let f = cdf(v)?;
        d = d.max((f - i as f64 / n).abs()).max((j as f64 / n - f).abs());
        i = j;
    }
    Ok(d)
}

/// KS distance between `log P+(u) / log u` and `c -> rho(1/c)`.
pub fn ks_vs_dickman(s: &SampleSet) -> Result<f64> {
    let values = largest_normalized(s)?;
    let min = values.iter().copied().fold(f64::INFINITY, f64::min);
    if values.is_empty() {
        return Err(Error::EmptySample);
    }
    let u_max = ((1.0 / min).ceil() as u32 + 1).max(2);
    let table = RhoTable::build(DEFAULT_PER_UNIT, u_max)?;
    ks_distance(values, |c| table.cdf_l1(c))
}

/// Result of [`lod_error_sum`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LodResult {
    pub x: u64,
    pub c: f64,
    /// Largest modulus, `floor(x^c)`.
    pub d_max: u64,
    pub n_total: u64,
    /// `sum_{d <= x^c} |N_d(x) - g(d) N(x)| / N(x)`.
    pub normalized_sum: f64,
    /// `max_d |N_d(x) - g(d) N(x)|`.
    pub max_abs_r: f64,
}

/// Level-of-distribution error sum for the sequence's own `g`.
pub fn lod_error_sum(spec: &SequenceSpec, x: u64, c: f64) -> Result<LodResult> {
    lod_error_sum_with(spec, &spec.g_function(), x, c)
}

/// Level-of-distribution error sum with an explicit `g`.
pub fn lod_error_sum_with(spec: &SequenceSpec, g: &GFunctionSpec, x: u64, c: f64) -> Result<LodResult> {
    if !(c > 0.0 && c < 1.0) {
        return Err(Error::invalid("c", "must be in (0, 1)"));
    }
    if x < 2 {
        return Err(Error::invalid("x", "must be >= 2"));
    }
    let d_max = real_pow(x, c).floor() as u64;
    if d_max > LOD_MODULI_LIMIT {
        return Err(Error::Budget {
            what: "number of moduli d <= x^c",
            requested: d_max as u128,
            limit: LOD_MODULI_LIMIT as u128,
        });
    }
    let counts: Box<dyn Fn(u64) -> u64 + Sync> = match spec {
        SequenceSpec::Uniform => Box::new(move |d| x / d),
        _ => {
            if x > LOD_ENUMERATION_LIMIT {
                return Err(Error::Budget {
                    what: "enumeration for level-of-distribution sums",
                    requested: x as u128,
                    limit: LOD_ENUMERATION_LIMIT as u128,
                });
            }
            let members = spec.enumerate(x)?;
            let harmonic = (d_max as f64).ln() + 1.0;
            if (x as f64) * harmonic < members.len() as f64 * d_max as f64 {
                let mut bits = vec![0u64; (x / 64 + 1) as usize];
                for &n in &members {
                    bits[(n / 64) as usize] |= 1 << (n % 64);
                }
                Box::new(move |d| {
                    (1..=x / d)
                        .filter(|k| {
                            let n = k * d;
                            bits[(n / 64) as usize] >> (n % 64) & 1 == 1
                        })
                        .count() as u64
                })
            } else {
                Box::new(move |d| members.iter().filter(|&&n| n % d == 0).count() as u64)
            }
        }
    };
    let n_total = counts(1);
    if n_total == 0 {
        return Err(Error::EmptySample);
    }
    let r: Vec<f64> = (1..=d_max)
        .into_par_iter()
        .map(|d| {
            let gd: Ratio<u64> = g_eval(g, d)?;
            let (num, den) = (*gd.numer() as i128, *gd.denom() as i128);
            let diff = counts(d) as i128 * den - n_total as i128 * num;
            Ok(diff.unsigned_abs() as f64 / den as f64)
        })
        .collect::<Result<_>>()?;
    let mut sum = CompensatedSum::default();
    let mut max_abs_r: f64 = 0.0;
    for &v in &r {
        sum.add(v);
        max_abs_r = max_abs_r.max(v);
    }
    Ok(LodResult {
        x,
        c,
        d_max,
        n_total,
        normalized_sum: sum.value() / n_total as f64,
        max_abs_r,
    })
}

/// Result of [`repeated_factor_frequency`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RepeatedResult {
    pub estimate: Estimate,
    /// Smallest and largest prime allowed by the closed window
    /// `[x^alpha, x^c]`.
    pub p_lo: u64,
    pub p_hi: u64,
    /// `sum g(p^2)` over primes in the window with `p^2 <= x`.
    pub oracle: f64,
}

/// Frequency of members with `p^2 | u` for some prime `p` in `[x^alpha, x^c]`.
pub fn repeated_factor_frequency(s: &SampleSet, alpha: f64, c: f64) -> Result<RepeatedResult> {
    if !(alpha > 0.0 && alpha < c && c <= 1.0) {
        return Err(Error::invalid("alpha", "need 0 < alpha < c <= 1"));
    }
    s.non_empty()?;
    let x = s.x();
    let p_lo = real_pow(x, alpha).ceil() as u64;
    let p_hi = real_pow(x, c).floor() as u64;
    let hits = s.fold_factors(
        || 0u64,
        |acc, _, fs, _| *acc += fs.iter().any(|&(p, e)| e >= 2 && p >= p_lo && p <= p_hi) as u64,
    )?;
    let estimate = Estimate::binomial(hits.iter().sum(), s.len());
    let g = s.spec().g_function();
    let top = p_hi.min(isqrt(x));
    let mut oracle = CompensatedSum::default();
    if p_lo <= top {
        let mut err = None;
        for_each_prime_in(p_lo.max(2), top, |p| match g_eval(&g, p * p) {
            Ok(v) => oracle.add(*v.numer() as f64 / *v.denom() as f64),
            Err(e) => err = Some(e),
        });
        if let Some(e) = err {
            return Err(e);
        }
    }
    Ok(RepeatedResult {
        estimate,
        p_lo,
        p_hi,
        oracle: oracle.value(),
    })
}

/// Result of [`sieve_survivor_experiment`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SieveResult {
    /// Primes in the open window lie in `[p_lo, p_hi]`.
    pub p_lo: u64,
    pub p_hi: u64,
    pub window_primes: u64,
    pub survivors: u64,
    pub sample_size: u64,
    /// `prod (1 - g(p))` over the window.
    pub v: f64,
    /// `survivors / sample_size`.
    pub density: f64,
    /// `density / v`.
    pub ratio: f64,
}

/// Counts members with no prime factor `p` satisfying `p > z0` and
/// `x^eps < p < x^delta0`, and compares their density with
/// `V = prod (1 - g(p))` over the same primes.
pub fn sieve_survivor_experiment(s: &SampleSet, eps: f64, z0: f64, delta0: f64) -> Result<SieveResult> {
    if !(eps > 0.0 && eps < delta0 && delta0 <= 1.0) {
        return Err(Error::invalid("eps", "need 0 < eps < delta0 <= 1"));
    }
    if !(z0 >= 0.0 && z0.is_finite()) {
        return Err(Error::invalid("z0", "must be a finite number >= 0"));
    }
    s.non_empty()?;
    let x = s.x();
    let lower = real_pow(x, eps).max(z0);
    let upper = real_pow(x, delta0);
    let p_lo = (lower.floor() as u64 + 1).max(2);
    let p_hi = (upper.ceil() as u64).saturating_sub(1);
    let empty = || Error::EmptyWindow {
        x,
        eps,
        delta0,
        z0,
    };
    if p_lo > p_hi {
        return Err(empty());
    }
    if p_hi > DEFAULT_SIEVE_LIMIT {
        return Err(Error::Budget {
            what: "prime sieve for the survivor window",
            requested: p_hi as u128,
            limit: DEFAULT_SIEVE_LIMIT as u128,
        });
    }
    let g = s.spec().g_function();
    let mut window_primes = 0u64;
    let mut log_v = CompensatedSum::default();
    let mut err = None;
    for_each_prime_in(p_lo, p_hi, |p| {
        window_primes += 1;
        match g_eval(&g, p) {
            Ok(v) => log_v.add((1.0 - *v.numer() as f64 / *v.denom() as f64).ln()),
            Err(e) => err = Some(e),
        }
    });
    if let Some(e) = err {
        return Err(e);
    }
    if window_primes == 0 {
        return Err(empty());
    }
    let v = log_v.value().exp();
    if v == 0.0 {
        return Err(Error::invalid("eps", "the window contains a prime with g(p) = 1"));
    }
    let parts = s.fold_factors(
        || 0u64,
        |acc, _, fs, _| *acc += fs.iter().all(|&(p, _)| p < p_lo || p > p_hi) as u64,
    )?;
    let survivors: u64 = parts.iter().sum();
    let density = survivors as f64 / s.len() as f64;
    Ok(SieveResult {
        p_lo,
        p_hi,
        window_primes,
        survivors,
        sample_size: s.len(),
        v,
        density,
        ratio: density / v,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn exhaustive(spec: &SequenceSpec, x: u64) -> SampleSet {
        SampleSet::build(spec, x, SampleOptions::default()).unwrap()
    }

    #[test]
    fn single_value_corr() {
        let s = SampleSet::from_values(&SequenceSpec::Uniform, 12, vec![12]).unwrap();
        let eta = BoxFunction::indicator(vec![0.25, 0.25], vec![0.30, 0.30]).unwrap();
        assert_eq!(empirical_corr(&s, &eta).unwrap().value, 2.0);
        let zero = BoxFunction::new(vec![crate::pdprocess::WeightedBox::new(vec![0.1], vec![1.0], 0.0)]).unwrap();
        assert_eq!(empirical_corr(&s, &zero).unwrap().value, 0.0);
        assert!(SampleSet::from_values(&SequenceSpec::ThueMorse, 12, vec![7]).is_err());
    }

    #[test]
    fn trivial_frequencies() {
        let s = exhaustive(&SequenceSpec::Uniform, 10_000);
        assert_eq!(empirical_joint_cdf(&s, &[1.0]).unwrap().value, 1.0);
        let primes = SampleSet::from_values(&SequenceSpec::Uniform, 100, vec![2, 3, 5, 7, 97]).unwrap();
        assert_eq!(tail_frequency(&primes, 0.1).unwrap().value, 1.0);
        assert!(tail_frequency(&s, 0.0).is_err());
    }

    #[test]
    fn tail_and_cdf_are_complementary() {
        let s = exhaustive(&SequenceSpec::Uniform, 200_000);
        for eps in [0.05, 0.1, 0.2, 0.3] {
            let tail = tail_frequency(&s, eps).unwrap();
            let cdf = empirical_joint_cdf(&s, &[1.0 - eps]).unwrap();
            let hits = |e: Estimate| (e.value * e.n as f64).round() as u64;
            assert_eq!(hits(tail) + hits(cdf), s.len());
        }
    }

    #[test]
    fn ks_examples() {
        assert!(matches!(ks_distance(vec![], |_| Ok(0.0)), Err(Error::EmptySample)));
        // Exact quantiles of the uniform distribution.
        let n = 1000;
        let v: Vec<f64> = (0..n).map(|i| (i as f64 + 0.5) / n as f64).collect();
        let d = ks_distance(v.clone(), |c| Ok(c)).unwrap();
        assert!(d <= 0.5 / n as f64 + 1e-12);
        let reversed = ks_distance(vec![0.99; 10], |c| Ok(1.0 - c)).unwrap();
        assert!(reversed > 0.98);
    }

    #[test]
    fn lod_uniform_bound() {
        for (x, c) in [(10_000u64, 0.5), (123_457, 0.4), (1_000_000, 0.7)] {
            let r = lod_error_sum(&SequenceSpec::Uniform, x, c).unwrap();
            assert!(r.normalized_sum <= (x as f64).powf(c - 1.0));
            assert!(r.max_abs_r < 1.0);
        }
    }

    #[test]
    fn lod_count_paths_agree() {
        let spec = SequenceSpec::ShiftedPrimes { shift: 1 };
        let members = spec.enumerate(100_000).unwrap();
        let r = lod_error_sum(&spec, 100_000, 0.4).unwrap();
        let mut brute = 0.0;
        let n = members.len() as f64;
        for d in 1..=r.d_max {
            let nd = members.iter().filter(|&&m| m % d == 0).count() as f64;
            let g = g_eval(&spec.g_function(), d).unwrap();
            brute += (nd - *g.numer() as f64 / *g.denom() as f64 * n).abs();
        }
        assert!((r.normalized_sum - brute / n).abs() < 1e-9);
    }

    #[test]
    fn repeated_examples() {
        let s = exhaustive(&SequenceSpec::Uniform, 100_000);
        let none = repeated_factor_frequency(&s, 0.55, 0.9).unwrap();
        assert_eq!(none.estimate.value, 0.0);
        let squarefree: Vec<u64> = (1..=1000u64)
            .filter(|&n| (2..=31u64).all(|p| n % (p * p) != 0))
            .collect();
        let sf = SampleSet::from_values(&SequenceSpec::Uniform, 1000, squarefree).unwrap();
        assert_eq!(repeated_factor_frequency(&sf, 0.1, 0.5).unwrap().estimate.value, 0.0);
    }

    #[test]
    fn single_prime_window() {
        // x = 10^4, window (x^0.2, x^0.25) = (6.3, 10) holds only 7.
        let s = exhaustive(&SequenceSpec::Uniform, 10_000);
        let r = sieve_survivor_experiment(&s, 0.2, 0.0, 0.25).unwrap();
        assert_eq!((r.p_lo, r.p_hi, r.window_primes), (7, 9, 1));
        assert_eq!(r.survivors, 10_000 - 10_000 / 7);
        assert!((r.v - 6.0 / 7.0).abs() < 1e-15);
        assert!(matches!(
            sieve_survivor_experiment(&s, 0.2, 100.0, 0.25),
            Err(Error::EmptyWindow { .. })
        ));
    }

    #[test]
    fn subsampling_is_seeded_and_uniform() {
        let opts = SampleOptions { max_members: 5_000, seed: 9 };
        let a = SampleSet::build(&SequenceSpec::ThueMorse, 1_000_000, opts).unwrap();
        let b = SampleSet::build(&SequenceSpec::ThueMorse, 1_000_000, opts).unwrap();
        assert!(!a.is_exhaustive());
        assert_eq!(a.len(), 5_000);
        assert!(a.members().eq(b.members()));
        assert!(a.members().all(|u| SequenceSpec::ThueMorse.membership(u)));
        let mean = a.members().map(|u| u as f64).sum::<f64>() / 5_000.0;
        assert!((mean / 500_000.0 - 1.0).abs() < 0.03);

        let sp = SampleSet::build(&SequenceSpec::ShiftedPrimes { shift: 1 }, 1_000_000, opts).unwrap();
        let kept = sp.len() as f64;
        assert!((kept / 5_000.0 - 1.0).abs() < 0.05);
        assert_eq!(sp.subsample().unwrap().method, "bernoulli");
    }
}
