//! Poisson-Dirichlet process with parameter 1: stick-breaking sampler, exact
//! box correlations, and Monte Carlo correlation and CDF estimators.

use std::ops::{Mul, Sub};
use std::sync::OnceLock;

use num_traits::One;
use rand::Rng;
use serde::{Deserialize, Serialize};
use smallvec::SmallVec;

use crate::dickman::gauss_legendre;
use crate::error::{Error, Result};
use crate::estimate::{map_chunks, Estimate, Moments};
use crate::rng::stream;

pub const DEFAULT_TRUNCATION: f64 = 1e-12;
const MAX_TRUNCATION: f64 = 1e-6;
const MAX_STICKS: usize = 100_000;

/// Smallest lower threshold accepted by the size-biased CDF estimator.
pub const MIN_SIZE_BIASED_THRESHOLD: f64 = 0.1;

/// Seed offset separating the size-biased estimator's streams from the
/// direct estimator's.
const SIZE_BIASED_SALT: u64 = 0x5851_f42d_4c95_7f2d;

/// One truncated draw: descending entries plus the unassigned mass.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PdSample {
    entries: Vec<f64>,
    tail_mass: f64,
}

impl PdSample {
    pub fn entries(&self) -> &[f64] {
        &self.entries
    }

    pub fn tail_mass(&self) -> f64 {
        self.tail_mass
    }

    /// `L_{j+1}` (0-based), or 0 past the generated entries.
    pub fn get(&self, j: usize) -> f64 {
        self.entries.get(j).copied().unwrap_or(0.0)
    }

    /// The top `k` entries are exact: every piece of the unassigned tail is
    /// smaller than the `k`-th entry.
    pub fn exact_prefix(&self, k: usize) -> bool {
        k == 0 || self.entries.get(k - 1).is_some_and(|&v| v > self.tail_mass)
    }
}

/// Unsorted sticks `G_i = U_1 ... U_{i-1} (1 - U_i)` and the residual
/// `U_1 ... U_m`, in any ring (exact rationals in tests).
pub fn break_sticks<T>(us: &[T]) -> (Vec<T>, T)
where
    T: Clone + One + Sub<Output = T> + Mul<Output = T>,
{
    let mut residual = T::one();
    let mut sticks = Vec::with_capacity(us.len());
    for u in us {
        sticks.push(residual.clone() * (T::one() - u.clone()));
        residual = residual * u.clone();
    }
    (sticks, residual)
}

fn check_truncation(delta: f64) -> Result<()> {
    if !(delta > 0.0 && delta <= MAX_TRUNCATION) {
        return Err(Error::invalid("truncation", "must be in (0, 1e-6]"));
    }
    Ok(())
}

/// Breaks sticks with uniforms from `uniform` until the residual drops below
/// `delta`, then sorts them descending.
pub fn sample_pd_with(mut uniform: impl FnMut() -> f64, delta: f64) -> Result<PdSample> {
    check_truncation(delta)?;
    let mut entries = Vec::new();
    let mut residual = 1.0f64;
    while residual >= delta {
        if entries.len() == MAX_STICKS {
            return Err(Error::Internal("stick breaking did not reach the truncation".into()));
        }
        let u = uniform();
        entries.push(residual * (1.0 - u));
        residual *= u;
    }
    entries.sort_unstable_by(|a, b| b.total_cmp(a));
    Ok(PdSample {
        entries,
        tail_mass: residual,
    })
}

pub fn sample_pd<R: Rng + ?Sized>(rng: &mut R, delta: f64) -> Result<PdSample> {
    sample_pd_with(|| rng.random::<f64>(), delta)
}

/// Sample `index` of the stream family `seed`.
pub fn sample_pd_indexed(seed: u64, index: u64, delta: f64) -> Result<PdSample> {
    sample_pd(&mut stream(seed, index), delta)
}

/// Sticks of size at least `alpha`, in generation order. Breaking stops once
/// the residual is below `alpha`, since no later stick can reach it.
#[inline]
fn large_sticks<R: Rng + ?Sized>(rng: &mut R, alpha: f64, out: &mut SmallVec<[f64; 16]>) {
    out.clear();
    let mut residual = 1.0f64;
    while residual >= alpha {
        let u = rng.random::<f64>();
        let g = residual * (1.0 - u);
        if g >= alpha {
            out.push(g);
        }
        residual *= u;
    }
}

/// A closed interval `[lower, upper]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Interval {
    pub lower: f64,
    pub upper: f64,
}

impl Interval {
    pub fn new(lower: f64, upper: f64) -> Self {
        Interval { lower, upper }
    }
}

/// One weighted box `w * 1[a_1 <= y_1 <= b_1, ...]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WeightedBox {
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
    #[serde(default = "unit_weight")]
    pub weight: f64,
}

fn unit_weight() -> f64 {
    1.0
}

impl WeightedBox {
    pub fn new(lower: Vec<f64>, upper: Vec<f64>, weight: f64) -> Self {
        WeightedBox {
            lower,
            upper,
            weight,
        }
    }

    pub fn intervals(&self) -> Vec<Interval> {
        self.lower
            .iter()
            .zip(&self.upper)
            .map(|(&a, &b)| Interval::new(a, b))
            .collect()
    }

    fn contains_count(&self, cands: &[f64], used: &mut [bool], depth: usize) -> u64 {
        if depth == self.lower.len() {
            return 1;
        }
        let (a, b) = (self.lower[depth], self.upper[depth]);
        let mut total = 0;
        for i in 0..cands.len() {
            if !used[i] && cands[i] >= a && cands[i] <= b {
                used[i] = true;
                total += self.contains_count(cands, used, depth + 1);
                used[i] = false;
            }
        }
        total
    }
}

/// Largest supported box dimension.
pub const MAX_DIM: usize = 6;

/// A test function `eta = sum_i w_i 1[box_i]` on `(0, inf)^k`.
/// Serialized as the list of boxes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<WeightedBox>", into = "Vec<WeightedBox>")]
pub struct BoxFunction {
    dim: usize,
    boxes: Vec<WeightedBox>,
}

impl TryFrom<Vec<WeightedBox>> for BoxFunction {
    type Error = Error;

    fn try_from(boxes: Vec<WeightedBox>) -> Result<Self> {
        BoxFunction::new(boxes)
    }
}

impl From<BoxFunction> for Vec<WeightedBox> {
    fn from(f: BoxFunction) -> Self {
        f.boxes
    }
}

impl BoxFunction {
    pub fn new(boxes: Vec<WeightedBox>) -> Result<Self> {
        let first = boxes
            .first()
            .ok_or_else(|| Error::invalid("boxes", "need at least one box"))?;
        let dim = first.lower.len();
        if dim == 0 || dim > MAX_DIM {
            return Err(Error::invalid("boxes", format!("dimension must be in 1..={MAX_DIM}")));
        }
        for (i, b) in boxes.iter().enumerate() {
            if b.lower.len() != dim || b.upper.len() != dim {
                return Err(Error::invalid("boxes", format!("box {i} does not have dimension {dim}")));
            }
            if !b.weight.is_finite() {
                return Err(Error::invalid("boxes", format!("box {i} has a non-finite weight")));
            }
            for (&a, &u) in b.lower.iter().zip(&b.upper) {
                if !(a > 0.0 && a < u && u.is_finite()) {
                    return Err(Error::invalid(
                        "boxes",
                        format!("box {i} needs 0 < lower < upper, got [{a}, {u}]"),
                    ));
                }
            }
        }
        Ok(BoxFunction { dim, boxes })
    }

    /// Indicator of a single box.
    pub fn indicator(lower: Vec<f64>, upper: Vec<f64>) -> Result<Self> {
        Self::new(vec![WeightedBox::new(lower, upper, 1.0)])
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn boxes(&self) -> &[WeightedBox] {
        &self.boxes
    }

    /// Smallest lower bound over all coordinates of all boxes.
    pub fn min_lower(&self) -> f64 {
        self.boxes
            .iter()
            .flat_map(|b| b.lower.iter().copied())
            .fold(f64::INFINITY, f64::min)
    }

    /// Applies one coordinate permutation to every box.
    pub fn permuted(&self, perm: &[usize]) -> Result<Self> {
        if perm.len() != self.dim {
            return Err(Error::invalid("perm", "length must equal the dimension"));
        }
        Self::new(
            self.boxes
                .iter()
                .map(|b| {
                    WeightedBox::new(
                        perm.iter().map(|&i| b.lower[i]).collect(),
                        perm.iter().map(|&i| b.upper[i]).collect(),
                        b.weight,
                    )
                })
                .collect(),
        )
    }

    /// `sum over distinct indices j_1..j_k of eta(points[j_1], ..)`. Order of
    /// `points` is irrelevant.
    pub fn distinct_tuple_sum(&self, points: &[f64]) -> f64 {
        let alpha = self.min_lower();
        let cands: SmallVec<[f64; 32]> = points.iter().copied().filter(|&p| p >= alpha).collect();
        if cands.len() < self.dim {
            return 0.0;
        }
        let mut used: SmallVec<[bool; 32]> = SmallVec::from_elem(false, cands.len());
        let mut total = 0.0;
        for b in &self.boxes {
            if b.weight != 0.0 {
                total += b.weight * b.contains_count(&cands, &mut used, 0) as f64;
            }
        }
        total
    }
}

/// `prod log(b_i / a_i)`, the Poisson-Dirichlet correlation mass of a box of
/// pairwise disjoint intervals in `(0, 1]` with `b_1 + ... + b_k < 1`.
pub fn box_correlation_exact(intervals: &[Interval]) -> Result<f64> {
    if intervals.is_empty() {
        return Err(Error::invalid("intervals", "need at least one interval"));
    }
    for iv in intervals {
        if !(iv.lower > 0.0 && iv.upper <= 1.0 && iv.lower <= iv.upper) {
            return Err(Error::Hypothesis(format!(
                "interval [{}, {}] is not inside (0, 1]",
                iv.lower, iv.upper
            )));
        }
    }
    let mut sorted = intervals.to_vec();
    sorted.sort_by(|a, b| a.lower.total_cmp(&b.lower));
    for w in sorted.windows(2) {
        if w[1].lower < w[0].upper {
            return Err(Error::Hypothesis(format!(
                "intervals [{}, {}] and [{}, {}] overlap",
                w[0].lower, w[0].upper, w[1].lower, w[1].upper
            )));
        }
    }
    let sum_upper: f64 = intervals.iter().map(|iv| iv.upper).sum();
    if sum_upper >= 1.0 {
        return Err(Error::Hypothesis(format!(
            "upper endpoints sum to {sum_upper}, need < 1"
        )));
    }
    Ok(intervals
        .iter()
        .map(|iv| (iv.upper / iv.lower).ln())
        .product())
}

/// Exact value of `eta`'s correlation when every box satisfies the
/// rectangle-formula hypothesis.
pub fn box_function_exact(eta: &BoxFunction) -> Result<f64> {
    eta.boxes()
        .iter()
        .map(|b| Ok(b.weight * box_correlation_exact(&b.intervals())?))
        .sum()
}

fn gl20() -> &'static [(f64, f64)] {
    static NODES: OnceLock<Vec<(f64, f64)>> = OnceLock::new();
    NODES.get_or_init(|| gauss_legendre(20))
}

fn gl_panel(f: &impl Fn(f64) -> f64, a: f64, b: f64) -> f64 {
    let (mid, half) = (0.5 * (a + b), 0.5 * (b - a));
    half * gl20().iter().map(|&(x, w)| w * f(mid + half * x)).sum::<f64>()
}

fn adaptive_gl(f: &impl Fn(f64) -> f64, a: f64, b: f64, whole: f64, tol: f64, depth: u32) -> f64 {
    let m = 0.5 * (a + b);
    let (left, right) = (gl_panel(f, a, m), gl_panel(f, m, b));
    if depth == 0 || (left + right - whole).abs() <= tol {
        return left + right;
    }
    adaptive_gl(f, a, m, left, 0.5 * tol, depth - 1) + adaptive_gl(f, m, b, right, 0.5 * tol, depth - 1)
}

/// `int over the box of 1[t_1 + .. + t_k <= r] / (t_1 ... t_k) dt`, in
/// logarithmic coordinates with the innermost integral in closed form.
/// Breakpoints are placed where the simplex constraint switches between
/// interval endpoints, so each panel has a smooth integrand.
fn simplex_box_integral(bounds: &[(f64, f64)], r: f64, tol: f64) -> f64 {
    let (a, b) = bounds[0];
    let hi = b.min(r);
    if hi <= a {
        return 0.0;
    }
    if bounds.len() == 1 {
        return (hi / a).ln();
    }
    let rest = &bounds[1..];
    let mut cuts = vec![a, hi];
    for mask in 0..1u32 << rest.len() {
        let s: f64 = rest
            .iter()
            .enumerate()
            .map(|(j, &(lo, up))| if mask >> j & 1 == 1 { up } else { lo })
            .sum();
        let t = r - s;
        if t > a && t < hi {
            cuts.push(t);
        }
    }
    cuts.sort_by(f64::total_cmp);
    cuts.dedup();
    let inner = |s: f64| simplex_box_integral(rest, r - s.exp(), tol);
    cuts.windows(2)
        .map(|w| {
            let (lo, up) = (w[0].ln(), w[1].ln());
            adaptive_gl(&inner, lo, up, gl_panel(&inner, lo, up), tol, 30)
        })
        .sum()
}

/// Deterministic quadrature of `int eta(t) 1[t_1 + .. + t_k <= 1] / (t_1 ... t_k) dt`
/// for `k <= 3`.
pub fn pd_correlation_quadrature(eta: &BoxFunction) -> Result<f64> {
    if eta.dim() > 3 {
        return Err(Error::invalid("boxes", "quadrature supports dimension <= 3"));
    }
    Ok(eta
        .boxes()
        .iter()
        .map(|b| {
            let bounds: Vec<(f64, f64)> = b.lower.iter().copied().zip(b.upper.iter().copied()).collect();
            b.weight * simplex_box_integral(&bounds, 1.0, 1e-12)
        })
        .sum())
}

fn check_samples(n: u64) -> Result<()> {
    if n < 2 {
        return Err(Error::invalid("n_samples", "must be >= 2"));
    }
    Ok(())
}

/// Monte Carlo mean of the distinct-tuple sum of `eta` over Poisson-Dirichlet
/// samples. Sample `i` uses stream `i` of `seed`.
pub fn corr_mc(eta: &BoxFunction, n_samples: u64, seed: u64) -> Result<Estimate> {
    check_samples(n_samples)?;
    let alpha = eta.min_lower();
    let parts = map_chunks(n_samples, |range| {
        let mut m = Moments::default();
        let mut sticks = SmallVec::new();
        for i in range {
            large_sticks(&mut stream(seed, i), alpha, &mut sticks);
            m.push(eta.distinct_tuple_sum(&sticks));
        }
        m
    });
    let mut total = Moments::default();
    for p in &parts {
        total.merge(p);
    }
    Ok(total.estimate())
}

/// `c_j` replaced by `min_{i <= j} c_i`; the joint event is unchanged since
/// the points are ordered.
fn effective_thresholds(c: &[f64]) -> Result<Vec<f64>> {
    if c.is_empty() {
        return Err(Error::invalid("thresholds", "need at least one threshold"));
    }
    let mut out = Vec::with_capacity(c.len());
    let mut m = f64::INFINITY;
    for &ci in c {
        if !(ci > 0.0 && ci <= 1.0) {
            return Err(Error::invalid("thresholds", "each threshold must be in (0, 1]"));
        }
        m = m.min(ci);
        out.push(m);
    }
    Ok(out)
}

/// `L_j <= c_j` for all `j` iff fewer than `j` points exceed `c_j`.
fn event_holds(points: &[f64], c_eff: &[f64]) -> bool {
    c_eff
        .iter()
        .enumerate()
        .all(|(j, &c)| points.iter().filter(|&&p| p > c).count() <= j)
}

/// Direct frequency of `{L_1 <= c_1, ..., L_k <= c_k}`.
pub fn joint_cdf_mc(c: &[f64], n_samples: u64, seed: u64) -> Result<Estimate> {
    check_samples(n_samples)?;
    let c_eff = effective_thresholds(c)?;
    let alpha = *c_eff.last().unwrap();
    let parts = map_chunks(n_samples, |range| {
        let mut hits = 0u64;
        let mut sticks = SmallVec::new();
        for i in range {
            large_sticks(&mut stream(seed, i), alpha, &mut sticks);
            hits += event_holds(&sticks, &c_eff) as u64;
        }
        hits
    });
    Ok(Estimate::binomial(parts.iter().sum(), n_samples))
}

/// Estimates the same probability as [`joint_cdf_mc`] through correlation
/// functions: the event indicator is expanded by Moebius inversion over sets
/// of points above `alpha = min c`, and each correlation term is estimated
/// from the leading sticks with size-biased weights `prod R_{i-1} / G_i`.
/// Needs `min c >= 0.1` to keep the expansion short.
pub fn joint_cdf_size_biased(c: &[f64], n_samples: u64, seed: u64) -> Result<Estimate> {
    check_samples(n_samples)?;
    let c_eff = effective_thresholds(c)?;
    let alpha = *c_eff.last().unwrap();
    if alpha < MIN_SIZE_BIASED_THRESHOLD {
        return Err(Error::invalid(
            "thresholds",
            format!("size-biased estimator needs min threshold >= {MIN_SIZE_BIASED_THRESHOLD}"),
        ));
    }
    let seed = seed ^ SIZE_BIASED_SALT;
    let parts = map_chunks(n_samples, |range| {
        let mut m = Moments::default();
        for i in range {
            let mut rng = stream(seed, i);
            let mut points: SmallVec<[f64; 16]> = SmallVec::new();
            let mut residual = 1.0f64;
            let mut weight = 1.0f64;
            let mut factorial = 1.0f64;
            let mut value = 1.0;
            loop {
                let u = rng.random::<f64>();
                let g = residual * (1.0 - u);
                if g <= alpha {
                    break;
                }
                weight *= residual / g;
                residual *= u;
                points.push(g);
                factorial *= points.len() as f64;
                value += moebius(&points, &c_eff) * weight / factorial;
            }
            m.push(value);
        }
        m
    });
    let mut total = Moments::default();
    for p in &parts {
        total.merge(p);
    }
    Ok(total.estimate())
}

/// `sum over subsets R of T of (-1)^{|T| - |R|} 1[event holds on R]`.
fn moebius(points: &[f64], c_eff: &[f64]) -> f64 {
    let m = points.len();
    let mut total = 0i64;
    let mut subset: SmallVec<[f64; 16]> = SmallVec::new();
    for mask in 0u32..1 << m {
        subset.clear();
        subset.extend((0..m).filter(|&i| mask >> i & 1 == 1).map(|i| points[i]));
        if event_holds(&subset, c_eff) {
            total += if (m - subset.len()) % 2 == 0 { 1 } else { -1 };
        }
    }
    total as f64
}

#[cfg(test)]
mod tests {
    use super::*;
    use num_bigint::BigInt;
    use num_rational::BigRational;

    #[test]
    fn forced_half_sticks() {
        let s = sample_pd_with(|| 0.5, 1e-6).unwrap();
        assert_eq!(s.entries()[..3], [0.5, 0.25, 0.125]);
        assert!(s.tail_mass() < 1e-6);
        assert!((s.entries().iter().sum::<f64>() + s.tail_mass() - 1.0).abs() < 1e-15);
        assert!(sample_pd_with(|| 0.5, 1e-3).is_err());
        assert!(sample_pd_with(|| 0.5, 0.0).is_err());
    }

    #[test]
    fn exact_telescoping() {
        let r = |n: i64, d: i64| BigRational::new(BigInt::from(n), BigInt::from(d));
        let us = vec![r(1, 3), r(5, 7), r(2, 9), r(11, 13)];
        let (sticks, residual) = break_sticks(&us);
        let mut partial = r(0, 1);
        let mut prod = r(1, 1);
        for (g, u) in sticks.iter().zip(&us) {
            partial += g.clone();
            prod *= u.clone();
            assert_eq!(partial, r(1, 1) - prod.clone());
        }
        assert_eq!(residual, prod);
    }

    #[test]
    fn exact_prefix_flag() {
        let s = sample_pd_indexed(3, 0, DEFAULT_TRUNCATION).unwrap();
        assert!(s.exact_prefix(1));
        assert!(s.exact_prefix(0));
        assert!(!s.exact_prefix(s.entries().len() + 1));
    }

    #[test]
    fn rectangle_formula() {
        let v = box_correlation_exact(&[Interval::new(0.25, 0.5)]).unwrap();
        assert!((v - 2f64.ln()).abs() < 1e-15);
        let v = box_correlation_exact(&[Interval::new(0.1, 0.2), Interval::new(0.3, 0.4)]).unwrap();
        assert!((v - 2f64.ln() * (4.0f64 / 3.0).ln()).abs() < 1e-15);
        assert_eq!(box_correlation_exact(&[Interval::new(0.3, 0.3)]).unwrap(), 0.0);
        assert!(matches!(
            box_correlation_exact(&[Interval::new(0.4, 0.6), Interval::new(0.5, 0.7)]),
            Err(Error::Hypothesis(_))
        ));
        assert!(box_correlation_exact(&[Interval::new(0.5, 0.7), Interval::new(0.1, 0.35)]).is_err());
    }

    #[test]
    fn quadrature_matches_rectangle_inside_simplex() {
        let eta = BoxFunction::indicator(vec![0.1, 0.3, 0.05], vec![0.2, 0.4, 0.1]).unwrap();
        let q = pd_correlation_quadrature(&eta).unwrap();
        let exact = box_function_exact(&eta).unwrap();
        assert!((q - exact).abs() < 1e-12);
    }

    #[test]
    fn quadrature_clipped_one_dim() {
        let eta = BoxFunction::indicator(vec![0.5], vec![1.5]).unwrap();
        assert!((pd_correlation_quadrature(&eta).unwrap() - 2f64.ln()).abs() < 1e-14);
    }

    #[test]
    fn distinct_tuples_of_repeated_points() {
        let l = 2f64.ln() / 12f64.ln();
        let eta = BoxFunction::indicator(vec![0.25, 0.25], vec![0.30, 0.30]).unwrap();
        let points = [3f64.ln() / 12f64.ln(), l, l];
        assert_eq!(eta.distinct_tuple_sum(&points), 2.0);
        let zero = BoxFunction::new(vec![WeightedBox::new(vec![0.2], vec![0.9], 0.0)]).unwrap();
        assert_eq!(corr_mc(&zero, 1000, 1).unwrap().value, 0.0);
    }

    #[test]
    fn box_validation() {
        assert!(BoxFunction::indicator(vec![0.0], vec![0.5]).is_err());
        assert!(BoxFunction::indicator(vec![0.5], vec![0.5]).is_err());
        assert!(BoxFunction::new(vec![]).is_err());
        let json = r#"[{"lower":[0.25],"upper":[0.5]}]"#;
        let eta: BoxFunction = serde_json::from_str(json).unwrap();
        assert_eq!(eta.boxes()[0].weight, 1.0);
        assert!(serde_json::from_str::<BoxFunction>(r#"[{"lower":[0.5],"upper":[0.25]}]"#).is_err());
    }

    #[test]
    fn cdf_estimators_agree() {
        let c = [0.9, 0.5];
        let direct = joint_cdf_mc(&c, 200_000, 11).unwrap();
        let biased = joint_cdf_size_biased(&c, 200_000, 11).unwrap();
        let se = (direct.std_error.powi(2) + biased.std_error.powi(2)).sqrt();
        assert!((direct.value - biased.value).abs() < 4.0 * se, "{direct:?} {biased:?}");
        assert_eq!(joint_cdf_mc(&[1.0], 100, 1).unwrap().value, 1.0);
        assert!(joint_cdf_size_biased(&[0.05], 100, 1).is_err());
    }
}
