//! Integer polynomials in one variable: evaluation, discriminant,
//! irreducibility over Q for small degree, and root counting modulo prime
//! powers.

use std::collections::BTreeSet;
use std::fmt;
use std::sync::OnceLock;

use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::Ratio;
use num_traits::{One, Signed, ToPrimitive, Zero};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Largest degree accepted by the irreducibility test.
pub const MAX_DEGREE: usize = 6;

/// Coefficient magnitude limit; keeps divisor enumeration of the constant and
/// leading coefficients cheap.
pub const MAX_COEFF: i64 = 1_000_000_000_000;

/// Largest modulus the exhaustive residue scan will visit.
pub const SCAN_BUDGET: u64 = 1 << 24;

/// Polynomial with integer coefficients, stored constant-first.
#[derive(Clone, Serialize, Deserialize)]
#[serde(try_from = "Vec<i64>", into = "Vec<i64>")]
pub struct Polynomial {
    coeffs: Vec<i64>,
    disc: OnceLock<BigInt>,
}

impl PartialEq for Polynomial {
    fn eq(&self, other: &Self) -> bool {
        self.coeffs == other.coeffs
    }
}

impl Eq for Polynomial {}

impl fmt::Debug for Polynomial {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Polynomial({self})")
    }
}

impl TryFrom<Vec<i64>> for Polynomial {
    type Error = Error;

    fn try_from(coeffs: Vec<i64>) -> Result<Self> {
        Polynomial::new(coeffs)
    }
}

impl From<Polynomial> for Vec<i64> {
    fn from(p: Polynomial) -> Self {
        p.coeffs
    }
}

impl fmt::Display for Polynomial {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut first = true;
        for (i, &c) in self.coeffs.iter().enumerate().rev() {
            if c == 0 {
                continue;
            }
            let mag = c.unsigned_abs();
            if first {
                if c < 0 {
                    write!(f, "-")?;
                }
            } else {
                write!(f, " {} ", if c < 0 { '-' } else { '+' })?;
            }
            first = false;
            match (i, mag) {
                (0, m) => write!(f, "{m}")?,
                (1, 1) => write!(f, "X")?,
                (1, m) => write!(f, "{m}X")?,
                (e, 1) => write!(f, "X^{e}")?,
                (e, m) => write!(f, "{m}X^{e}")?,
            }
        }
        if first {
            write!(f, "0")?;
        }
        Ok(())
    }
}

impl Polynomial {
    /// Builds a polynomial from constant-first coefficients; trailing zeros
    /// are trimmed and the zero polynomial is rejected.
    pub fn new(mut coeffs: Vec<i64>) -> Result<Self> {
        while coeffs.last() == Some(&0) {
            coeffs.pop();
        }
        if coeffs.is_empty() {
            return Err(Error::invalid("coeffs", "zero polynomial"));
        }
        if coeffs.iter().any(|c| c.unsigned_abs() > MAX_COEFF as u64) {
            return Err(Error::invalid(
                "coeffs",
                format!("coefficients must satisfy |a| <= {MAX_COEFF}"),
            ));
        }
        Ok(Polynomial {
            coeffs,
            disc: OnceLock::new(),
        })
    }

    pub fn coeffs(&self) -> &[i64] {
        &self.coeffs
    }

    pub fn degree(&self) -> usize {
        self.coeffs.len() - 1
    }

    pub fn leading(&self) -> i64 {
        *self.coeffs.last().unwrap()
    }

    /// Exact evaluation; `None` on i128 overflow.
    pub fn eval(&self, n: i128) -> Option<i128> {
        let mut acc: i128 = 0;
        for &c in self.coeffs.iter().rev() {
            acc = acc.checked_mul(n)?.checked_add(c as i128)?;
        }
        Some(acc)
    }

    /// `F(r) mod m`, for `m >= 1`.
    pub fn eval_mod(&self, r: u64, m: u64) -> u64 {
        let m128 = m as u128;
        let r = (r % m) as u128;
        let mut acc: u128 = 0;
        for &c in self.coeffs.iter().rev() {
            let c = (c as i128).rem_euclid(m as i128) as u128;
            acc = (acc * r + c) % m128;
        }
        acc as u64
    }

    fn derivative_coeffs(&self) -> Vec<i64> {
        self.coeffs
            .iter()
            .enumerate()
            .skip(1)
            .map(|(i, &c)| c * i as i64)
            .collect()
    }

    /// `F'(r) mod m`.
    pub fn derivative_mod(&self, r: u64, m: u64) -> u64 {
        let m128 = m as u128;
        let r = (r % m) as u128;
        let mut acc: u128 = 0;
        for (i, &c) in self.coeffs.iter().enumerate().skip(1).rev() {
            let c = ((c as i128) * (i as i128)).rem_euclid(m as i128) as u128;
            acc = (acc * r + c) % m128;
        }
        acc as u64
    }

    /// Content (gcd of the coefficients), always positive.
    pub fn content(&self) -> i64 {
        self.coeffs.iter().fold(0i64, |g, &c| g.gcd(&c))
    }

    /// Discriminant, `(-1)^{D(D-1)/2} Res(F, F') / lc(F)`, computed exactly.
    /// Degree one polynomials have discriminant 1.
    pub fn discriminant(&self) -> &BigInt {
        self.disc.get_or_init(|| {
            let d = self.degree();
            if d == 0 {
                return BigInt::zero();
            }
            let res = resultant(&self.coeffs, &self.derivative_coeffs());
            let lc = BigInt::from(self.leading());
            let mut disc = res / lc;
            if (d * (d - 1) / 2) % 2 == 1 {
                disc = -disc;
            }
            disc
        })
    }

    /// True when `p` divides the discriminant.
    pub fn disc_divisible_by(&self, p: u64) -> bool {
        (self.discriminant() % BigInt::from(p)).is_zero()
    }

    /// Distinct prime divisors of the discriminant (trial division up to
    /// 10^6; a remaining cofactor below 10^12 is prime).
    pub fn disc_prime_divisors(&self) -> Result<Vec<u64>> {
        let mut n = self.discriminant().abs();
        let mut out = Vec::new();
        if n.is_zero() {
            return Err(Error::invalid("coeffs", "polynomial has zero discriminant"));
        }
        let mut p: u64 = 2;
        while p <= 1_000_000 {
            let bp = BigInt::from(p);
            if &bp * &bp > n {
                break;
            }
            if (&n % &bp).is_zero() {
                out.push(p);
                while (&n % &bp).is_zero() {
                    n /= &bp;
                }
            }
            p += if p == 2 { 1 } else { 2 };
        }
        if !n.is_one() {
            match n.to_u64() {
                Some(v) if v < 1_000_000_000_000 => out.push(v),
                _ => {
                    return Err(Error::Undecided {
                        poly: self.to_string(),
                        reason: "discriminant has a cofactor too large to factor".into(),
                    })
                }
            }
        }
        Ok(out)
    }

    /// An `n0 >= 1` such that `F` is positive and strictly increasing
    /// on the integers `>= n0`, from Cauchy bounds on the real roots of `F`
    /// and `F'`. Requires a positive leading coefficient and degree >= 1.
    pub fn increasing_threshold(&self) -> u64 {
        fn cauchy(coeffs: &[i64]) -> u64 {
            let lc = coeffs.last().unwrap().unsigned_abs();
            let m = coeffs[..coeffs.len() - 1]
                .iter()
                .map(|c| c.unsigned_abs())
                .max()
                .unwrap_or(0);
            1 + m.div_ceil(lc)
        }
        let mut b = cauchy(&self.coeffs);
        let der = self.derivative_coeffs();
        if der.len() > 1 {
            b = b.max(cauchy(&der));
        }
        b.max(1)
    }

    /// Checks irreducibility over Q. Degree <= 3 uses the rational-root test;
    /// degrees 4..=6 add factor-degree patterns modulo small primes and, if
    /// those are inconclusive, a Kronecker search for quadratic and cubic
    /// factors. Higher degrees are rejected.
    pub fn check_irreducible(&self) -> Result<()> {
        let d = self.degree();
        if d == 0 {
            return Err(Error::invalid("coeffs", "constant polynomial"));
        }
        if d == 1 {
            return Ok(());
        }
        if d > MAX_DEGREE {
            return Err(Error::Undecided {
                poly: self.to_string(),
                reason: format!("degree {d} exceeds the supported maximum {MAX_DEGREE}"),
            });
        }
        if let Some(root) = self.rational_root() {
            return Err(Error::Reducible {
                poly: self.to_string(),
                witness: format!("rational root {root}"),
            });
        }
        if d <= 3 {
            return Ok(());
        }

        // Degrees m of a hypothetical factor over Z; linear ones are excluded.
        let mut possible: BTreeSet<usize> = (2..=d - 2).collect();
        let lc = self.leading();
        for p in small_primes(200) {
            if lc % p as i64 == 0 || self.disc_divisible_by(p) {
                continue;
            }
            let f = fp::monic(&fp::reduce(&self.coeffs, p), p);
            let sums = subset_sums(&fp::ddf_degrees(&f, p));
            possible.retain(|m| sums.contains(m));
            if possible.is_empty() {
                return Ok(());
            }
        }
        for &m in possible.iter().filter(|&&m| m <= d / 2) {
            if let Some(factor) = self.kronecker_factor(m)? {
                return Err(Error::Reducible {
                    poly: self.to_string(),
                    witness: format!("factor {factor}"),
                });
            }
        }
        Ok(())
    }

    fn rational_root(&self) -> Option<Ratio<i64>> {
        let a0 = self.coeffs[0];
        if a0 == 0 {
            return Some(Ratio::zero());
        }
        let nums = divisors(a0.unsigned_abs());
        let dens = divisors(self.leading().unsigned_abs());
        for &q in &dens {
            for &p in &nums {
                if p.gcd(&q) != 1 {
                    continue;
                }
                for sign in [1i64, -1] {
                    let num = BigInt::from(sign * p as i64);
                    let den = BigInt::from(q);
                    // sum a_i p^i q^{D-i}
                    let d = self.degree();
                    let mut acc = BigInt::zero();
                    for (i, &c) in self.coeffs.iter().enumerate() {
                        acc += BigInt::from(c) * num.pow(i as u32) * den.pow((d - i) as u32);
                    }
                    if acc.is_zero() {
                        return Some(Ratio::new(sign * p as i64, q as i64));
                    }
                }
            }
        }
        None
    }

    /// Searches for an integer factor of degree `m` through interpolation at
    /// `m + 1` integer points.
    fn kronecker_factor(&self, m: usize) -> Result<Option<Polynomial>> {
        const CANDIDATE_BUDGET: u64 = 2_000_000;
        let undecided = |reason: &str| Error::Undecided {
            poly: self.to_string(),
            reason: reason.to_string(),
        };
        // Points with the smallest nonzero |F(x)|.
        let mut pts: Vec<(i64, i128)> = (-12i64..=12)
            .filter_map(|x| self.eval(x as i128).map(|v| (x, v)))
            .filter(|&(_, v)| v != 0)
            .collect();
        pts.sort_by_key(|&(x, v)| (v.unsigned_abs(), x.unsigned_abs()));
        pts.truncate(m + 1);
        if pts.len() < m + 1 {
            return Err(undecided("not enough evaluation points"));
        }
        let mut divs: Vec<Vec<i128>> = Vec::with_capacity(m + 1);
        for (i, &(_, v)) in pts.iter().enumerate() {
            let mag = u64::try_from(v.unsigned_abs())
                .ok()
                .filter(|&a| a <= 1_000_000_000_000_000)
                .ok_or_else(|| undecided("evaluation too large to factor"))?;
            let ds = divisors(mag);
            let mut signed: Vec<i128> = ds.iter().map(|&x| x as i128).collect();
            if i > 0 {
                signed.extend(ds.iter().map(|&x| -(x as i128)));
            }
            divs.push(signed);
        }
        let total = divs
            .iter()
            .try_fold(1u64, |acc, d| acc.checked_mul(d.len() as u64))
            .unwrap_or(u64::MAX);
        if total > CANDIDATE_BUDGET {
            return Err(undecided("Kronecker candidate budget exceeded"));
        }
        let xs: Vec<i128> = pts.iter().map(|&(x, _)| x as i128).collect();
        let mut idx = vec![0usize; m + 1];
        loop {
            let ys: Vec<i128> = idx.iter().zip(&divs).map(|(&i, d)| d[i]).collect();
            if let Some(g) = interpolate_integer(&xs, &ys) {
                if g.len() == m + 1 && self.divisible_by(&g) {
                    return Polynomial::new(g.iter().map(|&c| c as i64).collect()).map(Some);
                }
            }
            // advance mixed-radix counter
            let mut pos = 0;
            loop {
                if pos == idx.len() {
                    return Ok(None);
                }
                idx[pos] += 1;
                if idx[pos] < divs[pos].len() {
                    break;
                }
                idx[pos] = 0;
                pos += 1;
            }
        }
    }

    /// Exact divisibility by `g` in Z[X] (constant-first coefficients).
    fn divisible_by(&self, g: &[i128]) -> bool {
        let lg = *g.last().unwrap();
        if lg == 0 {
            return false;
        }
        let mut r: Vec<i128> = self.coeffs.iter().map(|&c| c as i128).collect();
        while r.len() >= g.len() {
            let lead = *r.last().unwrap();
            if lead % lg != 0 {
                return false;
            }
            let q = lead / lg;
            let shift = r.len() - g.len();
            for (i, &gc) in g.iter().enumerate() {
                match gc.checked_mul(q).and_then(|t| r[shift + i].checked_sub(t)) {
                    Some(v) => r[shift + i] = v,
                    None => return false,
                }
            }
            r.pop();
        }
        r.iter().all(|&c| c == 0)
    }

    /// Number of residues `r mod p^k` with `F(r) == 0`.
    ///
    /// When `p` divides neither the discriminant nor the leading coefficient,
    /// roots modulo `p` are found over F_p and lifted by Hensel's lemma;
    /// otherwise (or when `p^k <= 10^6`) the residues are scanned directly.
    pub fn root_count_prime_power(&self, p: u64, k: u32) -> Result<u64> {
        if k == 0 {
            return Ok(1);
        }
        let pk = p.checked_pow(k).filter(|&v| v < (1u64 << 62)).ok_or(Error::Budget {
            what: "prime power modulus",
            requested: (p as u128).saturating_pow(k),
            limit: 1u128 << 62,
        })?;
        let ramified = self.leading() % p as i64 == 0 || self.disc_divisible_by(p);
        if pk <= 1_000_000 {
            return Ok(self.scan_root_count(pk));
        }
        if ramified {
            if pk > SCAN_BUDGET {
                return Err(Error::Budget {
                    what: "residue scan modulo a prime power dividing the discriminant",
                    requested: pk as u128,
                    limit: SCAN_BUDGET as u128,
                });
            }
            return Ok(self.scan_root_count(pk));
        }
        if k == 1 {
            return Ok(self.root_count_mod_prime(p));
        }
        let roots = self.roots_mod_prime(p);
        let mut count = 0;
        for r in roots {
            self.hensel_lift(r, p, k)?;
            count += 1;
        }
        Ok(count)
    }

    /// Exhaustive count of roots modulo `m`.
    pub fn scan_root_count(&self, m: u64) -> u64 {
        (0..m).filter(|&r| self.eval_mod(r, m) == 0).count() as u64
    }

    /// Number of distinct roots in F_p, as `deg gcd(F, X^p - X)`. `p` must
    /// not divide the leading coefficient.
    pub fn root_count_mod_prime(&self, p: u64) -> u64 {
        let f = fp::reduce(&self.coeffs, p);
        if p < 64 {
            return (0..p).filter(|&r| fp::eval(&f, r, p) == 0).count() as u64;
        }
        let f = fp::monic(&f, p);
        let g = fp::split_linear_part(&f, p);
        fp::degree(&g).unwrap_or(0) as u64
    }

    /// All roots in F_p, ascending. `p` must not divide the leading
    /// coefficient.
    pub fn roots_mod_prime(&self, p: u64) -> Vec<u64> {
        let f = fp::reduce(&self.coeffs, p);
        if p < 64 {
            return (0..p).filter(|&r| fp::eval(&f, r, p) == 0).collect();
        }
        let f = fp::monic(&f, p);
        let g = fp::split_linear_part(&f, p);
        let mut roots = fp::linear_roots(&g, p);
        roots.sort_unstable();
        roots
    }

    /// Lifts a simple root modulo `p` to a root modulo `p^k`.
    pub fn hensel_lift(&self, root: u64, p: u64, k: u32) -> Result<u64> {
        if self.derivative_mod(root, p) == 0 {
            return Err(Error::Internal(format!(
                "root {root} of {self} modulo {p} is not simple although {p} does not divide the discriminant"
            )));
        }
        let mut r = root % p;
        let mut m = p;
        for _ in 1..k {
            m *= p;
            let fr = self.eval_mod(r, m);
            let dr = self.derivative_mod(r, m);
            let inv = mod_inverse(dr, m).ok_or_else(|| {
                Error::Internal(format!("derivative not invertible modulo {m}"))
            })?;
            let step = (fr as u128 * inv as u128 % m as u128) as u64;
            r = (r + m - step) % m;
        }
        if self.eval_mod(r, m) != 0 {
            return Err(Error::Internal(format!(
                "Hensel lift of {root} failed modulo {m}"
            )));
        }
        Ok(r)
    }
}

/// Modular inverse by the extended Euclidean algorithm.
pub fn mod_inverse(a: u64, m: u64) -> Option<u64> {
    let (mut old_r, mut r) = (a as i128 % m as i128, m as i128);
    let (mut old_s, mut s) = (1i128, 0i128);
    while r != 0 {
        let q = old_r / r;
        (old_r, r) = (r, old_r - q * r);
        (old_s, s) = (s, old_s - q * s);
    }
    if old_r != 1 {
        return None;
    }
    Some(old_s.rem_euclid(m as i128) as u64)
}

/// Positive divisors, ascending.
pub(crate) fn divisors(n: u64) -> Vec<u64> {
    if n == 0 {
        return vec![];
    }
    let mut primes: Vec<(u64, u32)> = Vec::new();
    let mut rem = n;
    let mut p = 2u64;
    while p.saturating_mul(p) <= rem {
        if rem % p == 0 {
            let mut e = 0;
            while rem % p == 0 {
                rem /= p;
                e += 1;
            }
            primes.push((p, e));
        }
        p += if p == 2 { 1 } else { 2 };
    }
    if rem > 1 {
        primes.push((rem, 1));
    }
    let mut out = vec![1u64];
    for (p, e) in primes {
        let len = out.len();
        let mut pk = 1;
        for _ in 0..e {
            pk *= p;
            for i in 0..len {
                out.push(out[i] * pk);
            }
        }
    }
    out.sort_unstable();
    out
}

fn small_primes(limit: u64) -> Vec<u64> {
    (2..=limit)
        .filter(|&n| (2..n).take_while(|d| d * d <= n).all(|d| n % d != 0))
        .collect()
}

fn subset_sums(degrees: &[usize]) -> BTreeSet<usize> {
    let mut sums = BTreeSet::from([0usize]);
    for &d in degrees {
        let next: Vec<usize> = sums.iter().map(|s| s + d).collect();
        sums.extend(next);
    }
    sums
}

/// Newton interpolation through `(xs, ys)`; returns constant-first integer
/// coefficients when the interpolant lies in Z[X].
fn interpolate_integer(xs: &[i128], ys: &[i128]) -> Option<Vec<i128>> {
    let n = xs.len();
    let mut dd: Vec<Ratio<i128>> = ys.iter().map(|&y| Ratio::from_integer(y)).collect();
    for j in 1..n {
        for i in (j..n).rev() {
            dd[i] = (dd[i] - dd[i - 1]) / Ratio::from_integer(xs[i] - xs[i - j]);
        }
    }
    // Expand the Newton form from the innermost term.
    let mut poly: Vec<Ratio<i128>> = vec![dd[n - 1]];
    for i in (0..n - 1).rev() {
        // poly = poly * (X - xs[i]) + dd[i]
        let mut next = vec![Ratio::zero(); poly.len() + 1];
        for (k, c) in poly.iter().enumerate() {
            next[k + 1] += *c;
            next[k] -= *c * Ratio::from_integer(xs[i]);
        }
        next[0] += dd[i];
        poly = next;
    }
    while poly.len() > 1 && poly.last().unwrap().is_zero() {
        poly.pop();
    }
    poly.iter()
        .map(|c| c.is_integer().then(|| c.to_integer()))
        .collect()
}

/// Resultant of two integer polynomials (constant-first) via the Sylvester
/// determinant.
fn resultant(f: &[i64], g: &[i64]) -> BigInt {
    let n = f.len() - 1;
    let m = g.len() - 1;
    let size = n + m;
    let mut mat = vec![vec![BigInt::zero(); size]; size];
    for row in 0..m {
        for (j, &c) in f.iter().rev().enumerate() {
            mat[row][row + j] = BigInt::from(c);
        }
    }
    for row in 0..n {
        for (j, &c) in g.iter().rev().enumerate() {
            mat[m + row][row + j] = BigInt::from(c);
        }
    }
    bareiss_determinant(mat)
}

fn bareiss_determinant(mut a: Vec<Vec<BigInt>>) -> BigInt {
    let n = a.len();
    if n == 0 {
        return BigInt::one();
    }
    let mut sign = BigInt::one();
    let mut prev = BigInt::one();
    for k in 0..n - 1 {
        if a[k][k].is_zero() {
            match (k + 1..n).find(|&i| !a[i][k].is_zero()) {
                Some(i) => {
                    a.swap(i, k);
                    sign = -sign;
                }
                None => return BigInt::zero(),
            }
        }
        for i in k + 1..n {
            for j in k + 1..n {
                let v = (&a[i][j] * &a[k][k] - &a[i][k] * &a[k][j]) / &prev;
                a[i][j] = v;
            }
        }
        prev = a[k][k].clone();
    }
    sign * &a[n - 1][n - 1]
}

/// Dense polynomial arithmetic over F_p, constant-first, trimmed (the zero
/// polynomial is the empty vector).
pub(crate) mod fp {
    #[inline]
    pub fn mulm(a: u64, b: u64, p: u64) -> u64 {
        (a as u128 * b as u128 % p as u128) as u64
    }

    pub fn powm(mut a: u64, mut e: u64, p: u64) -> u64 {
        let mut r = 1 % p;
        a %= p;
        while e > 0 {
            if e & 1 == 1 {
                r = mulm(r, a, p);
            }
            a = mulm(a, a, p);
            e >>= 1;
        }
        r
    }

    pub fn inv(a: u64, p: u64) -> u64 {
        powm(a, p - 2, p)
    }

    pub fn trim(mut a: Vec<u64>) -> Vec<u64> {
        while a.last() == Some(&0) {
            a.pop();
        }
        a
    }

    pub fn degree(a: &[u64]) -> Option<usize> {
        a.len().checked_sub(1)
    }

    pub fn reduce(coeffs: &[i64], p: u64) -> Vec<u64> {
        trim(
            coeffs
                .iter()
                .map(|&c| (c as i128).rem_euclid(p as i128) as u64)
                .collect(),
        )
    }

    pub fn eval(a: &[u64], r: u64, p: u64) -> u64 {
        a.iter().rev().fold(0, |acc, &c| (mulm(acc, r, p) + c) % p)
    }

    pub fn monic(a: &[u64], p: u64) -> Vec<u64> {
        match a.last() {
            None => vec![],
            Some(&lc) => {
                let i = inv(lc, p);
                a.iter().map(|&c| mulm(c, i, p)).collect()
            }
        }
    }

    pub fn sub(a: &[u64], b: &[u64], p: u64) -> Vec<u64> {
        let n = a.len().max(b.len());
        let out = (0..n)
            .map(|i| {
                let x = a.get(i).copied().unwrap_or(0);
                let y = b.get(i).copied().unwrap_or(0);
                (x + p - y) % p
            })
            .collect();
        trim(out)
    }

    pub fn mul(a: &[u64], b: &[u64], p: u64) -> Vec<u64> {
        if a.is_empty() || b.is_empty() {
            return vec![];
        }
        let mut out = vec![0u64; a.len() + b.len() - 1];
        for (i, &x) in a.iter().enumerate() {
            if x == 0 {
                continue;
            }
            for (j, &y) in b.iter().enumerate() {
                out[i + j] = (out[i + j] + mulm(x, y, p)) % p;
            }
        }
        trim(out)
    }

    /// Quotient and remainder; `b` must be nonzero.
    pub fn divrem(a: &[u64], b: &[u64], p: u64) -> (Vec<u64>, Vec<u64>) {
        let db = b.len() - 1;
        let ilc = inv(b[db], p);
        let mut r = a.to_vec();
        if r.len() < b.len() {
            return (vec![], trim(r));
        }
        let mut q = vec![0u64; r.len() - db];
        while r.len() > db && !r.is_empty() {
            let lead = *r.last().unwrap();
            let shift = r.len() - 1 - db;
            if lead != 0 {
                let c = mulm(lead, ilc, p);
                q[shift] = c;
                for (j, &bc) in b.iter().enumerate() {
                    let t = mulm(c, bc, p);
                    r[shift + j] = (r[shift + j] + p - t) % p;
                }
            }
            r.pop();
        }
        (trim(q), trim(r))
    }

    pub fn rem(a: &[u64], b: &[u64], p: u64) -> Vec<u64> {
        divrem(a, b, p).1
    }

    pub fn gcd(a: &[u64], b: &[u64], p: u64) -> Vec<u64> {
        let (mut a, mut b) = (a.to_vec(), b.to_vec());
        while !b.is_empty() {
            let r = rem(&a, &b, p);
            a = b;
            b = r;
        }
        monic(&a, p)
    }

    /// `base^e mod modulus`.
    pub fn powmod(base: &[u64], mut e: u64, modulus: &[u64], p: u64) -> Vec<u64> {
        let mut result = rem(&[1], modulus, p);
        let mut b = rem(base, modulus, p);
        while e > 0 {
            if e & 1 == 1 {
                result = rem(&mul(&result, &b, p), modulus, p);
            }
            b = rem(&mul(&b, &b, p), modulus, p);
            e >>= 1;
        }
        result
    }

    /// `gcd(f, X^p - X)`: the product of the distinct linear factors of a
    /// monic `f`.
    pub fn split_linear_part(f: &[u64], p: u64) -> Vec<u64> {
        if f.len() <= 1 {
            return f.to_vec();
        }
        let xp = powmod(&[0, 1], p, f, p);
        let h = sub(&xp, &[0, 1], p);
        if h.is_empty() {
            return f.to_vec();
        }
        gcd(f, &h, p)
    }

    /// Roots of a monic squarefree product of distinct linear factors, by
    /// Cantor-Zassenhaus splitting with shifts `a = 0, 1, 2, ...`.
    pub fn linear_roots(g: &[u64], p: u64) -> Vec<u64> {
        match degree(g) {
            None | Some(0) => return vec![],
            Some(1) => return vec![(p - g[0] % p) % p],
            _ => {}
        }
        let half = (p - 1) / 2;
        for a in 0..p {
            let t = powmod(&[a, 1], half, g, p);
            let t = sub(&t, &[1], p);
            let h = gcd(g, &t, p);
            let dh = degree(&h).unwrap_or(0);
            if dh > 0 && dh < g.len() - 1 {
                let (q, _) = divrem(g, &h, p);
                let mut out = linear_roots(&h, p);
                out.extend(linear_roots(&monic(&q, p), p));
                return out;
            }
        }
        unreachable!("Cantor-Zassenhaus failed to split a product of distinct linear factors")
    }

    /// Degrees of the irreducible factors of a monic squarefree polynomial.
    pub fn ddf_degrees(f: &[u64], p: u64) -> Vec<usize> {
        let mut f = f.to_vec();
        let mut h: Vec<u64> = rem(&[0, 1], &f, p);
        let mut out = Vec::new();
        let mut d = 1;
        while f.len() > 2 * d {
            h = powmod(&h, p, &f, p);
            let g = gcd(&f, &sub(&h, &[0, 1], p), p);
            let dg = g.len() - 1;
            if dg > 0 {
                for _ in 0..dg / d {
                    out.push(d);
                }
                f = monic(&divrem(&f, &g, p).0, p);
                h = rem(&h, &f, p);
            }
            d += 1;
        }
        if f.len() > 1 {
            out.push(f.len() - 1);
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn poly(c: &[i64]) -> Polynomial {
        Polynomial::new(c.to_vec()).unwrap()
    }

    #[test]
    fn discriminants() {
        assert_eq!(poly(&[1, 0, 1]).discriminant(), &BigInt::from(-4));
        assert_eq!(poly(&[-2, 0, 0, 1]).discriminant(), &BigInt::from(-108));
        assert_eq!(poly(&[-1, -1, 1]).discriminant(), &BigInt::from(5));
        assert_eq!(poly(&[3, 2]).discriminant(), &BigInt::from(1));
        // b^2 - 4ac for 2X^2 + 3X + 5
        assert_eq!(poly(&[5, 3, 2]).discriminant(), &BigInt::from(9 - 40));
    }

    #[test]
    fn display() {
        assert_eq!(poly(&[1, 0, 1]).to_string(), "X^2 + 1");
        assert_eq!(poly(&[-2, 0, 0, 1]).to_string(), "X^3 - 2");
        assert_eq!(poly(&[-1, -1, 1]).to_string(), "X^2 - X - 1");
    }

    #[test]
    fn irreducibility_small_degree() {
        assert!(poly(&[1, 0, 1]).check_irreducible().is_ok());
        assert!(poly(&[-2, 0, 0, 1]).check_irreducible().is_ok());
        assert!(matches!(
            poly(&[0, 0, 1]).check_irreducible(),
            Err(Error::Reducible { .. })
        ));
        assert!(matches!(
            poly(&[-1, 0, 1]).check_irreducible(),
            Err(Error::Reducible { .. })
        ));
        // 2X^2 - 3X + 1 = (2X - 1)(X - 1)
        assert!(poly(&[1, -3, 2]).check_irreducible().is_err());
        // rational root 1/2 of 2X^3 - X^2 + 2X - 1 = (2X - 1)(X^2 + 1)
        assert!(poly(&[-1, 2, -1, 2]).check_irreducible().is_err());
    }

    #[test]
    fn irreducibility_quartic_and_up() {
        // X^4 + 1 splits modulo every prime; settled by the Kronecker search.
        assert!(poly(&[1, 0, 0, 0, 1]).check_irreducible().is_ok());
        // (X^2 + 1)(X^2 + 2)
        assert!(matches!(
            poly(&[2, 0, 3, 0, 1]).check_irreducible(),
            Err(Error::Reducible { .. })
        ));
        // (X^2 + X + 1)(X^3 + X + 1) = X^5 + X^4 + 2X^3 + 2X^2 + 2X + 1
        assert!(poly(&[1, 2, 2, 2, 1, 1]).check_irreducible().is_err());
        // X^6 + X^3 + 1 (9th cyclotomic)
        assert!(poly(&[1, 0, 0, 1, 0, 0, 1]).check_irreducible().is_ok());
        // X^5 - X - 1
        assert!(poly(&[-1, -1, 0, 0, 0, 1]).check_irreducible().is_ok());
        assert!(matches!(
            poly(&[1, 0, 0, 0, 0, 0, 0, 1]).check_irreducible(),
            Err(Error::Undecided { .. })
        ));
    }

    #[test]
    fn roots_mod_large_prime_match_scan() {
        let f = poly(&[1, 0, 1]);
        for p in [1_000_003u64, 1_000_033, 999_983] {
            let roots = f.roots_mod_prime(p);
            let expected = if p % 4 == 1 { 2 } else { 0 };
            assert_eq!(roots.len(), expected, "p = {p}");
            for r in roots {
                assert_eq!(f.eval_mod(r, p), 0);
            }
            assert_eq!(f.root_count_mod_prime(p), expected as u64);
        }
        let g = poly(&[-2, 0, 0, 1]);
        for p in [1009u64, 1013, 10007] {
            let scan = g.scan_root_count(p);
            assert_eq!(g.root_count_mod_prime(p), scan);
            assert_eq!(g.roots_mod_prime(p).len() as u64, scan);
        }
    }

    #[test]
    fn hensel_lift_is_a_root() {
        let f = poly(&[1, 0, 1]);
        let r = f.hensel_lift(2, 5, 6).unwrap();
        assert_eq!(f.eval_mod(r, 5u64.pow(6)), 0);
        assert_eq!(r % 5, 2);
    }

    #[test]
    fn mod_inverse_works() {
        assert_eq!(mod_inverse(3, 7), Some(5));
        assert_eq!(mod_inverse(2, 4), None);
    }

    #[test]
    fn increasing_threshold_is_valid() {
        for c in [vec![1, 0, 1], vec![-2, 0, 0, 1], vec![-1, -1, 1], vec![5, -7, 1]] {
            let f = poly(&c);
            let n0 = f.increasing_threshold() as i128;
            for m in n0..n0 + 50 {
                let a = f.eval(m).unwrap();
                assert!(a > 0 && f.eval(m + 1).unwrap() > a);
            }
        }
    }

    #[test]
    fn serde_roundtrip_via_coeffs() {
        let f: Polynomial = serde_json::from_str("[1,0,1]").unwrap();
        assert_eq!(f, poly(&[1, 0, 1]));
        assert_eq!(serde_json::to_string(&f).unwrap(), "[1,0,1]");
        assert!(serde_json::from_str::<Polynomial>("[0,0]").is_err());
    }
}
