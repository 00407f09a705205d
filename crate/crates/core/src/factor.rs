//! Prime generation and factorization.
//!
//! Two factorization back ends are provided: a smallest-prime-factor table
//! for dense bulk work below [`SPF_LIMIT`], and trial division against a
//! [`PrimeTable`] reaching `sqrt(x)` for sparse or large inputs. All value
//! arithmetic is exact; logarithms appear only when a spectrum is formed.

use std::sync::OnceLock;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use smallvec::SmallVec;

use crate::error::{Error, Result};

/// Largest `x` for which the smallest-prime-factor table is used.
pub const SPF_LIMIT: u64 = 100_000_000;

/// Default ceiling on prime sieving.
pub const DEFAULT_SIEVE_LIMIT: u64 = 2_000_000_000;

const SEGMENT: u64 = 1 << 18;

/// Prime factors `(p, e)` in ascending order, without heap allocation for
/// any `u64`.
pub type SmallFactors = SmallVec<[(u64, u32); 16]>;

pub fn isqrt(n: u64) -> u64 {
    if n == 0 {
        return 0;
    }
    let mut r = (n as f64).sqrt() as u64;
    while r.checked_mul(r).is_none_or(|v| v > n) {
        r -= 1;
    }
    while (r + 1).checked_mul(r + 1).is_some_and(|v| v <= n) {
        r += 1;
    }
    r
}

/// Primes up to `limit` with a plain sieve of Eratosthenes.
fn simple_primes(limit: u64) -> Vec<u64> {
    if limit < 2 {
        return vec![];
    }
    let n = limit as usize;
    let mut composite = vec![false; n + 1];
    let mut out = Vec::new();
    for i in 2..=n {
        if !composite[i] {
            out.push(i as u64);
            let mut j = i * i;
            while j <= n {
                composite[j] = true;
                j += i;
            }
        }
    }
    out
}

/// Calls `f` on every prime in `[lo, hi]`, ascending, using a segmented
/// sieve.
pub fn for_each_prime_in(lo: u64, hi: u64, mut f: impl FnMut(u64)) {
    let lo = lo.max(2);
    if hi < lo {
        return;
    }
    let base = simple_primes(isqrt(hi));
    let mut seg = vec![false; SEGMENT as usize];
    let mut start = lo;
    loop {
        let end = start.saturating_add(SEGMENT - 1).min(hi);
        let len = (end - start + 1) as usize;
        seg[..len].fill(false);
        for &p in &base {
            if p * p > end {
                break;
            }
            let first = (p * p).max(start.div_ceil(p) * p);
            let mut m = first;
            while m <= end {
                seg[(m - start) as usize] = true;
                m += p;
            }
        }
        for (i, &c) in seg[..len].iter().enumerate() {
            if !c {
                f(start + i as u64);
            }
        }
        if end == hi {
            break;
        }
        start = end + 1;
    }
}

/// Primes in `[lo, hi]`, ascending.
pub fn primes_in_range(lo: u64, hi: u64) -> Vec<u64> {
    let mut out = Vec::new();
    for_each_prime_in(lo, hi, |p| out.push(p));
    out
}

/// Number of primes in `[lo, hi]`.
pub fn count_primes_in_range(lo: u64, hi: u64) -> u64 {
    let mut n = 0;
    for_each_prime_in(lo, hi, |_| n += 1);
    n
}

/// All primes up to a limit.
#[derive(Debug, Clone)]
pub struct PrimeTable {
    limit: u64,
    primes: Vec<u64>,
    // (p^{-1} mod 2^64, floor((2^64 - 1) / p)) for odd p: exact divisibility
    // without hardware division.
    divisibility: OnceLock<Vec<(u64, u64)>>,
}

impl PartialEq for PrimeTable {
    fn eq(&self, other: &Self) -> bool {
        self.limit == other.limit && self.primes == other.primes
    }
}

impl PrimeTable {
    /// Sieves all primes up to `limit` (at least 2, at most `max_limit`).
    pub fn build(limit: u64, max_limit: u64) -> Result<Self> {
        if limit < 2 {
            return Err(Error::invalid("limit", "prime table limit must be >= 2"));
        }
        if limit > max_limit {
            return Err(Error::Budget {
                what: "prime table limit",
                requested: limit as u128,
                limit: max_limit as u128,
            });
        }
        Ok(PrimeTable {
            limit,
            primes: primes_in_range(2, limit),
            divisibility: OnceLock::new(),
        })
    }

    pub fn limit(&self) -> u64 {
        self.limit
    }

    pub fn primes(&self) -> &[u64] {
        &self.primes
    }

    fn divisibility(&self) -> &[(u64, u64)] {
        self.divisibility.get_or_init(|| {
            self.primes
                .iter()
                .map(|&p| {
                    if p == 2 {
                        return (0, 0);
                    }
                    // Newton iteration for the inverse modulo 2^64.
                    let mut inv: u64 = p;
                    for _ in 0..5 {
                        inv = inv.wrapping_mul(2u64.wrapping_sub(p.wrapping_mul(inv)));
                    }
                    (inv, u64::MAX / p)
                })
                .collect()
        })
    }

    /// Trial division of a `u64`; requires `limit^2 >= u`.
    pub fn factor_u64(&self, u: u64, out: &mut SmallFactors) -> Result<()> {
        out.clear();
        self.check_capacity(u as u128)?;
        let mut n = u;
        if n <= 1 {
            return Ok(());
        }
        let tz = n.trailing_zeros();
        if tz > 0 {
            out.push((2, tz));
            n >>= tz;
        }
        let div = self.divisibility();
        for (i, &p) in self.primes.iter().enumerate().skip(1) {
            if p.saturating_mul(p) > n {
                break;
            }
            let (inv, lim) = div[i];
            let mut q = n.wrapping_mul(inv);
            if q <= lim {
                let mut e = 0;
                loop {
                    n = q;
                    e += 1;
                    q = n.wrapping_mul(inv);
                    if q > lim {
                        break;
                    }
                }
                out.push((p, e));
            }
        }
        if n > 1 {
            out.push((n, 1));
        }
        Ok(())
    }

    fn check_capacity(&self, u: u128) -> Result<()> {
        let cap = (self.limit as u128) * (self.limit as u128);
        if u > cap {
            return Err(Error::invalid(
                "u",
                format!(
                    "value {u} exceeds the square of the prime table limit {}",
                    self.limit
                ),
            ));
        }
        Ok(())
    }

    /// Serializes the table in the versioned on-disk cache format.
    ///
    /// Layout (little endian): magic `PDSPRIME`, `u32` version, `u64` limit,
    /// `u64` prime count, the primes as LEB128 varints of successive
    /// differences (the first prime relative to 0), then the SHA-256 of all
    /// preceding bytes.
    pub fn to_cache_bytes(&self) -> Vec<u8> {
        let mut out = Vec::with_capacity(28 + self.primes.len() + 32);
        out.extend_from_slice(CACHE_MAGIC);
        out.extend_from_slice(&CACHE_VERSION.to_le_bytes());
        out.extend_from_slice(&self.limit.to_le_bytes());
        out.extend_from_slice(&(self.primes.len() as u64).to_le_bytes());
        let mut prev = 0u64;
        for &p in &self.primes {
            let mut gap = p - prev;
            prev = p;
            loop {
                let byte = (gap & 0x7f) as u8;
                gap >>= 7;
                if gap == 0 {
                    out.push(byte);
                    break;
                }
                out.push(byte | 0x80);
            }
        }
        let digest = Sha256::digest(&out);
        out.extend_from_slice(&digest);
        out
    }

    /// Parses bytes produced by [`PrimeTable::to_cache_bytes`], verifying the
    /// header, checksum and prime count.
    pub fn from_cache_bytes(bytes: &[u8]) -> Result<Self> {
        let err = |m: &str| Error::Cache(m.to_string());
        if bytes.len() < 28 + 32 {
            return Err(err("truncated header"));
        }
        let (body, sum) = bytes.split_at(bytes.len() - 32);
        if Sha256::digest(body).as_slice() != sum {
            return Err(err("checksum mismatch"));
        }
        if &body[..8] != CACHE_MAGIC {
            return Err(err("bad magic"));
        }
        let version = u32::from_le_bytes(body[8..12].try_into().unwrap());
        if version != CACHE_VERSION {
            return Err(err(&format!("unsupported version {version}")));
        }
        let limit = u64::from_le_bytes(body[12..20].try_into().unwrap());
        let count = u64::from_le_bytes(body[20..28].try_into().unwrap());
        let mut primes = Vec::with_capacity(count.min(1 << 28) as usize);
        let mut prev = 0u64;
        let mut gap = 0u64;
        let mut shift = 0;
        for &b in &body[28..] {
            if shift >= 64 {
                return Err(err("varint overflow"));
            }
            gap |= ((b & 0x7f) as u64) << shift;
            shift += 7;
            if b & 0x80 == 0 {
                prev = prev
                    .checked_add(gap)
                    .ok_or_else(|| err("prime overflow"))?;
                primes.push(prev);
                gap = 0;
                shift = 0;
            }
        }
        if shift != 0 {
            return Err(err("truncated varint"));
        }
        if primes.len() as u64 != count {
            return Err(err("prime count mismatch"));
        }
        if primes.last().is_some_and(|&p| p > limit) {
            return Err(err("prime above limit"));
        }
        Ok(PrimeTable {
            limit,
            primes,
            divisibility: OnceLock::new(),
        })
    }
}

const CACHE_MAGIC: &[u8; 8] = b"PDSPRIME";
const CACHE_VERSION: u32 = 1;

/// Smallest prime factor of every integer up to a limit.
#[derive(Debug, Clone)]
pub struct SpfSieve {
    spf: Vec<u32>,
}

impl SpfSieve {
    pub fn build(limit: u64) -> Result<Self> {
        if limit > SPF_LIMIT {
            return Err(Error::Budget {
                what: "smallest-prime-factor sieve",
                requested: limit as u128,
                limit: SPF_LIMIT as u128,
            });
        }
        let n = limit as usize;
        let mut spf = vec![0u32; n + 1];
        for i in 2..=n {
            if spf[i] == 0 {
                spf[i] = i as u32;
                if let Some(sq) = i.checked_mul(i).filter(|&s| s <= n) {
                    let mut j = sq;
                    while j <= n {
                        if spf[j] == 0 {
                            spf[j] = i as u32;
                        }
                        j += i;
                    }
                }
            }
        }
        Ok(SpfSieve { spf })
    }

    pub fn limit(&self) -> u64 {
        (self.spf.len() - 1) as u64
    }

    pub fn is_prime(&self, n: u64) -> bool {
        n >= 2 && self.spf[n as usize] as u64 == n
    }

    #[inline]
    pub fn factor(&self, u: u64, out: &mut SmallFactors) {
        out.clear();
        let mut n = u as usize;
        while n > 1 {
            let p = self.spf[n] as usize;
            let mut e = 0;
            while n % p == 0 {
                n /= p;
                e += 1;
            }
            out.push((p as u64, e));
        }
    }
}

/// Factorization back end chosen for a range of values.
#[derive(Debug, Clone)]
pub enum Factorizer {
    Spf(SpfSieve),
    Trial(PrimeTable),
}

impl Factorizer {
    /// Picks the sieve path for dense inputs up to [`SPF_LIMIT`] and trial
    /// division otherwise.
    pub fn for_range(x: u64, dense: bool, max_sieve: u64) -> Result<Self> {
        if dense && x <= SPF_LIMIT {
            Ok(Factorizer::Spf(SpfSieve::build(x.max(2))?))
        } else {
            Ok(Factorizer::Trial(PrimeTable::build(
                (isqrt(x) + 1).max(2),
                max_sieve,
            )?))
        }
    }

    /// Largest value this back end can factor.
    pub fn capacity(&self) -> u128 {
        match self {
            Factorizer::Spf(s) => s.limit() as u128,
            Factorizer::Trial(t) => (t.limit() as u128) * (t.limit() as u128),
        }
    }

    /// Prime factors of `u`, ascending.
    #[inline]
    pub fn factor_into(&self, u: u64, out: &mut SmallFactors) -> Result<()> {
        match self {
            Factorizer::Spf(s) => {
                if u > s.limit() {
                    return Err(Error::invalid(
                        "u",
                        format!("value {u} exceeds the sieve limit {}", s.limit()),
                    ));
                }
                s.factor(u, out);
                Ok(())
            }
            Factorizer::Trial(t) => t.factor_u64(u, out),
        }
    }

    pub fn factorize(&self, u: u64) -> Result<Factorization> {
        if u == 0 {
            return Err(Error::invalid("u", "must be >= 1"));
        }
        let mut buf = SmallFactors::new();
        self.factor_into(u, &mut buf)?;
        Ok(Factorization {
            value: u as u128,
            factors: buf.iter().map(|&(p, e)| (p as u128, e)).collect(),
        })
    }
}

/// An integer with its prime factorization, primes strictly ascending.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Factorization {
    value: u128,
    factors: Vec<(u128, u32)>,
}

impl Factorization {
    /// Validates that the factors are ascending, have positive exponents and
    /// multiply to `value` exactly. Primality of the factors is the caller's
    /// responsibility.
    pub fn new(value: u128, factors: Vec<(u128, u32)>) -> Result<Self> {
        if value == 0 {
            return Err(Error::invalid("u", "must be >= 1"));
        }
        let f = Factorization { value, factors };
        if f.factors.windows(2).any(|w| w[0].0 >= w[1].0) {
            return Err(Error::invalid("factors", "primes must be strictly ascending"));
        }
        if f.factors.iter().any(|&(p, e)| p < 2 || e == 0) {
            return Err(Error::invalid("factors", "invalid prime power"));
        }
        if f.product() != Some(value) {
            return Err(Error::invalid("factors", "product does not equal the value"));
        }
        Ok(f)
    }

    pub fn value(&self) -> u128 {
        self.value
    }

    pub fn factors(&self) -> &[(u128, u32)] {
        &self.factors
    }

    /// Exact product of the prime powers; `None` on overflow.
    pub fn product(&self) -> Option<u128> {
        self.factors.iter().try_fold(1u128, |acc, &(p, e)| {
            acc.checked_mul(p.checked_pow(e)?)
        })
    }

    /// Largest prime factor, 1 for `u = 1`.
    pub fn largest_prime(&self) -> u128 {
        self.factors.last().map_or(1, |&(p, _)| p)
    }

    /// Number of prime factors with multiplicity.
    pub fn big_omega(&self) -> u32 {
        self.factors.iter().map(|&(_, e)| e).sum()
    }

    pub fn spectrum(&self) -> NormalizedSpectrum {
        NormalizedSpectrum::from_factorization(self)
    }
}

/// Trial-division factorization of any `u < 2^127` with a prime table whose
/// limit squared covers `u`.
pub fn factorize(u: u128, table: &PrimeTable) -> Result<Factorization> {
    if u == 0 {
        return Err(Error::invalid("u", "must be >= 1"));
    }
    if u >= 1u128 << 127 {
        return Err(Error::invalid("u", "must be below 2^127"));
    }
    if let Ok(small) = u64::try_from(u) {
        let mut buf = SmallFactors::new();
        table.factor_u64(small, &mut buf)?;
        return Ok(Factorization {
            value: u,
            factors: buf.iter().map(|&(p, e)| (p as u128, e)).collect(),
        });
    }
    table.check_capacity(u)?;
    let mut n = u;
    let mut factors = Vec::new();
    for &p in table.primes() {
        let p = p as u128;
        if p * p > n {
            break;
        }
        if n % p == 0 {
            let mut e = 0;
            while n % p == 0 {
                n /= p;
                e += 1;
            }
            factors.push((p, e));
        }
        if n <= u64::MAX as u128 {
            // Finish on the fast path.
            let mut buf = SmallFactors::new();
            table.factor_u64(n as u64, &mut buf)?;
            factors.extend(buf.iter().map(|&(q, e)| (q as u128, e)));
            n = 1;
            break;
        }
    }
    if n > 1 {
        factors.push((n, 1));
    }
    Ok(Factorization { value: u, factors })
}

/// Largest prime factor; 1 for `u = 1`.
pub fn largest_prime(f: &Factorization) -> u128 {
    f.largest_prime()
}

/// `log p_j / log u` for the prime factors of `u` with multiplicity,
/// descending. `u = 1` maps to the single entry 1.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NormalizedSpectrum {
    u: u128,
    entries: Vec<f64>,
}

impl NormalizedSpectrum {
    pub fn from_factorization(f: &Factorization) -> Self {
        let mut entries = Vec::with_capacity(f.big_omega() as usize);
        if f.value <= 1 {
            entries.push(1.0);
        } else {
            let log_u = (f.value as f64).ln();
            for &(p, e) in f.factors.iter().rev() {
                let r = if p == f.value {
                    1.0
                } else {
                    (p as f64).ln() / log_u
                };
                entries.extend(std::iter::repeat_n(r, e as usize));
            }
        }
        NormalizedSpectrum { u: f.value, entries }
    }

    pub fn u(&self) -> u128 {
        self.u
    }

    pub fn entries(&self) -> &[f64] {
        &self.entries
    }

    /// Entry `j` (0-based), or 0 past the end.
    pub fn get(&self, j: usize) -> f64 {
        self.entries.get(j).copied().unwrap_or(0.0)
    }
}

/// Writes the descending normalized spectrum of `u` given its ascending
/// prime factors. `u = 1` gives `[1]`.
#[inline]
pub(crate) fn log_spectrum_into(u: u64, factors: &[(u64, u32)], out: &mut SmallVec<[f64; 32]>) {
    out.clear();
    if u <= 1 {
        out.push(1.0);
        return;
    }
    if factors.len() == 1 && factors[0].1 == 1 {
        out.push(1.0);
        return;
    }
    let log_u = (u as f64).ln();
    for &(p, e) in factors.iter().rev() {
        let r = (p as f64).ln() / log_u;
        for _ in 0..e {
            out.push(r);
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn naive_factor(mut n: u64) -> Vec<(u128, u32)> {
        let mut out = Vec::new();
        let mut p = 2;
        while p * p <= n {
            let mut e = 0;
            while n % p == 0 {
                n /= p;
                e += 1;
            }
            if e > 0 {
                out.push((p as u128, e));
            }
            p += 1;
        }
        if n > 1 {
            out.push((n as u128, 1));
        }
        out
    }

    #[test]
    fn small_tables() {
        let t = PrimeTable::build(10, DEFAULT_SIEVE_LIMIT).unwrap();
        assert_eq!(t.primes(), &[2, 3, 5, 7]);
        let t = PrimeTable::build(2, DEFAULT_SIEVE_LIMIT).unwrap();
        assert_eq!(t.primes(), &[2]);
        assert!(PrimeTable::build(1, DEFAULT_SIEVE_LIMIT).is_err());
        assert!(matches!(
            PrimeTable::build(1000, 100),
            Err(Error::Budget { .. })
        ));
    }

    #[test]
    fn prime_count_to_ten_million_segments() {
        assert_eq!(count_primes_in_range(2, 1_000_000), 78_498);
        assert_eq!(count_primes_in_range(999_000, 1_001_000),
            (999_000..=1_001_000u64).filter(|&n| naive_factor(n) == vec![(n as u128, 1)]).count() as u64);
    }

    #[test]
    fn spec_examples() {
        let t = PrimeTable::build(1000, DEFAULT_SIEVE_LIMIT).unwrap();
        assert_eq!(factorize(12, &t).unwrap().factors(), &[(2, 2), (3, 1)]);
        assert!(factorize(1, &t).unwrap().factors().is_empty());
        let f = factorize(9991, &t).unwrap();
        assert_eq!(f.factors(), &[(97, 1), (103, 1)]);
        assert_eq!(f.largest_prime(), 103);
        assert_eq!(factorize(12, &t).unwrap().largest_prime(), 3);
        assert_eq!(factorize(1, &t).unwrap().largest_prime(), 1);
    }

    #[test]
    fn table_too_small_is_rejected() {
        let t = PrimeTable::build(10, DEFAULT_SIEVE_LIMIT).unwrap();
        assert!(factorize(10_007, &t).is_err());
        assert!(factorize(0, &t).is_err());
    }

    #[test]
    fn agrees_with_naive_below_1e5() {
        let t = PrimeTable::build(400, DEFAULT_SIEVE_LIMIT).unwrap();
        let s = SpfSieve::build(100_000).unwrap();
        let mut buf = SmallFactors::new();
        for u in 1..=100_000u64 {
            let expected = naive_factor(u);
            assert_eq!(factorize(u as u128, &t).unwrap().factors(), &expected[..]);
            s.factor(u, &mut buf);
            let got: Vec<(u128, u32)> = buf.iter().map(|&(p, e)| (p as u128, e)).collect();
            assert_eq!(got, expected);
        }
    }

    #[test]
    fn large_values() {
        let t = PrimeTable::build(1_000_000, DEFAULT_SIEVE_LIMIT).unwrap();
        let u = 999_983u128 * 1_000_003;
        let f = factorize(u, &t).unwrap();
        assert_eq!(f.factors(), &[(999_983, 1), (1_000_003, 1)]);
        assert_eq!(f.product(), Some(u));
        let m61: u128 = (1 << 61) - 1;
        assert!(factorize(m61 * 243 * 7, &t).is_err());
        assert!(factorize(1 << 127, &t).is_err());
    }

    #[test]
    fn spectra() {
        let t = PrimeTable::build(100, DEFAULT_SIEVE_LIMIT).unwrap();
        let s = factorize(12, &t).unwrap().spectrum();
        let l12 = 12f64.ln();
        let expected = [3f64.ln() / l12, 2f64.ln() / l12, 2f64.ln() / l12];
        for (a, b) in s.entries().iter().zip(expected) {
            assert!((a - b).abs() < 1e-15);
        }
        assert!((s.entries()[0] - 0.4421).abs() < 1e-4);
        assert!((s.entries()[1] - 0.2789).abs() < 1e-4);
        assert_eq!(factorize(1, &t).unwrap().spectrum().entries(), &[1.0]);
        assert_eq!(factorize(7, &t).unwrap().spectrum().entries(), &[1.0]);
        assert_eq!(s.get(5), 0.0);
    }

    #[test]
    fn factorization_validation() {
        assert!(Factorization::new(12, vec![(2, 2), (3, 1)]).is_ok());
        assert!(Factorization::new(12, vec![(3, 1), (2, 2)]).is_err());
        assert!(Factorization::new(13, vec![(2, 2), (3, 1)]).is_err());
        assert!(Factorization::new(1, vec![]).is_ok());
    }

    #[test]
    fn cache_roundtrip_and_corruption() {
        let t = PrimeTable::build(100_000, DEFAULT_SIEVE_LIMIT).unwrap();
        let bytes = t.to_cache_bytes();
        assert_eq!(PrimeTable::from_cache_bytes(&bytes).unwrap(), t);
        let mut bad = bytes.clone();
        bad[40] ^= 1;
        assert!(matches!(
            PrimeTable::from_cache_bytes(&bad),
            Err(Error::Cache(_))
        ));
        assert!(PrimeTable::from_cache_bytes(&bytes[..20]).is_err());
    }

    #[test]
    fn isqrt_edges() {
        for n in [0u64, 1, 3, 4, 15, 16, u64::MAX, u64::MAX - 1, (1 << 32) - 1] {
            let r = isqrt(n);
            assert!(r * r <= n);
            assert!((r + 1).checked_mul(r + 1).is_none_or(|v| v > n));
        }
    }
}
