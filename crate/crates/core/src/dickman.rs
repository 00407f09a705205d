//! The Dickman function `rho` on a uniform grid, and the marginal CDF of the
//! largest Poisson-Dirichlet point.

use std::fmt::Write as _;
use std::sync::OnceLock;

use crate::error::{Error, Result};

pub const DEFAULT_PER_UNIT: usize = 2048;
pub const DEFAULT_U_MAX: u32 = 20;
const MAX_U_MAX: u32 = 200;

/// Gauss-Legendre nodes and weights on `[-1, 1]`.
pub fn gauss_legendre(n: usize) -> Vec<(f64, f64)> {
    assert!(n >= 1);
    let mut out = Vec::with_capacity(n);
    for i in 0..n {
        let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (mut p0, mut p1) = (1.0, x);
            for k in 2..=n {
                let p2 = ((2 * k - 1) as f64 * x * p1 - (k - 1) as f64 * p0) / k as f64;
                p0 = p1;
                p1 = p2;
            }
            dp = n as f64 * (x * p1 - p0) / (x * x - 1.0);
            let dx = p1 / dp;
            x -= dx;
            if dx.abs() < 1e-16 {
                break;
            }
        }
        out.push((x, 2.0 / ((1.0 - x * x) * dp * dp)));
    }
    out
}

/// `rho` tabulated at `u = i / per_unit` for `0 <= u <= u_max`.
#[derive(Debug, Clone)]
pub struct RhoTable {
    per_unit: usize,
    u_max: u32,
    values: Vec<f64>,
}

impl RhoTable {
    /// Integrates `rho(u) = rho(u_i) - int_{u_i}^{u} rho(t-1)/t dt` cell by
    /// cell with 8-point Gauss-Legendre, interpolating `rho(t-1)` from the
    /// previous unit panel. On `[0, 2]` the closed forms are used.
    pub fn build(per_unit: usize, u_max: u32) -> Result<Self> {
        if !(16..=1 << 16).contains(&per_unit) {
            return Err(Error::invalid("per_unit", "must be in 16..=65536"));
        }
        if !(2..=MAX_U_MAX).contains(&u_max) {
            return Err(Error::invalid("u_max", format!("must be in 2..={MAX_U_MAX}")));
        }
        let m = per_unit;
        let h = 1.0 / m as f64;
        let n = m * u_max as usize;
        let mut values = vec![0.0; n + 1];
        for (i, v) in values.iter_mut().enumerate().take(2 * m + 1) {
            *v = if i <= m { 1.0 } else { 1.0 - (i as f64 * h).ln() };
        }
        let gl = gauss_legendre(8);
        for i in 2 * m..n {
            let (lo, hi) = (i as f64 * h, (i + 1) as f64 * h);
            // The cell [lo, hi] shifted by one lies in cell i - m.
            let prev = i - m;
            let mut integral = 0.0;
            for &(x, w) in &gl {
                let t = 0.5 * (lo + hi) + 0.5 * h * x;
                let s = 0.5 + 0.5 * x;
                integral += w * interp_cell(&values, m, prev, s) / t;
            }
            values[i + 1] = values[i] - 0.5 * h * integral;
        }
        Ok(RhoTable {
            per_unit,
            u_max,
            values,
        })
    }

    pub fn per_unit(&self) -> usize {
        self.per_unit
    }

    pub fn u_max(&self) -> f64 {
        self.u_max as f64
    }

    /// Grid value `rho(i / per_unit)`.
    pub fn grid_value(&self, i: usize) -> f64 {
        self.values[i]
    }

    /// `rho(u)` by cubic interpolation inside the unit panel containing `u`.
    ///
    /// The absolute error is around `1e-15` at the default resolution, so the
    /// relative error grows once `rho(u)` itself approaches that size
    /// (`u` beyond about 9).
    pub fn rho(&self, u: f64) -> Result<f64> {
        if u.is_nan() || u <= 0.0 {
            return Err(Error::invalid("u", "must be > 0"));
        }
        if u <= 1.0 {
            return Ok(1.0);
        }
        if u > self.u_max as f64 {
            return Err(Error::OutOfTable {
                arg: u,
                max: self.u_max as f64,
            });
        }
        let pos = u * self.per_unit as f64;
        let cell = (pos.floor() as usize).min(self.values.len() - 2);
        Ok(interp_cell(&self.values, self.per_unit, cell, pos - cell as f64))
    }

    /// `P(L_1 <= c) = rho(1/c)` for `c` in `(0, 1]`.
    pub fn cdf_l1(&self, c: f64) -> Result<f64> {
        if !(c > 0.0 && c <= 1.0) {
            return Err(Error::invalid("c", "must be in (0, 1]"));
        }
        self.rho(1.0 / c)
    }

    /// CSV with columns `u,rho(u)` at the given spacing, starting from `step`.
    pub fn to_csv(&self, u_max: f64, step: f64) -> Result<String> {
        if !(step > 0.0) {
            return Err(Error::invalid("step", "must be > 0"));
        }
        if u_max > self.u_max as f64 {
            return Err(Error::OutOfTable {
                arg: u_max,
                max: self.u_max as f64,
            });
        }
        let mut out = String::from("u,rho(u)\n");
        for (u, r) in self.sample_points(u_max, step)? {
            writeln!(out, "{u},{r}").expect("writing to a String");
        }
        Ok(out)
    }

    /// Points `(i * step, rho(i * step))` for `i >= 1` up to `u_max`.
    pub fn sample_points(&self, u_max: f64, step: f64) -> Result<Vec<(f64, f64)>> {
        let count = (u_max / step + 1e-9).floor() as usize;
        (1..=count)
            .map(|i| {
                let u = i as f64 * step;
                Ok((u, self.rho(u)?))
            })
            .collect()
    }
}

/// Cubic Lagrange interpolation at fraction `s` of grid cell `cell`, with the
/// four-point stencil kept inside the unit panel holding the cell.
fn interp_cell(values: &[f64], m: usize, cell: usize, s: f64) -> f64 {
    let panel_lo = cell / m * m;
    let panel_hi = (panel_lo + m).min(values.len() - 1);
    let start = (cell.saturating_sub(1)).clamp(panel_lo, panel_hi - 3);
    let x = (cell - start) as f64 + s;
    let mut acc = 0.0;
    for j in 0..4 {
        let mut l = 1.0;
        for k in 0..4 {
            if k != j {
                l *= (x - k as f64) / (j as f64 - k as f64);
            }
        }
        acc += l * values[start + j];
    }
    acc
}

/// Shared table with the default resolution on `(0, 20]`.
pub fn default_table() -> &'static RhoTable {
    static TABLE: OnceLock<RhoTable> = OnceLock::new();
    TABLE.get_or_init(|| {
        RhoTable::build(DEFAULT_PER_UNIT, DEFAULT_U_MAX).expect("default parameters are valid")
    })
}

/// `rho(u)` from the default table.
pub fn rho(u: f64) -> Result<f64> {
    default_table().rho(u)
}

/// `P(L_1 <= c)` from the default table.
pub fn cdf_l1(c: f64) -> Result<f64> {
    default_table().cdf_l1(c)
}
