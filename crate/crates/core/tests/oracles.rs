//! Library values against references computed here by unrelated methods.

use pdspectra::dickman::{self, RhoTable};
use pdspectra::pdprocess::{
    box_correlation_exact, box_function_exact, corr_mc, joint_cdf_mc, joint_cdf_size_biased,
    pd_correlation_quadrature,
};
use pdspectra::{BoxFunction, Interval, WeightedBox};

fn simpson(f: &dyn Fn(f64) -> f64, a: f64, b: f64, tol: f64) -> f64 {
    fn rec(f: &dyn Fn(f64) -> f64, a: f64, b: f64, fa: f64, fm: f64, fb: f64, whole: f64, tol: f64, depth: u32) -> f64 {
        let m = 0.5 * (a + b);
        let (lm, rm) = (0.5 * (a + m), 0.5 * (m + b));
        let (flm, frm) = (f(lm), f(rm));
        let left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
        let right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
        let delta = left + right - whole;
        if depth == 0 || delta.abs() <= 15.0 * tol {
            return left + right + delta / 15.0;
        }
        rec(f, a, m, fa, flm, fm, left, tol / 2.0, depth - 1)
            + rec(f, m, b, fm, frm, fb, right, tol / 2.0, depth - 1)
    }
    if b <= a {
        return 0.0;
    }
    let (fa, fm, fb) = (f(a), f(0.5 * (a + b)), f(b));
    let whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
    rec(f, a, b, fa, fm, fb, whole, tol, 40)
}

/// Integral of `1/(t_1...t_k)` over the box intersected with `sum t < 1`, by
/// nested Simpson in the original coordinates.
fn simplex_box_integral(lower: &[f64], upper: &[f64], budget: f64, tol: f64) -> f64 {
    match lower.len() {
        0 => 1.0,
        _ => {
            let hi = upper[0].min(budget);
            simpson(
                &|t: f64| simplex_box_integral(&lower[1..], &upper[1..], budget - t, tol) / t,
                lower[0],
                hi,
                tol,
            )
        }
    }
}

fn boxes(lower: &[f64], upper: &[f64]) -> BoxFunction {
    BoxFunction::new(vec![WeightedBox::new(lower.to_vec(), upper.to_vec(), 1.0)]).unwrap()
}

#[test]
fn rectangle_formula_matches_direct_integration() {
    let cases: &[(&[f64], &[f64])] = &[
        (&[0.25], &[0.5]),
        (&[0.15, 0.3], &[0.25, 0.4]),
        (&[0.1, 0.2, 0.3], &[0.2, 0.3, 0.45]),
    ];
    for (lo, hi) in cases {
        let direct = simplex_box_integral(lo, hi, 1.0, 1e-12);
        let iv: Vec<Interval> = lo.iter().zip(*hi).map(|(&a, &b)| Interval::new(a, b)).collect();
        let exact = box_correlation_exact(&iv).unwrap();
        let product: f64 = lo.iter().zip(*hi).map(|(a, b)| (b / a).ln()).product();
        assert!((exact - product).abs() < 1e-14);
        assert!((direct - exact).abs() < 1e-8, "{lo:?}: {direct} vs {exact}");
    }
}

#[test]
fn quadrature_handles_boxes_cut_by_the_simplex() {
    let cases: &[(&[f64], &[f64])] = &[
        (&[0.4, 0.5], &[0.6, 0.7]),
        (&[0.2, 0.3, 0.3], &[0.3, 0.4, 0.45]),
        (&[0.6], &[1.0]),
    ];
    for (lo, hi) in cases {
        let eta = boxes(lo, hi);
        let direct = simplex_box_integral(lo, hi, 1.0, 1e-12);
        let quad = pd_correlation_quadrature(&eta).unwrap();
        assert!((quad - direct).abs() < 1e-7, "{lo:?}: {quad} vs {direct}");
        assert!(box_function_exact(&eta).is_err() || lo.len() == 1);
    }
}

#[test]
fn clipped_box_monte_carlo_agrees_with_quadrature() {
    let eta = boxes(&[0.4, 0.5], &[0.6, 0.7]);
    let quad = pd_correlation_quadrature(&eta).unwrap();
    let mc = corr_mc(&eta, 1_000_000, 11).unwrap();
    assert!(mc.within_sigmas(quad, 4.0), "{mc:?} vs {quad}");
}

#[test]
fn rho_between_two_and_three_matches_its_integral_form() {
    for i in 0..=20 {
        let u = 2.0 + i as f64 / 20.0;
        let integral = simpson(&|t: f64| (t - 1.0).ln() / t, 2.0, u, 1e-14);
        let expected = 1.0 - u.ln() + integral;
        let got = dickman::rho(u).unwrap();
        assert!((got - expected).abs() < 1e-11, "u = {u}: {got} vs {expected}");
    }
}

#[test]
fn rho_reference_values() {
    // Values from a centred power-series solution of the delay equation.
    let reference = [
        (2.5, 0.130_319_561_832_250_74),
        (3.0, 0.048_608_388_291_131_567),
        (4.0, 0.004_910_925_647_760_832_4),
        (5.0, 3.547_247_004_560_397_3e-4),
        (6.0, 1.964_969_635_395_529_0e-5),
        (8.0, 3.232_069_304_226_103_8e-8),
        (10.0, 2.770_171_837_725_959_0e-11),
    ];
    for (u, want) in reference {
        let got = dickman::rho(u).unwrap();
        assert!((got - want).abs() < 1e-15, "rho({u}) = {got}, want {want}");
    }
}

#[test]
fn rho_table_is_stable_under_step_halving() {
    let coarse = RhoTable::build(1024, 10).unwrap();
    let fine = RhoTable::build(2048, 10).unwrap();
    for i in 0..=89 {
        let u = 1.0 + i as f64 * 0.1 + 0.037;
        let (a, b) = (coarse.rho(u).unwrap(), fine.rho(u).unwrap());
        assert!((a - b).abs() < 1e-11, "u = {u}: {a} vs {b}");
    }
}

#[test]
fn tail_identity_below_one_half() {
    for eps in [0.01, 0.05, 0.1, 0.2, 0.3, 0.5] {
        let lhs = 1.0 - dickman::cdf_l1(1.0 - eps).unwrap();
        let rhs = (1.0 / (1.0 - eps)).ln();
        assert!((lhs - rhs).abs() < 1e-12, "eps = {eps}");
    }
}

#[test]
fn joint_cdf_estimators_agree_with_rho() {
    for c in [0.3, 0.5, 0.8] {
        let want = dickman::cdf_l1(c).unwrap();
        let plain = joint_cdf_mc(&[c], 400_000, 5).unwrap();
        let biased = joint_cdf_size_biased(&[c], 400_000, 5).unwrap();
        assert!(plain.within_sigmas(want, 4.0), "c = {c}: {plain:?} vs {want}");
        assert!(biased.within_sigmas(want, 4.0), "c = {c}: {biased:?} vs {want}");
    }
    let c = [0.6, 0.3];
    let plain = joint_cdf_mc(&c, 400_000, 9).unwrap();
    let biased = joint_cdf_size_biased(&c, 400_000, 9).unwrap();
    let se = (plain.std_error.powi(2) + biased.std_error.powi(2)).sqrt();
    assert!((plain.value - biased.value).abs() < 4.0 * se);
}
