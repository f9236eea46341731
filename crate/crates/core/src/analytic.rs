//! Closed-form witness results: the two-point Gaussian-kernel optimum, the
//! Gaussian minimum eigenvalue, distance bounds and the non-Gaussianity bound.

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{domain, Result};
use crate::quasiprob::{gaussian_axes, OrderingParameter};
use crate::states::{fig2_state, mean_photon_number, GaussianState, QuantumState};
use crate::witness::{optimize_points, SearchConfig, WitnessReport};

/// Minimum eigenvalue of a two-point witness with Gaussian kernel and where
/// it is attained.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GaussianWitnessOptimum {
    pub lambda_min: f64,
    /// Empty when the state is classical and no negative eigenvalue exists.
    pub optimal_points: Vec<Complex64>,
    pub kernel_params: (f64, f64, f64),
}

/// `min_x` of the lowest eigenvalue of `[[e^{-a x^2}, e^{-c x^2}], [e^{-c x^2}, e^{-a x^2}]]`,
/// i.e. `-(1 - c/a) (c/a)^{c/(a-c)}` at `x = +-sqrt(ln(a/c) / (a - c))`.
/// The returned points are `(+-x, 0)`.
pub fn appendix_a_lambda_min(a: f64, b: f64, c: f64) -> Result<GaussianWitnessOptimum> {
    if !(a.is_finite() && b.is_finite() && c.is_finite()) {
        return domain("kernel parameters must be finite");
    }
    if !(b > 0.0) {
        return domain(format!("b > 0 violated (b = {b})"));
    }
    if !(c > b) {
        return domain(format!("c > b violated (c = {c}, b = {b})"));
    }
    if !(a > c) {
        return domain(format!("a > c violated (a = {a}, c = {c})"));
    }
    let (lambda, x) = kernel_optimum(a, c);
    Ok(GaussianWitnessOptimum {
        lambda_min: lambda,
        optimal_points: vec![Complex64::new(x, 0.0), Complex64::new(-x, 0.0)],
        kernel_params: (a, b, c),
    })
}

/// Written in `eps = (a - c)/c` so that `a -> c` approaches `(0, 1/sqrt(c))` smoothly.
fn kernel_optimum(a: f64, c: f64) -> (f64, f64) {
    let eps = (a - c) / c;
    let l = eps.ln_1p();
    let ratio = if eps < 1e-8 { 1.0 - 0.5 * eps } else { l / eps };
    let lambda = -(eps / (1.0 + eps)) * (-ratio).exp();
    let x = (ratio / c).sqrt();
    (lambda, x)
}

/// `-2 mu exp(-d coth d) sinh d` with `d = r - r_c`; zero for `d <= 0`.
pub fn squeezed_thermal_lambda_min(purity: f64, squeezing: f64) -> f64 {
    let d = squeezing + 0.5 * purity.ln();
    if d <= 0.0 {
        0.0
    } else if d < 1e-6 {
        -2.0 * purity * (-1.0f64).exp() * d
    } else {
        -2.0 * purity * (-d / d.tanh()).exp() * d.sinh()
    }
}

/// Optimal two-point witness of a Gaussian state for ordering `s`.
pub fn gaussian_lambda_min(
    state: &GaussianState,
    s: OrderingParameter,
) -> Result<GaussianWitnessOptimum> {
    let (a, b) = gaussian_axes(state, s)?;
    let c = 2.0 / (1.0 - s.value());
    if !(a > c) {
        return Ok(GaussianWitnessOptimum {
            lambda_min: 0.0,
            optimal_points: Vec::new(),
            kernel_params: (a, b, c),
        });
    }
    let (unit, x) = kernel_optimum(a, c);
    let pref = (1.0 - s.value()) * (a * b).sqrt() / 2.0;
    let rot = Complex64::from_polar(1.0, state.phase());
    let d = state.displacement();
    Ok(GaussianWitnessOptimum {
        lambda_min: pref * unit,
        optimal_points: vec![d + rot * x, d - rot * x],
        kernel_params: (a, b, c),
    })
}

/// Lower bound on the nonclassical distance from an order-`n` witness.
pub fn distance_lower_bound(lambda_min: f64, n: usize) -> f64 {
    (-lambda_min / (2.0 * n as f64)).max(0.0)
}

/// Least two-point eigenvalue reachable by mixtures of Gaussian states with
/// mean photon number `E`: `-2 sqrt(E) / (sqrt(E+1) + sqrt(E))^{sqrt(1 + 1/E)}`.
pub fn qng_bound(mean_photon: f64) -> Result<f64> {
    if !(mean_photon >= 0.0) || !mean_photon.is_finite() {
        return domain(format!("mean photon number must be finite and >= 0, got {mean_photon}"));
    }
    if mean_photon < 1e-12 {
        return Ok(0.0);
    }
    let e = mean_photon;
    let base = (e + 1.0).sqrt() + e.sqrt();
    Ok(-2.0 * e.sqrt() * (-(1.0 + 1.0 / e).sqrt() * base.ln()).exp())
}

/// Absolute margin `B(E) - lambda_min` must exceed to flag non-Gaussianity.
pub const QNG_TOL: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QngReport {
    pub mean_photon: f64,
    pub bound: f64,
    pub lambda_min: f64,
    /// `bound - lambda_min`; positive values certify non-Gaussianity.
    pub delta: f64,
    pub quantum_non_gaussian: bool,
    pub witness: WitnessReport,
}

/// Compares the optimized two-point Wigner witness with the Gaussian bound
/// at the state's mean photon number.
pub fn certify_qng(state: &QuantumState, config: &SearchConfig) -> Result<QngReport> {
    let mean_photon = mean_photon_number(state);
    let bound = qng_bound(mean_photon.max(0.0))?;
    let witness = optimize_points(state, 2, OrderingParameter::WIGNER, config)?;
    let delta = bound - witness.min_eigenvalue;
    Ok(QngReport {
        mean_photon,
        bound,
        lambda_min: witness.min_eigenvalue,
        delta,
        quantum_non_gaussian: delta > QNG_TOL,
        witness,
    })
}

/// Whether some `f` on the grid `step, 2 step, .. < 1/2` makes the squeezed
/// `(1 - f)|0><0| + f|2><2|` family certifiably non-Gaussian at squeezing `r`.
pub fn qng_detected_at(squeezing: f64, f_step: f64, config: &SearchConfig) -> Result<bool> {
    let count = (0.5 / f_step).ceil() as usize;
    let fs: Vec<f64> = (1..count).map(|i| i as f64 * f_step).filter(|&f| f < 0.5).collect();
    let hits: Vec<bool> = fs
        .par_iter()
        .map(|&f| Ok(certify_qng(&fig2_state(f, squeezing)?, config)?.quantum_non_gaussian))
        .collect::<Result<_>>()?;
    Ok(hits.into_iter().any(|h| h))
}

/// Smallest squeezing in `[lo, hi]` at which [`qng_detected_at`] fires,
/// bisected to width `r_tol`. Detection is assumed monotone in `r`.
pub fn qng_threshold(
    lo: f64,
    hi: f64,
    f_step: f64,
    r_tol: f64,
    config: &SearchConfig,
) -> Result<f64> {
    if !(lo < hi) || !(f_step > 0.0 && f_step < 0.5) || !(r_tol > 0.0) {
        return domain("threshold search needs lo < hi, 0 < f_step < 1/2 and r_tol > 0");
    }
    if qng_detected_at(lo, f_step, config)? {
        return domain(format!("already detected at the lower end r = {lo}"));
    }
    if !qng_detected_at(hi, f_step, config)? {
        return domain(format!("not detected at the upper end r = {hi}"));
    }
    let (mut lo, mut hi) = (lo, hi);
    while hi - lo > r_tol {
        let mid = 0.5 * (lo + hi);
        if qng_detected_at(mid, f_step, config)? {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::special::compensated_sum;
    use crate::witness::min_eigen_2x2;
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;

    fn grid_min(a: f64, c: f64) -> f64 {
        (1..=30_000)
            .map(|i| {
                let x = i as f64 * 1e-4;
                let d = (-a * x * x).exp();
                let o = (-c * x * x).exp();
                min_eigen_2x2(d, d, Complex64::new(o, 0.0)).0
            })
            .fold(f64::INFINITY, f64::min)
    }

    #[test]
    fn ratio_e_example() {
        let e = std::f64::consts::E;
        let opt = appendix_a_lambda_min(2.0 * e, 1.0, 2.0).unwrap();
        let expect = -(1.0 - 1.0 / e) * (1.0 / e).powf(1.0 / (e - 1.0));
        assert_abs_diff_eq!(opt.lambda_min, expect, epsilon = 1e-14);
        assert_abs_diff_eq!(opt.lambda_min, -0.3532, epsilon = 1e-4);
        assert!(opt.lambda_min <= grid_min(2.0 * e, 2.0) + 1e-8);
        assert_abs_diff_eq!(opt.lambda_min, grid_min(2.0 * e, 2.0), epsilon = 1e-6);
    }

    #[test]
    fn near_degenerate_kernel() {
        let opt = appendix_a_lambda_min(2.0 * (1.0 + 1e-8), 1.0, 2.0).unwrap();
        assert!(opt.lambda_min <= 0.0 && opt.lambda_min.abs() < 1e-7);
    }

    #[test]
    fn ordering_violations_are_named() {
        let msg = |r: Result<GaussianWitnessOptimum>| r.unwrap_err().to_string();
        assert!(msg(appendix_a_lambda_min(1.0, 0.5, 2.0)).contains("a > c"));
        assert!(msg(appendix_a_lambda_min(3.0, 2.5, 2.0)).contains("c > b"));
        assert!(msg(appendix_a_lambda_min(3.0, -1.0, 2.0)).contains("b > 0"));
    }

    #[test]
    fn eq7_reference() {
        let lam = squeezed_thermal_lambda_min(1.0, 0.5);
        let direct = -2.0 * (-0.5 * 0.5f64.cosh() / 0.5f64.sinh()).exp() * 0.5f64.sinh();
        assert_abs_diff_eq!(lam, direct, epsilon = 1e-15);
        assert_abs_diff_eq!(lam, -0.3532, epsilon = 1e-4);
        let g = GaussianState::new(1.0, 0.5, 0.0, Complex64::new(0.0, 0.0)).unwrap();
        let opt = gaussian_lambda_min(&g, OrderingParameter::WIGNER).unwrap();
        assert_abs_diff_eq!(opt.lambda_min, lam, epsilon = 1e-14);
        let x = (0.5 / (1.0f64.exp() - 1.0)).sqrt();
        assert_abs_diff_eq!(opt.optimal_points[0].re, x, epsilon = 1e-14);
    }

    #[test]
    fn critical_squeezing_is_zero() {
        let mu: f64 = 0.6;
        let rc = -0.5 * mu.ln();
        assert_eq!(squeezed_thermal_lambda_min(mu, rc), 0.0);
        let g = GaussianState::new(mu, rc, 0.0, Complex64::new(0.0, 0.0)).unwrap();
        let opt = gaussian_lambda_min(&g, OrderingParameter::WIGNER).unwrap();
        assert!(opt.lambda_min.abs() < 1e-15);
    }

    #[test]
    fn series_guard_matches_formula() {
        let mu: f64 = 0.8;
        let rc = -0.5 * mu.ln();
        let d: f64 = 0.999e-6;
        let exact = -2.0 * mu * (-d * d.cosh() / d.sinh()).exp() * d.sinh();
        let guarded = squeezed_thermal_lambda_min(mu, rc + d);
        assert!((guarded - exact).abs() < 1e-9 * exact.abs());
    }

    #[test]
    fn points_rotate_with_phase_and_shift_with_displacement() {
        let d = Complex64::new(0.3, -0.2);
        let g = GaussianState::new(0.9, 0.7, 0.8, d).unwrap();
        let opt = gaussian_lambda_min(&g, OrderingParameter::new(-0.3).unwrap()).unwrap();
        let mid = (opt.optimal_points[0] + opt.optimal_points[1]) * 0.5;
        assert!((mid - d).norm() < 1e-14);
        let dir = opt.optimal_points[0] - d;
        assert_abs_diff_eq!(dir.arg(), 0.8, epsilon = 1e-12);
    }

    #[test]
    fn distance_examples() {
        assert_eq!(distance_lower_bound(-1.0, 1), 0.5);
        assert_eq!(distance_lower_bound(0.3, 2), 0.0);
        let (mu, r): (f64, f64) = (0.9, 0.8);
        let d = r + 0.5 * mu.ln();
        let expect = mu / 2.0 * (-d / d.tanh()).exp() * d.sinh();
        assert_abs_diff_eq!(
            distance_lower_bound(squeezed_thermal_lambda_min(mu, r), 2),
            expect,
            epsilon = 1e-15
        );
    }

    #[test]
    fn qng_bound_values() {
        assert_eq!(qng_bound(0.0).unwrap(), 0.0);
        let b1 = qng_bound(1.0).unwrap();
        assert_abs_diff_eq!(b1, -2.0 / (2f64.sqrt() + 1.0).powf(2f64.sqrt()), epsilon = 1e-15);
        assert_abs_diff_eq!(b1, -0.5750, epsilon = 1e-4);
        assert!(qng_bound(-0.1).is_err());
        for r in [0.2f64, 0.5, 1.0] {
            let e = r.sinh().powi(2);
            assert_abs_diff_eq!(qng_bound(e).unwrap(), squeezed_thermal_lambda_min(1.0, r), epsilon = 1e-9);
        }
    }

    #[test]
    fn qng_bound_is_best_pure_gaussian_at_fixed_energy() {
        // at E = 1, mixed squeezed thermal states with the same energy do worse
        let best = qng_bound(1.0).unwrap();
        let worst = (1..200)
            .map(|i| {
                let mu = i as f64 / 200.0;
                // cosh(2r)/(2 mu) - 1/2 = 1
                let r = 0.5 * (3.0 * mu).acosh();
                if (3.0 * mu) < 1.0 {
                    0.0
                } else {
                    squeezed_thermal_lambda_min(mu, r)
                }
            })
            .fold(0.0, f64::min);
        assert!(best <= worst + 1e-15);
    }

    #[test]
    fn vacuum_is_not_flagged() {
        let rep = certify_qng(&QuantumState::vacuum(), &SearchConfig::default()).unwrap();
        // lambda_min = 0 = B(0) up to rounding of a rank-one matrix
        assert!(rep.delta <= QNG_TOL);
        assert!(!rep.quantum_non_gaussian);
    }

    #[test]
    fn squeezed_two_photon_mixture_is_flagged() {
        let rep = certify_qng(&fig2_state(0.45, 0.5).unwrap(), &SearchConfig::default()).unwrap();
        assert!(rep.quantum_non_gaussian, "{rep:?}");
        let e = 2.0 * 0.45 * 1.0f64.cosh() + 0.5f64.sinh().powi(2);
        assert_abs_diff_eq!(rep.mean_photon, e, epsilon = 1e-12);
    }

    proptest! {
        #[test]
        fn independent_of_b(c in 0.5f64..5.0, ra in 1.01f64..8.0, fb in 0.01f64..0.99, fb2 in 0.01f64..0.99) {
            let a = c * ra;
            let x = appendix_a_lambda_min(a, c * fb, c).unwrap();
            let y = appendix_a_lambda_min(a, c * fb2, c).unwrap();
            prop_assert_eq!(x.lambda_min, y.lambda_min);
            let p = x.optimal_points[0].re;
            let d = (-a * p * p).exp();
            let o = (-c * p * p).exp();
            let direct = compensated_sum([d, -o]);
            prop_assert!((direct - x.lambda_min).abs() < 1e-12);
        }

        #[test]
        fn gaussian_negative_iff_above_critical(mu in 0.05f64..1.0, r in 0.0f64..2.5) {
            let g = GaussianState::new(mu, r, 0.0, Complex64::new(0.0, 0.0)).unwrap();
            let lam = gaussian_lambda_min(&g, OrderingParameter::WIGNER).unwrap().lambda_min;
            let rc = -0.5 * mu.ln();
            if r > rc + 1e-9 { prop_assert!(lam < 0.0); } else { prop_assert!(lam == 0.0); }
        }

        #[test]
        fn monotone_in_squeezing(mu in 0.05f64..1.0, r in 0.0f64..3.0, dr in 0.0f64..0.5) {
            let a = squeezed_thermal_lambda_min(mu, r).abs();
            let b = squeezed_thermal_lambda_min(mu, r + dr).abs();
            prop_assert!(b >= a * (1.0 - 1e-12));
        }

        #[test]
        fn general_s_matches_eq7_at_zero(mu in 0.05f64..1.0, r in 0.0f64..3.0) {
            let g = GaussianState::new(mu, r, 0.0, Complex64::new(0.0, 0.0)).unwrap();
            let lam = gaussian_lambda_min(&g, OrderingParameter::WIGNER).unwrap().lambda_min;
            let eq7 = squeezed_thermal_lambda_min(mu, r);
            prop_assert!((lam - eq7).abs() < 1e-9 * eq7.abs().max(1e-3));
        }
    }
}
