//! On-off detector arrays: click statistics, the parity (Wigner-like)
//! function, the triangular map to s-parametrized quasiprobabilities, and
//! finite-shot sampling.

use nalgebra::DMatrix;
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;
use std::fmt::Write as _;

use crate::error::{domain, Error, Result};
use crate::quasiprob::OrderingParameter;
use crate::special::{binomial, compensated_sum};
use crate::states::{FockDensityMatrix, GaussianState, QuantumState};
use crate::witness::{build_witness_with, PhasePointSet, WitnessReport};

const NORM_TOL: f64 = 1e-10;
const TRUNCATION_TOL: f64 = 1e-8;
const SHOT_CHUNK: u64 = 1 << 16;

/// `N` on-off detectors behind a balanced splitter, each with efficiency `eta`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ArraySpec {
    detectors: usize,
    efficiency: f64,
}

impl ArraySpec {
    pub fn new(detectors: usize, efficiency: f64) -> Result<Self> {
        if detectors == 0 {
            return domain("an array needs at least one detector");
        }
        if !(efficiency > 0.0 && efficiency <= 1.0) {
            return domain(format!("efficiency must lie in (0, 1], got {efficiency}"));
        }
        Ok(Self {
            detectors,
            efficiency,
        })
    }

    pub fn detectors(&self) -> usize {
        self.detectors
    }

    pub fn efficiency(&self) -> f64 {
        self.efficiency
    }

    /// `S_m = 1 - 2N / ((N - m) eta)` for `m = 0..N`.
    pub fn orderings(&self) -> Vec<f64> {
        let n = self.detectors as f64;
        (0..self.detectors)
            .map(|m| 1.0 - 2.0 * n / ((n - m as f64) * self.efficiency))
            .collect()
    }

    /// Attenuation `x_m = (N - m) eta / N` of the normally ordered exponential
    /// paired with `S_m`; `x_N = 0`.
    fn attenuation(&self, m: usize) -> f64 {
        (self.detectors - m) as f64 * self.efficiency / self.detectors as f64
    }
}

/// Probabilities of `k = 0..N` clicks at a given probe displacement.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClickDistribution {
    probs: Vec<f64>,
    spec: ArraySpec,
    displacement: Complex64,
}

impl ClickDistribution {
    pub fn new(probs: Vec<f64>, spec: ArraySpec, displacement: Complex64) -> Result<Self> {
        if probs.len() != spec.detectors + 1 {
            return Err(Error::Contract(format!(
                "expected {} click probabilities, got {}",
                spec.detectors + 1,
                probs.len()
            )));
        }
        if probs.iter().any(|p| !(-NORM_TOL..=1.0 + NORM_TOL).contains(p)) {
            return Err(Error::Contract("click probabilities must lie in [0, 1]".into()));
        }
        let total = compensated_sum(probs.iter().cloned());
        if (total - 1.0).abs() > NORM_TOL {
            return Err(Error::Contract(format!("click probabilities sum to {total}")));
        }
        Ok(Self {
            probs,
            spec,
            displacement,
        })
    }

    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    pub fn spec(&self) -> ArraySpec {
        self.spec
    }

    pub fn displacement(&self) -> Complex64 {
        self.displacement
    }
}

/// `G(x) = tr[rho~ (1 - x)^n]` with `rho~ = D(alpha)^dagger rho D(alpha)`.
fn generating_function(state: &QuantumState, alpha: Complex64, xs: &[f64]) -> Result<Vec<f64>> {
    match state {
        QuantumState::Gaussian(g) => Ok(xs.iter().map(|&x| gaussian_generating(g, alpha, x)).collect()),
        QuantumState::Fock(f) => {
            let diag = displaced_diagonal(f, alpha)?;
            Ok(xs
                .iter()
                .map(|&x| {
                    let t = 1.0 - x;
                    let mut pow = 1.0;
                    compensated_sum(diag.iter().map(|&d| {
                        let term = d * pow;
                        pow *= t;
                        term
                    }))
                })
                .collect())
        }
        QuantumState::SqueezedFock(_) => Err(Error::Unsupported(
            "click statistics for squeezed Fock mixtures; expand the state in the Fock basis".into(),
        )),
    }
}

/// Phase-space overlap of the Gaussian Wigner function with the Weyl symbol
/// `(2/(2-x)) exp(-kappa |beta|^2)` of `(1-x)^n`, `kappa = 2x/(2-x)`.
fn gaussian_generating(g: &GaussianState, alpha: Complex64, x: f64) -> f64 {
    if x == 0.0 {
        return 1.0;
    }
    let r = g.squeezing();
    let rc = g.critical_squeezing();
    let a = 2.0 * (2.0 * (r - rc)).exp();
    let b = 2.0 * (-2.0 * (r + rc)).exp();
    let kappa = 2.0 * x / (2.0 - x);
    let (u, v) = g.frame_coordinates(alpha);
    2.0 * g.purity() * 2.0 / (2.0 - x) / ((a + kappa) * (b + kappa)).sqrt()
        * (-a * kappa * u * u / (a + kappa) - b * kappa * v * v / (b + kappa)).exp()
}

/// Photon-number distribution of the displaced state, `<j| D^dagger rho D |j>`,
/// from `D(alpha)|j> = (a^dagger - alpha*)^j / sqrt(j!) |alpha>`. Only the first
/// `dim` components of each vector meet `rho`, and the recursion never needs
/// more, so the vectors are exact; the sum over `j` is cut once it saturates.
fn displaced_diagonal(state: &FockDensityMatrix, alpha: Complex64) -> Result<Vec<f64>> {
    let dim = state.dim();
    let rho = state.entries();
    let mut v: Vec<Complex64> = Vec::with_capacity(dim);
    let mut c = Complex64::new((-0.5 * alpha.norm_sqr()).exp(), 0.0);
    for a in 0..dim {
        if a > 0 {
            c = c * alpha / (a as f64).sqrt();
        }
        v.push(c);
    }
    let quad = |v: &[Complex64]| -> f64 {
        let mut acc = Complex64::new(0.0, 0.0);
        for a in 0..dim {
            let mut row = Complex64::new(0.0, 0.0);
            for b in 0..dim {
                row += rho[(a, b)] * v[b];
            }
            acc += v[a].conj() * row;
        }
        acc.re.max(0.0)
    };
    let a2 = alpha.norm_sqr();
    let max_terms = dim + (4.0 * a2 + 20.0 * a2.sqrt()).ceil() as usize + 200;
    let min_terms = dim + a2.ceil() as usize;
    let mut out = vec![quad(&v)];
    let mut total = out[0];
    for j in 1..max_terms {
        let mut next = vec![Complex64::new(0.0, 0.0); dim];
        let sj = (j as f64).sqrt();
        for a in 0..dim {
            let raise = if a > 0 { v[a - 1] * (a as f64).sqrt() } else { Complex64::new(0.0, 0.0) };
            next[a] = (raise - alpha.conj() * v[a]) / sj;
        }
        v = next;
        let p = quad(&v);
        out.push(p);
        total += p;
        if j >= min_terms && 1.0 - total < 1e-15 {
            break;
        }
    }
    let total = compensated_sum(out.iter().cloned());
    if (total - 1.0).abs() > TRUNCATION_TOL {
        return Err(Error::Truncation(format!(
            "displaced photon distribution sums to {total} at |alpha| = {}",
            alpha.norm()
        )));
    }
    Ok(out)
}

/// Exact click probabilities `p_k = C(N,k) sum_m C(k,m) (-1)^{k-m} G(x_m)`.
pub fn click_probabilities(
    state: &QuantumState,
    displacement: Complex64,
    spec: ArraySpec,
) -> Result<ClickDistribution> {
    let n = spec.detectors;
    let xs: Vec<f64> = (0..=n).map(|m| spec.attenuation(m)).collect();
    let g = generating_function(state, displacement, &xs)?;
    let probs: Vec<f64> = (0..=n)
        .map(|k| {
            let inner = compensated_sum((0..=k).map(|m| {
                let sign = if (k - m) % 2 == 0 { 1.0 } else { -1.0 };
                sign * binomial(k, m) * g[m]
            }));
            (binomial(n, k) * inner).clamp(0.0, 1.0)
        })
        .collect();
    let total = compensated_sum(probs.iter().cloned());
    if (total - 1.0).abs() > TRUNCATION_TOL {
        return Err(Error::Truncation(format!("click probabilities sum to {total}")));
    }
    ClickDistribution::new(probs, spec, displacement)
}

/// Parity of the click number, `(2/pi) sum_k (-1)^k p_k`.
pub fn wigner_like(state: &QuantumState, displacement: Complex64, spec: ArraySpec) -> Result<f64> {
    let clicks = click_probabilities(state, displacement, spec)?;
    Ok(parity(&clicks))
}

pub fn parity(clicks: &ClickDistribution) -> f64 {
    2.0 / PI
        * compensated_sum(
            clicks
                .probs
                .iter()
                .enumerate()
                .map(|(k, p)| if k % 2 == 0 { *p } else { -*p }),
        )
}

/// The same parity through `:(2 e^{-eta n/N} - 1)^N:` expanded directly.
pub fn wigner_like_direct(state: &QuantumState, displacement: Complex64, spec: ArraySpec) -> Result<f64> {
    let n = spec.detectors;
    let eta = spec.efficiency;
    let xs: Vec<f64> = (0..=n).map(|j| j as f64 * eta / n as f64).collect();
    let g = generating_function(state, displacement, &xs)?;
    Ok(2.0 / PI
        * compensated_sum((0..=n).map(|j| {
            let sign = if (n - j) % 2 == 0 { 1.0 } else { -1.0 };
            sign * binomial(n, j) * 2f64.powi(j as i32) * g[j]
        })))
}

/// Lower-triangular `T` with `p = T [W(S_0), .., W(S_{N-1}), 1]^T`.
#[derive(Debug, Clone, PartialEq)]
pub struct TriangularMap {
    entries: DMatrix<f64>,
    orderings: Vec<f64>,
}

impl TriangularMap {
    pub fn entries(&self) -> &DMatrix<f64> {
        &self.entries
    }

    pub fn orderings(&self) -> &[f64] {
        &self.orderings
    }
}

pub fn build_triangular_map(spec: ArraySpec) -> TriangularMap {
    let n = spec.detectors;
    let nf = n as f64;
    let entries = DMatrix::from_fn(n + 1, n + 1, |k, m| {
        if m > k {
            0.0
        } else if m == n {
            1.0
        } else {
            let sign = if (k - m) % 2 == 0 { 1.0 } else { -1.0 };
            binomial(n, k) * binomial(k, m) * sign * nf * PI / ((nf - m as f64) * spec.efficiency)
        }
    });
    TriangularMap {
        entries,
        orderings: spec.orderings(),
    }
}

/// `W(alpha; S_m)` for `m = 0..N` by forward substitution on the first `N` rows.
pub fn recover_quasiprobs(clicks: &ClickDistribution) -> Vec<(f64, f64)> {
    let map = build_triangular_map(clicks.spec);
    let t = &map.entries;
    let n = clicks.spec.detectors;
    let mut w = Vec::with_capacity(n);
    for k in 0..n {
        let known = compensated_sum((0..k).map(|m| t[(k, m)] * w[m]));
        w.push((clicks.probs[k] - known) / t[(k, k)]);
    }
    map.orderings.iter().cloned().zip(w).collect()
}

/// Empirical click frequencies with per-bin standard errors.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SampledClicks {
    pub clicks: ClickDistribution,
    pub stderr: Vec<f64>,
    pub shots: u64,
    pub seed: u64,
}

/// Multinomial sampling of `shots` outcomes. Shots are processed in fixed
/// chunks; chunk `c` draws from ChaCha8 stream `c` under `seed`, so counts do
/// not depend on the thread schedule.
pub fn simulate_shots(
    state: &QuantumState,
    displacement: Complex64,
    spec: ArraySpec,
    shots: u64,
    seed: u64,
) -> Result<SampledClicks> {
    let exact = click_probabilities(state, displacement, spec)?;
    sample_distribution(&exact, shots, seed)
}

pub fn sample_distribution(exact: &ClickDistribution, shots: u64, seed: u64) -> Result<SampledClicks> {
    if shots == 0 {
        return domain("shots must be at least 1");
    }
    let bins = exact.probs.len();
    let mut cdf = Vec::with_capacity(bins);
    let mut acc = 0.0;
    for p in &exact.probs {
        acc += p;
        cdf.push(acc);
    }
    let chunks = shots.div_ceil(SHOT_CHUNK);
    let counts = (0..chunks)
        .into_par_iter()
        .map(|c| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(c);
            let len = SHOT_CHUNK.min(shots - c * SHOT_CHUNK);
            let mut local = vec![0u64; bins];
            for _ in 0..len {
                let u: f64 = rng.random::<f64>() * acc;
                let k = cdf.partition_point(|&edge| edge <= u).min(bins - 1);
                local[k] += 1;
            }
            local
        })
        .reduce(
            || vec![0u64; bins],
            |mut a, b| {
                a.iter_mut().zip(b).for_each(|(x, y)| *x += y);
                a
            },
        );
    let total = shots as f64;
    let probs: Vec<f64> = counts.iter().map(|&c| c as f64 / total).collect();
    let stderr = probs.iter().map(|p| (p * (1.0 - p) / total).sqrt()).collect();
    Ok(SampledClicks {
        clicks: ClickDistribution::new(probs, exact.spec, exact.displacement)?,
        stderr,
        shots,
        seed,
    })
}

/// How click data are obtained for [`witness_from_clicks`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Measurement {
    Exact,
    Shots { shots: u64, seed: u64 },
}

/// Assembles `M^(S_m, n)` from quasiprobabilities recovered out of click data
/// at every midpoint `(beta_i + beta_j)/2`.
pub fn witness_from_clicks(
    state: &QuantumState,
    points: &[Complex64],
    spec: ArraySpec,
    m: usize,
    measurement: Measurement,
) -> Result<WitnessReport> {
    if m >= spec.detectors {
        return domain(format!("m must lie in 0..{}, got {m}", spec.detectors));
    }
    let s = OrderingParameter::new(spec.orderings()[m])?;
    let set = PhasePointSet::new(points.to_vec(), s)?;
    let mut probe = 0u64;
    let matrix = build_witness_with(&set, |alpha| {
        let clicks = match measurement {
            Measurement::Exact => click_probabilities(state, alpha, spec)?,
            Measurement::Shots { shots, seed } => {
                probe += 1;
                let stream_seed = seed.wrapping_add(probe.wrapping_mul(0x9E37_79B9_7F4A_7C15));
                simulate_shots(state, alpha, spec, shots, stream_seed)?.clicks
            }
        };
        Ok(recover_quasiprobs(&clicks)[m].1)
    })?;
    let mut report = WitnessReport::from_matrix(&matrix)?;
    report.metadata.insert("detectors".into(), spec.detectors.into());
    report.metadata.insert("efficiency".into(), spec.efficiency.into());
    report.metadata.insert("ordering_index".into(), m.into());
    report.metadata.insert(
        "measurement".into(),
        serde_json::to_value(measurement).expect("measurement serializes"),
    );
    Ok(report)
}

/// Two-point matrix built the way a Wigner witness would be, but fed with the
/// parity function. Not a valid witness: it can fail PSD on classical states.
pub fn naive_wigner_like_matrix(
    state: &QuantumState,
    points: &[Complex64],
    spec: ArraySpec,
) -> Result<DMatrix<f64>> {
    let n = points.len();
    let mut out = DMatrix::zeros(n, n);
    for i in 0..n {
        for j in i..n {
            let w = wigner_like(state, (points[i] + points[j]) * 0.5, spec)?;
            let v = PI / 2.0 * w * (-(points[i] - points[j]).norm_sqr() / 2.0).exp();
            out[(i, j)] = v;
            out[(j, i)] = v;
        }
    }
    Ok(out)
}

/// Header fields and rows of a click-data CSV file.
#[derive(Debug, Clone, PartialEq)]
pub struct ClickTable {
    pub clicks: ClickDistribution,
    pub stderr: Vec<f64>,
    pub shots: Option<u64>,
    pub seed: u64,
}

pub fn write_click_csv(table: &ClickTable) -> String {
    let spec = table.clicks.spec;
    let alpha = table.clicks.displacement;
    let mut out = String::new();
    writeln!(out, "# detectors={}", spec.detectors).unwrap();
    writeln!(out, "# efficiency={:.11e}", spec.efficiency).unwrap();
    writeln!(out, "# alpha_re={:.11e}", alpha.re).unwrap();
    writeln!(out, "# alpha_im={:.11e}", alpha.im).unwrap();
    match table.shots {
        Some(s) => writeln!(out, "# shots={s}").unwrap(),
        None => writeln!(out, "# shots=exact").unwrap(),
    }
    writeln!(out, "# seed={}", table.seed).unwrap();
    writeln!(out, "k,p_k,stderr_k").unwrap();
    for (k, (p, e)) in table.clicks.probs.iter().zip(&table.stderr).enumerate() {
        writeln!(out, "{k},{p:.11e},{e:.11e}").unwrap();
    }
    out
}

pub fn read_click_csv(text: &str) -> Result<ClickTable> {
    let bad = |msg: String| Error::Contract(format!("click CSV: {msg}"));
    let mut detectors = None;
    let mut efficiency = None;
    let mut alpha_re = None;
    let mut alpha_im = None;
    let mut shots = None;
    let mut seed = 0u64;
    let mut rows: Vec<(usize, f64, f64)> = Vec::new();
    let mut saw_columns = false;
    let num = |key: &str, v: &str| -> Result<f64> {
        v.trim().parse::<f64>().map_err(|_| bad(format!("{key} is not a number: {v}")))
    };
    for (lineno, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        if let Some(rest) = line.strip_prefix('#') {
            let Some((key, value)) = rest.trim().split_once('=') else {
                continue;
            };
            let value = value.trim();
            match key.trim() {
                "detectors" => {
                    detectors = Some(value.parse::<usize>().map_err(|_| bad(format!("detectors: {value}")))?)
                }
                "efficiency" => efficiency = Some(num("efficiency", value)?),
                "alpha_re" => alpha_re = Some(num("alpha_re", value)?),
                "alpha_im" => alpha_im = Some(num("alpha_im", value)?),
                "shots" => {
                    shots = if value == "exact" {
                        None
                    } else {
                        Some(value.parse::<u64>().map_err(|_| bad(format!("shots: {value}")))?)
                    }
                }
                "seed" => seed = value.parse::<u64>().map_err(|_| bad(format!("seed: {value}")))?,
                _ => {}
            }
            continue;
        }
        if !saw_columns {
            if line.replace(' ', "") != "k,p_k,stderr_k" {
                return Err(bad(format!("expected column header, got `{line}`")));
            }
            saw_columns = true;
            continue;
        }
        let cols: Vec<&str> = line.split(',').collect();
        if cols.len() != 3 {
            return Err(bad(format!("line {} has {} columns", lineno + 1, cols.len())));
        }
        let k = cols[0].trim().parse::<usize>().map_err(|_| bad(format!("k: {}", cols[0])))?;
        rows.push((k, num("p_k", cols[1])?, num("stderr_k", cols[2])?));
    }
    let detectors = detectors.ok_or_else(|| bad("missing detectors".into()))?;
    let efficiency = efficiency.ok_or_else(|| bad("missing efficiency".into()))?;
    let spec = ArraySpec::new(detectors, efficiency)?;
    if rows.len() != detectors + 1 || rows.iter().enumerate().any(|(i, r)| r.0 != i) {
        return Err(bad(format!("expected rows k = 0..={detectors} in order")));
    }
    let alpha = Complex64::new(alpha_re.unwrap_or(0.0), alpha_im.unwrap_or(0.0));
    let clicks = ClickDistribution::new(rows.iter().map(|r| r.1).collect(), spec, alpha)?;
    Ok(ClickTable {
        clicks,
        stderr: rows.iter().map(|r| r.2).collect(),
        shots,
        seed,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::analytic::gaussian_lambda_min;
    use crate::quasiprob::quasiprob;
    use crate::states::apply_loss;
    use crate::witness::{fds_detection_radius, Verdict};
    use approx::assert_abs_diff_eq;
    use proptest::prelude::{any, prop_assert, proptest};

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    /// Photons hit detectors one by one; a photon survives with probability
    /// eta and lands on an unlit detector with probability (N - lit)/N.
    fn occupancy_oracle(photon_dist: &[f64], spec: ArraySpec) -> Vec<f64> {
        let n = spec.detectors();
        let eta = spec.efficiency();
        let mut out = vec![0.0; n + 1];
        let mut lit = vec![0.0; n + 1];
        lit[0] = 1.0;
        for &pn in photon_dist {
            for (k, l) in lit.iter().enumerate() {
                out[k] += pn * l;
            }
            let mut next = vec![0.0; n + 1];
            for k in 0..=n {
                let new = eta * (n - k) as f64 / n as f64;
                next[k] += lit[k] * (1.0 - new);
                if k < n {
                    next[k + 1] += lit[k] * new;
                }
            }
            lit = next;
        }
        out
    }

    #[test]
    fn vacuum_never_clicks() {
        let spec = ArraySpec::new(4, 0.7).unwrap();
        let p = click_probabilities(&QuantumState::vacuum(), c(0.0, 0.0), spec).unwrap();
        assert_abs_diff_eq!(p.probs()[0], 1.0, epsilon = 1e-15);
        assert!(p.probs()[1..].iter().all(|x| x.abs() < 1e-15));
    }

    #[test]
    fn coherent_closed_form() {
        let gamma = c(0.7, -0.4);
        let coh: QuantumState = GaussianState::coherent(gamma).unwrap().into();
        let fock: QuantumState = FockDensityMatrix::coherent(gamma, 40).unwrap().into();
        for (n, eta) in [(1, 1.0), (3, 0.8), (5, 0.5)] {
            let spec = ArraySpec::new(n, eta).unwrap();
            for alpha in [c(0.0, 0.0), c(-0.5, 0.9), c(1.2, 0.3)] {
                let e = (-eta * (gamma - alpha).norm_sqr() / n as f64).exp();
                let pg = click_probabilities(&coh, alpha, spec).unwrap();
                let pf = click_probabilities(&fock, alpha, spec).unwrap();
                for k in 0..=n {
                    let expect = binomial(n, k) * e.powi((n - k) as i32) * (1.0 - e).powi(k as i32);
                    assert_abs_diff_eq!(pg.probs()[k], expect, epsilon = 1e-13);
                    assert_abs_diff_eq!(pf.probs()[k], expect, epsilon = 1e-12);
                }
            }
        }
    }

    #[test]
    fn single_photon_matches_occupancy_oracle() {
        let one: QuantumState = FockDensityMatrix::number(1, 2).unwrap().into();
        let spec = ArraySpec::new(2, 1.0).unwrap();
        let p = click_probabilities(&one, c(0.0, 0.0), spec).unwrap();
        // one photon always lights exactly one detector
        assert_abs_diff_eq!(p.probs()[0], 0.0, epsilon = 1e-15);
        assert_abs_diff_eq!(p.probs()[1], 1.0, epsilon = 1e-15);
        assert_abs_diff_eq!(p.probs()[2], 0.0, epsilon = 1e-15);
    }

    #[test]
    fn fock_states_match_occupancy_oracle() {
        for n_photons in 0..6 {
            let rho = FockDensityMatrix::number(n_photons, n_photons + 1).unwrap();
            let mut dist = vec![0.0; n_photons + 1];
            dist[n_photons] = 1.0;
            for (n, eta) in [(1, 0.9), (3, 1.0), (4, 0.6), (6, 0.8)] {
                let spec = ArraySpec::new(n, eta).unwrap();
                let p = click_probabilities(&rho.clone().into(), c(0.0, 0.0), spec).unwrap();
                let oracle = occupancy_oracle(&dist, spec);
                for k in 0..=n {
                    assert_abs_diff_eq!(p.probs()[k], oracle[k], epsilon = 1e-12);
                }
            }
        }
    }

    #[test]
    fn thermal_fock_matches_gaussian_route() {
        // the P-function of a thermal state gives G(x) = 1 / (1 + nbar x)
        let nbar = 0.6;
        let mu = 1.0 / (2.0 * nbar + 1.0);
        let g: QuantumState = GaussianState::thermal(mu).unwrap().into();
        let f: QuantumState = FockDensityMatrix::thermal(nbar, 120).unwrap().into();
        for n in 1..=6 {
            let spec = ArraySpec::new(n, 0.75).unwrap();
            for alpha in [c(0.0, 0.0), c(0.4, -0.3)] {
                let pg = click_probabilities(&g, alpha, spec).unwrap();
                let pf = click_probabilities(&f, alpha, spec).unwrap();
                for k in 0..=n {
                    assert_abs_diff_eq!(pg.probs()[k], pf.probs()[k], epsilon = 1e-9);
                }
            }
        }
        let xs = [0.3];
        let gg = generating_function(&g, c(0.0, 0.0), &xs).unwrap()[0];
        assert_abs_diff_eq!(gg, 1.0 / (1.0 + nbar * 0.3), epsilon = 1e-14);
    }

    #[test]
    fn truncation_is_reported() {
        let one: QuantumState = FockDensityMatrix::number(1, 2).unwrap().into();
        let spec = ArraySpec::new(3, 1.0).unwrap();
        assert!(click_probabilities(&one, c(3.0, 0.0), spec).is_ok());
        // the coherent overlap underflows, so the displaced distribution is lost
        let err = click_probabilities(&one, c(40.0, 0.0), spec).unwrap_err();
        assert!(matches!(err, Error::Truncation(_)));
    }

    #[test]
    fn parity_paths_agree() {
        let rho = apply_loss(&FockDensityMatrix::number(3, 4).unwrap(), 0.7).unwrap();
        let state: QuantumState = rho.into();
        for (n, eta) in [(1, 1.0), (4, 0.8), (7, 0.5)] {
            let spec = ArraySpec::new(n, eta).unwrap();
            for alpha in [c(0.0, 0.0), c(0.6, 0.2)] {
                let a = wigner_like(&state, alpha, spec).unwrap();
                let b = wigner_like_direct(&state, alpha, spec).unwrap();
                assert_abs_diff_eq!(a, b, epsilon = 1e-12);
            }
        }
    }

    #[test]
    fn coherent_parity_closed_form() {
        let gamma = c(0.3, 0.1);
        let coh: QuantumState = GaussianState::coherent(gamma).unwrap().into();
        let spec = ArraySpec::new(5, 0.9).unwrap();
        assert_abs_diff_eq!(wigner_like(&coh, gamma, spec).unwrap(), 2.0 / PI, epsilon = 1e-14);
        let radius = (2f64.ln() * 5.0 / 0.9).sqrt();
        let root = wigner_like(&coh, gamma + radius, spec).unwrap();
        assert_abs_diff_eq!(root, 0.0, epsilon = 1e-14);
    }

    #[test]
    fn one_detector_map() {
        let map = build_triangular_map(ArraySpec::new(1, 1.0).unwrap());
        let t = map.entries();
        assert_abs_diff_eq!(t[(0, 0)], PI, epsilon = 1e-15);
        assert_eq!(t[(0, 1)], 0.0);
        assert_abs_diff_eq!(t[(1, 0)], -PI, epsilon = 1e-15);
        assert_eq!(t[(1, 1)], 1.0);
        assert_eq!(map.orderings(), &[-1.0]);
        // p_0 = pi Q(alpha) for an arbitrary state
        let state: QuantumState = GaussianState::new(0.8, 0.4, 0.3, c(0.2, 0.1)).unwrap().into();
        let alpha = c(-0.3, 0.5);
        let p = click_probabilities(&state, alpha, ArraySpec::new(1, 1.0).unwrap()).unwrap();
        let q = quasiprob(&state, alpha, OrderingParameter::HUSIMI).unwrap();
        assert_abs_diff_eq!(p.probs()[0], PI * q, epsilon = 1e-14);
    }

    #[test]
    fn two_detector_map_matches_expansion() {
        // p_0 = tr :e^{-n}:, p_1 = 2 tr :e^{-n/2}(1 - e^{-n/2}):, p_2 = tr :(1 - e^{-n/2})^2:
        // with tr :e^{-x n}: = pi (1 - s) W(s) / 2 at s = 1 - 2/x
        let map = build_triangular_map(ArraySpec::new(2, 1.0).unwrap());
        assert_eq!(map.orderings(), &[-1.0, -3.0]);
        let t = map.entries();
        let w0 = PI; // coefficient of W(-1): pi (1 - (-1)) / 2
        let w1 = 2.0 * PI; // coefficient of W(-3): pi (1 - (-3)) / 2
        let expect = [[w0, 0.0, 0.0], [-2.0 * w0, 2.0 * w1, 0.0], [w0, -2.0 * w1, 1.0]];
        for k in 0..3 {
            for m in 0..3 {
                assert_abs_diff_eq!(t[(k, m)], expect[k][m], epsilon = 1e-13);
            }
        }
    }

    #[test]
    fn vacuum_recovers_husimi() {
        let spec = ArraySpec::new(1, 1.0).unwrap();
        let clicks = ClickDistribution::new(vec![1.0, 0.0], spec, c(0.0, 0.0)).unwrap();
        let w = recover_quasiprobs(&clicks);
        assert_abs_diff_eq!(w[0].1, 1.0 / PI, epsilon = 1e-15);
    }

    #[test]
    fn recovery_matches_direct_quasiprob() {
        let state: QuantumState = apply_loss(&FockDensityMatrix::number(2, 3).unwrap(), 0.8).unwrap().into();
        let spec = ArraySpec::new(5, 0.8).unwrap();
        let alpha = c(0.4, -0.6);
        let clicks = click_probabilities(&state, alpha, spec).unwrap();
        for (s, w) in recover_quasiprobs(&clicks) {
            let direct = quasiprob(&state, alpha, OrderingParameter::new(s).unwrap()).unwrap();
            assert_abs_diff_eq!(w, direct, epsilon = 1e-10);
        }
    }

    #[test]
    fn gaussian_pipeline_matches_closed_form() {
        let g = GaussianState::new(0.9, 0.5, 0.0, c(0.0, 0.0)).unwrap();
        let state: QuantumState = g.clone().into();
        let spec = ArraySpec::new(4, 0.7).unwrap();
        let best = (0..4)
            .map(|m| {
                let s = OrderingParameter::new(spec.orderings()[m]).unwrap();
                let opt = gaussian_lambda_min(&g, s).unwrap();
                let rep = witness_from_clicks(&state, &opt.optimal_points, spec, m, Measurement::Exact).unwrap();
                assert_abs_diff_eq!(rep.min_eigenvalue, opt.lambda_min, epsilon = 1e-6);
                rep.min_eigenvalue
            })
            .fold(f64::INFINITY, f64::min);
        assert!(best < 0.0);
    }

    #[test]
    fn coherent_pipeline_is_psd() {
        let state: QuantumState = GaussianState::coherent(c(1.0, 0.0)).unwrap().into();
        let spec = ArraySpec::new(3, 0.8).unwrap();
        for m in 0..3 {
            let rep = witness_from_clicks(&state, &[c(0.0, 0.0), c(2.0, 0.0), c(0.5, 1.0)], spec, m, Measurement::Exact)
                .unwrap();
            assert!(rep.min_eigenvalue >= -1e-9);
            assert_eq!(rep.verdict, Verdict::ClassicalConsistent);
        }
    }

    #[test]
    fn lossy_photon_detected_through_array() {
        let rho = apply_loss(&FockDensityMatrix::number(1, 2).unwrap(), 0.6).unwrap();
        let spec = ArraySpec::new(6, 0.9).unwrap();
        let state: QuantumState = rho.clone().into();
        let found = (0..6).any(|m| {
            let s = OrderingParameter::new(spec.orderings()[m]).unwrap();
            let Ok(d) = fds_detection_radius(&rho, 0.0, s) else { return false };
            let r = d.radius * 1.05;
            let rep = witness_from_clicks(&state, &[c(2.0 * r, 0.0), c(0.0, 0.0)], spec, m, Measurement::Exact).unwrap();
            rep.min_eigenvalue < 0.0
        });
        assert!(found);
    }

    #[test]
    fn naive_matrix_false_positive() {
        let state: QuantumState = GaussianState::coherent(c(1.0, 0.0)).unwrap().into();
        let spec = ArraySpec::new(2, 1.0).unwrap();
        let m = naive_wigner_like_matrix(&state, &[c(0.0, 0.0), c(2.0, 0.0)], spec).unwrap();
        let det = m[(0, 0)] * m[(1, 1)] - m[(0, 1)] * m[(1, 0)];
        let expect = ((2.0 * (-0.5f64).exp() - 1.0).powi(4) - (-4.0f64).exp()) as f64;
        assert_abs_diff_eq!(det, expect, epsilon = 1e-14);
        assert!(det < 0.0);
    }

    #[test]
    fn sampling_edge_cases() {
        let spec = ArraySpec::new(3, 0.9).unwrap();
        let vac = simulate_shots(&QuantumState::vacuum(), c(0.0, 0.0), spec, 1000, 7).unwrap();
        assert_eq!(vac.clicks.probs()[0], 1.0);
        let coh: QuantumState = GaussianState::coherent(c(1.0, 0.0)).unwrap().into();
        let one = simulate_shots(&coh, c(0.0, 0.0), spec, 1, 3).unwrap();
        assert_eq!(one.clicks.probs().iter().filter(|&&p| p == 1.0).count(), 1);
        assert!(simulate_shots(&coh, c(0.0, 0.0), spec, 0, 3).is_err());
    }

    #[test]
    fn sampling_is_reproducible_and_accurate() {
        let coh: QuantumState = GaussianState::coherent(c(1.0, 0.0)).unwrap().into();
        let spec = ArraySpec::new(4, 0.8).unwrap();
        let exact = click_probabilities(&coh, c(0.0, 0.0), spec).unwrap();
        let a = simulate_shots(&coh, c(0.0, 0.0), spec, 1_000_000, 11).unwrap();
        let b = simulate_shots(&coh, c(0.0, 0.0), spec, 1_000_000, 11).unwrap();
        assert_eq!(a, b);
        for k in 0..=4 {
            let se = (exact.probs()[k] * (1.0 - exact.probs()[k]) / 1e6).sqrt();
            assert!((a.clicks.probs()[k] - exact.probs()[k]).abs() <= 5.0 * se.max(1e-12));
        }
    }

    #[test]
    fn csv_round_trip() {
        let coh: QuantumState = GaussianState::coherent(c(0.8, 0.1)).unwrap().into();
        let spec = ArraySpec::new(3, 0.75).unwrap();
        let sampled = simulate_shots(&coh, c(0.1, -0.2), spec, 5000, 4).unwrap();
        let table = ClickTable {
            clicks: sampled.clicks.clone(),
            stderr: sampled.stderr.clone(),
            shots: Some(5000),
            seed: 4,
        };
        let text = write_click_csv(&table);
        assert!(text.starts_with("# detectors=3\n"));
        let back = read_click_csv(&text).unwrap();
        assert_eq!(back.shots, Some(5000));
        assert_eq!(back.seed, 4);
        assert_eq!(write_click_csv(&back), text);
        assert!(read_click_csv("k,p_k,stderr_k\n0,1,0\n").is_err());
    }

    proptest! {
        #[test]
        fn orderings_decrease_from_below_minus_one(n in 1usize..12, eta in 0.05f64..=1.0) {
            let s = ArraySpec::new(n, eta).unwrap().orderings();
            prop_assert!(s.windows(2).all(|w| w[0] > w[1]));
            prop_assert!(s[0] <= -1.0);
        }

        #[test]
        fn triangular_inversion_is_exact(n in 1usize..10, eta in 0.1f64..=1.0, seed in any::<u64>()) {
            let spec = ArraySpec::new(n, eta).unwrap();
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let w: Vec<f64> = (0..n).map(|_| Rng::random::<f64>(&mut rng) * 0.2 - 0.1).collect();
            let map = build_triangular_map(spec);
            let t = map.entries();
            let mut aug = w.clone();
            aug.push(1.0);
            let p: Vec<f64> = (0..n).map(|k| (0..=k).map(|m| t[(k, m)] * aug[m]).sum()).collect();
            let mut probs = p.clone();
            probs.push(1.0 - p.iter().sum::<f64>());
            let clicks = ClickDistribution { probs, spec, displacement: Complex64::new(0.0, 0.0) };
            let back = recover_quasiprobs(&clicks);
            for (k, (_, v)) in back.iter().enumerate() {
                prop_assert!((v - w[k]).abs() <= 1e-9 * (1.0 + w[k].abs()));
            }
            for k in 0..=n {
                prop_assert!(t[(k, k)] != 0.0);
            }
        }

        #[test]
        fn clicks_are_normalized(purity in 0.2f64..=1.0, r in 0.0f64..1.0, re in -2.0f64..2.0, im in -2.0f64..2.0, n in 1usize..8, eta in 0.1f64..=1.0) {
            let g: QuantumState = GaussianState::new(purity, r, 0.4, Complex64::new(0.3, 0.0)).unwrap().into();
            let p = click_probabilities(&g, Complex64::new(re, im), ArraySpec::new(n, eta).unwrap()).unwrap();
            prop_assert!((compensated_sum(p.probs().iter().cloned()) - 1.0).abs() < 1e-10);
        }
    }
}
