//! Witness matrices `M^(s,n)`, their minimum eigenvalues, and the search over
//! phase-space point configurations.

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;
use std::f64::consts::PI;

use crate::analytic::distance_lower_bound;
use crate::error::{domain, Error, Result};
use crate::optimize::{cmp_coords, nelder_mead, NelderMeadOptions};
use crate::quasiprob::{quasiprob, quasiprob_scaled, OrderingParameter, ScaledValue};
use crate::states::{FockDensityMatrix, QuantumState};

/// Relative Hermiticity tolerance for witness matrices.
pub const HERMITIAN_TOL: f64 = 1e-12;
/// Relative tolerance for the nonclassical verdict: `lambda < -tol * max(1, ||M||)`.
pub const NEGATIVITY_TOL: f64 = 1e-9;
const RESIDUAL_TOL: f64 = 1e-10;
const DET_REL_TOL: f64 = 1e-10;

/// Ordered phase-space points `beta_1..beta_n` with the ordering parameter.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PhasePointSet {
    points: Vec<Complex64>,
    s: OrderingParameter,
}

impl PhasePointSet {
    pub fn new(points: Vec<Complex64>, s: OrderingParameter) -> Result<Self> {
        if points.is_empty() {
            return domain("a phase-point set needs at least one point");
        }
        if points.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
            return domain("phase points must be finite");
        }
        Ok(Self { points, s })
    }

    pub fn wigner(points: Vec<Complex64>) -> Result<Self> {
        Self::new(points, OrderingParameter::WIGNER)
    }

    pub fn points(&self) -> &[Complex64] {
        &self.points
    }

    pub fn s(&self) -> OrderingParameter {
        self.s
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    /// Same points with the order sorted lexicographically by `(re, im)`.
    pub fn canonical(&self) -> Self {
        let mut points = self.points.clone();
        points.sort_by(|a, b| cmp_coords(&[a.re, a.im], &[b.re, b.im]));
        Self { points, s: self.s }
    }
}

/// Hermitian witness matrix together with the points that generated it.
#[derive(Debug, Clone, PartialEq)]
pub struct WitnessMatrix {
    entries: DMatrix<Complex64>,
    generator: PhasePointSet,
}

impl WitnessMatrix {
    pub fn entries(&self) -> &DMatrix<Complex64> {
        &self.entries
    }

    pub fn generator(&self) -> &PhasePointSet {
        &self.generator
    }

    pub fn dim(&self) -> usize {
        self.entries.nrows()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Verdict {
    ClassicalConsistent,
    Nonclassical,
}

/// Outcome of a witness evaluation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WitnessReport {
    pub min_eigenvalue: f64,
    pub eigenvector: Vec<Complex64>,
    pub points: PhasePointSet,
    pub verdict: Verdict,
    pub distance_bound: f64,
    pub metadata: BTreeMap<String, serde_json::Value>,
}

impl WitnessReport {
    /// Evaluates the spectrum of `matrix` and applies the verdict rule.
    pub fn from_matrix(matrix: &WitnessMatrix) -> Result<Self> {
        let (lambda, v) = min_eigenvalue(matrix)?;
        let scale = frobenius(matrix.entries()).max(1.0);
        let threshold = NEGATIVITY_TOL * scale;
        let verdict = if lambda < -threshold {
            Verdict::Nonclassical
        } else {
            Verdict::ClassicalConsistent
        };
        let mut metadata = BTreeMap::new();
        metadata.insert("negativity_threshold".into(), threshold.into());
        metadata.insert("n".into(), matrix.dim().into());
        metadata.insert("s".into(), matrix.generator().s().value().into());
        Ok(Self {
            min_eigenvalue: lambda,
            eigenvector: v.iter().cloned().collect(),
            points: matrix.generator().clone(),
            verdict,
            distance_bound: distance_lower_bound(lambda, matrix.dim()),
            metadata,
        })
    }

    pub fn is_nonclassical(&self) -> bool {
        self.verdict == Verdict::Nonclassical
    }
}

fn frobenius(m: &DMatrix<Complex64>) -> f64 {
    m.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

/// Kernel weight `exp(-|beta_i - beta_j|^2 / (2 (1 - s)))`.
fn pair_weight(bi: Complex64, bj: Complex64, s: f64) -> f64 {
    (-(bi - bj).norm_sqr() / (2.0 * (1.0 - s))).exp()
}

/// Builds `M^(s,n)` from an arbitrary quasiprobability evaluator.
pub fn build_witness_with(
    points: &PhasePointSet,
    mut eval: impl FnMut(Complex64) -> Result<f64>,
) -> Result<WitnessMatrix> {
    let n = points.len();
    let s = points.s().value();
    let pref = PI * (1.0 - s) / 2.0;
    let pts = points.points();
    let mut entries = DMatrix::from_element(n, n, Complex64::new(0.0, 0.0));
    for i in 0..n {
        for j in i..n {
            let w = eval((pts[i] + pts[j]) * 0.5)?;
            let v = pref * w * pair_weight(pts[i], pts[j], s);
            entries[(i, j)] = Complex64::new(v, 0.0);
            entries[(j, i)] = Complex64::new(v, 0.0);
        }
    }
    Ok(WitnessMatrix {
        entries,
        generator: points.clone(),
    })
}

pub fn build_witness(state: &QuantumState, points: &PhasePointSet) -> Result<WitnessMatrix> {
    let s = points.s();
    build_witness_with(points, |z| quasiprob(state, z, s))
}

/// Smallest eigenvalue and a unit eigenvector of the witness matrix.
pub fn min_eigenvalue(matrix: &WitnessMatrix) -> Result<(f64, DVector<Complex64>)> {
    hermitian_min_eigen(matrix.entries())
}

/// Smallest eigenpair of a Hermitian matrix: closed form up to 2x2, a dense
/// Hermitian eigensolver beyond.
pub fn hermitian_min_eigen(m: &DMatrix<Complex64>) -> Result<(f64, DVector<Complex64>)> {
    let n = m.nrows();
    if n == 0 || m.ncols() != n {
        return Err(Error::Contract(format!(
            "expected a non-empty square matrix, got {}x{}",
            m.nrows(),
            m.ncols()
        )));
    }
    let norm = frobenius(m);
    let tol = HERMITIAN_TOL * norm.max(1.0);
    for i in 0..n {
        for j in i..n {
            if (m[(i, j)] - m[(j, i)].conj()).norm() > tol {
                return Err(Error::Contract(format!("matrix not Hermitian at ({i}, {j})")));
            }
        }
    }
    match n {
        1 => Ok((m[(0, 0)].re, DVector::from_element(1, Complex64::new(1.0, 0.0)))),
        2 => {
            let (lambda, v) = min_eigen_2x2(m[(0, 0)].re, m[(1, 1)].re, m[(0, 1)]);
            Ok((lambda, DVector::from_row_slice(&v)))
        }
        _ => {
            let eig = SymmetricEigen::new(m.clone());
            let (idx, lambda) = eig
                .eigenvalues
                .iter()
                .cloned()
                .enumerate()
                .min_by(|a, b| a.1.total_cmp(&b.1))
                .expect("non-empty spectrum");
            let v = eig.eigenvectors.column(idx).into_owned();
            let v = &v / Complex64::new(v.norm(), 0.0);
            let residual = (m * &v - &v * Complex64::new(lambda, 0.0)).norm();
            if residual > RESIDUAL_TOL * norm.max(f64::MIN_POSITIVE) {
                return Err(Error::Contract(format!(
                    "eigensolver residual {residual} exceeds tolerance"
                )));
            }
            Ok((lambda, v))
        }
    }
}

/// `lambda = (a + d)/2 - sqrt(((a - d)/2)^2 + |b|^2)` for `[[a, b], [b*, d]]`.
pub fn min_eigen_2x2(a: f64, d: f64, b: Complex64) -> (f64, [Complex64; 2]) {
    let half_gap = 0.5 * (a - d);
    let lambda = 0.5 * (a + d) - half_gap.hypot(b.norm());
    let zero = Complex64::new(0.0, 0.0);
    let one = Complex64::new(1.0, 0.0);
    if b.norm() == 0.0 {
        return if a <= d { (a, [one, zero]) } else { (d, [zero, one]) };
    }
    // two equivalent null vectors of (M - lambda); keep the better conditioned one
    let u = [b, Complex64::new(lambda - a, 0.0)];
    let w = [Complex64::new(lambda - d, 0.0), b.conj()];
    let nu = (u[0].norm_sqr() + u[1].norm_sqr()).sqrt();
    let nw = (w[0].norm_sqr() + w[1].norm_sqr()).sqrt();
    let v = if nu >= nw {
        [u[0] / nu, u[1] / nu]
    } else {
        [w[0] / nw, w[1] / nw]
    };
    (lambda, v)
}

/// Controls for [`optimize_points`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SearchConfig {
    /// Half-width of the coarse seeding grid around the state's centroid.
    pub grid_radius: f64,
    /// Grid points per axis.
    pub grid_points: usize,
    /// Number of simplex refinements.
    pub starts: usize,
    /// Simplex diameter at which a refinement stops.
    pub simplex_tol: f64,
    /// Evaluation budget per refinement.
    pub max_evals: usize,
    /// Line orientations in `[0, pi)` scanned by the collinear stage (n = 2).
    pub orientations: usize,
    /// Radius cap and step for the determinant sign scans.
    pub scan_cap: f64,
    pub scan_step: f64,
    pub seed: u64,
}

impl Default for SearchConfig {
    fn default() -> Self {
        Self {
            grid_radius: 4.0,
            grid_points: 9,
            starts: 16,
            simplex_tol: 1e-8,
            max_evals: 20_000,
            orientations: 12,
            scan_cap: 20.0,
            scan_step: 1e-2,
            seed: 0,
        }
    }
}

impl SearchConfig {
    fn validate(&self) -> Result<()> {
        let finite = self.grid_radius.is_finite() && self.scan_cap.is_finite() && self.scan_step.is_finite();
        if !finite || self.grid_radius <= 0.0 || self.scan_cap <= 0.0 || self.scan_step <= 0.0 {
            return domain("search bounds must be finite and positive");
        }
        if self.grid_points < 2 || self.starts == 0 || self.orientations == 0 {
            return domain("grid_points >= 2, starts >= 1 and orientations >= 1 are required");
        }
        Ok(())
    }
}

/// Minimum eigenvalue as a function of flattened coordinates. Evaluation
/// failures map to `+inf` so the simplex steers away from them.
struct Objective<'a> {
    state: &'a QuantumState,
    s: OrderingParameter,
}

impl Objective<'_> {
    fn lambda(&self, coords: &[f64]) -> f64 {
        let n = coords.len() / 2;
        let pts: Vec<Complex64> = (0..n).map(|i| Complex64::new(coords[2 * i], coords[2 * i + 1])).collect();
        self.lambda_points(&pts)
    }

    fn lambda_points(&self, pts: &[Complex64]) -> f64 {
        let s = self.s.value();
        let pref = PI * (1.0 - s) / 2.0;
        let entry = |i: usize, j: usize| -> Option<f64> {
            let w = quasiprob(self.state, (pts[i] + pts[j]) * 0.5, self.s).ok()?;
            Some(pref * w * pair_weight(pts[i], pts[j], s))
        };
        let n = pts.len();
        let value = match n {
            1 => entry(0, 0),
            2 => (|| {
                let (a, d, b) = (entry(0, 0)?, entry(1, 1)?, entry(0, 1)?);
                Some(min_eigen_2x2(a, d, Complex64::new(b, 0.0)).0)
            })(),
            _ => (|| {
                let mut m = DMatrix::from_element(n, n, Complex64::new(0.0, 0.0));
                for i in 0..n {
                    for j in i..n {
                        let v = Complex64::new(entry(i, j)?, 0.0);
                        m[(i, j)] = v;
                        m[(j, i)] = v;
                    }
                }
                SymmetricEigen::new(m).eigenvalues.iter().cloned().reduce(f64::min)
            })(),
        };
        value.unwrap_or(f64::INFINITY)
    }
}

#[derive(Debug, Clone)]
struct Candidate {
    value: f64,
    coords: Vec<f64>,
}

fn better(a: &Candidate, b: &Candidate) -> std::cmp::Ordering {
    a.value
        .total_cmp(&b.value)
        .then_with(|| cmp_coords(&a.coords, &b.coords))
}

fn canonical_coords(coords: &[f64]) -> Vec<f64> {
    let mut pts: Vec<[f64; 2]> = coords.chunks(2).map(|c| [c[0], c[1]]).collect();
    pts.sort_by(|a, b| cmp_coords(a, b));
    pts.into_iter().flatten().collect()
}

fn flatten(pts: &[Complex64]) -> Vec<f64> {
    pts.iter().flat_map(|z| [z.re, z.im]).collect()
}

/// Searches point configurations of size `n` for the most negative minimum
/// eigenvalue of `M^(s,n)`.
///
/// Seeds come from a coarse grid around the state's centroid (all point
/// pairs for `n = 2`), from a collinear scan over line orientations whose
/// extent adapts to the determinant sign-change radius, and for `n >= 3` from
/// greedy extension plus seeded random configurations. The best `starts`
/// seeds are refined by Nelder–Mead in `2n` real coordinates.
pub fn optimize_points(
    state: &QuantumState,
    n: usize,
    s: OrderingParameter,
    config: &SearchConfig,
) -> Result<WitnessReport> {
    if n == 0 {
        return domain("n must be at least 1");
    }
    config.validate()?;
    let center = state.mean_amplitude();
    // surface representation/domain errors instead of silently returning +inf
    quasiprob(state, center, s)?;

    let objective = Objective { state, s };
    let g = config.grid_points;
    let spacing = 2.0 * config.grid_radius / (g - 1) as f64;
    let grid: Vec<Complex64> = (0..g)
        .flat_map(|i| {
            (0..g).map(move |j| {
                center
                    + Complex64::new(
                        -config.grid_radius + i as f64 * spacing,
                        -config.grid_radius + j as f64 * spacing,
                    )
            })
        })
        .collect();

    let mut seeds: Vec<Candidate> = Vec::new();
    let push = |pts: &[Complex64], seeds: &mut Vec<Candidate>| {
        let value = objective.lambda_points(pts);
        seeds.push(Candidate {
            value,
            coords: flatten(pts),
        });
    };

    let mut nm_step = 0.5 * spacing;
    match n {
        1 => {
            for z in &grid {
                push(&[*z], &mut seeds);
            }
        }
        _ => {
            let pair_seeds = pair_seeds(&objective, &grid, center, config)?;
            if n == 2 {
                seeds.extend(pair_seeds);
            } else {
                let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
                let mut top = pair_seeds;
                top.sort_by(better);
                for base in top.iter().take(config.starts) {
                    let mut pts: Vec<Complex64> =
                        base.coords.chunks(2).map(|c| Complex64::new(c[0], c[1])).collect();
                    while pts.len() < n {
                        let next = grid
                            .iter()
                            .map(|z| {
                                let mut trial = pts.clone();
                                trial.push(*z);
                                (objective.lambda_points(&trial), *z)
                            })
                            .min_by(|a, b| {
                                a.0.total_cmp(&b.0)
                                    .then_with(|| cmp_coords(&[a.1.re, a.1.im], &[b.1.re, b.1.im]))
                            })
                            .expect("grid is non-empty")
                            .1;
                        pts.push(next);
                    }
                    push(&pts, &mut seeds);
                }
                for _ in 0..config.starts {
                    let pts: Vec<Complex64> = (0..n)
                        .map(|_| {
                            let r = config.grid_radius * rng.random::<f64>().sqrt();
                            let th = 2.0 * PI * rng.random::<f64>();
                            center + Complex64::from_polar(r, th)
                        })
                        .collect();
                    push(&pts, &mut seeds);
                }
            }
            nm_step = nm_step.min(0.5);
        }
    }

    // keep the best distinct seeds
    seeds.retain(|c| c.value.is_finite());
    seeds.iter_mut().for_each(|c| c.coords = canonical_coords(&c.coords));
    seeds.sort_by(better);
    let mut chosen: Vec<Candidate> = Vec::new();
    for c in seeds {
        let distinct = chosen.iter().all(|o| {
            o.coords
                .iter()
                .zip(&c.coords)
                .map(|(a, b)| (a - b).abs())
                .fold(0.0, f64::max)
                > 1e-6
        });
        if distinct {
            chosen.push(c);
        }
        if chosen.len() == config.starts {
            break;
        }
    }
    if chosen.is_empty() {
        return Err(Error::Domain("quasiprobability could not be evaluated on the search grid".into()));
    }

    let opts = NelderMeadOptions {
        initial_step: nm_step,
        diameter_tol: config.simplex_tol,
        max_evals: config.max_evals,
    };
    let refined: Vec<(Candidate, usize)> = chosen
        .par_iter()
        .map(|c| {
            let m = nelder_mead(|x| objective.lambda(x), &c.coords, opts);
            let cand = if m.value <= c.value {
                Candidate {
                    value: m.value,
                    coords: canonical_coords(&m.x),
                }
            } else {
                c.clone()
            };
            (cand, m.evals)
        })
        .collect();
    let evaluations: usize = refined.iter().map(|(_, e)| e).sum();
    let best = refined
        .into_iter()
        .map(|(c, _)| c)
        .min_by(better)
        .expect("at least one start");

    let points = PhasePointSet::new(
        best.coords.chunks(2).map(|c| Complex64::new(c[0], c[1])).collect(),
        s,
    )?;
    let matrix = build_witness(state, &points)?;
    let mut report = WitnessReport::from_matrix(&matrix)?;
    report.metadata.insert("refinement_evaluations".into(), evaluations.into());
    report.metadata.insert(
        "search".into(),
        serde_json::to_value(config).expect("config serializes"),
    );
    Ok(report)
}

/// Seeds for two-point configurations: grid pairs plus the collinear stage.
fn pair_seeds(
    objective: &Objective<'_>,
    grid: &[Complex64],
    center: Complex64,
    config: &SearchConfig,
) -> Result<Vec<Candidate>> {
    let mut out = Vec::new();
    for i in 0..grid.len() {
        for j in i + 1..grid.len() {
            let pts = [grid[i], grid[j]];
            out.push(Candidate {
                value: objective.lambda_points(&pts),
                coords: flatten(&pts),
            });
        }
    }

    let line_pts = 4 * config.grid_points + 1;
    let collinear: Vec<Vec<Candidate>> = (0..config.orientations)
        .into_par_iter()
        .map(|k| {
            let phi = PI * k as f64 / config.orientations as f64;
            let dir = Complex64::from_polar(1.0, phi);
            let radius = detection_radius(
                objective.state,
                center,
                phi,
                objective.s,
                config.scan_step,
                config.scan_cap,
            )
            .ok()
            .map(|d| d.radius);
            let extent = match radius {
                Some(r) => config.grid_radius.max(3.0 * r),
                None => config.grid_radius,
            };
            let mut local = Vec::new();
            let ts: Vec<f64> = (0..line_pts)
                .map(|i| -extent + 2.0 * extent * i as f64 / (line_pts - 1) as f64)
                .collect();
            let mut best: Option<Candidate> = None;
            let consider = |t1: f64, t2: f64, best: &mut Option<Candidate>| {
                let pts = [center + dir * t1, center + dir * t2];
                let c = Candidate {
                    value: objective.lambda_points(&pts),
                    coords: vec![t1, t2],
                };
                if best.as_ref().is_none_or(|b| better(&c, b).is_lt()) {
                    *best = Some(c);
                }
            };
            for a in 0..line_pts {
                for b in a + 1..line_pts {
                    consider(ts[a], ts[b], &mut best);
                }
            }
            if let Some(r) = radius {
                for f in [1.0, 1.1, 1.25, 1.5, 2.0] {
                    consider(2.0 * r * f, 0.0, &mut best);
                    consider(-r * f, r * f, &mut best);
                }
            }
            if let Some(b) = best {
                let line = |x: &[f64]| {
                    objective.lambda_points(&[center + dir * x[0], center + dir * x[1]])
                };
                let m = nelder_mead(
                    line,
                    &b.coords,
                    NelderMeadOptions {
                        initial_step: 0.5 * extent / config.grid_points as f64,
                        diameter_tol: config.simplex_tol,
                        max_evals: config.max_evals,
                    },
                );
                let pts = [center + dir * m.x[0], center + dir * m.x[1]];
                local.push(Candidate {
                    value: m.value.min(b.value),
                    coords: if m.value <= b.value {
                        flatten(&pts)
                    } else {
                        flatten(&[center + dir * b.coords[0], center + dir * b.coords[1]])
                    },
                });
            }
            local
        })
        .collect();
    out.extend(collinear.into_iter().flatten());
    Ok(out)
}

/// Smallest radius `r` at which `det M^(s,2)` for the points
/// `{center + 2 r e^{i phase}, center}` turns negative.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DetectionRadius {
    pub radius: f64,
    /// The quasiprobability is already negative at the origin point, so the
    /// single-point test certifies by itself.
    pub origin_negative: bool,
}

/// Sign of `det M^(s,2)` for `{center + 2 r e^{i phase}, center}`, evaluated
/// with logarithms so that far-out radii do not underflow.
pub fn collinear_det_sign(
    state: &QuantumState,
    center: Complex64,
    phase: f64,
    s: OrderingParameter,
    r: f64,
) -> Result<f64> {
    let dir = Complex64::from_polar(1.0, phase);
    let w0 = quasiprob_scaled(state, center, s)?;
    let w1 = quasiprob_scaled(state, center + dir * r, s)?;
    let w2 = quasiprob_scaled(state, center + dir * (2.0 * r), s)?;
    let lhs = w2.mul(w0);
    let rhs = ScaledValue {
        mantissa: w1.mantissa * w1.mantissa,
        log_scale: 2.0 * w1.log_scale - 4.0 * r * r / (1.0 - s.value()),
    };
    // a rank-one (coherent) configuration gives det = 0 up to rounding
    let top = lhs.log_scale.max(rhs.log_scale);
    let x = lhs.mantissa * (lhs.log_scale - top).exp();
    let y = rhs.mantissa * (rhs.log_scale - top).exp();
    if (x - y).abs() <= DET_REL_TOL * x.abs().max(y.abs()) {
        Ok(0.0)
    } else {
        Ok((x - y).signum())
    }
}

/// Scans `r` upward in steps of `step` until the collinear determinant turns
/// negative, then bisects the bracketing interval.
pub fn detection_radius(
    state: &QuantumState,
    center: Complex64,
    phase: f64,
    s: OrderingParameter,
    step: f64,
    cap: f64,
) -> Result<DetectionRadius> {
    let origin_negative = quasiprob_scaled(state, center, s)?.signum() < 0.0;
    let mut prev = 0.0;
    let mut r = step;
    while r <= cap + 1e-12 {
        if collinear_det_sign(state, center, phase, s, r)? < 0.0 {
            let (mut lo, mut hi) = (prev, r);
            while hi - lo > 1e-12 * hi.max(1.0) {
                let mid = 0.5 * (lo + hi);
                if collinear_det_sign(state, center, phase, s, mid)? < 0.0 {
                    hi = mid;
                } else {
                    lo = mid;
                }
            }
            return Ok(DetectionRadius {
                radius: hi,
                origin_negative,
            });
        }
        prev = r;
        r += step;
    }
    Err(Error::NotDetected { cap })
}

/// Detection radius for a Fock-basis state with `beta_2 = 0` and
/// `beta_1 = 2 r e^{i phase}`, scanning up to `r = 20`.
pub fn fds_detection_radius(
    state: &FockDensityMatrix,
    phase: f64,
    s: OrderingParameter,
) -> Result<DetectionRadius> {
    detection_radius(
        &QuantumState::Fock(state.clone()),
        Complex64::new(0.0, 0.0),
        phase,
        s,
        1e-2,
        20.0,
    )
}
