//! Single-mode states in Gaussian and truncated Fock-basis form, plus the
//! loss channel and the squeezed two-level mixture used for the
//! non-Gaussianity study.

use nalgebra::{DMatrix, SymmetricEigen};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use std::f64::consts::TAU;

use crate::error::{domain, Error, Result};
use crate::special::binomial;

const HERMITIAN_TOL: f64 = 1e-12;
const TRACE_TOL: f64 = 1e-10;
const PSD_TOL: f64 = 1e-10;

/// Displaced squeezed thermal state.
///
/// `squeezing` narrows the quadrature along the direction `phase`; the
/// critical squeezing `-ln(purity)/2` is derived on demand.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GaussianState {
    purity: f64,
    squeezing: f64,
    phase: f64,
    displacement: Complex64,
}

impl GaussianState {
    pub fn vacuum() -> Self {
        Self::new(1.0, 0.0, 0.0, Complex64::new(0.0, 0.0)).unwrap()
    }

    pub fn coherent(amplitude: Complex64) -> Result<Self> {
        Self::new(1.0, 0.0, 0.0, amplitude)
    }

    pub fn thermal(purity: f64) -> Result<Self> {
        Self::new(purity, 0.0, 0.0, Complex64::new(0.0, 0.0))
    }

    pub fn new(purity: f64, squeezing: f64, phase: f64, displacement: Complex64) -> Result<Self> {
        if !(purity > 0.0 && purity <= 1.0) {
            return domain(format!("purity must lie in (0, 1], got {purity}"));
        }
        if !(squeezing >= 0.0) || !squeezing.is_finite() {
            return domain(format!("squeezing must be finite and >= 0, got {squeezing}"));
        }
        if !phase.is_finite() {
            return domain("phase must be finite");
        }
        if !(displacement.re.is_finite() && displacement.im.is_finite()) {
            return domain("displacement must be finite");
        }
        let state = Self {
            purity,
            squeezing,
            phase: phase.rem_euclid(TAU),
            displacement,
        };
        #[cfg(debug_assertions)]
        state.debug_check_normalization();
        Ok(state)
    }

    pub fn purity(&self) -> f64 {
        self.purity
    }

    pub fn squeezing(&self) -> f64 {
        self.squeezing
    }

    pub fn phase(&self) -> f64 {
        self.phase
    }

    pub fn displacement(&self) -> Complex64 {
        self.displacement
    }

    /// `r_c = -ln(purity) / 2`.
    pub fn critical_squeezing(&self) -> f64 {
        -0.5 * self.purity.ln()
    }

    /// Maps a phase-space point into the frame where the narrow axis is `q`.
    pub fn frame_coordinates(&self, point: Complex64) -> (f64, f64) {
        let local = (point - self.displacement) * Complex64::from_polar(1.0, -self.phase);
        (local.re, local.im)
    }

    /// Wigner-function quadrature variances `(var_q, var_p)` in the state frame.
    pub fn quadrature_variances(&self) -> (f64, f64) {
        let r = self.squeezing;
        (
            (-2.0 * r).exp() / (4.0 * self.purity),
            (2.0 * r).exp() / (4.0 * self.purity),
        )
    }

    #[cfg(debug_assertions)]
    fn debug_check_normalization(&self) {
        // trapezoid over +-9 sigma is spectrally accurate for a Gaussian
        let (vq, vp) = self.quadrature_variances();
        let (sq, sp) = (vq.sqrt(), vp.sqrt());
        let n = 48;
        let (hq, hp) = (18.0 * sq / n as f64, 18.0 * sp / n as f64);
        let rc = self.critical_squeezing();
        let (a, b) = (
            2.0 * (2.0 * (self.squeezing - rc)).exp(),
            2.0 * (-2.0 * (self.squeezing + rc)).exp(),
        );
        let mut total = 0.0;
        for i in 0..=n {
            let q = -9.0 * sq + i as f64 * hq;
            for j in 0..=n {
                let p = -9.0 * sp + j as f64 * hp;
                total += (-a * q * q - b * p * p).exp();
            }
        }
        total *= 2.0 * self.purity / std::f64::consts::PI * hq * hp;
        debug_assert!((total - 1.0).abs() < 1e-6, "Gaussian Wigner norm {total}");
    }
}

/// Truncated Fock-basis density matrix on levels `0..dim`.
#[derive(Debug, Clone, PartialEq)]
pub struct FockDensityMatrix {
    entries: DMatrix<Complex64>,
}

impl FockDensityMatrix {
    /// Validates Hermiticity, unit trace and positivity.
    pub fn new(entries: DMatrix<Complex64>) -> Result<Self> {
        if entries.nrows() != entries.ncols() || entries.nrows() == 0 {
            return Err(Error::Contract(format!(
                "density matrix must be square and non-empty, got {}x{}",
                entries.nrows(),
                entries.ncols()
            )));
        }
        if entries.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
            return Err(Error::Contract("density matrix has non-finite entries".into()));
        }
        let dim = entries.nrows();
        for i in 0..dim {
            for j in i..dim {
                if (entries[(i, j)] - entries[(j, i)].conj()).norm() > HERMITIAN_TOL {
                    return Err(Error::Contract(format!(
                        "density matrix not Hermitian at ({i}, {j})"
                    )));
                }
            }
        }
        let trace: f64 = (0..dim).map(|i| entries[(i, i)].re).sum();
        if (trace - 1.0).abs() > TRACE_TOL {
            return Err(Error::Contract(format!("trace is {trace}, expected 1")));
        }
        let min_eig = SymmetricEigen::new(entries.clone())
            .eigenvalues
            .iter()
            .cloned()
            .fold(f64::INFINITY, f64::min);
        if min_eig < -PSD_TOL {
            return Err(Error::Contract(format!(
                "density matrix not positive semidefinite (min eigenvalue {min_eig})"
            )));
        }
        Ok(Self { entries })
    }

    /// Diagonal state `sum_m weights[m] |m><m|`.
    pub fn diagonal(weights: &[f64]) -> Result<Self> {
        if weights.iter().any(|w| *w < 0.0) {
            return domain("diagonal weights must be non-negative");
        }
        let dim = weights.len();
        let entries = DMatrix::from_fn(dim, dim, |i, j| {
            if i == j {
                Complex64::new(weights[i], 0.0)
            } else {
                Complex64::new(0.0, 0.0)
            }
        });
        Self::new(entries)
    }

    /// Number state `|n><n|` embedded in `dim` levels.
    pub fn number(n: usize, dim: usize) -> Result<Self> {
        if n >= dim {
            return domain(format!("level {n} does not fit in dimension {dim}"));
        }
        let mut w = vec![0.0; dim];
        w[n] = 1.0;
        Self::diagonal(&w)
    }

    /// Pure state from (unnormalized) amplitudes.
    pub fn pure(amplitudes: &[Complex64]) -> Result<Self> {
        let norm: f64 = amplitudes.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt();
        if norm == 0.0 || !norm.is_finite() {
            return domain("amplitudes must have finite non-zero norm");
        }
        let dim = amplitudes.len();
        let entries =
            DMatrix::from_fn(dim, dim, |i, j| amplitudes[i] * amplitudes[j].conj() / (norm * norm));
        Self::new(entries)
    }

    /// Coherent state `|amplitude>` truncated to `dim` levels and renormalized.
    pub fn coherent(amplitude: Complex64, dim: usize) -> Result<Self> {
        let mut amps = Vec::with_capacity(dim);
        let mut c = Complex64::new((-0.5 * amplitude.norm_sqr()).exp(), 0.0);
        for n in 0..dim {
            if n > 0 {
                c = c * amplitude / (n as f64).sqrt();
            }
            amps.push(c);
        }
        Self::pure(&amps)
    }

    /// Thermal state with the given mean photon number, truncated and renormalized.
    pub fn thermal(mean_photons: f64, dim: usize) -> Result<Self> {
        if !(mean_photons >= 0.0) {
            return domain("mean photon number must be >= 0");
        }
        let ratio = mean_photons / (1.0 + mean_photons);
        let w: Vec<f64> = (0..dim).map(|m| ratio.powi(m as i32)).collect();
        let total: f64 = w.iter().sum();
        Self::diagonal(&w.iter().map(|x| x / total).collect::<Vec<_>>())
    }

    /// Mixture `sum_i w_i rho_i` of states with equal dimension.
    pub fn mixture(parts: &[(f64, &FockDensityMatrix)]) -> Result<Self> {
        let dim = parts
            .first()
            .map(|(_, s)| s.dim())
            .ok_or_else(|| Error::Domain("empty mixture".into()))?;
        let mut acc = DMatrix::zeros(dim, dim);
        for (w, s) in parts {
            if s.dim() != dim {
                return domain("mixture components must share a dimension");
            }
            acc += s.entries.map(|z| z * *w);
        }
        Self::new(acc)
    }

    pub fn dim(&self) -> usize {
        self.entries.nrows()
    }

    pub fn entries(&self) -> &DMatrix<Complex64> {
        &self.entries
    }

    pub fn get(&self, row: usize, col: usize) -> Complex64 {
        self.entries[(row, col)]
    }

    pub fn mean_photon_number(&self) -> f64 {
        (0..self.dim()).map(|j| j as f64 * self.entries[(j, j)].re).sum()
    }

    /// `<a> = sum_n sqrt(n) rho_{n, n-1}`.
    pub fn mean_amplitude(&self) -> Complex64 {
        (1..self.dim())
            .map(|n| self.entries[(n, n - 1)] * (n as f64).sqrt())
            .sum()
    }

    /// `<a^2> = sum_n sqrt(n (n-1)) rho_{n, n-2}`.
    pub fn mean_amplitude_squared(&self) -> Complex64 {
        (2..self.dim())
            .map(|n| self.entries[(n, n - 2)] * ((n * (n - 1)) as f64).sqrt())
            .sum()
    }
}

/// A Fock-basis state followed by a quadrature squeeze along `q`.
///
/// Its Wigner function is the base Wigner function with rescaled arguments,
/// `W(q, p) = W_base(e^r q, e^{-r} p)`.
#[derive(Debug, Clone, PartialEq)]
pub struct SqueezedFock {
    base: FockDensityMatrix,
    squeezing: f64,
}

impl SqueezedFock {
    pub fn new(base: FockDensityMatrix, squeezing: f64) -> Result<Self> {
        if !(squeezing >= 0.0) || !squeezing.is_finite() {
            return domain(format!("squeezing must be finite and >= 0, got {squeezing}"));
        }
        Ok(Self { base, squeezing })
    }

    pub fn base(&self) -> &FockDensityMatrix {
        &self.base
    }

    pub fn squeezing(&self) -> f64 {
        self.squeezing
    }

    /// Point in the unsqueezed base frame.
    pub fn base_point(&self, point: Complex64) -> Complex64 {
        let e = self.squeezing.exp();
        Complex64::new(point.re * e, point.im / e)
    }

    pub fn mean_photon_number(&self) -> f64 {
        let r = self.squeezing;
        let e = self.base.mean_photon_number();
        let a2 = self.base.mean_amplitude_squared().re;
        (2.0 * r).cosh() * (e + 0.5) - (2.0 * r).sinh() * a2 - 0.5
    }

    pub fn mean_amplitude(&self) -> Complex64 {
        let a = self.base.mean_amplitude();
        let e = self.squeezing.exp();
        Complex64::new(a.re / e, a.im * e)
    }
}

/// Any state the witnesses can be evaluated on.
#[derive(Debug, Clone, PartialEq)]
pub enum QuantumState {
    Gaussian(GaussianState),
    Fock(FockDensityMatrix),
    SqueezedFock(SqueezedFock),
}

impl QuantumState {
    pub fn vacuum() -> Self {
        QuantumState::Gaussian(GaussianState::vacuum())
    }

    /// Phase-space centroid `<a>`.
    pub fn mean_amplitude(&self) -> Complex64 {
        match self {
            QuantumState::Gaussian(g) => g.displacement(),
            QuantumState::Fock(f) => f.mean_amplitude(),
            QuantumState::SqueezedFock(sf) => sf.mean_amplitude(),
        }
    }
}

impl From<GaussianState> for QuantumState {
    fn from(g: GaussianState) -> Self {
        QuantumState::Gaussian(g)
    }
}

impl From<FockDensityMatrix> for QuantumState {
    fn from(f: FockDensityMatrix) -> Self {
        QuantumState::Fock(f)
    }
}

impl From<SqueezedFock> for QuantumState {
    fn from(s: SqueezedFock) -> Self {
        QuantumState::SqueezedFock(s)
    }
}

pub fn make_squeezed_thermal(
    purity: f64,
    squeezing: f64,
    phase: f64,
    displacement: Complex64,
) -> Result<GaussianState> {
    GaussianState::new(purity, squeezing, phase, displacement)
}

/// Pure-loss channel with transmittance `eta`.
///
/// Kraus operators `A_k |m> = sqrt(C(m,k) eta^{m-k} (1-eta)^k) |m-k>`.
pub fn apply_loss(state: &FockDensityMatrix, transmittance: f64) -> Result<FockDensityMatrix> {
    if !(0.0..=1.0).contains(&transmittance) {
        return domain(format!("transmittance must lie in [0, 1], got {transmittance}"));
    }
    let dim = state.dim();
    let amp = |m: usize, k: usize| -> f64 {
        (binomial(m, k)
            * transmittance.powi((m - k) as i32)
            * (1.0 - transmittance).powi(k as i32))
        .sqrt()
    };
    let rho = state.entries();
    let out = DMatrix::from_fn(dim, dim, |a, b| {
        let mut acc = Complex64::new(0.0, 0.0);
        for k in 0..dim - a.max(b) {
            acc += rho[(a + k, b + k)] * (amp(a + k, k) * amp(b + k, k));
        }
        acc
    });
    FockDensityMatrix::new(out)
}

pub fn mean_photon_number(state: &QuantumState) -> f64 {
    match state {
        QuantumState::Gaussian(g) => {
            let (vq, vp) = g.quadrature_variances();
            vq + vp + g.displacement().norm_sqr() - 0.5
        }
        QuantumState::Fock(f) => f.mean_photon_number(),
        QuantumState::SqueezedFock(s) => s.mean_photon_number(),
    }
}

/// `S(r) { f|2><2| + (1-f)|0><0| } S(r)^dagger`.
pub fn fig2_state(fraction: f64, squeezing: f64) -> Result<QuantumState> {
    if !(0.0..=1.0).contains(&fraction) {
        return domain(format!("fraction must lie in [0, 1], got {fraction}"));
    }
    let base = FockDensityMatrix::diagonal(&[1.0 - fraction, 0.0, fraction])?;
    if squeezing == 0.0 {
        return Ok(QuantumState::Fock(base));
    }
    Ok(QuantumState::SqueezedFock(SqueezedFock::new(base, squeezing)?))
}

/// On-disk state description.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum StateSpec {
    Gaussian {
        purity: f64,
        squeezing: f64,
        phase: f64,
        displacement: [f64; 2],
    },
    Fock {
        dim: usize,
        entries: Vec<[f64; 2]>,
    },
    SqueezedFock {
        squeezing: f64,
        dim: usize,
        entries: Vec<[f64; 2]>,
    },
}

fn fock_from_rows(dim: usize, entries: &[[f64; 2]]) -> Result<FockDensityMatrix> {
    if entries.len() != dim * dim {
        return Err(Error::Contract(format!(
            "expected {} entries for dim {dim}, got {}",
            dim * dim,
            entries.len()
        )));
    }
    let m = DMatrix::from_row_iterator(
        dim,
        dim,
        entries.iter().map(|[re, im]| Complex64::new(*re, *im)),
    );
    FockDensityMatrix::new(m)
}

fn fock_to_rows(f: &FockDensityMatrix) -> Vec<[f64; 2]> {
    let d = f.dim();
    let mut out = Vec::with_capacity(d * d);
    for i in 0..d {
        for j in 0..d {
            let z = f.get(i, j);
            out.push([z.re, z.im]);
        }
    }
    out
}

impl StateSpec {
    pub fn build(&self) -> Result<QuantumState> {
        match self {
            StateSpec::Gaussian {
                purity,
                squeezing,
                phase,
                displacement,
            } => Ok(QuantumState::Gaussian(GaussianState::new(
                *purity,
                *squeezing,
                *phase,
                Complex64::new(displacement[0], displacement[1]),
            )?)),
            StateSpec::Fock { dim, entries } => Ok(QuantumState::Fock(fock_from_rows(*dim, entries)?)),
            StateSpec::SqueezedFock {
                squeezing,
                dim,
                entries,
            } => Ok(QuantumState::SqueezedFock(SqueezedFock::new(
                fock_from_rows(*dim, entries)?,
                *squeezing,
            )?)),
        }
    }
}

impl From<&QuantumState> for StateSpec {
    fn from(state: &QuantumState) -> Self {
        match state {
            QuantumState::Gaussian(g) => StateSpec::Gaussian {
                purity: g.purity(),
                squeezing: g.squeezing(),
                phase: g.phase(),
                displacement: [g.displacement().re, g.displacement().im],
            },
            QuantumState::Fock(f) => StateSpec::Fock {
                dim: f.dim(),
                entries: fock_to_rows(f),
            },
            QuantumState::SqueezedFock(s) => StateSpec::SqueezedFock {
                squeezing: s.squeezing(),
                dim: s.base().dim(),
                entries: fock_to_rows(s.base()),
            },
        }
    }
}

/// Parses a state from its JSON description.
pub fn state_from_json(text: &str) -> Result<QuantumState> {
    let spec: StateSpec =
        serde_json::from_str(text).map_err(|e| Error::Contract(format!("state JSON: {e}")))?;
    spec.build()
}
