//! s-parametrized quasiprobability distributions.
//!
//! Fock-basis kernels are evaluated with their Gaussian envelope
//! `exp(-2|alpha|^2 / (1 - s))` split off, so callers that compare products of
//! distributions far from the origin can work with logarithms instead of
//! underflowing values.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

use crate::error::{domain, Error, Result};
use crate::special::{ln_factorial, scaled_laguerre};
use crate::states::{FockDensityMatrix, GaussianState, QuantumState};

/// Ordering parameter `s`; `0` is the Wigner function, `-1` the Husimi Q
/// function. Values `s >= 1` are rejected.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd, Serialize, Deserialize)]
#[serde(try_from = "f64", into = "f64")]
pub struct OrderingParameter(f64);

impl OrderingParameter {
    pub const WIGNER: Self = OrderingParameter(0.0);
    pub const HUSIMI: Self = OrderingParameter(-1.0);

    pub fn new(s: f64) -> Result<Self> {
        if !s.is_finite() || s >= 1.0 {
            return domain(format!("ordering parameter must be finite and < 1, got {s}"));
        }
        Ok(Self(s))
    }

    pub fn value(self) -> f64 {
        self.0
    }
}

impl TryFrom<f64> for OrderingParameter {
    type Error = Error;
    fn try_from(s: f64) -> Result<Self> {
        Self::new(s)
    }
}

impl From<OrderingParameter> for f64 {
    fn from(s: OrderingParameter) -> f64 {
        s.0
    }
}

/// A value represented as `mantissa * exp(log_scale)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScaledValue {
    pub mantissa: f64,
    pub log_scale: f64,
}

impl ScaledValue {
    pub fn value(self) -> f64 {
        if self.mantissa == 0.0 {
            0.0
        } else {
            self.mantissa * self.log_scale.exp()
        }
    }

    pub fn signum(self) -> f64 {
        if self.mantissa == 0.0 {
            0.0
        } else {
            self.mantissa.signum()
        }
    }

    /// `ln |value|`, `-inf` for zero.
    pub fn ln_abs(self) -> f64 {
        self.mantissa.abs().ln() + self.log_scale
    }

    pub fn mul(self, other: ScaledValue) -> ScaledValue {
        ScaledValue {
            mantissa: self.mantissa * other.mantissa,
            log_scale: self.log_scale + other.log_scale,
        }
    }

    /// Sign of `self - other` without forming either value.
    pub fn sign_of_difference(self, other: ScaledValue) -> f64 {
        let top = self.log_scale.max(other.log_scale);
        let d = self.mantissa * (self.log_scale - top).exp()
            - other.mantissa * (other.log_scale - top).exp();
        if d == 0.0 {
            0.0
        } else {
            d.signum()
        }
    }
}

/// Inverse widths `(a, b)` of `(sqrt(ab)/pi) exp(-a q^2 - b p^2)`.
pub fn gaussian_axes(state: &GaussianState, s: OrderingParameter) -> Result<(f64, f64)> {
    let r = state.squeezing();
    let rc = state.critical_squeezing();
    let s = s.value();
    let den_q = (-2.0 * (r - rc)).exp() - s;
    let den_p = (2.0 * (r + rc)).exp() - s;
    if !(den_q > 0.0) {
        return domain(format!(
            "squeezed (q) axis: exp(-2(r - r_c)) - s = {den_q} <= 0, distribution is not Gaussian"
        ));
    }
    if !(den_p > 0.0) {
        return domain(format!(
            "anti-squeezed (p) axis: exp(2(r + r_c)) - s = {den_p} <= 0, distribution is not Gaussian"
        ));
    }
    Ok((2.0 / den_q, 2.0 / den_p))
}

pub fn wigner_gaussian(state: &GaussianState, point: Complex64) -> f64 {
    let (q, p) = state.frame_coordinates(point);
    let r = state.squeezing();
    let rc = state.critical_squeezing();
    let mu = state.purity();
    2.0 * mu / PI
        * (-2.0 * (2.0 * (r - rc)).exp() * q * q).exp()
        * (-2.0 * (-2.0 * (r + rc)).exp() * p * p).exp()
}

pub fn sparam_gaussian(state: &GaussianState, point: Complex64, s: OrderingParameter) -> Result<f64> {
    Ok(sparam_gaussian_scaled(state, point, s)?.value())
}

fn sparam_gaussian_scaled(
    state: &GaussianState,
    point: Complex64,
    s: OrderingParameter,
) -> Result<ScaledValue> {
    let (a, b) = gaussian_axes(state, s)?;
    let (q, p) = state.frame_coordinates(point);
    Ok(ScaledValue {
        mantissa: (a * b).sqrt() / PI,
        log_scale: -a * q * q - b * p * p,
    })
}

fn envelope_exponent(point: Complex64, s: f64) -> f64 {
    -2.0 * point.norm_sqr() / (1.0 - s)
}

/// Kernel of `|j><k|` without the envelope `exp(-2|alpha|^2/(1-s))`, for `j >= k`.
fn kernel_polynomial(j: usize, k: usize, point: Complex64, s: f64) -> Complex64 {
    debug_assert!(j >= k);
    let m = j - k;
    let t = (s + 1.0) / (s - 1.0);
    let u = 4.0 * point.norm_sqr() / ((1.0 - s) * (1.0 - s));
    let poly = scaled_laguerre(m, t, u, k + 1)[k];
    let w = point.conj() * (2.0 / (1.0 - s));
    let norm = (0.5 * (ln_factorial(k) - ln_factorial(j))).exp();
    w.powu(m as u32) * (2.0 / (PI * (1.0 - s)) * norm * poly)
}

/// `W_{|j><k|}(alpha; s)`.
pub fn fock_kernel(j: usize, k: usize, point: Complex64, s: OrderingParameter) -> Complex64 {
    let sv = s.value();
    let env = envelope_exponent(point, sv).exp();
    if j >= k {
        kernel_polynomial(j, k, point, sv) * env
    } else {
        kernel_polynomial(k, j, point, sv).conj() * env
    }
}

/// Fock double sum with the envelope split off. Returns the complex mantissa.
fn fock_sum(rho: &FockDensityMatrix, point: Complex64, s: f64) -> Complex64 {
    let dim = rho.dim();
    let t = (s + 1.0) / (s - 1.0);
    let u = 4.0 * point.norm_sqr() / ((1.0 - s) * (1.0 - s));
    let w = point.conj() * (2.0 / (1.0 - s));
    let pref = 2.0 / (PI * (1.0 - s));
    let mut total = Complex64::new(0.0, 0.0);
    let mut w_pow = Complex64::new(1.0, 0.0);
    for m in 0..dim {
        let polys = scaled_laguerre(m, t, u, dim - m);
        // sqrt(k!/(k+m)!) updated incrementally in k
        let mut norm = (-0.5 * ln_factorial(m)).exp();
        for (k, poly) in polys.iter().enumerate() {
            let j = k + m;
            if k > 0 {
                norm *= (k as f64 / j as f64).sqrt();
            }
            let c = w_pow * (pref * norm * poly);
            total += rho.get(j, k) * c;
            if m > 0 {
                total += rho.get(k, j) * c.conj();
            }
        }
        w_pow *= w;
    }
    total
}

fn fock_scaled(rho: &FockDensityMatrix, point: Complex64, s: f64) -> Result<ScaledValue> {
    let total = fock_sum(rho, point, s);
    let bound = 1e-10 * total.re.abs().max(1.0);
    if total.im.abs() > bound {
        return Err(Error::Contract(format!(
            "quasiprobability has imaginary part {} (density matrix not Hermitian?)",
            total.im
        )));
    }
    Ok(ScaledValue {
        mantissa: total.re,
        log_scale: envelope_exponent(point, s),
    })
}

/// Quasiprobability at `point` as `mantissa * exp(log_scale)`.
pub fn quasiprob_scaled(
    state: &QuantumState,
    point: Complex64,
    s: OrderingParameter,
) -> Result<ScaledValue> {
    match state {
        QuantumState::Gaussian(g) => sparam_gaussian_scaled(g, point, s),
        QuantumState::Fock(rho) => fock_scaled(rho, point, s.value()),
        QuantumState::SqueezedFock(sq) => {
            if s.value() != 0.0 {
                return Err(Error::Unsupported(format!(
                    "squeezed Fock states only support the Wigner ordering (s = 0), got s = {}",
                    s.value()
                )));
            }
            let base = fock_scaled(sq.base(), sq.base_point(point), 0.0)?;
            Ok(base)
        }
    }
}

pub fn quasiprob(state: &QuantumState, point: Complex64, s: OrderingParameter) -> Result<f64> {
    Ok(quasiprob_scaled(state, point, s)?.value())
}
