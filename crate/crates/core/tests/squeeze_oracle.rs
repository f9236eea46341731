//! The rescaled-argument Wigner function of a squeezed Fock state checked
//! against an explicit squeeze operator built in a large Fock basis.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use phasewit_core::quasiprob::quasiprob;
use phasewit_core::{FockDensityMatrix, OrderingParameter, QuantumState, SqueezedFock};

const DIM: usize = 80;
const KEEP: usize = 60;

/// `exp(r (a^2 - a^dag^2) / 2)` applied to `|n>`, truncated to `KEEP` levels.
/// With this sign the q quadrature is the narrowed one.
fn squeezed_number_amplitudes(n: usize, r: f64) -> Vec<Complex64> {
    let mut a = DMatrix::<Complex64>::zeros(DIM, DIM);
    for k in 1..DIM {
        a[(k - 1, k)] = Complex64::new((k as f64).sqrt(), 0.0);
    }
    let ad = a.adjoint();
    let g = (&a * &a - &ad * &ad) * Complex64::new(0.5 * r, 0.0);
    let mut ket = DVector::<Complex64>::zeros(DIM);
    ket[n] = Complex64::new(1.0, 0.0);
    let out = g.exp() * ket;
    out.iter().take(KEEP).cloned().collect()
}

#[test]
fn squeezed_number_states_match_fock_basis() {
    let s = OrderingParameter::new(0.0).unwrap();
    for (n, r) in [(0, 0.3), (1, 0.5), (2, 0.4)] {
        let amps = squeezed_number_amplitudes(n, r);
        let tail: f64 = amps[KEEP - 10..].iter().map(|c| c.norm_sqr()).sum();
        assert!(tail < 1e-12, "truncation tail {tail}");
        let oracle = QuantumState::Fock(FockDensityMatrix::pure(&amps).unwrap());
        let state = QuantumState::SqueezedFock(SqueezedFock::new(FockDensityMatrix::number(n, n + 1).unwrap(), r).unwrap());
        for (re, im) in [(0.0, 0.0), (0.3, 0.0), (0.0, 0.3), (0.25, -0.4), (-0.6, 0.2), (0.1, 0.9)] {
            let point = Complex64::new(re, im);
            let want = quasiprob(&oracle, point, s).unwrap();
            let got = quasiprob(&state, point, s).unwrap();
            assert!((got - want).abs() < 1e-9, "n={n} r={r} at {point}: {got} vs {want}");
        }
    }
}
