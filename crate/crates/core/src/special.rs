//! Small numerical helpers: factorials, binomials, the scaled Laguerre
//! recurrence used by the Fock kernels, and compensated summation.

/// `ln(n!)` by direct summation; exact enough for the truncations used here.
pub fn ln_factorial(n: usize) -> f64 {
    (2..=n).map(|k| (k as f64).ln()).sum()
}

/// Binomial coefficient as a float.
pub fn binomial(n: usize, k: usize) -> f64 {
    if k > n {
        return 0.0;
    }
    let k = k.min(n - k);
    let mut acc = 1.0;
    for i in 0..k {
        acc = acc * (n - i) as f64 / (i + 1) as f64;
    }
    acc.round()
}

/// Evaluates `P_k = t^k L_k^{(m)}(-u/t)` for `k = 0..len` by the three-term
/// recurrence in degree.
///
/// Multiplying the Laguerre recurrence through by `t^{k+1}` removes the
/// `1/t` singularity, so the result stays finite at `t = 0` (Husimi ordering),
/// where it reduces to `u^k / k!` times a binomial.
pub fn scaled_laguerre(m: usize, t: f64, u: f64, len: usize) -> Vec<f64> {
    let mut out = Vec::with_capacity(len);
    if len == 0 {
        return out;
    }
    out.push(1.0);
    if len == 1 {
        return out;
    }
    let mf = m as f64;
    out.push((1.0 + mf) * t + u);
    for n in 1..len - 1 {
        let nf = n as f64;
        let next = ((2.0 * nf + 1.0 + mf) * t * out[n] + u * out[n]
            - (nf + mf) * t * t * out[n - 1])
            / (nf + 1.0);
        out.push(next);
    }
    out
}

/// Neumaier-compensated sum.
pub fn compensated_sum<I: IntoIterator<Item = f64>>(terms: I) -> f64 {
    let mut sum = 0.0_f64;
    let mut comp = 0.0_f64;
    for x in terms {
        let t = sum + x;
        if sum.abs() >= x.abs() {
            comp += (sum - t) + x;
        } else {
            comp += (x - t) + sum;
        }
        sum = t;
    }
    sum + comp
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    /// Series form of the generalized Laguerre polynomial.
    fn laguerre_series(n: usize, m: usize, z: f64) -> f64 {
        (0..=n)
            .map(|l| {
                let num = ln_factorial(n + m);
                let den = ln_factorial(n - l) + ln_factorial(m + l) + ln_factorial(l);
                (num - den).exp() * (-z).powi(l as i32)
            })
            .sum()
    }

    #[test]
    fn recurrence_matches_series_at_wigner_ordering() {
        // t = -1 gives (-1)^k L_k^{(m)}(u); the alternating series itself
        // loses digits for large u, so the oracle stays at moderate u
        for m in 0..5 {
            for &u in &[0.0, 0.3, 1.7, 4.0] {
                let rec = scaled_laguerre(m, -1.0, u, 11);
                for (k, v) in rec.iter().enumerate() {
                    let sign = if k % 2 == 0 { 1.0 } else { -1.0 };
                    let expect = sign * laguerre_series(k, m, u);
                    assert_relative_eq!(*v, expect, epsilon = 1e-9, max_relative = 1e-10);
                }
            }
        }
    }

    #[test]
    fn recurrence_matches_series_for_general_t() {
        for m in 0..4 {
            for &t in &[-0.6, -0.2, 0.4, -3.0] {
                let u = 1.3;
                let rec = scaled_laguerre(m, t, u, 9);
                for (k, v) in rec.iter().enumerate() {
                    let expect = t.powi(k as i32) * laguerre_series(k, m, -u / t);
                    assert_relative_eq!(*v, expect, epsilon = 1e-10, max_relative = 1e-9);
                }
            }
        }
    }

    #[test]
    fn recurrence_limit_at_zero_t() {
        // t -> 0 keeps only the top-degree term: u^k / k!
        let rec = scaled_laguerre(2, 0.0, 1.5, 6);
        for (k, v) in rec.iter().enumerate() {
            let expect = 1.5_f64.powi(k as i32) / ln_factorial(k).exp();
            assert_relative_eq!(*v, expect, max_relative = 1e-12);
        }
    }

    #[test]
    fn binomials() {
        assert_eq!(binomial(5, 2), 10.0);
        assert_eq!(binomial(12, 6), 924.0);
        assert_eq!(binomial(3, 4), 0.0);
    }

    #[test]
    fn compensation_recovers_small_terms() {
        let s = compensated_sum([1e16, 1.0, -1e16]);
        assert_eq!(s, 1.0);
    }
}
