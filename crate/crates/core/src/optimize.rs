//! Derivative-free Nelder–Mead simplex minimization.

/// Stopping and step controls for [`nelder_mead`].
#[derive(Debug, Clone, Copy)]
pub struct NelderMeadOptions {
    /// Edge length of the initial simplex.
    pub initial_step: f64,
    /// Converged once the simplex diameter falls below this.
    pub diameter_tol: f64,
    pub max_evals: usize,
}

impl Default for NelderMeadOptions {
    fn default() -> Self {
        Self {
            initial_step: 0.1,
            diameter_tol: 1e-8,
            max_evals: 20_000,
        }
    }
}

#[derive(Debug, Clone)]
pub struct Minimum {
    pub x: Vec<f64>,
    pub value: f64,
    pub evals: usize,
    pub converged: bool,
}

fn diameter(simplex: &[Vec<f64>]) -> f64 {
    let mut d: f64 = 0.0;
    for i in 1..simplex.len() {
        let dist = simplex[i]
            .iter()
            .zip(&simplex[0])
            .map(|(a, b)| (a - b) * (a - b))
            .sum::<f64>()
            .sqrt();
        d = d.max(dist);
    }
    d
}

fn eval(f: &mut impl FnMut(&[f64]) -> f64, x: &[f64], evals: &mut usize) -> f64 {
    *evals += 1;
    let v = f(x);
    if v.is_nan() {
        f64::INFINITY
    } else {
        v
    }
}

/// Minimizes `f` from `start` using dimension-adaptive coefficients
/// (Gao & Han); restarts once from the best vertex to guard against a
/// collapsed simplex.
pub fn nelder_mead(
    mut f: impl FnMut(&[f64]) -> f64,
    start: &[f64],
    opts: NelderMeadOptions,
) -> Minimum {
    let mut evals = 0;
    let mut best = run(&mut f, start, opts, &mut evals);
    if evals < opts.max_evals {
        let again = run(&mut f, &best.x, opts, &mut evals);
        if again.value <= best.value {
            best = Minimum {
                converged: again.converged,
                ..again
            };
        }
    }
    best.evals = evals;
    best
}

fn run(
    f: &mut impl FnMut(&[f64]) -> f64,
    start: &[f64],
    opts: NelderMeadOptions,
    evals: &mut usize,
) -> Minimum {
    let n = start.len();
    let nf = n as f64;
    let (alpha, gamma, rho, sigma) = if n > 1 {
        (1.0, 1.0 + 2.0 / nf, 0.75 - 1.0 / (2.0 * nf), 1.0 - 1.0 / nf)
    } else {
        (1.0, 2.0, 0.5, 0.5)
    };

    let mut simplex: Vec<Vec<f64>> = Vec::with_capacity(n + 1);
    simplex.push(start.to_vec());
    for i in 0..n {
        let mut v = start.to_vec();
        v[i] += opts.initial_step;
        simplex.push(v);
    }
    let mut values: Vec<f64> = simplex.iter().map(|x| eval(f, x, evals)).collect();
    let mut converged = false;

    loop {
        // sort vertices by value, ties by coordinates for determinism
        let mut order: Vec<usize> = (0..=n).collect();
        order.sort_by(|&a, &b| {
            values[a]
                .total_cmp(&values[b])
                .then_with(|| cmp_coords(&simplex[a], &simplex[b]))
        });
        simplex = order.iter().map(|&i| simplex[i].clone()).collect();
        values = order.iter().map(|&i| values[i]).collect();

        if diameter(&simplex) < opts.diameter_tol {
            converged = true;
            break;
        }
        if *evals >= opts.max_evals {
            break;
        }

        let centroid: Vec<f64> = (0..n)
            .map(|k| simplex[..n].iter().map(|v| v[k]).sum::<f64>() / nf)
            .collect();
        let along = |t: f64| -> Vec<f64> {
            centroid
                .iter()
                .zip(&simplex[n])
                .map(|(c, w)| c + t * (c - w))
                .collect()
        };

        let xr = along(alpha);
        let fr = eval(f, &xr, evals);
        if fr < values[0] {
            let xe = along(alpha * gamma);
            let fe = eval(f, &xe, evals);
            if fe < fr {
                simplex[n] = xe;
                values[n] = fe;
            } else {
                simplex[n] = xr;
                values[n] = fr;
            }
            continue;
        }
        if fr < values[n - 1] {
            simplex[n] = xr;
            values[n] = fr;
            continue;
        }
        let (xc, fc) = if fr < values[n] {
            let xc = along(alpha * rho);
            let fc = eval(f, &xc, evals);
            (xc, fc)
        } else {
            let xc = along(-rho);
            let fc = eval(f, &xc, evals);
            (xc, fc)
        };
        if fc < values[n].min(fr) {
            simplex[n] = xc;
            values[n] = fc;
            continue;
        }
        // shrink toward the best vertex
        for i in 1..=n {
            let shrunk: Vec<f64> = simplex[0]
                .iter()
                .zip(&simplex[i])
                .map(|(b, v)| b + sigma * (v - b))
                .collect();
            values[i] = eval(f, &shrunk, evals);
            simplex[i] = shrunk;
        }
    }

    Minimum {
        x: simplex[0].clone(),
        value: values[0],
        evals: *evals,
        converged,
    }
}

/// Lexicographic order on coordinate vectors.
pub fn cmp_coords(a: &[f64], b: &[f64]) -> std::cmp::Ordering {
    for (x, y) in a.iter().zip(b) {
        match x.total_cmp(y) {
            std::cmp::Ordering::Equal => continue,
            o => return o,
        }
    }
    a.len().cmp(&b.len())
}
