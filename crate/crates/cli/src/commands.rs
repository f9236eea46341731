use std::fs;
use std::path::Path;

use phasewit_core::analytic::{certify_qng, gaussian_lambda_min, distance_lower_bound};
use phasewit_core::detector::{
    click_probabilities, read_click_csv, recover_quasiprobs, simulate_shots, witness_from_clicks,
    write_click_csv, ArraySpec, ClickTable, Measurement,
};
use phasewit_core::states::{apply_loss, fig2_state};
use phasewit_core::witness::{build_witness, optimize_points};
use phasewit_core::{
    Complex64, FockDensityMatrix, GaussianState, OrderingParameter, PhasePointSet, QuantumState, StateSpec,
    WitnessReport,
};
use serde::Serialize;
use serde_json::{json, Value};

use crate::args::{
    DetectorSimArgs, FockLossScanArgs, Format, GaussianScanArgs, QngArgs, RecoverArgs, WitnessArgs,
};
use crate::output::{emit, json_report, num, pick, Csv};
use crate::Failure;

fn config_err(msg: impl Into<String>) -> Failure {
    Failure::Config(msg.into())
}

fn load_state(path: &Path) -> Result<(QuantumState, StateSpec), Failure> {
    let text = fs::read_to_string(path).map_err(|e| config_err(format!("cannot read {}: {e}", path.display())))?;
    let spec: StateSpec = serde_json::from_str(&text)
        .map_err(|e| config_err(format!("{}: invalid state JSON: {e}", path.display())))?;
    let state = spec
        .build()
        .map_err(|e| config_err(format!("{}: {e}", path.display())))?;
    Ok((state, spec))
}

fn parse_f64(s: &str, what: &str) -> Result<f64, Failure> {
    s.trim()
        .parse::<f64>()
        .ok()
        .filter(|x| x.is_finite())
        .ok_or_else(|| config_err(format!("{what}: `{s}` is not a finite number")))
}

/// `start:stop:step`, inclusive of `stop` up to rounding.
fn parse_grid(spec: &str, what: &str) -> Result<Vec<f64>, Failure> {
    let parts: Vec<&str> = spec.split(':').collect();
    if parts.len() != 3 {
        return Err(config_err(format!("{what}: expected start:stop:step, got `{spec}`")));
    }
    let (a, b, h) = (parse_f64(parts[0], what)?, parse_f64(parts[1], what)?, parse_f64(parts[2], what)?);
    if !(h > 0.0) || b < a {
        return Err(config_err(format!("{what}: need step > 0 and stop >= start")));
    }
    let count = ((b - a) / h + 1e-9).floor() as usize + 1;
    if count > 1_000_000 {
        return Err(config_err(format!("{what}: grid has {count} points")));
    }
    Ok((0..count).map(|i| a + i as f64 * h).collect())
}

fn parse_list<T: std::str::FromStr>(spec: &str, what: &str) -> Result<Vec<T>, Failure> {
    spec.split(',')
        .map(|s| s.trim().parse::<T>().map_err(|_| config_err(format!("{what}: cannot parse `{s}`"))))
        .collect()
}

fn parse_complex(spec: &str, what: &str) -> Result<Complex64, Failure> {
    let parts: Vec<&str> = spec.split(',').collect();
    if parts.len() != 2 {
        return Err(config_err(format!("{what}: expected re,im, got `{spec}`")));
    }
    Ok(Complex64::new(parse_f64(parts[0], what)?, parse_f64(parts[1], what)?))
}

fn parse_array(spec: &str) -> Result<ArraySpec, Failure> {
    let parts: Vec<&str> = spec.split(',').collect();
    if parts.len() != 2 {
        return Err(config_err(format!("--array: expected N,eta, got `{spec}`")));
    }
    let n = parts[0]
        .trim()
        .parse::<usize>()
        .map_err(|_| config_err(format!("--array: bad detector count `{}`", parts[0])))?;
    let eta = parse_f64(parts[1], "--array")?;
    ArraySpec::new(n, eta).map_err(|e| config_err(format!("--array: {e}")))
}

fn ordering(s: f64) -> Result<OrderingParameter, Failure> {
    Ok(OrderingParameter::new(s)?)
}

#[derive(Serialize)]
struct Echo<'a, A: Serialize> {
    #[serde(flatten)]
    args: &'a A,
    #[serde(skip_serializing_if = "Option::is_none")]
    state: Option<&'a StateSpec>,
}

fn witness_row(report: &WitnessReport) -> Vec<String> {
    let mut row = vec![
        report.points.len().to_string(),
        num(report.points.s().value()),
        num(report.min_eigenvalue),
        num(report.distance_bound),
        serde_json::to_value(report.verdict).unwrap().as_str().unwrap().to_string(),
    ];
    for p in report.points.points() {
        row.push(num(p.re));
        row.push(num(p.im));
    }
    row
}

pub fn witness(a: WitnessArgs) -> Result<(), Failure> {
    let (state, spec) = load_state(&a.state_path)?;
    if a.n == 0 {
        return Err(config_err("--n must be at least 1"));
    }
    let fixed: Option<Vec<Complex64>> = match &a.points {
        Some(p) => Some(
            p.split(';')
                .map(|z| parse_complex(z, "--points"))
                .collect::<Result<_, _>>()?,
        ),
        None => None,
    };
    if let Some(pts) = &fixed {
        if pts.len() != a.n {
            return Err(config_err(format!("--points has {} points but --n is {}", pts.len(), a.n)));
        }
    }
    let mut extra = Value::Null;
    let report = match &a.array {
        Some(array) => {
            let spec_arr = parse_array(array)?;
            let pts = fixed.ok_or_else(|| config_err("--array needs --points"))?;
            let measurement = match a.shots {
                Some(shots) => Measurement::Shots { shots, seed: a.common.seed },
                None => Measurement::Exact,
            };
            let ms: Vec<usize> = match a.m {
                Some(m) => vec![m],
                None => (0..spec_arr.detectors()).collect(),
            };
            let mut reports = Vec::new();
            for m in ms {
                reports.push(witness_from_clicks(&state, &pts, spec_arr, m, measurement)?);
            }
            extra = Value::Array(
                reports
                    .iter()
                    .map(|r| json!({"s": r.points.s().value(), "min_eigenvalue": r.min_eigenvalue}))
                    .collect(),
            );
            reports
                .into_iter()
                .min_by(|x, y| x.min_eigenvalue.total_cmp(&y.min_eigenvalue))
                .expect("at least one ordering")
        }
        None => {
            let s = ordering(a.s)?;
            match fixed {
                Some(pts) => WitnessReport::from_matrix(&build_witness(&state, &PhasePointSet::new(pts, s)?)?)?,
                None => optimize_points(&state, a.n, s, &a.search.config(a.common.seed))?,
            }
        }
    };
    let text = match pick(a.common.format, Format::Json) {
        Format::Json => {
            let mut result = serde_json::to_value(&report).expect("report serializes");
            if !extra.is_null() {
                result["per_ordering"] = extra;
            }
            json_report("witness", &Echo { args: &a, state: Some(&spec) }, a.common.seed, result)
        }
        Format::Csv => {
            let mut header = vec!["n", "s", "min_eigenvalue", "distance_bound", "verdict"];
            let names: Vec<String> = (1..=report.points.len())
                .flat_map(|i| [format!("beta{i}_re"), format!("beta{i}_im")])
                .collect();
            header.extend(names.iter().map(String::as_str));
            let mut csv = Csv::new(&header);
            csv.row(&witness_row(&report));
            csv.into_string()
        }
    };
    emit(a.common.output.as_deref(), &text)
}

pub fn gaussian_scan(a: GaussianScanArgs) -> Result<(), Failure> {
    let purities: Vec<f64> = parse_list(&a.purity, "--purity")?;
    let rs = parse_grid(&a.r_grid, "--r-grid")?;
    let s = ordering(a.s)?;
    let config = a.search.config(a.common.seed);
    let mut rows = Vec::new();
    for &mu in &purities {
        for &r in &rs {
            let g = GaussianState::new(mu, r, 0.0, Complex64::new(0.0, 0.0))?;
            let opt = gaussian_lambda_min(&g, s)?;
            let optimized = if a.optimize {
                Some(optimize_points(&g.clone().into(), 2, s, &config)?.min_eigenvalue)
            } else {
                None
            };
            let point = opt.optimal_points.first().copied();
            rows.push(json!({
                "purity": mu,
                "squeezing": r,
                "critical_squeezing": g.critical_squeezing(),
                "s": s.value(),
                "lambda_min": opt.lambda_min,
                "point": point.map(|p| [p.re, p.im]),
                "distance_bound": distance_lower_bound(opt.lambda_min, 2),
                "lambda_optimized": optimized,
            }));
        }
    }
    let text = match pick(a.common.format, Format::Csv) {
        Format::Json => json_report("gaussian-scan", &a, a.common.seed, Value::Array(rows)),
        Format::Csv => {
            let mut header = vec![
                "purity", "squeezing", "critical_squeezing", "s", "lambda_min", "point_re", "point_im", "distance_bound",
            ];
            if a.optimize {
                header.push("lambda_optimized");
            }
            let mut csv = Csv::new(&header);
            let f = |v: &Value| v.as_f64().map(num).unwrap_or_else(|| "nan".into());
            for r in &rows {
                let mut cells = vec![
                    f(&r["purity"]),
                    f(&r["squeezing"]),
                    f(&r["critical_squeezing"]),
                    f(&r["s"]),
                    f(&r["lambda_min"]),
                    f(&r["point"][0]),
                    f(&r["point"][1]),
                    f(&r["distance_bound"]),
                ];
                if a.optimize {
                    cells.push(f(&r["lambda_optimized"]));
                }
                csv.row(&cells);
            }
            csv.into_string()
        }
    };
    emit(a.common.output.as_deref(), &text)
}

pub fn fock_loss_scan(a: FockLossScanArgs) -> Result<(), Failure> {
    let fock: Vec<usize> = parse_list(&a.fock, "--fock")?;
    let etas = parse_grid(&a.eta_grid, "--eta-grid")?;
    let s = ordering(a.s)?;
    let config = a.search.config(a.common.seed);
    let mut rows = Vec::new();
    for &k in &fock {
        let base = FockDensityMatrix::number(k, k + 1)?;
        for &eta in &etas {
            let rho = apply_loss(&base, eta)?;
            let rep = optimize_points(&rho.into(), a.n, s, &config)?;
            rows.push((k, eta, rep));
        }
    }
    let text = match pick(a.common.format, Format::Csv) {
        Format::Json => {
            let result: Vec<Value> = rows
                .iter()
                .map(|(k, eta, rep)| json!({"fock": k, "eta": eta, "report": rep}))
                .collect();
            json_report("fock-loss-scan", &a, a.common.seed, Value::Array(result))
        }
        Format::Csv => {
            let mut csv = Csv::new(&["fock", "eta", "min_eigenvalue", "distance_bound", "verdict"]);
            for (k, eta, rep) in &rows {
                let verdict = serde_json::to_value(rep.verdict).unwrap();
                csv.row(&[
                    k.to_string(),
                    num(*eta),
                    num(rep.min_eigenvalue),
                    num(rep.distance_bound),
                    verdict.as_str().unwrap().to_string(),
                ]);
            }
            csv.into_string()
        }
    };
    emit(a.common.output.as_deref(), &text)
}

pub fn qng(a: QngArgs) -> Result<(), Failure> {
    let fs_ = parse_grid(&a.f_grid, "--f-grid")?;
    let config = a.search.config(a.common.seed);
    let mut rows = Vec::new();
    for &f in &fs_ {
        let state = fig2_state(f, a.r)?;
        rows.push((f, certify_qng(&state, &config)?));
    }
    let text = match pick(a.common.format, Format::Csv) {
        Format::Json => {
            let result: Vec<Value> = rows.iter().map(|(f, rep)| json!({"fraction": f, "report": rep})).collect();
            json_report("qng", &a, a.common.seed, Value::Array(result))
        }
        Format::Csv => {
            let mut csv = Csv::new(&["fraction", "mean_photon", "bound", "min_eigenvalue", "delta", "non_gaussian"]);
            for (f, rep) in &rows {
                csv.row(&[
                    num(*f),
                    num(rep.mean_photon),
                    num(rep.bound),
                    num(rep.lambda_min),
                    num(rep.delta),
                    rep.quantum_non_gaussian.to_string(),
                ]);
            }
            csv.into_string()
        }
    };
    emit(a.common.output.as_deref(), &text)
}

fn recovered_json(clicks: &phasewit_core::detector::ClickDistribution) -> Value {
    Value::Array(
        recover_quasiprobs(clicks)
            .into_iter()
            .enumerate()
            .map(|(m, (s, w))| json!({"m": m, "s": s, "quasiprob": w}))
            .collect(),
    )
}

pub fn detector_sim(a: DetectorSimArgs) -> Result<(), Failure> {
    let (state, spec) = load_state(&a.state_path)?;
    let array = parse_array(&a.array)?;
    let alpha = parse_complex(&a.alpha, "--alpha")?;
    let table = match a.shots {
        Some(shots) => {
            let s = simulate_shots(&state, alpha, array, shots, a.common.seed)?;
            ClickTable {
                clicks: s.clicks,
                stderr: s.stderr,
                shots: Some(shots),
                seed: a.common.seed,
            }
        }
        None => {
            let clicks = click_probabilities(&state, alpha, array)?;
            let stderr = vec![0.0; clicks.probs().len()];
            ClickTable {
                clicks,
                stderr,
                shots: None,
                seed: a.common.seed,
            }
        }
    };
    let text = match pick(a.common.format, Format::Csv) {
        Format::Csv => write_click_csv(&table),
        Format::Json => json_report(
            "detector-sim",
            &Echo { args: &a, state: Some(&spec) },
            a.common.seed,
            json!({
                "probs": table.clicks.probs(),
                "stderr": table.stderr,
                "shots": table.shots,
                "recovered": recovered_json(&table.clicks),
            }),
        ),
    };
    emit(a.common.output.as_deref(), &text)
}

pub fn recover(a: RecoverArgs) -> Result<(), Failure> {
    let text = fs::read_to_string(&a.clicks)
        .map_err(|e| config_err(format!("cannot read {}: {e}", a.clicks.display())))?;
    let table = read_click_csv(&text).map_err(|e| config_err(format!("{}: {e}", a.clicks.display())))?;
    let out = match pick(a.common.format, Format::Csv) {
        Format::Json => json_report(
            "recover",
            &a,
            a.common.seed,
            json!({
                "detectors": table.clicks.spec().detectors(),
                "efficiency": table.clicks.spec().efficiency(),
                "alpha": [table.clicks.displacement().re, table.clicks.displacement().im],
                "recovered": recovered_json(&table.clicks),
            }),
        ),
        Format::Csv => {
            let mut csv = Csv::new(&["m", "s", "quasiprob"]);
            for (m, (s, w)) in recover_quasiprobs(&table.clicks).into_iter().enumerate() {
                csv.row(&[m.to_string(), num(s), num(w)]);
            }
            csv.into_string()
        }
    };
    emit(a.common.output.as_deref(), &out)
}
