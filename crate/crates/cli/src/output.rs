use std::fs;
use std::io::Write;
use std::path::Path;

use serde::Serialize;
use serde_json::{json, Value};

use crate::args::Format;
use crate::Failure;

/// Fixed-width scientific notation with 12 significant digits.
pub fn num(x: f64) -> String {
    if x.is_nan() {
        "nan".into()
    } else if x.is_infinite() {
        if x > 0.0 { "inf".into() } else { "-inf".into() }
    } else {
        format!("{x:.11e}")
    }
}

pub struct Csv {
    text: String,
}

impl Csv {
    pub fn new(header: &[&str]) -> Self {
        Self {
            text: format!("{}\n", header.join(",")),
        }
    }

    pub fn row(&mut self, cells: &[String]) {
        self.text.push_str(&cells.join(","));
        self.text.push('\n');
    }

    pub fn into_string(self) -> String {
        self.text
    }
}

/// Versioned report envelope. Carries the echoed configuration, the tool
/// version and the seed, and nothing that varies between runs.
pub fn json_report(command: &str, config: &impl Serialize, seed: u64, result: Value) -> String {
    let report = json!({
        "schema": 1,
        "command": command,
        "provenance": {
            "tool": "phasewit",
            "version": env!("CARGO_PKG_VERSION"),
            "seed": seed,
            "config": config,
        },
        "result": result,
    });
    let mut text = serde_json::to_string_pretty(&report).expect("report serializes");
    text.push('\n');
    text
}

pub fn emit(path: Option<&Path>, text: &str) -> Result<(), Failure> {
    match path {
        Some(p) => fs::write(p, text).map_err(|e| Failure::Config(format!("cannot write {}: {e}", p.display()))),
        None => {
            let mut out = std::io::stdout().lock();
            out.write_all(text.as_bytes())
                .and_then(|_| out.flush())
                .map_err(|e| Failure::Config(format!("cannot write to standard output: {e}")))
        }
    }
}

pub fn pick(format: Option<Format>, default: Format) -> Format {
    format.unwrap_or(default)
}
