use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use phasewit_core::SearchConfig;
use serde::Serialize;

#[derive(Debug, Parser)]
#[command(name = "phasewit", version, about = "Phase-space nonclassicality witnesses")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Evaluate or optimize the order-n witness for a state.
    Witness(WitnessArgs),
    /// Closed-form Gaussian minimum eigenvalue over a squeezing grid.
    GaussianScan(GaussianScanArgs),
    /// Optimized witness for lossy Fock states over an efficiency grid.
    FockLossScan(FockLossScanArgs),
    /// Non-Gaussianity margin for squeezed mixtures of |0> and |2>.
    Qng(QngArgs),
    /// Click statistics of a detector array, exact or sampled.
    DetectorSim(DetectorSimArgs),
    /// Recover s-parametrized quasiprobabilities from a click CSV.
    Recover(RecoverArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Json,
    Csv,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct Common {
    /// Write the report to this file instead of standard output.
    #[arg(long, short)]
    #[serde(skip)]
    pub output: Option<PathBuf>,
    #[arg(long, value_enum)]
    pub format: Option<Format>,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct SearchArgs {
    /// Half-width of the seeding grid around the state's centroid.
    #[arg(long, default_value_t = 4.0)]
    pub grid_radius: f64,
    #[arg(long, default_value_t = 9)]
    pub grid_points: usize,
    /// Number of simplex refinements.
    #[arg(long, default_value_t = 16)]
    pub starts: usize,
    #[arg(long, default_value_t = 12)]
    pub orientations: usize,
}

impl SearchArgs {
    pub fn config(&self, seed: u64) -> SearchConfig {
        SearchConfig {
            grid_radius: self.grid_radius,
            grid_points: self.grid_points,
            starts: self.starts,
            orientations: self.orientations,
            seed,
            ..SearchConfig::default()
        }
    }
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct WitnessArgs {
    /// State JSON file.
    #[arg(long = "state")]
    pub state_path: PathBuf,
    #[arg(long = "n", default_value_t = 2)]
    pub n: usize,
    /// Ordering parameter of the quasiprobability (ignored with --array).
    #[arg(long = "s", default_value_t = 0.0, allow_negative_numbers = true)]
    pub s: f64,
    /// Fixed points `re,im;re,im;...`; without it the points are optimized.
    #[arg(long, allow_hyphen_values = true)]
    pub points: Option<String>,
    /// Detector array `N,eta`: quasiprobabilities come from click statistics.
    #[arg(long)]
    pub array: Option<String>,
    /// Ordering index m of the array; all are tried when absent.
    #[arg(long)]
    pub m: Option<usize>,
    /// Sample this many shots per probe instead of using exact clicks.
    #[arg(long)]
    pub shots: Option<u64>,
    #[command(flatten)]
    pub search: SearchArgs,
    #[command(flatten)]
    pub common: Common,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct GaussianScanArgs {
    /// Comma-separated purities.
    #[arg(long, default_value = "1")]
    pub purity: String,
    /// Squeezing grid `start:stop:step`.
    #[arg(long)]
    pub r_grid: String,
    #[arg(long = "s", default_value_t = 0.0, allow_negative_numbers = true)]
    pub s: f64,
    /// Also run the numerical search at each grid point.
    #[arg(long)]
    pub optimize: bool,
    #[command(flatten)]
    pub search: SearchArgs,
    #[command(flatten)]
    pub common: Common,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct FockLossScanArgs {
    /// Comma-separated photon numbers.
    #[arg(long, default_value = "1,2,3")]
    pub fock: String,
    /// Transmittance grid `start:stop:step`.
    #[arg(long)]
    pub eta_grid: String,
    #[arg(long = "n", default_value_t = 2)]
    pub n: usize,
    #[arg(long = "s", default_value_t = 0.0, allow_negative_numbers = true)]
    pub s: f64,
    #[command(flatten)]
    pub search: SearchArgs,
    #[command(flatten)]
    pub common: Common,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct QngArgs {
    /// Fraction grid `start:stop:step`.
    #[arg(long)]
    pub f_grid: String,
    /// Squeezing applied to the mixture.
    #[arg(long)]
    pub r: f64,
    #[command(flatten)]
    pub search: SearchArgs,
    #[command(flatten)]
    pub common: Common,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct DetectorSimArgs {
    #[arg(long = "state")]
    pub state_path: PathBuf,
    /// Detector array `N,eta`.
    #[arg(long)]
    pub array: String,
    /// Probe displacement `re,im`.
    #[arg(long, default_value = "0,0", allow_hyphen_values = true)]
    pub alpha: String,
    /// Number of shots; exact probabilities when absent.
    #[arg(long)]
    pub shots: Option<u64>,
    #[command(flatten)]
    pub common: Common,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct RecoverArgs {
    /// Click CSV as written by `detector-sim`.
    #[arg(long)]
    pub clicks: PathBuf,
    #[command(flatten)]
    pub common: Common,
}
