//! Run configuration: JSON file plus command-line overrides.

use std::fs;
use std::path::{Path, PathBuf};

use clap::ValueEnum;
use serde::{Deserialize, Serialize};
use synthprint::detect::{
    DEFAULT_CANDIDATES, DEFAULT_LATTICE_THRESHOLD, DEFAULT_MIN_PROMINENCE, DEFAULT_NEIGHBORHOOD,
};
use synthprint::profiles::{ProfileMode, FIT_RHO_MAX, FIT_RHO_MIN};
use synthprint::residual::{DenoiserKind, DenoiserSpec};
use synthprint::stats::{ChannelMode, DEFAULT_MAX_IMAGES};

use crate::CliError;

pub const DEFAULT_CROP: usize = 256;

/// Which images the radial and angular profiles are computed on.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum ProfileSource {
    #[default]
    Raw,
    Residual,
}

/// `--denoiser` values; `none` computes the summary grids on raw images.
#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum DenoiserArg {
    Gaussian,
    Median,
    BilateralLite,
    None,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DetectorConfig {
    pub neighborhood: usize,
    pub min_prominence: f64,
    pub candidates: Vec<usize>,
    pub lattice_threshold: f64,
}

impl Default for DetectorConfig {
    fn default() -> Self {
        Self {
            neighborhood: DEFAULT_NEIGHBORHOOD,
            min_prominence: DEFAULT_MIN_PROMINENCE,
            candidates: DEFAULT_CANDIDATES.to_vec(),
            lattice_threshold: DEFAULT_LATTICE_THRESHOLD,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FitConfig {
    pub rho_min: f64,
    pub rho_max: f64,
}

impl Default for FitConfig {
    fn default() -> Self {
        Self {
            rho_min: FIT_RHO_MIN,
            rho_max: FIT_RHO_MAX,
        }
    }
}

/// Fully resolved settings of an `analyze` or `compare` run.
///
/// The report embeds this struct; `output` and `threads` are not echoed
/// since neither affects the results.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub input: Option<PathBuf>,
    pub reference: Option<PathBuf>,
    #[serde(skip_serializing)]
    pub output: Option<PathBuf>,
    pub crop: usize,
    /// Denoiser for the residual grids; `null` analyses raw images.
    pub denoiser: Option<DenoiserSpec>,
    pub remove_mean: bool,
    pub profiles_on: ProfileSource,
    pub profile_mode: ProfileMode,
    pub max_images: usize,
    pub min_usable: usize,
    pub channel_mode: ChannelMode,
    /// Command that converts non-Netpbm files to PGM/PPM on stdout.
    pub decoder: Option<Vec<String>>,
    #[serde(skip_serializing)]
    pub threads: usize,
    pub plots: bool,
    pub detector: DetectorConfig,
    pub fit: FitConfig,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            input: None,
            reference: None,
            output: None,
            crop: DEFAULT_CROP,
            denoiser: Some(DenoiserSpec::default()),
            remove_mean: true,
            profiles_on: ProfileSource::default(),
            profile_mode: ProfileMode::default(),
            max_images: DEFAULT_MAX_IMAGES,
            min_usable: 1,
            channel_mode: ChannelMode::default(),
            decoder: None,
            threads: 0,
            plots: true,
            detector: DetectorConfig::default(),
            fit: FitConfig::default(),
        }
    }
}

/// Command-line values that override the configuration file.
#[derive(Clone, Debug, Default, clap::Args)]
pub struct RunArgs {
    /// Corpus directory (subject corpus for `compare`).
    #[arg(long)]
    pub input: Option<PathBuf>,
    /// Reference corpus directory.
    #[arg(long)]
    pub reference: Option<PathBuf>,
    /// Output directory.
    #[arg(long)]
    pub output: Option<PathBuf>,
    /// Side of the centered square crop.
    #[arg(long)]
    pub crop: Option<usize>,
    #[arg(long, value_enum)]
    pub denoiser: Option<DenoiserArg>,
    /// Denoiser strength (Gaussian sigma, bilateral spatial sigma).
    #[arg(long)]
    pub strength: Option<f64>,
    #[arg(long, value_enum)]
    pub profiles_on: Option<ProfileSource>,
    /// Use at most this many images, in file-name order.
    #[arg(long)]
    pub max_images: Option<usize>,
    /// Worker threads; 0 uses every core.
    #[arg(long)]
    pub threads: Option<usize>,
    #[arg(long)]
    pub no_plots: bool,
    /// JSON configuration file; flags take precedence.
    #[arg(long)]
    pub config: Option<PathBuf>,
}

impl RunConfig {
    pub fn from_json(text: &str) -> Result<Self, CliError> {
        serde_json::from_str(text).map_err(|e| CliError::Input(format!("config: {e}")))
    }

    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = fs::read_to_string(path)
            .map_err(|e| CliError::Input(format!("cannot read config {}: {e}", path.display())))?;
        Self::from_json(&text)
    }

    /// Configuration file (or defaults) with `args` applied on top.
    pub fn resolve(args: &RunArgs) -> Result<Self, CliError> {
        let mut cfg = match &args.config {
            Some(path) => Self::load(path)?,
            None => Self::default(),
        };
        cfg.apply(args)?;
        Ok(cfg)
    }

    pub fn apply(&mut self, args: &RunArgs) -> Result<(), CliError> {
        if let Some(p) = &args.input {
            self.input = Some(p.clone());
        }
        if let Some(p) = &args.reference {
            self.reference = Some(p.clone());
        }
        if let Some(p) = &args.output {
            self.output = Some(p.clone());
        }
        if let Some(c) = args.crop {
            self.crop = c;
        }
        if let Some(kind) = args.denoiser {
            let base = self.denoiser.clone().unwrap_or_default();
            self.denoiser = match kind {
                DenoiserArg::None => None,
                DenoiserArg::Gaussian => Some(DenoiserSpec {
                    kind: DenoiserKind::Gaussian,
                    ..base
                }),
                DenoiserArg::Median => Some(DenoiserSpec {
                    kind: DenoiserKind::Median,
                    ..base
                }),
                DenoiserArg::BilateralLite => Some(DenoiserSpec {
                    kind: DenoiserKind::BilateralLite,
                    ..base
                }),
            };
        }
        if let Some(s) = args.strength {
            match &mut self.denoiser {
                Some(d) => d.strength = s,
                None => return Err(CliError::Input("--strength given but the denoiser is none".into())),
            }
        }
        if let Some(p) = args.profiles_on {
            self.profiles_on = p;
        }
        if let Some(m) = args.max_images {
            self.max_images = m;
        }
        if let Some(t) = args.threads {
            self.threads = t;
        }
        if args.no_plots {
            self.plots = false;
        }
        Ok(())
    }

    /// Checks ranges and path requirements; `compare` also needs a reference.
    pub fn validate(&self, compare: bool) -> Result<(), CliError> {
        let bad = |m: String| Err(CliError::Input(m));
        let Some(input) = &self.input else {
            return bad("--input is required".into());
        };
        let Some(output) = &self.output else {
            return bad("--output is required".into());
        };
        if same_path(input, output) {
            return bad("input and output must be different directories".into());
        }
        match (&self.reference, compare) {
            (None, true) => return bad("--reference is required for compare".into()),
            (Some(r), true) => {
                if same_path(r, input) || same_path(r, output) {
                    return bad("reference must differ from input and output".into());
                }
            }
            (Some(_), false) => return bad("--reference is only valid for compare".into()),
            (None, false) => {}
        }
        if self.crop < 2 {
            return bad(format!("crop must be >= 2, got {}", self.crop));
        }
        if self.max_images == 0 {
            return bad("max_images must be >= 1".into());
        }
        if self.min_usable == 0 {
            return bad("min_usable must be >= 1".into());
        }
        if let Some(d) = &self.denoiser {
            d.validate().map_err(|e| CliError::Input(e.to_string()))?;
        }
        if matches!(&self.decoder, Some(c) if c.is_empty()) {
            return bad("decoder command is empty".into());
        }
        let det = &self.detector;
        if det.neighborhood < 3 || det.neighborhood % 2 == 0 {
            return bad(format!("detector.neighborhood must be odd and >= 3, got {}", det.neighborhood));
        }
        if !(det.min_prominence.is_finite() && det.min_prominence > 0.0) {
            return bad("detector.min_prominence must be > 0".into());
        }
        if det.candidates.is_empty() || det.candidates.iter().any(|&c| c < 2) {
            return bad("detector.candidates must be non-empty factors >= 2".into());
        }
        if !(det.lattice_threshold.is_finite() && det.lattice_threshold > 0.0) {
            return bad("detector.lattice_threshold must be > 0".into());
        }
        let fit = &self.fit;
        if !(fit.rho_min > 0.0 && fit.rho_min < fit.rho_max && fit.rho_max <= 0.5) {
            return bad(format!(
                "fit range must satisfy 0 < rho_min < rho_max <= 0.5, got [{}, {}]",
                fit.rho_min, fit.rho_max
            ));
        }
        Ok(())
    }
}

fn same_path(a: &Path, b: &Path) -> bool {
    match (fs::canonicalize(a), fs::canonicalize(b)) {
        (Ok(x), Ok(y)) => x == y,
        _ => a == b,
    }
}
