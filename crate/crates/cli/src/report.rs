//! `report.json` schema and the files written next to it.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use serde::{Deserialize, Serialize};
use synthprint::detect::{infer_upsampling_with, jpeg_grid_score, GridScore, PeakReport};
use synthprint::dsp::fftshift;
use synthprint::profiles::{fisher_profile, fit_power_law, AngularProfile, FisherProfile, PowerLawFit, RadialProfile};
use synthprint::residual::{DenoiserKind, DenoiserSpec};
use synthprint::stats::{autocorr_crop, grid_to_csv, read_summary, write_summary, FileError, SpectralSummary};
use synthprint::{Error, RealGrid};

use crate::config::RunConfig;
use crate::pipeline::{analyze_corpus, CorpusAnalysis};
use crate::{svg, CliError};

pub const SCHEMA_VERSION: u32 = 1;
pub const REPORT_FILE: &str = "report.json";
pub const SUMMARY_STEM: &str = "summary";
/// Side of the autocorrelation crop written to CSV and plotted.
pub const AUTOCORR_CROP: usize = 65;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CorpusInfo {
    pub directory: String,
    pub selected: usize,
    pub usable: usize,
    pub width: usize,
    pub height: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SummaryRef {
    /// Summary envelope, relative to the report.
    pub file: String,
    pub norm_constant: f64,
    pub image_count: usize,
    pub power_mean: f64,
    pub autocorr_zero_lag: f64,
    pub autocorr_crop_file: String,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Timing {
    pub threads: usize,
    pub elapsed_seconds: f64,
}

/// Everything an `analyze` or `compare` run found. Undefined numbers are
/// `null`; `notes` says why an optional section is missing.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Report {
    pub schema_version: u32,
    pub command: String,
    pub config: RunConfig,
    pub corpus: CorpusInfo,
    pub reference: Option<CorpusInfo>,
    pub summary: SummaryRef,
    pub radial: RadialProfile,
    pub angular: AngularProfile,
    pub fisher: Option<FisherProfile>,
    pub peaks: PeakReport,
    pub grid: Option<GridScore>,
    pub power_law: Option<PowerLawFit>,
    pub notes: Vec<String>,
    pub errors: Vec<FileError>,
    pub timing: Timing,
}

impl Report {
    pub fn to_json(&self) -> Result<String, CliError> {
        let mut s = serde_json::to_string_pretty(self).map_err(|e| CliError::Internal(e.to_string()))?;
        s.push('\n');
        Ok(s)
    }

    pub fn from_json(text: &str) -> Result<Self, CliError> {
        serde_json::from_str(text).map_err(|e| CliError::Input(format!("report: {e}")))
    }

    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = fs::read_to_string(path)
            .map_err(|e| CliError::Input(format!("cannot read {}: {e}", path.display())))?;
        Self::from_json(&text)
    }
}

fn corpus_info(dir: &Path, a: &CorpusAnalysis) -> CorpusInfo {
    CorpusInfo {
        directory: dir.display().to_string(),
        selected: a.selected,
        usable: a.summary.image_count,
        width: a.summary.width(),
        height: a.summary.height(),
    }
}

fn input_error(e: Error) -> CliError {
    CliError::Input(e.to_string())
}

fn internal(e: impl std::fmt::Display) -> CliError {
    CliError::Internal(e.to_string())
}

/// Largest odd crop not exceeding `AUTOCORR_CROP` or the grid.
fn crop_side(summary: &SpectralSummary) -> usize {
    let m = AUTOCORR_CROP.min(summary.width()).min(summary.height());
    if m % 2 == 0 {
        m - 1
    } else {
        m
    }
}

/// Runs `analyze` (no reference) or `compare` and writes every output.
pub fn run_analysis(cfg: &RunConfig, compare: bool) -> Result<Report, CliError> {
    cfg.validate(compare)?;
    let start = Instant::now();
    let input = cfg.input.as_deref().expect("validated");
    let output = cfg.output.as_deref().expect("validated");
    let subject = analyze_corpus(cfg, input).map_err(input_error)?;
    let mut notes = standing_notes(cfg, compare);

    let (reference, fisher) = if compare {
        let ref_dir = cfg.reference.as_deref().expect("validated");
        let reference = analyze_corpus(cfg, ref_dir).map_err(input_error)?;
        if (reference.summary.width(), reference.summary.height()) != (subject.summary.width(), subject.summary.height()) {
            return Err(CliError::Input(format!(
                "geometry mismatch: subject {}x{}, reference {}x{}",
                subject.summary.width(),
                subject.summary.height(),
                reference.summary.width(),
                reference.summary.height()
            )));
        }
        let fisher = fisher_profile(
            &subject.angular,
            &reference.angular,
            &input.display().to_string(),
            &ref_dir.display().to_string(),
        )
        .map_err(input_error)?;
        (Some(corpus_info(ref_dir, &reference)), Some(fisher))
    } else {
        (None, None)
    };

    let det = &cfg.detector;
    let peaks = infer_upsampling_with(
        &subject.summary,
        &det.candidates,
        det.lattice_threshold,
        det.neighborhood,
        det.min_prominence,
    )
    .map_err(input_error)?;
    let grid = match jpeg_grid_score(&subject.summary) {
        Ok(g) => Some(g),
        Err(e) => {
            notes.push(format!("grid score unavailable: {e}"));
            None
        }
    };
    let power_law = match fit_power_law(&subject.radial, cfg.fit.rho_min, cfg.fit.rho_max) {
        Ok(f) => Some(f),
        Err(e) => {
            notes.push(format!("power-law fit unavailable: {e}"));
            None
        }
    };
    if subject.summary.image_count < 2 {
        notes.push("single usable image: profile variances are undefined".into());
    }

    fs::create_dir_all(output).map_err(internal)?;
    write_summary(&subject.summary, output, SUMMARY_STEM).map_err(internal)?;
    let side = crop_side(&subject.summary);
    let crop = autocorr_crop(&subject.summary, side).map_err(internal)?;
    let crop_file = format!("autocorr_crop{side}.csv");
    write(output, &crop_file, &grid_to_csv(&crop))?;
    write(output, "power.csv", &grid_to_csv(&subject.summary.avg_power))?;
    write(output, "autocorr.csv", &grid_to_csv(&subject.summary.avg_autocorr))?;
    write(output, "radial.csv", &profile_csv("rho", &subject.radial.centers, &subject.radial.mean, &subject.radial.variance, &subject.radial.population))?;
    write(output, "angular.csv", &profile_csv("theta", &subject.angular.centers, &subject.angular.mean, &subject.angular.variance, &subject.angular.population))?;
    if let Some(f) = &fisher {
        write(output, "fisher.csv", &fisher_csv(f))?;
    }

    let report = Report {
        schema_version: SCHEMA_VERSION,
        command: if compare { "compare" } else { "analyze" }.to_string(),
        config: cfg.clone(),
        corpus: corpus_info(input, &subject),
        reference,
        summary: SummaryRef {
            file: format!("{SUMMARY_STEM}.json"),
            norm_constant: subject.summary.norm_constant,
            image_count: subject.summary.image_count,
            power_mean: subject.summary.avg_power.mean(),
            autocorr_zero_lag: subject.summary.avg_autocorr.get(0, 0),
            autocorr_crop_file: crop_file,
        },
        radial: subject.radial,
        angular: subject.angular,
        fisher,
        peaks,
        grid,
        power_law,
        notes,
        errors: subject.errors,
        timing: Timing {
            threads: cfg.threads,
            elapsed_seconds: start.elapsed().as_secs_f64(),
        },
    };
    if cfg.plots {
        render_plots(&report, &subject.summary, &crop, output)?;
    }
    write(output, REPORT_FILE, &report.to_json()?)?;
    Ok(report)
}

/// Conventions every report states, whatever the data.
fn standing_notes(cfg: &RunConfig, compare: bool) -> Vec<String> {
    let mut notes = vec![
        "peak, lattice and grid thresholds are toolkit conventions calibrated on synthetic fixtures".to_string(),
        "the DC bin is excluded from every radial and angular bin".to_string(),
    ];
    if let Some(DenoiserSpec { kind: DenoiserKind::Gaussian, strength, .. }) = &cfg.denoiser {
        notes.push(format!(
            "gaussian denoiser strength {strength} is a heuristic stand-in for a learned denoiser's noise level"
        ));
    }
    if compare {
        notes.push("fisher values are the signed ratio (mean_s - mean_0) / sqrt(var_s + var_0)".into());
    }
    notes
}

fn write(dir: &Path, name: &str, contents: &str) -> Result<(), CliError> {
    fs::write(dir.join(name), contents).map_err(|e| CliError::Internal(format!("cannot write {name}: {e}")))
}

fn opt(v: Option<f64>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

/// Undefined values are empty fields.
pub fn profile_csv(axis: &str, centers: &[f64], mean: &[Option<f64>], variance: &[Option<f64>], population: &[usize]) -> String {
    let mut s = format!("{axis},mean,variance,population\n");
    for j in 0..centers.len() {
        let _ = writeln!(s, "{},{},{},{}", centers[j], opt(mean[j]), opt(variance[j]), population[j]);
    }
    s
}

pub fn fisher_csv(f: &FisherProfile) -> String {
    let mut s = String::from("theta,fisher\n");
    for (t, v) in f.centers.iter().zip(&f.values) {
        let _ = writeln!(s, "{t},{}", opt(*v));
    }
    s
}

/// Plot file names written by [`render_plots`].
pub const PLOT_FILES: [&str; 5] = ["power_spectrum.svg", "autocorr.svg", "radial.svg", "angular.svg", "fisher.svg"];

/// Writes the SVG charts for `report`; `fisher.svg` only for comparisons.
pub fn render_plots(report: &Report, summary: &SpectralSummary, crop: &RealGrid, dir: &Path) -> Result<Vec<PathBuf>, CliError> {
    let mut files = vec![
        (PLOT_FILES[0], svg::power_heatmap(&fftshift(&summary.avg_power))),
        (PLOT_FILES[1], svg::autocorr_heatmap(crop)),
        (PLOT_FILES[2], svg::radial_plot(&report.radial, report.power_law.as_ref())),
        (PLOT_FILES[3], svg::angular_plot(&report.angular)),
    ];
    if let Some(f) = &report.fisher {
        files.push((PLOT_FILES[4], svg::fisher_polar(f)));
    }
    fs::create_dir_all(dir).map_err(internal)?;
    let mut paths = Vec::new();
    for (name, body) in files {
        write(dir, name, &body)?;
        paths.push(dir.join(name));
    }
    Ok(paths)
}

/// `report` subcommand: re-renders the plots of an existing report.
pub fn rerender(report_path: &Path, output: Option<&Path>) -> Result<Vec<PathBuf>, CliError> {
    let report = Report::load(report_path)?;
    if report.schema_version != SCHEMA_VERSION {
        return Err(CliError::Input(format!(
            "unsupported report schema version {}",
            report.schema_version
        )));
    }
    let base = report_path.parent().unwrap_or(Path::new("."));
    let summary = read_summary(&base.join(&report.summary.file)).map_err(input_error)?;
    let crop = autocorr_crop(&summary, crop_side(&summary)).map_err(input_error)?;
    render_plots(&report, &summary, &crop, output.unwrap_or(base))
}
