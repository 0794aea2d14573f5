//! Corpus-level averaging of power spectra and autocorrelations.
//!
//! Each image contributes `|X(k,l)|^2` and its circular autocorrelation; the
//! corpus summary is the arithmetic mean over images, normalized so that the
//! mean bin of the averaged power spectrum is 1. The same power-per-pixel
//! constant scales the autocorrelation, expressed per pixel (divided by
//! `M N`), which makes the normalized pair satisfy
//! `DFT(avg_autocorr) = avg_power` and `avg_autocorr(0,0) = 1`.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::Command;

use serde::{Deserialize, Serialize};

use crate::dsp::{second_order, RealGrid, Shift};
use crate::imgio::{center_crop, parse_pnm, ImageF, Pixels};
use crate::reduce::{add_assign, tree_map_reduce, with_threads};
use crate::residual::{extract_residual, DenoiserSpec};
use crate::{Error, Result};

/// Number of images averaged when the caller does not set a limit.
pub const DEFAULT_MAX_IMAGES: usize = 1000;

/// How color inputs are reduced to single-channel planes.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ChannelMode {
    /// BT.601 luminance.
    #[default]
    Luminance,
    /// Statistics computed per channel and averaged over the three channels.
    PerChannel,
}

/// Per-image processing applied before the second-order statistics.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SummaryOptions {
    pub residual: Option<DenoiserSpec>,
    pub remove_mean: bool,
}

impl Default for SummaryOptions {
    fn default() -> Self {
        Self {
            residual: Some(DenoiserSpec::default()),
            remove_mean: true,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CorpusSpec {
    pub paths: Vec<PathBuf>,
    pub crop: usize,
    pub options: SummaryOptions,
    pub max_images: usize,
    pub channel_mode: ChannelMode,
    /// Minimum number of usable images for the run to succeed.
    pub min_usable: usize,
    /// Worker threads (0 = all available). Never changes results.
    pub threads: usize,
    /// Command used for non-Netpbm files; receives the path as last argument
    /// and must print a PGM/PPM on stdout.
    pub decoder: Option<Vec<String>>,
}

impl CorpusSpec {
    pub fn new(paths: Vec<PathBuf>, crop: usize) -> Self {
        Self {
            paths,
            crop,
            options: SummaryOptions::default(),
            max_images: DEFAULT_MAX_IMAGES,
            channel_mode: ChannelMode::default(),
            min_usable: 1,
            threads: 0,
            decoder: None,
        }
    }

    /// Paths actually used: the first `max_images` entries.
    pub fn selected(&self) -> &[PathBuf] {
        &self.paths[..self.paths.len().min(self.max_images)]
    }

    pub fn validate(&self) -> Result<()> {
        if self.max_images == 0 {
            return Err(Error::InvalidParameter("max_images must be >= 1".into()));
        }
        if self.crop == 0 {
            return Err(Error::InvalidParameter("crop size must be >= 1".into()));
        }
        if let Some(d) = &self.options.residual {
            d.validate()?;
        }
        Ok(())
    }
}

/// Per-file failure collected during a corpus pass.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct FileError {
    pub path: String,
    pub message: String,
}

/// Settings echoed into every summary.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SummaryConfig {
    pub options: SummaryOptions,
    pub channel_mode: ChannelMode,
}

#[derive(Clone, Debug, PartialEq)]
pub struct SpectralSummary {
    /// Normalized averaged power spectrum (mean bin = 1).
    pub avg_power: RealGrid,
    /// Normalized averaged circular autocorrelation, lag `(0,0)` at index 0.
    pub avg_autocorr: RealGrid,
    /// Mean bin of the unnormalized averaged power spectrum.
    pub norm_constant: f64,
    pub image_count: usize,
    pub config: SummaryConfig,
}

impl SpectralSummary {
    pub fn width(&self) -> usize {
        self.avg_power.width
    }

    pub fn height(&self) -> usize {
        self.avg_power.height
    }

    /// Averaged power spectrum before normalization.
    pub fn unnormalized_power(&self) -> RealGrid {
        if self.norm_constant > 0.0 {
            self.avg_power.scaled(self.norm_constant)
        } else {
            self.avg_power.clone()
        }
    }
}

/// Running sums of per-image statistics; combine with [`SummaryAccumulator::merge`].
#[derive(Clone, Debug)]
pub struct SummaryAccumulator {
    width: usize,
    height: usize,
    power_sum: Vec<f64>,
    autocorr_sum: Vec<f64>,
    count: usize,
}

impl SummaryAccumulator {
    /// Statistics of one image, given as one or more same-size planes whose
    /// statistics are averaged.
    pub fn from_planes(planes: &[ImageF], options: &SummaryOptions) -> Result<Self> {
        let first = planes
            .first()
            .ok_or_else(|| Error::InvalidParameter("image with no planes".into()))?;
        let (w, h) = (first.width(), first.height());
        let mut power = vec![0.0; w * h];
        let mut acf = vec![0.0; w * h];
        for plane in planes {
            if plane.width() != w || plane.height() != h {
                return Err(Error::Geometry("planes of different sizes".into()));
            }
            let source = match &options.residual {
                Some(spec) => extract_residual(plane, spec)?.residual,
                None => plane.clone(),
            };
            let so = second_order(&source, options.remove_mean);
            add_assign(&mut power, &so.power.values);
            add_assign(&mut acf, &so.autocorr.values);
        }
        if planes.len() > 1 {
            let inv = 1.0 / planes.len() as f64;
            power.iter_mut().chain(acf.iter_mut()).for_each(|v| *v *= inv);
        }
        Ok(Self {
            width: w,
            height: h,
            power_sum: power,
            autocorr_sum: acf,
            count: 1,
        })
    }

    pub fn count(&self) -> usize {
        self.count
    }

    pub fn merge(mut self, other: Self) -> Result<Self> {
        if (self.width, self.height) != (other.width, other.height) {
            return Err(Error::Geometry(format!(
                "cannot merge {}x{} with {}x{} statistics",
                self.width, self.height, other.width, other.height
            )));
        }
        add_assign(&mut self.power_sum, &other.power_sum);
        add_assign(&mut self.autocorr_sum, &other.autocorr_sum);
        self.count += other.count;
        Ok(self)
    }

    /// Averages and normalizes.
    pub fn finish(self, config: SummaryConfig) -> SpectralSummary {
        let inv = 1.0 / self.count as f64;
        let mut power: Vec<f64> = self.power_sum.iter().map(|v| v * inv).collect();
        let mut acf: Vec<f64> = self.autocorr_sum.iter().map(|v| v * inv).collect();
        let mn = (self.width * self.height) as f64;
        let norm_constant = power.iter().sum::<f64>() / mn;
        if norm_constant > 0.0 {
            let per_pixel = norm_constant / mn;
            power.iter_mut().for_each(|v| *v /= norm_constant);
            acf.iter_mut().for_each(|v| *v /= per_pixel);
        }
        SpectralSummary {
            avg_power: RealGrid {
                width: self.width,
                height: self.height,
                values: power,
            },
            avg_autocorr: RealGrid {
                width: self.width,
                height: self.height,
                values: acf,
            },
            norm_constant,
            image_count: self.count,
            config,
        }
    }
}

/// Summary of in-memory images (no cropping or color handling).
pub fn summarize_images(
    images: &[ImageF],
    options: &SummaryOptions,
    threads: usize,
) -> Result<SpectralSummary> {
    let acc = with_threads(threads, || {
        tree_map_reduce(
            images.len(),
            |i| SummaryAccumulator::from_planes(std::slice::from_ref(&images[i]), options),
            |a, b| a?.merge(b?),
        )
    })
    .ok_or_else(|| Error::Corpus("no images".into()))??;
    Ok(acc.finish(SummaryConfig {
        options: options.clone(),
        channel_mode: ChannelMode::Luminance,
    }))
}

/// Reads an image file. Netpbm is decoded natively; other files go through
/// `decoder` when configured.
pub fn load_pixels(path: &Path, decoder: Option<&[String]>) -> Result<Pixels> {
    let bytes = fs::read(path)?;
    match parse_pnm(&bytes) {
        Err(Error::UnsupportedFormat(magic)) => {
            let Some((program, args)) = decoder.and_then(|d| d.split_first()) else {
                return Err(Error::UnsupportedFormat(magic));
            };
            let out = Command::new(program)
                .args(args)
                .arg(path)
                .output()
                .map_err(|e| Error::External(format!("spawning {program}: {e}")))?;
            if !out.status.success() {
                return Err(Error::External(format!(
                    "{program} exited with {}",
                    out.status
                )));
            }
            Ok(parse_pnm(&out.stdout)?.pixels)
        }
        other => Ok(other?.pixels),
    }
}

/// Converts decoded pixels to the planes analysed for one image, cropped.
pub fn prepare_planes(pixels: Pixels, crop: usize, mode: ChannelMode) -> Result<Vec<ImageF>> {
    let planes = match (pixels, mode) {
        (Pixels::Rgb(c), ChannelMode::PerChannel) => c.channels().to_vec(),
        (p, _) => vec![p.into_luminance()],
    };
    planes.iter().map(|p| center_crop(p, crop)).collect()
}

/// Loads and crops the `index`-th selected image of `spec`.
pub fn load_corpus_image(spec: &CorpusSpec, index: usize) -> Result<Vec<ImageF>> {
    let path = &spec.selected()[index];
    let pixels = load_pixels(path, spec.decoder.as_deref())?;
    prepare_planes(pixels, spec.crop, spec.channel_mode)
}

/// Outcome of a corpus pass: a value plus every per-file failure, in path order.
#[derive(Clone, Debug)]
pub struct CorpusRun<T> {
    pub value: T,
    pub errors: Vec<FileError>,
}

/// Folds per-image accumulators over the selected files of `spec` in fixed
/// tree order, collecting unreadable files instead of failing.
pub fn fold_corpus<A, F, M>(spec: &CorpusSpec, per_image: F, merge: M) -> Result<CorpusRun<A>>
where
    A: Send,
    F: Fn(&[ImageF]) -> Result<A> + Sync,
    M: Fn(A, A) -> Result<A> + Sync,
{
    spec.validate()?;
    let selected = spec.selected();
    if selected.is_empty() {
        return Err(Error::Corpus("corpus is empty".into()));
    }
    type Partial<A> = (Option<Result<A>>, Vec<FileError>, usize);
    let leaf = |i: usize| -> Partial<A> {
        match load_corpus_image(spec, i).and_then(|planes| per_image(&planes)) {
            Ok(a) => (Some(Ok(a)), Vec::new(), 1),
            Err(e) => (
                None,
                vec![FileError {
                    path: selected[i].display().to_string(),
                    message: e.to_string(),
                }],
                0,
            ),
        }
    };
    let combine = |(a, mut ea, na): Partial<A>, (b, eb, nb): Partial<A>| -> Partial<A> {
        ea.extend(eb);
        let merged = match (a, b) {
            (Some(Ok(a)), Some(Ok(b))) => Some(merge(a, b)),
            (Some(Err(e)), _) | (_, Some(Err(e))) => Some(Err(e)),
            (a, None) => a,
            (None, b) => b,
        };
        (merged, ea, na + nb)
    };
    let (acc, errors, usable) = with_threads(spec.threads, || {
        tree_map_reduce(selected.len(), leaf, combine)
    })
    .expect("non-empty corpus");
    if usable < spec.min_usable.max(1) {
        let detail = errors
            .first()
            .map(|e| format!(" (first failure: {}: {})", e.path, e.message))
            .unwrap_or_default();
        return Err(Error::Corpus(format!(
            "{usable} usable images, {} required{detail}",
            spec.min_usable.max(1)
        )));
    }
    let value = acc.expect("usable > 0")?;
    Ok(CorpusRun { value, errors })
}

/// Loads the corpus described by `spec` and averages its second-order
/// statistics.
pub fn corpus_summary(spec: &CorpusSpec) -> Result<CorpusRun<SpectralSummary>> {
    let run = fold_corpus(
        spec,
        |planes| SummaryAccumulator::from_planes(planes, &spec.options),
        |a, b| a.merge(b),
    )?;
    Ok(CorpusRun {
        value: run.value.finish(SummaryConfig {
            options: spec.options.clone(),
            channel_mode: spec.channel_mode,
        }),
        errors: run.errors,
    })
}

/// `size x size` window of `grid` centered on bin `(floor(M/2), floor(N/2))`
/// of its fftshifted version, i.e. on the zero lag/frequency.
pub fn centered_crop(grid: &RealGrid, size: usize) -> Result<RealGrid> {
    if size % 2 == 0 {
        return Err(Error::InvalidParameter(format!("crop size {size} must be odd")));
    }
    if size > grid.width || size > grid.height {
        return Err(Error::Geometry(format!(
            "crop {size} larger than {}x{} grid",
            grid.width, grid.height
        )));
    }
    let shifted = grid.fftshift();
    let half = size / 2;
    let (r0, c0) = (grid.height / 2 - half, grid.width / 2 - half);
    let mut values = Vec::with_capacity(size * size);
    for r in r0..r0 + size {
        values.extend_from_slice(&shifted.values[r * grid.width + c0..r * grid.width + c0 + size]);
    }
    RealGrid::new(size, size, values)
}

/// Zero-lag-centered crop of the averaged autocorrelation; lags run over
/// `[-size/2, size/2]` on each axis.
pub fn autocorr_crop(summary: &SpectralSummary, size: usize) -> Result<RealGrid> {
    centered_crop(&summary.avg_autocorr, size)
}

/// JSON envelope of a serialized summary; grids live in sidecar files.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SummaryEnvelope {
    pub width: usize,
    pub height: usize,
    pub norm_constant: f64,
    pub image_count: usize,
    pub config: SummaryConfig,
    /// Sidecar with row-major little-endian f64 power values.
    pub power_file: String,
    /// Sidecar with row-major little-endian f64 autocorrelation values.
    pub autocorr_file: String,
}

fn grid_bytes(grid: &RealGrid) -> Vec<u8> {
    grid.values.iter().flat_map(|v| v.to_le_bytes()).collect()
}

fn read_grid(path: &Path, width: usize, height: usize) -> Result<RealGrid> {
    let bytes = fs::read(path)?;
    if bytes.len() != width * height * 8 {
        return Err(Error::Format {
            offset: bytes.len(),
            message: format!("{} holds {} bytes, expected {}", path.display(), bytes.len(), width * height * 8),
        });
    }
    let values = bytes
        .chunks_exact(8)
        .map(|c| f64::from_le_bytes(c.try_into().expect("8-byte chunk")))
        .collect();
    RealGrid::new(width, height, values)
}

/// Writes `<stem>.json`, `<stem>_power.f64` and `<stem>_autocorr.f64` into
/// `dir`; returns the envelope path.
pub fn write_summary(summary: &SpectralSummary, dir: &Path, stem: &str) -> Result<PathBuf> {
    fs::create_dir_all(dir)?;
    let envelope = SummaryEnvelope {
        width: summary.width(),
        height: summary.height(),
        norm_constant: summary.norm_constant,
        image_count: summary.image_count,
        config: summary.config.clone(),
        power_file: format!("{stem}_power.f64"),
        autocorr_file: format!("{stem}_autocorr.f64"),
    };
    fs::write(dir.join(&envelope.power_file), grid_bytes(&summary.avg_power))?;
    fs::write(dir.join(&envelope.autocorr_file), grid_bytes(&summary.avg_autocorr))?;
    let path = dir.join(format!("{stem}.json"));
    let mut json = serde_json::to_string_pretty(&envelope)?;
    json.push('\n');
    fs::write(&path, json)?;
    Ok(path)
}

/// Inverse of [`write_summary`].
pub fn read_summary(envelope_path: &Path) -> Result<SpectralSummary> {
    let envelope: SummaryEnvelope = serde_json::from_slice(&fs::read(envelope_path)?)?;
    let dir = envelope_path.parent().unwrap_or(Path::new("."));
    Ok(SpectralSummary {
        avg_power: read_grid(&dir.join(&envelope.power_file), envelope.width, envelope.height)?,
        avg_autocorr: read_grid(&dir.join(&envelope.autocorr_file), envelope.width, envelope.height)?,
        norm_constant: envelope.norm_constant,
        image_count: envelope.image_count,
        config: envelope.config,
    })
}

/// One CSV line per grid row; values in shortest round-trip form.
pub fn grid_to_csv(grid: &RealGrid) -> String {
    let mut out = String::with_capacity(grid.values.len() * 20);
    for row in grid.values.chunks_exact(grid.width) {
        for (i, v) in row.iter().enumerate() {
            if i > 0 {
                out.push(',');
            }
            let _ = write!(out, "{v}");
        }
        out.push('\n');
    }
    out
}
