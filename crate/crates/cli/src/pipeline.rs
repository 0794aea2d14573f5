//! One pass per image: summary grids and spectral profiles together.

use std::fs;
use std::path::{Path, PathBuf};

use synthprint::profiles::{image_profiles, AngularProfile, BinMoments, ProfileMode, RadialProfile};
use synthprint::residual::extract_residual;
use synthprint::stats::{
    fold_corpus, CorpusSpec, FileError, SpectralSummary, SummaryAccumulator, SummaryConfig, SummaryOptions,
};
use synthprint::{Error, ImageF, Result};

use crate::config::{ProfileSource, RunConfig};

/// File extensions picked up from a corpus directory (case-insensitive).
pub const IMAGE_EXTENSIONS: [&str; 10] = ["pgm", "ppm", "pnm", "png", "jpg", "jpeg", "bmp", "tif", "tiff", "webp"];

/// Image files of `dir` sorted by file name.
pub fn list_images(dir: &Path) -> Result<Vec<PathBuf>> {
    let mut paths = Vec::new();
    for entry in fs::read_dir(dir)? {
        let path = entry?.path();
        let is_image = path
            .extension()
            .and_then(|e| e.to_str())
            .is_some_and(|e| IMAGE_EXTENSIONS.contains(&e.to_ascii_lowercase().as_str()));
        if is_image && path.is_file() {
            paths.push(path);
        }
    }
    paths.sort_by(|a, b| a.file_name().cmp(&b.file_name()));
    Ok(paths)
}

#[derive(Clone, Debug)]
pub struct CorpusAnalysis {
    pub summary: SpectralSummary,
    pub radial: RadialProfile,
    pub angular: AngularProfile,
    pub errors: Vec<FileError>,
    /// Files considered after the `max_images` cut.
    pub selected: usize,
}

struct ImageStats {
    summary: SummaryAccumulator,
    radial: BinMoments,
    angular: BinMoments,
}

fn plane_average(profiles: &[Vec<Option<f64>>]) -> Vec<Option<f64>> {
    if profiles.len() == 1 {
        return profiles[0].clone();
    }
    let n = profiles.len() as f64;
    (0..profiles[0].len())
        .map(|j| {
            profiles
                .iter()
                .map(|p| p[j])
                .sum::<Option<f64>>()
                .map(|s| s / n)
        })
        .collect()
}

fn image_stats(
    planes: &[ImageF],
    options: &SummaryOptions,
    source: ProfileSource,
    mode: ProfileMode,
) -> Result<ImageStats> {
    let residuals = match &options.residual {
        Some(spec) => Some(
            planes
                .iter()
                .map(|p| extract_residual(p, spec).map(|r| r.residual))
                .collect::<Result<Vec<_>>>()?,
        ),
        None => None,
    };
    let stat_planes = residuals.as_deref().unwrap_or(planes);
    let precomputed = SummaryOptions {
        residual: None,
        remove_mean: options.remove_mean,
    };
    let summary = SummaryAccumulator::from_planes(stat_planes, &precomputed)?;
    let profile_planes = match source {
        ProfileSource::Raw => planes,
        ProfileSource::Residual => stat_planes,
    };
    let mut radial = Vec::with_capacity(profile_planes.len());
    let mut angular = Vec::with_capacity(profile_planes.len());
    for plane in profile_planes {
        let (r, a) = image_profiles(plane, mode)?;
        radial.push(r);
        angular.push(a);
    }
    Ok(ImageStats {
        summary,
        radial: BinMoments::from_profile(&plane_average(&radial)),
        angular: BinMoments::from_profile(&plane_average(&angular)),
    })
}

/// Corpus description used for `dir` under `cfg`.
pub fn corpus_spec(cfg: &RunConfig, dir: &Path) -> Result<CorpusSpec> {
    let paths = list_images(dir)?;
    if paths.is_empty() {
        return Err(Error::Corpus(format!("no image files in {}", dir.display())));
    }
    Ok(CorpusSpec {
        paths,
        crop: cfg.crop,
        options: SummaryOptions {
            residual: cfg.denoiser.clone(),
            remove_mean: cfg.remove_mean,
        },
        max_images: cfg.max_images,
        channel_mode: cfg.channel_mode,
        min_usable: cfg.min_usable,
        threads: cfg.threads,
        decoder: cfg.decoder.clone(),
    })
}

/// Averages the corpus in `dir`. Output does not depend on `cfg.threads`.
pub fn analyze_corpus(cfg: &RunConfig, dir: &Path) -> Result<CorpusAnalysis> {
    let spec = corpus_spec(cfg, dir)?;
    let run = fold_corpus(
        &spec,
        |planes| image_stats(planes, &spec.options, cfg.profiles_on, cfg.profile_mode),
        |a, b| {
            Ok(ImageStats {
                summary: a.summary.merge(b.summary)?,
                radial: a.radial.merge(&b.radial),
                angular: a.angular.merge(&b.angular),
            })
        },
    )?;
    let stats = run.value;
    let count = stats.summary.count();
    let summary = stats.summary.finish(SummaryConfig {
        options: spec.options.clone(),
        channel_mode: spec.channel_mode,
    });
    let (w, h) = (summary.width(), summary.height());
    Ok(CorpusAnalysis {
        radial: RadialProfile::from_moments(&stats.radial, cfg.profile_mode, w, h, count),
        angular: AngularProfile::from_moments(&stats.angular, w, h, count),
        summary,
        errors: run.errors,
        selected: spec.selected().len(),
    })
}
