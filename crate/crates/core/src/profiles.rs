//! Radial and angular spectral densities, the per-direction Fisher
//! discriminant profile between two corpora, and power-law fitting of radial
//! profiles.
//!
//! Every image is divided by its own standard deviation before its DFT is
//! taken, so profiles are invariant to positive rescaling of the input.
//!
//! Frequency pairs are `(f_u, f_v) = (l/N, k/M)` folded to `[-0.5, 0.5)`;
//! `f_u` is horizontal (along columns). The DC bin is never binned.
//!
//! - Radial bins: 128 centers `rho_j = (j+1)/256`, `j = 0..127`; each pair
//!   goes to the nearest center. Pairs with radius beyond the last bin's
//!   upper half-step (`rho >= 0.5 + 1/512`, the corners) are not retained.
//! - Angular bins: 16 centers `theta_j = j*pi/16`; pairs with
//!   `0.1 < rho <= 0.5` are retained and assigned by orientation folded to
//!   `[0, pi)` (the double cone), nearest center with wrap-around.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::dsp::{dft2, folded_frequency};
use crate::imgio::ImageF;
use crate::reduce::{tree_map_reduce, with_threads};
use crate::{Error, Result};

pub const RADIAL_BINS: usize = 128;
pub const ANGULAR_BINS: usize = 16;
/// Upper end of the radial axis (cycles per sample).
pub const RHO_MAX: f64 = 0.5;
/// Radius at or below which content is dropped from angular profiles.
pub const HIGHPASS_CUTOFF: f64 = 0.1;
/// Default fit window for the power-law exponent.
pub const FIT_RHO_MIN: f64 = 0.2;
pub const FIT_RHO_MAX: f64 = 0.5;

const RADIAL_STEP: f64 = RHO_MAX / RADIAL_BINS as f64;
const ANGULAR_STEP: f64 = PI / ANGULAR_BINS as f64;

/// Quantity averaged inside a bin.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ProfileMode {
    /// `|X|`
    #[default]
    Magnitude,
    /// `|X|^2`
    Power,
}

/// Center of radial bin `j`.
pub fn radial_center(j: usize) -> f64 {
    (j + 1) as f64 * RADIAL_STEP
}

/// Center of angular bin `j`.
pub fn angular_center(j: usize) -> f64 {
    j as f64 * ANGULAR_STEP
}

/// Radial bin of a frequency pair, or `None` when it is not retained.
pub fn radial_bin(fu: f64, fv: f64) -> Option<usize> {
    let rho = fu.hypot(fv);
    if rho == 0.0 {
        return None;
    }
    let j = ((rho / RADIAL_STEP).round() as isize - 1).max(0) as usize;
    (j < RADIAL_BINS).then_some(j)
}

/// Angular bin of a frequency pair (ignoring the radius window).
///
/// The pair is first mapped to the upper half plane (the double cone), then
/// pairs in the second quadrant are rotated by -90 degrees so the angle is
/// always measured in the first quadrant. This keeps the binning exactly
/// covariant under 90-degree rotations of a square image.
pub fn angular_bin(fu: f64, fv: f64) -> usize {
    let (mut a, mut b) = (fu, fv);
    if b < 0.0 || (b == 0.0 && a < 0.0) {
        a = -a;
        b = -b;
    }
    let (x, y, offset) = if a > 0.0 { (a, b, 0) } else { (b, -a, ANGULAR_BINS / 2) };
    let phi = y.atan2(x);
    ((phi / ANGULAR_STEP).round() as usize + offset) % ANGULAR_BINS
}

fn angular_retained(fu: f64, fv: f64) -> bool {
    let rho = fu.hypot(fv);
    rho > HIGHPASS_CUTOFF && rho <= RHO_MAX
}

/// DFT of `img / std(img)`.
fn standardized_spectrum(img: &ImageF) -> Result<crate::dsp::ComplexGrid> {
    let first = img.data()[0];
    let var = img.variance();
    // A constant image can still show a rounding-level variance.
    if img.data().iter().all(|&v| v == first) || !(var > 0.0) {
        return Err(Error::Degenerate("image has zero variance".into()));
    }
    let inv_sd = 1.0 / var.sqrt();
    Ok(dft2(&img.map(|v| v * inv_sd)?))
}

/// Bin index per DFT bin for a `width x height` grid.
fn bin_map(width: usize, height: usize, f: impl Fn(f64, f64) -> Option<usize>) -> Vec<Option<usize>> {
    let mut map = Vec::with_capacity(width * height);
    for k in 0..height {
        let fv = folded_frequency(k, height);
        for l in 0..width {
            map.push(f(folded_frequency(l, width), fv));
        }
    }
    map
}

fn radial_map(width: usize, height: usize) -> Vec<Option<usize>> {
    bin_map(width, height, radial_bin)
}

fn angular_map(width: usize, height: usize) -> Vec<Option<usize>> {
    bin_map(width, height, |fu, fv| angular_retained(fu, fv).then(|| angular_bin(fu, fv)))
}

/// Number of retained DFT bins per radial bin.
pub fn radial_population(width: usize, height: usize) -> Vec<usize> {
    population(&radial_map(width, height), RADIAL_BINS)
}

/// Number of retained DFT bins per angular bin.
pub fn angular_population(width: usize, height: usize) -> Vec<usize> {
    population(&angular_map(width, height), ANGULAR_BINS)
}

fn population(map: &[Option<usize>], bins: usize) -> Vec<usize> {
    let mut pop = vec![0; bins];
    for j in map.iter().flatten() {
        pop[*j] += 1;
    }
    pop
}

fn bin_average(values: impl Iterator<Item = f64>, map: &[Option<usize>], bins: usize) -> Vec<Option<f64>> {
    let mut sum = vec![0.0; bins];
    let mut count = vec![0usize; bins];
    for (v, j) in values.zip(map) {
        if let Some(j) = *j {
            sum[j] += v;
            count[j] += 1;
        }
    }
    sum.into_iter()
        .zip(count)
        .map(|(s, n)| (n > 0).then(|| s / n as f64))
        .collect()
}

/// Per-image radial spectrum (128 bins; `None` marks an empty bin).
pub fn radial_profile(img: &ImageF, mode: ProfileMode) -> Result<Vec<Option<f64>>> {
    let spec = standardized_spectrum(img)?;
    let map = radial_map(spec.width, spec.height);
    let values = spec.values.iter().map(|z| match mode {
        ProfileMode::Magnitude => z.norm(),
        ProfileMode::Power => z.norm_sqr(),
    });
    Ok(bin_average(values, &map, RADIAL_BINS))
}

/// Per-image angular spectrum (16 bins, magnitude of the high-passed,
/// standardized spectrum).
pub fn angular_profile(img: &ImageF) -> Result<Vec<Option<f64>>> {
    let spec = standardized_spectrum(img)?;
    let map = angular_map(spec.width, spec.height);
    Ok(bin_average(spec.values.iter().map(|z| z.norm()), &map, ANGULAR_BINS))
}

/// Radial and angular profiles of one image from a single transform.
pub fn image_profiles(img: &ImageF, mode: ProfileMode) -> Result<(Vec<Option<f64>>, Vec<Option<f64>>)> {
    let spec = standardized_spectrum(img)?;
    let (w, h) = (spec.width, spec.height);
    let radial = bin_average(
        spec.values.iter().map(|z| match mode {
            ProfileMode::Magnitude => z.norm(),
            ProfileMode::Power => z.norm_sqr(),
        }),
        &radial_map(w, h),
        RADIAL_BINS,
    );
    let angular = bin_average(spec.values.iter().map(|z| z.norm()), &angular_map(w, h), ANGULAR_BINS);
    Ok((radial, angular))
}

/// Per-bin count, mean and sum of squared deviations, merged with Chan's
/// pairwise update.
#[derive(Clone, Debug, PartialEq)]
pub struct BinMoments {
    count: Vec<usize>,
    mean: Vec<f64>,
    m2: Vec<f64>,
}

impl BinMoments {
    pub fn from_profile(profile: &[Option<f64>]) -> Self {
        Self {
            count: profile.iter().map(|v| usize::from(v.is_some())).collect(),
            mean: profile.iter().map(|v| v.unwrap_or(0.0)).collect(),
            m2: vec![0.0; profile.len()],
        }
    }

    pub fn merge(mut self, other: &Self) -> Self {
        for j in 0..self.mean.len() {
            let (na, nb) = (self.count[j], other.count[j]);
            if nb == 0 {
                continue;
            }
            if na == 0 {
                self.count[j] = nb;
                self.mean[j] = other.mean[j];
                self.m2[j] = other.m2[j];
                continue;
            }
            let n = (na + nb) as f64;
            let delta = other.mean[j] - self.mean[j];
            self.mean[j] += delta * nb as f64 / n;
            self.m2[j] += other.m2[j] + delta * delta * (na as f64) * (nb as f64) / n;
            self.count[j] = na + nb;
        }
        self
    }

    pub fn mean(&self) -> Vec<Option<f64>> {
        self.mean
            .iter()
            .zip(&self.count)
            .map(|(&m, &n)| (n > 0).then_some(m))
            .collect()
    }

    /// Unbiased sample variance; undefined below two samples.
    pub fn variance(&self) -> Vec<Option<f64>> {
        self.m2
            .iter()
            .zip(&self.count)
            .map(|(&m2, &n)| (n > 1).then(|| (m2 / (n - 1) as f64).max(0.0)))
            .collect()
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RadialProfile {
    pub centers: Vec<f64>,
    pub mean: Vec<Option<f64>>,
    /// Unbiased variance across images; `None` when undefined (fewer than two images).
    pub variance: Vec<Option<f64>>,
    /// Retained DFT bins per radial bin (per image).
    pub population: Vec<usize>,
    pub mode: ProfileMode,
    pub image_count: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AngularProfile {
    pub centers: Vec<f64>,
    pub mean: Vec<Option<f64>>,
    pub variance: Vec<Option<f64>>,
    pub population: Vec<usize>,
    pub highpass_cutoff: f64,
    pub image_count: usize,
}

impl RadialProfile {
    pub fn from_moments(m: &BinMoments, mode: ProfileMode, width: usize, height: usize, image_count: usize) -> Self {
        Self {
            centers: (0..RADIAL_BINS).map(radial_center).collect(),
            mean: m.mean(),
            variance: m.variance(),
            population: radial_population(width, height),
            mode,
            image_count,
        }
    }

    /// Profile with given means and no variance information (used by tests
    /// and for synthetic references).
    pub fn from_means(mean: Vec<Option<f64>>, mode: ProfileMode) -> Self {
        Self {
            centers: (0..RADIAL_BINS).map(radial_center).collect(),
            variance: vec![None; mean.len()],
            population: vec![0; mean.len()],
            mean,
            mode,
            image_count: 1,
        }
    }
}

impl AngularProfile {
    pub fn from_moments(m: &BinMoments, width: usize, height: usize, image_count: usize) -> Self {
        Self {
            centers: (0..ANGULAR_BINS).map(angular_center).collect(),
            mean: m.mean(),
            variance: m.variance(),
            population: angular_population(width, height),
            highpass_cutoff: HIGHPASS_CUTOFF,
            image_count,
        }
    }
}

fn check_same_size(images: &[ImageF]) -> Result<(usize, usize)> {
    let first = images.first().ok_or_else(|| Error::Corpus("no images".into()))?;
    let dims = (first.width(), first.height());
    if images.iter().any(|i| (i.width(), i.height()) != dims) {
        return Err(Error::Geometry("corpus images differ in size".into()));
    }
    Ok(dims)
}

fn corpus_moments(
    images: &[ImageF],
    threads: usize,
    per_image: impl Fn(&ImageF) -> Result<Vec<Option<f64>>> + Sync,
) -> Result<BinMoments> {
    with_threads(threads, || {
        tree_map_reduce(
            images.len(),
            |i| per_image(&images[i]).map(|p| BinMoments::from_profile(&p)),
            |a, b| Ok(a?.merge(&b?)),
        )
    })
    .ok_or_else(|| Error::Corpus("no images".into()))?
}

/// Per-bin mean and variance of radial profiles over a corpus.
pub fn corpus_radial(images: &[ImageF], mode: ProfileMode, threads: usize) -> Result<RadialProfile> {
    let (w, h) = check_same_size(images)?;
    let m = corpus_moments(images, threads, |img| radial_profile(img, mode))?;
    Ok(RadialProfile::from_moments(&m, mode, w, h, images.len()))
}

/// Per-bin mean and variance of angular profiles over a corpus.
pub fn corpus_angular(images: &[ImageF], threads: usize) -> Result<AngularProfile> {
    let (w, h) = check_same_size(images)?;
    let m = corpus_moments(images, threads, angular_profile)?;
    Ok(AngularProfile::from_moments(&m, w, h, images.len()))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FisherProfile {
    pub centers: Vec<f64>,
    /// `(mu_s - mu_0) / sqrt(var_s + var_0)`; `None` where the denominator vanishes.
    pub values: Vec<Option<f64>>,
    pub subject: String,
    pub reference: String,
}

/// Signed per-direction separation between a subject and a reference corpus.
pub fn fisher_profile(
    subject: &AngularProfile,
    reference: &AngularProfile,
    subject_id: &str,
    reference_id: &str,
) -> Result<FisherProfile> {
    if subject.mean.len() != reference.mean.len() {
        return Err(Error::InvalidParameter("angular profiles have different bin counts".into()));
    }
    if subject.image_count < 2 || reference.image_count < 2 {
        return Err(Error::InvalidParameter(
            "Fisher profile needs at least two images per corpus".into(),
        ));
    }
    let values = (0..subject.mean.len())
        .map(|j| {
            let (ms, m0) = (subject.mean[j]?, reference.mean[j]?);
            let denom = (subject.variance[j]? + reference.variance[j]?).sqrt();
            (denom > 0.0).then(|| (ms - m0) / denom)
        })
        .collect();
    Ok(FisherProfile {
        centers: subject.centers.clone(),
        values,
        subject: subject_id.to_string(),
        reference: reference_id.to_string(),
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PowerLawFit {
    /// Exponent of the power spectrum, `S ~ 1/f^alpha`.
    pub alpha: f64,
    /// Intercept of the fitted line in `ln(mean)` vs `ln(rho)`.
    pub intercept: f64,
    /// RMS residual of the fit in the log domain.
    pub rmse: f64,
    pub bins_used: usize,
    pub rho_min: f64,
    pub rho_max: f64,
}

/// Least-squares line through `(ln rho, ln mean)` over bins whose center lies
/// in `[rho_min, rho_max]`.
pub fn fit_power_law(profile: &RadialProfile, rho_min: f64, rho_max: f64) -> Result<PowerLawFit> {
    let mut pts = Vec::new();
    for (j, (&rho, mean)) in profile.centers.iter().zip(&profile.mean).enumerate() {
        if rho < rho_min || rho > rho_max {
            continue;
        }
        let Some(m) = *mean else { continue };
        if !(m > 0.0) {
            return Err(Error::Domain(format!("bin {j} (rho = {rho}) has nonpositive mean {m}")));
        }
        pts.push((rho.ln(), m.ln()));
    }
    if pts.len() < 8 {
        return Err(Error::Domain(format!(
            "{} non-empty bins in [{rho_min}, {rho_max}], need 8",
            pts.len()
        )));
    }
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let rmse = (pts
        .iter()
        .map(|p| (p.1 - intercept - slope * p.0).powi(2))
        .sum::<f64>()
        / n)
        .sqrt();
    let alpha = match profile.mode {
        ProfileMode::Power => -slope,
        ProfileMode::Magnitude => -2.0 * slope,
    };
    Ok(PowerLawFit {
        alpha,
        intercept,
        rmse,
        bins_used: pts.len(),
        rho_min,
        rho_max,
    })
}
