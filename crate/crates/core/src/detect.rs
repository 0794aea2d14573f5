//! Artifact detectors over corpus summaries.
//!
//! - Spectral peaks: strict local maxima of the normalized averaged power
//!   spectrum that stand out from their neighborhood median.
//! - Upsampling factor: energy on the frequency lattice `{(a/N, b/N)}` for
//!   candidate factors `N`, each scored only on points that no coarser
//!   candidate's lattice contains.
//! - JPEG grid: excess autocorrelation at lags that are multiples of 8.
//!
//! All thresholds here are toolkit conventions calibrated on synthetic
//! fixtures.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::dsp::{folded_frequency, RealGrid};
use crate::stats::SpectralSummary;
use crate::{Error, Result};

pub const DEFAULT_NEIGHBORHOOD: usize = 5;
pub const DEFAULT_MIN_PROMINENCE: f64 = 10.0;
pub const DEFAULT_CANDIDATES: [usize; 4] = [2, 4, 8, 16];
pub const DEFAULT_LATTICE_THRESHOLD: f64 = 3.0;

/// Lags probed for the 8-pixel grid and the off-grid control lags.
pub const GRID_LAGS: [usize; 4] = [8, 16, 24, 32];
pub const CONTROL_LAGS: [usize; 8] = [3, 5, 11, 13, 19, 21, 27, 29];
pub const MAX_GRID_LAG: usize = 32;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Peak {
    /// Horizontal frequency, cycles per sample in `[-0.5, 0.5)`.
    pub f_u: f64,
    /// Vertical frequency.
    pub f_v: f64,
    /// Bin value over the median of its neighborhood.
    pub prominence: f64,
    pub row: usize,
    pub col: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PeakReport {
    pub peaks: Vec<Peak>,
    /// Lattice score per candidate factor.
    pub scores: BTreeMap<usize, f64>,
    pub inferred_factor: Option<usize>,
    pub threshold: f64,
    pub neighborhood: usize,
    pub min_prominence: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct GridScore {
    /// Mean of the two axis scores.
    pub score: f64,
    pub period: usize,
    pub horizontal: f64,
    pub vertical: f64,
}

fn median(values: &mut [f64]) -> f64 {
    let n = values.len();
    values.sort_unstable_by(f64::total_cmp);
    if n % 2 == 1 {
        values[n / 2]
    } else {
        0.5 * (values[n / 2 - 1] + values[n / 2])
    }
}

fn near_dc(k: usize, l: usize, grid: &RealGrid) -> bool {
    let dk = k.min(grid.height - k);
    let dl = l.min(grid.width - l);
    dk <= 1 && dl <= 1
}

/// Local maxima of the normalized averaged power spectrum.
///
/// A bin is a peak when it strictly exceeds every other bin of its
/// `neighborhood x neighborhood` window (circular) and is at least
/// `min_prominence` times the window median (center excluded). DC and its
/// eight neighbors are skipped, as are bins whose window median is zero.
pub fn detect_peaks(summary: &SpectralSummary, neighborhood: usize, min_prominence: f64) -> Result<Vec<Peak>> {
    if neighborhood < 3 || neighborhood % 2 == 0 {
        return Err(Error::InvalidParameter(format!(
            "neighborhood must be odd and >= 3, got {neighborhood}"
        )));
    }
    let grid = &summary.avg_power;
    let (w, h) = (grid.width, grid.height);
    let half = (neighborhood / 2) as isize;
    let mut window = Vec::with_capacity(neighborhood * neighborhood);
    let mut peaks = Vec::new();
    for k in 0..h {
        for l in 0..w {
            if near_dc(k, l, grid) {
                continue;
            }
            let center = grid.get(k, l);
            window.clear();
            let mut is_max = true;
            'scan: for dk in -half..=half {
                for dl in -half..=half {
                    if dk == 0 && dl == 0 {
                        continue;
                    }
                    let v = grid.at_lag(k as isize + dk, l as isize + dl);
                    if v >= center {
                        is_max = false;
                        break 'scan;
                    }
                    window.push(v);
                }
            }
            if !is_max {
                continue;
            }
            let med = median(&mut window);
            if med <= 0.0 {
                continue;
            }
            let prominence = center / med;
            if prominence.is_finite() && prominence >= min_prominence {
                peaks.push(Peak {
                    f_u: folded_frequency(l, w),
                    f_v: folded_frequency(k, h),
                    prominence,
                    row: k,
                    col: l,
                });
            }
        }
    }
    Ok(peaks)
}

/// Nonzero lattice points `(a, b)` of factor `n` (frequencies `a/n`, `b/n`)
/// that are not on the lattice of any candidate in `coarser`.
pub fn exclusive_lattice(n: usize, coarser: &[usize]) -> Vec<(usize, usize)> {
    let on = |a: usize, c: usize| (a * c) % n == 0;
    let mut pts = Vec::new();
    for a in 0..n {
        for b in 0..n {
            if a == 0 && b == 0 {
                continue;
            }
            if coarser.iter().any(|&c| on(a, c) && on(b, c)) {
                continue;
            }
            pts.push((a, b));
        }
    }
    pts
}

/// Lattice score of factor `n`: mean spectrum value over the 3x3 bin windows
/// around its exclusive lattice points, divided by the global median.
pub fn lattice_score(grid: &RealGrid, n: usize, coarser: &[usize], global_median: f64) -> f64 {
    let pts = exclusive_lattice(n, coarser);
    if pts.is_empty() || global_median <= 0.0 {
        return 0.0;
    }
    let (h, w) = (grid.height as f64, grid.width as f64);
    let mut sum = 0.0;
    let mut count = 0usize;
    for (a, b) in pts {
        // Row frequency a/n, column frequency b/n.
        let k = (a as f64 * h / n as f64).round() as isize;
        let l = (b as f64 * w / n as f64).round() as isize;
        for dk in -1..=1 {
            for dl in -1..=1 {
                sum += grid.at_lag(k + dk, l + dl);
                count += 1;
            }
        }
    }
    sum / count as f64 / global_median
}

/// Scores every candidate upsampling factor and infers one.
///
/// The inferred factor is the finest candidate whose score reaches
/// `threshold`: a period-`N` pattern puts energy on every lattice point of
/// `N`, including those shared with coarser factors, while the exclusive
/// points of finer factors stay at background level.
pub fn infer_upsampling(summary: &SpectralSummary, candidates: &[usize], threshold: f64) -> Result<PeakReport> {
    infer_upsampling_with(summary, candidates, threshold, DEFAULT_NEIGHBORHOOD, DEFAULT_MIN_PROMINENCE)
}

pub fn infer_upsampling_with(
    summary: &SpectralSummary,
    candidates: &[usize],
    threshold: f64,
    neighborhood: usize,
    min_prominence: f64,
) -> Result<PeakReport> {
    if candidates.iter().any(|&c| c < 2) {
        return Err(Error::InvalidParameter("candidate factors must be >= 2".into()));
    }
    let peaks = detect_peaks(summary, neighborhood, min_prominence)?;
    let grid = &summary.avg_power;
    let global_median = median(&mut grid.values.clone());
    let mut sorted: Vec<usize> = candidates.to_vec();
    sorted.sort_unstable();
    sorted.dedup();
    let mut scores = BTreeMap::new();
    for (i, &n) in sorted.iter().enumerate() {
        scores.insert(n, lattice_score(grid, n, &sorted[..i], global_median));
    }
    let inferred_factor = sorted
        .iter()
        .rev()
        .find(|n| scores[n] >= threshold)
        .copied();
    Ok(PeakReport {
        peaks,
        scores,
        inferred_factor,
        threshold,
        neighborhood,
        min_prominence,
    })
}

fn sample_std(values: &[f64]) -> f64 {
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    (values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0)).sqrt()
}

fn axis_score(lag: impl Fn(usize) -> f64) -> f64 {
    let mean_at = |lags: &[usize]| lags.iter().map(|&d| lag(d).abs()).sum::<f64>() / lags.len() as f64;
    let off: Vec<f64> = (1..=MAX_GRID_LAG).filter(|d| d % 8 != 0).map(|d| lag(d).abs()).collect();
    let spread = sample_std(&off);
    let excess = mean_at(&GRID_LAGS) - mean_at(&CONTROL_LAGS);
    if spread > 0.0 {
        excess / spread
    } else {
        0.0
    }
}

/// Excess normalized autocorrelation magnitude at lags `{8,16,24,32}` over
/// the control lags, in units of the spread of all off-grid lags `1..=32`.
pub fn jpeg_grid_score(summary: &SpectralSummary) -> Result<GridScore> {
    let acf = &summary.avg_autocorr;
    let min_dim = 2 * MAX_GRID_LAG + 1;
    if acf.width < min_dim || acf.height < min_dim {
        return Err(Error::Geometry(format!(
            "grid scoring needs at least {min_dim}x{min_dim} lags, got {}x{}",
            acf.width, acf.height
        )));
    }
    let horizontal = axis_score(|d| acf.get(0, d));
    let vertical = axis_score(|d| acf.get(d, 0));
    Ok(GridScore {
        score: 0.5 * (horizontal + vertical),
        period: 8,
        horizontal,
        vertical,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::imgio::ImageF;
    use crate::stats::{summarize_images, SummaryOptions};

    fn impulse_summary(n: usize) -> SpectralSummary {
        let img = ImageF::from_fn(n, n, |r, c| if r == 0 && c == 0 { 1.0 } else { 0.0 }).unwrap();
        summarize_images(&[img], &SummaryOptions { residual: None, remove_mean: false }, 1).unwrap()
    }

    #[test]
    fn flat_spectrum_has_no_peaks() {
        let s = impulse_summary(64);
        assert!(detect_peaks(&s, 5, 1.0).unwrap().is_empty());
        let report = infer_upsampling(&s, &DEFAULT_CANDIDATES, DEFAULT_LATTICE_THRESHOLD).unwrap();
        assert_eq!(report.inferred_factor, None);
        for v in report.scores.values() {
            assert!((v - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn exclusive_lattices() {
        assert_eq!(exclusive_lattice(2, &[]), vec![(0, 1), (1, 0), (1, 1)]);
        let four = exclusive_lattice(4, &[2]);
        assert_eq!(four.len(), 12);
        assert!(four.iter().all(|&(a, b)| a % 2 == 1 || b % 2 == 1));
        assert_eq!(exclusive_lattice(8, &[2, 4]).len(), 48);
        assert_eq!(exclusive_lattice(16, &[2, 4, 8]).len(), 192);
    }

    #[test]
    fn isolated_peak_is_found_and_scale_invariant() {
        let mut s = impulse_summary(32);
        let idx = 5 * 32 + 9;
        s.avg_power.values[idx] = 50.0;
        let peaks = detect_peaks(&s, 5, 10.0).unwrap();
        assert_eq!(peaks.len(), 1);
        assert_eq!((peaks[0].row, peaks[0].col), (5, 9));
        assert_eq!(peaks[0].f_u, 9.0 / 32.0);
        assert_eq!(peaks[0].f_v, 5.0 / 32.0);
        assert_eq!(peaks[0].prominence, 50.0);

        let mut scaled = s.clone();
        scaled.avg_power = s.avg_power.scaled(7.5);
        let again = detect_peaks(&scaled, 5, 10.0).unwrap();
        assert_eq!(again.len(), 1);
        assert!((again[0].prominence - 50.0).abs() < 1e-12);
    }

    #[test]
    fn dc_neighbourhood_is_ignored() {
        let mut s = impulse_summary(16);
        s.avg_power.values[1] = 100.0;
        s.avg_power.values[16 * 15 + 15] = 100.0;
        assert!(detect_peaks(&s, 3, 2.0).unwrap().is_empty());
    }

    #[test]
    fn bad_neighborhood() {
        let s = impulse_summary(16);
        assert!(detect_peaks(&s, 4, 2.0).is_err());
        assert!(detect_peaks(&s, 1, 2.0).is_err());
    }

    #[test]
    fn lattice_on_flat_background() {
        let mut s = impulse_summary(64);
        // Period-8 pattern in frequency: every (a/8, b/8) point raised.
        for a in 0..8 {
            for b in 0..8 {
                if a + b > 0 {
                    s.avg_power.values[(a * 8) * 64 + b * 8] = 90.0;
                }
            }
        }
        let report = infer_upsampling(&s, &DEFAULT_CANDIDATES, DEFAULT_LATTICE_THRESHOLD).unwrap();
        assert_eq!(report.inferred_factor, Some(8));
        assert!(report.scores[&16] < DEFAULT_LATTICE_THRESHOLD);
        assert_eq!(report.peaks.len(), 63);
    }

    #[test]
    fn grid_score_on_synthetic_autocorrelation() {
        let mut s = impulse_summary(96);
        // Background wiggle so the off-grid spread is nonzero.
        for d in 1..=32 {
            s.avg_autocorr.values[d] = 0.01 * ((d * 7) % 5) as f64;
            s.avg_autocorr.values[d * 96] = 0.01 * ((d * 3) % 5) as f64;
        }
        let clean = jpeg_grid_score(&s).unwrap();
        for d in [8, 16, 24, 32] {
            s.avg_autocorr.values[d] = 0.5;
            s.avg_autocorr.values[d * 96] = 0.5;
        }
        let gridded = jpeg_grid_score(&s).unwrap();
        assert!(gridded.score > clean.score + 5.0);
        assert_eq!(gridded.score, 0.5 * (gridded.horizontal + gridded.vertical));
        assert_eq!(gridded.period, 8);
        assert!(jpeg_grid_score(&impulse_summary(32)).is_err());
    }
}
