//! Noise residuals `r = x - D(x)` with pluggable denoisers.
//!
//! All built-in denoisers use mirror padding (reflection about the edge
//! sample, which is not repeated). A classical Gaussian filter is the default
//! stand-in for a learned denoiser; spectral peak positions of periodic
//! artifacts do not depend on the choice, absolute magnitudes do.

use std::io::{Read, Write};
use std::process::{Command, Stdio};

use serde::{Deserialize, Serialize};

use crate::imgio::{parse_pnm, write_pgm, ImageF};
use crate::{Error, Result};

/// Range sigma of the bilateral filter, in `[0, 1]` intensity units.
pub const BILATERAL_RANGE_SIGMA: f64 = 0.1;

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum DenoiserKind {
    Gaussian,
    Median,
    BilateralLite,
    /// Child process reading a P5 PGM (maxval 65535) on stdin and writing a
    /// same-geometry P5 PGM on stdout.
    External { command: Vec<String> },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DenoiserSpec {
    pub kind: DenoiserKind,
    /// Gaussian standard deviation (also the spatial sigma of the bilateral filter).
    pub strength: f64,
    /// Odd window side for median and bilateral filters.
    pub window: usize,
}

impl Default for DenoiserSpec {
    fn default() -> Self {
        Self::gaussian(1.0)
    }
}

impl DenoiserSpec {
    pub fn gaussian(strength: f64) -> Self {
        Self {
            kind: DenoiserKind::Gaussian,
            strength,
            window: 3,
        }
    }

    pub fn median(window: usize) -> Self {
        Self {
            kind: DenoiserKind::Median,
            strength: 1.0,
            window,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.strength.is_finite() && self.strength > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "denoiser strength must be > 0, got {}",
                self.strength
            )));
        }
        if self.window < 3 || self.window % 2 == 0 {
            return Err(Error::InvalidParameter(format!(
                "denoiser window must be odd and >= 3, got {}",
                self.window
            )));
        }
        if let DenoiserKind::External { command } = &self.kind {
            if command.is_empty() {
                return Err(Error::InvalidParameter("external denoiser command is empty".into()));
            }
        }
        Ok(())
    }
}

/// Mirror index into `0..n` (reflect without repeating the edge).
#[inline]
pub(crate) fn reflect(i: isize, n: usize) -> usize {
    if n == 1 {
        return 0;
    }
    let period = 2 * (n as isize - 1);
    let m = i.rem_euclid(period);
    if m < n as isize {
        m as usize
    } else {
        (period - m) as usize
    }
}

/// Normalized 1-D Gaussian taps, radius `ceil(3 sigma)`.
pub fn gaussian_kernel(sigma: f64) -> Vec<f64> {
    let radius = (3.0 * sigma).ceil() as isize;
    let mut taps: Vec<f64> = (-radius..=radius)
        .map(|i| (-((i * i) as f64) / (2.0 * sigma * sigma)).exp())
        .collect();
    let sum: f64 = taps.iter().sum();
    for t in &mut taps {
        *t /= sum;
    }
    taps
}

/// Separable Gaussian blur with mirror padding.
pub fn gaussian_blur(img: &ImageF, sigma: f64) -> ImageF {
    let taps = gaussian_kernel(sigma);
    let radius = (taps.len() / 2) as isize;
    let (w, h) = (img.width(), img.height());
    let src = img.data();

    let mut rows = vec![0.0; w * h];
    for r in 0..h {
        let line = &src[r * w..(r + 1) * w];
        for c in 0..w {
            let mut acc = 0.0;
            for (t, &k) in taps.iter().enumerate() {
                acc += k * line[reflect(c as isize + t as isize - radius, w)];
            }
            rows[r * w + c] = acc;
        }
    }
    let mut out = vec![0.0; w * h];
    for r in 0..h {
        for (t, &k) in taps.iter().enumerate() {
            let sr = reflect(r as isize + t as isize - radius, h);
            let (dst, line) = (&mut out[r * w..(r + 1) * w], &rows[sr * w..(sr + 1) * w]);
            for (d, &s) in dst.iter_mut().zip(line) {
                *d += k * s;
            }
        }
    }
    ImageF::new(w, h, out).expect("blur preserves geometry")
}

fn median_filter(img: &ImageF, window: usize) -> ImageF {
    let (w, h) = (img.width(), img.height());
    let half = (window / 2) as isize;
    let mut buf = Vec::with_capacity(window * window);
    let out = ImageF::from_fn(w, h, |r, c| {
        buf.clear();
        for dr in -half..=half {
            let rr = reflect(r as isize + dr, h);
            for dc in -half..=half {
                buf.push(img.get(rr, reflect(c as isize + dc, w)));
            }
        }
        let mid = buf.len() / 2;
        *buf.select_nth_unstable_by(mid, f64::total_cmp).1
    });
    out.expect("median preserves geometry")
}

fn bilateral_filter(img: &ImageF, window: usize, sigma_s: f64) -> ImageF {
    let (w, h) = (img.width(), img.height());
    let half = (window / 2) as isize;
    let inv_s = 1.0 / (2.0 * sigma_s * sigma_s);
    let inv_r = 1.0 / (2.0 * BILATERAL_RANGE_SIGMA * BILATERAL_RANGE_SIGMA);
    let out = ImageF::from_fn(w, h, |r, c| {
        let center = img.get(r, c);
        let (mut acc, mut norm) = (0.0, 0.0);
        for dr in -half..=half {
            let rr = reflect(r as isize + dr, h);
            for dc in -half..=half {
                let v = img.get(rr, reflect(c as isize + dc, w));
                let d2 = (dr * dr + dc * dc) as f64;
                let wgt = (-d2 * inv_s - (v - center) * (v - center) * inv_r).exp();
                acc += wgt * v;
                norm += wgt;
            }
        }
        acc / norm
    });
    out.expect("bilateral preserves geometry")
}

/// Pipes `img` through an external denoiser process.
pub fn denoise_external(img: &ImageF, command: &[String]) -> Result<ImageF> {
    let (program, args) = command
        .split_first()
        .ok_or_else(|| Error::InvalidParameter("external denoiser command is empty".into()))?;
    let input = write_pgm(img, 65535)?;
    let mut child = Command::new(program)
        .args(args)
        .stdin(Stdio::piped())
        .stdout(Stdio::piped())
        .stderr(Stdio::piped())
        .spawn()
        .map_err(|e| Error::External(format!("spawning {program}: {e}")))?;

    let mut stdin = child.stdin.take().expect("stdin piped");
    let writer = std::thread::spawn(move || stdin.write_all(&input));
    let mut output = Vec::new();
    child
        .stdout
        .take()
        .expect("stdout piped")
        .read_to_end(&mut output)?;
    let status = child.wait()?;
    // A child that exits without draining stdin gives a broken pipe; the
    // exit status below is the authoritative failure signal.
    let _ = writer.join();
    if !status.success() {
        let mut err = String::new();
        if let Some(mut s) = child.stderr.take() {
            let _ = s.read_to_string(&mut err);
        }
        return Err(Error::External(format!("{program} exited with {status}: {}", err.trim())));
    }
    let out = parse_pnm(&output)?.pixels;
    if out.width() != img.width() || out.height() != img.height() {
        return Err(Error::External(format!(
            "{program} returned {}x{}, expected {}x{}",
            out.width(),
            out.height(),
            img.width(),
            img.height()
        )));
    }
    Ok(out.into_luminance())
}

/// Applies the denoiser described by `spec`.
pub fn denoise(img: &ImageF, spec: &DenoiserSpec) -> Result<ImageF> {
    spec.validate()?;
    Ok(match &spec.kind {
        DenoiserKind::Gaussian => gaussian_blur(img, spec.strength),
        DenoiserKind::Median => median_filter(img, spec.window),
        DenoiserKind::BilateralLite => bilateral_filter(img, spec.window, spec.strength),
        DenoiserKind::External { command } => denoise_external(img, command)?,
    })
}

#[derive(Clone, Debug)]
pub struct Residual {
    pub residual: ImageF,
    pub denoised: ImageF,
    pub mean: f64,
}

/// `r = x - denoise(x)`, with the residual mean reported alongside.
pub fn extract_residual(img: &ImageF, spec: &DenoiserSpec) -> Result<Residual> {
    let denoised = denoise(img, spec)?;
    let residual = img.sub(&denoised)?;
    let mean = residual.mean();
    Ok(Residual {
        residual,
        denoised,
        mean,
    })
}
