//! 2-D discrete Fourier transform, quadrant shift and circular autocorrelation.
//!
//! Conventions: grids are row-major with `height` rows (index `k`, size `M`)
//! and `width` columns (index `l`, size `N`). The forward transform is
//! unnormalized, the inverse carries the `1/(M N)` factor.

use std::cell::RefCell;
use std::sync::Arc;

use rustfft::num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

use crate::imgio::ImageF;
use crate::{Error, Result};

/// Row-major grid of complex bins.
#[derive(Clone, Debug, PartialEq)]
pub struct ComplexGrid {
    pub width: usize,
    pub height: usize,
    pub values: Vec<Complex64>,
}

/// Row-major grid of real bins (power spectra, autocorrelations).
#[derive(Clone, Debug, PartialEq)]
pub struct RealGrid {
    pub width: usize,
    pub height: usize,
    pub values: Vec<f64>,
}

impl RealGrid {
    pub fn new(width: usize, height: usize, values: Vec<f64>) -> Result<Self> {
        if width == 0 || height == 0 || width * height != values.len() {
            return Err(Error::Geometry(format!(
                "{} values for a {width}x{height} grid",
                values.len()
            )));
        }
        Ok(Self {
            width,
            height,
            values,
        })
    }

    pub fn zeros(width: usize, height: usize) -> Self {
        Self {
            width,
            height,
            values: vec![0.0; width * height],
        }
    }

    #[inline]
    pub fn get(&self, row: usize, col: usize) -> f64 {
        self.values[row * self.width + col]
    }

    /// Value at a signed lag, wrapped circularly.
    #[inline]
    pub fn at_lag(&self, dm: isize, dn: isize) -> f64 {
        let r = dm.rem_euclid(self.height as isize) as usize;
        let c = dn.rem_euclid(self.width as isize) as usize;
        self.get(r, c)
    }

    pub fn mean(&self) -> f64 {
        self.values.iter().sum::<f64>() / self.values.len() as f64
    }

    pub fn scaled(&self, factor: f64) -> Self {
        Self {
            width: self.width,
            height: self.height,
            values: self.values.iter().map(|v| v * factor).collect(),
        }
    }
}

impl ComplexGrid {
    #[inline]
    pub fn get(&self, row: usize, col: usize) -> Complex64 {
        self.values[row * self.width + col]
    }

    /// `|X|^2` per bin.
    pub fn power(&self) -> RealGrid {
        RealGrid {
            width: self.width,
            height: self.height,
            values: self.values.iter().map(|z| z.norm_sqr()).collect(),
        }
    }

    /// `|X|` per bin.
    pub fn magnitude(&self) -> RealGrid {
        RealGrid {
            width: self.width,
            height: self.height,
            values: self.values.iter().map(|z| z.norm()).collect(),
        }
    }
}

thread_local! {
    static PLANNER: RefCell<FftPlanner<f64>> = RefCell::new(FftPlanner::new());
}

fn plan(len: usize, inverse: bool) -> Arc<dyn Fft<f64>> {
    PLANNER.with(|p| {
        let mut p = p.borrow_mut();
        if inverse {
            p.plan_fft_inverse(len)
        } else {
            p.plan_fft_forward(len)
        }
    })
}

/// In-place 2-D transform of a row-major buffer (no normalization).
fn transform_in_place(data: &mut [Complex64], width: usize, height: usize, inverse: bool) {
    let row_fft = plan(width, inverse);
    let col_fft = plan(height, inverse);
    let mut scratch =
        vec![Complex64::default(); row_fft.get_inplace_scratch_len().max(col_fft.get_inplace_scratch_len())];

    for row in data.chunks_exact_mut(width) {
        row_fft.process_with_scratch(row, &mut scratch);
    }
    if height > 1 {
        let mut column = vec![Complex64::default(); height];
        for c in 0..width {
            for (r, v) in column.iter_mut().enumerate() {
                *v = data[r * width + c];
            }
            col_fft.process_with_scratch(&mut column, &mut scratch);
            for (r, v) in column.iter().enumerate() {
                data[r * width + c] = *v;
            }
        }
    }
}

/// Forward 2-D DFT, `X(k,l) = sum_m sum_n x(m,n) exp(-j2pi(km/M + ln/N))`.
///
/// Any size is supported (mixed-radix / Bluestein under the hood).
pub fn dft2(img: &ImageF) -> ComplexGrid {
    let (w, h) = (img.width(), img.height());
    let mut values: Vec<Complex64> = img.data().iter().map(|&v| Complex64::new(v, 0.0)).collect();
    transform_in_place(&mut values, w, h, false);
    ComplexGrid {
        width: w,
        height: h,
        values,
    }
}

/// Forward transform of an arbitrary complex grid.
pub fn dft2_complex(grid: &ComplexGrid) -> ComplexGrid {
    let mut out = grid.clone();
    transform_in_place(&mut out.values, out.width, out.height, false);
    out
}

/// Inverse 2-D DFT including the `1/(M N)` factor.
pub fn idft2(grid: &ComplexGrid) -> Result<ComplexGrid> {
    if grid.width == 0 || grid.height == 0 {
        return Err(Error::Geometry("empty grid".into()));
    }
    let mut out = grid.clone();
    transform_in_place(&mut out.values, out.width, out.height, true);
    let scale = 1.0 / (grid.width * grid.height) as f64;
    for v in &mut out.values {
        *v *= scale;
    }
    Ok(out)
}

fn shift_values<T: Copy>(values: &[T], width: usize, height: usize) -> Vec<T> {
    let mut out = values.to_vec();
    let (dr, dc) = (height / 2, width / 2);
    for r in 0..height {
        let nr = (r + dr) % height;
        for c in 0..width {
            out[nr * width + (c + dc) % width] = values[r * width + c];
        }
    }
    out
}

/// Types that can be quadrant-shifted.
pub trait Shift: Sized {
    /// Moves bin `(0,0)` to `(floor(M/2), floor(N/2))`.
    fn fftshift(&self) -> Self;
}

impl Shift for RealGrid {
    fn fftshift(&self) -> Self {
        Self {
            width: self.width,
            height: self.height,
            values: shift_values(&self.values, self.width, self.height),
        }
    }
}

impl Shift for ComplexGrid {
    fn fftshift(&self) -> Self {
        Self {
            width: self.width,
            height: self.height,
            values: shift_values(&self.values, self.width, self.height),
        }
    }
}

pub fn fftshift<G: Shift>(grid: &G) -> G {
    grid.fftshift()
}

/// Power spectrum and circular autocorrelation of one image, sharing a
/// single forward transform.
#[derive(Clone, Debug)]
pub struct SecondOrder {
    /// `|X(k,l)|^2` (unnormalized transform).
    pub power: RealGrid,
    /// `IDFT(|X|^2) / (M N)`; `autocorr(0,0)` is the mean square.
    pub autocorr: RealGrid,
}

fn centered(img: &ImageF, remove_mean: bool) -> Vec<Complex64> {
    let mean = if remove_mean { img.mean() } else { 0.0 };
    img.data().iter().map(|&v| Complex64::new(v - mean, 0.0)).collect()
}

/// Computes both second-order statistics of `img` (mean removed first when
/// `remove_mean` is set).
pub fn second_order(img: &ImageF, remove_mean: bool) -> SecondOrder {
    let (w, h) = (img.width(), img.height());
    let mn = (w * h) as f64;
    let mut spec = centered(img, remove_mean);
    transform_in_place(&mut spec, w, h, false);
    let power: Vec<f64> = spec.iter().map(|z| z.norm_sqr()).collect();
    let mut acf: Vec<Complex64> = power.iter().map(|&p| Complex64::new(p, 0.0)).collect();
    transform_in_place(&mut acf, w, h, true);
    // Inverse 1/(MN) and estimator 1/(MN).
    let scale = 1.0 / (mn * mn);
    SecondOrder {
        power: RealGrid {
            width: w,
            height: h,
            values: power,
        },
        autocorr: RealGrid {
            width: w,
            height: h,
            values: acf.iter().map(|z| z.re * scale).collect(),
        },
    }
}

/// Circular autocorrelation `R(dm, dn) = <x'(m,n) x'(m+dm, n+dn)>`,
/// computed as `IDFT(|DFT(x')|^2) / (M N)`.
pub fn autocorr(img: &ImageF, remove_mean: bool) -> RealGrid {
    second_order(img, remove_mean).autocorr
}

/// Power spectrum `|DFT(x')|^2`.
pub fn power_spectrum(img: &ImageF, remove_mean: bool) -> RealGrid {
    second_order(img, remove_mean).power
}

/// Maps a DFT index to its signed frequency in cycles per sample, folded to
/// `[-0.5, 0.5)`.
#[inline]
pub fn folded_frequency(index: usize, len: usize) -> f64 {
    let f = index as f64 / len as f64;
    if f >= 0.5 {
        f - 1.0
    } else {
        f
    }
}
