//! Deterministic fixture corpora: power-law random fields, injected periodic
//! fingerprints and a post-processing chain (blur, sharpen, resize,
//! JPEG-like quantization).
//!
//! Random streams: image `i` of a corpus with master seed `s` uses
//! `ChaCha8Rng::seed_from_u64(splitmix64_nth(s, i + 1))`, where
//! `splitmix64_nth(s, n)` is the `n`-th output of the SplitMix64 generator
//! started at state `s`. Normal variates come from `rand_distr::StandardNormal`.

use std::f64::consts::PI;
use std::fs;
use std::path::{Path, PathBuf};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use rustfft::num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::dsp::{folded_frequency, idft2, ComplexGrid};
use crate::imgio::{write_pgm, ImageF};
use crate::reduce::with_threads;
use crate::residual::{gaussian_blur, reflect};
use crate::{Error, Result};

/// Stream description recorded in manifests.
pub const RNG_DESCRIPTION: &str =
    "ChaCha8Rng seeded with the (index+1)-th SplitMix64 output from the master seed; normals via rand_distr::StandardNormal";

/// Resize scales used by the default processing study.
pub const DEFAULT_RESIZE_SCALES: [f64; 3] = [0.5, 0.8, 1.25];
/// JPEG qualities used by the default processing study.
pub const DEFAULT_JPEG_QUALITIES: [u8; 3] = [95, 85, 75];

/// Luminance quantization table (natural row-major order).
pub const ANNEX_K_LUMA: [u16; 64] = [
    16, 11, 10, 16, 24, 40, 51, 61, //
    12, 12, 14, 19, 26, 58, 60, 55, //
    14, 13, 16, 24, 40, 57, 69, 56, //
    14, 17, 22, 29, 51, 87, 80, 62, //
    18, 22, 37, 56, 68, 109, 103, 77, //
    24, 35, 55, 64, 81, 104, 113, 92, //
    49, 64, 78, 87, 103, 121, 120, 101, //
    72, 92, 95, 98, 112, 100, 103, 99,
];

/// The `n`-th output (1-based) of SplitMix64 started at `state`.
pub fn splitmix64_nth(state: u64, n: u64) -> u64 {
    let mut z = state.wrapping_add(n.wrapping_mul(0x9E37_79B9_7F4A_7C15));
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Seed of image `index` in a corpus with master seed `master`.
pub fn image_seed(master: u64, index: usize) -> u64 {
    splitmix64_nth(master, index as u64 + 1)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PostOp {
    Blur { sigma: f64 },
    Sharpen { amount: f64 },
    Resize { scale: f64 },
    Jpeg { quality: u8 },
}

impl PostOp {
    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidParameter(msg));
        match *self {
            PostOp::Blur { sigma } if !(sigma.is_finite() && sigma > 0.0) => bad(format!("blur.sigma must be > 0, got {sigma}")),
            PostOp::Sharpen { amount } if !(amount.is_finite() && amount >= 0.0) => {
                bad(format!("sharpen.amount must be >= 0, got {amount}"))
            }
            PostOp::Resize { scale } if !(scale > 0.0 && scale <= 4.0) => bad(format!("resize.scale must be in (0, 4], got {scale}")),
            PostOp::Jpeg { quality } if !(1..=100).contains(&quality) => bad(format!("jpeg.quality must be in [1, 100], got {quality}")),
            _ => Ok(()),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Artifact {
    pub period: usize,
    pub amplitude: f64,
    pub pattern_seed: u64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FixtureSpec {
    pub size: usize,
    pub count: usize,
    pub alpha: f64,
    #[serde(default)]
    pub artifact: Option<Artifact>,
    #[serde(default)]
    pub chain: Vec<PostOp>,
    pub seed: u64,
}

impl FixtureSpec {
    /// Checks every field; the error message starts with the field name.
    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidParameter(msg));
        if self.size < 32 {
            return bad(format!("size: must be >= 32, got {}", self.size));
        }
        if self.count == 0 {
            return bad("count: must be >= 1".into());
        }
        if !(self.alpha.is_finite() && self.alpha >= 0.0) {
            return bad(format!("alpha: must be >= 0, got {}", self.alpha));
        }
        if let Some(a) = &self.artifact {
            if a.period < 2 {
                return bad(format!("artifact.period: must be >= 2, got {}", a.period));
            }
            if self.size % a.period != 0 {
                return bad(format!("artifact.period: {} does not divide size {}", a.period, self.size));
            }
            if !(a.amplitude.is_finite() && a.amplitude >= 0.0) {
                return bad(format!("artifact.amplitude: must be >= 0, got {}", a.amplitude));
            }
        }
        for (i, op) in self.chain.iter().enumerate() {
            op.validate()
                .map_err(|e| Error::InvalidParameter(format!("chain[{i}]: {e}")))?;
        }
        Ok(())
    }
}

/// Gaussian random field with power spectrum `~ 1/rho^alpha`, standardized to
/// mean 0.5 and standard deviation 0.1, clamped to `[0, 1]`.
pub fn gen_powerlaw_field(size: usize, alpha: f64, seed: u64) -> Result<ImageF> {
    if size == 0 {
        return Err(Error::Geometry("field size must be >= 1".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = size;
    let mut raw = vec![Complex64::default(); n * n];
    for k in 0..n {
        let fv = folded_frequency(k, n);
        for l in 0..n {
            let re: f64 = rng.sample(StandardNormal);
            let im: f64 = rng.sample(StandardNormal);
            let rho = folded_frequency(l, n).hypot(fv);
            if rho > 0.0 {
                raw[k * n + l] = Complex64::new(re, im) * rho.powf(-alpha / 2.0);
            }
        }
    }
    // Hermitian part, so the inverse transform is real.
    let mut values = vec![Complex64::default(); n * n];
    for k in 0..n {
        for l in 0..n {
            let mirror = raw[((n - k) % n) * n + (n - l) % n].conj();
            values[k * n + l] = 0.5 * (raw[k * n + l] + mirror);
        }
    }
    let field = idft2(&ComplexGrid {
        width: n,
        height: n,
        values,
    })?;
    let img = ImageF::new(n, n, field.values.iter().map(|z| z.re).collect())?;
    let (mean, sd) = (img.mean(), img.variance().sqrt());
    let scale = if sd > 0.0 { 0.1 / sd } else { 0.0 };
    img.map(|v| (0.5 + (v - mean) * scale).clamp(0.0, 1.0))
}

/// Zero-mean `period x period` tile with peak magnitude `amplitude`.
pub fn periodic_tile(period: usize, amplitude: f64, pattern_seed: u64) -> Vec<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(pattern_seed);
    let mut tile: Vec<f64> = (0..period * period).map(|_| rng.random_range(-1.0..1.0)).collect();
    let mean = tile.iter().sum::<f64>() / tile.len() as f64;
    tile.iter_mut().for_each(|v| *v -= mean);
    let peak = tile.iter().fold(0.0f64, |a, v| a.max(v.abs()));
    let scale = if peak > 0.0 { amplitude / peak } else { 0.0 };
    tile.iter_mut().for_each(|v| *v *= scale);
    tile
}

/// Adds a tiled fingerprint shared by every image with the same pattern seed.
pub fn inject_periodic(img: &ImageF, period: usize, amplitude: f64, pattern_seed: u64) -> Result<ImageF> {
    if period < 2 {
        return Err(Error::InvalidParameter(format!("period must be >= 2, got {period}")));
    }
    if img.width() % period != 0 || img.height() % period != 0 {
        return Err(Error::Geometry(format!(
            "period {period} does not divide {}x{}",
            img.width(),
            img.height()
        )));
    }
    let tile = periodic_tile(period, amplitude, pattern_seed);
    ImageF::from_fn(img.width(), img.height(), |r, c| {
        img.get(r, c) + tile[(r % period) * period + c % period]
    })
}

/// Bilinear resampling to `new_w x new_h` with pixel-center alignment.
pub fn resize_bilinear(img: &ImageF, new_w: usize, new_h: usize) -> Result<ImageF> {
    if new_w == 0 || new_h == 0 {
        return Err(Error::Geometry("resize target must be non-empty".into()));
    }
    let (w, h) = (img.width(), img.height());
    let axis = |dst: usize, src_len: usize, dst_len: usize| -> (usize, usize, f64) {
        let pos = ((dst as f64 + 0.5) * src_len as f64 / dst_len as f64 - 0.5).clamp(0.0, (src_len - 1) as f64);
        let i0 = pos.floor() as usize;
        let i1 = (i0 + 1).min(src_len - 1);
        (i0, i1, pos - i0 as f64)
    };
    let cols: Vec<_> = (0..new_w).map(|c| axis(c, w, new_w)).collect();
    let rows: Vec<_> = (0..new_h).map(|r| axis(r, h, new_h)).collect();
    ImageF::from_fn(new_w, new_h, |r, c| {
        let (r0, r1, tr) = rows[r];
        let (c0, c1, tc) = cols[c];
        let top = img.get(r0, c0) + tc * (img.get(r0, c1) - img.get(r0, c0));
        let bottom = img.get(r1, c0) + tc * (img.get(r1, c1) - img.get(r1, c0));
        top + tr * (bottom - top)
    })
}

/// Quality-scaled quantization table.
pub fn quant_table(quality: u8) -> Result<[u16; 64]> {
    if !(1..=100).contains(&quality) {
        return Err(Error::InvalidParameter(format!("JPEG quality must be in [1, 100], got {quality}")));
    }
    let q = u32::from(quality);
    let scale = if q < 50 { 5000 / q } else { 200 - 2 * q };
    Ok(ANNEX_K_LUMA.map(|t| ((u32::from(t) * scale + 50) / 100).clamp(1, 255) as u16))
}

fn dct_matrix() -> [[f64; 8]; 8] {
    let mut m = [[0.0; 8]; 8];
    for (u, row) in m.iter_mut().enumerate() {
        let a = if u == 0 { (1.0f64 / 8.0).sqrt() } else { (2.0f64 / 8.0).sqrt() };
        for (x, v) in row.iter_mut().enumerate() {
            *v = a * ((2 * x + 1) as f64 * u as f64 * PI / 16.0).cos();
        }
    }
    m
}

/// Orthonormal 8x8 type-II DCT of a row-major block.
pub fn dct8x8(block: &[f64; 64]) -> [f64; 64] {
    let c = dct_matrix();
    let mut tmp = [0.0; 64];
    for u in 0..8 {
        for x in 0..8 {
            tmp[u * 8 + x] = (0..8).map(|y| c[u][y] * block[y * 8 + x]).sum();
        }
    }
    let mut out = [0.0; 64];
    for u in 0..8 {
        for v in 0..8 {
            out[u * 8 + v] = (0..8).map(|x| tmp[u * 8 + x] * c[v][x]).sum();
        }
    }
    out
}

/// Inverse of [`dct8x8`].
pub fn idct8x8(coef: &[f64; 64]) -> [f64; 64] {
    let c = dct_matrix();
    let mut tmp = [0.0; 64];
    for y in 0..8 {
        for v in 0..8 {
            tmp[y * 8 + v] = (0..8).map(|u| c[u][y] * coef[u * 8 + v]).sum();
        }
    }
    let mut out = [0.0; 64];
    for y in 0..8 {
        for x in 0..8 {
            out[y * 8 + x] = (0..8).map(|v| tmp[y * 8 + v] * c[v][x]).sum();
        }
    }
    out
}

/// Quantizes and dequantizes DCT coefficients (round half away from zero).
pub fn quantize_block(coef: &[f64; 64], table: &[u16; 64]) -> [f64; 64] {
    let mut out = [0.0; 64];
    for i in 0..64 {
        let q = f64::from(table[i]);
        out[i] = (coef[i] / q).round() * q;
    }
    out
}

/// Luminance-only JPEG quantization round trip.
///
/// Pixels are scaled to `[0, 255]` and level-shifted by 128; each 8x8 block
/// goes through the DCT, quantization with the quality-scaled table, and the
/// inverse DCT. Images whose sides are not multiples of 8 are mirror-padded
/// and cropped back.
pub fn jpeg_simulate(img: &ImageF, quality: u8) -> Result<ImageF> {
    let table = quant_table(quality)?;
    let (w, h) = (img.width(), img.height());
    let (pw, ph) = (w.div_ceil(8) * 8, h.div_ceil(8) * 8);
    let mut out = vec![0.0; w * h];
    let mut block = [0.0; 64];
    for br in (0..ph).step_by(8) {
        for bc in (0..pw).step_by(8) {
            for y in 0..8 {
                let r = reflect((br + y) as isize, h);
                for x in 0..8 {
                    let c = reflect((bc + x) as isize, w);
                    block[y * 8 + x] = img.get(r, c) * 255.0 - 128.0;
                }
            }
            let rec = idct8x8(&quantize_block(&dct8x8(&block), &table));
            for y in 0..8 {
                for x in 0..8 {
                    let (r, c) = (br + y, bc + x);
                    if r < h && c < w {
                        out[r * w + c] = ((rec[y * 8 + x] + 128.0) / 255.0).clamp(0.0, 1.0);
                    }
                }
            }
        }
    }
    ImageF::new(w, h, out)
}

/// Applies one post-processing operation.
pub fn post_process(img: &ImageF, op: &PostOp) -> Result<ImageF> {
    op.validate()?;
    match *op {
        PostOp::Blur { sigma } => Ok(gaussian_blur(img, sigma)),
        PostOp::Sharpen { amount } => {
            if amount == 0.0 {
                return Ok(img.clone());
            }
            let blurred = gaussian_blur(img, 1.0);
            ImageF::from_fn(img.width(), img.height(), |r, c| {
                let v = img.get(r, c);
                (v + amount * (v - blurred.get(r, c))).clamp(0.0, 1.0)
            })
        }
        PostOp::Resize { scale } => {
            let (w, h) = (img.width(), img.height());
            let nw = ((w as f64 * scale).round() as usize).max(1);
            let nh = ((h as f64 * scale).round() as usize).max(1);
            let small = resize_bilinear(img, nw, nh)?;
            resize_bilinear(&small, w, h)
        }
        PostOp::Jpeg { quality } => jpeg_simulate(img, quality),
    }
}

/// Image `index` of the corpus described by `spec`.
pub fn generate_image(spec: &FixtureSpec, index: usize) -> Result<ImageF> {
    let mut img = gen_powerlaw_field(spec.size, spec.alpha, image_seed(spec.seed, index))?;
    if let Some(a) = &spec.artifact {
        img = inject_periodic(&img, a.period, a.amplitude, a.pattern_seed)?;
    }
    for op in &spec.chain {
        img = post_process(&img, op)?;
    }
    Ok(img)
}

/// Whole corpus in index order (parallel generation, deterministic output).
pub fn generate_corpus(spec: &FixtureSpec, threads: usize) -> Result<Vec<ImageF>> {
    spec.validate()?;
    with_threads(threads, || {
        (0..spec.count)
            .into_par_iter()
            .map(|i| generate_image(spec, i))
            .collect()
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub spec: FixtureSpec,
    pub rng: String,
    pub maxval: u32,
    pub files: Vec<String>,
    pub seeds: Vec<u64>,
}

/// File name of fixture image `index`.
pub fn fixture_file_name(index: usize) -> String {
    format!("img_{index:05}.pgm")
}

/// Writes the corpus as PGM files plus `manifest.json`; returns the image paths.
pub fn write_fixture(spec: &FixtureSpec, dir: &Path, maxval: u32, threads: usize) -> Result<Vec<PathBuf>> {
    let images = generate_corpus(spec, threads)?;
    fs::create_dir_all(dir)?;
    let mut paths = Vec::with_capacity(images.len());
    for (i, img) in images.iter().enumerate() {
        let path = dir.join(fixture_file_name(i));
        fs::write(&path, write_pgm(img, maxval)?)?;
        paths.push(path);
    }
    let manifest = Manifest {
        spec: spec.clone(),
        rng: RNG_DESCRIPTION.to_string(),
        maxval,
        files: (0..spec.count).map(fixture_file_name).collect(),
        seeds: (0..spec.count).map(|i| image_seed(spec.seed, i)).collect(),
    };
    let mut json = serde_json::to_string_pretty(&manifest)?;
    json.push('\n');
    fs::write(dir.join("manifest.json"), json)?;
    Ok(paths)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::profiles::{corpus_radial, fit_power_law, ProfileMode};

    fn spec() -> FixtureSpec {
        FixtureSpec {
            size: 64,
            count: 3,
            alpha: 2.0,
            artifact: None,
            chain: vec![],
            seed: 7,
        }
    }

    #[test]
    fn splitmix_reference_values() {
        // Reference outputs of SplitMix64 seeded with 0.
        assert_eq!(splitmix64_nth(0, 1), 0xE220_A839_7B1D_CDAF);
        assert_eq!(splitmix64_nth(0, 2), 0x6E78_9E6A_A1B9_65F4);
        assert_ne!(image_seed(7, 0), image_seed(7, 1));
    }

    #[test]
    fn field_is_deterministic_and_standardized() {
        let a = gen_powerlaw_field(64, 2.0, 11).unwrap();
        let b = gen_powerlaw_field(64, 2.0, 11).unwrap();
        assert_eq!(a, b);
        assert_ne!(a, gen_powerlaw_field(64, 2.0, 12).unwrap());
        assert!((a.mean() - 0.5).abs() < 1e-3);
        assert!((a.variance().sqrt() - 0.1).abs() < 1e-3);
        assert!(a.data().iter().all(|v| (0.0..=1.0).contains(v)));
    }

    #[test]
    fn white_field_has_flat_power() {
        let imgs: Vec<ImageF> = (0..100).map(|i| gen_powerlaw_field(128, 0.0, image_seed(3, i)).unwrap()).collect();
        let p = corpus_radial(&imgs, ProfileMode::Power, 0).unwrap();
        let vals: Vec<f64> = p
            .centers
            .iter()
            .zip(&p.mean)
            .filter(|(r, _)| (0.1..=0.5).contains(*r))
            .filter_map(|(_, m)| *m)
            .collect();
        let avg = vals.iter().sum::<f64>() / vals.len() as f64;
        assert!(vals.iter().all(|v| (v / avg - 1.0).abs() < 0.08), "{vals:?}");
    }

    #[test]
    fn field_exponent_is_recovered() {
        let imgs: Vec<ImageF> = (0..20).map(|i| gen_powerlaw_field(128, 2.0, image_seed(5, i)).unwrap()).collect();
        let p = corpus_radial(&imgs, ProfileMode::Power, 0).unwrap();
        let fit = fit_power_law(&p, 0.2, 0.5).unwrap();
        assert!((fit.alpha - 2.0).abs() < 0.1, "alpha {}", fit.alpha);
    }

    #[test]
    fn injection_cases() {
        let img = gen_powerlaw_field(64, 0.0, 1).unwrap();
        assert_eq!(inject_periodic(&img, 4, 0.0, 9).unwrap(), img);
        assert!(matches!(inject_periodic(&img, 7, 0.05, 9), Err(Error::Geometry(_))));
        assert!(inject_periodic(&img, 1, 0.05, 9).is_err());

        let tile = periodic_tile(4, 0.05, 9);
        assert!(tile.iter().sum::<f64>().abs() < 1e-12);
        assert!((tile.iter().fold(0.0f64, |a, v| a.max(v.abs())) - 0.05).abs() < 1e-15);

        let out = inject_periodic(&img, 4, 0.05, 9).unwrap();
        let diff = out.sub(&img).unwrap();
        for r in 0..64 {
            for c in 0..64 {
                assert!((diff.get(r, c) - tile[(r % 4) * 4 + c % 4]).abs() < 1e-15);
            }
        }
    }

    #[test]
    fn quant_tables() {
        assert_eq!(quant_table(50).unwrap(), ANNEX_K_LUMA);
        let q75 = quant_table(75).unwrap();
        assert_eq!(q75[0], 8);
        assert_eq!(q75[1], 6); // floor((11*50+50)/100)
        assert_eq!(quant_table(100).unwrap(), [1; 64]);
        // Q=10: scale 500, 16 -> 80; 120 -> 600 clamps to 255.
        let q10 = quant_table(10).unwrap();
        assert_eq!(q10[0], 80);
        assert_eq!(q10[54], 255);
        assert!(quant_table(0).is_err());
        assert!(quant_table(101).is_err());
    }

    #[test]
    fn dct_is_orthonormal() {
        let block: [f64; 64] = std::array::from_fn(|i| ((i * 37) % 17) as f64 - 8.0);
        let coef = dct8x8(&block);
        let e1: f64 = block.iter().map(|v| v * v).sum();
        let e2: f64 = coef.iter().map(|v| v * v).sum();
        assert!((e1 - e2).abs() < 1e-9);
        let back = idct8x8(&coef);
        for (a, b) in block.iter().zip(&back) {
            assert!((a - b).abs() < 1e-12);
        }
        let flat = dct8x8(&[3.0; 64]);
        assert!((flat[0] - 24.0).abs() < 1e-12);
        assert!(flat[1..].iter().all(|v| v.abs() < 1e-12));
    }

    #[test]
    fn jpeg_on_constants() {
        for &v in &[0.0, 0.13, 0.5, 0.77, 1.0] {
            let img = ImageF::filled(16, 16, v).unwrap();
            for q in [1u8, 10, 30, 50, 75, 90, 100] {
                let out = jpeg_simulate(&img, q).unwrap();
                let first = out.data()[0];
                assert!(out.data().iter().all(|x| (x - first).abs() < 1e-12));
                // DC step q0 in the 8x scaled domain: pixel error <= q0/16 levels.
                let q0 = f64::from(quant_table(q).unwrap()[0]);
                let bound = q0 / 16.0 / 255.0 + 1e-12;
                assert!((first - v).abs() <= bound, "v {v} q {q}");
                if q >= 75 {
                    assert!((first - v).abs() <= 0.5 / 255.0 + 1e-12);
                }
            }
        }
    }

    #[test]
    fn jpeg_handles_ragged_sizes_and_quantization_error() {
        let img = gen_powerlaw_field(64, 1.0, 4).unwrap();
        let ragged = ImageF::from_fn(37, 21, |r, c| img.get(r, c)).unwrap();
        let out = jpeg_simulate(&ragged, 75).unwrap();
        assert_eq!((out.width(), out.height()), (37, 21));

        let table = quant_table(30).unwrap();
        let block: [f64; 64] = std::array::from_fn(|i| img.data()[i] * 255.0 - 128.0);
        let coef = dct8x8(&block);
        let q = quantize_block(&coef, &table);
        for i in 0..64 {
            assert!((q[i] - coef[i]).abs() <= f64::from(table[i]) / 2.0 + 1e-9);
        }
    }

    #[test]
    fn rounding_quantizer_can_raise_ac_energy() {
        // A lone AC coefficient at 0.6 of its step is rounded up to a full
        // step, so per-block AC energy is not monotone under quantization.
        let table = quant_table(50).unwrap();
        let mut coef = [0.0; 64];
        coef[1] = 0.6 * f64::from(table[1]);
        let q = quantize_block(&coef, &table);
        assert!(q[1].abs() > coef[1].abs());
    }

    #[test]
    fn post_process_identities() {
        let img = gen_powerlaw_field(64, 1.0, 2).unwrap();
        assert_eq!(post_process(&img, &PostOp::Sharpen { amount: 0.0 }).unwrap(), img);
        let same = post_process(&img, &PostOp::Resize { scale: 1.0 }).unwrap();
        for (a, b) in same.data().iter().zip(img.data()) {
            assert!((a - b).abs() < 1e-9);
        }
        for scale in DEFAULT_RESIZE_SCALES {
            let out = post_process(&img, &PostOp::Resize { scale }).unwrap();
            assert_eq!((out.width(), out.height()), (64, 64));
        }
        let sharp = post_process(&img, &PostOp::Sharpen { amount: 1.5 }).unwrap();
        assert!(sharp.data().iter().all(|v| (0.0..=1.0).contains(v)));
        assert!(post_process(&img, &PostOp::Blur { sigma: 0.0 }).is_err());
        assert!(post_process(&img, &PostOp::Resize { scale: 4.5 }).is_err());
        assert!(post_process(&img, &PostOp::Jpeg { quality: 0 }).is_err());
    }

    #[test]
    fn spec_validation_names_fields() {
        let mut s = spec();
        s.artifact = Some(Artifact { period: 7, amplitude: 0.05, pattern_seed: 1 });
        let msg = s.validate().unwrap_err().to_string();
        assert!(msg.contains("artifact.period"), "{msg}");

        let mut s = spec();
        s.size = 16;
        assert!(s.validate().unwrap_err().to_string().contains("size"));
        let mut s = spec();
        s.count = 0;
        assert!(s.validate().unwrap_err().to_string().contains("count"));
        let mut s = spec();
        s.alpha = -1.0;
        assert!(s.validate().unwrap_err().to_string().contains("alpha"));
        let mut s = spec();
        s.chain = vec![PostOp::Jpeg { quality: 75 }, PostOp::Blur { sigma: -1.0 }];
        assert!(s.validate().unwrap_err().to_string().contains("chain[1]"));
    }

    #[test]
    fn spec_json_shape() {
        let json = r#"{"size":64,"count":2,"alpha":2,"artifact":{"period":4,"amplitude":0.05,"pattern_seed":3},
                       "chain":[{"blur":{"sigma":1.0}},{"jpeg":{"quality":75}}],"seed":7}"#;
        let s: FixtureSpec = serde_json::from_str(json).unwrap();
        assert_eq!(s.chain, vec![PostOp::Blur { sigma: 1.0 }, PostOp::Jpeg { quality: 75 }]);
        let minimal: FixtureSpec = serde_json::from_str(r#"{"size":64,"count":2,"alpha":0,"seed":1}"#).unwrap();
        assert!(minimal.artifact.is_none() && minimal.chain.is_empty());
    }

    #[test]
    fn corpus_is_reproducible_across_threads() {
        let mut s = spec();
        s.artifact = Some(Artifact { period: 8, amplitude: 0.05, pattern_seed: 3 });
        s.chain = vec![PostOp::Jpeg { quality: 85 }, PostOp::Resize { scale: 0.8 }];
        let a = generate_corpus(&s, 1).unwrap();
        let b = generate_corpus(&s, 4).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn fixture_files_and_manifest() {
        let dir = tempfile::tempdir().unwrap();
        let paths = write_fixture(&spec(), dir.path(), 65535, 1).unwrap();
        assert_eq!(paths.len(), 3);
        let manifest: Manifest = serde_json::from_slice(&fs::read(dir.path().join("manifest.json")).unwrap()).unwrap();
        assert_eq!(manifest.spec, spec());
        assert_eq!(manifest.files[2], "img_00002.pgm");
        assert_eq!(manifest.seeds[0], image_seed(7, 0));
    }
}
