//! Netpbm (PGM/PPM) reading and writing, luminance conversion and geometry
//! standardization.
//!
//! Samples are carried as `f64` in the nominal range `[0, 1]`. Parsing accepts
//! the ASCII (`P2`/`P3`) and binary (`P5`/`P6`) grayscale and color variants;
//! writing always emits the binary form with a canonical header
//! (`P5\n<w> <h>\n<maxval>\n`).

use crate::{Error, Result};

/// Single-channel floating-point raster, row-major.
#[derive(Clone, Debug, PartialEq)]
pub struct ImageF {
    width: usize,
    height: usize,
    data: Vec<f64>,
}

impl ImageF {
    /// Builds an image, checking the geometry and that every sample is finite.
    pub fn new(width: usize, height: usize, data: Vec<f64>) -> Result<Self> {
        if width == 0 || height == 0 {
            return Err(Error::Geometry(format!(
                "image dimensions must be positive, got {width}x{height}"
            )));
        }
        if width.checked_mul(height) != Some(data.len()) {
            return Err(Error::Geometry(format!(
                "{} samples do not fill a {width}x{height} image",
                data.len()
            )));
        }
        if let Some(i) = data.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFinite(format!("sample {i} is {}", data[i])));
        }
        Ok(Self {
            width,
            height,
            data,
        })
    }

    /// Image of constant value.
    pub fn filled(width: usize, height: usize, value: f64) -> Result<Self> {
        Self::new(width, height, vec![value; width * height])
    }

    /// Builds an image by evaluating `f(row, col)` at every pixel.
    pub fn from_fn(
        width: usize,
        height: usize,
        mut f: impl FnMut(usize, usize) -> f64,
    ) -> Result<Self> {
        let mut data = Vec::with_capacity(width * height);
        for r in 0..height {
            for c in 0..width {
                data.push(f(r, c));
            }
        }
        Self::new(width, height, data)
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn len(&self) -> usize {
        self.data.len()
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn into_data(self) -> Vec<f64> {
        self.data
    }

    #[inline]
    pub fn get(&self, row: usize, col: usize) -> f64 {
        self.data[row * self.width + col]
    }

    pub fn mean(&self) -> f64 {
        self.data.iter().sum::<f64>() / self.data.len() as f64
    }

    /// Population variance (divisor `width * height`).
    pub fn variance(&self) -> f64 {
        let mean = self.mean();
        self.data.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / self.data.len() as f64
    }

    /// Applies `f` to every sample. The result must stay finite.
    pub fn map(&self, f: impl Fn(f64) -> f64) -> Result<Self> {
        Self::new(self.width, self.height, self.data.iter().map(|&v| f(v)).collect())
    }

    /// Pixelwise `self - other`.
    pub fn sub(&self, other: &ImageF) -> Result<Self> {
        self.zip(other, |a, b| a - b)
    }

    /// Pixelwise `self + other`.
    pub fn add(&self, other: &ImageF) -> Result<Self> {
        self.zip(other, |a, b| a + b)
    }

    fn zip(&self, other: &ImageF, f: impl Fn(f64, f64) -> f64) -> Result<Self> {
        if self.width != other.width || self.height != other.height {
            return Err(Error::Geometry(format!(
                "size mismatch: {}x{} vs {}x{}",
                self.width, self.height, other.width, other.height
            )));
        }
        let data = self
            .data
            .iter()
            .zip(&other.data)
            .map(|(&a, &b)| f(a, b))
            .collect();
        Self::new(self.width, self.height, data)
    }
}

/// Three-plane color raster (R, G, B), each plane row-major.
#[derive(Clone, Debug, PartialEq)]
pub struct ImageRGB {
    width: usize,
    height: usize,
    planes: [Vec<f64>; 3],
}

impl ImageRGB {
    pub fn new(width: usize, height: usize, planes: [Vec<f64>; 3]) -> Result<Self> {
        for (i, p) in planes.iter().enumerate() {
            // Validates geometry and finiteness per plane.
            ImageF::new(width, height, p.clone())
                .map_err(|e| Error::Geometry(format!("plane {i}: {e}")))?;
        }
        Ok(Self {
            width,
            height,
            planes,
        })
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn planes(&self) -> &[Vec<f64>; 3] {
        &self.planes
    }

    /// The three channels as separate grayscale images.
    pub fn channels(&self) -> [ImageF; 3] {
        self.planes.clone().map(|p| ImageF {
            width: self.width,
            height: self.height,
            data: p,
        })
    }
}

/// A decoded Netpbm image.
#[derive(Clone, Debug, PartialEq)]
pub enum Pixels {
    Gray(ImageF),
    Rgb(ImageRGB),
}

impl Pixels {
    pub fn width(&self) -> usize {
        match self {
            Pixels::Gray(g) => g.width(),
            Pixels::Rgb(c) => c.width(),
        }
    }

    pub fn height(&self) -> usize {
        match self {
            Pixels::Gray(g) => g.height(),
            Pixels::Rgb(c) => c.height(),
        }
    }

    /// Grayscale passes through; color is converted with [`to_luminance`].
    pub fn into_luminance(self) -> ImageF {
        match self {
            Pixels::Gray(g) => g,
            Pixels::Rgb(c) => to_luminance(&c),
        }
    }
}

/// Result of [`parse_pnm`]: the pixels plus the maxval they were scaled by.
#[derive(Clone, Debug, PartialEq)]
pub struct Decoded {
    pub pixels: Pixels,
    pub maxval: u16,
}

#[derive(Clone, Copy, PartialEq, Eq)]
enum Encoding {
    Ascii,
    Binary,
}

struct Cursor<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Cursor<'a> {
    fn err(&self, message: impl Into<String>) -> Error {
        Error::Format {
            offset: self.pos,
            message: message.into(),
        }
    }

    /// Skips whitespace and `#` comments (which run to end of line).
    fn skip_separators(&mut self) {
        while self.pos < self.bytes.len() {
            match self.bytes[self.pos] {
                b'#' => {
                    while self.pos < self.bytes.len()
                        && self.bytes[self.pos] != b'\n'
                        && self.bytes[self.pos] != b'\r'
                    {
                        self.pos += 1;
                    }
                }
                b if b.is_ascii_whitespace() => self.pos += 1,
                _ => break,
            }
        }
    }

    fn read_uint(&mut self, what: &str) -> Result<u64> {
        self.skip_separators();
        let start = self.pos;
        let mut value: u64 = 0;
        while self.pos < self.bytes.len() && self.bytes[self.pos].is_ascii_digit() {
            let digit = u64::from(self.bytes[self.pos] - b'0');
            value = value
                .checked_mul(10)
                .and_then(|v| v.checked_add(digit))
                .ok_or_else(|| self.err(format!("{what} overflows")))?;
            self.pos += 1;
        }
        if self.pos == start {
            return Err(if self.pos >= self.bytes.len() {
                self.err(format!("truncated before {what}"))
            } else {
                self.err(format!("expected {what}"))
            });
        }
        Ok(value)
    }
}

/// Parses a PGM or PPM file (`P2`, `P3`, `P5`, `P6`).
///
/// Samples are scaled to `[0, 1]` by dividing by maxval. 16-bit binary
/// samples (maxval > 255) are big-endian.
pub fn parse_pnm(bytes: &[u8]) -> Result<Decoded> {
    if bytes.len() < 2 {
        return Err(Error::Format {
            offset: bytes.len(),
            message: "truncated before magic number".into(),
        });
    }
    let (channels, encoding) = match &bytes[..2] {
        b"P2" => (1, Encoding::Ascii),
        b"P3" => (3, Encoding::Ascii),
        b"P5" => (1, Encoding::Binary),
        b"P6" => (3, Encoding::Binary),
        other => {
            return Err(Error::UnsupportedFormat(
                String::from_utf8_lossy(other).into_owned(),
            ))
        }
    };
    let mut cur = Cursor { bytes, pos: 2 };
    if cur.pos < bytes.len() && !bytes[cur.pos].is_ascii_whitespace() && bytes[cur.pos] != b'#' {
        return Err(cur.err("missing separator after magic number"));
    }
    let width = cur.read_uint("width")?;
    let height = cur.read_uint("height")?;
    let maxval = cur.read_uint("maxval")?;
    if width == 0 || height == 0 {
        return Err(cur.err(format!("zero image dimension {width}x{height}")));
    }
    if !(1..=65535).contains(&maxval) {
        return Err(cur.err(format!("maxval {maxval} outside [1, 65535]")));
    }
    let maxval = maxval as u16;
    let count = width
        .checked_mul(height)
        .and_then(|n| n.checked_mul(channels))
        .and_then(|n| usize::try_from(n).ok())
        .ok_or_else(|| cur.err("image dimensions overflow"))?;
    let scale = 1.0 / f64::from(maxval);

    let samples: Vec<f64> = match encoding {
        Encoding::Binary => {
            // Exactly one whitespace byte separates the header from the raster.
            match bytes.get(cur.pos) {
                Some(b) if b.is_ascii_whitespace() => cur.pos += 1,
                Some(_) => return Err(cur.err("missing whitespace before raster")),
                None => return Err(cur.err("truncated before raster")),
            }
            let bytes_per_sample = if maxval > 255 { 2 } else { 1 };
            let needed = count
                .checked_mul(bytes_per_sample)
                .ok_or_else(|| cur.err("raster size overflows"))?;
            let available = bytes.len() - cur.pos;
            if available < needed {
                return Err(Error::Format {
                    offset: bytes.len(),
                    message: format!("truncated raster: need {needed} bytes, found {available}"),
                });
            }
            let raster = &bytes[cur.pos..cur.pos + needed];
            let raw: Vec<u16> = if bytes_per_sample == 1 {
                raster.iter().map(|&b| u16::from(b)).collect()
            } else {
                raster
                    .chunks_exact(2)
                    .map(|p| u16::from_be_bytes([p[0], p[1]]))
                    .collect()
            };
            if let Some(i) = raw.iter().position(|&s| s > maxval) {
                return Err(Error::Format {
                    offset: cur.pos + i * bytes_per_sample,
                    message: format!("sample {} exceeds maxval {maxval}", raw[i]),
                });
            }
            raw.into_iter().map(|s| f64::from(s) * scale).collect()
        }
        Encoding::Ascii => {
            // Each ASCII sample needs at least one digit plus a separator.
            if (bytes.len() - cur.pos) < count {
                return Err(Error::Format {
                    offset: bytes.len(),
                    message: format!("truncated raster: {count} samples expected"),
                });
            }
            let mut out = Vec::with_capacity(count);
            for _ in 0..count {
                let at = cur.pos;
                let s = cur.read_uint("sample")?;
                if s > u64::from(maxval) {
                    return Err(Error::Format {
                        offset: at,
                        message: format!("sample {s} exceeds maxval {maxval}"),
                    });
                }
                out.push(s as f64 * scale);
            }
            out
        }
    };

    let (w, h) = (width as usize, height as usize);
    let pixels = if channels == 1 {
        Pixels::Gray(ImageF::new(w, h, samples)?)
    } else {
        let mut planes = [
            Vec::with_capacity(w * h),
            Vec::with_capacity(w * h),
            Vec::with_capacity(w * h),
        ];
        for px in samples.chunks_exact(3) {
            for (plane, &v) in planes.iter_mut().zip(px) {
                plane.push(v);
            }
        }
        Pixels::Rgb(ImageRGB::new(w, h, planes)?)
    };
    Ok(Decoded { pixels, maxval })
}

#[inline]
fn quantize(v: f64, maxval: u16) -> u16 {
    (v.clamp(0.0, 1.0) * f64::from(maxval)).round() as u16
}

fn check_maxval(maxval: u32) -> Result<u16> {
    if (1..=65535).contains(&maxval) {
        Ok(maxval as u16)
    } else {
        Err(Error::InvalidParameter(format!(
            "maxval {maxval} outside [1, 65535]"
        )))
    }
}

fn push_sample(out: &mut Vec<u8>, s: u16, maxval: u16) {
    if maxval > 255 {
        out.extend_from_slice(&s.to_be_bytes());
    } else {
        out.push(s as u8);
    }
}

/// Encodes `pixels` as binary PGM (gray) or PPM (color).
///
/// Values are clamped to `[0, 1]` and quantized as `round(v * maxval)`.
pub fn write_pnm(pixels: &Pixels, maxval: u32) -> Result<Vec<u8>> {
    let maxval = check_maxval(maxval)?;
    let (magic, w, h, channels) = match pixels {
        Pixels::Gray(g) => ("P5", g.width(), g.height(), 1),
        Pixels::Rgb(c) => ("P6", c.width(), c.height(), 3),
    };
    let bps = if maxval > 255 { 2 } else { 1 };
    let header = format!("{magic}\n{w} {h}\n{maxval}\n");
    let mut out = Vec::with_capacity(header.len() + w * h * channels * bps);
    out.extend_from_slice(header.as_bytes());
    match pixels {
        Pixels::Gray(g) => {
            for &v in g.data() {
                push_sample(&mut out, quantize(v, maxval), maxval);
            }
        }
        Pixels::Rgb(c) => {
            let [r, g, b] = c.planes();
            for i in 0..w * h {
                for plane in [r, g, b] {
                    push_sample(&mut out, quantize(plane[i], maxval), maxval);
                }
            }
        }
    }
    Ok(out)
}

/// Convenience wrapper for writing a grayscale image.
pub fn write_pgm(img: &ImageF, maxval: u32) -> Result<Vec<u8>> {
    write_pnm(&Pixels::Gray(img.clone()), maxval)
}

pub const LUMA_WEIGHTS: [f64; 3] = [0.299, 0.587, 0.114];

/// BT.601 luma: `0.299 R + 0.587 G + 0.114 B`.
pub fn to_luminance(img: &ImageRGB) -> ImageF {
    let [r, g, b] = img.planes();
    let data = r
        .iter()
        .zip(g)
        .zip(b)
        .map(|((&r, &g), &b)| LUMA_WEIGHTS[0] * r + LUMA_WEIGHTS[1] * g + LUMA_WEIGHTS[2] * b)
        .collect();
    ImageF {
        width: img.width,
        height: img.height,
        data,
    }
}

/// Square crop of side `size`, placed at `floor((dim - size) / 2)` on each axis.
pub fn center_crop(img: &ImageF, size: usize) -> Result<ImageF> {
    if size == 0 || size > img.width.min(img.height) {
        return Err(Error::Geometry(format!(
            "cannot crop {size}x{size} from {}x{}",
            img.width, img.height
        )));
    }
    let row0 = (img.height - size) / 2;
    let col0 = (img.width - size) / 2;
    let mut data = Vec::with_capacity(size * size);
    for r in row0..row0 + size {
        let start = r * img.width + col0;
        data.extend_from_slice(&img.data[start..start + size]);
    }
    Ok(ImageF {
        width: size,
        height: size,
        data,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn gray(d: &Decoded) -> &ImageF {
        match &d.pixels {
            Pixels::Gray(g) => g,
            Pixels::Rgb(_) => panic!("expected gray"),
        }
    }

    #[test]
    fn binary_pgm_scales_by_maxval() {
        let mut bytes = b"P5\n2 2\n255\n".to_vec();
        bytes.extend_from_slice(&[0, 255, 128, 64]);
        let d = parse_pnm(&bytes).unwrap();
        assert_eq!(d.maxval, 255);
        assert_eq!(
            gray(&d).data(),
            &[0.0, 1.0, 128.0 / 255.0, 64.0 / 255.0]
        );
    }

    #[test]
    fn ascii_pgm_matches_binary() {
        let mut bin = b"P5\n2 2\n255\n".to_vec();
        bin.extend_from_slice(&[0, 255, 128, 64]);
        let ascii = b"P2\n# a comment\n2 2\n255\n0 255\n128 64\n";
        assert_eq!(parse_pnm(&bin).unwrap(), parse_pnm(ascii).unwrap());
    }

    #[test]
    fn comments_anywhere_in_header() {
        let bytes = b"P2 #c1\n 2 #c2\n1 # c3\n9\n3 9";
        let d = parse_pnm(bytes).unwrap();
        assert_eq!(gray(&d).data(), &[3.0 / 9.0, 1.0]);
    }

    #[test]
    fn sixteen_bit_big_endian() {
        let mut bytes = b"P5 1 2 65535\n".to_vec();
        bytes.extend_from_slice(&[0xff, 0xff, 0x80, 0x00]);
        let d = parse_pnm(&bytes).unwrap();
        assert_eq!(gray(&d).data(), &[1.0, 32768.0 / 65535.0]);
    }

    #[test]
    fn ppm_planes() {
        let mut bytes = b"P6\n2 1\n255\n".to_vec();
        bytes.extend_from_slice(&[255, 0, 0, 0, 255, 0]);
        let d = parse_pnm(&bytes).unwrap();
        let Pixels::Rgb(c) = d.pixels else { panic!() };
        assert_eq!(c.planes()[0], vec![1.0, 0.0]);
        assert_eq!(c.planes()[1], vec![0.0, 1.0]);
        assert_eq!(c.planes()[2], vec![0.0, 0.0]);
        let p3 = b"P3 2 1 255 255 0 0 0 255 0";
        assert_eq!(parse_pnm(p3).unwrap().pixels, Pixels::Rgb(c));
    }

    #[test]
    fn truncated_payload_reports_offset() {
        let mut bytes = b"P5\n2 2\n255\n".to_vec();
        bytes.extend_from_slice(&[1, 2, 3]);
        match parse_pnm(&bytes) {
            Err(Error::Format { offset, .. }) => assert_eq!(offset, bytes.len()),
            other => panic!("unexpected {other:?}"),
        }
        match parse_pnm(b"P2 2 2 255 1 2 3") {
            Err(Error::Format { .. }) => {}
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn unsupported_magic() {
        assert!(matches!(
            parse_pnm(b"P4\n1 1\n\x00"),
            Err(Error::UnsupportedFormat(_))
        ));
        assert!(matches!(
            parse_pnm(b"\x89PNG"),
            Err(Error::UnsupportedFormat(_))
        ));
    }

    #[test]
    fn bad_maxval_and_samples() {
        assert!(parse_pnm(b"P2 1 1 0 0").is_err());
        assert!(parse_pnm(b"P2 1 1 65536 0").is_err());
        assert!(parse_pnm(b"P2 1 1 10 11").is_err());
        assert!(parse_pnm(b"P5 1 1 10 \x0b").is_err());
    }

    #[test]
    fn write_constant_half() {
        let img = ImageF::filled(3, 2, 0.5).unwrap();
        let bytes = write_pgm(&img, 255).unwrap();
        assert_eq!(&bytes[..11], b"P5\n3 2\n255\n");
        assert!(bytes[11..].iter().all(|&b| b == 128));
    }

    #[test]
    fn write_clamps_out_of_range() {
        let img = ImageF::new(2, 1, vec![1.5, -0.2]).unwrap();
        let bytes = write_pgm(&img, 1000).unwrap();
        let raster = &bytes[bytes.len() - 4..];
        assert_eq!(raster, &[0x03, 0xe8, 0x00, 0x00]);
    }

    #[test]
    fn write_rejects_bad_maxval() {
        let img = ImageF::filled(1, 1, 0.0).unwrap();
        assert!(write_pgm(&img, 0).is_err());
        assert!(write_pgm(&img, 65536).is_err());
    }

    #[test]
    fn luminance_weights() {
        let white = ImageRGB::new(1, 1, [vec![1.0], vec![1.0], vec![1.0]]).unwrap();
        assert!((to_luminance(&white).data()[0] - 1.0).abs() < 1e-15);
        let green = ImageRGB::new(1, 1, [vec![0.0], vec![1.0], vec![0.0]]).unwrap();
        assert_eq!(to_luminance(&green).data()[0], 0.587);
    }

    #[test]
    fn crop_cases() {
        let img = ImageF::from_fn(256, 256, |r, c| (r * 256 + c) as f64).unwrap();
        assert_eq!(center_crop(&img, 256).unwrap(), img);

        let img = ImageF::from_fn(5, 5, |r, c| (r * 10 + c) as f64).unwrap();
        let crop = center_crop(&img, 3).unwrap();
        assert_eq!(
            crop.data(),
            &[11.0, 12.0, 13.0, 21.0, 22.0, 23.0, 31.0, 32.0, 33.0]
        );

        // 257 rows, 256 columns: both offsets floor to zero.
        let img = ImageF::from_fn(256, 257, |r, c| (r * 1000 + c) as f64).unwrap();
        let crop = center_crop(&img, 256).unwrap();
        assert_eq!(crop.get(0, 0), 0.0);
        assert_eq!(crop.get(255, 255), 255_255.0);

        assert!(matches!(center_crop(&img, 258), Err(Error::Geometry(_))));
        assert!(center_crop(&img, 0).is_err());
    }

    #[test]
    fn image_invariants() {
        assert!(ImageF::new(0, 1, vec![]).is_err());
        assert!(ImageF::new(2, 2, vec![0.0; 3]).is_err());
        assert!(ImageF::new(1, 1, vec![f64::NAN]).is_err());
    }

    /// Canonical binary file built from arbitrary raw samples.
    fn canonical_file() -> impl Strategy<Value = Vec<u8>> {
        (1usize..12, 1usize..12, 1u32..=65535, any::<bool>(), any::<u64>()).prop_map(
            |(w, h, maxval, color, seed)| {
                let ch = if color { 3 } else { 1 };
                let magic = if color { "P6" } else { "P5" };
                let mut out = format!("{magic}\n{w} {h}\n{maxval}\n").into_bytes();
                let mut state = seed;
                for _ in 0..w * h * ch {
                    state = state
                        .wrapping_mul(6364136223846793005)
                        .wrapping_add(1442695040888963407);
                    let s = ((state >> 33) % (u64::from(maxval) + 1)) as u16;
                    if maxval > 255 {
                        out.extend_from_slice(&s.to_be_bytes());
                    } else {
                        out.push(s as u8);
                    }
                }
                out
            },
        )
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(100))]

        #[test]
        fn write_parse_roundtrip_is_byte_identical(bytes in canonical_file()) {
            let d = parse_pnm(&bytes).unwrap();
            let again = write_pnm(&d.pixels, u32::from(d.maxval)).unwrap();
            prop_assert_eq!(again, bytes);
        }

        #[test]
        fn parse_never_panics(bytes in proptest::collection::vec(any::<u8>(), 0..64)) {
            let _ = parse_pnm(&bytes);
        }

        #[test]
        fn parse_mutated_headers_never_panics(
            bytes in canonical_file(),
            cut in 0usize..40,
            flip in any::<(usize, u8)>(),
        ) {
            let mut b = bytes.clone();
            let i = flip.0 % b.len();
            b[i] = flip.1;
            b.truncate(b.len().saturating_sub(cut));
            if let Ok(d) = parse_pnm(&b) {
                let img = d.pixels.into_luminance();
                prop_assert!(img.data().iter().all(|v| v.is_finite()));
            }
        }

        #[test]
        fn sixteen_bit_quantization_bound(values in proptest::collection::vec(0.0f64..=1.0, 1..50)) {
            let n = values.len();
            let img = ImageF::new(n, 1, values).unwrap();
            let back = parse_pnm(&write_pgm(&img, 65535).unwrap()).unwrap().pixels.into_luminance();
            for (a, b) in img.data().iter().zip(back.data()) {
                prop_assert!((a - b).abs() <= 0.5 / 65535.0 + 1e-15);
            }
        }

        #[test]
        fn luminance_is_convex(px in proptest::collection::vec((0.0f64..=1.0, 0.0f64..=1.0, 0.0f64..=1.0), 1..40)) {
            let n = px.len();
            let planes = [
                px.iter().map(|p| p.0).collect::<Vec<_>>(),
                px.iter().map(|p| p.1).collect(),
                px.iter().map(|p| p.2).collect(),
            ];
            let lo = planes.iter().flatten().cloned().fold(f64::INFINITY, f64::min);
            let hi = planes.iter().flatten().cloned().fold(f64::NEG_INFINITY, f64::max);
            let img = ImageRGB::new(n, 1, planes).unwrap();
            for &v in to_luminance(&img).data() {
                prop_assert!(v >= lo - 1e-12 && v <= hi + 1e-12);
            }
        }
    }
}
