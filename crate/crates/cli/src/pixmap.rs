//! Binary PGM (P5) and PPM (P6) images with 8-bit samples.
//!
//! Only `maxval = 255` is accepted. Writing always produces the canonical
//! header `P5\n{w} {h}\n255\n` (or `P6`), so `write(read(bytes)) == bytes`
//! for canonically formatted files.

use std::fmt;

use lowrank_core::matrix::DenseMatrix;

#[derive(Debug)]
pub enum PixmapError {
    BadMagic,
    Truncated,
    UnsupportedMaxval(u32),
    Malformed(String),
}

impl fmt::Display for PixmapError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            PixmapError::BadMagic => write!(f, "not a binary PGM/PPM file (expected P5 or P6)"),
            PixmapError::Truncated => write!(f, "truncated pixel payload"),
            PixmapError::UnsupportedMaxval(v) => {
                write!(f, "unsupported maxval {v} (only 255 is supported)")
            }
            PixmapError::Malformed(msg) => write!(f, "malformed pixmap header: {msg}"),
        }
    }
}

impl std::error::Error for PixmapError {}

/// An 8-bit grayscale or RGB image.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PixmapImage {
    pub width: usize,
    pub height: usize,
    /// 1 (grayscale) or 3 (RGB).
    pub channels: usize,
    /// Row-major, channel-interleaved samples; length `width*height*channels`.
    pub samples: Vec<u8>,
}

pub const PEAK: f64 = 255.0;

impl PixmapImage {
    pub fn new(width: usize, height: usize, channels: usize, samples: Vec<u8>) -> Self {
        assert!(channels == 1 || channels == 3);
        assert_eq!(samples.len(), width * height * channels);
        PixmapImage {
            width,
            height,
            channels,
            samples,
        }
    }

    /// One channel as a matrix of sample values in `[0, 255]`.
    pub fn channel_matrix(&self, c: usize) -> DenseMatrix {
        assert!(c < self.channels);
        DenseMatrix::from_fn(self.height, self.width, |i, j| {
            self.samples[(i * self.width + j) * self.channels + c] as f64
        })
    }

    /// BT.601 luminance (0.299 R + 0.587 G + 0.114 B); for grayscale images
    /// this is the single channel itself.
    pub fn luminance(&self) -> DenseMatrix {
        if self.channels == 1 {
            return self.channel_matrix(0);
        }
        DenseMatrix::from_fn(self.height, self.width, |i, j| {
            let base = (i * self.width + j) * 3;
            0.299 * self.samples[base] as f64
                + 0.587 * self.samples[base + 1] as f64
                + 0.114 * self.samples[base + 2] as f64
        })
    }

    /// Grayscale image from a matrix, clamping to `[0, 255]` and rounding.
    pub fn from_matrix(m: &DenseMatrix) -> Self {
        let samples = m
            .entries()
            .iter()
            .map(|&v| v.round().clamp(0.0, PEAK) as u8)
            .collect();
        PixmapImage::new(m.cols(), m.rows(), 1, samples)
    }

    /// RGB image from three channel matrices of one shape.
    pub fn from_channels(channels: [&DenseMatrix; 3]) -> Self {
        let (rows, cols) = channels[0].shape();
        let mut samples = Vec::with_capacity(rows * cols * 3);
        for i in 0..rows {
            for j in 0..cols {
                for ch in channels {
                    samples.push(ch.get(i, j).round().clamp(0.0, PEAK) as u8);
                }
            }
        }
        PixmapImage::new(cols, rows, 3, samples)
    }
}

/// Parse a binary P5/P6 pixmap.
pub fn read_pixmap(bytes: &[u8]) -> Result<PixmapImage, PixmapError> {
    let channels = match bytes.get(0..2) {
        Some(b"P5") => 1,
        Some(b"P6") => 3,
        _ => return Err(PixmapError::BadMagic),
    };
    let mut pos = 2;
    let width = read_header_int(bytes, &mut pos)?;
    let height = read_header_int(bytes, &mut pos)?;
    let maxval = read_header_int(bytes, &mut pos)?;
    if maxval != 255 {
        return Err(PixmapError::UnsupportedMaxval(maxval as u32));
    }
    // exactly one whitespace byte separates the header from the payload
    match bytes.get(pos) {
        Some(b) if b.is_ascii_whitespace() => pos += 1,
        _ => return Err(PixmapError::Malformed("missing separator after maxval".into())),
    }
    if width == 0 || height == 0 {
        return Err(PixmapError::Malformed("zero image dimension".into()));
    }
    let need = width * height * channels;
    let payload = bytes.get(pos..).ok_or(PixmapError::Truncated)?;
    if payload.len() < need {
        return Err(PixmapError::Truncated);
    }
    if payload.len() > need {
        return Err(PixmapError::Malformed(format!(
            "{} trailing bytes after pixel data",
            payload.len() - need
        )));
    }
    Ok(PixmapImage::new(width, height, channels, payload.to_vec()))
}

/// Serialize in canonical form.
pub fn write_pixmap(img: &PixmapImage) -> Vec<u8> {
    let magic = if img.channels == 1 { "P5" } else { "P6" };
    let mut out = format!("{magic}\n{} {}\n255\n", img.width, img.height).into_bytes();
    out.extend_from_slice(&img.samples);
    out
}

/// Read a whitespace-delimited decimal, skipping `#` comment lines.
fn read_header_int(bytes: &[u8], pos: &mut usize) -> Result<usize, PixmapError> {
    loop {
        match bytes.get(*pos) {
            Some(b) if b.is_ascii_whitespace() => *pos += 1,
            Some(b'#') => {
                while let Some(&b) = bytes.get(*pos) {
                    *pos += 1;
                    if b == b'\n' {
                        break;
                    }
                }
            }
            Some(b) if b.is_ascii_digit() => break,
            Some(_) => return Err(PixmapError::Malformed("unexpected byte in header".into())),
            None => return Err(PixmapError::Truncated),
        }
    }
    let mut v: usize = 0;
    let mut any = false;
    while let Some(&b) = bytes.get(*pos) {
        if b.is_ascii_digit() {
            v = v
                .checked_mul(10)
                .and_then(|v| v.checked_add((b - b'0') as usize))
                .ok_or_else(|| PixmapError::Malformed("header value overflow".into()))?;
            *pos += 1;
            any = true;
        } else {
            break;
        }
    }
    if !any {
        return Err(PixmapError::Malformed("expected a decimal value".into()));
    }
    Ok(v)
}

/// Deterministic structured grayscale test image: a sum of separable smooth
/// profiles, so the underlying matrix has low rank before 8-bit
/// quantization. The component weights are kept comparable so no single
/// direction dominates the spectrum. Useful wherever a completion target
/// with a known clean structure is needed.
pub fn synthetic_test_image(size: usize) -> PixmapImage {
    let n = size as f64;
    // every profile is delocalized over [0, 1]; localized features would
    // concentrate the singular vectors on a few rows or columns and make
    // uniform entry sampling blind to them
    let profile = |k: usize, t: f64| -> f64 {
        match k {
            0 => (2.0 * std::f64::consts::PI * t).sin(),
            1 => (5.0 * std::f64::consts::PI * t).cos(),
            2 => 2.0 * t - 1.0,
            3 => (3.0 * std::f64::consts::PI * t + 0.7).cos(),
            4 => 8.0 * (t - 0.5) * (t - 0.5) - 0.667,
            _ => (3.0 * std::f64::consts::PI * t * t).sin(),
        }
    };
    let weights = [55.0, 50.0, 60.0, 55.0, 50.0, 45.0];
    let raw = DenseMatrix::from_fn(size, size, |i, j| {
        let x = i as f64 / n;
        let y = j as f64 / n;
        let mut v = 40.0 * (profile(0, x) * profile(1, y) - profile(2, x) * profile(5, y));
        for (k, w) in weights.iter().enumerate() {
            v += w * profile(k, x) * profile((k + 2) % 6, y);
        }
        v
    });
    // affine map onto [2, 253]: keeps the matrix exactly low-rank (the
    // offset only adds a rank-one term) and uses the full 8-bit range
    let lo = raw.entries().iter().cloned().fold(f64::INFINITY, f64::min);
    let hi = raw.entries().iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let scale = if hi > lo { 251.0 / (hi - lo) } else { 0.0 };
    let m = DenseMatrix::from_fn(size, size, |i, j| 2.0 + scale * (raw.get(i, j) - lo));
    PixmapImage::from_matrix(&m)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn one_pixel_p5() {
        let img = read_pixmap(b"P5\n1 1\n255\n\0").unwrap();
        assert_eq!((img.width, img.height, img.channels), (1, 1, 1));
        assert_eq!(img.samples, vec![0]);
    }

    #[test]
    fn canonical_round_trip() {
        let mut samples = Vec::new();
        for i in 0..(16 * 16 * 3) {
            samples.push((i * 37 % 256) as u8);
        }
        let img = PixmapImage::new(16, 16, 3, samples);
        let bytes = write_pixmap(&img);
        let back = read_pixmap(&bytes).unwrap();
        assert_eq!(back, img);
        assert_eq!(write_pixmap(&back), bytes);
    }

    #[test]
    fn header_comments_are_skipped() {
        let img = read_pixmap(b"P5\n# a comment\n2 1\n255\n\x01\x02").unwrap();
        assert_eq!(img.samples, vec![1, 2]);
    }

    #[test]
    fn bad_inputs_are_rejected() {
        assert!(matches!(read_pixmap(b"P4\n1 1\n255\n\0"), Err(PixmapError::BadMagic)));
        assert!(matches!(
            read_pixmap(b"P5\n2 2\n255\n\0\0"),
            Err(PixmapError::Truncated)
        ));
        assert!(matches!(
            read_pixmap(b"P5\n1 1\n65535\n\0\0"),
            Err(PixmapError::UnsupportedMaxval(65535))
        ));
    }

    #[test]
    fn luminance_uses_bt601_weights() {
        let img = PixmapImage::new(1, 1, 3, vec![100, 200, 50]);
        let y = img.luminance();
        let expect = 0.299 * 100.0 + 0.587 * 200.0 + 0.114 * 50.0;
        assert!((y.get(0, 0) - expect).abs() < 1e-12);
    }

    #[test]
    fn synthetic_image_is_numerically_low_rank() {
        let img = synthetic_test_image(64);
        let m = img.channel_matrix(0);
        // quantization adds broadband noise; the clean structure still
        // dominates the spectrum
        let f = lowrank_core::svd::svd(&m).unwrap();
        let head: f64 = f.singular.iter().take(8).map(|s| s * s).sum();
        let total: f64 = f.singular.iter().map(|s| s * s).sum();
        assert!(head / total > 0.999, "head energy {}", head / total);
    }

    #[test]
    fn from_matrix_clamps() {
        let m = DenseMatrix::from_vec(1, 3, vec![-5.0, 300.0, 127.4]).unwrap();
        let img = PixmapImage::from_matrix(&m);
        assert_eq!(img.samples, vec![0, 255, 127]);
    }
}
