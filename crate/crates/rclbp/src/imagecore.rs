//! Grayscale image carrier, file I/O, calibrated noise, and synthetic
//! textures.
//!
//! Images travel through the pipeline as `f64` rasters. Values are nominal
//! 8-bit gray levels in `[0, 255]` but intermediate stages may leave that
//! range freely; quantization (clamp, then round half away from zero)
//! happens only when exporting to an 8-bit file.

use std::fs;
use std::path::Path;

use crate::error::{Error, Result};
use crate::rng::{GaussianSource, SplitMix64};

// ======================= Image carrier =======================

/// Row-major grayscale raster with `f64` samples.
#[derive(Debug, Clone, PartialEq)]
pub struct GrayImage {
    width: usize,
    height: usize,
    pixels: Vec<f64>,
}

impl GrayImage {
    /// Builds an image from a row-major pixel buffer, checking shape and
    /// finiteness.
    pub fn new(width: usize, height: usize, pixels: Vec<f64>) -> Result<Self> {
        if width == 0 || height == 0 {
            return Err(Error::InvalidDimensions(format!("{width}x{height}")));
        }
        if pixels.len() != width * height {
            return Err(Error::DimensionMismatch(format!(
                "{width}x{height} image needs {} pixels, got {}",
                width * height,
                pixels.len()
            )));
        }
        if let Some(bad) = pixels.iter().find(|v| !v.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "non-finite pixel value {bad}"
            )));
        }
        Ok(Self {
            width,
            height,
            pixels,
        })
    }

    /// Builds an image by evaluating `f(x, y)` at every pixel.
    ///
    /// Panics if either extent is zero.
    pub fn from_fn(width: usize, height: usize, mut f: impl FnMut(usize, usize) -> f64) -> Self {
        assert!(width > 0 && height > 0, "image extents must be positive");
        let mut pixels = Vec::with_capacity(width * height);
        for y in 0..height {
            for x in 0..width {
                pixels.push(f(x, y));
            }
        }
        Self {
            width,
            height,
            pixels,
        }
    }

    pub fn constant(width: usize, height: usize, value: f64) -> Self {
        Self::from_fn(width, height, |_, _| value)
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn dims(&self) -> (usize, usize) {
        (self.width, self.height)
    }

    pub fn len(&self) -> usize {
        self.pixels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pixels.is_empty()
    }

    #[inline]
    pub fn get(&self, x: usize, y: usize) -> f64 {
        debug_assert!(x < self.width && y < self.height);
        self.pixels[y * self.width + x]
    }

    #[inline]
    pub fn set(&mut self, x: usize, y: usize, value: f64) {
        debug_assert!(x < self.width && y < self.height);
        self.pixels[y * self.width + x] = value;
    }

    pub fn pixels(&self) -> &[f64] {
        &self.pixels
    }

    pub fn pixels_mut(&mut self) -> &mut [f64] {
        &mut self.pixels
    }

    #[inline]
    pub fn row(&self, y: usize) -> &[f64] {
        &self.pixels[y * self.width..(y + 1) * self.width]
    }

    pub fn same_dims(&self, other: &GrayImage) -> bool {
        self.width == other.width && self.height == other.height
    }

    /// Pixel-wise map into a new image.
    pub fn map(&self, f: impl Fn(f64) -> f64) -> GrayImage {
        GrayImage {
            width: self.width,
            height: self.height,
            pixels: self.pixels.iter().map(|&v| f(v)).collect(),
        }
    }
}

fn require_same_dims(a: &GrayImage, b: &GrayImage, what: &str) -> Result<()> {
    if a.same_dims(b) {
        Ok(())
    } else {
        Err(Error::DimensionMismatch(format!(
            "{what}: {}x{} vs {}x{}",
            a.width, a.height, b.width, b.height
        )))
    }
}

/// Pixel-wise sum; errors on mismatched dimensions.
pub fn add_images(a: &GrayImage, b: &GrayImage) -> Result<GrayImage> {
    require_same_dims(a, b, "add")?;
    let pixels = a
        .pixels
        .iter()
        .zip(&b.pixels)
        .map(|(&x, &y)| x + y)
        .collect();
    Ok(GrayImage {
        width: a.width,
        height: a.height,
        pixels,
    })
}

/// Pixel-wise difference `a - b`; errors on mismatched dimensions.
pub fn sub_images(a: &GrayImage, b: &GrayImage) -> Result<GrayImage> {
    require_same_dims(a, b, "subtract")?;
    let pixels = a
        .pixels
        .iter()
        .zip(&b.pixels)
        .map(|(&x, &y)| x - y)
        .collect();
    Ok(GrayImage {
        width: a.width,
        height: a.height,
        pixels,
    })
}

/// Root-mean-square error between two equally sized images.
pub fn rmse(a: &GrayImage, b: &GrayImage) -> Result<f64> {
    require_same_dims(a, b, "rmse")?;
    let sum_sq: f64 = a
        .pixels
        .iter()
        .zip(&b.pixels)
        .map(|(&x, &y)| (x - y) * (x - y))
        .sum();
    Ok((sum_sq / a.pixels.len() as f64).sqrt())
}

/// Quantizes a pixel value to an 8-bit gray level: round half away from
/// zero, then clamp to `[0, 255]`.
#[inline]
pub fn quantize_u8(value: f64) -> u8 {
    value.round().clamp(0.0, 255.0) as u8
}

/// Round-trips every pixel through 8-bit quantization.
pub fn quantize_image(img: &GrayImage) -> GrayImage {
    img.map(|v| quantize_u8(v) as f64)
}

// ======================= File I/O =======================

/// Loads an 8-bit grayscale image. Supported containers: binary PGM (P5)
/// and grayscale PNG, selected by file extension.
pub fn load_image(path: &Path) -> Result<GrayImage> {
    match extension_of(path)?.as_str() {
        "pgm" => load_pgm(path),
        "png" => load_png(path),
        other => Err(Error::UnsupportedImage {
            path: path.to_path_buf(),
            reason: format!("unsupported image format .{other}"),
        }),
    }
}

/// Saves an image as 8-bit grayscale, quantizing each pixel. The container
/// is selected by file extension (`.pgm` or `.png`).
pub fn save_image(img: &GrayImage, path: &Path) -> Result<()> {
    match extension_of(path)?.as_str() {
        "pgm" => save_pgm(img, path),
        "png" => save_png(img, path),
        other => Err(Error::UnsupportedImage {
            path: path.to_path_buf(),
            reason: format!("unsupported image format .{other}"),
        }),
    }
}

fn extension_of(path: &Path) -> Result<String> {
    path.extension()
        .and_then(|e| e.to_str())
        .map(|e| e.to_ascii_lowercase())
        .ok_or_else(|| Error::UnsupportedImage {
            path: path.to_path_buf(),
            reason: "missing file extension".into(),
        })
}

fn load_pgm(path: &Path) -> Result<GrayImage> {
    let bytes = fs::read(path).map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })?;
    let bad = |reason: &str| Error::UnsupportedImage {
        path: path.to_path_buf(),
        reason: reason.to_string(),
    };

    let mut pos = 0usize;
    // Header tokens may be separated by whitespace and '#' comment lines.
    let next_token = |bytes: &[u8], pos: &mut usize| -> Option<String> {
        loop {
            while *pos < bytes.len() && bytes[*pos].is_ascii_whitespace() {
                *pos += 1;
            }
            if *pos < bytes.len() && bytes[*pos] == b'#' {
                while *pos < bytes.len() && bytes[*pos] != b'\n' {
                    *pos += 1;
                }
                continue;
            }
            break;
        }
        let start = *pos;
        while *pos < bytes.len() && !bytes[*pos].is_ascii_whitespace() {
            *pos += 1;
        }
        if *pos > start {
            Some(String::from_utf8_lossy(&bytes[start..*pos]).into_owned())
        } else {
            None
        }
    };

    let magic = next_token(&bytes, &mut pos).ok_or_else(|| bad("truncated header"))?;
    if magic != "P5" {
        return Err(bad(&format!("not a binary PGM (magic {magic:?})")));
    }
    let mut parse_dim = |name: &str| -> Result<usize> {
        next_token(&bytes, &mut pos)
            .ok_or_else(|| bad("truncated header"))?
            .parse::<usize>()
            .map_err(|_| bad(&format!("invalid {name} field")))
    };
    let width = parse_dim("width")?;
    let height = parse_dim("height")?;
    let maxval = parse_dim("maxval")?;
    if width == 0 || height == 0 {
        return Err(Error::InvalidDimensions(format!("{width}x{height}")));
    }
    if maxval == 0 || maxval > 255 {
        return Err(bad(&format!("unsupported bit depth (maxval {maxval})")));
    }
    // Exactly one whitespace byte separates the header from raster data.
    if pos >= bytes.len() || !bytes[pos].is_ascii_whitespace() {
        return Err(bad("missing raster separator"));
    }
    pos += 1;
    let expected = width * height;
    let raster = &bytes[pos..];
    if raster.len() < expected {
        return Err(bad(&format!(
            "truncated raster: expected {expected} bytes, found {}",
            raster.len()
        )));
    }
    let pixels = raster[..expected].iter().map(|&b| b as f64).collect();
    GrayImage::new(width, height, pixels)
}

fn save_pgm(img: &GrayImage, path: &Path) -> Result<()> {
    let mut out = format!("P5\n{} {}\n255\n", img.width, img.height).into_bytes();
    out.extend(img.pixels.iter().map(|&v| quantize_u8(v)));
    fs::write(path, out).map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })
}

fn load_png(path: &Path) -> Result<GrayImage> {
    let dynamic = image::ImageReader::open(path)
        .map_err(|source| Error::Io {
            path: path.to_path_buf(),
            source,
        })?
        .decode()
        .map_err(|e| Error::UnsupportedImage {
            path: path.to_path_buf(),
            reason: format!("failed to decode PNG: {e}"),
        })?;
    match dynamic {
        image::DynamicImage::ImageLuma8(buf) => {
            let (w, h) = (buf.width() as usize, buf.height() as usize);
            let pixels = buf.into_raw().into_iter().map(|b| b as f64).collect();
            GrayImage::new(w, h, pixels)
        }
        image::DynamicImage::ImageLuma16(_) => Err(Error::UnsupportedImage {
            path: path.to_path_buf(),
            reason: "unsupported bit depth (16-bit grayscale)".into(),
        }),
        other => Err(Error::UnsupportedImage {
            path: path.to_path_buf(),
            reason: format!("unsupported color type {:?}", other.color()),
        }),
    }
}

fn save_png(img: &GrayImage, path: &Path) -> Result<()> {
    let mut buf = image::ImageBuffer::<image::Luma<u8>, Vec<u8>>::new(
        img.width as u32,
        img.height as u32,
    );
    for (x, y, px) in buf.enumerate_pixels_mut() {
        *px = image::Luma([quantize_u8(img.get(x as usize, y as usize))]);
    }
    buf.save(path).map_err(|e| Error::UnsupportedImage {
        path: path.to_path_buf(),
        reason: format!("failed to encode PNG: {e}"),
    })
}

// ======================= Calibrated noise =======================

/// Additive Gaussian noise request: a target signal-to-noise ratio in dB
/// and the seed of the noise stream. `snr_db = +inf` means "no noise".
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NoiseSpec {
    pub snr_db: f64,
    pub seed: u64,
}

/// Noise standard deviation required to hit `snr_db` on this image:
/// `sigma^2 = P_s / 10^(snr_db / 10)` with `P_s` the mean squared
/// intensity.
pub(crate) fn noise_sigma_for(img: &GrayImage, snr_db: f64) -> Result<f64> {
    let p_s: f64 = img.pixels.iter().map(|&v| v * v).sum::<f64>() / img.len() as f64;
    if p_s == 0.0 {
        return Err(Error::ZeroSignalPower);
    }
    Ok((p_s / 10f64.powf(snr_db / 10.0)).sqrt())
}

/// Adds white Gaussian noise calibrated so the expected SNR equals
/// `spec.snr_db`. Pixels are left unclamped. Deterministic in
/// `(img, spec)`.
pub fn inject_gaussian_noise(img: &GrayImage, spec: &NoiseSpec) -> Result<GrayImage> {
    if spec.snr_db.is_nan() {
        return Err(Error::InvalidParameter("snr_db is NaN".into()));
    }
    if spec.snr_db == f64::INFINITY {
        return Ok(img.clone());
    }
    if spec.snr_db == f64::NEG_INFINITY {
        return Err(Error::InvalidParameter("snr_db is -inf".into()));
    }
    let sigma = noise_sigma_for(img, spec.snr_db)?;
    let mut gauss = GaussianSource::new(spec.seed);
    let pixels = img.pixels.iter().map(|&v| v + sigma * gauss.sample()).collect();
    Ok(GrayImage {
        width: img.width,
        height: img.height,
        pixels,
    })
}

/// Measured SNR in dB: `10 log10(sum(clean^2) / sum((noisy - clean)^2))`.
pub fn measure_snr(clean: &GrayImage, noisy: &GrayImage) -> Result<f64> {
    require_same_dims(clean, noisy, "measure_snr")?;
    let signal: f64 = clean.pixels.iter().map(|&v| v * v).sum();
    if signal == 0.0 {
        return Err(Error::ZeroSignalPower);
    }
    let noise: f64 = clean
        .pixels
        .iter()
        .zip(&noisy.pixels)
        .map(|(&c, &n)| (n - c) * (n - c))
        .sum();
    if noise == 0.0 {
        return Err(Error::ZeroNoisePower);
    }
    Ok(10.0 * (signal / noise).log10())
}

// ======================= Synthetic textures =======================

/// Texture families for the built-in six-class corpus.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TextureKind {
    Blobs,
    Checker,
    Grating,
    Sinusoid,
    Speckle,
    Stripes,
}

impl TextureKind {
    /// All kinds, in the fixed (lexicographic) corpus order.
    pub const ALL: [TextureKind; 6] = [
        TextureKind::Blobs,
        TextureKind::Checker,
        TextureKind::Grating,
        TextureKind::Sinusoid,
        TextureKind::Speckle,
        TextureKind::Stripes,
    ];

    pub fn name(&self) -> &'static str {
        match self {
            TextureKind::Blobs => "blobs",
            TextureKind::Checker => "checker",
            TextureKind::Grating => "grating",
            TextureKind::Sinusoid => "sinusoid",
            TextureKind::Speckle => "speckle",
            TextureKind::Stripes => "stripes",
        }
    }
}

impl std::str::FromStr for TextureKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "blobs" => Ok(TextureKind::Blobs),
            "checker" => Ok(TextureKind::Checker),
            "grating" => Ok(TextureKind::Grating),
            "sinusoid" => Ok(TextureKind::Sinusoid),
            "speckle" => Ok(TextureKind::Speckle),
            "stripes" => Ok(TextureKind::Stripes),
            other => Err(Error::InvalidParameter(format!(
                "unknown texture kind {other:?}"
            ))),
        }
    }
}

impl std::fmt::Display for TextureKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

/// Gray level the rendered textures are centered on.
const TEXTURE_MID: f64 = 128.0;
/// Contrast squeeze: each texture is laid out at full scale ([0, 255]) and
/// then mapped affinely to `TEXTURE_MID ± 127.5 * TEXTURE_CONTRAST`. This
/// mimics a camera working around a mid-gray operating point. Local
/// binary-pattern features are affine-invariant, so clean-image
/// separability is untouched; but signal power is then dominated by the
/// pedestal, so noise injected at a given SNR is sized against the
/// pedestal rather than the texture contrast, and fine texture fades
/// progressively instead of all at once as SNR drops.
const TEXTURE_CONTRAST: f64 = 0.4;
/// Half-range of the per-pixel grain on the two-level kinds, in full-scale
/// gray levels.
const TEXTURE_GRAIN: f64 = 6.0;

/// Renders a deterministic texture instance. `period` controls the spatial
/// scale; `seed` the per-instance variation (phases, orientations, blob
/// placement). Requires `size >= 8` and `period >= 2`.
pub fn synth_texture(kind: TextureKind, size: usize, period: usize, seed: u64) -> Result<GrayImage> {
    if size < 8 {
        return Err(Error::InvalidParameter(format!(
            "texture size {size} too small (minimum 8)"
        )));
    }
    if period < 2 {
        return Err(Error::InvalidParameter(format!(
            "texture period {period} too small (minimum 2)"
        )));
    }
    let mut rng = SplitMix64::new(seed);
    // The two-level kinds carry a small seeded per-pixel grain around their
    // dark/bright plateaus (full-scale dark in [0, 12], bright in
    // [243, 255]). Real surfaces are never exactly flat; without grain,
    // every local gray-level difference inside a plateau is exactly zero
    // and its sign flips under arbitrarily small perturbations, which
    // makes noise-robustness measurements on these textures degenerate.
    const GRAIN: f64 = TEXTURE_GRAIN;
    let img = match kind {
        TextureKind::Checker => {
            let ox = rng.next_below(2 * period);
            let oy = rng.next_below(2 * period);
            GrayImage::from_fn(size, size, |x, y| {
                let base = if ((x + ox) / period + (y + oy) / period).is_multiple_of(2) {
                    GRAIN
                } else {
                    255.0 - GRAIN
                };
                base + GRAIN * (2.0 * rng.next_f64() - 1.0)
            })
        }
        TextureKind::Stripes => {
            let ox = rng.next_below(2 * period);
            GrayImage::from_fn(size, size, |x, _| {
                let base = if ((x + ox) / period).is_multiple_of(2) {
                    GRAIN
                } else {
                    255.0 - GRAIN
                };
                base + GRAIN * (2.0 * rng.next_f64() - 1.0)
            })
        }
        TextureKind::Grating => {
            // Thin bright lines on a dark background (low duty cycle,
            // unlike the 50% duty cycle of stripes).
            let thickness = (period / 4).max(1);
            let ox = rng.next_below(period);
            GrayImage::from_fn(size, size, |x, _| {
                let base = if (x + ox) % period < thickness {
                    255.0 - GRAIN
                } else {
                    GRAIN
                };
                base + GRAIN * (2.0 * rng.next_f64() - 1.0)
            })
        }
        TextureKind::Sinusoid => {
            let theta = rng.next_f64() * 2.0 * std::f64::consts::PI;
            let phase = rng.next_f64() * 2.0 * std::f64::consts::PI;
            let (s, c) = theta.sin_cos();
            let freq = 2.0 * std::f64::consts::PI / period as f64;
            GrayImage::from_fn(size, size, |x, y| {
                let t = x as f64 * c + y as f64 * s;
                127.5 * (1.0 + (t * freq + phase).sin())
            })
        }
        TextureKind::Blobs => {
            let per_axis = size / period;
            let count = (per_axis * per_axis / 4).max(4);
            let sigma = period as f64 / 2.0;
            let blobs: Vec<(f64, f64, f64)> = (0..count)
                .map(|_| {
                    let cx = rng.next_f64() * size as f64;
                    let cy = rng.next_f64() * size as f64;
                    let amp = 0.5 + rng.next_f64();
                    (cx, cy, amp)
                })
                .collect();
            let field = GrayImage::from_fn(size, size, |x, y| {
                blobs
                    .iter()
                    .map(|&(cx, cy, amp)| {
                        let dx = x as f64 - cx;
                        let dy = y as f64 - cy;
                        amp * (-(dx * dx + dy * dy) / (2.0 * sigma * sigma)).exp()
                    })
                    .sum()
            });
            let lo = field.pixels.iter().cloned().fold(f64::INFINITY, f64::min);
            let hi = field.pixels.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
            let range = if hi - lo > 1e-12 { hi - lo } else { 1.0 };
            // Ratio first: (v - lo) / range lands in [0, 1] exactly, so the
            // scaled value cannot overshoot 255.
            field.map(|v| (v - lo) / range * 255.0)
        }
        TextureKind::Speckle => {
            // Per-pixel white texture; `period` is accepted for interface
            // uniformity but has no spatial meaning at grain size one.
            GrayImage::from_fn(size, size, |_, _| 255.0 * rng.next_f64())
        }
    };
    Ok(img.map(|v| TEXTURE_MID + (v - 127.5) * TEXTURE_CONTRAST))
}

// ======================= Tests =======================
