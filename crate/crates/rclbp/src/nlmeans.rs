//! Non-local means filtering.
//!
//! Each output pixel is a weighted average over a square search window
//! centered on it. The weight of window pixel `j` relative to center `i`
//! is `exp(-d(i,j)/h^2) / Z(i)`, where `d` is the Gaussian-weighted
//! squared distance between the two surrounding patches and `Z(i)`
//! normalizes the weights to sum to one. The self comparison contributes
//! `exp(0) = 1` before normalization, patch reads past the border use
//! mirror (symmetric) padding, and search windows are cropped at the
//! border before normalization.

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::imagecore::GrayImage;

#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
#[serde(default)]
pub struct NlMeansParams {
    /// Half-width of the square search window.
    pub search_radius: usize,
    /// Half-width of the square comparison patch.
    pub patch_radius: usize,
    /// Decay of the exponential weight; larger smooths more.
    pub h: f64,
    /// Standard deviation of the Gaussian patch weighting.
    pub kernel_sigma: f64,
}

impl Default for NlMeansParams {
    fn default() -> Self {
        Self {
            search_radius: 10,
            patch_radius: 3,
            h: 12.0,
            kernel_sigma: 3.0,
        }
    }
}

impl NlMeansParams {
    pub fn validate(&self) -> Result<()> {
        if self.search_radius == 0 {
            return Err(Error::InvalidParameter(
                "search_radius must be at least 1".into(),
            ));
        }
        if !self.h.is_finite() || self.h <= 0.0 {
            return Err(Error::InvalidParameter(format!(
                "h must be positive and finite, got {}",
                self.h
            )));
        }
        if !self.kernel_sigma.is_finite() || self.kernel_sigma <= 0.0 {
            return Err(Error::InvalidParameter(format!(
                "kernel_sigma must be positive and finite, got {}",
                self.kernel_sigma
            )));
        }
        Ok(())
    }

    fn patch_side(&self) -> usize {
        2 * self.patch_radius + 1
    }
}

/// Mirror (symmetric) boundary index: ... 2 1 0 | 0 1 2 ... n-1 | n-1 ...
fn reflect(i: isize, n: usize) -> usize {
    let n = n as isize;
    let mut i = i;
    loop {
        if i < 0 {
            i = -i - 1;
        } else if i >= n {
            i = 2 * n - 1 - i;
        } else {
            return i as usize;
        }
    }
}

/// Normalized Gaussian patch kernel, row-major over the patch square.
fn gaussian_kernel(params: &NlMeansParams) -> Vec<f64> {
    let r = params.patch_radius as isize;
    let side = params.patch_side();
    let two_sigma_sq = 2.0 * params.kernel_sigma * params.kernel_sigma;
    let mut kernel = Vec::with_capacity(side * side);
    for dy in -r..=r {
        for dx in -r..=r {
            kernel.push((-((dx * dx + dy * dy) as f64) / two_sigma_sq).exp());
        }
    }
    let sum: f64 = kernel.iter().sum();
    for k in &mut kernel {
        *k /= sum;
    }
    kernel
}

/// Image extended by `patch_radius` on every side with mirror padding, so
/// patch reads never branch.
fn padded_image(img: &GrayImage, patch_radius: usize) -> (Vec<f64>, usize) {
    let (w, h) = img.dims();
    let r = patch_radius as isize;
    let pw = w + 2 * patch_radius;
    let ph = h + 2 * patch_radius;
    let mut padded = vec![0.0f64; pw * ph];
    for py in 0..ph {
        let sy = reflect(py as isize - r, h);
        for px in 0..pw {
            let sx = reflect(px as isize - r, w);
            padded[py * pw + px] = img.get(sx, sy);
        }
    }
    (padded, pw)
}

fn patch_distance_padded(
    padded: &[f64],
    pw: usize,
    kernel: &[f64],
    side: usize,
    a: (usize, usize),
    b: (usize, usize),
) -> f64 {
    let mut dist = 0.0;
    for row in 0..side {
        let pa = &padded[(a.1 + row) * pw + a.0..(a.1 + row) * pw + a.0 + side];
        let pb = &padded[(b.1 + row) * pw + b.0..(b.1 + row) * pw + b.0 + side];
        let kr = &kernel[row * side..row * side + side];
        for col in 0..side {
            let diff = pa[col] - pb[col];
            dist += kr[col] * diff * diff;
        }
    }
    dist
}

/// Gaussian-weighted squared patch distance between the neighborhoods of
/// pixels `i` and `j` (both in-bounds coordinates). Patch reads past the
/// border are mirrored.
pub fn patch_distance(
    img: &GrayImage,
    i: (usize, usize),
    j: (usize, usize),
    params: &NlMeansParams,
) -> Result<f64> {
    params.validate()?;
    let (w, h) = img.dims();
    for (name, (x, y)) in [("i", i), ("j", j)] {
        if x >= w || y >= h {
            return Err(Error::InvalidParameter(format!(
                "pixel {name} = ({x}, {y}) outside a {w}x{h} image"
            )));
        }
    }
    let kernel = gaussian_kernel(params);
    let (padded, pw) = padded_image(img, params.patch_radius);
    Ok(patch_distance_padded(
        &padded,
        pw,
        &kernel,
        params.patch_side(),
        i,
        j,
    ))
}

/// Normalized weights of every search-window pixel relative to center `i`,
/// in row-major window order. Windows are cropped at the border; weights
/// sum to one.
pub fn nl_weights(
    img: &GrayImage,
    i: (usize, usize),
    params: &NlMeansParams,
) -> Result<Vec<((usize, usize), f64)>> {
    params.validate()?;
    let (w, h) = img.dims();
    let (x, y) = i;
    if x >= w || y >= h {
        return Err(Error::InvalidParameter(format!(
            "center ({x}, {y}) outside a {w}x{h} image"
        )));
    }
    let kernel = gaussian_kernel(params);
    let (padded, pw) = padded_image(img, params.patch_radius);
    let side = params.patch_side();
    let h_sq = params.h * params.h;
    let rs = params.search_radius;

    let x_lo = x.saturating_sub(rs);
    let x_hi = (x + rs).min(w - 1);
    let y_lo = y.saturating_sub(rs);
    let y_hi = (y + rs).min(h - 1);

    let mut entries = Vec::with_capacity((x_hi - x_lo + 1) * (y_hi - y_lo + 1));
    let mut z = 0.0;
    for v in y_lo..=y_hi {
        for u in x_lo..=x_hi {
            let d = patch_distance_padded(&padded, pw, &kernel, side, (x, y), (u, v));
            let weight = (-d / h_sq).exp();
            z += weight;
            entries.push(((u, v), weight));
        }
    }
    for (_, weight) in &mut entries {
        *weight /= z;
    }
    Ok(entries)
}

/// Full non-local means pass over the image.
///
/// The accumulation is phrased as `v(i) + sum(u_j * (v(j) - v(i))) / Z`,
/// algebraically identical to the weighted average but an exact fixed
/// point on constant regions.
pub fn nl_means_filter(img: &GrayImage, params: &NlMeansParams) -> Result<GrayImage> {
    params.validate()?;
    let (w, h) = img.dims();
    let kernel = gaussian_kernel(params);
    let (padded, pw) = padded_image(img, params.patch_radius);
    let side = params.patch_side();
    let h_sq = params.h * params.h;
    let rs = params.search_radius;

    let mut out = vec![0.0f64; w * h];
    out.par_chunks_mut(w).enumerate().for_each(|(y, out_row)| {
        let y_lo = y.saturating_sub(rs);
        let y_hi = (y + rs).min(h - 1);
        for (x, out_px) in out_row.iter_mut().enumerate() {
            let center = img.get(x, y);
            let x_lo = x.saturating_sub(rs);
            let x_hi = (x + rs).min(w - 1);
            let mut z = 0.0;
            let mut acc = 0.0;
            for v in y_lo..=y_hi {
                for u in x_lo..=x_hi {
                    let d = patch_distance_padded(&padded, pw, &kernel, side, (x, y), (u, v));
                    let weight = (-d / h_sq).exp();
                    z += weight;
                    acc += weight * (img.get(u, v) - center);
                }
            }
            *out_px = center + acc / z;
        }
    });
    GrayImage::new(w, h, out)
}

// ======================= Tests =======================
