//! Completed local binary pattern (CLBP) features.
//!
//! For every interior pixel, `P` neighbors are sampled on a circle of
//! radius `R` (bilinear interpolation at non-lattice positions; neighbor 0
//! due right, proceeding counter-clockwise). Three binary descriptors are
//! formed per pixel:
//!
//! * sign code: bit `p` set when the neighbor difference `g_p - g_c >= 0`;
//! * magnitude code: bit `p` set when `|g_p - g_c| >= c`, where `c` is the
//!   mean absolute neighbor difference over the whole image;
//! * center bit: set when `g_c >= c_I`, the mean gray level over all
//!   pixels.
//!
//! Sign and magnitude codes collapse through the rotation-invariant
//! uniform mapping (`riu2`): codes with at most two circular bit
//! transitions map to their popcount, everything else to `P + 1`. The
//! feature vector is the L1-normalized joint histogram of
//! `(riu2(sign), riu2(magnitude), center bit)`, with
//! `(P + 2)^2 * 2` bins. A plain LBP histogram (the sign marginal,
//! `P + 2` bins) is available for comparison baselines.

use crate::error::{Error, Result};
use crate::imagecore::GrayImage;

// ======================= Parameters =======================

#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PatternMapping {
    Riu2,
}

#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
#[serde(default)]
pub struct ClbpParams {
    /// Number of circle samples P.
    pub neighbors: usize,
    /// Circle radius R in pixels.
    pub radius: f64,
    pub mapping: PatternMapping,
}

impl Default for ClbpParams {
    fn default() -> Self {
        Self {
            neighbors: 8,
            radius: 1.0,
            mapping: PatternMapping::Riu2,
        }
    }
}

impl ClbpParams {
    pub fn validate(&self) -> Result<()> {
        if self.neighbors < 4 || self.neighbors > 30 {
            return Err(Error::InvalidParameter(format!(
                "neighbors must be in 4..=30, got {}",
                self.neighbors
            )));
        }
        if !self.radius.is_finite() || self.radius < 1.0 {
            return Err(Error::InvalidParameter(format!(
                "radius must be at least 1, got {}",
                self.radius
            )));
        }
        Ok(())
    }

    /// Joint histogram length: `(P + 2)^2 * 2`.
    pub fn histogram_len(&self) -> usize {
        (self.neighbors + 2) * (self.neighbors + 2) * 2
    }

    /// Sign-marginal (plain LBP) histogram length: `P + 2`.
    pub fn lbp_len(&self) -> usize {
        self.neighbors + 2
    }

    fn margin(&self) -> usize {
        self.radius.ceil() as usize
    }
}

// ======================= Sampling =======================

/// Circle offsets for each neighbor index. Offsets within 1e-9 of a
/// lattice point snap to it exactly, so e.g. P = 4, R = 1 reads axis
/// neighbors without interpolation.
fn neighbor_offsets(params: &ClbpParams) -> Vec<(f64, f64)> {
    let p = params.neighbors;
    let r = params.radius;
    (0..p)
        .map(|k| {
            let angle = 2.0 * std::f64::consts::PI * k as f64 / p as f64;
            let snap = |v: f64| {
                let nearest = v.round();
                if (v - nearest).abs() < 1e-9 {
                    nearest
                } else {
                    v
                }
            };
            // Screen coordinates: y grows downward, so the circle runs
            // counter-clockwise with -sin.
            (snap(r * angle.cos()), snap(-r * angle.sin()))
        })
        .collect()
}

/// Bilinear read at a real-valued position, written in lerp form so that
/// flat 2x2 cells reproduce their value exactly.
#[inline]
fn sample_at(img: &GrayImage, fx: f64, fy: f64) -> f64 {
    let x0 = fx.floor();
    let y0 = fy.floor();
    let tx = fx - x0;
    let ty = fy - y0;
    let xi = x0 as usize;
    let yi = y0 as usize;
    let top = if tx == 0.0 {
        img.get(xi, yi)
    } else {
        let a = img.get(xi, yi);
        let b = img.get(xi + 1, yi);
        a + tx * (b - a)
    };
    if ty == 0.0 {
        top
    } else {
        let bottom = if tx == 0.0 {
            img.get(xi, yi + 1)
        } else {
            let a = img.get(xi, yi + 1);
            let b = img.get(xi + 1, yi + 1);
            a + tx * (b - a)
        };
        top + ty * (bottom - top)
    }
}

/// Samples the P circle neighbors of interior pixel `(x, y)`.
pub fn sample_neighbors(img: &GrayImage, x: usize, y: usize, params: &ClbpParams) -> Vec<f64> {
    let offsets = neighbor_offsets(params);
    offsets
        .iter()
        .map(|&(dx, dy)| sample_at(img, x as f64 + dx, y as f64 + dy))
        .collect()
}

// ======================= Global thresholds =======================

/// Image-level thresholds: `c` is the mean absolute neighbor difference
/// over every interior pixel and every neighbor; `c_i` the mean gray level
/// over all pixels.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GlobalThresholds {
    pub c: f64,
    pub c_i: f64,
}

fn interior_range(img: &GrayImage, params: &ClbpParams) -> Result<(usize, usize, usize, usize)> {
    let m = params.margin();
    let (w, h) = img.dims();
    if w <= 2 * m || h <= 2 * m {
        return Err(Error::InvalidDimensions(format!(
            "{w}x{h} image has no interior at radius {}",
            params.radius
        )));
    }
    Ok((m, w - m, m, h - m))
}

pub fn compute_global_thresholds(img: &GrayImage, params: &ClbpParams) -> Result<GlobalThresholds> {
    params.validate()?;
    let (x0, x1, y0, y1) = interior_range(img, params)?;
    let offsets = neighbor_offsets(params);
    let mut mag_sum = 0.0;
    for y in y0..y1 {
        for x in x0..x1 {
            let center = img.get(x, y);
            for &(dx, dy) in &offsets {
                mag_sum += (sample_at(img, x as f64 + dx, y as f64 + dy) - center).abs();
            }
        }
    }
    let interior_count = (x1 - x0) * (y1 - y0);
    let c = mag_sum / (interior_count * params.neighbors) as f64;
    let c_i = img.pixels().iter().sum::<f64>() / img.len() as f64;
    Ok(GlobalThresholds { c, c_i })
}

// ======================= Codes and mapping =======================

/// Sign code, magnitude code, and center bit for one pixel.
pub fn clbp_codes(center: f64, neighbors: &[f64], thresholds: &GlobalThresholds) -> (u32, u32, u8) {
    let mut sign = 0u32;
    let mut magnitude = 0u32;
    for (p, &g) in neighbors.iter().enumerate() {
        let diff = g - center;
        if diff >= 0.0 {
            sign |= 1 << p;
        }
        if diff.abs() >= thresholds.c {
            magnitude |= 1 << p;
        }
    }
    let center_bit = u8::from(center >= thresholds.c_i);
    (sign, magnitude, center_bit)
}

/// Rotation-invariant uniform mapping: popcount for codes with at most two
/// circular transitions, else `P + 1`.
pub fn riu2_map(code: u32, neighbors: usize) -> u32 {
    let p = neighbors as u32;
    let mask = if p == 32 { u32::MAX } else { (1u32 << p) - 1 };
    let code = code & mask;
    let rotated = ((code >> 1) | (code << (p - 1))) & mask;
    let transitions = (code ^ rotated).count_ones();
    if transitions <= 2 {
        code.count_ones()
    } else {
        p + 1
    }
}

// ======================= Histograms =======================

/// L1-normalized joint CLBP histogram plus the parameters it was built
/// with.
#[derive(Debug, Clone, PartialEq, serde::Serialize)]
pub struct ClbpFeature {
    pub histogram: Vec<f64>,
    pub params: ClbpParams,
}

fn joint_bin(riu2_s: u32, riu2_m: u32, center_bit: u8, neighbors: usize) -> usize {
    let span = neighbors + 2;
    (riu2_s as usize) * span * 2 + (riu2_m as usize) * 2 + center_bit as usize
}

/// Extracts the joint (sign, magnitude, center) histogram.
pub fn extract_clbp_histogram(img: &GrayImage, params: &ClbpParams) -> Result<ClbpFeature> {
    params.validate()?;
    let thresholds = compute_global_thresholds(img, params)?;
    let (x0, x1, y0, y1) = interior_range(img, params)?;
    let offsets = neighbor_offsets(params);
    let mut counts = vec![0u64; params.histogram_len()];
    let mut neighbors = vec![0.0f64; params.neighbors];
    for y in y0..y1 {
        for x in x0..x1 {
            let center = img.get(x, y);
            for (slot, &(dx, dy)) in neighbors.iter_mut().zip(&offsets) {
                *slot = sample_at(img, x as f64 + dx, y as f64 + dy);
            }
            let (s_code, m_code, c_bit) = clbp_codes(center, &neighbors, &thresholds);
            let bin = joint_bin(
                riu2_map(s_code, params.neighbors),
                riu2_map(m_code, params.neighbors),
                c_bit,
                params.neighbors,
            );
            counts[bin] += 1;
        }
    }
    let total = ((x1 - x0) * (y1 - y0)) as f64;
    let histogram = counts.into_iter().map(|n| n as f64 / total).collect();
    Ok(ClbpFeature {
        histogram,
        params: *params,
    })
}

/// Plain LBP baseline: the riu2 sign histogram over the same interior
/// pixels, `P + 2` bins, L1-normalized.
pub fn extract_lbp_histogram(img: &GrayImage, params: &ClbpParams) -> Result<Vec<f64>> {
    params.validate()?;
    let thresholds = compute_global_thresholds(img, params)?;
    let (x0, x1, y0, y1) = interior_range(img, params)?;
    let offsets = neighbor_offsets(params);
    let mut counts = vec![0u64; params.lbp_len()];
    let mut neighbors = vec![0.0f64; params.neighbors];
    for y in y0..y1 {
        for x in x0..x1 {
            let center = img.get(x, y);
            for (slot, &(dx, dy)) in neighbors.iter_mut().zip(&offsets) {
                *slot = sample_at(img, x as f64 + dx, y as f64 + dy);
            }
            let (s_code, _, _) = clbp_codes(center, &neighbors, &thresholds);
            counts[riu2_map(s_code, params.neighbors) as usize] += 1;
        }
    }
    let total = ((x1 - x0) * (y1 - y0)) as f64;
    Ok(counts.into_iter().map(|n| n as f64 / total).collect())
}

/// L1 distance between two equally sized histograms.
pub fn l1_distance(a: &[f64], b: &[f64]) -> f64 {
    debug_assert_eq!(a.len(), b.len());
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).sum()
}

// ======================= Tests =======================
