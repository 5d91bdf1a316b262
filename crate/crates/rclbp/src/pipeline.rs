//! Two-stage denoising pipeline.
//!
//! Stage one smooths the input with non-local means. The residual
//! ("method noise", input minus smoothed) still holds texture that the
//! smoother scrubbed off along with the noise, so stage two runs
//! BayesShrink wavelet thresholding over the residual to recover that
//! structure, and the recovered detail is added back onto the smoothed
//! image.

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::imagecore::{add_images, sub_images, GrayImage};
use crate::nlmeans::{nl_means_filter, NlMeansParams};
use crate::wavelet::{denoise_method_noise, ShrinkReport, WaveletParams};

/// Denoising mode: `None` passes images through, `NlmeansOnly` stops after
/// stage one, `Rclbp` runs both stages.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DenoiseMode {
    None,
    NlmeansOnly,
    Rclbp,
}

impl std::str::FromStr for DenoiseMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "none" => Ok(DenoiseMode::None),
            "nlmeans_only" | "nlmeans-only" => Ok(DenoiseMode::NlmeansOnly),
            "rclbp" => Ok(DenoiseMode::Rclbp),
            other => Err(Error::InvalidParameter(format!(
                "unknown denoise mode {other:?} (expected none, nlmeans_only or rclbp)"
            ))),
        }
    }
}

impl std::fmt::Display for DenoiseMode {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            DenoiseMode::None => "none",
            DenoiseMode::NlmeansOnly => "nlmeans_only",
            DenoiseMode::Rclbp => "rclbp",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
#[serde(default)]
pub struct DenoiseConfig {
    pub mode: DenoiseMode,
    pub nl: NlMeansParams,
    pub wav: WaveletParams,
}

impl Default for DenoiseConfig {
    fn default() -> Self {
        Self {
            mode: DenoiseMode::Rclbp,
            nl: NlMeansParams::default(),
            wav: WaveletParams::default(),
        }
    }
}

impl DenoiseConfig {
    pub fn validate(&self) -> Result<()> {
        self.nl.validate()?;
        self.wav.validate()
    }
}

/// Method noise: input minus its smoothed version.
pub fn method_noise(input: &GrayImage, smoothed: &GrayImage) -> Result<GrayImage> {
    sub_images(input, smoothed)
}

/// Runs the configured denoising mode and returns the result along with
/// the wavelet shrinkage diagnostics (present only in `Rclbp` mode).
pub fn denoise_with_report(
    input: &GrayImage,
    cfg: &DenoiseConfig,
) -> Result<(GrayImage, Option<ShrinkReport>)> {
    cfg.validate()?;
    match cfg.mode {
        DenoiseMode::None => Ok((input.clone(), None)),
        DenoiseMode::NlmeansOnly => Ok((nl_means_filter(input, &cfg.nl)?, None)),
        DenoiseMode::Rclbp => {
            let smoothed = nl_means_filter(input, &cfg.nl)?;
            let residual = method_noise(input, &smoothed)?;
            let (detail, report) = denoise_method_noise(&residual, &cfg.wav)?;
            let restored = add_images(&smoothed, &detail)?;
            Ok((restored, Some(report)))
        }
    }
}

/// Runs the configured denoising mode on one image.
pub fn rclbp_denoise(input: &GrayImage, cfg: &DenoiseConfig) -> Result<GrayImage> {
    denoise_with_report(input, cfg).map(|(img, _)| img)
}

/// Denoises a batch in parallel, preserving order. On failure, reports the
/// error of the lowest-indexed failing image.
pub fn denoise_batch(images: &[GrayImage], cfg: &DenoiseConfig) -> Result<Vec<GrayImage>> {
    cfg.validate()?;
    let results: Vec<Result<GrayImage>> = images
        .par_iter()
        .map(|img| rclbp_denoise(img, cfg))
        .collect();
    let mut out = Vec::with_capacity(results.len());
    for (index, result) in results.into_iter().enumerate() {
        match result {
            Ok(img) => out.push(img),
            Err(e) => {
                return Err(Error::Batch {
                    index,
                    source: Box::new(e),
                })
            }
        }
    }
    Ok(out)
}

// ======================= Tests =======================
