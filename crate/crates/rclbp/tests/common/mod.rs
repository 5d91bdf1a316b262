//! Shared helpers for the integration and acceptance suites: independent
//! brute-force reference implementations (used as oracles against the
//! library) and deterministic test-image builders.
//!
//! Not every test target uses every helper.
#![allow(dead_code)]

use rclbp::imagecore::GrayImage;
use rclbp::rng::SplitMix64;

/// Deterministic random image with integer-valued pixels in [0, 255].
pub fn random_u8_image(w: usize, h: usize, seed: u64) -> GrayImage {
    let mut rng = SplitMix64::new(seed);
    GrayImage::from_fn(w, h, |_, _| rng.next_below(256) as f64)
}

/// Symmetric (half-sample) reflection of an out-of-range index.
fn reflect(mut i: isize, n: isize) -> isize {
    loop {
        if i < 0 {
            i = -i - 1;
        } else if i >= n {
            i = 2 * n - 1 - i;
        } else {
            return i;
        }
    }
}

/// Straight-from-the-definition patch-averaging denoiser: for every pixel,
/// weights over the border-cropped search window are
/// `exp(-d/h^2) / Z` with `d` the Gaussian-kernel-weighted squared patch
/// difference (patches read through mirrored borders), and the output is
/// the weighted average of window pixel values. Quadratic and slow; only
/// for oracle comparisons on tiny images.
pub fn brute_nl_means(
    img: &GrayImage,
    search_radius: usize,
    patch_radius: usize,
    h: f64,
    kernel_sigma: f64,
) -> GrayImage {
    let (w, ht) = img.dims();
    let (wi, hi) = (w as isize, ht as isize);
    let pr = patch_radius as isize;
    let sr = search_radius as isize;
    let side = 2 * patch_radius + 1;

    let mut kernel = vec![0.0f64; side * side];
    let mut ksum = 0.0;
    for dy in -pr..=pr {
        for dx in -pr..=pr {
            let v = (-((dx * dx + dy * dy) as f64) / (2.0 * kernel_sigma * kernel_sigma)).exp();
            kernel[((dy + pr) * side as isize + (dx + pr)) as usize] = v;
            ksum += v;
        }
    }
    for v in &mut kernel {
        *v /= ksum;
    }

    let read = |x: isize, y: isize| img.get(reflect(x, wi) as usize, reflect(y, hi) as usize);

    GrayImage::from_fn(w, ht, |x, y| {
        let (xi, yi) = (x as isize, y as isize);
        let mut z = 0.0;
        let mut acc = 0.0;
        for v in (yi - sr).max(0)..=(yi + sr).min(hi - 1) {
            for u in (xi - sr).max(0)..=(xi + sr).min(wi - 1) {
                let mut d = 0.0;
                for dy in -pr..=pr {
                    for dx in -pr..=pr {
                        let kv = kernel[((dy + pr) * side as isize + (dx + pr)) as usize];
                        let diff = read(xi + dx, yi + dy) - read(u + dx, v + dy);
                        d += kv * diff * diff;
                    }
                }
                let weight = (-d / (h * h)).exp();
                z += weight;
                acc += weight * img.get(u as usize, v as usize);
            }
        }
        acc / z
    })
}

/// Independent support-weighted precision/recall/F1: per-class counting
/// loops straight over the label pairs, skipping empty classes.
pub fn brute_weighted_metrics(truth: &[usize], pred: &[usize], num_classes: usize) -> (f64, f64, f64) {
    let mut p_sum = 0.0;
    let mut r_sum = 0.0;
    let mut f_sum = 0.0;
    let mut total = 0.0;
    for class in 0..num_classes {
        let tp = truth
            .iter()
            .zip(pred)
            .filter(|&(&t, &p)| t == class && p == class)
            .count();
        let fp = truth
            .iter()
            .zip(pred)
            .filter(|&(&t, &p)| t != class && p == class)
            .count();
        let fn_ = truth
            .iter()
            .zip(pred)
            .filter(|&(&t, &p)| t == class && p != class)
            .count();
        let support = tp + fn_;
        if support == 0 {
            continue;
        }
        let precision = if tp + fp > 0 {
            tp as f64 / (tp + fp) as f64
        } else {
            0.0
        };
        let recall = tp as f64 / (tp + fn_) as f64;
        let f1 = if precision + recall > 0.0 {
            2.0 * precision * recall / (precision + recall)
        } else {
            0.0
        };
        total += support as f64;
        p_sum += support as f64 * precision;
        r_sum += support as f64 * recall;
        f_sum += support as f64 * f1;
    }
    (p_sum / total, r_sum / total, f_sum / total)
}

/// Maximum absolute pixel difference.
pub fn max_abs_diff(a: &GrayImage, b: &GrayImage) -> f64 {
    assert_eq!(a.dims(), b.dims());
    a.pixels()
        .iter()
        .zip(b.pixels())
        .map(|(x, y)| (x - y).abs())
        .fold(0.0, f64::max)
}
