//! Python bindings for the texture-classification pipeline: grayscale
//! image handling, noise injection, the two-stage denoiser, local
//! binary-pattern features, a KNN classifier, and the JSON-driven
//! benchmark runner.

use pyo3::exceptions::{PyIOError, PyValueError};
use pyo3::prelude::*;

use rclbp::clbp::ClbpParams;
use rclbp::imagecore::{GrayImage, NoiseSpec};
use rclbp::ml::{KnnConfig, LabeledDataset, Weighting};
use rclbp::nlmeans::NlMeansParams;
use rclbp::pipeline::{DenoiseConfig, DenoiseMode};
use rclbp::wavelet::WaveletParams;

fn to_py(e: rclbp::Error) -> PyErr {
    match &e {
        rclbp::Error::Io { .. } => PyIOError::new_err(e.to_string()),
        _ => PyValueError::new_err(e.to_string()),
    }
}

/// Row-major grayscale image with `f64` pixels.
#[pyclass(name = "GrayImage")]
struct PyGrayImage {
    inner: GrayImage,
}

#[pymethods]
impl PyGrayImage {
    #[new]
    fn new(width: usize, height: usize, pixels: Vec<f64>) -> PyResult<Self> {
        GrayImage::new(width, height, pixels)
            .map(|inner| Self { inner })
            .map_err(to_py)
    }

    #[getter]
    fn width(&self) -> usize {
        self.inner.dims().0
    }

    #[getter]
    fn height(&self) -> usize {
        self.inner.dims().1
    }

    /// Flat row-major pixel buffer.
    fn pixels(&self) -> Vec<f64> {
        self.inner.pixels().to_vec()
    }

    fn get(&self, x: usize, y: usize) -> PyResult<f64> {
        let (w, h) = self.inner.dims();
        if x >= w || y >= h {
            return Err(PyValueError::new_err(format!(
                "pixel ({x}, {y}) outside a {w}x{h} image"
            )));
        }
        Ok(self.inner.get(x, y))
    }

    fn __repr__(&self) -> String {
        let (w, h) = self.inner.dims();
        format!("GrayImage({w}x{h})")
    }
}

/// Reads a PGM or PNG grayscale image.
#[pyfunction]
fn load_image(path: &str) -> PyResult<PyGrayImage> {
    rclbp::imagecore::load_image(std::path::Path::new(path))
        .map(|inner| PyGrayImage { inner })
        .map_err(to_py)
}

/// Writes an image as 8-bit PGM or PNG (by extension), rounding and
/// clamping pixel values to 0..=255.
#[pyfunction]
fn save_image(img: &PyGrayImage, path: &str) -> PyResult<()> {
    rclbp::imagecore::save_image(&img.inner, std::path::Path::new(path)).map_err(to_py)
}

/// Renders a deterministic texture. `kind` is one of `blobs`, `checker`,
/// `grating`, `sinusoid`, `speckle`, `stripes`.
#[pyfunction]
fn synth_texture(kind: &str, size: usize, period: usize, seed: u64) -> PyResult<PyGrayImage> {
    let kind = kind.parse().map_err(to_py)?;
    rclbp::imagecore::synth_texture(kind, size, period, seed)
        .map(|inner| PyGrayImage { inner })
        .map_err(to_py)
}

/// Adds seeded white Gaussian noise scaled so the result sits at the
/// requested signal-to-noise ratio (in dB) relative to the input.
#[pyfunction]
fn inject_gaussian_noise(img: &PyGrayImage, snr_db: f64, seed: u64) -> PyResult<PyGrayImage> {
    rclbp::imagecore::inject_gaussian_noise(&img.inner, &NoiseSpec { snr_db, seed })
        .map(|inner| PyGrayImage { inner })
        .map_err(to_py)
}

/// Measured signal-to-noise ratio of `noisy` against `clean`, in dB.
#[pyfunction]
fn measure_snr(clean: &PyGrayImage, noisy: &PyGrayImage) -> PyResult<f64> {
    rclbp::imagecore::measure_snr(&clean.inner, &noisy.inner).map_err(to_py)
}

/// Root-mean-square difference between two same-sized images.
#[pyfunction]
fn rmse(a: &PyGrayImage, b: &PyGrayImage) -> PyResult<f64> {
    rclbp::imagecore::rmse(&a.inner, &b.inner).map_err(to_py)
}

/// Patch-similarity smoothing pass.
#[pyfunction]
#[pyo3(signature = (img, search_radius=10, patch_radius=3, h=12.0, kernel_sigma=3.0))]
fn nl_means_filter(
    img: &PyGrayImage,
    search_radius: usize,
    patch_radius: usize,
    h: f64,
    kernel_sigma: f64,
) -> PyResult<PyGrayImage> {
    let params = NlMeansParams {
        search_radius,
        patch_radius,
        h,
        kernel_sigma,
    };
    rclbp::nlmeans::nl_means_filter(&img.inner, &params)
        .map(|inner| PyGrayImage { inner })
        .map_err(to_py)
}

/// Full denoiser. `mode` is `none`, `nlmeans_only`, or `rclbp` (smoothing
/// plus wavelet-thresholded detail restoration).
#[pyfunction]
#[pyo3(signature = (
    img,
    mode = "rclbp",
    search_radius = 10,
    patch_radius = 3,
    h = 12.0,
    kernel_sigma = 3.0,
    levels = 2,
))]
#[allow(clippy::too_many_arguments)]
fn denoise(
    img: &PyGrayImage,
    mode: &str,
    search_radius: usize,
    patch_radius: usize,
    h: f64,
    kernel_sigma: f64,
    levels: usize,
) -> PyResult<PyGrayImage> {
    let mode: DenoiseMode = mode.parse().map_err(to_py)?;
    let cfg = DenoiseConfig {
        mode,
        nl: NlMeansParams {
            search_radius,
            patch_radius,
            h,
            kernel_sigma,
        },
        wav: WaveletParams {
            levels,
            ..WaveletParams::default()
        },
    };
    rclbp::pipeline::rclbp_denoise(&img.inner, &cfg)
        .map(|inner| PyGrayImage { inner })
        .map_err(to_py)
}

/// Joint sign/magnitude/center histogram, L1-normalized. Length is
/// `(neighbors + 2)^2 * 2`.
#[pyfunction]
#[pyo3(signature = (img, neighbors=8, radius=1.0))]
fn extract_clbp_histogram(img: &PyGrayImage, neighbors: usize, radius: f64) -> PyResult<Vec<f64>> {
    let params = ClbpParams {
        neighbors,
        radius,
        ..ClbpParams::default()
    };
    rclbp::clbp::extract_clbp_histogram(&img.inner, &params)
        .map(|f| f.histogram)
        .map_err(to_py)
}

/// Sign-only histogram, L1-normalized. Length is `neighbors + 2`.
#[pyfunction]
#[pyo3(signature = (img, neighbors=8, radius=1.0))]
fn extract_lbp_histogram(img: &PyGrayImage, neighbors: usize, radius: f64) -> PyResult<Vec<f64>> {
    let params = ClbpParams {
        neighbors,
        radius,
        ..ClbpParams::default()
    };
    rclbp::clbp::extract_lbp_histogram(&img.inner, &params).map_err(to_py)
}

/// K-nearest-neighbor prediction for each query row. `weighting` is
/// `uniform` or `distance`.
#[pyfunction]
#[pyo3(signature = (train_features, train_labels, queries, k=9, p=1.0, weighting="distance"))]
fn knn_classify(
    train_features: Vec<Vec<f64>>,
    train_labels: Vec<usize>,
    queries: Vec<Vec<f64>>,
    k: usize,
    p: f64,
    weighting: &str,
) -> PyResult<Vec<usize>> {
    let weighting = match weighting {
        "uniform" => Weighting::Uniform,
        "distance" => Weighting::Distance,
        other => {
            return Err(PyValueError::new_err(format!(
                "unknown weighting {other:?} (expected uniform or distance)"
            )))
        }
    };
    let num_classes = train_labels.iter().copied().max().map_or(0, |m| m + 1);
    let class_names = (0..num_classes).map(|i| format!("class_{i}")).collect();
    let train =
        LabeledDataset::new(train_features, train_labels, class_names).map_err(to_py)?;
    let cfg = KnnConfig { k, p, weighting };
    queries
        .iter()
        .map(|q| rclbp::ml::knn_predict(&train, q, &cfg).map_err(to_py))
        .collect()
}

/// Runs the full benchmark described by a JSON configuration string (the
/// same format the `rclbp benchmark --config` command accepts) and returns
/// the report as a JSON string.
#[pyfunction]
fn run_benchmark(config_json: &str) -> PyResult<String> {
    let cfg = rclbp::cli::RunConfig::from_json(config_json).map_err(to_py)?;
    let report = rclbp::cli::run_benchmark(&cfg).map_err(to_py)?;
    Ok(rclbp::cli::report_to_json(&report))
}

#[pymodule]
fn rclbp_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyGrayImage>()?;
    m.add_function(wrap_pyfunction!(load_image, m)?)?;
    m.add_function(wrap_pyfunction!(save_image, m)?)?;
    m.add_function(wrap_pyfunction!(synth_texture, m)?)?;
    m.add_function(wrap_pyfunction!(inject_gaussian_noise, m)?)?;
    m.add_function(wrap_pyfunction!(measure_snr, m)?)?;
    m.add_function(wrap_pyfunction!(rmse, m)?)?;
    m.add_function(wrap_pyfunction!(nl_means_filter, m)?)?;
    m.add_function(wrap_pyfunction!(denoise, m)?)?;
    m.add_function(wrap_pyfunction!(extract_clbp_histogram, m)?)?;
    m.add_function(wrap_pyfunction!(extract_lbp_histogram, m)?)?;
    m.add_function(wrap_pyfunction!(knn_classify, m)?)?;
    m.add_function(wrap_pyfunction!(run_benchmark, m)?)?;
    Ok(())
}
