#!/usr/bin/env python3
"""Smoke test for the rclbp_py extension module.

Builds the module with cargo if it is missing, loads it from
target/release, and exercises the main entry points end to end: texture
synthesis, noise injection and SNR measurement, two-stage denoising,
histogram features, KNN classification, image IO, and the JSON benchmark
runner. Prints SMOKE TEST PASS and exits 0 on success.
"""

import json
import math
import shutil
import subprocess
import sys
import tempfile
from pathlib import Path

ROOT = Path(__file__).resolve().parents[1]
SO_PATH = ROOT / "target" / "release" / "librclbp_py.so"


def ensure_module_built() -> None:
    if SO_PATH.exists():
        return
    print("building rclbp-py extension...", flush=True)
    subprocess.run(
        ["cargo", "build", "--release", "-p", "rclbp-py"],
        cwd=ROOT,
        check=True,
    )


def import_module(tmpdir: str):
    # Python expects the module file to be named exactly rclbp_py.so.
    target = Path(tmpdir) / "rclbp_py.so"
    shutil.copyfile(SO_PATH, target)
    sys.path.insert(0, tmpdir)
    import rclbp_py  # noqa: E402

    return rclbp_py


def main() -> None:
    ensure_module_built()
    with tempfile.TemporaryDirectory() as tmpdir:
        m = import_module(tmpdir)

        # Texture synthesis.
        clean = m.synth_texture("checker", 32, 4, 7)
        assert clean.width == 32 and clean.height == 32
        px = clean.pixels()
        assert len(px) == 32 * 32
        assert all(0.0 <= v <= 255.0 for v in px)
        try:
            m.synth_texture("plaid", 32, 4, 7)
        except ValueError:
            pass
        else:
            raise AssertionError("unknown texture kind must raise ValueError")

        # Noise injection hits its target SNR.
        noisy = m.inject_gaussian_noise(clean, 30.0, 99)
        snr = m.measure_snr(clean, noisy)
        assert abs(snr - 30.0) < 1.0, f"measured SNR {snr:.2f} dB, wanted ~30"

        # Denoising moves the image back toward the clean original.
        restored = m.denoise(
            noisy, mode="rclbp", search_radius=5, patch_radius=2, h=10.0, kernel_sigma=1.5
        )
        before = m.rmse(noisy, clean)
        after = m.rmse(restored, clean)
        assert after < before, f"RMSE went {before:.3f} -> {after:.3f}"

        # Histogram features: joint histogram has (8+2)^2*2 = 200 bins and
        # sums to one; the sign-only histogram has 10.
        joint = m.extract_clbp_histogram(clean)
        assert len(joint) == 200
        assert math.isclose(sum(joint), 1.0, abs_tol=1e-9)
        sign_only = m.extract_lbp_histogram(clean)
        assert len(sign_only) == 10

        # KNN separates two texture kinds from their histograms.
        train_features, train_labels = [], []
        for label, kind in enumerate(["checker", "stripes"]):
            for i in range(6):
                img = m.synth_texture(kind, 32, 4, 100 + i)
                train_features.append(m.extract_clbp_histogram(img))
                train_labels.append(label)
        queries = [
            m.extract_clbp_histogram(m.synth_texture("checker", 32, 4, 999)),
            m.extract_clbp_histogram(m.synth_texture("stripes", 32, 4, 999)),
        ]
        predictions = m.knn_classify(train_features, train_labels, queries, k=3)
        assert predictions == [0, 1], f"unexpected predictions {predictions}"

        # Image IO round-trips through 8-bit PGM within quantization error.
        pgm = Path(tmpdir) / "checker.pgm"
        m.save_image(clean, str(pgm))
        reloaded = m.load_image(str(pgm))
        assert (reloaded.width, reloaded.height) == (32, 32)
        worst = max(abs(a - b) for a, b in zip(reloaded.pixels(), clean.pixels()))
        assert worst <= 0.5, f"quantization error {worst}"

        # JSON-configured benchmark on a tiny synthetic corpus.
        config = {
            "dataset_root": "synthetic",
            "synth": {"per_class": 6, "size": 32, "seed": 5},
            "snr_levels": ["clean"],
            "denoise": {"mode": "none"},
            "classifier": {"knn": {"k": 3}},
        }
        report = json.loads(m.run_benchmark(json.dumps(config)))
        assert len(report["class_names"]) == 6
        row = report["rows"][0]
        assert row["snr"] == "clean"
        assert row["metrics"]["weighted_f1"] >= 0.9, row["metrics"]

    print("SMOKE TEST PASS")


if __name__ == "__main__":
    main()
