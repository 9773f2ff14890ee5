"""Smoke tests for the psforensics python module.

Runs standalone (python3 test_smoke.py) or under pytest. Needs PYTHONPATH to
point at the built package directory.
"""

import sys
import tempfile
from pathlib import Path

import numpy as np

import psforensics as psf


def test_image_io_roundtrip():
    rng = np.random.default_rng(1)
    img = rng.integers(0, 256, size=(20, 30, 3), dtype=np.uint8)
    with tempfile.TemporaryDirectory() as tmp:
        path = str(Path(tmp) / "img.png")
        psf.save_image(img, path)
        back = psf.load_image(path)
    assert back.shape == img.shape
    assert np.array_equal(back, img)


def test_blocks_and_crop():
    img = np.arange(64 * 96 * 3, dtype=np.uint32).reshape(64, 96, 3).astype(np.uint8)
    crop = psf.center_crop(img, 32, 32)
    assert crop.shape == (32, 32, 3)
    blocks = psf.extract_blocks(img, 32)
    assert len(blocks) == 2 * 3
    pixels, row, col = blocks[0]
    assert pixels.shape == (32, 32, 3)
    assert np.array_equal(pixels, img[row : row + 32, col : col + 32])
    central = psf.extract_blocks(img, 32, "central:2")
    assert len(central) == 2


def test_manipulations():
    img = psf.synth_image(96, 128, seed=3)
    assert img.shape == (96, 128, 3)

    assert np.array_equal(psf.apply_manipulation(img, "pr"), img)
    awgn = psf.apply_awgn(img, sigma=2.0, seed=5)
    assert np.array_equal(awgn, psf.apply_awgn(img, sigma=2.0, seed=5))
    assert not np.array_equal(awgn, img)

    kernel = psf.gaussian_kernel(5, 1.1)
    assert abs(kernel.sum() - 1.0) < 1e-12

    flat = np.full((16, 16, 3), 77, dtype=np.uint8)
    assert np.array_equal(psf.apply_gaussian_blur(flat), flat)
    assert np.array_equal(psf.apply_median_filter(flat), flat)

    rs = psf.apply_resample(img, 1.5)
    assert rs.shape == img.shape

    jq = psf.jpeg_roundtrip(img, 70)
    assert jq.shape == img.shape

    assert psf.manipulation_tags(False) == ["awgn", "gb", "mf", "pr"]
    assert len(psf.manipulation_tags(True)) == 6


def test_printscan_chain():
    img = psf.synth_image(64, 64, seed=4)
    profiles = psf.default_profiles()
    assert [p.name for p in profiles] == ["sim-dell", "sim-xerox1", "sim-xerox2"]

    out = psf.simulate_printscan(img, profiles[0], seed=9)
    assert out.shape == img.shape
    assert not np.array_equal(out, img)
    assert np.array_equal(out, psf.simulate_printscan(img, profiles[0], seed=9))

    identity = psf.PrinterProfile()
    identity.name = "identity"
    assert np.array_equal(psf.simulate_printscan(img, identity, seed=0), img)

    attack = psf.jpeg_attack_profile(80)
    assert np.array_equal(
        psf.simulate_printscan(img, attack, seed=0), psf.jpeg_roundtrip(img, 80)
    )


def test_tiny_train_eval_predict():
    with tempfile.TemporaryDirectory() as tmp:
        tmp = Path(tmp)
        psf.generate_synth_corpus(str(tmp / "src"), 8, 128, 128, seed=2)
        n = psf.generate_dataset(
            str(tmp / "src"), "4c", 64, "all", str(tmp / "data"), seed=2
        )
        assert n == 8 * 4 * 4

        ckpt = str(tmp / "model.ckpt")
        result = psf.train(
            str(tmp / "data" / "manifest.txt"),
            family="proposed",
            checkpoint=ckpt,
            epochs=2,
            batch_size=8,
            lr=0.005,
            seed=3,
        )
        assert result["epochs_run"] <= 2

        report = psf.evaluate(ckpt, str(tmp / "data" / "manifest.txt"))
        assert report["labels"] == ["awgn", "gb", "mf", "pr"]
        conf = report["confusion"]
        assert conf.shape == (4, 4)
        assert conf.sum() > 0
        assert abs(report["accuracy"] - np.trace(conf) / conf.sum()) < 1e-12

        block = psf.load_image(
            str(tmp / "data" / "blocks" / "img0000__pr__r0000_c0000.png")
        )
        label, probs = psf.predict_block(ckpt, block)
        assert label in report["labels"]
        assert abs(sum(probs) - 1.0) < 1e-5


def test_errors_are_typed():
    try:
        psf.load_image("/does/not/exist.png")
    except RuntimeError:
        pass
    else:
        raise AssertionError("expected an error for a missing file")

    try:
        psf.apply_awgn(np.zeros((4, 4, 3), dtype=np.uint8), sigma=-1.0)
    except ValueError:
        pass
    else:
        raise AssertionError("expected a usage error for negative sigma")


def main():
    tests = [v for k, v in sorted(globals().items()) if k.startswith("test_")]
    for test in tests:
        test()
        print(f"ok {test.__name__}")
    print(f"{len(tests)} python smoke tests passed")


if __name__ == "__main__":
    sys.exit(main())
