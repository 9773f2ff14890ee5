"""Print/scan attack workbench for image manipulation detectors.

The heavy lifting lives in the compiled extension; this package re-exports
the public surface: lossless image I/O and blocking, the six global
manipulations, the parameterized print-and-scan chain, and the detector
training/evaluation harness.
"""

from psforensics._core import (  # noqa: F401
    DataError,
    NumericError,
    PrinterProfile,
    UsageError,
    __version__,
    apply_awgn,
    apply_gaussian_blur,
    apply_manipulation,
    apply_median_filter,
    apply_resample,
    center_crop,
    default_profiles,
    evaluate,
    extract_blocks,
    gaussian_kernel,
    generate_dataset,
    generate_synth_corpus,
    green_channel,
    jpeg_attack_profile,
    jpeg_roundtrip,
    load_image,
    manipulation_tags,
    predict_block,
    printscan_dataset,
    save_image,
    simulate_printscan,
    synth_image,
    train,
)
