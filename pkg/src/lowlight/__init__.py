"""Low-light IR imaging toolkit.

Camera calibration and undistortion, histogram-based contrast enhancement,
image quality metrics and a softmax classifier head for precomputed CNN
features.
"""
__version__ = "0.1.0"

from .enhance import (
    CLAHE,
    AdaptiveEqualizer,
    AheParams,
    ClaheParams,
    HistogramEqualizer,
    adaptive_equalize,
    clahe,
    enhance,
    enhance_rgb,
    equalize,
    select_beta,
)
from .imgcore import Histogram256, histogram, read_pnm, write_pnm
from .metrics import MetricReport, compare, entropy, mse, psnr, psnr_from_mse, psnr_var
from .classify import SoftmaxClassifier, TrainConfig, evaluate, softmax, train
