"""Image quality measures: entropy, MSE, PSNR and variance-based PSNR.

``MAX`` is fixed at 255 for 8-bit data. PSNR of identical images and
PSNR-VAR of a constant image have no finite value; both come back as
``math.inf``, and :class:`MetricReport` records the reason.
"""
import math
from dataclasses import asdict, dataclass

import numpy as np

from .validation import check_image, check_same_shape

MAX_I = 255.0


def entropy(img):
    """Shannon entropy in bits of the gray-level distribution of ``img``."""
    arr = check_image(img)
    counts = np.bincount(arr.ravel(), minlength=256)
    p = counts[counts > 0] / arr.size
    # -sum(p log2 p); the "+ 0.0" turns a -0.0 result for constant images into 0.0
    return float(-(p * np.log2(p)).sum()) + 0.0


def mse(reference, test):
    """Mean squared error between two images of equal shape."""
    ref = check_image(reference, "reference")
    tst = check_image(test, "test")
    check_same_shape(ref, tst)
    diff = ref.astype(np.int64) - tst.astype(np.int64)
    return float((diff * diff).sum() / diff.size)


def psnr_from_mse(mse_value):
    """``10 log10(255^2 / mse)`` in dB; ``inf`` when ``mse == 0``."""
    if mse_value < 0:
        raise ValueError("mse must be non-negative")
    if mse_value == 0:
        return math.inf
    return 10.0 * math.log10(MAX_I**2 / mse_value)


def psnr(reference, test):
    return psnr_from_mse(mse(reference, test))


def variance(img):
    """Population variance of pixel intensities (two-pass)."""
    arr = check_image(img).astype(np.float64)
    mean = arr.mean()
    return float(((arr - mean) ** 2).mean())


def psnr_var(img):
    """PSNR with the image's own pixel variance in place of the MSE.

    A larger value means the intensities are packed more tightly around
    their mean. Constant images give ``inf``.
    """
    var = variance(img)
    if var == 0:
        return math.inf
    return 10.0 * math.log10(MAX_I**2 / var)


@dataclass(frozen=True)
class MetricReport:
    entropy_ref: float
    entropy_test: float
    mse: float
    psnr_db: float
    psnr_var_ref_db: float
    psnr_var_test_db: float

    def to_dict(self):
        """JSON-friendly dict; infinite values become ``None`` with a note."""
        out = {}
        notes = {}
        for key, value in asdict(self).items():
            if math.isinf(value):
                out[key] = None
                notes[key] = "identical" if key == "psnr_db" else "zero variance"
            else:
                out[key] = value
        if notes:
            out["notes"] = notes
        return out


def compare(reference, test):
    """All four measures for a (reference, test) pair."""
    ref = check_image(reference, "reference")
    tst = check_image(test, "test")
    check_same_shape(ref, tst)
    err = mse(ref, tst)
    return MetricReport(
        entropy_ref=entropy(ref),
        entropy_test=entropy(tst),
        mse=err,
        psnr_db=psnr_from_mse(err),
        psnr_var_ref_db=psnr_var(ref),
        psnr_var_test_db=psnr_var(tst),
    )
