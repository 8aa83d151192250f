"""Histogram-based contrast enhancement for 8-bit images.

Three gray-level algorithms are provided, each as a plain function and as a
scikit-learn compatible transformer:

* :func:`equalize` / :class:`HistogramEqualizer` - global histogram equalization
* :func:`adaptive_equalize` / :class:`AdaptiveEqualizer` - the beta-weighted
  level remapping that balances mass below and above each gray level
* :func:`clahe` / :class:`CLAHE` - tile-local, clip-limited equalization with
  bilinear blending of the tile mappings

RGB images are handled channel by channel (:func:`enhance_rgb`).
"""
import math
from dataclasses import dataclass
from fractions import Fraction

import numpy as np
from sklearn.base import BaseEstimator, TransformerMixin

from .exceptions import DegenerateInputError, InvalidInputError, InvalidParamsError
from .imgcore import MAX_LEVEL, N_LEVELS, histogram
from .validation import check_gray, check_image, check_rgb

BETA_LOW = 0.8
BETA_MID = 1.1
BETA_HIGH = 1.5

METHODS = ("he", "ahe", "clahe")


def _round_half_up(num, den):
    """Round the non-negative rational ``num / den`` half-up, elementwise on ints."""
    return (2 * num + den) // (2 * den)


# --------------------------------------------------------------------------
# Global histogram equalization
# --------------------------------------------------------------------------


def equalization_mapping(counts, classic=False):
    """Level mapping (length 256) for histogram equalization of ``counts``.

    ``out[i] = round((cdf[i] - cdf_min) / (n - 1) * 255)`` with ``cdf`` the
    integer prefix count and ``cdf_min`` its smallest nonzero value. With
    ``classic=True`` the denominator is ``n - cdf_min`` instead.
    """
    counts = np.asarray(counts, dtype=np.int64)
    prefix = np.cumsum(counts)
    n = int(prefix[-1])
    cdf_min = int(counts[np.flatnonzero(counts)[0]])
    den = n - cdf_min if classic else n - 1
    if den == 0:
        if classic:
            return np.zeros(N_LEVELS, dtype=np.uint8)
        raise DegenerateInputError("equalization needs at least two pixels (n - 1 == 0)")
    num = np.maximum(prefix - cdf_min, 0) * MAX_LEVEL
    return np.clip(_round_half_up(num, den), 0, MAX_LEVEL).astype(np.uint8)


def equalize(img, classic=False):
    """Global histogram equalization of a gray image.

    Parameters
    ----------
    img : (H, W) uint8 array
    classic : bool
        Use ``n - cdf_min`` as the normalizer rather than ``n - 1``.

    Raises
    ------
    DegenerateInputError
        For a single-pixel image, where ``n - 1`` is zero.
    """
    arr = check_gray(img)
    lut = equalization_mapping(histogram(arr).counts, classic=classic)
    return lut[arr]


# --------------------------------------------------------------------------
# Beta-weighted adaptive equalization
# --------------------------------------------------------------------------


@dataclass(frozen=True)
class AheParams:
    """Parameters of :func:`adaptive_equalize`.

    ``beta=None`` selects beta from the histogram with :func:`select_beta`.
    ``inclusive=True`` adds the level's own mass to the denominator, a
    comparison variant under which ``beta=1`` reduces to a plain CDF map.
    """

    beta: float | None = None
    low_threshold: int = 85
    high_threshold: int = 170
    gray_levels: int = N_LEVELS
    inclusive: bool = False

    def __post_init__(self):
        if self.beta is not None and not (math.isfinite(self.beta) and self.beta > 0):
            raise InvalidParamsError(f"beta must be a positive real, got {self.beta}")
        if not 0 < self.low_threshold < self.high_threshold < N_LEVELS:
            raise InvalidParamsError(
                "thresholds must satisfy 0 < low_threshold < high_threshold < 256"
            )
        if self.gray_levels != N_LEVELS:
            raise InvalidParamsError("only 256 gray levels are supported")


def select_beta(hist, params=None):
    """Pick beta from where most of the pixel mass lies.

    Mass is tallied over ``[0, TL]``, ``(TL, TH]`` and ``(TH, 255]``; the
    heaviest band gives 0.8, 1.1 or 1.5 respectively. Ties go to the lower band.
    """
    params = params or AheParams()
    counts = hist.counts
    tl, th = params.low_threshold, params.high_threshold
    bands = (
        int(counts[: tl + 1].sum()),
        int(counts[tl + 1 : th + 1].sum()),
        int(counts[th + 1 :].sum()),
    )
    best = max(range(3), key=lambda k: (bands[k], -k))
    return (BETA_LOW, BETA_MID, BETA_HIGH)[best]


def _exact(value):
    # decimal literal value, so 1.1 means 11/10 rather than its binary neighbour
    return Fraction(repr(float(value)))


def adaptive_mapping(hist, beta, inclusive=False):
    """Level -> level dictionary for every occupied level of ``hist``.

    ``j = round((m - 1) * A / (A + beta * B))`` with ``A`` the mass strictly
    below and ``B`` strictly above the level. ``A == B == 0`` maps to 0.
    Arithmetic is exact (rationals), rounding is half-up.
    """
    counts = hist.counts
    beta = _exact(beta)
    prefix = np.cumsum(counts)
    total = hist.total
    mapping = {}
    for level in hist.occupied:
        below = int(prefix[level]) - int(counts[level])
        above = total - int(prefix[level])
        den = below + beta * above
        if inclusive:
            den += int(counts[level])
        if den == 0:
            mapping[int(level)] = 0
            continue
        j = Fraction(MAX_LEVEL * below) / den
        mapping[int(level)] = min(MAX_LEVEL, (2 * j.numerator + j.denominator) // (2 * j.denominator))
    return mapping


def adaptive_equalize(img, params=None, return_beta=False):
    """Beta-weighted adaptive equalization of a gray image.

    Only occupied levels are remapped; the result depends on the histogram
    alone. With ``return_beta=True`` the beta actually used is also returned.
    """
    params = params or AheParams()
    arr = check_gray(img)
    hist = histogram(arr)
    beta = params.beta if params.beta is not None else select_beta(hist, params)
    mapping = adaptive_mapping(hist, beta, inclusive=params.inclusive)
    lut = np.zeros(N_LEVELS, dtype=np.uint8)
    for level, value in mapping.items():
        lut[level] = value
    out = lut[arr]
    return (out, beta) if return_beta else out


# --------------------------------------------------------------------------
# CLAHE
# --------------------------------------------------------------------------


@dataclass(frozen=True)
class ClaheParams:
    """Tile size (pixels, at least 32 each way) and clip limit.

    ``clip_limit`` is a multiple of the flat-histogram bin height
    ``tile_pixels / 256``.
    """

    tile_width: int = 32
    tile_height: int = 32
    clip_limit: float = 4.0

    def __post_init__(self):
        if self.tile_width < 32 or self.tile_height < 32:
            raise InvalidParamsError("tile dimensions must be at least 32 pixels")
        if not (math.isfinite(self.clip_limit) and self.clip_limit >= 1.0):
            raise InvalidParamsError(f"clip_limit must be >= 1.0, got {self.clip_limit}")


def clip_histogram(counts, clip_limit):
    """Clip bins above ``clip_limit * n / 256`` and hand the excess back.

    The excess is spread evenly over all 256 bins in one pass; what does not
    divide evenly goes one count per bin starting at bin 0. Total mass is
    preserved exactly.
    """
    counts = np.asarray(counts, dtype=np.int64)
    n = int(counts.sum())
    limit = max(1, int(math.floor(clip_limit * n / N_LEVELS)))
    excess = int(np.maximum(counts - limit, 0).sum())
    clipped = np.minimum(counts, limit)
    share, residual = divmod(excess, N_LEVELS)
    clipped += share
    clipped[:residual] += 1
    return clipped


def _tile_bounds(size, tile):
    starts = np.arange(0, size, tile)
    stops = np.minimum(starts + tile, size)
    # histogram windows keep the full tile size by sliding back inside the image
    win_starts = np.minimum(starts, size - tile)
    return starts, stops, win_starts


def _axis_weights(size, starts, stops):
    """Per-coordinate lower tile index, upper tile index and upper weight."""
    centers = (starts + stops - 1) / 2.0
    coords = np.arange(size, dtype=np.float64)
    hi = np.searchsorted(centers, coords, side="right")
    lo = np.clip(hi - 1, 0, len(centers) - 1)
    hi = np.clip(hi, 0, len(centers) - 1)
    span = centers[hi] - centers[lo]
    with np.errstate(invalid="ignore", divide="ignore"):
        w = np.where(span > 0, (coords - centers[lo]) / np.where(span > 0, span, 1.0), 0.0)
    return lo, hi, np.clip(w, 0.0, 1.0)


def clahe_tile_mappings(img, params=None):
    """Per-tile level mappings, shape ``(tiles_y, tiles_x, 256)``.

    Also returns the tile start/stop bounds along each axis.
    """
    params = params or ClaheParams()
    arr = check_gray(img)
    h, w = arr.shape
    tw, th = params.tile_width, params.tile_height
    if tw > w or th > h:
        raise InvalidParamsError(f"tile {tw}x{th} is larger than image {w}x{h}")
    xs, xe, wxs = _tile_bounds(w, tw)
    ys, ye, wys = _tile_bounds(h, th)
    maps = np.empty((len(ys), len(xs), N_LEVELS), dtype=np.uint8)
    for ty, y0 in enumerate(wys):
        for tx, x0 in enumerate(wxs):
            window = arr[y0 : y0 + th, x0 : x0 + tw]
            counts = np.bincount(window.ravel(), minlength=N_LEVELS)
            maps[ty, tx] = equalization_mapping(clip_histogram(counts, params.clip_limit))
    return maps, (ys, ye), (xs, xe)


def clahe(img, params=None):
    """Contrast-limited adaptive histogram equalization of a gray image.

    The image is cut into tiles from the top-left corner; the last tile on
    each axis may be narrower, but its histogram is taken over a full-size
    window slid back inside the image. Each tile's clipped histogram yields
    an equalization mapping, and every pixel blends the mappings of its four
    nearest tile centres bilinearly (clamped to the nearest tiles at the
    border).
    """
    arr = check_gray(img)
    maps, (ys, ye), (xs, xe) = clahe_tile_mappings(arr, params)
    h, w = arr.shape
    ylo, yhi, wy = _axis_weights(h, ys, ye)
    xlo, xhi, wx = _axis_weights(w, xs, xe)

    level = arr.astype(np.intp)
    rows_lo, rows_hi = ylo[:, None], yhi[:, None]
    cols_lo, cols_hi = xlo[None, :], xhi[None, :]
    m00 = maps[rows_lo, cols_lo, level].astype(np.float64)
    m01 = maps[rows_lo, cols_hi, level].astype(np.float64)
    m10 = maps[rows_hi, cols_lo, level].astype(np.float64)
    m11 = maps[rows_hi, cols_hi, level].astype(np.float64)
    fx = wx[None, :]
    fy = wy[:, None]
    top = m00 + fx * (m01 - m00)
    bottom = m10 + fx * (m11 - m10)
    value = top + fy * (bottom - top)
    return np.clip(np.floor(value + 0.5), 0, MAX_LEVEL).astype(np.uint8)


# --------------------------------------------------------------------------
# Dispatch and RGB
# --------------------------------------------------------------------------


def enhance_gray(img, method, params=None):
    """Apply ``method`` (``"he"``, ``"ahe"`` or ``"clahe"``) to a gray image."""
    if method == "he":
        # params for "he" is the ``classic`` flag
        return equalize(img, classic=bool(params))
    if method == "ahe":
        return adaptive_equalize(img, params)
    if method == "clahe":
        return clahe(img, params)
    raise InvalidParamsError(f"unknown method {method!r}; choose from {METHODS}")


def enhance_rgb(img, method, params=None):
    """Apply a gray-level method to each channel of an RGB image independently."""
    arr = check_rgb(img)
    return np.stack([enhance_gray(arr[..., c], method, params) for c in range(3)], axis=-1)


def enhance(img, method, params=None):
    """Dispatch on image kind: gray images directly, RGB per channel."""
    arr = check_image(img)
    if arr.ndim == 2:
        return enhance_gray(arr, method, params)
    return enhance_rgb(arr, method, params)


# --------------------------------------------------------------------------
# scikit-learn transformers
# --------------------------------------------------------------------------


class _ImageTransformer(TransformerMixin, BaseEstimator):
    """Stateless image-to-image transformer over a collection of images.

    ``X`` is a sequence of images, or a stacked array ``(N, H, W)`` /
    ``(N, H, W, 3)``. Stacked input returns a stacked array, anything else a
    list. Enhancement needs no fitted state, so :meth:`fit` only validates.
    """

    def fit(self, X, y=None):
        self._validate_params_now()
        self.n_images_seen_ = len(X)
        return self

    def transform(self, X):
        self._validate_params_now()
        if isinstance(X, np.ndarray) and X.ndim in (3, 4):
            if X.ndim == 4 and X.shape[-1] != 3:
                raise InvalidInputError(f"stacked RGB input must end in 3 channels, got {X.shape}")
            return np.stack([self._apply(im) for im in X]) if len(X) else X.astype(np.uint8)
        return [self._apply(im) for im in X]

    def __sklearn_tags__(self):
        tags = super().__sklearn_tags__()
        tags.requires_fit = False
        return tags

    def _validate_params_now(self):
        self._params()

    def _apply(self, img):
        return enhance(img, self._method, self._params())


class HistogramEqualizer(_ImageTransformer):
    """Global histogram equalization.

    Parameters
    ----------
    classic : bool, default=False
        Normalize by ``n - cdf_min`` instead of ``n - 1``.
    """

    _method = "he"

    def __init__(self, classic=False):
        self.classic = classic

    def _params(self):
        return bool(self.classic)


class AdaptiveEqualizer(_ImageTransformer):
    """Beta-weighted adaptive equalization (``beta=None`` picks beta per image)."""

    _method = "ahe"

    def __init__(self, beta=None, low_threshold=85, high_threshold=170, inclusive=False):
        self.beta = beta
        self.low_threshold = low_threshold
        self.high_threshold = high_threshold
        self.inclusive = inclusive

    def _params(self):
        return AheParams(
            beta=self.beta,
            low_threshold=self.low_threshold,
            high_threshold=self.high_threshold,
            inclusive=self.inclusive,
        )


class CLAHE(_ImageTransformer):
    """Contrast-limited adaptive histogram equalization."""

    _method = "clahe"

    def __init__(self, tile_width=32, tile_height=32, clip_limit=4.0):
        self.tile_width = tile_width
        self.tile_height = tile_height
        self.clip_limit = clip_limit

    def _params(self):
        return ClaheParams(self.tile_width, self.tile_height, self.clip_limit)


def make_enhancer(method, **kwargs):
    """Build the transformer for ``method`` from keyword parameters."""
    cls = {"he": HistogramEqualizer, "ahe": AdaptiveEqualizer, "clahe": CLAHE}.get(method)
    if cls is None:
        raise InvalidParamsError(f"unknown method {method!r}; choose from {METHODS}")
    return cls(**kwargs)
