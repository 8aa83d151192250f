"""Histogram machinery and binary PNM (P5/P6) I/O."""
import os
from dataclasses import dataclass

import numpy as np

from .exceptions import (
    BadMagicError,
    InvalidInputError,
    PnmError,
    TruncatedPayloadError,
    UnsupportedDepthError,
)
from .validation import check_gray, check_image

N_LEVELS = 256
MAX_LEVEL = N_LEVELS - 1


@dataclass(frozen=True)
class Histogram256:
    """Gray-level histogram of an 8-bit image.

    The cumulative distribution is kept as integer prefix sums so that
    callers can divide once, at the point of use, and stay exact.
    """

    counts: np.ndarray
    total: int

    def __post_init__(self):
        counts = np.asarray(self.counts, dtype=np.int64)
        if counts.shape != (N_LEVELS,) or (counts < 0).any():
            raise InvalidInputError("counts must be 256 non-negative integers")
        if int(counts.sum()) != self.total or self.total <= 0:
            raise InvalidInputError("counts must sum to a positive total")
        counts.setflags(write=False)
        object.__setattr__(self, "counts", counts)
        object.__setattr__(self, "total", int(self.total))

    @property
    def prefix(self):
        """Integer prefix sums, ``prefix[i] == counts[:i + 1].sum()``."""
        return np.cumsum(self.counts)

    def probability(self):
        return self.counts / self.total

    def cdf(self):
        return self.prefix / self.total

    @property
    def occupied(self):
        return np.flatnonzero(self.counts)


def histogram(img):
    """Count pixels per gray level."""
    arr = check_gray(img)
    counts = np.bincount(arr.ravel(), minlength=N_LEVELS).astype(np.int64)
    return Histogram256(counts=counts, total=arr.size)


def _next_token(data, pos):
    n = len(data)
    while True:
        while pos < n and data[pos : pos + 1].isspace():
            pos += 1
        if pos < n and data[pos : pos + 1] == b"#":
            while pos < n and data[pos : pos + 1] not in (b"\n", b"\r"):
                pos += 1
            continue
        break
    start = pos
    while pos < n and not data[pos : pos + 1].isspace() and data[pos : pos + 1] != b"#":
        pos += 1
    if start == pos:
        raise TruncatedPayloadError("header ended early")
    return data[start:pos], pos


def decode_pnm(data):
    """Decode the bytes of a binary P5/P6 file into a uint8 array."""
    magic = data[:2]
    if magic not in (b"P5", b"P6"):
        raise BadMagicError(f"unsupported magic {magic!r}; expected P5 or P6")
    pos = 2
    fields = []
    for _ in range(3):
        tok, pos = _next_token(data, pos)
        try:
            fields.append(int(tok))
        except ValueError:
            raise PnmError(f"non-numeric header field {tok!r}") from None
    width, height, maxval = fields
    if width <= 0 or height <= 0:
        raise PnmError(f"invalid dimensions {width}x{height}")
    if maxval != 255:
        raise UnsupportedDepthError(f"maxval {maxval} unsupported; only 255 is accepted")
    if pos >= len(data) or not data[pos : pos + 1].isspace():
        raise TruncatedPayloadError("missing whitespace after maxval")
    pos += 1
    channels = 1 if magic == b"P5" else 3
    expected = width * height * channels
    payload = data[pos : pos + expected]
    if len(payload) < expected:
        raise TruncatedPayloadError(f"payload has {len(payload)} bytes, expected {expected}")
    arr = np.frombuffer(payload, dtype=np.uint8)
    shape = (height, width) if channels == 1 else (height, width, 3)
    return arr.reshape(shape).copy()


def encode_pnm(img):
    arr = check_image(img)
    magic = b"P5" if arr.ndim == 2 else b"P6"
    header = b"%s\n%d %d\n255\n" % (magic, arr.shape[1], arr.shape[0])
    return header + np.ascontiguousarray(arr).tobytes()


def read_pnm(path):
    """Read a binary PGM (P5) or PPM (P6) file with maxval 255.

    Returns an ``(H, W)`` array for P5 and ``(H, W, 3)`` for P6.
    """
    with open(path, "rb") as fh:
        return decode_pnm(fh.read())


def write_pnm(img, path):
    """Write ``img`` as P5 or P6 depending on its shape.

    The file is written to a sibling temporary and renamed into place, so a
    failed write never leaves a partial image behind.
    """
    data = encode_pnm(img)
    tmp = f"{os.fspath(path)}.tmp{os.getpid()}"
    try:
        with open(tmp, "wb") as fh:
            fh.write(data)
        os.replace(tmp, path)
    finally:
        if os.path.exists(tmp):
            os.remove(tmp)
