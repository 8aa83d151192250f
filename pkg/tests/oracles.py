"""Brute-force reference implementations used only by the tests.

Everything here is deliberately naive: pure-Python loops over pixels and
levels, exact rationals where rounding matters, scalar arithmetic for
geometry. None of it imports the package under test.
"""
import math
from fractions import Fraction


def round_half_up(x):
    return math.floor(x + Fraction(1, 2))


def tally(pixels):
    counts = [0] * 256
    for p in pixels:
        counts[int(p)] += 1
    return counts


def equalize_oracle(img, classic=False):
    """Per pixel: count the pixels at or below it, then apply the CDF formula."""
    flat = [int(v) for row in img for v in row]
    n = len(flat)
    cdf_of = {v: sum(1 for q in flat if q <= v) for v in set(flat)}
    cdf_min = min(cdf_of.values())
    den = (n - cdf_min) if classic else (n - 1)
    out = []
    for row in img:
        new_row = []
        for v in row:
            if den == 0:
                new_row.append(0)
                continue
            val = round_half_up(Fraction(cdf_of[int(v)] - cdf_min, den) * 255)
            new_row.append(min(255, max(0, val)))
        out.append(new_row)
    return out


def adaptive_oracle(img, beta, inclusive=False):
    """Per occupied level: count pixels strictly below and above it.

    The common factor 1/n cancels, so the ratio is formed from raw counts.
    """
    flat = [int(v) for row in img for v in row]
    beta = Fraction(str(beta))
    mapping = {}
    for i in set(flat):
        below = sum(1 for q in flat if q < i)
        above = sum(1 for q in flat if q > i)
        own = sum(1 for q in flat if q == i) if inclusive else 0
        den = below + beta * above + own
        mapping[i] = 0 if den == 0 else min(255, round_half_up(Fraction(255 * below) / den))
    return [[mapping[int(v)] for v in row] for row in img]


def select_beta_oracle(pixels, tl=85, th=170):
    low = sum(1 for v in pixels if v <= tl)
    mid = sum(1 for v in pixels if tl < v <= th)
    high = sum(1 for v in pixels if v > th)
    if low >= mid and low >= high:
        return 0.8
    if mid >= high:
        return 1.1
    return 1.5


def mse_oracle(a, b):
    total = 0
    count = 0
    for row_a, row_b in zip(a, b):
        for x, y in zip(row_a, row_b):
            total += (int(x) - int(y)) ** 2
            count += 1
    return total / count


def variance_oracle(img):
    flat = [float(v) for row in img for v in row]
    mean = sum(flat) / len(flat)
    return sum((v - mean) ** 2 for v in flat) / len(flat)


def entropy_oracle(img):
    flat = [int(v) for row in img for v in row]
    counts = tally(flat)
    n = len(flat)
    return -sum((c / n) * math.log2(c / n) for c in counts if c)


def project_oracle(X, fx, fy, cx, cy, R, t, k1=0.0, k2=0.0, k3=0.0, p1=0.0, p2=0.0):
    """One point, written out scalar by scalar."""
    xc = R[0][0] * X[0] + R[0][1] * X[1] + R[0][2] * X[2] + t[0]
    yc = R[1][0] * X[0] + R[1][1] * X[1] + R[1][2] * X[2] + t[1]
    zc = R[2][0] * X[0] + R[2][1] * X[1] + R[2][2] * X[2] + t[2]
    x = xc / zc
    y = yc / zc
    r2 = x * x + y * y
    r4 = r2 * r2
    r6 = r4 * r2
    radial = 1 + k1 * r2 + k2 * r4 + k3 * r6
    xd = x * radial + 2 * p1 * x * y + p2 * (r2 + 2 * x * x)
    yd = y * radial + p1 * (r2 + 2 * y * y) + 2 * p2 * x * y
    return fx * xd + cx, fy * yd + cy


def clahe_clip_oracle(counts, clip_limit):
    """Clip and redistribute, one bin at a time."""
    n = sum(counts)
    limit = max(1, math.floor(clip_limit * n / 256))
    out = list(counts)
    excess = 0
    for i in range(256):
        if out[i] > limit:
            excess += out[i] - limit
            out[i] = limit
    share = excess // 256
    for i in range(256):
        out[i] += share
    for i in range(excess - share * 256):
        out[i] += 1
    return out
