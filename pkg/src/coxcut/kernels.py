"""Stationary, non-negative covariance functions.

The same objects serve as Gaussian process kernels, as the coupling weights
of the label random field, and as smoothing windows for the kernel density
classifier. Both implemented families are isotropic (Euclidean norm of the
displacement) and satisfy 0 <= C(s) <= C(0) = signal_variance everywhere,
which is what makes min-cut inference applicable downstream.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import _accel

# Short CLI names; long forms accepted as aliases.
_FAMILIES = {
    "se": "se",
    "squared-exponential": "se",
    "exp": "exp",
    "exponential": "exp",
}

_FAMILY_CODE = {"se": 0, "exp": 1}

_SUM_TILE = 512  # training points per numpy row_sums tile


@dataclass(frozen=True)
class Kernel:
    """Isotropic covariance C(s), either squared-exponential or exponential.

    squared-exponential: C(s) = signal_variance * exp(-|s|^2 / (2 l^2))
    exponential:         C(s) = signal_variance * exp(-|s| / l)
    """

    family: str
    signal_variance: float = 1.0
    length_scale: float = 1.0

    def __post_init__(self):
        fam = _FAMILIES.get(self.family)
        if fam is None:
            raise ValueError(
                f"unknown kernel family {self.family!r}; expected one of {sorted(_FAMILIES)}"
            )
        object.__setattr__(self, "family", fam)
        for name in ("signal_variance", "length_scale"):
            v = getattr(self, name)
            if not (np.isfinite(v) and v > 0):
                raise ValueError(f"{name} must be a positive finite real, got {v!r}")
            object.__setattr__(self, name, float(v))

    def eval(self, s):
        """Covariance at displacement ``s`` (scalar, (D,) vector, or (M, D) batch)."""
        s = np.asarray(s, dtype=np.float64)
        if not np.all(np.isfinite(s)):
            raise ValueError("displacement contains non-finite components")
        if s.ndim == 0:
            d2 = s * s
        else:
            d2 = np.sum(s * s, axis=-1)
        out = self._from_sqdist(d2)
        return float(out) if np.ndim(out) == 0 else out

    def _from_sqdist(self, d2):
        if self.family == "se":
            return self.signal_variance * np.exp(-d2 / (2.0 * self.length_scale**2))
        return self.signal_variance * np.exp(-np.sqrt(d2) / self.length_scale)

    def cross(self, a, b) -> np.ndarray:
        """Covariance matrix C(a_i - b_j) for two point sets, shape (len(a), len(b))."""
        a = _as_points(a)
        b = _as_points(b)
        if a.shape[1] != b.shape[1]:
            raise ValueError(
                f"point sets have mismatched dimensions {a.shape[1]} and {b.shape[1]}"
            )
        d2 = _sq_dists(a, b)
        return self._from_sqdist(d2)

    def gram(self, points) -> np.ndarray:
        """Symmetric covariance matrix of one point set; diagonal is exactly C(0)."""
        x = _as_points(points)
        d2 = _sq_dists(x, x)
        d2 = 0.5 * (d2 + d2.T)  # enforce exact symmetry
        np.fill_diagonal(d2, 0.0)
        return self._from_sqdist(d2)

    def row_sums(self, a, b) -> np.ndarray:
        """sum_j C(a_i - b_j) for each row a_i, shape (len(a),).

        This is the prediction hot loop; on the numba path it streams the
        points without materializing the (len(a), len(b)) matrix.
        """
        a = _as_points(a)
        b = _as_points(b)
        if a.shape[1] != b.shape[1]:
            raise ValueError(
                f"point sets have mismatched dimensions {a.shape[1]} and {b.shape[1]}"
            )
        if _accel.USE_NUMBA:
            return _row_sums_fast(
                a, b, self.signal_variance, self.length_scale, _FAMILY_CODE[self.family]
            )
        # fixed tile keeps the numpy working set (and so the per-element
        # cost) independent of len(b)
        out = np.zeros(a.shape[0])
        for start in range(0, b.shape[0], _SUM_TILE):
            out += self._from_sqdist(_sq_dists(a, b[start : start + _SUM_TILE])).sum(axis=1)
        return out


def _as_points(x) -> np.ndarray:
    x = np.asarray(x, dtype=np.float64)
    if x.ndim == 1:
        x = x[:, None]
    if x.ndim != 2:
        raise ValueError(f"expected a (N, D) array of points, got shape {x.shape}")
    if not np.all(np.isfinite(x)):
        raise ValueError("points contain non-finite values")
    return x


def _sq_dists(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    aa = np.sum(a * a, axis=1)
    bb = np.sum(b * b, axis=1)
    d2 = aa[:, None] + bb[None, :] - 2.0 * (a @ b.T)
    np.maximum(d2, 0.0, out=d2)
    return d2


def _row_sums_loop(a, b, sv, ls, fam):
    out = np.empty(a.shape[0])
    for i in range(a.shape[0]):
        s = 0.0
        for j in range(b.shape[0]):
            d2 = 0.0
            for d in range(a.shape[1]):
                diff = a[i, d] - b[j, d]
                d2 += diff * diff
            if fam == 0:
                s += math.exp(-d2 / (2.0 * ls * ls))
            else:
                s += math.exp(-math.sqrt(d2) / ls)
        out[i] = sv * s
    return out


_row_sums_fast = _accel.accelerate(_row_sums_loop)
