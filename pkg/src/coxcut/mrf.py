"""Conditional Potts random field over the unlabeled sites.

Conditioning the model on covariates yields label energies of the form

    E(y*) = sum_k unary(k, y*_k) + sum_{j<k} pairwise(j,k)(y*_j, y*_k) + constant

where unary(k, a) = -(mean_a + C_a(0)/2 + attraction of site k to the
labeled points of class a) and pairwise(j,k)(a,b) = -delta(a,b) *
C_a(x*_j - x*_k). Non-negative kernels make every pairwise table satisfy

    E(a,a) + E(b,c) <= E(a,c) + E(b,a)

for all label triples, which licenses the min-cut machinery in
``mincut``/``expansion``. Brute-force enumeration of the minimum and of the
log partition function is provided as a test oracle for small instances.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import _accel
from .data import Dataset
from .simulate import log_product_density

BRUTE_FORCE_GUARD = 2_000_000
REPRESENTABILITY_TOL = 1e-9
PAIR_CUTOFF = 1e-12  # pairwise tables with all |entries| below this are dropped

_CHUNK = 1 << 16


@dataclass
class EnergyGraph:
    """Unary and pairwise energy tables over U sites with Q labels.

    Pairwise tables are stored per unordered site pair (pair_i[p] < pair_j[p]);
    tables[p, a, b] is the energy of site pair_i[p] taking label a+1 and site
    pair_j[p] taking label b+1.
    """

    unary: np.ndarray
    pair_i: np.ndarray
    pair_j: np.ndarray
    tables: np.ndarray
    constant: float = 0.0

    def __post_init__(self):
        self.unary = np.ascontiguousarray(self.unary, dtype=np.float64)
        self.pair_i = np.ascontiguousarray(self.pair_i, dtype=np.int64)
        self.pair_j = np.ascontiguousarray(self.pair_j, dtype=np.int64)
        self.tables = np.ascontiguousarray(self.tables, dtype=np.float64)
        self.constant = float(self.constant)
        u, q = self.unary.shape
        p = len(self.pair_i)
        if self.pair_j.shape != (p,) or self.tables.shape != (p, q, q):
            raise ValueError("pairwise arrays are inconsistent with the unary table")
        if p and (self.pair_i.min() < 0 or self.pair_j.max() >= u):
            raise ValueError("pair site indices out of range")
        if p and np.any(self.pair_i >= self.pair_j):
            raise ValueError("pairs must be stored with pair_i < pair_j")

    @property
    def num_sites(self) -> int:
        return self.unary.shape[0]

    @property
    def num_labels(self) -> int:
        return self.unary.shape[1]

    @property
    def num_pairs(self) -> int:
        return len(self.pair_i)


def build_energy(models, labeled: Dataset | None, unlabeled, cutoff: float = PAIR_CUTOFF) -> EnergyGraph:
    """Energy tables for the unlabeled sites given class models and labeled data.

    The constant collects all terms that do not depend on the unlabeled
    labels (the labeled-labeled block), so that for a full labeling y* the
    identity joint_unnormalized_log_prob = -energy_of holds exactly.
    ``labeled`` may be None or contain no labeled rows, in which case the
    unary tables carry only the mean and self-covariance terms.
    """
    x_u = np.asarray(unlabeled, dtype=np.float64)
    if x_u.ndim == 1:
        x_u = x_u[:, None]
    u = x_u.shape[0]
    if u == 0:
        raise ValueError("no unlabeled sites")
    if not np.all(np.isfinite(x_u)):
        raise ValueError("unlabeled covariates contain non-finite values")
    q = len(models)
    if q < 2:
        raise ValueError("need at least two class models")
    if labeled is not None:
        if labeled.num_classes != q:
            raise ValueError(f"labeled data has {labeled.num_classes} classes, got {q} models")
        if labeled.dim != x_u.shape[1]:
            raise ValueError(
                f"dimension mismatch: labeled D={labeled.dim}, unlabeled D={x_u.shape[1]}"
            )
        x_l, y_l = labeled.labeled()
    else:
        x_l = np.empty((0, x_u.shape[1]))
        y_l = np.empty(0, dtype=np.int64)

    unary = np.empty((u, q))
    constant = 0.0
    for a, m in enumerate(models):
        unary[:, a] = -(m.mean + 0.5 * m.kernel.signal_variance)
        pts = x_l[y_l == a + 1]
        if len(pts):
            unary[:, a] -= m.kernel.cross(pts, x_u).sum(axis=0)
            constant -= len(pts) * m.mean + 0.5 * m.kernel.gram(pts).sum()

    pi, pj = np.triu_indices(u, k=1)
    tables = np.zeros((len(pi), q, q))
    for a, m in enumerate(models):
        g = m.kernel.gram(x_u)
        tables[:, a, a] = -g[pi, pj]
    if cutoff is not None and len(pi):
        keep = np.abs(tables).max(axis=(1, 2)) >= cutoff
        pi, pj, tables = pi[keep], pj[keep], tables[keep]
    return EnergyGraph(unary, pi, pj, tables, constant)


def joint_unnormalized_log_prob(models, dataset: Dataset) -> float:
    """Log numerator of the label field for a fully labeled dataset.

    Equals the sum over classes of the log product density of that class's
    points (empty classes contribute nothing).
    """
    if len(models) != dataset.num_classes:
        raise ValueError(f"need {dataset.num_classes} class models, got {len(models)}")
    if not np.all(dataset.labeled_mask):
        raise ValueError("joint log probability requires every point to be labeled")
    total = 0.0
    for a, m in enumerate(models):
        pts = dataset.class_points(a + 1)
        if len(pts):
            total += log_product_density(m, pts)
    return total


def _check_labeling(energy: EnergyGraph, labeling) -> np.ndarray:
    y = np.asarray(labeling, dtype=np.int64)
    if y.shape != (energy.num_sites,):
        raise ValueError(f"labeling has shape {y.shape}, expected ({energy.num_sites},)")
    if y.size and (y.min() < 1 or y.max() > energy.num_labels):
        raise ValueError(f"labels must lie in {{1..{energy.num_labels}}}")
    return y


def energy_of(energy: EnergyGraph, labeling) -> float:
    """Total energy of a labeling: unary + pairwise (over j<k) + constant."""
    y = _check_labeling(energy, labeling) - 1
    e = energy.unary[np.arange(energy.num_sites), y].sum()
    if energy.num_pairs:
        e += energy.tables[
            np.arange(energy.num_pairs), y[energy.pair_i], y[energy.pair_j]
        ].sum()
    return float(e + energy.constant)


def check_pairwise_representable(
    energy: EnergyGraph, tol: float = REPRESENTABILITY_TOL
):
    """Verify E(a,a) + E(b,c) <= E(a,c) + E(b,a) + tol for every pair and triple.

    Returns (True, None) or (False, (site_j, site_k, a, b, c)) with the first
    violating tuple (labels 1-based).
    """
    t = energy.tables
    for start in range(0, energy.num_pairs, _CHUNK):
        chunk = t[start : start + _CHUNK]
        diag = np.diagonal(chunk, axis1=1, axis2=2)  # (n, Q)
        # margin[p, a, b, c] = E(a,a) + E(b,c) - E(a,c) - E(b,a)
        margin = (
            diag[:, :, None, None]
            + chunk[:, None, :, :]
            - chunk[:, :, None, :]
            - np.swapaxes(chunk, 1, 2)[:, :, :, None]
        )
        bad = np.argwhere(margin > tol)
        if len(bad):
            p, a, b, c = (int(v) for v in bad[0])
            p += start
            return False, (int(energy.pair_i[p]), int(energy.pair_j[p]), a + 1, b + 1, c + 1)
    return True, None


def _guard_instance_size(energy: EnergyGraph) -> int:
    total = energy.num_labels**energy.num_sites
    if total > BRUTE_FORCE_GUARD:
        raise ValueError(
            f"instance has {total} labelings, above the {BRUTE_FORCE_GUARD} brute-force guard"
        )
    return total


# ---------------------------------------------------------------------------
# Brute-force oracles. The odometer scans below visit labelings in
# lexicographic order (site 0 most significant); ties keep the first hit.
# Compiled when the numba path is on; the vectorized chunk scan is the
# numpy fallback and must produce identical results.


def _scan_min_loop(unary, pair_i, pair_j, tables):
    u = unary.shape[0]
    q = unary.shape[1]
    p = pair_i.shape[0]
    y = np.zeros(u, np.int64)
    best = np.zeros(u, np.int64)
    best_e = np.inf
    while True:
        e = 0.0
        for k in range(u):
            e += unary[k, y[k]]
        for r in range(p):
            e += tables[r, y[pair_i[r]], y[pair_j[r]]]
        if e < best_e:
            best_e = e
            best[:] = y
        pos = u - 1
        while pos >= 0 and y[pos] == q - 1:
            y[pos] = 0
            pos -= 1
        if pos < 0:
            break
        y[pos] += 1
    return best, best_e


def _scan_logz_loop(unary, pair_i, pair_j, tables):
    u = unary.shape[0]
    q = unary.shape[1]
    p = pair_i.shape[0]
    y = np.zeros(u, np.int64)
    m = -np.inf
    s = 0.0
    while True:
        e = 0.0
        for k in range(u):
            e += unary[k, y[k]]
        for r in range(p):
            e += tables[r, y[pair_i[r]], y[pair_j[r]]]
        v = -e
        if v > m:
            s = s * math.exp(m - v) + 1.0
            m = v
        else:
            s += math.exp(v - m)
        pos = u - 1
        while pos >= 0 and y[pos] == q - 1:
            y[pos] = 0
            pos -= 1
        if pos < 0:
            break
        y[pos] += 1
    return m + math.log(s)


_scan_min_fast = _accel.accelerate(_scan_min_loop)
_scan_logz_fast = _accel.accelerate(_scan_logz_loop)


def _chunk_energies(energy: EnergyGraph, start: int, stop: int) -> tuple[np.ndarray, np.ndarray]:
    u, q = energy.unary.shape
    powers = q ** np.arange(u - 1, -1, -1, dtype=np.int64)
    idx = np.arange(start, stop, dtype=np.int64)
    digits = (idx[:, None] // powers[None, :]) % q
    # accumulate term by term in the same order as the loop scan so the two
    # implementations produce bit-identical energies
    e = np.zeros(stop - start)
    for k in range(u):
        e += energy.unary[k, digits[:, k]]
    for r in range(energy.num_pairs):
        e += energy.tables[r, digits[:, energy.pair_i[r]], digits[:, energy.pair_j[r]]]
    return digits, e


def _scan_min_numpy(energy: EnergyGraph, total: int) -> tuple[np.ndarray, float]:
    best_e = np.inf
    best = None
    for start in range(0, total, _CHUNK):
        digits, e = _chunk_energies(energy, start, min(start + _CHUNK, total))
        k = int(np.argmin(e))
        if e[k] < best_e:
            best_e = float(e[k])
            best = digits[k].copy()
    return best, best_e


def _scan_logz_numpy(energy: EnergyGraph, total: int) -> float:
    acc = -np.inf
    for start in range(0, total, _CHUNK):
        _, e = _chunk_energies(energy, start, min(start + _CHUNK, total))
        neg = -e
        m = float(neg.max())
        acc = np.logaddexp(acc, m + np.log(np.exp(neg - m).sum()))
    return float(acc)


def brute_force_map(energy: EnergyGraph) -> tuple[np.ndarray, float]:
    """Exhaustive global minimum; ties resolved to the lexicographically first labeling.

    The reported value is the minimum re-evaluated through ``energy_of`` so
    it is bit-identical to re-evaluations of the same labeling elsewhere.
    """
    total = _guard_instance_size(energy)
    if _accel.USE_NUMBA:
        digits, _ = _scan_min_fast(energy.unary, energy.pair_i, energy.pair_j, energy.tables)
    else:
        digits, _ = _scan_min_numpy(energy, total)
    labeling = digits + 1
    return labeling, energy_of(energy, labeling)


def brute_force_log_partition(energy: EnergyGraph) -> float:
    """log sum over all labelings of exp(-E), via streaming log-sum-exp."""
    total = _guard_instance_size(energy)
    if _accel.USE_NUMBA:
        lz = _scan_logz_fast(energy.unary, energy.pair_i, energy.pair_j, energy.tables)
    else:
        lz = _scan_logz_numpy(energy, total)
    return float(lz) - energy.constant
