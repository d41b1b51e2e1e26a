"""Multiclass MAP labeling by expansion moves, and the end-to-end solver.

An expansion move for label alpha lets every site either keep its current
label or switch to alpha; that binary subproblem inherits the min-cut
condition from the full energy and is solved exactly by ``binary_map``.
Sweeping labels in ascending order until no move improves the energy gives
a deterministic strong local optimum (for two classes, the global optimum).
"""

from __future__ import annotations

import numpy as np

from .data import Dataset
from .mincut import binary_map
from .mrf import EnergyGraph, _check_labeling, build_energy, check_pairwise_representable, energy_of

# Strict improvement required to accept a move; guards against cycling on
# quantization noise.
MOVE_TOL = 1e-12


def expansion_move(energy: EnergyGraph, labels, alpha: int) -> tuple[np.ndarray, float]:
    """Best labeling where each site keeps its label or switches to alpha."""
    y = _check_labeling(energy, labels)
    if not 1 <= alpha <= energy.num_labels:
        raise ValueError(f"alpha must lie in {{1..{energy.num_labels}}}, got {alpha}")
    a0 = alpha - 1
    cur = y - 1
    sites = np.arange(energy.num_sites)
    sub_unary = np.column_stack([energy.unary[sites, cur], energy.unary[:, a0]])
    if energy.num_pairs:
        pr = np.arange(energy.num_pairs)
        ci, cj = cur[energy.pair_i], cur[energy.pair_j]
        sub_tables = np.empty((energy.num_pairs, 2, 2))
        sub_tables[:, 0, 0] = energy.tables[pr, ci, cj]
        sub_tables[:, 0, 1] = energy.tables[pr, ci, a0]
        sub_tables[:, 1, 0] = energy.tables[pr, a0, cj]
        sub_tables[:, 1, 1] = energy.tables[pr, a0, a0]
    else:
        sub_tables = np.zeros((0, 2, 2))
    sub = EnergyGraph(sub_unary, energy.pair_i, energy.pair_j, sub_tables, 0.0)
    switch = binary_map(sub) == 2
    candidate = np.where(switch, alpha, y).astype(np.int64)
    return candidate, energy_of(energy, candidate)


def alpha_expansion(energy: EnergyGraph, init, history: list | None = None) -> np.ndarray:
    """Iterate expansion moves from ``init`` until a full sweep brings no decrease.

    If ``history`` is given, the initial energy and the energy after every
    accepted move are appended to it.
    """
    ok, witness = check_pairwise_representable(energy)
    if not ok:
        raise ValueError(f"energy is not pairwise graph-representable, witness {witness}")
    y = _check_labeling(energy, init).copy()
    e = energy_of(energy, y)
    if history is not None:
        history.append(e)
    improved = True
    while improved:
        improved = False
        for alpha in range(1, energy.num_labels + 1):
            candidate, e_new = expansion_move(energy, y, alpha)
            if e_new < e - MOVE_TOL:
                y, e = candidate, e_new
                improved = True
                if history is not None:
                    history.append(e)
    return y


def ssl_solve(models, labeled: Dataset, unlabeled) -> np.ndarray:
    """MAP labels for the unlabeled covariates given class models and labeled data.

    Two classes are solved exactly by min-cut; more classes run expansion
    moves initialized from the per-site supervised prediction.
    """
    if labeled is None or not np.any(labeled.labeled_mask):
        raise ValueError("semi-supervised solving needs at least one labeled point")
    energy = build_energy(models, labeled, unlabeled)
    if energy.num_labels == 2:
        return binary_map(energy)
    init = np.argmin(energy.unary, axis=1) + 1  # supervised prediction per site
    return alpha_expansion(energy, init)
