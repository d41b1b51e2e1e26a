"""Dataset container, CSV round-trip, stratified partitioning and synthetic generators."""

from __future__ import annotations

import csv
from dataclasses import dataclass

import numpy as np

UNLABELED = 0  # label value marking a row without a class


@dataclass
class Dataset:
    """Covariate matrix with (possibly missing) class labels in {1..num_classes}.

    ``labels[i] == 0`` marks row ``i`` as unlabeled. Treated as immutable
    after construction.
    """

    covariates: np.ndarray
    labels: np.ndarray
    num_classes: int

    def __post_init__(self):
        x = np.asarray(self.covariates, dtype=np.float64)
        if x.ndim != 2:
            raise ValueError(f"covariates must be a 2-D matrix, got shape {x.shape}")
        if not np.all(np.isfinite(x)):
            raise ValueError("covariates contain non-finite values")
        y = np.asarray(self.labels, dtype=np.int64)
        if y.shape != (x.shape[0],):
            raise ValueError(f"labels shape {y.shape} does not match {x.shape[0]} rows")
        q = int(self.num_classes)
        if q < 2:
            raise ValueError(f"num_classes must be >= 2, got {q}")
        if y.size and (y.min() < 0 or y.max() > q):
            raise ValueError(f"labels must lie in {{0..{q}}} (0 = unlabeled)")
        self.covariates = x
        self.labels = y
        self.num_classes = q

    @property
    def n(self) -> int:
        return self.covariates.shape[0]

    @property
    def dim(self) -> int:
        return self.covariates.shape[1]

    @property
    def labeled_mask(self) -> np.ndarray:
        return self.labels != UNLABELED

    def labeled(self) -> tuple[np.ndarray, np.ndarray]:
        """Covariates and labels of the labeled rows."""
        m = self.labeled_mask
        return self.covariates[m], self.labels[m]

    def unlabeled_points(self) -> np.ndarray:
        return self.covariates[~self.labeled_mask]

    def class_points(self, i: int) -> np.ndarray:
        return self.covariates[self.labels == i]

    def class_counts(self) -> np.ndarray:
        """Number of labeled rows per class, shape (num_classes,)."""
        return np.bincount(self.labels, minlength=self.num_classes + 1)[1:]

    @classmethod
    def empty(cls, dim: int, num_classes: int) -> "Dataset":
        return cls(np.empty((0, dim)), np.empty(0, dtype=np.int64), num_classes)


def load_csv(path, label_column: str = "label", num_classes: int | None = None) -> Dataset:
    """Read a dataset from CSV: header row, covariate columns, one label column.

    Empty label cells mark unlabeled rows. Lines starting with '#' are
    skipped. Unless overridden, the class count is the largest observed label.
    """
    try:
        fh = open(path, newline="", encoding="utf-8")
    except OSError as e:
        raise ValueError(f"cannot open dataset file {path}: {e}") from e
    with fh:
        rows = []
        header = None
        line_no = 0
        for raw in csv.reader(fh):
            line_no += 1
            if raw and raw[0].lstrip().startswith("#"):
                continue
            if header is None:
                header = [c.strip() for c in raw]
                continue
            rows.append((line_no, raw))
    if header is None:
        raise ValueError(f"{path}: empty file, expected a header row")
    if label_column not in header:
        raise ValueError(f"{path}: no column named {label_column!r} in header {header}")
    lbl_idx = header.index(label_column)
    cov_idx = [i for i in range(len(header)) if i != lbl_idx]
    if not cov_idx:
        raise ValueError(f"{path}: no covariate columns besides {label_column!r}")

    covs = np.empty((len(rows), len(cov_idx)))
    labels = np.zeros(len(rows), dtype=np.int64)
    for r, (line_no, raw) in enumerate(rows):
        if len(raw) != len(header):
            raise ValueError(f"{path} row {line_no}: expected {len(header)} cells, got {len(raw)}")
        for c, i in enumerate(cov_idx):
            try:
                covs[r, c] = float(raw[i])
            except ValueError:
                raise ValueError(
                    f"{path} row {line_no}: non-numeric covariate {raw[i]!r} "
                    f"in column {header[i]!r}"
                ) from None
        cell = raw[lbl_idx].strip()
        if cell:
            try:
                lab = int(cell)
            except ValueError:
                raise ValueError(f"{path} row {line_no}: label {cell!r} is not an integer") from None
            if lab < 1:
                raise ValueError(f"{path} row {line_no}: label {lab} outside {{1..Q}}")
            labels[r] = lab
    if not np.all(np.isfinite(covs)):
        bad = int(np.argwhere(~np.isfinite(covs))[0][0])
        raise ValueError(f"{path} row {rows[bad][0]}: non-finite covariate value")

    observed = int(labels.max()) if labels.size else 0
    q = num_classes if num_classes is not None else observed
    if q < 2:
        raise ValueError(
            f"{path}: need at least two classes, observed max label {observed}; "
            "pass num_classes to override"
        )
    if observed > q:
        r = int(np.argmax(labels > q))
        raise ValueError(f"{path} row {rows[r][0]}: label {labels[r]} outside {{1..{q}}}")
    return Dataset(covs, labels, q)


def save_csv(dataset: Dataset, path, comments: list[str] | None = None) -> None:
    """Write a dataset as CSV (columns x1..xD then ``label``; round-trips exactly)."""
    with open(path, "w", newline="", encoding="utf-8") as fh:
        for line in comments or []:
            fh.write(f"# {line}\n")
        w = csv.writer(fh)
        w.writerow([f"x{i + 1}" for i in range(dataset.dim)] + ["label"])
        for row, lab in zip(dataset.covariates, dataset.labels):
            # repr() of a Python float is the shortest exact round-trip form
            w.writerow([repr(float(v)) for v in row] + [str(int(lab)) if lab else ""])


def gen_concentric_circles(
    n_per_class: int, radii, noise_std: float = 0.0, seed: int = 0
) -> Dataset:
    """Q concentric noisy circles in the plane, class i on radius radii[i-1]."""
    radii = np.asarray(radii, dtype=np.float64)
    if radii.ndim != 1 or len(radii) < 2:
        raise ValueError("radii must list at least two values")
    if np.any(np.diff(radii) <= 0):
        raise ValueError(f"radii must be strictly increasing, got {radii.tolist()}")
    if noise_std < 0:
        raise ValueError("noise_std must be >= 0")
    rng = np.random.default_rng(seed)
    xs, ys = [], []
    for i, r in enumerate(radii, start=1):
        theta = rng.uniform(0.0, 2.0 * np.pi, size=n_per_class)
        pts = np.column_stack([r * np.cos(theta), r * np.sin(theta)])
        if noise_std > 0:
            pts = pts + rng.normal(0.0, noise_std, size=pts.shape)
        xs.append(pts)
        ys.append(np.full(n_per_class, i, dtype=np.int64))
    return Dataset(np.vstack(xs), np.concatenate(ys), len(radii))


def gen_double_helix(
    n_per_class: int,
    radius: float = 1.0,
    pitch: float = 1.0,
    turns: float = 2.0,
    noise_std: float = 0.1,
    seed: int = 0,
) -> Dataset:
    """Two interleaved 3-D helices (phase offset pi), one class per strand."""
    if radius <= 0 or pitch <= 0 or turns <= 0:
        raise ValueError("radius, pitch and turns must be positive")
    if noise_std < 0:
        raise ValueError("noise_std must be >= 0")
    rng = np.random.default_rng(seed)
    xs, ys = [], []
    for i, phase in enumerate((0.0, np.pi), start=1):
        t = rng.uniform(0.0, 2.0 * np.pi * turns, size=n_per_class)
        pts = np.column_stack(
            [
                radius * np.cos(t + phase),
                radius * np.sin(t + phase),
                pitch * t / (2.0 * np.pi),
            ]
        )
        if noise_std > 0:
            pts = pts + rng.normal(0.0, noise_std, size=pts.shape)
        xs.append(pts)
        ys.append(np.full(n_per_class, i, dtype=np.int64))
    return Dataset(np.vstack(xs), np.concatenate(ys), 2)


def stratified_mask(dataset: Dataset, n_labeled_per_class: int, seed: int = 0) -> np.ndarray:
    """Boolean mask selecting n labeled rows per class, uniformly at random."""
    rng = np.random.default_rng(seed)
    mask = np.zeros(dataset.n, dtype=bool)
    for c in range(1, dataset.num_classes + 1):
        idx = np.flatnonzero(dataset.labels == c)
        if len(idx) < n_labeled_per_class:
            raise ValueError(
                f"class {c} has {len(idx)} labeled points, need {n_labeled_per_class}"
            )
        mask[rng.permutation(idx)[:n_labeled_per_class]] = True
    return mask


def partition(
    dataset: Dataset, n_labeled_per_class: int, seed: int = 0
) -> tuple[Dataset, Dataset]:
    """Stratified split into a labeled part and a held-out part.

    The held-out part keeps its true labels so callers can score recovered
    labelings; pass only its covariates to a solver. Row order is preserved
    within each part and the two parts are the original rows exactly once.
    """
    mask = stratified_mask(dataset, n_labeled_per_class, seed)
    q = dataset.num_classes
    labeled = Dataset(dataset.covariates[mask], dataset.labels[mask], q)
    heldout = Dataset(dataset.covariates[~mask], dataset.labels[~mask], q)
    return labeled, heldout
