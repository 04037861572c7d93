"""Kernel catalog, Gram assembly, and positive-definiteness diagnostics.

Supported families:

* ``riesz``        -- ``(|x-y|^2 + eps^2)^((alpha-n)/2)`` with ``0 < alpha < n``
* ``newtonian``    -- alias for ``riesz`` with ``alpha = 2`` (requires n >= 3)
* ``log_disk``     -- ``-0.5 * log(|x-y|^2 + eps^2)``, points inside the open
  unit disk of the plane
* ``custom_table`` -- entries injected as an explicit symmetric matrix; nodes
  are integer index points and geometry is bypassed entirely

The diagonal of the singular families is regularized by the length ``eps``;
a node is thereby modelled as a small charge cell of that size.  When ``eps``
is left unset it defaults, at assembly time, to half the minimum (positive)
inter-node spacing of the node set.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import DimensionMismatch, EigensolverError, KernelDomainError

RIESZ = "riesz"
NEWTONIAN = "newtonian"
LOG_DISK = "log_disk"
CUSTOM_TABLE = "custom_table"

FAMILIES = (RIESZ, NEWTONIAN, LOG_DISK, CUSTOM_TABLE)
SINGULAR_FAMILIES = (RIESZ, NEWTONIAN, LOG_DISK)

# Row-block size for Gram assembly; bounds peak memory at ~block*N*dim floats.
_ASSEMBLY_BLOCK = 512


def _as_points(x) -> np.ndarray:
    pts = np.asarray(x, dtype=float)
    if pts.ndim == 1:
        pts = pts[None, :]
    if pts.ndim != 2 or pts.shape[1] < 1:
        raise DimensionMismatch(f"expected points of shape (N, n), got {pts.shape}")
    if not np.all(np.isfinite(pts)):
        raise DimensionMismatch("points must have finite coordinates")
    return pts


@dataclass(frozen=True)
class KernelSpec:
    """Parameters selecting one kernel from the catalog.

    ``epsilon=None`` means "resolve to half the minimum node spacing when a
    Gram matrix is assembled"; point evaluations treat it as 0 (the exact,
    possibly singular, kernel).
    """

    family: str
    alpha: float | None = None
    epsilon: float | None = None
    table: np.ndarray | None = None

    def __post_init__(self):
        if self.family not in FAMILIES:
            raise KernelDomainError(f"unknown kernel family {self.family!r}")
        if self.family == NEWTONIAN:
            if self.alpha is None:
                object.__setattr__(self, "alpha", 2.0)
            elif self.alpha != 2.0:
                raise KernelDomainError("newtonian kernel fixes alpha = 2")
        if self.family in (RIESZ, NEWTONIAN):
            if self.alpha is None or not 0.0 < float(self.alpha):
                raise KernelDomainError("riesz kernel requires alpha > 0")
        if self.epsilon is not None and not self.epsilon >= 0.0:
            raise KernelDomainError("epsilon must be >= 0")
        if self.family == CUSTOM_TABLE:
            if self.table is None:
                raise KernelDomainError("custom_table kernel requires a table")
            tbl = np.asarray(self.table, dtype=float)
            if tbl.ndim != 2 or tbl.shape[0] != tbl.shape[1]:
                raise KernelDomainError("custom table must be square")
            if not np.array_equal(tbl, tbl.T):
                raise KernelDomainError("custom table must be symmetric")
            tbl = tbl.copy()
            tbl.setflags(write=False)
            object.__setattr__(self, "table", tbl)
        elif self.table is not None:
            raise KernelDomainError("table is only valid for custom_table kernels")

    @property
    def singular(self) -> bool:
        return self.family in SINGULAR_FAMILIES

    def with_epsilon(self, epsilon: float) -> "KernelSpec":
        return KernelSpec(self.family, self.alpha, float(epsilon), self.table)

    def _check_dimension(self, n: int) -> None:
        if self.family in (RIESZ, NEWTONIAN):
            if not float(self.alpha) < n:
                raise KernelDomainError(
                    f"riesz order alpha={self.alpha} requires alpha < dimension (n={n})"
                )
            if self.family == NEWTONIAN and n < 3:
                raise KernelDomainError("newtonian kernel requires dimension >= 3")
        if self.family == LOG_DISK and n != 2:
            raise KernelDomainError("log_disk kernel lives in the plane (n = 2)")


@dataclass(frozen=True)
class GramMatrix:
    """Dense symmetric kernel matrix over an ordered node set.

    ``node_index`` maps ``(plate_id, local_node_index)`` to a global row; for
    flat node lists the plate id is 0.  ``spec`` and ``nodes`` record how the
    matrix was assembled so downstream operations (external fields, balayage
    candidates) can evaluate the same kernel off the stored node set.
    """

    entries: np.ndarray
    node_index: dict
    spec: KernelSpec | None = None
    nodes: np.ndarray | None = None
    _cache: dict = field(default_factory=dict, repr=False, compare=False)

    def __post_init__(self):
        ent = np.asarray(self.entries, dtype=float)
        if ent.ndim != 2 or ent.shape[0] != ent.shape[1]:
            raise DimensionMismatch("Gram entries must be a square matrix")
        if not np.array_equal(ent, ent.T):
            raise DimensionMismatch("Gram entries must be exactly symmetric")
        if not np.all(np.isfinite(ent)):
            raise KernelDomainError(
                "Gram entries must be finite; regularize the diagonal (epsilon > 0)"
            )
        ent = ent.copy()
        ent.setflags(write=False)
        object.__setattr__(self, "entries", ent)

    @property
    def size(self) -> int:
        return self.entries.shape[0]

    def rows_for_plate(self, plate_id: int) -> np.ndarray:
        rows = [row for (pid, loc), row in sorted(self.node_index.items()) if pid == plate_id]
        return np.asarray(rows, dtype=int)

    def eig_extremes(self) -> tuple[float, float]:
        """Smallest and largest eigenvalue, cached after the first call."""
        if "eig" not in self._cache:
            try:
                vals = np.linalg.eigvalsh(self.entries)
            except np.linalg.LinAlgError as exc:
                raise EigensolverError(f"symmetric eigensolver failed: {exc}") from exc
            self._cache["eig"] = (float(vals[0]), float(vals[-1]))
        return self._cache["eig"]


@dataclass(frozen=True)
class PDReport:
    min_eigenvalue: float
    max_eigenvalue: float
    pd_tol: float
    is_pd: bool
    is_strictly_pd: bool


def evaluate_kernel(spec: KernelSpec, x, y) -> float:
    """Evaluate the kernel at a single pair of points.

    For ``custom_table`` kernels the points are integer row indices into the
    table.  ``epsilon=None`` is treated as 0 here, so coincident points under
    a singular family evaluate to ``+inf``.
    """
    if spec.family == CUSTOM_TABLE:
        i, j = int(np.asarray(x).ravel()[0]), int(np.asarray(y).ravel()[0])
        return float(spec.table[i, j])
    px, py = _as_points(x)[0], _as_points(y)[0]
    if px.shape != py.shape:
        raise DimensionMismatch(f"point dimensions differ: {px.shape[0]} vs {py.shape[0]}")
    n = px.shape[0]
    spec._check_dimension(n)
    if spec.family == LOG_DISK:
        for p in (px, py):
            if np.sum(p * p) >= 1.0:
                raise KernelDomainError("log_disk points must lie inside the open unit disk")
    eps = 0.0 if spec.epsilon is None else float(spec.epsilon)
    r2 = float(np.sum((px - py) ** 2)) + eps * eps
    if r2 == 0.0:
        return float(np.inf)
    # Same vectorized code path as Gram assembly: bit-identical entries.
    return float(_apply_family(spec, np.array([r2]), n)[0])


def minimum_spacing(nodes) -> float:
    """Smallest positive pairwise distance of a node set (inf if none)."""
    pts = _as_points(nodes)
    best = np.inf
    for start in range(0, pts.shape[0], _ASSEMBLY_BLOCK):
        blk = pts[start : start + _ASSEMBLY_BLOCK]
        d2 = ((blk[:, None, :] - pts[None, :, :]) ** 2).sum(axis=-1)
        pos = d2[d2 > 0.0]
        if pos.size:
            best = min(best, float(np.sqrt(pos.min())))
    return best


def resolve_epsilon(spec: KernelSpec, nodes) -> KernelSpec:
    """Fill in the default diagonal regularization for a node set.

    The default is half the minimum positive inter-node spacing.  Coincident
    nodes (legal for overlapping equal-sign plates) are ignored when taking
    the minimum.
    """
    if spec.epsilon is not None or not spec.singular:
        return spec
    h = minimum_spacing(nodes)
    if not np.isfinite(h):
        raise KernelDomainError(
            "cannot derive a default epsilon from a single node; set epsilon explicitly"
        )
    return spec.with_epsilon(0.5 * h)


def _pair_sq_dists(rows: np.ndarray, cols: np.ndarray) -> np.ndarray:
    # (a-b)**2 summed over coordinates: exactly symmetric and bit-identical
    # to the per-pair evaluation in evaluate_kernel.
    return ((rows[:, None, :] - cols[None, :, :]) ** 2).sum(axis=-1)


def _apply_family(spec: KernelSpec, r2: np.ndarray, n: int) -> np.ndarray:
    if spec.family == LOG_DISK:
        return -0.5 * np.log(r2)
    return r2 ** ((float(spec.alpha) - n) / 2.0)


def cross_kernel(spec: KernelSpec, x_nodes, y_nodes) -> np.ndarray:
    """Rectangular kernel matrix ``K[p, q] = kappa(x_p, y_q)``.

    Requires a concrete ``epsilon`` for singular families (coincident pairs
    would otherwise produce infinities).
    """
    if spec.family == CUSTOM_TABLE:
        xi = np.asarray(x_nodes, dtype=float).reshape(-1).astype(int)
        yi = np.asarray(y_nodes, dtype=float).reshape(-1).astype(int)
        return spec.table[np.ix_(xi, yi)].astype(float)
    X, Y = _as_points(x_nodes), _as_points(y_nodes)
    if X.shape[1] != Y.shape[1]:
        raise DimensionMismatch("node sets have different dimensions")
    n = X.shape[1]
    spec._check_dimension(n)
    if spec.family == LOG_DISK:
        if np.any((X * X).sum(axis=1) >= 1.0) or np.any((Y * Y).sum(axis=1) >= 1.0):
            raise KernelDomainError("log_disk points must lie inside the open unit disk")
    eps = 0.0 if spec.epsilon is None else float(spec.epsilon)
    out = np.empty((X.shape[0], Y.shape[0]))
    for start in range(0, X.shape[0], _ASSEMBLY_BLOCK):
        blk = X[start : start + _ASSEMBLY_BLOCK]
        r2 = _pair_sq_dists(blk, Y) + eps * eps
        out[start : start + blk.shape[0]] = _apply_family(spec, r2, n)
    if not np.all(np.isfinite(out)):
        raise KernelDomainError("cross kernel has singular entries; use epsilon > 0")
    return out


def assemble_gram(spec: KernelSpec, nodes, node_index: dict | None = None) -> GramMatrix:
    """Assemble the dense Gram matrix of a kernel over a node set.

    ``epsilon=None`` on a singular family resolves to half the minimum
    positive node spacing.  The result is exactly symmetric and finite.
    """
    if spec.family == CUSTOM_TABLE:
        if nodes is None:
            idx = np.arange(spec.table.shape[0])
        else:
            idx = np.asarray(nodes, dtype=float).reshape(-1).astype(int)
        entries = spec.table[np.ix_(idx, idx)].astype(float)
        pts = idx.astype(float)[:, None]
    else:
        pts = _as_points(nodes)
        spec._check_dimension(pts.shape[1])
        spec = resolve_epsilon(spec, pts)
        if spec.singular and not spec.epsilon > 0.0:
            raise KernelDomainError(
                f"{spec.family} Gram assembly requires epsilon > 0 (singular diagonal)"
            )
        if spec.family == LOG_DISK and np.any((pts * pts).sum(axis=1) >= 1.0):
            raise KernelDomainError("log_disk nodes must lie inside the open unit disk")
        eps = float(spec.epsilon or 0.0)
        n = pts.shape[1]
        entries = np.empty((pts.shape[0], pts.shape[0]))
        for start in range(0, pts.shape[0], _ASSEMBLY_BLOCK):
            blk = pts[start : start + _ASSEMBLY_BLOCK]
            r2 = _pair_sq_dists(blk, pts) + eps * eps
            entries[start : start + blk.shape[0]] = _apply_family(spec, r2, n)
    if node_index is None:
        node_index = {(0, i): i for i in range(entries.shape[0])}
    return GramMatrix(entries=entries, node_index=node_index, spec=spec, nodes=pts)


def check_positive_definite(G: GramMatrix, pd_tol: float | None = None) -> PDReport:
    """Diagnose (strict) positive definiteness from the extreme eigenvalues.

    ``pd_tol`` defaults to ``1e-10 * max|eigenvalue|``, the float noise floor
    of dense symmetric eigensolvers.
    """
    lo, hi = G.eig_extremes()
    if pd_tol is None:
        pd_tol = 1e-10 * max(abs(lo), abs(hi), 1e-300)
    return PDReport(
        min_eigenvalue=lo,
        max_eigenvalue=hi,
        pd_tol=float(pd_tol),
        is_pd=lo >= -pd_tol,
        is_strictly_pd=lo > pd_tol,
    )
