"""Constrained minimization of the field-weighted energy.

The admissible class is a product, over plates, of box-capped hyperplane
sets ``{0 <= w <= sigma, <g, w> = a}``.  With a positive definite Gram the
objective is a convex quadratic, so first-order KKT residuals certify global
optimality.  Two independent algorithms are provided:

* ``projected_gradient`` -- projection onto each plate's feasible set via a
  bisection/exact-segment search for the mass multiplier; steps are either a
  fixed inverse-Lipschitz step or a Barzilai-Borwein step with a monotone
  backtracking safeguard.
* ``frank_wolfe`` -- conditional gradient whose linear oracle is a
  fractional-knapsack greedy per plate (sort by gradient/g, fill cheapest
  g-mass first); after each new vertex the objective is re-optimized exactly
  over the hull of collected vertices (fully corrective).  The textbook
  2/(k+2) step rule converges far too slowly to certify tight KKT residuals,
  so it is not used.

Projected gradient is the faster default on instances whose minimizer has
many strictly interior coordinates (one hull vertex per interior coordinate
makes the corrective variant collect large hulls); Frank-Wolfe shines when
the solution sits on few vertices and serves as the independent cross-check
either way.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .condenser import (
    CASE1,
    Condenser,
    FieldSpec,
    VectorMeasure,
    check_feasibility,
    check_shapes,
    field_linear_coefficients,
    weighted_energy,
)
from .errors import InfeasibleProblem, NotPositiveDefinite, VequilError
from .kernels import GramMatrix, check_positive_definite

PROJECTED_GRADIENT = "projected_gradient"
FRANK_WOLFE = "frank_wolfe"
FIXED_LIPSCHITZ = "fixed_lipschitz"
BACKTRACKING = "backtracking"


@dataclass(frozen=True)
class SolverConfig:
    """Algorithm selection and tolerances.

    ``max_iters=None`` defaults to ``max(1000, 50 * total_nodes)``.  ``seed``
    randomizes the starting point; ``None`` starts from the feasible scaling
    of sigma.
    """

    algorithm: str = PROJECTED_GRADIENT
    max_iters: int | None = None
    grad_tol: float = 1e-8
    step_rule: str = BACKTRACKING
    projection_tol: float = 1e-12
    seed: int | None = None

    def __post_init__(self):
        if self.algorithm not in (PROJECTED_GRADIENT, FRANK_WOLFE):
            raise VequilError(f"unknown algorithm {self.algorithm!r}")
        if self.step_rule not in (FIXED_LIPSCHITZ, BACKTRACKING):
            raise VequilError(f"unknown step rule {self.step_rule!r}")
        if self.max_iters is not None and self.max_iters < 1:
            raise VequilError("max_iters must be >= 1")
        if not (self.grad_tol > 0.0 and self.projection_tol > 0.0):
            raise VequilError("tolerances must be positive")


@dataclass(frozen=True)
class SolveReport:
    minimizer: VectorMeasure
    value: float
    kkt_residual: float
    iterations: int
    converged: bool
    objective_trace: np.ndarray
    multipliers: tuple
    algorithm: str


@dataclass(frozen=True)
class KKTReport:
    ok: bool
    max_residual: float
    multipliers: tuple


def project_plate(v, g, sigma, a, tol: float = 1e-12) -> np.ndarray:
    """Euclidean projection onto ``{w: 0 <= w <= sigma, <g, w> = a}``.

    The projection is ``clip(v - tau*g, 0, sigma)`` where the multiplier tau
    makes the g-mass exact.  The mass as a function of tau is continuous and
    nonincreasing, so tau is bracketed by bisection to ``tol`` and then
    solved exactly on the final linear segment.
    """
    v = np.asarray(v, dtype=float).reshape(-1)
    g = np.asarray(g, dtype=float).reshape(-1)
    sigma = np.asarray(sigma, dtype=float).reshape(-1)
    a = float(a)
    cap = float(g @ sigma)
    fuzz = 1e-12 * max(1.0, abs(cap))
    if a < -fuzz or a > cap + fuzz:
        raise InfeasibleProblem(f"mass a={a} outside [0, <g,sigma>={cap}]")
    if a <= 0.0:
        return np.zeros_like(v)
    if a >= cap:
        return sigma.copy()

    def mass(tau: float) -> float:
        return float(g @ np.clip(v - tau * g, 0.0, sigma))

    lo = float(np.min((v - sigma) / g))  # mass(lo) = cap >= a
    hi = float(np.max(v / g))  # mass(hi) = 0 <= a
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        if hi - lo <= tol * max(1.0, abs(lo), abs(hi)):
            # Exact multiplier on the linear segment selected by mid.
            x = v - mid * g
            free = (x > 0.0) & (x < sigma)
            upper = x >= sigma
            denom = float(g[free] @ g[free])
            if denom > 0.0:
                tau = (float(g[free] @ v[free]) + float(g[upper] @ sigma[upper]) - a) / denom
            else:
                tau = mid
            w = np.clip(v - tau * g, 0.0, sigma)
            if abs(float(g @ w) - a) <= 1e-11 * max(1.0, a):
                return w
            # Pattern not yet stable; tighten the bracket and retry.
            tol = tol * 0.01
        if mass(mid) >= a:
            lo = mid
        else:
            hi = mid
    return np.clip(v - 0.5 * (lo + hi) * g, 0.0, sigma)


def _knapsack_vertex(cost, g, sigma, a) -> np.ndarray:
    """Linear minimization over one plate: fill cheapest g-mass first.

    Sorts by ``cost/g`` (stable, so ties break by node index) and saturates
    sigma caps until the g-mass budget ``a`` is spent; the marginal node gets
    the exact fractional remainder.
    """
    ratio = cost / g
    order = np.argsort(ratio, kind="stable")
    v = np.zeros_like(g)
    remaining = float(a)
    for j in order:
        if remaining <= 0.0:
            break
        take = min(float(sigma[j]), remaining / float(g[j]))
        v[j] = take
        remaining -= take * float(g[j])
    if remaining > 1e-9 * max(1.0, a):
        raise InfeasibleProblem("knapsack budget not exhausted; plate infeasible")
    return v


class _QP:
    """Concatenated arrays and callables for one solve instance."""

    def __init__(self, c: Condenser, K: GramMatrix, f: FieldSpec):
        self.c = c
        self.K = K
        self.signs = c.signs_per_node()
        self.slices = c.slices()
        q = field_linear_coefficients(c, K, f)
        sigma = np.concatenate([p.sigma for p in c.plates]).copy()
        if f.case == CASE1:
            locked = np.isinf(q)
            sigma[locked] = 0.0  # +inf field nodes may not carry charge
            q = np.where(locked, 0.0, q)
        self.q = q
        self.sigma = sigma
        self.g = np.concatenate([p.g for p in c.plates])
        self.masses = [p.mass for p in c.plates]

    def objective(self, w: np.ndarray) -> float:
        z = self.signs * w
        return float(z @ (self.K.entries @ z)) + 2.0 * float(self.q @ w)

    def gradient(self, w: np.ndarray) -> np.ndarray:
        return 2.0 * (self.signs * (self.K.entries @ (self.signs * w)) + self.q)

    def curvature(self, d: np.ndarray) -> float:
        z = self.signs * d
        return float(z @ (self.K.entries @ z))

    def plate_arrays(self):
        for sl, a in zip(self.slices, self.masses):
            yield sl, self.g[sl], self.sigma[sl], a

    def project(self, v: np.ndarray, tol: float) -> np.ndarray:
        w = np.empty_like(v)
        for sl, g, sigma, a in self.plate_arrays():
            w[sl] = project_plate(v[sl], g, sigma, a, tol)
        return w

    def lmo(self, grad: np.ndarray) -> np.ndarray:
        v = np.empty_like(grad)
        for sl, g, sigma, a in self.plate_arrays():
            v[sl] = _knapsack_vertex(grad[sl], g, sigma, a)
        return v

    def initial(self, seed: int | None, tol: float) -> np.ndarray:
        w0 = np.empty(self.sigma.shape[0])
        rng = None if seed is None else np.random.default_rng(seed)
        for sl, g, sigma, a in self.plate_arrays():
            cap = float(g @ sigma)
            base = sigma * (a / cap) if cap > 0.0 else np.zeros_like(sigma)
            if rng is not None:
                base = base * rng.uniform(0.05, 1.0, base.shape[0])
            w0[sl] = project_plate(base, g, sigma, a, tol)
        return w0

    def snap(self, w: np.ndarray, tol: float) -> np.ndarray:
        """Snap near-bound weights onto the bounds, then restore the mass."""
        out = np.empty_like(w)
        for sl, g, sigma, a in self.plate_arrays():
            ws = w[sl].copy()
            band = 1e-12 * max(1.0, a / float(g.min()))
            ws[ws < band] = 0.0
            at_cap = sigma - ws < band
            ws[at_cap] = sigma[at_cap]
            out[sl] = project_plate(ws, g, sigma, a, tol)
        return out


def _active_band(a: float, g: np.ndarray) -> float:
    return max(1e-14, 1e-9 * a / float(g.min()))


def _kkt_residual(qp: _QP, w: np.ndarray, grad: np.ndarray, band_scale: float = 1.0):
    """Max stationarity/complementarity violation and per-plate multipliers.

    The multiplier is the g-weighted average of the gradient over interior
    coordinates; with no interior coordinates it falls back to the active
    ratios (a plate whose feasible set is a single point contributes zero).
    """
    worst = 0.0
    taus = []
    for sl, g, sigma, a in qp.plate_arrays():
        ws, gs, rs = w[sl], g, grad[sl]
        band = _active_band(a, gs) * band_scale
        pinned = sigma <= 2.0 * band  # zero-width box: no condition
        lo = (ws <= band) & ~pinned
        hi = (ws >= sigma - band) & ~pinned
        interior = ~lo & ~hi & ~pinned
        cap = float(gs @ sigma)
        if cap - a <= 1e-12 * max(1.0, cap):
            # Degenerate plate: the feasible set is the single point sigma.
            ratios = rs[~pinned] / gs[~pinned]
            taus.append(float(ratios.max()) if ratios.size else 0.0)
            continue
        if interior.any():
            tau = float(gs[interior] @ rs[interior]) / float(gs[interior] @ gs[interior])
        else:
            lo_r = rs[lo] / gs[lo]
            hi_r = rs[hi] / gs[hi]
            if hi_r.size and lo_r.size:
                if hi_r.max() <= lo_r.min():
                    tau = 0.5 * (float(hi_r.max()) + float(lo_r.min()))
                else:
                    sup = ws > band
                    tau = float(gs[sup] @ rs[sup]) / float(gs[sup] @ gs[sup])
            elif hi_r.size:
                tau = float(hi_r.max())
            elif lo_r.size:
                tau = float(lo_r.min())
            else:
                tau = 0.0
        taus.append(tau)
        r = rs - tau * gs
        if lo.any():
            worst = max(worst, float(np.maximum(0.0, -r[lo]).max()))
        if hi.any():
            worst = max(worst, float(np.maximum(0.0, r[hi]).max()))
        if interior.any():
            worst = max(worst, float(np.abs(r[interior]).max()))
    return worst, tuple(taus)


def verify_kkt(c: Condenser, K: GramMatrix, f: FieldSpec, mu: VectorMeasure, tol: float,
               band_scale: float = 1.0) -> KKTReport:
    """Independent first-order optimality certificate for a candidate measure."""
    check_shapes(c, mu)
    qp = _QP(c, K, f)
    w = mu.concat()
    grad = qp.gradient(w)
    resid, taus = _kkt_residual(qp, w, grad, band_scale)
    return KKTReport(ok=resid <= tol, max_residual=resid, multipliers=taus)


def _run_projected_gradient(qp: _QP, cfg: SolverConfig, max_iters: int):
    lam_max = qp.K.eig_extremes()[1]
    eta_safe = 1.0 / (2.0 * max(lam_max, 1e-300))
    w = qp.initial(cfg.seed, cfg.projection_tol)
    G = qp.objective(w)
    trace = [G]
    prev_w = prev_grad = None
    resid = np.inf
    taus: tuple = ()
    iters = 0
    for iters in range(1, max_iters + 1):
        grad = qp.gradient(w)
        resid, taus = _kkt_residual(qp, w, grad)
        if resid <= cfg.grad_tol:
            return w, G, resid, taus, iters - 1, True, trace
        if cfg.step_rule == FIXED_LIPSCHITZ:
            eta = eta_safe
        else:
            eta = eta_safe
            if prev_w is not None:
                s = w - prev_w
                y = grad - prev_grad
                sy = float(s @ y)
                if sy > 0.0:
                    eta = float(s @ s) / sy
            eta = min(max(eta, 1e-3 * eta_safe), 1e8 * eta_safe)
        accepted = False
        slack = 1e-13 * (1.0 + abs(G))
        while True:
            w_new = qp.project(w - eta * grad, cfg.projection_tol)
            G_new = qp.objective(w_new)
            if G_new <= G + slack:
                accepted = True
                break
            if eta <= 0.5 * eta_safe:
                break  # at the numerical floor; treat as a stall
            eta = max(0.5 * eta, 0.25 * eta_safe)
        if not accepted:
            break
        if float(np.max(np.abs(w_new - w))) == 0.0:
            w, G = w_new, min(G, G_new)
            break  # projection fixed point below the residual target
        prev_w, prev_grad = w, grad
        w, G = w_new, min(G, G_new)
        trace.append(G)
    grad = qp.gradient(w)
    resid, taus = _kkt_residual(qp, w, grad)
    return w, G, resid, taus, iters, resid <= cfg.grad_tol, trace


def _simplex_qp(Q: np.ndarray, b: np.ndarray, warm: np.ndarray) -> np.ndarray:
    """Minimize ``a'Qa + 2b'a`` over the probability simplex (active set).

    Lawson-Hanson-style loop: solve the equality-constrained system on the
    working support, step toward it while staying nonnegative, and admit the
    worst KKT violator until none remains.  ``warm`` must be feasible.
    """
    n = Q.shape[0]
    alpha = warm.copy()
    support = alpha > 0.0
    if not support.any():
        support[int(np.argmin(b))] = True
        alpha[:] = 0.0
        alpha[support] = 1.0
    scale = max(1.0, float(np.abs(Q).max()), float(np.abs(b).max()))
    tol = 1e-13 * scale
    for _ in range(50 * (n + 2)):
        idx = np.flatnonzero(support)
        k = idx.size
        sys_mat = np.zeros((k + 1, k + 1))
        sys_mat[:k, :k] = 2.0 * Q[np.ix_(idx, idx)]
        sys_mat[:k, k] = 1.0
        sys_mat[k, :k] = 1.0
        rhs = np.concatenate([-2.0 * b[idx], [1.0]])
        sol = np.linalg.lstsq(sys_mat, rhs, rcond=None)[0]
        x = sol[:k]
        if np.any(x < -1e-14):
            # Back off along the segment to the boundary, drop the zeroed atom.
            cur = alpha[idx]
            neg = x < 0.0
            with np.errstate(divide="ignore", invalid="ignore"):
                ratios = cur[neg] / (cur[neg] - x[neg])
            t = float(min(1.0, np.min(ratios)))
            stepped = cur + t * (x - cur)
            stepped[stepped < 1e-15] = 0.0
            alpha[:] = 0.0
            alpha[idx] = stepped
            total = alpha.sum()
            if total > 0.0:
                alpha /= total
            support = alpha > 0.0
            if not support.any():
                support[int(np.argmin(b))] = True
                alpha[support] = 1.0
            continue
        alpha[:] = 0.0
        alpha[idx] = np.maximum(x, 0.0)
        alpha /= alpha.sum()
        grad_full = 2.0 * (Q @ alpha + b)
        lam = float(grad_full[idx].mean())  # stationary value on the support
        reduced = grad_full - lam
        outside = np.flatnonzero(~support)
        if outside.size == 0 or reduced[outside].min() >= -tol:
            return alpha
        support[outside[int(np.argmin(reduced[outside]))]] = True
    return alpha


def _run_frank_wolfe(qp: _QP, cfg: SolverConfig, max_iters: int):
    """Fully corrective conditional gradient over the knapsack vertex hull.

    Each round calls the per-plate knapsack oracle for a new vertex, then
    re-optimizes exactly over the convex hull of the vertices collected so
    far (a small simplex QP); zero-weight vertices are pruned.  The classic
    2/(k+2) step decreases the objective only at an O(1/k) rate and lets the
    vertex set proliferate, which is far too slow to certify tight KKT
    residuals; the corrective variant keeps the same oracle and converges
    linearly in practice.
    """
    rng = np.random.default_rng(cfg.seed) if cfg.seed is not None else None
    if rng is None:
        start_dir = qp.gradient(qp.initial(None, cfg.projection_tol))
    else:
        start_dir = rng.standard_normal(qp.sigma.shape[0])
    v0 = qp.lmo(start_dir)
    atoms = [v0]
    half_h = [qp.signs * (qp.K.entries @ (qp.signs * v0))]  # (S K S) v per atom
    lin = [float(qp.q @ v0)]
    Q = np.array([[float(v0 @ half_h[0])]])
    alpha = np.array([1.0])
    w = v0.copy()
    G = qp.objective(w)
    trace = [G]
    resid = np.inf
    taus: tuple = ()
    iters = 0
    for iters in range(1, max_iters + 1):
        grad = qp.gradient(w)
        resid, taus = _kkt_residual(qp, w, grad)
        if resid <= cfg.grad_tol:
            iters -= 1
            break
        s = qp.lmo(grad)
        gap = float(grad @ (w - s))
        if gap <= 1e-15 * (1.0 + abs(G)):
            break  # duality gap at the float floor
        if any(np.array_equal(s, v) for v in atoms):
            break  # oracle re-proposes a hull vertex: correction cannot improve
        hs = qp.signs * (qp.K.entries @ (qp.signs * s))
        col = np.array([float(v @ hs) for v in atoms])
        n_old = len(atoms)
        Q_new = np.empty((n_old + 1, n_old + 1))
        Q_new[:n_old, :n_old] = Q
        Q_new[:n_old, n_old] = col
        Q_new[n_old, :n_old] = col
        Q_new[n_old, n_old] = float(s @ hs)
        Q = Q_new
        atoms.append(s)
        half_h.append(hs)
        lin.append(float(qp.q @ s))
        alpha = np.concatenate([alpha, [0.0]])
        alpha = _simplex_qp(Q, np.asarray(lin), alpha)
        keep = alpha > 1e-15
        if not keep.all():
            atoms = [v for v, k in zip(atoms, keep) if k]
            half_h = [h for h, k in zip(half_h, keep) if k]
            lin = [q for q, k in zip(lin, keep) if k]
            Q = Q[np.ix_(keep, keep)]
            alpha = alpha[keep]
            alpha = alpha / alpha.sum()
        w = np.einsum("i,ij->j", alpha, np.asarray(atoms))
        G_new = qp.objective(w)
        G = min(G, G_new)
        trace.append(G_new)
    # Final polish: exact bounds help the complementarity classification.
    snapped = qp.snap(w, cfg.projection_tol)
    r_snap, t_snap = _kkt_residual(qp, snapped, qp.gradient(snapped))
    grad = qp.gradient(w)
    resid, taus = _kkt_residual(qp, w, grad)
    if r_snap <= resid:
        w, resid, taus = snapped, r_snap, t_snap
    G = qp.objective(w)
    return w, G, resid, taus, iters, resid <= cfg.grad_tol, trace


def solve(c: Condenser, K: GramMatrix, f: FieldSpec, cfg: SolverConfig | None = None) -> SolveReport:
    """Minimize the field-weighted energy over the admissible class.

    Refuses infeasible instances and Grams that fail the positive
    semidefiniteness gate (the objective could be unbounded below).  The
    returned minimizer satisfies the box and mass constraints to float
    accuracy; ``converged`` records whether the KKT residual target was met.
    """
    cfg = cfg or SolverConfig()
    feas = check_feasibility(c, f)
    if not feas.feasible:
        bad = feas.failing()[0]
        slack = next(p.slack for p in feas.per_plate if p.plate_id == bad)
        raise InfeasibleProblem(f"plate {bad}: a exceeds <g, sigma> (slack {slack:.6g})")
    pd = check_positive_definite(K)
    if not pd.is_pd:
        raise NotPositiveDefinite(
            f"Gram min eigenvalue {pd.min_eigenvalue:.3e} < -{pd.pd_tol:.3e}; "
            "refusing a possibly unbounded objective"
        )
    qp = _QP(c, K, f)
    # Re-check feasibility after locking +inf field nodes (sigma forced to 0).
    for sl, g, sigma, a in qp.plate_arrays():
        if float(g @ sigma) < a - 1e-12 * max(1.0, a):
            raise InfeasibleProblem("plate infeasible after excluding +inf field nodes")
    max_iters = cfg.max_iters if cfg.max_iters is not None else max(1000, 50 * c.total_nodes)
    if cfg.algorithm == PROJECTED_GRADIENT:
        w, G, resid, taus, iters, ok, trace = _run_projected_gradient(qp, cfg, max_iters)
    else:
        w, G, resid, taus, iters, ok, trace = _run_frank_wolfe(qp, cfg, max_iters)
    minimizer = c.measure([np.maximum(w[sl], 0.0) for sl in qp.slices])
    value = weighted_energy(c, K, f, minimizer)
    return SolveReport(
        minimizer=minimizer,
        value=value,
        kkt_residual=resid,
        iterations=iters,
        converged=bool(ok),
        objective_trace=np.asarray(trace),
        multipliers=taus,
        algorithm=cfg.algorithm,
    )


@dataclass(frozen=True)
class Problem:
    """A full instance: condenser, Gram, field, and solver configuration."""

    condenser: Condenser
    gram: GramMatrix
    field: FieldSpec
    config: SolverConfig

    def solve(self) -> SolveReport:
        return solve(self.condenser, self.gram, self.field, self.config)
