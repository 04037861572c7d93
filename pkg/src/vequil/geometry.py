"""Node-set generators used by configs and experiments."""

from __future__ import annotations

import numpy as np

from .errors import VequilError

PROFILE_POWER = "power_s"
PROFILE_EXP_LE1 = "exp_s_le1"
PROFILE_EXP_GT1 = "exp_s_gt1"
PROFILES = (PROFILE_POWER, PROFILE_EXP_LE1, PROFILE_EXP_GT1)


def fibonacci_sphere(count: int, radius: float = 1.0, center=(0.0, 0.0, 0.0)) -> np.ndarray:
    """Near-uniform points on a sphere via the golden-angle spiral."""
    if count < 1:
        raise VequilError("sphere generator needs count >= 1")
    i = np.arange(count)
    z = 1.0 - 2.0 * (i + 0.5) / count
    r = np.sqrt(np.maximum(0.0, 1.0 - z * z))
    phi = np.pi * (3.0 - np.sqrt(5.0)) * i
    pts = np.stack([r * np.cos(phi), r * np.sin(phi), z], axis=1)
    return radius * pts + np.asarray(center, dtype=float)


def grid_nodes(low, high, shape) -> np.ndarray:
    """Regular grid over a box; ``shape`` gives points per axis."""
    low = np.asarray(low, dtype=float)
    high = np.asarray(high, dtype=float)
    shape = [int(s) for s in np.atleast_1d(shape)]
    if low.shape != high.shape or len(shape) != low.shape[0]:
        raise VequilError("grid generator: low, high, shape must agree in length")
    axes = [np.linspace(lo, hi, s) for lo, hi, s in zip(low, high, shape)]
    mesh = np.meshgrid(*axes, indexing="ij")
    return np.stack([m.ravel() for m in mesh], axis=1)


def ring_nodes(count: int, radius: float, center=(0.0, 0.0), phase: float = 0.0) -> np.ndarray:
    """Equally spaced points on a planar circle (2-D output)."""
    if count < 1:
        raise VequilError("ring generator needs count >= 1")
    t = phase + 2.0 * np.pi * np.arange(count) / count
    pts = radius * np.stack([np.cos(t), np.sin(t)], axis=1)
    return pts + np.asarray(center, dtype=float)


def profile_radius(profile: str, s: float):
    """Radius-vs-axial-coordinate function of the rotational test bodies."""
    if profile == PROFILE_POWER:
        if s < 0:
            raise VequilError("power profile needs s >= 0")
        return lambda x: float(x) ** (-s) if x > 0 else np.inf
    if profile == PROFILE_EXP_LE1:
        if not 0.0 < s <= 1.0:
            raise VequilError("exp_s_le1 profile needs 0 < s <= 1")
        return lambda x: float(np.exp(-(float(x) ** s)))
    if profile == PROFILE_EXP_GT1:
        if not s > 1.0:
            raise VequilError("exp_s_gt1 profile needs s > 1")
        return lambda x: float(np.exp(-(float(x) ** s)))
    raise VequilError(f"unknown profile {profile!r}; choose from {PROFILES}")


def rotational_body(
    profile: str,
    s: float,
    q: float,
    r_max: float,
    *,
    axial_coarseness: float = 0.5,
    dx_min: float = 0.2,
    dx_max: float = 1.0,
    node_floor: float = 5e-3,
    ring_min: int = 8,
    ring_max: int = 32,
) -> np.ndarray:
    """Discretize ``{q <= x1 <= r_max, x2^2 + x3^2 <= rho(x1)^2}`` by rings.

    Each axial station carries a ring of ``ring_min``..``ring_max`` nodes at
    the local profile radius, staggered between stations; axial steps scale
    with the local radius (clipped to ``[dx_min, dx_max]``).  Stations whose
    radius falls below ``node_floor`` are below the resolution of the
    discretization and carry no nodes: a single global diagonal
    regularization cannot represent features many orders of magnitude
    thinner than the node spacing, and placing bare axis nodes there would
    inflate the tail capacity artificially.

    The stepping sequence depends only on ``q`` and the profile, so node
    sets for increasing ``r_max`` are nested.
    """
    if not r_max > q:
        raise VequilError("rotational body needs r_max > q")
    rho = profile_radius(profile, s)
    pts: list[np.ndarray] = []
    x = float(q)
    station = 0
    while x <= r_max + 1e-12:
        r = rho(x)
        if np.isfinite(r) and r >= node_floor:
            dx = float(np.clip(axial_coarseness * r, dx_min, dx_max))
            m = int(np.clip(np.ceil(2.0 * np.pi * r / dx), ring_min, ring_max))
            phase = (station % 2) * np.pi / m
            ring = ring_nodes(m, r, center=(0.0, 0.0), phase=phase)
            pts.append(np.column_stack([np.full(m, x), ring[:, 0], ring[:, 1]]))
        else:
            dx = dx_max
        x += dx
        station += 1
    if not pts:
        raise VequilError(
            f"empty discretization: profile radius below node_floor={node_floor} "
            f"on the whole range [{q}, {r_max}]"
        )
    return np.vstack(pts)
