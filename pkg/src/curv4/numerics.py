"""Shared numerical kernels.

Central differences on scalar/array-valued fields, symmetric eigensystems
with a deterministic ordering, SVD-based rank decisions, and classical
fixed-step Runge-Kutta integration. Everything downstream (curvature,
frames, variety checks) funnels its numerics through this module.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import InputError, IntegrationError

# offsets and weights of the standard central first-derivative stencils
_FD_STENCILS = {
    2: ((-1, 1), (-0.5, 0.5)),
    4: ((-2, -1, 1, 2), (1.0 / 12.0, -2.0 / 3.0, 2.0 / 3.0, -1.0 / 12.0)),
    6: (
        (-3, -2, -1, 1, 2, 3),
        (-1.0 / 60.0, 3.0 / 20.0, -3.0 / 4.0, 3.0 / 4.0, -3.0 / 20.0, 1.0 / 60.0),
    ),
}


@dataclass(frozen=True)
class StencilConfig:
    """Finite-difference configuration.

    `step` drives first and second derivatives (nested first differences);
    `third_step` is the wider outer step used when differentiating curvature
    quantities (third derivatives of the metric).
    """

    step: float = 1e-3
    order: int = 4
    third_step: float = 5e-3

    def __post_init__(self):
        if self.step <= 0.0 or self.third_step <= 0.0:
            raise InputError("stencil steps must be positive")
        if self.order not in _FD_STENCILS:
            raise InputError(f"stencil order must be one of {sorted(_FD_STENCILS)}, got {self.order}")

    @property
    def reach(self):
        """Largest offset (in multiples of the step) the stencil touches."""
        return max(abs(o) for o in _FD_STENCILS[self.order][0])


DEFAULT_STENCIL = StencilConfig()


def central_diff(f, x, direction, cfg=DEFAULT_STENCIL, step=None):
    """Central difference of `f` along coordinate `direction` at `x`.

    `f` may return a scalar or an ndarray; the derivative has the same shape.
    `step` overrides cfg.step (used for the wider third-derivative stencils).
    """
    x = np.asarray(x, dtype=float)
    h = cfg.step if step is None else step
    offsets, weights = _FD_STENCILS[cfg.order]
    acc = None
    for o, w in zip(offsets, weights):
        y = x.copy()
        y[direction] += o * h
        term = w * np.asarray(f(y), dtype=float)
        acc = term if acc is None else acc + term
    return acc / h


def gradient(f, x, cfg=DEFAULT_STENCIL, step=None):
    """All four (or n) partials of a scalar/array field, stacked on axis 0."""
    x = np.asarray(x, dtype=float)
    return np.stack([central_diff(f, x, d, cfg, step=step) for d in range(x.size)])


@dataclass(frozen=True)
class EigenResult:
    """Eigenvalues ascending; `vectors[:, k]` belongs to `values[k]`.

    Each vector is normalized and sign-fixed: its first component of largest
    magnitude is positive.
    """

    values: np.ndarray
    vectors: np.ndarray


def _fix_signs(vectors):
    out = vectors.copy()
    for k in range(out.shape[1]):
        lead = np.argmax(np.abs(out[:, k]))  # ties resolve to the lowest index
        if out[lead, k] < 0.0:
            out[:, k] = -out[:, k]
    return out


def sym_eigen(A, dim=None):
    """Deterministic symmetric eigendecomposition for 3x3/4x4/6x6 matrices."""
    A = np.asarray(A, dtype=float)
    if A.ndim != 2 or A.shape[0] != A.shape[1]:
        raise InputError(f"expected a square matrix, got shape {A.shape}")
    n = A.shape[0]
    if n not in (3, 4, 6):
        raise InputError(f"matrix dimension must be 3, 4 or 6, got {n}")
    if dim is not None and n != dim:
        raise InputError(f"expected dimension {dim}, got {n}")
    scale = max(1.0, float(np.linalg.norm(A)))
    if np.linalg.norm(A - A.T) > 1e-12 * scale:
        raise InputError("matrix is not symmetric within 1e-12 (relative)")
    values, vectors = np.linalg.eigh(0.5 * (A + A.T))
    return EigenResult(values=values, vectors=_fix_signs(vectors))


@dataclass(frozen=True)
class RankResult:
    singular_values: np.ndarray
    rank: int
    rtol: float
    atol: float


def numerical_rank(A, rtol=1e-8, atol=1e-12):
    """Rank = number of singular values above max(atol, rtol * largest)."""
    A = np.asarray(A, dtype=float)
    if A.ndim != 2:
        raise InputError(f"expected a matrix, got ndim {A.ndim}")
    sv = np.linalg.svd(A, compute_uv=False)
    if sv.size == 0 or sv[0] == 0.0:
        return RankResult(singular_values=sv, rank=0, rtol=rtol, atol=atol)
    cut = max(atol, rtol * sv[0])
    return RankResult(singular_values=sv, rank=int(np.sum(sv > cut)), rtol=rtol, atol=atol)


def rk4_step(rhs, t, y, h):
    """One classical Runge-Kutta step."""
    k1 = np.asarray(rhs(t, y), dtype=float)
    k2 = np.asarray(rhs(t + 0.5 * h, y + 0.5 * h * k1), dtype=float)
    k3 = np.asarray(rhs(t + 0.5 * h, y + 0.5 * h * k2), dtype=float)
    k4 = np.asarray(rhs(t + h, y + h * k3), dtype=float)
    return y + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)


def rk4_integrate(rhs, y0, t0, t1, steps):
    """Fixed-step RK4 over [t0, t1]; returns (times, states).

    states[k] is the solution at times[k]; a non-finite state aborts with
    IntegrationError carrying the last valid parameter value.
    """
    if steps < 1:
        raise InputError("steps must be >= 1")
    y = np.atleast_1d(np.asarray(y0, dtype=float))
    ts = t0 + (t1 - t0) * np.arange(steps + 1) / steps
    ys = np.empty((steps + 1, y.size))
    ys[0] = y
    h = (t1 - t0) / steps
    for k in range(steps):
        y = rk4_step(rhs, ts[k], y, h)
        if not np.all(np.isfinite(y)):
            raise IntegrationError(f"non-finite state at t={ts[k + 1]}", t_last=ts[k])
        ys[k + 1] = y
    return ts, ys
