"""Coordinate charts and finite-difference curvature.

A MetricChart is a box in R^4 with a smooth closed-form metric evaluator.
Christoffel symbols come from order-controlled central differences of the
metric; the curvature tensor from nested differences of the Christoffels,

    R(d_i, d_j) d_k = [d_j Gamma^m_ik - d_i Gamma^m_jk
                       + Gamma^p_ik Gamma^m_jp - Gamma^p_jk Gamma^m_ip] d_m,
    R_ijkl = g_lm R^m(i,j,k),

which reproduces R_ijij > 0 on round spheres (the package-wide sign
convention, see tensor4). Raw curvature is projected onto the algebraic
curvature tensors; the projection distance is kept as a noise diagnostic.

Derivatives of curvature quantities (the harmonicity residuals) use the
wider third-derivative step of the stencil configuration.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.stats import qmc

from ._parallel import parallel_map
from .errors import DomainError, InconsistencyError, InputError
from .numerics import DEFAULT_STENCIL, central_diff
from .tensor4 import Curv4, Metric4, curvature_symmetrize, ricci_contract, weyl_from_curv

# residual tolerance tiers: purely algebraic identities, quantities built
# from second metric derivatives, quantities built from third derivatives
DEFAULT_TOLS = {"algebraic": 1e-8, "second": 1e-5, "third": 1e-4}


@dataclass
class MetricChart:
    """Smooth metric on a coordinate box.

    eval_fn(x) returns the 4x4 metric components; adapted_frame_fn, when
    registered, returns four linearly independent column vectors that
    diagonalize the Ricci tensor (used by the frame extraction when the
    Ricci spectrum is degenerate). `params` is serialized into reports.
    """

    name: str
    box: np.ndarray
    eval_fn: object
    params: dict = field(default_factory=dict)
    adapted_frame_fn: object = None
    default_tols: dict = None
    validate: bool = True

    def __post_init__(self):
        self.box = np.asarray(self.box, dtype=float)
        if self.box.shape != (4, 2) or np.any(self.box[:, 1] <= self.box[:, 0]):
            raise InputError("box must be (4,2) with lo < hi per axis")
        self._fields = {}
        if self.validate:
            _validate_chart(self)

    def contains(self, x):
        x = np.asarray(x, dtype=float)
        return bool(np.all(x >= self.box[:, 0]) and np.all(x <= self.box[:, 1]))

    def eval(self, x):
        x = np.asarray(x, dtype=float)
        if x.shape != (4,):
            raise InputError(f"chart points are 4-vectors, got shape {x.shape}")
        if not self.contains(x):
            raise DomainError(f"point {x.tolist()} outside chart '{self.name}' box")
        return np.asarray(self.eval_fn(x), dtype=float)

    def metric(self, x):
        return Metric4(g=self.eval(x))

    def curvature_field(self, cfg=DEFAULT_STENCIL):
        key = (cfg.step, cfg.order, cfg.third_step)
        if key not in self._fields:
            self._fields[key] = CurvatureField(self, cfg)
        return self._fields[key]


def _probe_points(chart, m=5):
    # fixed unscrambled Halton probes, pulled 20% inside the box
    sampler = qmc.Halton(d=4, scramble=False)
    u = sampler.random(m + 1)[1:]  # drop the degenerate all-zeros first point
    lo, hi = chart.box[:, 0], chart.box[:, 1]
    mid, half = 0.5 * (lo + hi), 0.5 * (hi - lo)
    return mid + (2.0 * u - 1.0) * 0.8 * half


def _validate_chart(chart):
    from .numerics import StencilConfig

    pts = _probe_points(chart)
    for x in pts:
        g = chart.eval(x)
        if g.shape != (4, 4):
            raise InputError(f"chart '{chart.name}' returned shape {g.shape}")
        if np.linalg.norm(g - g.T) > 1e-10 * max(1.0, np.linalg.norm(g)):
            raise InputError(f"chart '{chart.name}' metric not symmetric at {x.tolist()}")
        if np.linalg.eigvalsh(0.5 * (g + g.T))[0] <= 1e-6:
            raise InputError(f"chart '{chart.name}' metric not positive definite at {x.tolist()}")
    # stencil-order consistency: order-4 and order-6 first derivatives agree
    x = pts[0]
    c4, c6 = StencilConfig(order=4), StencilConfig(order=6)
    for d in range(4):
        d4 = central_diff(chart.eval_fn, x, d, c4)
        d6 = central_diff(chart.eval_fn, x, d, c6)
        if np.max(np.abs(d4 - d6)) > 1e-6:
            raise InconsistencyError(
                f"chart '{chart.name}': order-4/order-6 derivatives disagree at {x.tolist()}"
            )


def sample_points(chart, count=16, seed=0):
    """Deterministic scrambled-Halton samples in the 10%-shrunk box."""
    if count < 1:
        raise InputError("count must be >= 1")
    sampler = qmc.Halton(d=4, scramble=True, seed=np.random.default_rng(seed))
    u = sampler.random(count)
    lo, hi = chart.box[:, 0], chart.box[:, 1]
    mid, half = 0.5 * (lo + hi), 0.5 * (hi - lo)
    return mid + (2.0 * u - 1.0) * 0.9 * half


def christoffel(chart, x, cfg=DEFAULT_STENCIL):
    """Christoffel symbols Gamma[k, i, j] = Gamma^k_ij at x."""
    x = np.asarray(x, dtype=float)
    # the stencil itself bypasses chart.eval, so guard its footprint here;
    # outer (second/third) derivatives inherit the guard through nesting
    margin = cfg.reach * cfg.step
    if np.any(x - margin < chart.box[:, 0] - 1e-12) or np.any(
        x + margin > chart.box[:, 1] + 1e-12
    ):
        raise DomainError(
            f"stencil footprint (reach {margin:g}) exits chart '{chart.name}' box at {x.tolist()}"
        )
    g = chart.eval(x)
    g_inv = np.linalg.inv(g)
    dg = np.stack([central_diff(chart.eval_fn, x, d, cfg) for d in range(4)])
    gamma = 0.5 * (
        np.einsum("km,imj->kij", g_inv, dg)
        + np.einsum("km,jmi->kij", g_inv, dg)
        - np.einsum("km,mij->kij", g_inv, dg)
    )
    # metric compatibility is exact by construction; verify to catch misassembly
    nabla_g = dg - np.einsum("mki,mj->kij", gamma, g) - np.einsum("mkj,im->kij", gamma, g)
    if np.max(np.abs(nabla_g)) > 5e-7 * max(1.0, np.linalg.norm(g)):
        raise InconsistencyError(f"nabla g != 0 at {x.tolist()}")
    return gamma


@dataclass(frozen=True)
class CurvatureEntry:
    """Everything curvature-related at one point."""

    x: np.ndarray
    metric: Metric4
    gamma: np.ndarray
    riem: Curv4
    ric: np.ndarray
    s: float
    weyl: Curv4
    projection_distance: float


class CurvatureField:
    """Memoizing curvature evaluator for one chart and stencil config."""

    def __init__(self, chart, cfg=DEFAULT_STENCIL):
        self.chart = chart
        self.cfg = cfg
        self._cache = {}

    def at(self, x):
        x = np.asarray(x, dtype=float)
        key = tuple(np.round(x, 12))
        entry = self._cache.get(key)
        if entry is None:
            entry = self._compute(x)
            self._cache[key] = entry
        return entry

    def _compute(self, x):
        cfg = self.cfg
        chart = self.chart
        metric = Metric4(g=chart.eval(x))
        gamma = christoffel(chart, x, cfg)
        dgamma = np.stack(
            [central_diff(lambda y, d=d: christoffel(chart, y, cfg), x, d, cfg) for d in range(4)]
        )
        # R^m_(i,j,k) per the curvature convention in the module docstring
        rm = (
            np.einsum("jmik->mijk", dgamma)
            - np.einsum("imjk->mijk", dgamma)
            + np.einsum("pik,mjp->mijk", gamma, gamma)
            - np.einsum("pjk,mip->mijk", gamma, gamma)
        )
        raw = np.einsum("lm,mijk->ijkl", metric.g, rm)
        riem = curvature_symmetrize(raw)
        ric, s = ricci_contract(riem, metric)
        weyl = weyl_from_curv(riem, metric)
        return CurvatureEntry(
            x=x,
            metric=metric,
            gamma=gamma,
            riem=riem,
            ric=ric.b,
            s=s,
            weyl=weyl,
            projection_distance=riem.projection_distance,
        )


def curvature_at(chart, x, cfg=DEFAULT_STENCIL):
    """Cached curvature entry at x (cache lives on the chart)."""
    return chart.curvature_field(cfg).at(x)


def metric_norm(T, g_inv):
    """Frobenius norm with all slots raised by g^-1 (chart-invariant)."""
    T = np.asarray(T, dtype=float)
    up = T
    for axis in range(T.ndim):
        up = np.moveaxis(np.tensordot(g_inv, up, axes=(1, axis)), 0, axis)
    return float(np.sqrt(abs(np.sum(T * up))))


def _covariant_derivative(field_fn, x, gamma, cfg):
    """nabla_p T for a fully covariant tensor field; result axis 0 is p."""
    sample = np.asarray(field_fn(x), dtype=float)
    partial = np.stack(
        [central_diff(field_fn, x, d, cfg, step=cfg.third_step) for d in range(4)]
    )
    out = partial.copy()
    for slot in range(sample.ndim):
        # contract Gamma^m_{p, i_slot} with T[..., m, ...]
        corr = np.tensordot(gamma, sample, axes=(0, slot))  # axes (p, i_slot, rest...)
        corr = np.moveaxis(corr, 1, slot + 1)
        out -= corr
    return out


def covariant_ric_derivative(chart, x, cfg=DEFAULT_STENCIL):
    """DRic[p, k, i] = nabla_p ric_ki."""
    fld = chart.curvature_field(cfg)
    entry = fld.at(x)
    return _covariant_derivative(lambda y: fld.at(y).ric, x, entry.gamma, cfg)


def codazzi_tensor(chart, x, cfg=DEFAULT_STENCIL):
    """(d ric)_kij = nabla_j ric_ki - nabla_i ric_kj."""
    dric = covariant_ric_derivative(chart, x, cfg)
    return np.einsum("jki->kij", dric) - np.einsum("ikj->kij", dric)


def codazzi_residual(chart, x, cfg=DEFAULT_STENCIL):
    """||d ric|| at x; equals ||div R|| for any metric."""
    entry = curvature_at(chart, x, cfg)
    return metric_norm(codazzi_tensor(chart, x, cfg), entry.metric.g_inv)


def div_riemann_norm(chart, x, cfg=DEFAULT_STENCIL):
    """Direct ||div R|| via nabla R contracted on its last slot."""
    fld = chart.curvature_field(cfg)
    entry = fld.at(x)
    dR = _covariant_derivative(lambda y: fld.at(y).riem.R, x, entry.gamma, cfg)
    divR = np.einsum("pq,pijkq->ijk", entry.metric.g_inv, dR)
    return metric_norm(divR, entry.metric.g_inv)


def div_weyl_norm(chart, x, cfg=DEFAULT_STENCIL):
    fld = chart.curvature_field(cfg)
    entry = fld.at(x)
    dW = _covariant_derivative(lambda y: fld.at(y).weyl.R, x, entry.gamma, cfg)
    divW = np.einsum("pi,pijkl->jkl", entry.metric.g_inv, dW)
    return metric_norm(divW, entry.metric.g_inv)


def scalar_gradient_norm(chart, x, cfg=DEFAULT_STENCIL):
    """||ds|| at x (metric norm of the scalar-curvature gradient)."""
    fld = chart.curvature_field(cfg)
    entry = fld.at(x)
    ds = np.array(
        [central_diff(lambda y: fld.at(y).s, x, d, cfg, step=cfg.third_step) for d in range(4)]
    )
    return metric_norm(ds, entry.metric.g_inv)


def contracted_bianchi_residual(chart, x, cfg=DEFAULT_STENCIL):
    """||2 div ric - ds||; vanishes for every metric (universal identity)."""
    fld = chart.curvature_field(cfg)
    entry = fld.at(x)
    dric = covariant_ric_derivative(chart, x, cfg)
    div_ric = np.einsum("pk,pki->i", entry.metric.g_inv, dric)
    ds = np.array(
        [central_diff(lambda y: fld.at(y).s, x, d, cfg, step=cfg.third_step) for d in range(4)]
    )
    return metric_norm(2.0 * div_ric - ds, entry.metric.g_inv)


@dataclass(frozen=True)
class HarmonicityReport:
    """Per-point harmonicity residuals and the overall verdict.

    Residual keys: 'dvr' = ||d ric|| (= ||div R||), 'dvw.w' = ||div W||,
    'dvw.ds' = ||ds||, with 'cst' the spread of s across the samples.
    """

    points: np.ndarray
    rows: list
    s_values: np.ndarray
    maxima: dict
    s_spread: float
    harmonic: bool
    tols: dict


def harmonicity_report(chart, cfg=DEFAULT_STENCIL, count=16, seed=0, tols=None):
    tols = dict(DEFAULT_TOLS, **(chart.default_tols or {}), **(tols or {}))
    pts = sample_points(chart, count=count, seed=seed)
    chart.curvature_field(cfg)  # shared memoized field across workers

    def one(x):
        return {
            "dvr": codazzi_residual(chart, x, cfg),
            "dvw.w": div_weyl_norm(chart, x, cfg),
            "dvw.ds": scalar_gradient_norm(chart, x, cfg),
        }

    rows = parallel_map(one, pts)
    s_values = np.array([curvature_at(chart, x, cfg).s for x in pts])
    maxima = {k: float(max(r[k] for r in rows)) for k in rows[0]}
    s_spread = float(s_values.max() - s_values.min())
    tol3 = tols["third"]
    harmonic = all(v <= tol3 for v in maxima.values()) and s_spread <= tols["second"] * max(
        1.0, float(np.max(np.abs(s_values)))
    )
    return HarmonicityReport(
        points=pts,
        rows=rows,
        s_values=s_values,
        maxima=maxima,
        s_spread=s_spread,
        harmonic=harmonic,
        tols=tols,
    )
