import numpy as np
import pytest

import curv4
from curv4.chart import (
    MetricChart,
    christoffel,
    codazzi_residual,
    contracted_bianchi_residual,
    curvature_at,
    div_riemann_norm,
    harmonicity_report,
    sample_points,
)
from curv4.errors import DomainError, InputError
from curv4.numerics import StencilConfig
from tests.conftest import ric_eigenvalues

UNIT_BOX = np.array([[-1.0, 1.0]] * 4)


def flat_chart():
    return MetricChart(name="flat", box=UNIT_BOX, eval_fn=lambda x: np.eye(4))


def test_chart_validation():
    with pytest.raises(InputError):
        MetricChart(name="bad-box", box=np.array([[0.0, 0.0]] * 4), eval_fn=lambda x: np.eye(4))
    with pytest.raises(InputError):
        MetricChart(name="not-pd", box=UNIT_BOX, eval_fn=lambda x: np.diag([1.0, -1, 1, 1]))
    with pytest.raises(InputError):
        MetricChart(name="not-sym", box=UNIT_BOX, eval_fn=lambda x: np.triu(np.ones((4, 4))))


def test_eval_contains():
    ch = flat_chart()
    assert ch.contains([0, 0, 0, 0]) and not ch.contains([2, 0, 0, 0])
    with pytest.raises(DomainError):
        ch.eval([2.0, 0, 0, 0])
    with pytest.raises(InputError):
        ch.eval([0.0, 0.0])


def test_christoffel_flat():
    gm = christoffel(flat_chart(), np.zeros(4))
    assert np.max(np.abs(gm)) < 1e-12


def test_christoffel_polar_closed_form():
    # g = diag(1, x1^2, 1, 1): Gamma^1_22 = -x1, Gamma^2_12 = 1/x1
    ch = MetricChart(
        name="polar",
        box=np.array([[1.0, 3.0], [-1, 1], [-1, 1], [-1, 1]]),
        eval_fn=lambda x: np.diag([1.0, x[0] ** 2, 1.0, 1.0]),
    )
    gm = christoffel(ch, np.array([2.0, 0.0, 0.0, 0.0]))
    assert gm[0, 1, 1] == pytest.approx(-2.0, abs=1e-9)
    assert gm[1, 0, 1] == pytest.approx(0.5, abs=1e-9)
    assert np.max(np.abs(gm - np.einsum("kij->kji", gm))) < 1e-12


def test_christoffel_conformal_closed_form():
    # g = e^{2 x1} I: Gamma^1_11 = 1
    ch = MetricChart(
        name="conf", box=UNIT_BOX, eval_fn=lambda x: np.exp(2.0 * x[0]) * np.eye(4)
    )
    gm = christoffel(ch, np.array([0.25, 0.1, 0.0, 0.0]))
    assert gm[0, 0, 0] == pytest.approx(1.0, abs=1e-9)


def test_christoffel_domain_guard():
    ch = flat_chart()
    with pytest.raises(DomainError):
        christoffel(ch, np.array([0.9999, 0.0, 0.0, 0.0]))


def test_curvature_flat():
    e = curvature_at(flat_chart(), np.zeros(4))
    assert e.riem.norm < 1e-10
    assert abs(e.s) < 1e-10


def test_curvature_s4(s4_chart):
    for x in sample_points(s4_chart, count=3, seed=0):
        e = curvature_at(s4_chart, x)
        assert e.s == pytest.approx(12.0, abs=1e-6)
        assert e.weyl.norm < 1e-6


def test_curvature_product_ric(s2xs2_chart):
    x = sample_points(s2xs2_chart, count=1, seed=0)[0]
    e = curvature_at(s2xs2_chart, x)
    assert ric_eigenvalues(e) == pytest.approx([1.0, 1.0, 2.0, 2.0], abs=1e-7)
    assert e.s == pytest.approx(6.0, abs=1e-7)


def test_order_convergence_s4(s4_chart):
    # order 2 -> 4 must improve the curvature error by >= 100x
    x = np.array([0.21, -0.13, 0.05, 0.32])

    def err(order):
        e = curvature_at(s4_chart, x, StencilConfig(order=order))
        return abs(e.s - 12.0)

    assert err(2) / err(4) >= 100.0


def test_codazzi_residual_tiers(s4_chart, s2xs2_chart, bump_chart):
    x = sample_points(s4_chart, count=1, seed=1)[0]
    assert codazzi_residual(s4_chart, x) < 1e-5
    x = sample_points(s2xs2_chart, count=1, seed=1)[0]
    assert codazzi_residual(s2xs2_chart, x) < 1e-5
    # non-harmonic bump: large d Ric at x1 near 1
    x = np.array([1.0, 0.1, -0.2, 0.05])
    assert codazzi_residual(bump_chart, x) > 1e-2


def test_codazzi_equals_div_riemann(s2xs2_chart):
    # ||d Ric|| = ||div R|| pointwise for any metric
    charts = [s2xs2_chart, curv4.make_random_perturbed_flat(3)]
    for ch in charts:
        for x in sample_points(ch, count=3, seed=5):
            e = curvature_at(ch, x)
            a = codazzi_residual(ch, x)
            b = div_riemann_norm(ch, x)
            assert abs(a - b) <= 1e-6 * (1.0 + e.riem.norm)


def test_contracted_bianchi_universal():
    assert contracted_bianchi_residual(flat_chart(), np.zeros(4)) < 1e-12
    ch = curv4.make_random_perturbed_flat(7)
    for x in sample_points(ch, count=3, seed=0):
        assert contracted_bianchi_residual(ch, x) < 1e-5


def test_contracted_bianchi_s4(s4_chart):
    x = sample_points(s4_chart, count=1, seed=2)[0]
    assert contracted_bianchi_residual(s4_chart, x) < 1e-5


def test_harmonicity_report_products(s2xs2_chart, rxs3_chart):
    for ch in (s2xs2_chart, rxs3_chart):
        rep = harmonicity_report(ch, count=6, seed=0)
        assert rep.harmonic
        assert all(v <= 1e-4 for v in rep.maxima.values())
        # s constant across samples (relative)
        assert rep.s_spread <= 1e-5 * max(1.0, np.max(np.abs(rep.s_values)))


def test_harmonicity_report_negative(bump_chart):
    rep = harmonicity_report(bump_chart, count=6, seed=0)
    assert not rep.harmonic
    assert rep.maxima["dvr"] > 1e-2
    assert rep.maxima["dvw.ds"] > 1e-2


def test_sample_points_deterministic():
    ch = flat_chart()
    a = sample_points(ch, count=8, seed=3)
    b = sample_points(ch, count=8, seed=3)
    assert np.array_equal(a, b)
    c = sample_points(ch, count=8, seed=4)
    assert not np.array_equal(a, c)
    # inside the 10%-shrunk box
    assert np.all(np.abs(a) <= 0.9 + 1e-12)
    with pytest.raises(InputError):
        sample_points(ch, count=0)


def test_curvature_cache_identity(s2xs2_chart):
    x = sample_points(s2xs2_chart, count=1, seed=9)[0]
    assert curvature_at(s2xs2_chart, x) is curvature_at(s2xs2_chart, x)


def test_default_tols_override(kpc_chart):
    # the warped chart carries a looser third-derivative tier
    rep = harmonicity_report(kpc_chart, count=3, seed=0)
    assert rep.tols["third"] == pytest.approx(1e-3)
