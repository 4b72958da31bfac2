import io

import numpy as np
import pytest

import curv4
from curv4.errors import InputError
from curv4.examples import (
    REGISTRY,
    build_example,
    example_names,
    make_bump_nonharmonic,
    make_constant_curvature,
    make_kpc_warped,
    make_product_surfaces,
    profile_residual,
    solve_kpc_profile,
)
from curv4.frames import extract_frame
from tests.conftest import ric_eigenvalues


def test_registry_and_parsing():
    names = example_names()
    for kind in ("s4", "h4", "s2xs2", "rxs3", "kpc", "bump", "randflat"):
        assert kind in names
    ch = build_example("s2xs2:1,2")
    assert ch.params["k1"] == 1.0 and ch.params["k2"] == 2.0
    # defaults fill omitted parameters
    assert build_example("kpc").params == {"c": 1.0, "r": 1.2, "K0": 0.5}
    assert build_example("rxs3").params["c"] == 1.0
    with pytest.raises(InputError):
        build_example("nosuch")
    with pytest.raises(InputError):
        build_example("s2xs2:1,2,3")
    with pytest.raises(InputError):
        build_example("s4:abc")


def test_registry_descriptions():
    for kind, spec in REGISTRY.items():
        assert spec.description
        assert len(spec.param_names) == len(spec.defaults)


def test_constant_curvature_values():
    for K0, s_expect in ((1.0, 12.0), (-1.0, -12.0)):
        ch = make_constant_curvature(K0, name=f"cc:{K0:g}")
        x = curv4.sample_points(ch, count=1, seed=0)[0]
        e = curv4.curvature_at(ch, x)
        assert e.s == pytest.approx(s_expect, abs=1e-5)
        assert e.weyl.norm < 1e-6
    flat = make_constant_curvature(0.0, name="cc:0")
    e = curv4.curvature_at(flat, np.zeros(4))
    assert e.riem.norm < 1e-10


def test_product_einstein_case():
    # equal curvatures: lambda = 0 and W+ spectrum {2/3, -1/3, -1/3}
    ch = make_product_surfaces(1, 1)
    x = curv4.sample_points(ch, count=1, seed=0)[0]
    fr = extract_frame(ch, x)
    assert np.max(np.abs(fr.lam)) < 1e-7
    assert np.linalg.eigvalsh(fr.w_plus) == pytest.approx([-1 / 3, -1 / 3, 2 / 3], abs=1e-6)


def test_product_opposite_curvatures_conformally_flat():
    ch = make_product_surfaces(1, -1)
    x = curv4.sample_points(ch, count=1, seed=0)[0]
    assert curv4.curvature_at(ch, x).weyl.norm < 1e-6


def test_line_cross_space(rxs3_chart):
    x = curv4.sample_points(rxs3_chart, count=1, seed=0)[0]
    e = curv4.curvature_at(rxs3_chart, x)
    assert ric_eigenvalues(e) == pytest.approx([0.0, 2.0, 2.0, 2.0], abs=1e-6)
    assert e.weyl.norm < 1e-6


def test_kpc_profile_constant_solution():
    prof = solve_kpc_profile(1.0, 3.0, 2.0)  # K0 = r - c
    assert np.max(np.abs(prof.Ks - 2.0)) <= 1e-10
    assert np.max(np.abs(prof.dKs)) <= 1e-10
    # f reproduces the constant-curvature profile cos(sqrt(K0) t)
    assert np.max(np.abs(prof.fs - np.cos(np.sqrt(2.0) * prof.ts))) < 1e-8
    assert prof.truncated  # f reaches its floor before t = 2


def test_kpc_profile_back_substitution(kpc_profile):
    assert profile_residual(kpc_profile) <= 1e-6
    assert not kpc_profile.truncated
    assert np.min(kpc_profile.Ks + kpc_profile.c) > 1e-3
    assert np.min(kpc_profile.fs) > 0.0


def test_kpc_profile_consistency(kpc_profile):
    # K = -f''/f on the interior grid (second spline derivative)
    ts = kpc_profile.ts[50:-50:100]
    d2f = kpc_profile._f_spline(ts, 2)
    f = kpc_profile._f_spline(ts)
    K = kpc_profile._K_spline(ts)
    assert np.max(np.abs(K + d2f / f)) < 1e-6


def test_kpc_profile_step_convergence():
    a = solve_kpc_profile(1.0, 1.2, 0.5, steps=4000)
    b = solve_kpc_profile(1.0, 1.2, 0.5, steps=2000)
    assert np.max(np.abs(a.fs[::2] - b.fs)) <= 1e-7
    assert np.max(np.abs(a.Ks[::2] - b.Ks)) <= 1e-7


def test_kpc_profile_rejects_bad_start():
    with pytest.raises(InputError):
        solve_kpc_profile(1.0, 1.2, -1.0)  # K0 + c = 0


def test_profile_csv_export(kpc_profile):
    out = io.StringIO()
    kpc_profile.to_csv(out)
    lines = out.getvalue().splitlines()
    assert lines[0] == "t,f,K"
    assert len(lines) == 1 + len(kpc_profile.ts)


def test_kpc_warped_harmonic(kpc_chart):
    rep = curv4.harmonicity_report(kpc_chart, count=6, seed=0)
    assert rep.harmonic
    assert all(v <= 1e-3 for v in rep.maxima.values())


def test_kpc_warped_pointwise_assembly(kpc_chart, kpc_profile):
    # block-diagonal product rescaled by (K+c)^-2, K interpolated in t only
    for x in curv4.sample_points(kpc_chart, count=5, seed=3):
        t, u = x[0], x[2]
        conf = (kpc_profile.K(t) + 1.0) ** -2
        expected = conf * np.diag([1.0, kpc_profile.f(t) ** 2, 1.0, np.sin(u) ** 2])
        assert np.max(np.abs(kpc_chart.eval(x) - expected)) < 1e-10


def test_kpc_constant_profile_matches_product():
    # constant K = r - c collapses to S2(K0 r^2) x S2(c r^2) invariants
    prof = solve_kpc_profile(1.0, 3.0, 2.0)
    warped = make_kpc_warped(prof)
    product = make_product_surfaces(18.0, 9.0)
    fw = extract_frame(warped, curv4.sample_points(warped, count=1, seed=0)[0])
    fp = extract_frame(product, curv4.sample_points(product, count=1, seed=0)[0])
    assert np.sort(fw.lam) == pytest.approx(np.sort(fp.lam), abs=1e-6)
    assert np.sort(fw.sigma, axis=None) == pytest.approx(
        np.sort(fp.sigma, axis=None), abs=1e-6
    )
    assert fw.s == pytest.approx(fp.s, abs=1e-5)


def test_bump_negative_control(bump_chart):
    rep = curv4.harmonicity_report(bump_chart, count=6, seed=0)
    assert not rep.harmonic
    assert rep.maxima["dvw.ds"] > 1e-2
    x = np.array([1.0, 0.0, 0.0, 0.0])
    assert curv4.contracted_bianchi_residual(bump_chart, x) <= 1e-5
    flat = make_bump_nonharmonic(0.0)
    assert curv4.harmonicity_report(flat, count=3, seed=0).harmonic


def test_randflat_deterministic():
    a = curv4.make_random_perturbed_flat(3)
    b = curv4.make_random_perturbed_flat(3)
    c = curv4.make_random_perturbed_flat(4)
    x = np.array([0.1, -0.2, 0.3, 0.0])
    assert np.array_equal(a.eval(x), b.eval(x))
    assert not np.array_equal(a.eval(x), c.eval(x))
    # perturbation stays metric-positive across the box
    for x in curv4.sample_points(a, count=16, seed=0):
        assert np.linalg.eigvalsh(a.eval(x))[0] > 0.3
