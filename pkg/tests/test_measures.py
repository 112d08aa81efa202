import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from brownmeasure import measures as M


def test_measure_validation():
    with pytest.raises(ValueError):
        M.Measure1D([0.0, 1.0], [0.5, 0.6], [], [])
    with pytest.raises(ValueError):
        M.Measure1D([0.0, 1.0], [1.5, -0.5], [], [])
    with pytest.raises(ValueError):
        M.Measure1D([3.0], [1.0], [], [], bounds=(0.0, 1.0))
    mu = M.semicircle(2.0)
    assert mu.masses.sum() == pytest.approx(1, abs=1e-12)
    assert mu.points.min() >= -2 and mu.points.max() <= 2
    h = M.haar_unitary()
    assert h.is_circle and len(h.nodes) == 512
    assert h.points.min() >= 0 and h.points.max() < 2 * math.pi


def test_scalar_cauchy_examples():
    assert M.scalar_cauchy(M.atoms([0.0]), 1j) == pytest.approx(-1j)
    assert M.scalar_cauchy(M.atoms([-1.0, 1.0]), 2j) == pytest.approx(-2j / 5)
    assert M.scalar_cauchy(M.semicircle(2.0), 3) == pytest.approx((3 - math.sqrt(5)) / 2, abs=1e-4)
    with pytest.raises(M.UnsupportedMeasure):
        M.scalar_cauchy(M.haar_unitary(), 1j)


@pytest.mark.parametrize("mu", [M.semicircle(2.0), M.free_poisson(0.5), M.uniform(-1, 3),
                                M.arcsine(), M.atoms([0, 1, 5], [0.2, 0.3, 0.5])])
def test_scalar_cauchy_maps_upper_to_lower(rng, mu):
    z = rng.normal(size=100) * 3 + 1j * rng.uniform(1e-3, 3, 100)
    assert all(M.scalar_cauchy(mu, zz).imag < 0 for zz in z)


def test_presets_match_closed_forms():
    # free Poisson(1): G(z) = (z - sqrt(z^2 - 4z)) / (2z)
    z = 5.0
    g = (z - math.sqrt(z * z - 4 * z)) / (2 * z)
    assert M.scalar_cauchy(M.free_poisson(1.0), z) == pytest.approx(g, abs=1e-8)
    # arcsine on [-2, 2]: G(z) = 1 / sqrt(z^2 - 4)
    assert M.scalar_cauchy(M.arcsine(), 3.0) == pytest.approx(1 / math.sqrt(5), abs=1e-8)
    # uniform [0, 1]: G(z) = log(z / (z - 1))
    assert M.scalar_cauchy(M.uniform(0, 1), 2.0) == pytest.approx(math.log(2), abs=1e-10)
    fp = M.free_poisson(0.4)
    assert fp.mass_at(0.0) == pytest.approx(0.6)
    assert fp.mean() == pytest.approx(0.4, abs=1e-10)


def test_psi_examples():
    assert M.psi_transform(M.atoms([1.0]), 0.5) == pytest.approx(1)
    assert M.psi_transform(M.atoms([0.0]), -3.7) == pytest.approx(0)
    with pytest.raises(M.PoleHit):
        M.psi_transform(M.atoms([2.0]), 0.5)


def test_psi_free_poisson_dense_oracle():
    # dense midpoint rule on the Marchenko-Pastur density after t = 4 sin^2(phi/2)
    n = 10 ** 6
    phi = (np.arange(n) + 0.5) * math.pi / n
    t = 4 * np.sin(phi / 2) ** 2
    dens = np.sqrt(t * (4 - t)) / (2 * math.pi * t) * 2 * np.sin(phi / 2) * 2 * np.cos(phi / 2)
    w = dens * math.pi / n
    v = -1.0
    oracle = np.sum(w * v * t / (1 - v * t))
    assert M.psi_transform(M.free_poisson(1.0), v) == pytest.approx(oracle, abs=1e-6)
    assert oracle == pytest.approx((math.sqrt(5) - 3) / 2, abs=1e-6)


def test_eta_over_v_examples():
    assert M.eta_over_v(M.atoms([1.0]), -1.0) == pytest.approx(1)
    for v in (-0.1, -3.0, -40.0):
        assert M.eta_over_v(M.atoms([2.5]), v) == pytest.approx(2.5)
    assert M.eta_over_v(M.free_poisson(1.0), -1e-9) == pytest.approx(1, abs=1e-6)
    with pytest.raises(M.DomainError):
        M.eta_over_v(M.free_poisson(1.0), 0.0)


@pytest.mark.parametrize("mu", [M.free_poisson(1.0), M.uniform(0, 1), M.atoms([1, 4], [0.5, 0.5]),
                                M.free_poisson(0.3)])
def test_eta_over_v_increasing(mu):
    v = -np.logspace(-4, 3, 200)[::-1]
    g = np.array([M.eta_over_v(mu, x) for x in v])
    assert np.all(np.diff(g) > 0)


def test_invert_g_examples():
    fp = M.free_poisson(1.0)
    v = M.invert_g(fp, 0.25)
    assert M.eta_over_v(fp, v) == pytest.approx(0.25, abs=1e-10)
    # target 1/4 inside (inf g, mean) for uniform[0,1]; the mean itself is excluded
    u = M.uniform(0, 1)
    v = M.invert_g(u, 0.25)
    assert abs(M.eta_over_v(u, v) - 0.25) <= 1e-10
    for mu in (fp, u):
        with pytest.raises(M.OutOfRange):
            M.invert_g(mu, mu.mean())
    with pytest.raises(M.OutOfRange):
        M.invert_g(M.atoms([1.0]), 0.5)


@settings(max_examples=40, deadline=None)
@given(st.floats(min_value=-50.0, max_value=-1e-3))
def test_invert_g_roundtrip(v):
    mu = M.atoms([0.5, 1.0, 3.0], [0.2, 0.5, 0.3])
    target = M.eta_over_v(mu, v)
    assert M.invert_g(mu, target) == pytest.approx(v, rel=1e-8, abs=1e-8)


def test_descriptors():
    mu = M.from_descriptor({"kind": "mixture", "components": [
        {"weight": 0.6, "measure": {"kind": "atoms", "locations": [0.0]}},
        {"weight": 0.4, "measure": {"kind": "uniform", "a": 1, "b": 2}}]})
    assert mu.mass_at(0.0) == pytest.approx(0.6)
    assert mu.mean() == pytest.approx(0.6, abs=1e-12)
    assert len(M.from_descriptor({"kind": "semicircle", "radius": 1, "nodes": 50}).nodes) == 50
    with pytest.raises(ValueError):
        M.from_descriptor({"kind": "cauchy"})


def test_quadrature_refinement():
    z = 0.3 + 0.1j
    for mu in (M.semicircle(2.0), M.quarter_circle(2.0), M.free_poisson(2.0)):
        a = M.scalar_cauchy(mu.with_nodes(400), z)
        b = M.scalar_cauchy(mu.with_nodes(800), z)
        assert abs(a - b) <= 1e-8
