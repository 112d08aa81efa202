import math

import numpy as np
import pytest

from brownmeasure import brown, measures, ovcauchy
from brownmeasure.brown import BrownPipeline, DensityGrid, LambdaGrid

CIRCULAR = "(x1 + 1i*x2)/1.4142135623730951"


@pytest.fixture(scope="module")
def circ():
    sc = ovcauchy.selfadjoint(measures.semicircle(2.0))
    return BrownPipeline(CIRCULAR, {1: sc, 2: sc})


@pytest.fixture(scope="module")
def product():
    sc = ovcauchy.selfadjoint(measures.semicircle(2.0))
    return BrownPipeline("x1*x2", {1: ovcauchy.haar_unitary(), 2: sc})


def test_grid_parse_and_nodes():
    g = LambdaGrid.parse("-3:3:-1:1:121x41")
    assert (g.nx, g.ny) == (121, 41)
    assert g.hx == pytest.approx(0.05) and g.hy == pytest.approx(0.05)
    assert g.nodes().shape == (41, 121)
    assert g.nodes()[0, 0] == -3 - 1j and g.nodes()[-1, -1] == 3 + 1j
    assert LambdaGrid.parse(g.spec()) == g
    for bad in ["1:0:0:1:5x5", "0:1:0:1:2x5", "0:1:0:1", "a:1:0:1:5x5"]:
        with pytest.raises(ValueError):
            LambdaGrid.parse(bad)


def test_argument_layout(product):
    b = product.argument(0.3 + 0.4j, 1e-2)
    assert b.shape == (6, 6)
    assert b[0, 1] == 0.3 + 0.4j and b[1, 0] == 0.3 - 0.4j
    assert b[0, 0] == 1e-2j and b[5, 5] == pytest.approx(1e-4j)
    with pytest.raises(ValueError):
        product.solve(0.5, 1e-2, delta=1e-2)
    with pytest.raises(ValueError):
        product.solve(0.5, 0.0)
    with pytest.raises(ValueError):
        BrownPipeline("x1*x2", {1: ovcauchy.haar_unitary()})


def test_selfadjoint_off_support():
    sc = ovcauchy.selfadjoint(measures.semicircle(2.0))
    g21, g11 = brown.corner_transform("x1", {1: sc}, 3.0, 1e-5)
    assert abs(g21 - (3 - math.sqrt(5)) / 2) < 1e-8
    assert abs(g11) < 1e-4


def test_circular_inside_and_outside(circ):
    for lam in [0.3 + 0.2j, -0.5j, 0.6]:
        g, res = circ.corner(lam, 1e-3)
        assert abs(g[1, 0] - np.conj(lam)) < 5e-3
        assert abs(g[1, 0] - np.conj(g[0, 1])) < 1e-10
    for lam in [2.0, 1.5j, -1 - 1j]:
        g, _ = circ.corner(lam, 1e-3)
        assert abs(g[1, 0] - 1 / lam) < 1e-5


def test_laurent_far_field(circ, product):
    for pipe in (circ, product):
        lam = 10 * pipe.max_norm() * np.exp(0.7j)
        g, _ = pipe.corner(lam, 1e-3)
        assert abs(g[1, 0] - 1 / lam) <= 1e-3 / abs(lam)


@pytest.mark.parametrize("eps", [1e-2, 1e-3])
def test_delta_insensitivity(product, eps):
    # the off-corner inflation biases g21 linearly in delta, far below eps
    lam, delta = 0.5 + 0.1j, eps / 100
    g = [product.corner(lam, eps, delta=delta / 2 ** k)[0][1, 0] for k in range(3)]
    d1, d2 = abs(g[0] - g[1]), abs(g[1] - g[2])
    assert d1 <= 0.1 * delta
    assert d2 / d1 == pytest.approx(0.5, abs=0.05)


def test_wirtinger_on_closed_forms():
    grid = LambdaGrid.square(1.0, 41)
    z = grid.nodes()
    f = brown.wirtinger_density(np.conj(z), grid.hx, grid.hy)
    assert np.allclose(f, 1 / math.pi)
    f = brown.wirtinger_density(z ** 2 + 1 / (z - 3), grid.hx, grid.hy)
    assert np.abs(f).max() < 1e-3
    g = np.conj(z) * np.abs(z) ** 2 / 2
    # d/d(conj z) of z conj(z)^2 / 2 = |z|^2
    assert np.allclose(brown.wirtinger_density(g, grid.hx, grid.hy).real[1:-1, 1:-1],
                       np.abs(z[1:-1, 1:-1]) ** 2 / math.pi, atol=1e-3)
    lap = brown.laplacian_density(np.conj(z), grid.hx, grid.hy)
    assert np.allclose(lap[2:-2, 2:-2], 1 / math.pi, atol=1e-10)


def test_small_circular_grid(circ):
    grid = LambdaGrid.square(1.5, 21)
    dg = brown.density_grid(circ, None, grid, 0.05)
    assert dg.metadata["failed_nodes"] == 0
    assert dg.metadata["max_conjugate_asymmetry"] < 1e-9
    assert dg.metadata["max_residual"] < 1e-8
    assert 0.9 < dg.total_mass < 1.05
    assert dg.density[10, 10] == pytest.approx(1 / math.pi, rel=0.05)
    # rotation and reflection symmetry of the circular law
    assert np.abs(dg.density - dg.density[::-1, :]).max() < 1e-6
    assert np.abs(dg.density - dg.density.T).max() < 1e-6
    lap = brown.density_grid(circ, None, grid, 0.05, method="laplacian")
    assert abs(lap.density[10, 10] - dg.density[10, 10]) < 0.02
    with pytest.raises(ValueError):
        brown.density_grid(circ, None, grid, 0.05, method="spline")


def test_worker_invariance_and_csv(circ, tmp_path):
    grid = LambdaGrid.parse("-1.2:1.2:-0.4:0.4:9x5")
    one = brown.density_grid(circ, None, grid, 0.05, workers=1)
    two = brown.density_grid(circ, None, grid, 0.05, workers=2)
    assert np.array_equal(one.g_values, two.g_values)
    path = tmp_path / "grid.csv"
    with open(path, "w") as fh:
        one.to_csv(fh)
    back = DensityGrid.read_csv(path)
    assert back.grid == grid and back.epsilon == 0.05
    assert np.array_equal(back.g_values, one.g_values)
    assert np.array_equal(back.density, one.density)
    assert back.total_mass == pytest.approx(one.total_mass, rel=1e-12)


def test_extrapolate_synthetic():
    eps = [1e-1, 3e-2, 1e-2, 3e-3, 1e-3]
    est, stable, orders = brown.extrapolate(eps, [2 + e ** 2 for e in eps])
    assert stable and abs(est - 2) < 1e-6 and min(orders) > 1.7
    est, stable, orders = brown.extrapolate(eps, [2 + e for e in eps])
    assert not stable and abs(est - 2) < 1e-3
    est, stable, _ = brown.extrapolate(eps, [1.0] * 5)
    assert stable and est == 1.0


def test_sweep_flags(circ):
    out = brown.epsilon_sweep(circ, None, 3.0)
    assert out.stable and abs(out.estimate - 1 / 3) < 1e-7
    inside = brown.epsilon_sweep(circ, None, 0.5)
    assert not inside.stable
    with pytest.raises(ValueError):
        brown.epsilon_sweep(circ, None, 0.5, [1e-2, 1e-3])


def test_atom_masses(circ):
    mu = ovcauchy.selfadjoint(measures.atoms([0.0, 1.0], [0.6, 0.4]))
    assert brown.atom_mass("x1", {1: mu}, 0.0) == pytest.approx(0.6, abs=1e-6)
    assert abs(brown.atom_mass(circ, None, 0.0)) < 0.01
