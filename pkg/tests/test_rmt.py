import numpy as np
import pytest

from brownmeasure import brown, elliptic, measures, ovcauchy, rmt
from brownmeasure.brown import LambdaGrid
from brownmeasure.elliptic import EllipticParams
from brownmeasure.ncpoly import parse_polynomial
from brownmeasure.rmt import EnsembleSpec


def _specs():
    sc = ovcauchy.selfadjoint(measures.semicircle(2.0))
    return [EnsembleSpec("triangular-elliptic", 50, 7, EllipticParams(1, 0.25, 0.2)),
            EnsembleSpec("ginibre", 50, 7),
            EnsembleSpec("biunitary", 50, 7, measures.quarter_circle(2.0)),
            EnsembleSpec("polynomial", 50, 7, (parse_polynomial("x1*x2 + x2"),
                                                {1: ovcauchy.haar_unitary(), 2: sc}))]


@pytest.mark.parametrize("spec", _specs(), ids=lambda s: s.kind)
def test_seed_determinism(spec):
    a, b = rmt.sample(spec), rmt.sample(spec)
    assert a.tobytes() == b.tobytes()
    other = EnsembleSpec(spec.kind, spec.n, spec.seed + 1, spec.params)
    assert not np.array_equal(a, rmt.sample(other))


def test_gue_from_selfadjoint_polynomial():
    sc = ovcauchy.selfadjoint(measures.semicircle(2.0))
    m = rmt.sample(EnsembleSpec("polynomial", 200, 3, (parse_polynomial("x1"), {1: sc})))
    assert np.array_equal(m, m.conj().T)
    ev = np.linalg.eigvalsh(m)
    assert abs(ev).max() < 2.2


def test_haar_unitary_is_unitary():
    u = rmt.haar_unitary(64, rmt.rng_for(1))
    assert np.allclose(u @ u.conj().T, np.eye(64), atol=1e-12)


def test_elliptic_covariances():
    # sample moments over many entries match alpha, beta, gamma
    p = EllipticParams(1, 0.25, 0.2 + 0.1j)
    n = 400
    m = rmt.sample(EnsembleSpec("triangular-elliptic", n, 11, p)) * np.sqrt(n)
    iu, ju = np.triu_indices(n, 1)
    up, lo = m[iu, ju], m[ju, iu]
    assert np.mean(abs(up) ** 2) == pytest.approx(1.0, abs=0.02)
    assert np.mean(abs(lo) ** 2) == pytest.approx(0.25, abs=0.01)
    assert np.mean(up * lo) == pytest.approx(0.2 + 0.1j, abs=0.01)
    assert abs(np.mean(up * up)) < 0.02
    d = np.diagonal(m)
    assert np.mean(abs(d) ** 2) == pytest.approx(0.625, abs=0.1)
    assert np.mean(d * d) == pytest.approx(0.2 + 0.1j, abs=0.1)


def test_covariance_validation():
    with pytest.raises(ValueError):
        EnsembleSpec("triangular-elliptic", 10, 0, None)
    with pytest.raises(ValueError):
        EnsembleSpec("wishart", 10, 0)
    with pytest.raises(ValueError):
        EnsembleSpec("ginibre", 1, 0)
    with pytest.raises(ValueError):
        EnsembleSpec("ginibre", 10, -1)


def test_spectrum_trivial_cases():
    assert np.allclose(np.sort_complex(rmt.empirical_spectrum(np.diag([3, 1j, -2]))), [-2, 1j, 3])
    nil = np.diag(np.ones(9), 1)
    assert np.abs(rmt.empirical_spectrum(nil)).max() < 1e-12
    with pytest.raises(ValueError):
        rmt.empirical_spectrum(np.ones((2, 3)))


def test_compare_ginibre_and_mismatch():
    grid = LambdaGrid.square(1.5, 61)
    pred = elliptic.density_grid(EllipticParams(1, 1, 0), grid)
    eigs = rmt.empirical_spectrum(rmt.sample(EnsembleSpec("ginibre", 600, 5)))
    rep = rmt.compare(eigs, pred)
    assert rep.frac_inside_support >= 0.98
    assert rep.l1_histogram < 0.2
    assert rep.n_eigenvalues == 600 and set(rep.as_dict()) >= {"l1_histogram", "frac_inside_support"}
    with pytest.raises(rmt.GridMismatch):
        rmt.compare(eigs * 3, pred)
    with pytest.raises(ValueError):
        rmt.compare(eigs[:50], pred)


def test_compare_detects_wrong_law():
    grid = LambdaGrid.square(1.5, 61)
    pred = elliptic.density_grid(EllipticParams(1, 1, 0), grid)
    eigs = rmt.empirical_spectrum(rmt.sample(EnsembleSpec("ginibre", 600, 5))) * 0.5
    assert rmt.compare(eigs, pred).l1_histogram > 0.5
