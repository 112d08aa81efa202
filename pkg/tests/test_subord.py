import numpy as np
import pytest

from brownmeasure import measures, ovcauchy, subord
from brownmeasure.ovcauchy import Summand
from brownmeasure.subord import SolverOptions, fold_sum, free_add

from _helpers import random_upper, semicircle_g


def scalar(model, scale=0.5):
    return Summand([[0]], [[scale]], model)


def sc(radius=2.0):
    return scalar(ovcauchy.selfadjoint(measures.semicircle(radius)))


ZS = [0.5 + 0.1j, -1.0 + 0.2j, 3.0 + 0.5j, 0.1j]


def test_two_semicircles(semicircle_model):
    for z in ZS:
        res = free_add(sc(), sc(), np.array([[z]]))
        assert abs(res.g_sum[0, 0] - semicircle_g(z, 2 * np.sqrt(2))) < 1e-9
        assert res.residual <= 1e-8


def test_three_semicircles():
    for z in ZS:
        g = fold_sum([sc(), sc(), sc()], np.array([[z]]))
        assert abs(g[0, 0] - semicircle_g(z, 2 * np.sqrt(3))) < 1e-8


def test_bernoulli_sum_is_arcsine():
    bern = scalar(ovcauchy.selfadjoint(measures.atoms([-1.0, 1.0])))
    for z in [0.5 + 0.1j, 2.5 + 0.2j, 1j]:
        g = free_add(bern, bern, np.array([[z]])).g_sum[0, 0]
        assert abs(g - 1 / (np.sqrt(z - 2) * np.sqrt(z + 2))) < 1e-9


def test_zero_variable():
    zero = scalar(ovcauchy.selfadjoint(measures.atoms([0.0])))
    for z in ZS:
        g = free_add(sc(), zero, np.array([[z]])).g_sum[0, 0]
        assert abs(g - semicircle_g(z)) < 1e-10


def _pencil_summands(rng, m, models):
    out = []
    for k, model in enumerate(models):
        c = rng.normal(size=(m, m)) + 1j * rng.normal(size=(m, m))
        e = rng.normal(size=(m, m)) + 1j * rng.normal(size=(m, m))
        out.append(Summand((c + c.conj().T) / 4, e / 2, model, k + 1))
    return out


MODELS = [ovcauchy.selfadjoint(measures.semicircle(2.0)), ovcauchy.haar_unitary(),
          ovcauchy.selfadjoint(measures.free_poisson(1.0))]


def test_matrix_subordination_properties(rng):
    for _ in range(5):
        s1, s2 = _pencil_summands(rng, 3, MODELS[:2])
        b = random_upper(rng, 3, 0.3, 1.5)
        res = free_add(s1, s2, b)
        g = res.g_sum
        assert np.linalg.eigvalsh((g - g.conj().T) / 2j).max() < 0
        for w in (res.omega1, res.omega2):
            assert np.linalg.eigvalsh((w - w.conj().T) / 2j).min() >= np.linalg.eigvalsh((b - b.conj().T) / 2j).min() - 1e-9
        # two-sided consistency and the subordination identity
        assert np.abs(s1.cauchy(res.omega1) - g).max() < 1e-9
        assert np.abs(s2.cauchy(res.omega2) - g).max() < 1e-9
        assert np.abs(res.omega1 + res.omega2 - b - np.linalg.inv(g)).max() < 1e-8


def test_newton_and_picard_agree(rng):
    s1, s2 = _pencil_summands(rng, 2, MODELS[:2])
    b = random_upper(rng, 2, 0.5, 1.5)
    a = free_add(s1, s2, b, SolverOptions(newton=True))
    p = free_add(s1, s2, b, SolverOptions(newton=False, max_iter=20000))
    assert np.abs(a.g_sum - p.g_sum).max() < 1e-9
    assert a.iterations < p.iterations


def test_fold_order_and_associativity(rng):
    s = _pencil_summands(rng, 2, MODELS)
    b = random_upper(rng, 2, 0.4, 1.2)
    ref = fold_sum(s, b)
    for perm in [(1, 0, 2), (2, 1, 0), (0, 2, 1)]:
        assert np.abs(fold_sum([s[i] for i in perm], b) - ref).max() < 1e-8
    # (x1 + x2) + x3 against x1 + (x2 + x3)
    right = subord.FoldedOracle(s[1], s[2], SolverOptions(), 1)
    assert np.abs(free_add(s[0], right, b).g_sum - ref).max() < 1e-8


def test_folded_jacobian(rng):
    s = _pencil_summands(rng, 2, MODELS[:2])
    f = subord.FoldedOracle(s[0], s[1], SolverOptions(memoize=False), 1)
    b = random_upper(rng, 2, 0.4, 1.2)
    g, jac = f.cauchy_jac(b)
    d = rng.normal(size=(2, 2)) + 1j * rng.normal(size=(2, 2))
    h = 1e-6
    fd = (f(b + h * d) - f(b - h * d)) / (2 * h)
    assert np.abs((jac @ d.ravel()).reshape(2, 2) - fd).max() < 1e-6


def test_single_oracle_and_errors(rng):
    b = np.array([[0.3 + 0.2j]])
    assert abs(fold_sum([sc()], b)[0, 0] - semicircle_g(0.3 + 0.2j)) < 1e-12
    with pytest.raises(ValueError):
        fold_sum([], b)
    with pytest.raises(ValueError):
        SolverOptions.from_dict({"tolerance": 1})
    with pytest.raises((subord.NoConvergence, subord.FoldError)):
        fold_sum([sc(), sc(), sc()], np.array([[0.1 + 1e-3j]]),
                 SolverOptions(max_iter=2, newton=False))
