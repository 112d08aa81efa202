"""Shared generators for the test-suite."""

import numpy as np

from brownmeasure import ncpoly


def random_polynomial(rng, max_degree=4, max_vars=3, max_terms=4):
    """Random polynomial with variables relabelled to ``1..k`` and random stars."""
    n_terms = int(rng.integers(1, max_terms + 1))
    terms = []
    for _ in range(n_terms):
        k = int(rng.integers(0, max_degree + 1))
        word = [(int(rng.integers(1, max_vars + 1)), bool(rng.random() < 0.3)) for _ in range(k)]
        coeff = complex(rng.normal(), rng.normal())
        terms.append((coeff, word))
    used = sorted({v for _, w in terms for v, _ in w})
    relabel = {v: i + 1 for i, v in enumerate(used)}
    terms = [(c, [(relabel[v], s) for v, s in w]) for c, w in terms]
    p = ncpoly.NCPolynomial(tuple(terms))
    if not p.terms or p.degree == 0:
        p = p + ncpoly.NCPolynomial.variable(1)
    return p


def random_substitution(rng, variables, n=8):
    return {j: (rng.normal(size=(n, n)) + 1j * rng.normal(size=(n, n))) / np.sqrt(n)
            for j in variables}


def random_upper(rng, m, lo=0.1, hi=3.0):
    """Random ``b`` whose imaginary part has eigenvalues in ``[lo, hi]``."""
    a = rng.normal(size=(m, m)) + 1j * rng.normal(size=(m, m))
    re = (a + a.conj().T) / 2
    q, _ = np.linalg.qr(rng.normal(size=(m, m)) + 1j * rng.normal(size=(m, m)))
    im = (q * rng.uniform(lo, hi, m)) @ q.conj().T
    return re + 1j * im


def corner_residual(poly, b, subst):
    lin = ncpoly.linearize_polynomial(poly)
    n = next(iter(subst.values())).shape[0]
    lhs = lin.corner_resolvent(b, subst)
    rhs = np.linalg.inv(np.kron(b, np.eye(n)) - ncpoly.hermitize(poly).evaluate(subst))
    return float(np.abs(lhs - rhs).max())


def semicircle_g(z, radius=2.0):
    """Closed-form Cauchy transform of the semicircle law on ``[-r, r]``."""
    z = complex(z)
    root = np.sqrt(z - radius) * np.sqrt(z + radius)
    return (z - root) / (radius ** 2 / 2)
