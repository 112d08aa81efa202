"""
Random-matrix samplers and comparison of eigenvalue clouds with predicted
Brown densities.

All samplers draw from ``numpy.random.Generator(Philox(seed))`` in a fixed
order, so a spec and its seed determine the matrix bit for bit.
"""

from dataclasses import dataclass, field
import math

import numpy as np

from .elliptic import EllipticParams
from .measures import Measure1D

__all__ = [
    "EnsembleSpec",
    "InvalidCovariance",
    "GridMismatch",
    "EigenNoConvergence",
    "rng_for",
    "haar_unitary",
    "sample",
    "empirical_spectrum",
    "compare",
    "ComparisonReport",
]

TRIANGULAR_ELLIPTIC = "triangular-elliptic"
GINIBRE = "ginibre"
BIUNITARY = "biunitary"
POLYNOMIAL = "polynomial"
KINDS = (TRIANGULAR_ELLIPTIC, GINIBRE, BIUNITARY, POLYNOMIAL)


class InvalidCovariance(ValueError):
    pass


class GridMismatch(ValueError):
    pass


class EigenNoConvergence(RuntimeError):
    pass


@dataclass(frozen=True)
class EnsembleSpec:
    """
    Parameters
    ----------
    kind : str
        ``"triangular-elliptic"``, ``"ginibre"``, ``"biunitary"`` or
        ``"polynomial"``.
    n : int
        Matrix size.
    seed : int
        Seed of the Philox generator (64-bit).
    params : object
        ``EllipticParams``; a ``Measure1D`` of singular values; or a pair
        ``(NCPolynomial, {var: VariableModel})``.  Unused for Ginibre.
    """

    kind: str
    n: int
    seed: int = 0
    params: object = field(default=None, compare=False)

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValueError(f"unknown ensemble kind {self.kind!r}")
        if self.n < 2:
            raise ValueError("n must be at least 2")
        if not 0 <= self.seed < 2 ** 64:
            raise ValueError("seed must be a 64-bit unsigned integer")
        if self.kind == TRIANGULAR_ELLIPTIC and not isinstance(self.params, EllipticParams):
            raise ValueError("triangular-elliptic ensemble needs EllipticParams")
        if self.kind == BIUNITARY and not isinstance(self.params, Measure1D):
            raise ValueError("biunitary ensemble needs a singular value law")
        if self.kind == POLYNOMIAL:
            poly, models = self.params
            missing = [j for j in poly.variables if j not in models]
            if missing:
                raise ValueError(f"no model for variables {missing}")


def rng_for(seed):
    return np.random.Generator(np.random.Philox(seed))


def _cgauss(rng, size):
    """Standard complex Gaussians, ``E|z|^2 = 1``."""
    x = rng.standard_normal((2,) + tuple(np.atleast_1d(size)))
    return (x[0] + 1j * x[1]) / math.sqrt(2.0)


def _elliptic(p, n, rng):
    a, b, g = p.alpha, p.beta, p.gamma
    iu, ju = np.triu_indices(n, 1)
    z1 = _cgauss(rng, iu.size)
    z2 = _cgauss(rng, iu.size)
    m = np.zeros((n, n), dtype=complex)
    if a > 0:
        resid = b - abs(g) ** 2 / a
        if resid < -1e-12:
            raise InvalidCovariance("pair covariance is not positive semidefinite")
        upper = math.sqrt(a / n) * z1
        lower = g / math.sqrt(a * n) * np.conj(z1) + math.sqrt(max(resid, 0.0) / n) * z2
    else:
        # gamma = 0 is forced here
        upper = np.zeros(iu.size, dtype=complex)
        lower = math.sqrt(b / n) * z2
    m[iu, ju] = upper
    m[ju, iu] = lower
    # diagonal: real covariance of (Re, Im) from E|a|^2 and E a^2
    s = 0.5 * (a + b)
    vx = 0.5 * (s + g.real) / n
    vy = 0.5 * (s - g.real) / n
    cxy = 0.5 * g.imag / n
    if vx < -1e-15 or vy < -1e-15 or vx * vy - cxy * cxy < -1e-15 / n ** 2:
        raise InvalidCovariance("diagonal covariance is not positive semidefinite")
    l11 = math.sqrt(max(vx, 0.0))
    l21 = cxy / l11 if l11 > 0 else 0.0
    l22 = math.sqrt(max(vy - l21 * l21, 0.0))
    x = rng.standard_normal((2, n))
    m[np.arange(n), np.arange(n)] = l11 * x[0] + 1j * (l21 * x[0] + l22 * x[1])
    return m


def haar_unitary(n, rng):
    """Haar unitary from the QR factorisation of a Ginibre matrix (phases fixed)."""
    q, r = np.linalg.qr(_cgauss(rng, (n, n)))
    ph = np.diagonal(r).copy()
    ph = np.where(np.abs(ph) > 0, ph / np.abs(ph), 1.0)
    return q * ph[None, :]


def _draw(mu, n, rng):
    """``n`` i.i.d. draws by inverting the piecewise-linear CDF of the rule."""
    pts, cdf = mu.cdf_points()
    u = rng.random(n)
    return np.interp(u, cdf, pts)


def _variable(model, n, rng):
    if model.kind == "unitary" and model.measure.name == "haar_unitary":
        return haar_unitary(n, rng)
    u = haar_unitary(n, rng)
    vals = _draw(model.measure, n, rng)
    if model.kind == "unitary":
        return (u * np.exp(1j * vals)[None, :]) @ u.conj().T
    m = (u * vals[None, :]) @ u.conj().T
    # exactly hermitian, not just to rounding
    return 0.5 * (m + m.conj().T)


def sample(spec):
    """One matrix of the ensemble; deterministic given ``spec``."""
    rng = rng_for(spec.seed)
    n = spec.n
    if spec.kind == TRIANGULAR_ELLIPTIC:
        return _elliptic(spec.params, n, rng)
    if spec.kind == GINIBRE:
        return _cgauss(rng, (n, n)) / math.sqrt(n)
    if spec.kind == BIUNITARY:
        u = haar_unitary(n, rng)
        v = haar_unitary(n, rng)
        s = _draw(spec.params, n, rng)
        return (u * s[None, :]) @ v.conj().T
    poly, models = spec.params
    subst = {j: _variable(models[j], n, rng) for j in sorted(poly.variables)}
    return poly.evaluate(subst)


def empirical_spectrum(m, retries=1, seed=0):
    """
    All eigenvalues of a square matrix (LAPACK Hessenberg QR).

    On failure the matrix is conjugated by a random unitary and retried.
    """
    m = np.asarray(m, dtype=complex)
    if m.ndim != 2 or m.shape[0] != m.shape[1]:
        raise ValueError("matrix must be square")
    rng = rng_for(seed)
    a = m
    for attempt in range(retries + 1):
        try:
            return np.linalg.eigvals(a)
        except np.linalg.LinAlgError as exc:
            if attempt == retries:
                raise EigenNoConvergence(str(exc)) from exc
            u = haar_unitary(m.shape[0], rng)
            a = u @ m @ u.conj().T


@dataclass
class ComparisonReport:
    l1_histogram: float
    frac_inside_support: float
    n_eigenvalues: int
    bin_factor: int
    support_bins: int
    outside_grid: int

    def as_dict(self):
        return dict(self.__dict__)


def _bin_factor(support_cells, n_eigs):
    # aim at roughly sqrt(N)/2 occupied bins: Poisson noise in the l1
    # distance then stays near sqrt(2 B / (pi N))
    target = max(9.0, 0.5 * math.sqrt(n_eigs))
    return max(1, int(round(math.sqrt(support_cells / target))))


def compare(eigs, predicted, margin=0.05, bin_factor=None, support_rel=1e-2):
    """
    Distance between an eigenvalue cloud and a predicted density grid.

    Parameters
    ----------
    eigs : array_like of complex
    predicted : DensityGrid
    margin : float
        Dilation of the predicted support for ``frac_inside_support``.
    bin_factor : int, optional
        Histogram bins are blocks of ``bin_factor x bin_factor`` grid
        cells; chosen from the support size and ``len(eigs)`` by default.
    support_rel : float
        Nodes with density above ``support_rel * max(density)`` form the
        support.

    Returns
    -------
    ComparisonReport
    """
    from scipy.spatial import cKDTree

    eigs = np.asarray(eigs, dtype=complex).ravel()
    if eigs.size < 100:
        raise ValueError("need at least 100 eigenvalues")
    grid = predicted.grid
    conv = predicted.converged
    if conv.mean() < 0.9:
        raise ValueError("predicted grid converged on fewer than 90% of nodes")
    w = grid.re_max - grid.re_min
    h = grid.im_max - grid.im_min
    if (eigs.real.min() < grid.re_min - 0.1 * w or eigs.real.max() > grid.re_max + 0.1 * w
            or eigs.imag.min() < grid.im_min - 0.1 * h or eigs.imag.max() > grid.im_max + 0.1 * h):
        raise GridMismatch("eigenvalue cloud exceeds the grid by more than 10%")

    dens = np.where(conv & np.isfinite(predicted.density), predicted.density, 0.0)
    dens = np.maximum(dens, 0.0)
    support = dens > support_rel * dens.max()
    nodes = grid.nodes()
    tree = cKDTree(np.column_stack([nodes[support].real, nodes[support].imag]))
    dist, _ = tree.query(np.column_stack([eigs.real, eigs.imag]))
    frac = float(np.mean(dist <= margin))

    # cell of the nearest node
    ix = np.rint((eigs.real - grid.re_min) / grid.hx).astype(int)
    iy = np.rint((eigs.imag - grid.im_min) / grid.hy).astype(int)
    on = (ix >= 0) & (ix < grid.nx) & (iy >= 0) & (iy < grid.ny)
    counts = np.zeros((grid.ny, grid.nx))
    np.add.at(counts, (iy[on], ix[on]), 1.0)
    k = bin_factor or _bin_factor(int(support.sum()), eigs.size)
    by, bx = -(-grid.ny // k), -(-grid.nx // k)
    pad = ((0, by * k - grid.ny), (0, bx * k - grid.nx))
    emp = np.pad(counts, pad).reshape(by, k, bx, k).sum(axis=(1, 3)) / eigs.size
    pred = np.pad(dens, pad).reshape(by, k, bx, k).sum(axis=(1, 3)) * grid.cell_area
    pred_total = pred.sum()
    if pred_total > 0:
        pred = pred / pred_total
    l1 = float(np.abs(emp - pred).sum() + (~on).sum() / eigs.size)
    return ComparisonReport(l1, frac, int(eigs.size), k, int((pred > 0).sum()), int((~on).sum()))
