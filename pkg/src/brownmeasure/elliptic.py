"""
Triangular-elliptic operator with parameters ``(alpha, beta, gamma)``.

The regularized Cauchy transform reduces to one real unknown ``d < 0``,

    g21 = (-conj(gamma) lam - conj(lam) d) / (d^2 - |gamma|^2),

where ``d`` solves a scalar determinant equation.  As ``eps -> 0`` the
solution tends to ``(beta - alpha) / (log alpha - log beta)`` (``-alpha``
when ``alpha == beta``) inside an ellipse, whose interior carries the
uniform Brown measure; outside, ``G`` solves ``gamma G^2 - lam G + 1 = 0``.
"""

from dataclasses import dataclass
import math

import numpy as np
from scipy.optimize import brentq

__all__ = [
    "EllipticParams",
    "DegenerateParams",
    "DegenerateEllipse",
    "BracketFailure",
    "d_threshold",
    "solve_d",
    "d_zero",
    "regularized",
    "cauchy",
    "boundary",
    "area",
    "inside",
    "density",
    "cell_density",
    "density_grid",
]


class DegenerateParams(ValueError):
    pass


class DegenerateEllipse(ValueError):
    pass


class BracketFailure(RuntimeError):
    def __init__(self, lo, hi, message="no sign change"):
        self.lo, self.hi = lo, hi
        super().__init__(f"{message} on [{lo:.6g}, {hi:.6g}]")


@dataclass(frozen=True)
class EllipticParams:
    alpha: float
    beta: float
    gamma: complex = 0j

    def __post_init__(self):
        a, b = float(self.alpha), float(self.beta)
        g = complex(self.gamma)
        object.__setattr__(self, "alpha", a)
        object.__setattr__(self, "beta", b)
        object.__setattr__(self, "gamma", g)
        if a < 0 or b < 0:
            raise ValueError("alpha and beta must be non-negative")
        if abs(g) > math.sqrt(a * b) + 1e-12:
            raise ValueError(f"|gamma|={abs(g):.6g} exceeds sqrt(alpha beta)={math.sqrt(a * b):.6g}")
        if a == 0 and b == 0 and g == 0:
            raise DegenerateParams("alpha = beta = gamma = 0")

    @property
    def interval(self):
        """``alpha == beta == |gamma|``: the ellipse degenerates to a segment."""
        return abs(self.alpha - self.beta) <= 1e-12 and abs(abs(self.gamma) - self.alpha) <= 1e-12

    @property
    def quasinilpotent(self):
        """Exactly one of ``alpha``, ``beta`` vanishes; the Brown measure is ``delta_0``."""
        return (self.alpha == 0) != (self.beta == 0)


def d_threshold(p):
    """Upper bound for ``d``: the logarithmic mean expression, ``-alpha`` if ``alpha == beta``."""
    a, b = p.alpha, p.beta
    if a == 0 and b == 0:
        raise DegenerateParams("alpha = beta = 0")
    if a == b:
        return -a
    if a == 0 or b == 0:
        return 0.0
    return (b - a) / (math.log(a) - math.log(b))


def _log_k(p, d):
    """``log |alpha - beta exp((beta - alpha) / d)|`` without cancellation."""
    a, b = p.alpha, p.beta
    if b == 0:
        return math.log(a)
    if a == 0:
        return math.log(b) + b / d
    u = (b - a) / d - math.log(a / b)
    if u > 700:
        return math.log(a) + u
    return math.log(a) + math.log(abs(math.expm1(u)))


def _log_k_sign(p, d):
    a, b = p.alpha, p.beta
    if b == 0:
        return 1.0
    if a == 0:
        return -1.0
    return -math.copysign(1.0, (b - a) / d - math.log(a / b))


def _diag_term(p, d, eps):
    """``-det`` contribution of the diagonal entries: ``-g11 g22`` (positive)."""
    a, b = p.alpha, p.beta
    if a == b:
        return (eps / (d + a)) ** 2
    la = 2 * math.log(eps) + 2 * math.log(abs(a - b)) + (b - a) / d - 2 * _log_k(p, d) - 2 * math.log(-d)
    return math.exp(min(la, 700.0))


def _offdiag_term(p, lam, d):
    g = p.gamma
    return abs(g * np.conj(lam) + lam * d) ** 2 / (d * d - abs(g) ** 2) ** 2


def residual(p, lam, eps, d):
    """``1/d - det[g]``; zero at the solution."""
    return 1.0 / d + _diag_term(p, d, eps) + _offdiag_term(p, lam, d)


def solve_d(p, lam, eps):
    """
    Root ``d < d_threshold(p)`` of the determinant equation.

    The distance to the threshold is scanned on a logarithmic mesh from
    ``1e-15`` (relative) to ``1e4``, widened to cover ``|d| ~ eps^2 + |lam|^2``
    for large arguments, and the first sign change is refined with Brent's
    method.
    """
    if not eps > 0:
        raise ValueError("eps must be positive")
    lam = complex(lam)
    thr = d_threshold(p)
    scale = max(1.0, abs(thr))
    reach = max(1e4, 10 * (eps + abs(lam) + p.alpha + p.beta) ** 2)
    offsets = np.logspace(-15, math.log10(reach), 400) * scale
    f = lambda d: residual(p, lam, eps, d)
    prev_s, prev_v = None, None
    for s in offsets:
        v = f(thr - s)
        if prev_v is not None and (v < 0) != (prev_v < 0):
            lo, hi = thr - s, thr - prev_s
            return brentq(f, lo, hi, xtol=1e-15 * scale, rtol=4 * np.finfo(float).eps, maxiter=500)
        prev_s, prev_v = s, v
    if prev_v is not None and offsets.size and f(thr - offsets[0]) < 0:
        # root closer to the threshold than the mesh resolves
        return thr - offsets[0]
    raise BracketFailure(thr - offsets[-1], thr - offsets[0])


QUASI_SCHEDULE = tuple(10.0 ** -k for k in range(1, 9))


def d_zero(p, lam):
    """
    Limit of :func:`solve_d` as ``eps -> 0``.

    Inside the ellipse this is the threshold value; outside it is the root
    of the ``eps = 0`` equation reached by continuation in ``eps``.  When
    one of ``alpha``, ``beta`` vanishes the continuation is used everywhere.
    """
    lam = complex(lam)
    thr = d_threshold(p)
    if p.quasinilpotent:
        return solve_d(p, lam, QUASI_SCHEDULE[-1])
    if not p.interval and inside(p, lam):
        return thr
    return solve_d(p, lam, 1e-9)


def regularized(p, lam, eps):
    """
    ``(g21, g12, g11, d)`` at regularization ``eps``.

    ``g11`` is the trace ``int_0^1 g11(t) dt`` (equal to the constant
    value when ``alpha == beta``).
    """
    lam = complex(lam)
    d = solve_d(p, lam, eps)
    g = p.gamma
    den = d * d - abs(g) ** 2
    g21 = (-np.conj(g) * lam - np.conj(lam) * d) / den
    g12 = (-g * np.conj(lam) - lam * d) / den
    a, b = p.alpha, p.beta
    if a == b:
        g11 = 1j * eps / (d + a)
    else:
        # trace of c exp(k t): c expm1(k) / k, kept in logs against overflow
        k = (b - a) / d
        sign = 1.0 if _log_k_sign(p, d) > 0 else -1.0
        log_int = (k if k > 700 else math.log(math.expm1(k) / k)) if k != 0 else 0.0
        g11 = 1j * eps * (a - b) / d * sign * math.exp(log_int - _log_k(p, d))
    return complex(g21), complex(g12), complex(g11), d


def _outside_cauchy(gamma, lam):
    if gamma == 0:
        return 1.0 / lam
    root = np.sqrt(lam * lam - 4 * gamma)
    g1, g2 = 2 / (lam - root), 2 / (lam + root)
    return g1 if abs(lam * g1 - 1) < abs(lam * g2 - 1) else g2


def _inside_cauchy(p, lam, d):
    g = p.gamma
    return (-np.conj(g) * lam - np.conj(lam) * d) / (d * d - abs(g) ** 2)


def _rotation(p):
    return np.exp(0.5j * np.angle(p.gamma)) if p.gamma != 0 else 1.0


def cauchy(p, lam):
    """Cauchy transform of the Brown measure at ``lam``."""
    lam = complex(lam)
    if p.quasinilpotent:
        return 0j if lam == 0 else 1.0 / lam
    if p.interval:
        # rotated semicircle of variance alpha
        rot = _rotation(p)
        z = lam / rot
        r = 2 * math.sqrt(p.alpha)
        root = np.sqrt(z - r) * np.sqrt(z + r)
        return complex((z - root) / (2 * p.alpha) / rot)
    if inside(p, lam):
        return complex(_inside_cauchy(p, lam, d_threshold(p)))
    if lam == 0:
        return 0j
    return complex(_outside_cauchy(p.gamma, lam))


def _radius(p, theta):
    d = d_threshold(p)
    g = p.gamma
    den = d * d - abs(g) ** 2
    q = -d * (d * d + abs(g) ** 2 + 2 * d * np.real(np.conj(g) * np.exp(2j * theta)))
    return den / np.sqrt(q)


def boundary(p, n_points=256):
    """
    Points of the support boundary in angular order.

    For a degenerate ellipse (``alpha == beta == |gamma|``) the two
    endpoints of the segment are returned.
    """
    if n_points < 8:
        raise ValueError("n_points must be at least 8")
    if p.interval:
        e = 2 * math.sqrt(p.alpha) * _rotation(p)
        return np.array([-e, e], dtype=complex)
    if p.quasinilpotent:
        raise DegenerateEllipse("support is the single point 0")
    theta = 2 * np.pi * np.arange(n_points) / n_points
    return _radius(p, theta) * np.exp(1j * theta)


def inside(p, lam):
    """Whether ``lam`` lies in the closed elliptic support."""
    lam = complex(lam)
    if p.interval or p.quasinilpotent:
        return False
    if lam == 0:
        return True
    return abs(lam) <= _radius(p, np.angle(lam)) * (1 + 1e-12)


def area(p, n_points=4096):
    """Shoelace area of the boundary polygon."""
    if p.interval or p.quasinilpotent:
        raise DegenerateEllipse("support has zero area")
    z = boundary(p, n_points)
    x, y = z.real, z.imag
    return 0.5 * abs(np.dot(x, np.roll(y, -1)) - np.dot(y, np.roll(x, -1)))


def density(p, lam):
    """Uniform density ``1 / area`` inside the ellipse, 0 outside."""
    if p.interval or p.quasinilpotent:
        raise DegenerateEllipse("Brown measure is singular")
    return 1.0 / area(p) if inside(p, lam) else 0.0


def cell_density(p, grid, sub=8):
    """
    Density averaged over the cells centred on the nodes of ``grid``.

    Each cell is sampled at ``sub x sub`` points; the result is the
    fraction inside the ellipse divided by its area.
    """
    if p.interval or p.quasinilpotent:
        raise DegenerateEllipse("Brown measure is singular")
    off = (np.arange(sub) + 0.5) / sub - 0.5
    ox = off * grid.hx
    oy = off * grid.hy
    nodes = grid.nodes()
    pts = (nodes[:, :, None, None] + ox[None, None, None, :] + 1j * oy[None, None, :, None])
    theta = np.angle(pts)
    inside_ = np.abs(pts) <= _radius(p, theta)
    return inside_.mean(axis=(2, 3)) / area(p)


def density_grid(p, grid, sub=8):
    """
    Closed-form prediction on ``grid`` as a :class:`~brownmeasure.brown.DensityGrid`.

    ``epsilon`` is recorded as 0 (no regularization); densities are cell
    averages from :func:`cell_density`.
    """
    from .brown import DensityGrid

    dens = cell_density(p, grid, sub)
    nodes = grid.nodes()
    g = np.vectorize(lambda z: cauchy(p, z), otypes=[complex])(nodes)
    conv = np.ones(dens.shape, dtype=bool)
    mass = float(dens.sum() * grid.cell_area)
    meta = {"source": "elliptic", "alpha": p.alpha, "beta": p.beta,
            "gamma": [p.gamma.real, p.gamma.imag], "area": area(p)}
    return DensityGrid(grid, 0.0, g, np.zeros_like(g), dens, conv, mass, meta)
