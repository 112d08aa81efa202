"""
One-dimensional spectral distributions and their scalar transforms.

A :class:`Measure1D` is a finite list of atoms plus a positive quadrature
rule for the absolutely continuous part.  Measures on the real line are used
for selfadjoint variables, measures on angles for unitary ones.

Continuous presets are discretised with Gauss-Legendre quadrature in the
angle variable of the substitution ``t = c - h cos(phi)``.  The substitution
absorbs square-root and inverse-square-root edge behaviour, so the
integrands seen by the quadrature are smooth for every preset.
"""

from dataclasses import dataclass, field
from functools import lru_cache, partial
import math

import numpy as np
from scipy.special import roots_legendre

__all__ = [
    "Measure1D",
    "UnsupportedMeasure",
    "PoleHit",
    "DomainError",
    "OutOfRange",
    "atoms",
    "semicircle",
    "free_poisson",
    "uniform",
    "arcsine",
    "quarter_circle",
    "haar_unitary",
    "circle_atoms",
    "mixture",
    "from_descriptor",
    "scalar_cauchy",
    "psi_transform",
    "eta_over_v",
    "invert_g",
    "inf_g",
]

REAL = "real-line"
CIRCLE = "unit-circle-angle"

DEFAULT_NODES = 400
DEFAULT_CIRCLE_NODES = 512


class UnsupportedMeasure(ValueError):
    pass


class PoleHit(ZeroDivisionError):
    pass


class DomainError(ValueError):
    pass


class OutOfRange(ValueError):
    pass


@dataclass(frozen=True)
class Measure1D:
    """
    Probability measure on the real line or on the unit circle.

    Parameters
    ----------
    atom_locs, atom_weights : numpy.ndarray
        Point masses.
    nodes, weights : numpy.ndarray
        Quadrature rule for the continuous part.  For circle measures the
        nodes are angles in ``[0, 2 pi)``.
    support_kind : str
        ``"real-line"`` or ``"unit-circle-angle"``.
    bounds : tuple of float
        Declared support hull (angles ``(0, 2 pi)`` on the circle).
    inverse_mean : float or None
        Exact value of the integral of ``1/t`` when known analytically
        (``inf`` when divergent).  ``None`` means use the discrete rule.
    name : str
        Human readable label, used in run manifests.
    """

    atom_locs: np.ndarray
    atom_weights: np.ndarray
    nodes: np.ndarray
    weights: np.ndarray
    support_kind: str = REAL
    bounds: tuple = (-math.inf, math.inf)
    inverse_mean: float = None
    name: str = field(default="measure", compare=False)

    def __post_init__(self):
        for key in ("atom_locs", "atom_weights", "nodes", "weights"):
            object.__setattr__(self, key, np.asarray(getattr(self, key), dtype=float).ravel())
        if self.atom_locs.shape != self.atom_weights.shape:
            raise ValueError("atom locations and weights differ in length")
        if self.nodes.shape != self.weights.shape:
            raise ValueError("quadrature nodes and weights differ in length")
        if self.support_kind not in (REAL, CIRCLE):
            raise ValueError(f"unknown support kind {self.support_kind!r}")
        if (self.atom_weights < 0).any() or (self.weights < 0).any():
            raise ValueError("negative weight")
        total = self.atom_weights.sum() + self.weights.sum()
        if abs(total - 1.0) > 1e-12:
            raise ValueError(f"total mass {total!r} differs from 1")
        lo, hi = self.bounds
        pts = self.points
        if pts.size and (pts.min() < lo - 1e-12 or pts.max() > hi + 1e-12):
            raise ValueError("node outside declared support bounds")
        for arr in (self.atom_locs, self.atom_weights, self.nodes, self.weights):
            arr.setflags(write=False)

    @property
    def points(self):
        """All support points, atoms first."""
        return np.concatenate([self.atom_locs, self.nodes])

    @property
    def masses(self):
        return np.concatenate([self.atom_weights, self.weights])

    @property
    def is_circle(self):
        return self.support_kind == CIRCLE

    def mean(self):
        return float(self.masses @ self.points)

    def moment(self, k):
        return float(self.masses @ self.points ** k)

    def mass_at(self, t, tol=1e-12):
        sel = np.abs(self.atom_locs - t) <= tol
        return float(self.atom_weights[sel].sum())

    def is_point_mass(self, tol=1e-12):
        pts = self.points[self.masses > 0]
        return pts.size > 0 and float(np.ptp(pts)) <= tol

    def inv_mean(self):
        """Integral of ``1/t`` for a measure on ``[0, inf)``; ``inf`` if divergent."""
        if self.mass_at(0.0) > 0:
            return math.inf
        if self.inverse_mean is not None:
            return float(self.inverse_mean)
        return float(self.masses @ (1.0 / self.points))

    def cdf_points(self):
        """Sorted support points and cumulative masses (for quantile sampling)."""
        pts, w = self.points, self.masses
        order = np.argsort(pts, kind="stable")
        return pts[order], np.cumsum(w[order])

    def quantiles(self, n):
        """``n`` classical locations ``F^{-1}((k - 1/2) / n)``."""
        pts, cdf = self.cdf_points()
        probs = (np.arange(n) + 0.5) / n
        idx = np.searchsorted(cdf, probs, side="left")
        idx = np.minimum(idx, pts.size - 1)
        return pts[idx]

    def with_nodes(self, n):
        """Same measure rediscretised with ``n`` quadrature nodes (presets only)."""
        if self._rebuild is None:
            return self
        return self._rebuild(n)

    _rebuild = None

    def describe(self):
        return {
            "name": self.name,
            "support_kind": self.support_kind,
            "atoms": len(self.atom_locs),
            "nodes": len(self.nodes),
        }


def _finish(measure, rebuild):
    object.__setattr__(measure, "_rebuild", rebuild)
    return measure


@lru_cache(maxsize=16)
def _legendre(n):
    x, w = roots_legendre(n)
    x.setflags(write=False)
    w.setflags(write=False)
    return x, w


def _cosine_rule(a, b, density, n):
    """Quadrature for ``density`` on ``[a, b]`` through ``t = c - h cos(phi)``."""
    x, w = _legendre(int(n))
    phi = 0.5 * math.pi * (x + 1.0)
    wphi = 0.5 * math.pi * w
    c, h = 0.5 * (a + b), 0.5 * (b - a)
    t = c - h * np.cos(phi)
    weights = wphi * density(t, phi) * h * np.sin(phi)
    return t, weights


def _empty():
    return np.zeros(0)


def atoms(locations, weights=None, name="atoms"):
    loc = np.atleast_1d(np.asarray(locations, dtype=float))
    if weights is None:
        weights = np.full(loc.shape, 1.0 / loc.size)
    w = np.atleast_1d(np.asarray(weights, dtype=float))
    w = w / w.sum()
    lo, hi = float(loc.min()), float(loc.max())
    return Measure1D(loc, w, _empty(), _empty(), REAL, (lo, hi), None, name)


def semicircle(radius=2.0, n=DEFAULT_NODES):
    """Wigner semicircle law on ``[-radius, radius]``."""
    r = float(radius)
    if r <= 0:
        raise ValueError("radius must be positive")

    def density(t, phi):
        # sqrt(r^2 - t^2) = r sin(phi) on the cosine map
        return 2.0 / (math.pi * r) * np.sin(phi)

    t, w = _cosine_rule(-r, r, density, n)
    m = Measure1D(_empty(), _empty(), t, w / w.sum(), REAL, (-r, r), None,
                  f"semicircle({r:g})")
    return _finish(m, partial(semicircle, r))


def free_poisson(rate=1.0, n=DEFAULT_NODES):
    """Free Poisson (Marchenko-Pastur) law with jump size 1 and the given rate."""
    lam = float(rate)
    if lam <= 0:
        raise ValueError("rate must be positive")
    a, b = (1.0 - math.sqrt(lam)) ** 2, (1.0 + math.sqrt(lam)) ** 2
    cont = min(1.0, lam)

    def density(t, phi):
        h = 0.5 * (b - a)
        # sqrt((b - t)(t - a)) = h sin(phi); the 1/t factor stays bounded
        # after multiplying by the Jacobian h sin(phi) even when a = 0.
        with np.errstate(divide="ignore", invalid="ignore"):
            return h * np.sin(phi) / (2.0 * math.pi * t)

    if a == 0.0:
        # t = 2 - 2cos(phi) = 4 sin^2(phi/2): use the exact cancellation
        x, w = _legendre(int(n))
        phi = 0.5 * math.pi * (x + 1.0)
        t = b * np.sin(0.5 * phi) ** 2
        w = 0.5 * math.pi * w * (1.0 + np.cos(phi)) / math.pi
    else:
        t, w = _cosine_rule(a, b, density, n)
    w = cont * w / w.sum()
    if lam < 1.0:
        loc, aw = np.array([0.0]), np.array([1.0 - lam])
        inv = math.inf
    else:
        loc, aw = _empty(), _empty()
        inv = math.inf if lam == 1.0 else 1.0 / (lam - 1.0)
    m = Measure1D(loc, aw, t, w, REAL, (0.0 if lam <= 1.0 else a, b), inv,
                  f"free_poisson({lam:g})")
    return _finish(m, partial(free_poisson, lam))


def uniform(a=0.0, b=1.0, n=DEFAULT_NODES):
    a, b = float(a), float(b)
    if not a < b:
        raise ValueError("need a < b")
    t, w = _cosine_rule(a, b, lambda t, phi: np.full_like(t, 1.0 / (b - a)), n)
    if a > 0:
        inv = math.log(b / a) / (b - a)
    elif a == 0:
        inv = math.inf
    else:
        inv = None
    m = Measure1D(_empty(), _empty(), t, w / w.sum(), REAL, (a, b), inv,
                  f"uniform({a:g},{b:g})")
    return _finish(m, partial(uniform, a, b))


def arcsine(a=-2.0, b=2.0, n=DEFAULT_NODES):
    """Arcsine law on ``[a, b]`` (uniform in the angle variable)."""
    a, b = float(a), float(b)
    if not a < b:
        raise ValueError("need a < b")
    x, w = _legendre(int(n))
    phi = 0.5 * math.pi * (x + 1.0)
    t = 0.5 * (a + b) - 0.5 * (b - a) * np.cos(phi)
    w = w / w.sum()
    inv = None if a > 0 else (math.inf if a == 0 else None)
    m = Measure1D(_empty(), _empty(), t, w, REAL, (a, b), inv,
                  f"arcsine({a:g},{b:g})")
    return _finish(m, partial(arcsine, a, b))


def quarter_circle(radius=2.0, n=DEFAULT_NODES):
    """
    Quarter-circle law on ``[0, radius]``, density ``4 sqrt(r^2 - t^2) / (pi r^2)``.

    With ``radius=2`` its square is free Poisson with rate 1.
    """
    r = float(radius)
    x, w = _legendre(int(n))
    theta = 0.25 * math.pi * (x + 1.0)  # t = r sin(theta), theta in [0, pi/2]
    t = r * np.sin(theta)
    w = 0.25 * math.pi * w * np.cos(theta) ** 2
    m = Measure1D(_empty(), _empty(), t, w / w.sum(), REAL, (0.0, r), math.inf,
                  f"quarter_circle({r:g})")
    return _finish(m, partial(quarter_circle, r))


def haar_unitary(n=DEFAULT_CIRCLE_NODES):
    """Uniform measure on the unit circle (trapezoid rule on angles)."""
    theta = 2.0 * math.pi * np.arange(n) / n
    m = Measure1D(_empty(), _empty(), theta, np.full(n, 1.0 / n), CIRCLE,
                  (0.0, 2.0 * math.pi), None, "haar_unitary")
    return _finish(m, haar_unitary)


def circle_atoms(angles, weights=None, name="circle_atoms"):
    ang = np.mod(np.atleast_1d(np.asarray(angles, dtype=float)), 2.0 * math.pi)
    if weights is None:
        weights = np.full(ang.shape, 1.0 / ang.size)
    w = np.atleast_1d(np.asarray(weights, dtype=float))
    return Measure1D(ang, w / w.sum(), _empty(), _empty(), CIRCLE,
                     (0.0, 2.0 * math.pi), None, name)


def mixture(parts, name=None):
    """Convex combination of measures given as ``[(weight, measure), ...]``."""
    total = sum(p for p, _ in parts)
    if total <= 0:
        raise ValueError("mixture weights must be positive")
    kinds = {m.support_kind for _, m in parts}
    if len(kinds) != 1:
        raise ValueError("cannot mix real-line and circle measures")
    kind = kinds.pop()
    loc = np.concatenate([m.atom_locs for _, m in parts])
    aw = np.concatenate([p / total * m.atom_weights for p, m in parts])
    nodes = np.concatenate([m.nodes for _, m in parts])
    w = np.concatenate([p / total * m.weights for p, m in parts])
    # merge coincident atoms
    if loc.size:
        uniq, inv_idx = np.unique(loc, return_inverse=True)
        aw = np.bincount(inv_idx, weights=aw)
        loc = uniq
    s = aw.sum() + w.sum()
    aw, w = aw / s, w / s
    lo = min(m.bounds[0] for _, m in parts)
    hi = max(m.bounds[1] for _, m in parts)
    invs = [m.inverse_mean for _, m in parts]
    inv = None
    if kind == REAL and all(v is not None or m.mass_at(0.0) > 0 for v, (_, m) in zip(invs, parts)):
        inv = sum(p / total * m.inv_mean() for p, m in parts)
    label = name or "+".join(f"{p / total:g}*{m.name}" for p, m in parts)
    m = Measure1D(loc, aw, nodes, w, kind, (lo, hi), inv, label)
    return _finish(m, partial(_remix, tuple(parts), name))


def _remix(parts, name, k):
    return mixture([(p, q.with_nodes(k)) for p, q in parts], name)


def from_descriptor(desc, n=None):
    """
    Build a measure from a JSON-style descriptor.

    Examples: ``{"kind": "semicircle", "radius": 2}``,
    ``{"kind": "atoms", "locations": [0, 1], "weights": [0.6, 0.4]}``,
    ``{"kind": "mixture", "components": [{"weight": 0.6, "measure": {...}}, ...]}``.
    """
    if not isinstance(desc, dict) or "kind" not in desc:
        raise ValueError(f"measure descriptor needs a 'kind': {desc!r}")
    kind = desc["kind"]
    real_n = int(desc.get("nodes", n or DEFAULT_NODES))
    circ_n = int(desc.get("nodes", n or DEFAULT_CIRCLE_NODES))
    if kind == "atoms":
        return atoms(desc["locations"], desc.get("weights"))
    if kind == "semicircle":
        return semicircle(desc.get("radius", 2.0), real_n)
    if kind == "free_poisson":
        return free_poisson(desc.get("rate", 1.0), real_n)
    if kind == "uniform":
        return uniform(desc.get("a", 0.0), desc.get("b", 1.0), real_n)
    if kind == "arcsine":
        return arcsine(desc.get("a", -2.0), desc.get("b", 2.0), real_n)
    if kind == "quarter_circle":
        return quarter_circle(desc.get("radius", 2.0), real_n)
    if kind == "haar_unitary":
        return haar_unitary(circ_n)
    if kind == "circle_atoms":
        return circle_atoms(desc["angles"], desc.get("weights"))
    if kind == "mixture":
        parts = [(float(c["weight"]), from_descriptor(c["measure"], n))
                 for c in desc["components"]]
        return mixture(parts)
    raise ValueError(f"unknown measure kind {kind!r}")


# -- scalar transforms -------------------------------------------------------

def _require_real(mu):
    if mu.is_circle:
        raise UnsupportedMeasure("transform defined for real-line measures only")


def scalar_cauchy(mu, z):
    """Cauchy transform ``sum w / (z - t)`` of a real-line measure."""
    _require_real(mu)
    z = complex(z)
    d = z - mu.points
    if z.imag == 0 and np.any(d == 0):
        raise PoleHit(f"z={z} hits a support point")
    return complex(np.sum(mu.masses / d))


def psi_transform(mu, v):
    """``phi((1 - v y)^{-1}) - 1`` evaluated on the discrete rule."""
    _require_real(mu)
    v = complex(v)
    t = mu.points
    den = 1.0 - v * t
    if np.any(np.abs(den) <= 1e-12):
        raise PoleHit(f"v={v} collides with a reciprocal support point")
    # sum w v t / (1 - v t) avoids the cancellation in sum w / (1 - v t) - 1
    val = np.sum(mu.masses * v * t / den)
    return val.real if v.imag == 0 else complex(val)


def eta_over_v(mu, v):
    """
    ``g(v) = eta(v) / v`` with ``eta = psi / (1 + psi)``, for ``v < 0``.

    For a measure on ``[0, inf)`` this is strictly increasing on
    ``(-inf, 0)`` (unless the measure is a point mass) with ``g(0-)``
    equal to the mean.
    """
    _require_real(mu)
    v = float(v)
    if not v < 0:
        raise DomainError("eta_over_v requires v < 0")
    t, w = mu.points, mu.masses
    den = 1.0 - v * t
    one_plus_psi = float(np.sum(w / den))
    return float(np.sum(w * t / den)) / one_plus_psi


def inf_g(mu):
    """Limit of ``eta_over_v`` at ``-inf``: ``1 / phi(1/t)`` or 0."""
    inv = mu.inv_mean()
    return 0.0 if math.isinf(inv) else 1.0 / inv


def invert_g(mu, target, tol=1e-12, max_iter=200):
    """
    Unique ``v < 0`` with ``eta_over_v(mu, v) == target`` by bisection.

    The bracket ``(-V, 0)`` is grown by doubling ``V`` until it contains the
    root.  Bisection stops when the bracket is narrower than ``tol``
    relative to ``max(1, |v|)``.
    """
    _require_real(mu)
    target = float(target)
    mean = mu.mean()
    if target >= mean or target <= inf_g(mu) or mu.is_point_mass():
        raise OutOfRange(f"target {target!r} outside ({inf_g(mu)!r}, {mean!r})")
    lo, hi = -1.0, 0.0
    n = 0
    while eta_over_v(mu, lo) > target:
        hi = lo
        lo *= 2.0
        n += 1
        if n > 1100:
            raise OutOfRange(f"could not bracket target {target!r}")
    for _ in range(max_iter):
        mid = 0.5 * (lo + hi)
        if eta_over_v(mu, mid) > target:
            hi = mid
        else:
            lo = mid
        if hi - lo <= tol * max(1.0, abs(mid)):
            break
    return 0.5 * (lo + hi)
