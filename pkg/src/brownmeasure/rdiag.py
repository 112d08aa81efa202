"""
Brown measure of an R-diagonal element ``x = u a`` from the law of ``a^2``.

The measure is rotation invariant and lives on the annulus
``inner <= |lambda| <= outer``.  Its radial distribution function is

    F(r) = 1 / (1 - r^2 v),   eta_over_v(mu_{a^2}, v) = r^2,

which is the closed form of ``1 + S^{<-1>}(r^{-2})`` in terms of the
monotone function ``g(v) = eta(v) / v``.
"""

from dataclasses import dataclass
import math

import numpy as np

from . import measures
from .measures import Measure1D

__all__ = [
    "RDiagonalSpec",
    "DegenerateMeasure",
    "OutsideAnnulus",
    "radii",
    "radial_cdf",
    "rdiag_cauchy",
    "radial_density",
    "profile",
]


class DegenerateMeasure(ValueError):
    pass


class OutsideAnnulus(ValueError):
    pass


@dataclass(frozen=True)
class RDiagonalSpec:
    """Distribution ``mu_a2`` of ``x x^*`` (a measure on ``[0, inf)``)."""

    mu_a2: Measure1D

    def __post_init__(self):
        mu = self.mu_a2
        if mu.is_circle:
            raise ValueError("mu_a2 must live on the real line")
        pts = mu.points[mu.masses > 0]
        if pts.size == 0 or pts.min() < -1e-14:
            raise ValueError("mu_a2 must be supported on [0, inf)")
        if abs(mu.masses.sum() - 1.0) > 1e-8:
            raise ValueError(f"mu_a2 has mass {mu.masses.sum():.12g}, expected 1")

    @classmethod
    def from_singular_values(cls, mu_a):
        """
        Spec from the law of ``a`` itself (pushforward by ``t -> t^2``).

        The integral of ``t^{-1}`` is then taken from the discrete rule, so
        a divergent one shows up only as a small positive inner radius.
        """
        return cls(Measure1D(mu_a.atom_locs ** 2, mu_a.atom_weights,
                             mu_a.nodes ** 2, mu_a.weights, name=f"{mu_a.name}^2"))


def radii(spec):
    """
    Inner and outer radius of the support annulus.

    ``inner = phi(a^{-2})^{-1/2}`` (0 if the integral diverges or ``a`` has
    a kernel) and ``outer = phi(a^2)^{1/2}``.
    """
    mu = spec.mu_a2
    inv = mu.inv_mean()
    inner = 0.0 if math.isinf(inv) else 1.0 / math.sqrt(inv)
    outer = math.sqrt(mu.mean())
    return min(inner, outer), outer


def radial_cdf(spec, r):
    """Brown measure of the closed disk of radius ``r``."""
    r = float(r)
    if r < 0:
        raise ValueError("r must be non-negative")
    inner, outer = radii(spec)
    if r >= outer:
        return 1.0
    if r <= inner:
        return 0.0
    mu = spec.mu_a2
    if mu.is_point_mass():
        raise DegenerateMeasure("point-mass mu_a2 has an empty open annulus")
    target = r * r
    try:
        v = measures.invert_g(mu, target)
    except measures.OutOfRange:
        # within rounding of the annulus edges
        return 0.0 if target - inner ** 2 < outer ** 2 - target else 1.0
    return min(1.0, max(0.0, 1.0 / (1.0 - target * v)))


def rdiag_cauchy(spec, lam):
    """``G(lambda) = F(|lambda|) / lambda``; ``1/lambda`` beyond the outer radius."""
    lam = complex(lam)
    if lam == 0:
        return 0j
    return radial_cdf(spec, abs(lam)) / lam


def radial_density(spec, r):
    """Planar density ``F'(r) / (2 pi r)`` at radius ``r`` inside the annulus."""
    r = float(r)
    inner, outer = radii(spec)
    if not inner < r < outer:
        raise OutsideAnnulus(f"r={r} outside ({inner}, {outer})")
    h = min(1e-5, (outer - inner) / 1000)
    lo, hi = max(r - h, 0.0), r + h
    slope = (radial_cdf(spec, hi) - radial_cdf(spec, lo)) / (hi - lo)
    return max(0.0, slope / (2 * math.pi * r))


def profile(spec, rs):
    """Rows ``(r, cdf, density)``; density is 0 off the open annulus."""
    out = []
    for r in np.asarray(rs, dtype=float):
        try:
            dens = radial_density(spec, r)
        except OutsideAnnulus:
            dens = 0.0
        out.append((float(r), radial_cdf(spec, r), dens))
    return out
