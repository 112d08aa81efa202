"""
Matrix-valued Cauchy and F transforms of one pencil summand.

A summand is ``constant + E x + E^* x^*`` for a single normal variable ``x``.
Because ``x`` is normal, the conditional expectation onto the matrix
coefficients is an integral over the spectral measure of ``x``:

    G(b) = int (b - constant - E v - E^* conj(v))^{-1} dmu(v)

with ``v`` real for selfadjoint variables and ``v = exp(i theta)`` for
unitary ones.  The integral is evaluated with the quadrature rule carried by
the :class:`~brownmeasure.measures.Measure1D`.
"""

from dataclasses import dataclass

import numpy as np

from . import measures
from .mat import SingularMatrix, batch_inv, imag_part, invert

__all__ = [
    "VariableModel",
    "Summand",
    "NotInUpperHalfPlane",
    "SingularResolvent",
    "SingularCauchy",
    "selfadjoint",
    "haar_unitary",
    "unitary",
    "model_from_descriptor",
    "ov_cauchy",
    "ov_F",
]


class NotInUpperHalfPlane(ValueError):
    pass


class SingularResolvent(ArithmeticError):
    pass


class SingularCauchy(ArithmeticError):
    pass


SELFADJOINT = "selfadjoint"
UNITARY = "unitary"


@dataclass(frozen=True)
class VariableModel:
    """Normal variable given by its spectral measure (real line or angles)."""

    kind: str
    measure: measures.Measure1D

    def __post_init__(self):
        if self.kind == SELFADJOINT and self.measure.is_circle:
            raise ValueError("selfadjoint variable needs a real-line measure")
        if self.kind == UNITARY and not self.measure.is_circle:
            raise ValueError("unitary variable needs a measure on angles")
        if self.kind not in (SELFADJOINT, UNITARY):
            raise ValueError(f"variables must be normal (selfadjoint or unitary), got {self.kind!r}")

    @property
    def spectrum(self):
        """Support points as complex numbers and their masses."""
        pts = self.measure.points
        if self.kind == UNITARY:
            pts = np.exp(1j * pts)
        return pts.astype(complex), self.measure.masses

    def with_nodes(self, n):
        return VariableModel(self.kind, self.measure.with_nodes(n))

    def norm(self):
        pts, _ = self.spectrum
        return float(np.abs(pts).max())

    def describe(self):
        return {"kind": self.kind, **self.measure.describe()}


def selfadjoint(mu):
    return VariableModel(SELFADJOINT, mu)


def haar_unitary(n=measures.DEFAULT_CIRCLE_NODES):
    return VariableModel(UNITARY, measures.haar_unitary(n))


def unitary(mu_angles):
    return VariableModel(UNITARY, mu_angles)


def model_from_descriptor(desc, n=None):
    """
    Variable model from a descriptor.

    ``haar_unitary`` and ``circle_atoms`` give unitary variables; any
    real-line measure kind gives a selfadjoint variable.  A ``"model"`` key
    (``"selfadjoint"`` / ``"unitary"``) may be given explicitly.
    """
    mu = measures.from_descriptor(desc, n)
    kind = desc.get("model", UNITARY if mu.is_circle else SELFADJOINT)
    return VariableModel(kind, mu)


class Summand:
    """
    One term ``constant + E x + E^* x^*`` of a split pencil.

    Parameters
    ----------
    constant : array_like
        Hermitian ``m x m`` matrix.
    coeff : array_like
        ``m x m`` matrix ``E``.
    model : VariableModel or None
        Distribution of ``x``; required for evaluating transforms.
    var : int
        Index of the variable (informational).
    """

    def __init__(self, constant, coeff, model=None, var=0):
        c = np.array(constant, dtype=complex)
        e = np.array(coeff, dtype=complex)
        if c.shape != e.shape or c.ndim != 2 or c.shape[0] != c.shape[1]:
            raise ValueError("constant and coefficient must be square and of equal size")
        if np.abs(c - c.conj().T).max(initial=0.0) > 1e-12:
            raise ValueError("summand constant is not hermitian")
        c.setflags(write=False)
        e.setflags(write=False)
        self.constant, self.coeff, self.model, self.var = c, e, model, var
        self.dim = c.shape[0]
        self._stack = None

    def pencil(self, v):
        """Value of the summand at the scalar spectral point ``v``."""
        return self.constant + self.coeff * v + self.coeff.conj().T * np.conj(v)

    def _values(self):
        # (n, m, m) stack of summand values over the quadrature points
        if self._stack is None:
            if self.model is None:
                raise ValueError("summand has no variable model")
            pts, w = self.model.spectrum
            e, eh = self.coeff, self.coeff.conj().T
            stack = (self.constant[None] + pts[:, None, None] * e[None]
                     + np.conj(pts)[:, None, None] * eh[None])
            keep = w > 0
            self._stack = (stack[keep], w[keep])
        return self._stack

    def cauchy(self, b):
        """Unchecked ``G(b)``; the solvers call this in their inner loops."""
        stack, w = self._values()
        res = batch_inv(b[None] - stack)
        return np.tensordot(w, res, axes=1)

    def cauchy_jac(self, b):
        """
        ``G(b)`` and its derivative as an ``m^2 x m^2`` matrix acting on
        row-major ``vec``: ``dG[D] = -E[(b - X)^{-1} D (b - X)^{-1}]``.
        """
        stack, w = self._values()
        res = batch_inv(b[None] - stack)
        g = np.tensordot(w, res, axes=1)
        m = self.dim
        jac = -np.einsum("k,kil,kmj->ijlm", w, res, res, optimize=True).reshape(m * m, m * m)
        return g, jac

    def __call__(self, b):
        return self.cauchy(b)

    def __repr__(self):
        return f"Summand(var={self.var}, dim={self.dim}, model={self.model and self.model.describe()})"


def check_upper(b, dim=None):
    b = np.asarray(b, dtype=complex)
    if b.ndim != 2 or b.shape[0] != b.shape[1] or (dim is not None and b.shape[0] != dim):
        raise ValueError(f"argument has shape {b.shape}, expected {(dim, dim)}")
    lo = float(np.linalg.eigvalsh(imag_part(b))[0])
    if not lo > 0:
        raise NotInUpperHalfPlane(f"Im b has smallest eigenvalue {lo:.3e}")
    return b


def ov_cauchy(s, b):
    """Matrix-valued Cauchy transform of the summand ``s`` at ``b`` (``Im b > 0``)."""
    b = check_upper(b, s.dim)
    g = s.cauchy(b)
    if not np.all(np.isfinite(g)):
        raise SingularResolvent("non-finite resolvent at a quadrature node")
    return g


def ov_F(s, b):
    """Reciprocal ``G(b)^{-1}``; its imaginary part dominates ``Im b``."""
    g = ov_cauchy(s, b)
    try:
        return invert(g)
    except SingularMatrix as exc:
        raise SingularCauchy(str(exc)) from exc
