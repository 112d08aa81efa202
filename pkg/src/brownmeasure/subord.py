"""
Matrix-valued free additive convolution by subordination.

For free summands with Cauchy transforms ``G1``, ``G2`` and
``h_j(w) = G_j(w)^{-1} - w``, the subordination functions satisfy

    omega2 = b + h1(omega1),   omega1 = b + h2(omega2),
    G_sum(b) = G1(omega1) = G2(omega2) = (omega1 + omega2 - b)^{-1}.

``omega2`` is the attracting fixed point of ``w -> b + h1(b + h2(w))`` on the
matricial upper half-plane; it is found by damped Picard iteration.
"""

from dataclasses import dataclass, field
import threading

import numpy as np

from .mat import imag_part

__all__ = [
    "SolverOptions",
    "SubordResult",
    "NoConvergence",
    "DivergedFromHalfPlane",
    "FoldError",
    "free_add",
    "fold_sum",
    "FoldedOracle",
]


class NoConvergence(RuntimeError):
    def __init__(self, residual, iterations, where=None):
        self.residual, self.iterations, self.where = residual, iterations, where
        msg = f"no convergence after {iterations} iterations (residual {residual:.3e})"
        if where is not None:
            msg += f" at {where}"
        super().__init__(msg)


class DivergedFromHalfPlane(RuntimeError):
    pass


class FoldError(RuntimeError):
    def __init__(self, position, cause):
        self.position, self.cause = position, cause
        super().__init__(f"fold step {position}: {cause}")


@dataclass(frozen=True)
class SolverOptions:
    """
    Tuning of the subordination iteration.

    ``tol`` bounds the Frobenius step ``||map(w) - w||`` (scaled by
    ``max(1, ||w||)``); ``consistency_tol`` bounds the two-sided check
    ``||G1(omega1) - G2(omega2)||`` after convergence.
    """

    tol: float = 1e-11
    max_iter: int = 2000
    damping: float = 0.5
    min_damping: float = 1.0 / 64
    consistency_tol: float = 1e-9
    memoize: bool = True
    half_plane_check: bool = True
    newton: bool = True

    @classmethod
    def from_dict(cls, d):
        known = {k: d[k] for k in cls.__dataclass_fields__ if k in d}
        unknown = set(d) - set(known)
        if unknown:
            raise ValueError(f"unknown solver options: {sorted(unknown)}")
        return cls(**known)


@dataclass
class SubordResult:
    omega1: np.ndarray
    omega2: np.ndarray
    g_sum: np.ndarray
    iterations: int
    residual: float
    extras: dict = field(default_factory=dict)


def _hmap(oracle, w):
    return np.linalg.inv(oracle(w)) - w


def _hmap_jac(oracle, w):
    """``h(w) = G(w)^{-1} - w`` and its ``vec`` derivative ``-(F (x) F^T) dG - I``."""
    g, dg = oracle.cauchy_jac(w)
    f = np.linalg.inv(g)
    m = f.shape[0]
    return f - w, -np.kron(f, f.T) @ dg - np.eye(m * m)


def _has_jac(oracle):
    return callable(getattr(oracle, "cauchy_jac", None))


def _min_eig(h):
    return float(np.linalg.eigvalsh(h)[0])


class _Map:
    """``w -> b + h1(b + h2(w))`` evaluated together with its Jacobian."""

    def __init__(self, c1, c2, b, newton):
        self.c1, self.c2, self.b = c1, c2, b
        self.newton = newton and _has_jac(c1) and _has_jac(c2)

    def __call__(self, w):
        if not self.newton:
            omega1 = self.b + _hmap(self.c2, w)
            return self.b + _hmap(self.c1, omega1), None
        h2, d2 = _hmap_jac(self.c2, w)
        omega1 = self.b + h2
        h1, d1 = _hmap_jac(self.c1, omega1)
        return self.b + h1, d1 @ d2 - np.eye(d1.shape[0])


def free_add(c1, c2, b, opts=SolverOptions(), w0=None):
    """
    Subordination solve for ``G_{1+2}(b)``.

    Damped Picard iteration for the fixed point ``omega2``.  When both
    transforms provide ``cauchy_jac`` and ``opts.newton`` is set, Newton
    steps on ``map(w) - w`` are tried first and accepted only if they keep
    ``Im w >= Im b / 2`` and reduce the step norm; Picard near the support
    contracts at a rate ``1 - O(Im b)`` and would otherwise dominate the
    run time.

    Parameters
    ----------
    c1, c2 : callable
        Matrix-valued Cauchy transforms ``b -> G_j(b)`` of two free
        summands.
    b : numpy.ndarray
        Point of the matricial upper half-plane.
    opts : SolverOptions
    w0 : numpy.ndarray, optional
        Starting point for ``omega2``; defaults to ``b + i``.

    Returns
    -------
    SubordResult
    """
    b = np.asarray(b, dtype=complex)
    m = b.shape[0]
    eye = np.eye(m)
    floor = 0.5 * imag_part(b)
    fmap = _Map(c1, c2, b, opts.newton)

    def inside(w):
        if not opts.half_plane_check:
            return True
        return _min_eig(imag_part(w) - floor) >= -1e-12 * max(1.0, float(np.abs(w).max()))

    def evaluate(w):
        nxt, jac = fmap(w)
        step = nxt - w
        res = float(np.linalg.norm(step)) / max(1.0, float(np.linalg.norm(w)))
        if not np.isfinite(res):
            raise DivergedFromHalfPlane("iterate became non-finite")
        return step, jac, res

    w = b + 1j * eye if w0 is None else np.array(w0, dtype=complex)
    step, jac, res = evaluate(w)
    tau = opts.damping
    prev = np.inf
    newton_steps = 0
    it = 0
    for it in range(1, opts.max_iter + 1):
        if res <= opts.tol:
            w = w + step
            break
        moved = False
        if jac is not None:
            try:
                delta = np.linalg.solve(jac, -step.reshape(-1)).reshape(m, m)
            except np.linalg.LinAlgError:
                delta = None
            lam = 1.0
            while delta is not None and lam >= 1.0 / 16:
                cand = w + lam * delta
                if inside(cand):
                    try:
                        c_step, c_jac, c_res = evaluate(cand)
                    except (DivergedFromHalfPlane, np.linalg.LinAlgError):
                        c_res = np.inf
                    if c_res < res:
                        w, step, jac, res = cand, c_step, c_jac, c_res
                        moved = True
                        newton_steps += 1
                        break
                lam *= 0.5
        if moved:
            continue
        if res > prev and tau > opts.min_damping:
            tau *= 0.5
        prev = res
        w = w + tau * step
        if not inside(w):
            raise DivergedFromHalfPlane(
                f"iterate left Im w >= Im b / 2 at iteration {it}")
        step, jac, res = evaluate(w)
    else:
        raise NoConvergence(res, it)

    omega2 = w
    omega1 = b + _hmap(c2, omega2)
    g1 = c1(omega1)
    g2 = c2(omega2)
    g_sum = g1
    scale = max(1.0, float(np.linalg.norm(g_sum)))
    consistency = float(np.linalg.norm(g1 - g2)) / scale
    prime = float(np.linalg.norm(np.linalg.inv(omega1 + omega2 - b) - g_sum)) / scale
    residual = max(consistency, prime)
    if residual > opts.consistency_tol:
        raise NoConvergence(residual, it, "consistency check")
    return SubordResult(omega1, omega2, g_sum, it, residual,
                        {"consistency": consistency, "subord_prime": prime,
                         "damping": tau, "newton_steps": newton_steps})


def _key(b):
    return np.round(np.asarray(b, dtype=complex).view(float), 14).tobytes()


class FoldedOracle:
    """
    Cauchy transform of a partial sum ``x_1 + ... + x_j`` as a callable.

    Inner solutions are memoized by argument and the last inner ``omega2``
    is reused as the next starting point.
    """

    def __init__(self, left, right, opts, position):
        self.left, self.right, self.opts, self.position = left, right, opts, position
        self._cache = {}
        self._lock = threading.Lock()
        self._last = None
        self.calls = 0

    def solve(self, b):
        key = _key(b) if self.opts.memoize else None
        if key is not None:
            with self._lock:
                hit = self._cache.get(key)
            if hit is not None:
                return hit
        self.calls += 1
        try:
            res = free_add(self.left, self.right, b, self.opts, w0=self._last_start(b))
        except (NoConvergence, DivergedFromHalfPlane) as exc:
            # a warm start can fall outside the basin; retry cold once
            try:
                res = free_add(self.left, self.right, b, self.opts)
            except (NoConvergence, DivergedFromHalfPlane):
                raise FoldError(self.position, exc) from exc
        self._last = res.omega2
        if key is not None:
            with self._lock:
                self._cache[key] = res
        return res

    def _last_start(self, b):
        if self._last is None or self._last.shape != b.shape:
            return None
        return self._last

    def __call__(self, b):
        return self.solve(b).g_sum

    def cauchy_jac(self, b):
        """
        ``G`` of the partial sum and its derivative by implicit
        differentiation of ``omega2 = b + h1(b + h2(omega2))``.
        """
        res = self.solve(b)
        m = res.g_sum.shape[0]
        eye = np.eye(m * m)
        _, d2 = _hmap_jac(self.right, res.omega2)
        _, d1 = _hmap_jac(self.left, res.omega1)
        _, dg2 = self.right.cauchy_jac(res.omega2)
        domega = -np.linalg.solve(d1 @ d2 - eye, eye + d1)
        return res.g_sum, dg2 @ domega


def fold_sum(oracles, b, opts=SolverOptions(), return_result=False, w0=None):
    """
    ``G`` of the sum of free summands by a left fold of :func:`free_add`.

    With a single oracle this is just ``oracles[0](b)``.  ``w0`` seeds the
    outermost iteration; inner partial sums are solved through
    :class:`FoldedOracle`.
    """
    oracles = list(oracles)
    if not oracles:
        raise ValueError("need at least one summand")
    b = np.asarray(b, dtype=complex)
    if len(oracles) == 1:
        g = oracles[0](b)
        if return_result:
            return SubordResult(b, b, g, 0, 0.0)
        return g
    acc = oracles[0]
    for pos in range(1, len(oracles) - 1):
        acc = FoldedOracle(acc, oracles[pos], opts, pos)
    try:
        res = free_add(acc, oracles[-1], b, opts, w0=w0)
    except (NoConvergence, DivergedFromHalfPlane) as exc:
        raise FoldError(len(oracles) - 1, exc) from exc
    return res if return_result else res.g_sum
