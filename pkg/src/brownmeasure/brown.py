"""
Brown measure of a polynomial in free normal variables.

For each grid point ``lam`` the hermitized, linearized polynomial is
evaluated at ``b = [[i eps, lam], [conj(lam), i eps]] (+) i delta``; the
(2,1) entry of the resulting matrix-valued Cauchy transform is the
regularized Cauchy transform ``G_eps(lam)`` and the regularized density is
``(1/pi) dG/d(conj lam)``, taken by finite differences.
"""

from dataclasses import dataclass, field
import logging
import math
import os

import numpy as np

from . import ncpoly
from .subord import (DivergedFromHalfPlane, FoldError, NoConvergence,
                     SolverOptions, fold_sum)

__all__ = [
    "LambdaGrid",
    "DensityGrid",
    "BrownPipeline",
    "SweepResult",
    "corner_transform",
    "density_grid",
    "epsilon_sweep",
    "atom_mass",
    "wirtinger_density",
    "laplacian_density",
    "DEFAULT_EPS_SCHEDULE",
]

log = logging.getLogger(__name__)

DEFAULT_EPS_SCHEDULE = (1e-1, 3e-2, 1e-2, 3e-3, 1e-3)
DELTA_RATIO = 1e-2


@dataclass(frozen=True)
class LambdaGrid:
    re_min: float
    re_max: float
    im_min: float
    im_max: float
    nx: int
    ny: int

    def __post_init__(self):
        if not (self.re_min < self.re_max and self.im_min < self.im_max):
            raise ValueError("grid bounds must satisfy min < max")
        if self.nx < 3 or self.ny < 3:
            raise ValueError("grid needs at least 3 nodes per axis")

    @classmethod
    def parse(cls, text):
        """``"reMin:reMax:imMin:imMax:NXxNY"``, e.g. ``"-3:3:-1:1:121x41"``."""
        try:
            a, b, c, d, n = text.split(":")
            nx, ny = n.lower().split("x")
            return cls(float(a), float(b), float(c), float(d), int(nx), int(ny))
        except ValueError as exc:
            raise ValueError(f"bad grid spec {text!r}: {exc}") from None

    @classmethod
    def square(cls, half_width, n):
        return cls(-half_width, half_width, -half_width, half_width, n, n)

    @property
    def re(self):
        return np.linspace(self.re_min, self.re_max, self.nx)

    @property
    def im(self):
        return np.linspace(self.im_min, self.im_max, self.ny)

    @property
    def hx(self):
        return (self.re_max - self.re_min) / (self.nx - 1)

    @property
    def hy(self):
        return (self.im_max - self.im_min) / (self.ny - 1)

    @property
    def cell_area(self):
        return self.hx * self.hy

    def nodes(self):
        """Complex node array of shape ``(ny, nx)``; rows run along the real axis."""
        return self.re[None, :] + 1j * self.im[:, None]

    def spec(self):
        return f"{self.re_min:g}:{self.re_max:g}:{self.im_min:g}:{self.im_max:g}:{self.nx}x{self.ny}"


@dataclass
class DensityGrid:
    grid: LambdaGrid
    epsilon: float
    g_values: np.ndarray
    g11_values: np.ndarray
    density: np.ndarray
    converged: np.ndarray
    total_mass: float
    metadata: dict = field(default_factory=dict)

    @property
    def mass_mask(self):
        return self.converged & np.isfinite(self.density)

    def rows(self):
        """CSV rows in row-major node order."""
        nodes = self.grid.nodes()
        for iy in range(self.grid.ny):
            for ix in range(self.grid.nx):
                lam, g, g11 = nodes[iy, ix], self.g_values[iy, ix], self.g11_values[iy, ix]
                yield (lam.real, lam.imag, self.epsilon, g.real, g.imag, g11.real, g11.imag,
                       self.density[iy, ix], int(bool(self.converged[iy, ix])))

    CSV_HEADER = ("re_lambda", "im_lambda", "epsilon", "g_re", "g_im",
                  "g11_re", "g11_im", "density", "converged")

    def to_csv(self, fh):
        fh.write(",".join(self.CSV_HEADER) + "\n")
        for row in self.rows():
            fh.write(",".join(_fmt(v) for v in row) + "\n")

    @classmethod
    def read_csv(cls, path, epsilon=None):
        """
        Grid written by :meth:`to_csv`.  Files holding several ``eps`` need
        ``epsilon`` to pick one block.
        """
        data = np.loadtxt(path, delimiter=",", skiprows=1, ndmin=2)
        eps_vals = np.unique(data[:, 2])
        if epsilon is None:
            if eps_vals.size != 1:
                raise ValueError(f"file holds eps values {eps_vals.tolist()}; choose one")
            epsilon = eps_vals[0]
        data = data[np.isclose(data[:, 2], epsilon, rtol=1e-12, atol=0)]
        if not data.size:
            raise ValueError(f"no rows with eps={epsilon}")
        re, im = np.unique(data[:, 0]), np.unique(data[:, 1])
        nx, ny = re.size, im.size
        if nx * ny != data.shape[0]:
            raise ValueError("CSV rows do not form a full grid")
        grid = LambdaGrid(re[0], re[-1], im[0], im[-1], nx, ny)
        col = lambda k: data[:, k].reshape(ny, nx)
        conv = col(8).astype(bool)
        dens = col(7)
        mass = float(dens[conv & np.isfinite(dens)].sum() * grid.cell_area)
        return cls(grid, float(epsilon), col(3) + 1j * col(4), col(5) + 1j * col(6),
                   dens, conv, mass, {"source": str(path)})


def _fmt(v):
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    return repr(float(v))


class BrownPipeline:
    """
    Hermitized, linearized polynomial together with its variable models.

    Parameters
    ----------
    polynomial : NCPolynomial or str
    models : dict
        Variable index to :class:`~brownmeasure.ovcauchy.VariableModel`.
    opts : SolverOptions
    delta_ratio : float
        Off-corner regularization ``delta = delta_ratio * eps`` (pencils of
        size > 2 only).
    """

    def __init__(self, polynomial, models, opts=SolverOptions(), delta_ratio=DELTA_RATIO):
        if isinstance(polynomial, str):
            polynomial = ncpoly.parse_polynomial(polynomial)
        self.polynomial = polynomial
        self.linearization = ncpoly.linearize_polynomial(polynomial)
        missing = [j for j in self.linearization.variables if j not in models]
        if missing:
            raise ValueError(f"no model for variables {missing}")
        self.models = dict(models)
        self.summands = ncpoly.split_by_variable(self.linearization, self.models)
        self.opts = opts
        self.delta_ratio = delta_ratio
        self.dim = self.linearization.dim

    def argument(self, lam, eps, delta=None):
        if delta is None:
            delta = self.delta_ratio * eps
        b = np.zeros((self.dim, self.dim), dtype=complex)
        b[0, 0] = b[1, 1] = 1j * eps
        b[0, 1] = lam
        b[1, 0] = np.conj(lam)
        idx = np.arange(2, self.dim)
        b[idx, idx] = 1j * delta
        return b

    def solve(self, lam, eps, delta=None, w0=None):
        """Full ``G`` matrix at ``lam`` plus the subordination result."""
        if not eps > 0:
            raise ValueError("eps must be positive")
        if delta is not None and not 0 <= delta <= eps / 10:
            raise ValueError("need 0 <= delta <= eps/10")
        b = self.argument(lam, eps, delta)
        try:
            try:
                res = fold_sum(self.summands, b, self.opts, return_result=True, w0=w0)
            except FoldError:
                if w0 is None:
                    raise
                # warm starts from across the support edge can miss the basin
                res = fold_sum(self.summands, b, self.opts, return_result=True)
        except FoldError as exc:
            cause = exc.cause
            if isinstance(cause, NoConvergence):
                raise NoConvergence(cause.residual, cause.iterations, (lam, eps)) from exc
            raise
        return res

    def corner(self, lam, eps, delta=None, w0=None):
        res = self.solve(lam, eps, delta, w0)
        return res.g_sum[:2, :2], res

    def max_norm(self):
        """Crude bound on the operator norm of the polynomial."""
        norms = {j: m.norm() for j, m in self.models.items()}
        total = 0.0
        for c, w in self.polynomial.terms:
            total += abs(c) * math.prod(norms[l.var] for l in w)
        return total


def corner_transform(L, models, lam, eps, delta=None, opts=SolverOptions()):
    """
    ``(g21, g11)`` at ``lam``: regularized Cauchy transform and the (1,1) entry.

    ``L`` is an :class:`~brownmeasure.ncpoly.NCPolynomial` (or its text);
    ``delta`` defaults to ``eps / 100``.
    """
    pipe = L if isinstance(L, BrownPipeline) else BrownPipeline(L, models, opts)
    g, _ = pipe.corner(lam, eps, delta)
    return complex(g[1, 0]), complex(g[0, 0])


# -- finite differences ------------------------------------------------------

def wirtinger_density(g, hx, hy):
    """
    ``(1/pi) dG/d(conj lam)`` with ``d/d(conj lam) = (d/du + i d/dv) / 2``.

    Centred differences inside, second-order one-sided stencils on the
    edges.  Returns the complex field; its real part is the density.
    """
    du = np.gradient(g, hx, axis=1, edge_order=2)
    dv = np.gradient(g, hy, axis=0, edge_order=2)
    return 0.5 * (du + 1j * dv) / math.pi


def laplacian_density(g, hx, hy):
    """
    Density as ``Laplacian(log Delta_eps) / (2 pi)``.

    The potential is rebuilt from ``G = d/du log Delta - i d/dv log Delta``
    by trapezoid integration along the first row and then up each column.
    Cross-check for :func:`wirtinger_density`; needs a NaN-free field.
    """
    from scipy.integrate import cumulative_trapezoid

    du_phi = g.real
    dv_phi = -g.imag
    row0 = cumulative_trapezoid(du_phi[0], dx=hx, initial=0.0)
    phi = row0[None, :] + cumulative_trapezoid(dv_phi, dx=hy, axis=0, initial=0.0)
    lap = (np.gradient(np.gradient(phi, hx, axis=1, edge_order=2), hx, axis=1, edge_order=2)
           + np.gradient(np.gradient(phi, hy, axis=0, edge_order=2), hy, axis=0, edge_order=2))
    return lap / (2.0 * math.pi)


# -- grid sweep --------------------------------------------------------------

def _solve_row(pipe, row_nodes, eps, delta, warm_start=True):
    n = row_nodes.size
    g21 = np.full(n, np.nan + 0j)
    g12 = np.full(n, np.nan + 0j)
    g11 = np.full(n, np.nan + 0j)
    conv = np.zeros(n, dtype=bool)
    iters = np.zeros(n, dtype=int)
    resid = np.full(n, np.nan)
    w0 = None
    for i, lam in enumerate(row_nodes):
        try:
            res = pipe.solve(lam, eps, delta, w0=w0)
        except (NoConvergence, DivergedFromHalfPlane, FoldError) as exc:
            log.debug("node %s failed: %s", lam, exc)
            w0 = None
            continue
        g = res.g_sum
        g21[i], g12[i], g11[i] = g[1, 0], g[0, 1], g[0, 0]
        conv[i] = True
        iters[i] = res.iterations
        resid[i] = res.residual
        w0 = res.omega2 if warm_start else None
    return g21, g12, g11, conv, iters, resid


def _row_task(args):
    pipe, row, eps, delta, warm = args
    return _solve_row(pipe, row, eps, delta, warm)


def default_workers():
    return max(1, int(os.environ.get("BROWN_WORKERS", "1")))


def density_grid(L, models, grid, eps, opts=SolverOptions(), delta=None,
                 method="wirtinger", workers=None, warm_start=True):
    """
    Regularized Brown density on ``grid`` at regularization ``eps``.

    Rows of the grid are independent work items; within a row each solve
    starts from the previous node's subordination point, so the output does
    not depend on the number of workers.
    """
    if not eps > 0:
        raise ValueError("eps must be positive")
    pipe = L if isinstance(L, BrownPipeline) else BrownPipeline(L, models, opts)
    if max(grid.hx, grid.hy) > eps:
        log.warning("grid spacing %.3g exceeds eps=%.3g; density near the support "
                    "edge is under-resolved", max(grid.hx, grid.hy), eps)
    nodes = grid.nodes()
    workers = default_workers() if workers is None else workers
    tasks = [(pipe, nodes[iy], eps, delta, warm_start) for iy in range(grid.ny)]
    if workers > 1:
        from concurrent.futures import ProcessPoolExecutor
        with ProcessPoolExecutor(max_workers=workers) as ex:
            rows = list(ex.map(_row_task, tasks))
    else:
        rows = [_row_task(t) for t in tasks]
    g21 = np.array([r[0] for r in rows])
    g12 = np.array([r[1] for r in rows])
    g11 = np.array([r[2] for r in rows])
    conv = np.array([r[3] for r in rows])
    iters = np.array([r[4] for r in rows])
    resid = np.array([r[5] for r in rows])

    if method == "wirtinger":
        field_ = wirtinger_density(g21, grid.hx, grid.hy)
        dens = field_.real
        imag_dev = float(np.nanmax(np.abs(field_.imag))) if np.isfinite(field_.imag).any() else math.nan
    elif method == "laplacian":
        dens = laplacian_density(g21, grid.hx, grid.hy)
        imag_dev = math.nan
    else:
        raise ValueError(f"unknown density method {method!r}")
    mask = conv & np.isfinite(dens)
    mass = float(dens[mask].sum() * grid.cell_area)
    sym = np.abs(g21 - np.conj(g12))
    meta = {
        "method": method,
        "delta": pipe.delta_ratio * eps if delta is None else delta,
        "pencil_dim": pipe.dim,
        "failed_nodes": int((~conv).sum()),
        "max_iterations": int(iters.max(initial=0)),
        "mean_iterations": float(iters[conv].mean()) if conv.any() else math.nan,
        "max_residual": float(np.nanmax(resid)) if conv.any() else math.nan,
        "max_conjugate_asymmetry": float(np.nanmax(sym)) if conv.any() else math.nan,
        "max_density_imag": imag_dev,
        "g12_values": g12,
        "residuals": resid,
    }
    return DensityGrid(grid, eps, g21, g11, dens, conv, mass, meta)


# -- epsilon limits ----------------------------------------------------------

@dataclass
class SweepResult:
    epsilons: tuple
    values: tuple
    last: complex
    estimate: complex
    stable: bool
    orders: tuple = ()


def extrapolate(eps_list, values, min_order=1.5, floor=1e-12):
    """
    Limit estimate from a decreasing ``eps`` schedule.

    The estimate adds the geometric tail implied by the last two
    differences (Aitken).  The stability flag requires every difference to
    shrink at least like ``eps**min_order``: smooth off-support points
    converge like ``eps**2``, while points on or inside a two-dimensional
    support converge at best linearly.
    """
    vals = np.asarray(values, dtype=complex)
    eps = np.asarray(eps_list, dtype=float)
    diffs = np.diff(vals)
    scale = max(1.0, float(np.abs(vals).max()))
    orders = []
    stable = True
    for k in range(len(diffs) - 1):
        d0, d1 = abs(diffs[k]), abs(diffs[k + 1])
        if d1 <= floor * scale:
            orders.append(math.inf)
            continue
        if d0 <= floor * scale:
            orders.append(-math.inf)
            stable = False
            continue
        p = math.log(d1 / d0) / math.log(eps[k + 2] / eps[k + 1])
        orders.append(p)
        if p < min_order:
            stable = False
    last = complex(vals[-1])
    est = last
    d1, d2 = diffs[-2], diffs[-1]
    if abs(d1) > floor * scale and abs(d2) > floor * scale:
        rho = d2 / d1
        if abs(rho) < 1:
            est = last + d2 * rho / (1 - rho)
    return est, stable, tuple(orders)


def epsilon_sweep(L, models, lam, eps_list=DEFAULT_EPS_SCHEDULE, opts=SolverOptions()):
    """``G_eps(lam)`` along a decreasing schedule with a limit estimate."""
    eps_list = tuple(float(e) for e in eps_list)
    if len(eps_list) < 3 or any(b >= a for a, b in zip(eps_list, eps_list[1:])):
        raise ValueError("eps_list must be strictly decreasing with at least 3 entries")
    pipe = L if isinstance(L, BrownPipeline) else BrownPipeline(L, models, opts)
    vals = []
    w0 = None
    for eps in eps_list:
        res = pipe.solve(lam, eps, w0=w0)
        vals.append(complex(res.g_sum[1, 0]))
    est, stable, orders = extrapolate(eps_list, vals)
    return SweepResult(eps_list, tuple(vals), vals[-1], est, stable, orders)


def atom_diagnostics(L, models, lam, eps_list, opts=SolverOptions()):
    """Values of ``i eps g11`` and ``i eps g21`` along the schedule."""
    eps_list = tuple(float(e) for e in eps_list)
    if len(eps_list) < 3 or any(b >= a for a, b in zip(eps_list, eps_list[1:])):
        raise ValueError("eps_list must be strictly decreasing with at least 3 entries")
    pipe = L if isinstance(L, BrownPipeline) else BrownPipeline(L, models, opts)
    diag, off = [], []
    for eps in eps_list:
        g = pipe.solve(lam, eps).g_sum
        diag.append(1j * eps * g[0, 0])
        off.append(1j * eps * g[1, 0])
    est, stable, orders = extrapolate(eps_list, diag)
    return {"mass": float(est.real), "values": diag, "offdiag": off,
            "stable": stable, "orders": orders}


def atom_mass(L, models, lam, eps_list=DEFAULT_EPS_SCHEDULE, opts=SolverOptions()):
    """
    Brown-measure atom at ``lam``: limit of ``i eps g11(lam, eps)``.

    Also checks that ``i eps g21`` tends to zero.
    """
    d = atom_diagnostics(L, models, lam, eps_list, opts)
    if abs(d["offdiag"][-1]) > 10 * eps_list[-1] ** 0.5:
        log.warning("off-diagonal limit i*eps*g21=%s not small at lam=%s",
                    d["offdiag"][-1], lam)
    return d["mass"]
