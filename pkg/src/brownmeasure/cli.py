"""
Command-line frontend.

Subcommands ``brown``, ``rdiag``, ``elliptic``, ``rmt`` and ``compare`` write
CSV outputs next to a JSON manifest (config hash, library versions, output
hashes, node failure counts).  Exit codes: 0 success, 2 invalid input,
3 solver failure above the node budget, 4 I/O error.
"""

import argparse
import contextlib
import hashlib
import io
import json
import logging
import os
import platform
import sys
import tempfile

import numpy as np

from . import __version__, brown, elliptic, measures, ncpoly, rdiag, rmt
from .ovcauchy import model_from_descriptor
from .subord import NoConvergence, SolverOptions

log = logging.getLogger("brownmeasure.cli")

EXIT_OK, EXIT_INVALID, EXIT_SOLVER, EXIT_IO = 0, 2, 3, 4

# positional parameters of the inline ``kind:arg:arg`` model syntax
INLINE_ARGS = {
    "semicircle": ("radius",),
    "free_poisson": ("rate",),
    "uniform": ("a", "b"),
    "arcsine": ("a", "b"),
    "quarter_circle": ("radius",),
    "haar_unitary": ("nodes",),
}


class UsageError(ValueError):
    pass


class SolverBudgetExceeded(RuntimeError):
    pass


# -- parsing helpers ---------------------------------------------------------

def _floats(text):
    return [float(t) for t in text.split(",") if t.strip()]


def parse_measure(text):
    """
    Measure descriptor from inline text or JSON.

    Inline forms: ``semicircle:2``, ``uniform:1:2``, ``haar_unitary``,
    ``atoms:0,1@0.6,0.4``, ``circle_atoms:0,3.14``.  Text starting with
    ``{`` is read as a JSON descriptor, ``@path`` as a JSON file.
    """
    text = text.strip()
    if text.startswith("@"):
        with open(text[1:], encoding="utf-8") as fh:
            return json.load(fh)
    if text.startswith("{"):
        return json.loads(text)
    kind, _, rest = text.partition(":")
    if kind in ("atoms", "circle_atoms"):
        locs, _, weights = rest.partition("@")
        key = "locations" if kind == "atoms" else "angles"
        desc = {"kind": kind, key: _floats(locs)}
        if weights:
            desc["weights"] = _floats(weights)
        return desc
    if kind not in INLINE_ARGS:
        raise UsageError(f"unknown measure kind {kind!r}")
    args = [a for a in rest.split(":") if a] if rest else []
    names = INLINE_ARGS[kind]
    if len(args) > len(names):
        raise UsageError(f"{kind} takes at most {len(names)} parameters")
    desc = {"kind": kind}
    for name, val in zip(names, args):
        desc[name] = int(val) if name == "nodes" else float(val)
    return desc


def parse_models(items, models_file=None, nodes=None):
    """``{var: VariableModel}`` from ``x1=...`` items and an optional JSON file."""
    descs = {}
    if models_file:
        with open(models_file, encoding="utf-8") as fh:
            for k, v in json.load(fh).items():
                descs[k] = v
    for item in items or ():
        name, sep, spec = item.partition("=")
        if not sep:
            raise UsageError(f"model {item!r} must look like x1=kind:params")
        descs[name.strip()] = parse_measure(spec)
    models = {}
    for name, desc in descs.items():
        if not (name.startswith("x") and name[1:].isdigit()):
            raise UsageError(f"bad variable name {name!r}")
        try:
            models[int(name[1:])] = model_from_descriptor(desc, nodes)
        except (KeyError, TypeError) as exc:
            raise UsageError(f"bad descriptor for {name}: {exc}") from exc
    return models, descs


def _complex(text):
    return complex(text.replace(" ", "").replace("i", "j"))


def _opts(text):
    if not text:
        return SolverOptions()
    return SolverOptions.from_dict(json.loads(text))


# -- output ------------------------------------------------------------------

def atomic_write(path, text):
    """Write ``text`` to ``path`` through a temporary file and rename."""
    d = os.path.dirname(os.path.abspath(path))
    os.makedirs(d, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=d, prefix=".tmp-", suffix=os.path.basename(path))
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        with contextlib.suppress(OSError):
            os.unlink(tmp)
        raise
    return hashlib.sha256(text.encode("utf-8")).hexdigest()


class Outputs:
    def __init__(self, prefix, config):
        self.prefix = prefix
        self.config = config
        self.files = []
        self.stats = {}

    def write(self, suffix, text):
        path = f"{self.prefix}{suffix}"
        digest = atomic_write(path, text)
        self.files.append({"path": os.path.basename(path), "sha256": digest})
        log.info("wrote %s", path)

    def manifest(self):
        canon = json.dumps(self.config, sort_keys=True, separators=(",", ":"))
        import scipy

        man = {
            "config": self.config,
            "config_sha256": hashlib.sha256(canon.encode("utf-8")).hexdigest(),
            "versions": {"brownmeasure": __version__, "python": platform.python_version(),
                         "numpy": np.__version__, "scipy": scipy.__version__},
            "outputs": self.files,
            **self.stats,
        }
        atomic_write(f"{self.prefix}.manifest.json", json.dumps(man, indent=2, sort_keys=True) + "\n")


def _csv(header, rows):
    buf = io.StringIO()
    buf.write(",".join(header) + "\n")
    for row in rows:
        buf.write(",".join(brown._fmt(v) for v in row) + "\n")
    return buf.getvalue()


def _grid_csv(dg):
    buf = io.StringIO()
    dg.to_csv(buf)
    return buf.getvalue()


# -- subcommands -------------------------------------------------------------

def cmd_brown(args, out):
    poly = ncpoly.parse_polynomial(args.poly)
    models, descs = parse_models(args.model, args.models_file, args.nodes)
    grid = brown.LambdaGrid.parse(args.grid)
    eps_list = _floats(args.eps)
    if not eps_list or min(eps_list) <= 0:
        raise UsageError("--eps needs positive values")
    pipe = brown.BrownPipeline(poly, models, _opts(args.solver), args.delta_ratio)
    out.config.update({"models": descs, "polynomial": str(poly)})
    text, per_eps = [], []
    for eps in eps_list:
        dg = brown.density_grid(pipe, None, grid, eps, method=args.method, workers=args.workers)
        body = _grid_csv(dg)
        text.append(body if not text else body.split("\n", 1)[1])
        failed = dg.metadata["failed_nodes"]
        per_eps.append({"epsilon": eps, "failed_nodes": failed, "total_mass": dg.total_mass,
                        "max_residual": dg.metadata["max_residual"]})
        log.info("eps=%g total_mass=%.6f failed_nodes=%d", eps, dg.total_mass, failed)
    out.write(".csv", "".join(text))
    out.stats["runs"] = per_eps
    budget = args.max_fail * grid.nx * grid.ny
    if any(r["failed_nodes"] > budget for r in per_eps):
        raise SolverBudgetExceeded(f"more than {args.max_fail:.1%} of nodes failed")
    if args.sweep is not None:
        lam = _complex(args.sweep)
        sched = _floats(args.schedule)
        sw = brown.epsilon_sweep(pipe, None, lam, sched)
        mass = brown.atom_diagnostics(pipe, None, lam, sched)
        out.stats["sweep"] = {"lambda": [lam.real, lam.imag], "epsilons": sched,
                              "estimate": [sw.estimate.real, sw.estimate.imag],
                              "stable": sw.stable, "atom_mass": mass["mass"]}


def cmd_rdiag(args, out):
    desc = parse_measure(args.mu)
    mu = measures.from_descriptor(desc, args.nodes)
    spec = rdiag.RDiagonalSpec(mu)
    inner, outer = rdiag.radii(spec)
    lo, hi, n = args.r_grid.split(":")
    rs = np.linspace(float(lo), float(hi), int(n))
    out.config["mu"] = desc
    out.write(".csv", _csv(("r", "cdf", "density"), rdiag.profile(spec, rs)))
    out.stats["radii"] = {"inner": inner, "outer": outer}


def cmd_elliptic(args, out):
    p = elliptic.EllipticParams(args.alpha, args.beta, _complex(args.gamma))
    if p.interval or p.quasinilpotent:
        pts = elliptic.boundary(p, args.points) if p.interval else np.zeros(1, dtype=complex)
        rows = [(float(np.angle(z)), z.real, z.imag) for z in pts]
        out.write("_boundary.csv", _csv(("theta", "re", "im"), rows))
        out.stats["degenerate"] = "interval" if p.interval else "point"
        return
    z = elliptic.boundary(p, args.points)
    theta = 2 * np.pi * np.arange(args.points) / args.points
    out.write("_boundary.csv", _csv(("theta", "re", "im"), zip(theta, z.real, z.imag)))
    if args.grid:
        dg = elliptic.density_grid(p, brown.LambdaGrid.parse(args.grid))
        out.write("_density.csv", _grid_csv(dg))
        out.stats["total_mass"] = dg.total_mass
    out.stats["area"] = elliptic.area(p)


def _ensemble(args):
    if args.ensemble == rmt.TRIANGULAR_ELLIPTIC:
        return elliptic.EllipticParams(args.alpha, args.beta, _complex(args.gamma))
    if args.ensemble == rmt.BIUNITARY:
        if not args.singular:
            raise UsageError("biunitary ensemble needs --singular")
        return measures.from_descriptor(parse_measure(args.singular))
    if args.ensemble == rmt.POLYNOMIAL:
        if not args.poly:
            raise UsageError("polynomial ensemble needs --poly")
        models, _ = parse_models(args.model, args.models_file)
        return (ncpoly.parse_polynomial(args.poly), models)
    return None


def cmd_rmt(args, out):
    params = _ensemble(args)
    seeds = [int(s) for s in args.seeds.split(",")]
    pred = None
    if args.grid:
        if not isinstance(params, elliptic.EllipticParams):
            raise UsageError("--grid comparison is available for triangular-elliptic only")
        pred = elliptic.density_grid(params, brown.LambdaGrid.parse(args.grid))
    reports = []
    for seed in seeds:
        spec = rmt.EnsembleSpec(args.ensemble, args.n, seed, params)
        eigs = rmt.empirical_spectrum(rmt.sample(spec))
        eigs = eigs[np.lexsort((eigs.imag, eigs.real))]
        out.write(f"_seed{seed}.csv", _csv(("re", "im"), zip(eigs.real, eigs.imag)))
        if pred is not None:
            rep = rmt.compare(eigs, pred, margin=args.margin).as_dict()
            rep["seed"] = seed
            reports.append(rep)
    if reports:
        out.write("_report.json", json.dumps(reports, indent=2, sort_keys=True) + "\n")
        out.stats["reports"] = reports


def _read_csv(path):
    with open(path, encoding="utf-8") as fh:
        header = fh.readline().strip().split(",")
        data = np.loadtxt(fh, delimiter=",", ndmin=2)
    return header, data


def cmd_compare(args, out):
    _, eig = _read_csv(args.eigs)
    pred = brown.DensityGrid.read_csv(args.predicted, epsilon=args.epsilon)
    rep = rmt.compare(eig[:, 0] + 1j * eig[:, 1], pred, margin=args.margin)
    out.write("_report.json", json.dumps(rep.as_dict(), indent=2, sort_keys=True) + "\n")
    out.stats["report"] = rep.as_dict()


# -- entry point -------------------------------------------------------------

def build_parser():
    ap = argparse.ArgumentParser(prog="brownmeasure",
                                 description="Brown measures of polynomials in free variables.")
    ap.add_argument("--log-level", default="INFO")
    sub = ap.add_subparsers(dest="command", required=True)

    def common(p, default_out):
        p.add_argument("--out", default=default_out, help="output path prefix")

    def model_args(p):
        p.add_argument("--model", action="append", default=[],
                       help="x1=semicircle:2, x2=haar_unitary, x3={json} or x3=@file.json")
        p.add_argument("--models-file", help="JSON object mapping x1, x2, ... to descriptors")

    b = sub.add_parser("brown", help="regularized Brown density on a grid")
    b.add_argument("--poly", required=True)
    model_args(b)
    b.add_argument("--grid", required=True, help="reMin:reMax:imMin:imMax:NXxNY")
    b.add_argument("--eps", default="1e-3", help="comma separated list")
    b.add_argument("--method", choices=("wirtinger", "laplacian"), default="wirtinger")
    b.add_argument("--delta-ratio", type=float, default=brown.DELTA_RATIO)
    b.add_argument("--solver", help="JSON solver options")
    b.add_argument("--nodes", type=int, help="quadrature nodes per measure")
    b.add_argument("--workers", type=int, help="process count (default from BROWN_WORKERS)")
    b.add_argument("--max-fail", type=float, default=0.05, help="allowed failed node fraction")
    b.add_argument("--sweep", help="lambda for an eps sweep and atom diagnostics")
    b.add_argument("--schedule", default=",".join(map(str, brown.DEFAULT_EPS_SCHEDULE)))
    common(b, "brown")
    b.set_defaults(func=cmd_brown)

    r = sub.add_parser("rdiag", help="radial profile of an R-diagonal element")
    r.add_argument("--mu", required=True, help="law of x x^*, e.g. free_poisson:1")
    r.add_argument("--r-grid", default="0:2:201", help="rmin:rmax:n")
    r.add_argument("--nodes", type=int)
    common(r, "rdiag")
    r.set_defaults(func=cmd_rdiag)

    e = sub.add_parser("elliptic", help="triangular-elliptic closed form")
    e.add_argument("--alpha", type=float, required=True)
    e.add_argument("--beta", type=float, required=True)
    e.add_argument("--gamma", default="0", help="complex, e.g. 0.2+0.1i")
    e.add_argument("--grid")
    e.add_argument("--points", type=int, default=512)
    common(e, "elliptic")
    e.set_defaults(func=cmd_elliptic)

    m = sub.add_parser("rmt", help="sample an ensemble and compute eigenvalues")
    m.add_argument("--ensemble", choices=rmt.KINDS, default=rmt.TRIANGULAR_ELLIPTIC)
    m.add_argument("--n", type=int, default=500)
    m.add_argument("--seeds", default="0")
    m.add_argument("--alpha", type=float, default=1.0)
    m.add_argument("--beta", type=float, default=1.0)
    m.add_argument("--gamma", default="0")
    m.add_argument("--singular", help="singular value law for biunitary")
    m.add_argument("--poly")
    model_args(m)
    m.add_argument("--grid", help="compare against the elliptic prediction on this grid")
    m.add_argument("--margin", type=float, default=0.05)
    common(m, "rmt")
    m.set_defaults(func=cmd_rmt)

    c = sub.add_parser("compare", help="compare an eigenvalue CSV with a density CSV")
    c.add_argument("--eigs", required=True)
    c.add_argument("--predicted", required=True)
    c.add_argument("--epsilon", type=float, help="pick this eps from a multi-eps CSV")
    c.add_argument("--margin", type=float, default=0.05)
    common(c, "compare")
    c.set_defaults(func=cmd_compare)
    return ap


def _setup_logging(level):
    handler = logging.StreamHandler(sys.stderr)
    handler.setFormatter(logging.Formatter("level=%(levelname)s logger=%(name)s msg=%(message)s"))
    root = logging.getLogger("brownmeasure")
    root.handlers[:] = [handler]
    root.setLevel(level.upper())
    root.propagate = False


# options whose values may start with '-' (negative bounds, lambda, gamma)
SIGNED_OPTIONS = ("--grid", "--gamma", "--sweep", "--r-grid", "--alpha", "--beta")


def _join_signed(argv):
    out, it = [], iter(argv)
    for tok in it:
        if tok in SIGNED_OPTIONS:
            nxt = next(it, None)
            out.append(tok if nxt is None else f"{tok}={nxt}")
        else:
            out.append(tok)
    return out


def main(argv=None):
    ap = build_parser()
    args = ap.parse_args(_join_signed(sys.argv[1:] if argv is None else list(argv)))
    _setup_logging(args.log_level)
    config = {k: v for k, v in sorted(vars(args).items()) if k not in ("func", "log_level")}
    out = Outputs(args.out, config)
    try:
        args.func(args, out)
        out.manifest()
    except ncpoly.ParseError as exc:
        log.error("parse error: %s", exc)
        return EXIT_INVALID
    except (NoConvergence, SolverBudgetExceeded) as exc:
        log.error("solver failure: %s", exc)
        with contextlib.suppress(OSError):
            out.manifest()
        return EXIT_SOLVER
    except OSError as exc:
        log.error("i/o error: %s", exc)
        return EXIT_IO
    except (ValueError, KeyError, json.JSONDecodeError) as exc:
        log.error("invalid input: %s", exc)
        return EXIT_INVALID
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
