"""Command-line experiment runner.

    twoscale <kind> [--config FILE] [--set section.key=value ...] [--out DIR]
                    [--threads N] [--verbose] [--vtk]

Kinds: kernel-selftest, linear-convergence, obstacle-convergence,
free-boundary, hjb.  Every run writes ``manifest.ini`` (the fully resolved
configuration), one or more CSV tables and ``summary.txt``; the summary line
is also printed.  Exit status: 0 on success (including a FAIL verdict),
2 for configuration errors, 3 for numerical failures.  ``--strict`` turns a
FAIL verdict into exit status 1.
"""

from __future__ import annotations

import argparse
import configparser
import logging
import sys
from pathlib import Path

import numpy as np

from . import io, studies
from .errors import (CertificationError, ConvergenceError, DeskScaleError, DivergentIntegralError,
                     GradingAuditError, InvalidParameterError, NonMonotoneError, QuadratureError)
from .expr import Expression, parse_number
from .kernel import constant_kernel, cosine_series, fractional_laplacian
from .mesh import BepsPolicy
from .problems import UNIT_SQUARE, bump_obstacle_1d, expression_obstacle

log = logging.getLogger("twoscale")

KINDS = ("kernel-selftest", "linear-convergence", "obstacle-convergence", "free-boundary", "hjb")
NUMERICAL_ERRORS = (ConvergenceError, QuadratureError, DeskScaleError, CertificationError,
                    NonMonotoneError, GradingAuditError, DivergentIntegralError,
                    np.linalg.LinAlgError)


class ConfigError(Exception):
    pass


_H5 = "2^-3, 2^-4, 2^-5, 2^-6, 2^-7"

DEFAULTS = {
    "kernel-selftest": {
        "experiment": {"s": "0.1, 0.25, 0.5, 0.75, 0.9", "dim": "1, 2", "eps": "1e-3, 1e-1, 1"},
        "assert": {"tolerance": "1e-12"},
    },
    "linear-convergence": {
        "experiment": {"dim": "1", "domain": "-1, 1", "problem": "ball-linear", "s": "0.5",
                       "eta": "fractional-laplacian", "mu": "2", "h": _H5, "policy": "linear",
                       "f": "1", "reference_h": "2^-6"},
        "assert": {"slope_min": "0.8", "slope_max": "1.4"},
    },
    "obstacle-convergence": {
        "experiment": {"dim": "1", "domain": "-1, 1", "problem": "bump-obstacle-1d", "s": "0.5",
                       "eta": "fractional-laplacian", "mu": "2", "h": _H5, "policy": "obstacle",
                       "reference_h": "2^-9", "c0": "0.5", "c1": "2", "f0": "0",
                       "psi": "0.5 - 2*x^2", "f": "0"},
        "assert": {"slope_min": "0.25"},
    },
    "free-boundary": {
        "experiment": {"dim": "1", "domain": "-1, 1", "problem": "bump-obstacle-1d", "s": "0.5",
                       "eta": "fractional-laplacian", "mu": "2", "h": _H5, "policy": "obstacle",
                       "reference_h": "2^-10", "c0": "0.5", "c1": "2", "f0": "0",
                       "psi": "0.5 - 2*x^2", "f": "0", "c_delta": "auto", "c_psi": "auto",
                       "strip_width": "0.2"},
        "assert": {"exponent_min": "0.417"},
    },
    "hjb": {
        "experiment": {"dim": "2", "domain": "unit-square", "problem": "hjb-iso-aniso-2d",
                       "s": "0.5", "mu": "2", "h": "2^-3", "policy": "linear", "amplitude": "0.5"},
        "tolerances": {"inner_tol": "1e-10", "outer_tol": "1e-8"},
        "assert": {"residual_max": "1e-8"},
    },
}


# ---------------------------------------------------------------------------
# config parsing


def _numbers(text, name):
    try:
        return [parse_number(t) for t in text.replace(";", ",").split(",") if t.strip()]
    except InvalidParameterError as exc:
        raise ConfigError(f"{name}: {exc}") from None


def _number(text, name):
    vals = _numbers(text, name)
    if len(vals) != 1:
        raise ConfigError(f"{name}: expected one number, got {text!r}")
    return vals[0]


def _check_s(s, name="s"):
    if not 0.0 < s < 1.0:
        raise ConfigError(f"{name} must lie in (0, 1), got {s:g}")
    return s


def _domain(text, dim):
    t = text.strip().lower()
    if t == "unit-square":
        return UNIT_SQUARE.copy()
    if dim == 1:
        a, b = _numbers(text, "domain")
        if not a < b:
            raise ConfigError(f"domain: need a < b, got {text!r}")
        return (a, b)
    pts = [_numbers(p, "domain") for p in text.split(";") if p.strip()]
    if len(pts) < 3 or any(len(p) != 2 for p in pts):
        raise ConfigError("domain: 2D polygons are written 'x0, y0; x1, y1; ...'")
    return np.array(pts)


def _eta(text, dim, s):
    t = text.strip().lower()
    if t == "fractional-laplacian":
        return fractional_laplacian(dim, s)
    head, _, rest = t.partition(":")
    if head == "constant":
        return constant_kernel(dim, s, _number(rest, "eta"))
    if head == "cosine":
        if dim != 2:
            raise ConfigError("eta: cosine series kernels need dim = 2")
        return cosine_series(s, _numbers(rest, "eta"))
    raise ConfigError(f"eta: unknown kernel {text!r} "
                      "(use fractional-laplacian, constant:C or cosine:c0,c1,...)")


def load_config(kind, path=None, overrides=()):
    """Merge defaults, the config file and ``section.key=value`` overrides."""
    if kind not in KINDS:
        raise ConfigError(f"kind: unknown experiment {kind!r}")
    cp = configparser.ConfigParser()
    cp.read_dict(DEFAULTS[kind])
    if path is not None:
        if not Path(path).is_file():
            raise ConfigError(f"config: no such file {path}")
        try:
            cp.read(path)
        except configparser.Error as exc:
            raise ConfigError(f"config: {exc}") from None
        if cp.has_option("experiment", "kind") and cp.get("experiment", "kind") != kind:
            raise ConfigError(f"kind: config is for {cp.get('experiment', 'kind')!r}, not {kind!r}")
    for item in overrides:
        key, sep, val = item.partition("=")
        section, dot, opt = key.strip().rpartition(".")
        if not sep or not opt:
            raise ConfigError(f"--set expects section.key=value, got {item!r}")
        section = section if dot else "experiment"
        if not cp.has_section(section):
            cp.add_section(section)
        cp.set(section, opt, val.strip())
    cp.set("experiment", "kind", kind)
    return cp


def resolve(cp):
    """Validate a merged config and turn it into keyword arguments."""
    kind = cp.get("experiment", "kind")
    ex = cp["experiment"]
    asserts = cp["assert"] if cp.has_section("assert") else {}
    out = {"kind": kind}
    if kind == "kernel-selftest":
        out["s_values"] = tuple(_check_s(v) for v in _numbers(ex["s"], "s"))
        out["dims"] = tuple(int(v) for v in _numbers(ex["dim"], "dim"))
        if any(d not in (1, 2) for d in out["dims"]):
            raise ConfigError("dim must be 1 or 2")
        out["eps_values"] = tuple(_numbers(ex["eps"], "eps"))
        if min(out["eps_values"]) <= 0:
            raise ConfigError("eps must be positive")
        out["tol"] = _number(asserts.get("tolerance", "1e-12"), "tolerance")
        return out

    dim = int(_number(ex["dim"], "dim"))
    if dim not in (1, 2):
        raise ConfigError(f"dim must be 1 or 2, got {dim}")
    s = _check_s(_number(ex["s"], "s"))
    mu = _number(ex["mu"], "mu")
    if mu < 1:
        raise ConfigError(f"mu must be >= 1, got {mu:g}")
    hs = _numbers(ex["h"], "h")
    if any(h <= 0 or h >= 1 for h in hs):
        raise ConfigError("h values must lie in (0, 1)")
    if any(b >= a for a, b in zip(hs, hs[1:])):
        raise ConfigError("h list must be strictly decreasing")
    try:
        policy = BepsPolicy.parse(ex["policy"])
    except (InvalidParameterError, ValueError) as exc:
        raise ConfigError(f"policy: {exc}") from None
    out.update(dim=dim, s=s, mu=mu, hs=tuple(hs), policy=policy)
    problem = ex.get("problem", "").strip()

    if kind == "hjb":
        if problem != "hjb-iso-aniso-2d" or dim != 2:
            raise ConfigError("problem: hjb runs use hjb-iso-aniso-2d with dim = 2")
        if len(hs) != 1:
            raise ConfigError("h: hjb runs take a single mesh size")
        amp = _number(ex["amplitude"], "amplitude")
        if not 0 <= amp < 1:
            raise ConfigError("amplitude must lie in [0, 1)")
        tol = cp["tolerances"]
        out.update(h=hs[0], amplitude=amp, inner_tol=_number(tol["inner_tol"], "inner_tol"),
                   outer_tol=_number(tol["outer_tol"], "outer_tol"),
                   residual_max=_number(asserts.get("residual_max", "1e-8"), "residual_max"))
        return out

    if len(hs) < 3:
        raise ConfigError("h list needs at least 3 entries for a rate fit")
    domain = _domain(ex["domain"], dim)
    out["domain"] = domain
    out["spec"] = _eta(ex.get("eta", "fractional-laplacian"), dim, s)
    ref_h = _number(ex.get("reference_h", "0"), "reference_h")

    if kind == "linear-convergence":
        if problem == "ball-linear":
            if dim != 1 or tuple(domain) != (-1.0, 1.0):
                raise ConfigError("problem: ball-linear is the unit ball in 1D, domain -1, 1")
            if out["spec"].name != "fractional-laplacian":
                raise ConfigError("eta: ball-linear needs the fractional Laplacian")
        elif problem == "expression":
            if not 0 < ref_h < hs[-1]:
                raise ConfigError("reference_h must be finer than every h")
            out["f"] = Expression(ex["f"])
            out["reference_h"] = ref_h
        else:
            raise ConfigError(f"problem: {problem!r} (use ball-linear or expression)")
        out["slope_window"] = (_number(asserts.get("slope_min", "-inf"), "slope_min"),
                               _number(asserts.get("slope_max", "inf"), "slope_max"))
        return out

    # obstacle family
    if not 0 < ref_h < hs[-1]:
        raise ConfigError("reference_h must be finer than every h")
    out["reference_h"] = ref_h
    if problem == "bump-obstacle-1d":
        if dim != 1:
            raise ConfigError("problem: bump-obstacle-1d is one-dimensional")
        try:
            out["problem"] = bump_obstacle_1d(_number(ex["c0"], "c0"), _number(ex["c1"], "c1"),
                                              _number(ex["f0"], "f0"))
        except InvalidParameterError as exc:
            raise ConfigError(f"c0/c1: {exc}") from None
    elif problem == "expression":
        out["problem"] = expression_obstacle(ex["psi"], ex["f"], domain)
    else:
        raise ConfigError(f"problem: {problem!r} (use bump-obstacle-1d or expression)")
    if kind == "obstacle-convergence":
        out["slope_min"] = _number(asserts.get("slope_min", "-inf"), "slope_min")
    else:
        for key in ("c_delta", "c_psi"):
            val = ex[key].strip().lower()
            out[key] = None if val == "auto" else _number(val, key)
        out["strip_width"] = _number(ex["strip_width"], "strip_width")
        out["exponent_min"] = _number(asserts.get("exponent_min", "-inf"), "exponent_min")
    return out


# ---------------------------------------------------------------------------
# execution


def run(kind, cfg, threads=1):
    """Dispatch a resolved configuration to the matching study."""
    if kind == "kernel-selftest":
        return studies.kernel_selftest(cfg["s_values"], cfg["dims"], cfg["eps_values"], cfg["tol"])
    common = dict(s=cfg["s"], mu=cfg["mu"], policy=cfg["policy"], threads=threads)
    if kind == "hjb":
        return studies.hjb_study(h=cfg["h"], amplitude=cfg["amplitude"], inner_tol=cfg["inner_tol"],
                                 outer_tol=cfg["outer_tol"], **common)
    if kind == "linear-convergence":
        if "f" in cfg:
            res = studies.reference_convergence(cfg["domain"], hs=cfg["hs"], ref_h=cfg["reference_h"],
                                                spec=cfg["spec"], f=cfg["f"],
                                                kind="linear-convergence", **common)
            lo, hi = cfg["slope_window"]
            res.passed = lo <= res.slope <= hi
            return res
        return studies.linear_convergence(hs=cfg["hs"], slope_window=cfg["slope_window"], **common)
    fam = dict(hs=cfg["hs"], ref_h=cfg["reference_h"], problem=cfg["problem"], spec=cfg["spec"],
               **common)
    if kind == "obstacle-convergence":
        return studies.obstacle_convergence(slope_min=cfg["slope_min"], **fam)
    return studies.free_boundary_study(C_delta=cfg["c_delta"], C_psi=cfg["c_psi"],
                                       strip_width=cfg["strip_width"],
                                       exponent_min=cfg["exponent_min"], **fam)


def summary_line(res, cfg):
    verdict = "PASS" if res.passed else "FAIL"
    kind = res.kind
    if kind == "kernel-selftest":
        return f"{verdict} {kind} worst_residual={res.details['worst_residual']:.3e} tol={cfg['tol']:g}"
    if kind == "hjb":
        d = res.details
        return (f"{verdict} hjb outer={d['outer_iterations']} residual={d['final_residual']:.3e} "
                f"max_decrease={d['max_decrease']:.3e} "
                f"max_above_supersolution={d['max_above_supersolution']:.3e}")
    if kind == "free-boundary":
        d = res.details
        return (f"{verdict} free-boundary exponent={res.slope:.4f} (min {cfg['exponent_min']:g}) "
                f"monotone={d['monotone']} inclusion={d['inclusion']}")
    if kind == "obstacle-convergence":
        window = f"min {cfg['slope_min']:g}"
    else:
        window = "window [{:g}, {:g}]".format(*cfg["slope_window"])
    return f"{verdict} {kind} slope={res.slope:.4f} r2={res.r2:.4f} ({window})"


def write_outputs(res, cfg, cp, out, vtk=False):
    out = Path(out)
    out.mkdir(parents=True, exist_ok=True)
    with (out / "manifest.ini").open("w") as fh:
        cp.write(fh)
    kind = res.kind
    io.write_table(out / f"{kind}.csv", res.columns, res.rows)
    if kind in ("linear-convergence", "obstacle-convergence", "free-boundary"):
        io.write_table(out / "rate.csv", ["slope", "r2", "passed"],
                       [[float(res.slope), float(res.r2), int(bool(res.passed))]])
    if kind == "free-boundary":
        pts = np.asarray(res.details["gamma_ref"]).reshape(-1, 1)
        io.write_points(pts, out / "gamma_ref.csv")
    if kind == "hjb":
        rep = res.details["report"]
        mesh = res.details["mesh"]
        io.write_solution(mesh, rep, out / "hjb_solution.csv",
                          {"outer_iterations": rep.iterations})
        if vtk:
            io.write_vtk(mesh, out / "hjb.vtk",
                         {"u": rep.solution, "supersolution": rep.supersolution})
    elif vtk and "solution" in res.details:
        mesh, u = res.details["solution"]
        fields = {"u": u}
        if "obstacle" in res.details:
            fields["psi"] = res.details["obstacle"]
        io.write_vtk(mesh, out / f"{kind}.vtk", fields)
    line = summary_line(res, cfg)
    (out / "summary.txt").write_text(line + "\n")
    return line


def build_parser():
    p = argparse.ArgumentParser(prog="twoscale", description="Two-scale nonlocal solver experiments")
    p.add_argument("kind", choices=KINDS)
    p.add_argument("--config", metavar="PATH", help="INI file with [experiment]/[tolerances]/[assert]")
    p.add_argument("--set", dest="overrides", action="append", default=[], metavar="SEC.KEY=VAL",
                   help="override one config entry (section defaults to experiment)")
    p.add_argument("--out", metavar="DIR", default="twoscale-out")
    p.add_argument("--threads", type=int, default=1)
    p.add_argument("--verbose", action="store_true")
    p.add_argument("--vtk", action="store_true", help="also write legacy VTK files")
    p.add_argument("--strict", action="store_true", help="exit 1 on a FAIL verdict")
    return p


def main(argv=None):
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(message)s")
    try:
        if args.threads < 1:
            raise ConfigError("threads must be >= 1")
        cp = load_config(args.kind, args.config, args.overrides)
        cfg = resolve(cp)
    except (ConfigError, InvalidParameterError) as exc:
        print(f"twoscale: configuration error: {exc}", file=sys.stderr)
        return 2
    try:
        log.info("running %s", args.kind)
        res = run(args.kind, cfg, threads=args.threads)
        line = write_outputs(res, cfg, cp, args.out, vtk=args.vtk)
    except InvalidParameterError as exc:
        print(f"twoscale: configuration error: {exc}", file=sys.stderr)
        return 2
    except NUMERICAL_ERRORS as exc:
        print(f"twoscale: numerical failure ({type(exc).__name__}): {exc}", file=sys.stderr)
        for attr in ("history", "audit", "estimate", "where"):
            val = getattr(exc, attr, None)
            if val is not None:
                print(f"  {attr}: {val if not isinstance(val, list) else val[-5:]}", file=sys.stderr)
        return 3
    print(line)
    log.info("wallclock %.2fs", res.wallclock)
    if args.strict and not res.passed:
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
