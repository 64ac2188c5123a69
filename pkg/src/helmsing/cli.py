"""Command-line front end: ``helmsing <command> --config <path> [--out DIR] [--format csv,json]``.

Configs are TOML files; dotted keys such as ``spec.N = 3`` are the usual
way to fill a section.  Exit codes: 0 success, 2 invalid input, 3
numerical failure, 4 I/O error.
"""

import argparse
import csv
import hashlib
import json
import math
import platform
import sys
import time
from pathlib import Path

import numpy as np

try:
    import tomllib
except ModuleNotFoundError:  # Python < 3.11
    import tomli as tomllib

from . import __version__, _kernels, asymptotics, fundsol, harmonic, quadrature, solver
from .errors import ConvergenceError, DomainError, FitError, HelmsingError, ValidationError

COMMANDS = ("fundsol", "harmonic", "convolve", "solve", "kstar", "classify", "verify")
EXIT_OK, EXIT_INVALID, EXIT_NUMERIC, EXIT_IO = 0, 2, 3, 4


class ConfigError(ValidationError):
    pass


# ---------------------------------------------------------------- output helpers

def fmt(x):
    """17 significant digits, round-trip exact."""
    if isinstance(x, (int, np.integer)) and not isinstance(x, bool):
        return str(int(x))
    x = float(x)
    if math.isnan(x):
        return "nan"
    if math.isinf(x):
        return "inf" if x > 0 else "-inf"
    return f"{x:.17g}"


def _clean(obj):
    if isinstance(obj, dict):
        return {str(k): _clean(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_clean(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _clean(obj.tolist())
    if isinstance(obj, (np.floating, float)):
        x = float(obj)
        return x if math.isfinite(x) else (None if math.isnan(x) else ("inf" if x > 0 else "-inf"))
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (complex, np.complexfloating)):
        return [_clean(obj.real), _clean(obj.imag)]
    if isinstance(obj, np.bool_):
        return bool(obj)
    return obj


class Output:
    def __init__(self, out_dir, formats):
        self.dir = Path(out_dir)
        self.formats = formats
        self.files = {}
        self.dir.mkdir(parents=True, exist_ok=True)

    def _record(self, path):
        self.files[path.name] = hashlib.sha256(path.read_bytes()).hexdigest()

    def csv(self, name, header, rows):
        if "csv" not in self.formats:
            return
        path = self.dir / name
        with open(path, "w", newline="") as fh:
            writer = csv.writer(fh, lineterminator="\n")
            writer.writerow(header)
            for row in rows:
                writer.writerow([fmt(v) for v in row])
        self._record(path)

    def json(self, name, payload):
        if "json" not in self.formats:
            return
        path = self.dir / name
        path.write_text(json.dumps(_clean(payload), indent=2, sort_keys=True) + "\n")
        self._record(path)

    def manifest(self, payload):
        path = self.dir / "manifest.json"
        payload = dict(payload)
        payload["files"] = dict(sorted(self.files.items()))
        path.write_text(json.dumps(_clean(payload), indent=2, sort_keys=True) + "\n")


# ---------------------------------------------------------------- config

def load_config(path):
    with open(path, "rb") as fh:
        return tomllib.load(fh)


def _section(cfg, name):
    sec = cfg.get(name, {})
    if not isinstance(sec, dict):
        raise ConfigError([f"[{name}] must be a table"])
    return sec


def _get(sec, key, default, cast=float):
    val = sec.get(key, default)
    if val is None:
        raise ConfigError([f"missing required key {key!r}"])
    try:
        return cast(val)
    except (TypeError, ValueError):
        raise ConfigError([f"key {key!r} has invalid value {val!r}"]) from None


def spec_from_config(cfg):
    sec = _section(cfg, "spec")
    h = sec.get("harmonic", {})
    if not isinstance(h, dict):
        raise ConfigError(["spec.harmonic must be a table"])
    hp = solver.HarmonicPart(
        kind=str(h.get("kind", "psi")),
        coeff=_get(h, "coeff", 0.1),
        n0=_get(h, "n0", 4, int),
        terms=_get(h, "terms", 8, int),
    )
    return solver.ProblemSpec(
        N=_get(sec, "N", None, int),
        p=_get(sec, "p", None),
        alpha=_get(sec, "alpha", None),
        sigma=_get(sec, "sigma", None),
        k=_get(sec, "k", 0.01),
        Q0=_get(sec, "Q0", 1.0),
        harmonic=hp,
        mode=str(sec.get("mode", "real")),
        geometry=str(sec.get("geometry", "radial")),
        r_min=_get(sec, "r_min", quadrature.DEFAULT_R_MIN),
        r_max=_get(sec, "r_max", quadrature.DEFAULT_R_MAX),
        refine=_get(sec, "refine", 1, int),
        G=_get(sec, "G", 128, int),
        L=_get(sec, "L", 64.0),
    )


# ---------------------------------------------------------------- commands

def cmd_fundsol(cfg, out):
    sec = _section(cfg, "fundsol")
    N = _get(sec, "N", 3, int)
    kind = fundsol.Kind(str(sec.get("kind", "phi")))
    r = np.geomspace(_get(sec, "r_min", 1e-3), _get(sec, "r_max", 100.0), _get(sec, "samples", 200, int))
    val = np.asarray(fundsol.evaluate(kind, N, r))
    der = np.asarray(fundsol.phi_radial_derivative(kind, N, r))
    rows = zip(r, np.real(val), np.imag(val), np.real(der), np.imag(der))
    out.csv("fundsol.csv", ["r", "re", "im", "d_re", "d_im"], rows)
    summary = {
        "N": N,
        "kind": kind.value,
        "c0": fundsol.normalization_c0(N),
        "c_N": fundsol.normalization_cN(N),
        "dirac_check_eps_1e-3": fundsol.dirac_normalization_check(N, 1e-3),
    }
    out.json("fundsol.json", summary)
    return summary


def cmd_harmonic(cfg, out):
    sec = _section(cfg, "harmonic")
    N = _get(sec, "N", 3, int)
    ftype = str(sec.get("type", "lacunary"))
    if ftype == "mode":
        mode = harmonic.SphericalMode(N, _get(sec, "j", 0, int), str(sec.get("angular", "cos")))
        r = np.geomspace(_get(sec, "r_min", 1e-3), _get(sec, "r_max", 50.0), _get(sec, "samples", 200, int))
        x = np.zeros((r.size, N))
        x[:, 0] = r
        vals = np.asarray(harmonic.psi_j(mode, x))
        out.csv("harmonic.csv", ["r", "value"], zip(r, vals))
        summary = {"type": "mode", "N": N, "j": mode.j, "order": mode.order, "limit": harmonic.mode_limit(mode)}
        out.json("harmonic.json", summary)
        return summary
    if ftype != "lacunary":
        raise ConfigError([f"harmonic.type must be 'mode' or 'lacunary', got {ftype!r}"])
    spec = harmonic.build_lacunary(N, _get(sec, "sigma_target", 0.0), _get(sec, "n0", 4, int),
                                   _get(sec, "terms", 8, int), bool(sec.get("antisymmetric", False)))
    fit = harmonic.fit_lacunary(spec)
    t = np.linspace(fit.window[0], fit.window[1], _get(sec, "samples", 2000, int))
    x = np.zeros((t.size, N))
    x[:, 0] = t
    out.csv("harmonic.csv", ["r", "value"], zip(t, np.asarray(harmonic.eval_lacunary(spec, x))))
    summary = {"type": "lacunary", "N": N, "sigma_target": spec.sigma_target,
               "peaks": spec.peaks, "weights": spec.weights, "fit": fit.as_dict()}
    out.json("harmonic.json", summary)
    return summary


def cmd_convolve(cfg, out):
    sec = _section(cfg, "convolve")
    N = _get(sec, "N", 3, int)
    kind = fundsol.Kind(str(sec.get("kind", "phi")))
    theta = _get(sec, "theta", None)
    tau = _get(sec, "tau", None)
    c8 = _get(sec, "c8", 1.0)
    quadrature.check_convolvable(N, theta, tau)
    r_max = _get(sec, "r_max", quadrature.DEFAULT_R_MAX)
    profile = sec.get("profile_csv")
    if profile:
        data = np.loadtxt(profile, delimiter=",", skiprows=1, ndmin=2)
        interp = quadrature.profile_interpolator(data[:, 0], data[:, 1], (theta, tau))
        lo, hi = data[0, 0], data[-1, 0]

        def source(r):
            r = np.asarray(r, dtype=float)
            return np.where((r >= lo) & (r <= hi), interp(np.clip(r, lo, hi)), 0.0)

        res = quadrature.convolve_radial(source, kind, N, decay_tag=(theta, tau), r_max=r_max,
                                         gradient=True)
    else:
        env = quadrature.KernelEnvelope(theta, tau, c8)
        res = quadrature.convolve_radial(env, kind, N, decay_tag=(theta, tau), r_max=r_max,
                                         envelope_constant=c8, gradient=True)
    rows = zip(res.r, np.real(res.values), np.imag(res.values), np.real(res.gradient),
               np.imag(res.gradient), res.tail_bound)
    out.csv("convolution.csv", ["r", "re", "im", "d_re", "d_im", "tail_bound"], rows)
    summary = {"N": N, "kind": kind.value, "theta": theta, "tau": tau, "c8": c8,
               "nodes": int(res.r.size), "max_tail_bound": float(np.max(res.tail_bound))}
    out.json("convolution.json", summary)
    return summary


def _write_solution(bundle, out):
    spec = bundle.spec
    if spec.geometry == "radial":
        r = bundle.v.r
        v = bundle.v.values
        u = bundle.u(r)
        W = solver.weight_W_p(spec, r)
        rows = zip(r, np.real(v), np.imag(v), np.real(u), np.imag(u), W)
        out.csv("solution.csv", ["r", "v_re", "v_im", "u_re", "u_im", "W"], rows)
    else:
        g = bundle.v.grid
        X, Y = g.mesh()
        v = bundle.v.values
        rows = zip(X.ravel(), Y.ravel(), np.real(v).ravel(), np.imag(v).ravel())
        out.csv("solution.csv", ["x1", "x2", "v_re", "v_im"], rows)


def cmd_solve(cfg, out):
    spec = spec_from_config(cfg)
    derived = solver.validate_spec(spec)
    sec = _section(cfg, "solve")
    tol = _get(sec, "tol", solver.DEFAULT_TOL)
    max_iter = _get(sec, "max_iter", solver.DEFAULT_MAX_ITER, int)
    bundle = solver.picard_solve(spec, tol, max_iter)
    _write_solution(bundle, out)
    report = {"spec": spec.as_dict(), "derived": derived.as_dict(), "report": bundle.report.as_dict()}
    if spec.geometry == "radial":
        dm = asymptotics.extract_dirac_mass(lambda r: np.real(bundle.u(r)), spec.N)
        report["dirac_mass"] = dm.as_dict()
    out.json("report.json", report)
    return {"derived": derived.as_dict()}


def cmd_kstar(cfg, out):
    spec = spec_from_config(cfg)
    derived = solver.validate_spec(spec)
    sec = _section(cfg, "kstar")
    res = solver.estimate_kstar(spec, _get(sec, "k_hi", 1.0), _get(sec, "steps", 8, int),
                                _get(sec, "tol", solver.DEFAULT_TOL),
                                _get(sec, "max_iter", solver.DEFAULT_MAX_ITER, int))
    out.json("kstar.json", {"spec": spec.as_dict(), "derived": derived.as_dict(), "kstar": res.as_dict()})
    return {"derived": derived.as_dict()}


def cmd_classify(cfg, out):
    if "spec" in cfg:
        spec = spec_from_config(cfg)
        derived = solver.validate_spec(spec)
        payload = asymptotics.classify(spec.N, spec.p, spec.alpha, spec.sigma)
        payload["derived"] = derived.as_dict()
    else:
        sec = _section(cfg, "classify")
        alpha = sec.get("alpha")
        sigma = sec.get("sigma")
        payload = asymptotics.classify(_get(sec, "N", None, int), _get(sec, "p", None),
                                       None if alpha is None else float(alpha),
                                       None if sigma is None else float(sigma))
    out.json("classify.json", payload)
    return payload


def cmd_verify(cfg, out):
    sec = _section(cfg, "verify")
    target = str(sec.get("target", "kernel"))
    if target == "kernel":
        env = quadrature.KernelEnvelope(_get(sec, "theta", None), _get(sec, "tau", None), _get(sec, "c8", 1.0))
        rep = asymptotics.verify_kernel_bound(env, _get(sec, "N", 3, int))
        payload = {"target": target, "report": rep.as_dict()}
    elif target in ("near", "far"):
        spec = spec_from_config(cfg)
        solver.validate_spec(spec)
        bundle = solver.picard_solve(spec)
        if target == "near":
            rep = asymptotics.verify_near_origin(bundle, _get(sec, "tolerance", 0.02))
        else:
            rep = asymptotics.verify_far_field(bundle, _get(sec, "tolerance", 0.15))
        payload = {"target": target, "report": rep.as_dict()}
    else:
        raise ConfigError([f"verify.target must be kernel, near or far; got {target!r}"])
    out.json("verify.json", payload)
    return payload


DISPATCH = {
    "fundsol": cmd_fundsol,
    "harmonic": cmd_harmonic,
    "convolve": cmd_convolve,
    "solve": cmd_solve,
    "kstar": cmd_kstar,
    "classify": cmd_classify,
    "verify": cmd_verify,
}


# ---------------------------------------------------------------- entry point

def build_parser():
    ap = argparse.ArgumentParser(prog="helmsing", description=__doc__.splitlines()[0])
    ap.add_argument("command", choices=COMMANDS)
    ap.add_argument("--config", required=True, help="TOML config file")
    ap.add_argument("--out", default="out", help="output directory (default: ./out)")
    ap.add_argument("--format", default="csv,json", help="comma-separated subset of csv,json")
    return ap


def _versions():
    import scipy
    return {"helmsing": __version__, "python": platform.python_version(), "numpy": np.__version__,
            "scipy": scipy.__version__, "backend": _kernels.backend_name()}


def run(command, config_path, out_dir="out", formats=("csv", "json")):
    """Run one command; returns the exit code."""
    start = time.perf_counter()
    bad_fmt = set(formats) - {"csv", "json"}
    if bad_fmt:
        print(f"error: unknown format(s) {sorted(bad_fmt)}", file=sys.stderr)
        return EXIT_INVALID
    try:
        cfg = load_config(config_path)
    except OSError as exc:
        print(f"error: cannot read config: {exc}", file=sys.stderr)
        return EXIT_IO
    except tomllib.TOMLDecodeError as exc:
        print(f"error: invalid config: {exc}", file=sys.stderr)
        return EXIT_INVALID
    try:
        out = Output(out_dir, set(formats))
    except OSError as exc:
        print(f"error: cannot create output directory: {exc}", file=sys.stderr)
        return EXIT_IO
    status, message, result = EXIT_OK, "ok", {}
    try:
        result = DISPATCH[command](cfg, out) or {}
    except ValidationError as exc:
        status, message = EXIT_INVALID, "validation failed"
        print("error: validation failed:", file=sys.stderr)
        for v in exc.violations:
            print(f"  - {v}", file=sys.stderr)
        result = {"violations": exc.violations}
    except DomainError as exc:
        status, message = EXIT_INVALID, f"invalid input: {exc}"
        print(f"error: {message}", file=sys.stderr)
    except (ConvergenceError, FitError) as exc:
        status, message = EXIT_NUMERIC, f"numerical failure: {exc}"
        print(f"error: {message}", file=sys.stderr)
    except OSError as exc:
        status, message = EXIT_IO, f"I/O error: {exc}"
        print(f"error: {message}", file=sys.stderr)
    except HelmsingError as exc:
        status, message = EXIT_NUMERIC, str(exc)
        print(f"error: {message}", file=sys.stderr)
    manifest = {
        "command": command,
        "config_path": str(config_path),
        "inputs": cfg,
        "exit_code": status,
        "message": message,
        "derived": result.get("derived"),
        "violations": result.get("violations"),
        "versions": _versions(),
        "wall_time_s": time.perf_counter() - start,
    }
    try:
        out.manifest(manifest)
    except OSError as exc:
        print(f"error: cannot write manifest: {exc}", file=sys.stderr)
        return EXIT_IO
    return status


def main(argv=None):
    args = build_parser().parse_args(argv)
    formats = tuple(f.strip() for f in args.format.split(",") if f.strip())
    return run(args.command, args.config, args.out, formats)


if __name__ == "__main__":
    sys.exit(main())
