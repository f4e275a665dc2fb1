"""Command-line front end: ``faberlab {gen,check,solve,expand,study}``.

Every artifact starts with a ``# config-sha256=...`` line (CSV) or carries a
``config_sha256`` key (JSON) identifying the resolved configuration.

Exit status: 0 success, 2 configuration error, 3 condition violation
(``--strict``), 4 numerical failure.
"""

from __future__ import annotations

import argparse
import csv
import hashlib
import io
import json
import os
import sys
import warnings
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path

import numpy as np

from . import __version__
from .conformal import build_map
from .curve import CurveSpec, check_regular, resample
from .errors import (
    AccuracyError,
    AdmissibilityError,
    AdmissibilityWarning,
    BranchError,
    CanonicalTraceError,
    ConditionError,
    DataError,
    DomainError,
    FaberLabError,
    NotATraceError,
    ParameterError,
    UnsupportedCurveError,
)
from .expansion import SpaceParams, decay_slope, expand_double, expand_phase_system, phase_pair
from .faber import faber_minus, faber_plus
from .riemann import CoefficientPair, solve_nonhomogeneous
from .weights import WeightSpec, beta_exponents, condition_alpha, muckenhoupt_scan

EXIT_CONFIG, EXIT_CONDITION, EXIT_NUMERIC = 2, 3, 4


class ConfigError(Exception):
    pass


def threads() -> int:
    """Worker cap from ``FABERLAB_THREADS`` (default 1)."""
    raw = os.environ.get("FABERLAB_THREADS", "1")
    try:
        n = int(raw)
    except ValueError as exc:
        raise ConfigError(f"FABERLAB_THREADS must be an integer, got {raw!r}") from exc
    return max(1, n)


# -- parsing of references ----------------------------------------------------


def _load_json_ref(text):
    if text is None:
        return None
    if isinstance(text, dict):
        return text
    path = Path(text)
    if not text.lstrip().startswith(("{", "[")) and path.suffix == ".json":
        if not path.exists():
            raise ConfigError(f"file not found: {text}")
        return json.loads(path.read_text())
    try:
        return json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"invalid JSON: {text!r}") from exc


def parse_curve(text) -> CurveSpec:
    """``circle``, ``circle:R``, ``ellipse:a,b``, inline JSON, a JSON file or a CSV table."""
    if isinstance(text, dict):
        return CurveSpec.from_json(text)
    text = str(text).strip()
    if text.startswith("{") or text.endswith(".json"):
        return CurveSpec.from_json(_load_json_ref(text))
    if text.endswith(".csv"):
        if not Path(text).exists():
            raise ConfigError(f"file not found: {text}")
        return CurveSpec.from_csv(text)
    name, _, args = text.partition(":")
    try:
        vals = [float(v) for v in args.split(",")] if args else []
    except ValueError as exc:
        raise ConfigError(f"bad curve parameters in {text!r}") from exc
    if name == "circle":
        return CurveSpec.circle(*(vals or [1.0]))
    if name == "ellipse":
        if len(vals) != 2:
            raise ConfigError("ellipse needs two semi-axes, e.g. ellipse:2,1")
        return CurveSpec.ellipse(*vals)
    raise ConfigError(f"unknown curve {text!r}")


def parse_weight(text, p) -> WeightSpec:
    obj = _load_json_ref(text) or {}
    obj = dict(obj)
    obj.setdefault("p", p)
    return WeightSpec.from_json(obj)


def sample_function(text, curve, seed=0):
    """Built-in boundary data ``runge``, ``poly:k``, ``laurent:k``, ``random:k``."""
    name, _, arg = str(text).removeprefix("sample:").partition(":")
    z = curve.z
    if name == "runge":
        z0 = complex(arg) if arg else 1.5 * float(np.max(np.abs(z)))
        return 1.0 / (z - z0)
    try:
        k = int(arg) if arg else 1
    except ValueError as exc:
        raise ConfigError(f"bad sample argument in {text!r}") from exc
    if name == "poly":
        return z**k
    if name == "laurent":
        return z**k + z ** (-k)
    if name == "random":
        rng = np.random.default_rng(seed)
        c = rng.normal(size=2 * k + 1) + 1j * rng.normal(size=2 * k + 1)
        return sum(c[j + k] * z**j for j in range(-k, k + 1))
    raise ConfigError(f"unknown sample function {text!r}")


def _complex(v):
    if isinstance(v, (list, tuple)):
        return complex(v[0], v[1])
    return complex(v)


def parse_pair(text, curve) -> CoefficientPair:
    """Closed-form coefficient pairs.

    JSON keys: ``A``, ``B`` (numbers or ``[re, im]``), optional
    ``B_step: {"at": fraction of length, "jump": radians}`` multiplying ``B``
    by ``exp(-i jump 1[s >= at S])`` (so ``arg D`` steps by ``jump``), or
    ``phase_alpha`` for the exponential-phase pair.
    """
    obj = _load_json_ref(text) or {}
    if "phase_alpha" in obj:
        return phase_pair(curve, float(obj["phase_alpha"]))
    a = _complex(obj.get("A", 1.0))
    b = _complex(obj.get("B", -1.0))
    if "B_step" in obj:
        at = float(obj["B_step"]["at"]) * curve.length
        jump = float(obj["B_step"]["jump"])
        return CoefficientPair(a, lambda s, z: b * np.exp(1j * jump * (s >= at)), jump_sites=(at,))
    return CoefficientPair(a, b)


# -- artifacts ------------------------------------------------------------------


def config_hash(cfg: dict) -> str:
    keep = {k: v for k, v in cfg.items() if k not in ("out_dir", "config", "func")}
    blob = json.dumps(keep, sort_keys=True, default=str).encode()
    return hashlib.sha256(blob).hexdigest()


def write_csv(path: Path, digest: str, header, rows):
    buf = io.StringIO()
    buf.write(f"# config-sha256={digest}\n")
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for r in rows:
        w.writerow([f"{x:.17g}" if isinstance(x, float) else x for x in r])
    path.write_text(buf.getvalue())
    return str(path)


def write_json(path: Path, digest: str, obj: dict):
    obj = {"config_sha256": digest, **obj}
    path.write_text(json.dumps(obj, indent=2, sort_keys=True, default=_jsonable) + "\n")
    return str(path)


def _jsonable(x):
    if isinstance(x, (np.floating, np.integer)):
        return x.item()
    if isinstance(x, np.bool_):
        return bool(x)
    if isinstance(x, complex):
        return [x.real, x.imag]
    if isinstance(x, np.ndarray):
        return x.tolist()
    return str(x)


# -- commands -------------------------------------------------------------------


def _out(cfg) -> Path:
    out = Path(cfg.get("out_dir") or ".")
    out.mkdir(parents=True, exist_ok=True)
    return out


def cmd_gen(cfg, digest):
    spec = parse_curve(cfg["curve"])
    p, side = float(cfg["p"]), cfg.get("side", "plus")
    ns = _index_list(cfg["n"])
    mp = build_map(spec, "phi" if side == "plus" else "psi")
    build = faber_plus if side == "plus" else faber_minus
    with ThreadPoolExecutor(max_workers=threads()) as pool:
        polys = list(pool.map(lambda n: build(mp, p, n), ns))
    out = _out(cfg)
    files = []
    for P in polys:
        rows = P.to_rows(tol=1e-13)
        files.append(write_csv(out / f"faber_{side}_p{p:g}_n{P.n}.csv", digest, ["degree", "re", "im"], rows))
        files.append(write_json(out / f"faber_{side}_p{p:g}_n{P.n}.json", digest, P.to_json()))
    return {"artifacts": files}


def _index_list(v):
    if isinstance(v, int):
        return [v]
    text = str(v)
    if ":" in text:
        a, b = text.split(":")
        return list(range(int(a), int(b) + 1))
    return [int(x) for x in text.split(",")]


def _jumps(cfg, length):
    obj = _load_json_ref(cfg.get("jumps")) or []
    return [(float(s) * length if cfg.get("jumps_fractional") else float(s), float(h)) for s, h in obj]


def cmd_check(cfg, digest):
    spec = parse_curve(cfg["curve"])
    p = float(cfg["p"])
    curve = resample(spec, int(cfg["N"]))
    weight = parse_weight(cfg.get("weight"), p)
    car = check_regular(curve)
    scan = muckenhoupt_scan(weight, curve)
    rep = beta_exponents(weight, _jumps(cfg, spec.length), p=p, length=spec.length,
                         literal_corollary=bool(cfg.get("literal_corollary")))
    cand = condition_alpha(rep, p)
    report = {
        "curve": spec.to_json(),
        "weight": weight.to_json(),
        "carleson": {"sup_ratio": car.sup_ratio, "is_regular": car.is_regular},
        "ap_estimate": scan.ap_estimate,
        "in_class": scan.in_class,
        "ap_growth": scan.growth,
        "condition_alpha_p1": cand,
        **rep.to_json(),
    }
    report["ap_estimate"] = scan.ap_estimate
    violations = rep.violations(p)
    if not scan.in_class:
        violations.append({"condition": "A_p", "ap_estimate": scan.ap_estimate, "growth": scan.growth})
    if not car.is_regular:
        violations.append({"condition": "carleson", "sup_ratio": car.sup_ratio})
    report["violations"] = violations
    path = write_json(_out(cfg) / "check.json", digest, report)
    if violations and cfg.get("strict"):
        raise AdmissibilityError("condition check failed", violations)
    return {"artifacts": [path], "report": report}


def _setup(cfg):
    spec = parse_curve(cfg["curve"])
    p = float(cfg["p"])
    params = SpaceParams(spec, int(cfg["N"]), p, parse_weight(cfg.get("weight"), p))
    f = sample_function(cfg.get("f", "sample:runge"), params.curve, int(cfg.get("seed", 0)))
    return params, f


def cmd_solve(cfg, digest):
    params, f = _setup(cfg)
    pair = parse_pair(cfg.get("pair"), params.curve)
    m = int(cfg.get("m", -1))
    sol = solve_nonhomogeneous(pair, params.curve, f, params.weight, params.p, m=m,
                               vanish_at_infinity=m < 0, strict=bool(cfg.get("strict")))
    out = _out(cfg)
    c = params.curve
    rows = [(float(s), float(a.real), float(a.imag), float(b.real), float(b.imag))
            for s, a, b in zip(c.s, sol.F_plus, sol.F_minus)]
    files = [write_csv(out / "solution_trace.csv", digest, ["s", "re_Fplus", "im_Fplus", "re_Fminus", "im_Fminus"], rows)]
    # evaluator grid: a few interior and exterior probe points
    probes = np.concatenate([0.5 * c.z[:: max(1, c.n // 16)], 2.0 * c.z[:: max(1, c.n // 16)]])
    vals = sol(probes)
    files.append(write_csv(out / "solution_grid.csv", digest, ["re_z", "im_z", "re_F", "im_F"],
                           [(float(z.real), float(z.imag), float(v.real), float(v.imag)) for z, v in zip(probes, vals)]))
    files.append(write_json(out / "solve.json", digest, {"residual": sol.residual, **sol.diagnostics}))
    return {"artifacts": files, "residual": sol.residual}


def _expansion(cfg, params, f, M1, M2, truncations=None):
    strict = bool(cfg.get("strict"))
    if cfg.get("phase_alpha") is not None:
        return expand_phase_system(f, float(cfg["phase_alpha"]), params, M1, M2, strict, truncations)
    pair = parse_pair(cfg.get("pair") or {"A": 1.0, "B": 1.0}, params.curve)
    return expand_double(f, pair, params, M1, M2, strict, truncations)


def cmd_expand(cfg, digest):
    params, f = _setup(cfg)
    M1 = int(cfg.get("M1") or params.curve.n // 8)
    M2 = int(cfg.get("M2") or params.curve.n // 8)
    ex = _expansion(cfg, params, f, M1, M2)
    out = _out(cfg)
    rows = [(n, float(c.real), float(c.imag)) for n, c in enumerate(ex.plus_coeffs)]
    rows += [(-(n + 1), float(c.real), float(c.imag)) for n, c in enumerate(ex.minus_coeffs)]
    files = [
        write_csv(out / "coefficients.csv", digest, ["degree", "re", "im"], rows),
        write_csv(out / "residuals.csv", digest, ["M1", "M2", "residual"], ex.residual_table()),
        write_json(out / "expansion.json", digest, ex.to_json()),
    ]
    return {"artifacts": files}


def cmd_study(cfg, digest):
    params, f = _setup(cfg)
    lo, hi = int(cfg.get("mmin", 8)), int(cfg.get("mmax", 32))
    ms = list(range(lo, hi + 1))
    ex = _expansion(cfg, params, f, hi, hi, [(m, m) for m in ms])
    res = [ex.residuals[(m, m)] for m in ms]
    slope = decay_slope(ms, res)
    out = _out(cfg)
    files = [
        write_csv(out / "residuals.csv", digest, ["M1", "M2", "residual"], [(m, m, r) for m, r in zip(ms, res)]),
        write_json(out / "study.json", digest, {
            "slope": slope,
            "convergent": slope < -0.05,
            "monotone": bool(np.all(np.diff(res) <= 1e-9)),
            "truncations": ms,
            "residuals": res,
            "solver_residual": ex.solver_residual,
            "diagnostics": ex.diagnostics,
        }),
    ]
    return {"artifacts": files, "slope": slope, "convergent": slope < -0.05}


COMMANDS = {"gen": cmd_gen, "check": cmd_check, "solve": cmd_solve, "expand": cmd_expand, "study": cmd_study}

DEFAULTS = {"curve": "circle", "p": 2.0, "N": 1024, "strict": False, "seed": 0}


def build_parser():
    ap = argparse.ArgumentParser(prog="faberlab", description=__doc__.splitlines()[0])
    ap.add_argument("--version", action="version", version=__version__)
    sub = ap.add_subparsers(dest="command", required=True)

    def common(sp):
        sp.add_argument("--config", help="JSON file with option values (flags override it)")
        sp.add_argument("--curve", help="circle[:R], ellipse:a,b, JSON or CSV table")
        sp.add_argument("--p", type=float)
        sp.add_argument("--N", type=int, help="curve grid size (power of two)")
        sp.add_argument("--weight", help='JSON, e.g. {"points":[3.14],"alphas":[0.5]}')
        sp.add_argument("--strict", action="store_true", default=None)
        sp.add_argument("--out-dir", dest="out_dir")
        sp.add_argument("--seed", type=int)

    sp = sub.add_parser("gen", help="generate Faber polynomials")
    common(sp)
    sp.add_argument("--n", required=False, help="index, list a,b,c or range a:b")
    sp.add_argument("--side", choices=["plus", "minus"])

    sp = sub.add_parser("check", help="regularity, A_p scan and exponent window")
    common(sp)
    sp.add_argument("--jumps", help="JSON list of [s, h] phase jumps")
    sp.add_argument("--literal-corollary", dest="literal_corollary", action="store_true", default=None)

    for name in ("solve", "expand", "study"):
        sp = sub.add_parser(name)
        common(sp)
        sp.add_argument("--f", help="sample:runge | sample:poly:k | sample:laurent:k | sample:random:k")
        sp.add_argument("--pair", help='JSON, e.g. {"A":1,"B":-1} or {"phase_alpha":0.2}')
        sp.add_argument("--phase-alpha", dest="phase_alpha", type=float)
        if name == "solve":
            sp.add_argument("--m", type=int)
        if name == "expand":
            sp.add_argument("--M1", type=int)
            sp.add_argument("--M2", type=int)
        if name == "study":
            sp.add_argument("--mmin", type=int)
            sp.add_argument("--mmax", type=int)
    return ap


def resolve_config(args) -> dict:
    cfg = dict(DEFAULTS)
    if args.config:
        path = Path(args.config)
        if not path.exists():
            raise ConfigError(f"config file not found: {args.config}")
        try:
            cfg.update(json.loads(path.read_text()))
        except json.JSONDecodeError as exc:
            raise ConfigError(f"invalid config file {args.config}") from exc
    for k, v in vars(args).items():
        if v is not None and k != "config":
            cfg[k] = v
    n = int(cfg["N"])
    if n < 16 or n & (n - 1):
        raise ConfigError(f"N must be a power of two >= 16, got {n}")
    if not float(cfg["p"]) > 1:
        raise ConfigError("p must exceed 1")
    if cfg["command"] == "gen" and "n" not in cfg:
        raise ConfigError("gen needs --n")
    return cfg


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_CONFIG if exc.code else 0
    try:
        cfg = resolve_config(args)
        digest = config_hash(cfg)
        with warnings.catch_warnings(record=True) as caught:
            warnings.simplefilter("always", AdmissibilityWarning)
            result = COMMANDS[cfg["command"]](cfg, digest)
        admissibility = [str(w.message) for w in caught if issubclass(w.category, AdmissibilityWarning)]
        if admissibility:
            result["warnings"] = admissibility
        print(json.dumps(result, default=_jsonable, sort_keys=True))
        return 0
    except (ConfigError, ParameterError, DataError, UnsupportedCurveError, DomainError, FileNotFoundError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (AdmissibilityError, ConditionError, NotATraceError) as exc:
        violations = getattr(exc, "violations", [])
        print(json.dumps({"error": str(exc), "violations": violations}, default=_jsonable), file=sys.stderr)
        return EXIT_CONDITION
    except (AccuracyError, BranchError, CanonicalTraceError, FaberLabError, np.linalg.LinAlgError) as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC


if __name__ == "__main__":
    sys.exit(main())
