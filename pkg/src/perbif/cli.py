"""Command-line front end.

Every subcommand reads an experiment config (JSON) and writes CSV/JSON data
files into ``--out``; a ``report.json`` lists produced files, branch
terminations and invariant violations. The exit status is 1 when any
invariant is violated and 2 on config or I/O errors.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import logging
import math
import sys
from dataclasses import dataclass, field, fields
from importlib import resources
from pathlib import Path

from perbif import autonomous, lsred, spectral
from perbif.continuation import branch as br
from perbif.weights import HypothesisError, Weight, WeightStructureError, validate_hypotheses


MODES = ("eigs", "autonomous", "lscoeff", "local-branches", "continue", "diagram")
BUNDLED = ("e00.json", "bumps_even.json", "bumps_skew.json", "autonomous.json")

BRANCH_COLUMNS = ("branch_id", "origin_k", "origin_root", "lambda", "u0", "v0", "zeros", "winding",
                  "parity", "linf_u", "linf_du", "h2_norm", "residual")


class ConfigError(ValueError):
    pass


def fmt(x) -> str:
    if x is None:
        return ""
    if isinstance(x, bool):
        return str(x).lower()
    if isinstance(x, float):
        return format(x, ".17g")
    if hasattr(x, "value"):
        return str(x.value)
    return str(x)


@dataclass
class ExperimentConfig:
    weight: Weight
    name: str = "experiment"
    mode: str | None = None
    k: list[int] = field(default_factory=lambda: [1])
    k_max: int = 3
    lambda_min: float | None = None
    k0_lambda_min: float = -10.0
    n_subharmonic: int = 1
    continuation: br.ContinuationOptions = field(default_factory=br.ContinuationOptions)
    autonomous: dict | None = None
    source: str | None = None

    @property
    def period(self) -> float:
        return self.weight.period


def _line_of(text: str, key: str) -> int | None:
    for i, line in enumerate(text.splitlines(), 1):
        if f'"{key}"' in line:
            return i
    return None


def load_config(path: str | Path) -> ExperimentConfig:
    """Parse and validate an experiment config; errors carry line numbers where possible."""
    p = Path(path)
    if not p.exists():
        bundled = resources.files("perbif.configs") / p.name
        if bundled.is_file():
            text = bundled.read_text()
        else:
            raise ConfigError(f"{path}: no such config (bundled: {', '.join(BUNDLED)})")
    else:
        text = p.read_text()
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path}:{exc.lineno}:{exc.colno}: invalid JSON: {exc.msg}") from None
    if not isinstance(data, dict):
        raise ConfigError(f"{path}:1: top level must be an object")

    def where(key):
        ln = _line_of(text, key)
        return f"{path}:{ln}" if ln else str(path)

    if "weight" in data:
        wdata = data["weight"]
    elif "weight_file" in data:
        wp = (p.parent / data["weight_file"]) if p.exists() else Path(data["weight_file"])
        if not wp.exists():
            raise ConfigError(f"{where('weight_file')}: weight file {wp} does not exist")
        try:
            wdata = json.loads(wp.read_text())
        except json.JSONDecodeError as exc:
            raise ConfigError(f"{wp}:{exc.lineno}:{exc.colno}: invalid JSON: {exc.msg}") from None
    else:
        raise ConfigError(f"{path}: config needs 'weight' or 'weight_file'")
    try:
        w = Weight.from_dict(wdata)
    except (WeightStructureError, ValueError) as exc:
        raise ConfigError(f"{where('weight')}: {exc}") from None

    cfg = ExperimentConfig(weight=w, source=str(path))
    known = {f.name for f in fields(ExperimentConfig)} - {"weight", "continuation", "source"}
    for key, val in data.items():
        if key in ("weight", "weight_file", "continuation"):
            continue
        if key not in known:
            raise ConfigError(f"{where(key)}: unknown key {key!r}")
        setattr(cfg, key, val)
    if isinstance(cfg.k, int):
        cfg.k = [cfg.k]
    if not all(isinstance(k, int) and k >= 0 for k in cfg.k):
        raise ConfigError(f"{where('k')}: k must be nonnegative integers")
    if cfg.mode is not None and cfg.mode not in MODES:
        raise ConfigError(f"{where('mode')}: mode must be one of {', '.join(MODES)}")
    copts = data.get("continuation", {})
    opt_names = {f.name for f in fields(br.ContinuationOptions)}
    bad = set(copts) - opt_names
    if bad:
        raise ConfigError(f"{where(sorted(bad)[0])}: unknown continuation option(s) {sorted(bad)}")
    cfg.continuation = br.ContinuationOptions(**copts)
    _check_window(cfg, where)
    return cfg


def _check_window(cfg: ExperimentConfig, where=lambda k: "config"):
    for k in cfg.k:
        if k == 0:
            if not cfg.k0_lambda_min < 0.0:
                raise ConfigError(f"{where('k0_lambda_min')}: empty lambda window for k=0")
            continue
        lo = cfg.lambda_min
        seed = spectral.sigma(cfg.period, k, cfg.n_subharmonic) * (1.0 - cfg.continuation.seed_offset)
        if lo is not None and not lo < seed:
            raise ConfigError(f"{where('lambda_min')}: empty lambda window [{lo}, {seed}) for k={k}")


# writers ----------------------------------------------------------------------

class Writer:
    def __init__(self, out: Path):
        self.out = out
        self.files: list[str] = []
        out.mkdir(parents=True, exist_ok=True)

    def csv(self, name: str, header, rows) -> Path:
        buf = io.StringIO()
        wr = csv.writer(buf, lineterminator="\n")
        wr.writerow(header)
        for r in rows:
            wr.writerow([fmt(x) for x in r])
        return self._put(name, buf.getvalue())

    def json(self, name: str, obj) -> Path:
        return self._put(name, json.dumps(obj, indent=2, sort_keys=True, default=_json_default) + "\n")

    def _put(self, name, text) -> Path:
        path = self.out / name
        path.write_text(text)
        self.files.append(str(path))
        return path


def _json_default(x):
    if hasattr(x, "value"):
        return x.value
    if hasattr(x, "tolist"):
        return x.tolist()
    raise TypeError(f"not serializable: {type(x)}")


# modes ------------------------------------------------------------------------

def run_eigs(cfg: ExperimentConfig, wr: Writer, report: dict):
    n = cfg.n_subharmonic
    rows = []
    for k, sig, dim in br.find_bifurcation_points(cfg.period, cfg.k_max, n):
        _, gap = spectral.kernel_dimension(cfg.period, k, max(spectral.DEFAULT_N, k + 1), n)
        rows.append((k, sig, dim, gap))
        expect = 1 if k == 0 else 2
        if dim != expect:
            report["violations"].append(f"kernel dimension {dim} at k={k}, expected {expect}")
    wr.csv("eigs.csv", ("k", "sigma", "kernel_dim", "sv_gap"), rows)
    report["eigs"] = [(k, s) for k, s, _, _ in rows]


def run_autonomous(cfg: ExperimentConfig, wr: Writer, report: dict):
    opts = cfg.autonomous or {}
    a = float(opts.get("a", cfg.weight.mean() if cfg.weight.is_constant else 1.0))
    ks = opts.get("k", [1])
    lams = opts.get("lambdas", [-1.0, 0.0])
    rows = []
    for k in ks:
        for lam, orb in autonomous.orbit_grid(a, cfg.period, k, lams):
            if orb is None:
                rows.append((k, lam, None, None, None))
            else:
                rows.append((k, lam, orb.e, orb.u_plus, orb.tau_residual))
                if orb.tau_residual > autonomous.TAU_TOL:
                    report["violations"].append(f"tau residual {orb.tau_residual:.3g} at k={k}, lam={lam}")
    wr.csv("autonomous.csv", ("k", "lambda", "e", "u_plus", "tau_residual"), rows)


def lscoeff_payload(w: Weight, k: int) -> dict:
    c = lsred.compute_coefficients(w, k)
    rep = lsred.classify_structure(c)
    out = {"k": k, "sigma": c.sigma,
           "coefficients": dict(zip("abcde", c.as_tuple())),
           "structure": {"H": dict(zip(("i", "ii", "iii", "iv"), rep.satisfies_H)),
                         "H_all": rep.all_H, "eight_branch": rep.satisfies_8branch,
                         "subcrit_margins": rep.subcrit_margins, "even_like": rep.even_like,
                         "rtol": rep.rtol}}
    try:
        roots = lsred.solve_local_roots(c)
        out["roots"] = [{"index": r.index, "z": r.z, "w": r.w, "regular": r.regular,
                         "family": r.family.value, "residual": r.residual, "det": r.det} for r in roots]
    except lsred.StructureError as exc:
        out["roots"] = []
        out["note"] = str(exc)
    return out


def run_lscoeff(cfg: ExperimentConfig, wr: Writer, report: dict):
    payload = []
    for k in cfg.k:
        if k == 0:
            continue
        item = lscoeff_payload(cfg.weight, k)
        payload.append(item)
        for r in item["roots"]:
            if not r["regular"]:
                report["violations"].append(f"k={k} root {r['index']} is not regular")
    wr.json("lscoeff.json", payload)


def run_local(cfg: ExperimentConfig, wr: Writer, report: dict):
    rows = []
    for k in cfg.k:
        if k == 0:
            continue
        c = lsred.compute_coefficients(cfg.weight, k)
        try:
            roots = lsred.solve_local_roots(c)
        except lsred.StructureError as exc:
            report["notes"].append(str(exc))
            continue
        lam = c.sigma * (1.0 - cfg.continuation.seed_offset)
        for r in roots:
            p = lsred.local_predictor(c, r, lam)
            rows.append((k, r.index, r.family.value, lam, r.z, r.w, p.u0, p.v0, p.amplitude, p.phase))
    wr.csv("local_branches.csv",
           ("k", "root", "family", "lambda", "z", "w", "u0", "v0", "amplitude", "phase"), rows)


def _branch_jobs(cfg: ExperimentConfig, report: dict):
    jobs = []
    for k in cfg.k:
        if k == 0:
            continue
        c = lsred.compute_coefficients(cfg.weight, k)
        try:
            roots = lsred.solve_local_roots(c)
        except lsred.StructureError as exc:
            report["notes"].append(str(exc))
            continue
        opts = cfg.continuation
        if cfg.lambda_min is not None:
            opts = opts.with_(lambda_min=cfg.lambda_min)
        for r in roots:
            seed = br.seed_from_root(cfg.weight, c, r, opts.seed_offset)
            jobs.append((cfg.weight, seed, opts, br.BranchOrigin("eigen", k, r.index), c))
    return jobs


def check_branch(b: br.Branch, period: float) -> list[str]:
    """Invariant checks on an exported branch."""
    bad = []
    tag = b.origin.label()
    for i, p in enumerate(b.points):
        if p.residual is not None and p.residual >= 1e-8:
            bad.append(f"{tag}: point {i} residual {p.residual:.3g}")
        if p.winding is not None:
            if p.winding != b.winding:
                bad.append(f"{tag}: winding changes at point {i}")
            if p.zeros != 2 * p.winding:
                bad.append(f"{tag}: point {i} has {p.zeros} zeros, winding {p.winding}")
            if not p.lam < spectral.sigma(period, p.winding):
                bad.append(f"{tag}: point {i} at lam={p.lam} not below sigma_{p.winding}")
    return bad


def run_continue(cfg: ExperimentConfig, wr: Writer, report: dict, include_k0: bool = False):
    jobs = _branch_jobs(cfg, report)
    branches = br.run_jobs(jobs)
    if include_k0 and 0 in cfg.k:
        pos, neg = br.branch_k0(cfg.weight, cfg.continuation.with_(lambda_min=cfg.k0_lambda_min))
        branches = [pos, neg] + list(branches)
    rows = []
    manifest = []
    for bid, b in enumerate(branches):
        for p in b.points:
            rows.append((bid, b.origin.k, b.origin.root, p.lam, p.u0, p.v0, p.zeros, p.winding,
                         p.parity, p.linf_u, p.linf_du, p.h2_norm, p.residual))
        manifest.append({"branch_id": bid, "label": b.origin.label(), "origin_k": b.origin.k,
                         "origin_root": b.origin.root, "termination": b.termination.value,
                         "symmetry_class": b.symmetry_class.value if b.symmetry_class else None,
                         "n_points": len(b), "message": b.message, "loop_partner": b.loop_partner,
                         "folds": list(b.folds), "secondary_candidates": list(b.secondary_candidates),
                         "lambda_min": b.lambda_min})
        report["violations"].extend(check_branch(b, cfg.period))
    name = "diagram" if include_k0 else "branches"
    wr.csv(f"{name}.csv", BRANCH_COLUMNS, rows)
    wr.json(f"{name}_manifest.json", manifest)
    report["branches"] = [{"label": m["label"], "termination": m["termination"],
                           "symmetry_class": m["symmetry_class"]} for m in manifest]


def run(cfg: ExperimentConfig, mode: str, out: Path) -> dict:
    wr = Writer(out)
    report = {"mode": mode, "config": cfg.source, "files": wr.files, "violations": [], "notes": []}
    hyp = validate_hypotheses(cfg.weight)
    if not hyp.hloc and mode not in ("eigs",):
        raise HypothesisError("; ".join(hyp.violations) or "weight fails HLoc")
    if not hyp.hglob:
        report["notes"].append("weight fails HGlob: a priori bounds not guaranteed")
    if mode == "eigs":
        run_eigs(cfg, wr, report)
    elif mode == "autonomous":
        run_autonomous(cfg, wr, report)
    elif mode == "lscoeff":
        run_lscoeff(cfg, wr, report)
    elif mode == "local-branches":
        run_local(cfg, wr, report)
    elif mode == "continue":
        run_continue(cfg, wr, report)
    elif mode == "diagram":
        run_eigs(cfg, wr, report)
        run_local(cfg, wr, report)
        run_continue(cfg, wr, report, include_k0=True)
    else:
        raise ConfigError(f"unknown mode {mode!r}")
    files = list(wr.files)
    report["files"] = files + [str(out / "report.json")]
    wr.json("report.json", report)
    return report


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="perbif", description=__doc__.splitlines()[0])
    ap.add_argument("-v", "--verbose", action="store_true")
    sub = ap.add_subparsers(dest="mode", required=True)
    helps = {"eigs": "eigenvalues sigma_k and kernel dimensions",
             "autonomous": "periodic orbits of the constant-weight problem",
             "lscoeff": "reduced-model coefficients, structure report and roots",
             "local-branches": "local predictors at sigma_k",
             "continue": "continue all predicted branches from sigma_k",
             "diagram": "eigenvalues, predictors, k=0 and sigma_k branches"}
    for m in MODES:
        aliases = ["autoper"] if m == "autonomous" else []
        p = sub.add_parser(m, aliases=aliases, help=helps[m])
        p.add_argument("--config", default=None,
                       help="experiment JSON (path or bundled name such as e00.json)")
        p.add_argument("--out", default="perbif_out", help="output directory")
        p.add_argument("--k", type=int, action="append", default=None,
                       help="eigen-index (repeatable); for eigs the largest k")
        p.add_argument("--lambda-min", type=float, default=None)
        p.add_argument("--n-subharmonic", type=int, default=None)
        p.add_argument("--period", type=float, default=None, help="period when no config is given")
    return ap


def _config_from_args(args) -> ExperimentConfig:
    if args.config:
        cfg = load_config(args.config)
    else:
        T = args.period if args.period is not None else math.pi
        cfg = ExperimentConfig(weight=Weight.constant(1.0, T), name="default", source=None)
    mode = "autonomous" if args.mode == "autoper" else args.mode
    if args.k:
        if mode == "eigs":
            cfg.k_max = max(args.k)
        else:
            cfg.k = list(args.k)
    if args.lambda_min is not None:
        cfg.lambda_min = args.lambda_min
        if 0 in cfg.k and args.lambda_min < 0:
            cfg.k0_lambda_min = args.lambda_min
    if args.n_subharmonic is not None:
        if args.n_subharmonic < 1:
            raise ConfigError("--n-subharmonic must be >= 1")
        cfg.n_subharmonic = args.n_subharmonic
    if args.period is not None and args.config:
        raise ConfigError("--period conflicts with --config (the weight fixes the period)")
    _check_window(cfg)
    return cfg


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(message)s")
    mode = "autonomous" if args.mode == "autoper" else args.mode
    try:
        cfg = _config_from_args(args)
        report = run(cfg, mode, Path(args.out))
    except (ConfigError, HypothesisError, lsred.StructureError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    for f in report["files"]:
        print(f)
    for b in report.get("branches", []):
        print(f"{b['label']}: {b['termination']} ({b['symmetry_class']})")
    for n in report["notes"]:
        print(f"note: {n}", file=sys.stderr)
    for v in report["violations"]:
        print(f"violation: {v}", file=sys.stderr)
    return 1 if report["violations"] else 0


if __name__ == "__main__":
    sys.exit(main())
