"""Command-line entry point.

Every command writes its tables and a ``summary.txt`` into ``--output``; the last
line of the summary (also echoed to stdout) is ``STATUS=ok`` or ``STATUS=error``.
Options may also come from a flat ``key = value`` file given by ``--config``;
keys are option names without the leading dashes, and flags on the command line
win over the file.
"""

from __future__ import annotations

import argparse
import csv
import math
import os
import sys
from pathlib import Path

import numpy as np

from .asym import derive_seed, verify_clt_mu, verify_clt_s
from .bandwidth import CvConfig, select_bandwidth, select_scale_bandwidth
from .dgp import Dataset, DesignSpec, ErrorModel, Subject, TrueCurves, default_curves, substream, synthesize_dataset
from .diagnostics import (EmpiricalProcessFrame, coupling_discrepancy_sweep, coupling_lag_rule,
                          modulus_sweep)
from .estimate import FitConfig, default_grid, fit_curves, fit_mu_curve
from .exceptions import ConfigurationError, DataError, LadCurvesError
from .kernel import FAMILIES

__all__ = ["main", "ingest_csv", "export_csv", "read_config", "robustness_demo", "build_parser"]

HEADER = ["subject_id", "x", "y"]
COMMANDS = ("fit", "bandwidth", "simulate", "diagnose", "verify", "demo-robustness")


def fmt(v) -> str:
    """17 significant digits, enough to round-trip any double."""
    if isinstance(v, (bool, np.bool_)):
        return str(int(v))
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if isinstance(v, (float, np.floating)):
        return format(float(v), ".17g")
    return str(v)


# ------------------------------------------------------------------------- CSV I/O


def _id_key(sid: str):
    return (0, int(sid), "") if sid.lstrip("-").isdigit() else (1, 0, sid)


def ingest_csv(path) -> Dataset:
    """Read ``subject_id,x,y`` rows into a :class:`Dataset`.

    Subjects are ordered by id (numerically when the ids are integers), points
    by x; the domain is ``[min x, max x]``.
    """
    path = Path(path)
    if not path.is_file():
        raise DataError(f"{path}: no such file")
    groups: dict[str, tuple[list, list]] = {}
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None:
            raise DataError(f"{path}: empty file")
        if [h.strip() for h in header] != HEADER:
            raise DataError(f"{path}:1: header must be 'subject_id,x,y', got {','.join(header)!r}")
        for row in reader:
            line = reader.line_num
            if not row or all(not c.strip() for c in row):
                continue
            if len(row) != 3:
                raise DataError(f"{path}:{line}: expected 3 fields, got {len(row)}")
            sid = row[0].strip()
            if not sid:
                raise DataError(f"{path}:{line}: empty subject_id")
            try:
                x, y = float(row[1]), float(row[2])
            except ValueError:
                raise DataError(f"{path}:{line}: cannot parse {row[1]!r}, {row[2]!r} as numbers") from None
            if not (math.isfinite(x) and math.isfinite(y)):
                raise DataError(f"{path}:{line}: non-finite value")
            xs, ys = groups.setdefault(sid, ([], []))
            xs.append(x)
            ys.append(y)
    if not groups:
        raise DataError(f"{path}: no data rows")
    ids = sorted(groups, key=_id_key)
    allx = np.concatenate([groups[i][0] for i in ids])
    subs = []
    for i in ids:
        x, y = np.asarray(groups[i][0]), np.asarray(groups[i][1])
        # sort by (x, y) so duplicate-x rows do not depend on input order
        order = np.lexsort((y, x))
        subs.append(Subject(i, x[order], y[order]))
    return Dataset(tuple(subs), (float(allx.min()), float(allx.max())))


def export_csv(data: Dataset, path) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(HEADER)
        for s in data.subjects:
            for x, y in zip(s.x, s.y):
                w.writerow([s.id, fmt(x), fmt(y)])


def write_table(path, columns, rows) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(columns)
        for r in rows:
            w.writerow([fmt(v) for v in r])


def write_summary(outdir: Path, record: dict, status: str) -> str:
    lines = [f"{k}={fmt(v)}" for k, v in record.items()]
    lines.append(f"STATUS={status}")
    (outdir / "summary.txt").write_text("\n".join(lines) + "\n", encoding="utf-8")
    return lines[-1]


# -------------------------------------------------------------------------- config


def read_config(path) -> list[tuple[str, str]]:
    """Parse a flat ``key = value`` file; ``#`` starts a comment."""
    items = []
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise ConfigurationError(f"cannot read config {path}: {exc}") from None
    for n, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigurationError(f"{path}:{n}: expected 'key = value'")
        key, val = (p.strip() for p in line.split("=", 1))
        items.append((key.replace("_", "-"), val))
    return items


def _config_argv(items, sub: argparse.ArgumentParser) -> list[str]:
    known = {}
    for act in sub._actions:
        for opt in act.option_strings:
            if opt.startswith("--"):
                known[opt[2:]] = act
    argv = []
    for key, val in items:
        if key == "config" or key not in known:
            raise ConfigurationError(f"unknown config key {key!r}")
        act = known[key]
        if act.nargs == 0:
            if val.lower() in ("1", "true", "yes", "on"):
                argv.append("--" + key)
            elif val.lower() not in ("0", "false", "no", "off"):
                raise ConfigurationError(f"config key {key!r} expects a boolean")
        else:
            argv += ["--" + key, val]
    return argv


def _floats(text: str) -> list[float]:
    try:
        return [float(v) for v in text.replace(",", " ").split()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected a list of numbers, got {text!r}") from None


def _positive(kind):
    def conv(text):
        v = kind(text)
        if v <= 0:
            raise argparse.ArgumentTypeError(f"must be positive, got {text}")
        return v
    return conv


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="ladcurves", description="Local LAD location/scale curves.")
    subs = p.add_subparsers(dest="command", required=True)

    def common(sp):
        sp.add_argument("--config", help="flat key = value file; command-line flags win")
        sp.add_argument("--seed", type=int, default=0)
        sp.add_argument("--kernel", default="epanechnikov", choices=FAMILIES)
        sp.add_argument("--bandwidth-mu", type=_positive(float))
        sp.add_argument("--bandwidth-s", type=_positive(float))
        sp.add_argument("--grid", type=_positive(int), default=101, help="number of grid points")
        sp.add_argument("--replications", type=_positive(int), default=200)
        sp.add_argument("--threads", type=_positive(int), default=os.cpu_count() or 1)
        sp.add_argument("--output", default="ladcurves-out", help="output directory")

    def sim(sp, n=50, m=40):
        sp.add_argument("--error-model", default="iid innovation=normal",
                        help="e.g. 'noncausal_linear rho=0.5 innovation=normal'")
        sp.add_argument("--n-subjects", type=_positive(int), default=n)
        sp.add_argument("--points", type=_positive(int), default=m, help="points per subject")
        sp.add_argument("--visit-order", default="sorted", choices=("sorted", "shuffled", "strided"))

    sp = subs.add_parser("fit", help="jackknife location and scale curves from a CSV")
    common(sp)
    sp.add_argument("--input", required=True)
    sp.add_argument("--clamp-negative-scale", action="store_true")

    sp = subs.add_parser("bandwidth", help="subject-wise cross-validated bandwidth")
    common(sp)
    sp.add_argument("--input", required=True)
    sp.add_argument("--criterion", default="LAD", choices=("LAD", "LS", "lad", "ls"))
    sp.add_argument("--candidates", type=_floats, help="bandwidth list; default is 12 log-spaced values")
    sp.add_argument("--max-subjects", type=_positive(int))
    sp.add_argument("--scale", action="store_true", help="also select the scale bandwidth")

    sp = subs.add_parser("simulate", help="synthetic dataset from the default curves")
    common(sp)
    sim(sp)

    sp = subs.add_parser("diagnose", help="coupling discrepancy and modulus-of-continuity tables")
    common(sp)
    sim(sp, 80, 100)
    sp.add_argument("--sizes", type=_floats, default=[500, 1000, 2000, 4000, 8000])
    sp.add_argument("--deltas", type=_floats, default=[0.4, 0.2, 0.1, 0.05])
    sp.add_argument("--lambda", dest="lam", type=_positive(float), default=3.0)
    sp.add_argument("--seeds", type=_positive(int), default=10, help="datasets per size in the sweep")

    sp = subs.add_parser("verify", help="Monte Carlo check of the limiting variance at one x")
    common(sp)
    sim(sp, 100, 100)
    sp.add_argument("--x", type=float, default=0.3)
    sp.add_argument("--target", default="mu", choices=("mu", "s"))
    sp.add_argument("--jackknife", action="store_true")

    sp = subs.add_parser("demo-robustness", help="outlying-subject robustness of LAD vs local mean")
    common(sp)
    sp.add_argument("--seeds", type=_positive(int), default=20)
    sp.add_argument("--noise", type=_positive(float), default=0.15, help="scale curve of the synthetic data")
    return p


def _parse(argv):
    parser = build_parser()
    # find --config first so that the file can supply required options
    pre = argparse.ArgumentParser(add_help=False)
    pre.add_argument("command", nargs="?")
    pre.add_argument("--config")
    known, _ = pre.parse_known_args(argv)
    if known.config and known.command in COMMANDS:
        sub = parser._subparsers._group_actions[0].choices[known.command]
        extra = _config_argv(read_config(known.config), sub)
        argv = [argv[0]] + extra + list(argv[1:])
    return parser.parse_args(argv)


# ------------------------------------------------------------------------ commands


def _model(args) -> ErrorModel:
    return ErrorModel.from_string(args.error_model)


def _design(args) -> DesignSpec:
    return DesignSpec.balanced(args.n_subjects, args.points, visit_order=args.visit_order)


def cmd_fit(args, out: Path) -> dict:
    data = ingest_csv(args.input)
    info = {}
    b, h = args.bandwidth_mu, args.bandwidth_s
    cv = CvConfig(kernel=args.kernel)
    if b is None:
        b, _ = select_bandwidth(data, cv)
        info["bandwidth_mu_source"] = "cv"
    if h is None:
        h, _ = select_scale_bandwidth(data, b, cv)
        info["bandwidth_s_source"] = "cv"
    cfg = FitConfig(b, h, args.kernel, grid_size=args.grid, clamp_negative_scale=args.clamp_negative_scale)
    mu, s = fit_curves(data, cfg)
    write_table(out / "mu.csv", ["x", "mu", "n_effective"], zip(mu.grid, mu.values, mu.n_effective))
    write_table(out / "s.csv", ["x", "s", "n_effective", "negative"],
                zip(s.grid, s.values, s.n_effective, s.flags))
    return {"subjects": data.n_subjects, "observations": data.total, "bandwidth_mu": b,
            "bandwidth_s": h, "kernel": args.kernel, "grid_points": mu.grid.size,
            "missing_mu": int(mu.missing.sum()), "negative_s": int(s.flags.sum()), **info}


def cmd_bandwidth(args, out: Path) -> dict:
    data = ingest_csv(args.input)
    cfg = CvConfig(candidate_bandwidths=args.candidates, criterion=args.criterion, kernel=args.kernel,
                   max_subjects_evaluated=args.max_subjects)
    b, table = select_bandwidth(data, cfg)
    write_table(out / "cv.csv", ["bandwidth", "score"], table)
    rec = {"criterion": cfg.criterion, "bandwidth_mu": b}
    if args.scale:
        h, stable = select_scale_bandwidth(data, b, cfg)
        write_table(out / "cv_scale.csv", ["bandwidth", "score"], stable)
        rec["bandwidth_s"] = h
    return rec


def cmd_simulate(args, out: Path) -> dict:
    model = _model(args)
    data = synthesize_dataset(_design(args), default_curves(), model, args.seed)
    export_csv(data, out / "data.csv")
    return {"subjects": data.n_subjects, "observations": data.total, "error_model": model.to_string(),
            "curves": "sine"}


def cmd_diagnose(args, out: Path) -> dict:
    model = _model(args)
    curves = default_curves()
    b = args.bandwidth_mu or 0.1
    rows = coupling_discrepancy_sweep([int(n) for n in args.sizes], curves, model, lam=args.lam,
                                      bandwidth=b, seeds=args.seeds, seed=args.seed)
    write_table(out / "discrepancy.csv", ["N", "coupling_lag", "median_discrepancy"],
                [(r["N"], r["coupling_lag"], r["median_discrepancy"]) for r in rows])
    design = _design(args)
    k = coupling_lag_rule(design.total, args.lam)
    frame = EmpiricalProcessFrame.simulate(design, curves, model, k, b, seed=args.seed, kernel=args.kernel)
    x_grid = default_grid(curves.domain, b, 21)
    y_grid = np.linspace(-2.5, 2.5, 41)
    mod = modulus_sweep(frame, args.deltas, x_grid, y_grid, args.replications, seed=args.seed)
    write_table(out / "modulus.csv", ["delta", "sup_abs_D", "centering_se", "phi_n"],
                [(r["delta"], r["sup_abs_D"], r["centering_se"], r["phi_n"]) for r in mod])
    return {"error_model": model.to_string(), "lambda": args.lam, "bandwidth": b,
            "modulus_N": design.total, "modulus_coupling_lag": k}


def cmd_verify(args, out: Path) -> dict:
    model = _model(args)
    curves = default_curves()
    design = _design(args)
    if args.target == "mu":
        rule = args.bandwidth_mu if args.bandwidth_mu is not None else "optimal"
        rep = verify_clt_mu(design, curves, model, args.x, rule, args.replications, args.seed,
                            jackknife=args.jackknife, kernel=args.kernel, threads=args.threads)
    else:
        if args.bandwidth_mu is None or args.bandwidth_s is None:
            raise ConfigurationError("verify --target s needs --bandwidth-mu and --bandwidth-s")
        rep = verify_clt_s(design, curves, model, args.x, args.bandwidth_mu, args.bandwidth_s,
                           args.replications, args.seed, kernel=args.kernel, threads=args.threads)
    write_table(out / "replications.csv", ["replication", "estimate"], enumerate(rep.per_rep_estimates))
    return {"target": args.target, **rep.summary()}


# ------------------------------------------------------------------ robustness demo


def hormone_curves(noise: float = 0.15) -> TrueCurves:
    """Smooth low-then-rising profile on [-8, 15] resembling a log-hormone cycle.

    ``noise`` is the constant scale curve (median absolute deviation units).
    """
    lo, hi, mid, w = -0.5, 2.5, 3.0, 2.5

    def mu(x):
        return lo + (hi - lo) / (1 + np.exp(-(np.asarray(x, float) - mid) / w))

    def dmu(x):
        g = 1 / (1 + np.exp(-(np.asarray(x, float) - mid) / w))
        return (hi - lo) * g * (1 - g) / w

    def d2mu(x):
        g = 1 / (1 + np.exp(-(np.asarray(x, float) - mid) / w))
        return (hi - lo) * g * (1 - g) * (1 - 2 * g) / (w * w)

    const = lambda v: (lambda x: v + 0.0 * np.asarray(x, float))  # noqa: E731
    return TrueCurves(mu, dmu, d2mu, const(noise), const(0.0), const(0.0), (-8.0, 15.0), "hormone")


def robustness_demo(seed: int = 0, seeds: int = 20, n_subjects: int = 22, points: int = 24,
                    bandwidth: float = 2.0, shift: float = 3.0, fraction: float = 0.1,
                    grid_size: int = 101, kernel="epanechnikov", noise: float = 0.15) -> list[dict]:
    """Sup-shift of LAD and local-mean curves when a few subjects are removed or shifted down.

    For each of ``seeds`` synthetic datasets, ``round(fraction * n_subjects)``
    subjects are picked at random; the curves are refitted without them and with
    their responses lowered by ``shift``. The LAD curve is the local weighted
    median and the baseline the local weighted mean, with the same kernel and
    bandwidth. Returns one row per (dataset, estimator, perturbation).
    """
    curves = hormone_curves(noise)
    model = ErrorModel.noncausal_linear(0.5)
    design = DesignSpec.balanced(n_subjects, points, a=curves.domain[0], b=curves.domain[1])
    grid = default_grid(curves.domain, math.sqrt(2) * bandwidth, grid_size)
    k = max(1, int(round(fraction * n_subjects)))
    rows = []
    for r in range(seeds):
        s = derive_seed(seed, 7, r)
        data = synthesize_dataset(design, curves, model, s)
        picked = np.sort(substream(s, 99).choice(n_subjects, k, replace=False))
        removed = Dataset(tuple(sub for i, sub in enumerate(data.subjects) if i not in set(picked)), data.domain)
        shifted = data.map_y(lambda x, y: y - shift, which=picked)
        for name, method in (("LAD", "raw"), ("local_mean", "mean")):
            base = fit_mu_curve(data, grid, bandwidth, kernel, method).values
            for label, d in (("removed", removed), ("shifted", shifted)):
                vals = fit_mu_curve(d, grid, bandwidth, kernel, method).values
                rows.append({"dataset": r, "estimator": name, "perturbation": label,
                             "sup_shift": float(np.nanmax(np.abs(vals - base)))})
    return rows


def cmd_demo_robustness(args, out: Path) -> dict:
    b = args.bandwidth_mu or 2.0
    rows = robustness_demo(args.seed, args.seeds, bandwidth=b, grid_size=args.grid, kernel=args.kernel,
                           noise=args.noise)
    write_table(out / "robustness.csv", ["dataset", "estimator", "perturbation", "sup_shift"],
                [(r["dataset"], r["estimator"], r["perturbation"], r["sup_shift"]) for r in rows])
    rec = {"datasets": args.seeds, "bandwidth": b, "noise": args.noise}
    for est in ("LAD", "local_mean"):
        for pert in ("removed", "shifted"):
            v = [r["sup_shift"] for r in rows if r["estimator"] == est and r["perturbation"] == pert]
            rec[f"median_sup_shift_{est}_{pert}"] = float(np.median(v))
    rec["shift_ratio_LAD_over_mean"] = rec["median_sup_shift_LAD_shifted"] / rec["median_sup_shift_local_mean_shifted"]
    return rec


HANDLERS = {
    "fit": cmd_fit,
    "bandwidth": cmd_bandwidth,
    "simulate": cmd_simulate,
    "diagnose": cmd_diagnose,
    "verify": cmd_verify,
    "demo-robustness": cmd_demo_robustness,
}


def main(argv=None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    try:
        args = _parse(argv)
    except LadCurvesError as exc:
        print(f"error: {exc}", file=sys.stderr)
        print("STATUS=error")
        return exc.exit_code
    except SystemExit as exc:  # argparse usage errors
        return int(exc.code or 0)
    out = Path(args.output)
    try:
        out.mkdir(parents=True, exist_ok=True)
    except OSError as exc:
        print(f"error: cannot create {out}: {exc}", file=sys.stderr)
        print("STATUS=error")
        return 2
    head = {"command": args.command, "seed": args.seed}
    try:
        rec = HANDLERS[args.command](args, out)
    except (LadCurvesError, ArithmeticError) as exc:
        code = getattr(exc, "exit_code", 4)
        msg = f"{type(exc).__name__}: {exc}"
    else:
        print(write_summary(out, {**head, **rec}, "ok"))
        return 0
    print(f"error: {msg}", file=sys.stderr)
    print(write_summary(out, {**head, "error": msg.replace("\n", " "), "exit_code": code}, "error"))
    return code


if __name__ == "__main__":
    sys.exit(main())
