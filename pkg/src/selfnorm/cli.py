"""Command-line entry point.

Subcommands: constants, boundary, tailbound, simulate, verify, lil.
Exit codes: 0 all checks pass, 1 a bound check failed, 2 usage/config error.
Seed precedence: --seed flag > config file > error (no silent default).
"""
from __future__ import annotations

import argparse
import csv
import io
import json
import math
import os
import sys

import numpy as np

from . import constants as konst
from . import bounds
from .mixture import (GaussianMixture, boundary, crossing_bound, measure_from_json,
                      mv_statistic, psi, rs_asymptotic, general_r_asymptotic)
from .processes import MvBrownianGrid, make_process, spec_from_json
from .experiments import (BoundReport, ExperimentConfig, REPORT_COLUMNS,
                          check_supermartingale_mean, config_echo,
                          crossing_frequency, lil_track, validate_moment_bound,
                          validate_tail_bound)

SCHEMA_VERSION = 1


class CliError(Exception):
    pass


def _load_json(path: str) -> dict:
    try:
        with open(path) as fh:
            return json.load(fh)
    except (OSError, json.JSONDecodeError) as exc:
        raise CliError(f"cannot read config {path}: {exc}") from exc


def _write_text(path: str | None, text: str) -> None:
    if path is None:
        sys.stdout.write(text)
    else:
        os.makedirs(os.path.dirname(path) or ".", exist_ok=True)
        with open(path, "w", newline="") as fh:
            fh.write(text)


def _rows_to_csv(rows: list[dict], columns) -> str:
    buf = io.StringIO()
    w = csv.DictWriter(buf, fieldnames=list(columns), lineterminator="\n",
                       extrasaction="ignore")
    w.writeheader()
    for row in rows:
        w.writerow({k: (repr(v) if isinstance(v, float) else v)
                    for k, v in row.items()})
    return buf.getvalue()


def _emit(rows: list[dict], columns, fmt: str, out: str | None, meta: dict) -> None:
    if fmt == "csv":
        _write_text(out, _rows_to_csv(rows, columns))
    else:
        doc = {"schema": SCHEMA_VERSION, "meta": meta, "rows": rows}
        _write_text(out, json.dumps(doc, indent=2, sort_keys=True) + "\n")


def _resolve_seed(args, cfg: dict | None) -> int:
    if getattr(args, "seed", None) is not None:
        return int(args.seed)
    if cfg is not None and "seed" in cfg:
        return int(cfg["seed"])
    raise CliError("no seed given: pass --seed or put \"seed\" in the config")


# ---------------------------------------------------------------------------
# subcommands
# ---------------------------------------------------------------------------

def cmd_constants(args) -> int:
    rows = []
    for g in args.gamma or []:
        row = {"kind": "gamma", "arg": g, "c_gamma": konst.c_gamma(g)}
        if args.r is not None:
            row["c_gamma_r"] = konst.c_gamma_r(g, args.r)
        rows.append(row)
    for lam in args.lam or []:
        k = konst.lil_constants(lam)
        rows.append({"kind": "lambda", "arg": lam, "h": k.h,
                     "b_lambda": k.b_lambda, "gamma": k.gamma,
                     "a_lambda": k.a_lambda})
    if args.l_normalization:
        alpha = args.alpha if args.alpha is not None else konst.DEFAULT_ALPHA
        beta = 2.0 * konst.unnormalized_integral(alpha, args.delta)
        cfg = konst.LConfig(alpha=alpha, delta=args.delta, beta=beta)
        rows.append({"kind": "L", "arg": args.delta, "alpha": alpha,
                     "beta": beta,
                     "growth_violations": len(konst.l_growth_violations(cfg))})
    if not rows:
        raise CliError("nothing requested: use --gamma, --lambda or --l-normalization")
    cols = sorted({k for r in rows for k in r})
    _emit(rows, cols, args.format, args.out, {"command": "constants"})
    return 0


def cmd_boundary(args) -> int:
    spec = _load_json(args.config)
    F = measure_from_json(spec)
    if isinstance(F, GaussianMixture):
        raise CliError("boundary tables need a scalar mixture, not a Gaussian one")
    if args.c <= 0.0:
        raise CliError("c must be positive")
    vg = np.geomspace(args.v_min, args.v_max, args.v_points)
    rows = []
    for v in vg:
        beta = boundary(float(v), args.c, F, args.r)
        row = {"v": float(v), "beta": beta,
               "psi_roundtrip": psi(beta, float(v), F, args.r)}
        if args.asymptotic == "rs":
            asy = rs_asymptotic(float(v), args.c, args.delta)
            row.update({"asymptotic": asy, "ratio": beta / asy})
        elif args.asymptotic == "general":
            asy = general_r_asymptotic(float(v), args.r)
            row.update({"asymptotic": asy, "ratio": beta / asy})
        rows.append(row)
    cols = sorted({k for r in rows for k in r})
    _emit(rows, cols, args.format, args.out,
          {"command": "boundary", "c": args.c, "r": args.r, "mixture": spec})
    return 0


def cmd_tailbound(args) -> int:
    rows = []
    for x in args.x or []:
        rows.append({"kind": "tail", "arg": x, "bound": bounds.tail_bound_cor22(x)})
    for p in args.p or []:
        rows.append({"kind": "moment", "arg": p,
                     "ratio_moment_bound": bounds.moment_bound_thm21(p),
                     "normalized_moment_bound": bounds.moment_bound_cor22(p)})
    if not rows:
        raise CliError("nothing requested: use --x or --p")
    cols = sorted({k for r in rows for k in r})
    _emit(rows, cols, args.format, args.out, {"command": "tailbound"})
    return 0


def cmd_simulate(args) -> int:
    cfg = _load_json(args.config)
    spec = spec_from_json(cfg["spec"] if "spec" in cfg else cfg)
    seed = _resolve_seed(args, cfg)
    horizon = int(args.horizon or cfg.get("horizon", 0))
    if horizon < 1:
        raise CliError("horizon must be a positive integer")
    cks = [int(c) for c in (args.checkpoints or cfg.get("checkpoints")
                            or range(1, horizon + 1))]
    if cks != sorted(set(cks)) or cks[0] < 1 or cks[-1] > horizon:
        raise CliError("checkpoints must be sorted, distinct and within the horizon")
    handle = make_process(spec, seed)
    mv_mix = (GaussianMixture(np.eye(spec.dim)) if isinstance(spec, MvBrownianGrid)
              else None)
    rows = []
    want = set(cks)
    for n in range(1, horizon + 1):
        st = handle.step()
        if n not in want:
            continue
        row = {"n": st.n, "a_n": st.a_n, "b_pow_r": st.b_pow_r,
               "v_n_sq": st.v_n_sq, "mu_sum": st.mu_sum}
        if mv_mix is not None:
            row["mv_stat"] = mv_statistic(st.extras["m_vec"],
                                          st.extras["t"] * np.eye(spec.dim), mv_mix)
        rows.append(row)
    cols = ["n", "a_n", "b_pow_r", "v_n_sq", "mu_sum"]
    if mv_mix is not None:
        cols.append("mv_stat")
    _emit(rows, cols, args.format, args.out,
          {"command": "simulate", "seed": seed, "spec": cfg})
    return 0


_VERIFY_OPS = ("supermartingale_mean", "tail_bound", "moment_bound", "crossing")


def _experiment_from_json(obj: dict, seed: int) -> ExperimentConfig:
    return ExperimentConfig(
        spec=spec_from_json(obj["spec"]),
        seed=int(obj.get("seed", seed)),
        paths=int(obj["paths"]),
        horizon=int(obj["horizon"]),
        checkpoints=tuple(obj.get("checkpoints", ())),
        lambda_grid=tuple(obj.get("lambda_grid", ())),
        x_grid=tuple(obj.get("x_grid", ())),
        p_list=tuple(obj.get("p_list", ())),
        statistic=obj.get("statistic", "auto"),
        se_slack=float(obj.get("se_slack", 3.0)),
    )


def run_suite(suite: dict, seed: int, workers: int | None) -> list[tuple[str, list[BoundReport], dict]]:
    if suite.get("schema") != SCHEMA_VERSION:
        raise CliError(f"unsupported suite schema {suite.get('schema')!r}")
    results = []
    for entry in suite["experiments"]:
        name = entry["name"]
        op = entry["op"]
        if op not in _VERIFY_OPS:
            raise CliError(f"unknown op {op!r} in experiment {name!r}")
        cfg = _experiment_from_json(entry["config"], seed)
        op_args = entry.get("op_args", {})
        if op == "supermartingale_mean":
            reports = check_supermartingale_mean(cfg, workers=workers)
        elif op == "tail_bound":
            reports = validate_tail_bound(cfg, float(op_args["y"]), workers=workers)
        elif op == "moment_bound":
            reports = validate_moment_bound(
                cfg, tuple(op_args.get("p_list", ())) or None, workers=workers)
        else:
            F = measure_from_json(op_args["mixture"])
            if "c" in op_args:
                c = float(op_args["c"])
            elif "c_over_mass" in op_args:
                c = float(op_args["c_over_mass"]) * F.total_mass
            else:
                raise CliError(f"experiment {name!r} needs 'c' or 'c_over_mass'")
            reports = crossing_frequency(cfg, mixture=F, c=c, workers=workers)
        results.append((name, reports, config_echo(cfg)))
    return results


def cmd_verify(args) -> int:
    suite = _load_json(args.config)
    seed = _resolve_seed(args, suite)
    results = run_suite(suite, seed, args.workers)
    out_dir = args.out or "."
    os.makedirs(out_dir, exist_ok=True)
    all_pass = True
    doc = {"schema": SCHEMA_VERSION, "seed": seed, "experiments": []}
    for name, reports, echo in results:
        rows = [r.to_dict() for r in reports]
        all_pass &= all(r["pass"] for r in rows)
        _write_text(os.path.join(out_dir, f"{name}.csv"),
                    _rows_to_csv(rows, REPORT_COLUMNS))
        doc["experiments"].append({"name": name, "config": echo, "reports": rows})
    doc["all_pass"] = bool(all_pass)
    _write_text(os.path.join(out_dir, "report.json"),
                json.dumps(doc, indent=2, sort_keys=True) + "\n")
    return 0 if all_pass else 1


def cmd_lil(args) -> int:
    cfg_json = _load_json(args.config)
    seed = _resolve_seed(args, cfg_json)
    cfg = _experiment_from_json(cfg_json, seed)
    summary = lil_track(cfg, margin=cfg_json.get("margin", 0.15),
                        workers=args.workers)
    doc = {
        "schema": SCHEMA_VERSION,
        "config": config_echo(cfg),
        "statistic": summary["statistic"],
        "checkpoints": summary["checkpoints"],
        "median_running_max": summary["median_running_max"],
        "median_value": summary["median_value"],
        "limsup_bound": (None if math.isinf(summary["limsup_bound"])
                         else summary["limsup_bound"]),
        "margin": summary["margin"],
        "frac_exceeding": summary["frac_exceeding"],
    }
    _write_text(args.out, json.dumps(doc, indent=2, sort_keys=True) + "\n")
    return 0


# ---------------------------------------------------------------------------
# argument parsing
# ---------------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="selfnorm")
    sub = p.add_subparsers(dest="command", required=True)

    def common(sp, seeded=False):
        sp.add_argument("--out", default=None, help="output file/directory")
        sp.add_argument("--format", choices=("csv", "json"), default="csv")
        if seeded:
            sp.add_argument("--seed", type=int, default=None)
            sp.add_argument("--workers", type=int,
                            default=None, help="parallel workers (default: "
                            "SELFNORM_WORKERS env var or 1)")

    sp = sub.add_parser("constants", help="constant tables")
    sp.add_argument("--gamma", type=float, nargs="*", default=None)
    sp.add_argument("--lambda", dest="lam", type=float, nargs="*", default=None)
    sp.add_argument("--r", type=float, default=None)
    sp.add_argument("--l-normalization", action="store_true")
    sp.add_argument("--alpha", type=float, default=None)
    sp.add_argument("--delta", type=float, default=1.0)
    common(sp)
    sp.set_defaults(fn=cmd_constants)

    sp = sub.add_parser("boundary", help="mixture boundary tables")
    sp.add_argument("--config", required=True, help="mixture JSON file")
    sp.add_argument("--c", type=float, required=True)
    sp.add_argument("--r", type=float, default=2.0)
    sp.add_argument("--v-min", type=float, default=10.0)
    sp.add_argument("--v-max", type=float, default=1e6)
    sp.add_argument("--v-points", type=int, default=25)
    sp.add_argument("--asymptotic", choices=("none", "rs", "general"), default="none")
    sp.add_argument("--delta", type=float, default=1.0)
    common(sp)
    sp.set_defaults(fn=cmd_boundary)

    sp = sub.add_parser("tailbound", help="analytic tail/moment bound tables")
    sp.add_argument("--x", type=float, nargs="*", default=None)
    sp.add_argument("--p", type=float, nargs="*", default=None)
    common(sp)
    sp.set_defaults(fn=cmd_tailbound)

    sp = sub.add_parser("simulate", help="dump one path at checkpoints")
    sp.add_argument("--config", required=True, help="process spec JSON file")
    sp.add_argument("--horizon", type=int, default=None)
    sp.add_argument("--checkpoints", type=int, nargs="*", default=None)
    common(sp, seeded=True)
    sp.set_defaults(fn=cmd_simulate)

    sp = sub.add_parser("verify", help="run a verification suite")
    sp.add_argument("--config", required=True, help="suite JSON file")
    common(sp, seeded=True)
    sp.set_defaults(fn=cmd_verify)

    sp = sub.add_parser("lil", help="iterated-logarithm running statistics")
    sp.add_argument("--config", required=True, help="experiment JSON file")
    common(sp, seeded=True)
    sp.set_defaults(fn=cmd_lil)

    return p


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return 2 if exc.code not in (0, None) else 0
    try:
        return args.fn(args)
    except (CliError, KeyError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except Exception as exc:  # domain/quadrature/certification errors
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
