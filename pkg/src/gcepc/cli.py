"""Command-line entry point.

Exit status: 0 success, 1 runtime/module error, 2 usage error,
3 verification failure (``verify``).
"""

from __future__ import annotations

import argparse
import json
import sys
from dataclasses import dataclass, field

import numpy as np

from . import analysis, gradcode, sim
from .decode import ExponentMap, decode
from .errors import GcepcError
from .matrix import BlockMatrix, read_matrix_market, write_matrix_market
from .scheme import compute_all_workers, derive_params

EXIT_OK, EXIT_ERROR, EXIT_USAGE, EXIT_VERIFY = 0, 1, 2, 3

SUBCOMMANDS = ("threshold", "verify", "simulate", "stability", "speed", "decode-file")


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(f"{self.prog}: {message}")


def _dp_list(text):
    try:
        vals = [int(t) for t in text.split(",") if t.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}")
    if not vals:
        raise argparse.ArgumentTypeError("empty list")
    return vals


def _pos_int(text):
    try:
        v = int(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected an integer, got {text!r}")
    if v < 1:
        raise argparse.ArgumentTypeError(f"expected a positive integer, got {v}")
    return v


def _fraction(text):
    try:
        v = float(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected a number, got {text!r}")
    if not 0 < v <= 1:
        raise argparse.ArgumentTypeError(f"expected a value in (0, 1], got {v}")
    return v


def _scheme_opts(p):
    p.add_argument("--ka", type=_pos_int, help="row split of A^T (default 1)")
    p.add_argument("--kb", type=_pos_int, help="column split of B (default 1)")
    p.add_argument("--kp", type=_pos_int, help="inner-dimension storage split (required)")
    p.add_argument("--dp", type=_pos_int, help="encoding-weight parameter, <= kp (required)")
    p.add_argument("--m", type=_pos_int, help="A^T block rows, multiple of ka (default ka)")
    p.add_argument("--n", type=_pos_int, help="B block columns, multiple of kb (default kb)")
    p.add_argument("--n-workers", type=_pos_int, help="total workers N")
    p.add_argument("--n-groups", type=_pos_int, help="worker groups c (alternative to N)")
    p.add_argument("--points", choices=("equidistant", "random"), help="evaluation points")


def _delay_opts(p):
    p.add_argument("--delay", choices=("shifted_exponential", "deterministic"))
    p.add_argument("--shift", type=float, help="delay shift in seconds (default 1)")
    p.add_argument("--rate", type=float, help="exponential rate in 1/s (default 1)")
    p.add_argument("--compute-rate", type=float,
                   help="flop/s of the compute term; 0 disables it")


def _sweep_opts(p):
    p.add_argument("--kp", type=_pos_int, help="inner split (default 14)")
    p.add_argument("--dp-list", type=_dp_list, help="comma-separated delta_p values")
    p.add_argument("--size", type=_pos_int, help="square matrix size (default 280)")
    p.add_argument("--rho", type=_fraction, help="input density (default 0.01)")
    p.add_argument("--n-workers", type=_pos_int, help="workers N (default 4*kp)")
    p.add_argument("--trials", type=_pos_int)


def build_parser():
    top = _Parser(
        prog="gcepc",
        description="Coded matrix multiplication with gradient coding (GC-EPC).",
        formatter_class=argparse.RawDescriptionHelpFormatter,
        epilog="Every option may also be given as 'key = value' in a --config file "
               "(key = option name without dashes); flags override the file.\n"
               "CCGC_THREADS caps the number of concurrent simulation trials.")
    sub = top.add_subparsers(dest="subcommand", parser_class=_Parser, metavar="SUBCOMMAND")

    def add(name, help_):
        p = sub.add_parser(name, help=help_, description=help_, argument_default=argparse.SUPPRESS)
        p.add_argument("--config", help="flat key = value configuration file")
        p.add_argument("--seed", type=int, help="master seed (default 0)")
        p.add_argument("--out", help="output path (default stdout)")
        return p

    p = add("threshold", "print recovery thresholds of GC-EPC and baselines as CSV")
    _scheme_opts(p)
    p = add("verify", "check gradient coding matrices and exponent separation")
    p.add_argument("--max-eta", type=_pos_int, help="largest eta to construct (default 8)")
    p.add_argument("--max-k", type=_pos_int, help="largest ka, kb for exponent checks (default 4)")
    p.add_argument("--max-dp", type=_pos_int, help="largest delta_p for exponent checks (default 6)")
    p = add("simulate", "run a straggler simulation and write per-trial CSV")
    _scheme_opts(p)
    _delay_opts(p)
    p.add_argument("--rho", type=_fraction)
    p.add_argument("--rows", type=_pos_int, help="beta, rows of A and B (default 280)")
    p.add_argument("--cols", type=_pos_int, help="alpha = gamma, columns (default 280)")
    p.add_argument("--trials", type=_pos_int)
    p = add("stability", "error vs threshold sweep over delta_p")
    _sweep_opts(p)
    p = add("speed", "sparsity / cost / completion sweep over delta_p")
    _sweep_opts(p)
    _delay_opts(p)
    p = add("decode-file", "encode -> straggle -> decode Matrix Market inputs")
    _scheme_opts(p)
    _delay_opts(p)
    p.add_argument("--a", help="Matrix Market file holding A (beta x alpha)")
    p.add_argument("--b", help="Matrix Market file holding B (beta x gamma)")
    p.add_argument("--report", help="write the JSON decode summary here (default stdout)")
    top._subparsers_map = sub.choices
    grammar = "".join(p.format_usage().replace("usage: ", "  ") for p in sub.choices.values())
    top.epilog = "subcommand grammar:\n" + grammar + "\n" + top.epilog
    return top


_DEFAULTS = {
    "threshold": {"ka": 1, "kb": 1, "points": "equidistant", "seed": 0},
    "verify": {"max_eta": 8, "max_k": 4, "max_dp": 6, "seed": 0},
    "simulate": {"ka": 1, "kb": 1, "points": "equidistant", "seed": 0, "rho": 0.01,
                 "rows": 280, "cols": 280, "trials": 1, "delay": "shifted_exponential",
                 "shift": 1.0, "rate": 1.0, "compute_rate": sim.DEFAULT_COMPUTE_RATE},
    "stability": {"kp": 14, "dp_list": [1, 2, 7, 14], "size": 280, "rho": 0.01,
                  "trials": 1, "seed": 0},
    "speed": {"kp": 14, "dp_list": [1, 2, 7, 14], "size": 280, "rho": 0.01, "trials": 3,
              "seed": 0, "delay": "shifted_exponential", "shift": 1.0, "rate": 1.0,
              "compute_rate": sim.DEFAULT_COMPUTE_RATE},
    "decode-file": {"ka": 1, "kb": 1, "points": "equidistant", "seed": 0,
                    "delay": "shifted_exponential", "shift": 1.0, "rate": 1.0,
                    "compute_rate": sim.DEFAULT_COMPUTE_RATE},
}

_REQUIRED = {
    "threshold": ("kp", "dp"),
    "simulate": ("kp", "dp"),
    "decode-file": ("kp", "dp", "a", "b"),
}


@dataclass
class CliConfig:
    subcommand: str
    options: dict = field(default_factory=dict)
    out_path: str | None = None
    seed: int = 0


def _read_config_file(path):
    pairs = {}
    try:
        with open(path) as fh:
            lines = fh.read().splitlines()
    except OSError as exc:
        raise UsageError(f"cannot read config file: {exc}") from None
    for lineno, line in enumerate(lines, start=1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise UsageError(f"{path}:{lineno}: expected 'key = value'")
        key, value = (t.strip() for t in line.split("=", 1))
        pairs[key.replace("-", "_")] = (value, lineno)
    return pairs


def parse_config(argv):
    """Parse ``argv`` (subcommand first) plus an optional ``--config`` file."""
    parser = build_parser()
    ns = parser.parse_args(argv)
    if ns.subcommand is None:
        raise UsageError("a subcommand is required: " + ", ".join(SUBCOMMANDS))
    sub = parser._subparsers_map[ns.subcommand]
    flags = {k: v for k, v in vars(ns).items() if k != "subcommand"}
    actions = {a.dest: a for a in sub._actions if a.dest not in ("help",)}

    opts = dict(_DEFAULTS.get(ns.subcommand, {}))
    path = flags.pop("config", None)
    if path is not None:
        for key, (value, lineno) in _read_config_file(path).items():
            if key not in actions or key == "config":
                raise UsageError(f"{path}:{lineno}: unknown key {key!r} for {ns.subcommand}")
            act = actions[key]
            try:
                conv = act.type(value) if act.type else value
            except (argparse.ArgumentTypeError, ValueError) as exc:
                raise UsageError(f"{path}:{lineno}: bad value for {key}: {exc}") from None
            if act.choices is not None and conv not in act.choices:
                raise UsageError(f"{path}:{lineno}: {key} must be one of {sorted(act.choices)}")
            opts[key] = conv
    opts.update(flags)

    for key in _REQUIRED.get(ns.subcommand, ()):
        if key not in opts:
            raise UsageError(f"{ns.subcommand}: missing required option --{key.replace('_', '-')}")
    if ns.subcommand in ("threshold", "simulate", "decode-file"):
        if ("n_workers" in opts) == ("n_groups" in opts):
            raise UsageError(f"{ns.subcommand}: give exactly one of --n-workers and --n-groups")
        if opts["dp"] > opts["kp"]:
            raise UsageError(f"--dp {opts['dp']} must not exceed --kp {opts['kp']}")
    if ns.subcommand in ("stability", "speed"):
        bad = [d for d in opts["dp_list"] if d > opts["kp"]]
        if bad:
            raise UsageError(f"delta_p values {bad} exceed --kp {opts['kp']}")
    seed = opts.pop("seed", 0)
    out = opts.pop("out", None)
    return CliConfig(ns.subcommand, opts, out, seed)


# -- execution --------------------------------------------------------------

def _params(o):
    return derive_params(o["ka"], o["kb"], o["kp"], o["dp"], o.get("m"), o.get("n"),
                         o.get("n_workers"), n_groups=o.get("n_groups"),
                         point_rule=o["points"])


def _delay(o):
    if o["delay"] == "deterministic":
        return sim.Deterministic(o["shift"])
    return sim.ShiftedExponential(o["shift"], o["rate"])


def _compute_rate(o):
    rate = o["compute_rate"]
    return None if rate == 0 else rate


class _Output:
    def __init__(self, path):
        self.path = path

    def __enter__(self):
        self.fh = sys.stdout if self.path is None else open(self.path, "w", newline="")
        return self.fh

    def __exit__(self, *exc):
        if self.fh is not sys.stdout:
            self.fh.close()


def _run_threshold(cfg):
    import csv
    params = _params(cfg.options)
    reports = [analysis.recovery_threshold(params)]
    base = analysis.baseline_thresholds(params.k_a, params.k_b, params.k_p)
    reports += [base["epc"], base["matdot"], base["poly"]]
    if params.k_p % params.delta_p == 0:
        reports.append(analysis.split_scheme_threshold(
            params.k_a, params.k_b, params.k_p, params.delta_p, params.n_workers))
    with _Output(cfg.out_path) as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(analysis.CSV_COLUMNS)
        for r in reports:
            w.writerow(r.csv_row())
    return EXIT_OK


def _run_verify(cfg):
    o = cfg.options
    failures = []
    lines = []
    for eta in range(1, o["max_eta"] + 1):
        for kappa in range(eta):
            try:
                H = gradcode.construct_gc_matrix(eta, kappa, seed=cfg.seed)
                rep = gradcode.verify_gc_matrix(H)
                ok = rep.ok
                lines.append(f"gc eta={eta} kappa={kappa} support_ok={rep.support_ok} "
                             f"span_ok={rep.span_ok} worst_residual={rep.worst_residual:.3e}")
            except GcepcError as exc:
                ok = False
                lines.append(f"gc eta={eta} kappa={kappa} construction failed: {exc}")
            if not ok:
                failures.append(("gc", eta, kappa))
    checked = 0
    for ka in range(1, o["max_k"] + 1):
        for kb in range(1, o["max_k"] + 1):
            for dp in range(1, o["max_dp"] + 1):
                emap = ExponentMap.build(ka, kb, dp)
                checked += 1
                if emap.overlap() or emap.collisions() or not emap.in_range():
                    failures.append(("exponents", ka, kb, dp))
    lines.append(f"exponent separation: {checked} configurations checked")
    lines.append(f"violations: {len(failures)}")
    with _Output(cfg.out_path) as fh:
        fh.write("\n".join(lines) + "\n")
    return EXIT_OK if not failures else EXIT_VERIFY


def _run_simulate(cfg):
    o = cfg.options
    params = _params(o)
    config = sim.SimConfig(params, o["rho"], o["rows"], o["cols"], None, _delay(o),
                           _compute_rate(o), o["trials"], cfg.seed)
    res = sim.run_experiment(config)
    with _Output(cfg.out_path) as fh:
        sim.write_csv(res.records, sim.TRIAL_COLUMNS, fh)
    return EXIT_OK


def _run_sweep(cfg):
    o = cfg.options
    kw = dict(n_workers=o.get("n_workers"), trials=o["trials"])
    if cfg.subcommand == "stability":
        rows = sim.stability_sweep(o["kp"], o["dp_list"], o["size"], o["rho"], cfg.seed, **kw)
        cols = sim.STABILITY_COLUMNS
    else:
        rows = sim.speed_sweep(o["kp"], o["dp_list"], o["size"], o["rho"], cfg.seed,
                               delay_model=_delay(o), compute_rate=_compute_rate(o), **kw)
        cols = sim.SPEED_COLUMNS
    with _Output(cfg.out_path) as fh:
        sim.write_csv(rows, cols, fh)
    return EXIT_OK


def _run_decode_file(cfg):
    o = cfg.options
    if cfg.out_path is None:
        raise UsageError("decode-file: --out is required")
    A = read_matrix_market(o["a"])
    B = read_matrix_market(o["b"])
    params = _params(o)
    H = gradcode.construct_gc_matrix(params.eta, params.kappa, seed=cfg.seed)
    results = compute_all_workers(params, H, A, B)
    delays = _delay(o).sample(sim.substream(cfg.seed, "delays", 0), params.n_workers)
    finish = sim.finish_times(delays, [r.op_count for r in results], _compute_rate(o))
    survivors, t_done = sim.sample_completion(finish, params)
    report = decode([results[w] for w in survivors], H, params)
    write_matrix_market(cfg.out_path, report.product)
    ref = BlockMatrix(A.to_dense().T @ B.to_dense())
    try:
        err = sim.normalized_error(report.product, ref)
    except GcepcError:
        err = None
    summary = {
        "success": report.success,
        "shape": list(report.product.shape),
        "groups_used": list(report.groups_used),
        "survivors_used": {str(g): list(s) for g, s in report.survivors_used.items()},
        "workers_finished": len(survivors),
        "completion_time": t_done,
        "vandermonde_condition": report.vandermonde_condition,
        "normalized_error": err,
    }
    text = json.dumps(summary, indent=2, sort_keys=True) + "\n"
    if o.get("report"):
        with open(o["report"], "w") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)
    return EXIT_OK


_RUNNERS = {
    "threshold": _run_threshold,
    "verify": _run_verify,
    "simulate": _run_simulate,
    "stability": _run_sweep,
    "speed": _run_sweep,
    "decode-file": _run_decode_file,
}


def execute(cfg):
    """Run a parsed configuration; returns the process exit status."""
    try:
        return _RUNNERS[cfg.subcommand](cfg)
    except UsageError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (GcepcError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_ERROR


def main(argv=None):
    argv = sys.argv[1:] if argv is None else list(argv)
    try:
        cfg = parse_config(argv)
    except UsageError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    np.seterr(all="ignore")
    return execute(cfg)


if __name__ == "__main__":
    sys.exit(main())
