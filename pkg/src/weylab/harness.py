"""Command-line entry point: ``weylab <subcommand> ...``.

Every run produces a RunRecord (config echo, tool version, wall time,
payload).  Payloads are deterministic functions of the config, so a record
can be replayed and compared byte for byte.

Exit status: 0 success, 2 usage/validation error, 3 inconclusive verdict.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import math
import sys
import time
from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np

from . import __version__
from . import bmo_bounds as bmo
from . import cf_engine as cfe
from . import gauss_sums as gs
from . import oscillation_lab as lab
from . import theta_series as ts

SCHEMA_VERSION = 1
EXIT_OK, EXIT_USAGE, EXIT_INCONCLUSIVE = 0, 2, 3
STOCHASTIC = {"levelset", "metric", "hilbert"}


# -- serialization ------------------------------------------------------------------

def _plain(obj):
    if isinstance(obj, dict):
        return {str(k): _plain(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_plain(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return [_plain(v) for v in obj.tolist()]
    if isinstance(obj, (bool, np.bool_)):
        return bool(obj)
    if isinstance(obj, (int, np.integer)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        return float(obj)
    if isinstance(obj, (complex, np.complexfloating)):
        return {"re": float(obj.real), "im": float(obj.imag)}
    if isinstance(obj, Fraction):
        return cfe.rational_str(obj)
    if isinstance(obj, cfe.LogScale):
        return {"log": obj.log}
    return obj


def _fmt_float(x: float) -> str:
    if math.isnan(x):
        return '"nan"'
    if math.isinf(x):
        return '"inf"' if x > 0 else '"-inf"'
    return format(x, ".17g")


def dumps(obj, indent: int = 2, _level: int = 0) -> str:
    """JSON text with every float written to 17 significant digits."""
    obj = _plain(obj)
    pad = " " * (indent * (_level + 1))
    end = " " * (indent * _level)
    if isinstance(obj, dict):
        if not obj:
            return "{}"
        items = [f"{pad}{json.dumps(k)}: {dumps(v, indent, _level + 1)}" for k, v in obj.items()]
        return "{\n" + ",\n".join(items) + "\n" + end + "}"
    if isinstance(obj, list):
        if not obj:
            return "[]"
        if all(not isinstance(v, (dict, list)) for v in obj):
            return "[" + ", ".join(dumps(v, indent, _level + 1) for v in obj) + "]"
        return "[\n" + ",\n".join(pad + dumps(v, indent, _level + 1) for v in obj) + "\n" + end + "]"
    if isinstance(obj, float):
        return _fmt_float(obj)
    return json.dumps(obj)


def write_csv(rows: list, columns: list, path=None) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(columns)
    for r in rows:
        w.writerow([format(v, ".17g") if isinstance(v, float) else v for v in r])
    text = buf.getvalue()
    if path:
        with open(path, "w", encoding="utf-8") as fh:
            fh.write(text)
    return text


# -- records ----------------------------------------------------------------------------

@dataclass
class ExperimentConfig:
    subcommand: str
    params: dict
    seed: int | None = None

    def as_dict(self) -> dict:
        return {"subcommand": self.subcommand, "params": self.params, "seed": self.seed}

    @classmethod
    def from_dict(cls, d: dict) -> "ExperimentConfig":
        return cls(d["subcommand"], dict(d["params"]), d.get("seed"))


@dataclass
class RunRecord:
    config: ExperimentConfig
    payload: dict
    wall_time: float = 0.0
    tool_version: str = __version__
    schema_version: int = SCHEMA_VERSION
    rows: list = field(default_factory=list, repr=False)
    columns: list = field(default_factory=list, repr=False)
    inconclusive: bool = False

    def as_dict(self) -> dict:
        return {"schema_version": self.schema_version, "tool_version": self.tool_version,
                "config": self.config.as_dict(), "wall_time": self.wall_time,
                "payload": self.payload}

    def payload_text(self) -> str:
        return dumps(self.payload)


def emit(record: RunRecord, fmt: str = "json", path=None) -> str:
    if fmt == "csv":
        return write_csv(record.rows, record.columns or ["value"], path)
    text = dumps(record.as_dict()) + "\n"
    if path:
        with open(path, "w", encoding="utf-8") as fh:
            fh.write(text)
    return text


# -- subcommands --------------------------------------------------------------------------

def _interval(p: int, q: int, convention: str) -> cfe.FundamentalInterval:
    return cfe.fundamental_interval(Fraction(p, q), convention)


def _convention(name: str) -> str:
    return cfe.LAST_ONE if name == "eq1" else cfe.LAST_NOT_ONE


def run_cf(P: dict) -> dict:
    x = cfe.as_rational(P["x"])
    cf = cfe.cf_of_rational(x, _convention(P["convention"]))
    conv = cfe.convergents(cf)
    I = cfe.interval_of_prefix(cf.quotients)
    return {"x": x, "quotients": list(cf.quotients), "convention": cf.convention,
            "convergents": [[p, q] for p, q in conv.entries],
            "interval": {"lo": I.lo, "hi": I.hi, "length": I.length, "q": I.q, "q_prev": I.q_prev}}


def run_gauss(P: dict) -> dict:
    f = gs.gauss_sum_direct if P["method"] == "direct" else gs.gauss_sum_fast
    v = f(P["p"], P["q"])
    return {"p": P["p"], "q": P["q"], **v.as_dict(), "claimed_mod_sq": v.claimed_mod_sq}


def run_eval(P: dict) -> dict:
    x = cfe.as_rational(P["x"])
    if P["method"] == "naive":
        if P["n"] is None:
            raise ValueError("--n is required with --method naive")
        res = ts.f_partial_naive(x, P["n"])
    else:
        res = ts.f_eval_hybrid(x, P["T"], n_terms=P["n"])
    return {"x": x, **res.as_dict()}


def run_proxy(P: dict) -> dict:
    if P["rule"] == "tower":
        cf = cfe.synthetic_cf(cfe.tower_rule(), P["J"])
    elif P["quotients"]:
        cf = cfe.ContinuedFraction(tuple(int(a) for a in P["quotients"].split(",")))
    elif P["x"]:
        cf = cfe.cf_of_rational(cfe.as_rational(P["x"]))
    else:
        raise ValueError("give --x, --quotients or --rule")
    rep = ts.convergence_report(cf, P["J"])
    return rep.as_dict()


def run_levelset(P: dict, seed: int):
    I = _interval(P["p"], P["q"], _convention(P["convention"]))
    lam = np.linspace(P["lambda_min"], P["lambda_max"], P["steps"])
    T, met = lab.choose_threshold(P["lambda_min"], cap=P["T"])
    est = lab.level_set_curve(I, lam, P["samples"], seed, lab.EvalConfig(threshold=T))
    summary = est.summary()
    summary.update(threshold=T, bound_target_met=met)
    return summary, est.rows(), ["lambda", "survival", "count", "ci"]


def run_metric(P: dict, seed: int):
    I = _interval(P["p"], P["q"], _convention(P["convention"]))
    j = I.j0 + 1 if P["j"] is None else P["j"]
    st = lab.partial_quotient_histogram(I, j, P["samples"], seed, P["kmax"])
    ratios = st.ratios()
    rows = [(k, st.histogram[k], st.counts[k], st.reference[k], ratios.get(k, math.nan))
            for k in st.histogram]
    payload = {"j": st.j, "band": st.band, "samples": st.sample_size,
               "histogram": st.histogram, "reference": st.reference,
               "within_band": st.within_band(), "constants": "empirical"}
    return payload, rows, ["k", "frequency", "count", "reference", "ratio"]


def run_bmo(P: dict, seed: int | None) -> dict:
    spec = bmo.spec_from_strings(P["freq"], P["coeff"])
    if P["twist"] == "random":
        if seed is None:
            raise ValueError("--twist random needs --seed")
        spec = spec.with_twist(seed)
    grid = bmo.default_epsilon_grid(P["points"])
    rep = bmo.kappa_bound(spec, grid, N_max=P["nmax"])
    out = rep.as_dict(sequences=P["sequences"])
    out["spec"] = spec.label
    return out


def run_hilbert(P: dict, seed: int) -> dict:
    rng = np.random.default_rng(seed)
    worst, violations = 0.0, 0
    for _ in range(P["instances"]):
        lhs, rhs = bmo.hilbert_check(*bmo.random_hilbert_instance(rng))
        worst = max(worst, lhs / rhs)
        violations += lhs > rhs
    out = {"instances": P["instances"], "violations": violations, "worst_ratio": worst}
    if P["squares"]:
        lhs, rhs = bmo.hilbert_check(*bmo.squares_hilbert_instance(P["squares"], rng))
        out.update(squares_lhs=lhs, squares_rhs=rhs, squares_ratio=lhs / rhs)
        violations += lhs > rhs
    out["pass"] = violations == 0
    return out


def read_coefficients(path: str) -> np.ndarray:
    """Lines ``k value`` (or bare values, k = 1, 2, ...); '#' starts a comment."""
    pairs, bare = {}, []
    with open(path, encoding="utf-8") as fh:
        for line in fh:
            line = line.split("#", 1)[0].replace(",", " ").split()
            if not line:
                continue
            if len(line) == 1:
                bare.append(float(line[0]))
            else:
                pairs[int(line[0])] = float(line[1])
    if bare and pairs:
        raise ValueError("mix of indexed and bare coefficient lines")
    if bare:
        return np.asarray([0.0] + bare)
    arr = np.zeros(max(pairs, default=0) + 1)
    for k, v in pairs.items():
        if k < 1:
            raise ValueError("coefficient indices start at 1")
        arr[k] = v
    return arr


def run_fefferman(P: dict) -> dict:
    coeffs = read_coefficients(P["coeff_file"])
    Ns = [int(v) for v in P["n"].split(",")]
    stats = [bmo.fefferman_stat(coeffs, N, P["kmax"]) for N in Ns]
    return {"N": Ns, "statistic": stats, "max": max(stats)}


# -- parser -------------------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="weylab", description=__doc__.splitlines()[0])
    ap.add_argument("--version", action="version", version=__version__)
    sub = ap.add_subparsers(dest="subcommand", required=True)

    def add(name, help_):
        p = sub.add_parser(name, help=help_)
        p.add_argument("--output", help="write the JSON record here instead of stdout")
        p.add_argument("--threads", type=int, default=1,
                       help="accepted for interface stability; results never depend on it")
        return p

    p = add("cf", "continued fraction, convergents and fundamental interval of x")
    p.add_argument("--x", required=True)
    p.add_argument("--convention", choices=["ne1", "eq1"], default="ne1")

    p = add("gauss", "normalized Gauss sum theta_{p/q}")
    p.add_argument("--p", type=int, required=True)
    p.add_argument("--q", type=int, required=True)
    p.add_argument("--method", choices=["fast", "direct"], default="fast")

    p = add("eval", "partial sums of F at a rational point")
    p.add_argument("--x", required=True)
    p.add_argument("--n", type=int)
    p.add_argument("--method", choices=["naive", "hybrid"], default="hybrid")
    p.add_argument("--T", type=int, default=1000)

    p = add("proxy", "convergence report for the proxy series")
    p.add_argument("--x")
    p.add_argument("--quotients", help="comma-separated a_0,a_1,...")
    p.add_argument("--rule", choices=["tower"])
    p.add_argument("--J", type=int, default=10)

    p = add("levelset", "level-set survival curve on I_{p/q}")
    for name, typ in (("--p", int), ("--q", int)):
        p.add_argument(name, type=typ, required=True)
    p.add_argument("--lambda-min", type=float, default=0.5)
    p.add_argument("--lambda-max", type=float, default=2.0)
    p.add_argument("--steps", type=int, default=16)
    p.add_argument("--samples", type=int, default=10**5)
    p.add_argument("--seed", type=int, required=True)
    p.add_argument("--T", type=int, default=1000, help="cap on the hybrid threshold")
    p.add_argument("--convention", choices=["ne1", "eq1"], default="ne1")
    p.add_argument("--csv", help="write lambda,survival,count,ci rows here")

    p = add("metric", "histogram of a partial quotient on I_{p/q}")
    for name in ("--p", "--q"):
        p.add_argument(name, type=int, required=True)
    p.add_argument("--j", type=int)
    p.add_argument("--samples", type=int, default=10**5)
    p.add_argument("--kmax", type=int, default=20)
    p.add_argument("--seed", type=int, required=True)
    p.add_argument("--convention", choices=["ne1", "eq1"], default="ne1")
    p.add_argument("--csv")

    p = add("bmo", "S_N, T_N and the kappa bound for a gap series")
    p.add_argument("--freq", required=True, help='"n^k" or "b^n"')
    p.add_argument("--coeff", required=True, help='"1/n", "n^-a", "1/n^a"')
    p.add_argument("--nmax", type=int, default=10**5)
    p.add_argument("--points", type=int, default=64)
    p.add_argument("--twist", choices=["none", "random"], default="none")
    p.add_argument("--seed", type=int)
    p.add_argument("--sequences", action="store_true", help="include S, T and tail arrays")

    p = add("hilbert", "check the Hilbert inequality on random instances")
    p.add_argument("--instances", type=int, default=1000)
    p.add_argument("--squares", type=int, default=0, help="also check lambda_r = r^2, r <= R")
    p.add_argument("--seed", type=int, required=True)

    p = add("fefferman", "block statistic sum_j (sum_{jN<=k<(j+1)N} a_k)^2")
    p.add_argument("--coeff-file", required=True)
    p.add_argument("--n", required=True, help="comma-separated block sizes")
    p.add_argument("--kmax", type=int)

    p = sub.add_parser("replay", help="re-run a saved record and compare payloads")
    p.add_argument("record")
    return ap


_PARAM_SKIP = {"subcommand", "output", "threads", "seed", "csv"}


def run_config(cfg: ExperimentConfig) -> RunRecord:
    """Execute a config; the payload depends on nothing else."""
    P, seed = cfg.params, cfg.seed
    name = cfg.subcommand
    if name in STOCHASTIC and seed is None:
        raise ValueError(f"{name} requires an explicit --seed")
    t0 = time.perf_counter()
    rows, cols = [], []
    if name == "cf":
        payload = run_cf(P)
    elif name == "gauss":
        payload = run_gauss(P)
    elif name == "eval":
        payload = run_eval(P)
    elif name == "proxy":
        payload = run_proxy(P)
    elif name == "levelset":
        payload, rows, cols = run_levelset(P, seed)
    elif name == "metric":
        payload, rows, cols = run_metric(P, seed)
    elif name == "bmo":
        payload = run_bmo(P, seed)
    elif name == "hilbert":
        payload = run_hilbert(P, seed)
    elif name == "fefferman":
        payload = run_fefferman(P)
    else:
        raise ValueError(f"unknown subcommand {name!r}")
    rec = RunRecord(cfg, payload, time.perf_counter() - t0, rows=rows, columns=cols)
    rec.inconclusive = (payload.get("verdict") == ts.INCONCLUSIVE
                        or bool(payload.get("inconclusive")))
    return rec


def replay(record: dict) -> tuple:
    """(same_payload, fresh RunRecord) for a saved record dict."""
    fresh = run_config(ExperimentConfig.from_dict(record["config"]))
    return dumps(record["payload"]) == fresh.payload_text(), fresh


def parse_and_dispatch(argv=None) -> tuple:
    """Parse argv and run it; returns (RunRecord, exit status)."""
    args = build_parser().parse_args(argv)
    if args.subcommand == "replay":
        with open(args.record, encoding="utf-8") as fh:
            saved = json.load(fh)
        same, rec = replay(saved)
        rec.payload = {"identical": same, "payload": rec.payload}
        return rec, EXIT_OK if same else 1
    params = {k: v for k, v in vars(args).items() if k not in _PARAM_SKIP}
    cfg = ExperimentConfig(args.subcommand, params, getattr(args, "seed", None))
    rec = run_config(cfg)
    return rec, EXIT_INCONCLUSIVE if rec.inconclusive else EXIT_OK


def main(argv=None) -> int:
    argv = sys.argv[1:] if argv is None else argv
    try:
        rec, status = parse_and_dispatch(argv)
    except SystemExit as exc:  # argparse: usage errors exit 2
        return int(exc.code or 0)
    except (ValueError, ArithmeticError, OSError) as exc:
        print(f"weylab: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    ns = build_parser().parse_args(argv)
    csv_path = getattr(ns, "csv", None)
    if csv_path:
        emit(rec, "csv", csv_path)
    text = emit(rec, "json", getattr(ns, "output", None))
    if not getattr(ns, "output", None):
        sys.stdout.write(text)
    return status


if __name__ == "__main__":
    sys.exit(main())
