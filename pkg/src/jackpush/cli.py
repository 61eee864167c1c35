"""Command-line entry point.

Exit status: 0 on success or a passing experiment, 1 on a failing
experiment, 2 on usage or parameter errors, 3 on I/O failure.
"""
from __future__ import annotations

import argparse
import inspect
import json
import sys
from dataclasses import dataclass, field
from pathlib import Path

from . import harness
from .asymptotics import EquilibriumSpec, density_table
from .dynamics import iter_events, run_metadata, simulate, simulate_top_rows
from .io import dumps_stable, emit_report, update_index, write_csv, write_text
from .measures import JackMeasureSpec, cutoff_for, enumerate_jack, enumerate_multilevel
from .rng import NAMESPACE_ENV, rng_metadata
from .zrp import path_rows, simulate_zrp

EXIT_OK, EXIT_FAIL, EXIT_USAGE, EXIT_IO = 0, 1, 2, 3

PARAMS = {
    "N": int, "n": int, "k": int, "theta": float, "t": float, "s": float, "T": float,
    "trials": int, "seed": int, "cutoff": int, "workers": int, "grid": int,
}


# experiment arguments fed by a differently named flag
ALIASES = {"horizon": "T"}


class UsageError(ValueError):
    pass


@dataclass
class RunConfig:
    command: str
    params: dict = field(default_factory=dict)
    experiment: str | None = None
    out: str | None = None
    format: str | None = None
    index: str | None = None

    def get(self, name, default=None):
        v = self.params.get(name)
        return default if v is None else v

    def require(self, *names):
        missing = [n for n in names if self.params.get(n) is None]
        if missing:
            raise UsageError("missing required " + ", ".join("--" + m for m in missing))
        return [self.params[n] for n in names]


def _common(p: argparse.ArgumentParser) -> None:
    for name, typ in PARAMS.items():
        p.add_argument(f"--{name}", type=typ, default=None)
    p.add_argument("--out", default=None, help="output path (default: stdout)")
    p.add_argument("--format", choices=["json", "csv"], default=None)
    p.add_argument("--config", default=None, help="JSON file of parameters; flags take precedence")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="jackpush",
        description="Simulate multilevel Jack push-block dynamics and verify their exact and limiting laws.",
        epilog=f"The default seed stream namespace is read from ${NAMESPACE_ENV}.",
    )
    sub = parser.add_subparsers(dest="command", required=True)
    for name, help_ in [
        ("simulate", "events of the multilevel chain up to time --s"),
        ("simulate-top", "top-gap path on [tN+s, tN+s+T]"),
        ("zrp", "stationary pile process path on [0, T]"),
        ("density-table", "equilibrium density on a uniform grid"),
        ("enumerate", "truncated Jack (or multilevel, with --n) measure"),
        ("calibrate", "rerun the desk-scale suite and write calibration fixtures"),
    ]:
        _common(sub.add_parser(name, help=help_))
    v = sub.add_parser("verify", help="run one experiment and emit its report")
    v.add_argument("experiment", choices=sorted(harness.EXPERIMENTS))
    v.add_argument("--index", default=None, help="run index to update (default: index.json next to --out)")
    _common(v)
    return parser


def parse_config(argv) -> RunConfig:
    parser = build_parser()
    ns = parser.parse_args(argv)
    params = {k: getattr(ns, k) for k in PARAMS}
    if ns.config:
        try:
            extra = json.loads(Path(ns.config).read_text())
        except (OSError, json.JSONDecodeError) as e:
            raise UsageError(f"cannot read config {ns.config}: {e}") from e
        for k, v in extra.items():
            if k not in PARAMS:
                raise UsageError(f"unknown config key {k!r}")
            if params[k] is None:
                params[k] = PARAMS[k](v)
    return RunConfig(ns.command, params, getattr(ns, "experiment", None), ns.out, ns.format, getattr(ns, "index", None))


def _validate(cfg: RunConfig) -> None:
    p = cfg.params
    for name in ("N", "n", "k", "trials", "grid", "workers"):
        if p.get(name) is not None and p[name] < (0 if name == "k" else 1):
            raise UsageError(f"--{name} must be positive")
    for name in ("theta", "t"):
        if p.get(name) is not None and not p[name] > 0:
            raise UsageError(f"--{name} must be positive")
    for name in ("s", "T"):
        if p.get(name) is not None and p[name] < 0:
            raise UsageError(f"--{name} must be nonnegative")
    if p.get("n") is not None and p.get("N") is not None and p["n"] > p["N"]:
        raise UsageError("--n must not exceed --N")


def _cmd_simulate(cfg: RunConfig) -> int:
    N, theta, s = cfg.require("N", "theta", "s")
    n, seed = cfg.get("n", 1), cfg.get("seed", 0)
    rows = []
    for ev, moved in iter_events(n, N, theta, s, seed):
        rows.extend((ev.time, lev, idx, pos) for lev, idx, pos in moved)
    count = len({r[0] for r in rows})
    if (cfg.format or "csv") == "csv":
        write_csv(cfg.out, ["time", "level", "index", "position"], rows)
    else:
        snap = simulate(n, N, theta, [s], seed)[0]
        rows_ = [list(snap.level(j).padded(j)) for j in range(n, N + 1)]
        write_text(cfg.out, dumps_stable({"time": s, "pattern": rows_}) + "\n")
    if cfg.out not in (None, "-"):
        write_text(str(cfg.out) + ".meta.json", dumps_stable(run_metadata(n, N, theta, seed, count)) + "\n")
    return EXIT_OK


def _cmd_simulate_top(cfg: RunConfig) -> int:
    N, k, theta, t, T = cfg.require("N", "k", "theta", "t", "T")
    if k >= N:
        raise UsageError("need --k < --N")
    seed, s = cfg.get("seed", 0), cfg.get("s", 0.0)
    path = simulate_top_rows(N, k, theta, t, T, seed, s=s)
    if (cfg.format or "csv") == "csv":
        rows = ((tm, *(int(v) for v in g)) for tm, g in zip(path.times, path.gaps))
        write_csv(cfg.out, ["time"] + [f"pile_{j}" for j in range(1, k + 1)], rows)
    else:
        write_text(cfg.out, dumps_stable({"times": path.times, "gaps": path.gaps, "top_row": path.top_row}) + "\n")
    if cfg.out not in (None, "-"):
        write_text(str(cfg.out) + ".meta.json", dumps_stable(run_metadata(N - k, N, theta, seed, path.event_count)) + "\n")
    return EXIT_OK


def _cmd_zrp(cfg: RunConfig) -> int:
    k, theta, t, T = cfg.require("k", "theta", "t", "T")
    if k < 1:
        raise UsageError("need --k >= 1")
    seed = cfg.get("seed", 0)
    path = simulate_zrp(k, theta, t, T, seed)
    if (cfg.format or "csv") == "csv":
        write_csv(cfg.out, ["time"] + [f"pile_{j}" for j in range(1, k + 1)], path_rows(path))
    else:
        write_text(cfg.out, dumps_stable({"times": path.times, "piles": path.piles}) + "\n")
    if cfg.out not in (None, "-"):
        meta = {"k": k, "theta": theta, "t": t, "horizon": T, "event_count": len(path.times) - 1}
        meta.update(rng_metadata(seed))
        write_text(str(cfg.out) + ".meta.json", dumps_stable(meta) + "\n")
    return EXIT_OK


def _cmd_density(cfg: RunConfig) -> int:
    t, theta = cfg.require("t", "theta")
    x, f = density_table(EquilibriumSpec(t, theta), cfg.get("grid", 400))
    if (cfg.format or "csv") == "csv":
        write_csv(cfg.out, ["x", "f(x)"], zip(x.tolist(), f.tolist()))
    else:
        write_text(cfg.out, dumps_stable({"x": x, "f": f}) + "\n")
    return EXIT_OK


def _cmd_enumerate(cfg: RunConfig) -> int:
    N, s, theta = cfg.require("N", "s", "theta")
    spec = JackMeasureSpec(N, s, theta)
    M = cfg.get("cutoff") or cutoff_for(spec, 1e-10)
    n = cfg.get("n")
    em = enumerate_jack(spec, M) if n is None else enumerate_multilevel(n, spec, M)
    if cfg.format == "csv":
        write_csv(cfg.out, ["state", "prob"], ((json.dumps(st), p) for st, p in zip(json.loads(em.to_json())["states"], em.probs)))
    else:
        write_text(cfg.out, dumps_stable(json.loads(em.to_json())) + "\n")
    return EXIT_OK


def _cmd_verify(cfg: RunConfig) -> int:
    fn = harness.EXPERIMENTS[cfg.experiment]
    sig = inspect.signature(fn)
    kwargs = {}
    for name, par in sig.parameters.items():
        if name == "namespace":
            continue
        flag = ALIASES.get(name, name)
        val = cfg.params.get(flag)
        if name == "workers" and val is None:
            val = harness.default_workers()
        if name == "seed" and val is None:
            val = 0
        if val is None:
            if par.default is inspect.Parameter.empty:
                raise UsageError(f"verify {cfg.experiment}: missing required --{flag}")
            continue
        kwargs[name] = val
    taken = {ALIASES.get(n, n) for n in sig.parameters}
    unused = [k for k, v in cfg.params.items() if v is not None and k not in taken]
    if unused:
        raise UsageError(f"verify {cfg.experiment} does not take " + ", ".join("--" + u for u in unused))
    report = fn(**kwargs)
    emit_report(report, cfg.format or "json", cfg.out)
    if cfg.out not in (None, "-"):
        index = cfg.index or str(Path(cfg.out).with_name("index.json"))
        update_index(index, report, cfg.out)
    print(report.summary(), file=sys.stderr)
    return EXIT_OK if report.passed else EXIT_FAIL


def _cmd_calibrate(cfg: RunConfig) -> int:
    out = cfg.out or str(Path(__file__).with_name("data") / "calibration.json")
    harness.calibrate(out, cfg.get("seed", harness.CALIBRATION_SEED), workers=cfg.get("workers", harness.default_workers()))
    return EXIT_OK


COMMANDS = {
    "simulate": _cmd_simulate,
    "simulate-top": _cmd_simulate_top,
    "zrp": _cmd_zrp,
    "density-table": _cmd_density,
    "enumerate": _cmd_enumerate,
    "verify": _cmd_verify,
    "calibrate": _cmd_calibrate,
}


def main(argv=None) -> int:
    try:
        cfg = parse_config(argv)
    except SystemExit as e:  # argparse usage errors and --help
        return int(e.code or 0)
    except UsageError as e:
        print(f"jackpush: error: {e}", file=sys.stderr)
        return EXIT_USAGE
    try:
        _validate(cfg)
        return COMMANDS[cfg.command](cfg)
    except OSError as e:
        print(f"jackpush: I/O error: {e}", file=sys.stderr)
        return EXIT_IO
    except (ValueError, ArithmeticError) as e:
        print(f"jackpush: error: {e}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
