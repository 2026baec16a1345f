"""Command-line entry point: ``ssrcusum {monitor,calibrate,theta,arl,simulate}``.

Exit status is 0 on success (no signal), 2 when ``monitor`` raised a signal
and 1 on any error.  ``SSRCUSUM_WORKERS`` sets the default thread count of
the simulation commands.
"""
from __future__ import annotations

import argparse
import json
import math
import os
import sys
import time
import warnings

import numpy as np

from . import arl_lab, calibrate, distlab, ingest, phase1
from .arl_lab import ShiftScenario
from .engine import BOTH, UPPER, CusumConfig
from .montecarlo import WORKERS_ENV, chart_run_lengths, summarize
from .monitor import (MonitorConfig, MonitorRecord, dispersion_config, location_config,
                      monitor_stream)
from .scores import ScoreKind

EXIT_OK, EXIT_ERROR, EXIT_SIGNAL = 0, 1, 2


class CliError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    # usage errors must not collide with the signal exit code
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_ERROR, f"{self.prog}: error: {message}\n")


def _floats(text: str) -> list:
    """``0.1,0.25`` or a range ``0.1..0.5`` (step 0.05 unless ``a..b:step``)."""
    if ".." in text:
        lo, rest = text.split("..", 1)
        hi, _, st = rest.partition(":")
        lo, hi, st = float(lo), float(hi), float(st or 0.05)
        if not (st > 0 and hi >= lo):
            raise argparse.ArgumentTypeError(f"bad range {text!r}")
        n = int(math.floor((hi - lo) / st + 1e-9))
        return [round(lo + k * st, 10) for k in range(n + 1)]
    try:
        return [float(t) for t in text.split(",") if t.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"not a number list: {text!r}") from None


def _meta_line(meta: dict) -> str:
    return " ".join(f"{k}={v}" for k, v in meta.items())


def _emit(text: str, output):
    if output in (None, "-"):
        sys.stdout.write(text)
    else:
        with open(output, "w") as fh:
            fh.write(text)


def _commented(meta: dict, body: str) -> str:
    return "".join(f"# {k}: {v}\n" for k, v in meta.items()) + body


# -- monitor -------------------------------------------------------------------------

def _load_config(path):
    if path is None:
        return {}
    with open(path) as fh:
        cfg = json.load(fh)
    if not isinstance(cfg, dict):
        raise CliError("config file must hold a JSON object")
    return {k.replace("-", "_"): v for k, v in cfg.items()}


def _pick(args, cfg, name, default=None):
    v = getattr(args, name, None)
    if v is None:
        v = cfg.get(name, default)
    return v


def _monitor_config(args) -> MonitorConfig:
    cfg = _load_config(args.config)
    score = ScoreKind.parse(_pick(args, cfg, "score", "w"))
    two_sided = bool(args.two_sided or cfg.get("two_sided", False))
    zeta = _pick(args, cfg, "zeta")
    h = _pick(args, cfg, "h")
    arl0 = _pick(args, cfg, "arl0")
    shift = _pick(args, cfg, "target_shift")
    if zeta is None and shift is not None and score.is_location:
        theta = _pick(args, cfg, "theta0", phase1.THETA0_NEAR_NORMAL)
        zeta = phase1.design_location(theta, shift, score)
    if zeta is not None and h is None and arl0 is not None:
        try:
            h = calibrate.published_limit(score, zeta, arl0)
        except KeyError:
            raise CliError(f"no tabulated limit for zeta={zeta}, ARL0={arl0}; "
                           "run 'calibrate' and pass --h") from None
    location = dispersion = None
    if zeta is not None:
        if h is None:
            raise CliError("control limit missing: pass --h or a tabulated --arl0")
        if score is ScoreKind.W2:
            dispersion = CusumConfig.symmetric(zeta, h, BOTH if two_sided else UPPER)
        else:
            location = location_config(zeta, h, two_sided)
    du, dd = _pick(args, cfg, "disp_zeta_up"), _pick(args, cfg, "disp_zeta_down")
    alpha = _pick(args, cfg, "alpha")
    if alpha is not None and du is None and dd is None:
        du, dd = phase1.design_dispersion(_pick(args, cfg, "theta1", phase1.THETA1_DEFAULT),
                                          alpha)
    if du is not None or dd is not None:
        if dispersion is not None:
            raise CliError("--score w2 already configures the dispersion chart")
        dispersion = dispersion_config(du, _pick(args, cfg, "disp_h_up"), dd,
                                       _pick(args, cfg, "disp_h_down"))
    loc_score = score if score.is_location else ScoreKind.W
    return MonitorConfig(location, dispersion, loc_score.name.lower(),
                         halt_on_signal=not (args.keep_going or cfg.get("keep_going", False)))


def cmd_monitor(args) -> int:
    config = _monitor_config(args)
    obs = ingest.read_observations(args.input)
    report, records = monitor_stream((o.x for o in obs), config)
    lines_of = {i + 1: o.line for i, o in enumerate(obs)}
    for w in report.warnings:
        print(f"warning: {w}", file=sys.stderr)
    if args.output:
        ingest.write_records(args.output, records, MonitorRecord)
    if args.format == "records":
        if not args.output:
            sys.stdout.write(ingest.records_to_string(records, MonitorRecord))
    else:
        print(f"observations processed: {report.n} of {len(obs)}")
        if not report.signals:
            print("no signal")
        for s in report.signals:
            print(f"SIGNAL {s.chart} chart ({s.side}) at n={s.index} "
                  f"(input line {lines_of.get(s.index, '?')}); "
                  f"changepoint estimate {s.changepoint}; delay estimate "
                  f"{s.index - s.changepoint}; D={s.d_value:.4f}")
    return EXIT_SIGNAL if report.signals else EXIT_OK


# -- calibrate -----------------------------------------------------------------------

def cmd_calibrate(args) -> int:
    if args.zeta is None or args.arl0 is None:
        raise CliError("calibrate needs --zeta and --arl0")
    side = BOTH if args.two_sided else args.side
    req = calibrate.CalibrationRequest(args.score, sorted(args.zeta), sorted(args.arl0),
                                       reps=args.reps, verify_reps=args.verify_reps,
                                       tol=args.tol, side=side, seed=args.seed)
    res = calibrate.solve_control_limit(req)
    meta = {"score": req.score.name, "side": side, "seed": args.seed, "reps": args.reps,
            "verify_reps": args.verify_reps, "runtime_s": f"{res.runtime:.1f}"}
    if args.format == "records":
        _emit(res.to_json() + "\n", args.output)
    else:
        _emit(_commented(meta, res.to_csv()), args.output)
    for c in res.cells.values():
        try:
            pub = f"{calibrate.published_limit(req.score, c.zeta, c.arl0):.3f}"
        except KeyError:
            pub = "-"
        flag = "" if c.converged and c.verified else "  NOT CONVERGED"
        print(f"zeta={c.zeta:g} ARL0={c.arl0:g}: h={c.h:.3f} (ARL {c.arl:.1f} +/- {c.se:.1f}, "
              f"{c.iterations} it, published {pub}){flag}", file=sys.stderr)
    print(_meta_line(meta), file=sys.stderr)
    return EXIT_OK if res.all_converged else EXIT_ERROR


# -- theta ---------------------------------------------------------------------------

def cmd_theta(args) -> int:
    kind = ScoreKind.parse(args.score)
    if args.input:
        x = np.array([o.x for o in ingest.read_observations(args.input)])
        delta = args.target_shift or 0.5
        alpha = args.alpha or 0.5
        loc_kind = kind if kind.is_location else ScoreKind.W
        with warnings.catch_warnings(record=True) as caught:
            warnings.simplefilter("always", phase1.DesignWarning)
            d = phase1.design_from_data(x, delta, alpha, loc_kind, args.sigma_method,
                                        args.bandwidth)
        for w in caught:
            print(f"warning: {w.message}", file=sys.stderr)
        out = {"n": int(x.size), "sigma_hat": d.sigma_hat, "bandwidth": d.bandwidth,
               "theta0_hat": d.theta0_hat, "theta1_hat": d.theta1_hat,
               "target_shift": delta, "zeta_location": d.zeta_location,
               "alpha": alpha, "zeta_up": d.zeta_up, "zeta_down": d.zeta_down}
        if args.format == "records":
            _emit(json.dumps(out, indent=2) + "\n", args.output)
        else:
            _emit("".join(f"{k}: {v:.4g}\n" if isinstance(v, float) else f"{k}: {v}\n"
                          for k, v in out.items()), args.output)
        return EXIT_OK
    dists = args.dist or ["normal", "t5", "t4", "t3", "uniform"]
    rows = []
    for name in dists:
        dist = distlab.parse_distribution(name)
        if kind is ScoreKind.W2:
            val = distlab.theta1(dist)
        else:
            val = distlab.theta0(kind, dist)
        rows.append((dist.label, val.theta, val.error))
    what = "theta1" if kind is ScoreKind.W2 else f"theta0[{kind.name}]"
    if args.format == "records":
        text = f"dist,{what},error\n" + "".join(f"{a},{b!r},{c!r}\n" for a, b, c in rows)
    else:
        text = "".join(f"{a:>20s}  {what} = {b:.4f}\n" for a, b, _ in rows)
    _emit(text, args.output)
    return EXIT_OK


# -- arl -----------------------------------------------------------------------------

def cmd_arl(args) -> int:
    if not args.scenario:
        raise CliError("arl needs --scenario (one of " + ", ".join(arl_lab.MANIFESTS)
                       + " or a JSON manifest path)")
    t0 = time.perf_counter()
    res = arl_lab.run_manifest(args.scenario, reps=args.reps, seed=args.seed)
    meta = {"scenario": res.name, "seed": args.seed, "reps": res.meta.get("reps"),
            "runtime_s": f"{time.perf_counter() - t0:.1f}"}
    if args.format == "records":
        _emit(json.dumps({"meta": meta, "header": res.header, "rows": res.rows,
                          "extra": res.meta}, indent=2, default=str) + "\n", args.output)
    else:
        _emit(_commented(meta, res.to_csv()), args.output)
    print(_meta_line(meta), file=sys.stderr)
    return EXIT_OK


# -- simulate ------------------------------------------------------------------------

def cmd_simulate(args) -> int:
    dist = distlab.parse_distribution(args.dist)
    shift = args.target_shift or 0.0
    tau = args.tau or 0
    if args.emit:
        rng = np.random.default_rng(args.seed)
        x = args.scale * distlab.sample(dist, rng, args.emit)
        x[tau:] += shift
        ingest.write_observations(args.output, x)
        return EXIT_OK
    if args.zeta is None or args.h is None:
        raise CliError("simulate needs --zeta and --h (or --emit N)")
    kind = ScoreKind.parse(args.score)
    config = (CusumConfig.symmetric(args.zeta, args.h) if args.two_sided
              else CusumConfig.upper_only(args.zeta, args.h))
    t0 = time.perf_counter()
    rl = chart_run_lengths(kind, config, args.reps, args.seed, base=dist, tau=tau,
                           shift=shift / args.scale, cap=args.cap)
    if tau == 0 and shift == 0:
        s = summarize(rl, args.cap, args.seed)
        est = {"arl": s.arl, "se": s.se, "capped": s.capped}
    else:
        e = arl_lab.conditional_delay(rl, tau, args.cap)
        est = {"arl": e.arl, "se": e.se, "kept": e.kept, "discarded": e.discarded,
               "capped": e.capped}
    meta = {"score": kind.name, "zeta": args.zeta, "h": args.h, "dist": dist.label,
            "tau": tau, "shift": shift, "seed": args.seed, "reps": args.reps,
            "runtime_s": f"{time.perf_counter() - t0:.1f}"}
    if args.format == "records":
        _emit(json.dumps({"meta": meta, **est}, indent=2) + "\n", args.output)
    else:
        _emit(f"ARL = {est['arl']:.2f} +/- {est['se']:.2f}\n# {_meta_line(meta)}\n",
              args.output)
    return EXIT_OK


# -- parser --------------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--score", default="w", choices=["w", "vdw", "w2"])
    common.add_argument("--seed", type=int, default=0)
    common.add_argument("--reps", type=int, default=10_000)
    common.add_argument("--input")
    common.add_argument("--output")
    common.add_argument("--format", choices=["text", "records"], default="text")
    common.add_argument("--workers", type=int, help=f"threads (default ${WORKERS_ENV} or 1)")

    p = _Parser(prog="ssrcusum", description="Signed sequential rank CUSUM charts.")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    m = sub.add_parser("monitor", parents=[common], help="run charts over a data file")
    m.add_argument("--config", help="JSON file with the same keys as the flags")
    m.add_argument("--zeta", type=float)
    m.add_argument("--h", type=float)
    m.add_argument("--arl0", type=float, help="look up h in the built-in tables")
    m.add_argument("--two-sided", action="store_true")
    m.add_argument("--target-shift", type=float, help="derive zeta = theta0 * shift / 2")
    m.add_argument("--theta0", type=float)
    m.add_argument("--alpha", type=float, help="derive dispersion reference values")
    m.add_argument("--theta1", type=float)
    m.add_argument("--disp-zeta-up", type=float)
    m.add_argument("--disp-h-up", type=float)
    m.add_argument("--disp-zeta-down", type=float)
    m.add_argument("--disp-h-down", type=float)
    m.add_argument("--keep-going", action="store_true", help="restart a chart after it signals")
    m.set_defaults(func=cmd_monitor)

    c = sub.add_parser("calibrate", parents=[common], help="solve control limits")
    c.add_argument("--zeta", type=_floats)
    c.add_argument("--arl0", type=_floats)
    c.add_argument("--side", choices=["upper", "lower", "both"], default="upper")
    c.add_argument("--two-sided", action="store_true")
    c.add_argument("--verify-reps", type=int, default=100_000)
    c.add_argument("--tol", type=float, default=3.0)
    c.set_defaults(func=cmd_calibrate)

    t = sub.add_parser("theta", parents=[common], help="efficacy constants")
    t.add_argument("--dist", action="append")
    t.add_argument("--target-shift", type=float)
    t.add_argument("--alpha", type=float)
    t.add_argument("--sigma-method", choices=["sample_sd", "iqr"], default="sample_sd")
    t.add_argument("--bandwidth", type=float)
    t.set_defaults(func=cmd_theta)

    a = sub.add_parser("arl", parents=[common], help="run a table experiment")
    a.add_argument("--scenario")
    a.set_defaults(func=cmd_arl, reps=None)

    s = sub.add_parser("simulate", parents=[common], help="run lengths or synthetic streams")
    s.add_argument("--zeta", type=float)
    s.add_argument("--h", type=float)
    s.add_argument("--two-sided", action="store_true")
    s.add_argument("--dist", default="normal")
    s.add_argument("--tau", type=int, default=0)
    s.add_argument("--target-shift", type=float, help="shift after tau, in data units")
    s.add_argument("--scale", type=float, default=1.0, help="data standard deviation")
    s.add_argument("--cap", type=int, default=10**6)
    s.add_argument("--emit", type=int, metavar="N", help="write one stream of N observations")
    s.set_defaults(func=cmd_simulate)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    if args.workers:
        os.environ[WORKERS_ENV] = str(args.workers)
    try:
        return args.func(args)
    except (CliError, ValueError, KeyError, OSError, RuntimeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_ERROR


if __name__ == "__main__":
    sys.exit(main())
