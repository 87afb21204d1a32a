"""Command-line front end: ``bilapscat <subcommand> [flags]``.

Every subcommand writes ``<subcommand>.json`` (and, where a table exists,
``<subcommand>.csv``) into ``--out``. Exit codes: 0 success, 2 for an
ill-conditioned null-space decision, 1 for any other error.
"""
from __future__ import annotations

import argparse
import logging
import sys
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path

import numpy as np

from . import __version__
from .errors import BilapError, IllConditioned
from .io import envelope, write_csv, write_json
from .lattice import LatticeWindow, load_potential

log = logging.getLogger("bilapscat")


def _int_list(text: str) -> list[int]:
    return [int(x) for x in text.split(",") if x.strip()]


def _common(p: argparse.ArgumentParser, potential: bool = True):
    if potential:
        p.add_argument("--potential", required=True, help="text file of 'n value' lines")
    p.add_argument("--window", type=int, default=None, help="lattice window radius")
    p.add_argument("--tol", type=float, default=None, help="relative null-space tolerance")
    p.add_argument("--mu0", type=float, default=None, help="low/high band split of the wave-operator integral")
    p.add_argument("--out", default=".", help="output directory")
    p.add_argument("--seed", type=int, default=0, help="seed for randomized probes")
    p.add_argument("--workers", type=int, default=1, help="worker threads for independent tasks")


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="bilapscat", description=__doc__.splitlines()[0])
    ap.add_argument("--version", action="version", version=__version__)
    ap.add_argument("-v", "--verbose", action="store_true")
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("classify", help="classify a threshold of Δ² + V")
    _common(p)
    p.add_argument("--threshold", choices=("zero", "sixteen"), default="zero")

    p = sub.add_parser("waveop", help="stationary wave-operator kernel on a window")
    _common(p)
    p.add_argument("--sign", choices=("+", "-"), default="+")

    p = sub.add_parser("growth", help="sup norm of W applied to box indicators")
    _common(p)
    p.add_argument("--Ns", type=_int_list, default=[8, 16, 32, 64, 128])

    p = sub.add_parser("decay", help="ℓ¹→ℓ∞ decay of the free beam propagator")
    _common(p, potential=False)
    p.add_argument("--a", type=float, default=0.0)
    p.add_argument("--tmin", type=float, default=1e2)
    p.add_argument("--tmax", type=float, default=1e4)
    p.add_argument("--npoints", type=int, default=13)

    p = sub.add_parser("probe", help="blow-up or cancellation order near a threshold")
    _common(p)
    p.add_argument("--threshold", choices=("zero", "sixteen"), default="zero")
    p.add_argument("--kind", default="blowup",
                   choices=("blowup", "vQ", "vS0", "vS1", "vS2", "sixteen-vQ"))

    p = sub.add_parser("cz", help="singular-integral kernel suite")
    _common(p, potential=False)
    p.add_argument("--kernel", default="kt1")
    p.add_argument("--p", type=float, default=2.0)
    p.add_argument("--Ns", type=_int_list, default=[128, 256, 512, 1024])
    p.add_argument("--probes", type=int, default=32)
    return ap


def _config(args) -> dict:
    cfg = {k: v for k, v in vars(args).items() if k != "verbose"}
    if cfg.get("potential"):
        cfg["potential"] = str(Path(cfg["potential"]).resolve())
    return cfg


def _out(args, name: str) -> Path:
    return Path(args.out) / name


def cmd_classify(args) -> None:
    from .threshold import DEFAULT_TOL, classify

    V = load_potential(args.potential)
    args.tol = DEFAULT_TOL if args.tol is None else args.tol
    win = None if args.window is None else LatticeWindow(args.window)
    rep = classify(V, args.threshold, tol=args.tol, window=win)
    write_json(_out(args, "classify.json"), envelope("classify", _config(args), rep.to_dict()))
    print(rep.classification)


def _quad_cfg(args):
    from .waveop import QuadratureConfig

    return QuadratureConfig() if args.mu0 is None else QuadratureConfig(mu0=args.mu0)


def cmd_waveop(args) -> None:
    from .waveop import stationary_wave_operator

    V = load_potential(args.potential)
    args.window = 32 if args.window is None else args.window
    cfg = _quad_cfg(args)
    args.mu0 = cfg.mu0
    K = stationary_wave_operator(V, LatticeWindow(args.window), cfg=cfg, sign=args.sign)
    conf = _config(args)
    write_csv(_out(args, "waveop.csv"), ["n", "m", "re", "im"], K.to_csv_rows(), conf)
    norms = np.linalg.norm(K.entries, axis=0)
    write_json(_out(args, "waveop.json"), envelope("waveop", conf, {
        "diagnostics": K.diagnostics,
        "columnNormAtOrigin": float(norms[int(np.searchsorted(K.cols, 0))]),
        "columnNormRange": [float(norms.min()), float(norms.max())],
    }))


def cmd_growth(args) -> None:
    from .waveop import endpoint_growth_experiment, endpoint_reference_sum

    V = load_potential(args.potential)
    cfg = _quad_cfg(args)
    args.mu0 = cfg.mu0
    res = endpoint_growth_experiment(V, args.Ns, cfg=cfg)
    conf = _config(args)
    rows = [(r["N"], r["sup"], r["edge"].real, r["edge"].imag, r["l2_ratio"]) for r in res["table"]]
    write_csv(_out(args, "growth.csv"), ["N", "sup", "edge_re", "edge_im", "l2_ratio"], rows, conf)
    write_json(_out(args, "growth.json"), envelope("growth", conf, {
        "table": res["table"], "fit": res["fit"], "referenceSumN1": endpoint_reference_sum(1),
    }))
    print(f"alpha = {res['fit'].slope:.6g}, correlation = {res['fit'].correlation:.6g}")


def cmd_decay(args) -> None:
    from .dispersive import decay_fit, stationary_analysis

    times = np.logspace(np.log10(args.tmin), np.log10(args.tmax), args.npoints)
    res = decay_fit(args.a, times)
    conf = _config(args)
    write_csv(_out(args, "decay.csv"), ["t", "supnorm"], zip(res.times, res.sup), conf)
    summary = {"a": args.a, "fit": res.fit}
    if args.a != 0:
        sa = stationary_analysis(args.a)
        summary["stationary"] = {"x0": sa.x0, "theta0": sa.theta0, "s0": sa.s0,
                                 "hAtRoot": sa.h_at_root}
    write_json(_out(args, "decay.json"), envelope("decay", conf, summary))
    print(f"exponent = {res.exponent:.6g}")


def cmd_probe(args) -> None:
    from .mmatrix import blowup_probe, cancellation_order_probe
    from .threshold import DEFAULT_TOL

    V = load_potential(args.potential)
    args.tol = DEFAULT_TOL if args.tol is None else args.tol
    conf = _config(args)
    if args.kind == "blowup":
        res = blowup_probe(V, args.threshold)
        rows = zip(res.mus, res.norms)
        summary = {"fit": res.fit, "nearSingular": res.near_singular, "dps": res.dps}
        fit = res.fit
    else:
        dist, sizes, fit = cancellation_order_probe(V, args.kind, tol=args.tol)
        rows = zip(2.0 - dist if args.kind == "sixteen-vQ" else dist, sizes)
        summary = {"fit": fit}
    write_csv(_out(args, "probe.csv"), ["mu", "norm"], rows, conf)
    write_json(_out(args, "probe.json"), envelope("probe", conf, summary))
    print(f"slope = {fit.slope:.6g}")


def cmd_cz(args) -> None:
    from .singular import lp_norm_estimate, reflection_identity_check, schur_doubling

    conf = _config(args)
    p = float(args.p)

    def one(N):
        return lp_norm_estimate(args.kernel, p, LatticeWindow(N), probes=args.probes, seed=args.seed)

    with ThreadPoolExecutor(max_workers=max(1, args.workers)) as ex:
        ests = list(ex.map(one, args.Ns))
    write_csv(_out(args, "cz.csv"), ["N", "p", "estimate", "lowerBoundOnly"],
              (e.to_csv_row() for e in ests), conf)
    refl = {k: reflection_identity_check(k, LatticeWindow(64)) for k in ("k1+", "k1-", "k2+", "k2-")}
    schur = {k: schur_doubling(k, 512) for k in ("schur-probe", args.kernel)}
    write_json(_out(args, "cz.json"), envelope("cz", conf, {
        "estimates": [{"N": e.radius, "p": e.p, "estimate": e.estimate,
                       "lowerBoundOnly": e.lower_bound_only} for e in ests],
        "reflectionResiduals": refl, "schurDoubling": schur,
    }))


COMMANDS = {"classify": cmd_classify, "waveop": cmd_waveop, "growth": cmd_growth,
            "decay": cmd_decay, "probe": cmd_probe, "cz": cmd_cz}


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        COMMANDS[args.command](args)
    except IllConditioned as exc:
        print(f"ill-conditioned: {exc}", file=sys.stderr)
        return 2
    except (BilapError, OSError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    return 0
