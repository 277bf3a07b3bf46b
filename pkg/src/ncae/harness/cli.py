"""Command line entry point: ``ncae <command> ...``."""
from __future__ import annotations

import argparse
import logging
import sys
from pathlib import Path

import numpy as np

from ..data import build_lorenz_dataset, build_pendulum_dataset, dataset_read, dataset_write
from ..data.lorenz96 import REGIMES
from ..errors import NcaeError
from ..network import init_model
from ..training import train, write_history_csv
from .checkpoint import checkpoint_load, checkpoint_save
from .config import load_config
from .evaluation import evaluate, hovmoller_grids, write_grid_csv, write_latent_csv

log = logging.getLogger("ncae")

COUPLINGS = ("standard", "context")


class UsageError(NcaeError, ValueError):
    """Flags that parse individually but do not make sense together."""


def _threads(args) -> int:
    return 1 if args.deterministic else max(1, args.threads)


def _int_list(text: str) -> list[int]:
    try:
        return [int(t) for t in text.split(",") if t.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}")


def _float_vec(text: str) -> list[float]:
    try:
        return [float(t) for t in text.split(",")]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}")


def cmd_generate(args) -> Path:
    seed = 0 if args.seed is None else args.seed
    if args.system == "lorenz96":
        if args.coupling is not None:
            raise UsageError("--coupling only applies to --system pendulum")
        if args.n_trajectories is not None:
            raise UsageError("--n-trajectories only applies to --system pendulum")
        ds = build_lorenz_dataset(args.regime or "context", args.split, seed=seed)
    else:
        if args.regime is not None:
            raise UsageError("--regime only applies to --system lorenz96")
        ds = build_pendulum_dataset(args.split, args.coupling or "context", seed=seed,
                                    n_trajectories=args.n_trajectories)
    if args.subsample > 1:
        ds = ds.subsample(args.subsample)
    out = dataset_write(ds, args.out)
    log.info("wrote %d trajectories to %s", len(ds), out)
    return out


def cmd_train(args) -> Path:
    cfg = load_config(args.config)
    spec = cfg.architecture_spec()
    tcfg = cfg.train_config(epochs=args.epochs, seed=args.seed,
                            deterministic=True if args.deterministic else None)
    ds = dataset_read(args.data)
    params = init_model(spec, np.random.default_rng(tcfg.seed))
    params, history, _ = train(params, ds, tcfg)
    final = history[-1].total if history else None
    out = checkpoint_save(params, args.out, system=cfg.system, training=tcfg.to_dict(),
                          seed=tcfg.seed, epoch=len(history), final_loss=final)
    hist_path = Path(args.history) if args.history else out / "loss_history.csv"
    write_history_csv(history, hist_path)
    log.info("trained %s for %d epochs, final loss %s", spec.variant.value, len(history), final)
    return out


def cmd_eval(args):
    params, _ = checkpoint_load(args.checkpoint)
    ds = dataset_read(args.data)
    report = evaluate(params, ds, threads=_threads(args))
    out = Path(args.out)
    summary = Path(args.summary) if args.summary else out.with_name(out.stem + "_summary" + out.suffix)
    report.write_csv(out, summary)
    for m, agg in report.aggregates.items():
        log.info("%s median %.6g", m, agg["median"])
    return report


def cmd_export_latent(args) -> Path:
    params, _ = checkpoint_load(args.checkpoint)
    ds = dataset_read(args.data)
    write_latent_csv(args.out, params, ds, trajectories=args.trajectories, overrides=args.override_context)
    return Path(args.out)


def cmd_export_hovmoller(args) -> Path:
    params, _ = checkpoint_load(args.checkpoint)
    ds = dataset_read(args.data)
    if ds.system != "lorenz96":
        raise UsageError(f"export-hovmoller needs a lorenz96 dataset, got {ds.system!r}")
    if args.forcing is not None:
        forcings = np.array([tr.context[0] for tr in ds.trajectories])
        index = int(np.argmin(np.abs(forcings - args.forcing)))
        if not np.isclose(forcings[index], args.forcing, rtol=0, atol=1e-9):
            raise UsageError(f"no trajectory with F = {args.forcing}; available: {forcings.tolist()}")
    else:
        index = args.trajectory
    if not 0 <= index < len(ds):
        raise UsageError(f"trajectory {index} out of range for {len(ds)} trajectories")
    err, truth = hovmoller_grids(params, ds, index)
    write_grid_csv(args.out, err, ds.dt)
    if args.truth_out:
        write_grid_csv(args.truth_out, truth, ds.dt)
    return Path(args.out)


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="ncae", description="Constrained autoencoders with context modulation.")
    p.add_argument("--seed", type=int, default=None, help="seed for data generation and model init")
    p.add_argument("--deterministic", action="store_true", help="force sequential evaluation")
    p.add_argument("--threads", type=int, default=1, help="worker threads for evaluation/export")
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True)

    g = sub.add_parser("generate", help="simulate a dataset")
    g.add_argument("--system", choices=("lorenz96", "pendulum"), required=True)
    g.add_argument("--regime", choices=tuple(REGIMES), default=None)
    g.add_argument("--coupling", choices=COUPLINGS, default=None)
    g.add_argument("--split", choices=("train", "test"), required=True)
    g.add_argument("--n-trajectories", type=int, default=None)
    g.add_argument("--subsample", type=int, default=1, help="keep every k-th sample")
    g.add_argument("--out", required=True)
    g.set_defaults(func=cmd_generate)

    t = sub.add_parser("train", help="train a model from a config file")
    t.add_argument("--config", required=True)
    t.add_argument("--data", required=True)
    t.add_argument("--out", required=True)
    t.add_argument("--epochs", type=int, default=None)
    t.add_argument("--history", default=None, help="loss history CSV (default: inside the checkpoint)")
    t.set_defaults(func=cmd_train)

    e = sub.add_parser("eval", help="per-trajectory RMSE report")
    e.add_argument("--checkpoint", required=True)
    e.add_argument("--data", required=True)
    e.add_argument("--out", required=True)
    e.add_argument("--summary", default=None)
    e.set_defaults(func=cmd_eval)

    la = sub.add_parser("export-latent", help="latent trajectories and velocities")
    la.add_argument("--checkpoint", required=True)
    la.add_argument("--data", required=True)
    la.add_argument("--out", required=True)
    la.add_argument("--trajectories", type=_int_list, default=None)
    la.add_argument("--override-context", type=_float_vec, action="append", default=None,
                    help="context to encode under (repeatable; comma-separated for vectors)")
    la.set_defaults(func=cmd_export_latent)

    h = sub.add_parser("export-hovmoller", help="absolute error grid for one Lorenz96 trajectory")
    h.add_argument("--checkpoint", required=True)
    h.add_argument("--data", required=True)
    h.add_argument("--out", required=True)
    h.add_argument("--truth-out", default=None)
    sel = h.add_mutually_exclusive_group()
    sel.add_argument("--trajectory", type=int, default=0)
    sel.add_argument("--forcing", type=float, default=None)
    h.set_defaults(func=cmd_export_hovmoller)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    if args.threads < 1:
        parser.error("--threads must be >= 1")
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(message)s")
    try:
        args.func(args)
    except (NcaeError, OSError, ValueError) as exc:
        print(f"ncae {args.command}: error: {exc}", file=sys.stderr)
        return 2
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
