"""Command-line entry point.

Subcommands: gen (dataset), ph (diagram cache), train, eval, sweep, flops,
inspect.  Configuration comes from an INI file with [experiment],
[filtration], and [train] sections; command-line flags override file values.
Exit codes: 0 success, 1 usage error, 2 runtime error, 3 failed assertion in
`eval --assert`.  Errors go to stderr with an `error_code=` prefix.
"""

from __future__ import annotations

import argparse
import configparser
import dataclasses
import json
import logging
import os
import sys
from pathlib import Path

import numpy as np

log = logging.getLogger("oamtopo")


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):  # argparse default exits 2; the contract wants 1
        raise UsageError(message)


def _add_common(p):
    p.add_argument("--config", help="INI config file (flags override file values)")
    p.add_argument("--log-level", default="info", choices=["debug", "info", "warning", "error"])
    p.add_argument("--jobs", type=int, default=os.cpu_count() or 1, help="worker parallelism")


def build_parser() -> _Parser:
    ap = _Parser(prog="oamtopo", description=__doc__)
    sub = ap.add_subparsers(dest="command", required=True)

    g = sub.add_parser("gen", parents=[], help="generate a dataset file")
    _add_common(g)
    g.add_argument("--bits", type=int)
    g.add_argument("--turbulence", type=float, default=0.0)
    g.add_argument("--per-class", type=int, dest="per_class")
    g.add_argument("--seed", type=int, default=0)
    g.add_argument("--noise", type=float)
    g.add_argument("--out", required=True)

    p = sub.add_parser("ph", help="precompute the persistence-diagram cache")
    _add_common(p)
    p.add_argument("--data", required=True)
    p.add_argument("--out", required=True)

    t = sub.add_parser("train", help="train a decoder model")
    _add_common(t)
    t.add_argument("--kind", choices=["cnn", "ph_cnn"], required=True)
    t.add_argument("--data", required=True)
    t.add_argument("--cache", help="diagram cache (required for ph_cnn)")
    t.add_argument("--out", required=True, help="model file path")
    t.add_argument("--history", help="history CSV path (default: <out>.history.csv)")
    t.add_argument("--epochs", type=int)
    t.add_argument("--seed", type=int, help="training seed override")

    e = sub.add_parser("eval", help="evaluate a model on the held-out split")
    _add_common(e)
    e.add_argument("--model", required=True)
    e.add_argument("--data", required=True)
    e.add_argument("--cache")
    e.add_argument("--out", help="write the report JSON here")
    e.add_argument("--assert", dest="assert_", action="store_true",
                   help="exit 3 when accuracy falls below --min-accuracy")
    e.add_argument("--min-accuracy", type=float, default=0.99)

    s = sub.add_parser("sweep", help="turbulence x bit-length accuracy grid")
    _add_common(s)
    s.add_argument("--out", required=True, help="grid CSV path")
    s.add_argument("--n-list", default="4,5,6")
    s.add_argument("--t-list", default="0,3,6,9,12")
    s.add_argument("--workdir")
    s.add_argument("--keep-artifacts", action="store_true")

    f = sub.add_parser("flops", help="parameter/FLOP table for an architecture")
    _add_common(f)
    f.add_argument("--arch", choices=["alexnet", "cnn", "ph_cnn"], default="alexnet")
    f.add_argument("--batch", type=int, default=64)
    f.add_argument("--kernels", type=int, default=1000, help="projection size for the PH row")

    i = sub.add_parser("inspect", help="dump a sample's images and diagram for plotting")
    _add_common(i)
    i.add_argument("--data", required=True)
    i.add_argument("--index", type=int, default=0)
    i.add_argument("--cache")
    i.add_argument("--outdir", required=True)
    return ap


# ---------------------------------------------------------------------------
# config file handling


def load_config(path: str | None, overrides: dict | None = None):
    from .autonet import TrainConfig
    from .homology import FiltrationParams
    from .pipeline import ExperimentConfig

    exp: dict = {}
    filt: dict = {}
    train: dict = {}
    if path:
        cp = configparser.ConfigParser()
        read = cp.read(path)
        if not read:
            raise FileNotFoundError(f"config file {path} not found")
        section_map = {"experiment": exp, "filtration": filt, "train": train}
        for section, target in section_map.items():
            if cp.has_section(section):
                target.update(dict(cp.items(section)))
        unknown = set(cp.sections()) - set(section_map)
        if unknown:
            raise UsageError(f"unknown config sections: {sorted(unknown)}")

    def conv(d: dict, casts: dict):
        out = {}
        for key, raw in d.items():
            if key not in casts:
                raise UsageError(f"unknown config key {key!r}")
            out[key] = casts[key](raw)
        return out

    as_int = int
    as_float = float
    as_str = str
    as_bool = lambda v: str(v).lower() in ("1", "true", "yes", "on")
    tuple_f = lambda v: tuple(float(x) for x in str(v).split(",") if x != "")
    tuple_i = lambda v: tuple(int(x) for x in str(v).split(",") if x != "")
    tuple_s = lambda v: tuple(x.strip() for x in str(v).split(",") if x.strip())
    opt_tuple_i = lambda v: None if str(v).lower() == "none" else tuple_i(v)

    exp_kwargs = conv(
        exp,
        {
            "n_bits": as_int,
            "grid_side": as_int,
            "grid_extent": as_float,
            "turbulence_levels": tuple_f,
            "noise_sigma": as_float,
            "samples_per_class": as_int,
            "split_ratio": as_float,
            "channels": tuple_s,
            "cnn_channel": as_str,
            "n_kernels": as_int,
            "kernel_split": opt_tuple_i,
            "nu": as_float,
            "norm_mode": as_str,
            "ph_head": as_str,
            "conv_channels": tuple_i,
            "fc_hidden": as_int,
            "master_seed": as_int,
            "sweep_seeds": as_int,
        },
    )
    filt_kwargs = conv(
        filt,
        {
            "mode": as_str,
            "max_dim": as_int,
            "max_radius": as_float,
            "tau": as_float,
            "max_points": as_int,
            "alpha": as_float,
        },
    )
    train_kwargs = conv(
        train,
        {
            "optimizer": as_str,
            "learning_rate": as_float,
            "batch_size": as_int,
            "epochs": as_int,
            "seed": as_int,
            "weight_init": as_str,
            "dtype": as_str,
        },
    )
    if overrides:
        for key, val in overrides.items():
            if val is None:
                continue
            section, name = key
            {"experiment": exp_kwargs, "filtration": filt_kwargs, "train": train_kwargs}[
                section
            ][name] = val
    cfg = ExperimentConfig(
        filtration=FiltrationParams(**filt_kwargs),
        train=TrainConfig(**train_kwargs),
        **exp_kwargs,
    )
    return cfg


def _setup_logging(level: str):
    logging.basicConfig(
        stream=sys.stderr,
        level=getattr(logging, level.upper()),
        format="%(levelname)s %(name)s: %(message)s",
    )


def write_pgm(path, values: np.ndarray) -> None:
    """8-bit binary PGM scaled to the value range."""
    from .fileio import atomic_write_bytes

    v = values.astype(np.float64)
    lo, hi = v.min(), v.max()
    scale = 255.0 / (hi - lo) if hi > lo else 0.0
    pix = ((v - lo) * scale).round().astype(np.uint8)
    header = f"P5\n{v.shape[1]} {v.shape[0]}\n255\n".encode()
    atomic_write_bytes(path, header + pix.tobytes())


# ---------------------------------------------------------------------------
# subcommand bodies


def _cmd_gen(args) -> int:
    from .pipeline import generate_dataset

    overrides = {
        ("experiment", "n_bits"): args.bits,
        ("experiment", "samples_per_class"): args.per_class,
        ("experiment", "noise_sigma"): args.noise,
    }
    cfg = load_config(args.config, overrides)
    log.info("config hash %s", cfg.config_hash())
    generate_dataset(cfg, args.turbulence, args.seed, args.out, jobs=args.jobs)
    print(f"wrote {args.out} ({(1 << cfg.n_bits) * cfg.samples_per_class} samples)")
    return 0


def _cmd_ph(args) -> int:
    from .pipeline import precompute_diagrams

    cfg = load_config(args.config)
    log.info("config hash %s", cfg.config_hash())
    diagrams = precompute_diagrams(cfg, args.data, args.out, jobs=args.jobs)
    print(f"wrote {args.out} ({len(diagrams)} diagrams)")
    return 0


def _split_seed_for(dataset) -> int:
    from .dataset import derive_seed

    return derive_seed(int(dataset.sidecar.get("cell_seed", 0)), 0xA11CE)


def _cmd_train(args) -> int:
    from .dataset import derive_seed, read_dataset, stratified_split
    from .pipeline import precompute_diagrams, train_model

    cfg = load_config(args.config)
    if args.epochs is not None:
        cfg = dataclasses.replace(cfg, train=dataclasses.replace(cfg.train, epochs=args.epochs))
    dataset = read_dataset(args.data)
    if dataset.n_bits != cfg.n_bits:
        cfg = dataclasses.replace(cfg, n_bits=dataset.n_bits)
    log.info("config hash %s", cfg.config_hash())
    train_idx, _ = stratified_split(dataset.labels, cfg.split_ratio, _split_seed_for(dataset))
    diagrams = None
    if args.kind == "ph_cnn":
        if not args.cache:
            raise UsageError("ph_cnn training requires --cache")
        diagrams = precompute_diagrams(cfg, args.data, args.cache, jobs=args.jobs)
    seed = args.seed if args.seed is not None else int(dataset.sidecar.get("cell_seed", 0))
    tag = {"cnn": 1, "ph_cnn": 2}[args.kind]
    cfg = dataclasses.replace(
        cfg, train=dataclasses.replace(cfg.train, seed=derive_seed(seed, tag))
    )
    history = args.history or str(args.out) + ".history.csv"
    train_model(args.kind, cfg, dataset, train_idx, diagrams, args.out, history)
    print(f"wrote {args.out} and {history}")
    return 0


def _cmd_eval(args) -> int:
    from .dataset import read_dataset, stratified_split
    from .fileio import atomic_write_json
    from .pipeline import evaluate, precompute_diagrams

    cfg = load_config(args.config)
    dataset = read_dataset(args.data)
    if dataset.n_bits != cfg.n_bits:
        cfg = dataclasses.replace(cfg, n_bits=dataset.n_bits)
    log.info("config hash %s", cfg.config_hash())
    _, test_idx = stratified_split(dataset.labels, cfg.split_ratio, _split_seed_for(dataset))
    diagrams = None
    if args.cache:
        diagrams = precompute_diagrams(cfg, args.data, args.cache, jobs=args.jobs)
    report = evaluate(args.model, cfg, dataset, test_idx, diagrams,
                      {"model_file": str(args.model)})
    print(f"accuracy {report.accuracy:.6f}  p_e {report.p_e:.6f}")
    if args.out:
        atomic_write_json(args.out, report.to_dict())
    if args.assert_ and report.accuracy < args.min_accuracy:
        print(
            f"error_code=assertion accuracy {report.accuracy:.6f} < {args.min_accuracy}",
            file=sys.stderr,
        )
        return 3
    return 0


def _cmd_sweep(args) -> int:
    from .pipeline import sweep

    cfg = load_config(args.config)
    log.info("config hash %s", cfg.config_hash())
    n_list = tuple(int(x) for x in args.n_list.split(","))
    t_list = tuple(float(x) for x in args.t_list.split(","))
    sweep(cfg, n_list, t_list, args.out, workdir=args.workdir, jobs=args.jobs,
          keep_artifacts=args.keep_artifacts)
    print(f"wrote {args.out}")
    return 0


def _cmd_flops(args) -> int:
    from .autonet import alexnet_spec, count_params_flops, format_table, ph_layer_count
    from .pipeline import ExperimentConfig, cnn_spec, ph_spec

    if args.arch == "alexnet":
        rows = count_params_flops(alexnet_spec())
        extra = ph_layer_count(args.kernels)
        print("baseline (image classifier):")
        print(format_table(rows, args.batch))
        print()
        print("with topological input layer:")
        print(format_table(rows, args.batch, extra=extra))
    else:
        cfg = load_config(args.config)
        spec = cnn_spec(cfg) if args.arch == "cnn" else ph_spec(cfg)
        extra = ph_layer_count(cfg.n_kernels) if args.arch == "ph_cnn" else None
        print(format_table(count_params_flops(spec), args.batch, extra=extra))
    return 0


def _cmd_inspect(args) -> int:
    from .dataset import read_dataset
    from .fileio import atomic_write_text
    from .homology.cache import load_diagrams
    from .fileio import read_json
    from .homology import compute_diagram
    from .optics import GridSpec, Image

    cfg = load_config(args.config)
    dataset = read_dataset(args.data)
    if not 0 <= args.index < len(dataset):
        raise UsageError(f"sample index {args.index} out of range (0..{len(dataset) - 1})")
    outdir = Path(args.outdir)
    outdir.mkdir(parents=True, exist_ok=True)
    label = int(dataset.labels[args.index])
    for c, kind in enumerate(dataset.channel_kinds):
        img_path = outdir / f"sample{args.index}_{kind}.pgm"
        write_pgm(img_path, dataset.images[args.index, c])
        print(f"wrote {img_path}")
    if args.cache:
        side = read_json(str(args.cache) + ".json")
        diagrams = load_diagrams(args.cache, side["max_filtration"], cfg.filtration.mode)
        diagram = diagrams[args.index]
    else:
        img = Image(
            GridSpec(dataset.side, cfg.grid_extent),
            dataset.channel("intensity")[args.index].astype(np.float64),
        )
        diagram = compute_diagram(img, cfg.filtration)
    csv_path = outdir / f"sample{args.index}_diagram.csv"
    lines = ["dim,birth,death"]
    for p in diagram.points:
        lines.append(f"{p.dim},{p.birth!r},{p.death!r}")
    atomic_write_text(csv_path, "\n".join(lines) + "\n")
    print(f"wrote {csv_path} (label {label}, {len(diagram.points)} points)")
    return 0


_COMMANDS = {
    "gen": _cmd_gen,
    "ph": _cmd_ph,
    "train": _cmd_train,
    "eval": _cmd_eval,
    "sweep": _cmd_sweep,
    "flops": _cmd_flops,
    "inspect": _cmd_inspect,
}


def run(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except UsageError as exc:
        print(f"error_code=usage {exc}", file=sys.stderr)
        return 1
    _setup_logging(args.log_level)
    try:
        return _COMMANDS[args.command](args)
    except UsageError as exc:
        print(f"error_code=usage {exc}", file=sys.stderr)
        return 1
    except (SystemExit, KeyboardInterrupt):
        raise
    except Exception as exc:
        print(f"error_code=runtime {type(exc).__name__}: {exc}", file=sys.stderr)
        log.debug("traceback", exc_info=True)
        return 2


def main() -> None:
    sys.exit(run())


if __name__ == "__main__":
    main()
