"""Command-line entry point: ``swingpinn {generate,train,identify,evaluate,benchmark,predict}``.

Every command reads an optional JSON run config (``--config``), applies flag
overrides on top, and writes ``manifest.json`` with the fully resolved config
into ``--out``. Exit codes: 0 success, 1 usage error, 2 runtime failure.
"""
from __future__ import annotations

import argparse
import dataclasses
import json
import logging
import sys
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional

import numpy as np

from . import __version__
from .dataset import (
    DatasetSpec,
    generate_grid,
    identification_pairs,
    load_csv,
    sample_collocation_points,
    sample_training_points,
    save_csv,
)
from .dynamics import IntegrationError, SwingParams
from .evaluation import (
    benchmark,
    evaluate_model,
    write_per_trajectory_csv,
    write_plot_csv,
)
from .pinn import in_domain, predict_delta, predict_omega
from .trainer import (
    CheckpointError,
    TrainConfig,
    TrainingDiverged,
    checkpoint,
    restore,
    train_forward,
    train_identify,
    write_history_csv,
)

logger = logging.getLogger("swingpinn")

EXIT_OK, EXIT_USAGE, EXIT_RUNTIME = 0, 1, 2


class UsageError(Exception):
    pass


@dataclass
class IdentifyConfig:
    n_pairs: int = 10
    pair_seed: int = 0
    n_trajectories: int = 40
    n_u: int = 100
    n_f: int = 4000
    layers: list = field(default_factory=lambda: [2, 30, 30, 30, 30, 30, 1])
    init_guess: list = field(default_factory=lambda: [0.25, 0.10])
    m_range: list = field(default_factory=lambda: [0.1, 0.4])
    d_range: list = field(default_factory=lambda: [0.05, 0.15])


@dataclass
class BenchmarkConfig:
    n_samples: int = 100
    single_instant: float = 10.0
    early_instant: float = 0.1
    repeats: int = 10


@dataclass
class RunConfig:
    dataset: DatasetSpec = field(default_factory=DatasetSpec)
    physics: SwingParams = field(default_factory=SwingParams)
    train: TrainConfig = field(default_factory=TrainConfig)
    layers: list = field(default_factory=lambda: [2, 10, 10, 10, 10, 10, 1])
    n_u: int = 40
    n_f: int = 8000
    two_output: bool = False
    seed: int = 0
    out: str = "run"
    identify: IdentifyConfig = field(default_factory=IdentifyConfig)
    benchmark: BenchmarkConfig = field(default_factory=BenchmarkConfig)

    def to_dict(self) -> dict:
        return {
            "dataset": self.dataset.to_dict(),
            "physics": self.physics.to_dict(),
            "train": self.train.to_dict(),
            "layers": list(self.layers),
            "n_u": self.n_u,
            "n_f": self.n_f,
            "two_output": self.two_output,
            "seed": self.seed,
            "out": self.out,
            "identify": dataclasses.asdict(self.identify),
            "benchmark": dataclasses.asdict(self.benchmark),
        }

    @classmethod
    def from_dict(cls, data: dict) -> "RunConfig":
        sections = {
            "dataset": DatasetSpec.from_dict,
            "physics": lambda d: SwingParams(**d),
            "train": TrainConfig.from_dict,
            "identify": lambda d: IdentifyConfig(**d),
            "benchmark": lambda d: BenchmarkConfig(**d),
        }
        kwargs = {}
        for key, value in data.items():
            if key in sections:
                kwargs[key] = sections[key](value)
            elif key in cls.__dataclass_fields__:
                kwargs[key] = value
            else:
                raise UsageError(f"unknown config field {key!r}")
        return cls(**kwargs)


def _load_config(args) -> RunConfig:
    if args.config:
        try:
            cfg = RunConfig.from_dict(json.loads(Path(args.config).read_text()))
        except OSError as exc:
            raise UsageError(f"cannot read config: {exc}") from exc
        except (json.JSONDecodeError, TypeError, ValueError) as exc:
            raise UsageError(f"invalid config {args.config}: {exc}") from exc
    else:
        cfg = RunConfig()
    if args.seed is not None:
        cfg.seed = args.seed
    if args.out is not None:
        cfg.out = args.out
    # one master seed drives every random draw
    cfg.dataset = dataclasses.replace(cfg.dataset, seed=cfg.seed)
    cfg.train = dataclasses.replace(cfg.train, seed=cfg.seed)
    for flag in ("nu", "nf", "layers", "iters"):
        value = getattr(args, flag, None)
        if value is None:
            continue
        if flag == "nu":
            cfg.n_u = value
            cfg.identify.n_u = value
        elif flag == "nf":
            cfg.n_f = value
            cfg.identify.n_f = value
        elif flag == "layers":
            cfg.layers = value
            cfg.identify.layers = value
        else:
            cfg.train = dataclasses.replace(cfg.train, max_iterations=value)
    if getattr(args, "trajectories", None) is not None:
        cfg.dataset = dataclasses.replace(cfg.dataset, n_trajectories=args.trajectories)
    if getattr(args, "pairs", None) is not None:
        cfg.identify.n_pairs = args.pairs
    if getattr(args, "refine", False):
        cfg.train = dataclasses.replace(cfg.train, refine=True)
    if getattr(args, "float32", False):
        cfg.train = dataclasses.replace(cfg.train, dtype="float32")
    if getattr(args, "warmup", None) is not None:
        cfg.train = dataclasses.replace(cfg.train, physics_warmup=args.warmup)
    return cfg


def _write_json(path: Path, obj) -> None:
    path.write_text(json.dumps(obj, indent=2, sort_keys=True) + "\n")


def _manifest(out: Path, command: str, cfg: RunConfig, extra: Optional[dict] = None) -> None:
    data = {"command": command, "version": __version__, "config": cfg.to_dict()}
    if extra:
        data.update(extra)
    _write_json(out / "manifest.json", data)


def _outdir(cfg: RunConfig) -> Path:
    out = Path(cfg.out)
    try:
        out.mkdir(parents=True, exist_ok=True)
    except OSError as exc:
        raise UsageError(f"cannot create output directory {out}: {exc}") from exc
    return out


def cmd_generate(args) -> int:
    cfg = _load_config(args)
    out = _outdir(cfg)
    grid = generate_grid(cfg.dataset, cfg.physics)
    save_csv(grid, out / "grid.csv")
    cfg.dataset.save_json(out / "dataset_spec.json")
    _manifest(out, "generate", cfg)
    print(f"wrote {sum(len(tr) for tr in grid)} samples over {len(grid)} trajectories to {out / 'grid.csv'}")
    return EXIT_OK


def _grid_path(args, cfg: RunConfig) -> Path:
    path = Path(args.data) if args.data else Path(cfg.out) / "grid.csv"
    if not path.exists():
        raise FileNotFoundError(f"dataset {path} not found; run `swingpinn generate` first or pass --data")
    return path


def cmd_train(args) -> int:
    cfg = _load_config(args)
    grid_path = _grid_path(args, cfg)
    out = _outdir(cfg)
    grid = load_csv(grid_path)
    domain = cfg.dataset.domain
    training = sample_training_points(grid, cfg.n_u, cfg.seed)
    collocation = sample_collocation_points(cfg.n_f, domain, cfg.seed + 1)
    _manifest(out, "train", cfg, {"data": str(grid_path)})
    try:
        model, report = train_forward(
            training,
            collocation,
            cfg.layers,
            cfg.physics,
            cfg.train,
            domain=domain,
            two_output=cfg.two_output,
        )
    except TrainingDiverged as exc:
        checkpoint(exc.model, out / "checkpoint_last_finite.json")
        write_history_csv(exc.report, out / "history.csv")
        print(f"error: {exc}; last finite model written to checkpoint_last_finite.json", file=sys.stderr)
        return EXIT_RUNTIME
    checkpoint(model, out / "checkpoint.json")
    write_history_csv(report, out / "history.csv")
    _write_json(out / "train_report.json", report.to_dict())
    _evaluate_into(model, grid, out)
    ev = json.loads((out / "eval_report.json").read_text())
    print(
        f"trained {report.iterations} Adam + {report.refine_iterations} L-BFGS iterations "
        f"in {report.seconds:.1f} s; final loss {report.final.total:.3e}; "
        f"relative L2 delta {ev['l2_delta']:.3e}, omega {ev['l2_omega']:.3e}"
    )
    return EXIT_OK


def _evaluate_into(model, grid, out: Path):
    report = evaluate_model(model, grid)
    report.save_json(out / "eval_report.json")
    write_per_trajectory_csv(report, out / "per_trajectory.csv")
    by_p1 = {tr.p1: tr for tr in grid}
    write_plot_csv(model, by_p1[report.best_p1], out / "plot_best.csv")
    write_plot_csv(model, by_p1[report.worst_p1], out / "plot_worst.csv")
    return report


def cmd_evaluate(args) -> int:
    cfg = _load_config(args)
    model = restore(args.checkpoint)
    grid = load_csv(_grid_path(args, cfg))
    out = _outdir(cfg)
    _manifest(out, "evaluate", cfg, {"checkpoint": str(args.checkpoint)})
    report = _evaluate_into(model, grid, out)
    print(f"relative L2 delta {report.l2_delta:.3e}, omega {report.l2_omega:.3e}")
    return EXIT_OK


def cmd_identify(args) -> int:
    cfg = _load_config(args)
    out = _outdir(cfg)
    idc = cfg.identify
    _manifest(out, "identify", cfg)
    pairs = identification_pairs(idc.n_pairs, idc.pair_seed, tuple(idc.m_range), tuple(idc.d_range))
    spec = dataclasses.replace(cfg.dataset, n_trajectories=idc.n_trajectories)
    train_cfg = dataclasses.replace(cfg.train, mode="identify")
    rows = []
    for i, (m_true, d_true) in enumerate(pairs):
        pair_dir = out / f"pair_{i:02d}"
        pair_dir.mkdir(exist_ok=True)
        params = dataclasses.replace(cfg.physics, m=m_true, d=d_true)
        grid = generate_grid(spec, params)
        save_csv(grid, pair_dir / "grid.csv")
        training = sample_training_points(grid, idc.n_u, cfg.seed + i)
        collocation = sample_collocation_points(idc.n_f, spec.domain, cfg.seed + 1 + i)
        model, report = train_identify(
            training,
            collocation,
            idc.layers,
            cfg.physics,
            train_cfg,
            domain=spec.domain,
            init_guess=tuple(idc.init_guess),
            truth=(m_true, d_true),
        )
        checkpoint(model, pair_dir / "checkpoint.json")
        write_history_csv(report, pair_dir / "history.csv")
        l2 = evaluate_model(model, grid).l2_delta
        rows.append(
            {
                "pair": i,
                "m_true": m_true,
                "d_true": d_true,
                "m_hat": model.params.m,
                "d_hat": model.params.d,
                "err_m": report.relative_errors["m"],
                "err_d": report.relative_errors["d"],
                "l2_delta": l2,
                "seconds": report.seconds,
            }
        )
        print(
            f"pair {i}: m={m_true:.4f} -> {model.params.m:.4f} ({100 * rows[-1]['err_m']:.2f}%), "
            f"d={d_true:.4f} -> {model.params.d:.4f} ({100 * rows[-1]['err_d']:.2f}%)"
        )
    average = {
        "err_m": float(np.mean([r["err_m"] for r in rows])),
        "err_d": float(np.mean([r["err_d"] for r in rows])),
        "l2_delta": float(np.mean([r["l2_delta"] for r in rows])),
    }
    _write_json(out / "identify_report.json", {"pairs": rows, "average": average})
    with open(out / "identify.csv", "w") as fh:
        cols = ["pair", "m_true", "d_true", "m_hat", "d_hat", "err_m", "err_d", "l2_delta", "seconds"]
        fh.write(",".join(cols) + "\n")
        for r in rows:
            fh.write(",".join(repr(r[c]) for c in cols) + "\n")
        fh.write(
            f"average,,,,,{average['err_m']!r},{average['err_d']!r},{average['l2_delta']!r},\n"
        )
    print(f"average relative error m {100 * average['err_m']:.2f}%, d {100 * average['err_d']:.2f}%")
    return EXIT_OK


def cmd_benchmark(args) -> int:
    cfg = _load_config(args)
    if not args.checkpoint or not Path(args.checkpoint).exists():
        raise FileNotFoundError(f"checkpoint {args.checkpoint} not found")
    model = restore(args.checkpoint)
    out = _outdir(cfg)
    _manifest(out, "benchmark", cfg, {"checkpoint": str(args.checkpoint)})
    bc = cfg.benchmark
    spec = cfg.dataset
    p1 = np.linspace(spec.p_min, spec.p_max, bc.n_samples)
    report = benchmark(
        model,
        cfg.physics,
        p1,
        spec.t_end,
        spec.output_step,
        bc.single_instant,
        spec.init,
        early_instant=bc.early_instant,
        repeats=bc.repeats,
    )
    report.save_json(out / "timing_report.json")
    print(
        f"full grid: integrator {report.integrator_full_grid:.3g} s, surrogate {report.surrogate_full_grid:.3g} s "
        f"-> {report.speedup_full_grid:.1f}x (reference {report.reference_speedup_full_grid:g}x)\n"
        f"single instant t={report.single_instant:g}: integrator {report.integrator_single_instant:.3g} s, "
        f"surrogate {report.surrogate_single_instant:.3g} s -> {report.speedup_single_instant:.1f}x "
        f"(reference {report.reference_speedup_single_instant:g}x)"
    )
    return EXIT_OK


def cmd_predict(args) -> int:
    model = restore(args.checkpoint)
    delta = float(predict_delta(model, args.t, args.p1)[0])
    omega = float(predict_omega(model, args.t, args.p1)[0])
    extrapolated = not bool(in_domain(model, args.t, args.p1).all())
    result = {"t": args.t, "p1": args.p1, "delta": delta, "omega": omega, "extrapolation": extrapolated}
    if extrapolated:
        print(
            f"warning: (t={args.t}, p1={args.p1}) lies outside the training box "
            f"[0, {model.norm.t_end}] x [{model.norm.p_min}, {model.norm.p_max}]",
            file=sys.stderr,
        )
    print(json.dumps(result))
    if args.out:
        out = Path(args.out)
        out.mkdir(parents=True, exist_ok=True)
        _write_json(out / "prediction.json", result)
    return EXIT_OK


def _layers(text: str) -> list:
    try:
        sizes = [int(v) for v in text.split(",")]
    except ValueError:
        raise argparse.ArgumentTypeError(f"layers must be comma-separated integers, got {text!r}")
    if any(n <= 0 for n in sizes) or len(sizes) < 2:
        raise argparse.ArgumentTypeError("layer sizes must be positive and at least two")
    return sizes


def _count(text: str) -> int:
    try:
        value = int(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected a non-negative integer, got {text!r}")
    if value < 0:
        raise argparse.ArgumentTypeError(f"expected a non-negative integer, got {text!r}")
    return value


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="swingpinn", description=__doc__.splitlines()[0])
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    def common(p, with_training=False):
        p.add_argument("--config", help="JSON run config")
        p.add_argument("--seed", type=int)
        p.add_argument("--out", help="output directory")
        if with_training:
            p.add_argument("--nu", type=int, help="number of labeled points")
            p.add_argument("--nf", type=int, help="number of collocation points")
            p.add_argument("--layers", type=_layers, help="e.g. 2,10,10,10,10,10,1")
            p.add_argument("--iters", type=int, help="Adam iterations")
            p.add_argument("--refine", action="store_true", help="L-BFGS refinement after Adam")
            p.add_argument("--float32", action="store_true", help="single-precision network sweeps")
            p.add_argument("--warmup", type=_count, help="Adam iterations before m and d start moving")

    p = sub.add_parser("generate", help="integrate the trajectory grid")
    common(p)
    p.add_argument("--trajectories", type=int)
    p.set_defaults(func=cmd_generate)

    p = sub.add_parser("train", help="train the forward surrogate and evaluate it")
    common(p, with_training=True)
    p.add_argument("--data", help="grid CSV (default: <out>/grid.csv)")
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("identify", help="identify inertia and damping for (m, d) pairs")
    common(p, with_training=True)
    p.add_argument("--pairs", type=int)
    p.set_defaults(func=cmd_identify)

    p = sub.add_parser("evaluate", help="evaluate a checkpoint on a grid")
    common(p)
    p.add_argument("--checkpoint", required=True)
    p.add_argument("--data", help="grid CSV (default: <out>/grid.csv)")
    p.set_defaults(func=cmd_evaluate)

    p = sub.add_parser("benchmark", help="integrator versus surrogate timing")
    common(p)
    p.add_argument("--checkpoint", required=True)
    p.set_defaults(func=cmd_benchmark)

    p = sub.add_parser("predict", help="query the surrogate at one (t, p1)")
    p.add_argument("--checkpoint", required=True)
    p.add_argument("--t", type=float, required=True)
    p.add_argument("--p1", type=float, required=True)
    p.add_argument("--out", help="also write prediction.json here")
    p.set_defaults(func=cmd_predict)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING)
    try:
        return args.func(args)
    except UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (FileNotFoundError, CheckpointError, IntegrationError, OSError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_RUNTIME


if __name__ == "__main__":
    sys.exit(main())
