"""Command-line entry point: training, reference-guided sampling, evaluation.

Every command writes a run manifest (JSON) that echoes the resolved
configuration and original arguments; `rerun MANIFEST --out DIR` replays a
manifest and reproduces the original output files byte for byte.

Exit codes: 0 success, 2 usage error, 3 data error, 4 numeric failure.
"""
from __future__ import annotations

import argparse
import concurrent.futures
import dataclasses
import hashlib
import json
import sys
import time
from pathlib import Path

import numpy as np

from . import neural, tensorio
from .denoise import AnalyticGmmDenoiser
from .metrics import EvalReport, frechet_pixel_distance, lowfreq_error, pairwise_diversity, reports_to_text
from .sampler import IlvrConfig, NonFiniteStateError, sample_ilvr
from .schedule import make_linear_schedule
from .lowpass import KERNELS

EXIT_OK = 0
EXIT_USAGE = 2
EXIT_DATA = 3
EXIT_NUMERIC = 4


class DataError(Exception):
    """Missing or malformed input data."""


@dataclasses.dataclass
class RunManifest:
    command: str
    argv: list[str]
    seed: int
    schedule: dict
    model: str
    model_sha256: str
    outputs: list[str]
    duration_s: float

    def write(self, path: Path) -> None:
        path.write_text(json.dumps(dataclasses.asdict(self), indent=1))


def _sha256(path: Path) -> str:
    return hashlib.sha256(path.read_bytes()).hexdigest()


def _schedule_args(p: argparse.ArgumentParser) -> None:
    p.add_argument("--T", type=int, default=200, help="diffusion steps (default 200)")
    p.add_argument("--beta-start", type=float, default=None,
                   help="first beta; default rescales the 1000-step convention by 1000/T")
    p.add_argument("--beta-end", type=float, default=None,
                   help="last beta; default rescales the 1000-step convention by 1000/T")
    p.add_argument("--sigma-mode", choices=("beta", "posterior"), default="posterior",
                   help="reverse-step noise scale (default posterior)")


def _build_schedule(args):
    return make_linear_schedule(args.T, args.beta_start, args.beta_end, args.sigma_mode)


def _schedule_echo(args) -> dict:
    return {
        "T": args.T,
        "beta_start": args.beta_start,
        "beta_end": args.beta_end,
        "sigma_mode": args.sigma_mode,
    }


def _load_model(spec: str):
    """`analytic:<mixture.json>` or a neural checkpoint path."""
    if spec.startswith("analytic:"):
        path = Path(spec[len("analytic:"):])
        if not path.exists():
            raise DataError(f"mixture file not found: {path}")
        return AnalyticGmmDenoiser(tensorio.load_mixture(path)), path
    path = Path(spec)
    if not path.exists():
        raise DataError(f"checkpoint not found: {path}")
    try:
        return neural.load_checkpoint(path), path
    except ValueError as exc:
        raise DataError(str(exc)) from exc


def _load_reference(path: Path) -> np.ndarray:
    if not path.exists():
        raise DataError(f"reference not found: {path}")
    if path.suffix == ".ten":
        return tensorio.read_tensor(path).astype(np.float64)
    return tensorio.load_image(path)


def cmd_train(args, argv: list[str]) -> int:
    t0 = time.time()
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    sched = _build_schedule(args)

    if args.mixture:
        mix_path = Path(args.mixture)
        if not mix_path.exists():
            raise DataError(f"mixture file not found: {mix_path}")
        mix = tensorio.load_mixture(mix_path)
        data_shape = mix.data_shape
        data_rng = np.random.default_rng(args.seed)

        def next_batch():
            flat = mix.sample(data_rng, args.batch)
            return flat.reshape(args.batch, *data_shape)

    else:
        data_dir = Path(args.data_dir)
        files = sorted(data_dir.glob("*.pgm")) + sorted(data_dir.glob("*.ppm"))
        if not files:
            raise DataError(f"no .pgm/.ppm images under {data_dir}")
        images = np.stack([tensorio.load_image(f) for f in files])
        data_shape = images.shape[1:]
        data_rng = np.random.default_rng(args.seed)

        def next_batch():
            idx = data_rng.integers(0, len(images), size=args.batch)
            return images[idx]

    if args.arch == "auto":
        arch = "conv" if len(data_shape) == 3 else "mlp"
    else:
        arch = args.arch
    if arch == "mlp":
        net = neural.MlpDenoiser(
            int(np.prod(data_shape)), hidden=args.hidden, embed_dim=args.embed_dim, seed=args.seed
        )
    else:
        net = neural.ConvDenoiser(
            data_shape, channels=args.channels, embed_dim=args.embed_dim, seed=args.seed
        )

    opt = neural.AdamState.for_net(net)
    losses = []
    for step in range(args.steps):
        batch = next_batch()
        if arch == "mlp":
            batch = batch.reshape(args.batch, -1)
        losses.append(neural.train_step(net, batch, sched, args.seed + 1 + step, opt, lr=args.lr))

    ckpt = out / "checkpoint.ckpt"
    neural.save_checkpoint(ckpt, net)
    curve = out / "loss.csv"
    curve.write_text("step,loss\n" + "".join(f"{i},{v!r}\n" for i, v in enumerate(losses)))

    manifest = RunManifest(
        command="train",
        argv=argv,
        seed=args.seed,
        schedule=_schedule_echo(args),
        model=str(ckpt),
        model_sha256=_sha256(ckpt),
        outputs=[ckpt.name, curve.name],
        duration_s=time.time() - t0,
    )
    manifest.write(out / "manifest.json")
    final = losses[-1] if losses else float("nan")
    print(f"trained {args.steps} steps (final loss {final:.6g}) -> {ckpt}")
    return EXIT_OK


def cmd_ilvr(args, argv: list[str]) -> int:
    t0 = time.time()
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    sched = _build_schedule(args)
    model, model_path = _load_model(args.model)
    ref = _load_reference(Path(args.ref))
    if ref.shape != tuple(model.data_shape):
        raise DataError(
            f"reference shape {ref.shape} does not match model data shape {model.data_shape}"
        )

    base_cfg = IlvrConfig(
        reference=ref,
        factor=args.factor,
        kernel=args.kernel,
        stop_step=args.stop_step,
        seed=args.seed,
        count=args.count,
    )
    base_cfg.validate(sched.T)

    def draw(i: int) -> np.ndarray:
        cfg = dataclasses.replace(base_cfg, seed=args.seed + i, count=1)
        samples, _ = sample_ilvr(model, sched, cfg)
        return samples[0]

    if args.jobs > 1:
        with concurrent.futures.ThreadPoolExecutor(max_workers=args.jobs) as pool:
            samples = list(pool.map(draw, range(args.count)))
    else:
        samples = [draw(i) for i in range(args.count)]

    outputs = []
    reports = []
    is_image = len(ref.shape) == 3 and ref.shape[0] in (1, 3)
    for i, x in enumerate(samples):
        ten = out / f"sample_{i:03d}.ten"
        tensorio.write_tensor(ten, x)
        outputs.append(ten.name)
        if is_image:
            img = out / f"sample_{i:03d}.pgm"
            tensorio.save_image(img, x)
            outputs.append(img.name)
        err = lowfreq_error(x, ref, args.factor, args.kernel)
        reports.append(
            EvalReport(
                "lowfreq_error",
                err,
                1,
                {"sample": i, "N": args.factor, "kernel": args.kernel, "stop_step": args.stop_step},
            )
        )
    if args.count >= 2:
        reports.append(
            EvalReport(
                "pairwise_diversity",
                pairwise_diversity(samples),
                args.count * (args.count - 1) // 2,
                {"N": args.factor, "kernel": args.kernel, "stop_step": args.stop_step},
            )
        )
    rep_path = out / "reports.json"
    rep_path.write_text(json.dumps([json.loads(r.to_json()) for r in reports], indent=1))
    outputs.append(rep_path.name)

    manifest = RunManifest(
        command="ilvr",
        argv=argv,
        seed=args.seed,
        schedule=_schedule_echo(args),
        model=args.model,
        model_sha256=_sha256(model_path),
        outputs=outputs,
        duration_s=time.time() - t0,
    )
    manifest.write(out / "manifest.json")
    print(reports_to_text(reports))
    return EXIT_OK


def _group_files(directory: Path) -> dict[str, list[Path]]:
    """Reference groups: subdirectories if present, else one flat group."""
    subdirs = sorted(d for d in directory.iterdir() if d.is_dir())
    if subdirs:
        return {d.name: sorted(d.glob("*.ten")) + sorted(d.glob("*.pgm")) for d in subdirs}
    return {directory.name: sorted(directory.glob("*.ten")) + sorted(directory.glob("*.pgm"))}


def _load_sample(path: Path) -> np.ndarray:
    if path.suffix == ".ten":
        return tensorio.read_tensor(path).astype(np.float64)
    return tensorio.load_image(path)


def cmd_eval(args, argv: list[str]) -> int:
    t0 = time.time()
    samples_dir = Path(args.samples)
    if not samples_dir.is_dir():
        raise DataError(f"sample directory not found: {samples_dir}")
    groups = _group_files(samples_dir)
    reports = []
    pooled = []
    for name, files in sorted(groups.items()):
        if len(files) < 2:
            raise DataError(f"reference group {name!r} holds {len(files)} samples, need >= 2")
        arrs = [_load_sample(f) for f in files]
        pooled.extend(arrs)
        reports.append(
            EvalReport(
                "pairwise_diversity",
                pairwise_diversity(arrs),
                len(arrs) * (len(arrs) - 1) // 2,
                {"group": name, "samples": len(arrs)},
            )
        )
    if args.real:
        real_dir = Path(args.real)
        real_files = sorted(real_dir.glob("*.ten")) + sorted(real_dir.glob("*.pgm"))
        if len(real_files) < 2:
            raise DataError(f"real directory {real_dir} holds {len(real_files)} samples, need >= 2")
        real = [_load_sample(f) for f in real_files]
        reports.append(
            EvalReport(
                "frechet_pixel_distance",
                frechet_pixel_distance(pooled, real),
                len(pooled),
                {"real_n": len(real)},
            )
        )

    out = Path(args.out) if args.out else samples_dir
    out.mkdir(parents=True, exist_ok=True)
    rep_path = out / "eval_reports.json"
    rep_path.write_text(json.dumps([json.loads(r.to_json()) for r in reports], indent=1))
    manifest = RunManifest(
        command="eval",
        argv=argv,
        seed=0,
        schedule={},
        model="",
        model_sha256="",
        outputs=[rep_path.name],
        duration_s=time.time() - t0,
    )
    manifest.write(out / "eval_manifest.json")
    print(reports_to_text(reports))
    return EXIT_OK


def cmd_rerun(args, _argv: list[str]) -> int:
    manifest_path = Path(args.manifest)
    if not manifest_path.exists():
        raise DataError(f"manifest not found: {manifest_path}")
    doc = json.loads(manifest_path.read_text())
    replay = [doc["command"], *doc["argv"], "--out", args.out]
    return main(replay)


def cmd_serve(args, _argv: list[str]) -> int:
    import uvicorn

    from .service import create_app

    app = create_app(model_dir=args.model_dir, run_dir=args.run_dir, T=args.T,
                     sigma_mode=args.sigma_mode, workers=args.workers,
                     studio_dir=args.studio)
    uvicorn.run(app, host=args.host, port=args.port, log_level="warning")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="ilvrlab",
        description="Diffusion sampling lab: train denoisers, run reference-guided "
        "generation, evaluate sample sets.",
    )
    sub = parser.add_subparsers(dest="command", required=True)
    fmt = {"formatter_class": argparse.ArgumentDefaultsHelpFormatter}

    p = sub.add_parser("train", help="train a neural denoiser", **fmt)
    src = p.add_mutually_exclusive_group(required=True)
    src.add_argument("--mixture", help="mixture JSON to draw training data from")
    src.add_argument("--data-dir", help="directory of .pgm/.ppm training images")
    p.add_argument("--steps", type=int, default=5000, help="training steps")
    p.add_argument("--batch", type=int, default=64, help="batch size")
    p.add_argument("--lr", type=float, default=1e-3, help="Adam learning rate")
    p.add_argument("--seed", type=int, default=0, help="master seed")
    p.add_argument("--arch", choices=("auto", "mlp", "conv"), default="auto", help="denoiser architecture")
    p.add_argument("--hidden", type=int, default=32, help="mlp hidden width")
    p.add_argument("--channels", type=int, default=4, help="conv channel count")
    p.add_argument("--embed-dim", type=int, default=8, help="time embedding width")
    _schedule_args(p)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("ilvr", **fmt, help="reference-guided sampling")
    p.add_argument("--ref", required=True, help="reference image (.pgm/.ppm) or tensor (.ten)")
    p.add_argument("--factor", type=int, required=True, help="downsampling factor N")
    p.add_argument("--kernel", choices=KERNELS, default="box", help="low-pass kernel (box for verification runs, bicubic for demos)")
    p.add_argument("--stop-step", type=int, default=0,
                   help="refine only while t > stop-step (0 = full range)")
    p.add_argument("--count", type=int, default=1, help="samples to draw")
    p.add_argument("--seed", type=int, default=0, help="base seed; sample i uses seed+i")
    p.add_argument("--model", required=True,
                   help="neural checkpoint path or analytic:<mixture.json>")
    p.add_argument("--jobs", type=int, default=1, help="concurrent sample draws")
    _schedule_args(p)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_ilvr)

    p = sub.add_parser("eval", **fmt, help="diversity / distance reports over sample directories")
    p.add_argument("--samples", required=True,
                   help="directory of samples; subdirectories are per-reference groups")
    p.add_argument("--real", help="directory of real samples for the distance proxy")
    p.add_argument("--out", help="report directory (default: the sample directory)")
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("rerun", **fmt, help="replay a run manifest into a new directory")
    p.add_argument("manifest", help="manifest.json from a previous run")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_rerun)

    p = sub.add_parser("serve", **fmt, help="run the studio job service")
    p.add_argument("--port", type=int, default=8321, help="listen port")
    p.add_argument("--host", default="127.0.0.1", help="bind address")
    p.add_argument("--model-dir", required=True)
    p.add_argument("--run-dir", default=None, help="optional write-through directory")
    p.add_argument("--workers", type=int, default=0, help="worker threads (0 = auto)")
    p.add_argument("--T", type=int, default=200, help="diffusion steps")
    p.add_argument("--sigma-mode", choices=("beta", "posterior"), default="posterior", help="reverse-step noise scale")
    p.add_argument("--studio", default=None, help="built studio directory to serve at /")
    p.set_defaults(func=cmd_serve)

    return parser


def _validate_usage(parser, args) -> None:
    if args.command == "train" and (args.steps < 0 or args.batch < 1):
        parser.error("--steps must be >= 0 and --batch >= 1")
    if args.command == "ilvr":
        if args.factor < 1:
            parser.error("--factor must be >= 1")
        if args.count < 1:
            parser.error("--count must be >= 1")
        if args.stop_step < 0 or args.stop_step >= args.T:
            parser.error("--stop-step must lie in [0, T)")
        if args.jobs < 1:
            parser.error("--jobs must be >= 1")


def main(argv: list[str] | None = None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    parser = build_parser()
    args = parser.parse_args(argv)
    _validate_usage(parser, args)
    # argv echo for the manifest: original args minus the --out destination
    cmd_argv = []
    skip = False
    for a in argv[1:]:
        if skip:
            skip = False
            continue
        if a == "--out":
            skip = True
            continue
        if a.startswith("--out="):
            continue
        cmd_argv.append(a)
    try:
        return args.func(args, cmd_argv)
    except (NonFiniteStateError, neural.NonFiniteLossError) as exc:
        print(f"numeric failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except (DataError, tensorio.TensorIOError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_DATA


if __name__ == "__main__":
    sys.exit(main())
