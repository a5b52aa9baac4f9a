"""Command-line entry point: ``glossweak <subcommand> [options]``.

Exit status 0 on success, 1 for invalid input or configuration, 2 for runtime failures.
Every subcommand writes its fully resolved configuration to ``<out>/config/<subcommand>.json``.
"""
from __future__ import annotations

import argparse
import json
import logging
import sys
import time
from pathlib import Path

log = logging.getLogger("glossweak")

EXIT_OK, EXIT_INVALID, EXIT_RUNTIME = 0, 1, 2


class InvalidInput(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        print(f"{self.prog}: error: {message}", file=sys.stderr)
        raise SystemExit(EXIT_INVALID)


def _read_config(path):
    if path is None:
        return {}
    try:
        data = json.loads(Path(path).read_text(encoding="utf-8"))
    except FileNotFoundError as exc:
        raise InvalidInput(f"config file not found: {path}") from exc
    except json.JSONDecodeError as exc:
        raise InvalidInput(f"config file {path} is not valid JSON: {exc}") from exc
    if not isinstance(data, dict):
        raise InvalidInput(f"config file {path} must hold a JSON object")
    return data


def _write_json(path, obj):
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(json.dumps(obj, sort_keys=True, indent=2) + "\n", encoding="utf-8")


def _run_dir(args, command, resolved):
    out = Path(args.out)
    try:
        out.mkdir(parents=True, exist_ok=True)
        _write_json(out / "config" / f"{command}.json", resolved)
    except OSError as exc:
        raise InvalidInput(f"cannot write to output directory {out}: {exc}") from exc
    seed = "config" if args.seed is None else args.seed
    run_id = f"{time.strftime('%Y%m%dT%H%M%S')}-seed{seed}"
    _write_json(out / "run.json", {"run_id": run_id, "command": command, "argv": sys.argv[1:]})
    return out


def _load_manifest(path):
    from .training.manifest import DatasetManifest
    p = Path(path)
    if not p.exists():
        raise InvalidInput(f"manifest not found: {p}")
    return DatasetManifest.load(p)


def _load_state(path):
    from .model.checkpoint import load_checkpoint
    p = Path(path)
    if not p.exists():
        raise InvalidInput(f"checkpoint not found: {p}; run 'train' first")
    return load_checkpoint(p)


def cmd_generate(args):
    from .datasets import GenerationConfig, generate_dataset, save_annotations
    raw = _read_config(args.config)
    if args.seed is not None:
        raw["seed"] = args.seed
    cfg = GenerationConfig.from_dict(raw)
    out = _run_dir(args, "generate", cfg.to_dict())
    manifests, annotations = generate_dataset(
        cfg, out, progress=lambda split, i: log.debug("rendered %s %d", split, i))
    for name, manifest in manifests.items():
        manifest.save(out / f"{name}.jsonl")
        print(f"{name}: {len(manifest)} rows -> {out / (name + '.jsonl')}")
    if annotations is not None:
        save_annotations(out / "annotations.json", annotations)
    return EXIT_OK


def cmd_weak_label(args):
    from dataclasses import asdict
    from .experiment import weak_manifest
    from .weaklabels import WeakLabelConstants
    raw = _read_config(args.config)
    constants = WeakLabelConstants(**raw)
    data = Path(args.data)
    if not (data / "weak.jsonl").exists():
        raise InvalidInput(f"{data / 'weak.jsonl'} not found; run 'generate' first")
    out = _run_dir(args, "weak-label", {"kind": args.kind, "constants": asdict(constants), "data": str(data)})
    cached = data / f"weak_{args.kind}.jsonl"
    if args.force and cached.exists():
        cached.unlink()
    manifest = weak_manifest(data, args.kind, constants)
    if out.resolve() != data.resolve():
        _absolute(manifest).save(out / cached.name)
    print(f"{len(manifest)} weak rows labeled with '{args.kind}' -> {cached}")
    return EXIT_OK


def _absolute(manifest):
    """Rewrite relative refs against the manifest's own directory so it can be saved anywhere."""
    from dataclasses import replace
    rows = [replace(r, image_ref=str(manifest.resolve(r.image_ref).resolve()),
                    mask_ref=None if r.mask_ref is None else str(manifest.resolve(r.mask_ref).resolve()))
            for r in manifest.rows]
    return manifest.derive(rows)


def cmd_train(args):
    from .model.checkpoint import save_checkpoint
    from .model.network import NetworkConfig
    from .training.loop import TrainConfig, train
    from .training.manifest import DatasetManifest
    from .training.mixing import budgeted_mix, subsample_strong
    raw = _read_config(args.config)
    unknown = set(raw) - {"model", "train"}
    if unknown:
        raise InvalidInput(f"unknown train config sections: {sorted(unknown)}; use 'model' and 'train'")
    tdict = {**TrainConfig().to_dict(), **raw.get("train", {})}
    if args.seed is not None:
        tdict["seed"] = args.seed
    tcfg = TrainConfig.from_dict(tdict)
    mcfg = NetworkConfig.from_dict({**NetworkConfig().to_dict(), **raw.get("model", {})})
    strong = _absolute(_load_manifest(args.strong)) if args.strong else DatasetManifest([])
    weak = _absolute(_load_manifest(args.weak)) if args.weak else DatasetManifest([])
    if tcfg.fixed_budget is not None:
        manifest = budgeted_mix(strong, weak, tcfg.fixed_budget, tcfg.strong_fraction, tcfg.seed)
    else:
        strong = subsample_strong(strong, tcfg.strong_fraction, tcfg.seed)
        manifest = DatasetManifest(strong.rows + weak.weak_rows())
    if len(manifest) == 0:
        raise InvalidInput("no labeled training rows; pass --strong and/or a weak-labeled --weak manifest")
    out = _run_dir(args, "train", {"model": mcfg.to_dict(), "train": tcfg.to_dict(),
                                   "strong": args.strong, "weak": args.weak})
    manifest.save(out / "train_manifest.jsonl")
    state, history = train(mcfg, tcfg, manifest)
    save_checkpoint(out / "checkpoint.npz", state)
    _write_json(out / "history.json", history.to_dict())
    print(f"trained on {len(manifest)} rows; best epoch {history.best_epoch}; checkpoint -> {out / 'checkpoint.npz'}")
    return EXIT_OK


def _evaluate(args, command):
    from .experiment import evaluate_state
    state = _load_state(args.checkpoint)
    test = _load_manifest(args.manifest)
    if any(r.label is None for r in test.rows):
        raise InvalidInput("evaluation manifest has unlabeled rows")
    out = _run_dir(args, command, {"checkpoint": args.checkpoint, "manifest": args.manifest,
                                   "mask_background": args.mask_background})
    report = evaluate_state(state, test, args.mask_background)
    return out, report


def cmd_eval(args):
    out, report = _evaluate(args, "eval")
    (out / "report.json").write_text(report.to_json(), encoding="utf-8")
    (out / "report.txt").write_text(report.summary(), encoding="utf-8")
    print(report.summary(), end="")
    return EXIT_OK


def cmd_consistency(args):
    out, report = _evaluate(args, "consistency")
    if not report.per_type:
        raise InvalidInput("manifest has no variation groups; generate with test_mode enabled")
    (out / "report.json").write_text(report.to_json(), encoding="utf-8")
    payload = {"group_std": report.group_std, "per_type": report.per_type}
    (out / "consistency.json").write_text(json.dumps(payload, sort_keys=True, indent=2) + "\n", encoding="utf-8")
    lines = [f"{'variation group':<24}{'pred std':>10}"]
    lines += [f"{g:<24}{s:>10.4f}" for g, s in report.group_std.items()]
    text = report.summary() + "\n" + "\n".join(lines) + "\n"
    (out / "consistency.txt").write_text(text, encoding="utf-8")
    print(text, end="")
    return EXIT_OK


def cmd_latent(args):
    import numpy as np
    from .evaluation import export_latent
    state = _load_state(args.checkpoint)
    manifest = _load_manifest(args.manifest)
    if len(manifest) < 2:
        raise InvalidInput("latent export needs at least two images")
    out = _run_dir(args, "latent", {"checkpoint": args.checkpoint, "manifest": args.manifest})
    result = export_latent(state.build(), manifest)
    (out / "latent.csv").write_text(result.to_csv(), encoding="utf-8")
    _write_json(out / "pca.json", result.pca_summary())
    print(f"latent table -> {out / 'latent.csv'}; explained variance "
          f"{np.round(result.pca.explained_variance_ratio, 4).tolist()}")
    return EXIT_OK


def cmd_experiment(args):
    from .experiment import ARMS, ExperimentConfig, run_experiment
    if args.arm not in ARMS:
        raise InvalidInput(f"unknown arm {args.arm!r}; valid arms: {', '.join(ARMS)}")
    raw = _read_config(args.config)
    if args.seed is not None:
        raw["seeds"] = [args.seed]
    cfg = ExperimentConfig.from_dict(raw)
    out = _run_dir(args, "experiment", {"arm": args.arm, "data": args.data, **cfg.to_dict()})
    run_experiment(args.arm, cfg, args.data, out)
    cmp_path = out / "comparison.txt"
    if cmp_path.exists():
        print(cmp_path.read_text(encoding="utf-8"), end="")
    curve = out / "budget_curve.csv"
    if args.arm == "budget-sweep" and curve.exists():
        print(curve.read_text(encoding="utf-8"), end="")
    return EXIT_OK


def _add_global_flags(parser, suppress=False):
    def default(value):
        return argparse.SUPPRESS if suppress else value
    parser.add_argument("--seed", type=int, default=default(None), help="override the seed(s) in the config")
    parser.add_argument("--out", default=default("run"), help="run directory (created if missing)")
    parser.add_argument("--config", default=default(None), help="JSON config file for the subcommand")
    parser.add_argument("--threads", type=int, default=default(None), help="cap BLAS threads")
    parser.add_argument("-v", "--verbose", action="store_true", default=default(False))


def build_parser():
    parser = _Parser(prog="glossweak", description="Weakly supervised gloss prediction toolkit.")
    _add_global_flags(parser)
    # the same flags are accepted after the subcommand; suppressed defaults keep earlier values
    common = argparse.ArgumentParser(add_help=False)
    _add_global_flags(common, suppress=True)
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)
    _add = sub.add_parser

    def add_parser(name, **kw):
        return _add(name, parents=[common], **kw)
    sub.add_parser = add_parser

    p = sub.add_parser("generate", help="render strong, weak and controlled test corpora")
    p.set_defaults(func=cmd_generate)

    p = sub.add_parser("weak-label", help="attach weak labels to the weak pool of a data directory")
    p.add_argument("--data", required=True)
    p.add_argument("--kind", required=True, choices=("bsdf", "imagestats", "industry"))
    p.add_argument("--force", action="store_true", help="recompute even if cached")
    p.set_defaults(func=cmd_weak_label)

    p = sub.add_parser("train", help="train a model on strong and/or weak-labeled manifests")
    p.add_argument("--strong")
    p.add_argument("--weak")
    p.set_defaults(func=cmd_train)

    for name, func, help_text in (("eval", cmd_eval, "metric trio on a labeled manifest"),
                                  ("consistency", cmd_consistency, "per-variation-group prediction spread")):
        p = sub.add_parser(name, help=help_text)
        p.add_argument("--checkpoint", required=True)
        p.add_argument("--manifest", required=True)
        p.add_argument("--mask-background", action="store_true")
        p.set_defaults(func=func)

    p = sub.add_parser("latent", help="export latent vectors and their 2-D PCA projection")
    p.add_argument("--checkpoint", required=True)
    p.add_argument("--manifest", required=True)
    p.set_defaults(func=cmd_latent)

    p = sub.add_parser("experiment", help="run an experimental arm end to end")
    p.add_argument("--arm", required=True)
    p.add_argument("--data", required=True, help="directory written by 'generate'")
    p.set_defaults(func=cmd_experiment)
    return parser


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING, stream=sys.stderr,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        if args.threads is not None:
            if args.threads < 1:
                raise InvalidInput("--threads must be >= 1")
            from threadpoolctl import threadpool_limits
            with threadpool_limits(limits=args.threads):
                return args.func(args)
        return args.func(args)
    except (InvalidInput, ValueError, TypeError, KeyError, FileNotFoundError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INVALID
    except Exception as exc:  # noqa: BLE001 - last-resort boundary for the exit-code contract
        print(f"runtime failure: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_RUNTIME


if __name__ == "__main__":
    sys.exit(main())
