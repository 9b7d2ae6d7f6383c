"""Command-line entry point: ``blockcrack <command> ...``."""

from __future__ import annotations

import argparse
import logging
import sys
from dataclasses import replace
from pathlib import Path

from . import jigsaw
from .cipher import CipherParams, KeyPair, decrypt, encrypt, scramble_blocks_only
from .dataio import read_cifar10, read_image, resize, write_image
from .experiment import ExperimentConfig, load_config, parse_key, run_experiment
from .unshuffle import recover_placement, restore_subblocks


def _add_ga(p: argparse.ArgumentParser) -> None:
    d = jigsaw.GAParams()
    p.add_argument("--population", type=int, default=d.population)
    p.add_argument("--generations", type=int, default=d.generations)
    p.add_argument("--elites", type=int, default=d.elites)
    p.add_argument("--mutation-rate", type=float, default=d.mutation_rate)
    p.add_argument("--seed", type=int, default=d.seed)
    p.add_argument("--color-space", choices=("lab", "rgb"), default="lab")


def _ga(args) -> jigsaw.GAParams:
    return jigsaw.GAParams(population=args.population, generations=args.generations,
                           elites=args.elites, mutation_rate=args.mutation_rate,
                           seed=args.seed)


def _params(args) -> CipherParams:
    return CipherParams(args.block_size, KeyPair(parse_key(args.key1), parse_key(args.key2)))


def cmd_encrypt(args) -> int:
    img = read_image(args.input)
    if args.blocks_only:
        out = scramble_blocks_only(img, args.block_size, parse_key(args.key1))
    else:
        out = encrypt(img, _params(args))
    write_image(args.output, out)
    return 0


def cmd_decrypt(args) -> int:
    write_image(args.output, decrypt(read_image(args.input), _params(args)))
    return 0


def cmd_attack(args) -> int:
    img = read_image(args.input)
    M = args.block_size
    if args.mode == "proposed":
        placement = recover_placement(img, M)
        if args.placement_dump:
            Path(args.placement_dump).write_text(placement.dump())
        img = restore_subblocks(img, placement, M)
    restored, res = jigsaw.solve_image(img, M, _ga(args), args.color_space)
    if args.assembly_dump:
        Path(args.assembly_dump).write_text(
            jigsaw.format_assembly(res.assembly, restored.shape[1] // M))
    write_image(args.output, restored)
    print(f"fitness={res.fitness!r}")
    return 0


def cmd_solve(args) -> int:
    args.mode = "conventional"
    args.placement_dump = None
    return cmd_attack(args)


_EVAL_FLAGS = ("dataset", "count", "block_size", "key1", "key2", "mode", "population",
               "generations", "elites", "mutation_rate", "seed", "out_dir", "report",
               "resize_mode", "size", "workers", "color_space")


def cmd_evaluate(args) -> int:
    config = ExperimentConfig()
    if args.config:
        config = load_config(args.config, config)
    # flags override the file
    given = {k: getattr(args, k) for k in _EVAL_FLAGS if getattr(args, k) is not None}
    config = replace(config, **given)
    if not config.dataset:
        print("error: --dataset is required", file=sys.stderr)
        return 2
    report = run_experiment(config)
    if not config.report:
        sys.stdout.write(report.to_text())
    else:
        for attack in report.attacks():
            print(f"{attack}: mean SSIM {report.mean_ssim(attack):.4f}")
    return 0


def cmd_dataset_import(args) -> int:
    images, labels = read_cifar10(args.dataset, limit=args.count)
    out = Path(args.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    for i, (img, label) in enumerate(zip(images, labels)):
        if args.size:
            img = resize(img, args.size, args.size, args.resize_mode)
        write_image(out / f"{i:05d}_label{label}.ppm", img)
    print(f"wrote {len(images)} images to {out}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="blockcrack", description=__doc__)
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    def keyed(p):
        p.add_argument("input")
        p.add_argument("output")
        p.add_argument("--block-size", type=int, default=16)
        p.add_argument("--key1", default="identity")
        p.add_argument("--key2", default="identity")

    p = sub.add_parser("encrypt", help="block scramble + sub-block pixel shuffle")
    keyed(p)
    p.add_argument("--blocks-only", action="store_true", help="skip the pixel shuffle")
    p.set_defaults(func=cmd_encrypt)

    p = sub.add_parser("decrypt", help="invert encrypt with the same keys")
    keyed(p)
    p.set_defaults(func=cmd_decrypt)

    for name, helptext, func in (
        ("attack", "keyless restoration of an encrypted image", cmd_attack),
        ("solve", "GA jigsaw solve of a block-scrambled image", cmd_solve),
    ):
        p = sub.add_parser(name, help=helptext)
        p.add_argument("input")
        p.add_argument("output")
        p.add_argument("--block-size", type=int, default=16)
        if name == "attack":
            p.add_argument("--mode", choices=("conventional", "proposed"), default="proposed")
            p.add_argument("--placement-dump", help="write the recovered sub-block placement")
        p.add_argument("--assembly-dump", help="write the solved assembly")
        _add_ga(p)
        p.set_defaults(func=func)

    p = sub.add_parser("evaluate", help="SSIM comparison of both attacks over a dataset")
    p.add_argument("--config", help="key=value file; flags override it")
    p.add_argument("--dataset")
    p.add_argument("--count", type=int)
    p.add_argument("--block-size", type=int)
    p.add_argument("--key1")
    p.add_argument("--key2")
    p.add_argument("--mode", choices=("conventional", "proposed", "both", "none"))
    p.add_argument("--population", type=int)
    p.add_argument("--generations", type=int)
    p.add_argument("--elites", type=int)
    p.add_argument("--mutation-rate", type=float)
    p.add_argument("--seed", type=int)
    p.add_argument("--out-dir")
    p.add_argument("--report")
    p.add_argument("--resize-mode", choices=("bilinear", "nearest"))
    p.add_argument("--size", type=int)
    p.add_argument("--workers", type=int)
    p.add_argument("--color-space", choices=("lab", "rgb"))
    p.set_defaults(func=cmd_evaluate)

    p = sub.add_parser("dataset", help="dataset utilities")
    dsub = p.add_subparsers(dest="dataset_command", required=True)
    q = dsub.add_parser("import", help="unpack a CIFAR-10 batch into PPM files")
    q.add_argument("--dataset", required=True)
    q.add_argument("--out-dir", required=True)
    q.add_argument("--count", type=int)
    q.add_argument("--size", type=int, default=0, help="resize to SIZExSIZE (0 keeps 32x32)")
    q.add_argument("--resize-mode", choices=("bilinear", "nearest"), default="bilinear")
    q.set_defaults(func=cmd_dataset_import)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
