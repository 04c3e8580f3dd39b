"""Command-line interface.

Exit codes: 0 success, 2 usage or input error, 1 internal failure or a
failed check. Diagnostics go to stderr; data to files or stdout.
"""

from __future__ import annotations

import argparse
import logging
import sys
from pathlib import Path

import numpy as np

from . import data as data_mod
from .fht import Quadrant, fht_array, fht_quadrant, naive_fht_quadrant, side_from_hough_shape, tfht_array
from .image import FormatError, read_pgm, read_tensor, write_tensor
from .metrics import labels_from_probs, miou
from .nn.gradcheck import run_gradchecks
from .nn.network import NetworkSpec, build_network, load_checkpoint, save_checkpoint
from .nn.opcount import PUBLISHED_N_GRID, PUBLISHED_SCALEX_GRID, PUBLISHED_W1, ops_table
from .nn.training import train, write_log
from .radon import hrt_array, radon_width, rht_array

log = logging.getLogger("houghradon")

ADJOINT_TOL = 1e-9


class InputError(Exception):
    """Bad user input; maps to exit code 2."""


def _float_list(text: str) -> list[float]:
    return [float(v) for v in text.split(",") if v.strip()]


def _int_list(text: str) -> list[int]:
    return [int(v) for v in text.split(",") if v.strip()]


def _fmt_size(width: int, height: int) -> str:
    return f"[{width}; {height}]"


def _adjoint_gap(forward, adjoint, in_shape, out_shape, seed: int) -> float:
    rng = np.random.default_rng(seed)
    worst = 0.0
    for _ in range(10):
        x = rng.normal(size=in_shape)
        y = rng.normal(size=out_shape)
        lhs = float(np.vdot(forward(x), y))
        rhs = float(np.vdot(x, adjoint(y)))
        worst = max(worst, abs(lhs - rhs) / (abs(lhs) + 1e-30))
    return worst


# ------------------------------------------------------------------ commands


def cmd_fht(args) -> int:
    img = read_pgm(args.input)
    h, w = img.shape
    if h != w or h & (h - 1):
        raise InputError(f"{args.input}: FHT needs a square power-of-two image, got {w}x{h}")
    if args.compare:
        # byte values keep both paths integer-exact
        ints = np.rint(img * 255).astype(np.int64)
        mismatched = [q.name for q in Quadrant if not np.array_equal(fht_quadrant(ints, q), naive_fht_quadrant(ints, q))]
        if mismatched:
            print(f"fast and naive FHT differ in quadrants {', '.join(mismatched)}", file=sys.stderr)
            return 1
        print("fast and naive FHT agree on all quadrants", file=sys.stderr)
    if args.naive:
        from .fht import _to_band  # stitched layout of the oracle output

        bands = [_to_band(naive_fht_quadrant(img, q), q) for q in Quadrant]
        grid = np.concatenate([b[: h - 1] for b in bands[:3]] + [bands[3]], axis=0)
    else:
        grid = fht_array(img)
    if args.output:
        write_tensor(grid[None], args.output)
    print(_fmt_size(grid.shape[1], grid.shape[0]))
    return 0


def _read_stack(path) -> np.ndarray:
    return read_tensor(path).astype(np.float64)


def cmd_hrt(args) -> int:
    hough = _read_stack(args.input)
    try:
        w1 = side_from_hough_shape(*hough.shape[-2:])
    except ValueError as exc:
        raise InputError(f"{args.input}: {exc}") from None
    if args.n < 1 or args.scale_x <= 0:
        raise InputError("--n must be >= 1 and --scale-x > 0")
    out = hrt_array(hough, args.n, args.scale_x)
    if args.output:
        write_tensor(out, args.output)
    print(_fmt_size(out.shape[-1], out.shape[-2]))
    if args.adjoint_check:
        gap = _adjoint_gap(
            lambda x: hrt_array(x, args.n, args.scale_x),
            lambda y: rht_array(y, w1, args.scale_x),
            hough.shape[-2:],
            out.shape[-2:],
            args.seed,
        )
        print(f"adjoint relative gap {gap:.3e}", file=sys.stderr)
        return 0 if gap < ADJOINT_TOL else 1
    return 0


def cmd_rht(args) -> int:
    radon = _read_stack(args.input)
    if args.w1 < 2 or args.w1 & (args.w1 - 1) or args.scale_x <= 0:
        raise InputError("--w1 must be a power of two >= 2 and --scale-x > 0")
    n, width = radon.shape[-2:]
    expected = radon_width(args.w1, args.scale_x)
    if width != expected:
        raise InputError(f"{args.input}: width {width} does not match radon_width({args.w1}, {args.scale_x}) = {expected}")
    out = rht_array(radon, args.w1, args.scale_x)
    if args.output:
        write_tensor(out, args.output)
    print(_fmt_size(out.shape[-1], out.shape[-2]))
    if args.adjoint_check:
        gap = _adjoint_gap(
            lambda x: hrt_array(x, n, args.scale_x),
            lambda y: rht_array(y, args.w1, args.scale_x),
            out.shape[-2:],
            (n, width),
            args.seed,
        )
        print(f"adjoint relative gap {gap:.3e}", file=sys.stderr)
        return 0 if gap < ADJOINT_TOL else 1
    return 0


def cmd_tfht(args) -> int:
    hough = _read_stack(args.input)
    try:
        side_from_hough_shape(*hough.shape[-2:])
    except ValueError as exc:
        raise InputError(f"{args.input}: {exc}") from None
    out = tfht_array(hough)
    if args.output:
        write_tensor(out, args.output)
    print(_fmt_size(out.shape[-1], out.shape[-2]))
    return 0


def cmd_opcount(args) -> int:
    try:
        n_list = _int_list(args.n_list)
        sx_list = _float_list(args.scalex_list)
    except ValueError as exc:
        raise InputError(f"bad list: {exc}") from None
    if not n_list or not sx_list or min(n_list) < 1 or min(sx_list) <= 0:
        raise InputError("need at least one n >= 1 and one scaleX > 0")
    print(ops_table(args.w1, n_list, sx_list))
    return 0


def _load_dataset(args, *, size: int):
    if getattr(args, "midv", None):
        root = Path(args.midv)
        if not root.is_dir():
            raise InputError(f"dataset root {root} does not exist")
        return data_mod.ingest_midv(root, size=size)
    if getattr(args, "data", None):
        d = Path(args.data)
        if not (d / "index.csv").is_file():
            raise InputError(f"{d} is not an exported dataset (no index.csv)")
        return data_mod.load_exported(d)
    if getattr(args, "synth", None) is not None:
        return data_mod.synth_splits(args.synth, args.test, size=size, seed=args.seed)
    raise InputError("one of --synth, --midv or --data is required")


def cmd_train(args) -> int:
    samples = _load_dataset(args, size=args.size)
    if not samples:
        raise InputError("dataset is empty")
    spec = NetworkSpec(
        input_size=args.size,
        n=args.n,
        scale_x=args.scale_x,
        width_divisor=args.width_divisor,
    )
    net = build_network(spec, seed=args.seed, dtype=np.float32)
    history = train(net, samples, args.epochs, lr=args.lr, seed=args.seed, batch_size=args.batch_size)
    out = Path(args.out)
    save_checkpoint(net, out)
    write_log(history, out / "log.csv")
    for row in history:
        print(f"epoch {row['epoch']} loss {row['loss']:.5f} miou {row['miou']:.4f}", file=sys.stderr)
    return 0


def cmd_eval(args) -> int:
    if args.predictions is None and args.checkpoint is None:
        raise InputError("eval needs a checkpoint or --predictions")
    if args.predictions is not None and not args.data:
        raise InputError("--predictions pairs masks by name and needs --data")
    net = None
    if args.checkpoint is not None:
        try:
            net = load_checkpoint(args.checkpoint)
        except FileNotFoundError as exc:
            raise InputError(str(exc)) from None
    size = net.spec.input_size if net is not None else args.size
    samples = _load_dataset(args, size=size)
    if args.split != "all":
        samples = [s for s in samples if s.split == args.split]
    if not samples:
        raise InputError("dataset is empty")
    if args.predictions is not None:
        pred_dir = Path(args.predictions)
        import csv

        with open(Path(args.data) / "index.csv", newline="") as fh:
            names = [row["mask"] for row in csv.DictReader(fh) if args.split in ("all", row["split"])]
        scores = []
        for name, sample in zip(names, samples):
            pred = (read_pgm(pred_dir / name) >= 0.5).astype(int)
            scores.append(miou(pred, sample.mask))
    else:
        scores = []
        for start in range(0, len(samples), 16):
            batch = samples[start : start + 16]
            labels = labels_from_probs(net.predict(np.stack([s.image for s in batch])))
            scores.extend(miou(p, s.mask) for p, s in zip(labels, batch))
    print(f"{100 * float(np.mean(scores)):.1f}")
    return 0


def cmd_gradcheck(args) -> int:
    if args.size < 8 or args.size & (args.size - 1):
        raise InputError("--size must be a power of two >= 8")
    results = run_gradchecks(args.size, args.seed, corrupt_adjoint=args.corrupt_adjoint)
    for r in results:
        print(f"{r.block:12s} rel_err={r.rel_error:.3e} tol={r.tol:.0e} {'PASS' if r.passed else 'FAIL'}")
    return 0 if all(r.passed for r in results) else 1


# -------------------------------------------------------------------- parser


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="houghradon", description="Fast Hough / HoughToRadon transforms and the segmentation network.")
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True)

    s = sub.add_parser("fht", help="stitched FHT of a PGM image into an HRT1 tensor")
    s.add_argument("input")
    s.add_argument("output", nargs="?")
    s.add_argument("--naive", action="store_true", help="use the direct O(h^3) evaluation")
    s.add_argument("--compare", action="store_true", help="check fast == naive on every quadrant")
    s.set_defaults(func=cmd_fht)

    s = sub.add_parser("hrt", help="HoughToRadon transform of an HRT1 Hough tensor")
    s.add_argument("input")
    s.add_argument("output", nargs="?")
    s.add_argument("--n", type=int, required=True)
    s.add_argument("--scale-x", type=float, required=True)
    s.add_argument("--adjoint-check", action="store_true")
    s.add_argument("--seed", type=int, default=0)
    s.set_defaults(func=cmd_hrt)

    s = sub.add_parser("rht", help="RadonToHough (adjoint) transform of an HRT1 Radon tensor")
    s.add_argument("input")
    s.add_argument("output", nargs="?")
    s.add_argument("--w1", type=int, required=True)
    s.add_argument("--scale-x", type=float, required=True)
    s.add_argument("--adjoint-check", action="store_true")
    s.add_argument("--seed", type=int, default=0)
    s.set_defaults(func=cmd_rht)

    s = sub.add_parser("tfht", help="transposed FHT of an HRT1 Hough tensor")
    s.add_argument("input")
    s.add_argument("output", nargs="?")
    s.set_defaults(func=cmd_tfht)

    s = sub.add_parser("opcount", help="inner-convolution sizes and op counts (units of 1e7)")
    s.add_argument("--w1", type=int, default=PUBLISHED_W1)
    s.add_argument("--n-list", default=",".join(map(str, PUBLISHED_N_GRID)))
    s.add_argument("--scalex-list", default=",".join(map(str, PUBLISHED_SCALEX_GRID)))
    s.set_defaults(func=cmd_opcount)

    def dataset_flags(s):
        g = s.add_mutually_exclusive_group()
        g.add_argument("--synth", type=int, metavar="N", help="N synthetic training samples")
        g.add_argument("--midv", metavar="ROOT", help="MIDV-500 directory")
        g.add_argument("--data", metavar="DIR", help="exported dataset directory (index.csv)")
        s.add_argument("--test", type=int, default=50, help="synthetic held-out samples")
        s.add_argument("--seed", type=int, default=0)

    s = sub.add_parser("train", help="train the network, write checkpoint and log.csv")
    dataset_flags(s)
    s.add_argument("--n", type=int, default=61)
    s.add_argument("--scale-x", type=float, default=1.0)
    s.add_argument("--size", type=int, default=64)
    s.add_argument("--width-divisor", type=int, default=1)
    s.add_argument("--epochs", type=int, default=30)
    s.add_argument("--lr", type=float, default=1e-3)
    s.add_argument("--batch-size", type=int, default=8)
    s.add_argument("--out", required=True)
    s.set_defaults(func=cmd_train)

    s = sub.add_parser("eval", help="print MIoU (percent) of a checkpoint or of prediction masks")
    s.add_argument("checkpoint", nargs="?")
    dataset_flags(s)
    s.add_argument("--predictions", metavar="DIR", help="mask PGMs named as in the dataset index")
    s.add_argument("--split", choices=("all", "train", "test"), default="all")
    s.add_argument("--size", type=int, default=64)
    s.set_defaults(func=cmd_eval)

    s = sub.add_parser("gradcheck", help="finite-difference checks of every backward block")
    s.add_argument("--size", type=int, default=16)
    s.add_argument("--seed", type=int, default=0)
    s.add_argument("--corrupt-adjoint", action="store_true", help=argparse.SUPPRESS)
    s.set_defaults(func=cmd_gradcheck)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    try:
        return args.func(args)
    except (InputError, FormatError, FileNotFoundError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except Exception as exc:  # noqa: BLE001
        print(f"internal error: {exc!r}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
