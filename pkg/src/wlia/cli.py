"""Command-line front end.

Subcommands: ``whog``/``hog`` (per-patch orientation histograms, pooled
histogram and a rose plot), ``bench-noise`` (argmax-stability and entropy
of both methods under additive Gaussian noise), ``smooth``/``edges``
(two-level fitting applied image-wide), and ``entropy`` (per-sample
directionality entropy over masked regions with an optional median-split
log-rank comparison).

All outputs are deterministic: identical inputs, flags and seed yield
byte-identical files.  Exit codes: 0 success, 1 usage error, 2 input or
format error, 3 partial failure (entropy manifest).
"""

from __future__ import annotations

import argparse
import csv
import json
import sys
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from . import analysis, hog_baseline, synthetic, two_color, whog
from .errors import EmptyRoiError, ImageFormatError, UndefinedEntropyError
from .images import GrayImage, load_image, save_image
from .svgplot import bar_grid_svg, rose_grid_svg, rose_svg

SCHEMA_VERSION = 1

_DEFAULT_SIGMAS = (0.0, 0.01, 0.05, 0.1, 0.15)


@dataclass
class RunConfig:
    """Shared knob set for the analysis commands."""

    patch_side: int = 8
    stride: int = None
    bins: int = 9
    sigmas: tuple = _DEFAULT_SIGMAS
    seed: int = 0
    sample_count: int = None
    trials: int = 100
    two_color_side: int = 3
    two_color_stride: int = 2
    rescale: bool = True

    def __post_init__(self):
        if self.stride is None:
            self.stride = self.patch_side
        for name in ("patch_side", "stride", "bins", "trials", "two_color_side", "two_color_stride"):
            if int(getattr(self, name)) < 1:
                raise ValueError(f"{name} must be positive")
        sigmas = tuple(float(s) for s in self.sigmas)
        if any(s < 0.0 for s in sigmas):
            raise ValueError("noise sigmas must be non-negative")
        if any(b < a for a, b in zip(sigmas, sigmas[1:])):
            raise ValueError("noise sigmas must be ascending")
        self.sigmas = sigmas


def _format_float(x):
    return f"{float(x):.9g}"


def _write_csv(path, header, rows):
    with open(path, "w", newline="", encoding="ascii") as fh:
        writer = csv.writer(fh)
        writer.writerow(list(header) + ["schema_version"])
        for row in rows:
            out = [c if isinstance(c, str) else _format_float(c) for c in row]
            writer.writerow(out + [str(SCHEMA_VERSION)])


def _write_json(path, payload):
    payload = {"schema_version": SCHEMA_VERSION, **payload}
    Path(path).write_text(json.dumps(payload, indent=2) + "\n", encoding="ascii")


def _write_text(path, text):
    Path(path).write_text(text, encoding="ascii")


def _out_dir(args):
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    return out


def _histogram_rows(results):
    for (r, c), hist in results:
        yield [str(r), str(c)] + [float(b) for b in hist.bins]


def _bin_header(n_b):
    return ["row", "col"] + [f"bin_{k}" for k in range(n_b)]


def _maybe_rose_grid(args, out, name, results):
    if not getattr(args, "rose_grid", False):
        return
    columns = len({origin[1] for origin, _ in results})
    cells = [(f"{r},{c}", hist.bins) for (r, c), hist in results]
    _write_text(out / name, rose_grid_svg(cells, columns))


def cmd_whog(args):
    config = _config_from(args)
    image = load_image(args.input)
    results = whog.whog_image(image, config.patch_side, config.stride, config.bins)
    pooled = whog.pooled_histogram([h for _, h in results], config.bins)
    out = _out_dir(args)
    _write_csv(out / "whog_patches.csv", _bin_header(config.bins), _histogram_rows(results))
    _write_json(
        out / "whog_pooled.json",
        {
            "method": "whog",
            "patch_side": config.patch_side,
            "stride": config.stride,
            "patch_count": len(results),
            "bins": [float(b) for b in pooled.bins],
            "bin_width_radians": pooled.bin_width,
            "total_work": pooled.total,
        },
    )
    _write_text(out / "whog_rose.svg", rose_svg(pooled.bins, title="whog"))
    _maybe_rose_grid(args, out, "whog_rose_grid.svg", results)
    return 0


def cmd_hog(args):
    config = _config_from(args)
    image = load_image(args.input)
    results = hog_baseline.hog_image(image, config.patch_side, config.stride, config.bins)
    pooled = whog.pooled_histogram([h for _, h in results], config.bins)
    out = _out_dir(args)
    _write_csv(out / "hog_patches.csv", _bin_header(config.bins), _histogram_rows(results))
    grid = hog_baseline.histogram_grid(results, config.bins)
    block_rows = []
    if grid.shape[0] >= 2 and grid.shape[1] >= 2:
        blocks = hog_baseline.block_normalize(grid)
        for br in range(blocks.shape[0]):
            for bc in range(blocks.shape[1]):
                block_rows.append([str(br), str(bc)] + [float(v) for v in blocks[br, bc]])
    _write_csv(
        out / "hog_blocks.csv",
        ["block_row", "block_col"] + [f"v_{k}" for k in range(4 * config.bins)],
        block_rows,
    )
    _write_json(
        out / "hog_pooled.json",
        {
            "method": "hog",
            "patch_side": config.patch_side,
            "stride": config.stride,
            "patch_count": len(results),
            "bins": [float(b) for b in pooled.bins],
            "bin_width_radians": pooled.bin_width,
            "total_magnitude": pooled.total,
        },
    )
    _write_text(out / "hog_rose.svg", rose_svg(pooled.bins, title="hog"))
    _maybe_rose_grid(args, out, "hog_rose_grid.svg", results)
    return 0


def _rescale_unit(img):
    lo = float(img.min())
    hi = float(img.max())
    if hi > lo:
        return (img - lo) / (hi - lo)
    return np.zeros_like(img)


def _entropy_bits(bins):
    total = float(np.sum(bins))
    if total <= 0.0:
        return 0.0
    p = np.asarray(bins, dtype=np.float64) / total
    p = p[p > 0.0]
    return float(-(p * np.log2(p)).sum())


def _pooled_bins(results, n_b):
    return whog.pooled_histogram([h for _, h in results], n_b).bins


def run_noise_benchmark(base, config):
    """Argmax stability and entropy of both methods under Gaussian noise.

    For each sigma, ``config.trials`` noisy copies (clamped at zero) are
    analysed; the per-method argmax bin is compared against the noiseless
    reference.  Returns per-(sigma, method) records with the mean pooled
    histogram over trials.
    """
    n_b = config.bins
    ref_whog = _pooled_bins(whog.whog_image(base, config.patch_side, config.stride, n_b), n_b)
    ref_hog = _pooled_bins(hog_baseline.hog_image(base, config.patch_side, config.stride, n_b), n_b)
    ref_argmax = {"whog": int(np.argmax(ref_whog)), "hog": int(np.argmax(ref_hog))}

    rng = np.random.default_rng(config.seed)
    records = []
    for sigma in config.sigmas:
        hits = {"whog": 0, "hog": 0}
        entropy_sum = {"whog": 0.0, "hog": 0.0}
        mean_bins = {"whog": np.zeros(n_b), "hog": np.zeros(n_b)}
        for _ in range(config.trials):
            noisy = np.clip(base + rng.normal(0.0, sigma, base.shape), 0.0, None)
            bins_w = _pooled_bins(whog.whog_image(noisy, config.patch_side, config.stride, n_b), n_b)
            bins_h = _pooled_bins(hog_baseline.hog_image(noisy, config.patch_side, config.stride, n_b), n_b)
            for method, bins in (("whog", bins_w), ("hog", bins_h)):
                hits[method] += int(int(np.argmax(bins)) == ref_argmax[method])
                entropy_sum[method] += _entropy_bits(bins)
                mean_bins[method] += bins
        for method in ("whog", "hog"):
            records.append(
                {
                    "sigma": sigma,
                    "method": method,
                    "stability": hits[method] / config.trials,
                    "mean_entropy": entropy_sum[method] / config.trials,
                    "mean_bins": mean_bins[method] / config.trials,
                }
            )
    return records


def cmd_bench_noise(args):
    config = _config_from(args)
    if args.input is None:
        base = synthetic.step_edge_array(config.patch_side, config.patch_side)
    else:
        base = load_image(args.input).as_2d()
    if config.rescale:
        base = _rescale_unit(base)
    records = run_noise_benchmark(base, config)
    out = _out_dir(args)
    _write_csv(
        out / "bench_noise.csv",
        ["sigma", "method", "stability", "mean_entropy"],
        (
            [rec["sigma"], rec["method"], rec["stability"], rec["mean_entropy"]]
            for rec in records
        ),
    )
    by_sigma = {}
    for rec in records:
        by_sigma.setdefault(rec["sigma"], []).append((rec["method"], rec["mean_bins"]))
    _write_text(
        out / "bench_noise.svg",
        bar_grid_svg((f"sigma={_format_float(s)}", cells) for s, cells in sorted(by_sigma.items())),
    )
    return 0


def cmd_smooth(args):
    config = _config_from(args)
    image = load_image(args.input)
    smoothed = two_color.smooth_image(image, config.two_color_side, config.two_color_stride)
    out = _out_dir(args)
    result = GrayImage.from_array(
        np.clip(smoothed, 0.0, image.max_value),
        source_depth=image.source_depth,
        max_value=image.max_value,
    )
    save_image(result, out / f"smoothed{Path(args.input).suffix.lower()}")
    return 0


def cmd_edges(args):
    config = _config_from(args)
    image = load_image(args.input)
    strength = two_color.edge_map(image, config.two_color_side, config.two_color_stride)
    out = _out_dir(args)
    peak = float(strength.max())
    scale = 65535.0 / peak if peak > 0.0 else 0.0
    edge16 = GrayImage.from_array(strength * scale, source_depth=16, max_value=65535)
    save_image(edge16, out / "edge_map.pgm")
    if args.threshold is not None:
        if args.threshold == "otsu":
            threshold = two_color.otsu_threshold(strength)
        else:
            threshold = float(args.threshold)
        binary = GrayImage.from_array(
            np.where(strength > threshold, 255.0, 0.0), source_depth=8, max_value=255
        )
        save_image(binary, out / "edge_binary.pgm")
        _write_json(out / "edge_threshold.json", {"threshold": threshold, "peak_strength": peak})
    return 0


def _read_csv_rows(path, required):
    with open(path, newline="", encoding="utf-8-sig") as fh:
        reader = csv.DictReader(fh)
        if reader.fieldnames is None:
            raise ValueError(f"{path}: missing CSV header row")
        missing = [c for c in required if c not in reader.fieldnames]
        if missing:
            raise ValueError(f"{path}: missing required columns {missing}")
        return list(reader)


def run_entropy_pipeline(manifest_rows, config, survival_rows=None, base_dir=None):
    """Score every manifest sample and optionally run the log-rank test.

    Returns (sample results, errors, logrank payload or None).  Row-level
    failures are collected instead of aborting the run.
    """
    if config.sample_count is None:
        raise ValueError("entropy pipeline needs a patch sample count")
    base = Path(base_dir) if base_dir is not None else None

    def resolve(p):
        path = Path(p)
        return path if path.is_absolute() or base is None else base / path

    samples = []
    errors = []
    for row in manifest_rows:
        sample_id = row["sample_id"].strip()
        try:
            image = load_image(resolve(row["image"]))
            mask = load_image(resolve(row["mask"]))
            # every row draws from the same seeded stream, so identical
            # samples receive identical patches (and identical entropies)
            patches = analysis.sample_patches(
                image,
                mask.as_2d(),
                config.sample_count,
                config.patch_side,
                config.seed,
            )
            hists = [whog.whog_patch(p, config.bins) for p in patches]
            samples.append(analysis.RoiSample.from_histograms(sample_id, hists))
        except (OSError, ValueError) as exc:
            errors.append({"sample_id": sample_id, "error": str(exc)})

    logrank = None
    groups = {}
    if survival_rows is not None and len(samples) >= 2:
        high, low = analysis.median_split(samples)
        groups = {s.sample_id: "high" for s in high}
        groups.update({s.sample_id: "low" for s in low})
        survival_by_id = {}
        for row in survival_rows:
            survival_by_id[row["sample_id"].strip()] = row
        records = []
        for sample in samples:
            row = survival_by_id.pop(sample.sample_id, None)
            if row is None:
                errors.append(
                    {"sample_id": sample.sample_id, "error": "no survival row for sample"}
                )
                continue
            try:
                records.append(
                    analysis.SurvivalRecord(
                        sample_id=sample.sample_id,
                        time=float(row["time"]),
                        event=row["event"].strip() in ("1", "true", "True"),
                        group=groups[sample.sample_id],
                    )
                )
            except ValueError as exc:
                errors.append({"sample_id": sample.sample_id, "error": str(exc)})
        for orphan in survival_by_id:
            errors.append({"sample_id": orphan, "error": "survival row has no manifest sample"})
        try:
            chi_square, p_value = analysis.logrank_test(records)
            logrank = {
                "chi_square": chi_square,
                "p_value": p_value,
                "group_sizes": {
                    "high": sum(1 for r in records if r.group == "high"),
                    "low": sum(1 for r in records if r.group == "low"),
                },
            }
        except ValueError as exc:
            errors.append({"sample_id": "", "error": f"log-rank test failed: {exc}"})
    return samples, errors, logrank, groups


def cmd_entropy(args):
    config = _config_from(args)
    if config.sample_count is None:
        print("entropy: --count is required", file=sys.stderr)
        return 1
    try:
        manifest_rows = _read_csv_rows(args.input, ("sample_id", "image", "mask"))
        survival_rows = (
            _read_csv_rows(args.survival, ("sample_id", "time", "event"))
            if args.survival
            else None
        )
    except (OSError, ValueError) as exc:
        print(f"entropy: {exc}", file=sys.stderr)
        return 2

    samples, errors, logrank, groups = run_entropy_pipeline(
        manifest_rows, config, survival_rows, base_dir=Path(args.input).parent
    )
    out = _out_dir(args)
    header = ["sample_id", "patch_count", "entropy"]
    if groups:
        header.append("group")
    rows = []
    for sample in samples:
        row = [sample.sample_id, str(len(sample.histograms)), sample.entropy]
        if groups:
            row.append(groups.get(sample.sample_id, ""))
        rows.append(row)
    _write_csv(out / "entropy.csv", header, rows)
    payload = {
        "sample_count": len(samples),
        "errors": errors,
    }
    if logrank is not None:
        payload.update(logrank)
    _write_json(out / "entropy_report.json", payload)
    for err in errors:
        print(f"entropy: sample {err['sample_id']!r}: {err['error']}", file=sys.stderr)
    if not samples:
        return 2
    return 3 if errors else 0


class _Parser(argparse.ArgumentParser):
    # argparse exits with status 2 on usage problems; the interface
    # reserves 2 for input-format errors and uses 1 for usage.
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(1, f"{self.prog}: error: {message}\n")


def _add_common(sub, patch_default=8):
    sub.add_argument("--patch", type=int, default=patch_default, help="patch side length")
    sub.add_argument("--stride", type=int, default=None, help="patch stride (default: patch side)")
    sub.add_argument("--bins", type=int, default=9, help="orientation bin count")
    sub.add_argument("--seed", type=int, default=0, help="seed for randomized steps")
    sub.add_argument("--out", default=".", help="output directory")


def _config_from(args):
    return RunConfig(
        patch_side=getattr(args, "patch", 8),
        stride=getattr(args, "stride", None),
        bins=getattr(args, "bins", 9),
        sigmas=getattr(args, "sigmas", _DEFAULT_SIGMAS),
        seed=getattr(args, "seed", 0),
        sample_count=getattr(args, "count", None),
        trials=getattr(args, "trials", 100),
        two_color_side=getattr(args, "patch", 3),
        two_color_stride=getattr(args, "stride", None) or 2,
        rescale=not getattr(args, "no_rescale", False),
    )


def build_parser():
    parser = _Parser(prog="wlia", description="Transport-based local image analysis")
    commands = parser.add_subparsers(dest="command", required=True)

    p = commands.add_parser("whog", help="transport orientation histograms")
    p.add_argument("input", help="PGM or grayscale PNG image")
    _add_common(p)
    p.add_argument(
        "--rose-grid", action="store_true", help="also emit a grid of per-patch rose plots"
    )
    p.set_defaults(func=cmd_whog)

    p = commands.add_parser("hog", help="gradient orientation histograms (baseline)")
    p.add_argument("input", help="PGM or grayscale PNG image")
    _add_common(p)
    p.add_argument(
        "--rose-grid", action="store_true", help="also emit a grid of per-patch rose plots"
    )
    p.set_defaults(func=cmd_hog)

    p = commands.add_parser("bench-noise", help="noise robustness benchmark")
    p.add_argument("input", nargs="?", default=None, help="image (default: built-in step edge)")
    _add_common(p)
    p.add_argument(
        "--sigmas",
        type=lambda s: tuple(float(x) for x in s.split(",")),
        default=_DEFAULT_SIGMAS,
        help="comma-separated ascending noise levels",
    )
    p.add_argument("--trials", type=int, default=100, help="noisy trials per sigma")
    p.add_argument(
        "--no-rescale",
        action="store_true",
        help="skip min-max rescaling to [0, 1] before noise injection",
    )
    p.set_defaults(func=cmd_bench_noise)

    p = commands.add_parser("smooth", help="edge-preserving two-level smoothing")
    p.add_argument("input", help="PGM or grayscale PNG image")
    _add_common(p, patch_default=3)
    p.set_defaults(stride=2, func=cmd_smooth)

    p = commands.add_parser("edges", help="edge strength from two-level fits")
    p.add_argument("input", help="PGM or grayscale PNG image")
    _add_common(p, patch_default=3)
    p.add_argument(
        "--threshold",
        nargs="?",
        const="otsu",
        default=None,
        help="emit a binary edge map; numeric value or 'otsu' (the default when bare)",
    )
    p.set_defaults(stride=2, func=cmd_edges)

    p = commands.add_parser("entropy", help="directionality-entropy pipeline")
    p.add_argument("input", help="manifest CSV with sample_id,image,mask columns")
    _add_common(p)
    p.add_argument("--survival", default=None, help="survival CSV with sample_id,time,event")
    p.add_argument("--count", type=int, default=None, required=True, help="patches per sample")
    p.set_defaults(func=cmd_entropy)

    return parser


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except ImageFormatError as exc:
        print(f"wlia: {exc}", file=sys.stderr)
        return 2
    except (EmptyRoiError, UndefinedEntropyError, OSError, ValueError) as exc:
        print(f"wlia: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
