"""Single command-line entry point for all metric operations.

Every primary output embeds a reproducibility header (tool version,
command line, seed, and the kernel bandwidth where one was used), and
identical invocations produce byte-identical output. Exit codes: 0
success, 1 computation error, 2 usage or input error.
"""

from __future__ import annotations

import argparse
import json
import math
import os
import shlex
import sys
from pathlib import Path

from . import __version__
from .analysis import (
    PEARSON,
    SPEARMAN,
    correlate,
    read_metric_csv,
    read_mos_csv,
    relative_change,
)
from .audio_perturb import EXTERNAL, GAUSSIAN, NoiseSpec, perturb_corpus
from .errors import ComputationError, DistMetricError, UsageError
from .gaussian_stats import compute_fsd, estimate_stats
from .kernel_mmd import KernelSpec, compute_smmd
from .normality import ALL_TESTS, run_test
from .sweep import (
    RANDOM_FRACTION,
    SPEAKER_FRACTION,
    SweepSpec,
    curve_csv_lines,
    run_fraction_sweep,
    run_snr_sweep,
)
from .tensor_io import read_embedding_set

PROG = "distmetric"
THREADS_ENV = "DISTMETRIC_THREADS"


def _positive_int(text: str) -> int:
    try:
        value = int(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected an integer, got {text!r}") from None
    if value < 1:
        raise argparse.ArgumentTypeError(f"expected a positive integer, got {value}")
    return value


def _sigma_arg(text: str) -> float | None:
    if text == "median":
        return None
    try:
        value = float(text)
    except ValueError:
        raise argparse.ArgumentTypeError(
            f"expected 'median' or a positive number, got {text!r}"
        ) from None
    if not math.isfinite(value) or value <= 0.0:
        raise argparse.ArgumentTypeError(f"sigma must be positive and finite, got {text}")
    return value


def _parse_range(text: str) -> tuple[float, ...]:
    parts = text.split(":")
    if len(parts) != 3:
        raise UsageError(f"expected START:STOP:STEP, got {text!r}")
    try:
        start, stop, step = (float(p) for p in parts)
    except ValueError:
        raise UsageError(f"non-numeric range component in {text!r}") from None
    if step <= 0 or stop < start:
        raise UsageError(f"range {text!r} must have STOP >= START and STEP > 0")
    values = []
    k = 0
    while (v := start + k * step) <= stop + 1e-9:
        values.append(v)
        k += 1
    return tuple(values)


def _parse_fractions(text: str) -> tuple[float, ...]:
    if ":" in text:
        return _parse_range(text)
    try:
        return tuple(float(p) for p in text.split(","))
    except ValueError:
        raise UsageError(f"bad fraction list {text!r}") from None


def _resolve_threads(args: argparse.Namespace) -> int:
    if args.threads is not None:
        return args.threads
    env = os.environ.get(THREADS_ENV)
    if env is None:
        return 1
    try:
        value = int(env)
    except ValueError:
        raise UsageError(f"{THREADS_ENV}={env!r} is not an integer") from None
    if value < 1:
        raise UsageError(f"{THREADS_ENV} must be >= 1, got {value}")
    return value


def _header(args: argparse.Namespace) -> dict:
    return {
        "version": __version__,
        "command": shlex.join([PROG, *args.raw_argv]),
        "seed": args.seed,
    }


def _text_lines(payload: dict, prefix: str = "") -> list[str]:
    lines = []
    for key, value in payload.items():
        name = f"{prefix}{key}"
        if isinstance(value, dict):
            lines.extend(_text_lines(value, f"{name}."))
        elif isinstance(value, list):
            for i, item in enumerate(value):
                if isinstance(item, dict):
                    lines.extend(_text_lines(item, f"{name}[{i}]."))
                else:
                    lines.append(f"{name}[{i}]: {item}")
        else:
            lines.append(f"{name}: {value}")
    return lines


def _write_out(text: str, out: str | None) -> None:
    if out is None:
        sys.stdout.write(text)
    else:
        Path(out).write_text(text)


def _emit_payload(payload: dict, args: argparse.Namespace) -> None:
    if getattr(args, "format", "json") == "text":
        text = "\n".join(_text_lines(payload)) + "\n"
    else:
        text = json.dumps(payload, indent=2) + "\n"
    _write_out(text, args.out)


def _emit_curve(curve, header: dict, args: argparse.Namespace, x_label: str, **plot_kw) -> None:
    preamble = [f"# {k}: {v}" for k, v in header.items()]
    _write_out("\n".join(preamble + curve_csv_lines(curve)) + "\n", args.out)
    plot_path = args.plot_path
    if plot_path is None and args.out is not None and not args.no_plot:
        plot_path = str(Path(args.out).with_suffix(".png"))
    if plot_path is not None:
        from .plotting import render_curve_figure

        render_curve_figure(curve, plot_path, x_label=x_label, **plot_kw)


def cmd_fsd(args: argparse.Namespace) -> int:
    ref = read_embedding_set(args.ref_matrix, args.ref_manifest)
    gen = read_embedding_set(args.gen_matrix, args.gen_manifest)
    value = compute_fsd(estimate_stats(ref), estimate_stats(gen))
    payload = _header(args) | {
        "metric": "fsd",
        "value": value,
        "n_ref": ref.n,
        "n_gen": gen.n,
        "dim": ref.dim,
    }
    _emit_payload(payload, args)
    return 0


def cmd_smmd(args: argparse.Namespace) -> int:
    ref = read_embedding_set(args.ref_matrix, args.ref_manifest)
    gen = read_embedding_set(args.gen_matrix, args.gen_manifest)
    kernel = KernelSpec(sigma=args.sigma, seed=args.seed)
    result = compute_smmd(ref, gen, kernel, threads=_resolve_threads(args))
    payload = _header(args) | {
        "metric": "smmd",
        "value": result.value,
        "sigma_used": result.sigma_used,
        "n_ref": result.m,
        "n_gen": result.n,
        "dim": ref.dim,
    }
    _emit_payload(payload, args)
    return 0


def cmd_normality(args: argparse.Namespace) -> int:
    es = read_embedding_set(args.matrix, args.manifest)
    tests = ALL_TESTS if args.test == "all" else (args.test,)
    threads = _resolve_threads(args)
    reports = [run_test(es, t, threads=threads) for t in tests]
    payload = _header(args) | {
        "tests": [
            {
                "test": r.test,
                "statistic": r.statistic,
                "p_value": r.p_value,
                "log10_p": r.log10_p,
            }
            for r in reports
        ],
        "n": es.n,
        "dim": es.dim,
    }
    _emit_payload(payload, args)
    return 0


def _parse_noise(text: str) -> tuple[str, Path | None]:
    if text == "gaussian":
        return GAUSSIAN, None
    if text.startswith("dir:"):
        return EXTERNAL, Path(text[4:])
    raise UsageError(f"--noise must be 'gaussian' or 'dir:PATH', got {text!r}")


def _fmt_num(x: float) -> str:
    return str(int(x)) if float(x).is_integer() else repr(float(x))


def cmd_perturb(args: argparse.Namespace) -> int:
    source, noise_dir = _parse_noise(args.noise)
    if args.snr is not None:
        snrs, single = (args.snr,), True
    else:
        snrs, single = _parse_range(args.snr_ladder), False
    out_dir = Path(args.out_dir)
    reports = []
    for snr in snrs:
        spec = NoiseSpec(snr_db=snr, seed=args.seed, source=source, noise_dir=noise_dir)
        target = out_dir if single else out_dir / f"snr_{_fmt_num(snr)}"
        reports.append(perturb_corpus(args.in_dir, target, spec, strict=args.strict).to_dict())
    payload = _header(args) | (reports[0] if single else {"ladder": reports})
    _emit_payload(payload, args)
    return 0


def cmd_sweep(args: argparse.Namespace) -> int:
    ref = read_embedding_set(args.ref_matrix, args.ref_manifest)
    gen = read_embedding_set(args.gen_matrix, args.gen_manifest)
    strategy = RANDOM_FRACTION if args.strategy == "random" else SPEAKER_FRACTION
    spec = SweepSpec(
        strategy=strategy,
        fractions=_parse_fractions(args.fractions),
        seed=args.seed,
        repeats=args.repeats,
    )
    kernel = KernelSpec(sigma=args.sigma, seed=args.seed)
    curve, sigma = run_fraction_sweep(
        ref, gen, spec, kernel, threads=_resolve_threads(args)
    )
    header = _header(args) | {"sigma_used": sigma}
    _emit_curve(curve, header, args, x_label="subset fraction (%)")
    return 0


def _parse_condition(text: str) -> tuple[float, str, str]:
    head, sep, tail = text.partition("=")
    if not sep:
        raise UsageError(f"--condition must be SNR=MATRIX,MANIFEST, got {text!r}")
    try:
        snr = float(head)
    except ValueError:
        raise UsageError(f"bad SNR value {head!r} in --condition") from None
    paths = tail.split(",")
    if len(paths) != 2:
        raise UsageError(f"--condition needs MATRIX,MANIFEST after '=', got {tail!r}")
    return snr, paths[0], paths[1]


def cmd_snr_curve(args: argparse.Namespace) -> int:
    ref = read_embedding_set(args.ref[0], args.ref[1])
    sets = {}
    for cond in args.condition:
        snr, matrix, manifest = _parse_condition(cond)
        if snr in sets:
            raise UsageError(f"duplicate condition at {snr} dB")
        sets[snr] = read_embedding_set(matrix, manifest)
    kernel = KernelSpec(sigma=args.sigma, seed=args.seed)
    curve, sigma = run_snr_sweep(sets, ref, kernel, threads=_resolve_threads(args))
    baseline = max(sets) if args.baseline == "max-snr" else float(args.baseline)
    curve = relative_change(curve, baseline)
    header = _header(args) | {"sigma_used": sigma, "baseline_snr_db": _fmt_num(baseline)}
    _emit_curve(
        curve,
        header,
        args,
        x_label="SNR (dB)",
        y_label="relative change vs baseline",
        log_y=True,
        reverse_x=True,
    )
    return 0


def cmd_correlate(args: argparse.Namespace) -> int:
    metrics = read_metric_csv(args.metrics)
    if args.metric is not None:
        if args.metric not in metrics:
            raise UsageError(
                f"metric {args.metric!r} not in {args.metrics}; "
                f"available: {sorted(metrics)}"
            )
        name = args.metric
    elif len(metrics) == 1:
        name = next(iter(metrics))
    else:
        raise UsageError(
            f"{args.metrics} holds {len(metrics)} metrics {sorted(metrics)}; "
            "choose one with --metric"
        )
    mos = read_mos_csv(args.mos)
    result = correlate(metrics[name], mos, args.method, args.case_insensitive)
    payload = _header(args) | {
        "method": result.method,
        "metric": name,
        "coefficient": result.coefficient,
        "n": result.n,
    }
    _emit_payload(payload, args)
    return 0


def _add_common(p: argparse.ArgumentParser, fmt: bool = True) -> None:
    p.add_argument("--seed", type=int, default=42, help="base seed (default 42)")
    p.add_argument(
        "--threads",
        type=_positive_int,
        default=None,
        help=f"worker threads; results do not depend on it (default ${THREADS_ENV} or 1)",
    )
    p.add_argument("--out", metavar="PATH", default=None, help="write output here instead of stdout")
    if fmt:
        p.add_argument("--format", choices=("json", "text"), default="json")


def _add_embedding_pair(p: argparse.ArgumentParser) -> None:
    p.add_argument("ref_matrix", help="reference matrix (.npy)")
    p.add_argument("ref_manifest", help="reference manifest (.json)")
    p.add_argument("gen_matrix", help="generated matrix (.npy)")
    p.add_argument("gen_manifest", help="generated manifest (.json)")


def _add_plot_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument(
        "--plot-path",
        default=None,
        help="render a figure to this path (default: alongside --out as .png)",
    )
    p.add_argument("--no-plot", action="store_true", help="skip figure rendering")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog=PROG,
        description="Distribution distances between speech-embedding sets, "
        "plus the surrounding evaluation protocols.",
    )
    parser.add_argument("--version", action="version", version=f"{PROG} {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("fsd", help="Fréchet distance between two embedding sets")
    _add_embedding_pair(p)
    _add_common(p)
    p.set_defaults(func=cmd_fsd)

    p = sub.add_parser("smmd", help="unbiased squared MMD between two embedding sets")
    _add_embedding_pair(p)
    p.add_argument(
        "--sigma",
        type=_sigma_arg,
        default=None,
        help="Gaussian kernel bandwidth, or 'median' for the median heuristic (default)",
    )
    _add_common(p)
    p.set_defaults(func=cmd_smmd)

    p = sub.add_parser("normality", help="multivariate normality tests on one set")
    p.add_argument("matrix")
    p.add_argument("manifest")
    p.add_argument("--test", choices=(*ALL_TESTS, "all"), default="all")
    _add_common(p)
    p.set_defaults(func=cmd_normality)

    p = sub.add_parser("perturb", help="mix noise into a WAV corpus at target SNRs")
    p.add_argument("in_dir")
    p.add_argument("out_dir")
    p.add_argument("--noise", default="gaussian", help="'gaussian' or 'dir:PATH'")
    group = p.add_mutually_exclusive_group()
    group.add_argument("--snr", type=float, default=None, help="single target SNR in dB")
    group.add_argument(
        "--snr-ladder",
        default="0:50:5",
        help="START:STOP:STEP ladder in dB; one snr_<dB> subdirectory each (default 0:50:5)",
    )
    p.add_argument("--strict", action="store_true", help="abort on the first file failure")
    _add_common(p)
    p.set_defaults(func=cmd_perturb)

    p = sub.add_parser("sweep", help="sample-efficiency sweep of FSD/SMMD vs subset size")
    _add_embedding_pair(p)
    p.add_argument("--strategy", choices=("random", "speaker"), default="random")
    p.add_argument("--fractions", default="10:100:10", help="START:STOP:STEP or comma list")
    p.add_argument("--repeats", type=_positive_int, default=5)
    p.add_argument("--sigma", type=_sigma_arg, default=None)
    _add_plot_flags(p)
    _add_common(p, fmt=False)
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("snr-curve", help="relative metric change across SNR conditions")
    p.add_argument("--ref", nargs=2, metavar=("MATRIX", "MANIFEST"), required=True)
    p.add_argument(
        "--condition",
        action="append",
        required=True,
        metavar="SNR=MATRIX,MANIFEST",
        help="repeat once per SNR condition (at least 2)",
    )
    p.add_argument(
        "--baseline",
        default="max-snr",
        help="'max-snr' (default) or an SNR value present in --condition",
    )
    p.add_argument("--sigma", type=_sigma_arg, default=None)
    _add_plot_flags(p)
    _add_common(p, fmt=False)
    p.set_defaults(func=cmd_snr_curve)

    p = sub.add_parser("correlate", help="correlate per-system metric values with MOS")
    p.add_argument("--metrics", required=True, help="CSV with header system,metric,value")
    p.add_argument("--mos", required=True, help="CSV with header system,mos[,mos_ci]")
    p.add_argument("--method", choices=(PEARSON, SPEARMAN), default=SPEARMAN)
    p.add_argument("--metric", default=None, help="metric name when the CSV holds several")
    p.add_argument("--case-insensitive", action="store_true", help="case-insensitive system join")
    _add_common(p)
    p.set_defaults(func=cmd_correlate)

    return parser


def main(argv: list[str] | None = None) -> int:
    raw_argv = list(sys.argv[1:]) if argv is None else list(argv)
    parser = build_parser()
    args = parser.parse_args(raw_argv)
    args.raw_argv = raw_argv
    try:
        return args.func(args)
    except UsageError as exc:
        print(f"{PROG}: error: {exc}", file=sys.stderr)
        return 2
    except ComputationError as exc:
        print(f"{PROG}: error: {exc}", file=sys.stderr)
        return 1
    except DistMetricError as exc:
        print(f"{PROG}: error: {exc}", file=sys.stderr)
        return 1
    except OSError as exc:
        print(f"{PROG}: error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
