"""Command-line front end.

extract --model M --corpus DIR --out-matrix F.npy --out-manifest F.json
        [--layers SPEC] [--speaker-regex RE] [--checkpoint PATH]
        [--batch-size N] [--device DEV]

Prints a JSON run summary to stdout. Exit codes: 0 success (per-file
failures are recorded in the summary), 1 extraction failure, 2 usage or
I/O error.
"""

from __future__ import annotations

import argparse
import json
import sys

from . import __version__
from .core import ExtractorConfig, extract
from .errors import ExtractionError, ExtractorBaseError, UsageError
from .registry import MODEL_NAMES

PROG = "extract"


def _parse_layers(text: str) -> tuple[int, ...] | None:
    """'all', a single index, 'a:b' (inclusive, nonnegative), or 'i,j,k'."""
    text = text.strip()
    if text.lower() == "all":
        return None
    if ":" in text:
        lo_s, _, hi_s = text.partition(":")
        try:
            lo, hi = int(lo_s), int(hi_s)
        except ValueError:
            raise argparse.ArgumentTypeError(f"bad layer range {text!r}") from None
        if lo < 0 or hi < lo:
            raise argparse.ArgumentTypeError(
                f"layer range needs 0 <= start <= stop, got {text!r}"
            )
        return tuple(range(lo, hi + 1))
    try:
        return tuple(int(part) for part in text.split(","))
    except ValueError:
        raise argparse.ArgumentTypeError(f"bad layer list {text!r}") from None


def _positive_int(text: str) -> int:
    try:
        value = int(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected an integer, got {text!r}") from None
    if value < 1:
        raise argparse.ArgumentTypeError(f"expected a positive integer, got {value}")
    return value


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog=PROG,
        description="Extract utterance-level embeddings from a WAV corpus.",
    )
    parser.add_argument("--version", action="version", version=f"{PROG} {__version__}")
    parser.add_argument("--model", required=True, choices=MODEL_NAMES)
    parser.add_argument("--corpus", required=True, help="directory of 16 kHz mono WAVs")
    parser.add_argument("--out-matrix", required=True, help="output NPY matrix path")
    parser.add_argument("--out-manifest", required=True, help="output JSON manifest path")
    parser.add_argument(
        "--layers",
        type=_parse_layers,
        default=None,
        help="hidden states to average: 'all' (default), K, A:B, or I,J,K; "
        "negatives count from the top",
    )
    parser.add_argument(
        "--speaker-regex",
        default=None,
        help="regex with one capture group applied to the relative path; "
        "default takes the first directory component as the speaker",
    )
    parser.add_argument(
        "--checkpoint",
        default=None,
        help="local path or hub id overriding the registry checkpoint",
    )
    parser.add_argument("--batch-size", type=_positive_int, default=1)
    parser.add_argument("--device", default="cpu")
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        import transformers

        transformers.logging.set_verbosity_error()
    except ImportError:
        pass
    try:
        config = ExtractorConfig(
            model=args.model,
            layers=args.layers,
            speaker_regex=args.speaker_regex,
            checkpoint=args.checkpoint,
            batch_size=args.batch_size,
            device=args.device,
        )
        summary = extract(args.corpus, config, args.out_matrix, args.out_manifest)
    except UsageError as exc:
        print(f"{PROG}: error: {exc}", file=sys.stderr)
        return 2
    except ExtractionError as exc:
        print(f"{PROG}: error: {exc}", file=sys.stderr)
        return 1
    except ExtractorBaseError as exc:
        print(f"{PROG}: error: {exc}", file=sys.stderr)
        return 1
    except OSError as exc:
        print(f"{PROG}: error: {exc}", file=sys.stderr)
        return 2
    json.dump(summary.to_dict(), sys.stdout, indent=2)
    print()
    return 0


if __name__ == "__main__":
    sys.exit(main())
