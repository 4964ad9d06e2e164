"""Subset construction and per-condition metric evaluation.

Covers two protocols: sample-efficiency sweeps, where the evaluated set
is subsampled (randomly or by whole speakers) while the reference is
held fixed, and SNR sweeps over per-condition embedding sets. The
kernel bandwidth is resolved once per sweep so conditions stay
comparable; the full-fraction point then reproduces the direct metric
values bit-exactly.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .blocked import DEFAULT_BLOCK
from .errors import DimensionError, InsufficientSamples, UsageError
from .gaussian_stats import compute_fsd, estimate_stats
from .kernel_mmd import KernelSpec, cross_term, resolve_sigma, self_term
from .tensor_io import EmbeddingSet

RANDOM_FRACTION = "random-fraction"
SPEAKER_FRACTION = "speaker-fraction"
SNR_LADDER = "snr-ladder"

FSD = "FSD"
SMMD = "SMMD"


@dataclass(frozen=True)
class SweepSpec:
    strategy: str
    fractions: tuple[float, ...] = ()
    snrs_db: tuple[float, ...] = ()
    seed: int = 42
    repeats: int = 5

    def __post_init__(self) -> None:
        if self.strategy not in (RANDOM_FRACTION, SPEAKER_FRACTION, SNR_LADDER):
            raise UsageError(f"unknown sweep strategy {self.strategy!r}")
        object.__setattr__(self, "fractions", tuple(float(f) for f in self.fractions))
        object.__setattr__(self, "snrs_db", tuple(float(s) for s in self.snrs_db))
        if self.strategy == SNR_LADDER:
            if not self.snrs_db:
                raise UsageError("SNR ladder needs at least one SNR condition")
        else:
            if not self.fractions:
                raise UsageError("fraction sweep needs at least one fraction")
            for f in self.fractions:
                if not 0.0 < f <= 100.0:
                    raise UsageError(f"fraction {f} outside (0, 100]")
            if any(b <= a for a, b in zip(self.fractions, self.fractions[1:])):
                raise UsageError("fractions must be strictly increasing")
        if self.repeats < 1:
            raise UsageError("repeats must be >= 1")


@dataclass(frozen=True)
class SweepPoint:
    condition: float
    metric: str
    value: float
    repeat_index: int
    subset_size: int
    n_speakers: int


@dataclass(frozen=True)
class SweepCurve:
    points: tuple[SweepPoint, ...] = field(default_factory=tuple)

    def to_dict(self) -> dict:
        return {"points": [vars(p).copy() for p in self.points]}


CSV_HEADER = "condition,metric,value,repeat,subset_size,n_speakers"


def _fmt_num(x: float) -> str:
    return str(int(x)) if float(x).is_integer() else repr(float(x))


def curve_csv_lines(curve: SweepCurve) -> list[str]:
    lines = [CSV_HEADER]
    for p in curve.points:
        lines.append(
            f"{_fmt_num(p.condition)},{p.metric},{p.value!r},"
            f"{p.repeat_index},{p.subset_size},{p.n_speakers}"
        )
    return lines


def _subset_rng(seed: int, fraction_pct: float) -> np.random.Generator:
    # key on (seed, fraction) so each fraction draws independently
    return np.random.default_rng([int(seed), int(round(fraction_pct * 1e6))])


def random_subset(es: EmbeddingSet, fraction_pct: float, seed: int) -> EmbeddingSet:
    """Seeded uniform draw without replacement of floor(N*pct/100) rows.

    At least 2 rows are always kept so downstream statistics stay
    defined. Original row order is preserved.
    """
    if not 0.0 < fraction_pct <= 100.0:
        raise UsageError(f"fraction {fraction_pct} outside (0, 100]")
    k = max(2, int(es.n * fraction_pct / 100.0))
    if es.n < 2:
        raise InsufficientSamples(f"cannot draw a subset of size >= 2 from N={es.n}")
    if k >= es.n:
        return es
    rng = _subset_rng(seed, fraction_pct)
    idx = np.sort(rng.choice(es.n, size=k, replace=False))
    return es.take(idx)


def speaker_subset(es: EmbeddingSet, fraction_pct: float, seed: int) -> EmbeddingSet:
    """Accumulate whole speakers in seeded shuffle order.

    Speakers are never split: groups are added until the subset first
    reaches floor(N*pct/100) utterances, so the realized size can
    overshoot the target.
    """
    if not 0.0 < fraction_pct <= 100.0:
        raise UsageError(f"fraction {fraction_pct} outside (0, 100]")
    groups = es.manifest.speaker_groups()
    target = max(1, int(es.n * fraction_pct / 100.0))
    rng = _subset_rng(seed, fraction_pct)
    order = rng.permutation(sorted(groups))
    picked: list[int] = []
    for spk in order:
        picked.extend(groups[spk])
        if len(picked) >= target:
            break
    if len(picked) < 2:
        raise InsufficientSamples(
            f"speaker subset has {len(picked)} rows; need at least 2"
        )
    if len(picked) == es.n:
        return es
    return es.take(np.sort(np.asarray(picked)))


_SUBSET_FN = {RANDOM_FRACTION: random_subset, SPEAKER_FRACTION: speaker_subset}


def run_fraction_sweep(
    ref: EmbeddingSet,
    gen: EmbeddingSet,
    spec: SweepSpec,
    kernel: KernelSpec = KernelSpec(),
    block: int = DEFAULT_BLOCK,
    threads: int = 1,
) -> tuple[SweepCurve, float]:
    """Evaluate FSD and SMMD per (fraction, repeat) against the full ref.

    Returns the curve plus the kernel bandwidth actually used. Sigma is
    resolved once from (ref, full gen), and the reference-side terms are
    computed once, so the fraction-100 point matches direct compute_fsd
    and compute_smmd calls bit-exactly.
    """
    if spec.strategy not in _SUBSET_FN:
        raise UsageError(f"strategy {spec.strategy!r} is not a fraction strategy")
    if ref.dim != gen.dim:
        raise DimensionError(f"reference dim {ref.dim} != generated dim {gen.dim}")
    subset_fn = _SUBSET_FN[spec.strategy]
    sigma = resolve_sigma(ref, gen, kernel)
    ref_stats = estimate_stats(ref)
    ref_self = self_term(ref.data, sigma, block=block, threads=threads)
    points = []
    for fraction in spec.fractions:
        for repeat in range(spec.repeats):
            sub = subset_fn(gen, fraction, spec.seed + repeat)
            fsd = compute_fsd(ref_stats, estimate_stats(sub))
            smmd = (
                ref_self
                + self_term(sub.data, sigma, block=block, threads=threads)
                - 2.0 * cross_term(ref.data, sub.data, sigma, block=block, threads=threads)
            )
            for metric, value in ((FSD, fsd), (SMMD, smmd)):
                points.append(
                    SweepPoint(fraction, metric, float(value), repeat, sub.n, sub.n_speakers)
                )
    points.sort(key=lambda p: (p.condition, p.metric, p.repeat_index))
    return SweepCurve(tuple(points)), sigma


def run_snr_sweep(
    per_condition_sets: dict[float, EmbeddingSet],
    ref: EmbeddingSet,
    kernel: KernelSpec = KernelSpec(),
    block: int = DEFAULT_BLOCK,
    threads: int = 1,
) -> tuple[SweepCurve, float]:
    """One FSD and one SMMD point per SNR condition, cleanest first.

    Sigma is resolved once from the reference and the highest-SNR
    (least degraded) condition so values are comparable across the
    ladder.
    """
    if len(per_condition_sets) < 2:
        raise UsageError("SNR sweep needs at least 2 conditions")
    snrs = sorted(per_condition_sets, reverse=True)
    for snr, es in per_condition_sets.items():
        if es.dim != ref.dim:
            raise DimensionError(
                f"condition {snr} dB has dim {es.dim}, reference has {ref.dim}"
            )
    sigma = resolve_sigma(ref, per_condition_sets[snrs[0]], kernel)
    ref_stats = estimate_stats(ref)
    ref_self = self_term(ref.data, sigma, block=block, threads=threads)
    points = []
    for snr in snrs:
        cond = per_condition_sets[snr]
        fsd = compute_fsd(ref_stats, estimate_stats(cond))
        smmd = (
            ref_self
            + self_term(cond.data, sigma, block=block, threads=threads)
            - 2.0 * cross_term(ref.data, cond.data, sigma, block=block, threads=threads)
        )
        for metric, value in ((FSD, fsd), (SMMD, smmd)):
            points.append(SweepPoint(snr, metric, float(value), 0, cond.n, cond.n_speakers))
    return SweepCurve(tuple(points)), sigma
