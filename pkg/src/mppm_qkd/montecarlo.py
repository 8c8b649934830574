"""Event-level protocol runs in single-photon-per-train mode.

Each trial draws two trains, samples the channel, builds Charlie's click
record, post-selects a two-click event, phase-matches and sifts. Batches are
split into fixed-size chunks with independently spawned seeds so the result
does not depend on how many workers execute them.
"""

from __future__ import annotations

import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import astuple, dataclass, fields
from typing import NamedTuple, Optional

import numpy as np

from .channel import overall_transmittance, sample_realization
from .interference import outcome_distribution, phase_delta, sample_outcome
from .model import (
    Detector,
    DetectionEvent,
    MatchClass,
    ParameterError,
    ProtocolParams,
    SiftResult,
    TrainEncoding,
    random_train,
)
from .sifting import match_class, sift

CHUNK_SIZE = 4096


class TrainOutcome(NamedTuple):
    """What happened to one train pair; ``event`` is None when discarded."""

    event: Optional[DetectionEvent]
    sift: Optional[SiftResult]
    misaligned: bool
    photon_pair: bool
    alice: TrainEncoding
    bob: TrainEncoding


@dataclass(frozen=True)
class TrialStats:
    trains: int
    success_detections: int
    matched: int
    sift_errors: int

    def __post_init__(self):
        if not 0 <= self.sift_errors <= self.matched <= self.success_detections <= self.trains:
            raise ValueError(f"inconsistent counters: {self}")

    @property
    def empirical_gain(self) -> float:
        return self.success_detections / self.trains if self.trains else 0.0

    @property
    def empirical_qber(self) -> float:
        return self.sift_errors / self.matched if self.matched else 0.0

    @property
    def match_fraction(self) -> float:
        return self.matched / self.success_detections if self.success_detections else 0.0

    def __add__(self, other: "TrialStats") -> "TrialStats":
        return TrialStats(*(a + b for a, b in zip(astuple(self), astuple(other))))

    def as_row(self) -> dict:
        row = {f.name: getattr(self, f.name) for f in fields(self)}
        row.update(
            empirical_gain=self.empirical_gain,
            empirical_qber=self.empirical_qber,
            match_fraction=self.match_fraction,
        )
        return row


def _clicks(params, alice, bob, real, rng):
    """Merge photon and dark clicks into a sorted list of (bin, detector)."""
    clicks = set(real.dark_clicks)
    a, b = real.alice_arrival_bin, real.bob_arrival_bin
    photon_pair = a is not None and b is not None and a != b
    if photon_pair:
        m, n = min(a, b), max(a, b)
        det_m, det_n = sample_outcome(outcome_distribution(phase_delta(alice, bob, m, n)), rng)
        if real.misaligned:
            det_n = det_n.flipped()
        clicks.add((m, det_m))
        clicks.add((n, det_n))
    else:
        # lone photon, or two photons bunched into one bin: a single click
        for bin_ in {x for x in (a, b) if x is not None}:
            clicks.add((bin_, Detector.C if rng.random() < 0.5 else Detector.D))
    return sorted(clicks, key=lambda c: (c[0], c[1].value)), photon_pair


def simulate_train(params: ProtocolParams, rng: np.random.Generator) -> TrainOutcome:
    L, M = params.train_length, params.phase_slices
    alice = random_train(L, rng, M)
    bob = random_train(L, rng, M)
    real = sample_realization(params, alice, bob, rng)
    clicks, photon_pair = _clicks(params, alice, bob, real, rng)

    if len(clicks) < 2:
        return TrainOutcome(None, None, real.misaligned, photon_pair, alice, bob)
    if len(clicks) > 2:
        # more than two clicks: Charlie picks two at random
        i, j = sorted(rng.choice(len(clicks), size=2, replace=False))
        clicks = [clicks[i], clicks[j]]
        photon_pair = False
    (m, det_m), (n, det_n) = clicks
    if m == n:
        return TrainOutcome(None, None, real.misaligned, photon_pair, alice, bob)

    event = DetectionEvent(m, n, det_m, det_n)
    match = match_class(alice, bob, m, n)
    if match is MatchClass.NONE:
        res = SiftResult(match, event.detector_class)
    else:
        ka, kb = alice.bits, bob.bits
        res = sift(match, event.detector_class, int(ka[m]), int(ka[n]), int(kb[m]), int(kb[n]))
    return TrainOutcome(event, res, real.misaligned, photon_pair, alice, bob)


def run_trial(params: ProtocolParams, rng: np.random.Generator) -> Optional[tuple[SiftResult, bool]]:
    """One full train pair; None unless it yields a phase-matched sifted bit."""
    out = simulate_train(params, rng)
    if out.sift is None or out.sift.match_class is MatchClass.NONE:
        return None
    return out.sift, out.sift.agree


def _run_chunk(params: ProtocolParams, trials: int, seed_seq: np.random.SeedSequence) -> TrialStats:
    rng = np.random.default_rng(seed_seq)
    success = matched = errors = 0
    for _ in range(trials):
        out = simulate_train(params, rng)
        if out.event is None:
            continue
        success += 1
        if out.sift.match_class is MatchClass.NONE:
            continue
        matched += 1
        errors += not out.sift.agree
    return TrialStats(trials, success, matched, errors)


def run_batch(params: ProtocolParams, trials: int, seed: int, workers: int = 1) -> TrialStats:
    if trials < 1:
        raise ParameterError(f"trials must be >= 1, got {trials}")
    sizes = [CHUNK_SIZE] * (trials // CHUNK_SIZE)
    if trials % CHUNK_SIZE:
        sizes.append(trials % CHUNK_SIZE)
    seeds = np.random.SeedSequence(seed).spawn(len(sizes))
    if workers > 1 and len(sizes) > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            parts = list(pool.map(_run_chunk, [params] * len(sizes), sizes, seeds))
    else:
        parts = [_run_chunk(params, n, s) for n, s in zip(sizes, seeds)]
    total = TrialStats(0, 0, 0, 0)
    for part in parts:
        total = total + part
    return total


def match_fraction_expected(phase_slices: int) -> float:
    """Probability that a uniform grid phase combination is 0 or pi."""
    if phase_slices < 2 or phase_slices % 2:
        raise ParameterError(f"phase_slices must be even and >= 2, got {phase_slices}")
    return 2.0 / phase_slices


def two_click_probability(params: ProtocolParams) -> float:
    """Success-detection probability per train with no dark counts.

    Both photons must survive and land in distinct bins.
    """
    if params.dark_count != 0.0:
        raise ParameterError("closed form only holds for dark_count = 0")
    eta = overall_transmittance(params)
    return eta * eta * (1.0 - 1.0 / params.train_length)


def qber_standard_error(qber: float, matched: int) -> float:
    return math.sqrt(qber * (1.0 - qber) / matched) if matched else math.inf
