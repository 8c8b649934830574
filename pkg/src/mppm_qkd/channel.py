"""Transmittance model and per-train event sampling for the Monte Carlo engine."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np

from .model import Detector, ProtocolParams, TrainEncoding

_DETECTORS = (Detector.C, Detector.D)


def overall_transmittance(params: ProtocolParams) -> float:
    """Per-arm transmittance including detector efficiency.

    Charlie sits at the midpoint, so each photon crosses half the fiber.
    """
    loss_db = params.alpha_db_per_km * params.distance_km / 2.0
    return params.detector_efficiency * 10.0 ** (-loss_db / 10.0)


def end_to_end_transmittance(params: ProtocolParams) -> float:
    """Transmittance of a direct Alice-Bob link over the full distance with the same detectors."""
    loss_db = params.alpha_db_per_km * params.distance_km
    return params.detector_efficiency * 10.0 ** (-loss_db / 10.0)


@dataclass(frozen=True)
class ChannelRealization:
    alice_arrival_bin: Optional[int]
    bob_arrival_bin: Optional[int]
    dark_clicks: tuple[tuple[int, Detector], ...]
    misaligned: bool
    train_length: int

    def __post_init__(self):
        L = self.train_length
        for b in (self.alice_arrival_bin, self.bob_arrival_bin):
            if b is not None and not 0 <= b < L:
                raise ValueError(f"arrival bin {b} out of range for L={L}")
        for b, _ in self.dark_clicks:
            if not 0 <= b < L:
                raise ValueError(f"dark click bin {b} out of range for L={L}")


def sample_realization(
    params: ProtocolParams,
    alice: TrainEncoding,
    bob: TrainEncoding,
    rng: np.random.Generator,
) -> ChannelRealization:
    """Sample photon survival, dark clicks and the misalignment flag for one train pair.

    Single-photon mode: each party's photon sits in a uniformly random bin
    and reaches a detector with probability ``overall_transmittance``.
    """
    L = len(alice)
    if len(bob) != L:
        raise ValueError("trains must have equal length")
    eta = overall_transmittance(params)

    bins = rng.integers(0, L, size=2)
    alive = rng.random(2) < eta
    alice_bin = int(bins[0]) if alive[0] else None
    bob_bin = int(bins[1]) if alive[1] else None

    dark = ()
    if params.dark_count > 0.0:
        # each (bin, detector) slot fires independently
        k = rng.binomial(2 * L, params.dark_count)
        if k:
            slots = np.sort(rng.choice(2 * L, size=k, replace=False))
            dark = tuple((int(s) // 2, _DETECTORS[int(s) % 2]) for s in slots)

    misaligned = bool(rng.random() < params.misalignment)
    return ChannelRealization(alice_bin, bob_bin, dark, misaligned, L)
