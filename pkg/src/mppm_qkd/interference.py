"""Two-click outcome statistics of Charlie's beam-splitter measurement.

Only the post-selected subspace with one click at bin ``m`` and one at bin
``n`` is modelled; same-bin (single click) branches are discarded upstream.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .model import TWO_PI, Detector, TrainEncoding

_TOL = 1e-12

OUTCOMES = (
    (Detector.C, Detector.C),
    (Detector.C, Detector.D),
    (Detector.D, Detector.C),
    (Detector.D, Detector.D),
)


@dataclass(frozen=True)
class OutcomeDistribution:
    p_cc: float
    p_cd: float
    p_dc: float
    p_dd: float

    def __post_init__(self):
        probs = self.as_tuple()
        if any(not (0.0 <= p <= 1.0) for p in probs):
            raise ValueError(f"probabilities must be in [0, 1], got {probs}")
        if abs(sum(probs) - 1.0) > _TOL:
            raise ValueError(f"probabilities must sum to 1, got {sum(probs)!r}")

    def as_tuple(self) -> tuple[float, float, float, float]:
        return (self.p_cc, self.p_cd, self.p_dc, self.p_dd)

    @property
    def p_same(self) -> float:
        return self.p_cc + self.p_dd

    @property
    def p_diff(self) -> float:
        return self.p_cd + self.p_dc


def _check_indices(L: int, m: int, n: int) -> None:
    if not (0 <= m < L and 0 <= n < L):
        raise IndexError(f"time-stamps ({m}, {n}) out of range for L={L}")
    if m == n:
        raise IndexError("time-stamps must be distinct")


def _grid_delta(alice: TrainEncoding, bob: TrainEncoding):
    """Shared slice count when both trains sit on the same phase grid."""
    if (
        alice.phase_slices is not None
        and alice.phase_slices == bob.phase_slices
        and alice.slices is not None
        and bob.slices is not None
    ):
        return alice.phase_slices
    return None


def phase_delta(alice: TrainEncoding, bob: TrainEncoding, m: int, n: int) -> float:
    """Relative phase of the two interfering two-photon paths, in [0, 2*pi).

    Includes the 0/pi key modulation of all four pulses involved.
    """
    if len(alice) != len(bob):
        raise ValueError("trains must have equal length")
    _check_indices(len(alice), m, n)
    ka, kb = alice.bits, bob.bits
    kick = int(ka[m]) + int(kb[n]) - int(ka[n]) - int(kb[m])

    M = _grid_delta(alice, bob)
    if M is not None:
        a, b = alice.slices, bob.slices
        idx = (int(a[m]) + int(b[n]) - int(a[n]) - int(b[m]) + kick * (M // 2)) % M
        return idx * (TWO_PI / M)

    pa, pb = alice.phases, bob.phases
    delta = (pa[m] + pb[n] - pa[n] - pb[m]) + kick * math.pi
    return float(delta % TWO_PI)


def outcome_distribution(delta: float) -> OutcomeDistribution:
    """Normalised (CC, CD, DC, DD) probabilities for relative phase ``delta``."""
    if not math.isfinite(delta):
        raise ValueError(f"delta must be finite, got {delta!r}")
    c = math.cos(delta)
    same = max(0.0, 1.0 + c)
    diff = max(0.0, 1.0 - c)
    total = 2.0 * (same + diff)
    return OutcomeDistribution(same / total, diff / total, diff / total, same / total)


def sample_outcome(dist: OutcomeDistribution, rng: np.random.Generator) -> tuple[Detector, Detector]:
    """Draw one detector pair (detector at m, detector at n) from ``dist``."""
    u = rng.random()
    acc = 0.0
    for outcome, p in zip(OUTCOMES, dist.as_tuple()):
        acc += p
        if u < acc and p > 0.0:
            return outcome
    # u landed in the rounding gap above the cumulative sum
    for outcome, p in zip(reversed(OUTCOMES), reversed(dist.as_tuple())):
        if p > 0.0:
            return outcome
    raise AssertionError("unreachable: distribution has no mass")
