"""Phase-match post-selection and sifted-key derivation."""

from __future__ import annotations

import itertools
import math

from .interference import _check_indices, _grid_delta
from .model import TWO_PI, DetectorClass, MatchClass, SiftResult, TrainEncoding

# Float fallback only: absorbs rounding in off-grid phase sums, not a matching window.
_FLOAT_EPS = 1e-9

BIT_TUPLES = tuple(itertools.product((0, 1), repeat=4))


def match_class(alice: TrainEncoding, bob: TrainEncoding, m: int, n: int) -> MatchClass:
    """Classify the randomized-phase combination at the announced bins."""
    if len(alice) != len(bob):
        raise ValueError("trains must have equal length")
    _check_indices(len(alice), m, n)

    M = _grid_delta(alice, bob)
    if M is not None:
        a, b = alice.slices, bob.slices
        idx = (int(a[m]) + int(b[n]) - int(a[n]) - int(b[m])) % M
        if idx == 0:
            return MatchClass.ZERO
        if 2 * idx == M:
            return MatchClass.PI
        return MatchClass.NONE

    pa, pb = alice.phases, bob.phases
    delta = float((pa[m] + pb[n] - pa[n] - pb[m]) % TWO_PI)
    if delta < _FLOAT_EPS or TWO_PI - delta < _FLOAT_EPS:
        return MatchClass.ZERO
    if abs(delta - math.pi) < _FLOAT_EPS:
        return MatchClass.PI
    return MatchClass.NONE


def _require_match(match: MatchClass) -> None:
    if match is MatchClass.NONE:
        raise ValueError("unmatched events are discarded and cannot be sifted")


def key_sum(ka_m: int, ka_n: int, kb_m: int, kb_n: int) -> int:
    """|k_A^m + k_B^n - k_A^n - k_B^m|, one of 0, 1, 2."""
    return abs(ka_m + kb_n - ka_n - kb_m)


def expected_detector_class(ka_m: int, ka_n: int, kb_m: int, kb_n: int, match: MatchClass) -> DetectorClass:
    """Detector class the noiseless interference produces for these bits."""
    _require_match(match)
    cls = DetectorClass.DIFF if key_sum(ka_m, ka_n, kb_m, kb_n) == 1 else DetectorClass.SAME
    return cls if match is MatchClass.ZERO else cls.flipped()


def sift(match: MatchClass, detector_class: DetectorClass, ka_m: int, ka_n: int, kb_m: int, kb_n: int) -> SiftResult:
    """Derive both parties' sifted bits from the announced detector class.

    Alice always keeps ``ka_m ^ ka_n``. Bob inverts his parity when the
    detector class is DIFF under a zero match, or SAME under a pi match.
    """
    _require_match(match)
    s_a = ka_m ^ ka_n
    s_b = kb_m ^ kb_n
    invert = (detector_class is DetectorClass.DIFF) == (match is MatchClass.ZERO)
    if invert:
        s_b ^= 1
    return SiftResult(match, detector_class, int(s_a), int(s_b))


def eve_ambiguity(detector_class: DetectorClass, match: MatchClass) -> list[tuple[int, int, int, int, int]]:
    """All bit assignments consistent with a public announcement.

    Returns ``(ka_m, ka_n, kb_m, kb_n, s)`` for every one of the 16 tuples whose
    noiseless detector class equals ``detector_class``; ``s`` is the shared
    sifted bit.
    """
    _require_match(match)
    out = []
    for bits in BIT_TUPLES:
        if expected_detector_class(*bits, match) is detector_class:
            res = sift(match, detector_class, *bits)
            out.append((*bits, res.s_a))
    return out


def sift_table(match: MatchClass) -> list[dict]:
    """Full 16-row key-derivation table for one match class."""
    rows = []
    for bits in BIT_TUPLES:
        cls = expected_detector_class(*bits, match)
        res = sift(match, cls, *bits)
        ka_m, ka_n, kb_m, kb_n = bits
        rows.append(
            {
                "match": match.value,
                "kA_m": ka_m,
                "kA_n": ka_n,
                "kB_m": kb_m,
                "kB_n": kb_n,
                "ksum": key_sum(*bits),
                "detector_class": cls.value,
                "s_A": res.s_a,
                "s_B": res.s_b,
            }
        )
    return rows
