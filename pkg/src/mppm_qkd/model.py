"""Domain types and protocol parameters shared across the simulator.

Time-stamps are 0-indexed throughout: a train of ``L`` pulses has bins
``0 .. L-1``.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field, fields, replace
from pathlib import Path
from typing import Optional

import numpy as np

TWO_PI = 2.0 * math.pi

# Default simulation parameters.
DARK_COUNT_PER_PULSE = 1e-9
DETECTOR_EFFICIENCY = 0.19
MISALIGNMENT = 0.015
EC_EFFICIENCY = 1.16
ALPHA_DB_PER_KM = 0.2

DEFAULT_TRAIN_LENGTH = 128
DEFAULT_PHASE_SLICES = 16


class ParameterError(ValueError):
    """Raised when a parameter or config value is out of its allowed range."""


class Detector(enum.Enum):
    C = "C"
    D = "D"

    def flipped(self) -> "Detector":
        return Detector.D if self is Detector.C else Detector.C


class DetectorClass(enum.Enum):
    SAME = "SAME"
    DIFF = "DIFF"

    def flipped(self) -> "DetectorClass":
        return DetectorClass.DIFF if self is DetectorClass.SAME else DetectorClass.SAME

    @classmethod
    def of(cls, first: Detector, second: Detector) -> "DetectorClass":
        return cls.SAME if first is second else cls.DIFF


class MatchClass(enum.Enum):
    ZERO = "0"
    PI = "pi"
    NONE = "none"


@dataclass(frozen=True)
class ProtocolParams:
    """Physical and protocol constants for one evaluation point.

    ``dark_count`` is the per-detection-opportunity click probability used
    both as Y0 and as p_d. ``misalignment`` accepts the full [0, 1] range so
    that deterministic-flip test configurations can be expressed.
    """

    train_length: int = DEFAULT_TRAIN_LENGTH
    mu: float = 0.1
    distance_km: float = 0.0
    alpha_db_per_km: float = ALPHA_DB_PER_KM
    detector_efficiency: float = DETECTOR_EFFICIENCY
    dark_count: float = DARK_COUNT_PER_PULSE * DEFAULT_TRAIN_LENGTH
    misalignment: float = MISALIGNMENT
    ec_efficiency: float = EC_EFFICIENCY
    v_th: int = 5
    phase_slices: int = DEFAULT_PHASE_SLICES

    def __post_init__(self):
        self.validate()

    def validate(self) -> None:
        for name in ("train_length", "v_th", "phase_slices"):
            value = getattr(self, name)
            if isinstance(value, bool) or not isinstance(value, (int, np.integer)):
                raise ParameterError(f"{name} must be an integer, got {value!r}")
        for f in fields(self):
            value = getattr(self, f.name)
            if not math.isfinite(value):
                raise ParameterError(f"{f.name} must be finite, got {value!r}")

        if self.train_length < 2:
            raise ParameterError(f"train_length must be >= 2, got {self.train_length}")
        if self.mu < 0:
            raise ParameterError(f"mu must be >= 0, got {self.mu}")
        if self.distance_km < 0:
            raise ParameterError(f"distance_km must be >= 0, got {self.distance_km}")
        if self.alpha_db_per_km < 0:
            raise ParameterError(f"alpha_db_per_km must be >= 0, got {self.alpha_db_per_km}")
        if not 0.0 <= self.detector_efficiency <= 1.0:
            raise ParameterError(
                f"detector_efficiency must be in [0, 1], got {self.detector_efficiency}"
            )
        if not 0.0 <= self.dark_count < 0.5:
            raise ParameterError(f"dark_count must be in [0, 0.5), got {self.dark_count}")
        if not 0.0 <= self.misalignment <= 1.0:
            raise ParameterError(f"misalignment must be in [0, 1], got {self.misalignment}")
        if self.ec_efficiency < 1.0:
            raise ParameterError(f"ec_efficiency must be >= 1, got {self.ec_efficiency}")
        if self.v_th < 1:
            raise ParameterError(f"v_th must be >= 1, got {self.v_th}")
        if self.phase_slices < 2 or self.phase_slices % 2:
            raise ParameterError(
                f"phase_slices must be an even integer >= 2, got {self.phase_slices}"
            )

    def with_(self, **changes) -> "ProtocolParams":
        return replace(self, **changes)

    def to_config_text(self) -> str:
        lines = [f"{f.name} = {getattr(self, f.name)!r}" for f in fields(self)]
        return "\n".join(lines) + "\n"

    @classmethod
    def from_config_text(cls, text: str) -> "ProtocolParams":
        return default_params(**parse_config(text))

    @classmethod
    def from_config_file(cls, path) -> "ProtocolParams":
        return cls.from_config_text(Path(path).read_text(encoding="utf-8"))


_INT_FIELDS = {"train_length", "v_th", "phase_slices"}
FIELD_NAMES = tuple(f.name for f in fields(ProtocolParams))


def parse_config(text: str) -> dict:
    """Parse ``key = value`` lines into typed ProtocolParams overrides.

    Blank lines and lines starting with ``#`` are skipped. Unknown keys,
    duplicate keys and unparsable values raise ParameterError naming the key.
    """
    values = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        key, sep, value = line.partition("=")
        key, value = key.strip(), value.strip()
        if not sep or not key:
            raise ParameterError(f"line {lineno}: expected 'key = value', got {raw!r}")
        if key not in FIELD_NAMES:
            raise ParameterError(f"unknown config key {key!r} (line {lineno})")
        if key in values:
            raise ParameterError(f"duplicate config key {key!r} (line {lineno})")
        try:
            values[key] = int(value) if key in _INT_FIELDS else float(value)
        except ValueError:
            raise ParameterError(f"config key {key!r}: cannot parse {value!r}") from None
    return values


def default_params(train_length: int = DEFAULT_TRAIN_LENGTH, **overrides) -> ProtocolParams:
    """Default parameters for a train of ``train_length`` pulses.

    The dark-count probability scales as 1e-9 per pulse unless overridden.
    """
    overrides.setdefault("dark_count", DARK_COUNT_PER_PULSE * train_length)
    try:
        return ProtocolParams(train_length=train_length, **overrides)
    except TypeError as exc:
        raise ParameterError(str(exc)) from None


@dataclass(frozen=True, eq=False)
class TrainEncoding:
    """Per-pulse random phases and key bits for one party's train.

    When ``phase_slices`` is given, every phase must lie on the grid
    ``2*pi*j/M`` and the integer slice indices are kept in ``slices`` so
    phase matching can be decided exactly.
    """

    phases: np.ndarray
    bits: np.ndarray
    phase_slices: Optional[int] = None
    slices: Optional[np.ndarray] = field(default=None, repr=False)

    def __post_init__(self):
        phases = np.array(self.phases, dtype=float)
        bits = np.array(self.bits)
        if phases.ndim != 1 or bits.ndim != 1 or phases.shape != bits.shape:
            raise ParameterError("phases and bits must be 1-D arrays of equal length")
        if phases.size < 2:
            raise ParameterError("a train needs at least 2 pulses")
        if not np.all((phases >= 0.0) & (phases < TWO_PI)):
            raise ParameterError("phases must lie in [0, 2*pi)")
        if not np.all((bits == 0) | (bits == 1)):
            raise ParameterError("bits must be 0 or 1")
        bits = bits.astype(np.int8)

        slices = None
        if self.phase_slices is not None:
            m = self.phase_slices
            if m < 2:
                raise ParameterError(f"phase_slices must be >= 2, got {m}")
            if self.slices is not None:
                slices = np.array(self.slices, dtype=np.int64)
            else:
                slices = np.rint(phases * m / TWO_PI).astype(np.int64) % m
            if not np.allclose(slices * (TWO_PI / m), phases, rtol=0.0, atol=1e-9):
                raise ParameterError(f"phases are not on the {m}-slice grid")

        for arr in (phases, bits, slices):
            if arr is not None:
                arr.flags.writeable = False
        object.__setattr__(self, "phases", phases)
        object.__setattr__(self, "bits", bits)
        object.__setattr__(self, "slices", slices)

    def __len__(self) -> int:
        return self.phases.size

    def __eq__(self, other):
        if not isinstance(other, TrainEncoding):
            return NotImplemented
        return (
            self.phase_slices == other.phase_slices
            and np.array_equal(self.phases, other.phases)
            and np.array_equal(self.bits, other.bits)
        )

    __hash__ = None

    @classmethod
    def from_slices(cls, slices, bits, phase_slices: int) -> "TrainEncoding":
        slices = np.asarray(slices, dtype=np.int64)
        return cls(slices * (TWO_PI / phase_slices), bits, phase_slices, slices)

    @classmethod
    def _trusted(cls, slices: np.ndarray, bits: np.ndarray, phase_slices: int) -> "TrainEncoding":
        # skips validation; callers guarantee grid membership and 0/1 bits
        self = object.__new__(cls)
        phases = slices * (TWO_PI / phase_slices)
        for arr in (phases, bits, slices):
            arr.flags.writeable = False
        object.__setattr__(self, "phases", phases)
        object.__setattr__(self, "bits", bits)
        object.__setattr__(self, "phase_slices", phase_slices)
        object.__setattr__(self, "slices", slices)
        return self


def random_train(L: int, rng: np.random.Generator, phase_slices: int = DEFAULT_PHASE_SLICES) -> TrainEncoding:
    """Draw a train with uniform grid phases and uniform key bits."""
    if L < 2:
        raise ParameterError(f"L must be >= 2, got {L}")
    if phase_slices < 2:
        raise ParameterError(f"phase_slices must be >= 2, got {phase_slices}")
    slices = rng.integers(0, phase_slices, size=L)
    bits = rng.integers(0, 2, size=L, dtype=np.int8)
    return TrainEncoding._trusted(slices, bits, phase_slices)


@dataclass(frozen=True)
class DetectionEvent:
    """Charlie's announced success detection: clicks at bins ``m`` and ``n``."""

    m: int
    n: int
    detector_m: Detector
    detector_n: Detector

    def __post_init__(self):
        if self.m < 0 or self.n < 0:
            raise ParameterError("time-stamps must be non-negative")
        if self.m == self.n:
            raise ParameterError("a success detection needs two distinct time bins")

    @property
    def detector_class(self) -> DetectorClass:
        return DetectorClass.of(self.detector_m, self.detector_n)


@dataclass(frozen=True)
class SiftResult:
    match_class: MatchClass
    detector_class: DetectorClass
    s_a: Optional[int] = None
    s_b: Optional[int] = None

    def __post_init__(self):
        if self.match_class is MatchClass.NONE:
            if self.s_a is not None or self.s_b is not None:
                raise ParameterError("unmatched results carry no sifted bits")
        elif self.s_a not in (0, 1) or self.s_b not in (0, 1):
            raise ParameterError("sifted bits must be 0 or 1")

    @property
    def agree(self) -> bool:
        return self.s_a == self.s_b


@dataclass(frozen=True)
class RatePoint:
    """One closed-form evaluation of the key-rate pipeline."""

    eta: float
    q_mu: float
    e_mu: float
    e_src: float
    e_p: float
    rate: float
    linear_bound: float

    def __post_init__(self):
        for name in ("eta", "q_mu", "e_mu", "e_src"):
            value = getattr(self, name)
            if not 0.0 <= value <= 1.0:
                raise ParameterError(f"{name} must be in [0, 1], got {value}")
        if not 0.0 <= self.e_p <= 0.5:
            raise ParameterError(f"e_p must be in [0, 0.5], got {self.e_p}")
        if self.rate < 0 or self.linear_bound < 0:
            raise ParameterError("rates must be non-negative")
