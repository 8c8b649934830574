"""Simulator and closed-form analyzer for multiple-pulses phase-matching QKD."""

from .model import (
    Detector,
    DetectionEvent,
    DetectorClass,
    MatchClass,
    ParameterError,
    ProtocolParams,
    RatePoint,
    SiftResult,
    TrainEncoding,
    default_params,
    random_train,
)

__all__ = [
    "Detector",
    "DetectionEvent",
    "DetectorClass",
    "MatchClass",
    "ParameterError",
    "ProtocolParams",
    "RatePoint",
    "SiftResult",
    "TrainEncoding",
    "default_params",
    "random_train",
]
