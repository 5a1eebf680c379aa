"""Straggler-resilient, privacy-preserving split vertical federated learning.

Clients secret-share fixed-point data and polynomial-network weights with
Lagrange coded computing; the server decodes the exact sum of all clients'
embeddings from any threshold-sized subset of responders.
"""

from .errors import (
    DuplicatePoints,
    EmptyResponderSet,
    FedVSError,
    InsufficientResponders,
    MissingShare,
    OverflowBoundViolation,
    OverflowRange,
    ShapeMismatch,
    ZeroInverse,
)
from .field import MERSENNE_61, EvalPoints, FieldElement, PrimeField, interpolate_eval, lagrange_coeffs
from .lcc import LccConfig, decode_sum, encode_data, encode_model
from .quant import QuantConfig, dequantize_embedding, quantize_data, quantize_model
from .config import ExperimentConfig, load_config
from .training import Experiment, train

__all__ = [
    "DuplicatePoints",
    "EmptyResponderSet",
    "EvalPoints",
    "Experiment",
    "ExperimentConfig",
    "FedVSError",
    "FieldElement",
    "InsufficientResponders",
    "LccConfig",
    "MERSENNE_61",
    "MissingShare",
    "OverflowBoundViolation",
    "OverflowRange",
    "PrimeField",
    "QuantConfig",
    "ShapeMismatch",
    "ZeroInverse",
    "decode_sum",
    "dequantize_embedding",
    "encode_data",
    "encode_model",
    "interpolate_eval",
    "lagrange_coeffs",
    "load_config",
    "quantize_data",
    "quantize_model",
    "train",
]
