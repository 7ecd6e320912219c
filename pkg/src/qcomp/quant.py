"""Additive quantization noise model (AQNM) for low-resolution DACs.

A b-bit MMSE scalar quantizer is linearized as ``x_q = alpha * x + q`` where
``q`` is uncorrelated with ``x`` and has diagonal covariance
``alpha * beta * diag(W W^H)``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

INF_BITS = math.inf

# Normalized MSE of the Lloyd-Max quantizer for a unit-variance Gaussian.
# The 5-bit entry is the recomputed 0.002505; the commonly quoted 0.002499
# is off in the third significant digit.
BETA_TABLE = {
    1: 0.3634,
    2: 0.1175,
    3: 0.03454,
    4: 0.009497,
    5: 0.002505,
}


@dataclass(frozen=True)
class QuantModel:
    """Quantization gain/distortion pair for a given resolution.

    Attributes
    ----------
    bits : float
        Number of bits, ``math.inf`` for an ideal converter.
    beta : float
        Normalized distortion factor in ``[0, 1)``.
    """

    bits: float
    beta: float

    @property
    def alpha(self) -> float:
        return 1.0 - self.beta

    @property
    def is_ideal(self) -> bool:
        return self.beta == 0.0


def parse_bits(value) -> float:
    """Turn ``3``, ``"3"``, ``"inf"`` or ``math.inf`` into a bit count."""
    if isinstance(value, str):
        s = value.strip().lower()
        if s in ("inf", "infinite", "infinity", "oo"):
            return INF_BITS
        value = float(s)
    bits = float(value)
    if math.isinf(bits) and bits > 0:
        return INF_BITS
    if bits != int(bits):
        raise ValueError(f"bits must be an integer or inf, got {value!r}")
    return bits


def format_bits(bits: float) -> str:
    return "inf" if math.isinf(bits) else str(int(bits))


def from_bits(bits) -> QuantModel:
    """Build the AQNM parameters for ``bits`` of resolution.

    Tabulated values are used for 1..5 bits, ``beta = 0`` for infinite
    resolution and the high-resolution approximation
    ``(pi * sqrt(3) / 2) * 2**(-2b)`` above 5 bits.
    """
    b = parse_bits(bits)
    if b <= 0:
        raise ValueError(f"bits must be positive, got {bits!r}")
    if math.isinf(b):
        return QuantModel(bits=INF_BITS, beta=0.0)
    b_int = int(b)
    if b_int in BETA_TABLE:
        beta = BETA_TABLE[b_int]
    else:
        beta = math.pi * math.sqrt(3.0) / 2.0 * 2.0 ** (-2 * b_int)
    return QuantModel(bits=float(b_int), beta=beta)


def quant_noise_cov(model: QuantModel, W: np.ndarray) -> np.ndarray:
    """Quantization noise covariance ``alpha*beta*diag(W W^H)`` of one BS.

    ``W`` is ``N_b x N_u``; returns a real diagonal ``N_b x N_b`` matrix.
    """
    W = np.asarray(W)
    if W.ndim == 1:
        W = W[:, None]
    row_power = np.sum(np.abs(W) ** 2, axis=1)
    return np.diag(model.alpha * model.beta * row_power)
