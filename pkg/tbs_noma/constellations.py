"""
Constellations, superposition coding and maximum-likelihood detection.

Gray-mapped BPSK, QPSK and 16-QAM with unit average symbol energy, the two-user
power-domain superposition the base station transmits, and the joint ML
detectors used by the near user (SIC stage) and by the far user (after
combining the direct and relayed copies).

Bit mappings (bit vectors are MSB first, symbol index = their integer value):

    BPSK   0 -> +1, 1 -> -1
    QPSK   (b0, b1) -> ((1 - 2 b0) + j (1 - 2 b1)) / sqrt(2)
    16-QAM (b0, b1, b2, b3) -> (L(b0, b1) + j L(b2, b3)) / sqrt(10),
           L(s, m) = (1 - 2 s) (3 - 2 m), i.e. per-axis Gray 10, 11, 01, 00
           on the levels -3, -1, +1, +3

Symbol index of a superposed pair is x1_index * M2 + x2_index; ML ties resolve
to the lowest composite index.
"""

import logging
from dataclasses import dataclass, field
from enum import Enum
from functools import lru_cache
from typing import Dict, Optional, Sequence, Tuple, Union

import numpy as np

from .errors import ConfigurationError, InputShapeError

logger = logging.getLogger(__name__)

PA_TOLERANCE = 1e-9

BitsLike = Union[Sequence[int], np.ndarray]


class SchemeKind(Enum):
    """Modulation schemes available to either user."""

    BPSK = "bpsk"
    QPSK = "qpsk"
    QAM16 = "16qam"


@dataclass(frozen=True)
class Scheme:
    """A Gray-mapped, unit-energy constellation."""

    kind: SchemeKind
    order: int
    bits_per_symbol: int
    points: np.ndarray = field(repr=False, compare=False)
    labels: np.ndarray = field(repr=False, compare=False)

    @property
    def name(self) -> str:
        return self.kind.name

    @property
    def hamming(self) -> np.ndarray:
        """(M, M) matrix of bit differences between symbol indices."""
        return _hamming_table(self.kind)

    @property
    def relay_beta(self) -> float:
        """Interference-free beta: BEP of a lone symbol is Q(sqrt(relay_beta * snr))."""
        # half the squared minimum distance, per bit dimension
        d_min = np.min(np.abs(self.points[:, None] - self.points[None, :])
                       + np.eye(self.order) * 1e9)
        return float(d_min ** 2 / 2.0)


def _bit_labels(order: int) -> np.ndarray:
    bits = int(np.log2(order))
    indices = np.arange(order)
    shifts = np.arange(bits - 1, -1, -1)
    return ((indices[:, None] >> shifts[None, :]) & 1).astype(np.uint8)


def _build_points(kind: SchemeKind, labels: np.ndarray) -> np.ndarray:
    signs = 1.0 - 2.0 * labels
    if kind is SchemeKind.BPSK:
        return signs[:, 0].astype(np.complex128)
    if kind is SchemeKind.QPSK:
        return (signs[:, 0] + 1j * signs[:, 1]) / np.sqrt(2.0)
    real = signs[:, 0] * (3.0 - 2.0 * labels[:, 1])
    imag = signs[:, 2] * (3.0 - 2.0 * labels[:, 3])
    return (real + 1j * imag) / np.sqrt(10.0)


@lru_cache(maxsize=None)
def get_scheme(kind: SchemeKind) -> Scheme:
    """Return the (cached) constellation for a scheme kind."""
    order = {SchemeKind.BPSK: 2, SchemeKind.QPSK: 4, SchemeKind.QAM16: 16}[kind]
    labels = _bit_labels(order)
    points = _build_points(kind, labels)
    points.setflags(write=False)
    labels.setflags(write=False)
    return Scheme(kind, order, int(np.log2(order)), points, labels)


@lru_cache(maxsize=None)
def _hamming_table(kind: SchemeKind) -> np.ndarray:
    labels = get_scheme(kind).labels
    table = np.sum(labels[:, None, :] != labels[None, :, :], axis=2)
    table.setflags(write=False)
    return table


BPSK = get_scheme(SchemeKind.BPSK)
QPSK = get_scheme(SchemeKind.QPSK)
QAM16 = get_scheme(SchemeKind.QAM16)

# (near user UE1, far user UE2) per mode
MODES: Dict[int, Tuple[SchemeKind, SchemeKind]] = {
    1: (SchemeKind.BPSK, SchemeKind.BPSK),
    2: (SchemeKind.BPSK, SchemeKind.QPSK),
    3: (SchemeKind.QPSK, SchemeKind.BPSK),
    4: (SchemeKind.QPSK, SchemeKind.QPSK),
    5: (SchemeKind.QAM16, SchemeKind.BPSK),
    6: (SchemeKind.QAM16, SchemeKind.QPSK),
}


def mode_schemes(mode_id: int) -> Tuple[Scheme, Scheme]:
    """Return the (UE1, UE2) constellations of a modulation mode."""
    if mode_id not in MODES:
        raise ConfigurationError(f"unknown mode {mode_id!r}, expected 1..6")
    near, far = MODES[mode_id]
    return get_scheme(near), get_scheme(far)


def check_power_split(a1: float, a2: float, allow_zero: bool = False) -> None:
    """Raise ConfigurationError unless a1 + a2 = 1 and 0 < a1 < a2."""
    if abs(a1 + a2 - 1.0) > PA_TOLERANCE:
        raise ConfigurationError(f"a1 + a2 must equal 1, got {a1} + {a2}")
    if a1 < 0.0 or (a1 == 0.0 and not allow_zero):
        raise ConfigurationError(f"a1 must be positive, got {a1}")
    if a1 >= a2:
        raise ConfigurationError(f"near-user share a1={a1} must be below a2={a2}")


def bits_to_index(bits: BitsLike, scheme: Scheme) -> int:
    vector = np.asarray(bits).ravel()
    if vector.size != scheme.bits_per_symbol:
        raise InputShapeError(
            f"{scheme.name} needs {scheme.bits_per_symbol} bits, got {vector.size}"
        )
    if np.any((vector != 0) & (vector != 1)):
        raise InputShapeError(f"bits must be 0 or 1, got {vector.tolist()}")
    index = 0
    for bit in vector:
        index = (index << 1) | int(bit)
    return index


def modulate(bits: BitsLike, scheme: Scheme) -> complex:
    """Map one bit vector onto its Gray-coded constellation point."""
    return complex(scheme.points[bits_to_index(bits, scheme)])


def demodulate(symbol: complex, scheme: Scheme) -> np.ndarray:
    """Single-user ML (nearest point) decision, returned as a bit vector."""
    index = int(np.argmin(np.abs(symbol - scheme.points)))
    return scheme.labels[index].copy()


@dataclass(frozen=True)
class SuperposedSymbol:
    composite: complex
    x1_index: int
    x2_index: int


@lru_cache(maxsize=64)
def composite_alphabet(mode_id: int, a1: float, a2: float
                       ) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
    """All M1*M2 superposed points with their (x1, x2) index components."""
    near, far = mode_schemes(mode_id)
    x1_index = np.repeat(np.arange(near.order), far.order)
    x2_index = np.tile(np.arange(far.order), near.order)
    points = np.sqrt(a1) * near.points[x1_index] + np.sqrt(a2) * far.points[x2_index]
    for array in (points, x1_index, x2_index):
        array.setflags(write=False)
    return points, x1_index, x2_index


def superpose(bits1: BitsLike, bits2: BitsLike, a1: float, a2: float,
              mode_id: int) -> SuperposedSymbol:
    """Superposition-coded symbol sqrt(a1) x1 + sqrt(a2) x2 (before sqrt(Ps))."""
    check_power_split(a1, a2, allow_zero=True)
    near, far = mode_schemes(mode_id)
    i1 = bits_to_index(bits1, near)
    i2 = bits_to_index(bits2, far)
    composite = np.sqrt(a1) * near.points[i1] + np.sqrt(a2) * far.points[i2]
    return SuperposedSymbol(complex(composite), i1, i2)


def sic_detect_far_indices(y: np.ndarray, h: np.ndarray, sqrt_ps: float,
                           mode_id: int, a1: float, a2: float) -> np.ndarray:
    """Vectorised joint ML over the composite alphabet; returns x2 indices."""
    points, _, x2_index = composite_alphabet(mode_id, a1, a2)
    y = np.atleast_1d(np.asarray(y, dtype=np.complex128))
    h = np.atleast_1d(np.asarray(h, dtype=np.complex128))
    metric = np.abs(y[:, None] - sqrt_ps * h[:, None] * points[None, :]) ** 2
    return x2_index[np.argmin(metric, axis=1)]


def sic_detect_far(y: complex, h: complex, sqrt_ps: float, mode_id: int,
                   a1: float, a2: float) -> Tuple[int, np.ndarray]:
    """Near-user detection of the far user's symbol (first SIC stage)."""
    index = int(sic_detect_far_indices(np.array([y]), np.array([h]),
                                       sqrt_ps, mode_id, a1, a2)[0])
    _, far = mode_schemes(mode_id)
    return index, far.labels[index].copy()


def detect_combined_indices(y2: np.ndarray, h_direct: np.ndarray,
                            h_relay: np.ndarray, relay_active: np.ndarray,
                            sqrt_ps: float, sqrt_pr: float, mode_id: int,
                            a1: float, a2: float) -> np.ndarray:
    """
    Vectorised far-user ML on the MRC output y2 = y_d h_d* + y_r h_r*.

    The hypothesis for the pair (s1, s2) is
    sqrt(Ps) |h_d|^2 (sqrt(a1) s1 + sqrt(a2) s2) + sqrt(Pr) |h_r|^2 s2,
    the relay term only where the relay transmitted. The relay is assumed
    to have forwarded the hypothesised s2.
    """
    points, _, x2_index = composite_alphabet(mode_id, a1, a2)
    _, far = mode_schemes(mode_id)
    y2 = np.atleast_1d(np.asarray(y2, dtype=np.complex128))
    direct_gain = sqrt_ps * np.abs(np.atleast_1d(h_direct)) ** 2
    relay_gain = np.where(np.atleast_1d(relay_active),
                          sqrt_pr * np.abs(np.atleast_1d(h_relay)) ** 2, 0.0)
    hypotheses = (direct_gain[:, None] * points[None, :]
                  + relay_gain[:, None] * far.points[x2_index][None, :])
    metric = np.abs(y2[:, None] - hypotheses) ** 2
    return x2_index[np.argmin(metric, axis=1)]


def detect_combined(y2: complex, h_direct: complex, h_relay: Optional[complex],
                    sqrt_ps: float, sqrt_pr: float, mode_id: int,
                    a1: float, a2: float) -> np.ndarray:
    """Far-user ML decision after combining; h_relay=None means the relay was idle."""
    active = h_relay is not None
    index = int(detect_combined_indices(
        np.array([y2]), np.array([h_direct]),
        np.array([h_relay if active else 0.0]), np.array([active]),
        sqrt_ps, sqrt_pr, mode_id, a1, a2,
    )[0])
    _, far = mode_schemes(mode_id)
    return far.labels[index].copy()
