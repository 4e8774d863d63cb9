"""Tests for modulation, superposition and ML detection."""

import math

import numpy as np
import pytest

from tbs_noma.constellations import (
    BPSK,
    MODES,
    QAM16,
    QPSK,
    SchemeKind,
    composite_alphabet,
    demodulate,
    detect_combined,
    detect_combined_indices,
    mode_schemes,
    modulate,
    sic_detect_far,
    sic_detect_far_indices,
    superpose,
)
from tbs_noma.errors import ConfigurationError, InputShapeError


def test_bpsk_mapping():
    assert modulate([0], BPSK) == 1 + 0j
    assert modulate([1], BPSK) == -1 + 0j


def test_qpsk_corner():
    assert modulate([0, 0], QPSK) == pytest.approx((1 + 1j) / math.sqrt(2))
    assert modulate([1, 1], QPSK) == pytest.approx((-1 - 1j) / math.sqrt(2))


@pytest.mark.parametrize("scheme", [BPSK, QPSK, QAM16])
def test_unit_energy(scheme):
    assert np.mean(np.abs(scheme.points) ** 2) == pytest.approx(1.0, abs=1e-12)


@pytest.mark.parametrize("scheme", [BPSK, QPSK, QAM16])
def test_gray_nearest_neighbours_differ_in_one_bit(scheme):
    distances = np.abs(scheme.points[:, None] - scheme.points[None, :])
    np.fill_diagonal(distances, np.inf)
    neighbours = np.isclose(distances, distances.min())
    assert np.all(scheme.hamming[neighbours] == 1)


def test_wrong_bit_length():
    with pytest.raises(InputShapeError):
        modulate([0, 1], BPSK)
    with pytest.raises(InputShapeError):
        modulate([0, 1, 1], QAM16)


def test_non_binary_bits():
    with pytest.raises(InputShapeError):
        modulate([2, 0], QPSK)


@pytest.mark.parametrize("scheme", [BPSK, QPSK, QAM16])
def test_demodulate_inverts_modulate(scheme):
    for label in scheme.labels:
        assert np.array_equal(demodulate(modulate(label, scheme), scheme), label)


def test_relay_beta():
    assert BPSK.relay_beta == pytest.approx(2.0)
    assert QPSK.relay_beta == pytest.approx(1.0)
    assert QAM16.relay_beta == pytest.approx(0.2)


def test_mode_pairs():
    assert MODES[2] == (SchemeKind.BPSK, SchemeKind.QPSK)
    assert MODES[3] == (SchemeKind.QPSK, SchemeKind.BPSK)
    assert MODES[6] == (SchemeKind.QAM16, SchemeKind.QPSK)
    with pytest.raises(ConfigurationError):
        mode_schemes(7)


def test_superpose_example():
    symbol = superpose([0], [0], 0.1, 0.9, mode_id=1)
    assert symbol.composite == pytest.approx(math.sqrt(0.1) + math.sqrt(0.9))
    assert symbol.composite.real == pytest.approx(1.2649, abs=1e-4)
    assert (symbol.x1_index, symbol.x2_index) == (0, 0)


@pytest.mark.parametrize("a1, a2", [(0.5, 0.5), (0.6, 0.4), (0.1, 0.8)])
def test_superpose_rejects_bad_power_split(a1, a2):
    with pytest.raises(ConfigurationError):
        superpose([0], [0], a1, a2, mode_id=1)


def test_superpose_without_near_user_power():
    symbol = superpose([1], [1], 0.0, 1.0, mode_id=1)
    assert symbol.composite == pytest.approx(-1.0)


@pytest.mark.parametrize("mode_id", sorted(MODES))
def test_composite_alphabet(mode_id):
    near, far = mode_schemes(mode_id)
    points, x1_index, x2_index = composite_alphabet(mode_id, 0.1, 0.9)
    assert points.size == near.order * far.order
    assert np.mean(np.abs(points) ** 2) == pytest.approx(1.0, abs=1e-12)
    expected = math.sqrt(0.1) * near.points[x1_index] + math.sqrt(0.9) * far.points[x2_index]
    assert np.allclose(points, expected)


@pytest.mark.parametrize("mode_id", sorted(MODES))
def test_sic_detection_noiseless(mode_id):
    points, _, x2_index = composite_alphabet(mode_id, 0.1, 0.9)
    h = np.full(points.size, 0.7 - 0.4j)
    y = 3.0 * h * points
    assert np.array_equal(sic_detect_far_indices(y, h, 3.0, mode_id, 0.1, 0.9), x2_index)


def test_sic_detect_far_returns_bits():
    _, far = mode_schemes(2)
    symbol = superpose([1], [1, 0], 0.1, 0.9, mode_id=2)
    index, bits = sic_detect_far(2.0 * symbol.composite, 1.0 + 0j, 2.0, 2, 0.1, 0.9)
    assert index == symbol.x2_index
    assert np.array_equal(bits, [1, 0])


@pytest.mark.parametrize("mode_id", sorted(MODES))
def test_combined_detection_noiseless(mode_id):
    _, far = mode_schemes(mode_id)
    points, _, x2_index = composite_alphabet(mode_id, 0.2, 0.8)
    n = points.size
    h_d = np.full(n, 0.3 + 0.5j)
    h_r = np.full(n, -0.8 + 0.2j)
    sqrt_ps, sqrt_pr = 2.0, math.sqrt(2.0)
    y2 = (sqrt_ps * h_d * points) * np.conj(h_d) + (sqrt_pr * h_r * far.points[x2_index]) * np.conj(h_r)
    decided = detect_combined_indices(y2, h_d, h_r, np.ones(n, dtype=bool), sqrt_ps, sqrt_pr,
                                      mode_id, 0.2, 0.8)
    assert np.array_equal(decided, x2_index)


def test_combined_detection_without_relay():
    symbol = superpose([0, 1], [1], 0.2, 0.8, mode_id=3)
    h = 0.9 - 0.1j
    y2 = (1.5 * h * symbol.composite) * np.conj(h)
    bits = detect_combined(y2, h, None, 1.5, 1.0, 3, 0.2, 0.8)
    assert np.array_equal(bits, [1])


def _noisy_slots(mode_id, a1, a2, n, seed):
    rng = np.random.default_rng(seed)
    points, _, x2_index = composite_alphabet(mode_id, a1, a2)
    _, far = mode_schemes(mode_id)
    pick = rng.integers(points.size, size=n)
    draws = rng.standard_normal((4, n)) + 1j * rng.standard_normal((4, n))
    h_d, h_r, n_d, n_r = draws / math.sqrt(2)
    relayed = rng.integers(far.order, size=n)
    y_d = 2.0 * h_d * points[pick] + 0.8 * n_d
    y_r = 1.5 * h_r * far.points[relayed] + 0.8 * n_r
    return h_d, h_r, y_d, y_r


@pytest.mark.parametrize("mode_id", sorted(MODES))
@pytest.mark.parametrize("scale", [3.0, -0.5j, 0.2 + 1.7j])
def test_sic_detection_scale_invariant(mode_id, scale):
    h, _, y, _ = _noisy_slots(mode_id, 0.2, 0.8, 200, seed=11)
    plain = sic_detect_far_indices(y, h, 2.0, mode_id, 0.2, 0.8)
    scaled = sic_detect_far_indices(scale * y, scale * h, 2.0, mode_id, 0.2, 0.8)
    assert np.array_equal(plain, scaled)
    index, _ = sic_detect_far(complex(scale * y[0]), complex(scale * h[0]), 2.0, mode_id,
                              0.2, 0.8)
    assert index == plain[0]


@pytest.mark.parametrize("mode_id", sorted(MODES))
@pytest.mark.parametrize("scale", [3.0, -0.5j, 0.2 + 1.7j])
def test_combined_detection_scale_invariant(mode_id, scale):
    h_d, h_r, y_d, y_r = _noisy_slots(mode_id, 0.2, 0.8, 200, seed=12)
    active = np.ones(h_d.size, dtype=bool)

    def decide(c):
        y2 = (c * y_d) * np.conj(c * h_d) + (c * y_r) * np.conj(c * h_r)
        return detect_combined_indices(y2, c * h_d, c * h_r, active, 2.0, 1.5, mode_id, 0.2, 0.8)

    assert np.array_equal(decide(1.0), decide(scale))
    y2 = complex((scale * y_d[0]) * np.conj(scale * h_d[0])
                 + (scale * y_r[0]) * np.conj(scale * h_r[0]))
    _, far = mode_schemes(mode_id)
    bits = detect_combined(y2, complex(scale * h_d[0]), complex(scale * h_r[0]), 2.0, 1.5,
                           mode_id, 0.2, 0.8)
    assert np.array_equal(bits, far.labels[decide(1.0)[0]])


@pytest.mark.parametrize("mode_id", sorted(MODES))
def test_combined_detection_is_sign_per_dimension(mode_id):
    h_d, h_r, y_d, y_r = _noisy_slots(mode_id, 0.2, 0.8, 500, seed=13)
    _, far = mode_schemes(mode_id)
    y2 = y_d * np.conj(h_d) + y_r * np.conj(h_r)
    decided = far.points[detect_combined_indices(y2, h_d, h_r, np.ones(y2.size, dtype=bool),
                                                 2.0, 1.5, mode_id, 0.2, 0.8)]
    assert np.array_equal(np.sign(decided.real), np.sign(y2.real))
    if far.order > 2:
        assert np.array_equal(np.sign(decided.imag), np.sign(y2.imag))


@pytest.mark.parametrize("a1", [0.05, 0.1, 0.2, 0.3, 0.45])
def test_mode1_distances_across_the_decision(a1):
    a2 = 1.0 - a1
    points, _, x2_index = composite_alphabet(1, a1, a2)
    inner, outer = 2 * abs(math.sqrt(a2) - math.sqrt(a1)), 2 * (math.sqrt(a2) + math.sqrt(a1))
    for x2 in (0, 1):
        group = points[x2_index == x2]
        others = points[x2_index != x2]
        # each point's mirror image across the boundary carries the other x2
        assert all(np.isclose(others, -p).any() for p in group)
        assert sorted(2 * np.abs(group)) == pytest.approx([inner, outer])
        nearest = np.min(np.abs(group[:, None] - others[None, :]))
        assert nearest == pytest.approx(inner)
