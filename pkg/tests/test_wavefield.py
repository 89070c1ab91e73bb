"""Mode-sum fields: closed forms vs independent oracles."""

import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from currentlab import (CausalClass, Mode, ScalarWavePacket, SpacetimePoint,
                        VectorWavePacket, ZeroNormError, classification_map,
                        classify_components, divergence, evaluate_gradient,
                        evaluate_psi, normalize)

from helpers import TWO_PI, make_packet, random_packet


def mode_sum_psi(packet, t, x):
    """Direct mode sum, written independently of the field engine."""
    total = 0.0j
    for mode in packet.modes:
        k = TWO_PI * mode.harmonic / packet.box_length
        w = math.hypot(k, packet.mass)
        total += mode.coeff * np.exp(-1j * (w * t - k * x))
    return total


def fd_gradient(packet, t, x, h=1e-5):
    dpsi_dt = (packet.psi_at(t + h, x) - packet.psi_at(t - h, x)) / (2 * h)
    dpsi_dx = (packet.psi_at(t, x + h) - packet.psi_at(t, x - h)) / (2 * h)
    return dpsi_dt, dpsi_dx


def fd_current_divergence(packet, t, x, h=1e-4):
    d0 = (packet.current_at(t + h, x)[0] - packet.current_at(t - h, x)[0])
    d1 = (packet.current_at(t, x + h)[1] - packet.current_at(t, x - h)[1])
    return (d0 + d1) / (2 * h)


def test_plane_wave_closed_form():
    c = 0.3 - 0.4j
    packet = make_packet([(2, c)], mass=1.5, unit_flux=False)
    k = 2.0
    w = math.hypot(k, 1.5)
    j0, j1 = packet.current_at(0.7, 1.1)
    assert j0 == pytest.approx(2 * abs(c) ** 2 * w, rel=1e-14)
    assert j1 == pytest.approx(2 * abs(c) ** 2 * k, rel=1e-14)
    # constant in spacetime up to phase-product roundoff
    j0b, j1b = packet.current_at(-3.2, 5.9)
    assert j0b == pytest.approx(j0, rel=1e-14)
    assert j1b == pytest.approx(j1, rel=1e-14)


def test_psi_matches_direct_mode_sum():
    rng = np.random.default_rng(11)
    for _ in range(10):
        packet = random_packet(rng, unit_flux=False)
        for _ in range(20):
            t = float(rng.uniform(-5, 5))
            x = float(rng.uniform(-1, 8))
            got = evaluate_psi(packet, SpacetimePoint(t, x))
            want = mode_sum_psi(packet, t, x)
            assert got == pytest.approx(want, rel=1e-12, abs=1e-12)


def test_psi_periodic_in_x():
    packet = make_packet([(3, 1.0), (-2, 0.5j)], unit_flux=False)
    for t, x in [(0.0, 0.3), (1.7, 4.0)]:
        a = packet.psi_at(t, x)
        b = packet.psi_at(t, x + packet.box_length)
        assert a == pytest.approx(b, rel=1e-12)


def test_gradient_matches_finite_differences():
    rng = np.random.default_rng(21)
    for _ in range(20):
        packet = random_packet(rng, unit_flux=False)
        t = float(rng.uniform(-3, 3))
        x = float(rng.uniform(0, TWO_PI))
        gt, gx = evaluate_gradient(packet, SpacetimePoint(t, x))
        ft, fx = fd_gradient(packet, t, x)
        scale = max(1.0, abs(gt), abs(gx))
        assert abs(gt - ft) < 1e-6 * scale
        assert abs(gx - fx) < 1e-6 * scale


def test_current_is_bilinear_in_psi_and_gradient():
    rng = np.random.default_rng(31)
    for _ in range(20):
        packet = random_packet(rng, unit_flux=False)
        t = float(rng.uniform(-3, 3))
        x = float(rng.uniform(0, TWO_PI))
        psi = packet.psi_at(t, x)
        gt, gx = packet.gradient_at(t, x)
        # j^mu = i psi* dpsi^mu - i psi dpsi*^mu, index raised: d^t = d_t, d^x = -d_x
        want0 = (1j * (np.conj(psi) * gt - psi * np.conj(gt))).real
        want1 = (-1j * (np.conj(psi) * gx - psi * np.conj(gx))).real
        j0, j1 = packet.current_at(t, x)
        assert j0 == pytest.approx(want0, rel=1e-12, abs=1e-13)
        assert j1 == pytest.approx(want1, rel=1e-12, abs=1e-13)


def test_divergence_vanishes_closed_form_and_fd():
    rng = np.random.default_rng(41)
    for _ in range(10):
        packet = random_packet(rng, unit_flux=False)
        for _ in range(10):
            p = SpacetimePoint(float(rng.uniform(-4, 4)),
                               float(rng.uniform(-1, 7)))
            assert abs(divergence(packet, p)) < 1e-12 * packet.divergence_scale
            assert abs(fd_current_divergence(packet, p.t, p.x)) \
                < 1e-6 * packet.current_scale


def test_normalize_gives_unit_total_flux():
    packet = make_packet([(0, 2.0), (4, 1.0 - 1.0j)], unit_flux=False)
    assert packet.total_flux() != pytest.approx(1.0)
    unit = normalize(packet)
    assert unit.total_flux() == pytest.approx(1.0, abs=1e-14)


def test_zero_packet_rejected():
    with pytest.raises(ZeroNormError):
        ScalarWavePacket(1.0, TWO_PI, [])
    with pytest.raises(ZeroNormError):
        ScalarWavePacket(1.0, TWO_PI, [Mode(1, 0.0)])


def test_massless_zero_harmonic_rejected():
    with pytest.raises(ValueError):
        ScalarWavePacket(0.0, TWO_PI, [Mode(0, 1.0)])


def test_classify_component_table():
    cases = [
        ((1.0, 0.0), CausalClass.TIMELIKE_FUTURE),
        ((2.0, -1.0), CausalClass.TIMELIKE_FUTURE),
        ((-1.0, 0.5), CausalClass.TIMELIKE_PAST),
        ((1.0, 1.0), CausalClass.NULL),
        ((-0.5, 0.5), CausalClass.NULL),
        ((0.0, 1.0), CausalClass.SPACELIKE),
        ((0.3, -2.0), CausalClass.SPACELIKE),
        ((0.0, 0.0), CausalClass.ZERO),
        ((1e-15, -1e-15), CausalClass.ZERO),
    ]
    for (v0, v1), want in cases:
        assert classify_components(v0, v1) is want


def test_classify_tolerance_bands():
    # within the relative null band
    assert classify_components(1.0, 1.0 + 1e-11) is CausalClass.NULL
    # outside it
    assert classify_components(1.0, 1.05) is CausalClass.SPACELIKE
    assert classify_components(1.05, 1.0) is CausalClass.TIMELIKE_FUTURE


def test_classification_map_single_mode_all_future():
    packet = make_packet([(1, 1.0)])
    cmap = classification_map(packet, (0.0, 1.0), (0.0, TWO_PI), 8, 8)
    assert all(c is CausalClass.TIMELIKE_FUTURE for c in cmap.classes)


def test_classification_map_standing_wave_zero_lines():
    packet = make_packet([(1, 1.0), (-1, 1.0)])
    # 65 x-samples put x = pi/2 and 3 pi/2 exactly on the grid
    cmap = classification_map(packet, (0.0, 1.0), (0.0, TWO_PI), 5, 65)
    kinds = set(cmap.classes.tolist())
    assert CausalClass.ZERO in kinds
    zero_x = {round(x, 12) for x, c in zip(cmap.x, cmap.classes)
              if c is CausalClass.ZERO}
    assert zero_x == {round(math.pi / 2, 12), round(3 * math.pi / 2, 12)}


def test_photon_transverse_matches_massless_scalar():
    c = 0.8 + 0.2j
    photon = VectorWavePacket(TWO_PI, [Mode(1, c)], [(0, 0, 1, 0)])
    scalar = ScalarWavePacket(0.0, TWO_PI, [Mode(1, c)])
    for t, x in [(0.0, 0.0), (0.4, 1.3), (-2.0, 5.5)]:
        jp = photon.current_at(t, x)
        js = scalar.current_at(t, x)
        assert abs(jp[0] - js[0]) <= 1e-12 * scalar.current_scale
        assert abs(jp[1] - js[1]) <= 1e-12 * scalar.current_scale
    assert photon.normalized().total_flux() == pytest.approx(1.0, abs=1e-14)


def test_photon_nontransverse_polarization_warns():
    with pytest.warns(UserWarning):
        VectorWavePacket(TWO_PI, [Mode(1, 1.0)], [(1, 0, 0, 0)])


def test_vector_packet_must_be_massless():
    with pytest.raises(ValueError):
        VectorWavePacket(TWO_PI, [Mode(1, 1.0)], [(0, 0, 1, 0)], mass=1.0)


@st.composite
def packets(draw):
    n = draw(st.integers(1, 5))
    hs = draw(st.lists(st.integers(-6, 6), min_size=n, max_size=n,
                       unique=True))
    cs = [complex(draw(st.floats(-2, 2)), draw(st.floats(-2, 2)))
          for _ in range(n)]
    if all(c == 0 for c in cs):
        cs[0] = 1.0 + 0.0j
    mass = draw(st.floats(0.2, 3.0))
    return make_packet(list(zip(hs, cs)), mass=mass, unit_flux=False)


@settings(max_examples=40, deadline=None)
@given(packets(), st.floats(-5, 5), st.floats(-2, 9))
def test_property_current_conserved_and_real(packet, t, x):
    j0, j1 = packet.current_at(t, x)
    assert math.isfinite(j0) and math.isfinite(j1)
    assert abs(packet.divergence_at(t, x)) < 1e-12 * packet.divergence_scale


@settings(max_examples=25, deadline=None)
@given(packets(), st.floats(-3, 3))
def test_property_total_flux_slice_independent(packet, t):
    xs, dx = np.linspace(0.0, packet.box_length, 4096, endpoint=False,
                         retstep=True)
    riemann = float(np.sum(packet.current_grid(np.full_like(xs, t), xs)[0])
                    * dx)
    assert riemann == pytest.approx(packet.total_flux(), rel=1e-10,
                                    abs=1e-10 * packet.current_scale)
