import numpy as np
import pytest
from hypothesis import given, strategies as st

from oamtopo.optics import (
    ComplexField,
    GridSpec,
    Image,
    Message,
    ModeSet,
    encode,
    inner_product,
    intensity,
    lg_field,
    phase,
    phase_winding,
)
from oamtopo.optics import _bilinear


def test_grid_pixel_centers_symmetric():
    g = GridSpec(64, 3.0)
    ax = g.axis()
    assert np.allclose(ax, -ax[::-1])
    assert ax[0] == pytest.approx(-3.0 + g.dx / 2)


def test_grid_validation():
    with pytest.raises(ValueError):
        GridSpec(4, 3.0)
    with pytest.raises(ValueError):
        GridSpec(64, -1.0)


def test_fundamental_mode_real_positive_peak_at_center(grid64):
    f = lg_field(0, grid64)
    a = f.amplitudes
    assert np.allclose(a.imag, 0.0)
    assert np.all(a.real > 0)
    r, c = np.unravel_index(np.argmax(np.abs(a)), a.shape)
    side = grid64.side
    assert r in (side // 2 - 1, side // 2) and c in (side // 2 - 1, side // 2)
    assert phase_winding(f, 1.0) == 0


def test_vortex_null_and_winding():
    g = GridSpec(128, 3.0)
    f = lg_field(2, g)
    center_amp = abs(_bilinear(f.amplitudes, g, np.array([0.0]), np.array([0.0]))[0])
    assert center_amp < 1e-6 * np.abs(f.amplitudes).max()
    assert phase_winding(f, 1.0) == 2


@pytest.mark.parametrize("l", range(-6, 7))
def test_winding_matches_charge(l):
    g = GridSpec(128, 3.0)
    assert phase_winding(lg_field(l, g), 1.0) == l


def test_winding_circle_leaving_grid_rejected(grid64):
    f = lg_field(1, grid64)
    with pytest.raises(ValueError):
        phase_winding(f, 3.5)
    with pytest.raises(ValueError):
        phase_winding(f, grid64.extent - 1e-9)


@given(st.integers(-8, 8))
def test_l2_normalization(l):
    f = lg_field(l, GridSpec(64, 3.0))
    assert f.norm_sq() == pytest.approx(1.0, abs=1e-8)


def test_orthogonality_distinct_charges(grid256):
    ip = inner_product(lg_field(1, grid256), lg_field(3, grid256))
    assert abs(ip) < 1e-3
    ip = inner_product(lg_field(2, grid256), lg_field(-2, grid256))
    assert abs(ip) < 1e-3


def test_gram_matrix_identity(grid256):
    fields = [lg_field(l, grid256) for l in range(1, 9)]
    gram = np.array([[inner_product(a, b) for b in fields] for a in fields])
    assert np.allclose(np.diag(gram).real, 1.0, atol=1e-8)
    off = gram - np.diag(np.diag(gram))
    assert np.abs(off).max() < 1e-3


def test_inner_product_conjugate_symmetry(grid64):
    a, b = lg_field(1, grid64), encode(Message(3, 2), ModeSet.first_adjacent(2), grid64)
    assert inner_product(a, b) == pytest.approx(np.conj(inner_product(b, a)))
    assert inner_product(a, a) == pytest.approx(1.0, abs=1e-10)


def test_conjugation_symmetry(grid64):
    for l in (1, 3, 5):
        f_pos = lg_field(l, grid64).amplitudes
        f_neg = lg_field(-l, grid64).amplitudes
        assert np.abs(f_neg - np.conj(f_pos)).max() < 1e-12


def test_encode_bit_convention(grid64):
    modes = ModeSet.first_adjacent(4)
    f = encode(Message(0b0101, 4), modes, grid64)
    expect = lg_field(1, grid64).amplitudes + lg_field(3, grid64).amplitudes
    expect /= np.sqrt(np.sum(np.abs(expect) ** 2) * grid64.dx**2)
    assert np.allclose(f.amplitudes, expect)


def test_encode_single_bit_matches_mode(grid64):
    f = encode(Message(0b0001, 4), ModeSet.first_adjacent(4), grid64)
    assert np.allclose(f.amplitudes, lg_field(1, grid64).amplitudes, atol=1e-12)


def test_encode_zero_message_is_zero_field(grid64):
    f = encode(Message(0, 3), ModeSet.first_adjacent(3), grid64)
    assert np.all(f.amplitudes == 0)
    assert np.all(intensity(f).values == 0)


def test_encode_length_mismatch(grid64):
    with pytest.raises(ValueError):
        encode(Message(1, 3), ModeSet.first_adjacent(4), grid64)


@given(st.integers(1, 4), st.data())
def test_encode_normalized(n, data):
    value = data.draw(st.integers(1, (1 << n) - 1))
    f = encode(Message(value, n), ModeSet.first_adjacent(n), GridSpec(32, 3.0))
    assert f.norm_sq() == pytest.approx(1.0, abs=1e-8)


def test_intensity_squared_magnitude(grid64):
    a = np.zeros((64, 64), dtype=complex)
    a[10, 20] = 3 + 4j
    img = intensity(ComplexField(grid64, a))
    assert img.values[10, 20] == pytest.approx(25.0)
    assert np.all(img.values >= 0)


def test_intensity_ring_radius():
    # |LG_1|^2 ~ r^2 exp(-2 r^2) peaks at r = sqrt(1/2)
    g = GridSpec(256, 3.0)
    img = intensity(lg_field(1, g))
    x, y = g.mesh()
    r = np.hypot(x, y)
    r_peak = r.flat[np.argmax(img.values)]
    assert r_peak == pytest.approx(np.sqrt(0.5), abs=2 * g.dx)


def test_phase_range_and_mask(grid64):
    f = lg_field(3, grid64)
    ph = phase(f).values
    assert np.all(ph >= -np.pi) and np.all(ph < np.pi)
    zero = ComplexField(grid64, np.zeros((64, 64), dtype=complex))
    assert np.all(phase(zero).values == 0)


def test_phase_real_positive_is_zero(grid64):
    f = lg_field(0, grid64)
    assert np.all(phase(f).values == 0)


def test_phase_global_shift(grid64):
    f = encode(Message(5, 3), ModeSet.first_adjacent(3), grid64)
    shifted = ComplexField(grid64, f.amplitudes * np.exp(1j * np.pi / 3))
    p0, p1 = phase(f).values, phase(shifted).values
    mask = np.abs(f.amplitudes) >= 1e-12 * np.abs(f.amplitudes).max()
    dphi = (p1 - p0)[mask] % (2 * np.pi)
    assert np.allclose(dphi, np.pi / 3, atol=1e-9)


def test_phase_winding_superposition_outer_charge(grid64):
    # regression value: the outer mode dominates on a wide circle
    f = encode(Message(0b11, 2), ModeSet.first_adjacent(2), grid64)
    assert phase_winding(f, 2.0) == 2


def test_image_and_field_validation(grid64):
    with pytest.raises(ValueError):
        ComplexField(grid64, np.zeros((4, 4), dtype=complex))
    bad = np.zeros((64, 64))
    bad[0, 0] = np.nan
    with pytest.raises(ValueError):
        Image(grid64, bad)
    with pytest.raises(ValueError):
        Message(4, 2)
    with pytest.raises(ValueError):
        ModeSet((1, 1, 2))


def test_inner_product_grid_mismatch(grid64, grid256):
    with pytest.raises(ValueError):
        inner_product(lg_field(1, grid64), lg_field(1, grid256))
