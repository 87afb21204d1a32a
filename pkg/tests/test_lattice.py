import numpy as np
import pytest

from bilapscat.errors import DegeneratePotential, PotentialFormatError
from bilapscat.lattice import (
    LatticeWindow,
    Potential,
    apply_bilaplacian,
    apply_h,
    apply_laplacian,
    bilaplacian_matrix,
    char_fn,
    delta,
    delta_site,
    load_potential,
    parity,
    resonance_example,
    shifted_resonance_example,
    symbol,
    weighted_norm,
)


W = LatticeWindow(10)


def test_window_size_and_offsets():
    assert W.size == 21
    np.testing.assert_array_equal(W.site(W.offset(W.indices)), W.indices)
    assert W.contains(10) and not W.contains(11)
    with pytest.raises(ValueError):
        LatticeWindow(-1)
    with pytest.raises(ValueError):
        LatticeWindow(2.5)


def test_laplacian_of_delta():
    out = apply_laplacian(delta(0, W))
    np.testing.assert_array_equal(out[W.offset(np.array([-2, -1, 0, 1, 2]))], [0, 1, -2, 1, 0])


def test_laplacian_annihilates_constants_and_linears_inside():
    inner = W.interior(1)
    np.testing.assert_array_equal(apply_laplacian(np.ones(W.size))[inner], 0)
    np.testing.assert_array_equal(apply_laplacian(W.indices.astype(float))[inner], 0)


def test_bilaplacian_stencil_on_delta():
    out = apply_bilaplacian(delta(0, W))
    np.testing.assert_array_equal(out[W.offset(np.arange(-2, 3))], [1, -4, 6, -4, 1])


def test_bilaplacian_kills_cubics_and_scales_alternating():
    inner = W.interior(2)
    n = W.indices.astype(float)
    np.testing.assert_array_equal(apply_bilaplacian(n**3)[inner], 0)
    alt = (-1.0) ** W.indices
    np.testing.assert_array_equal(apply_bilaplacian(alt)[inner], 16 * alt[inner])


def test_bilaplacian_is_laplacian_squared_inside():
    # integer data keep every intermediate exact
    rng = np.random.default_rng(1)
    f = rng.integers(-1000, 1000, W.size) + 1j * rng.integers(-1000, 1000, W.size)
    inner = W.interior(2)
    np.testing.assert_array_equal(apply_bilaplacian(f)[inner], apply_laplacian(apply_laplacian(f))[inner])


def test_bilaplacian_matrix_matches_stencil():
    rng = np.random.default_rng(2)
    f = rng.standard_normal(W.size)
    np.testing.assert_allclose(bilaplacian_matrix(W) @ f, apply_bilaplacian(f), atol=1e-13)


def test_resonance_example_annihilated():
    V1 = resonance_example()
    phi = np.ones(W.size)
    phi[W.offset(0)] = 2.0
    inner = W.interior(2)
    np.testing.assert_allclose(apply_h(V1, phi, W)[inner], 0.0, atol=1e-12)


def test_shifted_resonance_example_at_sixteen():
    # the shifted potential is 16 + V1 everywhere, a full array on the window
    V2 = shifted_resonance_example(W)
    phi = np.ones(W.size)
    phi[W.offset(0)] = 2.0
    inner = W.interior(2)
    np.testing.assert_allclose(apply_h(V2, phi, W)[inner], 16 * phi[inner], atol=1e-12)


def test_apply_h_zero_potential_is_bilaplacian():
    f = np.arange(W.size, dtype=float) ** 2
    np.testing.assert_array_equal(apply_h(Potential({}), f, W), apply_bilaplacian(f))


def test_symbol_values():
    np.testing.assert_allclose(symbol(np.array([0.0, np.pi, np.pi / 2])), [0, 16, 4], atol=1e-14)


def test_parity_char_fn_weighted_norm():
    np.testing.assert_array_equal(parity(delta(1, W), W), -delta(1, W))
    f1 = char_fn(1, W)
    np.testing.assert_array_equal(f1[W.offset(np.arange(-2, 3))], [0, 1, 1, 1, 0])
    for s in (0.0, 1.5, 3.0):
        assert weighted_norm(delta(0, W), s, W) == 1.0


def test_potential_derived_sequences():
    V = Potential({-1: -4.0, 2: 9.0, 5: 0.0})
    np.testing.assert_array_equal(V.support, [-1, 2])
    assert V.support_radius == 2
    np.testing.assert_array_equal(V.v, [2.0, 3.0])
    np.testing.assert_array_equal(V.sign, [-1.0, 1.0])
    np.testing.assert_array_equal(V.v_tilde, [-2.0, 3.0])
    np.testing.assert_array_equal(V.v_moment(1), [-2.0, 6.0])
    assert V.l1_norm == 13.0


def test_zero_potential_rejected_by_classifier_guard():
    with pytest.raises(DegeneratePotential):
        Potential({0: 0.0}).require_nonzero()


def test_load_potential_roundtrip(tmp_path):
    V = resonance_example()
    p = tmp_path / "v.txt"
    p.write_text("# comment\n\n" + V.to_text())
    assert load_potential(p) == V


@pytest.mark.parametrize("text", ["0 1\n0 2\n", "0\n", "x 1\n", "0 nan\n"])
def test_load_potential_rejects_bad_files(tmp_path, text):
    p = tmp_path / "bad.txt"
    p.write_text(text)
    with pytest.raises(PotentialFormatError):
        load_potential(p)


def test_delta_site_on_window():
    np.testing.assert_array_equal(delta_site(2.0, 3).on_window(W), 2.0 * delta(3, W))
