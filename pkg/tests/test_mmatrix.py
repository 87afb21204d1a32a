import numpy as np
import pytest

from bilapscat.errors import EmptyProjection, NearSingular, OutOfRange
from bilapscat.lattice import LatticeWindow, delta_site, resonance_example, sixteen_resonance_example
from bilapscat.mmatrix import (
    blowup_probe,
    build_m,
    cancellation_order_probe,
    default_grid,
    invert_m,
    perturbed_resolvent_kernel,
    truncated_resolvent_oracle,
)
from bilapscat.resolvent import free_resolvent_matrix

SINGLE_SITE_M = 1 + 1j / 8 - 1 / (8 * np.sqrt(3))


def test_single_site_value_and_inverse():
    M = build_m(delta_site(), np.sqrt(2))
    assert M.entries.shape == (1, 1)
    assert abs(M.entries[0, 0] - SINGLE_SITE_M) < 1e-15
    inv, res = invert_m(M)
    assert abs(inv[0, 0] - 1 / SINGLE_SITE_M) < 1e-15
    assert res < 1e-15


def test_m_minus_u_symmetric():
    V = resonance_example()
    M = build_m(V, 0.9)
    A = M.entries - np.diag(V.sign)
    np.testing.assert_allclose(A, A.T, atol=1e-15)


def test_m_out_of_range():
    with pytest.raises(OutOfRange):
        build_m(delta_site(), 2.0)


def test_resonance_example_midband_inverse():
    M = build_m(resonance_example(), 1.0)
    assert np.isfinite(M.condition_number)
    inv, res = invert_m(M)
    assert res < 1e-12
    np.testing.assert_allclose(M.entries @ inv, np.eye(5), atol=1e-10)


def test_near_singular_close_to_resonant_threshold():
    with pytest.raises(NearSingular):
        invert_m(build_m(resonance_example(), 1e-5))


def test_extended_precision_inverse_matches_double_midband():
    V = resonance_example()
    a, _ = invert_m(build_m(V, 0.5))
    b, res = invert_m(build_m(V, 0.5, dps=30))
    np.testing.assert_allclose(a, b, rtol=1e-10)
    assert res < 1e-20


def test_weak_potential_kernel_is_free_kernel():
    W = LatticeWindow(10)
    K = perturbed_resolvent_kernel(delta_site(1e-12), 1.0, "+", W)
    np.testing.assert_allclose(K, free_resolvent_matrix(1.0, "+", W.indices), atol=1e-9)


def test_kernel_sign_conjugation():
    W = LatticeWindow(8)
    V = resonance_example()
    np.testing.assert_allclose(perturbed_resolvent_kernel(V, 0.7, "-", W),
                               perturbed_resolvent_kernel(V, 0.7, "+", W).conj(), atol=1e-12)


def test_kernel_against_truncated_oracle():
    W = LatticeWindow(60)
    V = resonance_example()
    K = perturbed_resolvent_kernel(V, 1.0, "+", W)
    O = truncated_resolvent_oracle(V, 1.0, W)
    assert np.linalg.norm(K - O) / np.linalg.norm(O) < 2e-2


def test_default_grid_density():
    g = default_grid("zero")
    assert g.size == 13 and np.all(np.diff(g) > 0)


def test_blowup_resonance_example_zero():
    r = blowup_probe(resonance_example(), "zero")
    assert abs(r.exponent + 3) < 0.3
    assert r.fit.npoints >= 6


def test_blowup_sixteen_example():
    r = blowup_probe(sixteen_resonance_example(), "sixteen")
    assert abs(r.exponent + 0.5) < 0.1


def test_blowup_double_precision_flags_near_singular_points():
    r = blowup_probe(resonance_example(), "zero", dps=None)
    assert r.near_singular.any()
    assert np.isnan(r.norms[r.near_singular]).all()


def test_blowup_single_site_regular_thresholds_vanish():
    # with Q = 0 on a one-point support, M⁻¹ = 1/M and M ~ R₀ grows at both ends:
    # ‖M⁻¹‖ ~ μ³ at zero and ~ (2 - μ)^{1/2} at sixteen
    assert abs(blowup_probe(delta_site(), "zero").exponent - 3) < 0.1
    r = blowup_probe(delta_site(), "sixteen", distances=np.logspace(-9, -7, 13))
    assert abs(r.exponent - 0.5) < 0.05


def test_blowup_regular_three_site_potential_flat():
    from bilapscat.lattice import Potential

    r = blowup_probe(Potential({-1: 1.0, 0: 2.0, 1: 1.5}), "zero")
    assert abs(r.exponent) < 0.15


def test_cancellation_orders_resonance_example():
    V = resonance_example()
    assert abs(cancellation_order_probe(V, "vQ")[2].slope + 2) < 0.3
    assert abs(cancellation_order_probe(V, "vS0")[2].slope + 1) < 0.3
    assert abs(cancellation_order_probe(V, "vS2")[2].slope) < 0.3


def test_cancellation_sixteen_bounded():
    assert abs(cancellation_order_probe(sixteen_resonance_example(), "sixteen-vQ")[2].slope) < 0.3


def test_cancellation_single_site_empty():
    with pytest.raises(EmptyProjection):
        cancellation_order_probe(delta_site(), "vQ")
