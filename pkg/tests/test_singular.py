import numpy as np
import pytest

from bilapscat.lattice import LatticeWindow
from bilapscat.singular import (
    KERNEL_IDS,
    cutoff_phi,
    cz_kernel,
    cz_matrix,
    lp_norm_estimate,
    reflection_identity_check,
    schur_doubling,
    schur_test,
)


def test_cutoff_profile():
    np.testing.assert_array_equal(cutoff_phi([0.0, 1.0, 2.0, 7.0]), [0.0, 0.0, 1.0, 1.0])
    assert cutoff_phi(1.5) == pytest.approx(0.5, abs=1e-15)
    s = np.linspace(1, 2, 101)
    assert np.all(np.diff(cutoff_phi(s)) >= 0)


def test_kernel_values():
    assert cz_kernel("kt1", 5, 0) == pytest.approx(0.2, abs=1e-15)
    assert cz_kernel("k1+", 0, 0) == 0.0
    assert cz_kernel("k2+", 3, 0) == pytest.approx(1 / 3, abs=1e-15)
    assert cz_kernel("kt2-", 0, 2) == pytest.approx(1 / (-2j), abs=1e-15)
    assert cz_kernel("schur-probe", 4, -4) == 1.0
    # cutoff vanishes within unit distance of the diagonal
    assert cz_kernel("kt1", 7, 6) == 0.0


def test_unknown_kernel():
    with pytest.raises(ValueError):
        cz_kernel("k9", 1, 2)


def test_kt1_antisymmetric():
    K = cz_matrix("kt1", LatticeWindow(30))
    np.testing.assert_array_equal(K, -K.T)


@pytest.mark.parametrize("kid", KERNEL_IDS)
def test_magnitude_bound(kid):
    W = LatticeWindow(40)
    n = W.indices[:, None]
    m = W.indices[None, :]
    K = np.abs(cz_matrix(kid, W))
    dist = np.maximum(np.minimum(np.abs(n - m), np.abs(np.abs(n) - np.abs(m))), 1)
    assert np.all(K <= 1.0 / dist + 1e-15) or kid == "schur-probe"
    assert K.max() <= 1.0


@pytest.mark.parametrize("kid", ["k1+", "k1-", "k2+", "k2-"])
def test_reflection_identities(kid):
    assert reflection_identity_check(kid, LatticeWindow(32)) < 1e-14


def test_reflection_check_arguments():
    with pytest.raises(ValueError):
        reflection_identity_check("k1+", LatticeWindow(8))
    with pytest.raises(ValueError):
        reflection_identity_check("kt1", LatticeWindow(32))


def test_schur_probe_is_stable():
    res = schur_doubling("schur-probe", 256)
    assert res["stable"]
    # the kernel depends on |n| - |m|, so a far row has two peaks at m = ±|n|,
    # each summing to Σ 1/(1 + k²) = π coth π
    assert res["large"]["rowSup"] == pytest.approx(2 * np.pi / np.tanh(np.pi), rel=1e-2)


def test_kt1_is_not_schur():
    res = schur_doubling("kt1", 256)
    assert not res["stable"]
    assert res["large"]["rowSup"] > res["small"]["rowSup"]


def test_schur_test_bound():
    assert schur_test(np.zeros((4, 4)), bound=0.0).passes
    r = schur_test(np.eye(5), bound=2.0)
    assert r.passes and r.row_sup == 1.0 and r.col_sup == 1.0
    assert not schur_test(np.ones((3, 3)), bound=5.0).passes


def test_identity_has_unit_norms():
    I = np.eye(33)
    W = LatticeWindow(16)
    for p in (1, 1.5, 2, 3, np.inf):
        assert lp_norm_estimate(I, p, W).estimate == pytest.approx(1.0, abs=1e-8)


def test_kt1_l2_bounded():
    a = lp_norm_estimate("kt1", 2, LatticeWindow(512)).estimate
    b = lp_norm_estimate("kt1", 2, LatticeWindow(1024)).estimate
    assert abs(b - a) / a < 0.02
    assert b < np.pi


def test_kt1_l1_grows_logarithmically():
    Ns = [128, 256, 512, 1024]
    s = [lp_norm_estimate("kt1", 1, LatticeWindow(N)).estimate for N in Ns]
    assert s[-1] - s[0] >= 0.2 * np.log(Ns[-1] / Ns[0])
    # increments per doubling approach ln 2 times the two tails
    np.testing.assert_allclose(np.diff(s), 2 * np.log(2), rtol=0.02)


def test_l2_monotone_in_window():
    vals = [lp_norm_estimate("kt1", 2, LatticeWindow(N)).estimate for N in (32, 64, 128)]
    assert vals[0] <= vals[1] <= vals[2]


def test_general_p_is_lower_bound():
    W = LatticeWindow(64)
    e = lp_norm_estimate("kt1", 3, W)
    assert e.lower_bound_only
    # interpolation: ‖K‖_p ≤ ‖K‖_2^{2/p} ‖K‖_∞^{1-2/p}
    n2 = lp_norm_estimate("kt1", 2, W).estimate
    ninf = lp_norm_estimate("kt1", np.inf, W).estimate
    assert 0.5 * n2 <= e.estimate <= n2 ** (2 / 3) * ninf ** (1 / 3) + 1e-12


def test_probe_count_and_p_validation():
    W = LatticeWindow(8)
    with pytest.raises(ValueError):
        lp_norm_estimate("kt1", 3, W, probes=16)
    with pytest.raises(ValueError):
        lp_norm_estimate("kt1", 0.5, W)


def test_seed_reproducible():
    W = LatticeWindow(40)
    assert lp_norm_estimate("kt2+", 4, W, seed=7).estimate == lp_norm_estimate("kt2+", 4, W, seed=7).estimate
