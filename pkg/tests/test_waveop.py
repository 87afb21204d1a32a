import numpy as np
import pytest

from bilapscat.errors import NotConverged
from bilapscat.fitting import fit_loglog
from bilapscat.lattice import (
    LatticeWindow,
    Potential,
    char_fn,
    delta,
    delta_site,
    h_matrix,
    resonance_example,
    sixteen_resonance_example,
)
from bilapscat.waveop import (
    QuadratureConfig,
    ac_spectrum,
    apply_wave_operator,
    endpoint_reference_sum,
    free_evolution,
    intertwining_check,
    quasimomentum,
    stationary_wave_operator,
    time_dependent_wave_oracle,
)


@pytest.fixture(scope="module")
def w_delta_32():
    return stationary_wave_operator(delta_site(), LatticeWindow(32))


def test_config_validation():
    with pytest.raises(ValueError):
        QuadratureConfig(mu0=1.5)
    with pytest.raises(ValueError):
        QuadratureConfig(atol=0)


def test_weak_potential_tends_to_identity():
    # the distance to the identity scales like ε^{1/3}: the single-site M⁻¹ switches
    # from 1 to ~μ³/ε at μ ~ ε^{1/3}
    eps = np.array([1e-4, 1e-7, 1e-10])
    W = LatticeWindow(8)
    dev = [np.abs(stationary_wave_operator(delta_site(e), W).entries - np.eye(W.size)).max() for e in eps]
    fit = fit_loglog(eps, dev)
    assert abs(fit.slope - 1 / 3) < 0.05
    assert dev[-1] < 1e-3


def test_isometry_on_deltas():
    W = LatticeWindow(128)
    K = stationary_wave_operator(delta_site(), W)
    for f in (delta(0, W), delta(3, W)):
        assert 0.98 <= np.linalg.norm(K.apply(f)) / np.linalg.norm(f) <= 1.02


def test_isometry_on_box_indicator():
    W = LatticeWindow(8)
    out = LatticeWindow(576)
    f = char_fn(8, W)
    Wf = apply_wave_operator(delta_site(), f, W, out)
    assert 0.98 <= np.linalg.norm(Wf) / np.linalg.norm(f) <= 1.02


def test_apply_matches_kernel(w_delta_32):
    W = LatticeWindow(32)
    rng = np.random.default_rng(0)
    f = rng.standard_normal(W.size)
    np.testing.assert_allclose(apply_wave_operator(delta_site(), f, W), w_delta_32.apply(f), atol=1e-12)


def test_quadrature_stable_under_node_doubling(w_delta_32):
    fine = stationary_wave_operator(delta_site(), LatticeWindow(32), cfg=QuadratureConfig(order=32))
    assert np.abs(fine.entries - w_delta_32.entries).max() < 1e-3
    assert w_delta_32.diagnostics["error"] < 1e-3


def test_minus_operator_is_conjugate(w_delta_32):
    Wm = stationary_wave_operator(delta_site(), LatticeWindow(32), sign="-")
    assert np.abs(Wm.entries - w_delta_32.entries.conj()).max() < 1e-8


def test_columns_uniformly_bounded(w_delta_32):
    norms = np.linalg.norm(w_delta_32.entries, axis=0)
    assert norms.max() < 1.05


def test_resonant_potentials_widen_the_endpoint_gap():
    K = stationary_wave_operator(resonance_example(), LatticeWindow(8))
    assert K.diagnostics["zero"] == "SecondKindResonance"
    assert K.diagnostics["mu_min"] >= 2e-2
    K = stationary_wave_operator(sixteen_resonance_example(), LatticeWindow(8))
    assert K.diagnostics["sixteen"] == "Resonance"
    assert K.diagnostics["top_gap"] >= 2e-2


def test_csv_rows(w_delta_32):
    rows = list(w_delta_32.to_csv_rows())
    assert len(rows) == 65 * 65
    n, m, re, im = rows[0]
    assert (n, m) == (-32, -32)


def test_quasimomentum_is_increasing():
    lam = np.linspace(-1, 17, 400)
    q = quasimomentum(lam)
    assert np.all(np.diff(q) > 0)
    np.testing.assert_allclose(quasimomentum(np.array([0.0, 16.0])), [0.0, np.pi], atol=1e-15)


def test_oracle_free_case_is_identity():
    W = LatticeWindow(16)
    f = delta(0, W)
    for gen in ("bilaplacian", "quasimomentum"):
        out = time_dependent_wave_oracle(Potential({}), f, W, T=50, box=128, generator=gen)
        np.testing.assert_allclose(out, f, atol=1e-12)


def test_oracle_agrees_with_stationary_formula():
    W = LatticeWindow(64)
    f = delta(0, W)
    ref = stationary_wave_operator(delta_site(), W).apply(f)
    out = time_dependent_wave_oracle(delta_site(), f, W, T=400, box=512, generator="quasimomentum",
                                     check_tol=1e-2)
    assert np.linalg.norm(out - ref) / np.linalg.norm(ref) < 5e-2


def test_literal_oracle_not_converged_at_moderate_times():
    # with e^{itH}e^{-itΔ²} itself the slow low-energy part keeps the average drifting
    W = LatticeWindow(16)
    with pytest.raises(NotConverged):
        time_dependent_wave_oracle(delta_site(), delta(0, W), W, T=50, box=512, check_tol=1e-2)


def test_oracle_removes_bound_state():
    V = delta_site(-3.0)
    big = LatticeWindow(200)
    lam, U = np.linalg.eigh(h_matrix(V, big))
    assert lam[0] < 0
    W = LatticeWindow(16)
    psi = U[big.offset(W.indices), 0]
    out = time_dependent_wave_oracle(V, psi, W, T=400, box=512, generator="quasimomentum")
    # the output lies in the continuous subspace, orthogonal to the bound state
    assert abs(np.vdot(psi, out)) < 1e-3
    assert np.linalg.norm(out) > 0.5


def test_ac_spectrum_drops_bound_states():
    ac = ac_spectrum(delta_site(-3.0), 100)
    assert ac.dropped_eigenvalues.size >= 1
    assert np.all(ac.eigenvalues[ac.retained] >= -1e-6)


def test_free_evolution_unitary_and_reversible():
    W = LatticeWindow(20)
    g = delta(0, W) + 0.5 * delta(3, W)
    big = LatticeWindow(120)
    h = np.zeros(big.size)
    h[big.offset(W.indices)] = g
    fwd = free_evolution(h, 3.0, big)
    assert abs(np.linalg.norm(fwd) - np.linalg.norm(g)) < 1e-10
    back = free_evolution(fwd, -3.0, big)
    np.testing.assert_allclose(back, h, atol=1e-9)


@pytest.mark.parametrize("t", [0.0, 5.0])
def test_intertwining(t):
    assert intertwining_check(delta_site(), t, LatticeWindow(16), inner=128) < 5e-2


def test_reference_sum():
    assert abs(endpoint_reference_sum(1) - ((1j - 1) * 13 / 48 + 5 / 24)) < 1e-14
    # harmonic growth: increments approach ((i - 1)/4) ln 2 per doubling
    d = endpoint_reference_sum(2048) - endpoint_reference_sum(1024)
    assert abs(d.imag - np.log(2) / 4) < 1e-3
