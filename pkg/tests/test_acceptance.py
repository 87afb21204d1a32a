"""End-to-end acceptance checks, one test per criterion.

Each test prints a single ``CRITERION k: PASS|FAIL`` line with the measured
values and wall time, then asserts the criterion at its stated tolerance.
"""
import time

import numpy as np
import pytest

from bilapscat.dispersive import decay_fit, h_cubic, h_cubic_roots, stationary_analysis
from bilapscat.lattice import (
    LatticeWindow,
    apply_bilaplacian,
    apply_h,
    char_fn,
    delta,
    delta_site,
    resonance_example,
    sixteen_resonance_example,
)
from bilapscat.mmatrix import blowup_probe, cancellation_order_probe
from bilapscat.resolvent import free_resolvent_kernel
from bilapscat.singular import lp_norm_estimate, reflection_identity_check, schur_doubling
from bilapscat.threshold import check_fundamental_solution, classify
from bilapscat.waveop import (
    apply_wave_operator,
    endpoint_growth_experiment,
    endpoint_reference_sum,
    intertwining_check,
    stationary_wave_operator,
    time_dependent_wave_oracle,
)


@pytest.fixture
def report(capsys):
    def emit(k, ok, detail, t0, limit):
        dt = time.perf_counter() - t0
        ok = ok and dt < limit
        with capsys.disabled():
            print(f"\nCRITERION {k}: {'PASS' if ok else 'FAIL'}  {detail}  [{dt:.2f}s / {limit:g}s]")
        return ok
    return emit


def test_criterion_01_fundamental_solutions(report):
    t0 = time.perf_counter()
    W = LatticeWindow(20)
    r0, r16 = check_fundamental_solution("G0", W), check_fundamental_solution("Gt0", W)
    assert report(1, max(r0, r16) < 1e-10, f"residuals G0={r0:.2e} Gt0={r16:.2e}", t0, 1)


def test_criterion_02_examples(report):
    t0 = time.perf_counter()
    W = LatticeWindow(40)
    n = W.indices
    phi1 = np.ones(W.size)
    phi1[W.offset(0)] = 2.0
    e1 = np.abs(apply_h(resonance_example(), phi1, W)[W.interior(2)]).max()
    phi2 = phi1 * (-1.0) ** np.abs(n)
    e2 = np.abs((apply_h(sixteen_resonance_example(), phi2, W) - 16 * phi2)[W.interior(2)]).max()
    c1 = classify(resonance_example(), "zero")
    c2 = classify(sixteen_resonance_example(), "sixteen")
    orth1 = max(c1.residuals[k] for k in ("orth_v0", "orth_v1", "orth_v2"))
    orth2 = c2.residuals["orth_vt0"]
    ok = (e1 < 1e-12 and e2 < 1e-12 and c1.classification == "SecondKindResonance"
          and c2.classification == "Resonance" and max(orth1, orth2) < 1e-10)
    assert report(2, ok, f"eq residuals {e1:.1e}/{e2:.1e}; {c1.classification}, {c2.classification}; "
                         f"orth {orth1:.1e}/{orth2:.1e}", t0, 1)


def test_criterion_03_free_resolvent_identity(report):
    t0 = time.perf_counter()
    W = LatticeWindow(200)
    errs = []
    for mu in (0.5, 1.0, 1.5):
        col = free_resolvent_kernel(mu, "+", W.indices)
        r = apply_bilaplacian(col) - mu**4 * col - delta(0, W)
        errs.append(np.abs(r[W.interior(2)]).max())
    assert report(3, max(errs) < 1e-8, "residuals " + ", ".join(f"{e:.1e}" for e in errs), t0, 5)


def test_criterion_04_blowup_consistency(report):
    t0 = time.perf_counter()
    got = {
        ("delta", "zero"): blowup_probe(delta_site(), "zero").exponent,
        ("V1", "zero"): blowup_probe(resonance_example(), "zero").exponent,
        ("delta", "sixteen"): blowup_probe(delta_site(), "sixteen").exponent,
        ("V2", "sixteen"): blowup_probe(sixteen_resonance_example(), "sixteen").exponent,
    }
    target = {("delta", "zero"): (0, 0.3), ("V1", "zero"): (-3, 0.3),
              ("delta", "sixteen"): (0, 0.15), ("V2", "sixteen"): (-0.5, 0.15)}
    ok = all(abs(got[k] - target[k][0]) < target[k][1] for k in got)
    detail = ", ".join(f"{v}@{th} {got[(v, th)]:+.3f} (want {target[(v, th)][0]:+g})" for v, th in got)
    assert report(4, ok, detail, t0, 30)


def test_criterion_05_cancellation_orders(report):
    t0 = time.perf_counter()
    V = resonance_example()
    s = {k: cancellation_order_probe(V, k)[2].slope for k in ("vQ", "vS0", "vS2")}
    ok = abs(s["vQ"] + 2) < 0.3 and abs(s["vS0"] + 1) < 0.3 and abs(s["vS2"]) < 0.3
    assert report(5, ok, ", ".join(f"{k} {v:+.3f}" for k, v in s.items()), t0, 30)


def test_criterion_06_wave_operator(report, capsys):
    t0 = time.perf_counter()
    V = delta_site()
    W = LatticeWindow(64)
    f = delta(0, W)
    ref = stationary_wave_operator(V, W).apply(f)
    out = time_dependent_wave_oracle(V, f, W, T=400, box=512, generator="quasimomentum")
    rel = np.linalg.norm(out - ref) / np.linalg.norm(ref)
    lit = time_dependent_wave_oracle(V, f, W, T=400, box=512)
    rel_lit = np.linalg.norm(lit - ref) / np.linalg.norm(ref)
    big = LatticeWindow(128)
    K = stationary_wave_operator(V, big)
    ratios = [np.linalg.norm(K.apply(delta(k, big))) for k in (0, 3)]
    small = LatticeWindow(8)
    g = char_fn(8, small)
    ratios.append(np.linalg.norm(apply_wave_operator(V, g, small, LatticeWindow(576))) / np.linalg.norm(g))
    inter = [intertwining_check(V, t, LatticeWindow(16), inner=128) for t in (0.0, 5.0)]
    ok = rel < 5e-2 and all(0.98 <= r <= 1.02 for r in ratios) and max(inter) < 5e-2
    assert report(6, ok, f"oracle rel diff {rel:.2e} (literal generator {rel_lit:.2e}); isometry "
                         + "/".join(f"{r:.4f}" for r in ratios)
                         + f"; intertwining {inter[0]:.1e}/{inter[1]:.1e}", t0, 300)


def test_criterion_07_endpoint_growth(report):
    t0 = time.perf_counter()
    res = endpoint_growth_experiment(delta_site(), (8, 16, 32, 64, 128))
    fit = res["fit"]
    l2 = [r["l2_ratio"] for r in res["table"]]
    ref = endpoint_reference_sum(1)
    err = abs(ref - ((1j - 1) * 13 / 48 + 5 / 24))
    ok = fit.slope > 0.05 and fit.correlation > 0.95 and all(0.9 <= x <= 1.1 for x in l2) and err < 1e-14
    assert report(7, ok, f"alpha {fit.slope:.4f}, corr {fit.correlation:.5f}, l2 ratios "
                         f"[{min(l2):.3f}, {max(l2):.3f}], reference sum err {err:.1e}", t0, 600)


def test_criterion_08_beam_decay(report):
    t0 = time.perf_counter()
    times = np.logspace(2, 4, 13)
    got = {a: decay_fit(a, times).exponent for a in (0.0, 1.0, 5.0)}
    tol = {0.0: 0.03, 1.0: 0.03, 5.0: 0.05}
    ok = all(abs(got[a] + 1 / 3) < tol[a] for a in got)
    assert report(8, ok, ", ".join(f"a={a:g} {v:+.4f}" for a, v in got.items()) + " (want -0.3333)", t0, 300)


def test_criterion_09_stationary_phase(report):
    t0 = time.perf_counter()
    rows, ok = [], True
    for a in (0.5, 1.0, 5.0):
        s = stationary_analysis(a)
        ok &= abs(h_cubic(s.x0, a)) < 1e-12 and -np.pi < s.theta0 < -np.pi / 2
        rows.append(f"a={a:g} |h|={abs(h_cubic(s.x0, a)):.1e} θ0={s.theta0:.4f}")
    roots = h_cubic_roots(0.0)
    rerr = np.abs(np.sort(roots) - [0.0, 1.0, 1.0]).max()
    x = np.linspace(-1, 1, 21)
    ferr = np.abs(h_cubic(x, 0.0) - 4 * x * (x - 1) ** 2).max()
    ok &= rerr < 1e-12 and ferr < 1e-12
    assert report(9, ok, "; ".join(rows) + f"; a=0 root err {rerr:.1e}, factor err {ferr:.1e}", t0, 1)


def test_criterion_10_cz_suite(report):
    t0 = time.perf_counter()
    W = LatticeWindow(64)
    refl = max(reflection_identity_check(k, W) for k in ("k1+", "k1-", "k2+", "k2-"))
    n512 = lp_norm_estimate("kt1", 2, LatticeWindow(512)).estimate
    n1024 = lp_norm_estimate("kt1", 2, LatticeWindow(1024)).estimate
    drift = abs(n1024 - n512) / n512
    probe = schur_doubling("schur-probe", 512)
    kt1 = schur_doubling("kt1", 512)
    ok = refl < 1e-14 and drift < 0.02 and probe["stable"] and not kt1["stable"]
    assert report(10, ok, f"reflection {refl:.1e}; kt1 l2 {n512:.4f} -> {n1024:.4f} ({100 * drift:.2f}%); "
                          f"Schur change probe {100 * probe['relativeChange']:.2f}%, "
                          f"kt1 {100 * kt1['relativeChange']:.1f}%", t0, 120)
