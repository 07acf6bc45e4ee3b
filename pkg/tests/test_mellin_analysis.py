"""Tests for the tip-symbol analysis.

Oracles, computed independently of the module under test:

  * pole positions: numpy.roots on the quadratic [1, -(n-1), lam], matched
    with multiplicity after sorting; residual of the quadratic at each
    reported pole.
  * weight windows: interval arithmetic (mpmath.iv) certifies the sign of
    gamma_max - gamma_min for the worked cases, and a seeded random sweep
    cross-checks emptiness against the direct inequality.
  * asymptotics templates: brute-force enumeration of the zeros of
    sigma(z) sigma(z+2) on a fine grid of candidate roots (the four
    closed-form roots recomputed with mpmath at 50 digits), filtered by the
    strip, reproduces term sets and log flags.
  * mode-1 leading exponents: the indicial value 1/rho_0 for a circle tip.

Worked values frozen below were derived by hand from the closed forms and
double-checked with the oracles before the implementation existed.
"""

import math

import mpmath
import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from conelab.geometry import (
    CrossSectionSpectrum,
    SpectrumError,
    constant_cone,
    cross_section_spectrum,
)
from conelab.mellin import (
    MellinError,
    TemplateError,
    WindowError,
    _log_flag,
    _symbol_roots,
    admissible_weights,
    bilaplacian_asymptotics,
    circle_indicial_exponent,
    curvature_condition,
    laplacian_poles,
    predicted_deviation_exponent,
)


def circle_spectrum(rho0, k_max=2):
    return cross_section_spectrum(constant_cone(rho0), k_max=k_max)


# ---------------------------------------------------------------- pole sets


def test_pole_worked_values():
    # n=1, lam=-4 (rho0=0.5, k=1): poles +-2, simple
    rep = laplacian_poles(circle_spectrum(0.5, k_max=1))
    g0, g1 = rep.groups
    assert g0.eigenvalue == 0.0
    assert g0.poles == (0j,) and g0.multiplicities == (2,)
    assert g1.eigenvalue == -4.0
    assert g1.poles == (2 + 0j, -2 + 0j) and g1.multiplicities == (1, 1)

    # n=3, lam=0: poles 2 and 0, simple
    rep3 = laplacian_poles(CrossSectionSpectrum.from_table(3, (0.0,)))
    (g,) = rep3.groups
    assert g.poles == (2 + 0j, 0j) and g.multiplicities == (1, 1)


@settings(max_examples=80, deadline=None)
@given(
    n=st.integers(min_value=1, max_value=4),
    lams=st.lists(
        st.floats(min_value=-100.0, max_value=-1e-3), min_size=1, max_size=5
    ),
)
def test_pole_positions_match_numpy_roots(n, lams):
    ev = (0.0,) + tuple(sorted(lams, reverse=True))
    spec = CrossSectionSpectrum.from_table(n, ev)
    rep = laplacian_poles(spec)
    for group in rep.groups:
        lam = group.eigenvalue
        got = sorted(
            (p for p, m in zip(group.poles, group.multiplicities) for _ in range(m)),
            key=lambda z: (z.real, z.imag),
        )
        want = sorted(
            (complex(r) for r in np.roots([1.0, -(n - 1.0), lam])),
            key=lambda z: (z.real, z.imag),
        )
        assert len(got) == len(want) == 2
        scale = max(1.0, abs(lam))
        for a, b in zip(got, want):
            assert abs(a - b) <= 1e-10 * scale
            # residual of the quadratic at the reported pole
            assert abs(a * a - (n - 1) * a + lam) <= 1e-12 * max(scale, abs(a) ** 2)
        # pairs are symmetric about (n-1)/2
        assert abs((got[0] + got[1]) / 2 - (n - 1) / 2) <= 1e-12 * scale


def test_pole_merge_at_vanishing_discriminant():
    # n=1, lam=0: double root at 0
    spec = CrossSectionSpectrum.from_table(1, (0.0,))
    (g,) = laplacian_poles(spec).groups
    assert g.poles == (0j,) and g.multiplicities == (2,)


def test_symbol_roots_complex_branch():
    # not reachable through non-positive spectra, but the helper must be sound
    r = _symbol_roots(1, 1.0)
    assert set(r) == {1j, -1j}


# ------------------------------------------------------------ weight windows


def _iv_gamma_bounds(n, rho0_num, rho0_den, q):
    """Interval-certified (gamma_min_evo, gamma_max) for a circle tip.

    rho0 is passed as a rational so the interval is tight.
    """
    iv = mpmath.iv
    rho0 = iv.mpf(rho0_num) / iv.mpf(rho0_den)
    lam1 = -1 / (rho0 * rho0)
    half = iv.mpf(n - 1) / 2
    gmax = iv.mpf(n + 1) / 2
    cand = -1 + iv.sqrt(half * half - lam1)
    if cand.b < gmax.a:
        gmax = cand
    gmin = iv.mpf(n - 3) / 2 + iv.mpf(2) / iv.mpf(q)
    return gmin, gmax


def test_window_worked_example():
    # n=1, rho0=1/3, q=4: evolution window (-0.5, 1)
    w = admissible_weights(1, p=8.0, q=4.0, lambda1=-9.0, path="evolution")
    assert w.gamma_min == pytest.approx(-0.5, abs=1e-15)
    assert w.gamma_max == pytest.approx(1.0, abs=1e-15)
    assert w.nonempty and w.q_ok
    # 2/q + (n+1)/p = 0.75 < 2
    assert w.p_ok is True
    gmin, gmax = _iv_gamma_bounds(1, 1, 3, 4)
    assert float(gmin.b) < float(gmax.a)  # certified nonempty
    assert float(gmin.a) <= w.gamma_min <= float(gmin.b)
    assert float(gmax.a) <= w.gamma_max <= float(gmax.b)


def test_window_empty_for_weak_curvature():
    # lam1 = -0.01: gamma_max = -0.9 < gamma_min = -0.5
    w = admissible_weights(1, p=None, q=4.0, lambda1=-0.01, path="evolution")
    assert w.gamma_max == pytest.approx(-0.9, abs=1e-12)
    assert w.gamma_min == pytest.approx(-0.5, abs=1e-15)
    assert not w.nonempty and not w.q_ok
    iv = mpmath.iv
    lam1 = iv.mpf("-0.01")
    gmax = -1 + iv.sqrt(iv.mpf(0) - lam1)
    gmin = iv.mpf(-1) + iv.mpf(2) / 4
    assert float(gmax.b) < float(gmin.a)  # certified empty


def test_window_elliptic_path():
    w = admissible_weights(1, p=None, q=None, lambda1=-9.0, path="elliptic")
    assert w.gamma_min == -1.0 and w.gamma_max == 1.0
    assert w.nonempty and not w.q_ok and w.p_ok is None


def test_window_rejects_bad_inputs():
    with pytest.raises(SpectrumError):
        admissible_weights(1, None, 4.0, lambda1=0.0)
    with pytest.raises(SpectrumError):
        admissible_weights(1, None, 4.0, lambda1=0.5)
    with pytest.raises(MellinError):
        admissible_weights(1, None, 4.0, lambda1=-1.0, path="bogus")
    with pytest.raises(MellinError):
        admissible_weights(1, None, None, lambda1=-1.0, path="evolution")
    with pytest.raises(MellinError):
        admissible_weights(1, 1.0, 4.0, lambda1=-1.0)


def test_window_emptiness_random_cross_check():
    rng = np.random.default_rng(2024)
    for _ in range(100):
        n = int(rng.integers(1, 5))
        lam1 = -float(rng.uniform(1e-3, 50.0))
        q = float(rng.uniform(1.01, 12.0))
        w = admissible_weights(n, p=None, q=q, lambda1=lam1, path="evolution")
        half = (n - 1) / 2
        gmax = min(-1 + math.sqrt(half * half - lam1), (n + 1) / 2)
        empty_direct = (n - 3) / 2 + 2 / q >= gmax
        assert w.nonempty == (not empty_direct)
        assert w.q_ok == w.nonempty  # evolution window nonempty iff 2/q fits


def test_curvature_condition_boundary():
    # n=1: holds iff rho0 <= 1/2
    assert curvature_condition(1, -1.0 / 0.5**2) is True
    assert curvature_condition(1, -1.0 / (0.5 + 1e-6) ** 2) is False
    with pytest.raises(SpectrumError):
        curvature_condition(1, 0.0)


# ------------------------------------------------------- asymptotics template


def _mp_template_oracle(n, lams, gamma):
    """Brute-force oracle: 50-digit roots of sigma(z) sigma(z+2), strip filter."""
    mpmath.mp.dps = 50
    lo = mpmath.mpf(n + 1) / 2 - gamma - 4
    hi = mpmath.mpf(n + 1) / 2 - gamma - 2
    out = []
    for lam in lams:
        half = mpmath.mpf(n - 1) / 2
        s = mpmath.sqrt(half * half - lam)
        roots = [half + s, half - s, half + s - 2, half - s - 2]
        merged = []
        for r in roots:
            for slot in merged:
                if abs(r - slot[0]) <= 1e-9:
                    slot[1] += 1
                    break
            else:
                merged.append([r, 1])
        for r, order in merged:
            if lo <= r < hi:
                out.append((lam, float(r), order))
    return sorted(out)


def test_template_worked_rho08():
    # rho0=0.8, gamma=0.2: strip [-3.2, -1.2); x^2 log term from k=0,
    # x^1.25 from k=1, x^0.75 absent.
    spec = circle_spectrum(0.8, k_max=1)
    tpl = bilaplacian_asymptotics(spec, 0.2)
    assert tpl.strip == pytest.approx((-3.2, -1.2))
    assert tpl.includes_constant
    powers = sorted((t.power, t.log_power) for t in tpl.terms)
    assert powers == [(1.25, 0), (2.0, 1)]
    assert tpl.terms_for_label(1) == tpl.terms_for_label(-1)
    assert not any(abs(t.power - 0.75) < 1e-9 for t in tpl.terms)
    oracle = _mp_template_oracle(1, [0.0, -1.5625], 0.2)
    assert len(oracle) == 2  # one zero per distinct eigenvalue in strip
    assert {round(-r, 9) for _, r, _ in oracle} == {1.25, 2.0}


def test_template_constant_only_spectrum():
    # no mode beyond k=0: gamma_max = (n+1)/2; near-top gamma keeps x^2 log
    spec = CrossSectionSpectrum.from_table(1, (0.0,), labels=(0,))
    tpl = bilaplacian_asymptotics(spec, 0.99)
    assert [(t.power, t.log_power) for t in tpl.terms] == [(2.0, 1)]
    assert tpl.includes_constant


def test_template_automax_powers():
    # auto-max gamma = gamma_max - 1e-6 per tip warp; k=1 leading exponents
    expected = {0.4: 2.5, 0.6: 5.0 / 3.0, 0.8: 1.25}
    for rho0, lead in expected.items():
        spec = circle_spectrum(rho0, k_max=1)
        half = 0.0
        gmax = min(-1 + math.sqrt(half - spec.lambda1), 1.0)
        tpl = bilaplacian_asymptotics(spec, gmax - 1e-6)
        k1 = [t.power for t in tpl.terms if 1 in t.labels]
        assert min(k1) == pytest.approx(lead, abs=1e-9)
        # k=0 always contributes x^2 with a log flag at these weights
        k0 = [(t.power, t.log_power) for t in tpl.terms if 0 in t.labels]
        assert (2.0, 1) in [(round(p, 9), f) for p, f in k0]


def test_template_rho04_automax_single_k1_power():
    # strip [-4+1e-6, -2+1e-6) keeps 2.5 for k=1; the shifted root -4.5
    # falls just below the strip floor
    spec = circle_spectrum(0.4, k_max=1)
    tpl = bilaplacian_asymptotics(spec, 1.0 - 1e-6)
    k1 = sorted(t.power for t in tpl.terms if 1 in t.labels)
    assert k1 == pytest.approx([2.5])
    oracle = _mp_template_oracle(1, [-6.25], 1.0 - 1e-6)
    assert [round(-r, 9) for _, r, _ in oracle] == [2.5]


def test_template_cross_factor_double_zero():
    # smooth tip rho0=1: sigma(-1)=0 and sigma(+1-2)=0 coincide -> x log x
    spec = circle_spectrum(1.0, k_max=1)
    tpl = bilaplacian_asymptotics(spec, -0.5)
    k1 = [(t.power, t.log_power, t.zero_order) for t in tpl.terms if 1 in t.labels]
    assert k1 == [(1.0, 1, 2)]


def test_template_gamma_window_precondition():
    spec = circle_spectrum(0.8, k_max=1)
    with pytest.raises(WindowError):
        bilaplacian_asymptotics(spec, 0.25)  # at gamma_max exactly
    with pytest.raises(WindowError):
        bilaplacian_asymptotics(spec, -1.0)


def test_log_flag_rejects_order_three():
    assert _log_flag(1) == 0 and _log_flag(2) == 1
    with pytest.raises(TemplateError):
        _log_flag(3)


@settings(max_examples=60, deadline=None)
@given(
    rho0=st.floats(min_value=0.15, max_value=1.5),
    frac=st.floats(min_value=1e-3, max_value=1.0 - 1e-3),
    k_max=st.integers(min_value=0, max_value=6),
)
def test_template_strip_membership_property(rho0, frac, k_max):
    spec = circle_spectrum(rho0, k_max=k_max)
    gmax = 1.0 if spec.lambda1 == 0.0 else min(-1 + math.sqrt(-spec.lambda1), 1.0)
    gamma = -1.0 + frac * (gmax + 1.0)
    tpl = bilaplacian_asymptotics(spec, gamma)
    lo, hi = tpl.strip
    for t in tpl.terms:
        rho = t.rho.real if isinstance(t.rho, complex) else t.rho
        assert lo <= rho < hi
        assert t.log_power in (0, 1)
        oracle = _mp_template_oracle(1, [t.eigenvalue], gamma)
        assert any(abs(r - rho) < 1e-7 for _, r, _ in oracle)


# ------------------------------------------------------------- decay numbers


def test_prediction_worked_values():
    spec = circle_spectrum(0.4, k_max=1)
    # q=2, gamma=0.5, eps=0.1: delta = 1.1, alpha = 0.5 + 1 - 1.1 = 0.4
    tpl = bilaplacian_asymptotics(spec, 0.5)
    pred = predicted_deviation_exponent(tpl, 0.5, q=2.0, eps=0.1)
    assert pred.alpha_pred == pytest.approx(0.4, abs=1e-12)
    assert pred.delta == pytest.approx(1.1)
    # q>2: delta = 0, alpha = gamma + 1
    tpl2 = bilaplacian_asymptotics(spec, 1.0 - 1e-6)
    pred2 = predicted_deviation_exponent(tpl2, 1.0 - 1e-6, q=4.0)
    assert pred2.delta == 0.0
    assert pred2.alpha_pred == pytest.approx(2.0, abs=2e-6)
    assert pred2.mode_exponents[0] == pytest.approx(2.0)
    assert pred2.mode_exponents[1] == pytest.approx(2.5)
    assert pred2.sharper_alpha == pytest.approx(2.0)


def test_prediction_mode1_active_only():
    # rho0=0.8, gamma=0.2, only k=1 seeded: leading exponent 1.25 = 1/rho0
    spec = circle_spectrum(0.8, k_max=1)
    tpl = bilaplacian_asymptotics(spec, 0.2)
    pred = predicted_deviation_exponent(tpl, 0.2, q=4.0, active_modes=(1,))
    assert pred.sharper_alpha == pytest.approx(1.25, abs=1e-12)
    assert pred.sharper_alpha == pytest.approx(
        circle_indicial_exponent(0.8, 1), abs=1e-12
    )
    with pytest.raises(MellinError):
        predicted_deviation_exponent(tpl, 0.2, q=4.0, eps=0.0)


@settings(max_examples=60, deadline=None)
@given(
    rho0=st.floats(min_value=0.2, max_value=0.49),
    q=st.floats(min_value=1.1, max_value=8.0),
    frac=st.floats(min_value=1e-3, max_value=1.0 - 1e-3),
)
def test_alpha_positive_inside_window(rho0, q, frac):
    """alpha_pred > 0 inside the evolution window for eps below the slack."""
    lam1 = -1.0 / rho0**2
    w = admissible_weights(1, p=None, q=q, lambda1=lam1, path="evolution")
    if not w.nonempty:
        return
    gamma = w.gamma_min + frac * (w.gamma_max - w.gamma_min)
    eps = (gamma - w.gamma_min) / 2 if q <= 2.0 else 0.05
    spec = circle_spectrum(rho0, k_max=1)
    tpl = bilaplacian_asymptotics(spec, gamma)
    pred = predicted_deviation_exponent(tpl, gamma, q=q, eps=eps)
    assert pred.alpha_pred > 0.0


def test_mode1_exponent_decreases_with_tip_warp():
    """Wider tips decay slower: k=1 leading exponent is 1/rho0, decreasing."""
    rng = np.random.default_rng(7)
    rho0s = np.sort(rng.uniform(0.3, 0.95, size=12))
    leads = []
    for rho0 in rho0s:
        spec = circle_spectrum(float(rho0), k_max=1)
        gmax = min(-1 + math.sqrt(-spec.lambda1), 1.0)
        tpl = bilaplacian_asymptotics(spec, gmax - 1e-6)
        pred = predicted_deviation_exponent(tpl, gmax - 1e-6, q=4.0, active_modes=(1,))
        leads.append(pred.sharper_alpha)
        assert pred.sharper_alpha == pytest.approx(1.0 / rho0, rel=1e-12)
    assert all(a > b for a, b in zip(leads, leads[1:]))
