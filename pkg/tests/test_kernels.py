import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.integrate import quad

from tfmbe import (apply_direct, build_uniform, convergence_order,
                   kernel_sign_gap, l1_row, l1plus_row, multiterm_apply,
                   quadratic_form, rl_weight)

from conftest import random_mesh


# ---------------------------------------------------------------------------
# adaptive-quadrature oracle for the defining integrals
# ---------------------------------------------------------------------------

def l1_weight_quad(levels, alpha, n, k):
    """Cell average of w_{1-a}(t_n - s) over cell k, by adaptive quadrature."""
    ga = math.gamma(1.0 - alpha)
    tn = levels[n]
    a, b = levels[k - 1], levels[k]
    if k == n:
        # integrand (t_n - s)^(-alpha) is an endpoint weight (b == t_n)
        val, _ = quad(lambda s: 1.0, a, b, weight="alg", wvar=(0.0, -alpha))
    else:
        val, _ = quad(lambda s: (tn - s) ** (-alpha), a, b,
                      epsabs=1e-14, epsrel=1e-13, limit=200)
    return val / (ga * (b - a))


def l1plus_weight_quad(levels, alpha, n, k):
    """Double cell average of w_{1-a}(t - s), by nested adaptive quadrature."""
    ga = math.gamma(1.0 - alpha)
    tn1, tn = levels[n - 1], levels[n]
    sk1, sk = levels[k - 1], levels[k]

    def inner(t):
        hi = min(t, sk)
        if hi <= sk1:
            return 0.0
        if hi == t:
            v, _ = quad(lambda s: 1.0, sk1, t, weight="alg", wvar=(0.0, -alpha))
        else:
            v, _ = quad(lambda s: (t - s) ** (-alpha), sk1, hi,
                        epsabs=1e-14, epsrel=1e-13, limit=200)
        return v

    val, _ = quad(inner, tn1, tn, epsabs=1e-13, epsrel=1e-12, limit=200)
    return val / (ga * (tn - tn1) * (sk - sk1))


# ---------------------------------------------------------------------------
# closed forms
# ---------------------------------------------------------------------------

def test_rl_weight_basics():
    assert rl_weight(1.5, 1.0) == pytest.approx(1.0 / math.gamma(1.5))
    assert rl_weight(2.0, 0.0) == 0.0
    t = np.array([0.25, 1.0, 4.0])
    assert np.all(rl_weight(0.5, t) > 0)


def test_l1_diagonal_half_order():
    row = l1_row(build_uniform(4.0, 4), 0.5, 3)
    assert row.weights[0] == pytest.approx(1.0 / math.gamma(1.5), rel=1e-14)


def test_l1_uniform_structure():
    alpha, tau, n = 0.3, 0.25, 7
    row = l1_row(build_uniform(tau * 8, 8), alpha, n)
    for j in range(n):
        expect = (rl_weight(2 - alpha, j + 1.0) - rl_weight(2 - alpha, float(j))) \
            / tau ** alpha
        assert row.weights[j] == pytest.approx(expect, rel=1e-13)


def test_l1plus_diagonal_closed_form():
    row = l1plus_row(build_uniform(3.0, 3), 0.5, 2)
    assert row.weights[0] == pytest.approx(1.0 / math.gamma(2.5), rel=1e-14)
    assert row.weights[0] == pytest.approx(0.7522527780636751, rel=1e-7)


def test_l1plus_single_step_row():
    mesh = random_mesh(np.random.default_rng(0), 5)
    alpha = 0.42
    row = l1plus_row(mesh, alpha, 1)
    assert row.weights.size == 1
    tau1 = mesh.taus[0]
    assert row.weights[0] == pytest.approx(
        tau1 ** (-alpha) / math.gamma(3 - alpha), rel=1e-14)


def test_alpha_validation():
    mesh = build_uniform(1.0, 4)
    for bad in (0.0, 1.0, -0.3, 1.7):
        with pytest.raises(ValueError):
            l1_row(mesh, bad, 2)
        with pytest.raises(ValueError):
            l1plus_row(mesh, bad, 2)


@pytest.mark.parametrize("alpha", [0.3, 0.7])
def test_rows_match_quadrature_oracle(alpha, rng):
    mesh = random_mesh(rng, 10, ratio_lo=0.5, ratio_hi=2.0)
    for n in range(1, 11):
        row_p = l1plus_row(mesh, alpha, n)
        row_1 = l1_row(mesh, alpha, n)
        for k in range(1, n + 1):
            ref_p = l1plus_weight_quad(mesh.levels, alpha, n, k)
            ref_1 = l1_weight_quad(mesh.levels, alpha, n, k)
            assert row_p.weights[n - k] == pytest.approx(ref_p, rel=1e-10)
            assert row_1.weights[n - k] == pytest.approx(ref_1, rel=1e-10)


# ---------------------------------------------------------------------------
# kernel sign structure
# ---------------------------------------------------------------------------

@given(st.floats(0.05, 0.95), st.integers(2, 24), st.integers(0, 10_000))
@settings(max_examples=60, deadline=None)
def test_positivity_and_ordering(alpha, n, seed):
    mesh = random_mesh(np.random.default_rng(seed), n)
    row_p = l1plus_row(mesh, alpha, n)
    row_1 = l1_row(mesh, alpha, n)
    assert np.all(row_p.weights > 0)
    assert np.all(row_1.weights > 0)
    # collocation weights decrease with history distance
    assert np.all(np.diff(row_1.weights) < 0)
    # cell-averaged weights decrease beyond the diagonal entry
    if n >= 3:
        assert np.all(np.diff(row_p.weights[1:]) < 0)


@given(st.floats(0.05, 0.95), st.integers(1, 16), st.integers(0, 10_000))
@settings(max_examples=60, deadline=None)
def test_quadratic_form_nonnegative(alpha, n, seed):
    gen = np.random.default_rng(seed)
    mesh = random_mesh(gen, max(n, 2))
    w = gen.standard_normal(n)
    q = quadratic_form(mesh, alpha, w, kind="l1plus")
    assert q >= -1e-12 * float(w @ w)


def test_quadratic_form_single_entry():
    mesh = build_uniform(1.0, 2)
    q = quadratic_form(mesh, 0.6, [1.0], kind="l1plus")
    assert q == pytest.approx(l1plus_row(mesh, 0.6, 1).weights[0])
    assert q > 0


def test_l1_quadratic_form_recorded_not_asserted(rng):
    # no sign guarantee on nonuniform meshes; just exercise the code path
    mesh = random_mesh(rng, 12)
    q = quadratic_form(mesh, 0.5, rng.standard_normal(12), kind="l1")
    assert np.isfinite(q)


def test_summation_by_cells_identity(rng):
    mesh = random_mesh(rng, 14)
    alpha = 0.45
    w = rng.standard_normal(14)
    lhs = sum(w[k - 1] * float(apply_direct(mesh, alpha, w, k)) for k in range(1, 15))
    rhs = quadratic_form(mesh, alpha, w)
    assert lhs == pytest.approx(rhs, abs=1e-12 * max(1.0, abs(rhs)))


def test_sign_gap_values():
    assert kernel_sign_gap(0.9, 1.0, 1.0) > 0
    assert kernel_sign_gap(0.01, 1.0, 1.0) < 0
    with pytest.raises(ValueError):
        kernel_sign_gap(0.5, -1.0, 1.0)


@given(st.floats(0.05, 0.95), st.floats(0.2, 5.0))
@settings(max_examples=40, deadline=None)
def test_sign_gap_matches_rows(alpha, rho):
    # two steps: tau_1 = rho * tau_2
    tau2 = 0.37
    tau1 = rho * tau2
    mesh = np.array([0.0, tau1, tau1 + tau2])
    row = l1plus_row(mesh, alpha, 2)
    gap = row.weights[0] - row.weights[1]
    assert kernel_sign_gap(alpha, rho, tau2) == pytest.approx(
        gap, abs=1e-12 * max(1.0, abs(gap)))


# ---------------------------------------------------------------------------
# applying the kernels
# ---------------------------------------------------------------------------

def test_apply_direct_zero_increments(rng):
    mesh = random_mesh(rng, 6)
    assert apply_direct(mesh, 0.5, np.zeros(6), 6) == 0.0


def test_apply_direct_single_term(rng):
    mesh = random_mesh(rng, 6)
    incs = rng.standard_normal(6)
    row = l1plus_row(mesh, 0.5, 1)
    assert apply_direct(mesh, 0.5, incs, 1) == pytest.approx(
        row.weights[0] * incs[0], rel=1e-14)


def test_apply_direct_length_check(rng):
    mesh = random_mesh(rng, 6)
    with pytest.raises(ValueError):
        apply_direct(mesh, 0.5, np.zeros(3), 5)


def test_apply_direct_fields(rng):
    mesh = random_mesh(rng, 5)
    incs = rng.standard_normal((5, 3, 2))
    out = apply_direct(mesh, 0.3, incs, 4)
    assert out.shape == (3, 2)
    ref = np.zeros((3, 2))
    row = l1plus_row(mesh, 0.3, 4)
    for k in range(1, 5):
        ref += row.weights[4 - k] * incs[k - 1]
    assert np.allclose(out, ref, rtol=1e-13)


def test_multiterm_degenerate_cases(rng):
    mesh = random_mesh(rng, 8)
    incs = rng.standard_normal(8)
    single = multiterm_apply([(1.0, 0.4)], mesh, incs, 7)
    assert single == pytest.approx(apply_direct(mesh, 0.4, incs, 7), rel=1e-14)
    halves = multiterm_apply([(0.5, 0.4), (0.5, 0.4)], mesh, incs, 7)
    assert halves == pytest.approx(single, rel=1e-14)
    with pytest.raises(ValueError):
        multiterm_apply([], mesh, incs, 7)
    with pytest.raises(ValueError):
        multiterm_apply([(-1.0, 0.4)], mesh, incs, 7)


def test_multiterm_midpoint_solve_second_order():
    """Two-order combination solved by midpoint collocation: order ~ 2.

    Exact solution w_{1+s}(t); the matching source for weights (1, 1) and
    orders (0.3, 0.7) is w_{1+s-0.3} + w_{1+s-0.7} by the power rule.
    """
    sigma = 2.5
    terms = [(1.0, 0.3), (1.0, 0.7)]
    errors, taus = [], []
    for n_steps in (32, 64, 128):
        mesh = build_uniform(1.0, n_steps)
        levels = mesh.levels
        incs = np.zeros(n_steps)
        u = 0.0
        err = 0.0
        for n in range(1, n_steps + 1):
            a0 = sum(w * l1plus_row(levels, a, n).weights[0] for w, a in terms)
            hist = 0.0
            if n > 1:
                for w, a in terms:
                    row = l1plus_row(levels, a, n)
                    hist += w * float(np.dot(row.weights[:0:-1], incs[:n - 1]))
            t_mid = 0.5 * (levels[n - 1] + levels[n])
            f = sum(w * rl_weight(1 + sigma - a, t_mid) for w, a in terms)
            du = (f - hist) / a0
            incs[n - 1] = du
            u += du
            err = max(err, abs(u - rl_weight(1 + sigma, levels[n])))
        errors.append(err)
        taus.append(mesh.tau_max)
    orders = convergence_order(errors, taus)
    assert all(abs(o - 2.0) < 0.3 for o in orders)
