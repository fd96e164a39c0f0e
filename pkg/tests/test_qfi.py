"""QFI engine tests: the state QFI eigen-sum, single-use channel values
against closed forms, the two asymptotic constants, optimal inputs and
their attainment, the N-copy oracle and the minimax route."""

import numpy as np
import pytest

from channel_qfi import catalog, qfi
from channel_qfi.catalog import DepolarizingParams
from channel_qfi.channel import apply, hnks, param_channel, pauli_matrices
from channel_qfi.dephasing import DephasingParams, dephasing_channel
from channel_qfi.errors import (DegenerateDenominator, HnksSatisfied,
                                HnksViolated, NotDensityMatrix, NotTraceless,
                                TooLarge)
from channel_qfi.numerics import purify, sld_solve
from channel_qfi.qfi import (channel_qfi_single, error_propagation_bound,
                             hl_constant, max_min_qfi, min_h_quad,
                             n_copy_qfi, optimal_input_single,
                             purified_input_qfi, sql_constant, state_qfi)

from conftest import random_herm, random_pure, random_state, random_tp_channel

SX, SY, SZ = pauli_matrices()
I2 = np.eye(2, dtype=complex)
PLUS = 0.5 * np.array([[1, 1], [1, 1]], dtype=complex)


def rotated_plus_derivative():
    # d/domega of e^{-i omega sz/2} |+><+| e^{i omega sz/2} at omega = 0
    return -0.5j * (SZ @ PLUS - PLUS @ SZ)


def attained_qfi(channel, rho):
    """QFI of the channel output at the purification of a probe state."""
    psi = purify(rho)
    out, dout = apply(channel, np.outer(psi, psi.conj()),
                      ancilla_dim=rho.shape[0])
    return state_qfi(out, dout)


# ---------------------------------------------------------------------------
# state QFI
# ---------------------------------------------------------------------------

def test_state_qfi_rotated_plus_state():
    assert state_qfi(PLUS, rotated_plus_derivative()) == pytest.approx(1.0, abs=1e-12)


def test_state_qfi_static_mixture_is_zero():
    assert state_qfi(I2 / 2.0, np.zeros((2, 2))) == 0.0


def test_state_qfi_dephased_plus_state():
    # p = 0.1, dphi = 1: coherence (1-2p) gives (1-2p)^2 = 0.64
    ch = dephasing_channel(DephasingParams(p=0.1))
    out, dout = apply(ch, PLUS)
    assert state_qfi(out, dout) == pytest.approx(0.64, abs=1e-12)


@pytest.mark.parametrize("seed", [0, 1, 2])
def test_state_qfi_pure_state_formula(seed):
    # rank-one rho under Hamiltonian evolution: F = 4 Var_psi(G)
    rng = np.random.default_rng(seed)
    psi = random_pure(rng, 3)
    G = random_herm(rng, 3)
    rho = np.outer(psi, psi.conj())
    drho = -1j * (G @ rho - rho @ G)
    var = np.vdot(psi, G @ G @ psi).real - np.vdot(psi, G @ psi).real ** 2
    assert state_qfi(rho, drho) == pytest.approx(4.0 * var, rel=1e-9, abs=1e-12)


@pytest.mark.parametrize("seed", [3, 4, 5])
def test_state_qfi_equals_sld_quadratic_form(seed):
    rng = np.random.default_rng(seed)
    rho = random_state(rng, 4)
    G = random_herm(rng, 4)
    drho = -1j * (G @ rho - rho @ G)
    L = sld_solve(rho, drho)
    quad = float(np.real(np.trace(L @ L @ rho)))
    assert state_qfi(rho, drho) == pytest.approx(quad, rel=1e-8, abs=1e-10)


def test_state_qfi_input_validation():
    with pytest.raises(NotDensityMatrix):
        state_qfi(np.diag([1.5, -0.5]).astype(complex), np.zeros((2, 2)))
    with pytest.raises(NotDensityMatrix):
        state_qfi(np.diag([0.7, 0.7]).astype(complex), np.zeros((2, 2)))
    with pytest.raises(NotTraceless):
        state_qfi(I2 / 2.0, I2)


# ---------------------------------------------------------------------------
# single-use channel QFI
# ---------------------------------------------------------------------------

def test_channel_qfi_dephasing_point_one():
    rep = channel_qfi_single(dephasing_channel(DephasingParams(p=0.1)))
    assert rep.value == pytest.approx(0.64, abs=1e-7)
    assert rep.regime == "SQL"


def test_channel_qfi_generic_depolarizing():
    params = DepolarizingParams(0.1, 0.2, 0.1)
    rep = channel_qfi_single(catalog.depolarizing_channel(params))
    closed = catalog.depolarizing_closed_forms(params)
    assert rep.value == pytest.approx(closed["F1"], abs=1e-7)
    assert closed["F1"] == pytest.approx(1.0 - params.w, abs=1e-15)


def test_channel_qfi_vanishing_point():
    # w = 1 exactly: no information survives a single use
    ch = catalog.depolarizing_channel(DepolarizingParams(0.4, 0.4, 0.1))
    rep = channel_qfi_single(ch)
    assert rep.value < 1e-9
    assert rep.regime == "Zero"


def test_channel_qfi_regime_tracks_span_membership():
    hl = channel_qfi_single(dephasing_channel(DephasingParams(p=0.0, dphi=0.7)))
    assert hl.regime == "HL"
    assert hl.value == pytest.approx(0.49, abs=1e-8)
    sql = channel_qfi_single(catalog.ad_channel(0.3))
    assert sql.regime == "SQL"


def test_channel_qfi_report_details(rng):
    ch = random_tp_channel(rng, d=2, r=2)
    rep = channel_qfi_single(ch)
    assert rep.value >= 0.0
    assert rep.details["iterations"] > 0
    assert rep.details["rel_gap"] <= 1e-7
    assert rep.optimal_h.shape == (ch.r, ch.r)


# ---------------------------------------------------------------------------
# asymptotic constants
# ---------------------------------------------------------------------------

def test_sql_constant_dephasing():
    rep = sql_constant(dephasing_channel(DephasingParams(p=0.1)))
    assert rep.value == pytest.approx(16.0 / 9.0, abs=1e-7)
    assert rep.regime == "SQL"


def test_sql_constant_amplitude_damping():
    assert sql_constant(catalog.ad_channel(0.5)).value == pytest.approx(4.0, abs=1e-7)


def test_sql_constant_generic_depolarizing():
    params = DepolarizingParams(0.1, 0.2, 0.1)
    rep = sql_constant(catalog.depolarizing_channel(params))
    closed = catalog.depolarizing_closed_forms(params)
    assert rep.value == pytest.approx(closed["F_sql"], abs=1e-7)
    assert closed["F_sql"] == pytest.approx((1.0 - params.w) / params.w, abs=1e-12)


def test_sql_constant_refuses_out_of_span_generator():
    with pytest.raises(HnksViolated):
        sql_constant(dephasing_channel(DephasingParams(p=0.0)))


def test_hl_constant_unitary_rotation():
    ch = param_channel([I2], [-0.5j * SZ])
    rep = hl_constant(ch)
    assert rep.value == pytest.approx(1.0, abs=1e-8)
    assert rep.regime == "HL"


def test_hl_constant_single_axis_depolarizing():
    rep = hl_constant(catalog.depolarizing_channel(DepolarizingParams(0.3, 0.0, 0.0)))
    assert rep.value == pytest.approx(1.0, abs=1e-7)


def test_hl_constant_noiseless_dephasing():
    rep = hl_constant(dephasing_channel(DephasingParams(p=0.0, dphi=0.7)))
    assert rep.value == pytest.approx(0.49, abs=1e-8)
    # the two internal routes (gauge norm, span distance) are both reported
    assert rep.details["beta_norm"] == pytest.approx(rep.details["span_distance"],
                                                     abs=1e-6)


def test_hl_constant_refuses_in_span_generator():
    with pytest.raises(HnksSatisfied):
        hl_constant(dephasing_channel(DephasingParams(p=0.1)))


# ---------------------------------------------------------------------------
# optimal inputs and attainment
# ---------------------------------------------------------------------------

def test_optimal_input_attains_dephasing_qfi():
    ch = dephasing_channel(DephasingParams(p=0.2))
    rho = optimal_input_single(ch)
    assert attained_qfi(ch, rho) == pytest.approx(0.36, abs=1e-6)


def test_optimal_input_unitary_balances_eigenstates():
    ch = param_channel([I2], [-0.5j * SZ])
    rho = optimal_input_single(ch)
    # variance maximization demands equal weight on both sz eigenstates
    assert rho[0, 0].real == pytest.approx(0.5, abs=1e-6)
    assert rho[1, 1].real == pytest.approx(0.5, abs=1e-6)
    assert attained_qfi(ch, rho) == pytest.approx(1.0, abs=1e-6)


@pytest.mark.parametrize("seed", [0, 1])
def test_optimal_input_attains_single_use_value(seed):
    rng = np.random.default_rng(seed)
    ch = random_tp_channel(rng, d=2, r=2)
    rep = channel_qfi_single(ch, compute_input=True)
    assert attained_qfi(ch, rep.optimal_input) == pytest.approx(
        rep.value, rel=1e-5, abs=1e-7)


def test_maximally_entangled_input_attains_pauli_qfi():
    ch = catalog.pauli_channel([0.7, 0.1, 0.1, 0.1])
    rep = channel_qfi_single(ch)
    # probe side of the maximally entangled state is I/2
    assert attained_qfi(ch, I2 / 2.0) == pytest.approx(rep.value, rel=1e-6)


# ---------------------------------------------------------------------------
# purified-input quadratic route
# ---------------------------------------------------------------------------

@pytest.mark.parametrize("seed", [0, 1, 2])
def test_purified_input_qfi_below_channel_qfi(seed):
    rng = np.random.default_rng(seed)
    ch = random_tp_channel(rng, d=2, r=2)
    F1 = channel_qfi_single(ch).value
    rho = random_state(rng, 2)
    assert purified_input_qfi(ch, rho) <= F1 + 1e-7 * (1.0 + F1)


def test_min_h_quad_value_matches_direct_evaluation(rng):
    ch = random_tp_channel(rng, d=2, r=2)
    C = random_state(rng, 2)
    value, h = min_h_quad(ch, C)
    ktil = [ch.dkraus[i] - 1j * sum(h[i, j] * ch.kraus[j] for j in range(ch.r))
            for i in range(ch.r)]
    direct = 4.0 * sum(float(np.linalg.norm(kt @ C) ** 2) for kt in ktil)
    assert value == pytest.approx(direct, rel=1e-10, abs=1e-12)


def test_min_h_quad_constrained_dominates_free(rng):
    ch = random_tp_channel(rng, d=2, r=2)
    C = random_state(rng, 2)
    free, _ = min_h_quad(ch, C)
    constrained, h = min_h_quad(ch, C, constrain_beta_zero=True)
    assert constrained >= free - 1e-10
    from channel_qfi.channel import alpha_beta
    _, be = alpha_beta(ch, h)
    assert np.max(np.abs(be)) < 1e-7


def test_min_h_quad_constrained_needs_span_membership():
    ch = dephasing_channel(DephasingParams(p=0.0))
    with pytest.raises(HnksViolated):
        min_h_quad(ch, I2 / np.sqrt(2.0), constrain_beta_zero=True)


# ---------------------------------------------------------------------------
# N-copy oracle
# ---------------------------------------------------------------------------

def test_n_copy_single_reduces_to_channel_qfi():
    ch = dephasing_channel(DephasingParams(p=0.1))
    assert n_copy_qfi(ch, 1).value == pytest.approx(
        channel_qfi_single(ch).value, abs=1e-12)


def test_n_copy_pauli_is_additive():
    ch = catalog.pauli_channel([0.8, 0.2, 0.0, 0.0])
    rep1 = channel_qfi_single(ch)
    rep2 = n_copy_qfi(ch, 2)
    assert rep2.value == pytest.approx(2.0 * rep1.value, rel=1e-5)


def test_n_copy_dephasing_is_superadditive():
    # with dp = 0 the two-copy value must exceed twice the single-use one
    ch = dephasing_channel(DephasingParams(p=0.1))
    rep2 = n_copy_qfi(ch, 2)
    lower = rep2.details["lower"]
    assert rep2.value > lower + 1e-6
    assert rep2.value <= 2.0 * sql_constant(ch).value + 1e-6


def test_n_copy_rejects_large_powers():
    with pytest.raises(TooLarge):
        n_copy_qfi(dephasing_channel(DephasingParams(p=0.1)), 4)


@pytest.mark.parametrize("make", [
    lambda: dephasing_channel(DephasingParams(p=0.1)),
    lambda: catalog.ad_channel(0.3),
    lambda: catalog.depolarizing_channel(DepolarizingParams(0.1, 0.2, 0.1)),
], ids=["dephasing", "damping", "depolarizing"])
def test_two_copies_never_below_additive_floor(make):
    ch = make()
    rep2 = n_copy_qfi(ch, 2)
    assert rep2.value >= 2.0 * channel_qfi_single(ch).value - 1e-5


def test_linear_regime_gap_shrinks_with_copies():
    # H inside the span: F_N / N climbs toward the per-use constant
    ch = dephasing_channel(DephasingParams(p=0.1))
    F_sql = sql_constant(ch).value
    gaps = [F_sql - n_copy_qfi(ch, N).value / N for N in (1, 2)]
    assert gaps[0] > gaps[1] > -1e-9


def test_quadratic_regime_bounded_by_constant():
    # H outside the span: F_N / N^2 stays below the quadratic constant
    ch = catalog.depolarizing_channel(DepolarizingParams(0.3, 0.0, 0.0))
    F_hl = hl_constant(ch).value
    for N in (1, 2):
        assert n_copy_qfi(ch, N).value / N ** 2 <= F_hl + 1e-6


# ---------------------------------------------------------------------------
# error propagation
# ---------------------------------------------------------------------------

def test_error_propagation_sld_saturates(rng):
    rho = random_state(rng, 3)
    G = random_herm(rng, 3)
    drho = -1j * (G @ rho - rho @ G)
    L = sld_solve(rho, drho)
    F = state_qfi(rho, drho)
    assert error_propagation_bound(rho, drho, L) == pytest.approx(F, rel=1e-8)


def test_error_propagation_static_commuting_observable():
    rho = np.diag([0.7, 0.3]).astype(complex)
    assert error_propagation_bound(rho, np.zeros((2, 2)), SZ) == 0.0


@pytest.mark.parametrize("seed", [0, 1, 2, 3])
def test_error_propagation_never_exceeds_qfi(seed):
    rng = np.random.default_rng(seed)
    ch = dephasing_channel(DephasingParams(p=0.15, dp=0.1, dphi=0.8))
    out, dout = apply(ch, PLUS)
    F = state_qfi(out, dout)
    J = random_herm(rng, 2)
    assert error_propagation_bound(out, dout, J) <= F + 1e-6


def test_error_propagation_degenerate_variance():
    rho = np.diag([1.0, 0.0]).astype(complex)
    drho = np.diag([1.0, -1.0]).astype(complex)
    with pytest.raises(DegenerateDenominator):
        error_propagation_bound(rho, drho, SZ)


# ---------------------------------------------------------------------------
# minimax route
# ---------------------------------------------------------------------------

@pytest.mark.parametrize("make", [
    lambda: dephasing_channel(DephasingParams(p=0.1)),
    lambda: catalog.ad_channel(0.3),
    lambda: catalog.depolarizing_channel(DepolarizingParams(0.1, 0.2, 0.1)),
], ids=["dephasing", "damping", "depolarizing"])
def test_minimax_agrees_with_sdp(make):
    """Alternating max over inputs of the exact h-minimization meets the
    operator-norm SDP at the saddle value."""
    ch = make()
    F1 = channel_qfi_single(ch).value
    val, rho = max_min_qfi(ch)
    assert val == pytest.approx(F1, rel=1e-5, abs=1e-7)
    assert np.linalg.eigvalsh(rho)[0] > -1e-10
    assert np.trace(rho).real == pytest.approx(1.0, abs=1e-9)


def test_minimax_is_always_a_lower_bound(rng):
    ch = random_tp_channel(rng, d=2, r=2)
    F1 = channel_qfi_single(ch).value
    val, _ = max_min_qfi(ch, iters=5)  # deliberately unconverged
    assert val <= F1 + 1e-7 * (1.0 + F1)
