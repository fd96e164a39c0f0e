"""Dephasing family tests: exact N-qubit evolution against explicit Kraus
products, closed forms against the solver, GHZ and one-axis-twisted
inputs, and the split of the information into noise and phase parts."""

import numpy as np
import pytest

from channel_qfi import dephasing as dp
from channel_qfi.dephasing import (DephasingParams, SqueezedSpec,
                                   apply_collective, closed_form_bounds,
                                   coherence_factor, collective_op,
                                   dephasing_channel, evolution_factors,
                                   evolve_state, ghz_qfi, ghz_state,
                                   qfi_split_check, quasiprobability_grid,
                                   recommended_squeezing, squeezed_moments_closed_form,
                                   squeezed_asymptote_check, squeezed_state,
                                   squeezed_state_dicke)
from channel_qfi.errors import InvalidParams, TooLarge
from channel_qfi.qfi import (channel_qfi_single, error_propagation_bound,
                             hl_constant, sql_constant, state_qfi)

from conftest import random_state

POINT = DephasingParams(p=0.23, phi=0.4, dp=0.7, dphi=1.3)


def kraus_action(channel, rho):
    out = sum(K @ rho @ K.conj().T for K in channel.kraus)
    dout = sum(dK @ rho @ K.conj().T + K @ rho @ dK.conj().T
               for K, dK in zip(channel.kraus, channel.dkraus))
    return out, dout


def dense_moments(psi):
    jx = apply_collective("x", psi)
    jy = apply_collective("y", psi)
    mx = float(np.vdot(psi, jx).real)
    my = float(np.vdot(psi, jy).real)
    return {"Jx_mean": mx,
            "Jx_var": float(np.vdot(jx, jx).real) - mx ** 2,
            "Jy_mean": my,
            "Jy_var": float(np.vdot(jy, jy).real) - my ** 2}


# ---------------------------------------------------------------------------
# parameters and channel assembly
# ---------------------------------------------------------------------------

def test_params_validation():
    with pytest.raises(InvalidParams):
        DephasingParams(p=1.0)
    with pytest.raises(InvalidParams):
        DephasingParams(p=-0.1)
    with pytest.raises(InvalidParams):
        DephasingParams(p=0.0, dp=0.5)
    with pytest.raises(InvalidParams):
        SqueezedSpec(N=1, mu=0.1, nu=0.0)
    with pytest.raises(InvalidParams):
        SqueezedSpec(N=4, mu=4.0, nu=0.0)


def test_channel_rank_tracks_noise():
    assert dephasing_channel(POINT).r == 2
    assert dephasing_channel(DephasingParams(p=0.0)).r == 1


# ---------------------------------------------------------------------------
# exact evolution
# ---------------------------------------------------------------------------

def test_factor_evolution_matches_kraus_action():
    rng = np.random.default_rng(5)
    rho = random_state(rng, 2)
    out, dout = kraus_action(dephasing_channel(POINT), rho)
    r2, d2 = evolve_state(POINT, rho)
    assert np.allclose(out, r2, atol=1e-13)
    assert np.allclose(dout, d2, atol=1e-13)


def test_factor_evolution_matches_tensor_kraus():
    rng = np.random.default_rng(6)
    rho = np.kron(random_state(rng, 2), random_state(rng, 2))
    ch = dephasing_channel(POINT)
    ks = [np.kron(K1, K2) for K1 in ch.kraus for K2 in ch.kraus]
    dks = [np.kron(d1, K2) + np.kron(K1, d2)
           for K1, d1 in zip(ch.kraus, ch.dkraus)
           for K2, d2 in zip(ch.kraus, ch.dkraus)]
    out = sum(K @ rho @ K.conj().T for K in ks)
    dout = sum(dK @ rho @ K.conj().T + K @ rho @ dK.conj().T
               for K, dK in zip(ks, dks))
    r2, d2 = evolve_state(POINT, rho)
    assert np.allclose(out, r2, atol=1e-13)
    assert np.allclose(dout, d2, atol=1e-13)


def test_coherence_factor_is_the_evolved_offdiagonal():
    plus = np.array([1.0, 1.0]) / np.sqrt(2.0)
    rho, drho = evolve_state(POINT, plus)
    xi, dxi = coherence_factor(POINT)
    assert rho[0, 1] == pytest.approx(0.5 * xi, abs=1e-14)
    assert drho[0, 1] == pytest.approx(0.5 * dxi, abs=1e-14)


def test_evolution_rejects_bad_dimensions():
    with pytest.raises(InvalidParams):
        evolve_state(POINT, np.eye(3) / 3.0)
    with pytest.raises(TooLarge):
        evolution_factors(POINT, dp.N_MAX_QFI + 1)


# ---------------------------------------------------------------------------
# closed forms against the solver
# ---------------------------------------------------------------------------

@pytest.mark.parametrize("params", [
    DephasingParams(p=0.1),
    DephasingParams(p=0.3, dp=0.5),
    DephasingParams(p=0.45, dp=1.0, dphi=0.2),
], ids=["phase-only", "mixed", "noise-heavy"])
def test_closed_forms_match_solver(params):
    cf = closed_form_bounds(params)
    ch = dephasing_channel(params)
    rep = channel_qfi_single(ch)
    assert rep.value == pytest.approx(cf["F1"], abs=1e-6 * (1.0 + cf["F1"]))
    bound = sql_constant(ch)
    assert bound.value == pytest.approx(cf["F_sql_u"],
                                        abs=1e-6 * (1.0 + cf["F_sql_u"]))


def test_noiseless_point_is_unbounded():
    params = DephasingParams(p=0.0, dphi=1.0)
    cf = closed_form_bounds(params)
    assert cf["F1"] == 1.0
    assert cf["F_sql_u"] == float("inf")
    rep = hl_constant(dephasing_channel(params))
    assert rep.value == pytest.approx(cf["F_hl_u"], abs=1e-8)


# ---------------------------------------------------------------------------
# GHZ input
# ---------------------------------------------------------------------------

@pytest.mark.parametrize("N", [2, 3, 4])
def test_ghz_qfi_noiseless_is_exactly_quadratic(N):
    assert ghz_qfi(DephasingParams(p=0.0), N) == pytest.approx(N ** 2,
                                                               abs=1e-12)


@pytest.mark.parametrize("N", [2, 3])
def test_ghz_qfi_reduces_to_corner_block(N):
    params = DephasingParams(p=0.12, dp=0.4)
    xi, dxi = coherence_factor(params)
    corner = np.array([[0.5, 0.5 * np.conj(xi) ** N],
                       [0.5 * xi ** N, 0.5]], dtype=complex)
    dc = 0.5 * N * xi ** (N - 1) * dxi
    dcorner = np.array([[0.0, np.conj(dc)], [dc, 0.0]], dtype=complex)
    assert ghz_qfi(params, N) == pytest.approx(state_qfi(corner, dcorner),
                                               abs=1e-12)


def test_ghz_state_guard():
    with pytest.raises(InvalidParams):
        ghz_state(0)


# ---------------------------------------------------------------------------
# squeezed input
# ---------------------------------------------------------------------------

@pytest.mark.parametrize("N", [4, 8, 12])
def test_squeezed_moments_match_closed_form(N):
    spec = recommended_squeezing(N)
    got = dense_moments(squeezed_state(spec))
    want = squeezed_moments_closed_form(spec)
    for key in ("Jx_mean", "Jx_var", "Jy_var"):
        assert got[key] == pytest.approx(want[key], abs=1e-12 * (1.0 + N * N))
    assert abs(got["Jy_mean"]) < 1e-12


def test_squeezed_dense_matches_symmetric_basis():
    spec = recommended_squeezing(6)
    got = dense_moments(squeezed_state(spec))
    psi = squeezed_state_dicke(spec)
    jx, jy, _ = dp._dicke_jops(6)
    assert float(np.vdot(psi, jx @ psi).real) == pytest.approx(
        got["Jx_mean"], abs=1e-12)
    vy = float(np.vdot(jy @ psi, jy @ psi).real
               - np.vdot(psi, jy @ psi).real ** 2)
    assert vy == pytest.approx(got["Jy_var"], abs=1e-12)


def test_squeezed_state_size_guard():
    with pytest.raises(TooLarge):
        squeezed_state(SqueezedSpec(N=dp.N_MAX_STATE + 1, mu=0.1, nu=0.0))


def test_quasiprobability_grid_is_a_distribution():
    spec = recommended_squeezing(20)
    thetas, phis, Q = quasiprobability_grid(spec)
    assert Q.shape == (181, 361)
    assert float(Q.min()) >= 0.0
    # coherent-state resolution of identity: (N+1)/(4 pi) int Q dOmega = 1
    integral = np.trapezoid(
        np.trapezoid(Q * np.sin(thetas)[:, None], phis, axis=1), thetas)
    assert (spec.N + 1) / (4.0 * np.pi) * integral == pytest.approx(
        1.0, abs=1e-3)


# ---------------------------------------------------------------------------
# information splits and rates
# ---------------------------------------------------------------------------

@pytest.mark.parametrize("N", [2, 4])
def test_split_is_exact_on_both_input_families(N):
    params = DephasingParams(p=0.1, dp=0.3)
    for state in (ghz_state(N), squeezed_state(recommended_squeezing(N))):
        parts = qfi_split_check(params, state)
        assert parts["F_p"] >= 0.0 and parts["F_phi"] >= 0.0
        assert parts["F"] == pytest.approx(parts["F_p"] + parts["F_phi"],
                                           abs=1e-10 * (1.0 + parts["F"]))


def test_error_propagation_never_beats_qfi():
    params = DephasingParams(p=0.1)
    spec = recommended_squeezing(4)
    rho, drho = evolve_state(params, squeezed_state(spec))
    rate = error_propagation_bound(rho, drho, collective_op("y", 4))
    assert 0.0 <= rate <= state_qfi(rho, drho) + 1e-12


def test_per_qubit_rate_climbs_below_the_bound():
    rows = squeezed_asymptote_check(DephasingParams(p=0.1), [4, 6])
    assert rows[0]["qfi_per_qubit"] < rows[1]["qfi_per_qubit"]
    for row in rows:
        assert row["qfi_per_qubit"] < row["f_sql_u"]
    with pytest.raises(InvalidParams):
        squeezed_asymptote_check(DephasingParams(p=0.0), [4])


# ---------------------------------------------------------------------------
# collective operators
# ---------------------------------------------------------------------------

def test_collective_ops_satisfy_su2():
    jx = collective_op("x", 3)
    jy = collective_op("y", 3)
    jz = collective_op("z", 3)
    assert np.allclose(jx @ jy - jy @ jx, 1j * jz, atol=1e-12)


def test_collective_guards():
    with pytest.raises(TooLarge):
        collective_op("x", dp.N_MAX_QFI + 1)
    with pytest.raises(InvalidParams):
        apply_collective("x", np.ones(3))
