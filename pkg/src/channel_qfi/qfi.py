"""QFI engines.

State QFI from the eigen-sum formula, the single-use channel QFI via
operator-norm SDPs, the per-use constants of the linear and quadratic
asymptotic regimes, optimal input states from the saddle-point
conditions, and a brute-force N-copy oracle on tensor powers.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import sdp
from .channel import ParamChannel, alpha_beta, hnks, kraus_span, tensor_power
from .errors import (BetaInfeasible, DegenerateDenominator, FeasibilityFailed, HnksSatisfied,
                     HnksViolated, NotDensityMatrix, NotTraceless, SolverError)
from .numerics import (as_matrix, check_hermitian, herm_basis, herm_coords, herm_eig,
                       herm_from_coords, hermitianize, psd_sqrt, tau_null, vectorize)

TAU_ZERO = 1e-9


@dataclass
class QfiReport:
    value: float
    regime: str  # "HL" | "SQL" | "Zero"
    optimal_h: np.ndarray | None = None
    optimal_input: np.ndarray | None = None
    details: dict = field(default_factory=dict)


def _check_state(rho, drho=None):
    rho = check_hermitian(rho, name="rho")
    w, V = herm_eig(rho)
    scale = float(abs(w[-1])) if w.size else 0.0
    if float(w[0]) < -1e-9 * (1.0 + scale):
        raise NotDensityMatrix(f"state has negative eigenvalue {w[0]:.3e}")
    tr = float(np.real(np.trace(rho)))
    if abs(tr - 1.0) > 1e-8 * (1.0 + scale):
        raise NotDensityMatrix(f"state trace is {tr!r}, expected 1")
    if drho is None:
        return rho, w, V, None
    drho = check_hermitian(drho, name="drho")
    dscale = float(np.max(np.abs(drho))) if drho.size else 0.0
    if abs(float(np.real(np.trace(drho)))) > 1e-8 * (1.0 + dscale):
        raise NotTraceless(f"state derivative has trace {np.trace(drho):.3e}")
    return rho, w, V, drho


def state_qfi(rho, drho) -> float:
    """QFI of (rho, drho) by the eigen-sum 2|<i|drho|j>|^2/(w_i + w_j),
    dropping pairs whose denominator sits below the null tolerance."""
    rho, w, V, drho = _check_state(rho, drho)
    D = V.conj().T @ drho @ V
    denom = w[:, None] + w[None, :]
    keep = denom > tau_null(float(w[-1]))
    val = 2.0 * np.sum(np.abs(D[keep]) ** 2 / denom[keep])
    return float(val)


def error_propagation_bound(rho, drho, J) -> float:
    """(d<J>/domega)^2 / Var(J); equals the QFI when J is the SLD."""
    rho, w, _, drho = _check_state(rho, drho)
    J = check_hermitian(J, name="J")
    signal = float(np.real(np.trace(J @ drho)))
    mean = float(np.real(np.trace(rho @ J)))
    var = float(np.real(np.trace(rho @ J @ J))) - mean ** 2
    tol = tau_null(float(np.max(np.abs(J))) if J.size else 0.0)
    if var < tol:
        if abs(signal) < tol:
            return 0.0
        raise DegenerateDenominator(
            f"vanishing variance {var:.3e} with signal {signal:.3e}")
    return signal ** 2 / var


def min_h_quad(channel: ParamChannel, C, constrain_beta_zero: bool = False):
    """Minimize 4||(Kdot - i h K) C||_F^2 over Hermitian h.

    This equals min_h 4 Tr(C^dag alpha(h) C), the purified-input QFI at
    rho = C C^dag, and is a plain least-squares problem in the real
    coordinates of h. With constrain_beta_zero, h ranges over the affine
    set where beta(h) = 0. Returns (value, h).
    """
    r = channel.r
    C = as_matrix(C)
    hb = herm_basis(r)
    b = np.concatenate([vectorize(dk @ C) for dk in channel.dkraus])
    cols = []
    for B in hb:
        col = np.concatenate([
            vectorize(-1j * sum(B[i, j] * channel.kraus[j] for j in range(r)) @ C)
            for i in range(r)])
        cols.append(col)
    Ac = np.column_stack(cols)
    Ar = np.vstack([Ac.real, Ac.imag])
    br = np.concatenate([b.real, b.imag])
    if constrain_beta_zero:
        h0, residual, Nh, _ = sdp.beta_zero_solution(channel)
        if residual > 1e-7 * (1.0 + float(np.linalg.norm(br))):
            raise HnksViolated(
                f"no gauge sets beta to zero (residual {residual:.3e})")
        x_p = herm_coords(h0, hb)
        if Nh.shape[1]:
            t, *_ = np.linalg.lstsq(Ar @ Nh, -(br + Ar @ x_p), rcond=None)
            x = x_p + Nh @ t
        else:
            x = x_p
    else:
        x, *_ = np.linalg.lstsq(Ar, -br, rcond=None)
    value = 4.0 * float(np.sum((Ar @ x + br) ** 2))
    return value, herm_from_coords(x, r, hb)


def purified_input_qfi(channel: ParamChannel, rho,
                       constrain_beta_zero: bool = False) -> float:
    """QFI attainable with any purification of input rho (probe side)."""
    rho, _, _, _ = _check_state(rho)
    value, _ = min_h_quad(channel, psd_sqrt(rho), constrain_beta_zero)
    return value


def channel_qfi_single(channel: ParamChannel, compute_input: bool = False,
                       eps_gap: float = 1e-10) -> QfiReport:
    """Single-use channel QFI F1 = 4 min_h ||alpha(h)|| via the SDP."""
    prob = sdp.min_opnorm_problem(channel)
    sol = sdp.solve(prob, eps_gap=eps_gap)
    if not sol.optimal:
        raise SolverError(f"channel QFI solve ended with status {sol.status!r}")
    value = max(4.0 * sol.objective, 0.0)
    decision = hnks(channel)
    if value < TAU_ZERO:
        regime = "Zero"
    else:
        regime = "SQL" if decision.in_span else "HL"
    rep = QfiReport(value, regime, optimal_h=prob.meta["h_from_y"](sol.y),
                    details={"iterations": sol.iterations, "rel_gap": sol.rel_gap,
                             "hnks_residual": decision.residual})
    if compute_input:
        rep.optimal_input = optimal_input_single(channel, eps_gap=eps_gap)
    return rep


def sql_constant(channel: ParamChannel, eps_gap: float = 1e-10) -> QfiReport:
    """Linear-regime constant 4 min_{h: beta=0} ||alpha(h)||."""
    decision = hnks(channel)
    if not decision.in_span:
        raise HnksViolated(
            f"generator outside the Kraus span (residual {decision.residual:.3e}); "
            "use the quadratic-regime constant instead")
    try:
        prob = sdp.min_opnorm_problem(channel, constrain_beta_zero=True)
    except BetaInfeasible as exc:
        raise HnksViolated(str(exc)) from exc
    sol = sdp.solve(prob, eps_gap=eps_gap)
    if not sol.optimal:
        raise SolverError(f"constrained solve ended with status {sol.status!r}")
    value = max(4.0 * sol.objective, 0.0)
    return QfiReport(value, "SQL", optimal_h=prob.meta["h_from_y"](sol.y),
                     details={"iterations": sol.iterations, "rel_gap": sol.rel_gap,
                              "hnks_residual": decision.residual})


def hl_constant(channel: ParamChannel, eps_gap: float = 1e-10) -> QfiReport:
    """Quadratic-regime constant 4 (min over the span of ||H - S||)^2.

    Computed two independent ways: minimizing ||beta(h)|| over h, and
    minimizing ||H - S|| over an orthonormal span basis. The two
    parametrizations must agree to 1e-6.
    """
    decision = hnks(channel)
    if decision.in_span:
        raise HnksSatisfied(
            f"generator inside the Kraus span (residual {decision.residual:.3e}); "
            "the quadratic-regime constant vanishes")
    from .channel import hamiltonian_H
    H = hamiltonian_H(channel)
    r = channel.r
    K = np.vstack(channel.kraus)
    dout = channel.d_out
    fam_h = [K.conj().T @ np.kron(B, np.eye(dout)) @ K for B in herm_basis(r)]
    prob_a = sdp.min_affine_opnorm_problem(H, fam_h)
    sol_a = sdp.solve(prob_a, eps_gap=eps_gap)
    span = kraus_span(channel)
    prob_b = sdp.min_affine_opnorm_problem(H, [-S for S in span.basis])
    sol_b = sdp.solve(prob_b, eps_gap=eps_gap)
    if not (sol_a.optimal and sol_b.optimal):
        raise SolverError(
            f"norm minimization failed ({sol_a.status!r}, {sol_b.status!r})")
    xa, xb = sol_a.objective, sol_b.objective
    if abs(xa - xb) > 1e-6 * (1.0 + abs(xa)):
        raise SolverError(
            f"gauge and span routes disagree: {xa!r} vs {xb!r}")
    h = herm_from_coords(sol_a.y[1:], r)
    return QfiReport(4.0 * xa ** 2, "HL", optimal_h=h,
                     details={"beta_norm": xa, "span_distance": xb,
                              "hnks_residual": decision.residual})


def optimal_input_single(channel: ParamChannel, constrain_beta_zero: bool = False,
                         eps_gap: float = 1e-10,
                         tol_stationary: float = 1e-6) -> np.ndarray:
    """Optimal probe-side input state for the single-use QFI.

    Solves the operator-norm SDP for the optimal gauge h, seeds
    candidate states on the top eigenspace of alpha(h), and polishes
    each at the saddle until the purified-input value certifiably
    matches the SDP value within tol_stationary. The returned state
    kills the first-order variation of Tr(rho alpha) along every
    admissible gauge direction; its purification (probe plus ancilla)
    attains the single-use QFI.
    """
    prob = sdp.min_opnorm_problem(channel, constrain_beta_zero=constrain_beta_zero)
    sol = sdp.solve(prob, eps_gap=eps_gap)
    if not sol.optimal:
        raise SolverError(f"gauge solve ended with status {sol.status!r}")
    h = prob.meta["h_from_y"](sol.y)
    alpha, _ = alpha_beta(channel, h)
    # the probe corner of the dual optimum is the adversary state of the
    # minimax problem: complementary slackness confines it to the top
    # eigenspace of alpha and dual feasibility is exactly stationarity
    dual_corner = None
    if sol.Z:
        dual_corner = hermitianize(sol.Z[0][:channel.d_in, :channel.d_in])
    return _stationary_state(channel, h, alpha, constrain_beta_zero,
                             tol_stationary, dual_corner=dual_corner)


def _gauge_directions(channel, constrain_beta_zero):
    hb = herm_basis(channel.r)
    if not constrain_beta_zero:
        return hb
    _, _, Nh, _ = sdp.beta_zero_solution(channel)
    return [herm_from_coords(Nh[:, a], channel.r, hb) for a in range(Nh.shape[1])]


def _stationarity_ops(channel, h, dirs):
    r = channel.r
    ktil = [channel.dkraus[i] - 1j * sum(h[i, j] * channel.kraus[j] for j in range(r))
            for i in range(r)]
    Ws = []
    for dh in dirs:
        acc = np.zeros((channel.d_in, channel.d_in), dtype=complex)
        for i in range(r):
            for j in range(r):
                if dh[i, j] != 0:
                    acc += 1j * dh[i, j] * (channel.kraus[i].conj().T @ ktil[j])
        Ws.append(hermitianize(acc))
    return Ws


def _saddle_residual(channel, rho, upper, constrain_beta_zero, dirs):
    """Certified saddle-point defect of rho.

    min_h 4 Tr(rho alpha(h)) is a lower bound on the channel QFI for any
    state and upper (4 lambda_max at the solver's gauge) is an upper
    bound for any gauge, so their difference certifies how much rho
    leaves on the table. Adapting h to rho by the exact least-squares
    step zeroes the gradient of Tr(rho alpha(h)) along every admissible
    direction, and 2 Tr(rho W_a) is exactly that gradient; the residual
    is kept as a cross-check. The defect is the larger of the two.
    """
    val, h = min_h_quad(channel, psd_sqrt(rho), constrain_beta_zero)
    gap = max(upper - val, 0.0) / (1.0 + abs(upper))
    Ws = _stationarity_ops(channel, h, dirs)
    stat = max((abs(float(np.real(np.trace(rho @ W)))) for W in Ws), default=0.0)
    return max(stat, gap)


def _feasible_on_subspace(channel, h, Vp, dirs):
    """PSD, trace-one solution of the stationarity rows on span(Vp).

    Least-squares solve followed by alternating projections between the
    affine solution set and the PSD cone. Returns None when the
    projections collapse the trace.
    """
    k = Vp.shape[1]
    Ws = _stationarity_ops(channel, h, dirs)
    kb = herm_basis(k)
    rows = [herm_coords(Vp.conj().T @ W @ Vp, kb) for W in Ws]
    rows.append(herm_coords(np.eye(k), kb))
    M = np.vstack(rows)
    rhs = np.zeros(M.shape[0])
    rhs[-1] = 1.0
    x, *_ = np.linalg.lstsq(M, rhs, rcond=None)
    X = herm_from_coords(x, k, kb)
    Mp = np.linalg.pinv(M)
    for _ in range(80):
        wX, U = herm_eig(X)
        if float(wX[0]) >= -1e-12:
            break
        X = hermitianize((U * np.clip(wX, 0.0, None)) @ U.conj().T)
        xc = herm_coords(X, kb)
        xc = xc - Mp @ (M @ xc - rhs)
        X = herm_from_coords(xc, k, kb)
    wX, U = herm_eig(X)
    X = hermitianize((U * np.clip(wX, 0.0, None)) @ U.conj().T)
    t = float(np.real(np.trace(X)))
    if t <= 1e-12:
        return None
    return X / t


def _refine_saddle(channel, rho, upper, constrain_beta_zero, dirs, rounds=6):
    """Self-consistency refinement of a near-saddle input state.

    Conditional-gradient ascent slows to a crawl once the top eigenspace
    of alpha is degenerate at the saddle, because single-eigenvector
    moves overshoot the hull. Each round re-adapts the gauge to rho,
    recomputes the top eigenspace there, and re-solves the stationarity
    system on it, which restores local quadratic convergence.
    """
    best_rho = rho
    best_score = _saddle_residual(channel, rho, upper, constrain_beta_zero, dirs)
    for _ in range(rounds):
        if best_score <= 1e-11:
            break
        val, h = min_h_quad(channel, psd_sqrt(rho), constrain_beta_zero)
        al, _ = alpha_beta(channel, h)
        w, V = herm_eig(al)
        lam = float(w[-1])
        gap_abs = max(4.0 * lam - val, 0.0)
        base = 1e-6 * (1.0 + abs(lam))
        progressed = False
        # the eigenspace split near the saddle is of the order of the
        # remaining gap, so try both a tight and a gap-sized cut
        for cut in sorted({base, max(base, gap_abs)}):
            Vp = V[:, w >= lam - cut]
            X = _feasible_on_subspace(channel, h, Vp, dirs)
            if X is None:
                continue
            cand = hermitianize(Vp @ X @ Vp.conj().T)
            cand = cand / float(np.real(np.trace(cand)))
            score = _saddle_residual(channel, cand, upper, constrain_beta_zero, dirs)
            if score < best_score:
                best_rho, best_score = cand, score
                rho = cand
                progressed = True
        if not progressed:
            break
    return best_rho, best_score


def _stationary_state(channel, h, alpha, constrain_beta_zero, tol,
                      dual_corner=None):
    w, V = herm_eig(alpha)
    lam = float(w[-1])
    upper = 4.0 * lam
    keep = w >= lam - 1e-6 * (1.0 + abs(lam))
    Vp = V[:, keep]
    k = Vp.shape[1]
    dirs = _gauge_directions(channel, constrain_beta_zero)

    candidates = [np.eye(k) / k]
    if dual_corner is not None:
        # probe corner of the dual optimum: complementary slackness
        # confines it to the top eigenspace and its feasibility rows are
        # the stationarity conditions, so it seeds the polish well
        Xd = hermitianize(Vp.conj().T @ dual_corner @ Vp)
        wd, Ud = herm_eig(Xd)
        Xd = hermitianize((Ud * np.clip(wd, 0.0, None)) @ Ud.conj().T)
        td = float(np.real(np.trace(Xd)))
        if td > 1e-12:
            candidates.append(Xd / td)
    Xl = _feasible_on_subspace(channel, h, Vp, dirs)
    if Xl is not None:
        candidates.append(Xl)

    # the SDP gauge carries the solver's gap into the candidates, so
    # each one is polished before being scored: conditional-gradient
    # ascent toward the saddle, then the self-consistency refinement,
    # with the defect always measured at the gauge adapted to rho
    best = None
    best_score = np.inf
    for cand in candidates:
        rho0 = hermitianize(Vp @ cand @ Vp.conj().T)
        tr0 = float(np.real(np.trace(rho0)))
        if tr0 <= 1e-12:
            continue
        _, rho = max_min_qfi(channel, iters=200, tol=1e-12, rho0=rho0 / tr0,
                             constrain_beta_zero=constrain_beta_zero)
        wr, Ur = herm_eig(rho)
        rho = hermitianize((Ur * np.clip(wr, 0.0, None)) @ Ur.conj().T)
        rho = rho / float(np.real(np.trace(rho)))
        rho, score = _refine_saddle(channel, rho, upper, constrain_beta_zero, dirs)
        if score < best_score:
            best, best_score = rho, score
        if best_score <= 0.1 * tol:
            break
    if best is None or best_score > tol:
        raise FeasibilityFailed(
            f"stationarity residual {best_score:.3e} exceeds {tol:.1e} "
            f"(top eigenspace dimension {k})")
    return best


def n_copy_qfi(channel: ParamChannel, N: int, n_max: int = 3,
               eps_gap: float = 1e-10) -> QfiReport:
    """Brute-force QFI of the N-fold tensor power, with sandwich checks
    N F1 <= F_N <= 4(N ||alpha|| + N(N-1) ||beta||^2) at candidate gauges."""
    chN = tensor_power(channel, N, n_max=n_max)
    rep1 = channel_qfi_single(channel, eps_gap=eps_gap)
    if N == 1:
        return rep1
    repN = channel_qfi_single(chN, eps_gap=eps_gap)
    lower = N * rep1.value
    hs = [rep1.optimal_h]
    try:
        hs.append(sql_constant(channel, eps_gap=eps_gap).optimal_h)
    except (HnksViolated, SolverError):
        pass
    upper = np.inf
    for h in hs:
        al, be = alpha_beta(channel, h)
        wa = float(np.linalg.norm(al, 2))
        wb = float(np.linalg.norm(be, 2))
        upper = min(upper, 4.0 * (N * wa + N * (N - 1) * wb ** 2))
    if repN.value < lower - 1e-5 * (1.0 + lower):
        raise SolverError(
            f"N-copy value {repN.value!r} below the additivity floor {lower!r}")
    if repN.value > upper + 1e-5 * (1.0 + upper):
        raise SolverError(
            f"N-copy value {repN.value!r} above the gauge bound {upper!r}")
    repN.details.update({"lower": lower, "upper": upper, "single_use": rep1.value})
    return repN


def max_min_qfi(channel: ParamChannel, iters: int = 400, tol: float = 1e-7,
                rho0=None, constrain_beta_zero: bool = False):
    """Maximize min_h 4 Tr(rho alpha(h)) by conditional-gradient ascent.

    Alternates the exact h-minimization (least squares) with a move of
    rho toward the top eigenvector of alpha at the current gauge, using
    a backtracking step. Returns (value, rho); value is always a valid
    lower bound for the channel QFI. With constrain_beta_zero the inner
    minimization runs over the beta-cancelling gauges only, so the value
    bounds the asymptotic rate instead.
    """
    d = channel.d_in
    rho = np.eye(d, dtype=complex) / d if rho0 is None else as_matrix(rho0)
    best_val, best_rho = -np.inf, rho
    for it in range(iters):
        val, h = min_h_quad(channel, psd_sqrt(rho), constrain_beta_zero)
        if val > best_val:
            best_val, best_rho = val, rho
        al, _ = alpha_beta(channel, h)
        w, V = herm_eig(al)
        gap = 4.0 * float(w[-1]) - val
        if gap <= tol * (1.0 + abs(val)):
            break
        v = V[:, -1]
        sig = np.outer(v, v.conj())
        step = 1.0
        improved = False
        for _ in range(12):
            cand = hermitianize((1.0 - step) * rho + step * sig)
            cval, _ = min_h_quad(channel, psd_sqrt(cand), constrain_beta_zero)
            if cval > val:
                rho = cand
                improved = True
                break
            step *= 0.5
        if not improved:
            rho = hermitianize((1.0 - 2.0 / (it + 3)) * rho + (2.0 / (it + 3)) * sig)
    return best_val, best_rho
