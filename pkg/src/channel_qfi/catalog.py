"""Reference channels with closed-form asymptotics.

Four worked families exercise every solver path in the package:

* single-qubit depolarizing noise around a z rotation, where the
  single-use value, the bounded constant and the unbounded constant are
  all elementary functions of the flip rates;
* amplitude damping, whose optimal two-qubit-ancilla code and recovery
  are exact trigonometric expressions;
* Pauli (jointly covariant) channels, where the N-copy value is N times
  the single-use value and a maximally entangled input attains it;
* a lossy Mach-Zehnder arm, where a diagonal restriction of the gauge
  turns the optimal-input search into a small feasibility problem over
  photon-number distributions.
"""

from __future__ import annotations

from dataclasses import dataclass
from math import cos, factorial, pi, sin, sqrt
from typing import Dict, List, Optional, Sequence

import numpy as np

from . import qfi, sdp
from .channel import (ParamChannel, alpha_beta, hnks, natural_superop,
                      param_channel, pauli_matrices)
from .errors import (FeasibilityFailed, InvalidParams, PerfectCoherence,
                     SolverError, TooLarge, TruncationError)
from .numerics import hermitianize, pinv
from .qec import QecCode, generator_recovery

M_MAX = 12


# ---------------------------------------------------------------------------
# depolarizing
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class DepolarizingParams:
    """Flip rates (px, py, pz); the estimated phase enters as a z rotation
    and the rates themselves carry no parameter dependence."""

    px: float
    py: float
    pz: float

    def __post_init__(self):
        for name in ("px", "py", "pz"):
            if getattr(self, name) < 0.0:
                raise InvalidParams(f"{name} must be nonnegative")
        if self.p >= 1.0:
            raise InvalidParams(f"total flip rate {self.p!r} must stay below 1")

    @property
    def p(self) -> float:
        return self.px + self.py + self.pz

    @property
    def w(self) -> float:
        """4(px py/(px+py) + (1-p)pz/(1-p+pz)), with 0/0 read as 0."""
        sxy = self.px + self.py
        first = self.px * self.py / sxy if sxy > 0.0 else 0.0
        second = (1.0 - self.p) * self.pz / (1.0 - self.p + self.pz)
        return 4.0 * (first + second)

    @property
    def hnks_satisfied(self) -> bool:
        """The generator escapes the Kraus span only with pure-x or
        pure-y noise (or none at all)."""
        return self.pz == 0.0 and (self.px == 0.0 or self.py == 0.0)


def depolarizing_channel(params: DepolarizingParams) -> ParamChannel:
    """Kraus family {sqrt(1-p) I, sqrt(px) X, sqrt(py) Y, sqrt(pz) Z}
    following a z rotation, differentiated in the rotation angle."""
    sx, sy, sz = pauli_matrices()
    eye = np.eye(2, dtype=complex)
    weights = [(1.0 - params.p, eye), (params.px, sx),
               (params.py, sy), (params.pz, sz)]
    kraus, dkraus = [], []
    for wgt, P in weights:
        if wgt == 0.0:
            continue
        K = sqrt(wgt) * P
        kraus.append(K)
        dkraus.append(K @ (-0.5j * sz))
    return param_channel(kraus, dkraus,
                         label=f"depolarizing{params.px, params.py, params.pz}")


def depolarizing_closed_forms(params: DepolarizingParams) -> Dict[str, float]:
    """F1 = 1 - w plus the applicable asymptotic constant.

    In the bounded regime F_sql = (1 - w)/w; in the unbounded regime the
    quadratic constant is exactly 1 regardless of the rates.
    """
    w = params.w
    out = {"w": w, "F1": 1.0 - w}
    if params.hnks_satisfied:
        out["regime"] = "HL"
        out["F_hl"] = 1.0
    else:
        out["regime"] = "SQL"
        out["F_sql"] = (1.0 - w) / w
    return out


def fig3_sweep(pz: float = 0.1, grid: Optional[Sequence[float]] = None,
               grid_y: Optional[Sequence[float]] = None
               ) -> List[Dict[str, float]]:
    """Tabulate F1 and F_sql over a (px, py) grid at fixed pz.

    Grid points with total rate >= 1 or with the generator outside the
    Kraus span (no bounded constant) are skipped.  grid_y lets callers
    split the outer axis into chunks while keeping the inner one whole.
    """
    axis = np.linspace(0.0, 0.45, 91) if grid is None else np.asarray(grid,
                                                                      float)
    axis_y = axis if grid_y is None else np.asarray(grid_y, float)
    rows = []
    for px in axis:
        for py in axis_y:
            if px + py + pz >= 1.0:
                continue
            params = DepolarizingParams(float(px), float(py), float(pz))
            if params.hnks_satisfied:
                continue
            forms = depolarizing_closed_forms(params)
            rows.append({"px": float(px), "py": float(py),
                         "F1": forms["F1"], "F_sql": forms["F_sql"]})
    return rows


# ---------------------------------------------------------------------------
# amplitude damping
# ---------------------------------------------------------------------------

def ad_channel(p: float) -> ParamChannel:
    """Decay |1> -> |0> with probability p after a z rotation, at angle 0."""
    if not (0.0 < p < 1.0):
        raise InvalidParams(f"damping rate must lie in (0, 1), got {p!r}")
    sz = np.diag([1.0 + 0.0j, -1.0])
    K1 = np.diag([1.0, sqrt(1.0 - p)]).astype(complex)
    K2 = np.zeros((2, 2), dtype=complex)
    K2[0, 1] = sqrt(p)
    return param_channel([K1, K2], [K1 @ (-0.5j * sz), K2 @ (-0.5j * sz)],
                         label=f"amplitude_damping(p={p})")


def ad_closed_forms(p: float) -> Dict[str, float]:
    if not (0.0 < p < 1.0):
        raise InvalidParams(f"damping rate must lie in (0, 1), got {p!r}")
    return {"F_sql": 4.0 * (1.0 - p) / p}


@dataclass(frozen=True)
class AdCodeParams:
    """Damping rate plus the two small code angles.

    delta keeps the leading code block full rank; epsilon is the
    perturbation strength and should be small against delta (not
    enforced, only the positivity and range constraints are).
    """

    p: float
    delta: float
    epsilon: float

    def __post_init__(self):
        if not (0.0 < self.p < 1.0):
            raise InvalidParams(f"damping rate must lie in (0, 1), got {self.p!r}")
        if not (0.0 < self.delta < pi / 4.0):
            raise InvalidParams(f"delta must lie in (0, pi/4), got {self.delta!r}")
        if self.epsilon <= 0.0:
            raise InvalidParams(f"epsilon must be positive, got {self.epsilon!r}")


def ad_analytic_code(params: AdCodeParams) -> dict:
    """The exact optimal code, recovery generator and logical coherence
    for amplitude damping.

    Code blocks diag(sin(delta +- eps), cos(delta +- eps)) on probe plus
    one ancilla qubit, recovery generated by the antisymmetric coupling
    of the |00> and |11> levels. The coherence factor and its derivative
    are closed trigonometric forms; the logical value |dxi|^2/(1-|xi|^2)
    is assembled from a cancellation-free expression for 1 - xi so it
    stays accurate at tiny epsilon.
    """
    p, dl, ep = params.p, params.delta, params.epsilon
    root = sqrt(1.0 - p)
    A0 = np.diag([sin(dl + ep), cos(dl + ep)]).astype(complex)
    A1 = np.diag([sin(dl - ep), cos(dl - ep)]).astype(complex)
    code = QecCode(A0, A1)
    G = np.zeros((4, 4), dtype=complex)
    G[0, 3] = 2.0j / root
    G[3, 0] = -2.0j / root
    recovery = generator_recovery(G, ep)

    a, b = 2.0 * ep, 2.0 * ep / root
    s2 = sin(ep / root) ** 2
    mixed = p * (cos(2.0 * dl) + cos(a)) * s2 + root * sin(a) * sin(b)
    xi = mixed + cos(a) * cos(b)
    # 1 - cos a cos b = sin^2((b-a)/2) + sin^2((b+a)/2), exact
    one_minus_xi = (sin(0.5 * (b - a)) ** 2 + sin(0.5 * (b + a)) ** 2) - mixed
    dxi = -1j * root * sin(2.0 * dl) * sin(b)
    denom = one_minus_xi * (1.0 + xi)
    if denom <= 0.0:
        raise PerfectCoherence(
            f"logical coherence 1 - |xi|^2 = {denom!r} is not positive")
    return {"code": code, "recovery": recovery, "G": G,
            "xi_exact": complex(xi), "dxi_exact": complex(dxi),
            "F_logical": float(abs(dxi) ** 2 / denom)}


def fig4_sweep(p: float, epsilon_rule: float = 0.1,
               deltas: Optional[Sequence[float]] = None
               ) -> List[Dict[str, float]]:
    """Ratio of the logical value to the channel constant over a delta
    grid, with epsilon = epsilon_rule * delta.

    epsilon_rule = 0 selects the vanishing-perturbation limit, where the
    ratio is exactly cos^2(delta).
    """
    if epsilon_rule < 0.0:
        raise InvalidParams(f"epsilon rule must be nonnegative, got {epsilon_rule!r}")
    if deltas is None:
        deltas = (pi / 4.0) * np.arange(1, 92) / 92.0
    f_sql = ad_closed_forms(p)["F_sql"]
    rows = []
    for dl in np.asarray(deltas, dtype=float):
        if epsilon_rule == 0.0:
            f_log = f_sql * cos(dl) ** 2
            ep = 0.0
        else:
            ep = epsilon_rule * float(dl)
            f_log = ad_analytic_code(AdCodeParams(p, float(dl), ep))["F_logical"]
        rows.append({"delta": float(dl), "epsilon": ep,
                     "F_logical": f_log, "ratio": f_log / f_sql})
    return rows


# ---------------------------------------------------------------------------
# covariant channels and additivity
# ---------------------------------------------------------------------------

def pauli_channel(probs: Sequence[float],
                  dprobs: Optional[Sequence[float]] = None) -> ParamChannel:
    """Mixture of I, X, Y, Z conjugations with rate derivatives.

    When dprobs is omitted the estimated parameter is the total error
    rate: the noise probabilities scale together and the identity weight
    compensates.
    """
    probs = np.asarray(probs, dtype=float)
    if probs.shape != (4,):
        raise InvalidParams("need exactly four probabilities (I, X, Y, Z)")
    if np.any(probs < 0.0):
        raise InvalidParams("probabilities must be nonnegative")
    if abs(probs.sum() - 1.0) > 1e-9:
        raise InvalidParams(f"probabilities sum to {probs.sum()!r}, expected 1")
    if dprobs is None:
        q = float(probs[1:].sum())
        if q == 0.0:
            raise InvalidParams("noiseless channel has no error rate to "
                                "estimate; pass dprobs explicitly")
        dprobs = np.concatenate([[-1.0], probs[1:] / q])
    dprobs = np.asarray(dprobs, dtype=float)
    if dprobs.shape != (4,):
        raise InvalidParams("need exactly four probability derivatives")
    if abs(dprobs.sum()) > 1e-9:
        raise InvalidParams(f"derivatives sum to {dprobs.sum()!r}, expected 0")
    sx, sy, sz = pauli_matrices()
    paulis = [np.eye(2, dtype=complex), sx, sy, sz]
    kraus, dkraus = [], []
    for pr, dpr, P in zip(probs, dprobs, paulis):
        if pr == 0.0:
            if dpr != 0.0:
                raise InvalidParams("a vanishing probability cannot have a "
                                    "nonzero derivative")
            continue
        kraus.append(sqrt(pr) * P)
        dkraus.append(dpr / (2.0 * sqrt(pr)) * P)
    return param_channel(kraus, dkraus, label=f"pauli{tuple(probs)}")


def _match_conjugation(S: np.ndarray, U: np.ndarray):
    """Best unitary V with (V x conj V) S = S (U x conj U), and the
    relative residual of that factorization."""
    d = U.shape[0]
    L = S @ np.kron(U, U.conj())
    W = L @ pinv(S)
    R = W.reshape(d, d, d, d).transpose(0, 2, 1, 3).reshape(d * d, d * d)
    w, vecs = np.linalg.eigh(hermitianize(R))
    V0 = (sqrt(max(float(w[-1]), 0.0)) * vecs[:, -1]).reshape(d, d)
    uu, _, vv = np.linalg.svd(V0)
    V = uu @ vv
    denom = float(np.linalg.norm(L))
    res = float(np.linalg.norm(np.kron(V, V.conj()) @ S - L)) / max(denom, 1e-30)
    return V, res


def u_covariance_additivity_check(channel: ParamChannel, design,
                                  tol: float = 1e-8) -> dict:
    """Probe joint covariance of a channel and, when it holds in the
    bounded regime, the two-copy additivity it implies.

    For each unitary U in the design the superoperator of N(U . U^dag)
    is matched against V N(.) V^dag; failure to factor is reported, not
    raised. When every U matches and the generator stays inside the
    Kraus span, the two-copy value is compared against twice the
    single-use value and a maximally entangled input is checked to
    attain the single-use value.
    """
    us = [np.asarray(U, dtype=complex) for U in design]
    if not us:
        raise InvalidParams("covariance check needs at least one unitary")
    S = natural_superop(channel.kraus)
    matches = [_match_conjugation(S, U) for U in us]
    residuals = [r for _, r in matches]
    covariant = max(residuals) <= tol
    decision = hnks(channel)
    report = {
        "covariant": covariant,
        "per_unitary": residuals,
        "max_residual": max(residuals),
        "unitaries": [V for V, _ in matches],
        "hnks_satisfied": not decision.in_span,
        "f1": qfi.channel_qfi_single(channel).value,
        "f2": None,
        "additivity_gap": None,
        "entangled_gap": None,
        "skipped": True,
        "notice": None,
    }
    if not covariant:
        report["notice"] = ("covariance factorization failed (residual "
                            f"{max(residuals):.3e}); additivity not implied")
        return report
    if not decision.in_span:
        report["notice"] = ("generator outside the Kraus span: copies add "
                            "quadratically, the linear identity is vacuous")
        return report
    d = channel.d_in
    f2 = qfi.n_copy_qfi(channel, 2).value
    attained = qfi.purified_input_qfi(channel, np.eye(d, dtype=complex) / d)
    report.update({
        "f2": f2,
        "additivity_gap": abs(f2 - 2.0 * report["f1"]),
        "entangled_gap": abs(attained - report["f1"]),
        "skipped": False,
    })
    return report


# ---------------------------------------------------------------------------
# lossy interferometer arm
# ---------------------------------------------------------------------------

def interferometer_channel(M: int, p: float, omega: float = 0.0) -> ParamChannel:
    """Phase rotation with photon loss on an M-photon truncated mode.

    Kraus index i counts lost photons: K_i = sqrt(p^i/i!) e^{-i omega n}
    (1-p)^{n/2} a^i with p the per-photon loss probability. On the
    truncated space the family is exactly trace preserving, which is
    asserted rather than assumed.
    """
    if int(M) != M or M < 1:
        raise InvalidParams(f"photon number must be a positive integer, got {M!r}")
    if M > M_MAX:
        raise TooLarge(f"photon number capped at {M_MAX}, got {M}")
    if not (0.0 <= p < 1.0):
        raise InvalidParams(f"loss probability must lie in [0, 1), got {p!r}")
    dim = M + 1
    n = np.arange(dim)
    lower = np.zeros((dim, dim), dtype=complex)
    lower[np.arange(dim - 1), np.arange(1, dim)] = np.sqrt(n[1:])
    damp = (np.exp(-1j * omega * n) * (1.0 - p) ** (0.5 * n))[:, None]
    kraus, dkraus = [], []
    ai = np.eye(dim, dtype=complex)
    for i in range(M + 1):
        coeff = sqrt(p ** i / factorial(i))
        if coeff > 0.0:
            K = coeff * (damp * ai)
            kraus.append(K)
            dkraus.append(-1j * n[:, None] * K)
        ai = lower @ ai
    total = sum(K.conj().T @ K for K in kraus)
    err = float(np.max(np.abs(total - np.eye(dim))))
    if err > 1e-10 * dim:
        raise TruncationError(
            f"Kraus completeness fails on the truncated space ({err:.3e})")
    return param_channel(kraus, dkraus,
                         label=f"interferometer(M={M}, p={p})")


def _project_simplex(v: np.ndarray) -> np.ndarray:
    u = np.sort(v)[::-1]
    cs = np.cumsum(u) - 1.0
    idx = np.arange(1, v.size + 1)
    mask = u - cs / idx > 0.0
    k = idx[mask][-1]
    return np.maximum(v - cs[mask][-1] / k, 0.0)


def _simplex_lsq(A: np.ndarray, iters: int = 20000) -> np.ndarray:
    """Minimize ||A x||^2 over the probability simplex by projected
    gradient descent; dimensions here are at most M_MAX + 1."""
    m = A.shape[1]
    x = np.full(m, 1.0 / m)
    AtA = A.T @ A
    lip = float(np.linalg.norm(AtA, 2))
    if lip <= 0.0:
        return x
    step = 1.0 / lip
    for _ in range(iters):
        xn = _project_simplex(x - step * (AtA @ x))
        if float(np.linalg.norm(xn - x)) <= 1e-15:
            return xn
        x = xn
    return x


def optimal_photon_distribution(M: int, p: float,
                                eps_gap: float = 1e-10) -> dict:
    """Optimal photon-number distribution for the lossy interferometer.

    The gauge may be restricted to diagonal matrices without changing
    the optimum, which shrinks the SDP to M + 2 real variables; the
    returned distribution lives on the top eigenspace of the optimal
    diagonal alpha and satisfies the diagonal stationarity conditions.
    Cross-checked against the unrestricted SDP and against direct
    evaluation of the attained value.
    """
    channel = interferometer_channel(M, p)
    r = channel.r
    basis = []
    for i in range(r):
        E = np.zeros((r, r), dtype=complex)
        E[i, i] = 1.0
        basis.append(E)
    problem = sdp.min_opnorm_problem(channel, h_basis=basis)
    sol = sdp.solve(problem, eps_gap=eps_gap)
    if not sol.optimal:
        raise SolverError(f"diagonal solve ended with status {sol.status!r}")
    f1_diag = max(4.0 * sol.objective, 0.0)
    full = qfi.channel_qfi_single(channel, eps_gap=eps_gap)
    if abs(f1_diag - full.value) > 1e-6 * (1.0 + full.value):
        raise SolverError(
            f"diagonal restriction lost optimality: {f1_diag!r} vs "
            f"{full.value!r}")
    h = problem.meta["h_from_y"](sol.y)
    al, _ = alpha_beta(channel, h)
    diag_al = np.real(np.diag(al))
    lam = float(diag_al.max())
    support = np.nonzero(diag_al >= lam - 1e-6 * (1.0 + lam))[0]
    rows = []
    for i, (K, dK) in enumerate(zip(channel.kraus, channel.dkraus)):
        Ktil = dK - 1j * h[i, i] * K
        rows.append(np.real(np.diag(1j * K.conj().T @ Ktil))[support])
    A = np.array(rows)
    weights = _simplex_lsq(A)
    gamma_sq = np.zeros(M + 1)
    gamma_sq[support] = weights
    residual = float(np.linalg.norm(A @ weights))
    achieved = qfi.purified_input_qfi(channel, np.diag(gamma_sq))
    if abs(achieved - full.value) > 1e-6 * (1.0 + full.value):
        raise FeasibilityFailed(
            f"distribution attains {achieved!r}, expected {full.value!r} "
            f"(stationarity residual {residual:.3e})")
    return {"gamma_sq": gamma_sq, "F1": f1_diag, "F1_full": full.value,
            "achieved": achieved, "stationarity_residual": residual,
            "support": support.tolist(),
            "h_diag": np.real(np.diag(h)).tolist()}
