"""Parametrized quantum channels.

A channel is stored as Kraus operators K_i plus their parameter
derivatives dK_i/domega at the working point. From these the module
builds the gauge objects alpha(h), beta(h), the generator H = i K^dag Kdot,
the Hermitian span of Kraus products, and the span-membership decision
(H inside or outside the span) that separates linear from quadratic
asymptotic QFI scaling.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import InputError, NotHermitian, NotTracePreserving, ShapeError, TooLarge
from .numerics import (TAU_RANK, as_matrix, check_hermitian, devectorize, gram_schmidt,
                       herm_basis, hermitianize, vectorize)

TAU_HNKS = 1e-7
TAU_HNKS_WARN = 1e-9


@dataclass(frozen=True)
class ParamChannel:
    kraus: tuple
    dkraus: tuple
    label: str = ""

    @property
    def r(self) -> int:
        return len(self.kraus)

    @property
    def d_in(self) -> int:
        return self.kraus[0].shape[1]

    @property
    def d_out(self) -> int:
        return self.kraus[0].shape[0]


@dataclass(frozen=True)
class KrausSpan:
    """Orthonormal Hermitian basis of span{K_i^dag K_j} (trace inner product)."""
    basis: tuple

    @property
    def dim(self) -> int:
        return len(self.basis)

    def project(self, A) -> np.ndarray:
        P = np.zeros_like(np.asarray(A, dtype=complex))
        for S in self.basis:
            P += np.real(np.trace(S @ A)) * S
        return P


@dataclass(frozen=True)
class HnksDecision:
    in_span: bool
    residual: float
    borderline: bool
    span_dim: int

    def __str__(self):
        tag = "InSpan" if self.in_span else "NotInSpan"
        extra = " (borderline)" if self.borderline else ""
        return f"{tag}(residual={self.residual:.3e}){extra}"


def param_channel(kraus, dkraus, label: str = "", compress: bool = True) -> ParamChannel:
    """Build and validate a ParamChannel.

    Kraus lists are compressed to a representation with linearly
    independent operators before the rank is reported. Compression uses
    the joint row span of (K_i, dK_i) pairs: a direction is only dropped
    when both the operator and its derivative vanish on it, since a
    derivative sticking out of the span carries physical information.
    """
    ks = [as_matrix(k) for k in kraus]
    dks = [as_matrix(k) for k in dkraus]
    if len(ks) == 0:
        raise ShapeError("need at least one Kraus operator")
    if len(ks) != len(dks):
        raise ShapeError(f"{len(ks)} Kraus operators but {len(dks)} derivatives")
    shape = ks[0].shape
    for k in ks + dks:
        if k.shape != shape:
            raise ShapeError(f"inconsistent Kraus shapes {k.shape} vs {shape}")

    if compress and len(ks) > 1:
        rows_k = np.stack([k.reshape(-1) for k in ks])
        rows_dk = np.stack([k.reshape(-1) for k in dks])
        joint = np.hstack([rows_k, rows_dk])
        U, s, _ = np.linalg.svd(joint, full_matrices=False)
        cut = TAU_RANK * (1.0 + (float(s[0]) if s.size else 0.0))
        rank = max(1, int(np.sum(s > cut)))
        if rank < len(ks):
            Ur = U[:, :rank]
            rows_k = Ur.conj().T @ rows_k
            rows_dk = Ur.conj().T @ rows_dk
            ks = [rows_k[i].reshape(shape) for i in range(rank)]
            dks = [rows_dk[i].reshape(shape) for i in range(rank)]

    ch = ParamChannel(tuple(ks), tuple(dks), label)
    validate(ch)
    return ch


def validate(channel: ParamChannel) -> None:
    """Check trace preservation and its derivative."""
    if len(channel.kraus) != len(channel.dkraus):
        raise ShapeError("Kraus and derivative counts differ")
    d = channel.d_in
    acc = np.zeros((d, d), dtype=complex)
    for k in channel.kraus:
        acc += k.conj().T @ k
    if float(np.max(np.abs(acc - np.eye(d)))) > 1e-9 * (1.0 + float(np.max(np.abs(acc)))):
        raise NotTracePreserving(
            f"sum K^dag K deviates from identity by {np.max(np.abs(acc - np.eye(d))):.3e}")
    dacc = np.zeros((d, d), dtype=complex)
    for k, dk in zip(channel.kraus, channel.dkraus):
        dacc += dk.conj().T @ k + k.conj().T @ dk
    if float(np.max(np.abs(dacc))) > 1e-8:
        raise NotTracePreserving(
            f"derivative of sum K^dag K is {np.max(np.abs(dacc)):.3e}, not zero")


def alpha_beta(channel: ParamChannel, h):
    """The gauge-dependent pair alpha(h), beta(h).

    With Ktil_i = dK_i - i sum_j h_ij K_j:
        alpha = Ktil^dag Ktil (summed), beta = i sum_i K_i^dag Ktil_i.
    beta equals H + K^dag h K for Hermitian h.
    """
    r = channel.r
    h = check_hermitian(h, name="h")
    if h.shape != (r, r):
        raise ShapeError(f"h must be {r}x{r}, got {h.shape}")
    ktil = [channel.dkraus[i] - 1j * sum(h[i, j] * channel.kraus[j] for j in range(r))
            for i in range(r)]
    d = channel.d_in
    alpha = np.zeros((d, d), dtype=complex)
    beta = np.zeros((d, d), dtype=complex)
    for i in range(r):
        alpha += ktil[i].conj().T @ ktil[i]
        beta += 1j * channel.kraus[i].conj().T @ ktil[i]
    return hermitianize(alpha), hermitianize(beta)


def hamiltonian_H(channel: ParamChannel) -> np.ndarray:
    """Effective generator H = i sum K_i^dag dK_i (Hermitian by the
    derivative of trace preservation)."""
    d = channel.d_in
    H = np.zeros((d, d), dtype=complex)
    for k, dk in zip(channel.kraus, channel.dkraus):
        H += 1j * k.conj().T @ dk
    res = float(np.max(np.abs(H - H.conj().T)))
    if res > 1e-8 * (1.0 + float(np.max(np.abs(H)))):
        raise NotHermitian(f"generator is not Hermitian (residual {res:.3e})")
    return hermitianize(H)


def kraus_span(channel: ParamChannel) -> KrausSpan:
    """Orthonormal Hermitian basis of the span of all K_i^dag K_j.

    Built from the Hermitian and anti-Hermitian parts of every pair
    product, orthonormalized at the rank tolerance. Always contains the
    identity direction because sum K_i^dag K_i = I.
    """
    cands = []
    r = channel.r
    for i in range(r):
        for j in range(r):
            P = channel.kraus[i].conj().T @ channel.kraus[j]
            cands.append(hermitianize(P))
            cands.append(hermitianize(-1j * P))
    vecs = gram_schmidt([vectorize(c) for c in cands])
    basis = tuple(hermitianize(devectorize(v)) for v in vecs)
    return KrausSpan(basis)


def hnks(channel: ParamChannel, tol: float = TAU_HNKS) -> HnksDecision:
    """Decide whether the generator H lies inside the Kraus span.

    residual = Frobenius distance from H to its projection onto the
    span. NotInSpan when the residual exceeds tol; residuals inside the
    (1e-9, tol) band are flagged borderline rather than silently decided.
    """
    span = kraus_span(channel)
    H = hamiltonian_H(channel)
    res = float(np.linalg.norm(H - span.project(H)))
    in_span = res <= tol
    borderline = TAU_HNKS_WARN < res <= tol
    return HnksDecision(in_span, res, borderline, span.dim)


def tensor_power(channel: ParamChannel, N: int, n_max: int = 3) -> ParamChannel:
    """N-fold tensor power with product-rule derivatives."""
    if N < 1:
        raise InputError(f"N must be >= 1, got {N}")
    if N > n_max:
        raise TooLarge(f"N = {N} exceeds n_max = {n_max}")
    if N == 1:
        return channel
    ks = list(channel.kraus)
    dks = list(channel.dkraus)
    for _ in range(N - 1):
        new_k = []
        new_dk = []
        for a, da in zip(ks, dks):
            for b, db in zip(channel.kraus, channel.dkraus):
                new_k.append(np.kron(a, b))
                new_dk.append(np.kron(da, b) + np.kron(a, db))
        ks, dks = new_k, new_dk
    label = f"{channel.label or 'channel'}^(x{N})"
    out = ParamChannel(tuple(ks), tuple(dks), label)
    validate(out)
    return out


def apply(channel: ParamChannel, rho, ancilla_dim: int | None = None):
    """Evolve rho (and its derivative) through channel (x) identity.

    rho lives on probe (x) ancilla; the ancilla dimension is inferred
    from the shape when not given. Returns (rho_out, drho_out).
    """
    rho = as_matrix(rho)
    n = rho.shape[0]
    if rho.shape[0] != rho.shape[1]:
        raise ShapeError("state must be square")
    d = channel.d_in
    if ancilla_dim is None:
        ancilla_dim = n // d
    if d * ancilla_dim != n:
        raise ShapeError(f"state dim {n} incompatible with probe dim {d}")
    Ia = np.eye(ancilla_dim)
    out = np.zeros((channel.d_out * ancilla_dim,) * 2, dtype=complex)
    dout = np.zeros_like(out)
    for k, dk in zip(channel.kraus, channel.dkraus):
        Kb = np.kron(k, Ia)
        dKb = np.kron(dk, Ia)
        Krho = Kb @ rho
        out += Krho @ Kb.conj().T
        dout += dKb @ rho @ Kb.conj().T + Krho @ dKb.conj().T
    return out, dout


def finite_diff_channel(family, omega0: float, step: float,
                        label: str = "") -> ParamChannel:
    """Central-difference derivatives of a Kraus family omega -> [K_i].

    The family must return Kraus lists in a consistent order and gauge;
    finite differences of a Kraus family are representation dependent,
    so only span-invariant quantities (decisions, QFI values) coincide
    with those of an analytic derivative.
    """
    if step <= 0:
        raise InputError("step must be positive")
    k0 = [as_matrix(k) for k in family(omega0)]
    kp = [as_matrix(k) for k in family(omega0 + step)]
    km = [as_matrix(k) for k in family(omega0 - step)]
    if not (len(k0) == len(kp) == len(km)):
        raise ShapeError("family returned inconsistent Kraus counts")
    dks = [(p - m) / (2.0 * step) for p, m in zip(kp, km)]
    return param_channel(k0, dks, label=label or "finite-diff")


def gauge_rotate(channel: ParamChannel, u, h=None) -> ParamChannel:
    """Equivalent representation uK with derivative u(Kdot - i h K).

    u is a constant unitary mixing the Kraus operators; h is the
    Hermitian generator of an omega-dependent mixing (defaults to 0).
    """
    u = as_matrix(u)
    r = channel.r
    if u.shape != (r, r):
        raise ShapeError(f"u must be {r}x{r}")
    if h is None:
        h = np.zeros((r, r), dtype=complex)
    h = check_hermitian(h, name="h")
    ktil = [channel.dkraus[i] - 1j * sum(h[i, j] * channel.kraus[j] for j in range(r))
            for i in range(r)]
    ks = [sum(u[i, j] * channel.kraus[j] for j in range(r)) for i in range(r)]
    dks = [sum(u[i, j] * ktil[j] for j in range(r)) for i in range(r)]
    return ParamChannel(tuple(ks), tuple(dks), channel.label)


def natural_superop(kraus) -> np.ndarray:
    """Natural (row-major vec) superoperator sum_i K_i (x) conj(K_i)."""
    ks = [as_matrix(k) for k in kraus]
    dout, din = ks[0].shape
    S = np.zeros((dout * dout, din * din), dtype=complex)
    for k in ks:
        S += np.kron(k, k.conj())
    return S


def one_design_check(unitaries, probs, tol: float = 1e-9) -> bool:
    """Does sum_i p_i U_i A U_i^dag equal Tr(A) I/d on a full matrix basis?"""
    us = [as_matrix(u) for u in unitaries]
    p = np.asarray(probs, dtype=float)
    if len(us) != p.size:
        raise ShapeError("unitary and probability counts differ")
    d = us[0].shape[0]
    worst = 0.0
    for a in range(d):
        for b in range(d):
            E = np.zeros((d, d), dtype=complex)
            E[a, b] = 1.0
            avg = sum(pi * (u @ E @ u.conj().T) for pi, u in zip(p, us))
            target = (1.0 if a == b else 0.0) / d * np.eye(d)
            worst = max(worst, float(np.max(np.abs(avg - target))))
    return worst <= tol


def pauli_matrices():
    sx = np.array([[0, 1], [1, 0]], dtype=complex)
    sy = np.array([[0, -1j], [1j, 0]], dtype=complex)
    sz = np.array([[1, 0], [0, -1]], dtype=complex)
    return sx, sy, sz
