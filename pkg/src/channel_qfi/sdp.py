"""Small dense semidefinite-program solver and the problem builders used
throughout the package.

Problem form: real decision vector y of length m,

    minimize    c . y
    subject to  F(y) = F0 + sum_k y_k F_k  >= 0   (Hermitian blocks)
                A y = b                            (real affine equalities)

The solver is a primal-dual path-following interior-point method with
Nesterov-Todd scaling, operating natively on complex Hermitian blocks.
Equalities are eliminated onto their affine null space before the cone
solve. When no strictly feasible interior point is supplied, a big-M
slack variable (identity-scaled) builds one.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import ShapeError
from .numerics import check_hermitian, herm_basis, herm_coords, herm_from_coords, hermitianize


@dataclass
class SdpProblem:
    c: np.ndarray                 # (m,) real objective
    F0: list                      # list of Hermitian blocks
    F: list                       # F[k][b]: coefficient of variable k on block b
    A: np.ndarray | None = None   # (p, m) real equality matrix
    b: np.ndarray | None = None   # (p,)
    meta: dict = field(default_factory=dict)

    @property
    def num_vars(self) -> int:
        return len(self.c)

    @property
    def block_dims(self):
        return [blk.shape[0] for blk in self.F0]

    def blocks_at(self, y):
        """Evaluate F(y) blockwise."""
        out = [blk.astype(complex).copy() for blk in self.F0]
        for k, yk in enumerate(y):
            if yk == 0.0:
                continue
            for bi, blk in enumerate(self.F[k]):
                if blk is not None:
                    out[bi] += yk * blk
        return [hermitianize(blk) for blk in out]

    def validate(self):
        m = self.num_vars
        if len(self.F) != m:
            raise ShapeError(f"{len(self.F)} coefficient lists for {m} variables")
        dims = self.block_dims
        for k in range(m):
            if len(self.F[k]) != len(dims):
                raise ShapeError("block count mismatch in coefficients")
            for bi, blk in enumerate(self.F[k]):
                if blk is not None and blk.shape != (dims[bi], dims[bi]):
                    raise ShapeError("block dimension mismatch")
        for blk in self.F0:
            check_hermitian(blk, name="F0 block")
        for k in range(m):
            for blk in self.F[k]:
                if blk is not None:
                    check_hermitian(blk, name=f"F[{k}] block")
        if self.A is not None and self.A.shape[1] != m:
            raise ShapeError("equality matrix width mismatch")


@dataclass
class SdpSolution:
    y: np.ndarray
    objective: float
    Z: list
    status: str                   # "optimal" | "infeasible" | "maxiter"
    rel_gap: float
    iterations: int
    eq_residual: float
    psd_residual: float
    slack: float = 0.0

    @property
    def optimal(self) -> bool:
        return self.status == "optimal"


def _real_embed(B):
    """[[Re, -Im], [Im, Re]] symmetric embedding of a Hermitian block."""
    R, I = B.real, B.imag
    top = np.hstack([R, -I])
    bot = np.hstack([I, R])
    return np.vstack([top, bot]).astype(complex)


def _null_space(A, tol=1e-12):
    """Particular least-squares solution and null-space basis of A y = b."""
    U, s, Vt = np.linalg.svd(A, full_matrices=True)
    cut = tol * (1.0 + (s[0] if s.size else 0.0))
    rank = int(np.sum(s > cut))
    return rank, Vt[rank:].T.copy()


def _chol(X):
    try:
        return np.linalg.cholesky(X)
    except np.linalg.LinAlgError:
        w, V = np.linalg.eigh(hermitianize(X))
        w = np.clip(w, 1e-300, None)
        return np.linalg.cholesky(hermitianize((V * w) @ V.conj().T))


def _psd_sqrt_pair(X):
    """(X^{1/2}, X^{-1/2}) for a positive definite Hermitian matrix."""
    w, V = np.linalg.eigh(hermitianize(X))
    w = np.clip(w, 1e-300, None)
    s = np.sqrt(w)
    return (V * s) @ V.conj().T, (V / s) @ V.conj().T


def _nt_scaling(X, Z):
    """Nesterov-Todd scaling W with W Z W = X, together with W^{-1}."""
    Zs, Zsi = _psd_sqrt_pair(Z)
    mid = hermitianize(Zs @ X @ Zs)
    Ms, Msi = _psd_sqrt_pair(mid)
    W = hermitianize(Zsi @ Ms @ Zsi)
    Winv = hermitianize(Zs @ Msi @ Zs)
    return W, Winv


def _step_to_boundary(X, D):
    """Largest alpha keeping X + alpha D positive semidefinite."""
    try:
        L = _chol(X)
        Li = np.linalg.inv(L)
        T = hermitianize(Li @ D @ Li.conj().T)
        lam = float(np.linalg.eigvalsh(T)[0])
    except np.linalg.LinAlgError:
        return 0.0
    if not np.isfinite(lam):
        return 0.0
    if lam >= -1e-300:
        return np.inf
    return -1.0 / lam


def _min_eig_blocks(blocks):
    vals = [float(np.linalg.eigvalsh(hermitianize(B))[0]) for B in blocks if B.size]
    return min(vals) if vals else 0.0


def solve(problem: SdpProblem, interior=None, eps_gap: float = 1e-10,
          eps_feas: float = 1e-9, max_iter: int = 200,
          real_embedding: bool = False) -> SdpSolution:
    """Solve an SdpProblem.

    interior: optional strictly feasible y (must satisfy the equalities);
    when omitted, problem.meta["interior"] is used if present, and
    otherwise a big-M slack variable provides the cold start.
    real_embedding: solve the real symmetric embedding instead of the
    native complex Hermitian formulation (testing fallback).
    """
    problem.validate()
    c = np.asarray(problem.c, dtype=float)
    m = c.size
    F0 = [hermitianize(B) for B in problem.F0]
    Fk = [[None if B is None else hermitianize(B) for B in problem.F[k]] for k in range(m)]
    if real_embedding:
        F0 = [_real_embed(B) for B in F0]
        Fk = [[None if B is None else _real_embed(B) for B in row] for row in Fk]
    nblocks = len(F0)

    if interior is None:
        interior = problem.meta.get("interior")

    # ---- equality elimination ----
    if problem.A is not None and problem.A.shape[0] > 0:
        A = np.asarray(problem.A, dtype=float)
        bvec = np.asarray(problem.b, dtype=float)
        y_part, *_ = np.linalg.lstsq(A, bvec, rcond=None)
        eq_res = float(np.linalg.norm(A @ y_part - bvec))
        if eq_res > 1e-8 * (1.0 + float(np.linalg.norm(bvec))):
            return SdpSolution(y_part, float(c @ y_part), [np.zeros_like(B) for B in F0],
                               "infeasible", np.inf, 0, eq_res, 0.0)
        _, N = _null_space(A)
    else:
        y_part = np.zeros(m)
        eq_res = 0.0
        N = np.eye(m)
    q = N.shape[1]

    def to_full(z):
        return y_part + N @ z

    # reduced data
    G0 = [B.copy() for B in F0]
    for k, yk in enumerate(y_part):
        if yk != 0.0:
            for bi, B in enumerate(Fk[k]):
                if B is not None:
                    G0[bi] += yk * B
    G0 = [hermitianize(B) for B in G0]
    Gs = []
    for j in range(q):
        col = []
        for bi in range(nblocks):
            acc = np.zeros_like(F0[bi])
            for k in range(m):
                if N[k, j] != 0.0 and Fk[k][bi] is not None:
                    acc += N[k, j] * Fk[k][bi]
            col.append(hermitianize(acc))
        Gs.append(col)
    c_red = N.T @ c
    offset = float(c @ y_part)

    if q == 0:
        # fully determined by the equalities
        lam = _min_eig_blocks(G0)
        status = "optimal" if lam >= -eps_feas else "infeasible"
        return SdpSolution(y_part, offset, [np.zeros_like(B) for B in G0],
                           status, 0.0, 0, eq_res, lam)

    # ---- interior start / big-M slack ----
    z0 = None
    if interior is not None:
        yi = np.asarray(interior, dtype=float)
        if yi.size == m:
            zi, *_ = np.linalg.lstsq(N, yi - y_part, rcond=None)
            cand = _eval_reduced(G0, Gs, zi)
            scale = 1.0 + max(float(np.max(np.abs(B))) if B.size else 0.0 for B in cand)
            if float(np.linalg.norm(N @ zi - (yi - y_part))) < 1e-8 * (1 + np.linalg.norm(yi)) \
                    and _min_eig_blocks(cand) > 1e-10 * scale:
                z0 = zi

    use_slack = z0 is None
    bigM = None
    if use_slack:
        lam0 = _min_eig_blocks(G0)
        s0 = 1.0 + max(0.0, -lam0) * 1.2
        bigM = 100.0 * (1.0 + float(np.sum(np.abs(c_red)))
                        + sum(float(np.max(np.abs(B))) if B.size else 0.0 for B in G0))
        for attempt in range(3):
            sol = _ip_core(G0, Gs, c_red, offset, z_extra=(s0, bigM),
                           eps_gap=eps_gap, eps_feas=eps_feas, max_iter=max_iter)
            z, Zb, status, relgap, iters = sol
            slack = float(z[-1])
            if status != "optimal" or slack <= 1e-6 * (1.0 + s0):
                break
            bigM *= 100.0
        if status == "optimal" and slack > 1e-6 * (1.0 + s0):
            status = "infeasible"
        z = z[:-1]
        Zb = Zb[:-1]  # drop the slack bound block
    else:
        sol = _ip_core(G0, Gs, c_red, offset, z_start=z0,
                       eps_gap=eps_gap, eps_feas=eps_feas, max_iter=max_iter)
        z, Zb, status, relgap, iters = sol
        slack = 0.0

    y = to_full(z)
    Xb = _eval_reduced(G0, Gs, z)
    psd_res = _min_eig_blocks(Xb)
    pobj = float(c_red @ z) + offset
    dobj = offset - sum(float(np.real(np.trace(B @ Zb[bi]))) for bi, B in enumerate(G0))
    relgap_final = abs(pobj - dobj) / (1.0 + abs(pobj) + abs(dobj))
    return SdpSolution(y, float(c @ y), Zb, status, relgap_final, iters,
                       eq_res, psd_res, slack)


def _eval_reduced(G0, Gs, z):
    out = [B.copy() for B in G0]
    for j, zj in enumerate(z):
        if zj != 0.0:
            for bi, B in enumerate(Gs[j]):
                out[bi] += zj * B
    return [hermitianize(B) for B in out]


# overflow near the central-path endpoint is detected and handled through
# explicit finite checks; keep numpy quiet about the intermediate values
@np.errstate(over="ignore", invalid="ignore")
def _ip_core(G0, Gs, c_red, offset, z_start=None, z_extra=None,
             eps_gap=1e-10, eps_feas=1e-9, max_iter=200):
    """Interior-point iteration on the reduced (equality-free) problem.

    z_extra = (s0, bigM) appends a slack variable with identity
    coefficients on every block plus its own 1x1 bound block.
    """
    G0 = [B.copy() for B in G0]
    Gs = [list(col) for col in Gs]
    c_red = np.asarray(c_red, dtype=float).copy()
    nb = len(G0)

    if z_extra is not None:
        s0, bigM = z_extra
        slack_col = [np.eye(B.shape[0], dtype=complex) for B in G0]
        for j in range(len(Gs)):
            Gs[j] = Gs[j] + [np.zeros((1, 1), dtype=complex)]
        slack_col.append(np.ones((1, 1), dtype=complex))
        G0 = [B for B in G0] + [np.zeros((1, 1), dtype=complex)]
        Gs.append(slack_col)
        c_red = np.concatenate([c_red, [bigM]])
        z = np.zeros(len(Gs))
        z[-1] = s0
        nb = len(G0)
    else:
        z = np.asarray(z_start, dtype=float).copy()

    q = len(Gs)
    dims = [B.shape[0] for B in G0]
    ntot = sum(dims)
    X = _eval_reduced(G0, Gs, z)
    scale_c = 1.0 + float(np.linalg.norm(c_red))
    scale_g = 1.0 + max(float(np.max(np.abs(B))) if B.size else 0.0 for B in G0)
    zeta = 1.0 + float(np.linalg.norm(c_red)) / max(1, q)
    Z = [zeta * np.eye(d, dtype=complex) for d in dims]

    # flattened transposed coefficients for fast trace pairings
    Gt_flat = np.stack([np.concatenate([Gs[j][bi].T.reshape(-1) for bi in range(nb)])
                        for j in range(q)])
    # Gram matrix of the coefficient matrices; used to re-project dual steps
    # onto the dual feasibility equation (see directions() below)
    G_flat = np.stack([np.concatenate([Gs[j][bi].reshape(-1) for bi in range(nb)])
                       for j in range(q)])
    gram_pinv = np.linalg.pinv(np.real(Gt_flat @ G_flat.T), rcond=1e-12)

    status = "maxiter"
    it = 0
    best = (np.inf, z.copy(), [B.copy() for B in Z])
    best_it = 0
    stalled_steps = 0
    for it in range(1, max_iter + 1):
        gap = sum(float(np.real(np.trace(X[bi] @ Z[bi]))) for bi in range(nb))
        mu = gap / ntot
        rd = c_red - np.array([sum(float(np.real(np.trace(Gs[j][bi] @ Z[bi])))
                                   for bi in range(nb)) for j in range(q)])
        Rp = [hermitianize(B - X[bi]) for bi, B in enumerate(_eval_reduced(G0, Gs, z))]
        rp_norm = max(float(np.max(np.abs(B))) if B.size else 0.0 for B in Rp)

        pobj = float(c_red @ z) + offset
        dobj = offset - sum(float(np.real(np.trace(G0[bi] @ Z[bi]))) for bi in range(nb))
        # both the complementarity gap and the objective gap must close;
        # the latter additionally feels the dual residual times ||z||
        err_gap = max(abs(gap), abs(pobj - dobj)) / (1.0 + abs(pobj) + abs(dobj))
        err_d = float(np.linalg.norm(rd)) / scale_c
        err_p = rp_norm / scale_g
        if not np.isfinite(gap) or gap > 1e16:
            break
        score = max(err_gap / eps_gap, err_d / eps_feas, err_p / eps_feas)
        if score < best[0]:
            best = (score, z.copy(), [B.copy() for B in Z])
            best_it = it
        if err_gap <= eps_gap and err_d <= eps_feas and err_p <= eps_feas:
            status = "optimal"
            break
        if it - best_it > 12:
            # no progress; accept the best iterate if it is merely loose
            break

        W = [None] * nb
        Winv = [None] * nb
        Zinv = [None] * nb
        try:
            for bi in range(nb):
                W[bi], Winv[bi] = _nt_scaling(X[bi], Z[bi])
                w, V = np.linalg.eigh(hermitianize(Z[bi]))
                Zinv[bi] = hermitianize((V / np.clip(w, 1e-300, None)) @ V.conj().T)
        except np.linalg.LinAlgError:
            break
        if not all(np.all(np.isfinite(Winv[bi])) for bi in range(nb)):
            break

        # normal matrix M_ij = sum_b Tr(G_i Winv G_j Winv)
        Ghat_flat = np.empty_like(Gt_flat)
        for j in range(q):
            parts = []
            for bi in range(nb):
                parts.append((Winv[bi] @ Gs[j][bi] @ Winv[bi]).reshape(-1))
            Ghat_flat[j] = np.concatenate(parts)
        Mmat = np.real(Gt_flat @ Ghat_flat.T)
        Mmat = 0.5 * (Mmat + Mmat.T)

        # symmetric Jacobi equilibration tames the wildly different variable
        # scales that the normal matrix develops near the central-path end
        dscale = np.sqrt(np.clip(np.abs(np.diag(Mmat)), 1e-300, None))
        Meq = Mmat / np.outer(dscale, dscale)

        def solve_normal(rhs):
            # pivoted LU with iterative refinement; the normal matrix turns
            # severely ill conditioned near the optimum
            req = rhs / dscale
            try:
                u = np.linalg.solve(Meq, req)
            except np.linalg.LinAlgError:
                u = np.linalg.lstsq(Meq, req, rcond=None)[0]
            for _ in range(4):
                r = req - Meq @ u
                if not np.all(np.isfinite(r)):
                    break
                try:
                    corr = np.linalg.solve(Meq, r)
                except np.linalg.LinAlgError:
                    break
                u_new = u + corr
                if np.linalg.norm(req - Meq @ u_new) >= np.linalg.norm(r):
                    break
                u = u_new
            return u / dscale

        def directions(Rc):
            rhs = np.empty(q)
            for j in range(q):
                acc = 0.0
                for bi in range(nb):
                    S = Winv[bi] @ (Rc[bi] - Rp[bi]) @ Winv[bi]
                    acc += float(np.real(np.sum(Gs[j][bi].T * S)))
                rhs[j] = acc - rd[j]
            dz = solve_normal(rhs)
            dX = []
            dZ = []
            for bi in range(nb):
                acc = Rp[bi].copy()
                for j in range(q):
                    if dz[j] != 0.0:
                        acc = acc + dz[j] * Gs[j][bi]
                dXb = hermitianize(acc)
                dZb = hermitianize(Winv[bi] @ (Rc[bi] - dXb) @ Winv[bi])
                dX.append(dXb)
                dZ.append(dZb)
            # the dual step above satisfies the scaled complementarity
            # equation exactly but dual feasibility only up to the normal
            # solve error, which the ill conditioned M amplifies near the
            # optimum.  Project the step back onto Tr(G_j dZ) = rd_j so the
            # dual residual contracts by (1 - ad) every iteration instead
            # of absorbing that error.
            dZ_flat = np.concatenate([dZ[bi].reshape(-1) for bi in range(nb)])
            excess = rd - np.real(Gt_flat @ dZ_flat)
            wcorr = gram_pinv @ excess
            for bi in range(nb):
                acc = np.zeros_like(dZ[bi])
                for j in range(q):
                    if wcorr[j] != 0.0:
                        acc = acc + wcorr[j] * Gs[j][bi]
                dZ[bi] = hermitianize(dZ[bi] + acc)
            return dz, dX, dZ

        # predictor (affine scaling)
        Rc_aff = [-X[bi] for bi in range(nb)]
        dz_a, dX_a, dZ_a = directions(Rc_aff)
        if not _all_finite(dz_a, dX_a, dZ_a):
            break
        ap = min(1.0, 0.98 * min(_step_to_boundary(X[bi], dX_a[bi]) for bi in range(nb)))
        ad = min(1.0, 0.98 * min(_step_to_boundary(Z[bi], dZ_a[bi]) for bi in range(nb)))
        gap_aff = sum(float(np.real(np.trace((X[bi] + ap * dX_a[bi])
                                             @ (Z[bi] + ad * dZ_a[bi])))) for bi in range(nb))
        sigma = float(np.clip((max(gap_aff, 0.0) / gap) ** 3, 1e-10, 1.0 - 1e-10))

        # corrector (centering)
        Rc = [hermitianize(sigma * mu * Zinv[bi] - X[bi]) for bi in range(nb)]
        dz, dX, dZ = directions(Rc)
        if not _all_finite(dz, dX, dZ):
            break
        ap = min(1.0, 0.98 * min(_step_to_boundary(X[bi], dX[bi]) for bi in range(nb)))
        ad = min(1.0, 0.98 * min(_step_to_boundary(Z[bi], dZ[bi]) for bi in range(nb)))
        if max(ap, ad) <= 1e-8:
            stalled_steps += 1
            if stalled_steps >= 2:
                break
        else:
            stalled_steps = 0
        z = z + ap * dz
        X = [hermitianize(X[bi] + ap * dX[bi]) for bi in range(nb)]
        Z = [hermitianize(Z[bi] + ad * dZ[bi]) for bi in range(nb)]

    # fall back to the best iterate seen; near the optimum late iterations
    # can degrade once the normal system turns singular.  A stalled run is
    # still accepted when the best iterate is within three orders of the
    # requested tolerances (duality gap 1e-7 relative at the defaults),
    # which covers degenerate optimal faces where the dual residual floors.
    score, z, Z = best
    if status != "optimal":
        status = "optimal" if score <= 1000.0 else "maxiter"
    return z, Z, status, None, it


def _all_finite(dz, dX, dZ):
    if not np.all(np.isfinite(dz)):
        return False
    return all(np.all(np.isfinite(B)) for B in dX + dZ)


# ---------------------------------------------------------------------------
# problem builders
# ---------------------------------------------------------------------------

def _kraus_stacks(channel):
    K = np.vstack([k for k in channel.kraus])
    Kd = np.vstack([k for k in channel.dkraus])
    return K, Kd


def beta_zero_solution(channel):
    """Particular Hermitian h with H + K^dag h K = 0, plus residual and
    the null-space basis of the h -> K^dag h K map.

    The image of the map is exactly the Hermitian Kraus span, so the
    least-squares residual here is the span-membership residual of H.
    """
    from .channel import hamiltonian_H
    r = channel.r
    d = channel.d_in
    K, _ = _kraus_stacks(channel)
    hb = herm_basis(r)
    db = herm_basis(d)
    cols = []
    for B in hb:
        M = K.conj().T @ np.kron(B, np.eye(channel.d_out)) @ K
        cols.append(herm_coords(M, db))
    Amap = np.column_stack(cols)              # (d^2, r^2) real
    H = hamiltonian_H(channel)
    rhs = -herm_coords(H, db)
    x, *_ = np.linalg.lstsq(Amap, rhs, rcond=None)
    residual = float(np.linalg.norm(Amap @ x - rhs))
    _, Nh = _null_space(Amap, tol=1e-11)
    return herm_from_coords(x, r, hb), residual, Nh, Amap


def min_opnorm_problem(channel, constrain_beta_zero: bool = False,
                       h_basis=None) -> SdpProblem:
    """SDP whose optimum x* satisfies 4 x* = 4 min_h ||alpha(h)||.

    Block structure [[x I, Ktil^dag], [Ktil, I]] >= 0 with
    Ktil = Kdot - i h K; variables are x and the real coordinates of
    Hermitian h. With constrain_beta_zero, affine equalities force
    beta(h) = H + K^dag h K = 0 (raises BetaInfeasible when impossible,
    which is an HNKS witness). h_basis optionally restricts h to the
    real span of the given Hermitian matrices.
    """
    from .errors import BetaInfeasible

    r = channel.r
    din = channel.d_in
    dout = channel.d_out
    K, Kd = _kraus_stacks(channel)
    hb = herm_basis(r) if h_basis is None else list(h_basis)
    nh = len(hb)
    m = 1 + nh
    nbig = din + r * dout

    def embed(x_block, corner):
        M = np.zeros((nbig, nbig), dtype=complex)
        if x_block is not None:
            M[:din, :din] = x_block
        if corner is not None:
            M[din:, :din] = corner
            M[:din, din:] = corner.conj().T
        return M

    F0 = [embed(None, Kd)]
    F0[0][din:, din:] = np.eye(r * dout)
    F = [[embed(np.eye(din), None)]]
    for B in hb:
        T = -1j * np.kron(B, np.eye(dout)) @ K
        F.append([embed(None, T)])
    c = np.zeros(m)
    c[0] = 1.0

    A = None
    bvec = None
    h0 = np.zeros((r, r), dtype=complex)
    if constrain_beta_zero:
        from .channel import hamiltonian_H
        db = herm_basis(din)
        rows = []
        for B in hb:
            Mk = K.conj().T @ np.kron(B, np.eye(dout)) @ K
            rows.append(herm_coords(Mk, db))
        Amap = np.column_stack(rows)
        H = hamiltonian_H(channel)
        rhs = -herm_coords(H, db)
        x_ls, *_ = np.linalg.lstsq(Amap, rhs, rcond=None)
        residual = float(np.linalg.norm(Amap @ x_ls - rhs))
        if residual > 1e-7 * (1.0 + float(np.linalg.norm(rhs))):
            raise BetaInfeasible(
                f"no Kraus gauge sets beta to zero (residual {residual:.3e}); "
                "the generator is outside the Kraus span")
        A = np.hstack([np.zeros((Amap.shape[0], 1)), Amap])
        bvec = rhs
        h0 = sum(float(xk) * B for xk, B in zip(x_ls, hb))

    Ktil0 = Kd - 1j * np.kron(h0, np.eye(dout)) @ K
    x0 = 2.0 * float(np.linalg.norm(Ktil0, 2)) ** 2 + 1.0
    interior = np.concatenate([[x0], [float(np.real(np.trace(B @ h0))) for B in hb]])

    def h_from_y(y):
        return sum(float(yk) * B for yk, B in zip(y[1:], hb)) if nh else h0 * 0.0

    return SdpProblem(c, F0, F, A, bvec,
                      meta={"interior": interior, "h_from_y": h_from_y,
                            "kind": "min_opnorm",
                            "beta_zero": bool(constrain_beta_zero)})


def min_affine_opnorm_problem(H0, family) -> SdpProblem:
    """SDP minimizing ||H0 + sum_k x_k G_k||_op over real coefficients x.

    H0 and every G_k are Hermitian. Encoded with two blocks
    t I - (H0 + sum x G) >= 0 and t I + (H0 + sum x G) >= 0; the
    objective value is the minimal operator norm t*. y = (t, x).
    """
    H0 = check_hermitian(H0, name="H0")
    d = H0.shape[0]
    fam = [check_hermitian(G, name="family member") for G in family]
    eye = np.eye(d, dtype=complex)
    F0 = [-H0, H0.copy()]
    F = [[eye.copy(), eye.copy()]]
    for G in fam:
        F.append([-G, G.copy()])
    c = np.zeros(1 + len(fam))
    c[0] = 1.0
    interior = np.zeros(1 + len(fam))
    interior[0] = float(np.linalg.norm(H0, 2)) + 1.0
    return SdpProblem(c, F0, F,
                      meta={"interior": interior, "kind": "min_affine_opnorm"})


def max_trace_constrained_problem(H, span_basis) -> SdpProblem:
    """SDP for max |Tr(H Ctilde)| over ||Ctilde||_1 <= 2, Tr(Ctilde S) = 0.

    Encodes Ctilde = P - M with P, M >= 0 and Tr(P + M) + s = 2, s >= 0.
    The solver minimizes -Tr(H Ctilde); the optimum equals
    -objective = 2 min_{S in span} ||H - S||.
    """
    H = check_hermitian(H, name="H")
    d = H.shape[0]
    basis = herm_basis(d)
    nb = len(basis)
    m = 2 * nb + 1

    zero_d = np.zeros((d, d), dtype=complex)
    zero_1 = np.zeros((1, 1), dtype=complex)
    F0 = [zero_d.copy(), zero_d.copy(), zero_1.copy()]
    F = []
    for a in range(nb):
        F.append([basis[a], None, None])
    for a in range(nb):
        F.append([None, basis[a], None])
    F.append([None, None, np.ones((1, 1), dtype=complex)])

    hc = herm_coords(H, basis)
    c = np.concatenate([-hc, hc, [0.0]])

    rows = []
    rhs = []
    tr_coords = np.array([float(np.real(np.trace(B))) for B in basis])
    rows.append(np.concatenate([tr_coords, tr_coords, [1.0]]))
    rhs.append(2.0)
    for S in span_basis:
        sc = np.array([float(np.real(np.trace(B @ S))) for B in basis])
        rows.append(np.concatenate([sc, -sc, [0.0]]))
        rhs.append(0.0)
    A = np.vstack(rows)
    bvec = np.array(rhs)

    half = herm_coords((0.5 / d) * np.eye(d), basis)
    interior = np.concatenate([half, half, [1.0]])

    def ctilde_from_y(y):
        P = herm_from_coords(y[:nb], d, basis)
        M = herm_from_coords(y[nb:2 * nb], d, basis)
        return P - M

    return SdpProblem(c, F0, F, A, bvec,
                      meta={"interior": interior, "ctilde_from_y": ctilde_from_y,
                            "kind": "max_trace_constrained"})
