"""Shared fixtures: seeded random channels, states and Hermitian matrices.

Random trace-preserving channels are drawn as sliced Haar isometries;
their derivatives start from arbitrary complex matrices and are
projected so that d/domega sum K^dag K = 0 holds exactly, which keeps
param_channel validation happy without biasing the gauge.
"""

import numpy as np
import pytest

from channel_qfi.channel import param_channel


def random_complex(rng, shape):
    return rng.normal(size=shape) + 1j * rng.normal(size=shape)


def random_herm(rng, d):
    A = random_complex(rng, (d, d))
    return 0.5 * (A + A.conj().T)


def random_state(rng, d, rank=None):
    """Random density matrix (full rank unless a smaller rank is given)."""
    rank = d if rank is None else rank
    G = random_complex(rng, (d, rank))
    rho = G @ G.conj().T
    return rho / np.trace(rho).real


def random_pure(rng, d):
    v = random_complex(rng, (d,))
    return v / np.linalg.norm(v)


def random_tp_channel(rng, d=2, r=2, label="random"):
    """Random channel with a consistent Kraus derivative.

    The isometry column of a Haar-random unitary gives the Kraus family;
    raw derivative candidates A_i are corrected by
    dK_i = A_i - (1/2) K_i sum_j (K_j^dag A_j + A_j^dag K_j)
    so the derivative of trace preservation vanishes identically.
    """
    G = random_complex(rng, (r * d, r * d))
    Q, _ = np.linalg.qr(G)
    V = Q[:, :d]
    ks = [V[i * d:(i + 1) * d, :] for i in range(r)]
    raw = [random_complex(rng, (d, d)) for _ in range(r)]
    S = sum(k.conj().T @ a + a.conj().T @ k for k, a in zip(ks, raw))
    dks = [a - 0.5 * k @ S for k, a in zip(ks, raw)]
    return param_channel(ks, dks, label=label)


@pytest.fixture
def rng():
    return np.random.default_rng(1234)
