"""Non-robust comparison schemes.

Both assume the estimated channel is exact: SDR beamforming with zero error
radii, and fixed MMSE directions with a power-allocation linear program.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import sdp
from .channel import ChannelMatrices
from .exceptions import SolverFailureError, ThresholdsUnattainableError
from .metrics import hermitian_part
from .robust import BeamformerSet, RobustProblem, extract_rank1, kappa, solve_sdr


@dataclass
class MmseDirections:
    """Unnormalized MMSE receive-inspired directions and power coefficients."""

    w: np.ndarray  # (N, K) complex directions
    alphas: np.ndarray  # (N,) nonnegative amplitudes


def nonrobust_beamform(
    channel: ChannelMatrices,
    gamma_th: np.ndarray,
    c_th: float,
    bandwidth: float,
    n0: float,
    n_candidates: int = 1000,
    rng: np.random.Generator | None = None,
) -> BeamformerSet:
    """Perfect-CSI SDR beamforming: the robust path with zero error radii."""
    prob = RobustProblem(
        channel=channel,
        xi_h=np.zeros(channel.n_users),
        xi_q=0.0,
        gamma_th=np.asarray(gamma_th, dtype=float),
        c_th=c_th,
        bandwidth=bandwidth,
        noise_power=n0,
    )
    x_stars, _, _ = solve_sdr(prob)
    return extract_rank1(x_stars, prob, n_candidates=n_candidates, rng=rng)


def mmse_directions(channel: ChannelMatrices, n0: float) -> np.ndarray:
    """Directions W_n = H^H (H H^H + N0 I)^{-1} e_n, normalized to unit norm.

    The power allocation is invariant to positive rescaling of each
    direction, so unit normalization only conditions the arithmetic.
    """
    h = channel.h
    n = h.shape[0]
    gram = h @ h.conj().T + n0 * np.eye(n)
    w = h.conj().T @ np.linalg.inv(gram)  # (K, N)
    w = w.T  # row per user
    norms = np.linalg.norm(w, axis=1, keepdims=True)
    norms[norms == 0] = 1.0
    return w / norms


def mmse_beamform(
    channel: ChannelMatrices,
    gamma_th: np.ndarray,
    c_th: float,
    bandwidth: float,
    n0: float,
) -> BeamformerSet:
    """MMSE-direction power allocation meeting the same per-user SINR floors.

    With directions fixed, each SINR constraint is linear in the per-user
    powers p_n = alpha_n^2; the allocation is the diagonal-SDP (linear
    program) minimizing the nominal transmit power.
    """
    gamma_th = np.asarray(gamma_th, dtype=float).reshape(-1)
    n = channel.n_users
    if gamma_th.size == 1:
        gamma_th = np.full(n, float(gamma_th[0]))
    kappas = np.array([kappa(g, c_th, bandwidth, n) for g in gamma_th])

    w = mmse_directions(channel, n0)
    gains = np.abs(channel.h @ w.T) ** 2  # gains[n, u] = |H_n W_u|^2

    # nondimensionalize: p = s p', gains' = gains / h_s^2, so noise drops to 1
    h_s2 = float(np.mean(np.linalg.norm(channel.h, axis=1) ** 2))
    if h_s2 <= 0:
        raise ValueError("channel rows are all zero; cannot beamform")
    s = n0 / h_s2
    gains_sc = gains / h_s2

    q_pow = hermitian_part(channel.q)
    cost = np.array(
        [bandwidth * s * float(np.real(w[u].conj() @ q_pow @ w[u])) for u in range(n)]
    )

    # blocks: p'_0..p'_{N-1}, slack_0..slack_{N-1}; constraints
    #   gains'_nn p'_n - kappa_n sum_{u != n} gains'_nu p'_u - slack_n = kappa_n
    blocks = tuple([1] * (2 * n))
    objective = tuple(
        [np.array([[c]]) for c in cost] + [np.zeros((1, 1))] * n
    )
    equalities = []
    for i in range(n):
        coeffs = {}
        for u in range(n):
            coef = gains_sc[i, i] if u == i else -kappas[i] * gains_sc[i, u]
            coeffs[u] = np.array([[coef]])
        coeffs[n + i] = np.array([[-1.0]])
        equalities.append((coeffs, float(kappas[i])))
    problem = sdp.SdpProblem(
        blocks=blocks, objective=objective, equalities=tuple(equalities), free_scalars=2 * n
    )
    sol = sdp.solve(problem)
    if sol.status == "infeasible":
        raise ThresholdsUnattainableError(
            "thresholds unattainable for MMSE directions on this channel"
        )
    if sol.status != "optimal":
        raise SolverFailureError(f"MMSE power allocation failed: {sol.message}")

    p = np.array([s * max(float(sol.x[u][0, 0]), 0.0) for u in range(n)])
    alphas = np.sqrt(p)
    vectors = alphas[:, None] * w
    nominal = float(
        bandwidth * sum(np.real(v.conj() @ q_pow @ v) for v in vectors)
    )
    return BeamformerSet(
        vectors=vectors,
        power_upper=nominal,
        sdr_objective=nominal,
        rank1_gap=0.0,
    )
