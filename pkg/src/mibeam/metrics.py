"""Link metrics on a realized channel.

Per-user SINR, network sum rate, transmit power, and a sampled worst-case
SINR search over the Frobenius-ball channel-error set.  Beamformers are
passed as an (N, K) complex array, one row per user; channel rows likewise.
"""

from __future__ import annotations

import numpy as np


def sinr(vectors: np.ndarray, h_rows: np.ndarray, noise_power: float) -> np.ndarray:
    """Per-user SINR: |h_n v_n|^2 / (sum_{u != n} |h_n v_u|^2 + N0)."""
    vectors = np.atleast_2d(np.asarray(vectors))
    h_rows = np.atleast_2d(np.asarray(h_rows))
    s = h_rows @ vectors.T  # s[n, u] = h_n . v_u
    p = np.abs(s) ** 2
    signal = np.diag(p).copy()
    interference = p.sum(axis=1) - signal
    return signal / (interference + noise_power)


def sum_rate(sinrs: np.ndarray, bandwidth: float) -> float:
    """Network sum rate sum_n B log2(1 + gamma_n) [bit/s]."""
    return float(bandwidth * np.sum(np.log2(1.0 + np.asarray(sinrs, dtype=float))))


def transmit_power(vectors: np.ndarray, q: np.ndarray, bandwidth: float) -> float:
    """Transmit power (B/2) sum_n v_n^H (Q + Q^H) v_n [W]."""
    vectors = np.atleast_2d(np.asarray(vectors))
    acc = 0.0
    for v in vectors:
        acc += float(np.real(v.conj() @ (q + q.conj().T) @ v))
    return 0.5 * bandwidth * acc


def hermitian_part(q: np.ndarray) -> np.ndarray:
    """(Q + Q^H) / 2; the only part of Q that consumes power."""
    return (q + q.conj().T) / 2.0


def worst_case_sinr(
    vectors: np.ndarray,
    h_bar: np.ndarray,
    user: int,
    xi: float,
    noise_power: float,
    rng: np.random.Generator | None = None,
    restarts: int = 200,
    iterations: int = 500,
    step: float = 1e-2,
) -> tuple[float, np.ndarray]:
    """Minimize user ``user``'s SINR over channel errors with ||dH||_F <= xi.

    Multi-start projected gradient descent on the error row, run as one batch.
    Besides random starts (interior and boundary of the ball) the batch seeds
    deterministic starts that kill the signal term and inflate each
    interference term, which are the generic worst-case mechanisms.  Returns
    the smallest SINR found and the achieving error row.
    """
    vectors = np.atleast_2d(np.asarray(vectors, dtype=complex))
    h_bar = np.asarray(h_bar, dtype=complex).reshape(-1)
    n, k = vectors.shape
    if xi == 0.0:
        gamma = sinr(vectors, np.tile(h_bar, (n, 1)), noise_power)[user]
        return float(gamma), np.zeros(k, dtype=complex)

    rng = rng or np.random.default_rng(0)
    v_cols = vectors.T  # (K, N)
    s0 = h_bar @ v_cols  # (N,)

    def seeded_starts() -> list[np.ndarray]:
        starts = [np.zeros(k, dtype=complex)]
        vn = vectors[user]
        nrm = float(np.linalg.norm(vn))
        if nrm > 0:
            d = -s0[user] * vn.conj() / nrm**2  # cancels the signal term
            dn = float(np.linalg.norm(d))
            starts.append(d if dn <= xi else d * (xi / dn))
            starts.append(-xi * vn.conj() * (np.sign(s0[user]) or 1.0) / nrm)
        for u in range(n):
            if u == user:
                continue
            vu = vectors[u]
            nrm = float(np.linalg.norm(vu))
            if nrm == 0:
                continue
            phase = s0[u] / abs(s0[u]) if abs(s0[u]) > 0 else 1.0
            starts.append(xi * vu.conj() * phase / nrm)  # inflates interference u
        return starts

    seeds = seeded_starts()
    n_rand = max(restarts - len(seeds), 0)
    rand = (rng.normal(size=(n_rand, k)) + 1j * rng.normal(size=(n_rand, k))) / np.sqrt(2.0)
    norms = np.linalg.norm(rand, axis=1, keepdims=True)
    norms[norms == 0] = 1.0
    rand /= norms
    radius = xi * rng.uniform(size=(n_rand, 1)) ** (1.0 / (2 * k))
    radius[: n_rand // 2] = xi  # half the random starts sit on the boundary
    delta = np.vstack([np.array(seeds), rand * radius]) if n_rand else np.array(seeds)

    mask = np.ones(n, dtype=bool)
    mask[user] = False

    def objective(d: np.ndarray) -> np.ndarray:
        s = s0[None, :] + d @ v_cols
        p = np.abs(s) ** 2
        return p[:, user] / (p[:, mask].sum(axis=1) + noise_power)

    eta = np.full(delta.shape[0], step * xi)
    f = objective(delta)
    for _ in range(iterations):
        s = s0[None, :] + delta @ v_cols
        p = np.abs(s) ** 2
        num = p[:, user]
        den = p[:, mask].sum(axis=1) + noise_power
        g_num = s[:, user, None] * v_cols[:, user].conj()[None, :]
        s_masked = s.copy()
        s_masked[:, user] = 0.0
        g_den = s_masked @ v_cols.conj().T
        grad = (den[:, None] * g_num - num[:, None] * g_den) / (den**2)[:, None]

        cand = delta - eta[:, None] * grad
        cn = np.linalg.norm(cand, axis=1)
        over = cn > xi
        if np.any(over):
            cand[over] *= (xi / cn[over])[:, None]
        f_cand = objective(cand)
        better = f_cand < f
        delta[better] = cand[better]
        f[better] = f_cand[better]
        eta = np.where(better, eta * 1.2, eta * 0.5)
        eta = np.maximum(eta, 1e-12 * xi)

    i = int(np.argmin(f))
    return float(f[i]), delta[i].copy()
