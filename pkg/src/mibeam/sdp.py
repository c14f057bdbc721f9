"""Small-scale semidefinite programming over real symmetric blocks.

Standard primal form handled here:

    minimize    sum_b tr(C_b X_b)
    subject to  sum_b tr(A_ib X_b) = b_i,   i = 1..m
                X_b >= 0 (positive semidefinite), per block b

solved by an infeasible-start primal-dual path-following method with
Nesterov-Todd scaling.  A feasibility phase (auxiliary slack variable driven
to zero) precedes the main solve and doubles as the infeasibility detector.
Blocks of equal dimension are batched so the per-iteration work runs in a
handful of vectorized linear-algebra calls.

A complex-Hermitian problem is handled by realification: ``embed_hermitian``
maps H = A + jB to [[A, -B], [B, A]], doubling each eigenvalue's multiplicity
and satisfying tr(embed(A) embed(B)) = 2 Re tr(A B).  Callers compensate the
factor two when assembling objectives and constraints.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from threadpoolctl import threadpool_limits

_SYM_TOL = 1e-12


@dataclass(frozen=True)
class SdpProblem:
    """Block-diagonal SDP in primal standard form.

    ``blocks`` lists the block dimensions.  ``objective`` holds one symmetric
    matrix per block.  Each equality is a mapping from block index to the
    symmetric coefficient matrix for that block (blocks not present enter with
    zero coefficient) together with the scalar right-hand side.
    ``free_scalars`` records how many trailing 1x1 blocks model auxiliary
    nonnegative scalars; it is bookkeeping only.
    """

    blocks: tuple[int, ...]
    objective: tuple[np.ndarray, ...]
    equalities: tuple[tuple[dict[int, np.ndarray], float], ...]
    free_scalars: int = 0

    def __post_init__(self) -> None:
        object.__setattr__(self, "blocks", tuple(int(d) for d in self.blocks))
        object.__setattr__(self, "objective", tuple(np.asarray(c, dtype=float) for c in self.objective))
        object.__setattr__(
            self,
            "equalities",
            tuple(
                ({int(k): np.asarray(v, dtype=float) for k, v in coeffs.items()}, float(rhs))
                for coeffs, rhs in self.equalities
            ),
        )
        if len(self.objective) != len(self.blocks):
            raise ValueError("need one objective matrix per block")
        for b, (d, c) in enumerate(zip(self.blocks, self.objective)):
            _check_symmetric(c, d, f"objective[{b}]")
        for i, (coeffs, _) in enumerate(self.equalities):
            for b, a in coeffs.items():
                if not 0 <= b < len(self.blocks):
                    raise ValueError(f"equalities[{i}] references unknown block {b}")
                _check_symmetric(a, self.blocks[b], f"equalities[{i}] block {b}")
        if not 0 <= self.free_scalars <= len(self.blocks):
            raise ValueError("free_scalars out of range")

    @property
    def total_dim(self) -> int:
        return sum(self.blocks)


@dataclass
class SdpSolution:
    """Result of ``solve``: status, per-block primal matrices, and certificates."""

    status: str  # "optimal" | "infeasible" | "numerical-failure"
    x: list[np.ndarray] | None
    objective_value: float
    duality_gap: float
    iterations: int
    residual_primal: float = 0.0
    residual_dual: float = 0.0
    message: str = ""
    y: np.ndarray | None = None  # equality multipliers (dual solution)


def _check_symmetric(a: np.ndarray, dim: int, label: str) -> None:
    a = np.asarray(a)
    if a.shape != (dim, dim):
        raise ValueError(f"{label}: expected shape ({dim}, {dim}), got {a.shape}")
    scale = max(1.0, float(np.abs(a).max()) if a.size else 1.0)
    if float(np.abs(a - a.T).max() if a.size else 0.0) > _SYM_TOL * scale:
        raise ValueError(f"{label}: matrix is not symmetric within {_SYM_TOL}")


def embed_hermitian(h: np.ndarray) -> np.ndarray:
    """Realify a Hermitian matrix H = A + jB as [[A, -B], [B, A]].

    The embedding is linear, doubles each eigenvalue's multiplicity, and obeys
    tr(embed(A) embed(B)) = 2 Re tr(A B).
    """
    h = np.asarray(h, dtype=complex)
    if h.ndim != 2 or h.shape[0] != h.shape[1]:
        raise ValueError("embed_hermitian expects a square matrix")
    scale = max(1.0, float(np.abs(h).max()) if h.size else 1.0)
    if float(np.abs(h - h.conj().T).max() if h.size else 0.0) > _SYM_TOL * scale:
        raise ValueError("embed_hermitian expects a Hermitian matrix (within 1e-12)")
    a, b = h.real, h.imag
    return np.block([[a, -b], [b, a]])


def unembed_hermitian(y: np.ndarray) -> np.ndarray:
    """Inverse of ``embed_hermitian`` with averaging over the complex structure.

    For a general symmetric ``y`` this returns the Hermitian matrix of the
    nearest structured embedding; exact inverse on structured inputs.
    """
    y = np.asarray(y, dtype=float)
    n2 = y.shape[0]
    if n2 % 2:
        raise ValueError("unembed_hermitian expects even dimension")
    n = n2 // 2
    tl, tr = y[:n, :n], y[:n, n:]
    bl, br = y[n:, :n], y[n:, n:]
    a = (tl + br) / 2.0
    b = (bl - tr) / 2.0
    a = (a + a.T) / 2.0
    b = (b - b.T) / 2.0
    return a + 1j * b


def min_eig_feasibility(
    fixed_lmi,
    a_range: tuple[float, float],
    grid_points: int = 33,
    tol: float = 1e-9,
) -> float | None:
    """Search the interval for a scalar making an affine LMI positive semidefinite.

    ``fixed_lmi(a)`` must return a Hermitian (or real symmetric) matrix affine
    in ``a``.  The minimum eigenvalue of an affine matrix family is concave in
    ``a``, so a grid scan plus bisection on the left feasibility edge finds the
    smallest feasible value; a golden-section ascent covers maxima the grid
    missed.  Returns None when no feasible value exists in the range.
    """
    lo, hi = float(a_range[0]), float(a_range[1])
    if hi < lo:
        raise ValueError("a_range must satisfy hi >= lo")

    def min_eig(a: float) -> float:
        mat = np.asarray(fixed_lmi(a))
        return float(np.linalg.eigvalsh((mat + mat.conj().T) / 2.0)[0])

    if hi == lo:
        return lo if min_eig(lo) >= 0.0 else None

    grid = np.linspace(lo, hi, max(2, grid_points))
    vals = np.array([min_eig(a) for a in grid])
    feasible = np.flatnonzero(vals >= 0.0)
    if feasible.size:
        i = int(feasible[0])
        if i == 0:
            return float(grid[0])
        # bisect the left crossing; keep the feasible endpoint
        a_bad, a_good = float(grid[i - 1]), float(grid[i])
        while a_good - a_bad > tol * max(1.0, abs(a_good)):
            mid = 0.5 * (a_bad + a_good)
            if min_eig(mid) >= 0.0:
                a_good = mid
            else:
                a_bad = mid
        return a_good

    # Grid saw no feasible point: golden-section ascent on the concave min-eig.
    invphi = (np.sqrt(5.0) - 1.0) / 2.0
    a, b = lo, hi
    c = b - invphi * (b - a)
    d = a + invphi * (b - a)
    fc, fd = min_eig(c), min_eig(d)
    for _ in range(80):
        if fc >= fd:
            b, d, fd = d, c, fc
            c = b - invphi * (b - a)
            fc = min_eig(c)
        else:
            a, c, fc = c, d, fd
            d = a + invphi * (b - a)
            fd = min_eig(d)
        if max(fc, fd) >= 0.0:
            break
    best_a, best_f = (c, fc) if fc >= fd else (d, fd)
    if best_f >= 0.0:
        return float(best_a)
    return None


# ---------------------------------------------------------------------------
# interior-point core
# ---------------------------------------------------------------------------

_STEP_FRACTION = 0.98
_SIGMA_FALLBACK = 0.3
_MAX_ITER_DEFAULT = 200


class _Grouped:
    """Problem data with equal-dimension blocks batched into 3-d arrays."""

    def __init__(self, dims: list[int], a_groups: list[np.ndarray], b: np.ndarray, c_groups: list[np.ndarray]):
        # a_groups[g]: (m, k_g, d_g, d_g); c_groups[g]: (k_g, d_g, d_g)
        self.b = b
        self.m = len(b)
        self.a4 = a_groups
        self.a_flat = [a.reshape(self.m, -1) for a in a_groups]
        self.c = c_groups
        self.group_dims = [c.shape[-1] for c in c_groups]
        self.group_counts = [c.shape[0] for c in c_groups]
        self.n_total = sum(k * d for k, d in zip(self.group_counts, self.group_dims))
        self.dims = dims

    def op_a(self, x: list[np.ndarray]) -> np.ndarray:
        out = np.zeros(self.m)
        for af, xg in zip(self.a_flat, x):
            out += af @ xg.ravel()
        return out

    def op_at(self, y: np.ndarray) -> list[np.ndarray]:
        return [
            (y @ af).reshape(k, d, d)
            for af, k, d in zip(self.a_flat, self.group_counts, self.group_dims)
        ]


def _group_layout(dims: list[int]) -> tuple[list[int], list[tuple[int, int]]]:
    """Stable grouping of block dims; returns unique dims and (group, slot) per block."""
    uniq: list[int] = []
    for d in dims:
        if d not in uniq:
            uniq.append(d)
    counters = {d: 0 for d in uniq}
    layout = []
    for d in dims:
        layout.append((uniq.index(d), counters[d]))
        counters[d] += 1
    return uniq, layout


def _pack(
    problem_blocks, objective, equalities
) -> tuple[_Grouped, list[tuple[int, int]], list[np.ndarray], float, bool]:
    """Batch the data by block dimension and equilibrate it.

    Ruiz-style scaling balances the (equality x block) coefficient norms:
    rows are divided by r_i and each variable block substituted X_b -> X_b/c_b,
    which evens out order-of-magnitude spreads (near/far users) that otherwise
    stall the interior-point iteration.  Returns per-block column scales so the
    caller can undo the substitution.
    """
    dims = list(problem_blocks)
    n_blocks = len(dims)
    uniq, layout = _group_layout(dims)
    counts = [sum(1 for d in dims if d == u) for u in uniq]
    m = len(equalities)

    a_groups = [np.zeros((m, k, d, d)) for k, d in zip(counts, uniq)]
    b = np.zeros(m)
    for i, (coeffs, rhs) in enumerate(equalities):
        b[i] = rhs
        for blk, mat in coeffs.items():
            g, slot = layout[blk]
            a_groups[g][i, slot] = (mat + mat.T) / 2.0

    # per-(equality, block) Frobenius norms
    norms = np.zeros((m, n_blocks))
    for blk in range(n_blocks):
        g, slot = layout[blk]
        norms[:, blk] = np.sqrt(np.einsum("nij,nij->n", a_groups[g][:, slot], a_groups[g][:, slot]))

    zero_row_infeasible = False
    row_scale = np.ones(m)
    col_scale = np.ones(n_blocks)
    work = norms.copy()
    for i in range(m):
        if work[i].max() < 1e-14:
            if abs(b[i]) > 1e-12:
                zero_row_infeasible = True
            work[i, :] = 0.0  # vacuous row; keep untouched
    for _ in range(10):
        r = np.sqrt(np.where(work.max(axis=1) > 0, work.max(axis=1), 1.0))
        work /= r[:, None]
        row_scale *= r
        cmax = work.max(axis=0)
        c = np.sqrt(np.where(cmax > 0, cmax, 1.0))
        work /= c[None, :]
        col_scale *= c
        if np.all(np.abs(r - 1.0) < 1e-3) and np.all(np.abs(c - 1.0) < 1e-3):
            break

    for blk in range(n_blocks):
        g, slot = layout[blk]
        a_groups[g][:, slot] /= col_scale[blk]
    for g in range(len(uniq)):
        a_groups[g] /= row_scale[:, None, None, None]
    b = b / row_scale

    c_groups = [np.zeros((k, d, d)) for k, d in zip(counts, uniq)]
    for blk, cb in enumerate(objective):
        g, slot = layout[blk]
        c_groups[g][slot] = np.asarray(cb, dtype=float) / col_scale[blk]
    obj_scale = float(np.sqrt(sum(float(np.sum(c * c)) for c in c_groups)))
    if obj_scale < 1e-12:
        obj_scale = 1.0
    c_groups = [c / obj_scale for c in c_groups]

    # per-block multipliers that undo the substitution on the solution
    x_unscale = [1.0 / col_scale[blk] for blk in range(n_blocks)]
    grouped = _Grouped(dims, a_groups, b, c_groups)
    return grouped, layout, x_unscale, row_scale, obj_scale, zero_row_infeasible


def _bchol(x: np.ndarray) -> np.ndarray:
    try:
        return np.linalg.cholesky(x)
    except np.linalg.LinAlgError:
        d = x.shape[-1]
        tr = np.trace(x, axis1=-2, axis2=-1)
        jitter = 1e-14 * np.maximum(1.0, tr / max(d, 1))[:, None, None] * np.eye(d)
        for _ in range(8):
            try:
                return np.linalg.cholesky(x + jitter)
            except np.linalg.LinAlgError:
                jitter *= 100.0
        raise


def _bnt_scaling(lx: np.ndarray, ls: np.ndarray) -> np.ndarray:
    """Batched Nesterov-Todd scaling point W (W S W = X) from Cholesky factors."""
    _, dvals, vt = np.linalg.svd(np.matmul(ls.transpose(0, 2, 1), lx))
    g = np.matmul(lx, vt.transpose(0, 2, 1)) / np.sqrt(np.maximum(dvals, 1e-300))[:, None, :]
    return np.matmul(g, g.transpose(0, 2, 1))


def _binv_from_chol(ls: np.ndarray) -> np.ndarray:
    k, d, _ = ls.shape
    eye = np.broadcast_to(np.eye(d), (k, d, d))
    inv_l = np.linalg.solve(ls, eye)
    return np.matmul(inv_l.transpose(0, 2, 1), inv_l)


def _bmax_step_pre(l: np.ndarray, dx: np.ndarray) -> float:
    """Largest alpha keeping every L L^T + alpha dx PSD, from the factor L."""
    t = np.linalg.solve(l, dx)
    t = np.linalg.solve(l, t.transpose(0, 2, 1)).transpose(0, 2, 1)
    t = (t + t.transpose(0, 2, 1)) / 2.0
    lam_min = float(np.linalg.eigvalsh(t)[:, 0].min())
    if lam_min >= -1e-300:
        return np.inf
    return 1.0 / -lam_min


def _factor_schur(m_mat: np.ndarray) -> tuple[str, np.ndarray]:
    scale = max(float(np.trace(m_mat)) / max(m_mat.shape[0], 1), 1e-300)
    for jitter in (0.0, 1e-14, 1e-11, 1e-8):
        try:
            l = np.linalg.cholesky(m_mat + jitter * scale * np.eye(m_mat.shape[0]))
            return "chol", l
        except np.linalg.LinAlgError:
            continue
    return "lstsq", m_mat


def _apply_schur(
    factor: tuple[str, np.ndarray], rhs: np.ndarray, m_mat: np.ndarray | None = None
) -> np.ndarray:
    kind, mat = factor
    if kind != "chol":
        return np.linalg.lstsq(mat, rhs, rcond=None)[0]
    z = np.linalg.solve(mat, rhs)
    dy = np.linalg.solve(mat.T, z)
    if m_mat is not None:  # one step of iterative refinement
        resid = rhs - m_mat @ dy
        z = np.linalg.solve(mat, resid)
        dy = dy + np.linalg.solve(mat.T, z)
    return dy


@dataclass
class _IpmState:
    x: list[np.ndarray]  # per group: (k, d, d)
    s: list[np.ndarray]
    y: np.ndarray
    iterations: int = 0
    status: str = "running"
    pobj: float = 0.0
    dobj: float = 0.0
    rp_rel: float = 0.0
    rd_rel: float = 0.0
    gap_rel: float = 0.0


def _ipm(g: _Grouped, tol: float, max_iterations: int, early_exit=None) -> _IpmState:
    state = _IpmState(
        x=[np.broadcast_to(np.eye(d), (k, d, d)).copy() for k, d in zip(g.group_counts, g.group_dims)],
        s=[np.broadcast_to(np.eye(d), (k, d, d)).copy() for k, d in zip(g.group_counts, g.group_dims)],
        y=np.zeros(g.m),
    )
    b_norm = 1.0 + float(np.linalg.norm(g.b))
    c_norm = 1.0 + float(np.sqrt(sum(float(np.sum(c * c)) for c in g.c)))

    for it in range(max_iterations):
        state.iterations = it
        x, s, y = state.x, state.s, state.y

        mu = sum(float(np.sum(xg * sg)) for xg, sg in zip(x, s)) / g.n_total
        r_p = g.b - g.op_a(x)
        aty = g.op_at(y)
        r_d = [cg - sg - ag for cg, sg, ag in zip(g.c, s, aty)]

        state.pobj = sum(float(np.sum(cg * xg)) for cg, xg in zip(g.c, x))
        state.dobj = float(g.b @ y)
        state.rp_rel = float(np.linalg.norm(r_p)) / b_norm
        state.rd_rel = float(np.sqrt(sum(float(np.sum(r * r)) for r in r_d))) / c_norm
        comp = mu * g.n_total
        state.gap_rel = max(abs(state.pobj - state.dobj), comp) / (
            1.0 + abs(state.pobj) + abs(state.dobj)
        )

        if state.rp_rel <= tol and state.rd_rel <= tol and state.gap_rel <= tol:
            state.status = "optimal"
            return state
        if early_exit is not None:
            verdict = early_exit(state)
            if verdict is not None:
                state.status = verdict
                return state
        # divergence guard: unbounded dual with small residuals means the primal
        # has no feasible point (phase-two backstop)
        if state.dobj > 1e10 * c_norm and state.rd_rel <= 1e-6 and state.rp_rel <= 1e-6:
            state.status = "infeasible"
            return state
        if not np.isfinite(mu) or not np.isfinite(state.pobj) or not np.isfinite(state.dobj):
            state.status = "numerical-failure"
            return state

        try:
            lx = [_bchol(xg) for xg in x]
            ls = [_bchol(sg) for sg in s]
            w = [_bnt_scaling(lg, lg2) for lg, lg2 in zip(lx, ls)]
            s_inv = [_binv_from_chol(lg) for lg in ls]
        except np.linalg.LinAlgError:
            state.status = "numerical-failure"
            return state

        m_mat = np.zeros((g.m, g.m))
        for a4, af, wg in zip(g.a4, g.a_flat, w):
            waw = np.matmul(np.matmul(wg[None], a4), wg[None])
            m_mat += af @ waw.reshape(g.m, -1).T
        m_mat = (m_mat + m_mat.T) / 2.0
        schur = _factor_schur(m_mat)

        # stacked (x, s) Cholesky factors so one call bounds both step lengths
        l_pair = [np.concatenate([lg, lg2], axis=0) for lg, lg2 in zip(lx, ls)]

        def direction(sigma_mu: float):
            # dx + W ds W = sigma_mu S^{-1} - x ; ds = r_d - A^T(dy)
            base = [sigma_mu * sig - xg for sig, xg in zip(s_inv, x)]
            wrw = [np.matmul(np.matmul(wg, rg), wg) for wg, rg in zip(w, r_d)]
            rhs = r_p - g.op_a([bg - wg for bg, wg in zip(base, wrw)])
            dy = _apply_schur(schur, rhs, m_mat)
            ds = [rg - ag for rg, ag in zip(r_d, g.op_at(dy))]
            dx = [
                bg - np.matmul(np.matmul(wg, dsg), wg)
                for bg, wg, dsg in zip(base, w, ds)
            ]
            dx = [(v + v.transpose(0, 2, 1)) / 2.0 for v in dx]
            ds = [(v + v.transpose(0, 2, 1)) / 2.0 for v in ds]
            return dx, dy, ds

        def step_pair(dx, ds):
            # returns (alpha to keep all X psd, alpha to keep all S psd)
            ap, ad = np.inf, np.inf
            for lg, dxg, dsg, k in zip(l_pair, dx, ds, g.group_counts):
                t = np.linalg.solve(lg, np.concatenate([dxg, dsg], axis=0))
                t = np.linalg.solve(lg, t.transpose(0, 2, 1)).transpose(0, 2, 1)
                t = (t + t.transpose(0, 2, 1)) / 2.0
                lam = np.linalg.eigvalsh(t)[:, 0]
                lam_x = float(lam[:k].min())
                lam_s = float(lam[k:].min())
                if lam_x < -1e-300:
                    ap = min(ap, 1.0 / -lam_x)
                if lam_s < -1e-300:
                    ad = min(ad, 1.0 / -lam_s)
            return ap, ad

        try:
            dx_aff, dy_aff, ds_aff = direction(0.0)
            ap_max, ad_max = step_pair(dx_aff, ds_aff)
            alpha_p = min(1.0, ap_max)
            alpha_d = min(1.0, ad_max)
            mu_aff = sum(
                float(np.sum((xg + alpha_p * dxg) * (sg + alpha_d * dsg)))
                for xg, dxg, sg, dsg in zip(x, dx_aff, s, ds_aff)
            ) / g.n_total
            sigma = (max(mu_aff, 0.0) / mu) ** 3 if mu > 0 else _SIGMA_FALLBACK
            if not np.isfinite(sigma):
                sigma = _SIGMA_FALLBACK
            sigma = min(max(sigma, 1e-4), 0.99)

            dx, dy, ds = direction(sigma * mu)
            ap_max, ad_max = step_pair(dx, ds)
            alpha_p = min(1.0, _STEP_FRACTION * ap_max)
            alpha_d = min(1.0, _STEP_FRACTION * ad_max)
        except np.linalg.LinAlgError:
            state.status = "numerical-failure"
            return state

        if alpha_p < 1e-10 and alpha_d < 1e-10:
            state.status = "numerical-failure"
            return state

        state.x = [xg + alpha_p * dxg for xg, dxg in zip(x, dx)]
        state.s = [sg + alpha_d * dsg for sg, dsg in zip(s, ds)]
        state.y = y + alpha_d * dy

    state.status = "numerical-failure"
    return state


def _phase1(g: _Grouped, tol: float, max_iterations: int) -> tuple[bool, float, int]:
    """Feasibility phase: min t s.t. A(X) + t (b - A(I)) = b, X >= 0, t >= 0.

    Starts primal-feasible at (X, t) = (I, 1).  Feasibility of the original
    problem is decided by how far t can be driven toward zero; a positive dual
    objective bounds min t away from zero and certifies infeasibility.
    """
    eyes = [
        np.broadcast_to(np.eye(d), (k, d, d)).copy()
        for k, d in zip(g.group_counts, g.group_dims)
    ]
    residual = g.b - g.op_a(eyes)
    dims = g.dims + [1]
    a_groups = [a.copy() for a in g.a4]
    c_groups = [np.zeros_like(c) for c in g.c]
    if 1 in g.group_dims:
        gi = g.group_dims.index(1)
        a_groups[gi] = np.concatenate([a_groups[gi], residual.reshape(g.m, 1, 1, 1)], axis=1)
        c_groups[gi] = np.concatenate([c_groups[gi], np.ones((1, 1, 1))], axis=0)
    else:
        a_groups.append(residual.reshape(g.m, 1, 1, 1))
        c_groups.append(np.ones((1, 1, 1)))
    aux = _Grouped(dims, a_groups, g.b.copy(), c_groups)
    t_group = len(aux.group_dims) - 1 if 1 not in g.group_dims else g.group_dims.index(1)
    t_slot = aux.group_counts[t_group] - 1

    feas_cut = max(tol, 1e-9)

    def early(st: _IpmState):
        t_val = float(st.x[t_group][t_slot, 0, 0])
        if t_val <= feas_cut and st.rp_rel <= 10.0 * tol:
            return "optimal"
        if st.dobj >= 1e-5 and st.rd_rel <= 1e-7:
            return "infeasible"
        return None

    st = _ipm(aux, tol, max_iterations, early_exit=early)
    t_val = float(st.x[t_group][t_slot, 0, 0])
    if st.status == "infeasible":
        return False, t_val, st.iterations
    if st.status == "optimal" and t_val <= 1e-6:
        return True, t_val, st.iterations
    if st.status == "optimal":
        return False, t_val, st.iterations
    # Undecided (numerical failure in the aux problem): optimistically proceed;
    # phase two has its own divergence guard.
    return True, t_val, st.iterations


def solve(problem: SdpProblem, tol: float = 1e-7, max_iterations: int = _MAX_ITER_DEFAULT) -> SdpSolution:
    """Solve the block SDP to the requested duality-gap and residual tolerance.

    Returns a certificate-bearing solution: status "optimal" with per-block
    PSD matrices, "infeasible" when the feasibility phase bounds the equality
    system away from the cone, or "numerical-failure" with diagnostics.
    """
    # single-threaded BLAS: at desk scale, thread handoff costs more than it buys
    with threadpool_limits(limits=1):
        return _solve_inner(problem, tol, max_iterations)


def _solve_inner(problem: SdpProblem, tol: float, max_iterations: int) -> SdpSolution:
    grouped, layout, x_unscale, row_scale, obj_scale, zero_row_bad = _pack(
        problem.blocks, problem.objective, problem.equalities
    )
    if zero_row_bad:
        return SdpSolution(
            status="infeasible",
            x=None,
            objective_value=np.nan,
            duality_gap=np.nan,
            iterations=0,
            message="equality with zero coefficients and nonzero right-hand side",
        )

    feasible, t_val, it1 = _phase1(grouped, tol, max_iterations)
    if not feasible:
        return SdpSolution(
            status="infeasible",
            x=None,
            objective_value=np.nan,
            duality_gap=np.nan,
            iterations=it1,
            message=f"phase one slack {t_val:.3e} bounded away from zero",
        )

    st = _ipm(grouped, tol, max_iterations)
    if st.status != "optimal":
        return SdpSolution(
            status=st.status if st.status == "infeasible" else "numerical-failure",
            x=None,
            objective_value=np.nan,
            duality_gap=np.nan,
            iterations=st.iterations,
            message=(
                f"stopped after {st.iterations} iterations: rp={st.rp_rel:.2e} "
                f"rd={st.rd_rel:.2e} gap={st.gap_rel:.2e}"
            ),
        )

    x_out = [
        x_unscale[blk] * st.x[grp][slot] for blk, (grp, slot) in enumerate(layout)
    ]
    y_out = st.y * obj_scale / row_scale
    return SdpSolution(
        status="optimal",
        x=x_out,
        objective_value=st.pobj * obj_scale,
        duality_gap=(st.pobj - st.dobj) * obj_scale,
        iterations=st.iterations,
        residual_primal=st.rp_rel,
        residual_dual=st.rd_rel,
        y=y_out,
    )
