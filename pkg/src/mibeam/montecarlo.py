"""Monte Carlo outage and effective-throughput experiments.

Each trial draws a fresh network layout, assembles the estimated channel,
designs beamformers per scheme on the estimate, perturbs the channel by a
uniform draw from the error balls, and scores SINR / rate / power on the
perturbed ("true") channel.  Trials derive their generators from
(seed, g index, trial index), so results do not depend on execution order.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace

import numpy as np

from .baselines import mmse_beamform, nonrobust_beamform
from .channel import (
    ChannelMatrices,
    CoilSpec,
    Medium,
    NetworkGeometry,
    Pose,
    assemble_channel,
    eap_ring_poses,
)
from .exceptions import (
    GeometryError,
    IllConditionedGeometryError,
    Rank1ExtractionError,
    SolverFailureError,
    ThresholdsUnattainableError,
)
from . import metrics
from .robust import BeamformerSet, RobustProblem, design_robust

SCHEMES = ("robust", "nonrobust", "mmse")

_DESIGN_ERRORS = (
    ThresholdsUnattainableError,
    SolverFailureError,
    Rank1ExtractionError,
    IllConditionedGeometryError,
)

_DEFAULT_GAMMA_TH_LINEAR = 10.0 ** 0.3  # 3 dB


@dataclass(frozen=True)
class ScenarioConfig:
    """Sweep configuration; defaults reproduce the reference simulation setup."""

    k_coils: int = 5
    n_users: int = 2
    f_c: float = 1.0e6
    bandwidth: float = 100.0
    tu_placement_radius: float = 15.0
    tu_depth_range: tuple[float, float] = (2.0, 15.0)
    error_g: tuple[float, ...] = (0.0, 0.02, 0.05, 0.10, 0.15, 0.20, 0.25)
    trials: int = 2000
    seed: int = 2024
    gamma_th: tuple[float, ...] | None = None  # per-user linear; None = 3 dB each
    c_th: float = 400.0
    noise_power: float = 4.0e-18
    eap_ring_radius: float = 2.0
    eap_coil: CoilSpec = CoilSpec(radius=0.8, turns=20, wire_radius=2e-3)
    tu_coil: CoilSpec = CoilSpec(
        radius=0.3, turns=12, wire_radius=1.5e-3, load_resistance=5.0
    )
    medium: Medium = Medium()

    def __post_init__(self) -> None:
        if self.trials < 1:
            raise ValueError("trials must be >= 1")
        if self.k_coils < self.n_users or self.n_users < 1:
            raise ValueError("need k_coils >= n_users >= 1")
        if self.tu_placement_radius <= 0:
            raise ValueError("tu_placement_radius must be > 0")
        if any(g < 0 for g in self.error_g):
            raise ValueError("error_g entries must be >= 0")
        lo, hi = self.tu_depth_range
        if not 0 < lo <= hi:
            raise ValueError("tu_depth_range must satisfy 0 < low <= high")
        if self.f_c <= 0 or self.bandwidth <= 0:
            raise ValueError("f_c and bandwidth must be > 0")
        if self.noise_power <= 0:
            raise ValueError("noise_power must be > 0")
        if self.c_th < 0:
            raise ValueError("c_th must be >= 0")
        gamma = self.gamma_th
        if gamma is None:
            gamma = (_DEFAULT_GAMMA_TH_LINEAR,) * self.n_users
        else:
            gamma = tuple(float(g) for g in np.atleast_1d(np.asarray(gamma, dtype=float)))
            if len(gamma) == 1:
                gamma = gamma * self.n_users
            if len(gamma) != self.n_users:
                raise ValueError("gamma_th needs one entry per user")
            if any(g <= 0 for g in gamma):
                raise ValueError("gamma_th entries must be > 0")
        object.__setattr__(self, "gamma_th", gamma)
        object.__setattr__(self, "error_g", tuple(float(g) for g in self.error_g))
        object.__setattr__(
            self, "tu_depth_range", (float(self.tu_depth_range[0]), float(self.tu_depth_range[1]))
        )


@dataclass(frozen=True)
class TrialRecord:
    """Per-trial outcome of one scheme on the perturbed channel."""

    scheme: str
    sinrs: tuple[float, ...]  # realized per-user SINR, linear
    user_outage: tuple[bool, ...]  # realized SINR below the user threshold
    network_outage: bool  # any user in outage
    sum_rate: float  # [bit/s]
    power: float  # transmit power on the perturbed drive-point matrix [W]


@dataclass(frozen=True)
class CellSummary:
    """Aggregate over trials for one (g, scheme) cell."""

    g: float
    scheme: str
    n_trials: int  # successful designs included in the statistics
    n_failed: int  # design failures (excluded, reported)
    net_outage: float
    user_outage: tuple[float, ...]
    ci_halfwidth: float  # 95% binomial half-width on net_outage
    effective_throughput: float  # mean sum rate over non-outage trials [bit/s]
    mean_power: float  # [W]


@dataclass
class ExperimentResult:
    config: ScenarioConfig
    cells: list[CellSummary] = field(default_factory=list)
    failures: dict[str, int] = field(default_factory=dict)

    def cell(self, g: float, scheme: str) -> CellSummary:
        for c in self.cells:
            if c.scheme == scheme and math.isclose(c.g, g, rel_tol=0, abs_tol=1e-12):
                return c
        raise KeyError(f"no cell for g={g}, scheme={scheme}")


def sample_geometry(cfg: ScenarioConfig, rng: np.random.Generator) -> NetworkGeometry:
    """Draw a network layout: fixed surface ring of transmit coils, receivers
    uniform in the cylinder (disk radius, depth range), axes uniform on the
    sphere.  Redraws on coil overlap, bounded retries."""
    eap = tuple((cfg.eap_coil, p) for p in eap_ring_poses(cfg.k_coils, cfg.eap_ring_radius))
    for _ in range(100):
        tus = []
        for _ in range(cfg.n_users):
            radius = cfg.tu_placement_radius * math.sqrt(float(rng.uniform()))
            phi = float(rng.uniform(0.0, 2.0 * math.pi))
            depth = float(rng.uniform(cfg.tu_depth_range[0], cfg.tu_depth_range[1]))
            position = np.array([radius * math.cos(phi), radius * math.sin(phi), -depth])
            axis = rng.normal(size=3)
            while np.linalg.norm(axis) < 1e-12:
                axis = rng.normal(size=3)
            axis = axis / np.linalg.norm(axis)
            tus.append((cfg.tu_coil, Pose(position=position, axis=axis)))
        try:
            return NetworkGeometry(
                eap_coils=eap,
                tu_coils=tuple(tus),
                medium=cfg.medium,
                f_c=cfg.f_c,
                bandwidth=cfg.bandwidth,
            )
        except GeometryError:
            continue
    raise GeometryError("could not place receivers without overlap after 100 draws")


def error_radii(channel: ChannelMatrices, g: float) -> tuple[np.ndarray, float]:
    """Relative error radii: xi_n = g ||h_n||_F, xi_q = g ||Q||_F."""
    return g * np.linalg.norm(channel.h, axis=1), g * float(np.linalg.norm(channel.q))


def sample_errors(
    channel: ChannelMatrices, g: float, rng: np.random.Generator
) -> tuple[np.ndarray, np.ndarray]:
    """Uniform draws from the Frobenius error balls.

    Directions are uniform on the complex sphere; radii follow the uniform-ball
    law (density r^(dim-1) with dim = 2K for a row, 2K^2 for the matrix).
    """
    n, k = channel.h.shape
    xi_h, xi_q = error_radii(channel, g)

    delta_h = np.zeros((n, k), dtype=complex)
    for i in range(n):
        direction = rng.normal(size=k) + 1j * rng.normal(size=k)
        direction /= np.linalg.norm(direction)
        radius = xi_h[i] * float(rng.uniform()) ** (1.0 / (2 * k))
        delta_h[i] = radius * direction

    direction = rng.normal(size=(k, k)) + 1j * rng.normal(size=(k, k))
    direction /= np.linalg.norm(direction)
    radius = xi_q * float(rng.uniform()) ** (1.0 / (2 * k * k))
    delta_q = radius * direction
    return delta_h, delta_q


def evaluate_trial(
    beams: BeamformerSet,
    true_channel: tuple[np.ndarray, np.ndarray],
    cfg: ScenarioConfig,
    scheme: str = "",
) -> TrialRecord:
    """Score one design on the perturbed channel (H + dH, Q + dQ)."""
    h_true, q_true = true_channel
    gammas = metrics.sinr(beams.vectors, h_true, cfg.noise_power)
    outage = tuple(bool(gammas[i] < cfg.gamma_th[i]) for i in range(len(gammas)))
    return TrialRecord(
        scheme=scheme,
        sinrs=tuple(float(v) for v in gammas),
        user_outage=outage,
        network_outage=any(outage),
        sum_rate=metrics.sum_rate(gammas, cfg.bandwidth),
        power=metrics.transmit_power(beams.vectors, q_true, cfg.bandwidth),
    )


def run_trial(
    cfg: ScenarioConfig,
    g_index: int,
    trial_index: int,
    schemes: tuple[str, ...] = SCHEMES,
    n_candidates: int = 1000,
) -> tuple[dict[str, TrialRecord], dict[str, BeamformerSet], dict[str, str]]:
    """One full trial; returns per-scheme records, designs, and failure reasons."""
    g = cfg.error_g[g_index]
    ss = np.random.SeedSequence(cfg.seed, spawn_key=(g_index, trial_index))
    r_geom, r_err, r_rob, r_non = (np.random.default_rng(s) for s in ss.spawn(4))

    geom = sample_geometry(cfg, r_geom)
    channel = assemble_channel(geom)
    xi_h, xi_q = error_radii(channel, g)
    delta_h, delta_q = sample_errors(channel, g, r_err)
    true_channel = (channel.h + delta_h, channel.q + delta_q)
    gamma_th = np.array(cfg.gamma_th)

    records: dict[str, TrialRecord] = {}
    designs: dict[str, BeamformerSet] = {}
    errors: dict[str, str] = {}
    for scheme in schemes:
        try:
            if scheme == "robust":
                prob = RobustProblem(
                    channel=channel,
                    xi_h=xi_h,
                    xi_q=xi_q,
                    gamma_th=gamma_th,
                    c_th=cfg.c_th,
                    bandwidth=cfg.bandwidth,
                    noise_power=cfg.noise_power,
                )
                beams = design_robust(prob, n_candidates=n_candidates, rng=r_rob)
            elif scheme == "nonrobust":
                beams = nonrobust_beamform(
                    channel,
                    gamma_th,
                    cfg.c_th,
                    cfg.bandwidth,
                    cfg.noise_power,
                    n_candidates=n_candidates,
                    rng=r_non,
                )
            elif scheme == "mmse":
                beams = mmse_beamform(
                    channel, gamma_th, cfg.c_th, cfg.bandwidth, cfg.noise_power
                )
            else:
                raise ValueError(f"unknown scheme {scheme!r}")
        except _DESIGN_ERRORS as exc:
            errors[scheme] = f"{type(exc).__name__}: {exc}"
            continue
        designs[scheme] = beams
        records[scheme] = evaluate_trial(beams, true_channel, cfg, scheme=scheme)
    return records, designs, errors


def run_experiment(
    cfg: ScenarioConfig, schemes: tuple[str, ...] = SCHEMES, progress=None
) -> ExperimentResult:
    """Full sweep: for every error level and scheme, design on the estimate,
    evaluate on the perturbed channel, and aggregate outage / throughput /
    power statistics.  Design failures are excluded and counted, never
    silently dropped."""
    result = ExperimentResult(config=cfg, failures={s: 0 for s in schemes})
    for g_index, g in enumerate(cfg.error_g):
        per_scheme: dict[str, list[TrialRecord]] = {s: [] for s in schemes}
        fails = {s: 0 for s in schemes}
        for trial in range(cfg.trials):
            records, _, errors = run_trial(cfg, g_index, trial, schemes=schemes)
            for s in schemes:
                if s in records:
                    per_scheme[s].append(records[s])
                else:
                    fails[s] += 1
            if progress is not None:
                progress(g_index, trial)
        for s in schemes:
            recs = per_scheme[s]
            result.failures[s] += fails[s]
            result.cells.append(_summarize(g, s, recs, fails[s], cfg.n_users))
    return result


def _summarize(
    g: float, scheme: str, records: list[TrialRecord], n_failed: int, n_users: int
) -> CellSummary:
    n = len(records)
    if n == 0:
        return CellSummary(
            g=g,
            scheme=scheme,
            n_trials=0,
            n_failed=n_failed,
            net_outage=0.0,
            user_outage=(0.0,) * n_users,
            ci_halfwidth=0.0,
            effective_throughput=0.0,
            mean_power=0.0,
        )
    net = np.array([r.network_outage for r in records], dtype=float)
    users = np.array([r.user_outage for r in records], dtype=float)
    rates = np.array([r.sum_rate for r in records])
    powers = np.array([r.power for r in records])
    p_hat = float(net.mean())
    ci = 1.96 * math.sqrt(max(p_hat * (1.0 - p_hat), 0.0) / n)
    ok = net == 0.0
    eff = float(rates[ok].mean()) if np.any(ok) else 0.0
    return CellSummary(
        g=g,
        scheme=scheme,
        n_trials=n,
        n_failed=n_failed,
        net_outage=p_hat,
        user_outage=tuple(float(v) for v in users.mean(axis=0)),
        ci_halfwidth=ci,
        effective_throughput=eff,
        mean_power=float(powers.mean()),
    )
