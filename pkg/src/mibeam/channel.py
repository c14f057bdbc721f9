"""Magnetic-induction circuit model.

Builds the coupled-coil channel for one above-ground transmit array (K coils)
and N buried single-coil receivers: coil self-impedances, pairwise mutual
inductances with lossy-medium attenuation, and the derived drive-point matrix
``q`` and receive rows ``h``.

All quantities are SI: metres, hertz, ohms, henries, amperes.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .exceptions import GeometryError, IllConditionedGeometryError

MU0 = 4.0 * np.pi * 1e-7  # vacuum permeability [H/m]

_COND_LIMIT = 1e12  # receiver impedance matrix beyond this is treated as singular


@dataclass(frozen=True)
class Medium:
    """Propagation medium (soil, concrete, ...).

    ``rel_permittivity`` is unused by the magnetoquasistatic model but kept so
    configs can describe the medium completely.
    """

    rel_permeability: float = 1.0
    rel_permittivity: float = 7.0
    conductivity: float = 0.1  # [S/m]

    def __post_init__(self) -> None:
        for name in ("rel_permeability", "rel_permittivity", "conductivity"):
            if getattr(self, name) <= 0:
                raise ValueError(f"Medium.{name} must be > 0")


@dataclass(frozen=True)
class CoilSpec:
    """Single-layer loop coil.

    ``load_resistance`` is the receive load in series with the coil (0 for
    transmit coils).  ``resonant`` selects a series capacitor tuned to the
    operating frequency, cancelling the coil reactance there.
    """

    radius: float  # loop radius a [m]
    turns: int
    wire_radius: float  # [m]
    wire_resistivity: float = 1.72e-8  # [ohm*m]
    load_resistance: float = 0.0  # [ohm]
    resonant: bool = True

    def __post_init__(self) -> None:
        if not self.radius > self.wire_radius > 0:
            raise ValueError("CoilSpec requires radius > wire_radius > 0")
        if self.turns < 1:
            raise ValueError("CoilSpec.turns must be >= 1")
        if self.load_resistance < 0:
            raise ValueError("CoilSpec.load_resistance must be >= 0")
        if self.wire_resistivity <= 0:
            raise ValueError("CoilSpec.wire_resistivity must be > 0")


@dataclass(frozen=True)
class Pose:
    """Coil centre position and unit axis direction."""

    position: np.ndarray  # shape (3,) [m]
    axis: np.ndarray  # shape (3,), unit norm

    def __post_init__(self) -> None:
        pos = np.asarray(self.position, dtype=float).reshape(3)
        ax = np.asarray(self.axis, dtype=float).reshape(3)
        if abs(np.linalg.norm(ax) - 1.0) > 1e-12:
            raise ValueError("Pose.axis must have unit norm (within 1e-12)")
        object.__setattr__(self, "position", pos)
        object.__setattr__(self, "axis", ax)


@dataclass(frozen=True)
class NetworkGeometry:
    """Full network layout: K transmit coils above ground, N receivers below."""

    eap_coils: tuple[tuple[CoilSpec, Pose], ...]
    tu_coils: tuple[tuple[CoilSpec, Pose], ...]
    medium: Medium
    f_c: float  # centre frequency [Hz]
    bandwidth: float  # [Hz]

    def __post_init__(self) -> None:
        object.__setattr__(self, "eap_coils", tuple(self.eap_coils))
        object.__setattr__(self, "tu_coils", tuple(self.tu_coils))
        k, n = len(self.eap_coils), len(self.tu_coils)
        if not k >= n >= 1:
            raise GeometryError(f"need K >= N >= 1, got K={k}, N={n}")
        if self.f_c <= 0 or self.bandwidth <= 0:
            raise ValueError("f_c and bandwidth must be > 0")
        everything = list(self.eap_coils) + list(self.tu_coils)
        for i in range(len(everything)):
            for j in range(i + 1, len(everything)):
                ci, pi = everything[i]
                cj, pj = everything[j]
                d = float(np.linalg.norm(pi.position - pj.position))
                if d <= ci.radius + cj.radius:
                    raise GeometryError(
                        f"coils {i} and {j} overlap: separation {d:.3f} m <= "
                        f"{ci.radius + cj.radius:.3f} m"
                    )

    @property
    def k_coils(self) -> int:
        return len(self.eap_coils)

    @property
    def n_users(self) -> int:
        return len(self.tu_coils)


@dataclass(frozen=True)
class ChannelMatrices:
    """Estimated narrowband channel state at the centre frequency.

    ``z_a``: K x K transmit-array impedance matrix.
    ``z_u``: N x N receiver impedance matrix.
    ``m``:   N x K mutual inductances, row = receiver.
    ``q``:   K x K drive-point matrix, z_a + 4 pi^2 f^2 m^H z_u^{-1} m.
    ``h``:   N x K receive rows, row n = j 2 pi f R_{L,n} (z_u^{-1} m)[n, :].
    """

    z_a: np.ndarray
    z_u: np.ndarray
    m: np.ndarray
    q: np.ndarray
    h: np.ndarray
    f_c: float
    load_resistances: np.ndarray  # shape (N,), receive loads [ohm]

    @property
    def k_coils(self) -> int:
        return self.q.shape[0]

    @property
    def n_users(self) -> int:
        return self.h.shape[0]


def skin_depth(medium: Medium, f: float) -> float:
    """Field penetration depth sqrt(2 / (2 pi f mu sigma)) [m]."""
    omega = 2.0 * np.pi * f
    return math.sqrt(2.0 / (omega * MU0 * medium.rel_permeability * medium.conductivity))


def loop_inductance(coil: CoilSpec) -> float:
    """Self-inductance of a single-layer loop, mu0 N^2 a (ln(8a/r_w) - 2)."""
    return MU0 * coil.turns**2 * coil.radius * (math.log(8.0 * coil.radius / coil.wire_radius) - 2.0)


def wire_resistance(coil: CoilSpec) -> float:
    """DC wire resistance rho * length / cross-section."""
    length = coil.turns * 2.0 * np.pi * coil.radius
    return coil.wire_resistivity * length / (np.pi * coil.wire_radius**2)


def self_impedance(coil: CoilSpec, f: float, f_tune: float | None = None) -> complex:
    """Series impedance R_wire + R_load + j 2 pi f L + 1 / (j 2 pi f C).

    For a resonant coil the capacitor is tuned to ``f_tune`` (defaults to the
    evaluation frequency ``f``, i.e. perfect tuning).
    """
    if f <= 0:
        raise ValueError("self_impedance requires f > 0")
    omega = 2.0 * np.pi * f
    ind = loop_inductance(coil)
    z = wire_resistance(coil) + coil.load_resistance + 1j * omega * ind
    if coil.resonant:
        omega_tune = 2.0 * np.pi * (f if f_tune is None else f_tune)
        cap = 1.0 / (omega_tune**2 * ind)
        z += 1.0 / (1j * omega * cap)
    return complex(z)


def _orientation_factor(axis1: np.ndarray, axis2: np.ndarray, u_sep: np.ndarray) -> float:
    # 3 (n1.u)(n2.u) - n1.n2, identical to 2 cos(t1) cos(t2) - sin(t1) sin(t2) cos(dphi)
    return 3.0 * float(axis1 @ u_sep) * float(axis2 @ u_sep) - float(axis1 @ axis2)


def mutual_inductance(
    c1: CoilSpec,
    p1: Pose,
    c2: CoilSpec,
    p2: Pose,
    medium: Medium,
    f: float,
    attenuate: bool,
) -> float:
    """Mutual inductance between two loop coils, magnetic-dipole approximation.

    M = mu0 mu_r pi N1 N2 a1^2 a2^2 / (4 d^3) * J(n1, n2, u) with the standard
    dipole orientation factor J; multiplied by exp(-d / delta) when
    ``attenuate`` is set (magnitude-only eddy loss, so the result stays real).
    """
    sep = p2.position - p1.position
    d = float(np.linalg.norm(sep))
    if d <= c1.radius + c2.radius:
        raise GeometryError(f"coil separation {d:.3f} m does not exceed radius sum")
    u = sep / d
    j_factor = _orientation_factor(p1.axis, p2.axis, u)
    m0 = (
        MU0
        * medium.rel_permeability
        * np.pi
        * c1.turns
        * c2.turns
        * c1.radius**2
        * c2.radius**2
        / (4.0 * d**3)
    ) * j_factor
    if attenuate:
        m0 *= math.exp(-d / skin_depth(medium, f))
    return float(m0)


def eap_ring_poses(k: int, ring_radius: float, height: float = 0.0) -> list[Pose]:
    """Uniform circular array of k vertical-axis coils in the z = height plane."""
    poses = []
    for i in range(k):
        phi = 2.0 * np.pi * i / k
        poses.append(
            Pose(
                position=np.array([ring_radius * np.cos(phi), ring_radius * np.sin(phi), height]),
                axis=np.array([0.0, 0.0, 1.0]),
            )
        )
    return poses


def assemble_channel(geom: NetworkGeometry) -> ChannelMatrices:
    """Assemble the narrowband channel matrices at the centre frequency.

    Transmit-array couplings are through air (no attenuation); transmit-to-
    receiver and receiver-to-receiver couplings are attenuated by the medium
    skin depth.
    """
    k, n = geom.k_coils, geom.n_users
    f = geom.f_c
    jw = 1j * 2.0 * np.pi * f

    z_a = np.zeros((k, k), dtype=complex)
    for i, (coil, _) in enumerate(geom.eap_coils):
        z_a[i, i] = self_impedance(coil, f)
    for i in range(k):
        ci, pi = geom.eap_coils[i]
        for j in range(i + 1, k):
            cj, pj = geom.eap_coils[j]
            coupling = jw * mutual_inductance(ci, pi, cj, pj, geom.medium, f, attenuate=False)
            z_a[i, j] = coupling
            z_a[j, i] = coupling

    z_u = np.zeros((n, n), dtype=complex)
    for i, (coil, _) in enumerate(geom.tu_coils):
        z_u[i, i] = self_impedance(coil, f)
    for i in range(n):
        ci, pi = geom.tu_coils[i]
        for j in range(i + 1, n):
            cj, pj = geom.tu_coils[j]
            coupling = jw * mutual_inductance(ci, pi, cj, pj, geom.medium, f, attenuate=True)
            z_u[i, j] = coupling
            z_u[j, i] = coupling

    m = np.zeros((n, k), dtype=complex)
    for i in range(n):
        ci, pi = geom.tu_coils[i]
        for j in range(k):
            cj, pj = geom.eap_coils[j]
            m[i, j] = mutual_inductance(ci, pi, cj, pj, geom.medium, f, attenuate=True)

    if np.linalg.cond(z_u) > _COND_LIMIT:
        raise IllConditionedGeometryError(
            f"receiver impedance matrix condition number exceeds {_COND_LIMIT:.0e}"
        )

    zu_inv_m = np.linalg.solve(z_u, m)
    q = z_a + 4.0 * np.pi**2 * f**2 * (m.conj().T @ zu_inv_m)
    loads = np.array([coil.load_resistance for coil, _ in geom.tu_coils], dtype=float)
    h = jw * loads[:, None] * zu_inv_m

    return ChannelMatrices(z_a=z_a, z_u=z_u, m=m, q=q, h=h, f_c=f, load_resistances=loads)
