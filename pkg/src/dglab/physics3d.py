"""Pointwise compressible-flow physics for the 3D solver.

Conservative states are arrays with a leading component axis of size 5
(rho, rho*v1, rho*v2, rho*v3, rho*e); all operations broadcast over any
trailing shape, so a "state" can be a single 5-vector or a whole field.

Units: density and velocity references are 1, the pressure scale follows
from the Mach number, temperature is p/rho (gas constant folded in), and
the dynamic viscosity is 1/Re.  The heat flux uses kappa = cp * mu / Pr
with cp = gamma/(gamma-1), which makes the gas constant drop out.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

SMAGORINSKY_CS = 0.2


class NonPhysicalStateError(RuntimeError):
    """Density or pressure lost positivity."""


@dataclass(frozen=True)
class GasModel:
    """Ideal-gas constants and reference numbers.

    reynolds is None for inviscid runs; `mu` is then 0 and the viscous
    machinery must not be invoked with it.
    """

    gamma: float = 1.4
    prandtl: float = 0.72
    turbulent_prandtl: float = 0.7
    mach: float = 0.1
    reynolds: float | None = None

    def __post_init__(self):
        if self.gamma <= 1:
            raise ValueError("gamma must exceed 1")
        if self.prandtl <= 0 or self.turbulent_prandtl <= 0:
            raise ValueError("Prandtl numbers must be positive")

    @property
    def cp(self) -> float:
        return self.gamma / (self.gamma - 1.0)

    @property
    def mu(self) -> float:
        return 0.0 if self.reynolds is None else 1.0 / self.reynolds

    @property
    def kappa(self) -> float:
        return self.cp * self.mu / self.prandtl

    def turbulent_kappa(self, mu_t):
        """Conductivity paired with an eddy viscosity."""
        return self.cp * mu_t / self.turbulent_prandtl

    @property
    def background_pressure(self) -> float:
        """Quiescent-state pressure fixing the Mach number (rho0 = V0 = 1)."""
        return 1.0 / (self.gamma * self.mach ** 2)


def primitives(q: np.ndarray, gas: GasModel):
    """Split a conservative state into (rho, v, p); v has a leading 3-axis."""
    rho = q[0]
    v = q[1:4] / rho
    kinetic = 0.5 * rho * np.sum(v * v, axis=0)
    p = (gas.gamma - 1.0) * (q[4] - kinetic)
    return rho, v, p


def temperature(q: np.ndarray, gas: GasModel) -> np.ndarray:
    rho, _, p = primitives(q, gas)
    return p / rho


def sound_speed(q: np.ndarray, gas: GasModel) -> np.ndarray:
    rho, _, p = primitives(q, gas)
    return np.sqrt(gas.gamma * p / rho)


def conservative(rho, v1, v2, v3, p, gas: GasModel) -> np.ndarray:
    """Assemble a conservative state from primitive fields."""
    rho = np.asarray(rho, dtype=float)
    vel = np.stack(np.broadcast_arrays(
        np.asarray(v1, dtype=float), np.asarray(v2, dtype=float),
        np.asarray(v3, dtype=float)))
    energy = np.asarray(p, dtype=float) / (gas.gamma - 1.0) \
        + 0.5 * rho * np.sum(vel * vel, axis=0)
    return np.concatenate([rho[None], rho * vel, energy[None]])


def assert_physical(q: np.ndarray, gas: GasModel, context: str = "") -> None:
    """Raise when density or pressure is non-positive (or not finite)."""
    rho, _, p = primitives(q, gas)
    if not (np.all(np.isfinite(q)) and np.all(rho > 0) and np.all(p > 0)):
        raise NonPhysicalStateError(
            f"non-physical state{': ' + context if context else ''} "
            f"(min rho {np.nanmin(rho):.3e}, min p {np.nanmin(p):.3e})")


def euler_flux(q: np.ndarray, gas: GasModel) -> np.ndarray:
    """Exact convective flux, shape (5, 3) + state shape (column = direction)."""
    rho, v, p = primitives(q, gas)
    if np.any(rho <= 0) or np.any(p <= 0):
        raise NonPhysicalStateError("euler_flux needs positive rho and p")
    enthalpy = (q[4] + p) / rho
    flux = np.empty((5, 3) + rho.shape)
    for d in range(3):
        flux[0, d] = rho * v[d]
        for m in range(3):
            flux[1 + m, d] = rho * v[d] * v[m]
        flux[1 + d, d] += p
        flux[4, d] = rho * v[d] * enthalpy
    return flux


def euler_flux_normal(q: np.ndarray, n: np.ndarray, gas: GasModel) -> np.ndarray:
    """Convective flux contracted with a constant normal vector."""
    rho, v, p = primitives(q, gas)
    vn = n[0] * v[0] + n[1] * v[1] + n[2] * v[2]
    enthalpy = (q[4] + p) / rho
    out = np.empty_like(q)
    out[0] = rho * vn
    for m in range(3):
        out[1 + m] = rho * vn * v[m] + p * n[m]
    out[4] = rho * vn * enthalpy
    return out


def two_point_flux(q_left: np.ndarray, q_right: np.ndarray, direction: int,
                   gas: GasModel) -> np.ndarray:
    """Symmetric split-form volume flux (arithmetic-mean product form).

    With {.} the arithmetic mean, u the `direction` velocity and H the
    specific total enthalpy, the components are

        mass     {rho} {u}
        momentum {rho} {u} {v_m} + delta_{m,direction} {p}
        energy   {rho} {u} {H}

    Consistent (equal states give the exact flux column) and symmetric in
    its arguments; the momentum flux factorizes through the mass flux,
    which is what keeps the discrete kinetic-energy balance clean.
    """
    rho_l, v_l, p_l = primitives(q_left, gas)
    rho_r, v_r, p_r = primitives(q_right, gas)
    rho = 0.5 * (rho_l + rho_r)
    v = 0.5 * (v_l + v_r)
    p = 0.5 * (p_l + p_r)
    enthalpy = 0.5 * ((q_left[4] + p_l) / rho_l + (q_right[4] + p_r) / rho_r)
    u = v[direction]
    out = np.empty_like(q_left)
    out[0] = rho * u
    for m in range(3):
        out[1 + m] = rho * u * v[m]
    out[1 + direction] += p
    out[4] = rho * u * enthalpy
    return out


def roe_dissipation(q_left: np.ndarray, q_right: np.ndarray, n: np.ndarray,
                    gas: GasModel) -> np.ndarray:
    """Upwind dissipation of the Roe solver, 0.5 * sum_e alpha_e |beta_e| K_e.

    The one-half makes {{F.n}} - diss the textbook Roe flux, so the
    dissipation-scaling parameter multiplies exactly the standard-Roe
    deficit.  Eigenstructure at the Roe-averaged state; no entropy fix
    (target flows are smooth and subsonic).
    """
    rho_l, v_l, p_l = primitives(q_left, gas)
    rho_r, v_r, p_r = primitives(q_right, gas)
    if np.any(rho_l <= 0) or np.any(rho_r <= 0):
        raise NonPhysicalStateError("roe_dissipation needs positive density")

    sl, sr = np.sqrt(rho_l), np.sqrt(rho_r)
    wsum = sl + sr
    v = (sl * v_l + sr * v_r) / wsum
    h_l = (q_left[4] + p_l) / rho_l
    h_r = (q_right[4] + p_r) / rho_r
    enthalpy = (sl * h_l + sr * h_r) / wsum
    v2 = np.sum(v * v, axis=0)
    a2 = (gas.gamma - 1.0) * (enthalpy - 0.5 * v2)
    if np.any(a2 <= 0):
        raise NonPhysicalStateError("non-physical Roe average (a^2 <= 0)")
    a = np.sqrt(a2)
    rho_avg = sl * sr

    vn = n[0] * v[0] + n[1] * v[1] + n[2] * v[2]
    d_rho = rho_r - rho_l
    d_p = p_r - p_l
    d_v = v_r - v_l
    d_vn = n[0] * d_v[0] + n[1] * d_v[1] + n[2] * d_v[2]
    d_vt = d_v - d_vn * np.asarray(n).reshape(3, *([1] * (d_v.ndim - 1)))

    alpha_minus = (d_p - rho_avg * a * d_vn) / (2.0 * a2)
    alpha_entropy = d_rho - d_p / a2
    alpha_plus = (d_p + rho_avg * a * d_vn) / (2.0 * a2)
    lam_minus, lam_zero, lam_plus = np.abs(vn - a), np.abs(vn), np.abs(vn + a)

    diss = np.empty_like(q_left)
    nvec = np.asarray(n).reshape(3, *([1] * np.ndim(rho_l)))
    diss[0] = lam_minus * alpha_minus + lam_zero * alpha_entropy \
        + lam_plus * alpha_plus
    for m in range(3):
        diss[1 + m] = (lam_minus * alpha_minus * (v[m] - a * nvec[m])
                       + lam_zero * (alpha_entropy * v[m] + rho_avg * d_vt[m])
                       + lam_plus * alpha_plus * (v[m] + a * nvec[m]))
    vdvt = np.sum(v * d_vt, axis=0)
    diss[4] = (lam_minus * alpha_minus * (enthalpy - a * vn)
               + lam_zero * (alpha_entropy * 0.5 * v2 + rho_avg * vdvt)
               + lam_plus * alpha_plus * (enthalpy + a * vn))
    return 0.5 * diss


def riemann_flux(q_left: np.ndarray, q_right: np.ndarray, n: np.ndarray,
                 lam: float, gas: GasModel) -> np.ndarray:
    """Interface flux {{F.n}} - lam * diss_Roe.

    lam = 0 is the central (average) flux, lam = 1 the standard Roe
    solver, intermediate values scale the upwind dissipation.
    """
    avg = 0.5 * (euler_flux_normal(q_left, n, gas)
                 + euler_flux_normal(q_right, n, gas))
    if lam == 0.0:
        return avg
    return avg - lam * roe_dissipation(q_left, q_right, n, gas)


def viscous_flux(mu, kappa, v: np.ndarray, grad_v: np.ndarray,
                 grad_t: np.ndarray) -> np.ndarray:
    """Navier-Stokes viscous flux from velocity/temperature gradients.

    grad_v[i, j] = d v_i / d x_j, grad_t[j] = d T / d x_j, broadcastable
    against the field shape.  tau = mu (grad v + grad v^T) - (2/3) mu
    (div v) I; the energy row carries v.tau + kappa grad T.  The mass row
    is identically zero.
    """
    div = grad_v[0, 0] + grad_v[1, 1] + grad_v[2, 2]
    base = np.broadcast(grad_v[0, 0], mu)
    flux = np.zeros((5, 3) + base.shape)
    tau = [[None] * 3 for _ in range(3)]
    for i in range(3):
        for j in range(3):
            t = mu * (grad_v[i, j] + grad_v[j, i])
            if i == j:
                t = t - (2.0 / 3.0) * mu * div
            tau[i][j] = t
            flux[1 + i, j] = t
    for j in range(3):
        flux[4, j] = (v[0] * tau[0][j] + v[1] * tau[1][j] + v[2] * tau[2][j]
                      + kappa * grad_t[j])
    return flux


def svv_flux(v: np.ndarray, filtered_grad_v: np.ndarray,
             filtered_grad_t: np.ndarray, mu, kappa) -> np.ndarray:
    """Dissipative flux built from spectrally filtered gradients.

    Same layout as :func:`viscous_flux` but the stress keeps only the
    filtered symmetric gradient, tau_ij = mu (g_ij + g_ji), with no
    dilatational term (the filtered formulation omits it; at Mach 0.1
    the difference is small).
    """
    base = np.broadcast(filtered_grad_v[0, 0], mu)
    flux = np.zeros((5, 3) + base.shape)
    tau = [[None] * 3 for _ in range(3)]
    for i in range(3):
        for j in range(3):
            tau[i][j] = mu * (filtered_grad_v[i, j] + filtered_grad_v[j, i])
            flux[1 + i, j] = tau[i][j]
    for j in range(3):
        flux[4, j] = (v[0] * tau[0][j] + v[1] * tau[1][j] + v[2] * tau[2][j]
                      + kappa * filtered_grad_t[j])
    return flux


def smagorinsky_viscosity(grad_v: np.ndarray, delta: float) -> np.ndarray:
    """Eddy viscosity mu_S = (C_S delta)^2 |S|, |S| = sqrt(2 S:S).

    S is the symmetric part of the velocity gradient, so any rotational
    (antisymmetric) content drops out.  C_S = 0.2, the classical value
    for isotropic turbulence.
    """
    s_sq = np.zeros_like(np.asarray(grad_v[0, 0]))
    for i in range(3):
        for j in range(3):
            s = 0.5 * (grad_v[i, j] + grad_v[j, i])
            s_sq = s_sq + s * s
    return (SMAGORINSKY_CS * delta) ** 2 * np.sqrt(2.0 * s_sq)


def filter_width(cell_volume: float, degree: int) -> float:
    """Grid filter width: cube root of the volume per collocation node."""
    if cell_volume <= 0:
        raise ValueError("cell volume must be positive")
    return (cell_volume / (degree + 1) ** 3) ** (1.0 / 3.0)
