"""Taylor-Green vortex setup and the reported flow observables.

Kinetic energy, its decay rate, enstrophy, the effective-viscosity
estimate rate/(2*enstrophy), and shell-binned kinetic-energy spectra of
uniformly resampled velocity fields.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass

import numpy as np

from . import physics3d as phys
from .basis import NodalBasis
from .dgsem3d import ConservedField, RunResult, apply_matrix
from .physics3d import GasModel

ZETA_FLOOR = 1e-12


def tgv_initial_condition(x, y, z, gas: GasModel, rho0: float = 1.0,
                          v0: float = 1.0) -> np.ndarray:
    """Taylor-Green vortex initial state on [-pi, pi]^3.

    Velocity is the classical single-mode vortex sheet pair (v3 = 0);
    pressure balances the vortical field on top of the Mach-scaled
    background rho0 v0^2 / (gamma M0^2).
    """
    x, y, z = np.broadcast_arrays(x, y, z)
    v1 = v0 * np.sin(x) * np.cos(y) * np.cos(z)
    v2 = -v0 * np.cos(x) * np.sin(y) * np.cos(z)
    v3 = np.zeros_like(v1)
    p = rho0 * v0 ** 2 * (
        1.0 / (gas.gamma * gas.mach ** 2)
        + (np.cos(2 * x) + np.cos(2 * y)) * (np.cos(2 * z) + 2.0) / 16.0)
    return phys.conservative(np.full_like(v1, rho0), v1, v2, v3, p, gas)


def _quadrature_average(field: ConservedField, values: np.ndarray) -> float:
    """Volume average of a nodal scalar over the periodic box."""
    w = field.basis.weights
    w3 = w[:, None, None] * w[None, :, None] * w[None, None, :]
    total = float(np.sum(values * w3)) * (field.mesh.spacing / 2.0) ** 3
    return total / field.mesh.volume


def kinetic_energy(field: ConservedField, gas: GasModel) -> float:
    """Volume-averaged 0.5 rho |v|^2."""
    rho, v, _ = phys.primitives(field.data, gas)
    return _quadrature_average(field, 0.5 * rho * np.sum(v * v, axis=0))


def velocity_curl(field: ConservedField, gas: GasModel) -> np.ndarray:
    """Vorticity from element-internal differentiation (no lifting)."""
    _, v, _ = phys.primitives(field.data, gas)
    h2 = field.mesh.spacing / 2.0
    d = field.basis.diff

    def ddx(f, axis):
        return apply_matrix(d, f, 3 + axis) / h2

    return np.stack([
        ddx(v[2], 1) - ddx(v[1], 2),
        ddx(v[0], 2) - ddx(v[2], 0),
        ddx(v[1], 0) - ddx(v[0], 1),
    ])


def enstrophy(field: ConservedField, gas: GasModel) -> float:
    """Volume-averaged 0.5 |curl v|^2."""
    curl = velocity_curl(field, gas)
    return _quadrature_average(field, 0.5 * np.sum(curl * curl, axis=0))


def kinetic_energy_rate(times: np.ndarray, energy: np.ndarray) -> np.ndarray:
    """-dK/dt by centered differences (one-sided at the ends)."""
    times = np.asarray(times, dtype=float)
    energy = np.asarray(energy, dtype=float)
    if times.size < 3:
        raise ValueError("need at least 3 samples to differentiate")
    return -np.gradient(energy, times)


def numerical_viscosity(rate, zeta):
    """Effective viscosity rate/(2 zeta); NaN below the enstrophy floor."""
    rate = np.asarray(rate, dtype=float)
    zeta = np.asarray(zeta, dtype=float)
    out = np.full(np.broadcast(rate, zeta).shape, np.nan)
    ok = zeta > ZETA_FLOOR
    np.divide(rate, 2.0 * zeta, out=out, where=ok)
    if out.ndim == 0:
        return float(out)
    return out


@dataclass
class DiagnosticsSeries:
    """Post-processed time series: K, eps = -dK/dt, zeta, mu_num."""

    times: np.ndarray
    kinetic_energy: np.ndarray
    dissipation_rate: np.ndarray
    enstrophy: np.ndarray
    numerical_viscosity: np.ndarray


def series_from_run(result: RunResult) -> DiagnosticsSeries:
    rate = kinetic_energy_rate(result.times, result.kinetic_energy)
    return DiagnosticsSeries(
        times=result.times,
        kinetic_energy=result.kinetic_energy,
        dissipation_rate=rate,
        enstrophy=result.enstrophy,
        numerical_viscosity=numerical_viscosity(rate, result.enstrophy),
    )


def write_series_csv(path, series: DiagnosticsSeries) -> None:
    with open(path, "w", newline="") as fh:
        out = csv.writer(fh)
        out.writerow(["t", "K", "eps", "zeta", "mu_num"])
        for i in range(series.times.size):
            out.writerow([f"{series.times[i]:.17g}",
                          f"{series.kinetic_energy[i]:.17g}",
                          f"{series.dissipation_rate[i]:.17g}",
                          f"{series.enstrophy[i]:.17g}",
                          f"{series.numerical_viscosity[i]:.17g}"])


@dataclass
class EnergySpectrum:
    """Shell-binned kinetic-energy spectrum of a velocity field.

    energy[k] integrates 0.5 |v_hat|^2 over the integer shell
    k - 1/2 < |kappa| <= k + 1/2 (k = 0 holds the mean-flow energy);
    the full shell sum equals the sampled-grid kinetic energy exactly
    (Parseval).  grid_resolution is the uniform sampling resolution.
    """

    time: float
    wavenumbers: np.ndarray
    energy: np.ndarray
    grid_resolution: int

    @property
    def total(self) -> float:
        return float(np.sum(self.energy))

    def resolved(self, k_max: int) -> np.ndarray:
        """Spectrum truncated to shells 1..k_max."""
        return self.energy[1:k_max + 1]


def resolved_shell_max(elements: int, degree: int) -> int:
    """Highest shell resolvable by the DG grid (DOF Nyquist)."""
    return elements * (degree + 1) // 2


def uniform_evaluation_matrix(basis: NodalBasis, points_per_element: int) -> np.ndarray:
    """Lagrange evaluation at points_per_element uniform points in [-1, 1).

    Points sit at the left edge of equal subcells, matching a global
    uniform grid that starts at the element's left face.
    """
    xi = -1.0 + 2.0 * np.arange(points_per_element) / points_per_element
    return basis.interpolation_matrix(xi)


def sample_velocity_uniform(field: ConservedField, gas: GasModel,
                            grid_resolution: int) -> np.ndarray:
    """Evaluate the polynomial velocity on a uniform grid, shape (3, G, G, G)."""
    e = field.mesh.elements_per_side
    n = field.basis.n_nodes
    if grid_resolution % e != 0:
        raise ValueError("grid resolution must be a multiple of the element count")
    if grid_resolution < e * n:
        raise ValueError(
            f"grid resolution {grid_resolution} under-samples the "
            f"{e * n} polynomial nodes per direction")
    pmat = uniform_evaluation_matrix(field.basis, grid_resolution // e)
    _, v, _ = phys.primitives(field.data, gas)
    out = np.empty((3, grid_resolution, grid_resolution, grid_resolution))
    m = grid_resolution // e
    for c in range(3):
        arr = v[c]
        for axis in (3, 4, 5):
            arr = apply_matrix(pmat, arr, axis)
        # interleave (element, subpoint) into global coordinates
        out[c] = arr.transpose(0, 3, 1, 4, 2, 5).reshape(
            grid_resolution, grid_resolution, grid_resolution)
    return out


def spectrum_from_samples(velocity: np.ndarray, time: float = 0.0) -> EnergySpectrum:
    """Shell-binned spectrum of uniform velocity samples (3, G, G, G)."""
    g = velocity.shape[-1]
    freqs = np.fft.fftfreq(g, d=1.0 / g)
    kx, ky, kz = np.meshgrid(freqs, freqs, freqs, indexing="ij")
    kmag = np.sqrt(kx ** 2 + ky ** 2 + kz ** 2)
    shells = np.ceil(kmag - 0.5).astype(int)
    density = np.zeros(g ** 3 // 1, dtype=float).reshape(kmag.shape)
    for c in range(3):
        vhat = np.fft.fftn(velocity[c]) / g ** 3
        density += 0.5 * np.abs(vhat) ** 2
    n_shells = int(shells.max()) + 1
    energy = np.bincount(shells.ravel(), weights=density.ravel(),
                         minlength=n_shells)
    return EnergySpectrum(time=time, wavenumbers=np.arange(n_shells),
                          energy=energy, grid_resolution=g)


def energy_spectrum(field: ConservedField, gas: GasModel,
                    grid_resolution: int | None = None) -> EnergySpectrum:
    """Kinetic-energy spectrum of a DG field.

    The polynomial velocity is evaluated on a uniform grid (default
    2 E (N+1) points per direction, over-resolving the solution space),
    transformed with a 3D DFT, and binned over integer shells.
    """
    e = field.mesh.elements_per_side
    n = field.basis.n_nodes
    if grid_resolution is None:
        grid_resolution = 2 * e * n
    velocity = sample_velocity_uniform(field, gas, grid_resolution)
    return spectrum_from_samples(velocity, time=field.time)


def write_spectrum_csv(path, spectrum: EnergySpectrum) -> None:
    with open(path, "w", newline="") as fh:
        out = csv.writer(fh)
        out.writerow(["k", "E_k"])
        for k, ek in zip(spectrum.wavenumbers, spectrum.energy):
            out.writerow([int(k), f"{ek:.17g}"])
