"""Tensor-product nodal DG solver on a periodic Cartesian box.

State layout: conservative fields are arrays of shape
(5, E, E, E, n, n, n) with element-block axes 1..3 and node axes 4..6
(n = N+1 Gauss-Lobatto nodes per direction).  Periodic neighbor coupling
is a `roll` along the element axis.

The convective volume terms use the two-point split-form flux in its
expanded product form: for arithmetic-average fluxes the flux-differencing
sum 2 sum_j D_ij F#(q_i, q_j) collapses to combinations of D applied to
pointwise products, e.g.

    2 sum_j D_ij {a}{b}    = (a Db + b Da + D(ab)) / 2
    2 sum_j D_ij {a}{b}{c} = (ab Dc + ac Db + bc Da
                              + a D(bc) + b D(ac) + c D(ab) + D(abc)) / 4

which is algebraically identical (D has exactly zero row sums) but runs
as a handful of BLAS contractions instead of an O(n^4) pairwise loop.
Surface terms add the strong-form corrections (F* - F) at the two face
nodes of each line; the summation-by-parts structure then telescopes all
volume contributions so the conserved totals change only through the
single-valued interface fluxes, i.e. not at all on a periodic mesh.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace

import numpy as np

from . import physics3d as phys
from .basis import GAUSS_LOBATTO, NodalBasis, SvvKernel, cached_basis, filter_matrix
from .physics3d import GasModel, NonPhysicalStateError

VISCOSITY_MODELS = ("none", "constant", "smagorinsky")
SVV_MU_SOURCES = ("constant", "smagorinsky")

# Williamson low-storage three-stage third-order Runge-Kutta
_RK3_A = (0.0, -5.0 / 9.0, -153.0 / 128.0)
_RK3_B = (1.0 / 3.0, 15.0 / 16.0, 8.0 / 15.0)


class ConfigError(ValueError):
    """Inconsistent solver configuration."""


class PositivityError(RuntimeError):
    """Time march aborted on loss of positivity; partial results attached."""

    def __init__(self, message: str, result=None):
        super().__init__(message)
        self.result = result


@dataclass(frozen=True)
class Mesh:
    """Periodic cube [-pi, pi]^3 split into elements_per_side^3 blocks."""

    elements_per_side: int

    def __post_init__(self):
        if self.elements_per_side < 1:
            raise ConfigError("need at least one element per direction")

    @property
    def spacing(self) -> float:
        return 2.0 * np.pi / self.elements_per_side

    @property
    def element_volume(self) -> float:
        return self.spacing ** 3

    @property
    def volume(self) -> float:
        return (2.0 * np.pi) ** 3

    def node_coordinates(self, basis: NodalBasis):
        """Physical coordinates as three (E, E, E, n, n, n) arrays."""
        e = self.elements_per_side
        offsets = -np.pi + self.spacing * np.arange(e)
        local = (basis.nodes + 1.0) * (self.spacing / 2.0)
        line = offsets[:, None] + local[None, :]  # (E, n)
        shape = (e, e, e, basis.n_nodes, basis.n_nodes, basis.n_nodes)
        x = np.broadcast_to(line[:, None, None, :, None, None], shape)
        y = np.broadcast_to(line[None, :, None, None, :, None], shape)
        z = np.broadcast_to(line[None, None, :, None, None, :], shape)
        return x, y, z


@dataclass
class ConservedField:
    """Nodal conservative state plus its discretization context."""

    data: np.ndarray  # (5, E, E, E, n, n, n)
    basis: NodalBasis
    mesh: Mesh
    time: float = 0.0

    def copy(self) -> "ConservedField":
        return ConservedField(self.data.copy(), self.basis, self.mesh, self.time)


@dataclass(frozen=True)
class SvvModel:
    """Filtered-viscosity model settings for the 3D solver.

    mu_source "constant" uses the fixed amplitude `mu`; "smagorinsky"
    evaluates the eddy-viscosity formula nodewise (the filter still acts
    on the gradients only, the viscosity stays nodal and unfiltered).
    """

    kernel: SvvKernel
    mu_source: str = "constant"
    mu: float | None = None

    def __post_init__(self):
        if self.mu_source not in SVV_MU_SOURCES:
            raise ConfigError(f"unknown svv viscosity source {self.mu_source!r}")
        if self.mu_source == "constant":
            if self.mu is None or self.mu < 0:
                raise ConfigError("constant svv viscosity needs mu >= 0")


@dataclass(frozen=True)
class SolverConfig:
    """Full solver setup for one run."""

    degree: int
    elements: int
    gas: GasModel
    lam: float = 1.0
    viscosity_model: str = "none"
    svv: SvvModel | None = None
    cfl: float = 0.4
    t_end: float = 0.0
    snapshot_times: tuple = ()
    diagnostics_interval: float = 0.05
    deterministic: bool = True

    def __post_init__(self):
        if self.degree < 1:
            raise ConfigError("split-form solver needs degree >= 1 (Lobatto)")
        if self.cfl <= 0:
            raise ConfigError("CFL must be positive")
        if self.lam < 0:
            raise ConfigError("interface dissipation parameter must be >= 0")
        if self.viscosity_model not in VISCOSITY_MODELS:
            raise ConfigError(f"unknown viscosity model {self.viscosity_model!r}")
        if self.viscosity_model == "constant" and self.gas.reynolds is None:
            raise ConfigError("constant viscosity model needs a Reynolds number")
        if self.svv is not None:
            if self.svv.kernel.degree != self.degree:
                raise ConfigError("svv kernel degree must match solver degree")
            if (self.svv.mu_source == "smagorinsky"
                    and self.viscosity_model != "none"):
                raise ConfigError(
                    "smagorinsky-fed svv replaces the viscosity model; "
                    "set viscosity_model='none'")

    @property
    def basis(self) -> NodalBasis:
        return cached_basis(self.degree, GAUSS_LOBATTO)

    @property
    def mesh(self) -> Mesh:
        return Mesh(self.elements_per_side)

    @property
    def elements_per_side(self) -> int:
        return self.elements

    @property
    def needs_gradients(self) -> bool:
        return self.viscosity_model != "none" or self.svv is not None


def make_field(cfg: SolverConfig, initial_condition) -> ConservedField:
    """Sample a pointwise initial condition onto the collocation nodes.

    `initial_condition(x, y, z, gas)` must return the five conservative
    components, broadcast over coordinate arrays.
    """
    mesh, basis = cfg.mesh, cfg.basis
    x, y, z = mesh.node_coordinates(basis)
    data = np.asarray(initial_condition(x, y, z, cfg.gas), dtype=float)
    if data.shape[0] != 5:
        raise ConfigError("initial condition must return 5 components")
    return ConservedField(np.ascontiguousarray(data), basis, mesh, 0.0)


def apply_matrix(mat: np.ndarray, u: np.ndarray, axis: int) -> np.ndarray:
    """Contract `mat` with `u` along `axis` (nodal operator application)."""
    out = np.tensordot(mat, u, axes=(1, axis))
    return np.moveaxis(out, 0, axis)


def _face(u: np.ndarray, node_axis: int, last: bool) -> np.ndarray:
    idx = [slice(None)] * u.ndim
    idx[node_axis] = -1 if last else 0
    return u[tuple(idx)]


def _add_at_face(u: np.ndarray, node_axis: int, last: bool,
                 update: np.ndarray) -> None:
    idx = [slice(None)] * u.ndim
    idx[node_axis] = -1 if last else 0
    u[tuple(idx)] += update


def dg_derivative(f: np.ndarray, direction: int, basis: NodalBasis,
                  spacing: float, neighbor_faces=None) -> np.ndarray:
    """DG derivative of a scalar field with mean-value interface coupling.

    Interior differentiation plus the lifted corrections (average of the
    two traces minus the inner trace) at both faces; this is the building
    block of both stages of the viscous discretization.  `neighbor_faces`
    overrides the periodic neighbor traces with explicit (left, right)
    arrays, which the patch tests use to impose exact boundary data.
    """
    elem_axis, node_axis = direction, 3 + direction
    out = apply_matrix(basis.diff, f, node_axis)
    mine_r = _face(f, node_axis, last=True)
    mine_l = _face(f, node_axis, last=False)
    if neighbor_faces is None:
        nb_r = _face(np.roll(f, -1, axis=elem_axis), node_axis, last=False)
        nb_l = _face(np.roll(f, +1, axis=elem_axis), node_axis, last=True)
    else:
        nb_l, nb_r = neighbor_faces
    w = basis.weights
    _add_at_face(out, node_axis, True, (0.5 * (mine_r + nb_r) - mine_r) / w[-1])
    _add_at_face(out, node_axis, False, -(0.5 * (mine_l + nb_l) - mine_l) / w[0])
    return out * (2.0 / spacing)


def compute_gradients_br1(field: ConservedField, cfg: SolverConfig):
    """Velocity and temperature gradients with mean interface values.

    Returns (grad_v, grad_t) shaped (3, 3, ...) and (3, ...) with
    grad_v[i, j] = d v_i / d x_j.  Exact for fields linear inside every
    element with continuous traces.
    """
    rho, v, _ = phys.primitives(field.data, cfg.gas)
    temp = phys.temperature(field.data, cfg.gas)
    h = field.mesh.spacing
    shape = rho.shape
    grad_v = np.empty((3, 3) + shape)
    grad_t = np.empty((3,) + shape)
    for j in range(3):
        for i in range(3):
            grad_v[i, j] = dg_derivative(v[i], j, field.basis, h)
        grad_t[j] = dg_derivative(temp, j, field.basis, h)
    return grad_v, grad_t


def apply_svv_to_gradients(gradients: np.ndarray, kernel: SvvKernel,
                           basis: NodalBasis) -> np.ndarray:
    """Modal filter applied along each node axis (tensor-product kernel).

    Works on any array whose last three axes are the node axes;
    applied per element, leading axes broadcast.
    """
    fmat = filter_matrix(basis, kernel)
    out = gradients
    for axis in (-3, -2, -1):
        out = apply_matrix(fmat, out, out.ndim + axis)
    return out


def _volume_divergence_split(q, rho, v, p, enthalpy, basis, h):
    """Split-form convective volume divergence, as d(state)/dt contribution."""
    dudt = np.zeros_like(q)
    mom = q[1:4]
    for d in range(3):
        dd = lambda f: apply_matrix(basis.diff, f, 3 + d)
        u = v[d]
        d_rho, d_p, d_h = dd(rho), dd(p), dd(enthalpy)
        d_v = [dd(v[m]) for m in range(3)]
        d_uv = [dd(u * v[m]) for m in range(3)]
        d_mom = [dd(mom[m]) for m in range(3)]
        d_umom = [dd(u * mom[m]) for m in range(3)]
        d_uh = dd(u * enthalpy)
        d_rhoh = dd(rho * enthalpy)
        d_umomh = dd(mom[d] * enthalpy)

        dudt[0] -= 0.5 * (rho * d_v[d] + u * d_rho + d_mom[d])
        for m in range(3):
            acc = (rho * v[m] * d_v[d] + mom[d] * d_v[m] + u * v[m] * d_rho
                   + rho * d_uv[m] + v[m] * d_mom[d] + u * d_mom[m]
                   + d_umom[m])
            dudt[1 + m] -= 0.25 * acc
        dudt[1 + d] -= d_p
        acc = (rho * enthalpy * d_v[d] + mom[d] * d_h + u * enthalpy * d_rho
               + rho * d_uh + enthalpy * d_mom[d] + u * d_rhoh + d_umomh)
        dudt[4] -= 0.25 * acc
    return dudt * (2.0 / h)


def _surface_terms(q, cfg: SolverConfig, basis, h):
    """Strong-form interface corrections from the scaled-Roe flux."""
    dudt = np.zeros_like(q)
    w = basis.weights
    for d in range(3):
        elem_axis, node_axis = 1 + d, 4 + d
        normal = np.zeros(3)
        normal[d] = 1.0
        q_r = _face(q, node_axis, last=True)
        q_nb = _face(np.roll(q, -1, axis=elem_axis), node_axis, last=False)
        fstar_r = phys.riemann_flux(q_r, q_nb, normal, cfg.lam, cfg.gas)
        corr_r = fstar_r - phys.euler_flux_normal(q_r, normal, cfg.gas)
        q_l = _face(q, node_axis, last=False)
        fstar_l = np.roll(fstar_r, +1, axis=elem_axis)
        corr_l = fstar_l - phys.euler_flux_normal(q_l, normal, cfg.gas)
        _add_at_face(dudt, node_axis, True, -corr_r * (2.0 / (h * w[-1])))
        _add_at_face(dudt, node_axis, False, corr_l * (2.0 / (h * w[0])))
    return dudt


def _flux_divergence_br1(flux: np.ndarray, basis: NodalBasis,
                         h: float) -> np.ndarray:
    """Divergence of a nodal flux tensor with mean interface values.

    flux[c, d] is the d-direction flux of component c; the mass row is
    assumed zero and skipped.
    """
    out = np.zeros(flux.shape[:1] + flux.shape[2:])
    for c in range(1, 5):
        for d in range(3):
            out[c] += dg_derivative(flux[c, d], d, basis, h)
    return out


def spatial_residual(field: ConservedField, cfg: SolverConfig) -> np.ndarray:
    """Nodal time derivative of the conservative state.

    Convective split-form volume terms, scaled-Roe surface terms, and the
    configured dissipative fluxes (physical/eddy viscosity and filtered
    viscosity) through the two-stage mean-value machinery.

    Raises:
        NonPhysicalStateError: with the offending element/node location.
    """
    q = field.data
    basis, h = field.basis, field.mesh.spacing
    rho, v, p = phys.primitives(q, cfg.gas)
    bad = ~(np.isfinite(p) & (rho > 0) & (p > 0))
    if np.any(bad):
        loc = np.unravel_index(int(np.argmax(bad)), bad.shape)
        raise NonPhysicalStateError(
            f"non-physical state at element {loc[:3]}, node {loc[3:]}, "
            f"t={field.time:.6g}")
    enthalpy = (q[4] + p) / rho

    dudt = _volume_divergence_split(q, rho, v, p, enthalpy, basis, h)
    dudt += _surface_terms(q, cfg, basis, h)

    if cfg.needs_gradients:
        grad_v, grad_t = compute_gradients_br1(field, cfg)
        mu, kappa = _viscosities(cfg, grad_v, field)
        if mu is not None:
            flux = phys.viscous_flux(mu, kappa, v, grad_v, grad_t)
            dudt += _flux_divergence_br1(flux, basis, h)
        if cfg.svv is not None:
            mu_svv = _svv_viscosity(cfg, grad_v, field)
            kappa_svv = cfg.gas.turbulent_kappa(mu_svv)
            hat_v = apply_svv_to_gradients(grad_v, cfg.svv.kernel, basis)
            hat_t = apply_svv_to_gradients(grad_t, cfg.svv.kernel, basis)
            flux = phys.svv_flux(v, hat_v, hat_t, mu_svv, kappa_svv)
            dudt += _flux_divergence_br1(flux, basis, h)
    return dudt


def _viscosities(cfg: SolverConfig, grad_v, field: ConservedField):
    """(mu, kappa) fields for the viscous flux, or (None, None)."""
    if cfg.viscosity_model == "none":
        return None, None
    if cfg.viscosity_model == "constant":
        return cfg.gas.mu, cfg.gas.kappa
    delta = phys.filter_width(field.mesh.element_volume, cfg.degree)
    mu_s = phys.smagorinsky_viscosity(grad_v, delta)
    mu = cfg.gas.mu + mu_s
    kappa = cfg.gas.kappa + cfg.gas.turbulent_kappa(mu_s)
    return mu, kappa


def _svv_viscosity(cfg: SolverConfig, grad_v, field: ConservedField):
    if cfg.svv.mu_source == "constant":
        return cfg.svv.mu
    delta = phys.filter_width(field.mesh.element_volume, cfg.degree)
    return phys.smagorinsky_viscosity(grad_v, delta)


def compute_dt(field: ConservedField, cfg: SolverConfig) -> float:
    """CFL-limited step: advective h/((2N+1)(|v|+c)), viscous h^2/((2N+1)^2 nu)."""
    q = field.data
    rho, v, p = phys.primitives(q, cfg.gas)
    if np.any(rho <= 0) or np.any(p <= 0):
        raise NonPhysicalStateError("compute_dt on non-physical state")
    speed = np.sqrt(np.sum(v * v, axis=0)) + np.sqrt(cfg.gas.gamma * p / rho)
    h = field.mesh.spacing
    factor = 2 * cfg.degree + 1
    dt = h / (factor * float(np.max(speed)))
    nu_max = 0.0
    if cfg.viscosity_model != "none" or (
            cfg.svv is not None and cfg.svv.mu_source == "smagorinsky"):
        grad_v, _ = compute_gradients_br1(field, cfg)
        mu, _ = _viscosities(cfg, grad_v, field)
        if mu is not None:
            nu_max = float(np.max(np.asarray(mu) / rho))
        if cfg.svv is not None and cfg.svv.mu_source == "smagorinsky":
            nu_max = max(nu_max, float(np.max(_svv_viscosity(cfg, grad_v, field) / rho)))
    if cfg.svv is not None and cfg.svv.mu_source == "constant":
        nu_max = max(nu_max, cfg.svv.mu / float(np.min(rho)))
    if nu_max > 0.0:
        dt = min(dt, h * h / (factor * factor * nu_max))
    return cfg.cfl * dt


def rk3_step(field: ConservedField, dt: float, cfg: SolverConfig) -> ConservedField:
    """Advance one step with the low-storage three-stage Runge-Kutta."""
    q = field.data.copy()
    g = np.zeros_like(q)
    t = field.time
    stage_times = (t, t + dt / 3.0, t + 0.75 * dt)
    work = ConservedField(q, field.basis, field.mesh, t)
    for a, b, ts in zip(_RK3_A, _RK3_B, stage_times):
        work.time = ts
        if a == 0.0:
            g = spatial_residual(work, cfg)
        else:
            g *= a
            g += spatial_residual(work, cfg)
        q += (b * dt) * g
    work.time = t + dt
    return work


@dataclass
class RunResult:
    """Raw time series and snapshots from one run.

    times/kinetic_energy/enstrophy sample the configured cadence; the
    conserved totals (mass, momentum, energy) are volume integrals used
    by the conservation checks.  `snapshots` maps requested times to
    field copies.  `completed` is False when the march aborted.
    """

    times: np.ndarray
    kinetic_energy: np.ndarray
    enstrophy: np.ndarray
    mass: np.ndarray
    momentum: np.ndarray
    energy: np.ndarray
    snapshots: dict
    steps: int
    completed: bool


def conserved_totals(field: ConservedField):
    """Volume integrals of the five conservative components."""
    w = field.basis.weights
    w3 = w[:, None, None] * w[None, :, None] * w[None, None, :]
    scale = (field.mesh.spacing / 2.0) ** 3
    return scale * np.sum(field.data * w3, axis=(1, 2, 3, 4, 5, 6))


def run(cfg: SolverConfig, initial_condition, monitor=None) -> RunResult:
    """March a fresh field to t_end, recording diagnostics and snapshots.

    `initial_condition` is a callable as in :func:`make_field` or an
    existing ConservedField.  Diagnostics are sampled at the configured
    cadence (time steps are shortened to land exactly on sample,
    snapshot, and end times, so results are bit-reproducible for a fixed
    config).  On positivity loss a PositivityError carrying the partial
    RunResult is raised.

    `monitor`, when given, is called as monitor(field) at every
    diagnostics sample and may return a dict of extra series (collected
    under RunResult via attribute `extra` on the monitor itself).
    """
    from . import diagnostics

    if isinstance(initial_condition, ConservedField):
        field = initial_condition.copy()
    else:
        field = make_field(cfg, initial_condition)

    snapshot_times = sorted(float(t) for t in cfg.snapshot_times)
    events = {round(t, 12) for t in snapshot_times}
    times, ke, ens = [], [], []
    mass, mom, ener = [], [], []
    snapshots = {}

    def record(f: ConservedField):
        times.append(f.time)
        ke.append(diagnostics.kinetic_energy(f, cfg.gas))
        ens.append(diagnostics.enstrophy(f, cfg.gas))
        totals = conserved_totals(f)
        mass.append(totals[0])
        mom.append(totals[1:4].copy())
        ener.append(totals[4])
        if monitor is not None:
            monitor(f)

    def result(completed: bool, steps: int) -> RunResult:
        return RunResult(
            times=np.array(times), kinetic_energy=np.array(ke),
            enstrophy=np.array(ens), mass=np.array(mass),
            momentum=np.array(mom), energy=np.array(ener),
            snapshots=snapshots, steps=steps, completed=completed)

    record(field)
    if 0.0 in events or any(abs(t) < 1e-12 for t in snapshot_times):
        snapshots[0.0] = field.copy()

    steps = 0
    next_diag = cfg.diagnostics_interval
    pending_snaps = [t for t in snapshot_times if t > 1e-12]
    try:
        while field.time < cfg.t_end - 1e-12:
            dt = compute_dt(field, cfg)
            target = min(
                [cfg.t_end, next_diag]
                + ([pending_snaps[0]] if pending_snaps else []))
            dt = min(dt, target - field.time)
            field = rk3_step(field, dt, cfg)
            steps += 1
            hit_diag = field.time >= next_diag - 1e-12
            if hit_diag:
                next_diag = round(next_diag + cfg.diagnostics_interval, 12)
            if pending_snaps and field.time >= pending_snaps[0] - 1e-12:
                snapshots[pending_snaps.pop(0)] = field.copy()
            if hit_diag or field.time >= cfg.t_end - 1e-12:
                record(field)
    except NonPhysicalStateError as exc:
        raise PositivityError(str(exc), result(False, steps)) from exc
    return result(True, steps)
