"""Plane-wave (Bloch) analyzer for the DG advection-diffusion discretization.

For a uniform periodic 1D mesh with spacing h, the nodal DG semi-discrete
operator couples an element only to its neighbors, so the plane-wave ansatz
u^{el+1} = exp(i*kh) u^{el} reduces the scheme to one (N+1)x(N+1) complex
matrix M(kh) per wave-number:

    (h/2) du/dt = M(kh) u,      -i w (h/2) v = M(kh) v.

Each wave-number then carries N+1 temporal frequencies w_m; the real part of
the tracked "physical" mode measures dispersion, the imaginary part
dissipation.  The module assembles M for the advective weak form with the
lambda-penalized interface flux, the BR1 second-derivative operator, and the
spectrally-filtered (modal-kernel) viscosity, and provides the sweep, mode
tracking, and mode-set clustering used by the dissipation studies.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import linear_sum_assignment

from .basis import GAUSS, NodalBasis, SvvKernel, cached_basis, filter_matrix

EIG_CONDITION_LIMIT = 1e12
_SEED_KH = 1e-4
_OVERLAP_AMBIGUITY = 1e-3


class VnConfigError(ValueError):
    """Inconsistent analyzer configuration."""


class VnEigenError(RuntimeError):
    """Eigendecomposition failed or is numerically meaningless.

    Raised when the eigenvector matrix is defective / ill-conditioned.
    Callers must surface this, not mask it.
    """

    def __init__(self, message: str, kh: float):
        super().__init__(message)
        self.kh = kh


@dataclass(frozen=True)
class VnSvv:
    """Filtered-viscosity settings for the analyzer: amplitude and kernel."""

    mu: float
    kernel: SvvKernel

    def __post_init__(self):
        if self.mu < 0:
            raise VnConfigError("filtered viscosity must be >= 0")


@dataclass(frozen=True)
class VnConfig:
    """Analyzer configuration.

    Attributes:
        degree: polynomial degree N.
        family: node family (Gauss by default; the solver-side studies use
            Gauss-Lobatto, and both are supported).
        advection_speed: constant transport speed a (kept at 1).
        spacing: element size h.
        lam: interface-dissipation parameter (0 = central flux, 1 = upwind).
        peclet: Peclet number a*L/mu, or None for the inviscid operator.
        domain_length: reference length L entering the Peclet number.
        svv: optional filtered-viscosity settings.
    """

    degree: int
    family: str = GAUSS
    advection_speed: float = 1.0
    spacing: float = 1.0
    lam: float = 0.0
    peclet: float | None = None
    domain_length: float = 1.0
    svv: VnSvv | None = None

    def __post_init__(self):
        if self.lam < 0:
            raise VnConfigError("lambda must be >= 0")
        if self.peclet is not None and not self.peclet > 0:
            raise VnConfigError("Peclet number must be > 0 (or None)")
        if self.spacing <= 0:
            raise VnConfigError("element spacing must be > 0")
        if self.svv is not None and self.svv.kernel.degree != self.degree:
            raise VnConfigError("kernel degree must match config degree")

    @property
    def basis(self) -> NodalBasis:
        return cached_basis(self.degree, self.family)

    @property
    def viscosity(self) -> float:
        """Physical viscosity a*L/Pe (0 when inviscid)."""
        if self.peclet is None:
            return 0.0
        return self.advection_speed * self.domain_length / self.peclet

    def khat(self, kh: np.ndarray | float):
        return np.asarray(kh) / (self.degree + 1)

    def kh(self, khat: np.ndarray | float):
        return np.asarray(khat) * (self.degree + 1)


@dataclass(frozen=True)
class VnOperator:
    """One assembled plane-wave operator.

    `kh` is the requested (possibly unfolded) wave-number times spacing;
    `kh_bloch` is its canonical representative in (-pi, pi], which fully
    determines the matrix.  The unfolded value matters only for building
    the nodal initial condition in :func:`decompose`.
    """

    kh: float
    kh_bloch: float
    matrix: np.ndarray  # (N+1, N+1) complex


@dataclass(frozen=True)
class ModeDecomposition:
    """Eigenmodes of one plane-wave operator.

    omega holds the N+1 temporal frequencies, vectors the matching unit
    eigenvectors (columns, normalized in the discrete quadrature norm),
    amplitudes the coefficients reproducing the nodal plane wave at t=0.
    `primary` is the index of the mode carrying the physical wave.
    """

    kh: float
    spacing: float
    degree: int
    family: str
    omega: np.ndarray       # (N+1,) complex
    vectors: np.ndarray     # (N+1, N+1) complex, columns are modes
    amplitudes: np.ndarray  # (N+1,) complex
    primary: int

    @property
    def omega_hat(self) -> np.ndarray:
        return self.omega * self.spacing / (self.degree + 1)


def wrap_kh(kh: float) -> float:
    """Map kh to its Bloch representative in (-pi, pi]."""
    wrapped = (kh + np.pi) % (2.0 * np.pi) - np.pi
    if wrapped == -np.pi:
        wrapped = np.pi
    return wrapped


def _central_derivative_batch(cfg: VnConfig, khs: np.ndarray) -> np.ndarray:
    """(h/2)-scaled DG derivative with mean interface values, per kh.

    Returns C(kh) = (h/2) * Dc(kh) where Dc maps nodal values to the nodal
    DG derivative built from interior differentiation plus arithmetic-mean
    interface traces (the lifting used by both stages of the viscous
    discretization).
    """
    b = cfg.basis
    lr, ll, w = b.right, b.left, b.weights
    dtw = b.diff.T * w[None, :]
    pr = np.exp(1j * khs)[:, None]
    pl = np.conj(pr)
    a_right = 0.5 * (lr[None, :] + pr * ll[None, :])   # mean trace at x=+1
    a_left = 0.5 * (pl * lr[None, :] + ll[None, :])    # mean trace at x=-1
    mats = (lr[None, :, None] * a_right[:, None, :]
            - ll[None, :, None] * a_left[:, None, :]
            - dtw[None, :, :])
    return mats / w[None, :, None]


def _assemble_batch(cfg: VnConfig, khs: np.ndarray) -> np.ndarray:
    """Stack of M(kh) matrices for all requested wave-numbers."""
    b = cfg.basis
    a = cfg.advection_speed
    lr, ll, w = b.right, b.left, b.weights
    dtw = b.diff.T * w[None, :]
    khs = np.asarray(khs, dtype=float)
    pr = np.exp(1j * khs)[:, None]
    pl = np.conj(pr)

    # interface flux coefficient rows: f* = a {u} + (lam |a| / 2) (uL - uR)
    c_right = (0.5 * a * (lr[None, :] + pr * ll[None, :])
               - 0.5 * cfg.lam * abs(a) * (pr * ll[None, :] - lr[None, :]))
    c_left = (0.5 * a * (pl * lr[None, :] + ll[None, :])
              - 0.5 * cfg.lam * abs(a) * (ll[None, :] - pl * lr[None, :]))
    mats = (a * dtw[None, :, :]
            - lr[None, :, None] * c_right[:, None, :]
            + ll[None, :, None] * c_left[:, None, :]) / w[None, :, None]

    mu = cfg.viscosity
    mu_svv = cfg.svv.mu if cfg.svv is not None else 0.0
    if mu > 0.0 or mu_svv > 0.0:
        central = _central_derivative_batch(cfg, khs)
        if mu > 0.0:
            mats = mats + (2.0 * mu / cfg.spacing) * (central @ central)
        if mu_svv > 0.0:
            filt = filter_matrix(b, cfg.svv.kernel)
            mats = mats + (2.0 * mu_svv / cfg.spacing) * (
                central @ filt[None, :, :] @ central)
    return mats


def assemble_operator(cfg: VnConfig, kh: float) -> VnOperator:
    """Assemble the plane-wave operator M(kh).

    Accepts unfolded kh (the matrix only depends on kh mod 2*pi); the
    canonical Bloch value is stored alongside.
    """
    matrix = _assemble_batch(cfg, np.array([kh]))[0]
    return VnOperator(kh=float(kh), kh_bloch=wrap_kh(float(kh)), matrix=matrix)


def _plane_wave_samples(cfg: VnConfig, kh: float) -> np.ndarray:
    """Nodal samples of exp(i k x) on the element [0, h]."""
    x = (cfg.basis.nodes + 1.0) * cfg.spacing / 2.0
    return np.exp(1j * (kh / cfg.spacing) * x)


def quadrature_norm(basis: NodalBasis, values: np.ndarray) -> float:
    """Discrete L2 norm, mean-square over the element (|e^{ikx}| -> 1)."""
    return float(np.sqrt(0.5 * np.sum(basis.weights * np.abs(values) ** 2)))


def decompose(op: VnOperator, cfg: VnConfig) -> ModeDecomposition:
    """Eigen-decompose M(kh) and project the plane wave onto the modes.

    Modes are sorted by (Re w, Im w); eigenvectors carry unit quadrature
    norm; amplitudes solve V A = u0 with u0 the nodal plane wave.  When no
    tracking context exists the primary mode is chosen as the one with the
    largest amplitude magnitude (at kh -> 0 this coincides with |w| -> 0).

    Raises:
        VnEigenError: defective or ill-conditioned eigenbasis.
    """
    evals, vecs = np.linalg.eig(op.matrix)
    omega = 2j / cfg.spacing * evals
    order = np.lexsort((omega.imag, omega.real))
    omega, vecs = omega[order], vecs[:, order]

    b = cfg.basis
    norms = np.sqrt(0.5 * np.sum(b.weights[:, None] * np.abs(vecs) ** 2, axis=0))
    if np.any(norms == 0.0):
        raise VnEigenError("zero eigenvector returned", op.kh)
    vecs = vecs / norms[None, :]

    svals = np.linalg.svd(vecs, compute_uv=False)
    if svals[-1] == 0.0 or svals[0] / svals[-1] > EIG_CONDITION_LIMIT:
        raise VnEigenError(
            f"eigenbasis condition {svals[0] / max(svals[-1], 1e-300):.3e} "
            f"exceeds {EIG_CONDITION_LIMIT:.1e} at kh={op.kh:.6g}", op.kh)

    u0 = _plane_wave_samples(cfg, op.kh)
    amps = np.linalg.solve(vecs, u0)
    primary = int(np.argmax(np.abs(amps)))
    return ModeDecomposition(
        kh=op.kh, spacing=cfg.spacing, degree=cfg.degree, family=cfg.family,
        omega=omega, vectors=vecs, amplitudes=amps, primary=primary)


def secondary_mode_error(dec: ModeDecomposition) -> float:
    """Quadrature norm of the non-physical content of the plane wave.

    || sum_{m != p} A_m v_m ||, the time-independent amplitude factor of
    the secondary-mode part of the solution.
    """
    b = cached_basis(dec.degree, dec.family)
    keep = np.arange(dec.omega.size) != dec.primary
    s = dec.vectors[:, keep] @ dec.amplitudes[keep]
    return quadrature_norm(b, s)


def interface_jump(dec: ModeDecomposition) -> complex:
    """Boundary jump carried by the secondary modes.

    Evaluates s(+1) - exp(i kh) s(-1) for s = sum_{m != p} A_m v_m, the
    inter-element trace mismatch left once the physical wave is removed.
    """
    b = cached_basis(dec.degree, dec.family)
    keep = np.arange(dec.omega.size) != dec.primary
    s = dec.vectors[:, keep] @ dec.amplitudes[keep]
    return complex(b.right @ s - np.exp(1j * dec.kh) * (b.left @ s))


def _decompose_batch(cfg: VnConfig, khs: np.ndarray):
    """Batched decompose; returns (omega, vectors, amplitudes, failures).

    Failed wave-numbers get NaN rows instead of aborting the whole sweep.
    """
    n = cfg.degree + 1
    mats = _assemble_batch(cfg, khs)
    evals, vecs = np.linalg.eig(mats)
    omega = 2j / cfg.spacing * evals

    order = np.lexsort((omega.imag, omega.real), axis=-1)
    omega = np.take_along_axis(omega, order, axis=-1)
    vecs = np.take_along_axis(vecs, order[:, None, :], axis=-1)

    w = cfg.basis.weights
    norms = np.sqrt(0.5 * np.sum(w[None, :, None] * np.abs(vecs) ** 2, axis=1))
    vecs = vecs / norms[:, None, :]

    amps = np.full((khs.size, n), np.nan, dtype=complex)
    failures: list[tuple[float, str]] = []
    svals = np.linalg.svd(vecs, compute_uv=False)
    bad = (svals[:, -1] == 0.0) | (svals[:, 0] > EIG_CONDITION_LIMIT * svals[:, -1])
    x = (cfg.basis.nodes + 1.0) * cfg.spacing / 2.0
    u0 = np.exp(1j * np.outer(khs / cfg.spacing, x))
    good = ~bad
    if np.any(good):
        amps[good] = np.linalg.solve(vecs[good], u0[good][..., None])[..., 0]
    for i in np.nonzero(bad)[0]:
        omega[i] = np.nan
        failures.append((float(khs[i]),
                         f"ill-conditioned eigenbasis at kh={khs[i]:.6g}"))
    return omega, vecs, amps, failures


@dataclass
class PrimaryTrack:
    """Primary-mode indices along a wave-number grid.

    `indices` follow eigenvector-overlap continuation seeded at kh ~ 0;
    `amplitude_indices` is the max-|A| cross-check (reported, not used);
    `ambiguous` marks near mode-crossings where the two best overlaps are
    closer than the ambiguity threshold.
    """

    kh: np.ndarray
    indices: np.ndarray
    amplitude_indices: np.ndarray
    ambiguous: np.ndarray


def track_primary(cfg: VnConfig, khat_grid: np.ndarray) -> PrimaryTrack:
    """Track the physical mode across an ascending wave-number grid.

    At the seed point (kh ~ 0, prepended internally when the grid does not
    start there) the primary mode minimizes |w|; afterwards each step picks
    the mode whose eigenvector overlaps the previous primary eigenvector
    the most, measured in the quadrature inner product.
    """
    khat_grid = np.asarray(khat_grid, dtype=float)
    if khat_grid.ndim != 1 or khat_grid.size == 0:
        raise VnConfigError("wave-number grid must be a non-empty 1D array")
    if np.any(np.diff(khat_grid) <= 0):
        raise VnConfigError("wave-number grid must be strictly ascending")
    khs = cfg.kh(khat_grid)
    seeded = khs[0] >= 1e-3
    if seeded:
        khs = np.concatenate([[_SEED_KH], khs])
    omega, vecs, amps, failures = _decompose_batch(cfg, khs)
    if failures:
        raise VnEigenError(failures[0][1], failures[0][0])

    w = cfg.basis.weights
    n_pts = khs.size
    indices = np.empty(n_pts, dtype=int)
    ambiguous = np.zeros(n_pts, dtype=bool)
    indices[0] = int(np.argmin(np.abs(omega[0])))
    prev = vecs[0][:, indices[0]]
    for i in range(1, n_pts):
        overlaps = 0.5 * np.abs(np.conj(prev * w) @ vecs[i])
        top = np.argsort(overlaps)
        indices[i] = int(top[-1])
        if overlaps[top[-1]] - overlaps[top[-2]] < _OVERLAP_AMBIGUITY:
            ambiguous[i] = True
        prev = vecs[i][:, indices[i]]
    amp_idx = np.argmax(np.abs(amps), axis=1)
    if seeded:
        khs, indices = khs[1:], indices[1:]
        ambiguous, amp_idx = ambiguous[1:], amp_idx[1:]
    return PrimaryTrack(kh=khs, indices=indices,
                        amplitude_indices=amp_idx, ambiguous=ambiguous)


@dataclass
class SweepResult:
    """Per-wave-number eigendata with tracked primary flags.

    Arrays are indexed [k, mode]; `secondary_error` and `jump_abs` are
    per-k scalars.  `failures` lists (kh, message) for wave-numbers whose
    decomposition was rejected; their rows hold NaN.
    """

    khat: np.ndarray
    kh: np.ndarray
    omega: np.ndarray
    omega_hat: np.ndarray
    amplitudes: np.ndarray
    primary: np.ndarray
    ambiguous: np.ndarray
    secondary_error: np.ndarray
    jump_abs: np.ndarray
    failures: list = field(default_factory=list)


def default_khat_grid(n_points: int = 256) -> np.ndarray:
    """Uniform non-dimensional wave-numbers in (0, pi]."""
    return np.pi / n_points * np.arange(1, n_points + 1)


def dispersion_dissipation_sweep(cfg: VnConfig,
                                 khat_grid: np.ndarray | None = None,
                                 batcher=None) -> SweepResult:
    """Full eigen-sweep over a wave-number grid.

    Emits raw and scaled frequencies (w and w*h/(N+1)) for every mode,
    the tracked primary flags, and the secondary-mode / interface-jump
    error measures.  Deterministic for a fixed grid; `batcher`, when
    given, replaces the serial eigen-evaluation (signature and return
    layout of :func:`_decompose_batch`) so callers can fan the pure
    per-wave-number work out over workers without changing results.
    """
    if khat_grid is None:
        khat_grid = default_khat_grid()
    khat_grid = np.asarray(khat_grid, dtype=float)
    khs = cfg.kh(khat_grid)
    seeded = khs[0] >= 1e-3
    khs_c = np.concatenate([[_SEED_KH], khs]) if seeded else khs
    omega, vecs, amps, failures = (batcher or _decompose_batch)(cfg, khs_c)

    w = cfg.basis.weights
    lr, ll = cfg.basis.right, cfg.basis.left
    n_pts = khs_c.size
    n = cfg.degree + 1
    indices = np.zeros(n_pts, dtype=int)
    ambiguous = np.zeros(n_pts, dtype=bool)
    sec_err = np.full(n_pts, np.nan)
    jump_abs = np.full(n_pts, np.nan)
    prev = None
    for i in range(n_pts):
        if np.any(np.isnan(omega[i])):
            prev = None
            continue
        if prev is None:
            indices[i] = int(np.argmin(np.abs(omega[i])))
        else:
            overlaps = 0.5 * np.abs(np.conj(prev * w) @ vecs[i])
            top = np.argsort(overlaps)
            indices[i] = int(top[-1])
            ambiguous[i] = overlaps[top[-1]] - overlaps[top[-2]] < _OVERLAP_AMBIGUITY
        prev = vecs[i][:, indices[i]]
        keep = np.arange(n) != indices[i]
        s = vecs[i][:, keep] @ amps[i][keep]
        sec_err[i] = np.sqrt(0.5 * np.sum(w * np.abs(s) ** 2))
        jump_abs[i] = np.abs(lr @ s - np.exp(1j * khs_c[i]) * (ll @ s))

    if seeded:
        sl = slice(1, None)
        omega, amps = omega[sl], amps[sl]
        indices, ambiguous = indices[sl], ambiguous[sl]
        sec_err, jump_abs = sec_err[sl], jump_abs[sl]
    return SweepResult(
        khat=khat_grid, kh=khs, omega=omega,
        omega_hat=omega * cfg.spacing / (cfg.degree + 1),
        amplitudes=amps, primary=indices, ambiguous=ambiguous,
        secondary_error=sec_err, jump_abs=jump_abs, failures=failures)


def write_sweep_csv(path, sweep: SweepResult) -> None:
    """Write the canonical 8-column sweep table (full double precision)."""
    with open(path, "w", newline="") as fh:
        out = csv.writer(fh)
        out.writerow(["k_hat", "mode_index", "re_omega_hat", "im_omega_hat",
                      "is_primary", "amp_abs", "secondary_error", "jump_abs"])
        for i, khat in enumerate(sweep.khat):
            for m in range(sweep.omega.shape[1]):
                out.writerow([
                    f"{khat:.17g}", m,
                    f"{sweep.omega_hat[i, m].real:.17g}",
                    f"{sweep.omega_hat[i, m].imag:.17g}",
                    int(m == sweep.primary[i]),
                    f"{np.abs(sweep.amplitudes[i, m]):.17g}",
                    f"{sweep.secondary_error[i]:.17g}",
                    f"{sweep.jump_abs[i]:.17g}",
                ])


# --- mode-set clustering along the interface-dissipation parameter ---------

CLUSTER_GAP = 0.10          # relative gap separating mode sets
_PENALTY_GAP = 0.5          # gap above which a singleton top set is unbounded
_AMBIGUOUS_BAND = (0.5, 2.0)  # gap/threshold ratios flagged as borderline


def _branch_max_dissipation(cfg: VnConfig, lam: float,
                            khat_grid: np.ndarray) -> np.ndarray:
    """Per-eigenbranch max |Im w_hat|, branches matched by eigenvector
    overlap between consecutive wave-numbers.

    The grid is mirrored to negative wave-numbers so every branch covers
    its full orbit: modes of one set are k-translates of each other, and
    a one-sided sweep would truncate their orbits at different phases and
    produce spurious set splits.
    """
    cfg_l = VnConfig(degree=cfg.degree, family=cfg.family,
                     advection_speed=cfg.advection_speed, spacing=cfg.spacing,
                     lam=lam, peclet=cfg.peclet,
                     domain_length=cfg.domain_length, svv=cfg.svv)
    khat_grid = np.asarray(khat_grid, dtype=float)
    if khat_grid[0] > 0:
        khat_grid = np.concatenate([-khat_grid[::-1], khat_grid])
    khs = cfg_l.kh(khat_grid)
    omega, vecs, _, failures = _decompose_batch(cfg_l, khs)
    if failures:
        raise VnEigenError(failures[0][1], failures[0][0])
    w = cfg_l.basis.weights
    n = cfg.degree + 1
    perm = np.arange(n)
    best = np.abs(omega[0].imag) * cfg.spacing / (cfg.degree + 1)
    best = best[perm].copy()
    prev_vecs = vecs[0]
    for i in range(1, khs.size):
        cost = -np.abs(0.5 * (np.conj(prev_vecs * w[:, None]).T @ vecs[i]))
        rows, cols = linear_sum_assignment(cost)
        mapping = np.empty(n, dtype=int)
        mapping[rows] = cols
        perm = mapping[perm]
        im_hat = np.abs(omega[i].imag) * cfg.spacing / (cfg.degree + 1)
        best = np.maximum(best, im_hat[perm])
        prev_vecs = vecs[i]
    return np.sort(best)


def _cluster(values: np.ndarray, gap: float = CLUSTER_GAP):
    """Group sorted non-negative values by relative gaps.

    Returns (group maxima ascending, group sizes, ambiguity flag).
    """
    values = np.sort(np.asarray(values, dtype=float))
    floor = max(values[-1] * 1e-9, 1e-12)
    maxima, sizes = [], []
    ambiguous = False
    start = 0
    for i in range(values.size - 1):
        rel = (values[i + 1] - values[i]) / max(values[i + 1], floor)
        if _AMBIGUOUS_BAND[0] * gap < rel < _AMBIGUOUS_BAND[1] * gap:
            ambiguous = True
        if rel > gap:
            maxima.append(values[i])
            sizes.append(i + 1 - start)
            start = i + 1
    maxima.append(values[-1])
    sizes.append(values.size - start)
    return np.array(maxima), np.array(sizes), ambiguous


@dataclass
class LambdaScanPoint:
    """Mode-set structure at one lambda."""

    lam: float
    branch_maxima: np.ndarray   # per-branch max |Im w_hat|, ascending
    group_maxima: np.ndarray    # per-set maxima, ascending
    group_sizes: np.ndarray
    ambiguous: bool

    @property
    def n_groups(self) -> int:
        return self.group_maxima.size

    @property
    def bounded_max(self) -> float:
        """Largest set maximum, excluding a clearly separated singleton
        top set (the jump-penalty mode that grows without bound)."""
        gm, gs = self.group_maxima, self.group_sizes
        if gm.size >= 2 and gs[-1] == 1:
            if (gm[-1] - gm[-2]) / gm[-1] > _PENALTY_GAP:
                return float(gm[-2])
        return float(gm[-1])


@dataclass
class LambdaScan:
    """Mode-set dissipation structure along a lambda grid.

    `events` holds (lambda, "merge"|"split") transitions of the set count,
    located at midpoints of consecutive grid values.  Points where every
    branch is dissipation-free (lambda = 0) carry no defined grouping and
    do not generate events.
    """

    points: list
    events: list

    def point_at(self, lam: float) -> LambdaScanPoint:
        lams = np.array([p.lam for p in self.points])
        return self.points[int(np.argmin(np.abs(lams - lam)))]


def max_dissipation_vs_lambda(cfg: VnConfig, lambda_grid: np.ndarray,
                              khat_grid: np.ndarray | None = None) -> LambdaScan:
    """Cluster per-mode peak dissipation into sets for each lambda.

    Branches are tracked over the wave-number grid, their peak |Im w_hat|
    values are clustered by relative gaps, and merge/split events are read
    off the change of the set count along ascending lambda.
    """
    if khat_grid is None:
        khat_grid = default_khat_grid()
    lambda_grid = np.asarray(lambda_grid, dtype=float)
    if np.any(lambda_grid < 0):
        raise VnConfigError("lambda grid must be >= 0")
    points = []
    for lam in lambda_grid:
        branch = _branch_max_dissipation(cfg, float(lam), khat_grid)
        gm, gs, amb = _cluster(branch)
        points.append(LambdaScanPoint(lam=float(lam), branch_maxima=branch,
                                      group_maxima=gm, group_sizes=gs,
                                      ambiguous=amb))
    events = []
    prev = None
    for pt in points:
        defined = pt.branch_maxima[-1] > 1e-12
        if prev is not None and defined:
            if pt.n_groups < prev.n_groups:
                events.append((0.5 * (prev.lam + pt.lam), "merge"))
            elif pt.n_groups > prev.n_groups:
                events.append((0.5 * (prev.lam + pt.lam), "split"))
        prev = pt if defined else None
    return LambdaScan(points=points, events=events)
