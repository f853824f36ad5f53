"""Reference-element machinery shared by the 1D analyzer and the 3D solver.

Provides quadrature node families (Gauss, Gauss-Lobatto), Lagrange
differentiation, nodal<->modal (Legendre) transforms, and the modal
viscosity kernels used for spectral filtering.  Everything lives on the
reference interval [-1, 1]; physical scaling is the caller's business.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np

GAUSS = "gauss"
GAUSS_LOBATTO = "gauss-lobatto"
NODE_FAMILIES = (GAUSS, GAUSS_LOBATTO)

POWER = "power"
EXPONENTIAL = "exponential"

_NEWTON_TOL = 1e-14
_MAX_DEGREE = 20


class BasisError(ValueError):
    """Invalid construction request for reference-element machinery."""


def legendre(n: int, x: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Evaluate P_n and its derivative by the three-term recurrence.

    Returns (P_n(x), P_n'(x)); works on scalars or arrays.
    """
    x = np.asarray(x, dtype=float)
    p_prev = np.ones_like(x)
    if n == 0:
        return p_prev, np.zeros_like(x)
    p = x.copy()
    for k in range(1, n):
        p, p_prev = ((2 * k + 1) * x * p - k * p_prev) / (k + 1), p
    # derivative from the standard identity (1-x^2) P_n' = n (P_{n-1} - x P_n)
    with np.errstate(divide="ignore", invalid="ignore"):
        dp = n * (p_prev - x * p) / (1.0 - x * x)
    endpoint = np.abs(np.abs(x) - 1.0) < 1e-13
    if np.any(endpoint):
        dp = np.where(endpoint, np.sign(x) ** (n + 1) * n * (n + 1) / 2.0, dp)
    return p, dp


def gauss_nodes(degree: int) -> tuple[np.ndarray, np.ndarray]:
    """Gauss-Legendre nodes/weights for a degree-`degree` nodal basis.

    The degree+1 nodes are the roots of P_{degree+1}; quadrature is exact
    for polynomials up to degree 2*degree + 1.
    """
    n = degree + 1
    j = np.arange(1, n + 1)
    x = np.cos(np.pi * (4 * j - 1) / (4 * n + 2))  # Chebyshev-like estimate
    for _ in range(100):
        p, dp = legendre(n, x)
        dx = -p / dp
        x = x + dx
        if np.max(np.abs(dx)) < _NEWTON_TOL:
            break
    _, dp = legendre(n, x)
    w = 2.0 / ((1.0 - x * x) * dp * dp)
    order = np.argsort(x)
    return x[order], w[order]


def gauss_lobatto_nodes(degree: int) -> tuple[np.ndarray, np.ndarray]:
    """Gauss-Lobatto nodes/weights: endpoints plus roots of P_degree'.

    Quadrature is exact for polynomials up to degree 2*degree - 1.
    """
    n = degree
    if n < 1:
        raise BasisError("Gauss-Lobatto requires degree >= 1")
    x = np.zeros(n + 1)
    x[0], x[-1] = -1.0, 1.0
    if n > 1:
        # interior nodes: roots of P_n', seeded from Chebyshev-Lobatto points
        xi = np.cos(np.pi * np.arange(1, n) / n)
        for _ in range(100):
            p, dp = legendre(n, xi)
            # Newton on q = P_n'; q' from the Legendre ODE:
            # (1-x^2) P_n'' = 2 x P_n' - n(n+1) P_n
            d2p = (2.0 * xi * dp - n * (n + 1) * p) / (1.0 - xi * xi)
            dx = -dp / d2p
            xi = xi + dx
            if np.max(np.abs(dx)) < _NEWTON_TOL:
                break
        x[1:-1] = np.sort(xi)
    p, _ = legendre(n, x)
    w = 2.0 / (n * (n + 1) * p * p)
    return x, w


def barycentric_weights(nodes: np.ndarray) -> np.ndarray:
    diff = nodes[:, None] - nodes[None, :]
    np.fill_diagonal(diff, 1.0)
    return 1.0 / np.prod(diff, axis=1)


def lagrange_interpolation_row(nodes: np.ndarray, x: float) -> np.ndarray:
    """Weights r such that r @ f_nodes interpolates f at x (barycentric)."""
    bw = barycentric_weights(nodes)
    dist = x - nodes
    exact = np.abs(dist) < 1e-14
    if np.any(exact):
        row = np.zeros_like(nodes)
        row[np.argmax(exact)] = 1.0
        return row
    row = bw / dist
    return row / np.sum(row)


def differentiation_matrix(nodes: np.ndarray) -> np.ndarray:
    """Lagrange differentiation matrix with negative-sum diagonal.

    The diagonal D_ii = -sum_{j != i} D_ij makes D annihilate constants
    exactly in floating point, which the split-form volume terms rely on.
    """
    bw = barycentric_weights(nodes)
    diff = nodes[:, None] - nodes[None, :]
    np.fill_diagonal(diff, 1.0)
    d = (bw[None, :] / bw[:, None]) / diff
    np.fill_diagonal(d, 0.0)
    np.fill_diagonal(d, -np.sum(d, axis=1))
    return d


@dataclass(frozen=True)
class NodalBasis:
    """Nodal basis of one reference element.

    Attributes:
        degree: polynomial degree N (N+1 nodes).
        family: node family, one of ``NODE_FAMILIES``.
        nodes: quadrature/interpolation nodes in [-1, 1], ascending.
        weights: positive quadrature weights (sum to 2).
        diff: (N+1)x(N+1) differentiation matrix.
        left, right: interpolation weights at x = -1 and x = +1.
        vandermonde: nodal values of the orthonormal Legendre modes,
            V[i, k] = phi_k(x_i); maps modal -> nodal coefficients.
        inverse_vandermonde: nodal -> modal transform, Vinv @ V = I.
    """

    degree: int
    family: str
    nodes: np.ndarray
    weights: np.ndarray
    diff: np.ndarray
    left: np.ndarray
    right: np.ndarray
    vandermonde: np.ndarray
    inverse_vandermonde: np.ndarray

    @property
    def n_nodes(self) -> int:
        return self.degree + 1

    def interpolation_matrix(self, points: np.ndarray) -> np.ndarray:
        """Rows of Lagrange weights evaluating nodal data at `points`."""
        return np.array([lagrange_interpolation_row(self.nodes, float(x))
                         for x in np.atleast_1d(points)])


def _orthonormal_vandermonde(nodes: np.ndarray, degree: int) -> np.ndarray:
    v = np.empty((nodes.size, degree + 1))
    for k in range(degree + 1):
        pk, _ = legendre(k, nodes)
        v[:, k] = np.sqrt((2 * k + 1) / 2.0) * pk
    return v


def build_basis(degree: int, family: str = GAUSS_LOBATTO) -> NodalBasis:
    """Construct the full reference-element operator set.

    Raises:
        BasisError: for degree < 0, unknown family, Gauss-Lobatto with
            degree 0, or degree beyond the supported Newton range.
    """
    if degree < 0:
        raise BasisError(f"polynomial degree must be >= 0, got {degree}")
    if degree > _MAX_DEGREE:
        raise BasisError(f"degree {degree} beyond supported range {_MAX_DEGREE}")
    if family not in NODE_FAMILIES:
        raise BasisError(f"unknown node family {family!r}")
    if family == GAUSS:
        nodes, weights = gauss_nodes(degree)
    else:
        if degree == 0:
            raise BasisError("Gauss-Lobatto needs at least degree 1")
        nodes, weights = gauss_lobatto_nodes(degree)

    v = _orthonormal_vandermonde(nodes, degree)
    if family == GAUSS:
        # quadrature is exact at degree 2N, so Vinv follows from orthonormality
        vinv = v.T * weights[None, :]
    else:
        # Lobatto quadrature is inexact for the top mode; invert explicitly
        vinv = np.linalg.inv(v)

    return NodalBasis(
        degree=degree,
        family=family,
        nodes=nodes,
        weights=weights,
        diff=differentiation_matrix(nodes),
        left=lagrange_interpolation_row(nodes, -1.0),
        right=lagrange_interpolation_row(nodes, 1.0),
        vandermonde=v,
        inverse_vandermonde=vinv,
    )


@lru_cache(maxsize=64)
def cached_basis(degree: int, family: str = GAUSS_LOBATTO) -> NodalBasis:
    return build_basis(degree, family)


@dataclass(frozen=True)
class SvvKernel:
    """Diagonal modal viscosity kernel Q(k), k = 0..N.

    family: ``POWER`` with exponent `power`, or ``EXPONENTIAL`` with mode
    cut-off `cutoff`.  Entries lie in [0, 1] and never decrease with k.
    """

    family: str
    q: np.ndarray
    power: float | None = None
    cutoff: int | None = None

    @property
    def degree(self) -> int:
        return self.q.size - 1


def svv_kernel(degree: int, family: str = POWER, *, power: float | None = None,
               cutoff: int | None = None) -> SvvKernel:
    """Build a modal viscosity kernel.

    Power family: Q(k) = (k/N)^p.  The k = 0 entry is 0 for p > 0; for
    p = 0 the kernel is identically 1 so the plain viscous operator is
    recovered exactly.  Exponential family: Q(k) = 0 for k <= cutoff and
    exp(-(k-N)^2/(k-cutoff)^2) above it (decaying exponent; see README).

    Raises:
        BasisError: power kernel with degree 0, negative power, or a
            cutoff outside [0, N).
    """
    if family == POWER:
        if power is None:
            raise BasisError("power kernel requires the exponent")
        if power < 0:
            raise BasisError("kernel power must be >= 0")
        if degree == 0:
            raise BasisError("power kernel undefined for degree 0 (k/N)")
        k = np.arange(degree + 1, dtype=float)
        if power == 0:
            q = np.ones(degree + 1)
        else:
            q = (k / degree) ** power
        return SvvKernel(family=POWER, q=q, power=float(power))
    if family == EXPONENTIAL:
        if cutoff is None:
            raise BasisError("exponential kernel requires the cut-off mode")
        if not 0 <= cutoff < degree:
            raise BasisError(f"cut-off {cutoff} outside [0, {degree})")
        k = np.arange(degree + 1, dtype=float)
        q = np.zeros(degree + 1)
        above = k > cutoff
        q[above] = np.exp(-((k[above] - degree) ** 2) / (k[above] - cutoff) ** 2)
        return SvvKernel(family=EXPONENTIAL, q=q, cutoff=int(cutoff))
    raise BasisError(f"unknown kernel family {family!r}")


def filter_matrix(basis: NodalBasis, kernel: SvvKernel) -> np.ndarray:
    """Nodal representation V diag(Q) Vinv of the modal convolution."""
    if kernel.degree != basis.degree:
        raise BasisError(
            f"kernel degree {kernel.degree} != basis degree {basis.degree}")
    return (basis.vandermonde * kernel.q[None, :]) @ basis.inverse_vandermonde


def apply_modal_filter(basis: NodalBasis, kernel: SvvKernel,
                       nodal: np.ndarray) -> np.ndarray:
    """Apply the modal kernel to a nodal vector (last axis = nodes)."""
    nodal = np.asarray(nodal)
    if nodal.shape[-1] != basis.n_nodes:
        raise BasisError(
            f"nodal data has {nodal.shape[-1]} entries, basis has {basis.n_nodes}")
    return nodal @ filter_matrix(basis, kernel).T
