"""Numerical-dissipation laboratory for high-order discontinuous Galerkin methods.

Two halves:

* a 1D plane-wave (Bloch) analyzer for the DG discretization of
  advection-diffusion, quantifying dispersion/dissipation of interface
  penalties, viscous terms, and spectrally-filtered viscosity;
* a 3D compressible Navier-Stokes solver on periodic Cartesian meshes with
  split-form volume terms, adjustable Roe interface dissipation, and
  Smagorinsky / filtered-viscosity subgrid models, instrumented for the
  Taylor-Green vortex benchmark.
"""

__version__ = "0.1.0"
