"""P1 finite elements for the 1D Helmholtz operator.

Weak form on the stretched coordinate, with homogeneous Dirichlet walls:

    S[u, v] = int (1/s) u' v' dx          (gradient / stiffness part)
    M[u, v] = int eps_r s u v dx          (value / mass part)
    L = S - k^2 M

Both matrices are complex symmetric (not Hermitian) tridiagonal; this
symmetry, not any Hermiticity, is what the operator identities in
``identities`` rely on, so nothing here may conjugate matrix entries.
Element integrals use a fixed 4-point Gauss-Legendre rule, which is exact
for the polynomial stretch profiles and the P1 products appearing here.
The consistent mass matrix is kept as-is (no lumping or blending): on a
uniform vacuum mesh the rows are 2/h, -1/h and 2h/3, h/6.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.linalg import get_lapack_funcs

from .medium import MediumSpec
from .mesh import Mesh1D

GAUSS_NODES, GAUSS_WEIGHTS = np.polynomial.legendre.leggauss(4)
_SHAPE_LO = 0.5 * (1.0 - GAUSS_NODES)  # hat falling across the element
_SHAPE_HI = 0.5 * (1.0 + GAUSS_NODES)  # hat rising across the element


class SingularOperatorError(RuntimeError):
    """Raised when L = S - k^2 M is (numerically) singular at this k."""


def lattice_wavenumber(k: float, h: float) -> float:
    """Wavenumber of the discrete vacuum plane wave on a uniform P1 mesh.

    The interior stencil of S - k^2 M annihilates e^{i kt j h} when

        cos(kt h) = (1 - (kh)^2/3) / (1 + (kh)^2/6),

    i.e. the mesh carries waves at kt = k (1 - (kh)^2/24 + ...) rather than
    at k itself. Wave-amplitude extraction has to use kt, otherwise the
    extracted coefficients pick up a spurious phase k(kt/k - 1) x_probe that
    grows with the probe distance and swamps the actual discretization error.
    """
    z = k * h
    c = (1.0 - z**2 / 3.0) / (1.0 + z**2 / 6.0)
    if abs(c) >= 1.0:
        raise ValueError(
            f"no propagating lattice wave at k = {k} with spacing h = {h}"
        )
    return float(np.arccos(c) / h)


@dataclass(frozen=True)
class SystemMatrices:
    """Assembled tridiagonal bands over all nodes, walls included.

    ``s_diag/s_off`` and ``m_diag/m_off`` are the stiffness and mass bands;
    ``off[i]`` couples node i to node i+1. Interior (Dirichlet-reduced)
    views are provided for the solver and the identity checks.
    """

    mesh: Mesh1D
    k: float
    s_diag: np.ndarray
    s_off: np.ndarray
    m_diag: np.ndarray
    m_off: np.ndarray

    @property
    def n_interior(self) -> int:
        return self.mesh.n_interior

    def interior_bands(self, diag, off):
        return diag[1:-1], off[1:-1]

    def stiffness_interior(self):
        return self.interior_bands(self.s_diag, self.s_off)

    def mass_interior(self):
        return self.interior_bands(self.m_diag, self.m_off)

    def operator_interior(self):
        """Bands of L = S - k^2 M on the interior nodes."""
        k2 = self.k**2
        return (
            (self.s_diag - k2 * self.m_diag)[1:-1],
            (self.s_off - k2 * self.m_off)[1:-1],
        )


def assemble(mesh: Mesh1D, medium: MediumSpec, k: float) -> SystemMatrices:
    """Assemble stiffness and mass bands for wavenumber k.

    Parameters
    ----------
    mesh : Mesh1D
    medium : MediumSpec
        Supplies eps_r(x, k); evaluated at the quadrature points, so the
        slab faces (which are always mesh nodes) split elements cleanly.
    k : float
        Wavenumber; enters through the stretch profile and eps_r dispersion.

    Returns
    -------
    SystemMatrices
    """
    if k <= 0:
        raise ValueError(f"k must be > 0, got {k}")
    h = mesh.element_lengths
    xg = mesh.element_midpoints[:, None] + 0.5 * h[:, None] * GAUSS_NODES
    sg = mesh.stretch_factor(xg, k)
    eg = medium.relative_permittivity(xg, k)

    # stiffness: hat slopes are constant +-1/h, so the element matrix is
    # k_e * [[1, -1], [-1, 1]] with k_e = (1/2h) sum w/s
    k_e = np.sum(GAUSS_WEIGHTS / sg, axis=1) / (2.0 * h)
    # mass: (h/2) sum w eps s N_a N_b
    common = eg * sg * GAUSS_WEIGHTS * (0.5 * h[:, None])
    m_lo = np.sum(common * _SHAPE_LO**2, axis=1)
    m_hi = np.sum(common * _SHAPE_HI**2, axis=1)
    m_x = np.sum(common * _SHAPE_LO * _SHAPE_HI, axis=1)

    n = mesh.n_nodes
    s_diag = np.zeros(n, dtype=complex)
    m_diag = np.zeros(n, dtype=complex)
    s_diag[:-1] += k_e
    s_diag[1:] += k_e
    m_diag[:-1] += m_lo
    m_diag[1:] += m_hi
    return SystemMatrices(
        mesh=mesh, k=float(k),
        s_diag=s_diag, s_off=-k_e,
        m_diag=m_diag, m_off=m_x,
    )


class Factorization:
    """LU factors of the interior operator, reusable across right-hand sides."""

    def __init__(self, system: SystemMatrices):
        self.system = system
        self.mesh = system.mesh
        self.k = system.k
        diag, off = system.operator_interior()
        scale = max(np.abs(diag).max(), np.abs(off).max())
        gttrf, gttrs = get_lapack_funcs(("gttrf", "gttrs"), (diag,))
        dl, d, du, du2, ipiv, info = gttrf(off.copy(), diag.copy(), off.copy())
        if info > 0 or np.abs(d).min() < 1e-14 * scale:
            raise SingularOperatorError(
                f"operator is singular at k = {system.k}: "
                "the frequency coincides with a discrete resonance"
            )
        if info < 0:
            raise RuntimeError(f"gttrf failed with info = {info}")
        self._factors = (dl, d, du, du2, ipiv)
        self._gttrs = gttrs

    def solve(self, rhs_interior: np.ndarray) -> np.ndarray:
        """Solve L u = rhs on the interior; returns all-node dofs (walls 0)."""
        rhs = np.ascontiguousarray(rhs_interior, dtype=complex)
        if rhs.shape != (self.system.n_interior,):
            raise ValueError(
                f"rhs must have shape ({self.system.n_interior},), "
                f"got {rhs.shape}"
            )
        dl, d, du, du2, ipiv = self._factors
        x, info = self._gttrs(dl, d, du, du2, ipiv, rhs)
        if info != 0:
            raise RuntimeError(f"gttrs failed with info = {info}")
        dofs = np.zeros(self.mesh.n_nodes, dtype=complex)
        dofs[1:-1] = x
        return dofs


def factorize(system: SystemMatrices) -> Factorization:
    return Factorization(system)


def evaluate_field(mesh: Mesh1D, dofs: np.ndarray, x):
    """P1 interpolation of nodal values at arbitrary points inside the mesh."""
    x = np.asarray(x, dtype=float)
    if np.any(x < mesh.nodes[0]) or np.any(x > mesh.nodes[-1]):
        raise ValueError("evaluation point outside the mesh")
    out = np.interp(x, mesh.nodes, dofs.real) + 1j * np.interp(
        x, mesh.nodes, dofs.imag
    )
    return out if out.ndim else complex(out)


@dataclass(frozen=True)
class FieldSolution:
    """Nodal solution plus the mesh needed to evaluate it anywhere."""

    mesh: Mesh1D
    k: float
    dofs: np.ndarray

    def __call__(self, x):
        return evaluate_field(self.mesh, self.dofs, x)

    def at_node(self, index: int) -> complex:
        return complex(self.dofs[index])
