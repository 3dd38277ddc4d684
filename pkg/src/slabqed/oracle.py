"""Closed-form transfer-matrix reference for the single slab.

Independent cross-check route: everything here is built from the analytic
plane-wave solution of ``Phi'' + k^2 eps_r(x) Phi = 0`` for a homogeneous slab
in vacuum, with no code shared with the finite-element modules. The FEM path
is validated against these functions, so resist the temptation to "unify"
them.

Conventions (same normalized units as the rest of the package):

* slab occupies [-a, +a] with a = medium.slab_half_length
* the incident wave has unit amplitude and absolute phase (e^{ikx} for
  direction +1); internally the total field left of the slab is
  ``e^{ikx} + r_abs e^{-ikx}`` and right of it ``t_abs e^{ikx}``
* reported r/t use the face (de-embedded port) convention the scattering
  module documents, so an empty slab gives (0, 1)
* interior amplitudes are referenced to the face each wave launches from,
  which keeps every matrix entry O(1) even when the slab is opaque
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .medium import MediumSpec


def slab_wavenumber(medium: MediumSpec, omega: float) -> complex:
    """Wavenumber inside the slab, k_s = k sqrt(1 + chi), with Im k_s >= 0.

    numpy's principal square root already lands in the upper half plane for
    passive chi (Im chi >= 0) and picks +i|k_s| below a lossless cutoff, so
    the decaying branch comes out without case analysis.
    """
    return omega * np.sqrt(1.0 + medium.susceptibility(omega))


@dataclass(frozen=True)
class SlabScattering:
    """Plane-wave solution for unit incidence from the left."""

    omega: float
    k_slab: complex
    half_length: float
    r: complex  # reflection, absolute phase at x = 0
    t: complex  # transmission, absolute phase at x = 0
    amp_left: complex  # interior wave launched at the left face, e^{+ik_s(x+a)}
    amp_right: complex  # interior wave launched at the right face, e^{-ik_s(x-a)}


def plane_wave_coefficients(medium: MediumSpec, omega: float) -> SlabScattering:
    """Solve the two-interface matching problem for incidence from the left.

    Sets up the 4x4 linear system for (r, C, D, t) where the slab interior is
    ``C e^{ik_s(x+a)} + D e^{-ik_s(x-a)}``. With the face-referenced C and D
    the matrix entries are bounded by max(1, |k_s|/k), so the solve stays
    well conditioned even deep in the opaque regime where e^{ik_s L} underflows.
    """
    if omega <= 0:
        raise ValueError(f"omega must be > 0, got {omega}")
    k = float(omega)
    a = medium.slab_half_length
    ks = slab_wavenumber(medium, omega)
    phase = np.exp(1j * k * a)
    prop = np.exp(1j * ks * medium.slab_length)  # |prop| <= 1 for passive media

    mat = np.array(
        [
            [phase, -1.0, -prop, 0.0],
            [-k * phase, -ks, ks * prop, 0.0],
            [0.0, prop, 1.0, -phase],
            [0.0, ks * prop, -ks, -k * phase],
        ],
        dtype=complex,
    )
    rhs = np.array([-1.0 / phase, -k / phase, 0.0, 0.0], dtype=complex)
    r, c, d, t = np.linalg.solve(mat, rhs)
    return SlabScattering(
        omega=k, k_slab=ks, half_length=a, r=r, t=t, amp_left=c, amp_right=d
    )


def tmm_reflection_transmission(
    medium: MediumSpec, omega: float, direction: int = +1
) -> tuple[complex, complex]:
    """(r, t) in the face (de-embedded port) convention.

    r = reflected/incident amplitude at the illuminated face, t =
    transmitted/incident at the exit face; an empty slab gives (0, 1).
    The slab is mirror symmetric, so both directions return the same pair;
    the argument exists for interface parity with the FEM extraction.
    """
    if direction not in (+1, -1):
        raise ValueError(f"direction must be +1 or -1, got {direction}")
    sol = plane_wave_coefficients(medium, omega)
    shift = np.exp(2j * omega * medium.slab_half_length)
    return sol.r * shift, sol.t


def tmm_total_field(medium: MediumSpec, omega: float, direction: int, x):
    """Total field of a unit plane wave hitting the slab.

    direction +1 means incidence from the left (e^{+ikx}), -1 from the right.
    The slab is symmetric about x = 0, so the -1 solution is the +1 solution
    evaluated at -x. Accepts scalar or array x.
    """
    if direction not in (+1, -1):
        raise ValueError(f"direction must be +1 or -1, got {direction}")
    sol = plane_wave_coefficients(medium, omega)
    x = np.asarray(x, dtype=float)
    if direction == -1:
        x = -x
    k, ks, a = sol.omega, sol.k_slab, sol.half_length

    out = np.empty(x.shape, dtype=complex)
    left = x < -a
    right = x > a
    inside = ~(left | right)
    out[left] = np.exp(1j * k * x[left]) + sol.r * np.exp(-1j * k * x[left])
    out[inside] = sol.amp_left * np.exp(1j * ks * (x[inside] + a)) + \
        sol.amp_right * np.exp(-1j * ks * (x[inside] - a))
    out[right] = sol.t * np.exp(1j * k * x[right])
    return out if out.ndim else complex(out)


def _outgoing_pair(medium: MediumSpec, omega: float):
    """Homogeneous solutions u_left, u_right used to build the Green function.

    u_left is purely left-going (e^{-ikx}) for x < -a; u_right is purely
    right-going (e^{+ikx}) for x > a. Each is continued through the slab by
    matching value and derivative at the faces. Returns (u_left, u_right,
    wronskian) where the u's are vectorized piecewise evaluators.
    """
    k = float(omega)
    a = medium.slab_half_length
    ks = slab_wavenumber(medium, omega)
    phase = np.exp(1j * k * a)
    prop = np.exp(1j * ks * medium.slab_length)

    # u_right: e^{ikx} in x > a, continued leftward.
    cr = (ks + k) / (2.0 * ks) * phase / prop
    dr = (ks - k) / (2.0 * ks) * phase
    val = cr + dr * prop  # u_right(-a)
    der = (ks / k) * (cr - dr * prop)  # u_right'(-a) / (ik)
    ar = 0.5 * phase * (val + der)
    br = 0.5 * (val - der) / phase

    # u_left: e^{-ikx} in x < -a, continued rightward. Mirror of u_right.
    cl = (ks - k) / (2.0 * ks) * phase
    dl = (ks + k) / (2.0 * ks) * phase / prop
    val = cl * prop + dl  # u_left(+a)
    der = (ks / k) * (cl * prop - dl)  # u_left'(+a) / (ik)
    al = 0.5 * (val + der) / phase
    bl = 0.5 * phase * (val - der)

    # Wronskian u_L u_R' - u_L' u_R, constant in x; in the right vacuum region
    # it collapses to 2ik b_left (and to 2ik a_right on the left, a theorem
    # the tests check).
    wronskian = 2j * k * bl

    def u_left(x):
        x = np.asarray(x, dtype=float)
        out = np.empty(x.shape, dtype=complex)
        lt, gt = x < -a, x > a
        mid = ~(lt | gt)
        out[lt] = np.exp(-1j * k * x[lt])
        out[mid] = cl * np.exp(1j * ks * (x[mid] + a)) + \
            dl * np.exp(-1j * ks * (x[mid] - a))
        out[gt] = al * np.exp(1j * k * x[gt]) + bl * np.exp(-1j * k * x[gt])
        return out

    def u_right(x):
        x = np.asarray(x, dtype=float)
        out = np.empty(x.shape, dtype=complex)
        lt, gt = x < -a, x > a
        mid = ~(lt | gt)
        out[gt] = np.exp(1j * k * x[gt])
        out[mid] = cr * np.exp(1j * ks * (x[mid] + a)) + \
            dr * np.exp(-1j * ks * (x[mid] - a))
        out[lt] = ar * np.exp(1j * k * x[lt]) + br * np.exp(-1j * k * x[lt])
        return out

    return u_left, u_right, wronskian, (al, ar, bl, br)


def tmm_green(medium: MediumSpec, omega: float, x, x_src):
    """Outgoing Green function of Phi'' + k^2 eps_r Phi = -delta(x - x_src).

    G(x, x') = -u_L(x_<) u_R(x_>) / W with W the (constant) Wronskian of the
    two outgoing solutions. Symmetric in (x, x_src) by construction; reduces
    to (i/2k) e^{ik|x - x'|} in vacuum. Accepts scalar or array x.
    """
    u_left, u_right, wronskian, _ = _outgoing_pair(medium, omega)
    x = np.asarray(x, dtype=float)
    lo = np.minimum(x, x_src)
    hi = np.maximum(x, x_src)
    g = -u_left(lo) * u_right(hi) / wronskian
    return g if g.ndim else complex(g)
