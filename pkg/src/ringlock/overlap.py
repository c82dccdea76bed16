"""Third-order nonlinear overlap integrals on cylindrical mode-field grids.

The four-wave-mixing coefficient of a ring waveguide follows from two
overlap integrals of the mode field over the silicon core.  In rectangular
coordinates, with a single (degenerate) mode solution used for pump, signal
and idler, the integrands are

    a = |E_x|^4 + |E_y|^4 + |E_z|^4
    b = E_x*^2 (E_y^2 + E_z^2) + E_y*^2 (E_x^2 + E_z^2) + E_z*^2 (E_x^2 + E_y^2)
        + 4 (|E_x|^2 |E_y|^2 + |E_x|^2 |E_z|^2 + |E_y|^2 |E_z|^2)

For a circularly symmetric resonator the mode is solved once on an (r, z)
cross-section in cylindrical components (E_r, E_phi, E_z), and the crystal
axes rotate relative to the local transverse frame as the azimuth phi goes
around the ring.  Analytically averaging the rectangular integrands over
phi gives closed forms on the cross-section:

    A = 2 pi Int r dr dz [ |E_z|^4 + 3/4 |E_r|^4 + 3/4 |E_phi|^4
                           + 1/4 (E_r^2 E_phi*^2 + E_r*^2 E_phi^2)
                           + |E_r|^2 |E_phi|^2 ]
    B = 2 pi Int r dr dz [ E_z*^2 (E_r^2 + E_phi^2) + E_z^2 (E_r*^2 + E_phi*^2)
                           + 3/4 |E_r|^4 + 3/4 |E_phi|^4
                           + 1/4 (E_r*^2 E_phi^2 + E_r^2 E_phi*^2)
                           + 4 |E_z|^2 (|E_r|^2 + |E_phi|^2)
                           + |E_r|^2 |E_phi|^2 ]

The cross terms carry mixed conjugation (E_r^2 E_phi*^2 plus its conjugate):
that is what the phi-average of the rectangular integrands produces, and for
real-valued fields it coincides with the unconjugated form.  A numerical
phi-average oracle is provided to verify the closed forms on arbitrary
complex fields.

With energy integrals U = Int (1/2) eps |E|^2 dV taken over the full grid,

    beta = (3/16) eps0 (chi1111 A + chi1122 B) / U^2
    V_eff = 3 chi1111 / (4 eps0 n^4 beta)

beta has units 1/J; both results are independent of field normalization.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

VACUUM_PERMITTIVITY = 8.8541878128e-12  # F/m


@dataclass(frozen=True)
class Chi3Params:
    """Independent third-order susceptibility elements of the core material.

    chi_1122 stands for the three off-diagonal elements, taken equal
    (Kleinman symmetry).  Values are configuration inputs in m^2/V^2.
    """

    chi_1111: float
    chi_1122: float
    n_core: float
    vacuum_permittivity: float = VACUUM_PERMITTIVITY

    def __post_init__(self) -> None:
        if not (self.chi_1111 > 0):
            raise ValueError(f"chi_1111 must be > 0, got {self.chi_1111}")
        if not (self.n_core > 1):
            raise ValueError(f"n_core must be > 1, got {self.n_core}")


@dataclass(frozen=True)
class ModeFieldGrid:
    """Complex mode field sampled on a rectilinear (r, z) cross-section.

    Arrays are indexed [i_r, i_z].  core_mask marks cells inside the
    nonlinear core; permittivity is the local eps in F/m used for the
    energy normalization integrals.
    """

    r_axis: np.ndarray
    z_axis: np.ndarray
    e_r: np.ndarray
    e_phi: np.ndarray
    e_z: np.ndarray
    core_mask: np.ndarray
    permittivity: np.ndarray

    def __post_init__(self) -> None:
        r = np.asarray(self.r_axis, dtype=float)
        z = np.asarray(self.z_axis, dtype=float)
        if r.ndim != 1 or z.ndim != 1:
            raise ValueError("r_axis and z_axis must be 1-D")
        if np.any(np.diff(r) <= 0) or np.any(np.diff(z) <= 0):
            raise ValueError("axes must be strictly increasing")
        if np.any(r <= 0):
            raise ValueError("r_axis values must be > 0")
        shape = (r.size, z.size)
        for name in ("e_r", "e_phi", "e_z", "core_mask", "permittivity"):
            arr = np.asarray(getattr(self, name))
            if arr.shape != shape:
                raise ValueError(f"{name} has shape {arr.shape}, expected {shape}")
        object.__setattr__(self, "r_axis", r)
        object.__setattr__(self, "z_axis", z)
        object.__setattr__(self, "e_r", np.asarray(self.e_r, dtype=complex))
        object.__setattr__(self, "e_phi", np.asarray(self.e_phi, dtype=complex))
        object.__setattr__(self, "e_z", np.asarray(self.e_z, dtype=complex))
        object.__setattr__(self, "core_mask", np.asarray(self.core_mask, dtype=bool))
        object.__setattr__(self, "permittivity", np.asarray(self.permittivity, dtype=float))

    @property
    def shape(self) -> tuple[int, int]:
        return (self.r_axis.size, self.z_axis.size)

    def scaled(self, factor: float) -> "ModeFieldGrid":
        """Geometrically similar grid with all lengths multiplied by factor."""
        return ModeFieldGrid(
            self.r_axis * factor,
            self.z_axis * factor,
            self.e_r,
            self.e_phi,
            self.e_z,
            self.core_mask,
            self.permittivity,
        )


def _integrate_rz(g: ModeFieldGrid, integrand: np.ndarray) -> complex:
    """2 pi Int integrand * r dr dz by trapezoid on the grid."""
    weighted = integrand * g.r_axis[:, None]
    inner = np.trapezoid(weighted, g.z_axis, axis=1)
    return 2.0 * math.pi * np.trapezoid(inner, g.r_axis)


def _masked(g: ModeFieldGrid, integrand: np.ndarray) -> np.ndarray:
    # mask applied as a per-cell indicator so that core and energy integrals
    # share identical quadrature weights
    return integrand * g.core_mask


def integral_A_cyl(g: ModeFieldGrid) -> complex:
    """Self-term overlap integral A over the core (units V^4 m^3)."""
    if not g.core_mask.any():
        raise ValueError("core_mask is empty")
    er, ep, ez = g.e_r, g.e_phi, g.e_z
    ar, ap, az = np.abs(er) ** 2, np.abs(ep) ** 2, np.abs(ez) ** 2
    cross = er**2 * np.conj(ep) ** 2
    integrand = (
        az**2
        + 0.75 * ar**2
        + 0.75 * ap**2
        + 0.25 * (cross + np.conj(cross))
        + ar * ap
    )
    return _integrate_rz(g, _masked(g, integrand))


def integral_B_cyl(g: ModeFieldGrid) -> complex:
    """Cross-term overlap integral B over the core (units V^4 m^3)."""
    if not g.core_mask.any():
        raise ValueError("core_mask is empty")
    er, ep, ez = g.e_r, g.e_phi, g.e_z
    ar, ap, az = np.abs(er) ** 2, np.abs(ep) ** 2, np.abs(ez) ** 2
    zt = np.conj(ez) ** 2 * (er**2 + ep**2)
    cross = np.conj(er) ** 2 * ep**2
    integrand = (
        zt
        + np.conj(zt)
        + 0.75 * ar**2
        + 0.75 * ap**2
        + 0.25 * (cross + np.conj(cross))
        + 4.0 * az * (ar + ap)
        + ar * ap
    )
    return _integrate_rz(g, _masked(g, integrand))


def _rect_integrands(ex: np.ndarray, ey: np.ndarray, ez: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    ax, ay, az = np.abs(ex) ** 2, np.abs(ey) ** 2, np.abs(ez) ** 2
    a = ax**2 + ay**2 + az**2
    b = (
        np.conj(ex) ** 2 * (ey**2 + ez**2)
        + np.conj(ey) ** 2 * (ex**2 + ez**2)
        + np.conj(ez) ** 2 * (ex**2 + ey**2)
        + 4.0 * (ax * ay + ax * az + ay * az)
    )
    return a, b


def phi_average_oracle(g: ModeFieldGrid, n_phi: int = 16) -> tuple[complex, complex]:
    """Numerical azimuthal average of the rectangular integrands.

    Rotates (E_r, E_phi) into the crystal frame at n_phi uniformly spaced
    azimuths, averages the rectangular integrands, and applies the same
    2 pi r dr dz measure as the closed forms.  The integrands are degree-4
    trigonometric polynomials in phi, so the average is exact for
    n_phi >= 8.
    """
    if n_phi < 8:
        raise ValueError(f"n_phi must be >= 8, got {n_phi}")
    if not g.core_mask.any():
        raise ValueError("core_mask is empty")
    acc_a = np.zeros(g.shape, dtype=complex)
    acc_b = np.zeros(g.shape, dtype=complex)
    for phi in np.arange(n_phi) * (2.0 * math.pi / n_phi):
        c, s = math.cos(phi), math.sin(phi)
        ex = c * g.e_r - s * g.e_phi
        ey = s * g.e_r + c * g.e_phi
        a, b = _rect_integrands(ex, ey, g.e_z)
        acc_a += a
        acc_b += b
    acc_a /= n_phi
    acc_b /= n_phi
    return (
        _integrate_rz(g, _masked(g, acc_a)),
        _integrate_rz(g, _masked(g, acc_b)),
    )


def field_energy(g: ModeFieldGrid) -> float:
    """Int (1/2) eps |E|^2 dV over the full grid (J for fields in V/m)."""
    density = 0.5 * g.permittivity * (
        np.abs(g.e_r) ** 2 + np.abs(g.e_phi) ** 2 + np.abs(g.e_z) ** 2
    )
    return float(np.real(_integrate_rz(g, density)))


def core_volume(g: ModeFieldGrid) -> float:
    """Quadrature volume of the masked core region, 2 pi Int_core r dr dz."""
    return float(np.real(_integrate_rz(g, g.core_mask.astype(float))))


def beta_and_veff(g: ModeFieldGrid, chi: Chi3Params, pump_wavelength: float) -> tuple[float, float]:
    """Four-wave-mixing coefficient (1/J) and effective mode volume (m^3).

    The degenerate-mode approximation is used: one field solution stands in
    for pump, signal and idler, so the three energy integrals coincide.
    Another common convention splits a factor of 2 between the coefficient
    and the coupled-mode equations; this function uses the convention in
    the module docstring throughout.
    """
    if pump_wavelength <= 0:
        raise ValueError(f"pump_wavelength must be > 0, got {pump_wavelength}")
    u = field_energy(g)
    if u <= 0.0:
        raise ValueError("field energy is zero; cannot normalize")
    a = integral_A_cyl(g)
    b = integral_B_cyl(g)
    eps0 = chi.vacuum_permittivity
    numerator = (3.0 / 16.0) * eps0 * (chi.chi_1111 * a + chi.chi_1122 * b)
    beta = abs(numerator) / u**2
    veff = 3.0 * chi.chi_1111 / (4.0 * eps0 * chi.n_core**4 * beta)
    return beta, veff


def disk_like_classifier(
    series: list[tuple[float, float]],
    r_out: float,
    threshold: float = 0.05,
) -> list[bool]:
    """Mark sweep points where V_eff is insensitive to the inner radius.

    A point is disk-like when |dV_eff/dr_in|, estimated by finite
    differences along the sweep, falls below threshold * (V_eff / r_out).
    Needs at least 3 points with strictly increasing inner radius.
    """
    if len(series) < 3:
        raise ValueError(f"need at least 3 sweep points, got {len(series)}")
    r = np.array([p[0] for p in series], dtype=float)
    v = np.array([p[1] for p in series], dtype=float)
    if np.any(np.diff(r) <= 0):
        raise ValueError("inner radii must be strictly increasing")
    slope = np.gradient(v, r)
    return list(np.abs(slope) < threshold * (v / r_out))


def gaussian_mode(
    ring_radius: float,
    sigma_r: float,
    sigma_z: float,
    amplitudes: tuple[complex, complex, complex] = (0.0, 0.0, 1.0),
    n_core: float = 3.48,
    n_clad: float = 1.45,
    core_half_width: float | None = None,
    core_half_height: float | None = None,
    n_r: int = 81,
    n_z: int = 61,
    span_sigmas: float = 4.0,
) -> ModeFieldGrid:
    """Separable Gaussian test mode centred on the waveguide core.

    amplitudes gives the complex (e_r, e_phi, e_z) polarization mix.  The
    core is a rectangle of the given half-extents (defaults to 1.5 sigma)
    and carries eps = eps0 n_core^2; the cladding eps0 n_clad^2.
    """
    if core_half_width is None:
        core_half_width = 1.5 * sigma_r
    if core_half_height is None:
        core_half_height = 1.5 * sigma_z
    r = np.linspace(ring_radius - span_sigmas * sigma_r, ring_radius + span_sigmas * sigma_r, n_r)
    if r[0] <= 0:
        raise ValueError("grid extends to r <= 0; increase ring_radius or shrink sigma_r")
    z = np.linspace(-span_sigmas * sigma_z, span_sigmas * sigma_z, n_z)
    rr, zz = np.meshgrid(r, z, indexing="ij")
    envelope = np.exp(-((rr - ring_radius) ** 2) / (2 * sigma_r**2) - zz**2 / (2 * sigma_z**2))
    mask = (np.abs(rr - ring_radius) <= core_half_width) & (np.abs(zz) <= core_half_height)
    eps = np.where(mask, VACUUM_PERMITTIVITY * n_core**2, VACUUM_PERMITTIVITY * n_clad**2)
    ar, ap, az = amplitudes
    return ModeFieldGrid(
        r_axis=r,
        z_axis=z,
        e_r=ar * envelope,
        e_phi=ap * envelope,
        e_z=az * envelope,
        core_mask=mask,
        permittivity=eps,
    )
