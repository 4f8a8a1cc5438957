"""Van Vleck second-moment estimate of the nuclear dephasing caused by the
dipolar field of the spin-5/2 aluminium nuclei in a metal gate above the
qubit.

Uses the unlike-spin second moment
    M2 = (4/15) (mu0/4pi)^2 gamma_I^2 gamma_S^2 hbar^2 S(S+1)
         * sum_j (1 - 3 cos^2 theta_j)^2 / r_j^6
summed over the FCC aluminium sites of the electrode volume, with a
continuum (equal-volume cylinder) integral as a cross-check. The Gaussian
free-induction decay exp(-M2 t^2 / 2) gives T2* = sqrt(2/M2).
"""

from __future__ import annotations

import csv
from dataclasses import dataclass

import numpy as np
from scipy.integrate import dblquad

MU0_4PI = 1e-7  # T m / A
HBAR = 1.054571817e-34  # J s
GAMMA_SI = 2 * np.pi * 8.458e6  # rad/s/T, |gamma| of the qubit nucleus
GAMMA_AL = 2 * np.pi * 11.103e6  # rad/s/T, 27Al
SPIN_AL = 2.5
AL_LATTICE_CONSTANT = 0.405  # nm, FCC


@dataclass(frozen=True)
class ElectrodeGeometry:
    """Gate volume relative to the nucleus at the origin; the gate slab
    spans z in [standoff, standoff + thickness], in nm."""

    standoff: float
    thickness: float = 50.0
    lateral: tuple = (300.0, 100.0)
    al_lattice_constant: float = AL_LATTICE_CONSTANT

    def __post_init__(self):
        if self.standoff <= 0:
            raise ValueError("standoff must be positive")
        if self.thickness < 0 or any(v <= 0 for v in self.lateral):
            raise ValueError("electrode dimensions must be positive")

    @property
    def volume_nm3(self) -> float:
        return self.thickness * self.lateral[0] * self.lateral[1]

    @property
    def site_density_nm3(self) -> float:
        return 4.0 / self.al_lattice_constant**3


def _moment_prefactor(gamma_n: float, gamma_bath: float, spin_bath: float) -> float:
    return (
        (4.0 / 15.0)
        * MU0_4PI**2
        * gamma_n**2
        * gamma_bath**2
        * HBAR**2
        * spin_bath
        * (spin_bath + 1.0)
    )


def _angular_sum_chunk(x, y, z):
    """sum (1 - 3 cos^2 theta)^2 / r^6 for coordinate arrays in nm,
    returned in m^-6."""
    r2 = x * x + y * y + z * z
    cos2 = z * z / r2
    return np.sum((1.0 - 3.0 * cos2) ** 2 / r2**3) * 1e54


def second_moment_sum(
    geometry: ElectrodeGeometry,
    gamma_n: float = GAMMA_SI,
    gamma_bath: float = GAMMA_AL,
    spin_bath: float = SPIN_AL,
    chunk_layers: int = 4,
) -> float:
    """Discrete lattice sum of M2 (rad^2/s^2) over all FCC sites in the
    electrode, processed a few atomic layers at a time."""
    a = geometry.al_lattice_constant
    lx, ly = geometry.lateral
    nx = int(np.floor(lx / a))
    ny = int(np.floor(ly / a))
    nz = int(np.floor(geometry.thickness / a))
    if nx == 0 or ny == 0 or nz == 0:
        return 0.0
    base = np.array(
        [[0.0, 0.0, 0.0], [0.0, 0.5, 0.5], [0.5, 0.0, 0.5], [0.5, 0.5, 0.0]]
    )
    xs = (np.arange(nx) - nx / 2.0) * a
    ys = (np.arange(ny) - ny / 2.0) * a
    total = 0.0
    for z0 in range(0, nz, chunk_layers):
        zs = (np.arange(z0, min(z0 + chunk_layers, nz))) * a + geometry.standoff
        for off in base:
            gx, gy, gz = np.meshgrid(
                xs + off[0] * a, ys + off[1] * a, zs + off[2] * a, indexing="ij"
            )
            total += _angular_sum_chunk(gx, gy, gz)
    return _moment_prefactor(gamma_n, gamma_bath, spin_bath) * total


def second_moment_cylinder_integral(
    geometry: ElectrodeGeometry,
    gamma_n: float = GAMMA_SI,
    gamma_bath: float = GAMMA_AL,
    spin_bath: float = SPIN_AL,
) -> float:
    """Continuum M2: the lattice sum replaced by site-density times the
    integral over a coaxial cylinder of equal cross-sectional area.

    The integration window is midpoint-corrected: the atomic layers are
    spaced a/2 apart starting exactly at the standoff, so each layer
    represents the slab [z - a/4, z + a/4]. Without the a/4 shift the
    integral misweights the dominant first layer and undershoots the
    discrete sum by ~20% at small standoff.
    """
    if geometry.thickness == 0:
        return 0.0
    radius = np.sqrt(geometry.lateral[0] * geometry.lateral[1] / np.pi)
    z_lo = geometry.standoff - geometry.al_lattice_constant / 4.0
    z_hi = geometry.standoff + geometry.thickness - geometry.al_lattice_constant / 4.0

    def integrand(rho, z):
        r2 = rho * rho + z * z
        cos2 = z * z / r2
        return 2.0 * np.pi * rho * (1.0 - 3.0 * cos2) ** 2 / r2**3

    integral, _ = dblquad(integrand, z_lo, z_hi, 0.0, radius)
    density = geometry.site_density_nm3  # nm^-3
    # density (nm^-3) * integral (nm^-3) = nm^-6; convert to m^-6
    return _moment_prefactor(gamma_n, gamma_bath, spin_bath) * density * integral * 1e54


def t2star_from_moment(m2: float) -> float:
    """Gaussian FID 1/e time T2* = sqrt(2/M2), returned in ms."""
    if m2 <= 0:
        raise ValueError("second moment must be positive")
    return float(np.sqrt(2.0 / m2) * 1e3)


def standoff_sweep(
    standoffs,
    thickness: float = 50.0,
    lateral: tuple = (300.0, 100.0),
) -> dict:
    """Both M2 forms and their T2* over a standoff range (the vertical
    placement of the nucleus below the gate is not precisely known)."""
    rows = {k: [] for k in
            ("standoff_nm", "m2_sum", "m2_integral", "t2star_sum_ms",
             "t2star_integral_ms")}
    for d in np.asarray(standoffs, dtype=float):
        geo = ElectrodeGeometry(standoff=d, thickness=thickness, lateral=lateral)
        m_sum = second_moment_sum(geo)
        m_int = second_moment_cylinder_integral(geo)
        rows["standoff_nm"].append(d)
        rows["m2_sum"].append(m_sum)
        rows["m2_integral"].append(m_int)
        rows["t2star_sum_ms"].append(t2star_from_moment(m_sum))
        rows["t2star_integral_ms"].append(t2star_from_moment(m_int))
    return {k: np.array(v) for k, v in rows.items()}


def export_csv(table: dict, path) -> None:
    names = list(table)
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(names)
        for row in zip(*(table[n] for n in names)):
            writer.writerow([repr(float(v)) for v in row])
