"""Physical parameters and waveguide dispersion.

All energies are measured in units of the waveguide hopping ``xi`` (default 1).
The waveguides are tight-binding chains with dispersion
``E = omega - 2 xi cos k``; the atom array is an open chain of ``m_atoms``
emitters whose end atoms couple to waveguide sites 1 and ``n_sites``.
"""

from __future__ import annotations

import dataclasses
from dataclasses import dataclass

import numpy as np

from .errors import (
    MismatchedAtomCount,
    NonPositiveHopping,
    OutOfBand,
    TooFewSites,
    ValidationError,
)

__all__ = [
    "ModelParams",
    "AsymmetricParams",
    "validate",
    "dispersion_energy",
    "wavenumber_from_energy",
    "in_band",
]


@dataclass(frozen=True)
class ModelParams:
    """Symmetric router parameters (identical waveguides, equal couplings).

    Attributes
    ----------
    omega_0 : float
        Cavity frequency of both waveguides.
    xi : float
        Nearest-neighbour hopping of the waveguides; the energy unit.
    omega_e : float
        Excited-state frequency of each atom.
    omega_s_prime : float
        Third-state frequency in the rotating frame (``omega_s + nu``).
    omega_big : float
        Rabi frequency of the control field.
    j_coupling : float
        Hopping between neighbouring atoms.
    g : float
        Atom-waveguide coupling, same for both waveguides.
    n_sites : int
        Index of the second coupling site (the first is site 1).
    m_atoms : int
        Number of atoms in the chain.
    """

    omega_0: float = 0.0
    xi: float = 1.0
    omega_e: float = 0.0
    omega_s_prime: float = 0.0
    omega_big: float = 0.0
    j_coupling: float = 0.01
    g: float = 1.5
    n_sites: int = 8
    m_atoms: int = 8

    def replace(self, **changes) -> "ModelParams":
        return dataclasses.replace(self, **changes)

    def with_sites(self, n: int) -> "ModelParams":
        """Copy with ``n_sites = m_atoms = n``."""
        return dataclasses.replace(self, n_sites=int(n), m_atoms=int(n))

    def to_asymmetric(self) -> "AsymmetricParams":
        return AsymmetricParams(
            omega_a=self.omega_0,
            omega_b=self.omega_0,
            xi_a=self.xi,
            xi_b=self.xi,
            g_a=self.g,
            g_b=self.g,
            omega_e=self.omega_e,
            omega_s_prime=self.omega_s_prime,
            omega_big=self.omega_big,
            j_coupling=self.j_coupling,
            n_sites=self.n_sites,
            m_atoms=self.m_atoms,
        )


@dataclass(frozen=True)
class AsymmetricParams:
    """General parameters: waveguides A and B may differ.

    Only the direct solver accepts these; the closed form needs the
    symmetric case.
    """

    omega_a: float = 0.0
    omega_b: float = 0.0
    xi_a: float = 1.0
    xi_b: float = 1.0
    g_a: float = 1.5
    g_b: float = 1.5
    omega_e: float = 0.0
    omega_s_prime: float = 0.0
    omega_big: float = 0.0
    j_coupling: float = 0.01
    n_sites: int = 8
    m_atoms: int = 8

    def replace(self, **changes) -> "AsymmetricParams":
        return dataclasses.replace(self, **changes)

    @property
    def is_symmetric(self) -> bool:
        return (
            self.omega_a == self.omega_b
            and self.xi_a == self.xi_b
            and self.g_a == self.g_b
        )

    def to_symmetric(self) -> ModelParams:
        if not self.is_symmetric:
            raise ValidationError(["waveguides A and B differ; no symmetric reduction"])
        return ModelParams(
            omega_0=self.omega_a,
            xi=self.xi_a,
            omega_e=self.omega_e,
            omega_s_prime=self.omega_s_prime,
            omega_big=self.omega_big,
            j_coupling=self.j_coupling,
            g=self.g_a,
            n_sites=self.n_sites,
            m_atoms=self.m_atoms,
        )


def validate(params, closed_form: bool = False):
    """Check model invariants and return ``params`` unchanged.

    Parameters
    ----------
    params : ModelParams or AsymmetricParams
    closed_form : bool
        Also require ``m_atoms == n_sites`` (needed by the closed-form path).

    Raises
    ------
    ValidationError
        The subclass matches the first violation; ``violations`` holds all.
    """
    found = []
    if isinstance(params, AsymmetricParams):
        hoppings = {"xi_a": params.xi_a, "xi_b": params.xi_b}
        couplings = {"g_a": params.g_a, "g_b": params.g_b}
    else:
        hoppings = {"xi": params.xi}
        couplings = {"g": params.g}

    for name, value in hoppings.items():
        if not value > 0:
            found.append((NonPositiveHopping, f"{name} must be > 0 (got {value})"))
    if params.n_sites < 2:
        found.append((TooFewSites, f"n_sites must be >= 2 (got {params.n_sites})"))
    if params.m_atoms < 2:
        found.append((TooFewSites, f"m_atoms must be >= 2 (got {params.m_atoms})"))
    if closed_form and params.m_atoms != params.n_sites:
        found.append(
            (
                MismatchedAtomCount,
                f"closed form requires m_atoms == n_sites "
                f"(got m_atoms={params.m_atoms}, n_sites={params.n_sites})",
            )
        )
    for name, value in couplings.items():
        if value < 0:
            found.append((ValidationError, f"{name} must be >= 0 (got {value})"))
    if params.j_coupling < 0:
        found.append((ValidationError, f"j_coupling must be >= 0 (got {params.j_coupling})"))
    if params.omega_big < 0:
        found.append((ValidationError, f"omega_big must be >= 0 (got {params.omega_big})"))

    if found:
        cls = found[0][0]
        raise cls([msg for _, msg in found])
    return params


# relative slack absorbing rounding in (E - omega) / (2 xi) at the band edges
BAND_EDGE_SLACK = 1e-14


def dispersion_energy(k, omega=0.0, xi=1.0):
    """Band energy ``omega - 2 xi cos k``."""
    return omega - 2.0 * xi * np.cos(k)


def in_band(energy, omega=0.0, xi=1.0) -> bool:
    return abs((energy - omega) / (2.0 * xi)) <= 1.0


def wavenumber_from_energy(energy, omega=0.0, xi=1.0, branch="real-band"):
    """Invert the dispersion relation.

    Parameters
    ----------
    energy : float
    omega, xi : float
        Band centre and hopping of the chain.
    branch : {"real-band", "evanescent"}
        ``"real-band"`` returns a real ``k`` in ``[0, pi]`` and raises
        :class:`OutOfBand` outside the band. ``"evanescent"`` returns the
        principal complex arccos, whose imaginary part is non-negative so
        that ``exp(i k j)`` stays bounded for ``j -> +inf``; inside the band
        it coincides with the real branch.

    Returns
    -------
    float or complex
    """
    if xi <= 0:
        raise NonPositiveHopping([f"xi must be > 0 (got {xi})"])
    c = -(energy - omega) / (2.0 * xi)
    if branch == "real-band":
        if abs(c) > 1.0 + BAND_EDGE_SLACK:
            raise OutOfBand(f"E={energy} outside band [{omega - 2 * xi}, {omega + 2 * xi}]")
        return float(np.arccos(np.clip(c, -1.0, 1.0)))
    if branch != "evanescent":
        raise ValueError(f"unknown branch {branch!r}")
    if abs(np.imag(c)) == 0 and abs(np.real(c)) <= 1.0:
        return complex(np.arccos(np.real(c)))
    k = complex(np.arccos(complex(c)))
    if k.imag < 0:
        # cos(conj k) = conj(cos k) for real c; -k works for any c
        k = k.conjugate() if np.imag(c) == 0 else -k
    return k
