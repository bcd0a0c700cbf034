r"""Resolvent of the finite atom chain and the induced self-energy.

The excited-state amplitudes obey ``(E - w) u_j - J (u_{j+1} + u_{j-1}) = S_j``
on an open chain of ``M`` sites, where ``w`` is the dressed excited-state
frequency. Its resolvent is evaluated through the analytic eigenpairs of the
open chain (Lehmann sum)::

    G(j, j') = sum_n phi_n(j) phi_n(j') / (E - w - J E_n)
    E_n      = 2 cos(n pi / (M + 1))
    phi_n(j) = sqrt(2 / (M + 1)) sin(n j pi / (M + 1))

No imaginary regulator is used; energies closer than ``pole_guard`` to a pole
are rejected instead.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import AtResolventPole, PoleAtThirdState

__all__ = [
    "POLE_GUARD",
    "ChainEigensystem",
    "GreenEvaluation",
    "effective_excited_frequency",
    "chain_eigensystem",
    "green_element",
    "gamma",
]

POLE_GUARD = 1e-9


@dataclass(frozen=True)
class ChainEigensystem:
    m_atoms: int
    eigenvalues: np.ndarray

    def amplitude(self, n, j):
        """``<j|psi_n>`` for 1-based mode ``n`` and site ``j``.

        Sites in the right half are mapped onto their mirror images,
        ``phi_n(M+1-j) = (-1)**(n+1) phi_n(j)``, so mirror-related elements
        are computed from identical floating-point operations.
        """
        m = self.m_atoms
        n = np.asarray(n)
        j = int(j)
        if not 1 <= j <= m:
            raise IndexError(f"site {j} outside chain 1..{m}")
        sign = 1.0
        if 2 * j > m + 1:
            j = m + 1 - j
            sign = np.where(n % 2 == 1, 1.0, -1.0)
        return sign * np.sqrt(2.0 / (m + 1)) * np.sin(n * j * np.pi / (m + 1))

    def modes(self):
        return np.arange(1, self.m_atoms + 1)


@dataclass(frozen=True)
class GreenEvaluation:
    energy: float
    omega_e_bar: float
    gamma: float
    self_energy: float
    min_pole_distance: float
    g11: float
    g1m: float


def effective_excited_frequency(energy, params):
    """Excited-state frequency dressed by the control field.

    ``omega_e + Omega**2 / (E - omega_s')``; plain ``omega_e`` when the
    control field is off.
    """
    if params.omega_big == 0:
        return float(params.omega_e)
    detuning = energy - params.omega_s_prime
    if detuning == 0:
        raise PoleAtThirdState(
            f"E={energy} equals omega_s'={params.omega_s_prime} with Omega={params.omega_big}"
        )
    return params.omega_e + params.omega_big**2 / detuning


def chain_eigensystem(m_atoms: int) -> ChainEigensystem:
    if m_atoms < 1:
        raise ValueError("m_atoms must be >= 1")
    n = np.arange(1, m_atoms + 1)
    return ChainEigensystem(m_atoms, 2.0 * np.cos(n * np.pi / (m_atoms + 1)))


def _denominators(energy, params, pole_guard):
    wbar = effective_excited_frequency(energy, params)
    eig = chain_eigensystem(params.m_atoms)
    denom = energy - wbar - params.j_coupling * eig.eigenvalues
    dist = float(np.min(np.abs(denom)))
    if dist <= pole_guard:
        raise AtResolventPole(
            f"E={energy} within {dist:.3g} of a chain resolvent pole (guard {pole_guard})"
        )
    return eig, denom, wbar, dist


def green_element(energy, params, j, j2, pole_guard=POLE_GUARD):
    """Single resolvent element ``<j|G(E)|j2>`` (1-based sites)."""
    eig, denom, _, _ = _denominators(energy, params, pole_guard)
    n = eig.modes()
    return float(np.sum(eig.amplitude(n, j) * eig.amplitude(n, j2) / denom))


def gamma(energy, params, pole_guard=POLE_GUARD) -> GreenEvaluation:
    """Evaluate ``Gamma(E) = G(1,1) + G(1,M)`` and the self-energy ``g**2 Gamma``."""
    eig, denom, wbar, dist = _denominators(energy, params, pole_guard)
    n = eig.modes()
    phi1 = eig.amplitude(n, 1)
    g11 = float(np.sum(phi1 * phi1 / denom))
    g1m = float(np.sum(phi1 * eig.amplitude(n, params.m_atoms) / denom))
    gam = g11 + g1m
    return GreenEvaluation(
        energy=float(energy),
        omega_e_bar=float(wbar),
        gamma=gam,
        self_energy=params.g**2 * gam,
        min_pole_distance=dist,
        g11=g11,
        g1m=g1m,
    )
