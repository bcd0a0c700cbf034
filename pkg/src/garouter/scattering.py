r"""Closed-form scattering amplitudes in the symmetric/antisymmetric basis.

With identical waveguides and equal couplings the combinations
``psi+ = alpha + beta`` and ``psi- = alpha - beta`` decouple. ``psi-`` never
touches the atoms, so ``r- = 0`` and ``t- = 1``. ``psi+`` is a tight-binding
chain carrying a two-site scatterer at sites 1 and N, described by three
quantities:

``q``
    wavenumber of the plane waves inside ``1 <= j <= N``;
``V``
    extra on-site energy at the two end sites;
``W``
    direct coupling between sites 1 and N.

Two reductions of the atom array are supported:

``"microscopic"``
    Exact elimination of the atoms from the stationary equations. The
    interior is free (``q = k``), ``V = 2 g^2 G(1,1)`` and
    ``W = 2 g^2 G(1,M)``; the factor 2 is the ``sqrt(2)**2`` enhancement of
    the symmetric mode. This is what the direct solver in :mod:`.oracle`
    checks.
``"renormalized"``
    Effective model in which the self-energy ``eps = g^2 Gamma(E)`` shifts
    every site of the scattering region, ``q = k+`` with
    ``E - omega_0 - eps = -2 xi cos k+``, ``V = 0`` and ``W = eps``.

Matching the plane waves at ``j = 0, 1, N, N+1`` and splitting into
mirror-even and mirror-odd parts gives, with ``h = (N-1)/2``::

    D_even = xi cos(q(N+1)/2) + (V + W - xi e^{ik}) cos(q h)
    D_odd  = xi sin(q(N+1)/2) + (V - W - xi e^{ik}) sin(q h)
    P_even = cos(q h) / D_even,  P_odd = sin(q h) / D_odd
    t+ = -i xi sin k e^{-ik(N-1)} (P_even - P_odd)
    r+ = e^{ik} [-i xi sin k e^{ik} (P_even + P_odd) - e^{ik}]

Flux bookkeeping: with ``t_A = (t+ + 1)/2``, ``t_B> = (t+ - 1)/2`` and
``r_A = t_B< = r+/2``::

    R_A + T_A + T_B< + T_B> = |r+|^2/2 + (|t+ + 1|^2 + |t+ - 1|^2)/4
                            = (|r+|^2 + |t+|^2)/2 + 1/2

so four-port conservation holds exactly when the symmetric channel is
unitary.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import green
from .model import ModelParams, validate, wavenumber_from_energy

__all__ = [
    "REDUCTIONS",
    "SAAmplitudes",
    "PhysicalAmplitudes",
    "ChannelProbabilities",
    "PrintedAmplitudes",
    "sa_amplitudes",
    "physical_amplitudes",
    "probabilities",
    "scatter",
    "printed_sa_amplitudes",
]

REDUCTIONS = ("microscopic", "renormalized")


@dataclass(frozen=True)
class SAAmplitudes:
    energy: float
    k: float
    k_plus: complex
    r_plus: complex
    t_plus: complex
    onsite_shift: float
    cross_coupling: float
    even_denominator: complex
    odd_denominator: complex
    self_energy: float
    reduction: str
    fixed_k: float | None = None
    r_minus: complex = 0j
    t_minus: complex = 1 + 0j

    @property
    def unitarity_residual(self) -> float:
        return abs(abs(self.r_plus) ** 2 + abs(self.t_plus) ** 2 - 1.0)


@dataclass(frozen=True)
class PhysicalAmplitudes:
    r_a: complex
    t_a: complex
    t_b_back: complex
    t_b_fwd: complex

    def as_tuple(self):
        return (self.r_a, self.t_a, self.t_b_back, self.t_b_fwd)


@dataclass(frozen=True)
class ChannelProbabilities:
    reflect_a: float
    transmit_a: float
    transfer_back: float
    transfer_fwd: float
    conservation_residual: float

    def as_tuple(self):
        return (self.reflect_a, self.transmit_a, self.transfer_back, self.transfer_fwd)


def _ratio(num, den, a, b, q):
    """``num(a q) / den(b q)`` for matching sin/cos pairs, with the 0/0 limit."""
    top, bottom = num(a * q), den(b * q)
    if abs(bottom) > 1e-12 or abs(top) > 1e-12:
        return top / bottom
    # both vanish: L'Hopital, d/dq sin = cos and d/dq cos = -sin
    deriv = {np.sin: np.cos, np.cos: lambda x: -np.sin(x)}
    return (a * deriv[num](a * q)) / (b * deriv[den](b * q))


def _s_channel(k, q, xi, n, onsite, cross):
    h = 0.5 * (n - 1)
    ek = np.exp(1j * k)
    d_even = xi * np.cos(q * (n + 1) / 2) + (onsite + cross - xi * ek) * np.cos(q * h)
    d_odd = xi * np.sin(q * (n + 1) / 2) + (onsite - cross - xi * ek) * np.sin(q * h)
    if onsite == 0 and cross == 0 and q == k:
        # no scatterer: free propagation, also at the band edge
        return 0j, 1 + 0j, complex(d_even), complex(d_odd)
    if np.sin(k) == 0:
        # band edge: zero group velocity, total reflection
        return complex(-ek * ek), 0j, complex(d_even), complex(d_odd)
    # P = trig(q h) / D written as 1 / (D / trig(q h)) so that q -> 0, pi stay finite
    rho_c = _ratio(np.cos, np.cos, (n + 1) / 2, h, q)
    rho_s = _ratio(np.sin, np.sin, (n + 1) / 2, h, q)
    p_even = 1.0 / (xi * rho_c + onsite + cross - xi * ek)
    p_odd = 1.0 / (xi * rho_s + onsite - cross - xi * ek)
    drive = -1j * xi * np.sin(k) * ek
    t = complex(np.exp(-1j * k * n) * drive * (p_even - p_odd))
    r = complex(ek * (drive * (p_even + p_odd) - ek))
    return r, t, complex(d_even), complex(d_odd)


def sa_amplitudes(
    energy,
    params: ModelParams,
    fixed_k=None,
    reduction="microscopic",
    pole_guard=green.POLE_GUARD,
) -> SAAmplitudes:
    """Closed-form ``r+``, ``t+`` of the symmetric channel at energy ``E``.

    Parameters
    ----------
    energy : float
    params : ModelParams
        Must satisfy ``m_atoms == n_sites``.
    fixed_k : float, optional
        Pin the incident wavenumber (diagnostic mode). The photon then carries
        the band energy ``E_k = omega_0 - 2 xi cos(fixed_k)`` everywhere in the
        waveguides, while ``E`` only drives the atom resolvent (and hence the
        self-energy). ``E`` may leave the band. With ``g = 0`` the result is
        independent of ``E``.
    reduction : {"microscopic", "renormalized"}
    pole_guard : float
        Minimum distance to a chain resolvent pole.
    """
    if reduction not in REDUCTIONS:
        raise ValueError(f"reduction must be one of {REDUCTIONS}, got {reduction!r}")
    validate(params, closed_form=True)
    xi, n = params.xi, params.n_sites

    if fixed_k is None:
        k = wavenumber_from_energy(energy, params.omega_0, xi)
        photon_energy = energy
    else:
        k = float(fixed_k)
        photon_energy = params.omega_0 - 2.0 * xi * np.cos(k)

    if params.g == 0:
        # decoupled atoms: their resolvent poles are invisible to the photon
        g11 = g1m = self_energy = 0.0
    else:
        ge = green.gamma(energy, params, pole_guard)
        g11, g1m, self_energy = ge.g11, ge.g1m, ge.self_energy
    if reduction == "microscopic":
        q = k
        onsite = 2.0 * params.g**2 * g11
        cross = 2.0 * params.g**2 * g1m
    else:
        q = wavenumber_from_energy(
            photon_energy, params.omega_0 + self_energy, xi, branch="evanescent"
        )
        onsite = 0.0
        cross = self_energy

    r, t, d_even, d_odd = _s_channel(k, q, xi, n, onsite, cross)
    return SAAmplitudes(
        energy=float(energy),
        k=float(k),
        k_plus=complex(q),
        r_plus=r,
        t_plus=t,
        onsite_shift=float(onsite),
        cross_coupling=float(cross),
        even_denominator=d_even,
        odd_denominator=d_odd,
        self_energy=self_energy,
        reduction=reduction,
        fixed_k=None if fixed_k is None else float(fixed_k),
    )


def physical_amplitudes(sa: SAAmplitudes) -> PhysicalAmplitudes:
    """Undo the S/A rotation: ``(alpha, beta) = (psi+ +- psi-) / 2``."""
    half_r = 0.5 * (sa.r_plus + sa.r_minus)
    return PhysicalAmplitudes(
        r_a=half_r,
        t_a=0.5 * (sa.t_plus + sa.t_minus),
        t_b_back=half_r,
        t_b_fwd=0.5 * (sa.t_plus - sa.t_minus),
    )


def probabilities(pa: PhysicalAmplitudes) -> ChannelProbabilities:
    p = [abs(a) ** 2 for a in pa.as_tuple()]
    return ChannelProbabilities(*p, conservation_residual=abs(sum(p) - 1.0))


def scatter(energy, params, fixed_k=None, reduction="microscopic", pole_guard=green.POLE_GUARD):
    """Channel probabilities at one energy (closed form)."""
    sa = sa_amplitudes(energy, params, fixed_k, reduction, pole_guard)
    return probabilities(physical_amplitudes(sa))


@dataclass(frozen=True)
class PrintedAmplitudes:
    chi: complex
    lam: complex
    delta: complex
    big_lambda: complex
    r_plus: complex
    t_plus: complex

    @property
    def unitarity_residual(self) -> float:
        return abs(abs(self.r_plus) ** 2 + abs(self.t_plus) ** 2 - 1.0)


def printed_sa_amplitudes(energy, params, grouping="bracket", pole_guard=green.POLE_GUARD):
    """Literal ``chi, lambda, Delta, Lambda`` amplitude expressions.

    Kept for comparison only: neither grouping of the last ``Delta`` term
    conserves flux, and neither agrees with the direct solver. ``grouping``
    selects whether ``xi^2 cos(k+(N-1))`` sits inside the bracket multiplying
    ``sin(2k+(N-1))`` (``"bracket"``) or is a separate summand
    (``"separate"``).
    """
    validate(params, closed_form=True)
    xi, n, w0 = params.xi, params.n_sites, params.omega_0
    ge = green.gamma(energy, params, pole_guard)
    eps = ge.self_energy
    k = wavenumber_from_energy(energy, w0, xi)
    kp = wavenumber_from_energy(energy, w0 + eps, xi, branch="evanescent")
    s1 = np.sin(kp * (n - 1))
    chi = xi * np.sin(kp * (n - 2)) - 2 * xi * np.cos(kp) * s1
    lam = 2j * xi**2 * (energy - w0 + xi * np.exp(1j * kp)) * chi
    head = (4 * xi**2 * np.cos(kp) ** 2 - (eps + xi) ** 2) * s1
    if grouping == "bracket":
        delta = head + np.sin(2 * kp * (n - 1)) * (
            2 * xi * (eps - xi) * np.cos(kp) + xi**2 * np.cos(kp * (n - 1))
        )
    elif grouping == "separate":
        delta = (
            head
            + np.sin(2 * kp * (n - 1)) * 2 * xi * (eps - xi) * np.cos(kp)
            + xi**2 * np.cos(kp * (n - 1))
        )
    else:
        raise ValueError(f"unknown grouping {grouping!r}")
    big_lambda = -delta - 2j * xi**4 * s1 + lam
    r = 4 * xi * np.sin(k) / big_lambda * (delta - chi)
    t = (
        4 * xi**3 * np.sin(k) * np.exp(-1j * k * (n + 1)) / big_lambda
        * (eps * np.sin(kp * (n + 1)) - xi * np.sin(kp))
    )
    return PrintedAmplitudes(
        chi=complex(chi),
        lam=complex(lam),
        delta=complex(delta),
        big_lambda=complex(big_lambda),
        r_plus=complex(r),
        t_plus=complex(t),
    )
