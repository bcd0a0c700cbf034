"""Resolvent checks against brute-force dense inversion."""

import numpy as np
import pytest

from garouter.errors import AtResolventPole, PoleAtThirdState
from garouter.green import (
    chain_eigensystem,
    effective_excited_frequency,
    gamma,
    green_element,
)
from garouter.model import ModelParams


def dense_resolvent(energy, wbar, j_coupling, m):
    """Oracle: invert (E - wbar) I - J A for the open-chain adjacency A."""
    adj = np.diag(np.ones(m - 1), 1) + np.diag(np.ones(m - 1), -1)
    return np.linalg.inv((energy - wbar) * np.eye(m) - j_coupling * adj)


class TestEffectiveFrequency:
    def test_no_control_field(self):
        p = ModelParams(omega_big=0.0, omega_s_prime=0.4)
        assert effective_excited_frequency(0.4, p) == 0.0

    def test_substitution(self):
        p = ModelParams(omega_big=0.5)
        assert effective_excited_frequency(1.0, p) == pytest.approx(0.25)

    def test_third_state_pole(self):
        with pytest.raises(PoleAtThirdState):
            effective_excited_frequency(0.0, ModelParams(omega_big=0.3))


class TestEigensystem:
    @pytest.mark.parametrize(
        "m, expected",
        [(1, [0.0]), (2, [1.0, -1.0]), (3, [np.sqrt(2), 0.0, -np.sqrt(2)])],
    )
    def test_small_chains(self, m, expected):
        assert np.allclose(chain_eigensystem(m).eigenvalues, expected, atol=1e-15)

    @pytest.mark.parametrize("m", [1, 2, 5, 12, 31])
    def test_normalised_and_ordered(self, m):
        eig = chain_eigensystem(m)
        modes = eig.modes()
        norms = [sum(eig.amplitude(n, j) ** 2 for j in range(1, m + 1)) for n in modes]
        assert np.allclose(norms, 1.0, atol=1e-12)
        assert np.all(np.diff(eig.eigenvalues) < 0)
        assert np.allclose(eig.eigenvalues, -eig.eigenvalues[::-1], atol=1e-14)


class TestGreenElement:
    def test_single_atom(self):
        p = ModelParams(m_atoms=1, j_coupling=0.3)
        assert green_element(0.5, p, 1, 1) == pytest.approx(2.0)
        assert gamma(0.5, p).gamma == pytest.approx(4.0)

    def test_two_atoms(self):
        p = ModelParams(m_atoms=2, n_sites=2, j_coupling=0.01)
        e, j = 0.5, 0.01
        assert green_element(e, p, 1, 2) == pytest.approx(0.5 * (1 / (e - j) - 1 / (e + j)))
        assert gamma(e, p).gamma == pytest.approx(1 / (0.5 - 0.01), rel=1e-13)

    def test_decoupled_self_energy(self):
        assert gamma(0.37, ModelParams(g=0.0)).self_energy == 0.0

    def test_matches_dense_inversion(self):
        rng = np.random.default_rng(7)
        for m in range(1, 13):
            for _ in range(100):
                j_c = rng.uniform(0.0, 0.5)
                w_e = rng.uniform(-1, 1)
                e = rng.uniform(-2, 2)
                p = ModelParams(omega_e=w_e, j_coupling=j_c, n_sites=max(m, 2), m_atoms=m)
                try:
                    ge = gamma(e, p)
                except AtResolventPole:
                    continue
                if ge.min_pole_distance < 1e-6:
                    continue
                dense = dense_resolvent(e, w_e, j_c, m)
                for a, b in ((1, 1), (1, m), (m, m), ((m + 1) // 2, 1)):
                    assert green_element(e, p, a, b) == pytest.approx(
                        dense[a - 1, b - 1], rel=1e-10, abs=1e-12
                    )

    @pytest.mark.parametrize("m", range(1, 51))
    def test_mirror_symmetry_exact(self, m):
        p = ModelParams(j_coupling=0.2, n_sites=max(m, 2), m_atoms=m)
        for e in (-1.3, 0.013, 0.77):
            g11 = green_element(e, p, 1, 1)
            gmm = green_element(e, p, m, m)
            assert abs(g11 - gmm) <= 1e-12 * max(1.0, abs(g11))
            assert green_element(e, p, 1, m) == green_element(e, p, m, 1)
            ge = gamma(e, p)
            assert ge.gamma == pytest.approx(
                green_element(e, p, m, 1) + green_element(e, p, m, m), abs=1e-12
            )

    @pytest.mark.parametrize("m", [2, 3, 6, 9])
    def test_homogeneity(self, m):
        for e, j_c in ((0.7, 0.05), (1.9, 0.4), (0.31, 0.11)):
            p = ModelParams(j_coupling=j_c, n_sites=m, m_atoms=m)
            p1 = p.replace(j_coupling=1.0)
            assert gamma(e, p).gamma == pytest.approx(gamma(e / j_c, p1).gamma / j_c, rel=1e-10)

    def test_pole_guard(self):
        p = ModelParams(j_coupling=0.01, n_sites=3, m_atoms=3)
        with pytest.raises(AtResolventPole):
            gamma(0.0, p)
        gamma(1e-8, p)
        with pytest.raises(AtResolventPole):
            gamma(1e-8, p, pole_guard=1e-7)

    def test_omega_enters_through_dressed_frequency(self):
        p = ModelParams(omega_big=0.5, omega_s_prime=0.2, omega_e=0.1, j_coupling=0.05)
        e = 0.9
        ge = gamma(e, p)
        assert ge.omega_e_bar == pytest.approx(0.1 + 0.25 / 0.7)
        dense = dense_resolvent(e, ge.omega_e_bar, 0.05, 8)
        assert ge.gamma == pytest.approx(dense[0, 0] + dense[0, 7], rel=1e-12)
