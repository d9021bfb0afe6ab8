import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from numpy.testing import assert_allclose
from scipy import optimize

from isoplane.moduli import (
    CubicModuli,
    IsotropicModuli,
    ModuliError,
    dist_euclid_cubic,
    dist_log_cubic,
    norris_euclid,
    norris_log,
    reverse_family_euclid,
    reverse_family_log,
    to_voigt,
)

from .conftest import FLAGSHIP, moduli_strategy

GPA = 1e9


@pytest.mark.parametrize("bad", [(0, 1, 1), (1, -1, 1), (1, 1, 0), (1, math.nan, 1)])
def test_cubic_rejects_nonpositive(bad):
    with pytest.raises(ModuliError):
        CubicModuli(*bad)


def test_lame_round_trip():
    m = CubicModuli.from_lame(0.29, 1.0, 0.1)
    assert_allclose([m.kappa, m.lam], [1.29, 0.29], rtol=1e-15)


def test_voigt_isotropic_pattern():
    c = to_voigt(CubicModuli(1.0, 1.0, 1.0))
    assert_allclose(c[:3, :3], 2.0 * np.eye(3))
    assert_allclose(np.diag(c)[3:], 1.0)
    assert_allclose(c, c.T)


def test_voigt_flagship_entries():
    c = to_voigt(FLAGSHIP) / GPA
    assert_allclose([c[0, 0], c[0, 1], c[3, 3]], [13.546, 1.744, 0.626], rtol=1e-12)
    assert np.linalg.eigvalsh(c).min() > 0


@given(moduli_strategy().filter(lambda m: 3 * m.kappa > 1.01 * m.mu))
@settings(max_examples=150, deadline=None)
def test_voigt_spd(m):
    c = to_voigt(m)
    assert_allclose(c, c.T, rtol=0, atol=0)
    ev = np.linalg.eigvalsh(c)
    assert ev.min() > 0
    assert_allclose(ev.min(), min(3 * m.kappa - m.mu, 2 * m.mu, m.mu_star), rtol=1e-9)


def test_voigt_indefinite_below_bulk_bound():
    # admissible in plane strain, yet the 6x6 normal block has eigenvalue 3 kappa - mu < 0
    ev = np.linalg.eigvalsh(to_voigt(CubicModuli(1.0, 6.0, 1.0)))
    assert_allclose(ev.min(), -3.0, rtol=1e-12)


def test_euclid_distance_examples():
    a = CubicModuli(2.0, 3.0, 4.0)
    assert dist_euclid_cubic(a, a) == 0.0
    assert_allclose(dist_euclid_cubic(CubicModuli(3.0, 3.0, 4.0), a), 3.0, rtol=1e-15)
    assert_allclose(dist_euclid_cubic(CubicModuli(2.0, 4.0, 5.0), a), math.sqrt(20.0), rtol=1e-15)


def test_log_distance_examples():
    a = CubicModuli(2.0, 3.0, 4.0)
    assert dist_log_cubic(a, a) == 0.0
    assert_allclose(dist_log_cubic(CubicModuli(2.0 * math.e, 3.0, 4.0), a), 1.0, rtol=1e-15)


@given(moduli_strategy(), moduli_strategy())
@settings(max_examples=150, deadline=None)
def test_log_distance_inversion_invariant(a, b):
    assert_allclose(dist_log_cubic(a.inverse(), b.inverse()), dist_log_cubic(a, b), rtol=1e-12, atol=1e-15)


def test_norris_examples():
    assert_allclose(norris_euclid(CubicModuli(1.0, 1.0, 6.0)).mu, 4.0, rtol=1e-15)
    assert_allclose(norris_log(CubicModuli(1.0, 32.0, 1.0)).mu, 4.0, rtol=1e-15)
    assert_allclose(norris_euclid(FLAGSHIP).mu / GPA, 2.7360, rtol=1e-12)
    assert_allclose(norris_log(FLAGSHIP).mu / GPA, 1.5358, rtol=5e-5)
    assert norris_log(FLAGSHIP).kappa == FLAGSHIP.kappa


@given(st.floats(1e-2, 1e2), st.floats(1e-2, 1e2))
def test_norris_isotropic_fixed_point(kappa, mu):
    m = CubicModuli(kappa, mu, mu)
    assert norris_euclid(m) == IsotropicModuli(kappa, mu)
    assert norris_log(m) == norris_euclid(m)


def _iso_as_cubic(k, mu):
    return CubicModuli(k, mu, mu)


@pytest.mark.parametrize("dist,proj", [(dist_euclid_cubic, norris_euclid), (dist_log_cubic, norris_log)])
def test_norris_matches_numerical_minimizer(dist, proj):
    # generic 2-parameter minimization over isotropic tensors as an oracle
    m = CubicModuli(7.645, 5.901, 0.626)
    res = optimize.minimize(
        lambda p: dist(_iso_as_cubic(*np.exp(p)), m) ** 2,
        x0=np.log([1.0, 1.0]),
        method="Nelder-Mead",
        options={"xatol": 1e-12, "fatol": 1e-16, "maxiter": 20000},
    )
    iso = proj(m)
    assert_allclose(np.exp(res.x), [iso.kappa, iso.mu], rtol=1e-6)


@given(moduli_strategy(), st.integers(0, 2**32 - 1))
@settings(max_examples=100, deadline=None)
def test_norris_local_optimality(m, seed):
    rng = np.random.default_rng(seed)
    for dist, proj in ((dist_euclid_cubic, norris_euclid), (dist_log_cubic, norris_log)):
        iso = proj(m)
        best = dist(iso.as_cubic(), m)
        for dk, dm in rng.uniform(-1e-3, 1e-3, size=(8, 2)):
            other = _iso_as_cubic(iso.kappa * (1 + dk), iso.mu * (1 + dm))
            assert best <= dist(other, m) * (1 + 1e-12)


def test_reverse_euclid_examples():
    iso = IsotropicModuli(2.0, 1.0)
    assert reverse_family_euclid(iso, 0.0) == iso.as_cubic()
    m = reverse_family_euclid(iso, 0.1)
    assert_allclose([m.mu, m.mu_star], [1.3, 0.8], rtol=1e-15)
    assert_allclose(norris_euclid(m).mu, 1.0, rtol=1e-15)
    with pytest.raises(ModuliError):
        reverse_family_euclid(iso, -1.0 / 3.0)
    with pytest.raises(ModuliError):
        reverse_family_euclid(iso, 0.5)


def test_reverse_log_examples():
    iso = IsotropicModuli(2.0, 1.0)
    assert_allclose(reverse_family_log(iso, 1.0).mu_star, 1.0)
    m = reverse_family_log(iso, 2.0)
    assert_allclose([m.mu, m.mu_star], [8.0, 0.25], rtol=1e-15)
    assert_allclose(norris_log(m).mu, 1.0, rtol=1e-15)
    for c in (0.0, -1.0):
        with pytest.raises(ModuliError):
            reverse_family_log(iso, c)


@given(st.floats(1e-2, 1e2), st.floats(1e-2, 1e2), st.floats(-0.33, 0.49), st.floats(0.05, 20.0))
@settings(max_examples=200)
def test_reverse_families_round_trip(kappa, mu, t, c):
    iso = IsotropicModuli(kappa, mu)
    m = reverse_family_euclid(iso, t * mu)
    assert_allclose(norris_euclid(m).mu, mu, rtol=1e-13)
    assert norris_euclid(m).kappa == kappa
    assert_allclose(norris_log(reverse_family_log(iso, c)).mu, mu, rtol=1e-13)
