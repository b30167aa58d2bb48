import itertools
import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from equidist.errors import ConfigError, ValueOutOfRange
from equidist.ff import build_field, cyclotomic_residues, is_prime
from equidist.zlattice import (
    HaarTorusFourier,
    RelationModule,
    as_int_matrix,
    build_sampler,
    cyclotomic_preset,
    int_det,
    minors_gcd,
    relation_lattice_contains,
    sigma_pushforward_sample,
    smith_normal_form,
)

matrices = st.integers(1, 5).flatmap(
    lambda m: st.integers(1, 5).flatmap(
        lambda n: st.lists(st.lists(st.integers(-20, 20), min_size=n, max_size=n), min_size=m, max_size=m)
    )
)


def is_unimodular(M):
    return abs(int_det(M)) == 1


@settings(max_examples=150, deadline=None)
@given(matrices)
def test_snf_properties(A):
    snf = smith_normal_form(A)
    A = as_int_matrix(A)
    assert (snf.U.dot(A).dot(snf.V) == snf.D).all()
    assert is_unimodular(snf.U) and is_unimodular(snf.V)
    diag = snf.diagonal
    m, n = A.shape
    off = snf.D.copy()
    for i in range(min(m, n)):
        off[i, i] = 0
    assert not off.any()
    nz = [d for d in diag if d != 0]
    assert all(d > 0 for d in nz)
    assert all(b % a == 0 for a, b in zip(nz, nz[1:]))
    assert all(d == 0 for d in diag[len(nz):])
    # d_1 ... d_k = gcd of k x k minors
    prod = 1
    for k in range(1, min(m, n) + 1):
        prod *= diag[k - 1] if k <= len(diag) else 0
        assert prod == minors_gcd(A, k)


def test_snf_known_example():
    snf = smith_normal_form([[2, 4, 4], [-6, 6, 12], [10, -4, -16]])
    assert snf.diagonal == (2, 6, 12)


def test_snf_big_entries_are_exact():
    A = [[10**30 + 1, 2 * 10**30], [3, 7]]
    snf = smith_normal_form(A)
    assert snf.diagonal[0] * snf.diagonal[1] == abs(int_det(as_int_matrix(A)))


@pytest.mark.parametrize("d", [3, 4, 5, 8, 9])
def test_presets_are_relations(d):
    R = cyclotomic_preset(d)
    zeta = np.exp(2j * np.pi * np.arange(1, d + 1) / d)
    for row in R.generators:
        assert abs(np.dot(np.array(row, dtype=float), zeta)) < 1e-12
    # relations hold among residues mod any q = 1 mod d
    q = next(p for p in range(d + 1, 10**4, d) if is_prime(p))
    res = np.array(cyclotomic_residues(build_field(q), d), dtype=np.int64)
    for row in R.generators:
        assert int(np.dot(np.array(row, dtype=np.int64), res)) % q == 0
    # rank d - phi(d), and the lattice is saturated (all invariant factors 1)
    phi = sum(1 for k in range(1, d + 1) if math.gcd(k, d) == 1)
    snf = smith_normal_form(R.generators)
    assert snf.rank == d - phi
    assert all(x == 1 for x in snf.diagonal)


@pytest.mark.parametrize("d", [3, 4, 5, 8, 9])
def test_relation_membership_matches_brute_force(d):
    """alpha in R_Z exactly when sum alpha_i zeta^i = 0 over C (small alphas)."""
    R = cyclotomic_preset(d)
    zeta = np.exp(2j * np.pi * np.arange(1, d + 1) / d)
    box = np.array(list(itertools.product(range(-1, 2), repeat=d)), dtype=np.int64)
    numeric = np.abs(box @ zeta) < 1e-9
    assert np.array_equal(relation_lattice_contains(R, box), numeric)
    assert np.array_equal(HaarTorusFourier(R).fourier(box).real == 1, numeric)


def test_json_round_trip_and_unknown_fields(tmp_path):
    R = cyclotomic_preset(4)
    assert R.generators.tolist() == [[1, 0, 1, 0], [0, 1, 0, 1]]
    path = tmp_path / "r.json"
    R.save(path)
    back = RelationModule.load(path)
    assert back.to_json() == R.to_json()
    with pytest.raises(ConfigError):
        RelationModule.from_json('{"z_size": 2, "generators": [[1, 1]], "extra": 1}')
    with pytest.raises(ValueOutOfRange):
        RelationModule.from_json('{"z_size": 2, "generators": [[0, 0]]}')
    with pytest.raises(ValueOutOfRange):
        cyclotomic_preset(6)


@pytest.mark.parametrize("d", [3, 4, 5, 8, 9])
def test_sampler_lands_in_subgroup(d):
    s = build_sampler(cyclotomic_preset(d), seed=11)
    t = s.sample(2000)
    assert t.shape == (2000, d)
    assert s.character_defect(t) <= 1e-9


def test_sampler_split_equals_sequential():
    s = build_sampler(cyclotomic_preset(5), seed=3)
    full = s.sample(10000)
    parts = np.vstack([s.sample(3000, start=0), s.sample(5000, start=3000), s.sample(2000, start=8000)])
    assert np.array_equal(full, parts)


def test_sampler_is_uniform_on_free_part():
    # for mu_3 the subgroup is 2-dimensional; one coordinate is uniform on [0, 1)
    t = build_sampler(cyclotomic_preset(3), seed=5).sample(20000)
    hist = np.histogram(t[:, 0], bins=10, range=(0, 1))[0] / 20000
    assert np.max(np.abs(hist - 0.1)) < 0.015


def test_sigma_pushforward_mean_and_second_moment():
    # sum of d uniform-ish unit vectors constrained by the relation: mean 0, E|z|^2 = d
    s = build_sampler(cyclotomic_preset(5), seed=9)
    z = sigma_pushforward_sample(s, 40000)
    assert abs(z.mean()) < 0.05
    assert abs(np.mean(np.abs(z) ** 2) - 5) < 0.1
