import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from qegraphs.graph_core import cartesian_product, cycle_graph, hub_glue, random_regular
from qegraphs.quantum_ergodicity import (
    Observable,
    c4_localized_basis,
    complete_basis_containing,
    diagonal_terms,
    eigenspace_clusters,
    hub_localized_family,
    observable_hub,
    observable_product_c4,
    qe_statistic,
    tensor_basis,
)
from qegraphs.spectral import Spectrum, eig_sym

R2 = 1 / math.sqrt(2)


def test_c4_basis_table():
    b = c4_localized_basis()
    np.testing.assert_array_equal(b.eigenvalues, [2, 0, 0, -2])
    np.testing.assert_allclose(b.vectors[0], [0.5] * 4)
    np.testing.assert_allclose(b.vectors[1], [R2, 0, -R2, 0])
    np.testing.assert_allclose(b.vectors[2], [0, R2, 0, -R2])
    assert b.gram_deviation() <= 1e-15
    assert b.residual_against(cycle_graph(4).adjacency_matrix()) <= 1e-15


def test_tensor_basis_fibers():
    g = random_regular(20, 3, 1)
    s = eig_sym(g)
    t = tensor_basis(s, c4_localized_basis())
    assert len(t) == 80
    phi = s.vectors[7]
    const = t.vectors[7 * 4 + 0].reshape(20, 4)
    np.testing.assert_allclose(const, np.outer(phi, [0.5] * 4))
    second = t.vectors[7 * 4 + 1].reshape(20, 4)
    third = t.vectors[7 * 4 + 2].reshape(20, 4)
    assert np.all(second[:, 1] == 0) and np.all(second[:, 3] == 0)
    assert np.all(third[:, 0] == 0) and np.all(third[:, 2] == 0)


@pytest.mark.parametrize("n,d,seed", [(30, 3, 0), (60, 4, 1), (100, 5, 2)])
def test_tensor_basis_is_eigenbasis(n, d, seed):
    g = random_regular(n, d, seed)
    t = tensor_basis(eig_sym(g), c4_localized_basis())
    assert t.gram_deviation() <= 1e-8
    A = cartesian_product(g, cycle_graph(4)).adjacency_matrix()
    assert t.residual_against(A) <= max(t.residual, 1e-12) + 1e-12


def test_observable_product_c4():
    a = observable_product_c4(25)
    assert a.values.sum() == 0 and np.abs(a.values).max() == 1
    assert a.values[0 * 4 + 0] == 1 and a.values[0 * 4 + 1] == -1
    assert len(a) == 100


def test_observable_validation():
    with pytest.raises(ValueError):
        Observable(np.array([1.0, 0.5]))
    with pytest.raises(ValueError):
        Observable(np.array([2.0, -2.0]))


def test_observable_hub():
    h = hub_glue(random_regular(30, 8, 0))
    a = observable_hub(h)
    assert np.flatnonzero(a.values == 0).tolist() == [h.hub]
    assert a.values.sum() == 0
    h12 = hub_glue(random_regular(20, 12, 0))
    a12 = observable_hub(h12)
    zeros = set(np.flatnonzero(a12.values == 0).tolist())
    assert zeros == set(h12.copy_vertices(4)) | set(h12.copy_vertices(5)) | {h12.hub}
    with pytest.warns(UserWarning):
        small = hub_glue(random_regular(20, 6, 0))
    with pytest.raises(ValueError):
        observable_hub(small)


@pytest.mark.parametrize("n,d,seed", [(20, 3, 0), (40, 3, 1), (30, 4, 2)])
def test_statistic_exactly_half(n, d, seed):
    t = tensor_basis(eig_sym(random_regular(n, d, seed)), c4_localized_basis())
    assert abs(qe_statistic(t, observable_product_c4(n)) - 0.5) <= 1e-9
    terms = diagonal_terms(t, observable_product_c4(n)).reshape(n, 4)
    np.testing.assert_allclose(np.abs(terms), np.tile([0, 1, 1, 0], (n, 1)), atol=1e-12)


def test_statistic_trivial_cases():
    s = eig_sym(random_regular(12, 3, 0))
    assert qe_statistic(s, Observable(np.zeros(12))) == 0
    with pytest.raises(ValueError):
        qe_statistic(s, observable_product_c4(2))


@settings(max_examples=40, deadline=None)
@given(st.integers(2, 12), st.integers(0, 10_000))
def test_statistic_bounded_by_sup_norm(n, seed):
    rng = np.random.default_rng(seed)
    Q, _ = np.linalg.qr(rng.normal(size=(n, n)))
    vals = rng.uniform(-1, 1, size=n)
    vals -= vals.mean()
    vals /= max(1.0, np.abs(vals).max())
    stat = qe_statistic(Spectrum(np.zeros(n), Q.T), Observable(vals))
    assert 0 <= stat <= np.abs(vals).max() ** 2 + 1e-12


def test_constant_observable_basis_invariant():
    # zero-sum rules out nonzero constants, so check the diagonal identity directly
    s = eig_sym(random_regular(16, 3, 2))
    const = np.full(16, 0.3)
    terms = (s.vectors ** 2) @ const
    np.testing.assert_allclose(terms, 0.3)


def hub_setup(n=50, d=8, seed=2):
    h = hub_glue(random_regular(n, d, seed))
    return h, hub_localized_family(h, eig_sym(h.base))


def test_hub_family():
    h, fam = hub_setup()
    assert len(fam) == 50
    assert np.all(fam.vectors[:, h.hub] == 0)
    assert np.all(fam.vectors[:, h.offsets[2]:] == 0)
    assert fam.gram_deviation() <= 1e-8
    assert fam.residual <= 1e-8
    np.testing.assert_allclose(diagonal_terms(fam, observable_hub(h)), 1.0, atol=1e-12)
    base_spec = eig_sym(h.base)
    np.testing.assert_array_equal(fam.eigenvalues, base_spec.eigenvalues)


def test_hub_family_rejects_wrong_spectrum():
    h, _ = hub_setup(n=30)
    bad = Spectrum(np.zeros(30), np.eye(30))
    with pytest.raises(ValueError):
        hub_localized_family(h, bad)


@pytest.mark.parametrize("n", [50, 100])
def test_completed_basis(n):
    h, fam = hub_setup(n=n)
    spec = eig_sym(h.graph)
    lam = complete_basis_containing(fam, spec)
    N = 4 * n + 1
    assert len(lam) == N
    assert lam.gram_deviation() <= 1e-8
    assert lam.residual_against(h.graph.adjacency_matrix()) <= 1e-6
    # each family vector appears verbatim
    for row in fam.vectors:
        assert np.abs(lam.vectors - row).max(axis=1).min() <= 1e-8
    clusters = eigenspace_clusters(spec.eigenvalues)
    np.testing.assert_allclose(np.sort(lam.eigenvalues), spec.eigenvalues, atol=1e-6 * max(len(c) for c in clusters))
    bound = n / (4 * n + 1)
    assert qe_statistic(lam, observable_hub(h)) >= bound - 1e-9
    assert bound >= 1 / 8


def test_complete_basis_rejects_non_eigenvector():
    h, fam = hub_setup(n=30)
    spec = eig_sym(h.graph)
    x = np.zeros(h.graph.n)
    x[0] = 1.0
    with pytest.raises(ValueError):
        complete_basis_containing(x[None, :], spec)


def test_eigenspace_clusters():
    groups = eigenspace_clusters(np.array([0.0, 1.0, 1.0 + 5e-7, 1.0 + 9e-7, 3.0]))
    assert [g.tolist() for g in groups] == [[0], [1, 2, 3], [4]]
