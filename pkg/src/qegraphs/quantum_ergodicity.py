"""Localized eigenbases, observables and the quantum-ergodicity statistic.

The statistic of an orthonormal basis ``psi_1..psi_N`` against an observable
``a`` is ``(1/N) sum_i <psi_i, a psi_i>^2`` with
``<psi, a psi> = sum_v a(v) psi(v)^2``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from qegraphs.graph_core import HubGraph
from qegraphs.spectral import Spectrum

EIGENSPACE_TOL = 1e-6


@dataclass(frozen=True)
class Observable:
    """Zero-sum real vertex function bounded by 1 in sup norm."""

    values: np.ndarray

    def __post_init__(self):
        vals = np.asarray(self.values, dtype=float)
        object.__setattr__(self, "values", vals)
        n = max(len(vals), 1)
        if abs(math.fsum(vals)) > 1e-12 * n:
            raise ValueError("observable must sum to zero")
        if vals.size and np.abs(vals).max() > 1.0:
            raise ValueError("observable must satisfy |a(v)| <= 1")

    def __len__(self):
        return len(self.values)


@dataclass(frozen=True)
class EigenbasisFamilyReport:
    graph_id: str
    basis: str
    statistic: float
    diagonal_terms: np.ndarray
    bound: float | None = None

    def as_dict(self) -> dict:
        return {
            "graph": self.graph_id,
            "basis": self.basis,
            "n": len(self.diagonal_terms),
            "statistic": self.statistic,
            "bound": self.bound,
            "diagonal_terms": self.diagonal_terms.tolist(),
        }


def c4_localized_basis() -> Spectrum:
    """The localized eigenbasis of C_4, with the two zero-modes supported on opposite pairs."""
    h, r = 0.5, 1.0 / math.sqrt(2.0)
    vecs = np.array(
        [
            [h, h, h, h],
            [r, 0.0, -r, 0.0],
            [0.0, r, 0.0, -r],
            [h, -h, h, -h],
        ]
    )
    return Spectrum(np.array([2.0, 0.0, 0.0, -2.0]), vecs, 0.0)


def tensor_basis(s1: Spectrum, s2: Spectrum) -> Spectrum:
    """Products ``phi(u) * chi(v)`` in row-major order, pair ``(i, j)`` at row ``i*len(s2)+j``."""
    V = np.einsum("iu,jv->ijuv", s1.vectors, s2.vectors)
    n1, n2 = s1.vectors.shape[1], s2.vectors.shape[1]
    vecs = V.reshape(len(s1) * len(s2), n1 * n2)
    vals = np.add.outer(s1.eigenvalues, s2.eigenvalues).ravel()
    # ||(A1 x I + I x A2 - l1 - l2)(phi x chi)|| <= r1 + r2 for unit factors
    return Spectrum(vals, vecs, s1.residual + s2.residual)


def observable_product_c4(n: int) -> Observable:
    """+1 on C_4 fiber positions 0, 2 and -1 on positions 1, 3, for ``G_n x C_4``."""
    return Observable(np.tile([1.0, -1.0, 1.0, -1.0], n))


def observable_hub(h: HubGraph) -> Observable:
    """+1 on copies 0, 1, -1 on copies 2, 3, zero on further copies and the hub."""
    if h.copies < 4:
        raise ValueError(f"need at least 4 copies, got {h.copies}")
    a = np.zeros(h.graph.n)
    for k, sign in ((0, 1.0), (1, 1.0), (2, -1.0), (3, -1.0)):
        a[h.offsets[k]: h.offsets[k] + h.n_base] = sign
    return Observable(a)


def diagonal_terms(basis: Spectrum | np.ndarray, a: Observable) -> np.ndarray:
    V = basis.vectors if isinstance(basis, Spectrum) else np.asarray(basis)
    if V.shape[1] != len(a):
        raise ValueError(f"basis dimension {V.shape[1]} != observable length {len(a)}")
    return (V * V) @ a.values


def qe_statistic(basis: Spectrum | np.ndarray, a: Observable) -> float:
    terms = diagonal_terms(basis, a)
    if terms.size == 0:
        return 0.0
    return math.fsum(terms * terms) / len(terms)


def qe_report(graph_id: str, basis: Spectrum, a: Observable, description: str, bound=None) -> EigenbasisFamilyReport:
    terms = diagonal_terms(basis, a)
    stat = math.fsum(terms * terms) / len(terms)
    return EigenbasisFamilyReport(graph_id, description, stat, terms, bound)


def hub_localized_family(h: HubGraph, base_spectrum: Spectrum, tol: float = 1e-8) -> Spectrum:
    """Eigenvectors ``phi/sqrt2`` on copy 0 and ``-phi/sqrt2`` on copy 1, zero elsewhere.

    The hub sees the two copies with opposite signs, so each lifts an
    eigenpair of the edge-deleted base graph to one of the glued graph.
    """
    if h.copies < 2:
        raise ValueError("need at least two copies")
    n = h.n_base
    if base_spectrum.vectors.shape != (n, n):
        raise ValueError("base spectrum must be a full eigenbasis of the edge-deleted graph")
    X = np.zeros((n, h.graph.n))
    s = 1.0 / math.sqrt(2.0)
    X[:, h.offsets[0]: h.offsets[0] + n] = s * base_spectrum.vectors
    X[:, h.offsets[1]: h.offsets[1] + n] = -s * base_spectrum.vectors
    fam = Spectrum(base_spectrum.eigenvalues.copy(), X, 0.0)
    res = fam.residual_against(h.graph.adjacency_matrix())
    if res > tol:
        raise ValueError(f"lifted family residual {res:.3e} exceeds {tol:g}")
    return Spectrum(fam.eigenvalues, X, res)


def eigenspace_clusters(eigenvalues: np.ndarray, tol: float = EIGENSPACE_TOL) -> list[np.ndarray]:
    """Index groups of ascending eigenvalues, chaining neighbors closer than ``tol``."""
    if len(eigenvalues) == 0:
        return []
    breaks = np.nonzero(np.diff(eigenvalues) > tol)[0] + 1
    return np.split(np.arange(len(eigenvalues)), breaks)


def complete_basis_containing(X: Spectrum | np.ndarray, spec: Spectrum, tol: float = EIGENSPACE_TOL) -> Spectrum:
    """Rotate each eigenspace of ``spec`` so that the eigenbasis contains the rows of ``X``.

    Each row of ``X`` is assigned to the eigenspace cluster matching its
    Rayleigh quotient and must satisfy ``||A x - lambda x|| <= tol``, with
    ``A`` reconstructed from ``spec``. The rows are kept verbatim; the rest of
    each eigenspace is an orthonormal basis of its part orthogonal to them.
    """
    Xv = X.vectors if isinstance(X, Spectrum) else np.atleast_2d(np.asarray(X, dtype=float))
    N = spec.vectors.shape[1]
    if Xv.shape[1] != N:
        raise ValueError("vector length does not match the spectrum")
    if Xv.shape[0] and np.abs(Xv @ Xv.T - np.eye(len(Xv))).max() > 1e-8:
        raise ValueError("input family is not orthonormal")

    W, lam = spec.vectors, spec.eigenvalues
    coeff = Xv @ W.T                        # coordinates in the eigenbasis
    rayleigh = (coeff * coeff) @ lam
    clusters = eigenspace_clusters(lam, tol)
    centers = np.array([lam[c].mean() for c in clusters])

    assigned: dict[int, list[int]] = {}
    for i in range(len(Xv)):
        k = int(np.argmin(np.abs(centers - rayleigh[i])))
        Ax = (coeff[i] * lam) @ W
        if np.linalg.norm(Ax - rayleigh[i] * Xv[i]) > tol:
            raise ValueError(f"vector {i} is not within {tol:g} of an eigenspace")
        assigned.setdefault(k, []).append(i)

    out_vals, out_vecs = [], []
    for k, idx in enumerate(clusters):
        E = W[idx]
        mine = assigned.get(k, [])
        if len(mine) > len(idx):
            raise ValueError(f"{len(mine)} vectors assigned to an eigenspace of dimension {len(idx)}")
        Xk = Xv[mine]
        rest = E - (E @ Xk.T) @ Xk if mine else E
        need = len(idx) - len(mine)
        if need:
            U, sv, _ = np.linalg.svd(rest.T, full_matrices=False)
            if sv[need - 1] < 0.5:
                raise ValueError("eigenspace complement is degenerate; vectors not inside the eigenspace")
            comp = U[:, :need].T
            out_vecs.append(comp)
            out_vals.append(np.full(need, lam[idx].mean()))
        if mine:
            out_vecs.append(Xk)
            out_vals.append(rayleigh[mine])
    vals = np.concatenate(out_vals)
    vecs = np.vstack(out_vecs)
    order = np.argsort(vals, kind="stable")
    return Spectrum(vals[order], vecs[order], spec.residual)
