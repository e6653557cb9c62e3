"""Dense symmetric eigendecomposition and the expansion (EXP) diagnostic.

Eigenvalues are kept in ascending order internally. Reports that speak
about the second-largest eigenvalue convert explicitly.
"""
from __future__ import annotations

import json
from dataclasses import dataclass

import numpy as np

from qegraphs.graph_core import Graph

ORTHO_TOL = 1e-8


class EigenError(RuntimeError):
    pass


@dataclass(frozen=True)
class Spectrum:
    """Eigenpairs; ``vectors[i]`` (a row) belongs to ``eigenvalues[i]``."""

    eigenvalues: np.ndarray
    vectors: np.ndarray
    residual: float = 0.0

    def __len__(self):
        return len(self.eigenvalues)

    @property
    def descending(self) -> np.ndarray:
        return self.eigenvalues[::-1]

    def gram_deviation(self) -> float:
        V = self.vectors
        if V.size == 0:
            return 0.0
        return float(np.abs(V @ V.T - np.eye(len(V))).max())

    def residual_against(self, A: np.ndarray) -> float:
        """max_i ||A v_i - lambda_i v_i||_2 for an explicit matrix ``A``."""
        if len(self) == 0:
            return 0.0
        R = self.vectors @ A.T - self.eigenvalues[:, None] * self.vectors
        return float(np.linalg.norm(R, axis=1).max())

    def to_json(self) -> str:
        return json.dumps({"eigenvalues": self.eigenvalues.tolist(), "residual": self.residual})

    def write_vectors_csv(self, path) -> None:
        np.savetxt(path, self.vectors, delimiter=",", fmt="%.17g")


def eig_sym(g: Graph) -> Spectrum:
    """Full eigendecomposition of the adjacency matrix of ``g``.

    Raises :class:`EigenError` if the residual or orthonormality bound fails.
    """
    if g.n < 1:
        raise ValueError("graph has no vertices")
    A = g.adjacency_matrix()
    w, V = np.linalg.eigh(A)
    spec = Spectrum(w, np.ascontiguousarray(V.T), 0.0)
    res = spec.residual_against(A)
    norm1 = float(np.abs(A).sum(axis=0).max())
    if res > 1e-8 * max(1.0, norm1):
        raise EigenError(f"eigendecomposition residual {res:.3e} exceeds tolerance")
    if spec.gram_deviation() > ORTHO_TOL:
        raise EigenError("eigenvectors not orthonormal within tolerance")
    return Spectrum(w, spec.vectors, res)


@dataclass(frozen=True)
class ExpReport:
    d: int
    lambda2: float
    lambda_min: float
    epsilon: float

    def as_dict(self) -> dict:
        return {"d": self.d, "lambda2": self.lambda2, "lambda_min": self.lambda_min, "epsilon": self.epsilon}


def exp_report(spec: Spectrum, d: int) -> ExpReport:
    """Expansion parameter ``1 - max(lambda_2, |lambda_min|) / d``."""
    if len(spec) < 2:
        raise ValueError("need at least two eigenvalues")
    top = float(spec.eigenvalues[-1])
    tol = max(1e-8, 10 * spec.residual) * max(1, d)
    if abs(top - d) > tol:
        raise ValueError(f"top eigenvalue {top} differs from d={d}; graph not {d}-regular")
    lam2 = float(spec.eigenvalues[-2])
    lam_min = float(spec.eigenvalues[0])
    eps = 1.0 - max(lam2, abs(lam_min)) / d
    return ExpReport(d=d, lambda2=lam2, lambda_min=lam_min, epsilon=eps)


def product_spectrum(s1: Spectrum, s2: Spectrum) -> np.ndarray:
    """Sorted multiset of all pairwise sums, i.e. the spectrum of the Cartesian product."""
    return np.sort(np.add.outer(np.asarray(s1.eigenvalues), np.asarray(s2.eigenvalues)).ravel())
