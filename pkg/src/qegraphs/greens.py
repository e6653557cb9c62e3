"""Green's functions ``G^z`` with ``(A - z) G^z = I`` for ``Im z > 0``.

Finite graphs are solved densely. The d-regular tree uses the closed-form
branch function ``m`` solving ``(d-1) m^2 + z m + 1 = 0`` (``Im m > 0``);
its root entry is ``1 / (-z - d m)`` and entries decay by ``-m`` per step.
Products with a finite fiber go through the spectral sum
``G_{G1 x G2}^z = sum_i G_{G1}^{z - l_i} (x) psi_i psi_i^T``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Hashable, Iterable

import numpy as np
from scipy import integrate

from qegraphs.graph_core import Graph
from qegraphs.spectral import Spectrum

CONVENTION = "(A-z)G=I"
FINITE_GREEN_MAX_N = 2000


def _check_upper(z: complex) -> complex:
    z = complex(z)
    if not z.imag > 0:
        raise ValueError(f"z must lie in the open upper half-plane, got {z}")
    return z


@dataclass(frozen=True)
class GreensEvaluation:
    """Green's function at one spectral point: a dense matrix or an entry evaluator."""

    z: complex
    matrix: np.ndarray | None = None
    evaluator: Callable[[Hashable, Hashable], complex] | None = None
    convention: str = CONVENTION

    def entry(self, x, y) -> complex:
        if self.matrix is not None:
            return complex(self.matrix[x, y])
        return complex(self.evaluator(x, y))


def finite_green(g: Graph, z: complex, tol: float = 1e-8) -> GreensEvaluation:
    z = _check_upper(z)
    if g.n > FINITE_GREEN_MAX_N:
        raise ValueError(f"finite_green limited to {FINITE_GREEN_MAX_N} vertices")
    M = g.adjacency_matrix(complex) - z * np.eye(g.n)
    G = np.linalg.solve(M, np.eye(g.n, dtype=complex))
    res = float(np.abs(M @ G - np.eye(g.n)).max()) if g.n else 0.0
    if res > tol:
        cond = np.linalg.cond(M)
        raise np.linalg.LinAlgError(f"resolvent residual {res:.2e} (condition {cond:.2e})")
    return GreensEvaluation(z, matrix=G)


def finite_green_source(g: Graph) -> Callable[[complex], GreensEvaluation]:
    return lambda z: finite_green(g, z)


# --- tree -------------------------------------------------------------------

def tree_m(z: complex, d: int) -> complex:
    """Root value of a (d-1)-ary branch, the root of ``(d-1)m^2 + zm + 1`` with Im m > 0."""
    if d < 2:
        raise ValueError("d must be >= 2")
    z = _check_upper(z)
    root = np.sqrt(complex(z * z - 4 * (d - 1)))
    a = (-z + root) / (2 * (d - 1))
    b = (-z - root) / (2 * (d - 1))
    return complex(a if a.imag > b.imag else b)


def tree_m_fixed_point(z: complex, d: int, damping: float = 0.5, tol: float = 1e-12,
                       max_iter: int = 10_000) -> complex:
    """Damped iteration of ``m <- -1/(z + (d-1) m)``; independent of the quadratic branch choice."""
    z = _check_upper(z)
    m = 1j / math.sqrt(d - 1)
    for _ in range(max_iter):
        new = (1 - damping) * m + damping * (-1.0 / (z + (d - 1) * m))
        if abs(new - m) < tol:
            return complex(new)
        m = new
    raise RuntimeError(f"fixed point did not converge at z={z}")


def tree_green_entry(z: complex, d: int, dist: int) -> complex:
    if dist < 0:
        raise ValueError("distance must be nonnegative")
    m = tree_m(z, d)
    return (1.0 / (-z - d * m)) * (-m) ** dist


def tree_distance(x: tuple[int, ...], y: tuple[int, ...]) -> int:
    """Distance between tree vertices addressed by child-index paths from the root."""
    k = 0
    for a, b in zip(x, y):
        if a != b:
            break
        k += 1
    return len(x) + len(y) - 2 * k


def tree_green(d: int) -> Callable[[complex], GreensEvaluation]:
    """Resolvent source of T_d; entries are addressed by child-index tuples."""
    def at(z: complex) -> GreensEvaluation:
        z = _check_upper(z)
        m = tree_m(z, d)
        diag = 1.0 / (-z - d * m)
        return GreensEvaluation(z, evaluator=lambda x, y: diag * (-m) ** tree_distance(tuple(x), tuple(y)))
    return at


def truncated_tree_green(z: complex, d: int, depth: int, dist: int) -> complex:
    """Root-to-sphere entry of the depth-``depth`` truncated tree.

    ``delta_root`` lies in the radially symmetric subspace, where the
    adjacency is tridiagonal with couplings ``sqrt(d)`` then ``sqrt(d-1)``;
    a dense solve there gives the exact finite-tree entries.
    """
    z = _check_upper(z)
    if not 0 <= dist <= depth:
        raise ValueError("dist must lie in [0, depth]")
    J = np.zeros((depth + 1, depth + 1), dtype=complex)
    for k in range(depth):
        J[k, k + 1] = J[k + 1, k] = math.sqrt(d if k == 0 else d - 1)
    rhs = np.zeros(depth + 1, dtype=complex)
    rhs[0] = 1.0
    x = np.linalg.solve(J - z * np.eye(depth + 1), rhs)
    sphere = 1 if dist == 0 else d * (d - 1) ** (dist - 1)
    return complex(x[dist] / math.sqrt(sphere))


# --- products ---------------------------------------------------------------

def product_green(green1: Callable[[complex], GreensEvaluation], fiber: Spectrum, z: complex) -> GreensEvaluation:
    """Green's function of ``G1 x G2`` from shifted resolvents of G1 and an eigenbasis of G2.

    Dense when ``green1`` yields matrices (row-major product indexing);
    otherwise entries are addressed as ``((x, a), (y, b))``.
    """
    z = _check_upper(z)
    shifted = [green1(z - lam) for lam in fiber.eigenvalues]
    psi = fiber.vectors
    if all(g.matrix is not None for g in shifted):
        total = sum(np.kron(g.matrix, np.outer(p, p)) for g, p in zip(shifted, psi))
        return GreensEvaluation(z, matrix=total)

    def ev(xa, yb):
        (x, a), (y, b) = xa, yb
        return sum(g.entry(x, y) * p[a] * p[b] for g, p in zip(shifted, psi))

    return GreensEvaluation(z, evaluator=ev)


# --- densities --------------------------------------------------------------

def kesten_mckay(lam, d: int):
    """Kesten-McKay density ``d sqrt(4(d-1) - l^2) / (2 pi (d^2 - l^2))``."""
    if d < 3:
        raise ValueError("d must be >= 3")
    lam = np.asarray(lam, dtype=float)
    inside = 4 * (d - 1) - lam * lam
    with np.errstate(divide="ignore", invalid="ignore"):
        val = d * np.sqrt(np.clip(inside, 0, None)) / (2 * np.pi * (d * d - lam * lam))
    out = np.where(inside > 0, val, 0.0)
    return float(out) if out.ndim == 0 else out


def kesten_mckay_integral(d: int) -> float:
    edge = 2 * math.sqrt(d - 1)
    val, _ = integrate.quad(lambda x: kesten_mckay(x, d), -edge, edge, epsabs=1e-13, epsrel=1e-13, limit=200)
    return val


@dataclass(frozen=True)
class DensityCurve:
    grid: np.ndarray
    density: np.ndarray
    d: int
    shifts: np.ndarray
    eta: float | None = None

    def trapezoid_integral(self) -> float:
        return float(np.trapezoid(self.density, self.grid))

    def support(self) -> tuple[float, float]:
        edge = 2 * math.sqrt(self.d - 1)
        return float(self.shifts.min() - edge), float(self.shifts.max() + edge)

    def to_csv(self) -> str:
        return "lambda,density\n" + "".join(f"{x:.17g},{y:.17g}\n" for x, y in zip(self.grid, self.density))


def product_density(d: int, fiber: Spectrum | Iterable[float], grid) -> DensityCurve:
    """Spectral density of ``T_d x X``: the Kesten-McKay curve averaged over shifts by spec(X)."""
    shifts = np.asarray(fiber.eigenvalues if isinstance(fiber, Spectrum) else list(fiber), dtype=float)
    grid = np.asarray(grid, dtype=float)
    if np.any(np.diff(grid) < 0):
        raise ValueError("grid must be ascending")
    dens = np.mean([kesten_mckay(grid - s, d) for s in shifts], axis=0)
    return DensityCurve(grid, dens, d, shifts)


def product_density_integral(d: int, shifts) -> float:
    """Adaptive quadrature of the product density, split at every band edge."""
    shifts = np.asarray(shifts, dtype=float)
    edge = 2 * math.sqrt(d - 1)
    pts = np.unique(np.concatenate([shifts - edge, shifts + edge]))
    total = 0.0
    for lo, hi in zip(pts[:-1], pts[1:]):
        f = lambda x: float(np.mean([kesten_mckay(x - s, d) for s in shifts]))
        val, _ = integrate.quad(f, lo, hi, epsabs=1e-13, epsrel=1e-13, limit=200)
        total += val
    return total


def smoothed_product_density(d: int, fiber: Spectrum, grid, eta: float = 1e-3) -> DensityCurve:
    """``(1/pi) Im`` of the fiber-averaged root diagonal of the tree-product resolvent."""
    src = tree_green(d)
    root = ()
    grid = np.asarray(grid, dtype=float)
    out = np.empty(len(grid))
    k = fiber.vectors.shape[1]
    for i, lam in enumerate(grid):
        g = product_green(src, fiber, lam + 1j * eta)
        out[i] = np.mean([g.entry((root, a), (root, a)).imag for a in range(k)]) / np.pi
    return DensityCurve(grid, out, d, np.asarray(fiber.eigenvalues, dtype=float), eta)


def im_bound_sweep(d: int, fiber: Spectrum, z_grid, dist: int = 0) -> float:
    """Max of |Im G((x,a),(y,b))| over ``z_grid`` and all fiber pairs, tree distance ``dist``."""
    src = tree_green(d)
    x, y = (), (0,) * dist
    k = fiber.vectors.shape[1]
    best = 0.0
    for z in z_grid:
        g = product_green(src, fiber, z)
        for a in range(k):
            for b in range(k):
                best = max(best, abs(g.entry((x, a), (y, b)).imag))
    return best


def im_triangle_bound(d: int, fiber: Spectrum, z_grid, dist: int = 0) -> float:
    """``sum_i max_z |Im G_T^{z - l_i}|``, an upper bound for :func:`im_bound_sweep`."""
    z_grid = list(z_grid)
    return sum(max(abs(tree_green_entry(z - lam, d, dist).imag) for z in z_grid) for lam in fiber.eigenvalues)
