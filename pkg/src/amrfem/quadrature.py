"""Gauss-Legendre rules and 1D Lagrange bases on the reference interval [-1, 1].

Two basis families are provided: the usual element-nodal family (equispaced
nodes, endpoints included) and the quadrature-point-nodal family whose nodes
sit at the Gauss points, which is what makes local mass matrices diagonal.
"""
from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

import numpy as np

__all__ = [
    "QuadratureRule1D",
    "LagrangeBasis1D",
    "gauss_legendre",
    "element_nodal_basis",
    "quad_point_basis",
    "lagrange_eval",
    "tensor_index_map",
    "tensor_weights",
]

# Rules for n <= 5 are pinned as constants so downstream operator matrices are
# bit-stable; larger rules are computed once at first use.
_GL_TABLE = {
    1: ((0.0,), (2.0,)),
    2: ((-0.5773502691896257645, 0.5773502691896257645), (1.0, 1.0)),
    3: (
        (-0.7745966692414833770, 0.0, 0.7745966692414833770),
        (5.0 / 9.0, 8.0 / 9.0, 5.0 / 9.0),
    ),
    4: (
        (
            -0.8611363115940525752,
            -0.3399810435848562648,
            0.3399810435848562648,
            0.8611363115940525752,
        ),
        (
            0.3478548451374538574,
            0.6521451548625461426,
            0.6521451548625461426,
            0.3478548451374538574,
        ),
    ),
    5: (
        (
            -0.9061798459386639928,
            -0.5384693101056830910,
            0.0,
            0.5384693101056830910,
            0.9061798459386639928,
        ),
        (
            0.2369268850561890875,
            0.4786286704993664680,
            0.5688888888888888889,
            0.4786286704993664680,
            0.2369268850561890875,
        ),
    ),
}


@dataclass(frozen=True)
class QuadratureRule1D:
    """An n-point rule on [-1, 1]; exact for polynomials of degree 2n-1."""

    n_points: int
    points: np.ndarray
    weights: np.ndarray


def _legendre_and_deriv(n, x):
    """P_n(x) and P_n'(x) by the three-term recurrence."""
    p0 = np.ones_like(x)
    p1 = x.copy()
    for k in range(2, n + 1):
        p0, p1 = p1, ((2 * k - 1) * x * p1 - (k - 1) * p0) / k
    dp = n * (x * p1 - p0) / (x * x - 1.0)
    return p1, dp


def gauss_legendre(n: int) -> QuadratureRule1D:
    """Return the n-point Gauss-Legendre rule on [-1, 1].

    Small rules come from a pinned table; larger ones use Newton iteration
    on the Legendre roots.
    """
    if n < 1:
        raise ValueError(f"quadrature order must be >= 1, got {n}")
    if n in _GL_TABLE:
        pts, wts = _GL_TABLE[n]
        return QuadratureRule1D(n, np.array(pts), np.array(wts))
    i = np.arange(n)
    x = np.cos(np.pi * (4 * i + 3) / (4 * n + 2))
    for _ in range(100):
        p, dp = _legendre_and_deriv(n, x)
        dx = p / dp
        x -= dx
        if np.max(np.abs(dx)) < 1e-16:
            break
    x = 0.5 * (x - x[::-1])  # enforce symmetry exactly
    _, dp = _legendre_and_deriv(n, x)
    w = 2.0 / ((1.0 - x * x) * dp * dp)
    order = np.argsort(x)
    return QuadratureRule1D(n, x[order], w[order])


@dataclass(frozen=True)
class LagrangeBasis1D:
    """Cardinal polynomials N_j on a set of distinct nodes in [-1, 1].

    Evaluation uses the barycentric form with an exact shortcut when the
    abscissa coincides with a node, so N_j(node_k) is exactly delta_jk.
    """

    degree: int
    nodes: np.ndarray
    bary_weights: np.ndarray

    @property
    def n_nodes(self) -> int:
        return len(self.nodes)

    def values_at(self, x) -> np.ndarray:
        """Table N[j, q] = N_j(x_q); x may be scalar or 1D array."""
        x = np.atleast_1d(np.asarray(x, dtype=float))
        diff = x[None, :] - self.nodes[:, None]
        hit_node, hit_x = np.nonzero(diff == 0.0)
        diff[hit_node, hit_x] = 1.0  # placeholder, overwritten below
        c = self.bary_weights[:, None] / diff
        vals = c / c.sum(axis=0)
        for j, q in zip(hit_node, hit_x):
            vals[:, q] = 0.0
            vals[j, q] = 1.0
        return vals

    def derivs_at(self, x) -> np.ndarray:
        """Table D[j, q] = N_j'(x_q)."""
        x = np.atleast_1d(np.asarray(x, dtype=float))
        out = np.empty((self.n_nodes, len(x)))
        for q, xq in enumerate(x):
            hits = np.nonzero(self.nodes == xq)[0]
            if hits.size:
                i = hits[0]
                row = np.zeros(self.n_nodes)
                mask = np.arange(self.n_nodes) != i
                row[mask] = (self.bary_weights[mask] / self.bary_weights[i]) / (
                    xq - self.nodes[mask]
                )
                row[i] = -row[mask].sum()
                out[:, q] = row
            else:
                inv = 1.0 / (xq - self.nodes)
                c = self.bary_weights * inv
                vals = c / c.sum()
                out[:, q] = vals * (inv.sum() - inv)
        return out


def _make_basis(nodes: np.ndarray, degree: int) -> LagrangeBasis1D:
    diff = nodes[:, None] - nodes[None, :]
    np.fill_diagonal(diff, 1.0)
    w = 1.0 / diff.prod(axis=1)
    return LagrangeBasis1D(degree, nodes, w)


@lru_cache(maxsize=None)
def element_nodal_basis(p: int) -> LagrangeBasis1D:
    """Degree-p basis with equispaced nodes (Q1: endpoints, Q2: + midpoint)."""
    if p < 1:
        raise ValueError(f"degree must be >= 1, got {p}")
    return _make_basis(np.linspace(-1.0, 1.0, p + 1), p)


@lru_cache(maxsize=None)
def quad_point_basis(p: int, n_points: int | None = None) -> LagrangeBasis1D:
    """Degree-(n-1) basis whose nodes are the n-point Gauss abscissae."""
    n = p + 1 if n_points is None else n_points
    return _make_basis(gauss_legendre(n).points.copy(), n - 1)


def lagrange_eval(basis: LagrangeBasis1D, j: int, x: float) -> float:
    """Value of the j-th cardinal polynomial of ``basis`` at ``x``."""
    if not 0 <= j < basis.n_nodes:
        raise ValueError(f"basis index {j} out of range [0, {basis.n_nodes})")
    return float(basis.values_at(x)[j, 0])


def tensor_index_map(lex_idx: int, dim: int, n: int) -> tuple[int, int, int]:
    """Decode a lexicographic lattice index into (I_x, I_y, I_z)."""
    if dim not in (1, 2, 3):
        raise ValueError(f"dim must be 1, 2, or 3, got {dim}")
    if not 0 <= lex_idx < n**dim:
        raise ValueError(f"index {lex_idx} out of range for n={n}, dim={dim}")
    if dim == 1:
        return lex_idx, 0, 0
    if dim == 2:
        return lex_idx % n, lex_idx // n, 0
    return lex_idx % n, (lex_idx // n) % n, lex_idx // (n * n)


def tensor_weights(rule: QuadratureRule1D, dim: int) -> np.ndarray:
    """Lexicographically ordered tensor-product weights (length n^dim)."""
    w = rule.weights
    out = w
    for _ in range(dim - 1):
        out = np.kron(w, out)  # slower axis appended on the left
    return out
