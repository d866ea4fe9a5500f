"""Continuous-Galerkin assembly, Gauss-point evaluation, and solvers.

Constraints from hanging nodes are folded through the mesh's constraint
matrix T: assembled node-space operators A become T' A T and node-space
vectors b become T' b, so all global systems act on independent dofs only
and remain symmetric.
"""
from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from .errors import NewtonError, SolverError
from .mesh import MAX_LEVEL, MeshTopology, NodeNumbering, enumerate_nodes
from .quadrature import element_nodal_basis, gauss_legendre, tensor_weights

__all__ = [
    "NodalField",
    "GaussField",
    "SparseSystem",
    "eval_at_gauss",
    "eval_grad_at_gauss",
    "gauss_point_coords",
    "integrate_gauss",
    "assemble_mass",
    "assemble_stiffness",
    "project_l2",
    "interpolate_nodal",
    "solve_spd",
    "solve_newton",
]


@dataclass
class NodalField:
    """One value per independent global node of (mesh, degree)."""

    mesh: MeshTopology
    p: int
    values: np.ndarray

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=float)
        nn = enumerate_nodes(self.mesh, self.p)
        if self.values.shape != (nn.n_dofs,):
            raise ValueError(
                f"field length {self.values.shape} does not match {nn.n_dofs} dofs"
            )

    @property
    def numbering(self) -> NodeNumbering:
        return enumerate_nodes(self.mesh, self.p)

    def node_values(self) -> np.ndarray:
        return self.numbering.node_values(self.values)

    def element_values(self) -> np.ndarray:
        """Per-leaf local node values, constraint-resolved; shape (n_leaves, n_loc)."""
        return self.node_values()[self.numbering.elem_nodes]


@dataclass
class GaussField:
    """Per-leaf quadrature-point values; leaves in Morton order, points
    lexicographic within each leaf."""

    mesh: MeshTopology
    p: int
    n_q: int
    values: np.ndarray

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=float)
        expected = (self.mesh.n_leaves, self.n_q**self.mesh.dim)
        if self.values.shape != expected:
            raise ValueError(f"gauss block shape {self.values.shape} != {expected}")


@dataclass
class SparseSystem:
    """A symmetric sparse system together with its solver settings."""

    matrix: sp.csr_matrix
    rhs: np.ndarray
    tol: float = 1e-12
    max_iter: int | None = None


@lru_cache(maxsize=None)
def _tables(dim: int, p: int, n_q: int):
    """Reference-element tensor tables for (dim, p, n_q).

    B[a, q] are basis values at the Gauss lattice, G[d][a, q] the reference
    derivatives along axis d, w the tensor weights. Local nodes and Gauss
    points are both ordered lexicographically (x fastest).
    """
    rule = gauss_legendre(n_q)
    basis = element_nodal_basis(p)
    vals = basis.values_at(rule.points)
    ders = basis.derivs_at(rule.points)
    if dim == 1:
        b, grads = vals, (ders,)
    else:
        b = np.kron(vals, vals)
        grads = (np.kron(vals, ders), np.kron(ders, vals))  # d/dx, d/dy
    w = tensor_weights(rule, dim)
    mass_ref = (b * w[None, :]) @ b.T
    stiff_ref = sum((g * w[None, :]) @ g.T for g in grads)
    return b, grads, w, mass_ref, stiff_ref, rule


def _node_operators(mesh: MeshTopology, p: int, n_q: int):
    """Unconstrained mass/stiffness over all geometric nodes (cached)."""
    nn = enumerate_nodes(mesh, p)
    key = ("node_ops", n_q)
    ops = nn.cache.get(key)
    if ops is not None:
        return ops
    _, _, _, mass_ref, stiff_ref, _ = _tables(mesh.dim, p, n_q)
    dim = mesh.dim
    h = mesh.leaf_sizes_physical
    mass_scale = (0.5 * h) ** dim
    # gradient factor (2/h)^2 times the volume Jacobian
    stiff_scale = (0.5 * h) ** dim * (2.0 / h) ** 2

    n_loc = mass_ref.shape[0]
    rows = np.repeat(nn.elem_nodes, n_loc, axis=1).ravel()
    cols = np.tile(nn.elem_nodes, (1, n_loc)).ravel()
    n_nodes = nn.n_nodes
    mass_data = (mass_scale[:, None, None] * mass_ref[None, :, :]).ravel()
    stiff_data = (stiff_scale[:, None, None] * stiff_ref[None, :, :]).ravel()
    mass_u = sp.coo_matrix((mass_data, (rows, cols)), shape=(n_nodes, n_nodes)).tocsr()
    stiff_u = sp.coo_matrix((stiff_data, (rows, cols)), shape=(n_nodes, n_nodes)).tocsr()
    ops = (mass_u, stiff_u)
    nn.cache[key] = ops
    return ops


def _constrain(nn: NodeNumbering, a_nodes: sp.csr_matrix) -> sp.csr_matrix:
    t = nn.constraint_matrix
    return (t.T @ (a_nodes @ t)).tocsr()


def assemble_mass(mesh: MeshTopology, p: int, n_q: int | None = None) -> sp.csr_matrix:
    """Constrained global mass matrix, SPD on the independent dofs."""
    n_q = p + 1 if n_q is None else n_q
    nn = enumerate_nodes(mesh, p)
    key = ("mass_c", n_q)
    mat = nn.cache.get(key)
    if mat is None:
        mat = _constrain(nn, _node_operators(mesh, p, n_q)[0])
        nn.cache[key] = mat
    return mat


def assemble_stiffness(mesh: MeshTopology, p: int, n_q: int | None = None) -> sp.csr_matrix:
    """Constrained global stiffness matrix (pure Neumann: singular)."""
    n_q = p + 1 if n_q is None else n_q
    nn = enumerate_nodes(mesh, p)
    key = ("stiff_c", n_q)
    mat = nn.cache.get(key)
    if mat is None:
        mat = _constrain(nn, _node_operators(mesh, p, n_q)[1])
        nn.cache[key] = mat
    return mat


def eval_at_gauss(field: NodalField, n_q: int | None = None) -> GaussField:
    """Interpolate nodal values to the per-leaf Gauss lattice."""
    n_q = field.p + 1 if n_q is None else n_q
    b = _tables(field.mesh.dim, field.p, n_q)[0]
    return GaussField(field.mesh, field.p, n_q, field.element_values() @ b)


def eval_grad_at_gauss(field: NodalField, n_q: int | None = None) -> np.ndarray:
    """Physical gradients at Gauss points, shape (n_leaves, n_q^dim, dim)."""
    n_q = field.p + 1 if n_q is None else n_q
    grads = _tables(field.mesh.dim, field.p, n_q)[1]
    ev = field.element_values()
    scale = 2.0 / field.mesh.leaf_sizes_physical
    return np.stack([(ev @ g) * scale[:, None] for g in grads], axis=-1)


def gauss_point_coords(mesh: MeshTopology, n_q: int) -> np.ndarray:
    """Physical Gauss-lattice coordinates, shape (n_leaves, n_q^dim, dim)."""
    rule = gauss_legendre(n_q)
    dim = mesh.dim
    if dim == 1:
        ref = rule.points[:, None]
    else:
        # lexicographic lattice: x fastest
        ref = np.column_stack([np.tile(rule.points, n_q), np.repeat(rule.points, n_q)])
    h = mesh.leaf_sizes_physical
    lo = np.ldexp(mesh.anchors.astype(float), -MAX_LEVEL)
    centers = lo + 0.5 * h[:, None]
    return centers[:, None, :] + 0.5 * h[:, None, None] * ref[None, :, :]


def integrate_gauss(gf: GaussField) -> float:
    """Domain integral: sum of weight * Jacobian * value over all leaves."""
    w = _tables(gf.mesh.dim, gf.p, gf.n_q)[2]
    jac = (0.5 * gf.mesh.leaf_sizes_physical) ** gf.mesh.dim
    return float(jac @ (gf.values @ w))


def _gauss_rhs(gf: GaussField) -> np.ndarray:
    """Constrained load vector b_a = sum_q w_q |J| g_q N_a(x_q)."""
    nn = enumerate_nodes(gf.mesh, gf.p)
    b, _, w, _, _, _ = _tables(gf.mesh.dim, gf.p, gf.n_q)
    jac = (0.5 * gf.mesh.leaf_sizes_physical) ** gf.mesh.dim
    contrib = (gf.values * w[None, :]) @ b.T * jac[:, None]
    rhs = np.zeros(nn.n_nodes)
    np.add.at(rhs, nn.elem_nodes, contrib)
    return nn.constraint_matrix.T @ rhs


def project_l2(
    gf: GaussField,
    tol: float = 1e-12,
    max_iter: int | None = None,
) -> NodalField:
    """Recover nodal coefficients from Gauss-point data by a mass solve.

    The mass matrix is integrated with the same rule that produced ``gf``,
    which is what makes the projection conservative up to solver residual.
    """
    mass = assemble_mass(gf.mesh, gf.p, gf.n_q)
    rhs = _gauss_rhs(gf)
    sol = solve_spd(SparseSystem(mass, rhs, tol=tol, max_iter=max_iter))
    return NodalField(gf.mesh, gf.p, sol)


def interpolate_nodal(mesh: MeshTopology, p: int, fn) -> NodalField:
    """Nodal interpolant of ``fn(coords)`` on the independent nodes."""
    nn = enumerate_nodes(mesh, p)
    coords = nn.independent_coords()
    return NodalField(mesh, p, np.asarray(fn(coords), dtype=float))


def solve_spd(system: SparseSystem, x0: np.ndarray | None = None) -> np.ndarray:
    """Jacobi-preconditioned conjugate gradients for SPD systems.

    Terminates when ||b - A x|| <= tol * ||b||; raises SolverError on
    indefiniteness or when the iteration cap is hit. Deterministic.
    """
    a = system.matrix
    b = np.asarray(system.rhs, dtype=float)
    n = len(b)
    bnorm = float(np.linalg.norm(b))
    if bnorm == 0.0:
        return np.zeros(n)
    diag = a.diagonal()
    if np.any(diag <= 0.0):
        raise SolverError("matrix has non-positive diagonal entries")
    inv_diag = 1.0 / diag
    max_iter = system.max_iter if system.max_iter is not None else 20 * n + 200
    target = system.tol * bnorm

    x = np.zeros(n) if x0 is None else np.asarray(x0, dtype=float).copy()
    r = b - a @ x if x0 is not None else b.copy()
    z = inv_diag * r
    rho = float(r @ z)
    pvec = z.copy()
    rnorm = float(np.linalg.norm(r))
    for it in range(max_iter):
        if rnorm <= target:
            true_r = b - a @ x
            rnorm = float(np.linalg.norm(true_r))
            if rnorm <= target:
                return x
            r = true_r
            z = inv_diag * r
            rho = float(r @ z)
            pvec = z.copy()
        ap = a @ pvec
        curvature = float(pvec @ ap)
        if curvature <= 0.0:
            raise SolverError(f"non-positive curvature at iteration {it}")
        alpha = rho / curvature
        x += alpha * pvec
        r -= alpha * ap
        rnorm = float(np.linalg.norm(r))
        z = inv_diag * r
        rho_new = float(r @ z)
        pvec = z + (rho_new / rho) * pvec
        rho = rho_new
    raise SolverError(
        f"PCG did not reach {system.tol:.1e} in {max_iter} iterations "
        f"(relative residual {rnorm / bnorm:.3e})"
    )


def solve_newton(
    residual_fn,
    jacobian_fn,
    initial_guess,
    tol: float = 1e-10,
    max_iter: int = 30,
):
    """Newton iteration with a direct linear solve per step.

    Convergence when ||R|| <= tol * max(1, ||R0||). Returns (solution,
    residual trace); raises NewtonError with the trace on failure.
    """
    scalar = np.isscalar(initial_guess)
    x = np.atleast_1d(np.asarray(initial_guess, dtype=float)).copy()

    def res(v):
        return np.atleast_1d(np.asarray(residual_fn(v[0] if scalar else v), dtype=float))

    r = res(x)
    r0 = max(1.0, float(np.linalg.norm(r)))
    trace = [float(np.linalg.norm(r))]
    for _ in range(max_iter):
        if trace[-1] <= tol * r0:
            return (float(x[0]) if scalar else x), trace
        jac = jacobian_fn(x[0] if scalar else x)
        try:
            if sp.issparse(jac):
                dx = spla.spsolve(jac.tocsc(), -r)
            else:
                jac = np.atleast_2d(np.asarray(jac, dtype=float))
                dx = np.linalg.solve(jac, -r)
        except np.linalg.LinAlgError as exc:
            raise NewtonError(f"linear solve failed: {exc}", trace) from exc
        if not np.all(np.isfinite(dx)):
            raise NewtonError("linear solve produced non-finite update", trace)
        x = x + dx
        r = res(x)
        trace.append(float(np.linalg.norm(r)))
        if not np.isfinite(trace[-1]):
            raise NewtonError("residual is not finite", trace)
    if trace[-1] <= tol * r0:
        return (float(x[0]) if scalar else x), trace
    raise NewtonError(
        f"no convergence in {max_iter} iterations (residuals {trace[0]:.3e} -> {trace[-1]:.3e})",
        trace,
    )
