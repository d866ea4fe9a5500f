"""Time-dependent drivers: manufactured-solution diffusion and Cahn-Hilliard.

Both use continuous Galerkin in space with homogeneous Neumann boundaries.
Diffusion is integrated with theta-weighted (default Crank-Nicolson) steps;
Cahn-Hilliard uses fully implicit backward Euler on the split (phi, mu)
system solved by Newton.
"""
from __future__ import annotations

from dataclasses import dataclass, field as dc_field

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from .errors import NewtonError
from .fem import (
    NodalField,
    SparseSystem,
    _tables,
    assemble_mass,
    assemble_stiffness,
    eval_at_gauss,
    eval_grad_at_gauss,
    enumerate_nodes,
    solve_newton,
    solve_spd,
)
from .mesh import MeshTopology

__all__ = [
    "DiffusionProblem",
    "PolynomialFreeEnergy",
    "FloryHugginsFreeEnergy",
    "make_free_energy",
    "CahnHilliardProblem",
    "Diagnostics",
    "mms_exact",
    "diffusion_step",
    "ch_step",
    "ch_residual_and_jacobian",
    "chemical_potential_init",
    "energy",
    "mass_drift",
    "random_mixture_ic",
]


@dataclass
class DiffusionProblem:
    """Diffusion with the separable cosine manufactured solution."""

    amplitude: float = 0.1
    kappa: float = 0.03
    dt: float = 0.01
    t_final: float = 1.0
    theta: float = 0.5
    mass_tol: float = 1e-12
    pcg_max_iter: int | None = None
    n_q: int | None = None  # None: p + 1 Gauss points per dimension

    def __post_init__(self):
        if self.kappa <= 0:
            raise ValueError("kappa must be positive")
        if not 0.0 <= self.theta <= 1.0:
            raise ValueError("theta must lie in [0, 1]")


def mms_exact(x, y, t, problem: DiffusionProblem):
    """1 + A cos(2 pi x) cos(2 pi y) exp(-8 pi^2 kappa t)."""
    decay = np.exp(-8.0 * np.pi**2 * problem.kappa * t)
    return 1.0 + problem.amplitude * np.cos(2 * np.pi * np.asarray(x)) * np.cos(
        2 * np.pi * np.asarray(y)
    ) * decay


def diffusion_step(field: NodalField, problem: DiffusionProblem) -> NodalField:
    """One theta-step of the diffusion equation on the field's mesh.

    Solves (M/dt + theta*kappa*K) u = (M/dt - (1-theta)*kappa*K) u_old with
    the SPD conjugate-gradient solver; on a static mesh the v=1 test function
    makes the step conservative to solver tolerance.
    """
    mesh, p = field.mesh, field.p
    nn = enumerate_nodes(mesh, p)
    key = ("diffusion_ops", problem.dt, problem.theta, problem.kappa, problem.n_q)
    ops = nn.cache.get(key)
    if ops is None:
        mass = assemble_mass(mesh, p, problem.n_q)
        stiff = assemble_stiffness(mesh, p, problem.n_q)
        lhs = (mass / problem.dt + (problem.theta * problem.kappa) * stiff).tocsr()
        rhs_op = (mass / problem.dt - ((1.0 - problem.theta) * problem.kappa) * stiff).tocsr()
        ops = (lhs, rhs_op)
        nn.cache[key] = ops
    lhs, rhs_op = ops
    sol = solve_spd(
        SparseSystem(
            lhs,
            rhs_op @ field.values,
            tol=problem.mass_tol,
            max_iter=problem.pcg_max_iter,
        ),
        x0=field.values,
    )
    return NodalField(mesh, p, sol)


@dataclass(frozen=True)
class PolynomialFreeEnergy:
    """Double-well f = (1 - phi^2)^2 / 4 with pure phases at +-1."""

    def f(self, phi):
        return 0.25 * (1.0 - phi * phi) ** 2

    def df(self, phi):
        return phi * phi * phi - phi

    def d2f(self, phi):
        return 3.0 * phi * phi - 1.0


@dataclass(frozen=True)
class FloryHugginsFreeEnergy:
    """Logarithmic mixture energy with pure phases at 0 and 1.

    Arguments of the logarithms and reciprocals are clamped to
    [clip, 1 - clip] so evaluations stay finite for out-of-range states;
    derivatives use the same clamped argument for Newton consistency.
    """

    a: float = 1.0
    chi: float = 3.0
    beta: float = 0.01
    clip: float = 1e-6

    def _clamped(self, phi):
        return np.clip(phi, self.clip, 1.0 - self.clip)

    def f(self, phi):
        phi = np.asarray(phi, dtype=float)
        c = self._clamped(phi)
        return (
            self.a * (phi * np.log(c) + (1.0 - phi) * np.log(1.0 - c))
            + self.chi * phi * (1.0 - phi)
            + self.beta * (1.0 / c + 1.0 / (1.0 - c))
        )

    def df(self, phi):
        phi = np.asarray(phi, dtype=float)
        c = self._clamped(phi)
        return (
            self.a * (np.log(c) - np.log(1.0 - c))
            + self.chi * (1.0 - 2.0 * phi)
            + self.beta * (1.0 / (1.0 - c) ** 2 - 1.0 / c**2)
        )

    def d2f(self, phi):
        phi = np.asarray(phi, dtype=float)
        c = self._clamped(phi)
        return (
            self.a * (1.0 / c + 1.0 / (1.0 - c))
            - 2.0 * self.chi
            + 2.0 * self.beta * (1.0 / c**3 + 1.0 / (1.0 - c) ** 3)
        )


def make_free_energy(variant: str, **params):
    if variant == "polynomial":
        return PolynomialFreeEnergy()
    if variant == "flory_huggins":
        return FloryHugginsFreeEnergy(**params)
    raise ValueError(f"unknown free energy variant {variant!r}")


@dataclass
class CahnHilliardProblem:
    free_energy: object = dc_field(default_factory=PolynomialFreeEnergy)
    eps2: float = 1e-3
    mobility: float = 1.0
    dt: float = 5e-4
    t_final: float = 0.5
    phi0: float = 0.0
    amplitude: float = 0.1
    seed: int = 0
    newton_tol: float = 1e-10
    newton_max_iter: int = 30
    mass_tol: float = 1e-12
    pcg_max_iter: int | None = None
    n_q: int | None = None

    def __post_init__(self):
        if self.eps2 <= 0:
            raise ValueError("eps2 must be positive")
        if self.mobility <= 0:
            raise ValueError("mobility must be positive")


def _nonlinear_rhs(
    mesh: MeshTopology, p: int, phi_vals: np.ndarray, fe, n_q: int | None = None
) -> np.ndarray:
    """Constrained vector of integral f'(phi) N_a using the element rule."""
    nn = enumerate_nodes(mesh, p)
    b, _, w, _, _, _ = _tables(mesh.dim, p, n_q or (p + 1))
    node_vals = nn.node_values(phi_vals)
    gauss = node_vals[nn.elem_nodes] @ b
    jac = (0.5 * mesh.leaf_sizes_physical) ** mesh.dim
    contrib = (fe.df(gauss) * w[None, :]) @ b.T * jac[:, None]
    out = np.zeros(nn.n_nodes)
    np.add.at(out, nn.elem_nodes, contrib)
    return nn.constraint_matrix.T @ out


def _nonlinear_jacobian(
    mesh: MeshTopology, p: int, phi_vals: np.ndarray, fe, n_q: int | None = None
) -> sp.csr_matrix:
    """Constrained matrix of integral f''(phi) N_a N_b."""
    nn = enumerate_nodes(mesh, p)
    b, _, w, _, _, _ = _tables(mesh.dim, p, n_q or (p + 1))
    node_vals = nn.node_values(phi_vals)
    gauss = node_vals[nn.elem_nodes] @ b
    jac = (0.5 * mesh.leaf_sizes_physical) ** mesh.dim
    wf = fe.d2f(gauss) * w[None, :] * jac[:, None]  # (n_e, n_q)
    data = np.einsum("eq,aq,bq->eab", wf, b, b).ravel()
    n_loc = b.shape[0]
    rows = np.repeat(nn.elem_nodes, n_loc, axis=1).ravel()
    cols = np.tile(nn.elem_nodes, (1, n_loc)).ravel()
    mat = sp.coo_matrix((data, (rows, cols)), shape=(nn.n_nodes, nn.n_nodes)).tocsr()
    t = nn.constraint_matrix
    return (t.T @ (mat @ t)).tocsr()


def _ch_operators(mesh: MeshTopology, p: int, n_q: int | None = None):
    mass = assemble_mass(mesh, p, n_q)
    stiff = assemble_stiffness(mesh, p, n_q)
    return mass, stiff


def ch_residual_and_jacobian(phi: NodalField, mu: NodalField, problem: CahnHilliardProblem, dt: float):
    """Residual/Jacobian closures of the backward-Euler split system.

    The unknown is the stacked vector [phi; mu]. Exposed so the Jacobian can
    be checked against finite differences of the residual.
    """
    mesh, p = phi.mesh, phi.p
    fe = problem.free_energy
    mass, stiff = _ch_operators(mesh, p, problem.n_q)
    n = len(phi.values)
    mob_stiff = (problem.mobility * stiff).tocsr()
    eps_stiff = (problem.eps2 * stiff).tocsr()
    mass_over_dt = (mass / dt).tocsr()
    m_phi_old = mass @ phi.values

    def residual(u):
        phi_v, mu_v = u[:n], u[n:]
        r1 = (mass @ phi_v - m_phi_old) / dt + mob_stiff @ mu_v
        r2 = mass @ mu_v - _nonlinear_rhs(mesh, p, phi_v, fe, problem.n_q) - eps_stiff @ phi_v
        return np.concatenate([r1, r2])

    def jacobian(u):
        phi_v = u[:n]
        jf = _nonlinear_jacobian(mesh, p, phi_v, fe, problem.n_q)
        return sp.bmat(
            [[mass_over_dt, mob_stiff], [-(jf + eps_stiff), mass]], format="csc"
        )

    return residual, jacobian


def _ch_substep(phi: NodalField, mu: NodalField, problem: CahnHilliardProblem, dt: float):
    """One backward-Euler step of the split system at timestep dt.

    Newton with a frozen factorisation: the Jacobian is factorised at the
    start of the step and reused across iterations (the state moves little
    per step), refactorising at the current iterate if contraction stalls.
    """
    mesh, p = phi.mesh, phi.p
    residual, jacobian = ch_residual_and_jacobian(phi, mu, problem, dt)
    n = len(phi.values)
    nn = enumerate_nodes(mesh, p)
    lu_key = ("ch_lu", dt, problem.mobility, problem.eps2, problem.n_q)
    u = np.concatenate([phi.values, mu.values])
    r = residual(u)
    r0 = max(1.0, float(np.linalg.norm(r)))
    trace = [float(np.linalg.norm(r))]
    lu = nn.cache.get(lu_key)
    if lu is None:
        lu = spla.splu(jacobian(u))
        nn.cache[lu_key] = lu
    for _ in range(problem.newton_max_iter):
        if trace[-1] <= problem.newton_tol * r0:
            return NodalField(mesh, p, u[:n]), NodalField(mesh, p, u[n:]), trace
        u = u + lu.solve(-r)
        r = residual(u)
        trace.append(float(np.linalg.norm(r)))
        if not np.isfinite(trace[-1]):
            raise NewtonError("residual is not finite", trace)
        if trace[-1] > 0.5 * trace[-2]:  # frozen Jacobian no longer contracting
            lu = spla.splu(jacobian(u))
            nn.cache[lu_key] = lu
    if trace[-1] <= problem.newton_tol * r0:
        return NodalField(mesh, p, u[:n]), NodalField(mesh, p, u[n:]), trace
    raise NewtonError(
        f"no convergence in {problem.newton_max_iter} iterations "
        f"(residuals {trace[0]:.3e} -> {trace[-1]:.3e})",
        trace,
    )


def ch_step(phi: NodalField, mu: NodalField, problem: CahnHilliardProblem):
    """Advance (phi, mu) by one backward-Euler step of length problem.dt.

    If Newton fails, the step is retried once as two half steps; a second
    failure propagates NewtonError with the residual trace.
    """
    try:
        phi2, mu2, trace = _ch_substep(phi, mu, problem, problem.dt)
        return phi2, mu2, len(trace) - 1
    except NewtonError:
        half = problem.dt / 2.0
        phi1, mu1, t1 = _ch_substep(phi, mu, problem, half)
        phi2, mu2, t2 = _ch_substep(phi1, mu1, problem, half)
        return phi2, mu2, len(t1) + len(t2) - 2


def chemical_potential_init(phi: NodalField, problem: CahnHilliardProblem) -> NodalField:
    """Consistent initial mu: solve M mu = F(phi) + eps2 K phi."""
    mesh, p = phi.mesh, phi.p
    mass, stiff = _ch_operators(mesh, p, problem.n_q)
    rhs = _nonlinear_rhs(
        mesh, p, phi.values, problem.free_energy, problem.n_q
    ) + problem.eps2 * (stiff @ phi.values)
    system = SparseSystem(mass, rhs, tol=problem.mass_tol, max_iter=problem.pcg_max_iter)
    return NodalField(mesh, p, solve_spd(system))


def energy(phi: NodalField, problem) -> float:
    """Ginzburg-Landau energy: integral of f(phi) + eps2/2 |grad phi|^2."""
    fe = problem.free_energy
    n_q = getattr(problem, "n_q", None) or (phi.p + 1)
    gf = eval_at_gauss(phi, n_q)
    grads = eval_grad_at_gauss(phi, n_q)
    w = _tables(phi.mesh.dim, phi.p, n_q)[2]
    jac = (0.5 * phi.mesh.leaf_sizes_physical) ** phi.mesh.dim
    density = fe.f(gf.values) + 0.5 * problem.eps2 * np.sum(grads * grads, axis=-1)
    return float(jac @ (density @ w))


@dataclass
class Diagnostics:
    """Per-timestep bookkeeping written to CSV.

    Columns: time, mass, mass_drift, energy, delta_E_coarsen, num_elements,
    num_dofs. ``delta_E_coarsen`` is zero on steps without coarsening.
    """

    times: list = dc_field(default_factory=list)
    masses: list = dc_field(default_factory=list)
    energies: list = dc_field(default_factory=list)
    delta_e: list = dc_field(default_factory=list)
    n_elements: list = dc_field(default_factory=list)
    n_dofs: list = dc_field(default_factory=list)

    def add(self, t, mass, energy_value, delta_e_value, n_elements, n_dofs):
        if self.times and t <= self.times[-1]:
            raise ValueError("diagnostic rows must be strictly increasing in t")
        self.times.append(float(t))
        self.masses.append(float(mass))
        self.energies.append(float(energy_value))
        self.delta_e.append(float(delta_e_value))
        self.n_elements.append(int(n_elements))
        self.n_dofs.append(int(n_dofs))

    def mass_drift(self) -> np.ndarray:
        if not self.masses:
            raise ValueError("empty diagnostics series")
        m = np.asarray(self.masses)
        return m - m[0]

    def write_csv(self, path):
        drift = self.mass_drift() if self.masses else []
        with open(path, "w") as fh:
            fh.write("time,mass,mass_drift,energy,delta_E_coarsen,num_elements,num_dofs\n")
            for i in range(len(self.times)):
                fh.write(
                    f"{self.times[i]:.17g},{self.masses[i]:.17g},{drift[i]:.17g},"
                    f"{self.energies[i]:.17g},{self.delta_e[i]:.17g},"
                    f"{self.n_elements[i]},{self.n_dofs[i]}\n"
                )


def mass_drift(diag: Diagnostics) -> np.ndarray:
    """Series of integral(phi)(t) - integral(phi)(0)."""
    return diag.mass_drift()


def _splitmix64(x: np.ndarray) -> np.ndarray:
    x = (x + np.uint64(0x9E3779B97F4A7C15)) & np.uint64(0xFFFFFFFFFFFFFFFF)
    x = ((x ^ (x >> np.uint64(30))) * np.uint64(0xBF58476D1CE4E5B9)) & np.uint64(
        0xFFFFFFFFFFFFFFFF
    )
    x = ((x ^ (x >> np.uint64(27))) * np.uint64(0x94D049BB133111EB)) & np.uint64(
        0xFFFFFFFFFFFFFFFF
    )
    return x ^ (x >> np.uint64(31))


def random_mixture_ic(
    mesh: MeshTopology, p: int, phi0: float, amplitude: float, seed: int
) -> NodalField:
    """Seeded uniform perturbation in [phi0 - a, phi0 + a] per node.

    The draw is a counter-style hash of the node's integer lattice key and
    the seed, so a node at the same physical location receives the same
    value on any mesh.
    """
    if amplitude < 0:
        raise ValueError("amplitude must be non-negative")
    nn = enumerate_nodes(mesh, p)
    keys = nn.node_keys[nn.dof_of_node >= 0].astype(np.uint64)
    mixed = _splitmix64(keys ^ _splitmix64(np.full_like(keys, seed, dtype=np.uint64)))
    uniform = (mixed >> np.uint64(11)).astype(np.float64) / float(1 << 53)
    return NodalField(mesh, p, phi0 + amplitude * (2.0 * uniform - 1.0))
