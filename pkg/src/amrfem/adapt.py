"""Marking criteria and the refine-then-coarsen adaptation cycle."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .fem import NodalField, eval_at_gauss, eval_grad_at_gauss
from .mesh import (
    AdaptPlan,
    Flag,
    Stage,
    enumerate_nodes,
    execute_coarsen,
    execute_refine,
    sibling_families,
)
from .transfer import (
    TransferMode,
    transfer_coarsen_conservative,
    transfer_coarsen_injection,
    transfer_refine,
)

__all__ = [
    "MmsCriterion",
    "InterfaceCriterion",
    "element_gradient_norms",
    "mark_mms",
    "mark_interface",
    "adapt_cycle",
    "CycleStats",
]


def element_gradient_norms(field: NodalField) -> np.ndarray:
    """Per-element L2 norm of the gradient, by Gauss quadrature.

    eta_e = sqrt(sum_q w_q |J| |grad phi(x_q)|^2), one value per leaf.
    """
    grads = eval_grad_at_gauss(field)
    from .fem import _tables

    w = _tables(field.mesh.dim, field.p, field.p + 1)[2]
    jac = (0.5 * field.mesh.leaf_sizes_physical) ** field.mesh.dim
    sq = np.sum(grads * grads, axis=-1) @ w
    return np.sqrt(np.maximum(sq * jac, 0.0))


@dataclass
class MmsCriterion:
    """Coarsen-only criterion for the two-level manufactured-solution runs.

    Level-l leaves whose gradient indicator falls below tau are flagged, and
    so is the lowest-indicator 10% of all leaves (restricted to level l).
    Leaves already at l-1 never change.
    """

    tau: float
    fine_level: int
    fraction: float = 0.10

    def __post_init__(self):
        if self.tau <= 0:
            raise ValueError("tau must be positive")
        if not 0.0 <= self.fraction <= 1.0:
            raise ValueError("fraction must lie in [0, 1]")

    def mark(self, field: NodalField, stage: Stage) -> AdaptPlan | None:
        if stage is Stage.REFINE_STAGE:
            return None
        return mark_mms(field, self)


@dataclass
class InterfaceCriterion:
    """Two-level band criterion for phase-field runs.

    An element is interface when any nodal or Gauss value of the field lies
    in [band_lo, band_hi] (open interval when ``closed`` is False). Interface
    elements are pushed toward the fine level, everything else toward the
    bulk level, one level per cycle.
    """

    band_lo: float
    band_hi: float
    bulk_level: int
    interface_level: int
    closed: bool = True

    def __post_init__(self):
        if self.bulk_level >= self.interface_level:
            raise ValueError("bulk level must be below interface level")

    def mark(self, field: NodalField, stage: Stage) -> AdaptPlan:
        return mark_interface(field, self, stage)


def mark_mms(field: NodalField, crit: MmsCriterion) -> AdaptPlan:
    """Coarsen-stage plan for the manufactured-solution criterion.

    Two clauses, combined by union. Threshold clause: level-l leaves with
    eta below tau. Fraction clause: the lowest-indicator complete level-l
    sibling families, taken in ascending order of their worst child, until
    10% of all leaves are spent. Flagging whole families is what guarantees
    the rule actually produces merges each cycle (stray single-leaf flags
    would be demoted at execution time); ties break by Morton position.
    """
    mesh = field.mesh
    eta = element_gradient_norms(field)
    at_fine = mesh.levels == crit.fine_level
    flags = np.where(at_fine & (eta < crit.tau), Flag.COARSEN, Flag.NO_CHANGE).astype(
        np.int8
    )
    nchild = 2**mesh.dim
    budget = int(crit.fraction * mesh.n_leaves)
    if budget >= nchild:
        families = sibling_families(mesh, at_fine)
        ranked = sorted(
            (float(eta[start : start + nchild].max()), start) for start, _, _ in families
        )
        spent = 0
        for _, start in ranked:
            if spent + nchild > budget:
                break
            flags[start : start + nchild] = Flag.COARSEN
            spent += nchild
    return AdaptPlan(Stage.COARSEN_STAGE, flags)


def mark_interface(field: NodalField, crit: InterfaceCriterion, stage: Stage) -> AdaptPlan:
    """Band criterion: refine interface elements, coarsen bulk ones."""
    mesh = field.mesh
    nn = enumerate_nodes(mesh, field.p)
    nodal = field.node_values()[nn.elem_nodes]
    gauss = eval_at_gauss(field).values
    samples = np.concatenate([nodal, gauss], axis=1)
    if crit.closed:
        in_band = (samples >= crit.band_lo) & (samples <= crit.band_hi)
    else:
        in_band = (samples > crit.band_lo) & (samples < crit.band_hi)
    interface = in_band.any(axis=1)
    flags = np.full(mesh.n_leaves, Flag.NO_CHANGE, dtype=np.int8)
    if stage is Stage.REFINE_STAGE:
        flags[interface & (mesh.levels < crit.interface_level)] = Flag.REFINE
    else:
        flags[~interface & (mesh.levels > crit.bulk_level)] = Flag.COARSEN
    return AdaptPlan(stage, flags)


@dataclass
class CycleStats:
    n_refined: int = 0
    n_merged: int = 0
    delta_e: float = 0.0


def adapt_cycle(
    fields: dict[str, NodalField],
    modes: dict[str, TransferMode],
    conserved: str,
    criterion,
    energy_fn=None,
    project_tol: float = 1e-12,
    n_q: int | None = None,
):
    """One adaptation cycle: refine stage, then coarsen stage.

    Marking is driven by the conserved field. All fields are transferred to
    each new mesh; during coarsening each field uses its own TransferMode.
    When merges happen and an energy functional is supplied, the energy
    mismatch of the conserved field across the coarsening transfer is
    recorded.
    """
    mesh = fields[conserved].mesh
    stats = CycleStats()

    plan = criterion.mark(fields[conserved], Stage.REFINE_STAGE)
    if plan is not None and np.any(plan.flags == Flag.REFINE):
        new_mesh, record = execute_refine(mesh, plan)
        if new_mesh is not mesh:
            stats.n_refined = new_mesh.n_leaves - mesh.n_leaves
            fields = {k: transfer_refine(f, record) for k, f in fields.items()}
            mesh = new_mesh

    plan = criterion.mark(fields[conserved], Stage.COARSEN_STAGE)
    if plan is not None and np.any(plan.flags == Flag.COARSEN):
        new_mesh, record = execute_coarsen(mesh, plan)
        if record.merges:
            stats.n_merged = len(record.merges)
            before = fields[conserved]
            new_fields = {}
            for name, f in fields.items():
                if modes.get(name, TransferMode.INJECTION) is TransferMode.CONSERVATIVE:
                    new_fields[name] = transfer_coarsen_conservative(
                        f, record, tol=project_tol, n_q=n_q
                    )
                else:
                    new_fields[name] = transfer_coarsen_injection(f, record)
            if energy_fn is not None:
                stats.delta_e = abs(
                    float(energy_fn(before)) - float(energy_fn(new_fields[conserved]))
                )
            fields = new_fields
            mesh = new_mesh

    return mesh, fields, stats
