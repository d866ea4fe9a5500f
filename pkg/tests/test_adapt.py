import numpy as np
import pytest

from amrfem.adapt import (
    InterfaceCriterion,
    MmsCriterion,
    adapt_cycle,
    element_gradient_norms,
    mark_interface,
    mark_mms,
)
from amrfem.fem import (
    NodalField,
    eval_at_gauss,
    integrate_gauss,
    interpolate_nodal,
)
from amrfem.mesh import (
    AdaptPlan,
    Flag,
    Stage,
    build_uniform,
    enumerate_nodes,
    execute_refine,
)
from amrfem.models import CahnHilliardProblem, energy, random_mixture_ic
from amrfem.transfer import TransferMode


def field_mass(f):
    return integrate_gauss(eval_at_gauss(f))


class TestGradientIndicator:
    def test_constant_field_zero(self):
        mesh = build_uniform(2, 3)
        f = interpolate_nodal(mesh, 1, lambda c: np.full(len(c), 1.5))
        assert np.abs(element_gradient_norms(f)).max() <= 1e-14

    def test_linear_field_value(self):
        # |grad phi| = 3 everywhere: eta_e = 3 * sqrt(cell area)
        mesh = build_uniform(2, 2)
        f = interpolate_nodal(mesh, 1, lambda c: 3.0 * c[:, 0])
        eta = element_gradient_norms(f)
        assert np.abs(eta - 3.0 * 0.25).max() <= 1e-12


class TestMarkMms:
    def test_constant_field_flags_all_fine_leaves(self):
        mesh = build_uniform(2, 3)
        f = interpolate_nodal(mesh, 1, lambda c: np.ones(len(c)))
        plan = mark_mms(f, MmsCriterion(tau=1e-2, fine_level=3))
        assert plan.stage is Stage.COARSEN_STAGE
        assert np.all(plan.flags == Flag.COARSEN)

    def test_huge_gradient_uses_fraction_clause_only(self):
        mesh = build_uniform(2, 3)
        f = interpolate_nodal(mesh, 1, lambda c: 100.0 * c[:, 0])
        plan = mark_mms(f, MmsCriterion(tau=1e-12, fine_level=3))
        n_flagged = int((plan.flags == Flag.COARSEN).sum())
        # whole families, as many as fit in the 10% element budget
        budget = int(0.10 * mesh.n_leaves)
        assert n_flagged == (budget // 4) * 4
        assert 0 < n_flagged <= budget

    def test_all_coarse_leaves_give_empty_plan(self):
        mesh = build_uniform(2, 2)
        f = interpolate_nodal(mesh, 1, lambda c: np.ones(len(c)))
        plan = mark_mms(f, MmsCriterion(tau=1e-2, fine_level=3))
        assert not np.any(plan.flags == Flag.COARSEN)

    def test_refine_stage_is_none(self):
        mesh = build_uniform(2, 3)
        f = interpolate_nodal(mesh, 1, lambda c: np.ones(len(c)))
        assert MmsCriterion(tau=1e-2, fine_level=3).mark(f, Stage.REFINE_STAGE) is None

    def test_fraction_ties_break_by_morton(self):
        # identical eta everywhere: the budgeted families must be the first
        # ones in Morton order
        mesh = build_uniform(2, 3)
        f = interpolate_nodal(mesh, 1, lambda c: c[:, 0] + c[:, 1])
        plan = mark_mms(f, MmsCriterion(tau=1e-12, fine_level=3))
        flagged = np.nonzero(plan.flags == Flag.COARSEN)[0]
        budget = (int(0.10 * mesh.n_leaves) // 4) * 4
        assert np.array_equal(flagged, np.arange(budget))

    def test_determinism(self):
        mesh = build_uniform(2, 3)
        rng = np.random.default_rng(0)
        f = NodalField(mesh, 1, rng.standard_normal(enumerate_nodes(mesh, 1).n_dofs))
        crit = MmsCriterion(tau=5e-3, fine_level=3)
        a = mark_mms(f, crit)
        b = mark_mms(f, crit)
        assert np.array_equal(a.flags, b.flags)


class TestMarkInterface:
    def crit(self, lo=-0.9, hi=0.9, closed=True):
        return InterfaceCriterion(lo, hi, bulk_level=2, interface_level=4, closed=closed)

    def test_mixed_state_refines_everywhere(self):
        mesh = build_uniform(2, 3)
        f = interpolate_nodal(mesh, 1, lambda c: np.zeros(len(c)))
        plan = mark_interface(f, self.crit(), Stage.REFINE_STAGE)
        assert np.all(plan.flags == Flag.REFINE)

    def test_pure_state_coarsens_everywhere(self):
        mesh = build_uniform(2, 3)
        f = interpolate_nodal(mesh, 1, lambda c: np.full(len(c), 0.95))
        plan = mark_interface(f, self.crit(), Stage.COARSEN_STAGE)
        assert np.all(plan.flags == Flag.COARSEN)
        refine_plan = mark_interface(f, self.crit(), Stage.REFINE_STAGE)
        assert not np.any(refine_plan.flags == Flag.REFINE)

    def test_open_band_for_flory_huggins(self):
        mesh = build_uniform(2, 3)
        crit = InterfaceCriterion(0.30, 0.70, 2, 4, closed=False)
        f = interpolate_nodal(mesh, 1, lambda c: np.full(len(c), 0.5))
        plan = mark_interface(f, crit, Stage.REFINE_STAGE)
        assert np.all(plan.flags == Flag.REFINE)
        g = interpolate_nodal(mesh, 1, lambda c: np.full(len(c), 0.30))
        plan = mark_interface(g, crit, Stage.REFINE_STAGE)
        assert not np.any(plan.flags == Flag.REFINE)  # boundary excluded

    def test_level_clamps(self):
        mesh = build_uniform(2, 4)
        f = interpolate_nodal(mesh, 1, lambda c: np.zeros(len(c)))
        plan = mark_interface(f, self.crit(), Stage.REFINE_STAGE)
        assert not np.any(plan.flags == Flag.REFINE)  # already at interface level
        mesh2 = build_uniform(2, 2)
        g = interpolate_nodal(mesh2, 1, lambda c: np.full(len(c), 0.99))
        plan = mark_interface(g, self.crit(), Stage.COARSEN_STAGE)
        assert not np.any(plan.flags == Flag.COARSEN)  # already at bulk level

    def test_gauss_samples_counted_not_only_nodes(self):
        # Q2 bump: nodes outside the band, interior Gauss values inside
        mesh = build_uniform(2, 0)
        nn = enumerate_nodes(mesh, 2)
        values = np.full(nn.n_dofs, 0.95)
        centre = np.argmin(np.abs(nn.independent_coords() - 0.5).sum(axis=1))
        values[centre] = 0.95 - 0.5  # pulls interior Gauss samples into band
        f = NodalField(mesh, 2, values)
        crit = InterfaceCriterion(-0.9, 0.9, 0, 2, closed=True)
        plan = mark_interface(f, crit, Stage.REFINE_STAGE)
        assert np.any(plan.flags == Flag.REFINE)


class TestAdaptCycle:
    def test_empty_plans_keep_everything(self):
        mesh = build_uniform(2, 3)
        f = interpolate_nodal(mesh, 1, lambda c: np.zeros(len(c)))
        crit = InterfaceCriterion(-0.9, 0.9, 2, 3)
        mesh2, fields, stats = adapt_cycle(
            {"phi": f}, {"phi": TransferMode.CONSERVATIVE}, "phi", crit
        )
        assert mesh2 is mesh
        assert fields["phi"] is not None
        assert stats.n_refined == 0 and stats.n_merged == 0 and stats.delta_e == 0.0

    def test_mms_cycle_conserves_mass(self):
        mesh = build_uniform(2, 4)
        f = interpolate_nodal(
            mesh, 1, lambda c: 1.0 + 0.1 * np.cos(2 * np.pi * c[:, 0]) * np.cos(2 * np.pi * c[:, 1])
        )
        crit = MmsCriterion(tau=2e-2, fine_level=4)
        m0 = field_mass(f)
        mesh2, fields, stats = adapt_cycle(
            {"phi": f}, {"phi": TransferMode.CONSERVATIVE}, "phi", crit, project_tol=1e-14
        )
        assert stats.n_merged > 0
        assert abs(field_mass(fields["phi"]) - m0) <= 1e-11

    def test_ch_cycle_respects_level_bounds(self):
        prob = CahnHilliardProblem()
        mesh = build_uniform(2, 4)
        phi = random_mixture_ic(mesh, 1, 0.0, 0.98, 3)  # wide spread of values
        crit = InterfaceCriterion(-0.5, 0.5, 3, 5)
        fields = {"phi": phi}
        for _ in range(4):
            mesh, fields, _ = adapt_cycle(
                fields,
                {"phi": TransferMode.CONSERVATIVE},
                "phi",
                crit,
                energy_fn=lambda g: energy(g, prob),
            )
            assert mesh.levels.min() >= 3 and mesh.levels.max() <= 5
            count_bulk = 2 ** (2 * 3)
            count_fine = 2 ** (2 * 5)
            assert count_bulk <= mesh.n_leaves <= count_fine

    def test_delta_e_recorded_on_merge(self):
        prob = CahnHilliardProblem()
        mesh = build_uniform(2, 4)
        phi = interpolate_nodal(
            mesh, 1, lambda c: np.tanh((c[:, 0] - 0.5) / 0.1)
        )
        crit = InterfaceCriterion(-0.9, 0.9, 3, 4)
        mesh2, fields, stats = adapt_cycle(
            {"phi": phi},
            {"phi": TransferMode.CONSERVATIVE},
            "phi",
            crit,
            energy_fn=lambda g: energy(g, prob),
        )
        assert stats.n_merged > 0
        assert stats.delta_e >= 0.0

    def test_plans_never_mix_flags(self):
        mesh = build_uniform(2, 3)
        f = interpolate_nodal(mesh, 1, lambda c: c[:, 0] - 0.5)
        crit = InterfaceCriterion(-0.2, 0.2, 2, 4)
        for stage in (Stage.REFINE_STAGE, Stage.COARSEN_STAGE):
            plan = crit.mark(f, stage)
            banned = Flag.COARSEN if stage is Stage.REFINE_STAGE else Flag.REFINE
            assert not np.any(plan.flags == banned)

    def test_mixed_plan_rejected(self):
        with pytest.raises(ValueError):
            AdaptPlan(Stage.REFINE_STAGE, np.array([Flag.COARSEN], dtype=np.int8))
