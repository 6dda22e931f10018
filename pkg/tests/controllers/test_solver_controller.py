from unittest.mock import patch

import pytest

from pogg import errors
from pogg.closedform import ClosedForm
from pogg.oracle import Oracle
from pogg.solver import Solver
from pogg.models import StrategyProfile, Source, Verdict, RootSet

from tests.utilities import make_config, gamma_grid


@pytest.fixture(scope="module")
def pairs_config():
    return make_config(b=4, n=2, r=6)


@pytest.fixture(scope="module")
def pairs_solver(pairs_config):
    return Solver(pairs_config)


@pytest.fixture(scope="module")
def critical(pairs_solver):
    return pairs_solver.find_r_sharp(Source.closedform)


class TestCriticalPair:
    def test_below_group_count(self, pairs_config, critical):
        assert 1.0 < critical.max_s
        assert critical.r_sharp < pairs_config.N
        assert 5.5 < critical.r_sharp < 6.2
        assert 0.0 < critical.gamma_sharp < 1.0

    def test_linear_in_r(self, pairs_config, critical):
        closedform = ClosedForm(pairs_config)
        assert critical.r_sharp == pytest.approx(pairs_config.N / closedform.S(critical.gamma_sharp))
        assert closedform.H(critical.r_sharp, critical.gamma_sharp) == pytest.approx(0.0, abs=1e-12)

    def test_maximises_S(self, pairs_config, critical):
        closedform = ClosedForm(pairs_config)
        assert all(closedform.S(g) <= critical.max_s + 1e-12 for g in gamma_grid(401))

    def test_no_root_just_below(self, pairs_config, critical):
        closedform = ClosedForm(pairs_config)
        r = critical.r_sharp - 1e-6
        assert all(closedform.H(r, g) < 0 for g in gamma_grid(401))

    def test_sources_agree(self, pairs_solver, critical):
        from_oracle = pairs_solver.find_r_sharp(Source.oracle)
        assert from_oracle.source == Source.oracle
        assert from_oracle.r_sharp == pytest.approx(critical.r_sharp, abs=1e-6)

    def test_no_interior_maximum(self):
        with pytest.raises(errors.PoggNoCriticalPairError) as exc_info:
            Solver(make_config(b=2, n=2)).find_r_sharp()
        assert "No interior critical pair" in str(exc_info.value)


class TestMixedRoots:
    @pytest.mark.parametrize("source", [Source.closedform, Source.oracle])
    def test_two_roots_above_critical(self, pairs_config, pairs_solver, critical, source):
        r = critical.r_sharp + 0.5
        roots = pairs_solver.find_mixed_roots(r, source=source)
        assert len(roots.roots) == 2
        assert roots.source == source
        assert all(res <= 1e-10 for res in roots.residuals)

        oracle = Oracle(pairs_config.with_return(r))
        for gamma in roots.roots:
            report = oracle.verify_equilibrium(StrategyProfile.forgiving(gamma), tol=1e-6)
            assert abs(report.gain_dirty) <= 1e-6
            assert report.verdict == Verdict.indifferent_mixed

    @pytest.mark.parametrize("source", [Source.closedform, Source.oracle])
    def test_no_roots_below_critical(self, pairs_solver, critical, source):
        roots = pairs_solver.find_mixed_roots(critical.r_sharp - 0.5, source=source)
        assert roots.roots == ()

    def test_double_root_at_critical(self, pairs_solver, critical):
        roots = pairs_solver.find_mixed_roots(critical.r_sharp)
        assert len(roots.roots) == 1
        assert roots.roots[0] == pytest.approx(critical.gamma_sharp, abs=1e-6)

    def test_roots_spread_with_r(self, pairs_solver, critical):
        previous = None
        for step in [0.25, 0.5, 1.0, 1.5]:
            low, high = pairs_solver.find_mixed_roots(critical.r_sharp + step).roots
            assert low < critical.gamma_sharp < high
            if previous is not None:
                assert low < previous[0]
                assert high > previous[1]
            previous = (low, high)

    def test_return_out_of_range(self, pairs_solver):
        with pytest.raises(errors.PoggBuildModelError) as exc_info:
            pairs_solver.find_mixed_roots(8.0)
        assert "Mixed roots need r in (0, N=8)" in str(exc_info.value)

    def test_asymmetric_closed_form(self):
        solver = Solver(make_config(b=4, sizes=(2, 3, 2, 3)))
        critical = solver.find_r_sharp()
        roots_closedform = solver.find_mixed_roots(critical.r_sharp + 0.5)
        roots_oracle = solver.find_mixed_roots(critical.r_sharp + 0.5, source="oracle")
        assert roots_closedform.roots == pytest.approx(roots_oracle.roots, abs=1e-9)

    def test_window_needs_oracle(self):
        with pytest.raises(errors.PoggBuildModelError) as exc_info:
            Solver(make_config(b=3, n=2, m=2)).find_mixed_roots(4.0)
        assert "use the oracle source" in str(exc_info.value)


class TestPureRegion:
    def test_grim_region(self):
        config = make_config(b=3, n=2)
        rows = Solver(config).pure_region_m1([1.0, 2.0, 3.0, 4.5, 5.9])
        assert [row.verdict for row in rows] == [
            Verdict.not_equilibrium,
            Verdict.not_equilibrium,
            Verdict.equilibrium,
            Verdict.equilibrium,
            Verdict.equilibrium,
        ]
        assert all(row.report.gain_dirty < 0 for row in rows)
        assert rows[0].report.gain_root < 0

    def test_agrees_with_interval(self):
        for b, n in [(3, 3), (4, 2), (5, 2)]:
            config = make_config(b=b, n=n)
            lower, upper = ClosedForm(config).pure_interval_m1()
            r_grid = [2.0, lower + 1e-6, (lower + upper) / 2, config.N - 0.1]
            for row in Solver(config).pure_region_m1(r_grid):
                expected = Verdict.equilibrium if row.r >= lower else Verdict.not_equilibrium
                assert row.verdict == expected

    def test_requires_single_window(self):
        with pytest.raises(errors.PoggBuildModelError):
            Solver(make_config(b=3, n=2, m=2)).pure_region_m1([2.0])


class TestExactThreshold:
    def test_example(self):
        config = make_config(b=3, sizes=(1, 2, 2), m=2)
        exact = Solver(config).pure_threshold_exact_m_gt_1()
        assert exact == pytest.approx(2.5)
        assert exact <= ClosedForm(config).pure_threshold_m_gt_1("max")

    def test_symmetric_pairs(self):
        config = make_config(b=3, n=2, m=2)
        exact = Solver(config).pure_threshold_exact_m_gt_1()
        assert exact == pytest.approx(3.0)
        assert exact <= ClosedForm(config).pure_threshold_m_gt_1() + 1e-9

    def test_grim_verifies_at_threshold(self):
        config = make_config(b=4, n=2, m=2)
        exact = Solver(config).pure_threshold_exact_m_gt_1()
        # clean-sample phi is 5, 3, 1 at positions 2, 3, 4
        assert exact == pytest.approx(16 / 3)
        assert exact > ClosedForm(config).pure_threshold_m_gt_1()
        grim = StrategyProfile.grim()
        assert Oracle(config.with_return(exact)).verify_equilibrium(grim).verdict == Verdict.equilibrium
        assert Oracle(config.with_return(exact * 0.99)).verify_equilibrium(grim).verdict == Verdict.not_equilibrium

    def test_requires_window(self):
        with pytest.raises(errors.PoggBuildModelError):
            Solver(make_config(b=3, n=2)).pure_threshold_exact_m_gt_1()


class TestExplore:
    @pytest.mark.parametrize("data", [{"b": 3, "n": 2, "m": 2}, {"b": 3, "n": 1, "m": 2}])
    def test_table(self, data):
        config = make_config(**data)
        r_grid = [0.5 * config.N, 0.8 * config.N, 0.95 * config.N]
        table = Solver(config).conjecture_explore(r_grid)
        assert [row.r for row in table.rows] == r_grid

        for row in table.rows:
            if config.n > 1:
                assert row.endpoint_gains[0] == pytest.approx(row.r / config.N - 1, abs=1e-12)
            assert row.endpoint_gains[1] == pytest.approx(row.r / config.N - 1, abs=1e-12)
            oracle = Oracle(config.with_return(row.r))
            for gamma in row.roots.roots:
                report = oracle.verify_equilibrium(StrategyProfile.forgiving(gamma), tol=1e-6)
                assert abs(report.gain_dirty) <= 1e-6

        found = [row.r for row in table.rows if row.roots.roots]
        assert table.critical_r == (min(found) if found else None)

    def test_critical_r_on_unsorted_grid(self):
        config = make_config(b=4, n=2, m=2)
        r_grid = [0.99 * config.N, 0.9 * config.N, 0.97 * config.N]
        solver = Solver(config)
        table = solver.conjecture_explore(r_grid)
        found = [row.r for row in table.rows if row.roots.roots]
        assert table.critical_r == (min(found) if found else None)
        assert table.critical_r == solver.conjecture_explore(sorted(r_grid)).critical_r

    def test_critical_r_is_smallest_return_with_roots(self):
        config = make_config(b=3, n=2, m=2)
        roots = RootSet(roots=(0.5,), residuals=(0.0,), source=Source.oracle, tolerance=1e-10)
        with patch.object(Solver, "find_mixed_roots", return_value=roots):
            table = Solver(config).conjecture_explore([5.0, 3.0, 4.0])
        assert table.critical_r == 3.0

    def test_requires_window(self):
        with pytest.raises(errors.PoggBuildModelError):
            Solver(make_config(b=3, n=2)).conjecture_explore([3.0])


class TestReconcile:
    def test_report(self, pairs_solver):
        report = pairs_solver.reconcile(gamma_grid(11))
        assert len(report.rows) == 11
        for row in report.rows:
            assert row.psi_diff < 1e-12
            assert row.psi_ratio_diff < 1e-9
            assert row.phi_diff < 1e-12
        assert report.max_h_diff < 1e-12
        assert report.example_bound_max == pytest.approx(5.0)
        assert report.example_bound_average == pytest.approx(3.0)
        assert report.example_exact_threshold == pytest.approx(2.5)
        assert report.stated_example_threshold == pytest.approx(5 / 9)
        assert "5/9" in report.note

    def test_asymmetric_groups(self):
        config = make_config(b=3, sizes=(1, 2, 3), r=3)
        report = Solver(config).reconcile(gamma_grid(5))
        assert len(report.rows) == 5
        for row in report.rows:
            assert row.psi_diff < 1e-10
            assert row.psi_ratio_diff is None
            assert row.phi_diff < 1e-10
            assert row.h_closedform == pytest.approx(ClosedForm(config).H_asym(config.r, row.gamma))
        assert report.max_h_diff < 1e-10

    def test_window_leaves_closedform_empty(self):
        config = make_config(b=3, n=2, m=2, r=4)
        report = Solver(config).reconcile(gamma_grid(5))
        oracle = Oracle(config)
        for row in report.rows:
            assert row.psi_diff is None
            assert row.phi_diff is None
            assert row.h_closedform is None
            assert row.h_oracle == pytest.approx(oracle.oracle_H(config.r, row.gamma))
        assert report.max_h_diff is None
        assert "closed-form columns are empty for m=2" in report.note
        assert report.example_exact_threshold == pytest.approx(2.5)


class TestGroupSizeAtFixedTotal:
    """Same N = 24 and r = 20, split into groups of 1, 2 and 4 players."""

    R = 20.0

    @pytest.fixture(scope="class")
    def solvers(self):
        return {n: Solver(make_config(b=24 // n, n=n, r=self.R)) for n in (1, 2, 4)}

    def curvature(self, solver, step=1 / 64):
        gamma = solver.find_r_sharp().gamma_sharp
        h = ClosedForm(solver.config).H
        return h(self.R, gamma + step) - 2 * h(self.R, gamma) + h(self.R, gamma - step)

    def test_larger_groups_flatten_the_peak(self, solvers):
        pairs, quads = self.curvature(solvers[2]), self.curvature(solvers[4])
        assert pairs < 0 and quads < 0
        assert abs(quads) < abs(pairs)

    def test_larger_groups_shift_roots_right(self, solvers):
        pairs = solvers[2].find_mixed_roots(self.R).roots
        quads = solvers[4].find_mixed_roots(self.R).roots
        assert len(pairs) == 2 and len(quads) == 2
        assert quads[0] > pairs[0]
        assert quads[1] > pairs[1]

    def test_singletons_peak_at_zero(self, solvers):
        with pytest.raises(errors.PoggNoCriticalPairError) as exc_info:
            solvers[1].find_r_sharp()
        assert "no interior maximum" in str(exc_info.value)
        assert len(solvers[1].find_mixed_roots(self.R).roots) == 1
