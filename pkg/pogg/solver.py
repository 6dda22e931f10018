import logging

from typing import Callable, List, Sequence, Tuple

import numpy as np
from scipy import optimize

from . import errors
from .closedform import ClosedForm
from .controller import Controller
from .oracle import Oracle
from .models import (
    GameConfig,
    StrategyProfile,
    SampleClass,
    Source,
    ThresholdMode,
    Verdict,
    RootSet,
    CriticalPair,
    RegionRow,
    ExplorationRow,
    ExplorationTable,
    ReconcileRow,
    ReconcileReport,
    build_model,
)

logger = logging.getLogger(__name__)

EXAMPLE_SIZES = (1, 2, 2)
EXAMPLE_WINDOW = 2


class Solver(Controller):
    """Root finding over gamma and threshold searches over r."""

    GRID_POINTS = 2048
    MERGE_DISTANCE = 1e-6

    def __init__(self, config: GameConfig):
        super().__init__(config)
        self._closedform = ClosedForm(config)
        self._oracle = Oracle(config)
        self._s_grid = {}
        self._s_maxima = {}

    def _s_function(self, source: Source) -> Callable[[float], float]:
        source = Source(source)
        if source == Source.oracle:
            return lambda gamma: self._oracle.expected_phi(StrategyProfile.forgiving(gamma), SampleClass.dirty)
        if self.config.symmetric and self.config.m == 1:
            return self._closedform.S
        if self.config.m == 1:
            return self._closedform.S_asym
        raise errors.PoggBuildModelError(
            err=f"m={self.config.m}", message="Closed forms assume m = 1, use the oracle source"
        )

    def _grid(self) -> np.ndarray:
        return np.linspace(0.0, 1.0, self.GRID_POINTS)

    def _s_values(self, source: Source) -> np.ndarray:
        """S on the gamma grid; S does not depend on r, so it is computed once per source."""
        if source not in self._s_grid:
            s = self._s_function(source)
            self._s_grid[source] = np.array([s(float(g)) for g in self._grid()])
        return self._s_grid[source]

    def _maxima(self, source: Source) -> List[Tuple[float, float]]:
        """Interior local maxima of S, each refined by golden-section search inside its grid bracket."""
        if source in self._s_maxima:
            return self._s_maxima[source]
        s = self._s_function(source)
        grid = self._grid()
        values = self._s_values(source)
        maxima = []
        for i in range(1, len(grid) - 1):
            if not (values[i] > values[i - 1] and values[i] > values[i + 1]):
                continue
            result = optimize.minimize_scalar(
                lambda g: -s(g), bracket=(grid[i - 1], grid[i], grid[i + 1]), method="golden", tol=1e-10
            )
            gamma = float(np.clip(result.x, grid[i - 1], grid[i + 1]))
            maxima.append((gamma, s(gamma)))
        logger.debug(f"Found {len(maxima)} interior maxima of S ({source}): {maxima}")
        self._s_maxima[source] = maxima
        return maxima

    def _merge(self, candidates: List[float], h: Callable[[float], float]) -> List[float]:
        merged: List[float] = []
        for gamma in sorted(candidates):
            if merged and gamma - merged[-1] < self.MERGE_DISTANCE:
                if abs(h(gamma)) < abs(h(merged[-1])):
                    merged[-1] = gamma
                continue
            merged.append(gamma)
        return merged

    def find_mixed_roots(self, r: float, source: Source = Source.closedform, tol: float = 1e-10) -> RootSet:
        """
        Values of gamma in (0, 1) where H(r, gamma) = 0. Sign changes on the grid are polished
        by bisection; a root touching zero at a maximum of S (r = r_sharp) is picked up from
        the maxima themselves.
        """
        config = self.config
        if not 0.0 < r < config.N:
            raise errors.PoggBuildModelError(err=f"r={r}", message=f"Mixed roots need r in (0, N={config.N})")
        source = Source(source)
        s = self._s_function(source)

        def h(gamma: float) -> float:
            return r / config.N * s(gamma) - 1

        grid = self._grid()
        values = r / config.N * self._s_values(source) - 1
        candidates = []
        for a, b, fa, fb in zip(grid, grid[1:], values, values[1:]):
            if fa == 0.0 and 0.0 < a < 1.0:
                candidates.append(float(a))
            elif fa * fb < 0:
                candidates.append(float(optimize.bisect(h, a, b, xtol=1e-15, maxiter=200)))
        for gamma, _ in self._maxima(source):
            if abs(h(gamma)) <= tol:
                candidates.append(gamma)

        roots, residuals = [], []
        for gamma in self._merge(candidates, h):
            residual = abs(h(gamma))
            if residual > tol or not 0.0 < gamma < 1.0:
                logger.debug(f"Dropping candidate root {gamma} with residual {residual}")
                continue
            roots.append(gamma)
            residuals.append(residual)

        logger.debug(f"r={r}, source={source}: {len(roots)} roots {roots}")
        return build_model(
            model=RootSet,
            data={"roots": tuple(roots), "residuals": tuple(residuals), "source": source, "tolerance": tol},
        )

    def find_r_sharp(self, source: Source = Source.closedform, tol: float = 1e-10) -> CriticalPair:
        """r_sharp = N / max S, since H is linear in r."""
        source = Source(source)
        maxima = self._maxima(source)
        if not maxima:
            raise errors.PoggNoCriticalPairError(float(self._s_values(source).max()), reason="no interior maximum")

        gamma_sharp, max_s = max(maxima, key=lambda item: item[1])
        if max_s <= 1.0:
            raise errors.PoggNoCriticalPairError(max_s)
        others = tuple(g for g, _ in maxima if g != gamma_sharp)
        return build_model(
            model=CriticalPair,
            data={
                "r_sharp": self.config.N / max_s,
                "gamma_sharp": gamma_sharp,
                "max_s": max_s,
                "source": source,
                "other_maxima": others,
            },
        )

    def pure_region_m1(self, r_grid: Sequence[float], tol: float = 1e-8) -> List[RegionRow]:
        if self.config.m != 1:
            raise errors.PoggBuildModelError(err=f"m={self.config.m}", message="pure_region_m1 requires m = 1")
        rows = []
        for r in r_grid:
            report = Oracle(self.config.with_return(r)).verify_equilibrium(StrategyProfile.grim(), tol=tol)
            rows.append(RegionRow(r=r, verdict=report.verdict, report=report))
        return rows

    def pure_threshold_exact_m_gt_1(self, tol: float = 1e-8) -> float:
        """
        Smallest r at which grim play passes every one-shot deviation check. Each gain is
        (r/N) * phi - 1, so the threshold is the largest N / phi over the contribute classes.
        """
        config = self.config
        if config.m <= 1:
            raise errors.PoggBuildModelError(err=f"m={config.m}", message="pure_threshold_exact_m_gt_1 requires m > 1")

        grim = StrategyProfile.grim()
        phis = {cls: self._oracle.expected_phi(grim, cls) for cls in (SampleClass.root, SampleClass.clean)}
        threshold = max(config.N / phi for phi in phis.values())
        logger.debug(f"Grim phi by class {phis}, exact threshold {threshold}")
        if threshold > config.N:
            raise errors.PoggVacuousBoundError(f"exact threshold {threshold} exceeds N={config.N}")

        report = Oracle(config.with_return(threshold)).verify_equilibrium(grim, tol=tol)
        if report.verdict != Verdict.equilibrium:
            raise errors.PoggVacuousBoundError(f"grim fails at its contribute threshold r={threshold}: {report}")
        return threshold

    def conjecture_explore(self, r_grid: Sequence[float], tol: float = 1e-10) -> ExplorationTable:
        if self.config.m <= 1:
            raise errors.PoggBuildModelError(err=f"m={self.config.m}", message="conjecture_explore requires m > 1")
        rows = []
        for r in r_grid:
            roots = self.find_mixed_roots(r, source=Source.oracle, tol=tol)
            endpoints = (self._oracle.oracle_H(r, 0.0), self._oracle.oracle_H(r, 1.0))
            rows.append(ExplorationRow(r=r, roots=roots, endpoint_gains=endpoints))
        critical = min((row.r for row in rows if row.roots.roots), default=None)
        return ExplorationTable(rows=rows, critical_r=critical)

    def _closedform_row(self, gamma: float, beliefs: Sequence[float]) -> dict:
        """Closed-form columns of a reconcile row; symmetric groups also get the ratio form of psi."""
        config = self.config
        closedform = self._closedform
        positions = range(2, config.b + 1)
        if config.symmetric:
            psi, h = closedform.psi_vector(gamma), closedform.H(config.r, gamma)
            ratio = closedform.psi_vector(gamma, ratio_form=True)
            phis = [closedform.phi_dirty(t, gamma) for t in positions]
        else:
            psi, h, ratio = closedform.psi_asym_vector(gamma), closedform.H_asym(config.r, gamma), None
            phis = [closedform.phi_asym(t, gamma, SampleClass.dirty) for t in positions]

        oracle_phis = [self._oracle.oracle_phi(t, gamma, SampleClass.dirty) for t in positions]
        return {
            "psi_diff": max(abs(x - y) for x, y in zip(psi, beliefs)),
            "psi_ratio_diff": max(abs(x - y) for x, y in zip(ratio, beliefs)) if ratio is not None else None,
            "phi_diff": max(abs(x - y) for x, y in zip(phis, oracle_phis)),
            "h_closedform": h,
        }

    def reconcile(self, gamma_grid: Sequence[float]) -> ReconcileReport:
        """
        Closed forms against the oracle on a gamma grid, plus the small worst-case bound example.
        Closed forms assume m = 1, so for m > 1 only the oracle columns are filled.
        """
        config = self.config
        rows = []
        for gamma in gamma_grid:
            gamma = float(gamma)
            row = {"gamma": gamma, "h_oracle": self._oracle.oracle_H(config.r, gamma)}
            if config.m == 1:
                row.update(self._closedform_row(gamma, self._oracle.tremble_beliefs(gamma).probs))
            rows.append(ReconcileRow(**row))

        example = build_model(
            model=GameConfig, data={"b": len(EXAMPLE_SIZES), "sizes": EXAMPLE_SIZES, "m": EXAMPLE_WINDOW}
        )
        example_bounds = ClosedForm(example)
        exact = Solver(example).pure_threshold_exact_m_gt_1()
        note = (
            f"Sizes {EXAMPLE_SIZES} with m={EXAMPLE_WINDOW}: the one-shot deviation threshold is {exact:.6g}. "
            f"The stated value 5/9 lies below r = 1, where contributing costs more than its own return, "
            f"so it cannot be a contribution threshold."
        )
        if config.m > 1:
            note += f" Closed forms assume m = 1, the closed-form columns are empty for m={config.m}."
        h_diffs = [abs(row.h_closedform - row.h_oracle) for row in rows if row.h_closedform is not None]
        return ReconcileReport(
            rows=rows,
            max_h_diff=max(h_diffs) if h_diffs else None,
            example_bound_max=example_bounds.pure_threshold_m_gt_1(ThresholdMode.max),
            example_bound_average=example_bounds.pure_threshold_m_gt_1(ThresholdMode.average),
            example_exact_threshold=exact,
            note=note,
        )
