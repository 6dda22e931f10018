import logging
import math

from typing import List, Optional, Tuple

import numpy as np

from . import errors
from . import game
from .controller import Controller
from .oracle import Oracle
from .models import GameConfig, StrategyProfile, WindowState, SampleClass, Conditioning, SimStats

logger = logging.getLogger(__name__)


class MonteCarlo(Controller):
    """
    Seeded simulation of full plays. Runs are processed in batches of BATCH_SIZE and batch k
    draws from SeedSequence(seed).spawn(n_batches)[k] through PCG64, so a result depends on
    (seed, runs) only.
    """

    BATCH_SIZE = 4096
    RNG_NAME = "numpy.PCG64/SeedSequence.spawn"

    def __init__(self, config: GameConfig):
        super().__init__(config)

    def _batches(self, runs: int, seed: int):
        if runs < 1:
            raise errors.PoggBuildModelError(err=f"runs={runs}", message="At least one run is required")
        n_batches = math.ceil(runs / self.BATCH_SIZE)
        children = np.random.SeedSequence(seed).spawn(n_batches)
        for k, child in enumerate(children):
            size = min(self.BATCH_SIZE, runs - k * self.BATCH_SIZE)
            yield size, np.random.Generator(np.random.PCG64(child))

    def _draw(self, rng: np.random.Generator, start: int, size: int) -> List[np.ndarray]:
        """One uniform per member of every group from `start` to b."""
        return [rng.random((size, self.config.size(i))) for i in range(start, self.config.b + 1)]

    def _counts(
        self,
        profile: StrategyProfile,
        start: int,
        mask: game.Mask,
        uniforms: List[np.ndarray],
        tremble_eps: float = 0.0,
        forced: Optional[Conditioning] = None,
    ) -> np.ndarray:
        """Realised contributions per run and position; member 0 of group `start` plays `forced` if set."""
        size = uniforms[0].shape[0]
        window = np.tile(np.array(mask, dtype=bool), (size, 1))
        counts = np.zeros((size, len(uniforms)))

        for k, u in enumerate(uniforms):
            if window.shape[1] == 0:
                p = np.full(size, profile.p_root)
            else:
                p = np.where(window.all(axis=1), profile.p_clean, profile.p_dirty)
            p_eff = p * (1 - tremble_eps) + (1 - p) * tremble_eps
            acts = u < p_eff[:, None]
            if k == 0 and forced is not None:
                acts[:, 0] = forced == Conditioning.contribute
            counts[:, k] = acts.sum(axis=1)
            window = np.concatenate([window, acts.all(axis=1)[:, None]], axis=1)[:, -self.config.m :]
        return counts

    def simulate(
        self,
        profile: StrategyProfile,
        runs: int,
        seed: int,
        tremble_eps: float = 0.0,
        forced_start: Optional[WindowState] = None,
        start_position: int = 1,
        conditioning: Optional[Conditioning] = None,
    ) -> SimStats:
        """
        Plays positions start_position..b. forced_start fixes the window seen at start_position
        (empty at position 1); conditioning fixes one member's action there.
        """
        if not 0.0 <= tremble_eps <= 1.0:
            raise errors.PoggBuildModelError(err=f"tremble_eps={tremble_eps}", message="tremble_eps must lie in [0, 1]")
        state = forced_start if forced_start is not None else game.clean_state(self.config, start_position)
        mask = game.window_mask(self.config, start_position, state)
        forced = Conditioning(conditioning) if conditioning is not None else None

        batches = []
        for size, rng in self._batches(runs, seed):
            uniforms = self._draw(rng, start_position, size)
            batches.append(self._counts(profile, start_position, mask, uniforms, tremble_eps, forced))
        counts = np.concatenate(batches, axis=0)
        totals = counts.sum(axis=1)

        def std_error(values: np.ndarray) -> float:
            return float(values.std(ddof=1) / math.sqrt(runs)) if runs > 1 else 0.0

        stats = SimStats(
            runs=runs,
            mean_total_contribution=float(totals.mean()),
            per_position_means=tuple(float(v) for v in counts.mean(axis=0)),
            per_position_std_errors=tuple(std_error(counts[:, k]) for k in range(counts.shape[1])),
            std_error=std_error(totals),
            seed=seed,
            start_position=start_position,
            rng=self.RNG_NAME,
        )
        logger.debug(
            f"Simulated {runs} runs from position {start_position}: mean total {stats.mean_total_contribution}"
        )
        return stats

    def estimate_deviation_gain(
        self, profile: StrategyProfile, sample_class: SampleClass, runs: int, seed: int
    ) -> Tuple[float, float]:
        """
        Paired estimate of u(C) - u(D) at `sample_class`. Each run draws (position, window)
        from the exact posterior and plays both actions on the same uniforms.
        """
        posterior = Oracle(self.config).posterior(profile, SampleClass(sample_class))
        keys = list(posterior)
        probs = np.array([posterior[key] for key in keys])
        probs = probs / probs.sum()
        mpcr = self.config.mpcr

        gains = []
        for size, rng in self._batches(runs, seed):
            picks = rng.choice(len(keys), size=size, p=probs)
            for index, (t, mask) in enumerate(keys):
                rows = int((picks == index).sum())
                if rows == 0:
                    continue
                uniforms = self._draw(rng, t, rows)
                with_c = self._counts(profile, t, mask, uniforms, forced=Conditioning.contribute).sum(axis=1)
                with_d = self._counts(profile, t, mask, uniforms, forced=Conditioning.defect).sum(axis=1)
                gains.append(mpcr * (with_c - with_d) - 1)

        gains = np.concatenate(gains)
        se = float(gains.std(ddof=1) / math.sqrt(runs)) if runs > 1 else 0.0
        logger.debug(f"Deviation gain at {sample_class}: {gains.mean()} +- {se} over {runs} runs")
        return float(gains.mean()), se
