import logging

from collections import defaultdict
from typing import Dict, List, Tuple

from scipy import stats

from . import errors
from . import game
from .controller import Controller
from .game import Mask
from .models import (
    GameConfig,
    StrategyProfile,
    WindowState,
    BeliefVector,
    DeviationReport,
    EnumerationReport,
    Sample,
    SampleClass,
    Conditioning,
    build_model,
    judge,
)

logger = logging.getLogger(__name__)

Posterior = Dict[Tuple[int, Mask], float]


class Oracle(Controller):
    """
    Exact expectations from the generative model, independent of the closed forms.

    Window states are tracked as full/not-full flags of the sampled groups, which is all
    the profile family can react to. Off-path beliefs come from single independent
    trembles at first order in epsilon.
    """

    ENUMERATION_CAP = 12

    def __init__(self, config: GameConfig):
        super().__init__(config)

    def chain_expectations(
        self,
        profile: StrategyProfile,
        start_position: int,
        start_state: WindowState,
        conditioning: Conditioning,
    ) -> List[float]:
        """
        Expected contribution of every position from `start_position` to b, the deviator's
        own unit included, when the deviator at `start_position` contributes or defects.
        """
        mask = game.window_mask(self.config, start_position, start_state)
        return self._chain(profile, start_position, mask, Conditioning(conditioning))

    def _chain(self, profile: StrategyProfile, t: int, mask: Mask, conditioning: Conditioning) -> List[float]:
        config = self.config
        own = 1.0 if conditioning == Conditioning.contribute else 0.0
        p = profile.prob(game.mask_class(mask))
        n_t = config.size(t)

        expectations = [own + (n_t - 1) * p]
        p_full = own * p ** (n_t - 1)
        dist: Dict[Mask, float] = defaultdict(float)
        dist[game.advance(config, mask, True)] += p_full
        dist[game.advance(config, mask, False)] += 1 - p_full

        for i in range(t + 1, config.b + 1):
            n_i = config.size(i)
            expected = 0.0
            following: Dict[Mask, float] = defaultdict(float)
            for window, prob in dist.items():
                if prob == 0.0:
                    continue
                q = profile.prob(game.mask_class(window))
                expected += prob * n_i * q
                full = q**n_i
                following[game.advance(config, window, True)] += prob * full
                following[game.advance(config, window, False)] += prob * (1 - full)
            expectations.append(expected)
            dist = following
        return expectations

    def _phi(self, profile: StrategyProfile, t: int, mask: Mask) -> float:
        contribute = self._chain(profile, t, mask, Conditioning.contribute)
        defect = self._chain(profile, t, mask, Conditioning.defect)
        return sum(contribute) - sum(defect)

    def _require_on_path(self, profile: StrategyProfile) -> None:
        if not profile.contributes_on_path:
            raise errors.PoggProfileError()

    def _clean_posterior(self, profile: StrategyProfile) -> Posterior:
        self._require_on_path(profile)
        config = self.config
        prior = game.position_prior(config, range(2, config.b + 1))
        return {(t, (True,) * len(config.window(t))): w for t, w in prior.items()}

    def _dirty_posterior(self, profile: StrategyProfile) -> Posterior:
        """
        Joint posterior over (position, window flags) given a dirty sample. With contribution
        on path, dirty samples need a tremble; at first order exactly one group j trembles,
        with weight n_j, and the prior on the player's position is proportional to n_t.
        """
        self._require_on_path(profile)
        config = self.config
        joint: Posterior = defaultdict(float)

        for j in range(1, config.b):
            width = len(config.window(j + 1))
            dist: Dict[Mask, float] = {(True,) * (width - 1) + (False,): float(config.size(j))}
            for i in range(j + 1, config.b + 1):
                n_i = config.size(i)
                following: Dict[Mask, float] = defaultdict(float)
                for window, weight in dist.items():
                    sample_class = game.mask_class(window)
                    if sample_class == SampleClass.dirty:
                        joint[(i, window)] += weight * n_i
                    full = profile.prob(sample_class) ** n_i
                    following[game.advance(config, window, True)] += weight * full
                    following[game.advance(config, window, False)] += weight * (1 - full)
                dist = following

        total = sum(joint.values())
        logger.debug(f"Dirty posterior over {len(joint)} (position, window) pairs, unnormalised mass {total}")
        return {key: weight / total for key, weight in joint.items() if weight > 0}

    def posterior(self, profile: StrategyProfile, sample_class: SampleClass) -> Posterior:
        if sample_class == SampleClass.root:
            return {(1, ()): 1.0}
        if sample_class == SampleClass.clean:
            return self._clean_posterior(profile)
        return self._dirty_posterior(profile)

    def _marginal(self, posterior: Posterior) -> BeliefVector:
        probs = [0.0] * (self.config.b - 1)
        for (t, _), weight in posterior.items():
            probs[t - 2] += weight
        return build_model(model=BeliefVector, data={"probs": tuple(probs)})

    def tremble_beliefs(self, gamma: float) -> BeliefVector:
        return self._marginal(self._dirty_posterior(StrategyProfile.forgiving(gamma)))

    def clean_beliefs(self) -> BeliefVector:
        return self._marginal(self._clean_posterior(StrategyProfile.grim()))

    def expected_phi(self, profile: StrategyProfile, sample_class: SampleClass) -> float:
        """Belief-weighted number of extra contributions from contributing at `sample_class`."""
        posterior = self.posterior(profile, SampleClass(sample_class))
        return sum(weight * self._phi(profile, t, mask) for (t, mask), weight in posterior.items())

    def oracle_phi(self, t: int, gamma: float, sample_class: SampleClass) -> float:
        """
        phi_t under the forgiving profile. For m > 1 a dirty window at t is averaged over
        the tremble posterior of its flags.
        """
        sample_class = SampleClass(sample_class)
        profile = StrategyProfile.forgiving(gamma)
        config = self.config

        if sample_class == SampleClass.root:
            if t != 1:
                raise errors.PoggSampleError(f"only position 1 observes a root sample, got position {t}")
            return self._phi(profile, 1, ())
        if not 2 <= t <= config.b:
            raise errors.PoggSampleError(f"position {t} outside 2..{config.b}")
        if sample_class == SampleClass.clean:
            return self._phi(profile, t, (True,) * len(config.window(t)))

        at_t = {mask: w for (s, mask), w in self._dirty_posterior(profile).items() if s == t}
        total = sum(at_t.values())
        return sum(w * self._phi(profile, t, mask) for mask, w in at_t.items()) / total

    def oracle_H(self, r: float, gamma: float) -> float:
        profile = StrategyProfile.forgiving(gamma)
        return r / self.config.N * self.expected_phi(profile, SampleClass.dirty) - 1

    def deviation_gains(self, profile: StrategyProfile) -> Dict[SampleClass, float]:
        """u(C) - u(D) at each sample class, at the configured r."""
        mpcr = self.config.mpcr
        return {cls: mpcr * self.expected_phi(profile, cls) - 1 for cls in SampleClass}

    def verify_equilibrium(self, profile: StrategyProfile, tol: float = 1e-8) -> DeviationReport:
        gains = self.deviation_gains(profile)
        verdict = judge(profile, gains, tol)
        logger.debug(f"One-shot deviation gains {dict(gains)} at r={self.config.r}: {verdict}")
        return DeviationReport(
            gain_root=gains[SampleClass.root],
            gain_clean=gains[SampleClass.clean],
            gain_dirty=gains[SampleClass.dirty],
            verdict=verdict,
            tolerance=tol,
            profile=profile,
        )

    # Explicit enumeration over realised group contribution counts.

    def _check_cap(self, cap: int) -> None:
        if self.config.N > cap:
            raise errors.PoggEnumerationCapError(self.config.N, cap)

    def _class_of_counts(self, position: int, window: Tuple[int, ...]) -> SampleClass:
        return game.classify_sample(
            self.config, position, Sample(groups_sampled=len(window), contributions_seen=sum(window))
        )

    def _outcomes(self, size: int, p: float):
        for count in range(size + 1):
            pmf = float(stats.binom.pmf(count, size, p))
            if pmf > 0.0:
                yield count, pmf

    def _future(self, profile: StrategyProfile, window: Tuple[int, ...], position: int, cache: dict) -> List[float]:
        """Expected counts of positions `position`..b given the counts in the current window."""
        if position > self.config.b:
            return []
        key = (window, position)
        if key not in cache:
            size = self.config.size(position)
            p = profile.prob(self._class_of_counts(position, window))
            result = [0.0] * (self.config.b - position + 1)
            for count, pmf in self._outcomes(size, p):
                rest = self._future(profile, (window + (count,))[-self.config.m :], position + 1, cache)
                result[0] += pmf * count
                for k, value in enumerate(rest, start=1):
                    result[k] += pmf * value
            cache[key] = result
        return cache[key]

    def enumerate_expectations(
        self,
        profile: StrategyProfile,
        start_position: int,
        start_state: WindowState,
        conditioning: Conditioning,
        cap: int = ENUMERATION_CAP,
    ) -> List[float]:
        """Same quantity as chain_expectations, by enumerating every realised count."""
        self._check_cap(cap)
        game.window_mask(self.config, start_position, start_state)
        window = start_state.outputs
        own = 1 if Conditioning(conditioning) == Conditioning.contribute else 0
        p = profile.prob(self._class_of_counts(start_position, window))
        cache: dict = {}

        result = [0.0] * (self.config.b - start_position + 1)
        for others, pmf in self._outcomes(self.config.size(start_position) - 1, p):
            count = own + others
            rest = self._future(profile, (window + (count,))[-self.config.m :], start_position + 1, cache)
            result[0] += pmf * count
            for k, value in enumerate(rest, start=1):
                result[k] += pmf * value
        return result

    def _histories(
        self, profile: StrategyProfile, upto: int, prefix: Tuple[int, ...] = (), weight: float = 1.0, order: int = 0
    ):
        """
        Counts of positions 1..upto with their weight and tremble order. A tremble flips one
        member of a group with a pure prescription; its first-order coefficient is the group size.
        """
        position = len(prefix) + 1
        if position > upto:
            yield prefix, weight, order
            return

        size = self.config.size(position)
        window = prefix[-self.config.m :] if prefix else ()
        p = profile.prob(self._class_of_counts(position, window))

        for count, pmf in self._outcomes(size, p):
            yield from self._histories(profile, upto, prefix + (count,), weight * pmf, order)
        if order == 0 and p in (0.0, 1.0):
            flipped = size - 1 if p == 1.0 else 1
            yield from self._histories(profile, upto, prefix + (flipped,), weight * size, order + 1)

    def brute_force_enumerate(self, profile: StrategyProfile, cap: int = ENUMERATION_CAP) -> EnumerationReport:
        """
        Expected utilities of contributing and defecting per sample class, enumerating the
        deviator's position (prior n_t / N), every realised predecessor history with at most
        one tremble, and every realised continuation.
        """
        self._check_cap(cap)
        config = self.config
        mpcr = config.mpcr
        # class -> order -> [weight, E[G_-j | C] * weight, E[G_-j | D] * weight]
        acc = {cls: {0: [0.0, 0.0, 0.0], 1: [0.0, 0.0, 0.0]} for cls in SampleClass}

        for t in range(1, config.b + 1):
            prior = config.size(t) / config.N
            cache: dict = {}
            for history, weight, order in self._histories(profile, t - 1):
                width = len(config.window(t))
                window = history[-width:] if width else ()
                sample_class = self._class_of_counts(t, window)
                p = profile.prob(sample_class)
                before = sum(history)

                expected = {}
                for own in (1, 0):
                    total = 0.0
                    for others, pmf in self._outcomes(config.size(t) - 1, p):
                        rest = self._future(profile, (window + (own + others,))[-config.m :], t + 1, cache)
                        total += pmf * (others + sum(rest))
                    expected[own] = before + total

                slot = acc[sample_class][order]
                slot[0] += prior * weight
                slot[1] += prior * weight * expected[1]
                slot[2] += prior * weight * expected[0]

        utility_contribute, utility_defect, gains, orders = {}, {}, {}, {}
        for sample_class, by_order in acc.items():
            order = 0 if by_order[0][0] > 0 else 1
            weight, with_c, with_d = by_order[order]
            if weight == 0.0:
                continue
            utility_contribute[sample_class] = mpcr * (with_c / weight + 1) - 1
            utility_defect[sample_class] = mpcr * (with_d / weight)
            gains[sample_class] = utility_contribute[sample_class] - utility_defect[sample_class]
            orders[sample_class] = order

        logger.debug(f"Enumerated N={config.N}: gains {gains}, orders {orders}")
        return EnumerationReport(
            utility_contribute=utility_contribute, utility_defect=utility_defect, gains=gains, order=orders
        )
