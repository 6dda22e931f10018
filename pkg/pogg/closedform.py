import logging
import math

from typing import List, Tuple, Optional, Sequence

import numpy as np

from . import errors
from .controller import Controller
from .models import GameConfig, SampleClass, ThresholdMode, CurvePoint

logger = logging.getLogger(__name__)


def _check_gamma(gamma: float) -> float:
    if not 0.0 <= gamma <= 1.0:
        raise errors.PoggBuildModelError(err=f"gamma={gamma}", message="gamma must lie in [0, 1]")
    return float(gamma)


def one_minus_pow(y: float, k: int) -> float:
    """1 - (1 - y)^k, accurate for small y."""
    if k <= 0:
        return 0.0
    if y >= 1.0:
        return 1.0
    return -math.expm1(k * math.log1p(-y))


def _geometric(y: float, k: int) -> float:
    """sum_{j<k} (1 - y)^j = (1 - (1 - y)^k) / y, with the y -> 0 limit k."""
    if y == 0.0:
        return float(k)
    return one_minus_pow(y, k) / y


class ClosedForm(Controller):
    """
    Closed-form phi/psi/S/H for symmetric groups, the worst-case bound for m > 1,
    the asymmetric per-group differences and their bracketing bounds.
    Endpoints gamma in {0, 1} are served by explicit limit branches.
    """

    def __init__(self, config: GameConfig):
        super().__init__(config)

    def _require_symmetric(self) -> int:
        if not self.config.symmetric:
            raise errors.PoggBuildModelError(
                err=f"sizes {self.config.sizes}",
                message="Symmetric formula used on asymmetric groups, use the *_asym operations",
            )
        return self.config.n

    def _check_position(self, t: int, lowest: int = 2) -> None:
        if not lowest <= t <= self.config.b:
            raise errors.PoggSampleError(f"position {t} outside {lowest}..{self.config.b}")

    def phi_dirty(self, t: int, gamma: float) -> float:
        n = self._require_symmetric()
        self._check_position(t)
        gamma = _check_gamma(gamma)
        b = self.config.b

        if gamma == 0.0:
            return 1.0 if n > 1 else float(b - t + 1)
        if gamma == 1.0:
            return 1.0
        if n == 1:
            return one_minus_pow(gamma, b - t + 1) / gamma
        return n * (1 - gamma) * one_minus_pow(gamma**n, b - t) / gamma + 1

    def phi_clean(self, t: int, gamma: float) -> float:
        """t = 1 gives the Root view (group 1 plays like a clean group)."""
        n = self._require_symmetric()
        self._check_position(t, lowest=1)
        gamma = _check_gamma(gamma)
        b = self.config.b

        if gamma == 0.0:
            return float((b - t) * n + 1)
        if gamma == 1.0:
            return 1.0
        return n * (1 - gamma) * one_minus_pow(gamma**n, b - t) / gamma**n + 1

    def psi_vector(self, gamma: float, ratio_form: bool = False) -> List[float]:
        """psi_t for t = 2..b."""
        n = self._require_symmetric()
        gamma = _check_gamma(gamma)
        b = self.config.b

        if ratio_form:
            return [self._psi_ratio(t, gamma, n) for t in range(2, b + 1)]

        # w_t = sum_{i=0}^{t-2} x^i, proportional to the pre-simplification numerator
        x = 1.0 - gamma**n
        weights = [1.0]
        for _ in range(3, b + 1):
            weights.append(1.0 + x * weights[-1])
        total = sum(weights)
        return [w / total for w in weights]

    def _psi_ratio(self, t: int, gamma: float, n: int) -> float:
        b = self.config.b
        if gamma == 0.0:
            return 2 * (t - 1) / (b * (b - 1))
        x = 1.0 - gamma**n
        numerator = 1 - x ** (t - 1)
        denominator = b - 1 - gamma ** (-n) * (1 - gamma**n) * (1 - x ** (b - 1))
        return numerator / denominator

    def psi(self, t: int, gamma: float, ratio_form: bool = False) -> float:
        self._check_position(t)
        return self.psi_vector(gamma, ratio_form=ratio_form)[t - 2]

    def S(self, gamma: float) -> float:
        psi = self.psi_vector(gamma)
        return sum(p * self.phi_dirty(t, gamma) for t, p in enumerate(psi, start=2))

    def H(self, r: float, gamma: float) -> float:
        return r / self.config.N * self.S(gamma) - 1

    def curve(self, r: float, gammas: Sequence[float]) -> List[CurvePoint]:
        return [CurvePoint(gamma=float(g), value=self.H(r, float(g))) for g in gammas]

    def inequality_chain(self, gamma: float) -> Tuple[float, float, float]:
        """(root view phi_1, mean clean phi over 2..b, psi-weighted dirty phi)."""
        b = self.config.b
        root_view = self.phi_clean(1, gamma)
        clean_mean = float(np.mean([self.phi_clean(t, gamma) for t in range(2, b + 1)]))
        return root_view, clean_mean, self.S(gamma)

    def pure_threshold_m_gt_1(self, mode: ThresholdMode = ThresholdMode.max) -> float:
        """
        Worst-case bound 2N / (2N - (b + m - 1) n) for the grim profile.
        mode=max uses n = max size, mode=average uses n = N / b.
        """
        config = self.config
        if config.m <= 1:
            raise errors.PoggBuildModelError(err=f"m={config.m}", message="The worst-case bound requires m > 1")

        mode = ThresholdMode(mode)
        n = max(config.sizes) if mode == ThresholdMode.max else config.N / config.b
        denominator = 2 * config.N - (config.b + config.m - 1) * n
        logger.debug(f"Worst-case bound ({mode}): n={n}, denominator={denominator}")
        if denominator <= 0:
            raise errors.PoggVacuousBoundError(
                f"2N - (b+m-1)n = {denominator} <= 0 for sizes {config.sizes}, m={config.m}"
            )
        return 2 * config.N / denominator

    def delta_asym(self, i: int, t: int, gamma: float, sample_class: SampleClass) -> float:
        """
        Expected extra contribution of group i caused by contributing at position t.
        i = t is the player's own unit.
        """
        sample_class = SampleClass(sample_class)
        lowest = 2 if sample_class == SampleClass.dirty else 1
        self._check_position(t, lowest=lowest)
        if not t <= i <= self.config.b:
            raise errors.PoggSampleError(f"group {i} must lie in {t}..{self.config.b}")
        gamma = _check_gamma(gamma)

        if i == t:
            return 1.0
        sizes = self.config.sizes
        survival = math.prod(1 - gamma ** sizes[w - 1] for w in range(t + 1, i))
        delta = sizes[i - 1] * (1 - gamma) * survival
        if sample_class == SampleClass.dirty:
            delta *= gamma ** (sizes[t - 1] - 1)
        return delta

    def phi_asym(self, t: int, gamma: float, sample_class: SampleClass) -> float:
        return sum(self.delta_asym(i, t, gamma, sample_class) for i in range(t, self.config.b + 1))

    def psi_asym_vector(self, gamma: float) -> List[float]:
        """Posterior over positions 2..b after a dirty sample: n_t * sum_j n_j * prod_{j<k<t}(1 - gamma^n_k)."""
        gamma = _check_gamma(gamma)
        sizes = self.config.sizes
        weights = []
        reach = 0.0
        for t in range(2, self.config.b + 1):
            # reach_t = sum_{j<t} n_j prod_{j<k<t}(1 - gamma^{n_k})
            reach = sizes[t - 2] + reach * (1 - gamma ** sizes[t - 2])
            weights.append(sizes[t - 1] * reach)
        total = sum(weights)
        return [w / total for w in weights]

    def S_asym(self, gamma: float) -> float:
        psi = self.psi_asym_vector(gamma)
        return sum(p * self.phi_asym(t, gamma, SampleClass.dirty) for t, p in enumerate(psi, start=2))

    def H_asym(self, r: float, gamma: float) -> float:
        return r / self.config.N * self.S_asym(gamma) - 1

    def phi_bounds_asym(self, t: int, gamma: float) -> Tuple[float, float]:
        """
        Bounds on the dirty-sample phi_t using M and lambda, the largest and smallest
        sizes among positions t..b. Both collapse to phi_dirty when M == lambda.
        """
        self._check_position(t)
        gamma = _check_gamma(gamma)
        relevant = self.config.sizes[t - 1 :]
        big, small = max(relevant), min(relevant)
        k = self.config.b - t

        if k == 0 or gamma == 1.0:
            return 1.0, 1.0
        if gamma == 0.0:
            lower = 1.0 + small * k if big == 1 else 1.0
            upper = 1.0 + big * k if small == 1 else 1.0
            return lower, upper

        lower = 1 + small * (1 - gamma) * gamma ** (big - 1) * _geometric(gamma**small, k)
        upper = 1 + big * (1 - gamma) * gamma ** (small - 1) * _geometric(gamma**big, k)
        return lower, upper

    def pure_interval_m1(self) -> Tuple[float, float]:
        """
        Returns on which the grim profile is an equilibrium for m = 1:
        contributing must pay at Root and Clean, defecting must pay at Dirty.
        """
        config = self.config
        if config.m != 1:
            raise errors.PoggBuildModelError(err=f"m={config.m}", message="pure_interval_m1 requires m = 1")

        root_phi = self.phi_asym(1, 0.0, SampleClass.clean)
        positions = range(2, config.b + 1)
        clean_weights = [config.size(t) for t in positions]
        clean_phi = sum(w * self.phi_asym(t, 0.0, SampleClass.clean) for t, w in zip(positions, clean_weights))
        clean_phi /= sum(clean_weights)

        lower = config.N / min(root_phi, clean_phi)
        upper = min(config.N / self.S_asym(0.0), float(config.N))
        logger.debug(f"Grim region for m=1: root phi={root_phi}, clean phi={clean_phi}, interval=[{lower}, {upper}]")
        if lower > upper:
            raise errors.PoggVacuousBoundError(f"grim region [{lower}, {upper}] is empty for sizes {config.sizes}")
        return lower, upper
