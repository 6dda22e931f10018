import logging

from typing import Tuple

from . import errors
from .models import GameConfig, Sample, SampleClass, PayoffParams, Action, WindowState

logger = logging.getLogger(__name__)

Mask = Tuple[bool, ...]


def _check_position(config: GameConfig, position: int) -> None:
    if not 1 <= position <= config.b:
        raise errors.PoggSampleError(f"position {position} outside 1..{config.b}")


def classify_sample(config: GameConfig, position: int, sample: Sample) -> SampleClass:
    """
    Root iff the sample is (0, 0), Clean iff every sampled group contributed in full,
    Dirty otherwise. Raises PoggSampleError when the sample cannot occur at `position`.
    """
    _check_position(config, position)
    window = config.window(position)
    if sample.groups_sampled != len(window):
        raise errors.PoggSampleError(
            f"a player at position {position} samples {len(window)} groups, got zeta'={sample.groups_sampled}"
        )
    capacity = sum(config.size(k) for k in window)
    if sample.contributions_seen > capacity:
        raise errors.PoggSampleError(
            f"zeta''={sample.contributions_seen} exceeds the {capacity} players of positions {list(window)}"
        )

    logger.debug(f"Classifying sample {sample} at position {position} against window {list(window)}")
    if sample.groups_sampled == 0:
        return SampleClass.root
    if sample.contributions_seen == capacity:
        return SampleClass.clean
    return SampleClass.dirty


def payoff(params: PayoffParams, action: Action, others_contributing: int) -> float:
    if not 0 <= others_contributing <= params.total_players - 1:
        raise errors.PoggBuildModelError(
            err=f"G_-i={others_contributing} outside [0, {params.total_players - 1}]",
            message="Invalid payoff arguments",
        )
    if Action(action) == Action.C:
        return params.mpcr * (others_contributing + 1) - 1
    return params.mpcr * others_contributing


def window_mask(config: GameConfig, position: int, state: WindowState) -> Mask:
    """Full/not-full flags of the sampled groups; validates `state` against `position`."""
    _check_position(config, position)
    window = config.window(position)
    if len(state.outputs) != len(window):
        raise errors.PoggSampleError(
            f"window at position {position} holds {len(window)} groups, got {len(state.outputs)} outputs"
        )
    for k, output in zip(window, state.outputs):
        if output > config.size(k):
            raise errors.PoggSampleError(f"output {output} exceeds size {config.size(k)} of position {k}")
    return tuple(output == config.size(k) for k, output in zip(window, state.outputs))


def mask_class(mask: Mask) -> SampleClass:
    if not mask:
        return SampleClass.root
    return SampleClass.clean if all(mask) else SampleClass.dirty


def advance(config: GameConfig, mask: Mask, full: bool) -> Mask:
    """Window seen by the next position once the current group's outcome is known."""
    return (mask + (full,))[-config.m :]


def clean_state(config: GameConfig, position: int) -> WindowState:
    return WindowState(outputs=tuple(config.size(k) for k in config.window(position)))


def dirty_state(config: GameConfig, position: int) -> WindowState:
    """Window whose most recent group is one contribution short; requires position >= 2."""
    window = config.window(position)
    if not window:
        raise errors.PoggSampleError("position 1 never observes a dirty sample")
    outputs = [config.size(k) for k in window]
    outputs[-1] -= 1
    return WindowState(outputs=tuple(outputs))


def state_from_mask(config: GameConfig, position: int, mask: Mask) -> WindowState:
    window = config.window(position)
    return WindowState(outputs=tuple(config.size(k) if full else config.size(k) - 1 for k, full in zip(window, mask)))


def position_prior(config: GameConfig, positions) -> dict:
    """Prior over the player's own position restricted to `positions`, proportional to n_t."""
    total = sum(config.size(t) for t in positions)
    return {t: config.size(t) / total for t in positions}
