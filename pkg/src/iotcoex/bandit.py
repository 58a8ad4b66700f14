"""UCB1-style bandit for distributed subframe selection.

The arm value is ``Z_k + sqrt(alpha * ln t / T_k)`` where ``Z_k`` is the
accumulated (not averaged) binary reward of arm ``k`` and ``T_k`` its visit
count, both starting at 0 and 1.  ``value_mode="mean"`` switches to the
textbook ``Z_k / T_k`` reward term.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, replace

VALUE_MODES = ("cumulative", "mean")


@dataclass(frozen=True)
class BanditState:
    num_arms: int
    cum_reward: tuple[int, ...]
    visit_count: tuple[int, ...]
    round: int
    exploration_weight: float
    value_mode: str = "cumulative"

    def values(self) -> list[float]:
        log_t = math.log(self.round)
        out = []
        for z, n in zip(self.cum_reward, self.visit_count):
            base = z / n if self.value_mode == "mean" else z
            out.append(base + math.sqrt(self.exploration_weight * log_t / n))
        return out

    def to_dict(self) -> dict:
        return {
            "num_arms": self.num_arms,
            "cum_reward": list(self.cum_reward),
            "visit_count": list(self.visit_count),
            "round": self.round,
            "exploration_weight": self.exploration_weight,
            "value_mode": self.value_mode,
        }


def init(num_arms: int, exploration_weight: float, value_mode: str = "cumulative") -> BanditState:
    if num_arms < 1:
        raise ValueError("a bandit needs at least one arm")
    if exploration_weight <= 0:
        raise ValueError("exploration_weight must be positive")
    if exploration_weight >= 1:
        warnings.warn(
            f"exploration_weight={exploration_weight} is outside (0, 1)", stacklevel=2
        )
    if value_mode not in VALUE_MODES:
        raise ValueError(f"value_mode must be one of {VALUE_MODES}")
    return BanditState(
        num_arms=num_arms,
        cum_reward=(0,) * num_arms,
        visit_count=(1,) * num_arms,
        round=1,
        exploration_weight=exploration_weight,
        value_mode=value_mode,
    )


def select(state: BanditState) -> int:
    """Index of the highest-valued arm; ties go to the lowest index."""
    values = state.values()
    best = 0
    for k in range(1, state.num_arms):
        if values[k] > values[best]:
            best = k
    return best


def update(state: BanditState, arm: int, reward: int) -> BanditState:
    if not 0 <= arm < state.num_arms:
        raise ValueError(f"arm {arm} out of range for {state.num_arms} arms")
    if reward not in (0, 1):
        raise ValueError("reward must be 0 or 1")
    z = list(state.cum_reward)
    n = list(state.visit_count)
    z[arm] += reward
    n[arm] += 1
    return replace(state, cum_reward=tuple(z), visit_count=tuple(n), round=state.round + 1)
