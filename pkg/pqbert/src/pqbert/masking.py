"""BERT-style masking over P x M sub-word grids.

A plan selects round(mask_ratio * P * M) positions without replacement
and assigns each a corruption action: replace with the reserved mask
token, replace with a random valid id, or keep unchanged. Random
replacement ids are drawn at plan time so applying a plan is pure.
"""

from dataclasses import dataclass

import numpy as np

ACTION_NONE = 0
ACTION_MASK = 1
ACTION_RANDOM = 2
ACTION_KEEP = 3


@dataclass
class MaskPlan:
    actions: np.ndarray       # (P, M) uint8, ACTION_* values
    replacements: np.ndarray  # (P, M) int64, meaningful where action is RANDOM

    @property
    def selected(self) -> np.ndarray:
        return self.actions != ACTION_NONE

    @property
    def masked_fraction(self) -> float:
        return float(self.selected.mean())

    def action_counts(self) -> dict:
        sel = self.actions[self.selected]
        return {
            "mask": int((sel == ACTION_MASK).sum()),
            "random": int((sel == ACTION_RANDOM).sum()),
            "keep": int((sel == ACTION_KEEP).sum()),
        }


def sample_mask_plan(
    P: int,
    M: int,
    k_star: int,
    rng: np.random.Generator,
    mask_ratio: float = 0.15,
    mask_token_frac: float = 0.8,
    random_frac: float = 0.1,
) -> MaskPlan:
    """Draw one plan: a fixed-size position budget, then per-position
    corruption actions with the configured probabilities."""
    total = P * M
    budget = int(round(mask_ratio * total))
    budget = max(1, min(budget, total))
    flat = rng.choice(total, size=budget, replace=False)
    actions = np.zeros(total, dtype=np.uint8)
    draws = rng.random(budget)
    actions[flat] = np.where(
        draws < mask_token_frac, ACTION_MASK,
        np.where(draws < mask_token_frac + random_frac, ACTION_RANDOM, ACTION_KEEP),
    )
    replacements = rng.integers(0, k_star, size=total, dtype=np.int64)
    return MaskPlan(
        actions=actions.reshape(P, M),
        replacements=replacements.reshape(P, M),
    )


def corrupt(codes: np.ndarray, plan: MaskPlan, mask_id: int) -> np.ndarray:
    """Apply a plan to a (P, M) id grid, returning the corrupted copy."""
    out = np.array(codes, dtype=np.int64, copy=True)
    out[plan.actions == ACTION_MASK] = mask_id
    randomized = plan.actions == ACTION_RANDOM
    out[randomized] = plan.replacements[randomized]
    return out
