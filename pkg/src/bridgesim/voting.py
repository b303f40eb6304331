"""Voting rules that turn a window of past statements into one verdict."""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass
from typing import Any, Optional, Sequence

# Bridge statements carry competence 1, whose log-odds are infinite.  The
# weighted rule clamps competences to this ceiling before taking logits.
WEIGHT_CAP = 0.999


@dataclass(frozen=True)
class Statement:
    positive: bool
    competence: float
    search: Any = None
    time: float = 0.0

    def __post_init__(self) -> None:
        if not 0.0 < self.competence <= 1.0:
            raise ValueError(f"competence must lie in (0, 1], got {self.competence}")


class Rule(str, enum.Enum):
    UNANIMITY = "unanimity"
    SIMPLE_MAJORITY = "simple-majority"
    ONE_VOTE = "one-vote"
    INTELLIGENT_MAJORITY = "intelligent-majority"
    COMPETENT_CYCLE = "competent-cycle"
    WEIGHTED = "weighted"

    @classmethod
    def parse(cls, name: str) -> "Rule":
        key = name.strip().lower().replace("_", "-")
        for r in cls:
            if r.value == key or r.name.lower().replace("_", "-") == key:
                return r
        raise ValueError(f"unknown voting rule {name!r}; choose from {[r.value for r in cls]}")


class VotingConfigError(ValueError):
    pass


@dataclass(frozen=True)
class RuleConfig:
    rule: Rule
    k: int = 5
    trust_threshold: float = 0.9
    prior: Optional[float] = None

    def __post_init__(self) -> None:
        object.__setattr__(self, "rule", Rule.parse(self.rule) if isinstance(self.rule, str) else self.rule)
        if self.k < 1:
            raise VotingConfigError("window k must be at least 1")
        if self.prior is not None and not 0.0 < self.prior < 1.0:
            raise VotingConfigError("prior must lie strictly between 0 and 1")


def weight(p: float) -> float:
    """Log-odds of ``p``."""
    if not 0.0 < p < 1.0:
        raise ValueError(f"weight is undefined at p={p}")
    return math.log(p / (1.0 - p))


def network_prior(positives: int, total: int) -> float:
    if not 0 < positives < total:
        raise VotingConfigError(f"prior {positives}/{total} has undefined log-odds")
    return positives / total


def _majority(window: Sequence[Statement]) -> bool:
    pos = sum(1 for s in window if s.positive)
    return 2 * pos > len(window)


def _trusted_negative(window: Sequence[Statement], threshold: float) -> bool:
    return any(not s.positive and s.competence >= threshold for s in window)


def vote(history: Sequence[Statement], cfg: RuleConfig) -> bool:
    """Verdict (True = positive) of ``cfg.rule`` over the last ``cfg.k`` statements."""
    window = list(history)[-cfg.k:]
    rule = cfg.rule
    if rule is Rule.UNANIMITY:
        return all(s.positive for s in window)
    if rule is Rule.SIMPLE_MAJORITY:
        return _majority(window)
    if rule is Rule.ONE_VOTE:
        return any(s.positive for s in window)
    if rule is Rule.INTELLIGENT_MAJORITY:
        return _majority(window) and not _trusted_negative(window, cfg.trust_threshold)
    if rule is Rule.COMPETENT_CYCLE:
        return not _trusted_negative(window, cfg.trust_threshold)
    if rule is Rule.WEIGHTED:
        if cfg.prior is None:
            raise VotingConfigError("the weighted rule needs a prior")
        if not window:
            return False
        # fsum keeps exact ties at zero regardless of statement order
        total = math.fsum(weight(min(s.competence, WEIGHT_CAP)) * (1 if s.positive else -1) for s in window)
        return total > weight(cfg.prior)
    raise VotingConfigError(f"unhandled rule {rule!r}")
