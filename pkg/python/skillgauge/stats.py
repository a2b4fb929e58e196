"""
Expert-vs-resident group comparison.

:func:`rank_sum_test` is the two-sided Wilcoxon rank-sum (Mann-Whitney U)
test. Small tie-free samples use the exact permutation distribution of U;
everything else uses the normal approximation with tie correction and a 0.5
continuity correction.
"""

from __future__ import annotations

import math
from collections.abc import Iterable
from dataclasses import dataclass
from enum import Enum
from functools import lru_cache
from typing import Any, NamedTuple

import numpy as np
from numpy.typing import NDArray
from scipy.special import comb
from scipy.stats import norm, rankdata, tiecorrect

from .errors import DegenerateError, ValidationError
from .models import Group

EXACT_MAX_TOTAL = 20
DEFAULT_ALPHA = 0.05


class TestMethod(Enum):
    __test__ = False

    EXACT = "exact"
    NORMAL_APPROX = "normal-approx"


@dataclass(frozen=True)
class SampleGroup:
    name: Group
    values: tuple[float, ...]

    def __post_init__(self) -> None:
        values = tuple(float(v) for v in self.values)
        if not values:
            raise ValidationError(f"{self.name.value} group is empty")
        if not all(math.isfinite(v) for v in values):
            raise ValidationError(f"{self.name.value} group contains non-finite values")
        object.__setattr__(self, "values", values)

    @classmethod
    def of(cls, name: Group | str, values: Iterable[float]) -> SampleGroup:
        return cls(Group.parse(name) if isinstance(name, str) else name, tuple(values))

    def __len__(self) -> int:
        return len(self.values)


@dataclass(frozen=True)
class TestResult:
    __test__ = False

    u_statistic: float
    p_value: float
    method: TestMethod
    n1: int
    n2: int
    alpha: float = DEFAULT_ALPHA

    @property
    def significant(self) -> bool:
        return self.p_value < self.alpha

    def to_dict(self) -> dict[str, Any]:
        return {
            "u": self.u_statistic,
            "p": self.p_value,
            "method": self.method.value,
            "n1": self.n1,
            "n2": self.n2,
            "significant": self.significant,
        }


@lru_cache(maxsize=None)
def _u_counts(n1: int, n2: int) -> tuple[int, ...]:
    # f(n1, n2, u) = f(n1 - 1, n2, u - n2) + f(n1, n2 - 1, u)
    if n1 == 0 or n2 == 0:
        return (1,)
    out = [0] * (n1 * n2 + 1)
    for u, c in enumerate(_u_counts(n1 - 1, n2)):
        out[u + n2] += c
    for u, c in enumerate(_u_counts(n1, n2 - 1)):
        out[u] += c
    return tuple(out)


def exact_u_distribution(n1: int, n2: int) -> NDArray[np.int64]:
    """Number of group assignments yielding each U = 0 .. n1*n2.

    The counts sum to C(n1 + n2, n1).
    """
    if n1 < 1 or n2 < 1:
        raise ValidationError(f"group sizes must be positive, got {n1} and {n2}")
    return np.array(_u_counts(n1, n2), dtype=np.int64)


def _exact_p(u1: float, n1: int, n2: int) -> float:
    counts = exact_u_distribution(n1, n2)
    k = int(round(u1))
    total = int(comb(n1 + n2, n1, exact=True))
    lower = int(counts[: k + 1].sum())
    upper = int(counts[k:].sum())
    return min(1.0, 2.0 * min(lower, upper) / total)


def _approx_p(u1: float, n1: int, n2: int, ranks: NDArray[np.float64]) -> float:
    t = tiecorrect(ranks)
    sd = math.sqrt(t * n1 * n2 * (n1 + n2 + 1) / 12.0)
    big_u = max(u1, n1 * n2 - u1)
    z = (big_u - n1 * n2 / 2.0 - 0.5) / sd
    # p stays in (0, 1] however far apart the groups are
    log_p = math.log(2.0) + float(norm.logsf(z))
    return max(math.ulp(0.0), math.exp(min(0.0, log_p)))


def rank_sum_test(a: SampleGroup, b: SampleGroup, alpha: float = DEFAULT_ALPHA) -> TestResult:
    """Two-sided rank-sum test; ``u_statistic`` is the U of group ``a``."""
    if not (0.0 < alpha < 1.0):
        raise ValidationError(f"alpha {alpha} outside (0, 1)")
    n1, n2 = len(a), len(b)
    pooled = np.concatenate([np.asarray(a.values), np.asarray(b.values)])
    if np.all(pooled == pooled[0]):
        raise DegenerateError(f"all {n1 + n2} values are identical ({pooled[0]:g})")

    ranks = rankdata(pooled)
    u1 = float(ranks[:n1].sum() - n1 * (n1 + 1) / 2.0)
    has_ties = len(np.unique(pooled)) < len(pooled)

    if n1 + n2 <= EXACT_MAX_TOTAL and not has_ties:
        return TestResult(u1, _exact_p(u1, n1, n2), TestMethod.EXACT, n1, n2, alpha)
    return TestResult(u1, _approx_p(u1, n1, n2, ranks), TestMethod.NORMAL_APPROX, n1, n2, alpha)


class Description(NamedTuple):
    mean: float
    std: float
    n: int

    def to_dict(self) -> dict[str, Any]:
        return {"mean": self.mean, "std": self.std, "n": self.n}


def describe(group: SampleGroup) -> Description:
    """Mean and sample standard deviation (n - 1); std is 0 for a single value."""
    values = np.asarray(group.values, dtype=np.float64)
    std = float(np.std(values, ddof=1)) if len(values) > 1 else 0.0
    return Description(float(np.mean(values)), std, len(values))


@dataclass(frozen=True)
class GroupComparison:
    """Descriptive statistics of both groups and their rank-sum test.

    ``result`` is None when the pooled values carry no rank information;
    ``degenerate`` then holds the reason.
    """

    task: str
    metric: str
    expert: Description
    resident: Description
    result: TestResult | None
    degenerate: str | None = None

    def to_dict(self) -> dict[str, Any]:
        out: dict[str, Any] = {
            "task": self.task,
            "metric": self.metric,
            "expert": self.expert.to_dict(),
            "resident": self.resident.to_dict(),
        }
        if self.result is None:
            return {
                **out,
                "u": None,
                "p": None,
                "method": "degenerate",
                "significant": False,
                "reason": self.degenerate,
            }
        return {
            **out,
            "u": self.result.u_statistic,
            "p": self.result.p_value,
            "method": self.result.method.value,
            "significant": self.result.significant,
        }


def compare_groups(
    expert_values: Iterable[float],
    resident_values: Iterable[float],
    alpha: float = DEFAULT_ALPHA,
    task: str = "",
    metric: str = "",
    allow_degenerate: bool = False,
) -> GroupComparison:
    """Describe both groups and test them.

    With ``allow_degenerate`` identical pooled values yield a comparison
    without a test result instead of raising DegenerateError.
    """
    experts = SampleGroup.of(Group.EXPERT, expert_values)
    residents = SampleGroup.of(Group.RESIDENT, resident_values)
    try:
        result = rank_sum_test(experts, residents, alpha)
    except DegenerateError as exc:
        if not allow_degenerate:
            raise
        return GroupComparison(task, metric, describe(experts), describe(residents), None, exc.detail)
    return GroupComparison(task, metric, describe(experts), describe(residents), result)
