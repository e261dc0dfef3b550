"""Instances, outcomes and instance-level analytics for maxmin participatory budgeting.

Projects carry positive integer costs and the budget is a positive integer.
Internally most algorithms work on bitmasks over the project order: bit ``k``
stands for ``instance.projects[k]``.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field
from functools import cached_property
from typing import Iterable, Optional, Sequence


class PBError(Exception):
    """Base class for errors raised by this package."""


class InstanceError(PBError, ValueError):
    """An instance violates a structural invariant."""


class ResourceLimitError(PBError):
    """A solver hit a configured size, state or node cap."""


class EmptyVoteWarning(UserWarning):
    """At least one voter approves no project; the maxmin optimum is then 0."""


@dataclass(frozen=True)
class Project:
    id: str
    cost: int


def _check_int(value, what: str) -> int:
    if isinstance(value, bool) or not isinstance(value, int):
        raise InstanceError(f"{what} must be an integer, got {value!r}")
    return value


@dataclass(frozen=True)
class Instance:
    """A PB instance: ordered projects, a budget and a list of approval votes.

    The project order is the input order and fixes every deterministic
    tie-break that refers to "project ordering".
    """

    projects: tuple[Project, ...]
    budget: int
    votes: tuple[frozenset[str], ...]

    def __post_init__(self):
        object.__setattr__(self, "projects", tuple(self.projects))
        object.__setattr__(self, "votes", tuple(frozenset(v) for v in self.votes))
        _check_int(self.budget, "budget")
        if self.budget < 1:
            raise InstanceError(f"budget must be >= 1, got {self.budget}")
        if not self.projects:
            raise InstanceError("instance needs at least one project")
        if not self.votes:
            raise InstanceError("instance needs at least one voter")
        seen = set()
        for p in self.projects:
            if not isinstance(p.id, str) or not p.id:
                raise InstanceError(f"project id must be a non-empty string, got {p.id!r}")
            if p.id in seen:
                raise InstanceError(f"duplicate project id {p.id!r}")
            seen.add(p.id)
            _check_int(p.cost, f"cost of {p.id!r}")
            if p.cost < 1:
                raise InstanceError(f"cost of {p.id!r} must be >= 1, got {p.cost}")
        for i, vote in enumerate(self.votes):
            unknown = vote - seen
            if unknown:
                raise InstanceError(f"vote {i} approves unknown projects {sorted(unknown)}")
        if any(not v for v in self.votes):
            warnings.warn(
                "instance contains an empty approval vote; the maxmin optimum is 0",
                EmptyVoteWarning,
                stacklevel=3,
            )

    @classmethod
    def build(cls, costs, budget: int, votes: Iterable[Iterable[str]]) -> "Instance":
        """Convenience constructor.

        ``costs`` is either a mapping ``id -> cost`` (insertion order kept) or a
        sequence of costs, in which case ids ``p1..pm`` are generated.
        """
        if isinstance(costs, dict):
            projects = [Project(pid, c) for pid, c in costs.items()]
        else:
            projects = [Project(f"p{k + 1}", c) for k, c in enumerate(costs)]
        return cls(tuple(projects), budget, tuple(frozenset(v) for v in votes))

    # -- derived views -------------------------------------------------

    @property
    def m(self) -> int:
        return len(self.projects)

    @property
    def n(self) -> int:
        return len(self.votes)

    @cached_property
    def ids(self) -> tuple[str, ...]:
        return tuple(p.id for p in self.projects)

    @cached_property
    def costs(self) -> tuple[int, ...]:
        return tuple(p.cost for p in self.projects)

    @cached_property
    def index(self) -> dict[str, int]:
        return {pid: k for k, pid in enumerate(self.ids)}

    @cached_property
    def cost_of(self) -> dict[str, int]:
        return {p.id: p.cost for p in self.projects}

    @cached_property
    def vote_masks(self) -> tuple[int, ...]:
        return tuple(self.mask_of(v) for v in self.votes)

    @cached_property
    def total_cost(self) -> int:
        return sum(self.costs)

    def mask_of(self, ids: Iterable[str]) -> int:
        mask = 0
        for pid in ids:
            try:
                mask |= 1 << self.index[pid]
            except KeyError:
                raise InstanceError(f"unknown project {pid!r}") from None
        return mask

    def ids_of(self, mask: int) -> tuple[str, ...]:
        return tuple(pid for k, pid in enumerate(self.ids) if mask >> k & 1)

    def mask_cost(self, mask: int) -> int:
        costs = self.costs
        total = 0
        k = 0
        while mask:
            if mask & 1:
                total += costs[k]
            mask >>= 1
            k += 1
        return total

    def cost(self, ids: Iterable[str]) -> int:
        return sum(self.cost_of[pid] for pid in ids)

    def outcome(self, ids: Iterable[str]) -> "Outcome":
        """Wrap ``ids`` as a feasible outcome of this instance."""
        selected = frozenset(ids)
        unknown = selected - self.index.keys()
        if unknown:
            raise InstanceError(f"outcome contains unknown projects {sorted(unknown)}")
        total = self.cost(selected)
        if total > self.budget:
            raise InstanceError(f"outcome costs {total} which exceeds the budget {self.budget}")
        return Outcome(selected, total)

    def outcome_from_mask(self, mask: int) -> "Outcome":
        return self.outcome(self.ids_of(mask))

    def with_budget(self, budget: int) -> "Instance":
        return Instance(self.projects, budget, self.votes)

    def with_costs(self, costs: dict[str, int]) -> "Instance":
        projects = tuple(Project(p.id, costs.get(p.id, p.cost)) for p in self.projects)
        return Instance(projects, self.budget, self.votes)

    def sort_key(self, mask: int) -> tuple[int, ...]:
        """Lexicographic key of a set under the project order."""
        return tuple(k for k in range(self.m) if mask >> k & 1)


@dataclass(frozen=True)
class Outcome:
    selected: frozenset[str]
    total_cost: int

    def __iter__(self):
        return iter(self.selected)

    def __len__(self):
        return len(self.selected)

    def __contains__(self, pid):
        return pid in self.selected

    def ordered(self, instance: Instance) -> list[str]:
        return [pid for pid in instance.ids if pid in self.selected]


@dataclass(frozen=True)
class SolveResult:
    """Result of an exact solve.

    When ``zero_optimum`` is set, every feasible set is optimal; ``all_optimal``
    is then left as ``None`` and ``winners`` holds every affordable project.
    """

    value: int
    witness: Outcome
    all_optimal: Optional[tuple[Outcome, ...]] = None
    winners: Optional[frozenset[str]] = None
    zero_optimum: bool = False
    truncated: bool = False
    method: str = ""
    stats: dict = field(default_factory=dict, compare=False)


@dataclass(frozen=True)
class DistinctProfile:
    distinct_votes: tuple[tuple[frozenset[str], int], ...]

    @property
    def n_distinct(self) -> int:
        return len(self.distinct_votes)

    @property
    def num_voters(self) -> int:
        return sum(mult for _, mult in self.distinct_votes)

    @property
    def votes(self) -> tuple[frozenset[str], ...]:
        return tuple(v for v, _ in self.distinct_votes)


# -- utilities and objectives -------------------------------------------


def _as_selected(outcome) -> frozenset[str]:
    if isinstance(outcome, Outcome):
        return outcome.selected
    return frozenset(outcome)


def utility(instance: Instance, voter_index: int, outcome) -> int:
    """Money spent on projects approved by voter ``voter_index``: c(S ∩ A_i)."""
    if not 0 <= voter_index < instance.n:
        raise IndexError(f"voter index {voter_index} out of range for {instance.n} voters")
    selected = _as_selected(outcome)
    return instance.cost(selected & instance.votes[voter_index])


def maxmin_value(instance: Instance, outcome) -> int:
    selected = _as_selected(outcome)
    return min(instance.cost(selected & vote) for vote in instance.votes)


def minimax_disutility_value(instance: Instance, outcome) -> int:
    selected = _as_selected(outcome)
    return max(instance.budget - instance.cost(selected & vote) for vote in instance.votes)


def mask_maxmin(instance: Instance, mask: int) -> int:
    return min(instance.mask_cost(mask & vm) for vm in instance.vote_masks)


def distinct_profile(instance: Instance) -> DistinctProfile:
    counts: dict[frozenset[str], int] = {}
    for vote in instance.votes:
        counts[vote] = counts.get(vote, 0) + 1
    return DistinctProfile(tuple(counts.items()))


def deduplicate(instance: Instance) -> Instance:
    """Same instance with every group of identical votes collapsed to one voter."""
    return Instance(instance.projects, instance.budget, distinct_profile(instance).votes)


def cost_gcd(instance: Instance) -> int:
    return math.gcd(instance.budget, *instance.costs)


def scale_down(instance: Instance) -> tuple[Instance, int]:
    g = cost_gcd(instance)
    if g == 1:
        return instance, 1
    projects = tuple(Project(p.id, p.cost // g) for p in instance.projects)
    return Instance(projects, instance.budget // g, instance.votes), g


def scalable_limit(instance: Instance) -> int:
    return max(instance.costs) // cost_gcd(instance)


def max_vote_size(instance: Instance) -> int:
    return max(len(v) for v in instance.votes)


def hcbp_check(instance: Instance) -> bool:
    """High Cardinality Budget Property: l_o exceeds the largest vote size."""
    from .relax import compute_lo_ho

    lo, _ = compute_lo_ho(instance)
    return lo > max_vote_size(instance)


def affordable_projects(instance: Instance) -> frozenset[str]:
    return frozenset(p.id for p in instance.projects if p.cost <= instance.budget)


def unanimous_projects(instance: Instance) -> frozenset[str]:
    return frozenset.intersection(*instance.votes)


def masks_to_outcomes(instance: Instance, masks: Sequence[int]) -> tuple[Outcome, ...]:
    ordered = sorted(masks, key=instance.sort_key)
    return tuple(instance.outcome_from_mask(mk) for mk in ordered)
