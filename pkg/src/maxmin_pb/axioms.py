"""Executable axiom checks for PB rules.

A rule is any callable ``Instance -> RuleOutput``. Checks need the rule's full
output family, so they are limited to instances small enough for exhaustive
solving (``AXIOM_CAP`` projects).

Every ``violated`` report carries a witness dict with the check name and its
parameters; :func:`recheck` replays it through a rule.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from typing import Callable, Iterable, Optional, Sequence

import numpy as np

from .core import (
    Instance,
    InstanceError,
    Project,
    ResourceLimitError,
    affordable_projects,
    deduplicate,
    distinct_profile,
    unanimous_projects,
)
from .exact import _lex_first, bnb_solve, brute_force, subset_costs
from .relax import ordered_fill

HOLDS = "holds"
VIOLATED = "violated"
NOT_APPLICABLE = "not-applicable"

AXIOM_CAP = 20
MERGE_CASE_LIMIT = 500

AXIOMS = (
    "splitting-monotonicity",
    "merging-monotonicity",
    "discount-monotonicity",
    "limit-monotonicity",
    "strong-exhaustiveness",
    "weak-exhaustiveness",
    "narrow-top",
    "clone-independence",
    "maximal-coverage",
)


@dataclass(frozen=True)
class RuleOutput:
    """Full output of a rule on one instance.

    With ``zero_optimum_flag`` set every feasible set is optimal, so
    ``optimal_sets`` is left empty and membership is decided by feasibility.
    """

    optimal_sets: tuple[frozenset[str], ...]
    winners: frozenset[str]
    value: int
    zero_optimum_flag: bool = False

    def contains(self, instance: Instance, selected) -> bool:
        selected = frozenset(selected)
        if self.zero_optimum_flag:
            return instance.cost(selected) <= instance.budget
        return selected in self._members

    @property
    def _members(self) -> frozenset:
        return frozenset(self.optimal_sets)

    def summary(self, instance: Instance) -> dict:
        order = instance.index
        return {
            "value": self.value,
            "zero_optimum": self.zero_optimum_flag,
            "winners": sorted(self.winners, key=order.__getitem__),
            "optimal_sets": None
            if self.zero_optimum_flag
            else [sorted(s, key=order.__getitem__) for s in self.optimal_sets],
        }


@dataclass(frozen=True)
class AxiomReport:
    axiom: str
    verdict: str
    witness: Optional[dict] = None
    cases: int = 0
    note: str = ""

    def to_dict(self) -> dict:
        out = {"axiom": self.axiom, "verdict": self.verdict, "cases": self.cases}
        if self.note:
            out["note"] = self.note
        if self.witness is not None:
            out["witness"] = self.witness
        return out


Rule = Callable[[Instance], RuleOutput]


# -- rules ------------------------------------------------------------------------


def _check_size(instance: Instance):
    if instance.m > AXIOM_CAP:
        raise ResourceLimitError(f"axiom checks need at most {AXIOM_CAP} projects, got {instance.m}")


def _from_solve(result) -> RuleOutput:
    if result.truncated:
        raise ResourceLimitError("optimal-set enumeration was truncated; axiom check needs the full family")
    if result.zero_optimum:
        return RuleOutput((), result.winners, 0, True)
    return RuleOutput(tuple(o.selected for o in result.all_optimal), result.winners, result.value)


def mpb_brute(instance: Instance) -> RuleOutput:
    _check_size(instance)
    return _from_solve(brute_force(instance, want_all=True))


def mpb_bnb(instance: Instance) -> RuleOutput:
    _check_size(instance)
    return _from_solve(bnb_solve(instance, want_all=True))


def utilitarian(instance: Instance) -> RuleOutput:
    """Maximise total utility; the lexicographically smallest maximiser wins alone."""
    _check_size(instance)
    m = instance.m
    cost = subset_costs(instance)
    masks = np.arange(1 << m, dtype=np.int64)
    total = np.zeros(1 << m, dtype=np.int64)
    for vote, mult in distinct_profile(instance).distinct_votes:
        total += mult * cost[masks & instance.mask_of(vote)]
    total[cost > instance.budget] = -1
    best = int(total.max())
    optimal = masks[total == best]
    opt_set = set(optimal.tolist())

    def is_member(prefix, k):
        if k is None:
            return prefix in opt_set
        low = (1 << (k + 1)) - 1
        return bool(np.any((optimal & low) == prefix))

    chosen = frozenset(instance.ids_of(_lex_first(instance, is_member)))
    return RuleOutput((chosen,), chosen, best)


RULES: dict[str, Rule] = {
    "mpb-brute": mpb_brute,
    "mpb-bnb": mpb_bnb,
    "utilitarian-baseline": utilitarian,
}


def get_rule(rule) -> Rule:
    if rule is None:
        return mpb_brute
    if callable(rule):
        return rule
    aliases = {"mpb": "mpb-brute", "utilitarian": "utilitarian-baseline"}
    name = aliases.get(rule, rule)
    if name not in RULES:
        raise ValueError(f"unknown rule {rule!r}; choose from {sorted(RULES)}")
    return RULES[name]


# -- transformations ------------------------------------------------------------------


def _fresh_id(taken: set, base: str) -> str:
    pid = base
    k = 1
    while pid in taken:
        k += 1
        pid = f"{base}~{k}"
    return pid


def split_project(instance: Instance, p: str, parts: Sequence[int]) -> tuple[Instance, tuple[str, ...]]:
    """Replace ``p`` by fresh projects costing ``parts``; voters of ``p`` approve all of them."""
    if p not in instance.index:
        raise InstanceError(f"unknown project {p!r}")
    parts = list(parts)
    if not parts or any(isinstance(c, bool) or not isinstance(c, int) or c < 1 for c in parts):
        raise ValueError("parts must be positive integers")
    if sum(parts) != instance.cost_of[p]:
        raise ValueError(f"parts sum to {sum(parts)}, but c({p}) = {instance.cost_of[p]}")
    if len(parts) == 1:
        return instance, (p,)
    taken = set(instance.ids)
    new_ids = []
    for k in range(len(parts)):
        pid = _fresh_id(taken, f"{p}#{k + 1}")
        taken.add(pid)
        new_ids.append(pid)
    projects = []
    for proj in instance.projects:
        if proj.id == p:
            projects.extend(Project(pid, c) for pid, c in zip(new_ids, parts))
        else:
            projects.append(proj)
    new = frozenset(new_ids)
    votes = tuple((v - {p}) | new if p in v else v for v in instance.votes)
    return Instance(tuple(projects), instance.budget, votes), tuple(new_ids)


def merge_projects(instance: Instance, group: Iterable[str]) -> tuple[Instance, str]:
    """Replace ``group`` by one project of the same total cost, placed where its first member was."""
    group = frozenset(group)
    if not group:
        raise ValueError("cannot merge an empty group")
    if len(group) == 1:
        return instance, next(iter(group))
    ordered = [pid for pid in instance.ids if pid in group]
    merged = _fresh_id(set(instance.ids), "+".join(ordered))
    projects = []
    for proj in instance.projects:
        if proj.id == ordered[0]:
            projects.append(Project(merged, instance.cost(group)))
        elif proj.id not in group:
            projects.append(proj)
    votes = tuple((v - group) | {merged} if group <= v else v for v in instance.votes)
    return Instance(tuple(projects), instance.budget, votes), merged


def discount_project(instance: Instance, p: str) -> Instance:
    return instance.with_costs({p: instance.cost_of[p] - 1})


# -- single checks ------------------------------------------------------------------


def _report(axiom, verdict, witness=None, note=""):
    return AxiomReport(axiom, verdict, witness, 1, note)


def check_splitting_monotonicity(instance, p, parts, rule=None, base=None) -> AxiomReport:
    rule = get_rule(rule)
    base = base or rule(instance)
    axiom = "splitting-monotonicity"
    if sum(parts) != instance.cost_of[p]:
        raise ValueError(f"parts sum to {sum(parts)}, but c({p}) = {instance.cost_of[p]}")
    if p not in base.winners:
        return _report(axiom, NOT_APPLICABLE, note=f"{p} is not a winner")
    split, new_ids = split_project(instance, p, parts)
    after = rule(split)
    if after.winners & set(new_ids):
        return _report(axiom, HOLDS)
    return _report(axiom, VIOLATED, {
        "check": "splitting",
        "params": {"p": p, "parts": list(parts)},
        "transformation": f"split {p} into {list(new_ids)} costing {list(parts)}",
        "before": base.summary(instance),
        "after": after.summary(split),
    })


def check_merging_monotonicity(instance, selected, group, rule=None, base=None) -> AxiomReport:
    rule = get_rule(rule)
    base = base or rule(instance)
    axiom = "merging-monotonicity"
    selected = frozenset(selected)
    group = frozenset(group)
    if not base.contains(instance, selected):
        return _report(axiom, NOT_APPLICABLE, note="S is not an optimal set")
    if not group or not group <= selected:
        return _report(axiom, NOT_APPLICABLE, note="P' must be a non-empty subset of S")
    if any(v & group and not group <= v for v in instance.votes):
        return _report(axiom, NOT_APPLICABLE, note="some voter approves only part of P'")
    merged_inst, merged = merge_projects(instance, group)
    after = rule(merged_inst)
    if merged in after.winners:
        return _report(axiom, HOLDS)
    order = instance.index.__getitem__
    return _report(axiom, VIOLATED, {
        "check": "merging",
        "params": {"S": sorted(selected, key=order), "group": sorted(group, key=order)},
        "transformation": f"merge {sorted(group, key=order)} into {merged}",
        "before": base.summary(instance),
        "after": after.summary(merged_inst),
    })


def check_discount_monotonicity(instance, p, rule=None, base=None) -> AxiomReport:
    rule = get_rule(rule)
    base = base or rule(instance)
    axiom = "discount-monotonicity"
    if p not in base.winners:
        return _report(axiom, NOT_APPLICABLE, note=f"{p} is not a winner")
    if instance.cost_of[p] < 2:
        return _report(axiom, NOT_APPLICABLE, note=f"c({p}) = 1 cannot be discounted")
    cheaper = discount_project(instance, p)
    after = rule(cheaper)
    if p in after.winners:
        return _report(axiom, HOLDS)
    return _report(axiom, VIOLATED, {
        "check": "discount",
        "params": {"p": p},
        "transformation": f"reduce c({p}) from {instance.cost_of[p]} to {instance.cost_of[p] - 1}",
        "before": base.summary(instance),
        "after": after.summary(cheaper),
    })


def check_limit_monotonicity(instance, rule=None, base=None) -> AxiomReport:
    rule = get_rule(rule)
    axiom = "limit-monotonicity"
    if any(c == instance.budget + 1 for c in instance.costs):
        return _report(axiom, NOT_APPLICABLE, note="a project costs exactly b + 1")
    base = base or rule(instance)
    raised = instance.with_budget(instance.budget + 1)
    after = rule(raised)
    lost = base.winners - after.winners
    if not lost:
        return _report(axiom, HOLDS)
    return _report(axiom, VIOLATED, {
        "check": "limit",
        "params": {},
        "transformation": f"raise budget from {instance.budget} to {instance.budget + 1}",
        "lost_winners": sorted(lost, key=instance.index.__getitem__),
        "before": base.summary(instance),
        "after": after.summary(raised),
    })


def check_exhaustiveness(instance, strong: bool, rule=None, base=None) -> AxiomReport:
    rule = get_rule(rule)
    base = base or rule(instance)
    axiom = "strong-exhaustiveness" if strong else "weak-exhaustiveness"
    order = instance.index.__getitem__
    b = instance.budget
    if base.zero_optimum_flag:
        # every feasible set is optimal, so extensions stay optimal; only the empty set matters for strong
        if not strong:
            return _report(axiom, HOLDS, note="zero optimum: all feasible sets are optimal")
        affordable = sorted(affordable_projects(instance), key=lambda pid: (instance.cost_of[pid], order(pid)))
        if not affordable:
            return _report(axiom, HOLDS, note="zero optimum: no project is affordable")
        return _report(axiom, VIOLATED, {
            "check": "exhaustiveness",
            "params": {"strong": True},
            "S": [],
            "p": affordable[0],
            "transformation": "none (zero optimum: the empty set is optimal but not maximal)",
            "before": base.summary(instance),
        }, note="zero optimum")
    for selected in base.optimal_sets:
        spent = instance.cost(selected)
        for pid in instance.ids:
            if pid in selected or spent + instance.cost_of[pid] > b:
                continue
            if strong or not base.contains(instance, selected | {pid}):
                return _report(axiom, VIOLATED, {
                    "check": "exhaustiveness",
                    "params": {"strong": strong},
                    "S": sorted(selected, key=order),
                    "p": pid,
                    "transformation": f"add {pid} to an optimal set",
                    "before": base.summary(instance),
                })
    return _report(axiom, HOLDS)


def check_narrow_top(instance, rule=None, base=None) -> AxiomReport:
    rule = get_rule(rule)
    axiom = "narrow-top"
    unanimous = unanimous_projects(instance)
    if not unanimous:
        return _report(axiom, NOT_APPLICABLE, note="no unanimously approved project")
    base = base or rule(instance)
    missing = unanimous - base.winners
    if not missing:
        return _report(axiom, HOLDS)
    return _report(axiom, VIOLATED, {
        "check": "narrow-top",
        "params": {},
        "unanimous_non_winners": sorted(missing, key=instance.index.__getitem__),
        "before": base.summary(instance),
    })


def check_clone_independence(instance, rule=None, base=None) -> AxiomReport:
    rule = get_rule(rule)
    axiom = "clone-independence"
    if distinct_profile(instance).n_distinct == instance.n:
        return _report(axiom, NOT_APPLICABLE, note="all votes are distinct")
    base = base or rule(instance)
    dedup = deduplicate(instance)
    after = rule(dedup)
    if base.zero_optimum_flag or after.zero_optimum_flag:
        same = (
            base.zero_optimum_flag == after.zero_optimum_flag
            and base.value == after.value
            and base.winners == after.winners
        )
        note = "zero optimum: compared value and winners"
    else:
        same = base.value == after.value and set(base.optimal_sets) == set(after.optimal_sets)
        note = ""
    if same:
        return _report(axiom, HOLDS, note=note)
    return _report(axiom, VIOLATED, {
        "check": "clone",
        "params": {},
        "transformation": "collapse identical votes to one voter each",
        "before": base.summary(instance),
        "after": after.summary(dedup),
    }, note=note)


def check_maximal_coverage(instance, rule=None, base=None) -> AxiomReport:
    """Redundant projects may only be funded if no uncovered voter could be served instead.

    For each optimal S and project p whose supporters all stay covered by
    ``S \\ {p}``, every voter approving no winner must find each of their
    projects unaffordable within ``b - c(S \\ {p})``.
    """
    rule = get_rule(rule)
    base = base or rule(instance)
    axiom = "maximal-coverage"
    b = instance.budget
    uncovered = [i for i, v in enumerate(instance.votes) if not v & base.winners]
    if base.zero_optimum_flag:
        # winners are all affordable projects, so an uncovered voter approves only projects above b
        for i in uncovered:
            if any(instance.cost_of[a] <= b for a in instance.votes[i]):
                raise ValueError("zero-optimum output must list every affordable project as a winner")
        return _report(axiom, HOLDS, note="zero optimum: uncovered voters approve only unaffordable projects")
    if not uncovered:
        return _report(axiom, HOLDS, note="every voter approves a winner")
    order = instance.index.__getitem__
    for selected in base.optimal_sets:
        for p in sorted(selected, key=order):
            rest = selected - {p}
            supporters = [j for j, v in enumerate(instance.votes) if p in v]
            if not all(instance.votes[j] & rest for j in supporters):
                continue
            room = b - instance.cost(rest)
            for i in uncovered:
                for a in sorted(instance.votes[i], key=order):
                    if instance.cost_of[a] <= room:
                        return _report(axiom, VIOLATED, {
                            "check": "maximal-coverage",
                            "params": {},
                            "S": sorted(selected, key=order),
                            "p": p,
                            "voter": i,
                            "a": a,
                            "transformation": f"c({a}) = {instance.cost_of[a]} <= b - c(S - {p}) = {room}",
                            "before": base.summary(instance),
                        })
    return _report(axiom, HOLDS)


# -- audit ---------------------------------------------------------------------------


def binary_splits(cost: int) -> list[list[int]]:
    if cost == 1:
        return [[1]]
    halves = [cost // 2, cost - cost // 2]
    out = [[1, cost - 1]]
    if halves != out[0]:
        out.append(halves)
    return out


def _aggregate(axiom: str, reports: list[AxiomReport]) -> AxiomReport:
    applicable = [r for r in reports if r.verdict != NOT_APPLICABLE]
    for r in applicable:
        if r.verdict == VIOLATED:
            return AxiomReport(axiom, VIOLATED, r.witness, len(applicable), r.note)
    if applicable:
        notes = sorted({r.note for r in applicable if r.note})
        return AxiomReport(axiom, HOLDS, None, len(applicable), "; ".join(notes))
    notes = sorted({r.note for r in reports if r.note})
    return AxiomReport(axiom, NOT_APPLICABLE, None, 0, "; ".join(notes) or "no applicable case")


def _merge_cases(instance: Instance, base: RuleOutput):
    if base.zero_optimum_flag:
        # E is the whole family here; use one representative maximal-ish set
        candidates = [ordered_fill(instance, instance.ids).selected.selected]
    else:
        candidates = list(base.optimal_sets)
    count = 0
    for selected in candidates:
        ordered = [pid for pid in instance.ids if pid in selected]
        for size in range(2, len(ordered) + 1):
            for group in itertools.combinations(ordered, size):
                g = frozenset(group)
                if any(v & g and not g <= v for v in instance.votes):
                    continue
                yield selected, g
                count += 1
                if count >= MERGE_CASE_LIMIT:
                    return


def audit(instance: Instance, rule="mpb-brute", axioms: Optional[Iterable[str]] = None,
          splits: Optional[dict] = None) -> list[AxiomReport]:
    """Run every applicable axiom check; reports come back in :data:`AXIOMS` order.

    ``splits`` optionally maps project ids to extra caller-chosen splits that
    are tried before the automatic binary battery.
    """
    rule = get_rule(rule)
    _check_size(instance)
    wanted = list(AXIOMS) if axioms is None else [a for a in AXIOMS if a in set(axioms)]
    unknown = set(axioms or ()) - set(AXIOMS)
    if unknown:
        raise ValueError(f"unknown axioms {sorted(unknown)}")
    base = rule(instance)
    winners = [pid for pid in instance.ids if pid in base.winners]
    out = []
    for axiom in wanted:
        if axiom == "splitting-monotonicity":
            cases = []
            for p in winners:
                extra = (splits or {}).get(p, [])
                for parts in list(extra) + binary_splits(instance.cost_of[p]):
                    cases.append(check_splitting_monotonicity(instance, p, parts, rule, base))
            out.append(_aggregate(axiom, cases))
        elif axiom == "merging-monotonicity":
            cases = [check_merging_monotonicity(instance, s, g, rule, base) for s, g in _merge_cases(instance, base)]
            out.append(_aggregate(axiom, cases))
        elif axiom == "discount-monotonicity":
            cases = [check_discount_monotonicity(instance, p, rule, base) for p in winners]
            out.append(_aggregate(axiom, cases))
        elif axiom == "limit-monotonicity":
            out.append(check_limit_monotonicity(instance, rule, base))
        elif axiom == "strong-exhaustiveness":
            out.append(check_exhaustiveness(instance, True, rule, base))
        elif axiom == "weak-exhaustiveness":
            out.append(check_exhaustiveness(instance, False, rule, base))
        elif axiom == "narrow-top":
            out.append(check_narrow_top(instance, rule, base))
        elif axiom == "clone-independence":
            out.append(check_clone_independence(instance, rule, base))
        elif axiom == "maximal-coverage":
            out.append(check_maximal_coverage(instance, rule, base))
    return out


def recheck(report: AxiomReport, instance: Instance, rule=None) -> str:
    """Replay a report's witness through ``rule`` and return the fresh verdict."""
    if report.witness is None:
        raise ValueError("report has no witness to replay")
    w = report.witness
    params = w.get("params", {})
    kind = w["check"]
    if kind == "splitting":
        fresh = check_splitting_monotonicity(instance, params["p"], params["parts"], rule)
    elif kind == "merging":
        fresh = check_merging_monotonicity(instance, params["S"], params["group"], rule)
    elif kind == "discount":
        fresh = check_discount_monotonicity(instance, params["p"], rule)
    elif kind == "limit":
        fresh = check_limit_monotonicity(instance, rule)
    elif kind == "exhaustiveness":
        fresh = check_exhaustiveness(instance, params["strong"], rule)
        if fresh.verdict == VIOLATED:
            # confirm the concrete (S, p) pair directly as well
            rule_fn = get_rule(rule)
            out = rule_fn(instance)
            S = frozenset(w["S"])
            fits = instance.cost(S) + instance.cost_of[w["p"]] <= instance.budget
            ok = out.contains(instance, S) and w["p"] not in S and fits
            if not params["strong"]:
                ok = ok and not out.contains(instance, S | {w["p"]})
            return VIOLATED if ok else HOLDS
    elif kind == "narrow-top":
        fresh = check_narrow_top(instance, rule)
    elif kind == "clone":
        fresh = check_clone_independence(instance, rule)
    elif kind == "maximal-coverage":
        fresh = check_maximal_coverage(instance, rule)
    else:
        raise ValueError(f"unknown witness kind {kind!r}")
    return fresh.verdict
