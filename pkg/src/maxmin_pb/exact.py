"""Exact maxmin solvers: enumeration, distinct-vote dynamic program, branch and bound.

All three report the same single witness: the lexicographically smallest
optimal set under the project order (compare sorted index tuples).
"""

from __future__ import annotations

import math
import os
from dataclasses import dataclass
from fractions import Fraction
from typing import Optional

import numpy as np

from .core import (
    Instance,
    ResourceLimitError,
    SolveResult,
    affordable_projects,
    distinct_profile,
    mask_maxmin,
    masks_to_outcomes,
)
from .relax import MAXMIN, MINIMAX, lp_solve, ordered_fill, ordered_relax, relax_order
from .simplex import LPInfeasibleError


def _env_int(name: str, default: Optional[int]) -> Optional[int]:
    raw = os.environ.get(name)
    if raw is None or raw == "":
        return default
    return int(raw)


DEFAULT_BRUTE_CAP = 22
DEFAULT_ENUM_CAP = 10_000
DEFAULT_DP_STATES = 2_000_000


def brute_cap() -> int:
    return _env_int("MAXMIN_PB_BRUTE_CAP", DEFAULT_BRUTE_CAP)


def enum_cap_default() -> int:
    return _env_int("MAXMIN_PB_ENUM_CAP", DEFAULT_ENUM_CAP)


def dp_state_cap() -> int:
    return _env_int("MAXMIN_PB_DP_STATES", DEFAULT_DP_STATES)


def bnb_node_cap() -> Optional[int]:
    return _env_int("MAXMIN_PB_BNB_NODES", None)


def _lex_first(instance: Instance, is_member) -> int:
    """Greedy reconstruction of the lexicographically smallest member set.

    ``is_member(prefix, k)`` answers whether some member set T satisfies
    ``T ∩ {0..k} == prefix``; ``is_member(prefix, None)`` whether ``prefix``
    itself is a member.
    """
    chosen = 0
    start = 0
    while not is_member(chosen, None):
        for k in range(start, instance.m):
            cand = chosen | (1 << k)
            if is_member(cand, k):
                chosen = cand
                start = k + 1
                break
        else:
            raise AssertionError("no member set extends the current prefix")
    return chosen


def _finish(instance, value, witness_mask, optimal_masks, winners_mask, want_all,
            enum_cap, truncated, method, stats) -> SolveResult:
    witness = instance.outcome_from_mask(witness_mask)
    if value == 0:
        return SolveResult(value, witness, None, affordable_projects(instance), True, False, method, stats)
    winners = frozenset(instance.ids_of(winners_mask)) if winners_mask is not None else None
    all_optimal = None
    if want_all:
        all_optimal = masks_to_outcomes(instance, optimal_masks[:enum_cap])
        truncated = truncated or len(optimal_masks) > enum_cap
    return SolveResult(value, witness, all_optimal, winners, False, truncated, method, stats)


# -- brute force ----------------------------------------------------------------


def subset_costs(instance: Instance) -> np.ndarray:
    """Cost of every subset, indexed by bitmask over the project order."""
    cost = np.zeros(1, dtype=np.int64)
    for c in instance.costs:
        cost = np.concatenate([cost, cost + c])
    return cost


def brute_force(
    instance: Instance,
    want_all: bool = False,
    *,
    objective: str = MAXMIN,
    cap: Optional[int] = None,
    enum_cap: Optional[int] = None,
) -> SolveResult:
    """Enumerate every subset of projects.

    With ``objective="minimax-disutility"`` the value is the smallest maximum
    disutility ``b - u_i(S)``; the optimal family is computed directly from
    disutilities rather than derived from the maxmin optimum.
    """
    cap = brute_cap() if cap is None else cap
    enum_cap = enum_cap_default() if enum_cap is None else enum_cap
    m = instance.m
    if m > cap:
        raise ResourceLimitError(f"brute force refuses {m} projects (cap {cap})")
    cost = subset_costs(instance)
    masks = np.arange(1 << m, dtype=np.int64)
    feasible = cost <= instance.budget
    votes = [instance.mask_of(v) for v in distinct_profile(instance).votes]
    if objective == MAXMIN:
        score = np.min(np.stack([cost[masks & vm] for vm in votes]), axis=0)
        best = int(score[feasible].max())
        zero = best == 0
    elif objective == MINIMAX:
        score = np.max(np.stack([instance.budget - cost[masks & vm] for vm in votes]), axis=0)
        best = int(score[feasible].min())
        zero = best == instance.budget
    else:
        raise ValueError(f"unknown objective {objective!r}")
    optimal = masks[feasible & (score == best)]
    opt_set = set(optimal.tolist()) if len(optimal) <= 1 << 16 else None

    def is_member(prefix, k):
        if k is None:
            return prefix in opt_set if opt_set is not None else bool(np.any(optimal == prefix))
        low = (1 << (k + 1)) - 1
        return bool(np.any((optimal & low) == prefix))

    witness = instance.outcome_from_mask(_lex_first(instance, is_member))
    stats = {"subsets": 1 << m, "optimal_sets": int(len(optimal))}
    if zero:
        return SolveResult(best, witness, None, affordable_projects(instance), True, False, "brute", stats)
    winners = frozenset(instance.ids_of(int(np.bitwise_or.reduce(optimal))))
    all_optimal = None
    truncated = False
    if want_all:
        kept = optimal[:enum_cap].tolist()
        truncated = len(optimal) > enum_cap
        all_optimal = masks_to_outcomes(instance, kept)
    return SolveResult(best, witness, all_optimal, winners, False, truncated, "brute", stats)


# -- dynamic program over distinct votes ----------------------------------------


@dataclass(frozen=True)
class DpState:
    utility_vector: tuple[int, ...]
    min_cost: int


def _dp_layers(instance, votes, cap_at, store, max_states, prune):
    """Suffix layers: layer[s] maps reachable utility vectors over projects s..m-1.

    Utilities are clipped at ``cap_at`` when given. With ``prune`` only the
    cheapest cost per vector is kept; otherwise every (vector, cost) pair is.
    """
    m = instance.m
    nh = len(votes)
    b = instance.budget
    inc = [tuple(1 if pid in v else 0 for v in votes) for pid in instance.ids]
    layer = {(0,) * nh: 0} if prune else {((0,) * nh, 0)}
    layers = [None] * (m + 1)
    if store:
        layers[m] = layer
    total = 1
    for s in range(m - 1, -1, -1):
        c = instance.costs[s]
        row = inc[s]
        if prune:
            new = dict(layer)
            for vec, cost in layer.items():
                nc = cost + c
                if nc > b:
                    continue
                if cap_at is None:
                    nv = tuple(u + c * a for u, a in zip(vec, row))
                else:
                    nv = tuple(min(u + c * a, cap_at) for u, a in zip(vec, row))
                old = new.get(nv)
                if old is None or nc < old:
                    new[nv] = nc
        else:
            new = set(layer)
            for vec, cost in layer:
                nc = cost + c
                if nc <= b:
                    new.add((tuple(u + c * a for u, a in zip(vec, row)), nc))
        layer = new
        total += len(layer) if store else 0
        if len(layer) > max_states or total > max_states:
            raise ResourceLimitError(f"dynamic program exceeded {max_states} states")
        if store:
            layers[s] = layer
    return layer, layers


def dp_frontier(instance: Instance, *, max_states: Optional[int] = None, prune: bool = True) -> list[DpState]:
    """Reachable (utility vector over distinct votes, cost) states after all projects."""
    max_states = dp_state_cap() if max_states is None else max_states
    final, _ = _dp_layers(instance, distinct_profile(instance).votes, None, False, max_states, prune)
    items = final.items() if prune else final
    return [DpState(vec, cost) for vec, cost in sorted(items)]


def dp_solve(instance: Instance, *, max_states: Optional[int] = None, prune: bool = True) -> SolveResult:
    """Pseudo-polynomial dynamic program over the distinct approval votes.

    Reachable states are kept sparsely, one dictionary per suffix of the
    project order. A second pass with utilities clipped at the optimum stores
    every suffix layer and rebuilds the lexicographically smallest witness.
    """
    max_states = dp_state_cap() if max_states is None else max_states
    votes = distinct_profile(instance).votes
    final, _ = _dp_layers(instance, votes, None, False, max_states, prune)
    items = final.items() if prune else final
    value = max(min(vec) for vec, _ in items)
    n_states = len(final)

    _, layers = _dp_layers(instance, votes, value, True, max_states, True)
    vote_masks = [instance.mask_of(v) for v in votes]
    b = instance.budget

    def is_member(prefix, k):
        base_cost = instance.mask_cost(prefix)
        if base_cost > b:
            return False
        base = [instance.mask_cost(prefix & vm) for vm in vote_masks]
        if k is None:
            return min(base) >= value
        rem = b - base_cost
        need = [value - u for u in base]
        for vec, cost in layers[k + 1].items():
            if cost <= rem and all(w >= r for w, r in zip(vec, need)):
                return True
        return False

    witness = _lex_first(instance, is_member)
    stats = {"final_states": n_states, "stored_states": sum(len(layer) for layer in layers), "n_distinct": len(votes)}
    return _finish(instance, value, witness, [], None, False, 0, False, "dp", stats)


# -- branch and bound ---------------------------------------------------------------


@dataclass(frozen=True)
class BnbNode:
    fixed_in: frozenset[str]
    fixed_out: frozenset[str]
    lp_bound: Fraction


class _BranchAndBound:
    def __init__(self, instance: Instance, max_nodes: Optional[int], trace: Optional[list]):
        self.inst = instance
        self.max_nodes = max_nodes
        self.trace = trace
        self.nodes = 0
        self.lps = 0
        self.full = (1 << instance.m) - 1
        self.votes = [instance.mask_of(v) for v in distinct_profile(instance).votes]

    def _tick(self):
        self.nodes += 1
        if self.max_nodes is not None and self.nodes > self.max_nodes:
            raise ResourceLimitError(f"branch and bound exceeded {self.max_nodes} nodes")

    def _cheap_bound(self, fin, fout):
        free = self.full & ~fin & ~fout
        cost = self.inst.mask_cost
        return min(cost(vm & (fin | free)) for vm in self.votes)

    def _lp(self, fin, fout, record=False):
        inst = self.inst
        self.lps += 1
        try:
            sol = lp_solve(inst, inst.ids_of(fin), inst.ids_of(fout))
        except LPInfeasibleError:
            return None
        if record and self.trace is not None:
            self.trace.append(BnbNode(frozenset(inst.ids_of(fin)), frozenset(inst.ids_of(fout)), sol.q_star))
        return sol

    def maximize(self) -> tuple[int, int]:
        inst = self.inst
        start, _ = ordered_relax(inst)
        best_mask = inst.mask_of(start.selected)
        best = mask_maxmin(inst, best_mask)
        stack = [(0, 0)]
        while stack:
            fin, fout = stack.pop()
            self._tick()
            if inst.mask_cost(fin) > inst.budget:
                continue
            if self._cheap_bound(fin, fout) <= best:
                continue
            sol = self._lp(fin, fout, record=True)
            if sol is None or math.floor(sol.q_star) <= best:
                continue
            filled = ordered_fill(inst, relax_order(inst, sol)).selected
            cand = inst.mask_of(filled.selected)
            val = mask_maxmin(inst, cand)
            if val > best:
                best, best_mask = val, cand
            frac = [
                (abs(sol.x_star[pid] - Fraction(1, 2)), pid)
                for k, pid in enumerate(inst.ids)
                if not (fin | fout) >> k & 1 and 0 < sol.x_star[pid] < 1
            ]
            if not frac:
                support = inst.mask_of(pid for pid in inst.ids if sol.x_star[pid] == 1)
                val = mask_maxmin(inst, support)
                if val > best:
                    best, best_mask = val, support
                continue
            _, pid = min(frac)
            bit = 1 << inst.index[pid]
            stack.append((fin, fout | bit))
            stack.append((fin | bit, fout))
        return best, best_mask

    def _prunable(self, fin, fout, target):
        if self.inst.mask_cost(fin) > self.inst.budget:
            return True
        if self._cheap_bound(fin, fout) < target:
            return True
        sol = self._lp(fin, fout)
        return sol is None or sol.q_star < target

    def find_first(self, target: int, forced_in: int = 0) -> Optional[int]:
        """A set of value >= target containing ``forced_in``, or None.

        Children are visited in increasing order of their next element, so with
        nothing forced the result is the lexicographically smallest such set.
        """
        inst = self.inst
        m = inst.m

        def visit(k, chosen, fout):
            self._tick()
            fin = chosen | forced_in
            if self._prunable(fin, fout, target):
                return None
            if mask_maxmin(inst, fin) >= target:
                return fin
            skipped = 0
            for j in range(k, m):
                bit = 1 << j
                if forced_in & bit or fout & bit:
                    continue
                if inst.mask_cost(fin | bit) <= inst.budget:
                    found = visit(j + 1, chosen | bit, fout | skipped)
                    if found is not None:
                        return found
                skipped |= bit
            return None

        return visit(0, 0, 0)

    def enumerate_all(self, target: int, limit: int) -> tuple[list[int], bool]:
        """Every feasible set of value >= target, up to ``limit`` of them."""
        inst = self.inst
        m = inst.m
        found: list[int] = []

        def walk(k, fin, fout):
            if len(found) > limit:
                return
            self._tick()
            if self._prunable(fin, fout, target):
                return
            if k == m:
                found.append(fin)
                return
            bit = 1 << k
            if inst.mask_cost(fin | bit) <= inst.budget:
                walk(k + 1, fin | bit, fout)
            walk(k + 1, fin, fout | bit)

        walk(0, 0, 0)
        truncated = len(found) > limit
        return found[:limit], truncated


def bnb_solve(
    instance: Instance,
    want_all: bool = False,
    *,
    max_nodes: Optional[int] = None,
    enum_cap: Optional[int] = None,
    trace: Optional[list] = None,
) -> SolveResult:
    """Branch and bound over the 0/1 program with exact LP-relaxation bounds.

    The incumbent starts from Ordered-Relax; nodes branch on the most
    fractional project (ties by id). Pass a list as ``trace`` to collect a
    :class:`BnbNode` for every LP solved during optimisation.
    """
    max_nodes = bnb_node_cap() if max_nodes is None else max_nodes
    enum_cap = enum_cap_default() if enum_cap is None else enum_cap
    bb = _BranchAndBound(instance, max_nodes, trace)
    value, _ = bb.maximize()
    witness = bb.find_first(value)
    stats = {"nodes": bb.nodes, "lps": bb.lps}
    if value == 0:
        return _finish(instance, 0, witness, [], None, want_all, enum_cap, False, "bnb", stats)
    masks, truncated = ([], False)
    winners = None
    if want_all:
        masks, truncated = bb.enumerate_all(value, enum_cap)
        winners = _bnb_winners(instance, bb, value, masks)
    stats = {"nodes": bb.nodes, "lps": bb.lps}
    return _finish(instance, value, witness, masks, winners, want_all, enum_cap, truncated, "bnb", stats)


def _bnb_winners(instance, bb, value, known_masks) -> int:
    mask = 0
    for mk in known_masks:
        mask |= mk
    for k in range(instance.m):
        bit = 1 << k
        if mask & bit:
            continue
        found = bb.find_first(value, forced_in=bit)
        if found is not None:
            mask |= found
    return mask


# -- dispatch ---------------------------------------------------------------------


def solve(instance: Instance, method: str = "auto", want_all: bool = False) -> SolveResult:
    if method == "auto":
        method = "brute" if instance.m <= min(brute_cap(), 16) else "bnb"
    if method == "brute":
        return brute_force(instance, want_all)
    if method == "dp":
        if want_all:
            raise ValueError("the dynamic program reports a single optimal set")
        return dp_solve(instance)
    if method == "bnb":
        return bnb_solve(instance, want_all)
    raise ValueError(f"unknown exact method {method!r}")


def winners(instance: Instance, solver: str = "brute") -> frozenset[str]:
    """Projects in at least one optimal set; every affordable project when the optimum is 0."""
    if solver not in ("brute", "bnb"):
        raise ValueError(f"winners needs solver 'brute' or 'bnb', got {solver!r}")
    if solver == "brute":
        return brute_force(instance, want_all=False).winners
    bb = _BranchAndBound(instance, bnb_node_cap(), None)
    value, _ = bb.maximize()
    if value == 0:
        return affordable_projects(instance)
    return frozenset(instance.ids_of(_bnb_winners(instance, bb, value, [])))
