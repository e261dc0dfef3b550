"""LP relaxation of the maxmin ILP, Ordered-Relax rounding and its guarantees.

The relaxed program is solved in exact rational arithmetic. Each project
contributes a variable ``y_p = c(p) * x_p`` in ``[0, c(p)]`` so the tableau
only carries unit coefficients; ``x_p`` is recovered as ``y_p / c(p)``.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from typing import Iterable, Optional, Sequence

from .core import (
    Instance,
    Outcome,
    distinct_profile,
    hcbp_check,
    minimax_disutility_value,
)
from .simplex import LPInfeasibleError, dual_bound, solve_lp

MAXMIN = "maxmin"
MINIMAX = "minimax-disutility"


@dataclass(frozen=True)
class LpSolution:
    """Optimum of the relaxed program.

    For the maxmin objective ``q_star`` is the relaxed minimum utility; for the
    minimax objective it is the relaxed maximum disutility. ``duals`` holds one
    multiplier per distinct vote followed by the budget row; together with the
    fixings they re-certify optimality via :func:`verify_lp_solution`.
    """

    q_star: Fraction
    x_star: dict[str, Fraction]
    objective: str
    fixed_in: frozenset[str]
    fixed_out: frozenset[str]
    duals: tuple[Fraction, ...]
    basis: tuple[int, ...]

    def weight(self, instance: Instance, pid: str) -> Fraction:
        """c(p) * x*_p, the Ordered-Relax ranking score."""
        return instance.cost_of[pid] * self.x_star[pid]


@dataclass(frozen=True)
class OrderedFillOutcome:
    selected: Outcome
    order_used: tuple[str, ...]
    stop_project: Optional[str]


@dataclass(frozen=True)
class BoundCertificate:
    alg_value: int
    opt_value: int
    worst_voter: int
    eta: Optional[Fraction]
    bound_rhs: Optional[Fraction]
    holds: bool
    eta_undefined: bool = False


@dataclass(frozen=True)
class MinimaxBoundReport:
    applicable: bool
    alg_disutility: Optional[int] = None
    opt_disutility: Optional[int] = None
    h_o: Optional[int] = None
    bound: Optional[Fraction] = None
    holds: Optional[bool] = None
    outcome: Optional[Outcome] = None


def _build_lp(instance: Instance, fixed_in: frozenset, fixed_out: frozenset, objective: str):
    if fixed_in & fixed_out:
        raise ValueError("fixed_in and fixed_out overlap")
    unknown = (fixed_in | fixed_out) - instance.index.keys()
    if unknown:
        raise ValueError(f"unknown projects in fixings: {sorted(unknown)}")
    spent = instance.cost(fixed_in)
    if spent > instance.budget:
        raise LPInfeasibleError(f"fixed projects cost {spent} > budget {instance.budget}")
    free = sorted(set(instance.ids) - fixed_in - fixed_out)
    votes = distinct_profile(instance).votes
    A, b = [], []
    for vote in votes:
        base = instance.cost(vote & fixed_in)
        if objective == MAXMIN:
            # q - sum_{p in A_t} y_p <= c(A_t ∩ fixed_in)
            row = [1] + [-1 if pid in vote else 0 for pid in free]
            A.append(row)
            b.append(base)
        else:
            # q >= budget - c(A_t ∩ fixed_in) - sum_{p in A_t} y_p
            row = [-1] + [-1 if pid in vote else 0 for pid in free]
            A.append(row)
            b.append(base - instance.budget)
    A.append([0] + [1] * len(free))
    b.append(instance.budget - spent)
    c = [1 if objective == MAXMIN else -1] + [0] * len(free)
    upper = [None] + [instance.cost_of[pid] for pid in free]
    return free, c, A, b, upper


def lp_solve(
    instance: Instance,
    fixed_in: Iterable[str] = (),
    fixed_out: Iterable[str] = (),
    objective: str = MAXMIN,
) -> LpSolution:
    """Solve the relaxed program exactly, with some ``x_p`` pinned to 1 or 0.

    Raises :class:`LPInfeasibleError` when the pinned projects overspend.
    """
    if objective not in (MAXMIN, MINIMAX):
        raise ValueError(f"unknown objective {objective!r}")
    fixed_in = frozenset(fixed_in)
    fixed_out = frozenset(fixed_out)
    free, c, A, b, upper = _build_lp(instance, fixed_in, fixed_out, objective)
    res = solve_lp(c, A, b, upper)
    x_star = {pid: Fraction(0) for pid in instance.ids}
    for pid in fixed_in:
        x_star[pid] = Fraction(1)
    for k, pid in enumerate(free):
        x_star[pid] = res.x[k + 1] / instance.cost_of[pid]
    q = res.x[0]
    return LpSolution(q, x_star, objective, fixed_in, fixed_out, res.duals, res.basis)


def verify_lp_solution(instance: Instance, sol: LpSolution) -> bool:
    """Exact feasibility plus a dual certificate that ``q_star`` is optimal."""
    x = sol.x_star
    if any(not 0 <= x[pid] <= 1 for pid in instance.ids):
        return False
    if any(x[pid] != 1 for pid in sol.fixed_in) or any(x[pid] != 0 for pid in sol.fixed_out):
        return False
    spend = sum((instance.cost_of[pid] * x[pid] for pid in instance.ids), Fraction(0))
    if spend > instance.budget:
        return False
    covers = [sum((instance.cost_of[pid] * x[pid] for pid in v), Fraction(0)) for v in instance.votes]
    if sol.objective == MAXMIN:
        if sol.q_star < 0 or any(sol.q_star > cv for cv in covers):
            return False
    else:
        if sol.q_star < 0 or any(sol.q_star < instance.budget - cv for cv in covers):
            return False
    free, c, A, b, upper = _build_lp(instance, sol.fixed_in, sol.fixed_out, sol.objective)
    bound = dual_bound(c, A, b, upper, sol.duals)
    if bound is None:
        return False
    primal = sol.q_star if sol.objective == MAXMIN else -sol.q_star
    return bound == primal


# -- ordered fill ------------------------------------------------------------


def ordered_fill(instance: Instance, order: Sequence[str]) -> OrderedFillOutcome:
    """Take projects in ``order`` until the next one does not fit, then stop."""
    order = tuple(order)
    if sorted(order) != sorted(instance.ids):
        raise ValueError("order must list every project exactly once")
    remaining = instance.budget
    chosen = []
    stop = None
    for pid in order:
        cost = instance.cost_of[pid]
        if cost > remaining:
            stop = pid
            break
        chosen.append(pid)
        remaining -= cost
    return OrderedFillOutcome(instance.outcome(chosen), order, stop)


def relax_order(instance: Instance, sol: LpSolution) -> tuple[str, ...]:
    # descending c(p)x*_p; cheaper first on ties, then by id
    return tuple(
        sorted(instance.ids, key=lambda pid: (-sol.weight(instance, pid), instance.cost_of[pid], pid))
    )


def ordered_relax(instance: Instance, objective: str = MAXMIN) -> tuple[Outcome, LpSolution]:
    sol = lp_solve(instance, objective=objective)
    filled = ordered_fill(instance, relax_order(instance, sol))
    return filled.selected, sol


def compute_lo_ho(instance: Instance) -> tuple[int, int]:
    """Smallest and largest output size over all ordered-fill algorithms."""
    desc = sorted(instance.ids, key=lambda pid: (-instance.cost_of[pid], pid))
    asc = sorted(instance.ids, key=lambda pid: (instance.cost_of[pid], pid))
    return len(ordered_fill(instance, desc).selected), len(ordered_fill(instance, asc).selected)


# -- guarantees ---------------------------------------------------------------


def additive_bound_certificate(instance: Instance, outcome: Outcome, opt_value: int) -> BoundCertificate:
    """Check ALG >= OPT - eta * (b - OPT) for the worst-off voter j under ``outcome``.

    ``eta = |A_j \\ S| / |S \\ A_j|``. When ``S \\ A_j`` is empty the ratio is
    undefined; the certificate is then reported as holding and flagged.
    """
    selected = outcome.selected
    utilities = [instance.cost(selected & v) for v in instance.votes]
    alg = min(utilities)
    if opt_value < alg:
        raise ValueError(f"opt_value {opt_value} is below the outcome's own value {alg}")
    j = utilities.index(alg)
    vote = instance.votes[j]
    missing = len(vote - selected)
    extra = len(selected - vote)
    if extra == 0:
        return BoundCertificate(alg, opt_value, j, None, None, True, eta_undefined=True)
    eta = Fraction(missing, extra)
    rhs = opt_value - eta * (instance.budget - opt_value)
    return BoundCertificate(alg, opt_value, j, eta, rhs, alg >= rhs)


def minimax_bound_check(instance: Instance, opt_maxmin: Optional[int] = None) -> MinimaxBoundReport:
    """Ordered-Relax on the minimax-disutility relaxation versus the exact optimum.

    Applicable only to HCBP instances. ``opt_maxmin`` is the exact maxmin
    optimum; it is computed with the exact solver when omitted.
    """
    if not hcbp_check(instance):
        return MinimaxBoundReport(applicable=False)
    outcome, _ = ordered_relax(instance, objective=MINIMAX)
    if opt_maxmin is None:
        from .exact import solve

        opt_maxmin = solve(instance).value
    alg = minimax_disutility_value(instance, outcome)
    opt = instance.budget - opt_maxmin
    _, h_o = compute_lo_ho(instance)
    bound = (2 - Fraction(1, h_o)) * opt
    return MinimaxBoundReport(True, alg, opt, h_o, bound, alg <= bound, outcome)

