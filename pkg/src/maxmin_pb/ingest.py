"""Reading and writing instances, plus a seeded synthetic generator.

Two on-disk formats are supported:

* Pabulib-style ``.pb`` files (``META`` / ``PROJECTS`` / ``VOTES`` sections,
  ``;``-separated, approval votes only).
* A canonical JSON document ``{"budget", "projects": [{"id", "cost"}], "votes"}``
  written with sorted keys so serialisation is byte-stable.
"""

from __future__ import annotations

import csv
import io
import json
import random
import warnings
from dataclasses import dataclass
from decimal import Decimal, InvalidOperation
from pathlib import Path
from typing import Optional

from .core import (
    EmptyVoteWarning,
    Instance,
    InstanceError,
    PBError,
    Project,
    distinct_profile,
    hcbp_check,
    scalable_limit,
)
from .relax import compute_lo_ho


class ParseError(PBError, ValueError):
    def __init__(self, message: str, line: Optional[int] = None):
        self.line = line
        super().__init__(f"line {line}: {message}" if line is not None else message)


@dataclass(frozen=True)
class DatasetMeta:
    name: str
    budget: int
    num_projects: int
    num_voters: int
    num_distinct_votes: int
    scalable_limit: int
    source: str

    @classmethod
    def of(cls, instance: Instance, name: str = "", source: str = "") -> "DatasetMeta":
        return cls(
            name=name,
            budget=instance.budget,
            num_projects=instance.m,
            num_voters=instance.n,
            num_distinct_votes=distinct_profile(instance).n_distinct,
            scalable_limit=scalable_limit(instance),
            source=source,
        )


# -- pabulib ---------------------------------------------------------------------


def _to_int(raw: str, multiplier: int, what: str, line: int) -> int:
    try:
        value = Decimal(raw.strip().replace(",", "."))
    except InvalidOperation:
        raise ParseError(f"{what} {raw!r} is not a number", line) from None
    scaled = value * multiplier
    if scaled != scaled.to_integral_value():
        hint = "" if multiplier > 1 else " (pass a decimal rescale to accept fractional money)"
        raise ParseError(f"{what} {raw!r} is not an integer after scaling by {multiplier}{hint}", line)
    return int(scaled)


def parse_pabulib(text: str, decimals: int = 0) -> Instance:
    """Parse a Pabulib approval file.

    ``decimals`` declares how many decimal places of money to keep: costs and
    budget are multiplied by ``10**decimals`` and must then be integral.
    """
    multiplier = 10 ** decimals
    section = None
    header: Optional[list[str]] = None
    meta: dict[str, str] = {}
    projects: list[Project] = []
    seen: set[str] = set()
    raw_votes: list[tuple[int, list[str]]] = []
    lines = text.splitlines()
    for lineno, raw in enumerate(lines, start=1):
        if not raw.strip():
            continue
        name = raw.strip().upper()
        if name in ("META", "PROJECTS", "VOTES"):
            section = name
            header = None
            continue
        if section is None:
            raise ParseError("content before the first section header", lineno)
        row = next(csv.reader([raw], delimiter=";"))
        if section == "META":
            if len(row) < 2:
                raise ParseError("META rows need key;value", lineno)
            if row[0].strip() == "key" and header is None and not meta:
                header = row
                continue
            meta[row[0].strip()] = row[1].strip()
            continue
        if header is None:
            header = [h.strip() for h in row]
            continue
        if len(row) != len(header):
            raise ParseError(f"expected {len(header)} columns, got {len(row)}", lineno)
        record = dict(zip(header, (v.strip() for v in row)))
        if section == "PROJECTS":
            if "project_id" not in record or "cost" not in record:
                raise ParseError("PROJECTS needs project_id and cost columns", lineno)
            pid = record["project_id"]
            if not pid:
                raise ParseError("empty project id", lineno)
            if pid in seen:
                raise ParseError(f"duplicate project id {pid!r}", lineno)
            seen.add(pid)
            cost = _to_int(record["cost"], multiplier, "cost", lineno)
            if cost < 1:
                raise ParseError(f"cost of {pid!r} must be positive", lineno)
            projects.append(Project(pid, cost))
        else:
            if "vote" not in record:
                raise ParseError("VOTES needs a vote column", lineno)
            ids = [v.strip() for v in record["vote"].split(",") if v.strip()]
            raw_votes.append((lineno, ids))

    if "budget" not in meta:
        raise ParseError("META section has no budget")
    vote_type = meta.get("vote_type", "approval").strip().lower()
    if vote_type != "approval":
        raise ParseError(f"unsupported vote_type {vote_type!r}; only approval is supported")
    budget = _to_int(meta["budget"], multiplier, "budget", None)
    if budget < 1:
        raise ParseError("budget must be positive")
    if not projects:
        raise ParseError("no projects")
    if not raw_votes:
        raise ParseError("no votes")
    votes = []
    for lineno, ids in raw_votes:
        unknown = [pid for pid in ids if pid not in seen]
        if unknown:
            raise ParseError(f"vote references unknown projects {unknown}", lineno)
        votes.append(frozenset(ids))
    with warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter("always", EmptyVoteWarning)
        instance = Instance(tuple(projects), budget, tuple(votes))
    if caught:
        empty = sum(1 for v in votes if not v)
        warnings.warn(f"{empty} voter(s) approve no project; the maxmin optimum is 0", EmptyVoteWarning, stacklevel=2)
    return instance


def write_pabulib(instance: Instance, description: str = "") -> str:
    buf = io.StringIO()
    w = csv.writer(buf, delimiter=";", lineterminator="\n")
    buf.write("META\n")
    w.writerow(["key", "value"])
    if description:
        w.writerow(["description", description])
    w.writerow(["num_projects", instance.m])
    w.writerow(["num_votes", instance.n])
    w.writerow(["budget", instance.budget])
    w.writerow(["vote_type", "approval"])
    buf.write("PROJECTS\n")
    w.writerow(["project_id", "cost"])
    for p in instance.projects:
        w.writerow([p.id, p.cost])
    buf.write("VOTES\n")
    w.writerow(["voter_id", "vote"])
    for i, vote in enumerate(instance.votes, start=1):
        w.writerow([i, ",".join(pid for pid in instance.ids if pid in vote)])
    return buf.getvalue()


# -- native JSON ---------------------------------------------------------------------


def to_native(instance: Instance) -> dict:
    return {
        "budget": instance.budget,
        "projects": [{"cost": p.cost, "id": p.id} for p in instance.projects],
        "votes": [[pid for pid in instance.ids if pid in vote] for vote in instance.votes],
    }


def write_native(instance: Instance) -> str:
    return json.dumps(to_native(instance), sort_keys=True, indent=2, ensure_ascii=False) + "\n"


def _strict_int(value, what):
    if isinstance(value, bool) or not isinstance(value, int):
        raise ParseError(f"{what} must be an integer, got {value!r}")
    return value


def from_native(doc) -> Instance:
    if not isinstance(doc, dict):
        raise ParseError("document must be a JSON object")
    for key in ("budget", "projects", "votes"):
        if key not in doc:
            raise ParseError(f"missing key {key!r}")
    budget = _strict_int(doc["budget"], "budget")
    if not isinstance(doc["projects"], list) or not isinstance(doc["votes"], list):
        raise ParseError("projects and votes must be arrays")
    projects = []
    for k, entry in enumerate(doc["projects"]):
        if not isinstance(entry, dict) or "id" not in entry or "cost" not in entry:
            raise ParseError(f"project {k} needs id and cost")
        if not isinstance(entry["id"], str):
            raise ParseError(f"project {k} id must be a string")
        projects.append(Project(entry["id"], _strict_int(entry["cost"], f"cost of project {k}")))
    votes = []
    for k, vote in enumerate(doc["votes"]):
        if not isinstance(vote, list) or not all(isinstance(v, str) for v in vote):
            raise ParseError(f"vote {k} must be an array of project ids")
        if len(set(vote)) != len(vote):
            raise ParseError(f"vote {k} lists a project twice")
        votes.append(frozenset(vote))
    try:
        return Instance(tuple(projects), budget, tuple(votes))
    except InstanceError as exc:
        raise ParseError(str(exc)) from None


def parse_native(text: str) -> Instance:
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ParseError(f"invalid JSON: {exc.msg}", exc.lineno) from None
    return from_native(doc)


def load(path, fmt: Optional[str] = None, decimals: int = 0) -> Instance:
    """Read an instance, picking the format from the extension unless given."""
    path = Path(path)
    if fmt is None:
        fmt = "pabulib" if path.suffix.lower() == ".pb" else "native"
    text = path.read_text(encoding="utf-8")
    if fmt == "pabulib":
        return parse_pabulib(text, decimals)
    if fmt == "native":
        return parse_native(text)
    raise ValueError(f"unknown format {fmt!r}")


# -- synthetic instances ------------------------------------------------------------


@dataclass(frozen=True)
class GeneratorParams:
    m: int
    n: int
    n_distinct: int
    cost_range: tuple[int, int] = (1, 20)
    budget_fraction: float = 0.5
    seed: int = 0
    hcbp: bool = False
    max_budget: Optional[int] = None
    approval_prob: float = 0.4


MAX_RETRIES = 1000


def generate(params: GeneratorParams) -> Instance:
    """Random instance with exactly ``n_distinct`` distinct non-empty votes.

    Costs are uniform in ``cost_range``; the budget is ``budget_fraction`` of
    the total cost (at least 1, at most ``max_budget``). In HCBP mode vote
    sizes are kept below l_o, which only depends on costs and budget, and the
    draw is repeated until the property holds.
    """
    m, n, nh = params.m, params.n, params.n_distinct
    lo_c, hi_c = params.cost_range
    if m < 1 or n < 1 or nh < 1:
        raise ValueError("m, n and n_distinct must be positive")
    if nh > n:
        raise ValueError(f"n_distinct={nh} exceeds n={n}")
    if nh > 2 ** m - 1:
        raise ValueError(f"n_distinct={nh} exceeds the {2 ** m - 1} non-empty subsets of {m} projects")
    if not 1 <= lo_c <= hi_c:
        raise ValueError(f"bad cost_range {params.cost_range}")
    rng = random.Random(params.seed)
    ids = [f"p{k + 1}" for k in range(m)]
    for _ in range(MAX_RETRIES):
        costs = [rng.randint(lo_c, hi_c) for _ in range(m)]
        budget = max(1, round(params.budget_fraction * sum(costs)))
        if params.max_budget is not None:
            budget = min(budget, params.max_budget)
        size_cap = m
        if params.hcbp:
            probe = Instance(tuple(Project(pid, c) for pid, c in zip(ids, costs)), budget, (frozenset(ids[:1]),))
            size_cap = compute_lo_ho(probe)[0] - 1
            if size_cap < 1 or _count_small_subsets(m, size_cap) < nh:
                continue
        distinct = _draw_votes(rng, ids, nh, size_cap, params.approval_prob)
        if distinct is None:
            continue
        assignment = list(range(nh)) + [rng.randrange(nh) for _ in range(n - nh)]
        rng.shuffle(assignment)
        votes = tuple(distinct[t] for t in assignment)
        instance = Instance(tuple(Project(pid, c) for pid, c in zip(ids, costs)), budget, votes)
        if params.hcbp and not hcbp_check(instance):
            continue
        return instance
    raise ValueError(f"could not satisfy generator parameters after {MAX_RETRIES} attempts")


def _count_small_subsets(m: int, cap: int) -> int:
    from math import comb

    return sum(comb(m, k) for k in range(1, cap + 1))


def _draw_votes(rng, ids, nh, size_cap, prob):
    seen: dict[frozenset, None] = {}
    for _ in range(50 * nh + 100):
        if len(seen) == nh:
            break
        vote = [pid for pid in ids if rng.random() < prob]
        if not vote:
            vote = [rng.choice(ids)]
        if len(vote) > size_cap:
            vote = rng.sample(vote, size_cap)
        seen.setdefault(frozenset(vote), None)
    if len(seen) < nh:
        # dense regime: sample directly from the small-subset space
        while len(seen) < nh:
            k = rng.randint(1, size_cap)
            seen.setdefault(frozenset(rng.sample(ids, k)), None)
    return list(seen)


def native_fixture_dir() -> Path:
    return Path(__file__).parent / "fixtures"


def load_fixture(name: str) -> Instance:
    return load(native_fixture_dir() / f"{name}.json")

