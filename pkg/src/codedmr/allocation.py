"""Two-step file allocation: disjoint batches, surplus ratios, sub-batches.

Step one hands every node a disjoint batch, filling low-capability nodes
exactly and splitting the remainder evenly. Step two spreads each batch
across the surplus capacity of the remaining nodes, producing one sub-batch
per subset of possible extra holders.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Mapping

from .model import (
    ComputationProfile,
    FunctionAssignment,
    FileCountOverflowError,
    IndivisibleInstanceError,
    InstanceTooLargeError,
    format_rational,
)

DEFAULT_FILE_COUNT_CAP = 2 ** 62
DEFAULT_MATERIALIZE_CAP = 5_000_000

SubbatchKey = tuple[int, tuple[int, ...]]


@dataclass(frozen=True)
class AllocationPlan:
    """First-step batch fractions plus the sub-batch fraction table.

    ``subbatch`` maps (owner, subset) to the fraction of all files in that
    sub-batch; only nonzero entries are stored. It is None when the plan was
    built without the (potentially 2^(K-1)-sized) table.
    """

    l: tuple[Fraction, ...]
    r: int
    xi: Fraction
    P: tuple[Fraction, ...]
    subbatch: Mapping[SubbatchKey, Fraction] | None = None

    @property
    def K(self) -> int:
        return len(self.l)

    def to_json(self) -> dict:
        data = {
            "l": [format_rational(v) for v in self.l],
            "r": self.r,
            "xi": format_rational(self.xi),
            "P": [format_rational(v) for v in self.P],
        }
        if self.subbatch is not None:
            data["subbatch"] = [
                {
                    "owner": owner,
                    "subset": list(psi),
                    "fraction": format_rational(frac),
                }
                for (owner, psi), frac in sorted(
                    self.subbatch.items(),
                    key=lambda item: (item[0][0], len(item[0][1]), item[0][1]),
                )
            ]
        return data


def first_step(profile: ComputationProfile) -> tuple[tuple[Fraction, ...], int, Fraction]:
    """Split all files into K disjoint batches, as evenly as capacity allows.

    Returns the batch fractions l, the count r of nodes whose capacity is
    exhausted by their own batch, and xi, the total load of those nodes.
    """
    K = profile.K
    l: list[Fraction] = []
    r = 0
    allocated = Fraction(0)
    for k in range(1, K + 1):
        a_k = (1 - allocated) / (K - k + 1)
        m_k = profile.m[k - 1]
        if m_k <= a_k:
            l.append(m_k)
            r = k
        else:
            l.append(a_k)
        allocated += l[-1]
    xi = sum(profile.m[:r], Fraction(0))
    return tuple(l), r, xi


def surplus_ratios(l: tuple[Fraction, ...], m: tuple[Fraction, ...]) -> tuple[Fraction, ...]:
    """Fraction of its non-batch files each node still has capacity to map."""
    return tuple((mk - lk) / (1 - lk) for lk, mk in zip(l, m))


def subbatch_fractions(
    l: tuple[Fraction, ...],
    P: tuple[Fraction, ...],
    owner: int | None = None,
) -> dict[SubbatchKey, Fraction]:
    """All nonzero sub-batch fractions l_k^Psi, keyed by (owner, subset).

    For each owner k, the batch splits across subsets Psi of the other nodes
    with fraction l_k * prod_{i in Psi} P_i * prod_{i not in Psi, i != k} (1 - P_i).
    Zero entries (any Psi touching a node with P_i = 0) are skipped, so the
    table stays small when few nodes have surplus capacity.
    """
    K = len(l)
    owners = range(1, K + 1) if owner is None else [owner]
    table: dict[SubbatchKey, Fraction] = {}

    def expand(k: int, others: list[int], idx: int, psi: list[int], frac: Fraction):
        if idx == len(others):
            table[(k, tuple(psi))] = frac
            return
        i = others[idx]
        p = P[i - 1]
        if p > 0:
            psi.append(i)
            expand(k, others, idx + 1, psi, frac * p)
            psi.pop()
        if p < 1:
            expand(k, others, idx + 1, psi, frac * (1 - p))

    for k in owners:
        if l[k - 1] == 0:
            continue
        others = [i for i in range(1, K + 1) if i != k]
        expand(k, others, 0, [], l[k - 1])
    return table


def build_plan(profile: ComputationProfile, include_subbatches: bool = True) -> AllocationPlan:
    """Run both allocation steps for a validated profile."""
    l, r, xi = first_step(profile)
    P = surplus_ratios(l, profile.m)
    table = subbatch_fractions(l, P) if include_subbatches else None
    return AllocationPlan(l=l, r=r, xi=xi, P=P, subbatch=table)


def _subbatch_table(plan: AllocationPlan) -> Mapping[SubbatchKey, Fraction]:
    if plan.subbatch is not None:
        return plan.subbatch
    return subbatch_fractions(plan.l, plan.P)


def minimal_file_count(plan: AllocationPlan, cap: int | None = DEFAULT_FILE_COUNT_CAP) -> int:
    """Least N for which every sub-batch holds an integer number of files.

    This is the LCM of the lowest-terms denominators of all nonzero sub-batch
    fractions. Raises FileCountOverflowError (carrying the exact value) when
    the result exceeds ``cap``; pass cap=None to disable the guard.
    """
    table = _subbatch_table(plan)
    value = math.lcm(*(frac.denominator for frac in table.values()))
    if cap is not None and value > cap:
        raise FileCountOverflowError(
            f"minimal file count {format_factored(value)} exceeds cap {cap}",
            value=value,
        )
    return value


def file_count_estimate(plan: AllocationPlan) -> Fraction:
    """The coarse magnitude estimate for the required N (not the exact rule).

    Derived from the smallest sub-batch: 1/(l_1 * prod_{k>r} min(P_k, 1-P_k))
    when r > 0, and K * max_k min(P_k, 1-P_k) / prod_k min(P_k, 1-P_k) when
    r = 0. Reported alongside the exact LCM, labeled as an estimate.
    """
    mins = [min(p, 1 - p) for p in plan.P]
    if plan.r > 0:
        prod = Fraction(1)
        for v in mins[plan.r:]:
            prod *= v
        return 1 / (plan.l[0] * prod)
    prod = Fraction(1)
    for v in mins:
        prod *= v
    return plan.K * max(mins) / prod


def format_factored(n: int) -> str:
    """Prime-power rendering like "2^2 * 3 * 11^11" for large exact counts."""
    if n <= 0:
        raise ValueError("expected a positive integer")
    if n == 1:
        return "1"
    parts = []
    rest = n
    p = 2
    while p * p <= rest and p < 10 ** 6:
        if rest % p == 0:
            exp = 0
            while rest % p == 0:
                rest //= p
                exp += 1
            parts.append(f"{p}^{exp}" if exp > 1 else f"{p}")
        p += 1 if p == 2 else 2
    if rest > 1:
        parts.append(str(rest))
    return " * ".join(parts)


def canonical_subbatch_order(keys) -> list[SubbatchKey]:
    """Owner ascending, then subset by size, then lexicographically."""
    return sorted(keys, key=lambda key: (key[0], len(key[1]), key[1]))


@dataclass(frozen=True)
class MaterializedInstance:
    """A concrete instance: real file and function index sets, plus the seed.

    File and function indices are 1-based. Each file belongs to exactly one
    (owner, subset) sub-batch; node k's file set is its own batch plus every
    sub-batch whose subset contains k. Sub-batches occupy consecutive index
    ranges in canonical order, so identical inputs materialize identically.
    """

    N: int
    Q: int
    T: int
    seed: int
    subbatch_files: Mapping[SubbatchKey, range]
    files_of: Mapping[int, frozenset[int]]
    functions_of: Mapping[int, range]

    @property
    def K(self) -> int:
        return len(self.files_of)

    def owner_of(self, n: int) -> SubbatchKey:
        """The (owner, subset) sub-batch containing file n."""
        for key, rng in self.subbatch_files.items():
            if n in rng:
                return key
        raise KeyError(f"file index {n} not in any sub-batch")

    def to_json(self) -> dict:
        return {
            "N": self.N,
            "Q": self.Q,
            "T": self.T,
            "seed": self.seed,
            "subbatches": [
                {
                    "owner": owner,
                    "subset": list(psi),
                    "first_file": rng.start,
                    "file_count": len(rng),
                }
                for (owner, psi), rng in self.subbatch_files.items()
            ],
            "functions_of": {
                str(k): {"first": rng.start, "count": len(rng)}
                for k, rng in self.functions_of.items()
            },
        }


def materialize(
    plan: AllocationPlan,
    assignment: FunctionAssignment,
    N: int,
    Q: int,
    T: int = 32,
    seed: int = 0,
    max_files: int = DEFAULT_MATERIALIZE_CAP,
) -> MaterializedInstance:
    """Assign concrete file and function index ranges for an (N, Q) instance.

    N must be a multiple of the minimal file count and Q a multiple of the
    assignment's minimal function count, so that every sub-batch and every
    function share is an exact integer.
    """
    if plan.K != assignment.K:
        raise ValueError("plan and assignment disagree on node count")
    min_n = minimal_file_count(plan, cap=None)
    if N <= 0 or N % min_n != 0:
        raise IndivisibleInstanceError(
            f"N={N} is not a positive multiple of the minimal file count {min_n}",
            minimal_files=min_n,
        )
    min_q = math.lcm(*(w.denominator for w in assignment.w if w != 0))
    if Q <= 0 or Q % min_q != 0:
        raise IndivisibleInstanceError(
            f"Q={Q} is not a positive multiple of the minimal function count {min_q}",
            minimal_functions=min_q,
        )
    if N > max_files:
        raise InstanceTooLargeError(
            f"N={N} exceeds the materialization cap {max_files}; "
            "analytic evaluation remains available")
    if T <= 0:
        raise ValueError("T must be a positive bit width")

    table = _subbatch_table(plan)
    K = plan.K
    subbatch_files: dict[SubbatchKey, range] = {}
    next_file = 1
    for key in canonical_subbatch_order(table):
        count = table[key] * N
        assert count.denominator == 1, "divisibility guaranteed by the LCM check"
        rng = range(next_file, next_file + int(count))
        subbatch_files[key] = rng
        next_file += int(count)
    assert next_file == N + 1, "sub-batches partition the file set"

    files_of = {}
    for k in range(1, K + 1):
        mine: set[int] = set()
        for (owner, psi), rng in subbatch_files.items():
            if owner == k or k in psi:
                mine.update(rng)
        files_of[k] = frozenset(mine)
        # coverage identity: node k maps m_k*N = (l_k + P_k*(1-l_k))*N files
        expected = (plan.l[k - 1] + plan.P[k - 1] * (1 - plan.l[k - 1])) * N
        assert len(mine) == expected, "sub-batch table violates node coverage"

    functions_of = {}
    next_fn = 1
    for k in range(1, K + 1):
        count = assignment.w[k - 1] * Q
        assert count.denominator == 1
        functions_of[k] = range(next_fn, next_fn + int(count))
        next_fn += int(count)
    assert next_fn == Q + 1, "function shares partition the function set"

    return MaterializedInstance(
        N=N,
        Q=Q,
        T=T,
        seed=seed,
        subbatch_files=subbatch_files,
        files_of=files_of,
        functions_of=functions_of,
    )
