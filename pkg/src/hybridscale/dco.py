"""Delta capacity optimization: cheapest capacity to add, costliest capacity to remove.

Both problems are small integer programs over instance counts. They are
solved exactly with dynamic programs over (gcd-scaled) integer capacity.
Ties are broken deterministically:

1. minimal cost (scale-out) / maximal cost (scale-in)
2. maximal capacity added / removed
3. fewest instances
4. lexicographically greatest count vector in catalog order

The brute-force ``oracle_*`` functions enumerate every candidate and apply
the same ordering; they exist for testing.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from decimal import Decimal
from fractions import Fraction
from functools import reduce
from typing import Mapping, Sequence

import numpy as np

from .catalog import Allocation, InstanceCatalog, InstanceType
from .errors import ConfigError, DomainError, OracleScopeError

ORACLE_LIMIT = 10_000_000
_NEG = np.iinfo(np.int64).min // 4
_POS = np.iinfo(np.int64).max // 4


@dataclass(frozen=True)
class DcoSolution:
    change: Allocation
    objective_cost: Decimal  # hourly cost of the change
    capacity_change: int  # Rps added or removed
    direction: str  # "scale_out" | "scale_in"

    @property
    def instance_count(self) -> int:
        return self.change.instance_count


def _solution(types: Sequence[InstanceType], counts: Sequence[int], direction: str) -> DcoSolution:
    change = Allocation({t.name: int(x) for t, x in zip(types, counts)})
    cost = sum((t.price * int(x) for t, x in zip(types, counts)), Decimal("0.0000"))
    cap = sum(t.alpha * int(x) for t, x in zip(types, counts))
    return DcoSolution(change, cost, cap, direction)


def _check_delta(delta: float) -> Fraction:
    if not math.isfinite(delta) or delta <= 0:
        raise DomainError(f"delta must be a positive finite rate, got {delta!r}")
    return Fraction(delta)


def _scale_out_table(alphas: Sequence[int], weights: Sequence[int], cmax: int) -> list[np.ndarray]:
    """Suffix tables V[k][c]: min encoded (cost, count) reaching exactly c with types k..n-1."""
    n = len(alphas)
    tables: list[np.ndarray] = [None] * (n + 1)  # type: ignore[list-item]
    base = np.full(cmax + 1, _POS, dtype=np.int64)
    base[0] = 0
    tables[n] = base
    for k in range(n - 1, -1, -1):
        a, w = alphas[k], weights[k]
        v = tables[k + 1].copy()
        # unbounded item: each block of width a depends only on the block before it
        for lo in range(a, cmax + 1, a):
            hi = min(lo + a, cmax + 1)
            prev = v[lo - a : hi - a]
            cand = np.where(prev < _POS, prev + w, _POS)
            np.minimum(v[lo:hi], cand, out=v[lo:hi])
        tables[k] = v
    return tables


def _scale_in_table(alphas, weights, bounds, cmax) -> list[np.ndarray]:
    """Suffix tables V[k][c]: max encoded (cost, -count) reaching exactly c, with x_k <= bounds[k]."""
    n = len(alphas)
    tables: list[np.ndarray] = [None] * (n + 1)  # type: ignore[list-item]
    base = np.full(cmax + 1, _NEG, dtype=np.int64)
    base[0] = 0
    tables[n] = base
    for k in range(n - 1, -1, -1):
        a, w, u = alphas[k], weights[k], bounds[k]
        nxt = tables[k + 1]
        v = nxt.copy()
        for x in range(1, u + 1):
            shift = x * a
            if shift > cmax:
                break
            prev = nxt[: cmax + 1 - shift]
            cand = np.where(prev > _NEG, prev + x * w, _NEG)
            np.maximum(v[shift:], cand, out=v[shift:])
        tables[k] = v
    return tables


def _reconstruct(tables, alphas, weights, bounds, c: int) -> list[int]:
    """Lexicographically greatest count vector achieving table value V[0][c]."""
    target = int(tables[0][c])
    counts = []
    for k, (a, w) in enumerate(zip(alphas, weights)):
        hi = c // a if bounds is None else min(bounds[k], c // a)
        for x in range(hi, -1, -1):
            if int(tables[k + 1][c - x * a]) == target - x * w:
                counts.append(x)
                c -= x * a
                target -= x * w
                break
        else:  # pragma: no cover - tables are consistent by construction
            raise RuntimeError("DCO reconstruction failed")
    return counts


def solve_scale_out(delta: float, catalog: InstanceCatalog) -> DcoSolution:
    """Cheapest multiset of catalog instances whose capacity is at least ``delta``."""
    d = _check_delta(delta)
    types = list(catalog.types)
    if not types:
        raise ConfigError("empty catalog")
    g = reduce(math.gcd, (t.alpha for t in types))
    alphas = [t.alpha // g for t in types]
    need = math.ceil(d / g)
    # dropping any used instance from an optimum must break feasibility,
    # so optimal capacity < need + max(alpha)
    cmax = need + max(alphas) - 1
    big = cmax + 1  # count never exceeds capacity in scaled units
    weights = [t.price_units * big + 1 for t in types]
    tables = _scale_out_table(alphas, weights, cmax)
    tail = tables[0][need:]
    ok = np.nonzero(tail < _POS)[0]
    cost = tail[ok] // big
    count = tail[ok] % big
    cap = ok + need
    best = np.lexsort((count, -cap, cost))[0]
    c = int(cap[best])
    counts = _reconstruct(tables, alphas, weights, None, c)
    return _solution(types, counts, "scale_out")


def solve_scale_in(delta: float, current: Mapping[str, int], catalog: InstanceCatalog) -> DcoSolution:
    """Costliest sub-multiset of ``current`` whose capacity is at most ``delta``."""
    d = _check_delta(delta)
    types = [t for t in catalog.types if current.get(t.name, 0) > 0]
    for name in current:
        catalog[name]  # unknown names raise
    if not types:
        raise DomainError("scale-in needs a non-empty current allocation")
    bounds = [int(current[t.name]) for t in types]
    g = reduce(math.gcd, (t.alpha for t in types))
    alphas = [t.alpha // g for t in types]
    cmax = min(math.floor(d / g), sum(a * u for a, u in zip(alphas, bounds)))
    big = sum(bounds) + 1
    weights = [t.price_units * big - 1 for t in types]
    tables = _scale_in_table(alphas, weights, bounds, cmax)
    v = tables[0]
    ok = np.nonzero(v > _NEG)[0]
    vals = v[ok]
    # decode value = cost*big - count with 0 <= count < big
    cost = (vals + big - 1) // big
    count = cost * big - vals
    best = np.lexsort((count, -ok, -cost))[0]
    c = int(ok[best])
    counts = _reconstruct(tables, alphas, weights, bounds, c)
    return _solution(types, counts, "scale_in")


def _enumerate(types, ranges, limit) -> np.ndarray:
    size = math.prod(len(r) for r in ranges)
    if size > limit:
        raise OracleScopeError(f"oracle search space {size} exceeds limit {limit}")
    grids = np.meshgrid(*ranges, indexing="ij")
    return np.stack([g.reshape(-1) for g in grids], axis=1).astype(np.int64)


def _pick(types, xs: np.ndarray, maximize_cost: bool) -> np.ndarray:
    price = np.array([t.price_units for t in types], dtype=np.int64)
    alpha = np.array([t.alpha for t in types], dtype=np.int64)
    cost = xs @ price
    cap = xs @ alpha
    count = xs.sum(axis=1)
    # np.lexsort: last key is primary
    keys = [-xs[:, k] for k in range(xs.shape[1] - 1, -1, -1)]
    keys += [count, -cap, -cost if maximize_cost else cost]
    return xs[np.lexsort(keys)[0]]


def oracle_scale_out(delta: float, catalog: InstanceCatalog, limit: int = ORACLE_LIMIT) -> DcoSolution:
    d = _check_delta(delta)
    types = list(catalog.types)
    ranges = [np.arange(math.ceil(d / t.alpha) + 1) for t in types]
    xs = _enumerate(types, ranges, limit)
    cap = xs @ np.array([t.alpha for t in types], dtype=np.int64)
    xs = xs[cap >= math.ceil(d)]
    return _solution(types, _pick(types, xs, maximize_cost=False), "scale_out")


def oracle_scale_in(
    delta: float, current: Mapping[str, int], catalog: InstanceCatalog, limit: int = ORACLE_LIMIT
) -> DcoSolution:
    d = _check_delta(delta)
    types = [t for t in catalog.types if current.get(t.name, 0) > 0]
    if not types:
        raise DomainError("scale-in needs a non-empty current allocation")
    ranges = [np.arange(int(current[t.name]) + 1) for t in types]
    xs = _enumerate(types, ranges, limit)
    cap = xs @ np.array([t.alpha for t in types], dtype=np.int64)
    xs = xs[cap <= math.floor(d)]
    return _solution(types, _pick(types, xs, maximize_cost=True), "scale_in")

