"""Instance catalog, allocations and their aggregate capacity/cost."""

from __future__ import annotations

import json
from dataclasses import dataclass
from decimal import ROUND_HALF_EVEN, Decimal, InvalidOperation
from importlib import resources
from pathlib import Path
from typing import Any, Iterable, Iterator, Mapping

from .errors import ConfigError, UnknownInstanceError

PRICE_QUANTUM = Decimal("0.0001")
DEFAULT_BETA_OVER_ALPHA = 2.0


def to_price(value: Any) -> Decimal:
    """Parse a price into a 4-fractional-digit Decimal (via str, never via binary float)."""
    try:
        d = Decimal(str(value))
    except (InvalidOperation, ValueError):
        raise ConfigError(f"invalid price {value!r}") from None
    q = d.quantize(PRICE_QUANTUM, rounding=ROUND_HALF_EVEN)
    if q != d:
        raise ConfigError(f"price {value!r} has more than 4 fractional digits")
    return q


@dataclass(frozen=True)
class InstanceType:
    name: str
    alpha: int  # sustainable full-response capacity, requests/second
    price: Decimal  # per hour

    def __post_init__(self):
        if not self.name:
            raise ConfigError("instance type needs a name")
        a = self.alpha
        if isinstance(a, bool) or not float(a).is_integer() or a <= 0:
            raise ConfigError(f"{self.name}: alpha must be a positive integer Rps, got {a!r}")
        object.__setattr__(self, "alpha", int(a))
        price = to_price(self.price)
        if price <= 0:
            raise ConfigError(f"{self.name}: price must be positive, got {self.price!r}")
        object.__setattr__(self, "price", price)

    @property
    def price_units(self) -> int:
        """Price in integer units of 0.0001 currency."""
        return int(self.price / PRICE_QUANTUM)


@dataclass(frozen=True)
class InstanceCatalog:
    types: tuple[InstanceType, ...]
    beta_over_alpha: float = DEFAULT_BETA_OVER_ALPHA

    def __post_init__(self):
        types = tuple(self.types)
        if not types:
            raise ConfigError("catalog must contain at least one instance type")
        names = [t.name for t in types]
        dupes = sorted({n for n in names if names.count(n) > 1})
        if dupes:
            raise ConfigError(f"duplicate instance type names: {dupes}")
        if not float(self.beta_over_alpha) > 1:
            raise ConfigError(f"beta_over_alpha must be > 1, got {self.beta_over_alpha!r}")
        object.__setattr__(self, "types", types)
        object.__setattr__(self, "beta_over_alpha", float(self.beta_over_alpha))
        object.__setattr__(self, "_by_name", {t.name: t for t in types})

    def __len__(self) -> int:
        return len(self.types)

    def __iter__(self) -> Iterator[InstanceType]:
        return iter(self.types)

    def __getitem__(self, name: str) -> InstanceType:
        try:
            return self._by_name[name]
        except KeyError:
            raise UnknownInstanceError(f"instance type {name!r} is not in the catalog") from None

    def __contains__(self, name: object) -> bool:
        return name in self._by_name

    @property
    def names(self) -> tuple[str, ...]:
        return tuple(t.name for t in self.types)

    @property
    def min_alpha(self) -> int:
        return min(t.alpha for t in self.types)


def catalog_from_dict(doc: Any, beta_over_alpha: float | None = None) -> InstanceCatalog:
    """Build a catalog from ``{"beta_over_alpha": r, "types": [...]}`` or a bare list of rows."""
    if isinstance(doc, list):
        rows, ratio = doc, None
    elif isinstance(doc, Mapping):
        rows = doc.get("types", doc.get("instances"))
        ratio = doc.get("beta_over_alpha")
        if rows is None:
            raise ConfigError("catalog document needs a 'types' list")
    else:
        raise ConfigError("catalog document must be an object or a list")
    types = []
    for i, row in enumerate(rows):
        try:
            types.append(InstanceType(row["name"], row["alpha_rps"], row["price_per_hour"]))
        except KeyError as exc:
            raise ConfigError(f"catalog row {i}: missing field {exc.args[0]!r}") from None
    if beta_over_alpha is not None:
        ratio = beta_over_alpha
    return InstanceCatalog(tuple(types), DEFAULT_BETA_OVER_ALPHA if ratio is None else ratio)


def load_catalog(path: str | Path, beta_over_alpha: float | None = None) -> InstanceCatalog:
    path = Path(path)
    try:
        doc = json.loads(path.read_text(encoding="utf-8"), parse_float=Decimal)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path}: invalid JSON ({exc})") from None
    return catalog_from_dict(doc, beta_over_alpha)


def default_catalog() -> InstanceCatalog:
    """The seven on-demand EC2 types used in the evaluation (capacities in Rps, AUD/hour)."""
    text = resources.files("hybridscale").joinpath("data/ec2_default.json").read_text("utf-8")
    return catalog_from_dict(json.loads(text, parse_float=Decimal))


class Allocation(Mapping[str, int]):
    """Immutable multiset of instances, keyed by type name. Zero counts are dropped."""

    __slots__ = ("_counts",)

    def __init__(self, counts: Mapping[str, int] | Iterable[tuple[str, int]] = ()):
        items = counts.items() if isinstance(counts, Mapping) else counts
        clean: dict[str, int] = {}
        for name, n in items:
            if isinstance(n, bool) or int(n) != n or n < 0:
                raise ConfigError(f"instance count for {name!r} must be a non-negative integer")
            if n:
                clean[name] = clean.get(name, 0) + int(n)
        self._counts = dict(sorted(clean.items()))

    def __getitem__(self, name: str) -> int:
        return self._counts.get(name, 0)

    def __iter__(self):
        return iter(self._counts)

    def __len__(self) -> int:
        return len(self._counts)

    def __contains__(self, name: object) -> bool:
        return name in self._counts

    def __eq__(self, other: object) -> bool:
        if isinstance(other, Allocation):
            return self._counts == other._counts
        if isinstance(other, Mapping):
            return self == Allocation(other)
        return NotImplemented

    def __hash__(self) -> int:
        return hash(tuple(self._counts.items()))

    def __repr__(self) -> str:
        return f"Allocation({self._counts})"

    def __add__(self, other: Mapping[str, int]) -> "Allocation":
        out = dict(self._counts)
        for k, v in other.items():
            out[k] = out.get(k, 0) + v
        return Allocation(out)

    def __sub__(self, other: Mapping[str, int]) -> "Allocation":
        out = dict(self._counts)
        for k, v in other.items():
            if out.get(k, 0) < v:
                raise ConfigError(f"cannot remove {v} x {k}: only {out.get(k, 0)} allocated")
            out[k] = out[k] - v
        return Allocation(out)

    def issubset(self, other: Mapping[str, int]) -> bool:
        return all(other.get(k, 0) >= v for k, v in self._counts.items())

    @property
    def instance_count(self) -> int:
        return sum(self._counts.values())

    def to_dict(self) -> dict[str, int]:
        return dict(self._counts)


@dataclass(frozen=True)
class AllocationStats:
    aggregate_alpha: int
    aggregate_beta: float
    hourly_cost: Decimal
    instance_count: int

    def __add__(self, other: "AllocationStats") -> "AllocationStats":
        return AllocationStats(
            self.aggregate_alpha + other.aggregate_alpha,
            self.aggregate_beta + other.aggregate_beta,
            self.hourly_cost + other.hourly_cost,
            self.instance_count + other.instance_count,
        )


def allocation_stats(a: Mapping[str, int], c: InstanceCatalog) -> AllocationStats:
    alpha = 0
    cost = Decimal("0.0000")
    count = 0
    for name, n in a.items():
        t = c[name]
        alpha += t.alpha * n
        cost += t.price * n
        count += n
    return AllocationStats(alpha, c.beta_over_alpha * alpha, cost, count)
