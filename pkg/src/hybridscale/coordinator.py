"""Static coordinator: one config document in, three consistently parameterized loops out.

Config sections (all durations in seconds)::

    catalog  {"path": ...} | {"builtin": "ec2_default"} | inline catalog document
    pic      lag, lookback, horizon, slide, forecaster, phi
    rsc      lookback, horizon, slide, forecaster, beta_over_alpha (optional override)
    ric      kappa, n, eval_period, cooldown, min_crossings, offset, scale_in, basis, ownership
    sim      boot_delay, billing_period, initial_allocation
"""

from __future__ import annotations

import copy
import json
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Any, Mapping

from .catalog import Allocation, InstanceCatalog, catalog_from_dict, default_catalog, load_catalog
from .errors import ConfigError
from .forecast import Estimator, Forecaster, PerfectOracle, make_forecaster
from .loops import PicConfig, ReactiveLoop, RicPolicy, RscConfig
from .trace import TimeSeries, Window, bin_max

DEFAULT_CONFIG: dict[str, Any] = {
    "catalog": {"builtin": "ec2_default"},
    "pic": {
        "lag": 60,
        "lookback": 86_400,
        "horizon": 3_600,
        "slide": 3_600,
        "forecaster": {"model": "holt_winters"},
        "phi": "max",
    },
    "rsc": {
        "lookback": 1_800,
        "horizon": 1,
        "slide": 1,
        "forecaster": {"model": "naive"},
    },
    "ric": {
        "kappa": 1.0,
        "n": 3,
        "eval_period": 300,
        "cooldown": 300,
        "min_crossings": 1,
        "offset": None,
        "scale_in": True,
        "basis": "avg",
        "ownership": "overlay",
    },
    "sim": {"boot_delay": 0, "billing_period": 3_600, "initial_allocation": {}},
}


@dataclass(frozen=True)
class SimOptions:
    boot_delay: int = 0
    billing_period: int = 3_600
    initial_allocation: Allocation = field(default_factory=Allocation)


@dataclass
class ControllerState:
    """Mutable state shared by the loops of one controller."""

    allocation: Allocation = field(default_factory=Allocation)


@dataclass
class Controller:
    catalog: InstanceCatalog
    pic: PicConfig
    rsc: RscConfig
    ric_policy: RicPolicy
    options: SimOptions
    pic_lag: int
    config: dict = field(default_factory=dict)
    state: ControllerState = field(default_factory=ControllerState)

    def __post_init__(self):
        self.state.allocation = self.options.initial_allocation
        self.ric = ReactiveLoop(self.ric_policy, self.catalog)

    @property
    def warmup(self) -> int:
        """Seconds of history consumed before the first PIC decision."""
        return self.pic.window.lookback * self.pic_lag

    def bind(self, series: TimeSeries) -> "Controller":
        """Fresh controller whose oracle forecasters see ``series``."""
        pic, rsc = self.pic, self.rsc
        if isinstance(pic.forecaster, PerfectOracle):
            pic = replace(pic, forecaster=pic.forecaster.bind(bin_max(series, self.pic_lag).values))
        if isinstance(rsc.forecaster, PerfectOracle):
            rsc = replace(rsc, forecaster=rsc.forecaster.bind(series.values))
        return Controller(self.catalog, pic, rsc, self.ric_policy, self.options, self.pic_lag,
                          self.config)


def merge_defaults(config: Mapping[str, Any]) -> dict[str, Any]:
    out = copy.deepcopy(DEFAULT_CONFIG)
    for section, body in config.items():
        if section not in out:
            raise ConfigError(f"unknown config section {section!r}")
        if section == "catalog":
            out["catalog"] = copy.deepcopy(body)
        elif body is not None:
            if not isinstance(body, Mapping):
                raise ConfigError(f"config section {section!r} must be an object")
            out[section].update(copy.deepcopy(dict(body)))
    return out


def _as_int(section: str, key: str, value: Any, minimum: int = 1) -> int:
    if isinstance(value, bool) or not isinstance(value, (int, float)) or int(value) != value:
        raise ConfigError(f"{section}.{key} must be an integer, got {value!r}")
    if value < minimum:
        raise ConfigError(f"{section}.{key} must be >= {minimum}, got {value!r}")
    return int(value)


def _resolve_catalog(spec: Any, base_dir: Path | None) -> InstanceCatalog:
    if isinstance(spec, InstanceCatalog):
        return spec
    if spec is None:
        raise ConfigError("catalog: missing section (need 'path', 'builtin' or inline types)")
    if isinstance(spec, str):
        spec = {"path": spec}
    if isinstance(spec, Mapping) and "builtin" in spec:
        if spec["builtin"] != "ec2_default":
            raise ConfigError(f"catalog.builtin: unknown catalog {spec['builtin']!r}")
        cat = default_catalog()
        if spec.get("beta_over_alpha") is not None:
            cat = InstanceCatalog(cat.types, spec["beta_over_alpha"])
        return cat
    if isinstance(spec, Mapping) and "path" in spec:
        if not spec["path"]:
            raise ConfigError("catalog.path: empty path")
        path = Path(spec["path"])
        if not path.is_absolute() and base_dir is not None:
            path = base_dir / path
        if not path.exists():
            raise ConfigError(f"catalog.path: file not found: {path}")
        return load_catalog(path, spec.get("beta_over_alpha"))
    if isinstance(spec, (Mapping, list)) and (isinstance(spec, list) or "types" in spec):
        return catalog_from_dict(spec)
    raise ConfigError("catalog: missing 'path' (or 'builtin' / inline 'types')")


def _forecaster(section: str, spec: Any) -> Forecaster:
    try:
        return make_forecaster(spec)
    except ConfigError as exc:
        raise ConfigError(f"{section}.forecaster: {exc}") from None


def validate_and_build(
    config: Mapping[str, Any],
    catalog: InstanceCatalog | None = None,
    base_dir: str | Path | None = None,
) -> Controller:
    """Check the cross-loop consistency rules and wire a controller.

    ``catalog`` overrides the config's catalog section when given.
    """
    cfg = merge_defaults(config)
    pic, rsc, ric, sim = cfg["pic"], cfg["rsc"], cfg["ric"], cfg["sim"]

    lag = _as_int("pic", "lag", pic["lag"])
    p_look = _as_int("pic", "lookback", pic["lookback"])
    p_hor = _as_int("pic", "horizon", pic["horizon"])
    p_slide = _as_int("pic", "slide", pic["slide"])
    for key, val in (("lookback", p_look), ("horizon", p_hor), ("slide", p_slide)):
        if val % lag:
            raise ConfigError(f"pic.{key}={val} is not a multiple of pic.lag={lag}")
    billing = _as_int("sim", "billing_period", sim["billing_period"])
    if p_slide != billing:
        raise ConfigError(
            f"pic.slide={p_slide} must equal sim.billing_period={billing} (one PIC decision per billed period)"
        )
    if billing % lag:
        raise ConfigError(f"sim.billing_period={billing} is not a multiple of pic.lag={lag}")

    r_look = _as_int("rsc", "lookback", rsc["lookback"])
    r_hor = _as_int("rsc", "horizon", rsc["horizon"])
    r_slide = _as_int("rsc", "slide", rsc["slide"])
    if r_look >= p_hor:
        raise ConfigError(
            f"rsc.lookback={r_look} must be less than pic.horizon={p_hor} (seconds)"
        )
    eval_period = _as_int("ric", "eval_period", ric["eval_period"])
    if r_hor > eval_period:
        raise ConfigError(
            f"rsc.horizon={r_hor} must not exceed ric.eval_period={eval_period} (seconds)"
        )
    if r_look > p_look:
        raise ConfigError(f"rsc.lookback={r_look} must not exceed pic.lookback={p_look}")

    try:
        phi = pic["phi"] if isinstance(pic["phi"], Estimator) else Estimator.parse(pic["phi"])
    except ConfigError as exc:
        raise ConfigError(f"pic.phi: {exc}") from None

    pic_cfg = PicConfig(
        Window(p_look // lag, p_hor // lag, p_slide // lag), _forecaster("pic", pic["forecaster"]), phi
    )
    rsc_cfg = RscConfig(Window(r_look, r_hor, r_slide), _forecaster("rsc", rsc["forecaster"]))
    for name, c in (("pic", pic_cfg), ("rsc", rsc_cfg)):
        if c.window.lookback < c.forecaster.min_history:
            raise ConfigError(
                f"{name}.lookback gives {c.window.lookback} points but {name}.forecaster "
                f"({c.forecaster.name}) needs {c.forecaster.min_history}"
            )

    try:
        policy = RicPolicy(
            kappa=float(ric["kappa"]),
            n=_as_int("ric", "n", ric["n"]),
            eval_period=eval_period,
            cooldown=_as_int("ric", "cooldown", ric["cooldown"], minimum=0),
            min_crossings=_as_int("ric", "min_crossings", ric["min_crossings"]),
            offset=None if ric["offset"] is None else float(ric["offset"]),
            scale_in=bool(ric["scale_in"]),
            basis=ric["basis"],
            ownership=ric["ownership"],
        )
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"ric: {exc}") from None

    base = Path(base_dir) if base_dir is not None else None
    cat = catalog if catalog is not None else _resolve_catalog(cfg["catalog"], base)
    if rsc.get("beta_over_alpha") is not None:
        cat = InstanceCatalog(cat.types, rsc["beta_over_alpha"])

    initial = Allocation(sim.get("initial_allocation") or {})
    for name in initial:
        if name not in cat:
            raise ConfigError(f"sim.initial_allocation: unknown instance type {name!r}")
    options = SimOptions(
        boot_delay=_as_int("sim", "boot_delay", sim["boot_delay"], minimum=0),
        billing_period=billing,
        initial_allocation=initial,
    )
    return Controller(cat, pic_cfg, rsc_cfg, policy, options, lag, cfg)


def load_config(path: str | Path) -> dict[str, Any]:
    path = Path(path)
    try:
        return json.loads(path.read_text(encoding="utf-8"))
    except FileNotFoundError:
        raise ConfigError(f"config file not found: {path}") from None
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path}: invalid JSON ({exc})") from None
