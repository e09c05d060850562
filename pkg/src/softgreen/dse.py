"""Design-space sweeps over units, divider depth, cores and clock, with Pareto filtering."""

from __future__ import annotations

import configparser
import itertools
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, replace
from pathlib import Path
from typing import Iterable, Optional, Sequence

from softgreen import calibration
from softgreen.calibration import Dataset, ResourceModel, Resources, resources_of
from softgreen.errors import ConfigurationError, DomainError
from softgreen.sim import (
    DEFAULT_F_CLK,
    AcceleratorConfig,
    DesignPoint,
    IssueMode,
    Schedule,
    SimResult,
    SystemConfig,
    simulate,
)
from softgreen.workload import WorkloadProfile


@dataclass(frozen=True)
class FrequencyModel:
    """Clock reachable with a deeper divider pipeline.

    Linear from (ref_latency, f0) to (max_latency, max_ratio * f0), flat
    outside that interval. The default slope is a guess, not a measurement.
    """

    ref_latency: int = 5
    max_latency: int = 35
    max_ratio: float = 2.0

    def __post_init__(self):
        if self.max_latency <= self.ref_latency or self.max_ratio < 1:
            raise DomainError("frequency model must be non-decreasing")

    def __call__(self, latency: int, f0: float) -> float:
        frac = (latency - self.ref_latency) / (self.max_latency - self.ref_latency)
        return f0 * (1 + (self.max_ratio - 1) * min(max(frac, 0.0), 1.0))


@dataclass(frozen=True)
class SweepSpace:
    units: tuple[int, ...] = (10,)
    latencies: tuple[int, ...] = (5,)
    cores: tuple[int, ...] = (1, 8)
    f_clk: tuple[float, ...] = (DEFAULT_F_CLK,)
    freq_model: FrequencyModel = FrequencyModel()

    def __post_init__(self):
        for name in ("units", "latencies", "cores", "f_clk"):
            values = getattr(self, name)
            if not values:
                raise DomainError(f"sweep range {name!r} is empty")
            object.__setattr__(self, name, tuple(sorted(set(values))))
        if min(self.units) < 1 or min(self.latencies) < 1 or min(self.cores) < 1:
            raise DomainError("units, latencies and cores must be >= 1")

    def lattice(self) -> Iterable[tuple[int, int, int, float]]:
        return itertools.product(self.units, self.latencies, self.cores, self.f_clk)

    def __len__(self) -> int:
        return len(self.units) * len(self.latencies) * len(self.cores) * len(self.f_clk)


@dataclass(frozen=True)
class DesignPointResult:
    config: SystemConfig
    sim: SimResult
    resources: Resources
    feasible: bool

    def row(self) -> dict:
        accel = self.config.accel
        return {
            "design": self.config.design_point.value,
            "units": accel.units if accel else 0,
            "latency": accel.divider_latency if accel else 0,
            "cores": self.config.cores,
            "f_clk_hz": self.config.f_clk,
            "time_s": self.sim.time_s,
            "p_dyn_w": self.sim.p_dyn_w,
            "mops_per_w": self.sim.mops_per_watt,
            **{k: v for k, v in self.resources.as_dict().items()},
            "feasible": int(self.feasible),
            "power": "EXTRAPOLATED" if self.sim.power_extrapolated else "MEASURED",
        }


def _is_measured(sys: SystemConfig) -> bool:
    """True for the exact configurations whose power was measured."""
    if sys.f_clk != DEFAULT_F_CLK:
        return False
    a, ref = sys.accel, AcceleratorConfig()
    if a is None:
        return True
    units = 1 if sys.design_point is DesignPoint.CUSTOM_INSTRUCTION else ref.units
    return (a.divider_latency, a.control_overhead, a.per_call_setup, a.units) == (
        ref.divider_latency, ref.control_overhead, ref.per_call_setup, units)


def power_for(sys: SystemConfig, ds: Optional[Dataset] = None) -> tuple[float, bool]:
    """Watts for `sys` and whether they are extrapolated.

    Measured configurations read the lookup table; anything else uses the
    linear per-core fit, scaled by clock frequency as dynamic power is.
    """
    ds = ds or calibration.load_dataset()
    if _is_measured(sys):
        try:
            return calibration.power_of(sys, calibration.lookup_power_model(ds)), False
        except LookupError:
            pass
    linear = calibration.linear_power_model(ds)
    return calibration.power_of(sys, linear) * sys.f_clk / DEFAULT_F_CLK, True


def evaluate(
    sys: SystemConfig,
    profile: WorkloadProfile,
    model: ResourceModel,
    ds: Optional[Dataset] = None,
) -> DesignPointResult:
    watts, extrapolated = power_for(sys, ds)
    sim = simulate(profile, sys, watts, power_extrapolated=extrapolated)
    units = sys.accel.units if sys.accel else None
    res = resources_of(sys.cores, model, units=units)
    return DesignPointResult(sys, sim, res, res.fits(model.capacity))


def lattice_configs(
    space: SweepSpace, workload_scale: float, schedule: Schedule = Schedule.DYNAMIC
) -> list[SystemConfig]:
    configs = []
    for units, latency, cores, f0 in space.lattice():
        accel = AcceleratorConfig(divider_latency=latency, units=units, issue_mode=IssueMode.PIPELINED)
        design = DesignPoint.PIPELINED if cores == 1 else DesignPoint.MULTI_CORE
        configs.append(SystemConfig(
            design, cores=cores, f_clk=space.freq_model(latency, f0), accel=accel,
            schedule=schedule, workload_scale=workload_scale,
        ))
    return configs


def sweep(
    space: SweepSpace | Sequence[SystemConfig],
    profile: WorkloadProfile,
    workload_scale: Optional[float] = None,
    ds: Optional[Dataset] = None,
    workers: int = 1,
    schedule: Schedule = Schedule.DYNAMIC,
) -> list[DesignPointResult]:
    """Evaluate every design point of `space`, in lattice order.

    `space` is either a lattice or an explicit list of configs. With a
    lattice, `workload_scale` is required and applied to every point.
    """
    ds = ds or calibration.load_dataset()
    if isinstance(space, SweepSpace):
        if workload_scale is None:
            raise ConfigurationError("a lattice sweep needs a calibrated workload_scale")
        configs = lattice_configs(space, workload_scale, schedule)
    else:
        configs = list(space)
        if workload_scale is not None:
            configs = [replace(c, workload_scale=workload_scale) for c in configs]
    model = calibration.resource_model(ds)
    with ThreadPoolExecutor(max_workers=max(1, workers)) as pool:
        return list(pool.map(lambda c: evaluate(c, profile, model, ds), configs))


def dominates(a: DesignPointResult, b: DesignPointResult) -> bool:
    ge = a.sim.mops_per_watt >= b.sim.mops_per_watt and a.sim.time_s <= b.sim.time_s
    gt = a.sim.mops_per_watt > b.sim.mops_per_watt or a.sim.time_s < b.sim.time_s
    return ge and gt


def pareto_front(results: Sequence[DesignPointResult]) -> list[DesignPointResult]:
    """Feasible results not dominated in (efficiency up, time down); input order kept."""
    feasible = [r for r in results if r.feasible]
    return [r for r in feasible if not any(dominates(o, r) for o in feasible if o is not r)]


def max_cores_fit(model: ResourceModel, units: Optional[int] = None) -> int:
    """Largest core count whose total resources fit the device (0 if none)."""
    one = resources_of(1, model, units)
    step = resources_of(2, model, units) + one * -1
    growing = [k for k, inc in step.as_dict().items() if inc > 0]
    if not growing:
        raise DomainError("per-core cost is zero in every resource; no upper bound")
    fixed = one + step * -1
    cap = model.capacity.as_dict()
    best = min(
        math.floor((cap[k] - getattr(fixed, k)) / getattr(step, k)) for k in growing
    )
    best = max(best, 0)
    # Guard against rounding at the boundary.
    while best > 0 and not resources_of(best, model, units).fits(model.capacity):
        best -= 1
    while resources_of(best + 1, model, units).fits(model.capacity):
        best += 1
    return best


def load_sweep_space(path: str | Path) -> SweepSpace:
    """Read a `[sweep]` section: comma-separated units, latency, cores, f_clk."""
    parser = configparser.ConfigParser()
    with open(path, encoding="utf-8") as fh:
        parser.read_file(fh)
    if "sweep" not in parser:
        raise ConfigurationError(f"{path}: no [sweep] section")
    sec = parser["sweep"]

    def ints(key: str, default: tuple) -> tuple:
        raw = sec.get(key)
        return default if raw is None else tuple(int(float(x)) for x in raw.split(","))

    def floats(key: str, default: tuple) -> tuple:
        raw = sec.get(key)
        return default if raw is None else tuple(float(x) for x in raw.split(","))

    known = {"units", "latency", "cores", "f_clk", "freq_ref_latency",
             "freq_max_latency", "freq_max_ratio"}
    unknown = set(sec) - known
    if unknown:
        raise ConfigurationError(f"{path}: unknown [sweep] keys {sorted(unknown)}")
    fm = FrequencyModel(
        ref_latency=sec.getint("freq_ref_latency", 5),
        max_latency=sec.getint("freq_max_latency", 35),
        max_ratio=sec.getfloat("freq_max_ratio", 2.0),
    )
    return SweepSpace(
        units=ints("units", (10,)),
        latencies=ints("latency", (5,)),
        cores=ints("cores", (1, 8)),
        f_clk=floats("f_clk", (DEFAULT_F_CLK,)),
        freq_model=fm,
    )
