"""
Functional and cycle-approximate models of the prime-test accelerator.

Design points, in the order they were built:

    baseline            software loop on the soft core
    custom_instruction  one Iter unit (divider + increment + bound check)
    multi_unit          K units, bound checked once per block of K divisors
    pipelined           a new block enters the divider pipeline every cycle
    multi_core          the pipelined core replicated, candidates shared out

Per accelerator call (one candidate reaching the loop, `it` iterations,
L = divider latency, c = control overhead, s = call setup, K = units):

    sequential issue    ceil(it / K) * (L + c) + s
    pipelined issue     ceil(it / K) + (L + c) + s

The baseline costs `baseline_cycles_per_iteration` per iteration. A single
fitted `workload_scale` maps model cycles to wall time; the ratios between
design points are what the model predicts.
"""

from __future__ import annotations

import enum
import heapq
from collections import deque
from dataclasses import dataclass, field, replace
from typing import Mapping, Optional, Union

import numpy as np

from softgreen import calibration
from softgreen.calibration import PowerModel
from softgreen.errors import ConfigurationError, DomainError
from softgreen.workload import PartitionScheme, WorkloadProfile, partition_range


class DesignPoint(enum.Enum):
    BASELINE = "baseline"
    CUSTOM_INSTRUCTION = "custom_instruction"
    MULTI_UNIT = "multi_unit"
    PIPELINED = "pipelined"
    MULTI_CORE = "multi_core"


class IssueMode(enum.Enum):
    SEQUENTIAL = "sequential"
    PIPELINED = "pipelined"


class Schedule(enum.Enum):
    """How a multi-core run shares candidates between cores."""

    BLOCK = "block"
    INTERLEAVED = "interleaved"
    DYNAMIC = "dynamic"  # next candidate goes to the first idle core


DEFAULT_F_CLK = 160e6


@dataclass(frozen=True)
class AcceleratorConfig:
    divider_latency: int = 5
    control_overhead: int = 1
    units: int = 10
    issue_mode: IssueMode = IssueMode.SEQUENTIAL
    block_size: Optional[int] = None
    per_call_setup: int = 2
    i_start: int = 2
    # Drop divisibility flags from lanes past the software loop guard.
    mask_overshoot: bool = True

    def __post_init__(self):
        if self.block_size is None:
            object.__setattr__(self, "block_size", self.units)
        if self.divider_latency < 1 or self.units < 1 or self.block_size < 1:
            raise DomainError("divider_latency, units and block_size must be >= 1")
        if self.control_overhead < 0 or self.per_call_setup < 0:
            raise DomainError("control_overhead and per_call_setup must be >= 0")
        if self.i_start < 2:
            raise DomainError("i_start must be >= 2")

    @property
    def rounds_per_block(self) -> int:
        return -(-self.block_size // self.units)


@dataclass(frozen=True)
class SystemConfig:
    design_point: DesignPoint
    cores: int = 1
    f_clk: float = DEFAULT_F_CLK
    accel: Optional[AcceleratorConfig] = None
    baseline_cycles_per_iteration: float = 45
    schedule: Schedule = Schedule.DYNAMIC
    workload_scale: float = 1.0

    def __post_init__(self):
        dp = self.design_point
        if self.cores < 1:
            raise DomainError(f"cores must be >= 1, got {self.cores}")
        if self.f_clk <= 0 or self.workload_scale <= 0:
            raise DomainError("f_clk and workload_scale must be > 0")
        if dp is not DesignPoint.MULTI_CORE and self.cores != 1:
            raise DomainError(f"{dp.value} is a single-core design")
        if dp is DesignPoint.BASELINE:
            if self.accel is not None:
                raise ConfigurationError("baseline has no accelerator")
            if self.baseline_cycles_per_iteration <= 0:
                raise DomainError("baseline_cycles_per_iteration must be > 0")
            return
        if self.accel is None:
            raise ConfigurationError(f"{dp.value} needs an accelerator config")
        want = (IssueMode.PIPELINED if dp in (DesignPoint.PIPELINED, DesignPoint.MULTI_CORE)
                else IssueMode.SEQUENTIAL)
        if self.accel.issue_mode is not want:
            raise ConfigurationError(f"{dp.value} uses {want.value} issue")
        if dp is DesignPoint.CUSTOM_INSTRUCTION and self.accel.units != 1:
            raise ConfigurationError("custom_instruction has a single unit")


def reference_design_points(
    f_clk: float = DEFAULT_F_CLK,
    units: int = 10,
    latency: int = 5,
    cores: int = 8,
    **accel_overrides,
) -> dict[DesignPoint, SystemConfig]:
    """The five systems of the design progression, with default constants."""
    seq = AcceleratorConfig(divider_latency=latency, units=units, **accel_overrides)
    single = replace(seq, units=1, block_size=1)
    pipe = replace(seq, issue_mode=IssueMode.PIPELINED)
    return {
        DesignPoint.BASELINE: SystemConfig(DesignPoint.BASELINE, f_clk=f_clk),
        DesignPoint.CUSTOM_INSTRUCTION: SystemConfig(DesignPoint.CUSTOM_INSTRUCTION, f_clk=f_clk, accel=single),
        DesignPoint.MULTI_UNIT: SystemConfig(DesignPoint.MULTI_UNIT, f_clk=f_clk, accel=seq),
        DesignPoint.PIPELINED: SystemConfig(DesignPoint.PIPELINED, f_clk=f_clk, accel=pipe),
        DesignPoint.MULTI_CORE: SystemConfig(DesignPoint.MULTI_CORE, cores=cores, f_clk=f_clk, accel=pipe),
    }


# -- functional model -----------------------------------------------------------------

@dataclass(frozen=True)
class DatapathTrace:
    verdict: bool
    blocks: int  # blocks issued to the units
    cycles: int  # datapath cycles, excluding call setup


def _lane_hits(v: int, lo: int, width: int, mask_overshoot: bool) -> bool:
    for i in range(lo, lo + width):
        if mask_overshoot and i * i >= v:
            break
        if i < v and v % i == 0:
            return True
    return False


def datapath_trace(v: int, accel: AcceleratorConfig) -> DatapathTrace:
    """Run one candidate through the software pre-checks and the accelerator.

    Values 0..3 and even values never reach the accelerator. Inside it, a
    counter starts at `i_start`; each block hands `block_size` consecutive
    divisors to the units, and the bound `i*i < v` is tested once, on the
    first divisor of the block. Divisibility flags are OR-reduced.
    """
    if v < 0:
        raise DomainError(f"v must be >= 0, got {v}")
    if v <= 3:
        return DatapathTrace(True, 0, 0)
    if v % 2 == 0:
        return DatapathTrace(False, 0, 0)

    b, rounds = accel.block_size, accel.rounds_per_block
    lat = accel.divider_latency + accel.control_overhead
    i = accel.i_start

    if accel.issue_mode is IssueMode.SEQUENTIAL:
        blocks = 0
        while i * i < v:
            blocks += 1
            if _lane_hits(v, i, b, accel.mask_overshoot):
                return DatapathTrace(False, blocks, blocks * rounds * lat)
            i += b
        return DatapathTrace(True, blocks, blocks * rounds * lat)

    # Pipelined issue: a block enters the dividers every `rounds` cycles and
    # its OR-ed flag comes back `rounds + lat - 1` cycles later. Issue stops
    # at the bound; the call ends on the first returning hit or when drained.
    in_flight: deque[tuple[int, bool]] = deque()
    cycle = next_issue = blocks = 0
    issuing = True
    while True:
        while in_flight and in_flight[0][0] <= cycle:
            if in_flight.popleft()[1]:
                return DatapathTrace(False, blocks, cycle)
        if issuing and cycle >= next_issue:
            if i * i < v:
                blocks += 1
                in_flight.append((cycle + rounds + lat - 1, _lane_hits(v, i, b, accel.mask_overshoot)))
                i += b
                next_issue = cycle + rounds
            else:
                issuing = False
        if not issuing and not in_flight:
            return DatapathTrace(True, blocks, cycle)
        cycle += 1


def check_candidate_functional(v: int, accel: AcceleratorConfig) -> bool:
    return datapath_trace(v, accel).verdict


# -- timing model ---------------------------------------------------------------------

def call_cycles(iterations: np.ndarray, accel: AcceleratorConfig) -> np.ndarray:
    """Cycles spent in each accelerator call, given its loop iteration count."""
    it = np.asarray(iterations, dtype=np.int64)
    issue = -(-it // accel.block_size) * accel.rounds_per_block
    lat = accel.divider_latency + accel.control_overhead
    if accel.issue_mode is IssueMode.SEQUENTIAL:
        return issue * lat + accel.per_call_setup
    return issue + lat + accel.per_call_setup


def _dynamic_makespan(costs: np.ndarray, cores: int) -> int:
    if cores == 1 or costs.size == 0:
        return int(costs.sum())
    loads = [0] * cores
    for c in costs.tolist():
        heapq.heapreplace(loads, loads[0] + c)
    return max(loads)


def core_loads(profile: WorkloadProfile, sys: SystemConfig) -> list[int]:
    """Cycles assigned to each core of a multi-core system (static schedules)."""
    per_candidate = np.zeros(profile.candidates, dtype=np.int64)
    per_candidate[profile.invokes] = call_cycles(profile.calls, sys.accel)
    scheme = PartitionScheme(sys.schedule.value)
    start = profile.range_start
    loads = []
    for part in partition_range(start + profile.candidates, sys.cores, scheme, start):
        loads.append(int(per_candidate[part.start - start:part.stop - start:part.step].sum()))
    return loads


def model_cycles(profile: WorkloadProfile, sys: SystemConfig) -> int:
    """Unscaled cycle count of one benchmark run on `sys`."""
    dp = sys.design_point
    if dp is DesignPoint.BASELINE:
        return int(round(profile.total_iterations * sys.baseline_cycles_per_iteration))
    if dp is not DesignPoint.MULTI_CORE or sys.cores == 1:
        return int(call_cycles(profile.calls, sys.accel).sum())
    if sys.schedule is Schedule.DYNAMIC:
        return _dynamic_makespan(call_cycles(profile.calls, sys.accel), sys.cores)
    return max(core_loads(profile, sys))


@dataclass(frozen=True)
class SimResult:
    design_point: DesignPoint
    cores: int
    cycles: int
    time_s: float
    p_dyn_w: float
    mops_per_watt: float
    speedup_vs: Mapping[str, float] = field(default_factory=dict)
    power_extrapolated: bool = False

    def row(self) -> dict:
        return {
            "design": self.design_point.value,
            "threads": self.cores,
            "time_s": self.time_s,
            "p_dyn_w": self.p_dyn_w,
            "mops_per_w": self.mops_per_watt,
            "cycles": self.cycles,
            "source": "MODELED" + ("/EXTRAPOLATED" if self.power_extrapolated else ""),
        }


def simulate(
    profile: WorkloadProfile,
    sys: SystemConfig,
    power: Union[PowerModel, float, None] = None,
    references: Optional[Mapping[str, SimResult]] = None,
    power_extrapolated: bool = False,
) -> SimResult:
    """Time, power and efficiency of one benchmark run.

    `power` is a power model (default: the measured lookup table) or a
    wattage. `references` name results to report speedups against.
    """
    cycles = model_cycles(profile, sys)
    if cycles <= 0:
        raise DomainError("workload produces no cycles on this design")
    time_s = cycles * sys.workload_scale / sys.f_clk
    if power is None:
        power = calibration.lookup_power_model()
    watts = power if isinstance(power, (int, float)) else calibration.power_of(sys, power)
    speedups = {name: ref.time_s / time_s for name, ref in (references or {}).items()}
    return SimResult(
        design_point=sys.design_point,
        cores=sys.cores,
        cycles=cycles,
        time_s=time_s,
        p_dyn_w=float(watts),
        mops_per_watt=profile.total_ops / time_s / watts / 1e6,
        speedup_vs=speedups,
        power_extrapolated=power_extrapolated,
    )


def calibrate_scale(profile: WorkloadProfile, sys: SystemConfig, anchor_seconds: float) -> float:
    """The workload_scale that makes `sys` run in exactly `anchor_seconds`."""
    if anchor_seconds <= 0:
        raise DomainError("anchor time must be > 0")
    cycles = model_cycles(profile, sys)
    if cycles <= 0:
        raise DomainError("anchor design produces no cycles")
    return anchor_seconds * sys.f_clk / cycles


def anchor_seconds(design: DesignPoint, ds: Optional[calibration.Dataset] = None) -> float:
    """Measured run time of a single-core design point."""
    ds = ds or calibration.load_dataset()
    if design is DesignPoint.MULTI_CORE:
        raise DomainError("anchor on a single-core design")
    return ds.cell("T8", calibration.T8_LABELS[design.value], "time_s")


@dataclass(frozen=True)
class Progression:
    """Modeled counterparts of the single-core and multi-thread measurements."""

    workload_scale: float
    single: dict[DesignPoint, SimResult]
    threads: dict[int, SimResult]


def design_progression(
    profile: WorkloadProfile,
    anchor: DesignPoint = DesignPoint.PIPELINED,
    f_clk: float = DEFAULT_F_CLK,
    max_threads: int = 8,
    schedule: Schedule = Schedule.DYNAMIC,
    ds: Optional[calibration.Dataset] = None,
    **accel_overrides,
) -> Progression:
    ds = ds or calibration.load_dataset()
    points = reference_design_points(f_clk, **accel_overrides)
    scale = calibrate_scale(profile, points[anchor], anchor_seconds(anchor, ds))
    power = calibration.lookup_power_model(ds)

    single: dict[DesignPoint, SimResult] = {}
    for dp in (DesignPoint.BASELINE, DesignPoint.CUSTOM_INSTRUCTION,
               DesignPoint.MULTI_UNIT, DesignPoint.PIPELINED):
        sys = replace(points[dp], workload_scale=scale)
        refs = {k.value: v for k, v in single.items()}
        single[dp] = simulate(profile, sys, power, refs)

    base_mc = replace(points[DesignPoint.MULTI_CORE], workload_scale=scale, schedule=schedule)
    threads: dict[int, SimResult] = {}
    for t in range(1, max_threads + 1):
        refs = {"threads=1": threads[1]} if t > 1 else {}
        refs[DesignPoint.PIPELINED.value] = single[DesignPoint.PIPELINED]
        threads[t] = simulate(profile, replace(base_mc, cores=t), power, refs)
    return Progression(scale, single, threads)
