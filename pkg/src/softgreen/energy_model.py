"""
Greenness (operations per joule) of processors.

All quantities are SI: Hz, W, F, V, A. Display conversions (GIPS/W,
MOPS/W, MTr) belong to the report layer.

    G     = (Op / T) / P                     ops per joule
    Op/T  = OPC * f_clk
    P     = N*alpha*f_clk*C*V^2 + N*V*I_leak
    G     = OPC / (N * (alpha*C*V^2 + V*I_leak/f_clk))
    G_dyn = OPC / (N*alpha*C*V^2)
    K_tec = OPC / (G_dyn * V^2 * N)          the inferred alpha*C product
"""

from __future__ import annotations

import configparser
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Optional

from softgreen.errors import ConfigurationError, DomainError

TRANSISTORS_PER_LOGIC_CELL = 1000
TRANSISTORS_PER_MEMORY_BIT = 4


def _require_positive(**values: float) -> None:
    for name, value in values.items():
        if not value > 0:
            raise DomainError(f"{name} must be > 0, got {value!r}")


@dataclass(frozen=True)
class ProcessorSpec:
    name: str
    f_clk: float
    opc: float
    voltage: float
    transistors: float
    process_node_nm: Optional[float] = None
    c_pn: float = 1.0
    alpha: Optional[float] = None
    capacitance: Optional[float] = None
    i_leakage: float = 0.0

    def __post_init__(self):
        _require_positive(f_clk=self.f_clk, opc=self.opc, voltage=self.voltage, c_pn=self.c_pn)
        if self.transistors < 1:
            raise DomainError(f"transistors must be >= 1, got {self.transistors!r}")
        if self.alpha is not None and not 0 <= self.alpha <= 1:
            raise DomainError(f"alpha must lie in [0, 1], got {self.alpha!r}")
        if self.capacitance is not None and not self.capacitance > 0:
            raise DomainError(f"capacitance must be > 0, got {self.capacitance!r}")
        if self.i_leakage < 0:
            raise DomainError(f"i_leakage must be >= 0, got {self.i_leakage!r}")

    def _switching(self) -> tuple[float, float]:
        if self.alpha is None or self.capacitance is None:
            raise ConfigurationError(
                f"processor {self.name!r} needs alpha and capacitance for a power estimate"
            )
        return self.alpha, self.capacitance


@dataclass(frozen=True)
class MeasuredRun:
    processor: ProcessorSpec
    ops_executed: float
    time_s: float
    p_dyn_w: float
    threads: int = 1

    def __post_init__(self):
        _require_positive(
            ops_executed=self.ops_executed, time_s=self.time_s, p_dyn_w=self.p_dyn_w
        )

    @property
    def greenness(self) -> float:
        return greenness(self.ops_executed, self.time_s, self.p_dyn_w)


def greenness(ops: float, time_s: float, power_w: float) -> float:
    """Operations per joule for `ops` operations run in `time_s` at `power_w`."""
    _require_positive(ops=ops, time_s=time_s, power_w=power_w)
    return ops / time_s / power_w


def throughput(opc: float, f_clk: float) -> float:
    _require_positive(opc=opc, f_clk=f_clk)
    return opc * f_clk


def power_total(spec: ProcessorSpec) -> float:
    """Dynamic plus static power of `spec` in watts."""
    alpha, cap = spec._switching()
    n, v = spec.transistors, spec.voltage
    return n * alpha * spec.f_clk * cap * v * v + n * v * spec.i_leakage


def greenness_full(spec: ProcessorSpec) -> float:
    alpha, cap = spec._switching()
    v = spec.voltage
    joules_per_cycle = spec.transistors * (alpha * cap * v * v + v * spec.i_leakage / spec.f_clk)
    if joules_per_cycle <= 0:
        raise DomainError(f"processor {spec.name!r} draws no power")
    return spec.opc / joules_per_cycle


def greenness_dynamic(spec: ProcessorSpec) -> float:
    alpha, cap = spec._switching()
    if alpha == 0:
        raise DomainError(f"processor {spec.name!r} has no switching activity")
    return spec.opc / (spec.transistors * alpha * cap * spec.voltage ** 2)


def k_tec(opc: float, g_dyn: float, voltage: float, transistors: float) -> float:
    """Back out the alpha*C product (farads) from a measured dynamic greenness."""
    _require_positive(opc=opc, g_dyn=g_dyn, voltage=voltage, transistors=transistors)
    return opc / (g_dyn * voltage ** 2 * transistors)


def relative_k_tec(
    specs: Iterable[tuple[str, float]], reference_name: str
) -> list[tuple[str, float]]:
    specs = list(specs)
    table = dict(specs)
    if reference_name not in table:
        raise LookupError(f"reference {reference_name!r} not among {sorted(table)}")
    ref = table[reference_name]
    return [(name, value / ref) for name, value in specs]


def normalize_process_node(rel_k_tec: float, c_pn: float) -> float:
    """Remove the capacitance scaling attributable to the process node."""
    _require_positive(c_pn=c_pn)
    return rel_k_tec / c_pn


def estimate_transistors(
    logic_cells: float,
    memory_bits: float,
    per_logic_cell: float = TRANSISTORS_PER_LOGIC_CELL,
    per_memory_bit: float = TRANSISTORS_PER_MEMORY_BIT,
) -> float:
    if logic_cells < 0 or memory_bits < 0:
        raise DomainError("logic_cells and memory_bits must be >= 0")
    return logic_cells * per_logic_cell + memory_bits * per_memory_bit


@dataclass(frozen=True)
class HistoricalMachine:
    """An early computer's efficiency, with the figure originally quoted for it."""

    name: str
    year: int
    flops: float
    power_w: float
    quoted_gflops_per_w: float
    discrepancy: bool = False

    @property
    def gflops_per_w(self) -> float:
        return greenness(self.flops, 1.0, self.power_w) / 1e9


# UNIVAC I: 2 KIPS with an assumed 100 integer instructions per flop.
# The quoted 1.6e-12 is ten times the arithmetic result, hence the flag.
HISTORICAL = (
    HistoricalMachine("UNIVAC I", 1951, 2000 / 100, 125e3, 1.6e-12, discrepancy=True),
    HistoricalMachine("IBM System/360 91", 1965, 1.9e6, 74e3, 25.7e-9),
    HistoricalMachine("Intel 80486DX2", 1996, 2.6e6, 4.0, 0.6e-3),
)


_SPEC_FIELDS = {
    "f_clk": float,
    "opc": float,
    "voltage": float,
    "transistors": float,
    "process_node_nm": float,
    "c_pn": float,
    "alpha": float,
    "capacitance": float,
    "i_leakage": float,
}


def load_processor_specs(path: str | Path) -> list[ProcessorSpec]:
    """Read `[processor.<name>]` sections from an INI-style file."""
    parser = configparser.ConfigParser()
    with open(path, encoding="utf-8") as fh:
        parser.read_file(fh)
    specs = []
    for section in parser.sections():
        if not section.startswith("processor."):
            continue
        kwargs = {}
        for key, raw in parser[section].items():
            if key not in _SPEC_FIELDS:
                raise ConfigurationError(f"[{section}] unknown key {key!r}")
            kwargs[key] = _SPEC_FIELDS[key](raw)
        specs.append(ProcessorSpec(name=section.split(".", 1)[1], **kwargs))
    return specs
