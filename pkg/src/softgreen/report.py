"""
Table emitters for CSV and Markdown.

Numbers are printed with 6 significant digits (`%.6g`), integers as
integers, so identical inputs give byte-identical output in either format.
"""

from __future__ import annotations

import csv
import io
from dataclasses import dataclass
from typing import Optional, Sequence

from softgreen import calibration, energy_model
from softgreen.calibration import Dataset, ValidationReport
from softgreen.errors import ConfigurationError, DomainError
from softgreen.sim import DesignPoint, Progression

KINDS = ("T4", "T5", "T7", "T8", "T9", "T10", "Fig7", "T8-model", "T9-model", "HIST")
FORMATS = ("csv", "md")


def fmt(value) -> str:
    if isinstance(value, bool):
        return str(int(value))
    if isinstance(value, int):
        return str(value)
    if isinstance(value, float):
        if value.is_integer() and abs(value) < 1e6:
            return str(int(value))
        return format(value, ".6g")
    if value is None:
        return ""
    return str(value)


@dataclass(frozen=True)
class Table:
    title: str
    columns: tuple[str, ...]
    rows: tuple[tuple, ...]

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(self.columns)
        for row in self.rows:
            w.writerow([fmt(v) for v in row])
        return buf.getvalue()

    def to_markdown(self) -> str:
        lines = [
            "| " + " | ".join(self.columns) + " |",
            "|" + "|".join("---" for _ in self.columns) + "|",
        ]
        for row in self.rows:
            lines.append("| " + " | ".join(fmt(v) for v in row) + " |")
        return "\n".join(lines) + "\n"

    def render(self, format: str = "csv") -> str:
        if format == "csv":
            return self.to_csv()
        if format in ("md", "markdown"):
            return f"### {self.title}\n\n" + self.to_markdown()
        raise DomainError(f"unknown format {format!r}")


def make_table(title: str, records: Sequence[dict]) -> Table:
    if not records:
        return Table(title, (), ())
    columns = tuple(records[0])
    return Table(title, columns, tuple(tuple(r[c] for c in columns) for r in records))


def _efficiency_rows(ds: Dataset, table_id: str, key: str) -> list[dict]:
    return [
        {key: r.label, "time_s": r["time_s"], "p_dyn_w": r["p_dyn_w"],
         "mops_per_w": r["mops_per_w"], "source": "MEASURED"}
        for r in ds.table(table_id)
    ]


def fig7_records(ds: Dataset) -> list[dict]:
    """Speedup and efficiency of each thread count relative to one thread."""
    rows = ds.table("T9")
    one = ds.row("T9", "1")
    return [
        {"threads": int(r.label),
         "speedup": one["time_s"] / r["time_s"],
         "rel_eff": r["mops_per_w"] / one["mops_per_w"],
         "source": "MEASURED"}
        for r in rows
    ]


def _model_records(prog: Progression, ds: Dataset, which: str) -> list[dict]:
    out = []
    if which == "T8":
        for dp, res in prog.single.items():
            meas = ds.row("T8", calibration.T8_LABELS[dp.value])
            out.append({"design": dp.value, "time_s": res.time_s, "p_dyn_w": res.p_dyn_w,
                        "mops_per_w": res.mops_per_watt, "time_s_measured": meas["time_s"],
                        "mops_per_w_measured": meas["mops_per_w"],
                        "residual": res.time_s / meas["time_s"] - 1, "source": "MODELED"})
    else:
        for t, res in prog.threads.items():
            meas = ds.row("T9", str(t))
            out.append({"threads": t, "time_s": res.time_s, "p_dyn_w": res.p_dyn_w,
                        "mops_per_w": res.mops_per_watt, "time_s_measured": meas["time_s"],
                        "mops_per_w_measured": meas["mops_per_w"],
                        "residual": res.time_s / meas["time_s"] - 1, "source": "MODELED"})
    return out


def build_table(kind: str, ds: Optional[Dataset] = None,
                progression: Optional[Progression] = None) -> Table:
    ds = ds or calibration.load_dataset()
    if kind == "T4":
        recs = [{"processor": r["processor"], "process_node_nm": r["process_node_nm"],
                 "k_tec": r["k_tec"], "rel_k_tec": r["rel_k_tec"],
                 "k_tec_table": ds.cell("T4", r["processor"], "k_tec"),
                 "rel_k_tec_table": ds.cell("T4", r["processor"], "rel_k_tec")}
                for r in calibration.k_tec_table(ds)]
        return make_table("Effective capacitance x activity (K_tec)", recs)
    if kind == "T5":
        recs = [{"processor": r["processor"], "c_pn": r["c_pn"],
                 "rel_k_tec_norm": r["rel_k_tec_norm"],
                 "rel_k_tec_norm_table": ds.cell("T5", r["processor"], "rel_k_tec_norm")}
                for r in calibration.k_tec_table(ds)]
        return make_table("K_tec relative to Cortex-A8, process node removed", recs)
    if kind == "T7":
        return make_table("OpenMP on i7-5500U", _efficiency_rows(ds, "T7", "threads"))
    if kind == "T8":
        return make_table("Single-core soft-core designs", _efficiency_rows(ds, "T8", "design"))
    if kind == "T9":
        return make_table("8-core soft-core system", _efficiency_rows(ds, "T9", "threads"))
    if kind == "T10":
        return make_table("GPGPU", _efficiency_rows(ds, "T10", "device"))
    if kind == "Fig7":
        return make_table("Relative speedup and efficiency by thread count", fig7_records(ds))
    if kind in ("T8-model", "T9-model"):
        if progression is None:
            raise ConfigurationError(f"{kind} needs simulated results")
        title = "Modeled single-core designs" if kind == "T8-model" else "Modeled multi-core threads"
        return make_table(title, _model_records(progression, ds, kind[:2]))
    if kind == "HIST":
        recs = [{"machine": m.name, "year": m.year, "gflops_per_w": m.gflops_per_w,
                 "quoted_gflops_per_w": m.quoted_gflops_per_w,
                 "flag": "DISCREPANCY" if m.discrepancy else ""}
                for m in energy_model.HISTORICAL]
        return make_table("Historical efficiency", recs)
    raise DomainError(f"unknown table kind {kind!r}; choose from {', '.join(KINDS)}")


def emit_table(kind: str, format: str = "csv", ds: Optional[Dataset] = None,
               progression: Optional[Progression] = None) -> str:
    return build_table(kind, ds, progression).render(format)


def validation_table(report: ValidationReport) -> Table:
    recs = [{"check": c.name, "status": c.status, "measured": c.measured,
             "expected": c.expected, "deviation": c.deviation, "tolerance": c.tolerance,
             "note": c.note}
            for c in report.checks]
    if not recs:
        return Table(f"Dataset validation ({report.source})",
                     ("check", "status", "measured", "expected", "deviation", "tolerance", "note"), ())
    return make_table(f"Dataset validation ({report.source})", recs)


def speedup_summary(prog: Progression) -> dict[str, float]:
    """Cross-design time ratios of a modeled progression."""
    s = prog.single
    return {
        "baseline/custom_instruction": s[DesignPoint.BASELINE].time_s / s[DesignPoint.CUSTOM_INSTRUCTION].time_s,
        "custom_instruction/multi_unit": s[DesignPoint.CUSTOM_INSTRUCTION].time_s / s[DesignPoint.MULTI_UNIT].time_s,
        "multi_unit/pipelined": s[DesignPoint.MULTI_UNIT].time_s / s[DesignPoint.PIPELINED].time_s,
        "threads1/threads8": prog.threads[1].time_s / prog.threads[8].time_s,
    }
