import math

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from softgreen import calibration
from softgreen.energy_model import (
    HISTORICAL,
    ProcessorSpec,
    estimate_transistors,
    greenness,
    greenness_dynamic,
    greenness_full,
    k_tec,
    load_processor_specs,
    normalize_process_node,
    power_total,
    relative_k_tec,
    throughput,
)
from softgreen.errors import ConfigurationError, DomainError


def spec(**kw):
    base = dict(name="x", f_clk=1.0, opc=1.0, voltage=1.0, transistors=1,
                alpha=1.0, capacitance=1.0, i_leakage=0.0)
    base.update(kw)
    return ProcessorSpec(**base)


specs = st.builds(
    spec,
    f_clk=st.floats(1e3, 5e9),
    opc=st.floats(0.01, 16),
    voltage=st.floats(0.5, 2.0),
    transistors=st.floats(1e3, 1e10),
    alpha=st.floats(1e-3, 1.0),
    capacitance=st.floats(1e-18, 1e-12),
    i_leakage=st.floats(0, 1e-6),
)


# -- examples ---------------------------------------------------------------

def test_greenness_examples(ds):
    g = greenness(20.028e9, 1, 11.812)
    assert g == pytest.approx(ds.cell("T2", "i7-5500U", "g_dyn"), rel=0.01)
    assert greenness(1, 1, 1) == 1
    ops = calibration.total_ops_constant(ds)
    row = ds.row("T9", "8")
    assert greenness(ops, row["time_s"], row["p_dyn_w"]) == pytest.approx(row["mops_per_w"] * 1e6, rel=1e-3)


@pytest.mark.parametrize("bad", [(0, 1, 1), (1, 0, 1), (1, 1, -1)])
def test_greenness_rejects_non_positive(bad):
    with pytest.raises(DomainError):
        greenness(*bad)


def test_throughput_examples(ds):
    assert throughput(0.96, 160e6) == pytest.approx(153.6e6)
    assert throughput(1, 1) == 1
    assert throughput(6.91, 2.9e9) == pytest.approx(ds.cell("T2", "i7-5500U", "op_per_s"), rel=1e-3)
    with pytest.raises(DomainError):
        throughput(0, 1)


def test_power_total_examples():
    assert power_total(spec()) == 1
    assert power_total(spec(alpha=0.0, voltage=2, i_leakage=3)) == 6
    assert power_total(spec(transistors=2, alpha=0.5, f_clk=100, capacitance=0.01, voltage=2)) == pytest.approx(4)


def test_missing_switching_parameters():
    s = ProcessorSpec("bare", f_clk=1, opc=1, voltage=1, transistors=1)
    for fn in (power_total, greenness_full, greenness_dynamic):
        with pytest.raises(ConfigurationError):
            fn(s)


def test_greenness_full_and_dynamic_examples():
    assert greenness_full(spec(i_leakage=1)) == 0.5
    assert greenness_dynamic(spec()) == 1
    s = spec(opc=2, transistors=4, alpha=0.25, capacitance=1e-15, voltage=2)
    assert greenness_dynamic(s) == pytest.approx(5e14)


def test_k_tec_examples(ds):
    g_i7 = ds.cell("T2", "i7-5500U", "op_per_s") / ds.cell("T2", "i7-5500U", "p_dyn_w")
    assert k_tec(6.91, g_i7, 1.25, 106e6) == pytest.approx(ds.cell("T4", "i7-5500U", "k_tec"), rel=0.01)
    assert k_tec(1.47, 0.883e9 / 0.5, 1.35, 14e6) == pytest.approx(ds.cell("T4", "Cortex-A8", "k_tec"), rel=0.01)
    assert k_tec(0.96, 0.153e9 / 0.410, 0.9, 43e6) == pytest.approx(ds.cell("T4", "NIOS-II", "k_tec"), rel=0.01)
    with pytest.raises(DomainError):
        k_tec(1, 0, 1, 1)


def test_relative_k_tec(ds):
    pairs = [(p, ds.cell("T4", p, "k_tec")) for p in ("i7-5500U", "Cortex-A8", "NIOS-II")]
    rel = dict(relative_k_tec(pairs, "Cortex-A8"))
    assert rel["Cortex-A8"] == 1
    assert rel["i7-5500U"] == pytest.approx(ds.cell("T4", "i7-5500U", "rel_k_tec"), rel=0.01)
    assert rel["NIOS-II"] == pytest.approx(ds.cell("T4", "NIOS-II", "rel_k_tec"), rel=0.01)
    with pytest.raises(LookupError):
        relative_k_tec(pairs, "Z80")


def test_normalize_process_node(ds):
    assert normalize_process_node(0.75, 0.47) == pytest.approx(ds.cell("T5", "i7-5500U", "rel_k_tec_norm"), rel=0.01)
    assert normalize_process_node(1, 1) == 1
    assert normalize_process_node(2.25, 0.68) == pytest.approx(ds.cell("T5", "NIOS-II", "rel_k_tec_norm"), rel=0.01)
    with pytest.raises(DomainError):
        normalize_process_node(1, 0)


def test_estimate_transistors():
    assert estimate_transistors(0, 0) == 0
    assert estimate_transistors(7000, 1e6) == 11.0e6
    assert estimate_transistors(7000, 9.77e6) == pytest.approx(43e6, rel=0.10)
    assert estimate_transistors(1, 1, per_logic_cell=10, per_memory_bit=6) == 16
    with pytest.raises(DomainError):
        estimate_transistors(-1, 0)


def test_historical_machines():
    by_name = {m.name: m for m in HISTORICAL}
    for name in ("IBM System/360 91", "Intel 80486DX2"):
        m = by_name[name]
        assert not m.discrepancy
    assert by_name["IBM System/360 91"].gflops_per_w == pytest.approx(25.7e-9, rel=0.10)
    assert by_name["Intel 80486DX2"].gflops_per_w == pytest.approx(0.65e-3, rel=0.10)
    univac = by_name["UNIVAC I"]
    assert univac.discrepancy
    assert univac.gflops_per_w == pytest.approx(1.6e-13)
    assert univac.quoted_gflops_per_w / univac.gflops_per_w == pytest.approx(10)


def test_spec_validation():
    with pytest.raises(DomainError):
        spec(f_clk=0)
    with pytest.raises(DomainError):
        spec(alpha=1.5)
    with pytest.raises(DomainError):
        spec(i_leakage=-1)


def test_load_processor_specs(tmp_path):
    path = tmp_path / "cpus.ini"
    path.write_text(
        "[processor.toy]\nf_clk = 1e6\nopc = 2\nvoltage = 1\ntransistors = 10\n"
        "alpha = 0.5\ncapacitance = 1e-15\n\n[other]\nx = 1\n"
    )
    (s,) = load_processor_specs(path)
    assert s.name == "toy" and s.opc == 2 and s.alpha == 0.5
    path.write_text("[processor.bad]\nf_clk = 1\nbogus = 2\n")
    with pytest.raises(ConfigurationError):
        load_processor_specs(path)


# -- properties -------------------------------------------------------------

@settings(max_examples=200, deadline=None)
@given(specs)
def test_identity_greenness_times_power_is_throughput(s):
    lhs = greenness_full(s) * power_total(s)
    assert lhs == pytest.approx(throughput(s.opc, s.f_clk), rel=1e-9)


@settings(max_examples=100, deadline=None)
@given(specs)
def test_leakage_limit_converges_to_dynamic(s):
    g_dyn = greenness_dynamic(s)
    # leakage expressed relative to the dynamic current alpha*f*C*V
    i_dyn = s.alpha * s.f_clk * s.capacitance * s.voltage
    gaps = []
    for eps in (1e-3, 1e-6, 1e-9):
        g = greenness_full(spec(**{**s.__dict__, "i_leakage": eps * i_dyn}))
        assert g <= g_dyn * (1 + 1e-12)
        gaps.append(abs(g_dyn - g) / g_dyn)
    assert gaps[0] >= gaps[1] >= gaps[2]
    assert gaps[2] < 1e-8
    assert greenness_full(spec(**{**s.__dict__, "i_leakage": 0.0})) == pytest.approx(g_dyn, rel=1e-12)


@settings(max_examples=200, deadline=None)
@given(specs)
def test_k_tec_round_trip(s):
    got = k_tec(s.opc, greenness_dynamic(s), s.voltage, s.transistors)
    assert got == pytest.approx(s.alpha * s.capacitance, rel=1e-9)


@settings(max_examples=200, deadline=None)
@given(specs, st.floats(1.01, 100))
def test_greenness_full_increases_with_frequency(s, factor):
    # keep the static term visible next to the dynamic one
    i_dyn = s.alpha * s.f_clk * s.capacitance * s.voltage
    s = spec(**{**s.__dict__, "i_leakage": max(s.i_leakage, 1e-3 * i_dyn)})
    faster = spec(**{**s.__dict__, "f_clk": s.f_clk * factor})
    assert greenness_full(faster) > greenness_full(s)


@settings(max_examples=100, deadline=None)
@given(specs)
def test_dynamic_bounds_full(s):
    assert greenness_dynamic(s) >= greenness_full(s) * (1 - 1e-12)
    assert math.isfinite(greenness_full(s))
