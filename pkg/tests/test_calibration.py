import pytest

from softgreen import calibration
from softgreen.calibration import (
    EFFICIENCY_TABLES,
    Dataset,
    fit_linear_power,
    gpt_products,
    linear_power_model,
    lookup_power_model,
    parse_dataset,
    power_of,
    resource_model,
    resources_of,
    total_ops_constant,
    validate_dataset,
)
from softgreen.errors import DatasetIntegrityError, DomainError
from softgreen.sim import DesignPoint, reference_design_points


def test_rows_are_immutable(ds):
    row = ds.row("T9", "8")
    with pytest.raises(TypeError):
        row.values["time_s"] = 1.0
    with pytest.raises(LookupError):
        ds.row("T9", "9")
    with pytest.raises(LookupError):
        row["nope"]


def test_gpt_examples(ds):
    products = {(t, l): p for t, l, p in gpt_products(ds)}
    assert products[("T8", "Baseline")] == pytest.approx(9.668e9, rel=1e-3)
    assert products[("T9", "8")] == pytest.approx(9.667e9, rel=1e-3)
    assert products[("T10", "GK110-400")] == pytest.approx(9.668e9, rel=1e-3)
    assert len(products) == sum(len(ds.table(t)) for t in EFFICIENCY_TABLES)


def test_total_ops_constant(ds):
    mean = total_ops_constant(ds)
    for *_, p in gpt_products(ds):
        assert abs(p / mean - 1) <= 0.01
    with pytest.raises(DatasetIntegrityError):
        total_ops_constant(ds.scaled("T9", "p_dyn_w", 1.1))
    with pytest.raises(DatasetIntegrityError):
        total_ops_constant(Dataset((), "empty"))


def test_power_of_examples(ds):
    pts = reference_design_points()
    lookup, linear = lookup_power_model(ds), linear_power_model(ds)
    assert power_of(pts[DesignPoint.PIPELINED], lookup) == ds.cell("T8", "Pipelining", "p_dyn_w")
    assert power_of(pts[DesignPoint.MULTI_CORE], lookup) == ds.cell("T9", "8", "p_dyn_w")
    assert power_of(pts[DesignPoint.MULTI_CORE], linear) == pytest.approx(1.52, abs=0.005)
    assert power_of(pts[DesignPoint.MULTI_CORE], linear) == pytest.approx(
        ds.cell("T9", "8", "p_dyn_w"), rel=0.02)


def test_linear_fit_tracks_lookup(ds):
    linear = linear_power_model(ds)
    for r in ds.table("T9"):
        assert linear.base_w + linear.per_core_w * int(r.label) == pytest.approx(r["p_dyn_w"], rel=0.05)


def test_fit_linear_power_examples(ds):
    fit = fit_linear_power([(int(r.label), r["p_dyn_w"]) for r in ds.table("T9")])
    assert fit.base_w == pytest.approx(0.673, abs=1e-3)
    assert fit.per_core_w == pytest.approx(0.106, abs=1e-3)
    assert len(fit.residuals) == 8
    assert sum(fit.residuals) == pytest.approx(0, abs=1e-12)
    two = fit_linear_power([(1, 1), (2, 2)])
    assert (two.base_w, two.per_core_w) == pytest.approx((0, 1), abs=1e-12)
    flat = fit_linear_power([(1, 3), (2, 3), (5, 3)])
    assert flat.per_core_w == pytest.approx(0, abs=1e-12)
    assert flat(7) == pytest.approx(3)
    with pytest.raises(DomainError):
        fit_linear_power([(1, 1)])
    with pytest.raises(DomainError):
        fit_linear_power([(2, 1), (2, 3)])


def test_resources_examples(ds):
    model = resource_model(ds)
    assert resources_of(8, model).luts == 111_166
    assert resources_of(8, model).luts == pytest.approx(ds.cell("T6", "TOTAL", "luts"), rel=0.001)
    assert resources_of(1, model).luts == 20_047
    with pytest.raises(DomainError):
        resources_of(0, model)


def test_capacity_from_utilization(ds):
    cap = resource_model(ds).capacity
    total = ds.row("T6", "TOTAL")
    assert cap.luts == pytest.approx(total["luts"] / total["luts_util"])
    assert cap.luts == pytest.approx(427_654, rel=1e-5)


def test_custom_instruction_cost_scales_with_units(ds):
    model = resource_model(ds)
    base = resources_of(1, model)
    half = resources_of(1, model, units=5)
    assert base.luts - half.luts == pytest.approx(ds.cell("T6", "CI 0-7", "luts") / 2)
    assert resources_of(3, model, units=10) == resources_of(3, model)


def test_validate_embedded_dataset(ds):
    report = validate_dataset(ds)
    assert report.ok
    assert report.failures() == []
    statuses = {c.name: c.status for c in report.checks}
    # the printed FF total disagrees with its own components
    assert statuses.pop("T6 sum ffs") == "WARN"
    assert set(statuses.values()) == {"PASS"}


def test_validate_detects_perturbation(ds):
    report = validate_dataset(ds.scaled("T9", "p_dyn_w", 1.1))
    assert not report.ok
    names = {c.name for c in report.failures()}
    assert names and all(n.startswith("GPT") for n in names)


def test_validate_empty_dataset():
    report = validate_dataset(Dataset((), "empty"))
    assert report.checks == ()
    assert report.ok


def test_parse_dataset_errors():
    with pytest.raises(DomainError):
        parse_dataset("[T9]\ntime_s = 1\n")
    with pytest.raises(DomainError):
        parse_dataset("[T9.1]\ntime_s = fast\n")


def test_dataset_override_file(tmp_path, ds):
    path = tmp_path / "tables.ini"
    path.write_text("[T9.1]\ntime_s = 10\np_dyn_w = 1\nmops_per_w = 100\n")
    other = calibration.load_dataset(path)
    assert other.cell("T9", "1", "time_s") == 10
    assert total_ops_constant(other) == pytest.approx(1e9)
