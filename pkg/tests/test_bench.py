"""Benchmark harness + shipped problem corpus.

The corpus checks run every document through schema validation and, for
problems carrying an explicit reference, probe that reference against its own
PDE — a wrong sign or coefficient in a document shows up here, not as a
mysteriously failing solver.
"""

import csv
import io
import json
from pathlib import Path

import pytest

from pdepilot import bench
from pdepilot.bench import BenchResult
from pdepilot.gateway import set_transport_hook
from pdepilot.metrics import analytic_residual
from pdepilot.problem import ReferenceClass, parse_spec, validate_spec

CORPUS = bench.default_corpus()
SPEC_PATHS = sorted(CORPUS.glob("*.spec.json"))
SPEC_NAMES = [p.name[: -len(".spec.json")] for p in SPEC_PATHS]


@pytest.fixture(autouse=True)
def _no_network():
    def refuse(url, payload, headers):
        raise AssertionError(f"network call attempted: {url}")

    set_transport_hook(refuse)
    yield
    set_transport_hook(None)


# -- shipped corpus -------------------------------------------------------------


def test_corpus_is_nonempty_and_paired():
    assert len(SPEC_PATHS) >= 20
    for path in SPEC_PATHS:
        expect = path.with_name(path.name.replace(".spec.", ".expect."))
        assert expect.exists(), f"{path.name} has no expectation file"


@pytest.mark.parametrize("name", SPEC_NAMES)
def test_corpus_document_is_schema_clean(name):
    doc = json.loads((CORPUS / f"{name}.spec.json").read_text())
    assert doc["name"] == name
    spec = parse_spec(doc)
    fatal = [f for f in validate_spec(spec) if f.fatal]
    assert not fatal, [f.message for f in fatal]


@pytest.mark.parametrize("name", SPEC_NAMES)
def test_corpus_expectation_is_well_formed(name):
    expect = json.loads((CORPUS / f"{name}.expect.json").read_text())
    assert isinstance(expect["kernel_available"], bool)
    assert expect["family"]
    if expect["kernel_available"]:
        assert expect["metric"] in {"e_l2", "e_impl", "e_res"}
        assert 0 < expect["target_error"] < 1
        assert expect["tolerance"] >= 1


_EXPLICIT = [
    name for name in SPEC_NAMES
    if json.loads((CORPUS / f"{name}.spec.json").read_text())
    .get("reference", {}).get("class") == "explicit_analytic"
]


@pytest.mark.parametrize("name", _EXPLICIT)
def test_explicit_reference_satisfies_its_own_pde(name):
    spec = parse_spec(json.loads((CORPUS / f"{name}.spec.json").read_text()))
    assert spec.reference.kind is ReferenceClass.EXPLICIT_ANALYTIC
    residual = analytic_residual(spec, bench.consistency_grid(spec))
    assert residual <= 1e-8, f"{name}: reference residual {residual:.3e}"


# -- mini corpus end to end -------------------------------------------------------

MINI_ADVECTION = {
    "name": "mini_advection1d",
    "domain": {"dim": 1, "bounds": [[0.0, 1.0]], "time_horizon": 0.25},
    "pde": {
        "unknowns": ["u"],
        "terms": [
            {"coeff": "1", "derivs": ["t"]},
            {"coeff": "0.3", "derivs": ["x"]},
        ],
        "source": "0",
        "type_class": "hyperbolic",
        "linearity": "linear",
    },
    "boundary": [{"axis": 0, "side": s, "kind": "periodic"} for s in ("low", "high")],
    "initial": {"u": "sin(2*pi*x)"},
    "reference": {
        "class": "explicit_analytic",
        "expression": "sin(2*pi*(x - 0.3*t))",
    },
}

MINI_NEUMANN = {
    "name": "mini_neumann1d",
    "domain": {"dim": 1, "bounds": [[0.0, 1.0]], "time_horizon": 0.1},
    "pde": {
        "unknowns": ["u"],
        "terms": [
            {"coeff": "1", "derivs": ["t"]},
            {"coeff": "-1", "derivs": ["x", "x"]},
        ],
        "source": "0",
        "type_class": "parabolic",
        "linearity": "linear",
    },
    "boundary": [{"axis": 0, "side": s, "kind": "neumann", "value": "0"}
                 for s in ("low", "high")],
    "initial": {"u": "cos(pi*x)"},
    "reference": {"class": "none"},
}


def _write_mini_corpus(root: Path) -> Path:
    corpus = root / "corpus"
    corpus.mkdir()
    (corpus / "mini_advection1d.spec.json").write_text(json.dumps(MINI_ADVECTION))
    (corpus / "mini_advection1d.expect.json").write_text(json.dumps({
        "kernel_available": True, "family": "fourier_spectral",
        "metric": "e_l2", "target_error": 1e-10, "tolerance": 100.0,
    }))
    (corpus / "mini_neumann1d.spec.json").write_text(json.dumps(MINI_NEUMANN))
    (corpus / "mini_neumann1d.expect.json").write_text(json.dumps({
        "kernel_available": True, "family": "finite_difference",
        "metric": "e_res", "target_error": 1e-3, "tolerance": 10.0,
    }))
    planned = dict(MINI_ADVECTION, name="mini_planned1d")
    (corpus / "mini_planned1d.spec.json").write_text(json.dumps(planned))
    (corpus / "mini_planned1d.expect.json").write_text(json.dumps({
        "kernel_available": False, "family": "fourier_spectral",
    }))
    return corpus


@pytest.fixture(scope="module")
def mini_run(tmp_path_factory):
    root = tmp_path_factory.mktemp("bench")
    corpus = _write_mini_corpus(root)
    out = root / "results"
    results = bench.run_benchmark(corpus, out, backend="rules", width=2)
    return corpus, out, results


def test_one_failure_never_aborts_the_sweep(mini_run):
    _, _, results = mini_run
    by_name = {r.name: r for r in results}
    assert len(results) == 3
    assert by_name["mini_advection1d"].status == "verified"
    assert by_name["mini_neumann1d"].status == "failed"
    assert by_name["mini_planned1d"].status == "skipped"


def test_verified_row_carries_band_and_timing(mini_run):
    _, _, results = mini_run
    row = next(r for r in results if r.name == "mini_advection1d")
    assert row.within_band is True
    assert row.metric == "e_l2" and row.error is not None and row.error <= 1e-8
    assert row.runtime is not None and row.runtime > 0
    assert row.family == "fourier_spectral"


def test_failed_row_explains_itself(mini_run):
    _, _, results = mini_run
    row = next(r for r in results if r.name == "mini_neumann1d")
    assert row.error is None and row.within_band is None
    assert row.note


def test_skipped_row_still_reports_planned_family(mini_run):
    _, _, results = mini_run
    row = next(r for r in results if r.name == "mini_planned1d")
    assert row.family == "fourier_spectral"
    assert row.error is None and row.runtime is None
    assert "planned" in row.note


def test_results_json_roundtrip(mini_run):
    _, out, results = mini_run
    loaded = bench.load_results(out)
    assert [r.as_dict() for r in loaded] == [r.as_dict() for r in results]


def test_verified_solution_is_copied_for_plotting(mini_run):
    _, out, results = mini_run
    row = next(r for r in results if r.name == "mini_advection1d")
    assert row.solution == "solutions/mini_advection1d.anum"
    assert (out / row.solution).exists()


def test_report_files_and_plots(mini_run):
    _, out, results = mini_run
    bench.emit_report(results, out)
    assert (out / "report.md").exists()
    assert (out / "report.csv").exists()
    assert (out / "plots" / "mini_advection1d.png").exists()
    assert not (out / "plots" / "mini_neumann1d.png").exists()


def test_report_is_byte_deterministic(mini_run):
    _, out, results = mini_run
    bench.emit_report(results, out)
    first_md = (out / "report.md").read_bytes()
    first_csv = (out / "report.csv").read_bytes()
    bench.emit_report(bench.load_results(out), out)
    assert (out / "report.md").read_bytes() == first_md
    assert (out / "report.csv").read_bytes() == first_csv


# -- report rendering on synthetic rows ---------------------------------------------


def _row(name, *, bc="periodic", ref="explicit_analytic", status="verified",
         error=1e-9, runtime=2.0, family="fourier_spectral", integrator="rk4"):
    return BenchResult(
        name=name, dim=1, bc=bc, reference_class=ref, type_class="hyperbolic",
        status=status, family=family, integrator=integrator, tier="high",
        metric="e_l2", error=error, runtime=runtime,
    )


def test_markdown_has_three_blocks_with_none_placeholder():
    md = bench.render_markdown([
        _row("alpha"),
        _row("beta", ref="none", status="failed", error=None, runtime=None),
    ])
    assert "## Problems with an analytic reference" in md
    assert "## Problems with an implicit reference" in md
    assert "## Problems without a reference" in md
    implicit_block = md.split("## Problems with an implicit reference")[1]
    assert implicit_block.splitlines()[4] == "| none | | | |"
    assert "| beta | 1 | failed | -- |" in md


def test_scheme_table_lists_periodic_rows_first():
    md = bench.render_markdown([
        _row("aaa_bounded", bc="dirichlet", family="finite_difference"),
        _row("zzz_periodic", bc="periodic"),
    ])
    scheme = md.split("## Chosen schemes")[1]
    assert scheme.index("zzz_periodic") < scheme.index("aaa_bounded")


def test_csv_is_parseable_and_stable():
    rows = [_row("alpha"), _row("beta", status="skipped", error=None, runtime=None)]
    text = bench.render_csv(rows)
    parsed = list(csv.reader(io.StringIO(text)))
    assert parsed[0] == list(bench.CSV_COLUMNS)
    assert len(parsed) == 3
    alpha = dict(zip(parsed[0], parsed[1]))
    assert alpha["error"] == "1.000000e-09"
    assert alpha["within_band"] == ""
    assert bench.render_csv(rows) == text
