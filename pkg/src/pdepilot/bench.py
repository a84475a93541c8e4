"""Benchmark harness: run the pipeline across a corpus of problem documents.

A corpus directory pairs ``<name>.spec.json`` (the problem document) with
``<name>.expect.json`` (the frozen expectation band)::

    {
      "kernel_available": true,
      "family": "fourier_spectral",
      "metric": "e_l2",
      "target_error": 2.1e-11,
      "tolerance": 10.0
    }

``target_error`` is the error measured when the band was frozen and
``tolerance`` the multiplier a run may drift before ``within_band`` flips
false.  ``family`` may be a list when distinct discretizations land within
the selection tie width of each other (finite differences and P1 elements
produce near-identical errors on smooth parabolic problems, so the
wall-time tie-break can pick either).  Problems flagged
``kernel_available: false`` are planned but never
executed; they keep the planner honest on dimensions and systems the
in-process kernels cannot integrate.

One problem failing - or crashing outright - never aborts the sweep; the
failure becomes a row.  Problems run in parallel up to ``width`` (candidate
programs execute in subprocesses, so threads parallelize genuinely); report
assembly stays single-threaded.
"""

from __future__ import annotations

import json
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass
from pathlib import Path

from . import pipeline
from .errors import PdePilotError, SchemaError
from .grids import Grid
from .problem import parse_spec
from .solution_io import read_solution_file

REPORT_BLOCKS = (
    ("explicit_analytic", "Problems with an analytic reference", "relative L2 error"),
    ("implicit_analytic", "Problems with an implicit reference", "implicit relation residual"),
    ("none", "Problems without a reference", "PDE residual"),
)

CSV_COLUMNS = (
    "name", "dim", "bc", "reference_class", "status", "family",
    "integrator", "tier", "metric", "error", "runtime_s", "within_band", "note",
)


@dataclass
class BenchResult:
    """One corpus problem's outcome, as persisted in results.json."""

    name: str
    dim: int
    bc: str                       # "periodic" | "dirichlet"
    reference_class: str
    type_class: str
    status: str                   # "verified" | "failed" | "skipped"
    family: str | None = None
    integrator: str | None = None
    tier: str | None = None
    metric: str | None = None     # "e_l2" | "e_impl" | "e_res"
    error: float | None = None
    runtime: float | None = None  # seconds from generation to first verified run
    within_band: bool | None = None
    note: str = ""
    spec: dict | None = None
    solution: str | None = None   # relative to the results directory

    def as_dict(self) -> dict:
        return asdict(self)


def default_corpus() -> Path:
    return Path(__file__).resolve().parent / "corpus"


def consistency_grid(spec) -> Grid:
    """Grid on which an explicit reference is probed against its own PDE.

    Periodic axes get the spectral probe, so modest resolutions are exact;
    bounded axes rely on the 4th-order stencil and need finer spacing.
    """
    d = spec.domain.dim
    if spec.pde.max_time_order() == 0:
        return Grid.chebyshev(spec.domain.bounds, [48] * d)
    if spec.periodic:
        n = {1: 384, 2: 128, 3: 32}.get(d, 16)
        return Grid.uniform(spec.domain.bounds, [n] * d, [True] * d)
    return Grid.uniform(spec.domain.bounds, [256] * d, [False] * d)


def _load_pairs(corpus: Path) -> list[tuple[str, dict, dict]]:
    pairs = []
    for spec_path in sorted(corpus.glob("*.spec.json")):
        name = spec_path.name[: -len(".spec.json")]
        doc = json.loads(spec_path.read_text())
        expect_path = spec_path.with_name(f"{name}.expect.json")
        expect = json.loads(expect_path.read_text()) if expect_path.exists() else {}
        pairs.append((name, doc, expect))
    if not pairs:
        raise SchemaError(f"no *.spec.json documents under {corpus}")
    return pairs


def _plan_tokens(plan_id: str) -> tuple[str, str, str]:
    parts = plan_id.split(":")
    return parts[0], parts[2] if len(parts) > 2 else "", parts[3] if len(parts) > 3 else ""


def _pick_metric(report: dict | None) -> tuple[str | None, float | None]:
    if not report:
        return None, None
    for key in ("e_l2", "e_impl", "e_res"):
        if report.get(key) is not None:
            return key, float(report[key])
    return None, None


def _run_problem(name: str, doc: dict, expect: dict, out: Path, backend: str) -> BenchResult:
    try:
        spec = parse_spec(doc)
    except PdePilotError as exc:
        return BenchResult(name=name, dim=0, bc="?", reference_class="none",
                           type_class="?", status="failed", note=str(exc), spec=doc)
    row = BenchResult(
        name=name,
        dim=spec.domain.dim,
        bc="periodic" if spec.periodic else "dirichlet",
        reference_class=spec.reference.kind.value,
        type_class=spec.pde.type_class.value,
        status="skipped",
        spec=doc,
    )
    cfg = pipeline.PipelineConfig(backend=backend, out_root=out / "runs" / name)

    if not expect.get("kernel_available", True):
        try:
            slate = pipeline.plan_only(doc, cfg)
            row.family, row.integrator, row.tier = _plan_tokens(slate["selected"][0])
            row.note = "no in-process kernel; planned only"
        except PdePilotError as exc:
            row.status, row.note = "failed", str(exc)
        return row

    try:
        res = pipeline.solve(doc, cfg)
    except PdePilotError as exc:
        row.status, row.note = "failed", str(exc)
        return row

    chosen = res.chosen
    row.status = "verified" if chosen.verified else "failed"
    row.family, row.integrator, row.tier = _plan_tokens(chosen.plan.plan_id)
    row.metric, row.error = _pick_metric(chosen.detail.get("report"))
    if row.error is None:
        row.error = chosen.error
    row.runtime = res.time_to_first_success

    src = chosen.detail.get("solution")
    if src and (res.run_dir / src).exists():
        dest = out / "solutions" / f"{name}.anum"
        dest.write_bytes((res.run_dir / src).read_bytes())
        row.solution = str(dest.relative_to(out))

    if row.status == "verified" and expect.get("target_error") is not None:
        band = float(expect["target_error"]) * float(expect.get("tolerance", 10.0))
        row.within_band = bool(row.error is not None and row.error <= band)
        if not row.within_band:
            row.note = f"error {row.error:.3e} above band {band:.3e}"
    allowed = expect.get("family")
    if allowed and row.family:
        allowed = [allowed] if isinstance(allowed, str) else list(allowed)
        if row.family not in allowed:
            note = f"expected {'/'.join(allowed)} family, chose {row.family}"
            row.note = f"{row.note}; {note}" if row.note else note
    return row


def run_benchmark(corpus: Path, out: Path, *, backend: str = "rules",
                  width: int = 1) -> list[BenchResult]:
    """Run every corpus problem, persist results.json, return the rows."""
    pairs = _load_pairs(corpus)
    out.mkdir(parents=True, exist_ok=True)
    (out / "solutions").mkdir(exist_ok=True)

    def job(pair):
        name, doc, expect = pair
        try:
            return _run_problem(name, doc, expect, out, backend)
        except Exception as exc:  # noqa: BLE001 - a crash is a row, not an abort
            return BenchResult(name=name, dim=0, bc="?", reference_class="none",
                               type_class="?", status="failed",
                               note=f"{type(exc).__name__}: {exc}", spec=doc)

    if width <= 1:
        results = [job(p) for p in pairs]
    else:
        with ThreadPoolExecutor(max_workers=width) as pool:
            results = list(pool.map(job, pairs))
    results.sort(key=lambda r: r.name)
    payload = {"results": [r.as_dict() for r in results]}
    (out / "results.json").write_text(
        json.dumps(payload, indent=2, sort_keys=True) + "\n")
    return results


def load_results(results_dir: Path) -> list[BenchResult]:
    payload = json.loads((results_dir / "results.json").read_text())
    return [BenchResult(**row) for row in payload["results"]]


# -- report rendering ---------------------------------------------------------


def _fmt_error(r: BenchResult) -> str:
    if r.status == "skipped":
        return "planned only"
    if r.error is None:
        return "failed"
    return f"{r.error:.2e}"


def _fmt_runtime(r: BenchResult) -> str:
    return f"{r.runtime:.1f}" if r.runtime is not None else "--"


def render_markdown(results: list[BenchResult]) -> str:
    lines = ["# Solver benchmark", ""]
    done = sum(r.status == "verified" for r in results)
    lines += [f"{len(results)} problems, {done} verified.", ""]
    for ref_class, heading, metric_label in REPORT_BLOCKS:
        rows = sorted((r for r in results if r.reference_class == ref_class),
                      key=lambda r: r.name)
        lines += [f"## {heading}", "",
                  f"| PDE | Dim | Error ({metric_label}) | Runtime (s) |",
                  "|---|---|---|---|"]
        if not rows:
            lines.append("| none | | | |")
        for r in rows:
            lines.append(f"| {r.name} | {r.dim} | {_fmt_error(r)} | {_fmt_runtime(r)} |")
        lines.append("")
    lines += ["## Chosen schemes", "",
              "| PDE | BC | Family | Integrator | Tier | Status |",
              "|---|---|---|---|---|---|"]
    ordered = sorted(results, key=lambda r: (r.bc != "periodic", r.name))
    for r in ordered:
        lines.append(f"| {r.name} | {r.bc} | {r.family or '--'} | "
                     f"{r.integrator or '--'} | {r.tier or '--'} | {r.status} |")
    lines.append("")
    return "\n".join(lines)


def render_csv(results: list[BenchResult]) -> str:
    import csv
    import io

    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(CSV_COLUMNS)
    for r in sorted(results, key=lambda r: r.name):
        w.writerow([
            r.name, r.dim, r.bc, r.reference_class, r.status,
            r.family or "", r.integrator or "", r.tier or "", r.metric or "",
            "" if r.error is None else f"{r.error:.6e}",
            "" if r.runtime is None else f"{r.runtime:.3f}",
            "" if r.within_band is None else str(r.within_band).lower(),
            r.note,
        ])
    return buf.getvalue()


def _plot_grid(r: BenchResult, shape: tuple[int, ...]):
    spec = parse_spec(r.spec)
    if r.family == "chebyshev_spectral":
        return Grid.chebyshev(spec.domain.bounds, shape), spec
    periodic = [spec.periodic] * spec.domain.dim
    return Grid.uniform(spec.domain.bounds, shape, periodic), spec


def _render_plot(r: BenchResult, results_dir: Path, plots: Path, plt) -> None:
    raw = read_solution_file(results_dir / r.solution)
    first = sorted(raw.fields)[0]
    values = raw.fields[first]
    grid, spec = _plot_grid(r, values.shape[1:])
    if grid.dim > 2:
        return
    fig, ax = plt.subplots(figsize=(5.2, 3.6))
    if grid.dim == 1:
        x = grid.axes[0].nodes()
        ax.plot(x, values[-1], lw=1.4, label=first)
        if spec.reference.kind.value == "explicit_analytic":
            expr = spec.reference.expressions[first]
            t_end = float(raw.times[-1])
            ax.plot(x, expr.eval_on({"x": x, "t": t_end}, broadcast_shape=x.shape),
                    "k--", lw=0.9, label="reference")
        ax.legend(loc="best", fontsize=8)
        ax.set_xlabel("x")
    else:
        im = ax.imshow(values[-1].T, origin="lower", aspect="auto",
                       extent=(grid.axes[0].lo, grid.axes[0].hi,
                               grid.axes[1].lo, grid.axes[1].hi))
        fig.colorbar(im, ax=ax, shrink=0.85)
        ax.set_xlabel("x")
        ax.set_ylabel("y")
    err = f"  ({r.metric} = {r.error:.2e})" if r.error is not None else ""
    ax.set_title(f"{r.name}{err}", fontsize=10)
    fig.tight_layout()
    fig.savefig(plots / f"{r.name}.png", dpi=110)
    plt.close(fig)


def render_plots(results: list[BenchResult], results_dir: Path) -> list[Path]:
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    plots = results_dir / "plots"
    plots.mkdir(parents=True, exist_ok=True)
    written = []
    for r in results:
        if not r.solution or not (results_dir / r.solution).exists():
            continue
        try:
            _render_plot(r, results_dir, plots, plt)
            written.append(plots / f"{r.name}.png")
        except Exception:  # noqa: BLE001 - a bad plot should not sink the report
            plt.close("all")
    return written


def emit_report(results: list[BenchResult], out: Path) -> None:
    out.mkdir(parents=True, exist_ok=True)
    (out / "report.md").write_text(render_markdown(results))
    (out / "report.csv").write_text(render_csv(results))
    render_plots(results, out)
