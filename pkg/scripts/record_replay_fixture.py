"""Record the replay fixture shipped under tests/fixtures/replay-advection1d.

The fixture is a pruned run directory: transcripts plus decision artifacts,
without the candidate workspaces (solution payloads are not needed to replay
the decisions). Rerun this script whenever planner scoring or backend output
formats change.
"""

import json
import shutil
import tempfile
from pathlib import Path

from pdepilot.pipeline import PipelineConfig, solve

REPO = Path(__file__).resolve().parents[1]
FIXTURES = REPO / "tests" / "fixtures"

SPEC = {
    "name": "advection1d",
    "domain": {"dim": 1, "bounds": [[0.0, 1.0]], "time_horizon": 1.0},
    "pde": {"unknowns": ["u"],
            "terms": [{"coeff": "1", "derivs": ["t"]},
                      {"coeff": "0.5", "derivs": ["x"]}],
            "source": "0", "type_class": "hyperbolic", "linearity": "linear"},
    "boundary": [{"axis": 0, "side": "low", "kind": "periodic"},
                 {"axis": 0, "side": "high", "kind": "periodic"}],
    "initial": {"u": "sin(2*pi*x)"},
    "reference": {"class": "explicit_analytic", "expression": "sin(2*pi*(x-0.5*t))"},
}

KEEP = ("transcripts", "outcomes.json", "chosen.json", "metrics.json",
        "plans.json", "problem.json", "analysis.md")


def main() -> None:
    FIXTURES.mkdir(parents=True, exist_ok=True)
    (FIXTURES / "advection1d.spec.json").write_text(
        json.dumps(SPEC, indent=2, sort_keys=True) + "\n")
    with tempfile.TemporaryDirectory() as tmp:
        result = solve(SPEC, PipelineConfig(backend="rules", out_root=Path(tmp)))
        dest = FIXTURES / "replay-advection1d"
        if dest.exists():
            shutil.rmtree(dest)
        dest.mkdir(parents=True)
        for name in KEEP:
            src = result.run_dir / name
            if src.is_dir():
                shutil.copytree(src, dest / name)
            else:
                shutil.copy2(src, dest / name)
    print(f"fixture written to {dest}")
    print(f"chosen: {result.chosen.plan.plan_id}  error: {result.chosen.error:.3e}")


if __name__ == "__main__":
    main()
