"""Entry point used by generated solver programs.

A candidate program is a short script ending in::

    from pdepilot import runtime
    raise SystemExit(runtime.main(method="...", variant="...", integrator="..."))

It talks to the host purely through files and its exit status: run file in,
solution file out, exit 0 on success, 2 on numerical blowup, 1 on anything
else.  Nothing here may assume it shares a process with the executor.
"""

from __future__ import annotations

import json
import sys
import traceback
from pathlib import Path

import numpy as np

from .errors import BlowupError
from .grids import Grid
from .kernels import run_kernel
from .problem import parse_spec
from .solution_io import write_solution_file

EXIT_OK = 0
EXIT_LOGIC = 1
EXIT_BLOWUP = 2


def solve_run_file(run_path, *, method: str, variant: str = "", integrator: str = "") -> None:
    run = json.loads(Path(run_path).read_text())
    spec = parse_spec(run["problem"])
    grid = Grid.from_description(run["grid"])
    fields, times, meta = run_kernel(
        spec,
        grid,
        method=method,
        variant=variant,
        integrator=integrator,
        dt=float(run.get("dt") or 0.0),
        horizon=run.get("time_horizon"),
        snapshot_stride=int(run.get("snapshot_stride") or 1),
    )
    clean = {
        k: float(v) if isinstance(v, (int, float, np.floating)) else v
        for k, v in meta.items()
    }
    write_solution_file(run["output_path"], fields, times, clean)


def main(argv=None, *, method: str, variant: str = "", integrator: str = "") -> int:
    argv = sys.argv[1:] if argv is None else list(argv)
    if not argv:
        print("usage: program <run file>", file=sys.stderr)
        return EXIT_LOGIC
    try:
        solve_run_file(argv[0], method=method, variant=variant, integrator=integrator)
    except BlowupError as exc:
        print(f"blowup: {exc}", file=sys.stderr)
        return EXIT_BLOWUP
    except Exception:
        traceback.print_exc()
        return EXIT_LOGIC
    return EXIT_OK
