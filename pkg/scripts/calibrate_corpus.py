#!/usr/bin/env python3
"""Measure every corpus problem end to end.

Prints, per problem: schema validation, the reference self-consistency
residual (explicit references only), and — for problems the in-process
kernels can actually run — the pipeline's chosen plan, its error metrics and
timings.  The printed numbers are what the .expect.json bands were frozen
from; re-run after kernel changes to see how much headroom is left.

    python3 scripts/calibrate_corpus.py --write      # also rewrite spec.json files
    python3 scripts/calibrate_corpus.py --only heat1d --skip-run
"""

from __future__ import annotations

import argparse
import json
import shutil
import tempfile
import time
from pathlib import Path

from pdepilot import pipeline
from pdepilot.grids import Grid
from pdepilot.metrics import analytic_residual
from pdepilot.problem import ReferenceClass, parse_spec, validate_spec

TAU = 6.283185307179586  # 2*pi, for domain bounds


def periodic(dim):
    return [{"axis": a, "side": s, "kind": "periodic"}
            for a in range(dim) for s in ("low", "high")]


def dirichlet(dim, overrides=None):
    out = []
    for a in range(dim):
        for s in ("low", "high"):
            val = (overrides or {}).get((a, s), "0")
            out.append({"axis": a, "side": s, "kind": "dirichlet", "value": val})
    return out


DOCS: dict[str, dict] = {}

# -- periodic marching problems -------------------------------------------------

DOCS["advection2d"] = {
    "name": "advection2d",
    "domain": {"dim": 2, "bounds": [[0.0, 1.0], [0.0, 1.0]], "time_horizon": 0.5},
    "pde": {
        "unknowns": ["u"],
        "terms": [
            {"coeff": "1", "derivs": ["t"]},
            {"coeff": "0.3", "derivs": ["x"]},
            {"coeff": "0.2", "derivs": ["y"]},
        ],
        "source": "0",
        "type_class": "hyperbolic",
        "linearity": "linear",
    },
    "boundary": periodic(2),
    "initial": {"u": "sin(2*pi*x)*cos(2*pi*y)"},
    "reference": {
        "class": "explicit_analytic",
        "expression": "sin(2*pi*(x - 0.3*t))*cos(2*pi*(y - 0.2*t))",
    },
}

DOCS["convection_diffusion2d"] = {
    "name": "convection_diffusion2d",
    "domain": {"dim": 2, "bounds": [[0.0, 1.0], [0.0, 1.0]], "time_horizon": 0.5},
    "pde": {
        "unknowns": ["u"],
        "terms": [
            {"coeff": "1", "derivs": ["t"]},
            {"coeff": "0.4", "derivs": ["x"]},
            {"coeff": "0.3", "derivs": ["y"]},
            {"coeff": "-0.05", "derivs": ["x", "x"]},
            {"coeff": "-0.05", "derivs": ["y", "y"]},
        ],
        "source": "0",
        "type_class": "parabolic",
        "linearity": "linear",
    },
    "boundary": periodic(2),
    "initial": {"u": "sin(2*pi*x)*cos(2*pi*y)"},
    "reference": {
        "class": "explicit_analytic",
        "expression": "exp(-0.4*pi^2*t)*sin(2*pi*(x - 0.4*t))*cos(2*pi*(y - 0.3*t))",
    },
}

# free-particle pair: a + i*b solves i*psi_t = -0.5*psi_xx
DOCS["schrodinger1d"] = {
    "name": "schrodinger1d",
    "domain": {"dim": 1, "bounds": [[0.0, 1.0]], "time_horizon": 0.25},
    "pde": {
        "unknowns": ["a", "b"],
        "terms": [
            {"coeff": "1", "derivs": ["t"], "field": "a", "eq": 0},
            {"coeff": "0.5", "derivs": ["x", "x"], "field": "b", "eq": 0},
            {"coeff": "1", "derivs": ["t"], "field": "b", "eq": 1},
            {"coeff": "-0.5", "derivs": ["x", "x"], "field": "a", "eq": 1},
        ],
        "source": ["0", "0"],
        "type_class": "dispersive",
        "linearity": "linear",
    },
    "boundary": periodic(1),
    "initial": {"a": "cos(2*pi*x)", "b": "sin(2*pi*x)"},
    "reference": {
        "class": "explicit_analytic",
        "expression": {
            "a": "cos(2*pi*x - 2*pi^2*t)",
            "b": "sin(2*pi*x - 2*pi^2*t)",
        },
    },
}

# Taylor-Green vorticity transported by its own (frozen, decaying) velocity
DOCS["navier_stokes2d"] = {
    "name": "navier_stokes2d",
    "domain": {"dim": 2, "bounds": [[0.0, TAU], [0.0, TAU]], "time_horizon": 1.0},
    "pde": {
        "unknowns": ["w"],
        "terms": [
            {"coeff": "1", "derivs": ["t"]},
            {"coeff": "-cos(x)*sin(y)*exp(-0.2*t)", "derivs": ["x"]},
            {"coeff": "sin(x)*cos(y)*exp(-0.2*t)", "derivs": ["y"]},
            {"coeff": "-0.1", "derivs": ["x", "x"]},
            {"coeff": "-0.1", "derivs": ["y", "y"]},
        ],
        "source": "0",
        "type_class": "parabolic",
        "linearity": "linear",
    },
    "boundary": periodic(2),
    "initial": {"w": "2*cos(x)*cos(y)"},
    "reference": {
        "class": "explicit_analytic",
        "expression": "2*cos(x)*cos(y)*exp(-0.2*t)",
    },
}

# linearized about still water, gravity wave speed c = 2
DOCS["shallow_water1d"] = {
    "name": "shallow_water1d",
    "domain": {"dim": 1, "bounds": [[0.0, 1.0]], "time_horizon": 0.5},
    "pde": {
        "unknowns": ["h", "u"],
        "terms": [
            {"coeff": "1", "derivs": ["t"], "field": "h", "eq": 0},
            {"coeff": "1", "derivs": ["x"], "field": "u", "eq": 0},
            {"coeff": "1", "derivs": ["t"], "field": "u", "eq": 1},
            {"coeff": "4", "derivs": ["x"], "field": "h", "eq": 1},
        ],
        "source": ["0", "0"],
        "type_class": "hyperbolic",
        "linearity": "linear",
    },
    "boundary": periodic(1),
    "initial": {"h": "cos(2*pi*x)", "u": "2*cos(2*pi*x)"},
    "reference": {
        "class": "explicit_analytic",
        "expression": {
            "h": "cos(2*pi*(x - 2*t))",
            "u": "2*cos(2*pi*(x - 2*t))",
        },
    },
}

# single right-moving soliton of u_t + u u_x + u_xxx = 0; starts at x = -2 so
# both tails stay ~18 widths from the seam over the whole horizon
DOCS["kdv1d"] = {
    "name": "kdv1d",
    "domain": {"dim": 1, "bounds": [[-20.0, 20.0]], "time_horizon": 0.4},
    "pde": {
        "unknowns": ["u"],
        "terms": [
            {"coeff": "1", "derivs": ["t"]},
            {"coeff": "1", "nonlinearity": "u", "derivs": ["x"]},
            {"coeff": "1", "derivs": ["x", "x", "x"]},
        ],
        "source": "0",
        "type_class": "dispersive",
        "linearity": "nonlinear",
    },
    "boundary": periodic(1),
    "initial": {"u": "12*(1 - tanh(x + 2)^2)"},
    "reference": {
        "class": "explicit_analytic",
        "expression": "12*(1 - tanh(x + 2 - 4*t)^2)",
    },
}

DOCS["kuramoto_sivashinsky1d"] = {
    "name": "kuramoto_sivashinsky1d",
    "domain": {"dim": 1, "bounds": [[0.0, 16 * TAU]], "time_horizon": 2.0},
    "pde": {
        "unknowns": ["u"],
        "terms": [
            {"coeff": "1", "derivs": ["t"]},
            {"coeff": "1", "nonlinearity": "u", "derivs": ["x"]},
            {"coeff": "1", "derivs": ["x", "x"]},
            {"coeff": "1", "derivs": ["x", "x", "x", "x"]},
        ],
        "source": "0",
        "type_class": "parabolic",
        "linearity": "nonlinear",
        "stiffness": "stiff",
    },
    "boundary": periodic(1),
    "initial": {"u": "cos(x/16)*(1 + sin(x/16))"},
    "reference": {"class": "none"},
}

DOCS["burgers_inviscid1d"] = {
    "name": "burgers_inviscid1d",
    "domain": {"dim": 1, "bounds": [[0.0, 1.0]], "time_horizon": 0.35},
    "pde": {
        "unknowns": ["u"],
        "terms": [
            {"coeff": "1", "derivs": ["t"]},
            {"coeff": "1", "nonlinearity": "u", "derivs": ["x"]},
        ],
        "source": "0",
        "type_class": "hyperbolic",
        "linearity": "nonlinear",
    },
    "boundary": periodic(1),
    "initial": {"u": "0.5 + 0.3*sin(2*pi*x)"},
    "reference": {
        "class": "implicit_analytic",
        "relation": "u - (0.5 + 0.3*sin(2*pi*(x - u*t)))",
        "reference_magnitude": "u",
    },
}

# drift-free density spreading: variance grows linearly, sigma^2 = 1 + t
DOCS["fokker_planck1d"] = {
    "name": "fokker_planck1d",
    "domain": {"dim": 1, "bounds": [[-16.0, 16.0]], "time_horizon": 3.0},
    "pde": {
        "unknowns": ["p"],
        "terms": [
            {"coeff": "1", "derivs": ["t"]},
            {"coeff": "-0.5", "derivs": ["x", "x"]},
        ],
        "source": "0",
        "type_class": "parabolic",
        "linearity": "linear",
    },
    "boundary": periodic(1),
    "initial": {"p": "exp(-x^2/2)*(2*pi)^(-0.5)"},
    "reference": {
        "class": "explicit_analytic",
        "expression": "exp(-x^2/(2*(1 + t)))*(2*pi*(1 + t))^(-0.5)",
    },
}

# quasi-linear primitive form, gamma = 1.4; planning coverage only
DOCS["euler1d"] = {
    "name": "euler1d",
    "domain": {"dim": 1, "bounds": [[0.0, 1.0]], "time_horizon": 0.2},
    "pde": {
        "unknowns": ["rho", "u", "p"],
        "terms": [
            {"coeff": "1", "derivs": ["t"], "field": "rho", "eq": 0},
            {"coeff": "1", "nonlinearity": "u", "derivs": ["x"], "field": "rho", "eq": 0},
            {"coeff": "1", "nonlinearity": "rho", "derivs": ["x"], "field": "u", "eq": 0},
            {"coeff": "1", "derivs": ["t"], "field": "u", "eq": 1},
            {"coeff": "1", "nonlinearity": "u", "derivs": ["x"], "field": "u", "eq": 1},
            {"coeff": "1", "nonlinearity": "1/rho", "derivs": ["x"], "field": "p", "eq": 1},
            {"coeff": "1", "derivs": ["t"], "field": "p", "eq": 2},
            {"coeff": "1", "nonlinearity": "u", "derivs": ["x"], "field": "p", "eq": 2},
            {"coeff": "1.4", "nonlinearity": "p", "derivs": ["x"], "field": "u", "eq": 2},
        ],
        "source": ["0", "0", "0"],
        "type_class": "system",
        "linearity": "nonlinear",
    },
    "boundary": periodic(1),
    "initial": {"rho": "1 + 0.2*sin(2*pi*x)", "u": "0", "p": "1"},
    "reference": {"class": "none"},
}

# curl pair in vacuum units; x-propagating plane wave exercises the 3D gate
DOCS["maxwell3d"] = {
    "name": "maxwell3d",
    "domain": {
        "dim": 3,
        "bounds": [[0.0, 1.0], [0.0, 1.0], [0.0, 1.0]],
        "time_horizon": 0.5,
    },
    "pde": {
        "unknowns": ["ex", "ey", "ez", "bx", "by", "bz"],
        "terms": [
            {"coeff": "1", "derivs": ["t"], "field": "ex", "eq": 0},
            {"coeff": "-1", "derivs": ["y"], "field": "bz", "eq": 0},
            {"coeff": "1", "derivs": ["z"], "field": "by", "eq": 0},
            {"coeff": "1", "derivs": ["t"], "field": "ey", "eq": 1},
            {"coeff": "-1", "derivs": ["z"], "field": "bx", "eq": 1},
            {"coeff": "1", "derivs": ["x"], "field": "bz", "eq": 1},
            {"coeff": "1", "derivs": ["t"], "field": "ez", "eq": 2},
            {"coeff": "-1", "derivs": ["x"], "field": "by", "eq": 2},
            {"coeff": "1", "derivs": ["y"], "field": "bx", "eq": 2},
            {"coeff": "1", "derivs": ["t"], "field": "bx", "eq": 3},
            {"coeff": "1", "derivs": ["y"], "field": "ez", "eq": 3},
            {"coeff": "-1", "derivs": ["z"], "field": "ey", "eq": 3},
            {"coeff": "1", "derivs": ["t"], "field": "by", "eq": 4},
            {"coeff": "1", "derivs": ["z"], "field": "ex", "eq": 4},
            {"coeff": "-1", "derivs": ["x"], "field": "ez", "eq": 4},
            {"coeff": "1", "derivs": ["t"], "field": "bz", "eq": 5},
            {"coeff": "1", "derivs": ["x"], "field": "ey", "eq": 5},
            {"coeff": "-1", "derivs": ["y"], "field": "ex", "eq": 5},
        ],
        "source": ["0", "0", "0", "0", "0", "0"],
        "type_class": "system",
        "linearity": "linear",
    },
    "boundary": periodic(3),
    "initial": {
        "ex": "0", "ey": "0", "ez": "cos(2*pi*x)",
        "bx": "0", "by": "-cos(2*pi*x)", "bz": "0",
    },
    "reference": {
        "class": "explicit_analytic",
        "expression": {
            "ex": "0", "ey": "0", "ez": "cos(2*pi*(x - t))",
            "bx": "0", "by": "-cos(2*pi*(x - t))", "bz": "0",
        },
    },
}

# -- bounded parabolic problems ---------------------------------------------------

# manufactured: u* = exp(-t)*sin(pi*x) balances the bistable reaction
DOCS["allen_cahn1d"] = {
    "name": "allen_cahn1d",
    "domain": {"dim": 1, "bounds": [[0.0, 1.0]], "time_horizon": 0.5},
    "pde": {
        "unknowns": ["u"],
        "terms": [
            {"coeff": "1", "derivs": ["t"]},
            {"coeff": "-0.1", "derivs": ["x", "x"]},
            {"coeff": "-1", "derivs": []},
            {"coeff": "1", "nonlinearity": "u^2", "derivs": []},
        ],
        "source": "(0.1*pi^2 - 2)*exp(-t)*sin(pi*x) + exp(-3*t)*sin(pi*x)^3",
        "type_class": "parabolic",
        "linearity": "nonlinear",
    },
    "boundary": dirichlet(1),
    "initial": {"u": "sin(pi*x)"},
    "reference": {
        "class": "explicit_analytic",
        "expression": "exp(-t)*sin(pi*x)",
    },
}

DOCS["burgers_viscous1d"] = {
    "name": "burgers_viscous1d",
    "domain": {"dim": 1, "bounds": [[0.0, 1.0]], "time_horizon": 0.5},
    "pde": {
        "unknowns": ["u"],
        "terms": [
            {"coeff": "1", "derivs": ["t"]},
            {"coeff": "1", "nonlinearity": "u", "derivs": ["x"]},
            {"coeff": "-0.05", "derivs": ["x", "x"]},
        ],
        "source": "0",
        "type_class": "parabolic",
        "linearity": "nonlinear",
    },
    "boundary": dirichlet(1),
    "initial": {"u": "sin(pi*x)"},
    "reference": {"class": "none"},
}

DOCS["heat1d"] = {
    "name": "heat1d",
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
    "boundary": dirichlet(1),
    "initial": {"u": "sin(pi*x)"},
    "reference": {
        "class": "explicit_analytic",
        "expression": "exp(-pi^2*t)*sin(pi*x)",
    },
}

DOCS["heat2d"] = {
    "name": "heat2d",
    "domain": {"dim": 2, "bounds": [[0.0, 1.0], [0.0, 1.0]], "time_horizon": 1.0},
    "pde": {
        "unknowns": ["u"],
        "terms": [
            {"coeff": "1", "derivs": ["t"]},
            {"coeff": "-0.05", "derivs": ["x", "x"]},
            {"coeff": "-0.05", "derivs": ["y", "y"]},
        ],
        "source": "0",
        "type_class": "parabolic",
        "linearity": "linear",
    },
    "boundary": dirichlet(2),
    "initial": {"u": "sin(pi*x)*sin(pi*y)"},
    "reference": {
        "class": "explicit_analytic",
        "expression": "exp(-0.1*pi^2*t)*sin(pi*x)*sin(pi*y)",
    },
}

DOCS["reaction_diffusion2d"] = {
    "name": "reaction_diffusion2d",
    "domain": {"dim": 2, "bounds": [[0.0, 1.0], [0.0, 1.0]], "time_horizon": 1.0},
    "pde": {
        "unknowns": ["u"],
        "terms": [
            {"coeff": "1", "derivs": ["t"]},
            {"coeff": "-0.1", "derivs": ["x", "x"]},
            {"coeff": "-0.1", "derivs": ["y", "y"]},
            {"coeff": "-1", "derivs": []},
        ],
        "source": "0",
        "type_class": "parabolic",
        "linearity": "linear",
    },
    "boundary": dirichlet(2),
    "initial": {"u": "sin(pi*x)*sin(pi*y)"},
    "reference": {
        "class": "explicit_analytic",
        "expression": "exp((1 - 0.2*pi^2)*t)*sin(pi*x)*sin(pi*y)",
    },
}

# manufactured: u* = exp(-t)*sin(pi*x) under logistic growth
DOCS["fisher_kpp1d"] = {
    "name": "fisher_kpp1d",
    "domain": {"dim": 1, "bounds": [[0.0, 1.0]], "time_horizon": 0.5},
    "pde": {
        "unknowns": ["u"],
        "terms": [
            {"coeff": "1", "derivs": ["t"]},
            {"coeff": "-1", "derivs": ["x", "x"]},
            {"coeff": "-1", "derivs": []},
            {"coeff": "1", "nonlinearity": "u", "derivs": []},
        ],
        "source": "(pi^2 - 2)*exp(-t)*sin(pi*x) + exp(-2*t)*sin(pi*x)^2",
        "type_class": "parabolic",
        "linearity": "nonlinear",
    },
    "boundary": dirichlet(1),
    "initial": {"u": "sin(pi*x)"},
    "reference": {
        "class": "explicit_analytic",
        "expression": "exp(-t)*sin(pi*x)",
    },
}

# -- steady boundary-value problems ------------------------------------------------

DOCS["poisson2d"] = {
    "name": "poisson2d",
    "domain": {"dim": 2, "bounds": [[0.0, 1.0], [0.0, 1.0]]},
    "pde": {
        "unknowns": ["u"],
        "terms": [
            {"coeff": "1", "derivs": ["x", "x"]},
            {"coeff": "1", "derivs": ["y", "y"]},
        ],
        "source": "-2*pi^2*sin(pi*x)*sin(pi*y)",
        "type_class": "elliptic",
        "linearity": "linear",
    },
    "boundary": dirichlet(2),
    "reference": {
        "class": "explicit_analytic",
        "expression": "sin(pi*x)*sin(pi*y)",
    },
}

# k^2 = 25 sits between the first two Dirichlet eigenvalues (2*pi^2, 5*pi^2)
DOCS["helmholtz2d"] = {
    "name": "helmholtz2d",
    "domain": {"dim": 2, "bounds": [[0.0, 1.0], [0.0, 1.0]]},
    "pde": {
        "unknowns": ["u"],
        "terms": [
            {"coeff": "1", "derivs": ["x", "x"]},
            {"coeff": "1", "derivs": ["y", "y"]},
            {"coeff": "25", "derivs": []},
        ],
        "source": "(25 - 2*pi^2)*sin(pi*x)*sin(pi*y)",
        "type_class": "elliptic",
        "linearity": "linear",
    },
    "boundary": dirichlet(2),
    "reference": {
        "class": "explicit_analytic",
        "expression": "sin(pi*x)*sin(pi*y)",
    },
}

DOCS["laplace2d"] = {
    "name": "laplace2d",
    "domain": {"dim": 2, "bounds": [[0.0, 1.0], [0.0, 1.0]]},
    "pde": {
        "unknowns": ["u"],
        "terms": [
            {"coeff": "1", "derivs": ["x", "x"]},
            {"coeff": "1", "derivs": ["y", "y"]},
        ],
        "source": "0",
        "type_class": "elliptic",
        "linearity": "linear",
    },
    "boundary": dirichlet(2, {(1, "high"): "sin(pi*x)"}),
    "reference": {
        "class": "explicit_analytic",
        "expression": "sin(pi*x)*(exp(pi*y) - exp(-pi*y))/(exp(pi) - exp(-pi))",
    },
}

# below the first Dirichlet eigenvalue 5*pi^2, so the operator stays definite
DOCS["helmholtz5d"] = {
    "name": "helmholtz5d",
    "domain": {"dim": 5, "bounds": [[0.0, 1.0]] * 5},
    "pde": {
        "unknowns": ["u"],
        "terms": [
            {"coeff": "1", "derivs": ["x", "x"]},
            {"coeff": "1", "derivs": ["y", "y"]},
            {"coeff": "1", "derivs": ["z", "z"]},
            {"coeff": "1", "derivs": ["w", "w"]},
            {"coeff": "1", "derivs": ["v", "v"]},
            {"coeff": "4", "derivs": []},
        ],
        "source": "1",
        "type_class": "elliptic",
        "linearity": "linear",
    },
    "boundary": dirichlet(5),
    "reference": {"class": "none"},
}

# -- bounded second-order wave -----------------------------------------------------

DOCS["wave1d"] = {
    "name": "wave1d",
    "domain": {"dim": 1, "bounds": [[0.0, 1.0]], "time_horizon": 1.0},
    "pde": {
        "unknowns": ["u"],
        "terms": [
            {"coeff": "1", "derivs": ["t", "t"]},
            {"coeff": "-4", "derivs": ["x", "x"]},
        ],
        "source": "0",
        "type_class": "hyperbolic",
        "linearity": "linear",
    },
    "boundary": dirichlet(1),
    "initial": {"u": "sin(pi*x)"},
    "reference": {
        "class": "explicit_analytic",
        "expression": "sin(pi*x)*cos(2*pi*t)",
    },
}

# problems no in-process kernel can integrate; the harness plans them only
PLANNING_ONLY = {"euler1d", "maxwell3d", "helmholtz5d"}


def consistency_grid(spec) -> Grid:
    d = spec.domain.dim
    if spec.pde.max_time_order() == 0:
        return Grid.chebyshev(spec.domain.bounds, [48] * d)
    if spec.periodic:
        n = {1: 384, 2: 128, 3: 32}.get(d, 16)
        return Grid.uniform(spec.domain.bounds, [n] * d, [True] * d)
    return Grid.uniform(spec.domain.bounds, [256] * d, [False] * d)


def main() -> int:
    ap = argparse.ArgumentParser()
    ap.add_argument("--write", action="store_true", help="rewrite corpus spec.json files")
    ap.add_argument("--skip-run", action="store_true", help="gate + planning only")
    ap.add_argument("--only", help="single problem name")
    args = ap.parse_args()

    corpus = Path(__file__).resolve().parents[1] / "src" / "pdepilot" / "corpus"
    summary = {}
    for name, doc in DOCS.items():
        if args.only and name != args.only:
            continue
        spec = parse_spec(doc)
        issues = validate_spec(spec)
        row: dict = {"issues": [f"{f.severity}:{f.code}" for f in issues]}
        print(f"== {name}  dim={spec.domain.dim} class={spec.pde.type_class.value} "
              f"stiff={spec.pde.stiffness.value} issues={row['issues']}")

        if spec.reference.kind == ReferenceClass.EXPLICIT_ANALYTIC:
            g = consistency_grid(spec)
            t0 = time.perf_counter()
            r = analytic_residual(spec, g)
            row["gate_residual"] = r
            print(f"   gate: residual {r:.3e} on {g.shape} ({time.perf_counter() - t0:.1f}s)")

        if args.write:
            (corpus / f"{name}.spec.json").write_text(
                json.dumps(doc, indent=2, sort_keys=True) + "\n")

        slate = pipeline.plan_only(doc, pipeline.PipelineConfig())
        row["selected"] = slate["selected"]
        print(f"   slate: {slate['selected']}")

        if name not in PLANNING_ONLY and not args.skip_run:
            out = Path(tempfile.mkdtemp(prefix=f"cal-{name}-"))
            try:
                res = pipeline.solve(doc, pipeline.PipelineConfig(out_root=out))
                ch = res.chosen
                row.update({
                    "chosen": ch.plan.plan_id,
                    "error": ch.error,
                    "report": ch.detail.get("report"),
                    "self_residual": ch.detail.get("self_residual"),
                    "wall": res.wall_time,
                    "t_first": res.time_to_first_success,
                    "outcomes": [
                        (o.plan.plan_id, o.verified, o.error, round(o.wall_time, 2))
                        for o in res.outcomes
                    ],
                })
                print(f"   chosen: {ch.plan.plan_id}  error={ch.error:.3e}  "
                      f"verified={ch.verified}")
                print(f"   report: {ch.detail.get('report')}")
                print(f"   wall={res.wall_time:.1f}s t_first={res.time_to_first_success:.1f}s")
                for o in res.outcomes:
                    err = "--" if o.error is None else f"{o.error:.3e}"
                    print(f"     - {o.plan.plan_id:55s} ok={o.verified} err={err} "
                          f"t={o.wall_time:.1f}s")
            except Exception as exc:  # noqa: BLE001 - survey run, report and move on
                row["pipeline_error"] = f"{type(exc).__name__}: {exc}"
                print(f"   PIPELINE FAILED: {type(exc).__name__}: {exc}")
            finally:
                shutil.rmtree(out, ignore_errors=True)
        summary[name] = row
        print(flush=True)

    Path("/tmp/corpus_calibration.json").write_text(
        json.dumps(summary, indent=2, default=str) + "\n")
    print("summary -> /tmp/corpus_calibration.json")
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
