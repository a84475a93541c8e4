"""Shared time-integration scaffolding for the marching kernels."""

from __future__ import annotations

import numpy as np

from ..errors import BlowupError, UnsupportedOperatorError

BLOWUP_FACTOR = 1e6


def plan_steps(horizon: float, dt: float) -> tuple[int, float]:
    """Number of steps and the adjusted dt that lands exactly on the horizon."""
    if horizon <= 0 or dt <= 0:
        raise UnsupportedOperatorError(f"bad horizon/dt: {horizon}/{dt}")
    steps = max(1, int(round(horizon / dt)))
    return steps, horizon / steps


def march(state, step, extract, steps: int, dt: float, stride: int):
    """Advance ``state`` with ``step(state, t, n) -> state``, snapshotting every
    ``stride`` steps (plus step 0 and the final step).

    ``extract(state) -> dict name -> real array`` converts whatever internal
    representation the integrator uses.  Raises BlowupError when any field
    stops being finite or exceeds BLOWUP_FACTOR x its initial magnitude.
    """
    stride = max(1, int(stride))
    first = extract(state)
    ref = max(1.0, max(float(np.max(np.abs(v))) for v in first.values()))
    snaps = {name: [np.array(v)] for name, v in first.items()}
    times = [0.0]
    for n in range(1, steps + 1):
        state = step(state, (n - 1) * dt, n - 1)
        if n % stride == 0 or n == steps:
            fields = extract(state)
            for name, v in fields.items():
                if not np.all(np.isfinite(v)) or np.max(np.abs(v)) > BLOWUP_FACTOR * ref:
                    raise BlowupError(
                        f"field {name!r} diverged at step {n} (t={n * dt:.6g})",
                        step=n, time=n * dt,
                    )
                snaps[name].append(np.array(v))
            times.append(n * dt)
    stacked = {name: np.stack(vals) for name, vals in snaps.items()}
    return stacked, np.array(times)


def initial_state(spec, grid) -> dict:
    """Evaluate initial conditions on the grid."""
    coords = grid.coords(t=0.0)
    return {
        name: expr.eval_on(coords, broadcast_shape=grid.shape)
        for name, expr in (spec.initial or {}).items()
    }


def relative_diff(a: np.ndarray, b: np.ndarray, eps: float = 1e-12) -> float:
    """|a - b| / (|b| + eps) with RMS norms; the self-check building block."""
    num = float(np.sqrt(np.mean((np.asarray(a) - np.asarray(b)) ** 2)))
    den = float(np.sqrt(np.mean(np.asarray(b) ** 2)))
    return num / (den + eps)
