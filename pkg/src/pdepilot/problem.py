"""Structured PDE problem model: parsing, validation, classification.

A problem document is a JSON object with top-level keys ``name``,
``domain``, ``pde``, ``boundary``, ``initial`` and ``reference`` (plus an
optional ``params`` map of named constants).  The PDE is written as

    sum over terms of  coeff(x, t) * nonlinearity(fields) * D^alpha field  =  source

where ``derivs`` spells the derivative multi-index as a list of axis names
("t", "x", "y", ...).  Elliptic problems have no "t" entries and no
initial data.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from enum import Enum
from pathlib import Path

from .errors import DimensionError, ExpressionError, SchemaError
from .expr import AXIS_NAMES, Expression, as_expression


class TypeClass(str, Enum):
    ELLIPTIC = "elliptic"
    PARABOLIC = "parabolic"
    HYPERBOLIC = "hyperbolic"
    DISPERSIVE = "dispersive"
    SYSTEM = "system"


class Linearity(str, Enum):
    LINEAR = "linear"
    NONLINEAR = "nonlinear"


class Stiffness(str, Enum):
    STIFF = "stiff"
    NONSTIFF = "nonstiff"
    STIFF_CAPABLE = "stiff_capable"


class BcKind(str, Enum):
    PERIODIC = "periodic"
    DIRICHLET = "dirichlet"
    NEUMANN = "neumann"


class ReferenceClass(str, Enum):
    EXPLICIT_ANALYTIC = "explicit_analytic"
    IMPLICIT_ANALYTIC = "implicit_analytic"
    NONE = "none"


@dataclass(frozen=True)
class DomainSpec:
    dim: int
    bounds: tuple[tuple[float, float], ...]
    time_horizon: float | None = None

    @property
    def steady(self) -> bool:
        return self.time_horizon is None

    def lengths(self) -> tuple[float, ...]:
        return tuple(hi - lo for lo, hi in self.bounds)

    def axis_names(self) -> tuple[str, ...]:
        return AXIS_NAMES[: self.dim]


@dataclass(frozen=True)
class BoundaryCondition:
    axis: int
    side: str  # "low", "high", or "both" (periodic pairs)
    kind: BcKind
    value: Expression | None = None


@dataclass(frozen=True)
class Term:
    """One operator term: coeff * nonlinearity(fields) * D^derivs field."""

    coeff: Expression
    derivs: tuple[str, ...]
    field: str
    equation: int = 0
    nonlinearity: Expression | None = None

    @property
    def time_order(self) -> int:
        return sum(1 for d in self.derivs if d == "t")

    def spatial_orders(self, dim: int) -> tuple[int, ...]:
        return tuple(sum(1 for d in self.derivs if d == AXIS_NAMES[a]) for a in range(dim))

    @property
    def is_nonlinear(self) -> bool:
        return self.nonlinearity is not None


@dataclass(frozen=True)
class PdeDefinition:
    unknowns: tuple[str, ...]
    terms: tuple[Term, ...]
    source: tuple[Expression, ...]  # one entry per equation
    type_class: TypeClass
    linearity: Linearity
    stiffness: Stiffness

    @property
    def n_equations(self) -> int:
        return len(self.source)

    def max_time_order(self) -> int:
        return max((t.time_order for t in self.terms), default=0)

    def max_spatial_order(self, dim: int) -> int:
        orders = [max(t.spatial_orders(dim), default=0) for t in self.terms]
        return max(orders, default=0)

    def diffusion_like(self, dim: int) -> bool:
        """True when some term carries an even spatial derivative of order >= 2."""
        for t in self.terms:
            if t.time_order:
                continue
            so = t.spatial_orders(dim)
            if any(o >= 2 for o in so):
                return True
        return False


@dataclass(frozen=True)
class ReferenceSolution:
    kind: ReferenceClass
    expressions: dict | None = None      # field name -> Expression (explicit)
    relation: Expression | None = None   # F(u) = 0 (implicit)
    reference_magnitude: Expression | None = None  # F_ref recipe (implicit)


@dataclass(frozen=True)
class ProblemSpec:
    name: str
    domain: DomainSpec
    pde: PdeDefinition
    boundary: tuple[BoundaryCondition, ...]
    initial: dict | None  # field name -> Expression
    reference: ReferenceSolution
    params: dict = field(default_factory=dict)

    @property
    def periodic(self) -> bool:
        return all(bc.kind == BcKind.PERIODIC for bc in self.boundary)

    def bc_kind(self) -> BcKind:
        kinds = {bc.kind for bc in self.boundary}
        if kinds == {BcKind.PERIODIC}:
            return BcKind.PERIODIC
        if BcKind.NEUMANN in kinds:
            return BcKind.NEUMANN
        return BcKind.DIRICHLET

    @property
    def time_dependent(self) -> bool:
        return not self.domain.steady


@dataclass(frozen=True)
class Finding:
    severity: str  # "fatal" | "warning"
    code: str
    message: str

    @property
    def fatal(self) -> bool:
        return self.severity == "fatal"


def _require(doc: dict, key: str, ctx: str):
    if key not in doc:
        raise SchemaError(f"missing {ctx} key {key!r}")
    return doc[key]


def parse_spec(document) -> ProblemSpec:
    """Parse a problem document (dict, JSON text, or path) into a ProblemSpec."""
    if isinstance(document, (str, Path)):
        text = Path(document).read_text() if Path(str(document)).exists() else str(document)
        try:
            document = json.loads(text)
        except json.JSONDecodeError as exc:
            raise SchemaError(f"document is not valid JSON: {exc}") from None
    if not isinstance(document, dict):
        raise SchemaError("document must be a JSON object")

    name = _require(document, "name", "top-level")
    params = {str(k): float(v) for k, v in document.get("params", {}).items()}

    dom = _require(document, "domain", "top-level")
    dim = int(_require(dom, "dim", "domain"))
    if not 1 <= dim <= 5:
        raise DimensionError(f"dim must be 1..5, got {dim}")
    raw_bounds = _require(dom, "bounds", "domain")
    if len(raw_bounds) != dim:
        raise DimensionError(f"domain has {len(raw_bounds)} bound pairs for dim={dim}")
    bounds = []
    for pair in raw_bounds:
        lo, hi = float(pair[0]), float(pair[1])
        if not lo < hi:
            raise SchemaError(f"axis interval [{lo}, {hi}] is empty")
        bounds.append((lo, hi))
    horizon = dom.get("time_horizon")
    if horizon is not None:
        horizon = float(horizon)
        if horizon < 0:
            raise SchemaError("time_horizon must be >= 0")
    domain = DomainSpec(dim, tuple(bounds), horizon)
    axis_set = set(AXIS_NAMES[:dim])

    pde_doc = _require(document, "pde", "top-level")
    unknowns = tuple(str(u) for u in _require(pde_doc, "unknowns", "pde"))
    if not unknowns:
        raise SchemaError("pde.unknowns is empty")
    field_names = tuple(unknowns)

    raw_terms = _require(pde_doc, "terms", "pde")
    if not raw_terms:
        raise SchemaError("pde.terms is empty: vacuous PDE")
    terms = []
    for i, td in enumerate(raw_terms):
        coeff = as_expression(_require(td, "coeff", f"terms[{i}]"), constants=params)
        derivs = tuple(str(d) for d in td.get("derivs", []))
        for d in derivs:
            if d == "t":
                continue
            if d not in axis_set:
                raise DimensionError(f"derivative axis {d!r} outside dim={dim} in terms[{i}]")
        fld = str(td.get("field", unknowns[0]))
        if fld not in unknowns:
            raise SchemaError(f"terms[{i}] references unknown field {fld!r}")
        eq = int(td.get("eq", 0))
        nl = td.get("nonlinearity")
        nl_expr = as_expression(nl, extra_names=field_names, constants=params) if nl is not None else None
        terms.append(Term(coeff, derivs, fld, eq, nl_expr))

    raw_source = _require(pde_doc, "source", "pde")
    if not isinstance(raw_source, list):
        raw_source = [raw_source]
    source = tuple(as_expression(s, constants=params) for s in raw_source)
    n_eq = max((t.equation for t in terms), default=0) + 1
    if len(source) == 1 and n_eq > 1:
        source = source * n_eq
    if len(source) != n_eq:
        raise SchemaError(f"{len(source)} source entries for {n_eq} equations")

    try:
        type_class = TypeClass(str(_require(pde_doc, "type_class", "pde")).lower())
        linearity = Linearity(str(_require(pde_doc, "linearity", "pde")).lower())
    except ValueError as exc:
        raise SchemaError(str(exc)) from None
    stiff_raw = pde_doc.get("stiffness")
    if stiff_raw is None:
        # heuristic default: diffusion term present on a time-dependent problem
        # makes explicit stepping dt-limited, flag as stiff-capable
        has_diff = any(
            (not t.time_order) and any(o >= 2 for o in t.spatial_orders(dim))
            for t in terms
        )
        stiffness = Stiffness.STIFF_CAPABLE if (has_diff and horizon is not None) else Stiffness.NONSTIFF
    else:
        try:
            stiffness = Stiffness(str(stiff_raw).lower().replace("-", "_"))
        except ValueError as exc:
            raise SchemaError(str(exc)) from None
    pde = PdeDefinition(unknowns, tuple(terms), source, type_class, linearity, stiffness)

    raw_bcs = _require(document, "boundary", "top-level")
    bcs = []
    for i, bd in enumerate(raw_bcs):
        axis = int(_require(bd, "axis", f"boundary[{i}]"))
        if not 0 <= axis < dim:
            raise DimensionError(f"boundary[{i}] axis {axis} outside dim={dim}")
        try:
            kind = BcKind(str(_require(bd, "kind", f"boundary[{i}]")).lower())
        except ValueError as exc:
            raise SchemaError(str(exc)) from None
        side = str(bd.get("side", "both" if kind == BcKind.PERIODIC else ""))
        if kind != BcKind.PERIODIC and side not in ("low", "high"):
            raise SchemaError(f"boundary[{i}] needs side 'low' or 'high'")
        value = bd.get("value")
        vexpr = as_expression(value, constants=params) if value is not None else None
        bcs.append(BoundaryCondition(axis, side or "both", kind, vexpr))

    initial_doc = document.get("initial")
    initial = None
    if initial_doc:
        initial = {
            str(k): as_expression(v, constants=params) for k, v in initial_doc.items()
        }

    ref_doc = _require(document, "reference", "top-level")
    try:
        ref_class = ReferenceClass(str(_require(ref_doc, "class", "reference")).lower())
    except ValueError as exc:
        raise SchemaError(str(exc)) from None
    expressions = relation = magnitude = None
    if ref_class == ReferenceClass.EXPLICIT_ANALYTIC:
        raw = _require(ref_doc, "expression", "reference")
        if isinstance(raw, dict):
            expressions = {str(k): as_expression(v, constants=params) for k, v in raw.items()}
        else:
            expressions = {unknowns[0]: as_expression(raw, constants=params)}
        missing = set(unknowns) - set(expressions)
        if missing:
            raise SchemaError(f"reference.expression missing fields {sorted(missing)}")
    elif ref_class == ReferenceClass.IMPLICIT_ANALYTIC:
        relation = as_expression(
            _require(ref_doc, "relation", "reference"), extra_names=field_names, constants=params
        )
        magnitude = as_expression(
            ref_doc.get("reference_magnitude", unknowns[0]),
            extra_names=field_names,
            constants=params,
        )
    reference = ReferenceSolution(ref_class, expressions, relation, magnitude)

    return ProblemSpec(str(name), domain, pde, tuple(bcs), initial, reference, params)


def serialize_spec(spec: ProblemSpec) -> dict:
    """Inverse of parse_spec; parse_spec(serialize_spec(s)) == s field-wise."""
    doc = {
        "name": spec.name,
        "domain": {
            "dim": spec.domain.dim,
            "bounds": [list(b) for b in spec.domain.bounds],
        },
        "pde": {
            "unknowns": list(spec.pde.unknowns),
            "terms": [],
            "source": [s.text for s in spec.pde.source]
            if len(spec.pde.source) > 1
            else spec.pde.source[0].text,
            "type_class": spec.pde.type_class.value,
            "linearity": spec.pde.linearity.value,
            "stiffness": spec.pde.stiffness.value,
        },
        "boundary": [],
        "reference": {"class": spec.reference.kind.value},
    }
    if spec.domain.time_horizon is not None:
        doc["domain"]["time_horizon"] = spec.domain.time_horizon
    for t in spec.pde.terms:
        td = {"coeff": t.coeff.text, "derivs": list(t.derivs)}
        if t.field != spec.pde.unknowns[0]:
            td["field"] = t.field
        if t.equation:
            td["eq"] = t.equation
        if t.nonlinearity is not None:
            td["nonlinearity"] = t.nonlinearity.text
        doc["pde"]["terms"].append(td)
    for bc in spec.boundary:
        bd = {"axis": bc.axis, "kind": bc.kind.value}
        if bc.side != "both":
            bd["side"] = bc.side
        if bc.value is not None:
            bd["value"] = bc.value.text
        doc["boundary"].append(bd)
    if spec.initial:
        doc["initial"] = {k: v.text for k, v in spec.initial.items()}
    if spec.reference.expressions:
        doc["reference"]["expression"] = {
            k: v.text for k, v in spec.reference.expressions.items()
        }
    if spec.reference.relation is not None:
        doc["reference"]["relation"] = spec.reference.relation.text
        doc["reference"]["reference_magnitude"] = spec.reference.reference_magnitude.text
    if spec.params:
        doc["params"] = dict(spec.params)
    return doc


@dataclass(frozen=True)
class ProblemClass:
    """Coarse feature tuple driving method-family compatibility."""

    dim: int
    type_class: TypeClass
    linearity: Linearity
    stiffness: Stiffness
    bc_kind: BcKind
    shock_risk: bool
    steady: bool
    n_fields: int


def classify_problem(spec: ProblemSpec) -> ProblemClass:
    pde = spec.pde
    shock_risk = (
        pde.linearity == Linearity.NONLINEAR
        and pde.type_class == TypeClass.HYPERBOLIC
    )
    # nonlinear first-order transport without any diffusive term also steepens
    if (
        pde.linearity == Linearity.NONLINEAR
        and pde.type_class == TypeClass.SYSTEM
        and not pde.diffusion_like(spec.domain.dim)
    ):
        shock_risk = True
    return ProblemClass(
        dim=spec.domain.dim,
        type_class=pde.type_class,
        linearity=pde.linearity,
        stiffness=pde.stiffness,
        bc_kind=spec.bc_kind(),
        shock_risk=shock_risk,
        steady=spec.domain.steady,
        n_fields=len(pde.unknowns),
    )


def validate_spec(spec: ProblemSpec) -> list[Finding]:
    """Check type invariants; returns findings instead of raising."""
    findings = []

    def fatal(code, msg):
        findings.append(Finding("fatal", code, msg))

    def warn(code, msg):
        findings.append(Finding("warning", code, msg))

    dom, pde = spec.domain, spec.pde

    time_order = pde.max_time_order()
    if pde.type_class == TypeClass.ELLIPTIC:
        if time_order > 0:
            fatal("elliptic-time-deriv", "elliptic problem carries a time derivative")
        if dom.time_horizon is not None:
            fatal("elliptic-horizon", "elliptic problem declares a time horizon")
        if spec.initial:
            fatal("elliptic-initial", "elliptic problem declares initial conditions")
    else:
        if time_order == 0:
            fatal("missing-time-deriv", f"{pde.type_class.value} problem has no time derivative")
        if dom.time_horizon is None:
            fatal("missing-horizon", "time-dependent problem lacks time_horizon")
        if not spec.initial:
            fatal("missing-initial", "time-dependent problem lacks initial conditions")
        else:
            # second-order-in-time problems may add "<field>_t" velocity entries
            missing = set(pde.unknowns) - set(spec.initial)
            extras = set(spec.initial) - set(pde.unknowns)
            extras -= {f"{u}_t" for u in pde.unknowns} if pde.max_time_order() >= 2 else set()
            if missing or extras:
                fatal("initial-fields", "initial conditions do not cover every unknown")

    # face coverage: periodic covers a whole axis, otherwise low+high both needed
    for axis in range(dom.dim):
        axis_bcs = [bc for bc in spec.boundary if bc.axis == axis]
        if not axis_bcs:
            fatal("bc-missing-axis", f"axis {axis} has no boundary conditions")
            continue
        kinds = {bc.kind for bc in axis_bcs}
        if BcKind.PERIODIC in kinds:
            if len(kinds) > 1:
                fatal("bc-mixed-periodic", f"axis {axis} mixes periodic and non-periodic faces")
            continue
        sides = {bc.side for bc in axis_bcs}
        if not {"low", "high"} <= sides:
            fatal("bc-missing-face", f"axis {axis} lacks both faces, has {sorted(sides)}")
        for bc in axis_bcs:
            if bc.value is None:
                fatal("bc-missing-value", f"{bc.kind.value} face on axis {axis} lacks a value")

    has_nl = any(t.is_nonlinear for t in pde.terms)
    if has_nl and pde.linearity == Linearity.LINEAR:
        fatal("linearity-mismatch", "nonlinear terms present but linearity declared linear")
    if not has_nl and pde.linearity == Linearity.NONLINEAR:
        warn("linearity-unused", "declared nonlinear but no nonlinearity tags present")

    if pde.type_class == TypeClass.HYPERBOLIC and pde.max_time_order() > 2:
        warn("time-order", "time order above 2 is unusual for hyperbolic problems")
    if len(pde.unknowns) > 1 and pde.type_class != TypeClass.SYSTEM and pde.n_equations > 1:
        warn("system-class", "multiple equations usually classify as system")

    return findings
