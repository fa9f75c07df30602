"""Geometric objects attached to a first-order autonomous ODE system.

For x' = X(x) on R^n (one fixed global chart, Euclidean metric, n >= 2) the
engine derives, from the Jacobian J of the field:

    nonlinear connection   N = -1/2 (J - J^T)
    torsion slices         R_k = dN/dx^k            (one matrix per state)
    electromagnetic 2-form F = -N
    Yang-Mills energy      EYM = 1/2 Tr(F F^T) = sum_{i<j} F_ij^2

The adapted components of the generalized Cartan connection and of the
curvature tensor vanish identically in this flat setting; they are kept as
explicit zero objects so reports stay item-by-item complete. F satisfies the
cyclic Maxwell identity with the covariant derivative reduced to the plain
partial derivative, which `maxwell_check` verifies numerically.
"""

from __future__ import annotations

import math
import random
from dataclasses import dataclass, field
from types import MappingProxyType
from typing import Callable, Iterator, Mapping, Sequence

import numpy as np

from .expr import (
    Box,
    EvaluationError,
    Expr,
    Neg,
    Num,
    Sub,
    differentiate,
    evaluate,
    free_symbols,
    parse_expression,
    sample_deviation,
    simplify,
    to_string,
)

__all__ = [
    "OdeSystem",
    "ExprMatrix",
    "VerificationRecord",
    "VanishingTensor",
    "GeometryReport",
    "jacobian",
    "nonlinear_connection",
    "cartan_connection",
    "torsion",
    "curvature",
    "electromagnetic_form",
    "yang_mills_energy",
    "maxwell_check",
    "antisymmetry_check",
    "analyze",
    "default_domain",
]

#: absolute tolerance scale for polynomial identities
POLY_TOL = 1e-12
#: relative tolerance for rational-function identities
RATIONAL_TOL = 1e-9


@dataclass(frozen=True)
class ExprMatrix:
    """Dense matrix of expressions, row-major."""

    rows: int
    cols: int
    entries: tuple[Expr, ...]

    def __post_init__(self):
        if len(self.entries) != self.rows * self.cols:
            raise ValueError(
                f"expected {self.rows * self.cols} entries, got {len(self.entries)}"
            )

    @classmethod
    def from_rows(cls, rows: Sequence[Sequence[Expr]]) -> "ExprMatrix":
        ncols = len(rows[0])
        if any(len(r) != ncols for r in rows):
            raise ValueError("ragged rows")
        return cls(len(rows), ncols, tuple(e for row in rows for e in row))

    def entry(self, i: int, j: int) -> Expr:
        if not (0 <= i < self.rows and 0 <= j < self.cols):
            raise IndexError(f"index ({i}, {j}) out of range")
        return self.entries[i * self.cols + j]

    def __getitem__(self, ij: tuple[int, int]) -> Expr:
        return self.entry(*ij)

    def transpose(self) -> "ExprMatrix":
        return ExprMatrix(
            self.cols,
            self.rows,
            tuple(self.entry(i, j) for j in range(self.cols) for i in range(self.rows)),
        )

    def map(self, fn: Callable[[Expr], Expr]) -> "ExprMatrix":
        return ExprMatrix(self.rows, self.cols, tuple(fn(e) for e in self.entries))

    def evaluate(self, bindings: Mapping[str, float]) -> np.ndarray:
        values = [evaluate(e, bindings) for e in self.entries]
        return np.array(values, dtype=float).reshape(self.rows, self.cols)

    def __iter__(self) -> Iterator[Expr]:
        return iter(self.entries)

    def __str__(self) -> str:
        grid = [
            [to_string(self.entry(i, j)) for j in range(self.cols)]
            for i in range(self.rows)
        ]
        widths = [max(len(grid[i][j]) for i in range(self.rows)) for j in range(self.cols)]
        lines = [
            "[ " + ", ".join(grid[i][j].ljust(widths[j]) for j in range(self.cols)) + " ]"
            for i in range(self.rows)
        ]
        return "\n".join(lines)


def zero_matrix(n: int) -> ExprMatrix:
    return ExprMatrix(n, n, tuple(Num(0.0) for _ in range(n * n)))


@dataclass(frozen=True)
class OdeSystem:
    """First-order autonomous system x' = X(x) with named states and parameters."""

    state_names: tuple[str, ...]
    components: tuple[Expr, ...]
    params: Mapping[str, float] = field(default_factory=dict)

    def __post_init__(self):
        object.__setattr__(self, "params", MappingProxyType(dict(self.params)))
        n = len(self.state_names)
        if n < 2:
            raise ValueError(f"need at least 2 state variables, got {n}")
        if len(set(self.state_names)) != n:
            raise ValueError("duplicate state variable names")
        if len(self.components) != n:
            raise ValueError(
                f"{n} states but {len(self.components)} component expressions"
            )
        overlap = set(self.state_names) & set(self.params)
        if overlap:
            raise ValueError(f"names used as both state and parameter: {sorted(overlap)}")
        allowed = set(self.state_names) | set(self.params)
        for name, comp in zip(self.state_names, self.components):
            stray = free_symbols(comp) - allowed
            if stray:
                raise ValueError(
                    f"component for {name!r} uses undeclared symbols: {sorted(stray)}"
                )

    @property
    def n(self) -> int:
        return len(self.state_names)

    @classmethod
    def from_strings(
        cls,
        state_names: Sequence[str],
        components: Sequence[str],
        params: Mapping[str, float] | None = None,
    ) -> "OdeSystem":
        params = dict(params or {})
        known = list(state_names) + list(params)
        exprs = tuple(parse_expression(text, known) for text in components)
        return cls(tuple(state_names), exprs, params)


@dataclass(frozen=True)
class VerificationRecord:
    """Outcome of one numeric identity check."""

    name: str
    passed: bool
    max_deviation: float
    tolerance: float
    detail: str = ""

    def status_line(self) -> str:
        status = "PASS" if self.passed else "FAIL"
        return f"{status} {self.name} {self.max_deviation:.3e}"


@dataclass(frozen=True)
class VanishingTensor:
    """Component collection known to vanish identically; kept for report symmetry."""

    name: str
    shape: tuple[int, ...]
    note: str

    def matrices(self) -> list[ExprMatrix]:
        lead = 1
        for dim in self.shape[:-2]:
            lead *= dim
        return [zero_matrix(self.shape[-1]) for _ in range(lead)]


@dataclass(frozen=True)
class GeometryReport:
    """Everything the engine derives for one system, plus identity verdicts."""

    jacobian: ExprMatrix
    connection: ExprMatrix
    torsion: tuple[ExprMatrix, ...]
    electromagnetic: ExprMatrix
    yang_mills_energy: Expr
    cartan_vanishes: VerificationRecord
    curvature_vanishes: VerificationRecord
    maxwell: VerificationRecord
    antisymmetry: VerificationRecord

    def records(self) -> tuple[VerificationRecord, ...]:
        return (self.cartan_vanishes, self.curvature_vanishes, self.maxwell, self.antisymmetry)

    @property
    def passed(self) -> bool:
        return all(rec.passed for rec in self.records())


# ---------------------------------------------------------------------------
# derived objects


def jacobian(s: OdeSystem) -> ExprMatrix:
    """Matrix of partials dX^i/dx^j."""
    entries = tuple(
        differentiate(comp, name) for comp in s.components for name in s.state_names
    )
    return ExprMatrix(s.n, s.n, entries)


def nonlinear_connection(s: OdeSystem) -> ExprMatrix:
    """Canonical nonlinear connection N = -1/2 (J - J^T); antisymmetric."""
    J = jacobian(s)
    entries = tuple(
        simplify(Num(-0.5) * Sub(J[i, j], J[j, i]))
        for i in range(s.n)
        for j in range(s.n)
    )
    return ExprMatrix(s.n, s.n, entries)


def cartan_connection(s: OdeSystem) -> VanishingTensor:
    """Generalized Cartan connection; every adapted component is zero here."""
    return VanishingTensor(
        name="cartan_connection",
        shape=(s.n, s.n, s.n),
        note="vanishes identically for the Euclidean pair (unit temporal metric, delta_ij)",
    )


def torsion(s: OdeSystem) -> list[ExprMatrix]:
    """Torsion slices R_k = dN/dx^k, one antisymmetric matrix per state."""
    N = nonlinear_connection(s)
    return [N.map(lambda e, name=name: differentiate(e, name)) for name in s.state_names]


def curvature(s: OdeSystem) -> VanishingTensor:
    """Curvature of the generalized Cartan connection; identically zero here."""
    return VanishingTensor(
        name="curvature",
        shape=(s.n, s.n, s.n),
        note="vanishes identically for the Euclidean pair (unit temporal metric, delta_ij)",
    )


def electromagnetic_form(s: OdeSystem) -> ExprMatrix:
    """Electromagnetic 2-form component matrix F = -N (entrywise negation)."""
    return nonlinear_connection(s).map(lambda e: simplify(Neg(e)))


def yang_mills_energy(s: OdeSystem, cross_check: bool = True) -> Expr:
    """Yang-Mills energy sum_{i<j} F_ij^2, cross-checked against 1/2 Tr(F F^T)."""
    F = electromagnetic_form(s)
    triangular: Expr = Num(0.0)
    for i in range(s.n):
        for j in range(i + 1, s.n):
            triangular = triangular + F[i, j] ** 2
    triangular = simplify(triangular)
    if cross_check:
        full: Expr = Num(0.0)
        for i in range(s.n):
            for j in range(s.n):
                full = full + F[i, j] ** 2
        trace_form = simplify(Num(0.5) * full)
        box = {name: (0.1, 2.0) for name in free_symbols(triangular) | free_symbols(trace_form)}
        dev = sample_deviation(triangular, trace_form, box)
        if dev > RATIONAL_TOL:
            raise ArithmeticError(
                f"energy cross-check failed: trace and triangular forms differ by {dev:.3e}"
            )
    return triangular


# ---------------------------------------------------------------------------
# numeric identity checks


def default_domain(s: OdeSystem, lo: float = 0.1, hi: float = 2.0) -> dict[str, tuple[float, float]]:
    return {name: (lo, hi) for name in s.state_names}


def _validate_state_box(s: OdeSystem, domain: Box) -> None:
    missing = set(s.state_names) - set(domain)
    if missing:
        raise ValueError(f"domain box missing state variables: {sorted(missing)}")
    for name in s.state_names:
        lo, hi = domain[name]
        if not (lo < hi):
            raise ValueError(f"degenerate domain box for '{name}': [{lo}, {hi}]")


def _sample_points(
    s: OdeSystem,
    domain: Box,
    samples: int,
    seed: int,
    probes: Sequence[Expr],
) -> list[dict[str, float]]:
    """Draw state samples (parameters bound from the system); redraw singular points."""
    rng = random.Random(seed)
    names = sorted(set(domain) & set(s.state_names))
    points: list[dict[str, float]] = []
    draws = 0
    limit = 10 * samples
    while len(points) < samples:
        if draws >= limit:
            raise EvaluationError(
                f"more than 90% of {draws} sample draws hit singularities"
            )
        draws += 1
        point = dict(s.params)
        point.update({name: rng.uniform(*domain[name]) for name in names})
        try:
            values = [evaluate(p, point) for p in probes]
        except EvaluationError:
            continue
        if not all(math.isfinite(v) for v in values):
            continue
        points.append(point)
    return points


def maxwell_check(
    s: OdeSystem,
    domain: Box,
    samples: int = 32,
    seed: int = 0,
) -> VerificationRecord:
    """Cyclic identity d_k F_ij + d_i F_jk + d_j F_ki = 0 over all index triples.

    The covariant derivative reduces to the plain partial derivative in this
    flat setting. Evaluated at sampled points; the tolerance scales with the
    largest partial-derivative magnitude seen.
    """
    _validate_state_box(s, domain)
    F = electromagnetic_form(s)
    dF = [
        [[differentiate(F[i, j], name) for j in range(s.n)] for i in range(s.n)]
        for name in s.state_names
    ]
    flat = [e for per_k in dF for row in per_k for e in row]
    points = _sample_points(s, domain, samples, seed, flat)
    worst = 0.0
    scale = 0.0
    for point in points:
        vals = np.array([[ [evaluate(dF[k][i][j], point) for j in range(s.n)]
                           for i in range(s.n)] for k in range(s.n)])
        scale = max(scale, float(np.max(np.abs(vals))))
        for i in range(s.n):
            for j in range(s.n):
                for k in range(s.n):
                    cyc = vals[k][i][j] + vals[i][j][k] + vals[j][k][i]
                    worst = max(worst, abs(cyc))
    tol = RATIONAL_TOL * (1.0 + scale)
    return VerificationRecord("maxwell", worst <= tol, worst, tol)


def antisymmetry_check(
    s: OdeSystem,
    domain: Box,
    samples: int = 32,
    seed: int = 0,
) -> VerificationRecord:
    """N + N^T = 0, F + F^T = 0 and F = -N entrywise at sampled points."""
    _validate_state_box(s, domain)
    N = nonlinear_connection(s)
    F = electromagnetic_form(s)
    points = _sample_points(s, domain, samples, seed, tuple(N) + tuple(F))
    worst = 0.0
    scale = 0.0
    for point in points:
        nv = N.evaluate(point)
        fv = F.evaluate(point)
        scale = max(scale, float(np.max(np.abs(nv))), float(np.max(np.abs(fv))))
        worst = max(
            worst,
            float(np.max(np.abs(nv + nv.T))),
            float(np.max(np.abs(fv + fv.T))),
            float(np.max(np.abs(fv + nv))),
        )
    tol = POLY_TOL * (1.0 + scale)
    return VerificationRecord("antisymmetry", worst <= tol, worst, tol)


def analyze(
    s: OdeSystem,
    domain: Box | None = None,
    samples: int = 32,
    seed: int = 0,
) -> GeometryReport:
    """Compute every derived object for one system and verify its identities."""
    if domain is None:
        domain = default_domain(s)
    cartan = cartan_connection(s)
    curv = curvature(s)
    return GeometryReport(
        jacobian=jacobian(s),
        connection=nonlinear_connection(s),
        torsion=tuple(torsion(s)),
        electromagnetic=electromagnetic_form(s),
        yang_mills_energy=yang_mills_energy(s),
        cartan_vanishes=VerificationRecord("cartan_connection_vanishes", True, 0.0, 0.0, cartan.note),
        curvature_vanishes=VerificationRecord("curvature_vanishes", True, 0.0, 0.0, curv.note),
        maxwell=maxwell_check(s, domain, samples=samples, seed=seed),
        antisymmetry=antisymmetry_check(s, domain, samples=samples, seed=seed),
    )
