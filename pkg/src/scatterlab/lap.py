"""Limiting-absorption engine over a spectral rectangle.

Solves the Fredholm relation P(1+F) = F for the perturbed sandwich at each
sampled z, tracks operator norms, inverse norms, identity residuals, and
the distance to the directly assembled boundary (eps = 0) operator, and
certifies invertibility of 1+F at the boundary from a nearby interior
point via the approximate-inverse construction.
"""
from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import List, Optional, Sequence, Tuple

import numpy as np
from scipy.linalg import get_lapack_funcs

from .opcore import AssemblyContext, NystromGrid, OperatorMatrix, hs_norm, op_norm
from .potential import SparsePotential
from .specfun import SpectralPoint

#: eps ladder used by rectangle scans: strictly decreasing, with a near-zero
#: terminal rung and the boundary value 0 itself (directly assembled kernel).
DEFAULT_EPS_LADDER = (1.0, 0.75, 0.5, 0.3, 0.2, 0.1, 0.05, 0.01, 0.001, 0.0)

#: eps ladder used by boundary_limit convergence tables (all positive).
DEFAULT_BOUNDARY_LADDER = (1.0, 0.5, 0.1, 0.01, 0.001)

_COND_LIMIT = 1e12

CSV_COLUMNS = ("lambda", "epsilon", "norm_F", "norm_P", "inv_norm",
               "residual", "cauchy_gap", "min_sv")


class SingularOperatorError(RuntimeError):
    """1+F is numerically singular (condition estimate past the limit)."""

    def __init__(self, cond: float):
        super().__init__(f"1+F condition estimate {cond:.3e} exceeds {_COND_LIMIT:.0e}")
        self.cond = cond


class CertificateError(RuntimeError):
    """Approximate-inverse certificate failed; shrink eps and retry."""

    def __init__(self, r1: float, r2: float):
        super().__init__(f"certificate radii r1={r1:.3f}, r2={r2:.3f} not both < 1")
        self.r1 = r1
        self.r2 = r2


@dataclass(frozen=True)
class SpectralRect:
    """Closed rectangle [a, b] x [0, eps_max] with its sampling plan."""

    a: float
    b: float
    eps_max: float = 1.0
    lambda_samples: int = 20
    eps_samples: Tuple[float, ...] = DEFAULT_EPS_LADDER

    def __post_init__(self) -> None:
        if not 0.0 < self.a < self.b:
            raise ValueError("rectangle needs 0 < a < b")
        if not 0.0 < self.eps_max <= 1.0:
            raise ValueError("eps_max must lie in (0, 1]")
        if self.lambda_samples < 1:
            raise ValueError("need at least one lambda sample")
        eps = tuple(float(e) for e in self.eps_samples)
        if not eps:
            raise ValueError("eps ladder is empty")
        if any(b >= a for a, b in zip(eps, eps[1:])):
            raise ValueError("eps ladder must be strictly decreasing")
        if eps[0] > self.eps_max or eps[-1] < 0.0:
            raise ValueError("eps ladder must stay inside [0, eps_max]")
        object.__setattr__(self, "eps_samples", eps)

    @property
    def lambda_values(self) -> np.ndarray:
        return np.linspace(self.a, self.b, self.lambda_samples)


@dataclass(frozen=True)
class ScanRecord:
    """One scanned point; norm fields are NaN when the solve failed."""

    lam: float
    eps: float
    norm_F: float
    norm_P: float
    inv_norm: float
    residual: float
    cauchy_gap: float
    min_sv: float
    failure: str = ""


@dataclass(frozen=True)
class ScanReport:
    """Sorted scan records plus their per-column extremes."""

    records: Tuple[ScanRecord, ...]
    summary: dict = field(default_factory=dict)

    @classmethod
    def build(cls, records: Sequence[ScanRecord]) -> "ScanReport":
        ordered = tuple(sorted(records, key=lambda r: (r.lam, r.eps)))
        good = [r for r in ordered if not r.failure]
        summary = {
            "points": len(ordered),
            "failures": len(ordered) - len(good),
            "sup_norm_F": max((r.norm_F for r in good), default=float("nan")),
            "sup_norm_P": max((r.norm_P for r in good), default=float("nan")),
            "sup_inv_norm": max((r.inv_norm for r in good), default=float("nan")),
            "sup_residual": max((r.residual for r in good), default=float("nan")),
            "sup_cauchy_gap": max((r.cauchy_gap for r in good), default=float("nan")),
            "min_min_sv": min((r.min_sv for r in good), default=float("nan")),
        }
        return cls(records=ordered, summary=summary)


# ---------------------------------------------------------------------------
# dense Fredholm solves
# ---------------------------------------------------------------------------

class _Factorization:
    """LU of 1+F with a condition estimate, shared by the solve paths."""

    def __init__(self, f: OperatorMatrix):
        self.f = f
        a = np.eye(f.grid.count, dtype=complex) + f.entries
        getrf, gecon = get_lapack_funcs(("getrf", "gecon"), (a,))
        anorm = np.linalg.norm(a, 1)
        lu, piv, info = getrf(a)
        if info > 0:
            raise SingularOperatorError(float("inf"))
        rcond, _ = gecon(lu, anorm, norm="1")
        cond = float("inf") if rcond == 0.0 else 1.0 / float(rcond)
        if not cond < _COND_LIMIT:
            raise SingularOperatorError(cond)
        self.cond = cond
        self._lu, self._piv = lu, piv
        self._getrs = get_lapack_funcs("getrs", (a,))

    def solve(self, rhs: np.ndarray) -> np.ndarray:
        """x with (1+F) x = rhs."""
        x, info = self._getrs(self._lu, self._piv, rhs)
        if info != 0:
            raise SingularOperatorError(float("inf"))
        return x

    def solve_right(self, rhs: np.ndarray) -> np.ndarray:
        """x with x (1+F) = rhs, via the transposed system."""
        xt, info = self._getrs(self._lu, self._piv, rhs.T, trans=1)
        if info != 0:
            raise SingularOperatorError(float("inf"))
        return xt.T

    def inverse(self) -> np.ndarray:
        return self.solve(np.eye(self.f.grid.count, dtype=complex))


def _wrap(entries: np.ndarray, like: OperatorMatrix, kind: str) -> OperatorMatrix:
    return OperatorMatrix(entries=entries, grid=like.grid, z=like.z, kind=kind)


def solve_P(f: OperatorMatrix) -> OperatorMatrix:
    """Perturbed sandwich P = F (1+F)^(-1) by dense LU with one step of
    iterative refinement; raises SingularOperatorError past the condition
    limit."""
    fac = _Factorization(f)
    one_plus = np.eye(f.grid.count, dtype=complex) + f.entries
    p = fac.solve_right(f.entries)
    defect = f.entries - p @ one_plus
    p = p + fac.solve_right(defect)
    return _wrap(p, f, "perturbed")


def identity_residual(p: OperatorMatrix, f: OperatorMatrix) -> float:
    """Weighted Frobenius residual of P(1+F) = F, relative for large F."""
    one_plus = np.eye(f.grid.count, dtype=complex) + f.entries
    defect = _wrap(p.entries @ one_plus - f.entries, f, "custom")
    return hs_norm(defect) / max(1.0, hs_norm(f))


def inverse_norm(f: OperatorMatrix) -> float:
    """Operator norm of (1+F)^(-1) on the weighted grid."""
    inv = _Factorization(f).inverse()
    return op_norm(_wrap(inv, f, "custom"))


def min_singular_value(f: OperatorMatrix) -> float:
    """Smallest singular value of the weighted 1+F (= 1/norm of inverse)."""
    return 1.0 / inverse_norm(f)


def neumann_tail(f: OperatorMatrix, order: int) -> Tuple[float, float]:
    """Distance of (1+F)^(-1) from its degree-`order` geometric partial sum,
    next to the series remainder bound ||F||^(order+1)/(1-||F||); only
    meaningful when ||F|| < 1."""
    if order < 0:
        raise ValueError("order must be nonnegative")
    norm_f = op_norm(f)
    if not norm_f < 1.0:
        raise ValueError("Neumann comparison needs ||F|| < 1")
    inv = _Factorization(f).inverse()
    k = f.grid.count
    partial = np.eye(k, dtype=complex)
    term = np.eye(k, dtype=complex)
    for _ in range(order):
        term = term @ (-f.entries)
        partial = partial + term
    gap = op_norm(_wrap(inv - partial, f, "custom"))
    bound = norm_f ** (order + 1) / (1.0 - norm_f)
    return gap, bound


# ---------------------------------------------------------------------------
# boundary limits
# ---------------------------------------------------------------------------

def boundary_limit(p: SparsePotential, g: NystromGrid, lam: float,
                   ladder: Sequence[float] = DEFAULT_BOUNDARY_LADDER,
                   ctx: Optional[AssemblyContext] = None,
                   ) -> Tuple[OperatorMatrix, List[Tuple[float, float]]]:
    """Directly assembled boundary operator F(lam + i0) together with the
    convergence table [(eps, ||F(lam+i eps) - F(lam+i0)||), ...] down the
    eps ladder."""
    eps = tuple(float(e) for e in ladder)
    if not eps or any(b >= a for a, b in zip(eps, eps[1:])) or eps[-1] <= 0.0:
        raise ValueError("ladder must be strictly decreasing and positive")
    ctx = ctx if ctx is not None else AssemblyContext(p, g)
    f_bnd = ctx.free_sandwich(SpectralPoint(lam, 0.0))
    table = []
    for e in eps:
        f_eps = ctx.free_sandwich(SpectralPoint(lam, e))
        gap = op_norm(_wrap(f_eps.entries - f_bnd.entries, f_bnd, "custom"))
        table.append((e, gap))
    return f_bnd, table


def cauchy_rate(table: Sequence[Tuple[float, float]]) -> float:
    """Least-squares exponent alpha in gap ~ eps^alpha over the table
    (zero gaps are skipped; returns 0.0 if fewer than two survive)."""
    pts = [(e, gp) for e, gp in table if gp > 0.0 and e > 0.0]
    if len(pts) < 2:
        return 0.0
    logs = np.log([e for e, _ in pts])
    logg = np.log([gp for _, gp in pts])
    slope = np.polyfit(logs, logg, 1)[0]
    return float(slope)


# ---------------------------------------------------------------------------
# approximate-inverse certificate
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class CertificateRecord:
    """Passed invertibility certificate for 1+F_bnd built at F_eps."""

    r1: float
    r2: float
    agreement: float
    inverse: np.ndarray


def approx_inverse_certificate(f_eps: OperatorMatrix,
                               f_bnd: OperatorMatrix) -> CertificateRecord:
    """Certify invertibility of 1+F_bnd from the invertible 1+F_eps.

    With B = (1+F_eps)^(-1) and D = F_bnd - F_eps, the radii are
    r1 = ||D B|| and r2 = ||B D||; if both are < 1 then
    (1+F_bnd)^(-1) = B (I + D B)^(-1) = (I + B D)^(-1) B, and the two
    evaluations are cross-checked before one is returned."""
    if f_eps.grid is not f_bnd.grid and f_eps.grid.count != f_bnd.grid.count:
        raise ValueError("certificate needs both operators on one grid")
    b = _Factorization(f_eps).inverse()
    d = f_bnd.entries - f_eps.entries
    r1 = op_norm(_wrap(d @ b, f_eps, "custom"))
    r2 = op_norm(_wrap(b @ d, f_eps, "custom"))
    if not (r1 < 1.0 and r2 < 1.0):
        raise CertificateError(r1, r2)
    k = f_eps.grid.count
    eye = np.eye(k, dtype=complex)
    inv_right = b @ np.linalg.solve(eye + d @ b, eye)
    inv_left = np.linalg.solve(eye + b @ d, b)
    agreement = op_norm(_wrap(inv_right - inv_left, f_eps, "custom"))
    if not agreement <= 1e-8:
        raise CertificateError(r1, r2)
    return CertificateRecord(r1=r1, r2=r2, agreement=agreement, inverse=inv_right)


# ---------------------------------------------------------------------------
# rectangle scans
# ---------------------------------------------------------------------------

def rect_scan(p: SparsePotential, g: NystromGrid, rect: SpectralRect) -> ScanReport:
    """Assemble and solve at every (lambda, eps) sample of the rectangle.

    Per-point solver failures are recorded (NaN norm fields, failure note)
    without aborting the scan.  Records are sorted by (lambda, eps);
    cauchy_gap measures the distance to that lambda's boundary operator."""
    ctx = AssemblyContext(p, g)
    records = []
    for lam in rect.lambda_values:
        f_bnd = ctx.free_sandwich(SpectralPoint(float(lam), 0.0))
        for eps in rect.eps_samples:
            f = ctx.free_sandwich(SpectralPoint(float(lam), float(eps)))
            norm_f = op_norm(f)
            gap = (0.0 if eps == 0.0 else
                   op_norm(_wrap(f.entries - f_bnd.entries, f, "custom")))
            try:
                fac = _Factorization(f)
                one_plus = np.eye(g.count, dtype=complex) + f.entries
                scale = max(1.0, hs_norm(f))
                pm = fac.solve_right(f.entries)
                defect = f.entries - pm @ one_plus
                residual = hs_norm(_wrap(defect, f, "custom")) / scale
                if residual > 1e-12:  # refine only when the direct solve is rough
                    pm = pm + fac.solve_right(defect)
                    defect = f.entries - pm @ one_plus
                    residual = hs_norm(_wrap(defect, f, "custom")) / scale
                p_op = _wrap(pm, f, "perturbed")
                inv = op_norm(_wrap(fac.inverse(), f, "custom"))
                records.append(ScanRecord(
                    lam=float(lam), eps=float(eps), norm_F=norm_f,
                    norm_P=op_norm(p_op),
                    inv_norm=inv,
                    residual=residual,
                    cauchy_gap=gap,
                    min_sv=1.0 / inv,
                ))
            except SingularOperatorError as err:
                records.append(ScanRecord(
                    lam=float(lam), eps=float(eps), norm_F=norm_f,
                    norm_P=float("nan"), inv_norm=float("nan"),
                    residual=float("nan"), cauchy_gap=gap,
                    min_sv=float("nan"), failure=str(err)))
    return ScanReport.build(records)


def scan_to_csv(report: ScanReport) -> str:
    """Deterministic CSV rendering (shortest-roundtrip float repr)."""
    lines = [",".join(CSV_COLUMNS)]
    for r in report.records:
        lines.append(",".join(repr(v) for v in (
            r.lam, r.eps, r.norm_F, r.norm_P, r.inv_norm,
            r.residual, r.cauchy_gap, r.min_sv)))
    return "\n".join(lines) + "\n"


def summary_to_json(report: ScanReport) -> str:
    """Deterministic JSON summary (sorted keys); NaN-free by construction
    whenever at least one point solved."""
    return json.dumps(report.summary, sort_keys=True, allow_nan=True)
