"""Linear stability and monotonicity analysis of (penalized) IMEX tableaux.

Notation: ``z = mu*dt/eps`` is the stiffness of the relaxation step and
``alpha = lambda/mu`` the ratio between the true relaxation rate and the
penalization rate.  ``R(z)`` is the stability function of the DIRK part,
``R(alpha, z)`` that of the penalized scheme on the linear relaxation
problem and ``R(alpha, inf)`` its infinitely stiff limit.
"""
from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass, field

import numpy as np

from .tableau import ImexTableau, TableauError, check_ap_conditions, classify

MONO_TOL = 1e-12
BISECT_TOL = 1e-8


class SingularStageError(ArithmeticError):
    pass


def _penalized_matrix(t: ImexTableau, alpha: float):
    B = t.A_im - (alpha - 1.0) * t.A_ex
    c = t.w_im - (alpha - 1.0) * t.w_ex
    return B, c


def _stage_solve(M, rhs, z):
    try:
        return np.linalg.solve(M, rhs)
    except np.linalg.LinAlgError:
        raise SingularStageError(f"stage matrix singular at z={z!r}") from None


def dirk_stability(t: ImexTableau, z: float) -> float:
    """R(z) = 1 - z w^T (I + zA)^-1 e."""
    if z == 0:
        return 1.0
    nu = t.nu
    x = _stage_solve(np.eye(nu) + z * t.A_im, np.ones(nu), z)
    return float(1.0 - z * (t.w_im @ x))


def penalized_stability(t: ImexTableau, alpha: float, z: float) -> float:
    """R(alpha, z) = 1 - z (w - (alpha-1) w_ex)^T (I + z (A - (alpha-1) A_ex))^-1 e."""
    if z == 0:
        return 1.0
    B, c = _penalized_matrix(t, alpha)
    x = _stage_solve(np.eye(t.nu) + z * B, np.ones(t.nu), z)
    return float(1.0 - z * (c @ x))


def stability_at_infinity(t: ImexTableau, alpha, tol: float = 1e-12):
    """Exact limit of R(alpha, z) as z -> inf; ``alpha`` may be an array.

    The penalized stage matrix keeps the implicit diagonal (the explicit
    matrix is strictly lower triangular), so it is invertible for type A
    tableaux at every alpha and has exactly one zero pivot for CK tableaux.
    In the CK case the expansion of (I + zB)^-1 in powers of 1/z gives

        R = 1 - z (c1 - c_hat B_hat^-1 b) - c_hat B_hat^-1 (e + B_hat^-1 b) + O(1/z)

    and the limit is +-inf unless the linear term vanishes.
    """
    scalar = np.ndim(alpha) == 0
    al = np.atleast_1d(np.asarray(alpha, dtype=float))
    s = (al - 1.0)[:, None, None]
    B = t.A_im[None] - s * t.A_ex[None]
    c = t.w_im[None] - s[:, :, 0] * t.w_ex[None]
    d = np.abs(np.diag(t.A_im))
    nu = t.nu
    if np.all(d > 0):
        x = np.linalg.solve(B, np.ones((len(al), nu, 1)))[..., 0]
        r = 1.0 - np.einsum("ki,ki->k", c, x)
    elif d[0] == 0 and np.all(d[1:] > 0):
        Bh = B[:, 1:, 1:]
        b = B[:, 1:, 0]
        ch = c[:, 1:]
        y = np.linalg.solve(np.swapaxes(Bh, 1, 2), ch[..., None])[..., 0]
        linear = c[:, 0] - np.einsum("ki,ki->k", y, b)
        scale = np.maximum(1.0, np.abs(y).max(axis=1) * (np.abs(b).max(axis=1) + 1.0))
        g = np.linalg.solve(Bh, b[..., None])[..., 0]
        r = 1.0 - np.einsum("ki,ki->k", y, 1.0 + g)
        r = np.where(np.abs(linear) > tol * scale, np.copysign(np.inf, -linear), r)
    else:
        raise TableauError(f"{t.name}: stage matrix has an unsupported zero pattern")
    return float(r[0]) if scalar else r


# --------------------------------------------------------------------------
# weak AP range

def _intervals_from_mask(mask):
    """Maximal runs of True as (first_index, last_index) pairs."""
    m = np.concatenate([[False], np.asarray(mask, dtype=bool), [False]])
    d = np.diff(m.astype(np.int8))
    starts = np.flatnonzero(d == 1)
    stops = np.flatnonzero(d == -1) - 1
    return list(zip(starts.tolist(), stops.tolist()))


def _bisect(fun, lo, hi, tol):
    """Boundary of predicate ``fun``: fun(lo) != fun(hi); returns the crossing."""
    flo = fun(lo)
    while hi - lo > tol:
        mid = 0.5 * (lo + hi)
        if fun(mid) == flo:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


def weak_ap_range(t: ImexTableau, alpha_max: float = 16.0, resolution: float = 1e-4,
                  tol: float = BISECT_TOL) -> list[tuple[float, float]]:
    """Maximal open sub-intervals of (0, alpha_max) with |R(alpha, inf)| < 1.

    Scanned on a uniform alpha grid, boundaries refined by bisection.
    """
    n = int(round(alpha_max / resolution))
    alphas = np.linspace(0.0, alpha_max, n + 1)[1:-1]
    mask = np.abs(stability_at_infinity(t, alphas)) < 1.0

    def inside(a):
        return bool(abs(stability_at_infinity(t, a)) < 1.0)

    out = []
    for i0, i1 in _intervals_from_mask(mask):
        lo = 0.0 if i0 == 0 else _bisect(inside, alphas[i0 - 1], alphas[i0], tol)
        hi = alpha_max if i1 == len(alphas) - 1 else _bisect(inside, alphas[i1], alphas[i1 + 1], tol)
        out.append((lo, hi))
    return out


def merge_touching(intervals, gap: float = 1e-6):
    """Join open intervals separated by a single excluded point.

    Returns ``(merged, excluded)`` where ``excluded`` lists the points removed
    from the interior of a merged interval (e.g. an isolated alpha with
    |R(alpha, inf)| = 1).
    """
    merged, excluded = [], []
    for lo, hi in intervals:
        if merged and lo - merged[-1][1] <= gap:
            excluded.append(0.5 * (lo + merged[-1][1]))
            merged[-1] = (merged[-1][0], hi)
        else:
            merged.append((lo, hi))
    return merged, excluded


# --------------------------------------------------------------------------
# absolute monotonicity

def default_z_grid(z_min: float = 1e-3, z_max: float = 1e6, per_decade: int = 400) -> np.ndarray:
    decades = math.log10(z_max) - math.log10(z_min)
    grid = np.logspace(math.log10(z_min), math.log10(z_max), int(round(decades * per_decade)) + 1)
    return np.concatenate([[0.0], grid])


def _standard_ok(t: ImexTableau, z: float) -> bool:
    nu = t.nu
    Minv = np.linalg.inv(np.eye(nu) + z * t.A_im)
    e = np.ones(nu)
    return bool(np.all(Minv @ e >= -MONO_TOL) and np.all(Minv @ (t.A_im @ e) >= -MONO_TOL))


def _penalized_ok(t: ImexTableau, z: float) -> bool:
    nu = t.nu
    Minv = np.linalg.inv(np.eye(nu) + z * t.A_im)
    e = np.ones(nu)
    return bool(np.all(Minv @ e >= -MONO_TOL)
                and np.all(Minv @ ((t.A_im - t.A_ex) @ e) >= -MONO_TOL)
                and np.all(Minv @ t.A_ex >= -MONO_TOL))


@dataclass
class WeightChecks:
    """z-independent conditions on the implicit weights; None when A is singular."""
    one_minus_wAinv_e: float | None
    min_wAinv: float | None
    w_ex_residual: float | None

    @property
    def standard_ok(self) -> bool | None:
        if self.one_minus_wAinv_e is None:
            return None
        return self.one_minus_wAinv_e >= -MONO_TOL and self.min_wAinv >= -MONO_TOL

    @property
    def penalized_ok(self) -> bool | None:
        if self.one_minus_wAinv_e is None:
            return None
        return bool(self.standard_ok and self.w_ex_residual <= MONO_TOL)


def weight_checks(t: ImexTableau) -> WeightChecks:
    try:
        wA = t.w_im @ np.linalg.inv(t.A_im)
    except np.linalg.LinAlgError:
        return WeightChecks(None, None, None)
    if not np.all(np.isfinite(wA)) or np.any(np.abs(np.diag(t.A_im)) == 0):
        return WeightChecks(None, None, None)
    return WeightChecks(float(1.0 - wA.sum()), float(wA.min()),
                        float(np.max(np.abs(t.w_ex - wA @ t.A_ex))))


def _region(pred, grid, tol=BISECT_TOL) -> list[tuple[float, float]]:
    """Closed z-intervals where ``pred`` holds, scanned on ``grid`` and bisected.

    The last interval is open-ended (inf) when the predicate holds at the end
    of the grid.  A run consisting of a single grid point is below the scan
    resolution and is reported as the degenerate interval at that point.
    """
    grid = np.asarray(grid, dtype=float)
    mask = [pred(z) for z in grid]
    out = []
    for i0, i1 in _intervals_from_mask(mask):
        lo = grid[i0] if i0 == 0 else _bisect(pred, grid[i0 - 1], grid[i0], tol * max(1.0, grid[i0]))
        if i1 == len(grid) - 1:
            hi = math.inf
        else:
            hi = _bisect(pred, grid[i1], grid[i1 + 1], tol * max(1.0, grid[i1]))
        if i0 == i1 or hi - lo <= 2 * tol * max(1.0, lo):
            lo = hi = float(grid[i0])
        out.append((float(lo), float(hi)))
    return out


def monotonicity_radius_standard(t: ImexTableau, z_max: float = 1e6, grid=None) -> float:
    """Radius of absolute monotonicity of the DIRK relaxation step (inf if unbounded)."""
    if grid is None:
        grid = default_z_grid(z_max=z_max)
    grid = np.asarray(grid, dtype=float)
    for i, z in enumerate(grid):
        if not _standard_ok(t, z):
            if i == 0:
                return 0.0
            return _bisect(lambda s: _standard_ok(t, s), grid[i - 1], z, BISECT_TOL * max(1.0, z))
    return math.inf


def monotonicity_region_standard(t: ImexTableau, z_grid=None) -> list[tuple[float, float]]:
    return _region(lambda z: _standard_ok(t, z), default_z_grid() if z_grid is None else z_grid)


def monotonicity_region_penalized(t: ImexTableau, z_grid=None) -> list[tuple[float, float]]:
    """z-intervals where the stage conditions of the penalized homogeneous step hold.

    Isolated points are reported as degenerate intervals ``(z, z)``.  The
    weight conditions are z independent and reported by :func:`weight_checks`.
    """
    return _region(lambda z: _penalized_ok(t, z), default_z_grid() if z_grid is None else z_grid)


def am_entry(intervals) -> list[tuple[float, float]]:
    """Table form of a monotonicity region.

    Only intervals of positive length are listed; when none exists the entry
    is the trivial point z = 0.
    """
    proper = [(lo, hi) for lo, hi in intervals if hi > lo]
    return proper or [(0.0, 0.0)]


def format_intervals(intervals, closed: bool = True) -> str:
    def num(x):
        return "inf" if math.isinf(x) else f"{x:.6g}"
    parts = []
    for lo, hi in intervals:
        if lo == hi:
            parts.append(f"{{{num(lo)}}}")
        elif closed:
            parts.append(f"[{num(lo)},{num(hi)}{')' if math.isinf(hi) else ']'}")
        else:
            parts.append(f"({num(lo)},{num(hi)})")
    return " U ".join(parts) if parts else "{}"


# --------------------------------------------------------------------------
# summary table

ALPHA_SAMPLES = (0.25, 0.5, 1.0, 1.5, 2.0)


@dataclass
class StabilityReport:
    name: str
    kind: str = ""
    gsa: bool | None = None
    aa: bool | None = None
    aa_c: bool | None = None
    r_inf_samples: dict[float, float] = field(default_factory=dict)
    weak_ap_intervals: list[tuple[float, float]] = field(default_factory=list)
    monotonicity_standard: float | None = None
    monotonicity_penalized: list[tuple[float, float]] = field(default_factory=list)
    alpha_max: float = 16.0
    error: str | None = None

    def r_inf(self, alpha: float) -> float:
        return self.r_inf_samples[alpha]

    @property
    def am_intervals(self):
        return am_entry(self.monotonicity_penalized)

    def weak_ap_merged(self):
        """Weak-AP intervals joined across isolated excluded points."""
        return merge_touching(self.weak_ap_intervals)

    def weak_ap_display(self):
        """Merged intervals; those reaching the end of the alpha search domain are open-ended."""
        merged, _ = self.weak_ap_merged()
        return [(lo, math.inf if hi >= self.alpha_max else hi) for lo, hi in merged]

    def weak_ap_text(self) -> str:
        merged, excluded = self.weak_ap_merged()
        text = format_intervals(self.weak_ap_display(), closed=False)
        if excluded:
            text += " minus {" + ",".join(f"{a:.6g}" for a in excluded) + "}"
        return text


def stability_report(t: ImexTableau, alpha_max: float = 16.0, resolution: float = 1e-4) -> StabilityReport:
    rep = StabilityReport(t.name, alpha_max=alpha_max)
    cls = classify(t)
    ap = check_ap_conditions(t)
    rep.kind = cls.kind.value
    rep.gsa = ap.verdicts["gsa"]
    rep.aa = ap.verdicts["aa"]
    rep.aa_c = ap.verdicts["aa_c"]
    rep.r_inf_samples = {a: stability_at_infinity(t, a) for a in ALPHA_SAMPLES}
    rep.weak_ap_intervals = weak_ap_range(t, alpha_max, resolution)
    rep.monotonicity_standard = monotonicity_radius_standard(t)
    rep.monotonicity_penalized = monotonicity_region_penalized(t)
    return rep


def table1_report(schemes, alpha_max: float = 16.0, resolution: float = 1e-4) -> list[StabilityReport]:
    """One report per scheme; a failing scheme yields a row carrying its error."""
    if isinstance(schemes, dict):
        schemes = list(schemes.values())
    rows = []
    for t in schemes:
        try:
            rows.append(stability_report(t, alpha_max, resolution))
        except Exception as exc:  # noqa: BLE001 - reported per row
            rows.append(StabilityReport(t.name, error=f"{type(exc).__name__}: {exc}"))
    return rows


CSV_COLUMNS = ["name", "type", "gsa", "aa", "aa_c", "am_intervals", "weak_ap_intervals",
               "R_inf_alpha_samples"]


def _yesno(b):
    return "" if b is None else ("yes" if b else "no")


def report_rows(reports) -> list[dict[str, str]]:
    rows = []
    for r in reports:
        if r.error:
            rows.append({"name": r.name, "type": "error", "gsa": "", "aa": "", "aa_c": "",
                         "am_intervals": "", "weak_ap_intervals": "", "R_inf_alpha_samples": r.error})
            continue
        # values at rounding level are written as 0 so the table is platform independent
        samples = ";".join(f"{a:g}:{(0.0 if abs(v) < 1e-13 else v):.12g}" for a, v in r.r_inf_samples.items())
        rows.append({
            "name": r.name,
            "type": r.kind,
            "gsa": _yesno(r.gsa),
            "aa": _yesno(r.aa),
            "aa_c": _yesno(r.aa_c),
            "am_intervals": format_intervals(r.am_intervals),
            "weak_ap_intervals": r.weak_ap_text(),
            "R_inf_alpha_samples": samples,
        })
    return rows


def to_csv(reports) -> str:
    buf = io.StringIO()
    writer = csv.DictWriter(buf, fieldnames=CSV_COLUMNS, lineterminator="\r\n")
    writer.writeheader()
    writer.writerows(report_rows(reports))
    return buf.getvalue()
