"""IMEX Runge-Kutta steppers for the BGK and penalized Boltzmann kinetic equations.

All steppers share one stage engine.  With an explicit rate E(F) and the
stiff relaxation (mu/eps)(M - F) treated by the DIRK part, stage i reads

    F_i = f^n + dt sum_{j<i} at_ij E_j + sum_{j<=i} a_ij K_j,
    K_j = dt (mu/eps) (M_j - F_j),

and the update is f^{n+1} = f^n + dt sum_j wt_j E_j + sum_j w_j K_j.  The
relaxation conserves the invariants, so the moments of F_i are known before
F_i itself: U_i = U^n + dt sum_{j<i} at_ij <phi E_j>.  M_i = M[U_i] is
therefore explicit and the implicit relation is solved in closed form,
F_i = (rhs_i + k M_i)/(1 + k), k = dt a_ii mu/eps.
"""
from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from enum import Enum
from typing import Callable

import numpy as np

from .collision import project_conservative
from .phase_space import (InadmissibleStateError, MomentState, VelocityGrid, maxwellian,
                          moment_array, moments)
from .tableau import ImexTableau
from .transport import SpaceGrid, advection_rhs, cfl_dt

log = logging.getLogger(__name__)


class Mode(str, Enum):
    STANDARD_BGK = "standard_bgk"
    PENALIZED_BOLTZMANN = "penalized_boltzmann"
    HOMOGENEOUS_BGK = "homogeneous_bgk"
    HOMOGENEOUS_PENALIZED = "homogeneous_penalized"
    HOMOGENEOUS_LINEARIZED = "homogeneous_linearized"


class SolverAbort(RuntimeError):
    """A stage produced inadmissible moments (non-positive density or temperature)."""

    def __init__(self, message, stage=None, cell=None):
        super().__init__(message)
        self.stage = stage
        self.cell = cell


@dataclass(frozen=True)
class StepConfig:
    tableau: ImexTableau
    eps: float
    dt: float
    mode: Mode = Mode.STANDARD_BGK
    mu: float = 1.0
    alpha: float = 1.0
    project_deviation: bool = True

    def __post_init__(self):
        if not self.eps > 0:
            raise ValueError(f"eps must be positive, got {self.eps}")
        if not self.dt > 0:
            raise ValueError(f"dt must be positive, got {self.dt}")
        if not self.mu > 0:
            raise ValueError(f"mu must be positive, got {self.mu}")
        object.__setattr__(self, "mode", Mode(self.mode))

    @property
    def z(self) -> float:
        return self.mu * self.dt / self.eps


@dataclass
class StageWorkspace:
    """Stage values recorded during one step (filled when passed to a stepper)."""
    F: list = field(default_factory=list)
    U: list = field(default_factory=list)
    explicit: list = field(default_factory=list)
    explicit_moments: list = field(default_factory=list)


def _imex_stages(f_n, tab: ImexTableau, dt: float, rate: float,
                 explicit: Callable, stage_maxwellian: Callable, vgrid: VelocityGrid,
                 ws: StageWorkspace | None = None):
    """Shared stage loop; ``rate`` is mu/eps, ``explicit(F, M) -> E``."""
    At, A = tab.A_ex, tab.A_im
    U_n = moment_array(f_n, vgrid)
    E, EU, K = [], [], []
    for i in range(tab.nu):
        rhs = f_n.copy()
        U_i = U_n.copy()
        for j in range(i):
            if At[i, j] != 0.0:
                rhs += (dt * At[i, j]) * E[j]
                U_i += (dt * At[i, j]) * EU[j]
            if A[i, j] != 0.0:
                rhs += A[i, j] * K[j]
        try:
            M_i = stage_maxwellian(U_i)
        except InadmissibleStateError as exc:
            raise SolverAbort(f"stage {i + 1}: {exc}", stage=i + 1, cell=exc.where) from exc
        a = A[i, i]
        if a != 0.0:
            k = dt * a * rate
            F_i = (rhs + k * M_i) / (1.0 + k)
            K_i = (M_i - rhs) * (k / ((1.0 + k) * a))
        else:
            F_i = rhs
            K_i = (dt * rate) * (M_i - F_i)
        E_i = explicit(F_i, M_i)
        E.append(E_i)
        EU.append(moment_array(E_i, vgrid))
        K.append(K_i)
        if ws is not None:
            ws.F.append(F_i)
            ws.U.append(U_i)
            ws.explicit.append(E_i)
            ws.explicit_moments.append(EU[-1])
    if _is_gsa(tab):
        # the weights equal the last stage rows, so f^{n+1} = F_nu exactly;
        # returning it avoids cancellation among the large stage increments
        return F_i
    out = f_n.copy()
    for j in range(tab.nu):
        if tab.w_ex[j] != 0.0:
            out += (dt * tab.w_ex[j]) * E[j]
        if tab.w_im[j] != 0.0:
            out += tab.w_im[j] * K[j]
    return out


def _is_gsa(tab: ImexTableau) -> bool:
    return bool(np.array_equal(tab.A_im[-1], tab.w_im) and np.array_equal(tab.A_ex[-1], tab.w_ex))


def _stage_maxwellian(vgrid):
    def build(U):
        return maxwellian(MomentState.from_array(U), vgrid)
    return build


def imex_step_standard(f_n, cfg: StepConfig, vgrid: VelocityGrid, dx: float,
                       ws: StageWorkspace | None = None) -> np.ndarray:
    """One step of the IMEX scheme with implicit BGK relaxation and explicit transport."""
    if cfg.mode is not Mode.STANDARD_BGK:
        raise ValueError(f"imex_step_standard needs mode standard_bgk, got {cfg.mode.value}")
    f_n = np.asarray(f_n, dtype=float)

    def explicit(F, M):
        return advection_rhs(F, vgrid, dx)

    return _imex_stages(f_n, cfg.tableau, cfg.dt, cfg.mu / cfg.eps, explicit,
                        _stage_maxwellian(vgrid), vgrid, ws)


def _deviation(collision, F, M, mu, vgrid, project):
    G = collision(F) - mu * (M - F)
    if project:
        G = project_conservative(G, M, vgrid)
    return G


def imex_step_penalized(f_n, cfg: StepConfig, vgrid: VelocityGrid, dx: float, collision: Callable,
                        ws: StageWorkspace | None = None) -> np.ndarray:
    """One penalized step: BGK penaliser implicit, transport and deviation G_P explicit.

    ``collision`` maps a field to Q_B(field).  The deviation Q_B(F) - mu (M - F)
    is projected onto zero invariant moments unless ``cfg.project_deviation``
    is off, so stage moments follow the explicit moment recursion exactly.
    """
    if cfg.mode is not Mode.PENALIZED_BOLTZMANN:
        raise ValueError(f"imex_step_penalized needs mode penalized_boltzmann, got {cfg.mode.value}")
    f_n = np.asarray(f_n, dtype=float)
    inv_eps = 1.0 / cfg.eps

    def explicit(F, M):
        G = _deviation(collision, F, M, cfg.mu, vgrid, cfg.project_deviation)
        if log.isEnabledFor(logging.WARNING):
            size = cfg.dt * inv_eps * np.max(np.abs(G)) / max(np.max(np.abs(F)), 1e-300)
            if size > 1e3:
                log.warning("explicit deviation term is large: dt/eps |G_P|/|F| = %.3g", size)
        return advection_rhs(F, vgrid, dx) + inv_eps * G

    return _imex_stages(f_n, cfg.tableau, cfg.dt, cfg.mu / cfg.eps, explicit,
                        _stage_maxwellian(vgrid), vgrid, ws)


def homogeneous_step(f_n, cfg: StepConfig, vgrid: VelocityGrid, collision: Callable | None = None,
                     ws: StageWorkspace | None = None) -> np.ndarray:
    """Space-homogeneous step for a slice (or a batch of slices).

    The invariants are constant, so every stage uses M = M[f^n].
    HOMOGENEOUS_BGK: pure relaxation.  HOMOGENEOUS_PENALIZED: explicit
    deviation Q_B(F) - mu (M - F) from ``collision``.  HOMOGENEOUS_LINEARIZED:
    explicit term (mu/eps)(alpha - 1)(F - M), the sign convention under which
    the step is the affine map R(alpha, z) f + (1 - R(alpha, z)) M.
    """
    f_n = np.asarray(f_n, dtype=float)
    mode = cfg.mode
    M = maxwellian(moments(f_n, vgrid), vgrid)
    rate = cfg.mu / cfg.eps

    if mode is Mode.HOMOGENEOUS_BGK:
        def explicit(F, M_):
            return np.zeros_like(F)
    elif mode is Mode.HOMOGENEOUS_PENALIZED:
        if collision is None:
            raise ValueError("homogeneous_penalized needs a collision operator")

        def explicit(F, M_):
            return _deviation(collision, F, M_, cfg.mu, vgrid, cfg.project_deviation) / cfg.eps
    elif mode is Mode.HOMOGENEOUS_LINEARIZED:
        c = rate * (cfg.alpha - 1.0)

        def explicit(F, M_):
            return c * (F - M_)
    else:
        raise ValueError(f"homogeneous_step does not handle mode {mode.value}")

    return _imex_stages(f_n, cfg.tableau, cfg.dt, rate, explicit, lambda U: M, vgrid, ws)


def euler_reference_step(U_n, tableau: ImexTableau, dt: float, vgrid: VelocityGrid, dx: float) -> np.ndarray:
    """Explicit RK (At, wt) on dU/dt = <phi L(M[U])>, the eps -> 0 limit of the kinetic scheme.

    ``U_n`` has shape (nx, 4) holding (rho, rho u_x, rho u_y, E).
    """
    U_n = np.asarray(U_n, dtype=float)
    At = tableau.A_ex
    R = []
    for i in range(tableau.nu):
        U_i = U_n.copy()
        for j in range(i):
            if At[i, j] != 0.0:
                U_i += (dt * At[i, j]) * R[j]
        try:
            M_i = maxwellian(MomentState.from_array(U_i), vgrid)
        except InadmissibleStateError as exc:
            raise SolverAbort(f"stage {i + 1}: {exc}", stage=i + 1, cell=exc.where) from exc
        R.append(moment_array(advection_rhs(M_i, vgrid, dx), vgrid))
    out = U_n.copy()
    for j in range(tableau.nu):
        if tableau.w_ex[j] != 0.0:
            out += (dt * tableau.w_ex[j]) * R[j]
    return out


def equilibrium_distance(f, vgrid: VelocityGrid) -> float:
    """||f - M[f]||_1 / ||f||_1 over the whole field."""
    f = np.asarray(f, dtype=float)
    M = maxwellian(moments(f, vgrid), vgrid)
    return float(np.sum(np.abs(f - M)) / np.sum(np.abs(f)))


# --------------------------------------------------------------------------
# initial data and time integration

def initial_moments(x) -> MomentState:
    """Smooth periodic profile: rho=(2+sin 2pi x)/3, u=(cos(2pi x)/5, 0), T=(3+cos 2pi x)/4."""
    x = np.asarray(x, dtype=float)
    rho = (2.0 + np.sin(2 * np.pi * x)) / 3.0
    u = np.stack([np.cos(2 * np.pi * x) / 5.0, np.zeros_like(x)], axis=-1)
    T = (3.0 + np.cos(2 * np.pi * x)) / 4.0
    return MomentState.from_primitive(rho, u, T)


def equilibrium_initial(sgrid: SpaceGrid, vgrid: VelocityGrid) -> np.ndarray:
    return equilibrium_profile(sgrid.x, vgrid)


def nonequilibrium_initial(sgrid: SpaceGrid, vgrid: VelocityGrid) -> np.ndarray:
    return nonequilibrium_profile(sgrid.x, vgrid)


def equilibrium_profile(x, vgrid: VelocityGrid) -> np.ndarray:
    """f0 = M[f0] with the smooth profile of :func:`initial_moments` at positions x."""
    return maxwellian(initial_moments(x), vgrid)


def nonequilibrium_profile(x, vgrid: VelocityGrid) -> np.ndarray:
    """Two Gaussians centred at u0 and -3 u0 with temperature T0, total density rho0."""
    m = initial_moments(x)
    rho = m.rho[:, None, None]
    T = m.T[:, None, None]
    u = m.u
    d1 = (vgrid.vx - u[:, 0, None, None]) ** 2 + (vgrid.vy - u[:, 1, None, None]) ** 2
    d2 = (vgrid.vx + 3 * u[:, 0, None, None]) ** 2 + (vgrid.vy + 3 * u[:, 1, None, None]) ** 2
    return rho / (2 * np.pi * T) * 0.5 * (np.exp(-d1 / (2 * T)) + np.exp(-d2 / (2 * T)))


def initial_field(kind: str, sgrid: SpaceGrid | None, vgrid: VelocityGrid, x=None) -> np.ndarray:
    """Initial data by name ('eq' or 'noneq') on the cells of ``sgrid`` or at positions ``x``."""
    if x is None:
        x = sgrid.x
    if kind in ("eq", "equilibrium"):
        return equilibrium_profile(x, vgrid)
    if kind in ("noneq", "non_equilibrium"):
        return nonequilibrium_profile(x, vgrid)
    raise ValueError(f"unknown initial data {kind!r}")


def step_count(t_final: float, dt_max: float) -> tuple[int, float]:
    """Number of equal steps not exceeding dt_max that land exactly on t_final."""
    n = max(1, math.ceil(t_final / dt_max - 1e-12))
    return n, t_final / n


def integrate(f0, tableau: ImexTableau, eps: float, t_final: float, sgrid: SpaceGrid,
              vgrid: VelocityGrid, cfl: float = 0.5, mu: float = 1.0, collision: Callable | None = None,
              callback: Callable | None = None) -> np.ndarray:
    """Advance to t_final with dt = cfl dx / vmax (shortened to land on t_final).

    With ``collision`` the penalized stepper is used, otherwise the BGK one.
    ``callback(n, t, f)`` is called after the initial state and every step.
    """
    n, dt = step_count(t_final, cfl_dt(sgrid, vgrid.vmax, cfl))
    mode = Mode.PENALIZED_BOLTZMANN if collision is not None else Mode.STANDARD_BGK
    cfg = StepConfig(tableau, eps, dt, mode, mu)
    f = np.asarray(f0, dtype=float)
    if callback is not None:
        callback(0, 0.0, f)
    for s in range(n):
        if collision is None:
            f = imex_step_standard(f, cfg, vgrid, sgrid.dx)
        else:
            f = imex_step_penalized(f, cfg, vgrid, sgrid.dx, collision)
        if callback is not None:
            callback(s + 1, (s + 1) * dt, f)
    return f


# --------------------------------------------------------------------------
# explicit reference integrator

RK4_STIFFNESS_LIMIT = 2.5


def kinetic_rhs(f, eps: float, vgrid: VelocityGrid, dx: float, mu: float = 1.0,
                collision: Callable | None = None) -> np.ndarray:
    """Semi-discrete right-hand side L(f) + Q(f)/eps (BGK when ``collision`` is None)."""
    f = np.asarray(f, dtype=float)
    Q = collision(f) if collision is not None else mu * (maxwellian(moments(f, vgrid), vgrid) - f)
    return advection_rhs(f, vgrid, dx) + Q / eps


def rk4_reference(f0, eps: float, t_final: float, sgrid: SpaceGrid, vgrid: VelocityGrid,
                  dt_max: float, mu: float = 1.0, collision: Callable | None = None) -> np.ndarray:
    """Classical RK4 on the same semi-discretisation, for mildly stiff regimes only.

    The step must resolve the relaxation: dt mu/eps <= 2.5 (inside the real
    stability interval of RK4), otherwise ValueError.
    """
    n, dt = step_count(t_final, dt_max)
    if dt * mu / eps > RK4_STIFFNESS_LIMIT:
        raise ValueError(f"explicit reference is unstable: dt mu/eps = {dt * mu / eps:.3g}")

    def rhs(g):
        return kinetic_rhs(g, eps, vgrid, sgrid.dx, mu, collision)

    f = np.asarray(f0, dtype=float).copy()
    for _ in range(n):
        k1 = rhs(f)
        k2 = rhs(f + 0.5 * dt * k1)
        k3 = rhs(f + 0.5 * dt * k2)
        k4 = rhs(f + dt * k3)
        f = f + (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
    return f
