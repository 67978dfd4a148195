"""Grid-refinement study for the density: runs, restriction and observed orders."""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .collision import estimate_mu, spectral_init
from .phase_space import VelocityGrid, moment_array
from .solver import initial_field, integrate, rk4_reference
from .transport import cfl_dt
from .tableau import ImexTableau
from .transport import SpaceGrid


@dataclass
class ConvergenceRow:
    nx: int
    error: float
    order: float | None = None


def fourier_restrict(values, nx_coarse: int) -> np.ndarray:
    """Resample periodic cell-centre data onto a coarser cell-centre grid.

    The trigonometric interpolant of the fine data (Nyquist mode dropped) is
    evaluated at the coarse centres, so smooth data is restricted with
    spectral accuracy even though the two sets of centres do not coincide.
    """
    values = np.asarray(values, dtype=float)
    n = values.shape[0]
    if nx_coarse > n:
        raise ValueError("target grid is finer than the data")
    K = (min(n, nx_coarse) - 1) // 2
    k = np.arange(-K, K + 1)
    xf = (np.arange(n) + 0.5) / n
    xc = (np.arange(nx_coarse) + 0.5) / nx_coarse
    coef = np.exp(-2j * np.pi * np.outer(k, xf)) @ values / n
    return np.real(np.exp(2j * np.pi * np.outer(xc, k)) @ coef)


def l1_error(coarse, fine) -> float:
    """Discrete L1 norm (cell weight 1/nx) of coarse - restrict(fine)."""
    coarse = np.asarray(coarse, dtype=float)
    return float(np.sum(np.abs(coarse - fourier_restrict(fine, coarse.shape[0]))) / coarse.shape[0])


def observed_orders(nx_list, errors) -> list[ConvergenceRow]:
    rows = []
    for i, (nx, e) in enumerate(zip(nx_list, errors)):
        order = None
        if i > 0 and errors[i - 1] > 0 and e > 0:
            order = math.log(errors[i - 1] / e) / math.log(nx / nx_list[i - 1])
        rows.append(ConvergenceRow(int(nx), float(e), order))
    return rows


def tabulate(nx_list, densities, reference: str = "successive") -> list[ConvergenceRow]:
    """Errors and orders from densities computed on increasing grids.

    ``successive``: the error on grid i is measured against grid i+1 (no row
    for the finest grid).  For e ~ C h^p these differences shrink exactly
    like the errors themselves, so the observed order is unbiased.
    ``finest``: every grid is compared with the finest one (no row for it).
    The same-grid ``rk4`` reference is handled by :func:`run_study`.
    """
    nx_list = list(nx_list)
    if reference == "successive":
        errs = [l1_error(densities[i], densities[i + 1]) for i in range(len(nx_list) - 1)]
    elif reference == "finest":
        errs = [l1_error(densities[i], densities[-1]) for i in range(len(nx_list) - 1)]
    else:
        raise ValueError(f"unknown reference {reference!r}")
    return observed_orders(nx_list[:-1], errs)


@dataclass
class StudyConfig:
    tableau: ImexTableau
    eps: float
    nx_list: tuple = (32, 64, 128, 256)
    nv: int = 32
    vmax: float = 8.0
    t_final: float = 0.05
    cfl: float = 0.5
    operator: str = "bgk"
    init: str = "eq"
    mu: float | None = None
    sigma: float | None = None
    reference: str = "successive"
    kernel_cache: str | None = None
    rk4_refine: int = 10


def _setup(cfg: StudyConfig, nx: int):
    vgrid = VelocityGrid(cfg.nv, cfg.vmax)
    sgrid = SpaceGrid(nx)
    f0 = initial_field(cfg.init, sgrid, vgrid)
    collision = None
    mu = 1.0 if cfg.mu is None else cfg.mu
    if cfg.operator == "boltzmann":
        kw = {} if cfg.sigma is None else {"sigma": cfg.sigma}
        op = spectral_init(cfg.nv, cfg.vmax, cache_dir=cfg.kernel_cache, **kw)
        collision = op.apply
        if cfg.mu is None:
            mu = estimate_mu(f0, vgrid, op.sigma)
    elif cfg.operator != "bgk":
        raise ValueError(f"unknown operator {cfg.operator!r}")
    return vgrid, sgrid, f0, mu, collision


def density_run(cfg: StudyConfig, nx: int) -> np.ndarray:
    vgrid, sgrid, f0, mu, collision = _setup(cfg, nx)
    f = integrate(f0, cfg.tableau, cfg.eps, cfg.t_final, sgrid, vgrid, cfg.cfl, mu, collision)
    return moment_array(f, vgrid)[:, 0]


def rk4_density(cfg: StudyConfig, nx: int) -> np.ndarray:
    """Same-grid reference density from RK4 with the step divided by ``rk4_refine``."""
    vgrid, sgrid, f0, mu, collision = _setup(cfg, nx)
    dt = cfl_dt(sgrid, vgrid.vmax, cfg.cfl) / cfg.rk4_refine
    f = rk4_reference(f0, cfg.eps, cfg.t_final, sgrid, vgrid, dt, mu, collision)
    return moment_array(f, vgrid)[:, 0]


def run_study(cfg: StudyConfig, densities: dict | None = None) -> list[ConvergenceRow]:
    nx_list = list(cfg.nx_list)
    if any(b <= a for a, b in zip(nx_list, nx_list[1:])):
        raise ValueError("nx list must be strictly increasing")
    if len(nx_list) < 3:
        raise ValueError("need at least three grids")
    dens = [density_run(cfg, nx) for nx in nx_list]
    if densities is not None:
        densities.update(zip(nx_list, dens))
    if cfg.reference == "rk4":
        # same-grid comparison: measures the time discretisation only
        errs = [float(np.mean(np.abs(d - rk4_density(cfg, nx)))) for nx, d in zip(nx_list, dens)]
        return observed_orders(nx_list, errs)
    return tabulate(nx_list, dens, cfg.reference)
