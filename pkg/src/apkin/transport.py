"""Periodic 1D transport -v_x d/dx f with third-order finite-difference WENO upwinding."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .phase_space import VelocityGrid

WENO_EPS = 1e-6
WENO_POWER = 2
MIN_CELLS = 5


@dataclass(frozen=True)
class SpaceGrid:
    """Periodic unit interval split into ``nx`` cells; values live at cell centres."""
    nx: int

    def __post_init__(self):
        if int(self.nx) != self.nx or self.nx < MIN_CELLS:
            raise ValueError(f"nx must be an integer >= {MIN_CELLS}, got {self.nx}")

    @property
    def dx(self) -> float:
        return 1.0 / self.nx

    @property
    def x(self) -> np.ndarray:
        return (np.arange(self.nx) + 0.5) / self.nx


def _weno3_face(qm, q0, qp, eps=WENO_EPS, power=WENO_POWER):
    """Left-biased WENO3 value at the face i+1/2 from q_{i-1}, q_i, q_{i+1}."""
    p0 = -0.5 * qm + 1.5 * q0
    p1 = 0.5 * q0 + 0.5 * qp
    a0 = (1.0 / 3.0) / (eps + (q0 - qm) ** 2) ** power
    a1 = (2.0 / 3.0) / (eps + (qp - q0) ** 2) ** power
    return (a0 * p0 + a1 * p1) / (a0 + a1)


def _faces_positive(q):
    # face i+1/2 for positive wind: stencil (i-1, i, i+1)
    return _weno3_face(np.roll(q, 1, axis=0), q, np.roll(q, -1, axis=0))


def _faces_negative(q):
    # face i+1/2 for negative wind: mirrored stencil (i+2, i+1, i)
    qp1 = np.roll(q, -1, axis=0)
    return _weno3_face(np.roll(q, -2, axis=0), qp1, q)


def weno3_derivative(q, wind_sign, dx: float) -> np.ndarray:
    """Upwind WENO3 approximation of dq/dx along axis 0 (periodic).

    ``wind_sign`` is a scalar or an array broadcastable against ``q[0]``; where
    it is positive the left-biased stencil is used, elsewhere the right-biased
    one.  The result is a difference of face values, so its sum over cells
    vanishes to rounding.
    """
    q = np.asarray(q, dtype=float)
    if q.shape[0] < MIN_CELLS:
        raise ValueError(f"need at least {MIN_CELLS} cells, got {q.shape[0]}")
    sign = np.asarray(wind_sign)
    out = np.zeros_like(q)
    pos = np.broadcast_to(sign > 0, q.shape[1:])
    if np.all(pos):
        h = _faces_positive(q)
        return (h - np.roll(h, 1, axis=0)) / dx
    if not np.any(pos):
        h = _faces_negative(q)
        return (h - np.roll(h, 1, axis=0)) / dx
    hp = _faces_positive(q)
    hn = _faces_negative(q)
    h = np.where(pos, hp, hn)
    out[...] = (h - np.roll(h, 1, axis=0)) / dx
    return out


def advection_rhs(f, vgrid: VelocityGrid, dx: float) -> np.ndarray:
    """L(f) = -v_x df/dx for a field of shape (nx, nv, nv)."""
    f = np.asarray(f, dtype=float)
    vx = vgrid.vx
    return -vx * weno3_derivative(f, np.sign(vx), dx)


def cfl_dt(grid: SpaceGrid, vmax: float, cfl: float = 0.5) -> float:
    """Time step cfl * dx / vmax."""
    if not vmax > 0:
        raise ValueError(f"vmax must be positive, got {vmax}")
    if not cfl > 0:
        raise ValueError(f"cfl must be positive, got {cfl}")
    return cfl * grid.dx / vmax
