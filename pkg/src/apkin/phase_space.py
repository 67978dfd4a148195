"""Velocity lattice, moments, discrete Maxwellians and entropy in two velocity dimensions.

Distribution slices carry the velocity axes last: a single slice is an
``(nv, nv)`` array and a field over ``nx`` cells is ``(nx, nv, nv)``.  All
functions here broadcast over any leading axes.
"""
from __future__ import annotations

import csv
import struct
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

DIM = 2
TINY = 1e-300


class InadmissibleStateError(ValueError):
    """Non-positive density or temperature where a Maxwellian is required."""

    def __init__(self, message, where=None):
        super().__init__(message)
        self.where = where


@dataclass(frozen=True)
class VelocityGrid:
    """Uniform midpoint lattice on [-vmax, vmax]^2 (axis 0 is v_x, axis 1 is v_y)."""
    nv: int = 32
    vmax: float = 8.0
    nodes: np.ndarray = field(init=False, repr=False, compare=False)
    vx: np.ndarray = field(init=False, repr=False, compare=False)
    vy: np.ndarray = field(init=False, repr=False, compare=False)
    phi: np.ndarray = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        if int(self.nv) != self.nv or self.nv < 2:
            raise ValueError(f"nv must be an integer >= 2, got {self.nv}")
        if not self.vmax > 0:
            raise ValueError(f"vmax must be positive, got {self.vmax}")
        h = 2.0 * self.vmax / self.nv
        nodes = -self.vmax + (np.arange(self.nv) + 0.5) * h
        vx, vy = np.meshgrid(nodes, nodes, indexing="ij")
        phi = np.stack([np.ones_like(vx), vx, vy, 0.5 * (vx**2 + vy**2)])
        for name, arr in (("nodes", nodes), ("vx", vx), ("vy", vy), ("phi", phi)):
            arr.flags.writeable = False
            object.__setattr__(self, name, arr)

    @property
    def h(self) -> float:
        return 2.0 * self.vmax / self.nv

    @property
    def weight(self) -> float:
        """Quadrature weight of one node."""
        return self.h**2

    @property
    def shape(self) -> tuple[int, int]:
        return (self.nv, self.nv)


@dataclass
class MomentState:
    """Conserved moments (rho, rho u, E), batched over leading axes.

    ``momentum`` has a trailing axis of length 2.
    """
    rho: np.ndarray
    momentum: np.ndarray
    energy: np.ndarray

    def __post_init__(self):
        self.rho = np.asarray(self.rho, dtype=float)
        self.momentum = np.asarray(self.momentum, dtype=float)
        self.energy = np.asarray(self.energy, dtype=float)

    @classmethod
    def from_array(cls, U) -> "MomentState":
        U = np.asarray(U, dtype=float)
        return cls(U[..., 0], U[..., 1:3], U[..., 3])

    @classmethod
    def from_primitive(cls, rho, u, T) -> "MomentState":
        rho = np.asarray(rho, dtype=float)
        u = np.asarray(u, dtype=float)
        T = np.asarray(T, dtype=float)
        mom = rho[..., None] * u
        E = 0.5 * DIM * rho * T + 0.5 * rho * np.sum(u * u, axis=-1)
        return cls(rho, mom, E)

    def as_array(self) -> np.ndarray:
        return np.concatenate([self.rho[..., None], self.momentum, self.energy[..., None]], axis=-1)

    @property
    def u(self) -> np.ndarray:
        return self.momentum / self.rho[..., None]

    @property
    def T(self) -> np.ndarray:
        # T = (2E - rho |u|^2) / (d rho)
        return (2.0 * self.energy - np.sum(self.momentum**2, axis=-1) / self.rho) / (DIM * self.rho)

    def check_admissible(self):
        bad_rho = ~(self.rho > 0)
        if np.any(bad_rho):
            idx = np.argwhere(np.atleast_1d(bad_rho))[0]
            raise InadmissibleStateError(f"non-positive density at index {tuple(idx)}", tuple(idx))
        T = self.T
        bad_T = ~(T > 0)
        if np.any(bad_T):
            idx = np.argwhere(np.atleast_1d(bad_T))[0]
            raise InadmissibleStateError(f"non-positive temperature at index {tuple(idx)}", tuple(idx))


def moment_array(f, grid: VelocityGrid) -> np.ndarray:
    """Quadrature of phi(v) f over the lattice; returns (..., 4)."""
    f = np.asarray(f, dtype=float)
    if f.shape[-2:] != grid.shape:
        raise ValueError(f"slice shape {f.shape[-2:]} does not match grid {grid.shape}")
    return np.einsum("...jk,ajk->...a", f, grid.phi) * grid.weight


def moments(f, grid: VelocityGrid) -> MomentState:
    return MomentState.from_array(moment_array(f, grid))


def _raw_maxwellian(rho, u, T, grid: VelocityGrid) -> np.ndarray:
    rho = np.asarray(rho, dtype=float)[..., None, None]
    T = np.asarray(T, dtype=float)[..., None, None]
    u = np.asarray(u, dtype=float)
    dx = grid.vx - u[..., 0, None, None]
    dy = grid.vy - u[..., 1, None, None]
    return rho / (2.0 * np.pi * T) ** (DIM / 2) * np.exp(-(dx * dx + dy * dy) / (2.0 * T))


def maxwellian(m: MomentState, grid: VelocityGrid, corrected: bool = True,
               tol: float = 1e-15, max_iter: int = 60) -> np.ndarray:
    """Maxwellian with the moments of ``m`` sampled on the lattice.

    With ``corrected`` the parameters (rho, u, T) of the sampled Gaussian are
    adjusted by a fixed-point iteration until its discrete moments equal the
    requested ones to rounding.  The result is still of the form
    exp(a + b.v + c|v|^2), so it remains the discrete entropy minimiser.
    """
    m.check_admissible()
    rho, u, T = m.rho, m.u, m.T
    f = _raw_maxwellian(rho, u, T, grid)
    if not corrected:
        return f
    target = np.concatenate([u, T[..., None]], axis=-1)
    params = target.copy()
    for _ in range(max_iter):
        got = moments(f, grid)
        if np.any(~(got.T > 0)):
            raise InadmissibleStateError("Maxwellian correction lost positivity of T")
        cur = np.concatenate([got.u, got.T[..., None]], axis=-1)
        delta = target - cur
        # density is a pure scale and is matched exactly below
        params = params + delta
        if np.any(params[..., 2] <= 0):
            raise InadmissibleStateError("Maxwellian correction diverged (T <= 0)")
        f = _raw_maxwellian(rho, params[..., :2], params[..., 2], grid)
        scale = np.max(np.abs(delta) / (1.0 + np.abs(target)))
        if scale <= tol:
            break
    # exact mass by rescaling
    f *= (rho / moments(f, grid).rho)[..., None, None]
    return f


def entropy(f, grid: VelocityGrid) -> np.ndarray:
    """Quadrature of f log f; entries below 1e-300 contribute nothing."""
    f = np.asarray(f, dtype=float)
    if np.any(f < 0):
        raise ValueError("entropy is undefined for negative values")
    safe = np.where(f > TINY, f, 1.0)
    return np.sum(np.where(f > TINY, f * np.log(safe), 0.0), axis=(-2, -1)) * grid.weight


# --------------------------------------------------------------------------
# I/O

_HEADER = struct.Struct("<qqd")


def write_snapshot(path, f, grid: VelocityGrid):
    """Binary snapshot: little-endian int64 nx, int64 nv, float64 vmax, then row-major doubles."""
    f = np.asarray(f, dtype="<f8")
    if f.ndim == 2:
        f = f[None]
    if f.shape[1:] != grid.shape:
        raise ValueError("field does not match grid")
    with open(path, "wb") as fh:
        fh.write(_HEADER.pack(f.shape[0], grid.nv, float(grid.vmax)))
        fh.write(np.ascontiguousarray(f).tobytes(order="C"))


def read_snapshot(path) -> tuple[np.ndarray, VelocityGrid]:
    data = Path(path).read_bytes()
    nx, nv, vmax = _HEADER.unpack_from(data)
    body = np.frombuffer(data, dtype="<f8", offset=_HEADER.size)
    if body.size != nx * nv * nv:
        raise ValueError(f"snapshot body has {body.size} values, expected {nx * nv * nv}")
    return body.reshape(nx, nv, nv).astype(float), VelocityGrid(nv, vmax)


MOMENT_COLUMNS = ["x", "rho", "u_x", "u_y", "T"]


def moment_rows(x, m: MomentState):
    u = m.u
    T = m.T
    for i in range(len(x)):
        yield [repr(float(x[i])), repr(float(m.rho[i])), repr(float(u[i, 0])),
               repr(float(u[i, 1])), repr(float(T[i]))]


def write_moments_csv(path, x, m: MomentState):
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(MOMENT_COLUMNS)
        w.writerows(moment_rows(x, m))
