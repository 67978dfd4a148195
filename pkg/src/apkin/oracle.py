"""Brute-force quadrature of the collision integral for sums of separable Gaussians.

This is an independent check of the spectral operator: the integral over the
relative velocity q (polar, Gauss-Legendre in |q|, trapezoid in angle) and the
scattering direction n (trapezoid) is evaluated directly in velocity space,

    Q(v) = sigma int_{|q|<=2R} int_{S^1} f(v') f(v'_*) - f(v) f(v - q) dn dq,
    v'   = v - (q - |q| n)/2,   v'_* = v - (q + |q| n)/2,

with f replaced by its periodic trigonometric interpolant on the lattice (the
function the Galerkin method actually acts on).  Nothing here uses the
spectral weights or the Bessel closed form.
"""
from __future__ import annotations

import math

import numpy as np

from .phase_space import VelocityGrid


class SeparableInterpolant:
    """Trigonometric interpolant of sum_t c_t g_t(v_x) h_t(v_y) sampled on ``grid``.

    ``factors`` is a list of (c, gx_samples, hy_samples).  The Nyquist mode is
    dropped, matching the spectral operator.
    """

    def __init__(self, grid: VelocityGrid, factors):
        self.grid = grid
        self.xi = math.pi / grid.vmax
        K = grid.nv // 2 - 1
        self.k = np.arange(-K, K + 1)
        E = np.exp(-1j * self.xi * np.outer(self.k, grid.nodes)) / grid.nv
        self.terms = [(c, E @ np.asarray(gx), E @ np.asarray(hy)) for c, gx, hy in factors]

    def _eval1d(self, coef, x):
        return np.real(np.exp(1j * self.xi * x[..., None] * self.k) @ coef)

    def __call__(self, x, y):
        x = np.asarray(x, dtype=float)
        y = np.asarray(y, dtype=float)
        out = np.zeros(np.broadcast(x, y).shape)
        for c, gx, hy in self.terms:
            out += c * self._eval1d(gx, x) * self._eval1d(hy, y)
        return out


def gaussian_factors(grid: VelocityGrid, params):
    """Factors for sum of Maxwellians given as (rho, ux, uy, T) tuples."""
    out = []
    v = grid.nodes
    for rho, ux, uy, T in params:
        c = rho / (2.0 * math.pi * T)
        out.append((c, np.exp(-(v - ux) ** 2 / (2 * T)), np.exp(-(v - uy) ** 2 / (2 * T))))
    return out


def quadrature_collision(fN: SeparableInterpolant, points, sigma: float, radius: float,
                         n_r: int = 48, n_theta: int = 48, n_omega: int = 48) -> np.ndarray:
    """Q(v) at each row of ``points`` (shape (P, 2)) by direct quadrature.

    The post-collision arguments are v - q/2 +- |q| n/2, so each factor
    exp(i xi k x') of the interpolant splits into a v part, a q part and an n
    part; the quadrature sums are then contractions over the mode index.
    """
    xr, wr = np.polynomial.legendre.leggauss(n_r)
    r = radius * (xr + 1.0)            # nodes on [0, 2R]
    wr = wr * radius * r               # includes the polar Jacobian r
    th = 2.0 * math.pi * np.arange(n_theta) / n_theta
    om = 2.0 * math.pi * np.arange(n_omega) / n_omega
    wth = 2.0 * math.pi / n_theta
    wom = 2.0 * math.pi / n_omega
    xi, k = fN.xi, fN.k
    qx = np.outer(r, np.cos(th))
    qy = np.outer(r, np.sin(th))
    nx_ = np.outer(r, np.cos(om))
    ny_ = np.outer(r, np.sin(om))
    Aq = (np.exp(-0.5j * xi * k[:, None, None] * qx), np.exp(-0.5j * xi * k[:, None, None] * qy))
    Bn = (np.exp(0.5j * xi * k[:, None, None] * nx_), np.exp(0.5j * xi * k[:, None, None] * ny_))
    Lq = (np.exp(-1j * xi * k[:, None, None] * qx), np.exp(-1j * xi * k[:, None, None] * qy))

    def factor(coef, v, axis, sign):
        c = coef * np.exp(1j * xi * k * v)
        B = Bn[axis] if sign > 0 else np.conj(Bn[axis])
        return np.real(np.einsum("k,krt,kro->rto", c, Aq[axis], B, optimize=True))

    out = np.empty(len(points))
    for i, (vx, vy) in enumerate(np.asarray(points, dtype=float)):
        fp = 0.0
        fm = 0.0
        loss_inner = 0.0
        for c, gx, hy in fN.terms:
            fp = fp + c * factor(gx, vx, 0, +1) * factor(hy, vy, 1, +1)
            fm = fm + c * factor(gx, vx, 0, -1) * factor(hy, vy, 1, -1)
            lx = np.real(np.einsum("k,krt->rt", gx * np.exp(1j * xi * k * vx), Lq[0]))
            ly = np.real(np.einsum("k,krt->rt", hy * np.exp(1j * xi * k * vy), Lq[1]))
            loss_inner = loss_inner + c * lx * ly
        gain = np.einsum("rto,r->", fp * fm, wr) * wth * wom
        loss = fN(np.array(vx), np.array(vy)) * np.einsum("rt,r->", loss_inner, wr) * wth * (2.0 * math.pi)
        out[i] = sigma * (gain - loss)
    return out


def projected_oracle(grid: VelocityGrid, params, sigma: float, radius: float, **quad) -> np.ndarray:
    """Galerkin projection of the quadrature collision integral, sampled on ``grid``.

    Q(f_N) contains modes up to 2K per axis, so its samples on the doubled
    midpoint lattice determine the retained modes -K..K exactly.
    """
    fN = SeparableInterpolant(grid, gaussian_factors(grid, params))
    fine = VelocityGrid(2 * grid.nv, grid.vmax)
    pts = np.stack([fine.vx.ravel(), fine.vy.ravel()], axis=1)
    vals = quadrature_collision(fN, pts, sigma, radius, **quad).reshape(fine.shape)
    K = grid.nv // 2 - 1
    k = np.arange(-K, K + 1)
    E = np.exp(-1j * (math.pi / grid.vmax) * np.outer(k, fine.nodes)) / fine.nv
    coef = E @ vals @ E.T
    B = np.exp(1j * (math.pi / grid.vmax) * np.outer(grid.nodes, k))
    return np.real(B @ coef @ B.T)
