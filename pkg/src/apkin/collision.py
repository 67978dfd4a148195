"""BGK relaxation, a direct Fourier-Galerkin Boltzmann operator for 2D Maxwell
molecules, and the penalization split Q_B = G_P + mu (M - f).

Spectral conventions
--------------------
The lattice nodes v_j = -vmax + (j + 1/2) h are treated as samples of a
2 vmax periodic function f(v) = sum_k fhat_k exp(i xi k.v), xi = pi / vmax,
over the symmetric mode set |k_1|, |k_2| <= nv/2 - 1 (the Nyquist mode is
dropped so that real data stays real).  For a collision kernel with constant
cross section sigma, truncated to relative speeds |q| <= 2R,

    Qhat_k = sum_{l+m=k} beta(l, m) fhat_l fhat_m,
    beta(l, m) = G(l, m) - G(m, m),
    G(l, m) = sigma (2 pi)^2 int_0^{2R} r J0(xi r |l+m|/2) J0(xi r |l-m|/2) dr.

The radial integral has a closed form (Lommel), evaluated with scipy Bessel
functions.  beta(l, -l) = 0 exactly, so mass is conserved to rounding.
"""
from __future__ import annotations

import math
import struct
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
import scipy.sparse as sp
from scipy.special import j0, j1

from .phase_space import MomentState, VelocityGrid, maxwellian, moment_array, moments

MIN_NV = 8
DEFAULT_SIGMA = 1.0 / (2.0 * math.pi)


# --------------------------------------------------------------------------
# BGK

@dataclass(frozen=True)
class BgkOperator:
    mu: float = 1.0

    def __post_init__(self):
        if not self.mu > 0:
            raise ValueError(f"mu must be positive, got {self.mu}")

    def apply(self, f, grid: VelocityGrid, m: MomentState | None = None) -> np.ndarray:
        if m is None:
            m = moments(f, grid)
        return bgk_apply(f, m, self.mu, grid)


def bgk_apply(f, m: MomentState, mu: float, grid: VelocityGrid) -> np.ndarray:
    """mu (M[m] - f) with the moment-corrected Maxwellian."""
    return mu * (maxwellian(m, grid) - np.asarray(f, dtype=float))


# --------------------------------------------------------------------------
# spectral Boltzmann

def default_radius(vmax: float) -> float:
    """Support radius R with 2 vmax = (3 + sqrt 2) R, the usual non-aliasing box."""
    return 2.0 * vmax / (3.0 + math.sqrt(2.0))


def radial_integral(a, b, X):
    """int_0^X r J0(a r) J0(b r) dr for a, b >= 0 (arrays broadcast).

    Uses the Lommel closed form; equal arguments use X^2/2 (J0^2 + J1^2).
    """
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    a, b = np.minimum(a, b), np.maximum(a, b)
    same = np.isclose(a, b, rtol=0.0, atol=0.0)
    ja0, ja1 = j0(a * X), j1(a * X)
    jb0, jb1 = j0(b * X), j1(b * X)
    den = np.where(same, 1.0, b * b - a * a)
    general = X * (b * ja0 * jb1 - a * ja1 * jb0) / den
    equal = 0.5 * X * X * (ja0 * ja0 + ja1 * ja1)
    return np.where(same, equal, general)


def _mode_set(nv: int) -> np.ndarray:
    K = nv // 2 - 1
    r = np.arange(-K, K + 1)
    k1, k2 = np.meshgrid(r, r, indexing="ij")
    return np.stack([k1.ravel(), k2.ravel()], axis=1)


def _phase(nv: int) -> np.ndarray:
    """Per-axis factor turning numpy FFT coefficients into fhat for midpoint nodes."""
    k = np.fft.fftfreq(nv, 1.0 / nv)
    return np.where(k % 2 == 0, 1.0, -1.0) * np.exp(-1j * np.pi * k / nv)


@dataclass(frozen=True)
class SpectralBoltzmann:
    """Direct Fourier-Galerkin collision operator for 2D Maxwell molecules."""
    nv: int
    vmax: float
    sigma: float = DEFAULT_SIGMA
    radius: float | None = None
    modes: np.ndarray = field(init=False, repr=False, compare=False)
    pair_l: np.ndarray = field(init=False, repr=False, compare=False)
    pair_m: np.ndarray = field(init=False, repr=False, compare=False)
    pair_k: np.ndarray = field(init=False, repr=False, compare=False)
    beta: np.ndarray = field(init=False, repr=False, compare=False)
    _sum: object = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        if int(self.nv) != self.nv or self.nv < MIN_NV or self.nv % 2:
            raise ValueError(f"nv must be an even integer >= {MIN_NV}, got {self.nv}")
        if not self.vmax > 0 or not self.sigma > 0:
            raise ValueError("vmax and sigma must be positive")
        if self.radius is None:
            object.__setattr__(self, "radius", default_radius(self.vmax))
        modes = _mode_set(self.nv)
        K = self.nv // 2 - 1
        side = 2 * K + 1
        # all (l, m) with l + m inside the mode set
        L = np.repeat(np.arange(len(modes)), len(modes))
        M = np.tile(np.arange(len(modes)), len(modes))
        s = modes[L] + modes[M]
        ok = np.all(np.abs(s) <= K, axis=1)
        L, M, s = L[ok], M[ok], s[ok]
        kidx = (s[:, 0] + K) * side + (s[:, 1] + K)
        beta = self._beta(modes[L], modes[M])
        object.__setattr__(self, "modes", modes)
        object.__setattr__(self, "pair_l", L)
        object.__setattr__(self, "pair_m", M)
        object.__setattr__(self, "pair_k", kidx)
        self._set_beta(beta)

    def _set_beta(self, beta):
        beta = np.asarray(beta, dtype=float)
        beta.flags.writeable = False
        S = sp.csr_matrix((beta, (self.pair_k, np.arange(len(beta)))),
                          shape=(len(self.modes), len(beta)))
        object.__setattr__(self, "beta", beta)
        object.__setattr__(self, "_sum", S)

    @property
    def xi(self) -> float:
        return math.pi / self.vmax

    def kernel_G(self, l, m) -> np.ndarray:
        """G(l, m) for integer mode arrays of shape (..., 2)."""
        l = np.asarray(l)
        m = np.asarray(m)
        sp_ = np.sum((l + m) ** 2, axis=-1)
        dm_ = np.sum((l - m) ** 2, axis=-1)
        lo = np.minimum(sp_, dm_)
        hi = np.maximum(sp_, dm_)
        a = 0.5 * self.xi * np.sqrt(lo)
        b = 0.5 * self.xi * np.sqrt(hi)
        return self.sigma * (2.0 * math.pi) ** 2 * radial_integral(a, b, 2.0 * self.radius)

    def _beta(self, l, m):
        return self.kernel_G(l, m) - self.kernel_G(m, m)

    def weight(self, l, m) -> np.ndarray:
        """beta(l, m) for arbitrary integer modes."""
        return self._beta(np.asarray(l), np.asarray(m))

    def dense_table(self) -> np.ndarray:
        """beta(l, m) for every pair of lattice modes in FFT order, shape (nv, nv, nv, nv)."""
        k = np.fft.fftfreq(self.nv, 1.0 / self.nv).astype(int)
        k1, k2 = np.meshgrid(k, k, indexing="ij")
        grid = np.stack([k1, k2], axis=-1)
        return self._beta(grid[:, :, None, None, :], grid[None, None, :, :, :])

    # spectral transforms ---------------------------------------------------
    def _to_modes(self, f) -> np.ndarray:
        nv = self.nv
        ph = _phase(nv)
        F = np.fft.fft2(f, axes=(-2, -1)) / nv**2 * ph[:, None] * ph[None, :]
        K = nv // 2 - 1
        idx = np.r_[np.arange(K + 1), np.arange(nv - K, nv)]  # FFT order of -K..K
        F = F[..., idx, :][..., :, idx]
        F = np.fft.fftshift(F, axes=(-2, -1))  # now ordered -K..K on both axes
        return F.reshape(F.shape[:-2] + (-1,))

    def _from_modes(self, Fm) -> np.ndarray:
        nv = self.nv
        K = nv // 2 - 1
        side = 2 * K + 1
        Fm = Fm.reshape(Fm.shape[:-1] + (side, side))
        full = np.zeros(Fm.shape[:-2] + (nv, nv), dtype=complex)
        order = np.fft.ifftshift(np.arange(side))  # -K..K -> FFT order 0..K,-K..-1
        idx = np.r_[np.arange(K + 1), np.arange(nv - K, nv)]
        full[..., idx[:, None], idx[None, :]] = Fm[..., order[:, None], order[None, :]]
        ph = np.conj(_phase(nv))
        full = full * ph[:, None] * ph[None, :]
        return np.real(np.fft.ifft2(full, axes=(-2, -1))) * nv**2

    def apply(self, f, chunk: int = 8) -> np.ndarray:
        f = np.asarray(f, dtype=float)
        if f.shape[-2:] != (self.nv, self.nv):
            raise ValueError(f"slice shape {f.shape[-2:]} does not match nv={self.nv}")
        lead = f.shape[:-2]
        flat = f.reshape((-1, self.nv, self.nv))
        out = np.empty_like(flat)
        for s in range(0, flat.shape[0], chunk):
            Fm = self._to_modes(flat[s:s + chunk])
            prod = Fm[:, self.pair_l] * Fm[:, self.pair_m]
            Q = (self._sum @ prod.T).T
            out[s:s + chunk] = self._from_modes(Q)
        return out.reshape(lead + (self.nv, self.nv))

    # caching --------------------------------------------------------------
    def cache_name(self) -> str:
        return f"kernel_nv{self.nv}_vmax{self.vmax!r}_sigma{self.sigma!r}_R{self.radius!r}.bin"

    def save(self, directory) -> Path:
        path = Path(directory) / self.cache_name()
        path.parent.mkdir(parents=True, exist_ok=True)
        with open(path, "wb") as fh:
            fh.write(struct.pack("<qqd", len(self.beta), self.nv, float(self.vmax)))
            fh.write(struct.pack("<dd", self.sigma, self.radius))
            fh.write(np.asarray(self.beta, dtype="<f8").tobytes())
        return path


def spectral_init(nv: int, vmax: float, sigma: float = DEFAULT_SIGMA, radius: float | None = None,
                  cache_dir=None) -> SpectralBoltzmann:
    """Build the operator, reusing a cached weight table from ``cache_dir`` when present."""
    op = SpectralBoltzmann(nv, vmax, sigma, radius)
    if cache_dir is None:
        return op
    path = Path(cache_dir) / op.cache_name()
    if path.exists():
        data = path.read_bytes()
        n, nv_, vmax_ = struct.unpack_from("<qqd", data)
        sigma_, radius_ = struct.unpack_from("<dd", data, 24)
        if (n, nv_, vmax_, sigma_, radius_) == (len(op.beta), op.nv, op.vmax, op.sigma, op.radius):
            op._set_beta(np.frombuffer(data, dtype="<f8", offset=40).copy())
            return op
    op.save(cache_dir)
    return op


def boltzmann_apply(op: SpectralBoltzmann, f) -> np.ndarray:
    return op.apply(f)


def estimate_mu(f, grid: VelocityGrid, sigma: float = DEFAULT_SIGMA) -> float:
    """Loss rate sigma |S^1| rho for Maxwell molecules, maximised over cells."""
    f = np.asarray(f, dtype=float)
    if np.any(f < 0):
        raise ValueError("estimate_mu needs a nonnegative distribution")
    rho = moment_array(f, grid)[..., 0]
    return float(sigma * 2.0 * math.pi * np.max(rho)) if rho.size else 0.0


# --------------------------------------------------------------------------
# penalization

@dataclass
class PenalizationSplit:
    g_part: np.ndarray
    q_part: np.ndarray
    mu: float


def penalize(Qb, f, m: MomentState, mu: float, grid: VelocityGrid, M=None) -> PenalizationSplit:
    """Split Qb into the BGK penaliser mu (M - f) and the deviation Qb - mu (M - f)."""
    if not mu > 0:
        raise ValueError("mu must be positive")
    if M is None:
        M = maxwellian(m, grid)
    q = mu * (M - np.asarray(f, dtype=float))
    return PenalizationSplit(np.asarray(Qb, dtype=float) - q, q, mu)


def project_conservative(g, M, grid: VelocityGrid) -> np.ndarray:
    """Remove the moments of ``g`` using the Maxwellian-weighted invariants.

    Returns g - sum_b c_b phi_b M with c chosen so the result has zero
    (mass, momentum, energy); M must be positive with the same leading shape.
    """
    g = np.asarray(g, dtype=float)
    w = grid.weight
    gram = np.einsum("ajk,bjk,...jk->...ab", grid.phi, grid.phi, M) * w
    rhs = moment_array(g, grid)
    c = np.linalg.solve(gram, rhs[..., None])[..., 0]
    return g - np.einsum("...b,bjk,...jk->...jk", c, grid.phi, M)
