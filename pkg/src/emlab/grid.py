"""Pseudo-spectral toolbox on a periodic box.

Scalar fields live on a uniform N^3 grid over [0, L)^3 and are transformed
with real-input FFTs.  The "forward" normalization is used throughout, so a
constant field c has spectral coefficient c at wavenumber zero and Parseval
reads ||f||_{L^2}^2 = L^3 * sum_k mult(k) |f_hat(k)|^2 where mult accounts
for the half-spectrum storage of real transforms.

Derivatives are diagonal multipliers i*xi.  The Nyquist wavenumber carries
no sign information for real data, so it is zeroed in every derivative
multiplier, including the Laplacian symbol; as a consequence div(grad(f))
equals laplacian(f) and curl(grad(f)) vanishes exactly on the grid.
"""
from __future__ import annotations

import functools
from dataclasses import dataclass

import numpy as np
from scipy import fft as sp_fft

__all__ = ["GridSpec", "multi_indices"]


@functools.lru_cache(maxsize=None)
def multi_indices(order: int) -> tuple[tuple[int, int, int], ...]:
    """All 3D multi-indices alpha with |alpha| <= order, graded lexicographic."""
    if order < 0:
        raise ValueError(f"order must be >= 0, got {order}")
    out = []
    for total in range(order + 1):
        for a1 in range(total, -1, -1):
            for a2 in range(total - a1, -1, -1):
                out.append((a1, a2, total - a1 - a2))
    return tuple(out)


@dataclass(frozen=True)
class GridSpec:
    """Uniform periodic grid: N points per axis on a box of side L.

    N must be even and at least 8 so the real FFT layout and the dealias
    mask are well defined; L must be positive.
    """

    n: int = 48
    box: float = 40.0

    def __post_init__(self) -> None:
        if not isinstance(self.n, (int, np.integer)):
            raise ValueError(f"grid size n must be an integer, got {self.n!r}")
        if self.n < 8 or self.n % 2 != 0:
            raise ValueError(f"grid size n must be even and >= 8, got {self.n}")
        if not (float(self.box) > 0.0):
            raise ValueError(f"box side must be positive, got {self.box}")

    # ---- geometry ----------------------------------------------------

    @property
    def dx(self) -> float:
        return self.box / self.n

    @property
    def shape(self) -> tuple[int, int, int]:
        return (self.n, self.n, self.n)

    @property
    def spectral_shape(self) -> tuple[int, int, int]:
        return (self.n, self.n, self.n // 2 + 1)

    @functools.cached_property
    def x1d(self) -> np.ndarray:
        return self.dx * np.arange(self.n)

    @functools.cached_property
    def radius(self) -> np.ndarray:
        """Euclidean distance from the box center, shape (n, n, n)."""
        r = self.x1d - 0.5 * self.box
        return np.sqrt(
            r[:, None, None] ** 2 + r[None, :, None] ** 2 + r[None, None, :] ** 2
        )

    # ---- wavenumbers ---------------------------------------------------

    @functools.cached_property
    def _k1d(self) -> tuple[np.ndarray, np.ndarray]:
        """(full-axis, half-axis) wavenumbers with the Nyquist entry zeroed."""
        kfull = 2.0 * np.pi * sp_fft.fftfreq(self.n, d=self.dx)
        kfull[self.n // 2] = 0.0
        khalf = 2.0 * np.pi * sp_fft.rfftfreq(self.n, d=self.dx)
        khalf[-1] = 0.0
        return kfull, khalf

    @functools.cached_property
    def k(self) -> np.ndarray:
        """Derivative wavenumbers, shape (3, n, n, n//2+1), Nyquist zeroed."""
        kfull, khalf = self._k1d
        out = np.zeros((3,) + self.spectral_shape)
        out[0] = kfull[:, None, None]
        out[1] = kfull[None, :, None]
        out[2] = khalf[None, None, :]
        return out

    @functools.cached_property
    def k_sq(self) -> np.ndarray:
        """|xi|^2 with Nyquist-zeroed components; -k_sq is the Laplacian symbol."""
        return (self.k**2).sum(axis=0)

    @functools.cached_property
    def mult(self) -> np.ndarray:
        """Multiplicity of each stored rfft mode in the full spectrum (1 or 2)."""
        w = np.full(self.spectral_shape, 2.0)
        w[..., 0] = 1.0
        w[..., -1] = 1.0
        return w

    @functools.cached_property
    def dealias_mask(self) -> np.ndarray:
        """Keep modes with all |integer index| <= floor(n/3), zero the rest."""
        cut = self.n // 3
        idx_full = np.abs(np.rint(sp_fft.fftfreq(self.n, d=1.0 / self.n)).astype(int))
        idx_half = np.arange(self.n // 2 + 1)
        keep = (
            (idx_full[:, None, None] <= cut)
            & (idx_full[None, :, None] <= cut)
            & (idx_half[None, None, :] <= cut)
        )
        return keep.astype(float)

    # ---- transforms ----------------------------------------------------

    def transform(self, f: np.ndarray) -> np.ndarray:
        """Real field(s) -> spectral coefficients over the last three axes."""
        return sp_fft.rfftn(f, norm="forward", axes=(-3, -2, -1))

    def inverse(self, fh: np.ndarray) -> np.ndarray:
        """Spectral coefficients -> real field(s) over the last three axes."""
        return sp_fft.irfftn(fh, s=self.shape, norm="forward", axes=(-3, -2, -1))

    # ---- differential operators (spectral in, spectral out) -------------

    def grad(self, fh: np.ndarray) -> np.ndarray:
        """Gradient of a scalar: (n,n,n//2+1) -> (3,n,n,n//2+1)."""
        return 1j * self.k * fh

    def div(self, vh: np.ndarray) -> np.ndarray:
        """Divergence of a vector: (3,n,n,n//2+1) -> (n,n,n//2+1)."""
        return 1j * (self.k[0] * vh[0] + self.k[1] * vh[1] + self.k[2] * vh[2])

    def curl(self, vh: np.ndarray) -> np.ndarray:
        """Curl of a vector, (3,n,n,n//2+1) -> same shape."""
        k1, k2, k3 = self.k
        return np.stack(
            [
                1j * (k2 * vh[2] - k3 * vh[1]),
                1j * (k3 * vh[0] - k1 * vh[2]),
                1j * (k1 * vh[1] - k2 * vh[0]),
            ]
        )

    def laplacian(self, fh: np.ndarray) -> np.ndarray:
        """Laplacian multiplier; broadcasts over leading axes."""
        return -self.k_sq * fh

    def dealias(self, fh: np.ndarray) -> np.ndarray:
        """Two-thirds-rule projection; idempotent."""
        return self.dealias_mask * fh

    def derivative(self, fh: np.ndarray, alpha: tuple[int, int, int]) -> np.ndarray:
        """Spectral coefficients of the mixed partial d^alpha f."""
        sym = self._alpha_symbol(alpha)
        return sym * fh

    @functools.lru_cache(maxsize=None)
    def _alpha_symbol(self, alpha: tuple[int, int, int]) -> np.ndarray:
        a1, a2, a3 = alpha
        kfull, khalf = self._k1d
        sx = (1j * kfull[:, None, None]) ** a1 if a1 else 1.0
        sy = (1j * kfull[None, :, None]) ** a2 if a2 else 1.0
        sz = (1j * khalf[None, None, :]) ** a3 if a3 else 1.0
        return np.asarray(sx * sy * sz + np.zeros(self.spectral_shape, complex))

    # ---- integrals, inner products, norms -------------------------------

    def integral(self, f: np.ndarray) -> float:
        """Integral of a real grid field over the box (exact for band-limited f)."""
        return float(f.sum(axis=(-3, -2, -1)) * self.dx**3)

    def inner(self, f: np.ndarray, g: np.ndarray) -> float:
        """L^2(box) inner product of two real fields (vectors sum over components)."""
        return float(np.sum(f * g) * self.dx**3)

    def l2_norm(self, f: np.ndarray) -> float:
        return float(np.sqrt(np.sum(f * f) * self.dx**3))

    def spectral_l2_sq(self, fh: np.ndarray) -> float:
        """||f||_{L^2}^2 from coefficients: L^3 * sum mult |fh|^2 (sums leading axes)."""
        return float(self.box**3 * np.sum(self.mult * (fh.real**2 + fh.imag**2)))

    @functools.lru_cache(maxsize=None)
    def sobolev_multiplier(self, m: int) -> np.ndarray:
        """W_m(xi) = sum_{|alpha| <= m} xi^{2 alpha}, on the rfft layout."""
        if m < 0:
            raise ValueError(f"Sobolev order must be >= 0, got {m}")
        kfull, khalf = self._k1d
        w = np.zeros(self.spectral_shape)
        for a1, a2, a3 in multi_indices(m):
            w += (
                kfull[:, None, None] ** (2 * a1)
                * kfull[None, :, None] ** (2 * a2)
                * khalf[None, None, :] ** (2 * a3)
            )
        return w

    def sobolev_norm(self, f: np.ndarray, m: int) -> float:
        """(sum_{|alpha| <= m} ||d^alpha f||_{L^2}^2)^{1/2} for a real field."""
        fh = self.transform(f)
        return self.sobolev_norm_spectral(fh, m)

    def sobolev_norm_spectral(self, fh: np.ndarray, m: int) -> float:
        w = self.sobolev_multiplier(m) * self.mult
        return float(
            np.sqrt(self.box**3 * np.sum(w * (fh.real**2 + fh.imag**2)))
        )

    @functools.lru_cache(maxsize=None)
    def _radial_weight(self, k: int) -> np.ndarray:
        return np.asarray((1.0 + self.radius) ** k)

    def weighted_norm(self, f: np.ndarray, m: int = 0, k: int = 0) -> float:
        """Spatially weighted Sobolev norm of a real scalar field.

        (sum_{|alpha| <= m} integral (1 + |x - c|)^k |d^alpha f|^2 dx)^{1/2}
        with c the box center.
        """
        if m < 0 or k < 0:
            raise ValueError(f"orders must be >= 0, got m={m}, k={k}")
        w = self._radial_weight(k)
        fh = self.transform(f) if m > 0 else None
        total = 0.0
        for alpha in multi_indices(m):
            if alpha == (0, 0, 0):
                g = f
            else:
                g = self.inverse(self.derivative(fh, alpha))
            total += self.integral(w * g * g)
        return float(np.sqrt(total))
