"""Lyapunov energy and dissipation functionals for perturbations.

For a symmetrized perturbation (sigma, v, E, B) about a stationary state
with density weight n_st = 1 + sigma_st + Phi(sigma_st), the full-order
energy at derivative order N is

    E_N = sum_{|a| <= N} int n_st (|d^a sigma|^2 + |d^a v|^2) dx
          + ||[E, B]||_N^2
          + k1 * sum_{|a| <= N-1} <d^a v, grad d^a sigma>
          + k2 * sum_{|a| <= N-1} <d^a v, d^a E>
          - k3 * sum_{|a| <= N-2} <curl d^a E, d^a B>

with the high-order variant dropping the |a| = 0 block (and using
||grad [E, B]||_{N-1}^2).  The matching dissipations are

    D_N   = sum_{|a| <= N} int n_st |d^a v|^2 + ||sigma||_N^2
            + ||grad [E, B]||_{N-2}^2 + ||E||^2
    D_N^h = sum_{1 <= |a| <= N} int n_st |d^a v|^2 + ||grad sigma||_{N-1}^2
            + ||grad^2 [E, B]||_{N-3}^2 + ||grad E||^2

Note the regularity loss: D_N controls one derivative of [E, B] fewer than
E_N and misses the zero-order B block entirely, so dissipation never fully
dominates the energy and decay certification is genuinely nontrivial.

The cross ("interactive") terms carry small coupling weights k1, k2, k3
whose ordering 0 < k3 < k2 < k1 < 1 with k2^{3/2} < k3 keeps E_N equivalent
to the plain squared Sobolev norm of the perturbation.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .dynamics import ELEC, MAG, SCALAR, VEL, phi_of_sigma
from .grid import GridSpec, multi_indices

__all__ = [
    "CertificationResult",
    "EnergyWeights",
    "dissipation_full",
    "dissipation_high",
    "energy_full",
    "energy_high",
    "energy_report",
    "equivalence_ratio",
    "interactive_terms",
    "lyapunov_certify",
]


@dataclass(frozen=True)
class EnergyWeights:
    """Coupling weights and derivative order of the Lyapunov functional."""

    kappa1: float = 0.1
    kappa2: float = 0.005
    kappa3: float = 0.002
    order: int = 3

    def __post_init__(self) -> None:
        k1, k2, k3 = self.kappa1, self.kappa2, self.kappa3
        if not (0.0 < k3 < k2 < k1 < 1.0):
            raise ValueError(
                f"coupling weights must satisfy 0 < kappa3 < kappa2 < kappa1 < 1, "
                f"got kappa1={k1}, kappa2={k2}, kappa3={k3}"
            )
        if not k2**1.5 < k3:
            raise ValueError(
                f"coupling weights must satisfy kappa2^(3/2) < kappa3, "
                f"got kappa2^(3/2)={k2**1.5:.3g} >= kappa3={k3}"
            )
        if self.order < 3:
            raise ValueError(f"derivative order must be >= 3, got {self.order}")


def _cross_sum(grid: GridSpec, a_hat: np.ndarray, b_hat: np.ndarray, m: int) -> float:
    """sum_{|alpha| <= m} <d^a a, d^a b> for stacks of fields, spectrally."""
    w = grid.sobolev_multiplier(m) * grid.mult
    return float(grid.box**3 * np.sum(w * (a_hat.conj() * b_hat).real))


def _weighted_alpha_sums(
    grid: GridSpec, weight: np.ndarray, sv_hat: np.ndarray, m: int
) -> tuple[float, float, float, float]:
    """Stationary-weighted derivative sums of the (sigma, v) stack.

    Returns (sigma total, v total, sigma |alpha|=0 part, v |alpha|=0 part)
    of sum_{|alpha| <= m} int weight * |d^alpha .|^2 dx.
    """
    s_tot = v_tot = s_zero = v_zero = 0.0
    for alpha in multi_indices(m):
        d = grid.inverse(grid.derivative(sv_hat, alpha))
        s_part = grid.integral(weight * d[0] * d[0])
        v_part = grid.integral(weight * (d[1:] * d[1:]).sum(axis=0))
        s_tot += s_part
        v_tot += v_part
        if alpha == (0, 0, 0):
            s_zero, v_zero = s_part, v_part
    return s_tot, v_tot, s_zero, v_zero


def _stationary_weight(sigma_st: np.ndarray | float, gamma: float) -> np.ndarray:
    return 1.0 + np.asarray(sigma_st) + phi_of_sigma(sigma_st, gamma)


def energy_report(
    grid: GridSpec,
    pert: np.ndarray,
    sigma_st: np.ndarray | float,
    gamma: float,
    weights: EnergyWeights = EnergyWeights(),
) -> dict[str, float]:
    """All energy/dissipation functionals and cross terms of one snapshot."""
    n = weights.order
    w_st = _stationary_weight(sigma_st, gamma) * np.ones(grid.shape)
    ph = grid.transform(pert)
    e_hat = ph[ELEC]
    b_hat = ph[MAG]
    eb_hat = ph[4:10]

    s_full, v_full, s_zero, v_zero = _weighted_alpha_sums(grid, w_st, ph[0:4], n)
    sv_full = s_full + v_full
    sv_zero = s_zero + v_zero

    wm = lambda m: grid.sobolev_multiplier(m) * grid.mult
    sq = lambda f_hat, mult: float(grid.box**3 * np.sum(mult * (f_hat.real**2 + f_hat.imag**2)))
    ksq = grid.k_sq

    eb_n = sq(eb_hat, wm(n))
    grad_eb_nm1 = sq(eb_hat, wm(n - 1) * ksq)
    grad_eb_nm2 = sq(eb_hat, wm(n - 2) * ksq)
    grad2_eb_nm3 = sq(eb_hat, wm(n - 3) * ksq**2)
    sigma_n = sq(ph[SCALAR], wm(n))
    grad_sigma_nm1 = sq(ph[SCALAR], wm(n - 1) * ksq)
    e_zero = sq(e_hat, grid.mult)
    grad_e_zero = sq(e_hat, grid.mult * ksq)

    grad_sigma_hat = grid.grad(ph[SCALAR])
    curl_e_hat = grid.curl(e_hat)
    int1 = _cross_sum(grid, ph[VEL], grad_sigma_hat, n - 1)
    int2 = _cross_sum(grid, ph[VEL], e_hat, n - 1)
    int3 = -_cross_sum(grid, curl_e_hat, b_hat, n - 2)
    # the |alpha| = 0 contributions, to subtract for the high-order variants
    int1_zero = _cross_sum(grid, ph[VEL], grad_sigma_hat, 0)
    int2_zero = _cross_sum(grid, ph[VEL], e_hat, 0)
    int3_zero = -_cross_sum(grid, curl_e_hat, b_hat, 0)

    k1, k2, k3 = weights.kappa1, weights.kappa2, weights.kappa3
    cross_full = k1 * int1 + k2 * int2 + k3 * int3
    cross_high = (
        k1 * (int1 - int1_zero) + k2 * (int2 - int2_zero) + k3 * (int3 - int3_zero)
    )

    plain_n = sq(ph, wm(n))

    return {
        "energy_full": sv_full + eb_n + cross_full,
        "energy_high": (sv_full - sv_zero) + grad_eb_nm1 + cross_high,
        "dissipation_full": v_full + sigma_n + grad_eb_nm2 + e_zero,
        "dissipation_high": (v_full - v_zero) + grad_sigma_nm1 + grad2_eb_nm3 + grad_e_zero,
        "int1": int1,
        "int2": int2,
        "int3": int3,
        "sobolev_sq": plain_n,
    }


def energy_full(grid, pert, sigma_st, gamma, weights=EnergyWeights()) -> float:
    return energy_report(grid, pert, sigma_st, gamma, weights)["energy_full"]


def energy_high(grid, pert, sigma_st, gamma, weights=EnergyWeights()) -> float:
    return energy_report(grid, pert, sigma_st, gamma, weights)["energy_high"]


def dissipation_full(grid, pert, sigma_st, gamma, weights=EnergyWeights()) -> float:
    return energy_report(grid, pert, sigma_st, gamma, weights)["dissipation_full"]


def dissipation_high(grid, pert, sigma_st, gamma, weights=EnergyWeights()) -> float:
    return energy_report(grid, pert, sigma_st, gamma, weights)["dissipation_high"]


def interactive_terms(
    grid, pert, weights: EnergyWeights = EnergyWeights()
) -> tuple[float, float, float]:
    """(int1, int2, int3) cross terms at orders N-1, N-1, N-2."""
    n = weights.order
    ph = grid.transform(pert)
    grad_sigma_hat = grid.grad(ph[SCALAR])
    curl_e_hat = grid.curl(ph[ELEC])
    return (
        _cross_sum(grid, ph[VEL], grad_sigma_hat, n - 1),
        _cross_sum(grid, ph[VEL], ph[ELEC], n - 1),
        -_cross_sum(grid, curl_e_hat, ph[MAG], n - 2),
    )


def equivalence_ratio(
    grid, pert, sigma_st, gamma, weights: EnergyWeights = EnergyWeights()
) -> float:
    """E_N divided by the plain squared H^N norm of the perturbation."""
    rep = energy_report(grid, pert, sigma_st, gamma, weights)
    if rep["sobolev_sq"] == 0.0:
        raise ValueError("zero perturbation has no equivalence ratio")
    return rep["energy_full"] / rep["sobolev_sq"]


@dataclass
class CertificationResult:
    """Outcome of the discrete Lyapunov-inequality certification."""

    lambda_best: float
    violations: list[int]
    tol_disc: float
    lambda_strict: float

    @property
    def certified(self) -> bool:
        return self.lambda_best > 0.0 and not self.violations


def lyapunov_certify(
    times: np.ndarray, energies: np.ndarray, dissipations: np.ndarray
) -> CertificationResult:
    """Largest lambda with E(t_{k+1}) - E(t_k) <= -lambda dt D(t_k) + tol.

    tol = 10 dt^2 max_k D allows for the quadrature error of sampling a
    continuous dissipation integral at cadence dt.  Violations are steps
    whose energy increment exceeds tol outright (no lambda can fix them).
    A trajectory with no dissipation at all is vacuously certified with
    lambda_best = +inf.
    """
    t = np.asarray(times, dtype=float)
    e = np.asarray(energies, dtype=float)
    d = np.asarray(dissipations, dtype=float)
    if not (t.shape == e.shape == d.shape) or t.size < 2:
        raise ValueError("need equal-length time, energy, dissipation series with >= 2 points")
    steps = np.diff(t)
    dt = steps[0]
    if dt <= 0.0 or np.abs(steps - dt).max() > 1e-9 * max(dt, 1.0):
        raise ValueError("time series must be uniformly spaced and increasing")

    tol = 10.0 * dt**2 * float(d.max(initial=0.0))
    de = np.diff(e)
    d_at = d[:-1]
    violations = [int(k) for k in np.nonzero(de > tol)[0]]

    live = d_at > 0.0
    if not live.any():
        lam = np.inf if not violations else -np.inf
        return CertificationResult(lam, violations, tol, lam)
    lambda_best = float(((tol - de[live]) / (dt * d_at[live])).min())
    lambda_strict = float(((-de[live]) / (dt * d_at[live])).min())
    return CertificationResult(lambda_best, violations, tol, lambda_strict)
