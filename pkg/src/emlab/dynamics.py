"""Nonlinear evolution of the damped plasma system, in two equivalent forms.

Primitive variables (n, u, E, B) on the physical clock t:

    dt n = -div(n u)
    dt u = -u.grad u - grad h(n) - E - u x B - u,   h(n) = g/(g-1) (n^{g-1}-1)
    dt E =  curl B + n u
    dt B = -curl E
    div E = n_b - n,  div B = 0                     (g = adiabatic exponent)

Symmetrized variables (sigma, v, E~, B~) on the rescaled clock tau = sqrt(g) t,
with sigma = 2/(g-1) (n^{(g-1)/2} - 1), v = u/sqrt(g), E~ = E/sqrt(g),
B~ = B/sqrt(g), and w(sigma) = (g-1)/2 sigma + 1:

    dtau sigma = -v.grad sigma - w(sigma) div v
    dtau v     = -v.grad v - w(sigma) grad sigma - E~/sqrt(g) - v x B~ - v/sqrt(g)
    dtau E~    =  curl B~ / sqrt(g) + (Phi(sigma) + sigma + 1) v / sqrt(g)
    dtau B~    = -curl E~ / sqrt(g)
    div E~ = (n_b - 1 - Phi(sigma) - sigma)/sqrt(g),  div B~ = 0

where Phi(sigma) = w(sigma)^{2/(g-1)} - sigma - 1 so that the density is
n = Phi(sigma) + sigma + 1.

Discretization notes.  States are real arrays of shape (10, n, n, n) holding
[scalar, vector, vector, vector].  Tendencies are assembled in spectral
space and the complete right-hand side is projected by the two-thirds
dealias mask (a Galerkin truncation), so pointwise cancellations --- in
particular the stationary balance grad h(n_st) = -E_st --- are projected as
a unit and exact equilibria stay exact.  The acoustic gradient terms are
written in gradient form, grad h(n) and w grad sigma = grad W(sigma) with
W(sigma) = (w^2 - 1)/(g - 1), which is what makes that balance hold to
roundoff on the grid.
"""
from __future__ import annotations

from typing import Callable, Iterator

import numpy as np

from .grid import GridSpec

__all__ = [
    "cfl_dt",
    "compatible_perturbation",
    "constraint_residuals",
    "from_symmetric",
    "integrate_fixed",
    "linear_rhs_symmetric",
    "n_of_sigma",
    "nonlinear_sources",
    "phi_of_sigma",
    "rhs_primitive",
    "rhs_symmetric",
    "sigma_of_n",
    "step_rk4",
    "to_symmetric",
]

SCALAR = 0
VEL = slice(1, 4)
ELEC = slice(4, 7)
MAG = slice(7, 10)


def phi_of_sigma(sigma: np.ndarray | float, gamma: float) -> np.ndarray:
    """Phi(sigma) = ((g-1)/2 sigma + 1)^{2/(g-1)} - sigma - 1.

    Vanishes identically for gamma = 3 and equals sigma^2/4 for gamma = 2.
    """
    s = np.asarray(sigma, dtype=float)
    w = 0.5 * (gamma - 1.0) * s + 1.0
    return w ** (2.0 / (gamma - 1.0)) - s - 1.0


def w_of_sigma(sigma: np.ndarray | float, gamma: float) -> np.ndarray:
    return 0.5 * (gamma - 1.0) * np.asarray(sigma, dtype=float) + 1.0


def n_of_sigma(sigma: np.ndarray | float, gamma: float) -> np.ndarray:
    return w_of_sigma(sigma, gamma) ** (2.0 / (gamma - 1.0))


def sigma_of_n(n: np.ndarray | float, gamma: float) -> np.ndarray:
    return 2.0 / (gamma - 1.0) * (np.asarray(n, dtype=float) ** (0.5 * (gamma - 1.0)) - 1.0)


def to_symmetric(state: np.ndarray, gamma: float) -> np.ndarray:
    """Primitive (n, u, E, B) -> symmetrized (sigma, v, E~, B~).

    The time axes differ: a symmetrized trajectory runs on tau = sqrt(g) t.
    """
    out = np.empty_like(state)
    out[SCALAR] = sigma_of_n(state[SCALAR], gamma)
    out[1:] = state[1:] / np.sqrt(gamma)
    return out


def from_symmetric(state: np.ndarray, gamma: float) -> np.ndarray:
    out = np.empty_like(state)
    out[SCALAR] = n_of_sigma(state[SCALAR], gamma)
    out[1:] = state[1:] * np.sqrt(gamma)
    return out


def _cross(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    return np.stack(
        [
            a[1] * b[2] - a[2] * b[1],
            a[2] * b[0] - a[0] * b[2],
            a[0] * b[1] - a[1] * b[0],
        ]
    )


def rhs_symmetric(grid: GridSpec, gamma: float, state: np.ndarray) -> np.ndarray:
    """Tendency of the symmetrized system on the tau clock."""
    sg = np.sqrt(gamma)
    sigma = state[SCALAR]
    v = state[VEL]
    sh = grid.transform(state)
    grad_sigma = grid.inverse(grid.grad(sh[SCALAR]))
    div_v_hat = grid.div(sh[VEL])
    div_v = grid.inverse(div_v_hat)
    omega = grid.inverse(grid.curl(sh[VEL]))

    # pointwise products, then one batched forward transform
    ke_pot = 0.5 * (v * v).sum(axis=0) + (w_of_sigma(sigma, gamma) ** 2 - 1.0) / (gamma - 1.0)
    prods = np.empty((9,) + grid.shape)
    prods[0] = (v * grad_sigma).sum(axis=0)               # v . grad sigma
    prods[1] = sigma * div_v                              # closes w(sigma) div v
    prods[2] = ke_pot                                     # |v|^2/2 + W(sigma)
    prods[3:6] = _cross(v, omega - state[MAG])            # v x (curl v - B~)
    prods[6:9] = (phi_of_sigma(sigma, gamma) + sigma + 1.0) * v   # current n(sigma) v
    ph = grid.transform(prods)

    out = np.empty_like(sh)
    out[SCALAR] = -ph[0] - 0.5 * (gamma - 1.0) * ph[1] - div_v_hat
    out[VEL] = -grid.grad(ph[2]) + ph[3:6] - (sh[ELEC] + sh[VEL]) / sg
    out[ELEC] = grid.curl(sh[MAG]) / sg + ph[6:9] / sg
    out[MAG] = -grid.curl(sh[ELEC]) / sg
    out = grid.dealias(out)

    # The density advances through nonconservative products while the
    # current above is a separate dealiased product, so beyond quadratic
    # order their aliasing disagrees and div E~ would creep away from the
    # density.  Replace the longitudinal current with the one the density
    # tendency implies; afterwards the Gauss defect is a constant of the
    # semi-discrete motion on every representable mode.  (The mean mode
    # has no current to adjust, so total charge keeps whatever truncation
    # drift the density products produce.)
    n_prime = w_of_sigma(sigma, gamma) ** ((3.0 - gamma) / (gamma - 1.0))
    s_hat = grid.dealias(grid.transform(n_prime * grid.inverse(out[SCALAR])))
    defect = grid.div(out[ELEC]) + s_hat / sg
    coef = np.zeros_like(defect)
    np.divide(defect, grid.k_sq, out=coef, where=grid.k_sq > 0.0)
    out[ELEC] += 1j * grid.k * coef
    return grid.inverse(out)


def rhs_primitive(grid: GridSpec, gamma: float, state: np.ndarray) -> np.ndarray:
    """Tendency of the primitive system on the physical clock."""
    n = state[SCALAR]
    u = state[VEL]
    sh = grid.transform(state)
    omega = grid.inverse(grid.curl(sh[VEL]))

    ke_h = 0.5 * (u * u).sum(axis=0) + gamma / (gamma - 1.0) * (n ** (gamma - 1.0) - 1.0)
    prods = np.empty((7,) + grid.shape)
    prods[0] = ke_h
    prods[1:4] = _cross(u, omega - state[MAG])
    prods[4:7] = n * u
    ph = grid.transform(prods)

    out = np.empty_like(sh)
    out[SCALAR] = -grid.div(ph[4:7])
    out[VEL] = -grid.grad(ph[0]) + ph[1:4] - sh[ELEC] - sh[VEL]
    out[ELEC] = grid.curl(sh[MAG]) + ph[4:7]
    out[MAG] = -grid.curl(sh[ELEC])
    return grid.inverse(grid.dealias(out))


def linear_rhs_symmetric(
    grid: GridSpec,
    gamma: float,
    state: np.ndarray,
    damping: bool = True,
    coupling: bool = True,
) -> np.ndarray:
    """Linearization of the symmetrized system at the constant equilibrium.

    With damping off, the remaining terms are antisymmetric and conserve
    (1/2) sum of squared L^2 norms; with coupling off the velocity/electric
    exchange terms are removed as well.
    """
    sg = np.sqrt(gamma)
    sh = grid.transform(state)
    out = np.empty_like(sh)
    out[SCALAR] = -grid.div(sh[VEL])
    out[VEL] = -grid.grad(sh[SCALAR])
    out[ELEC] = grid.curl(sh[MAG]) / sg
    out[MAG] = -grid.curl(sh[ELEC]) / sg
    if coupling:
        out[VEL] -= sh[ELEC] / sg
        out[ELEC] += sh[VEL] / sg
    if damping:
        out[VEL] -= sh[VEL] / sg
    return grid.inverse(out)


def nonlinear_sources(
    grid: GridSpec,
    gamma: float,
    pert: np.ndarray,
    rho_st: np.ndarray | float = 0.0,
) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Quadratic-and-higher sources of the primitive perturbation system.

    For the perturbation (rho, u, E, B) about a stationary density 1 + rho_st:

        g1 = -div[(rho + rho_st) u]
        g2 = -u.grad u - u x B - g [(1+rho+rho_st)^{g-2} - 1] grad rho
             - g [(1+rho+rho_st)^{g-2} - (1+rho_st)^{g-2}] grad rho_st
        g3 = (rho + rho_st) u

    projected by the same dealias mask as the full tendencies.
    """
    rho = pert[SCALAR]
    u = pert[VEL]
    rho_st = np.asarray(rho_st, dtype=float)
    rho_tot = rho + rho_st

    uh = grid.transform(u)
    omega = grid.inverse(grid.curl(uh))
    grad_rho = grid.inverse(grid.grad(grid.transform(rho)))
    ke = 0.5 * (u * u).sum(axis=0)

    pres = gamma * ((1.0 + rho_tot) ** (gamma - 2.0) - 1.0) * grad_rho
    if np.ndim(rho_st) == 3:
        grad_rho_st = grid.inverse(grid.grad(grid.transform(rho_st)))
        pres = pres + gamma * (
            (1.0 + rho_tot) ** (gamma - 2.0) - (1.0 + rho_st) ** (gamma - 2.0)
        ) * grad_rho_st

    stack = np.empty((10,) + grid.shape)
    stack[0] = ke
    stack[1:4] = _cross(u, omega - pert[MAG]) - pres
    stack[4:7] = rho_tot * u
    stack[7:10] = 0.0
    sh = grid.transform(stack)
    g2_hat = grid.dealias(-grid.grad(sh[0]) + sh[1:4])
    g13_hat = grid.dealias(sh[4:7])
    g3 = grid.inverse(g13_hat)
    g1 = grid.inverse(-grid.div(g13_hat))
    return g1, grid.inverse(g2_hat), g3


def constraint_residuals(
    grid: GridSpec,
    gamma: float,
    state: np.ndarray,
    n_b: np.ndarray | float = 1.0,
    form: str = "symmetric",
    band_limited: bool = False,
) -> dict[str, float]:
    """L^2 and max norms of the divergence constraints.

    form "symmetric":  div E~ - (n_b - 1 - Phi(sigma) - sigma)/sqrt(g),  div B~
    form "primitive":  div E - (n_b - n),                                div B

    With band_limited the defect is projected onto the dealiased band the
    flow can represent; the excluded tail measures spectral truncation of
    the pointwise nonlinearity, not failure of transport.
    """
    sh = grid.transform(state)
    if form == "symmetric":
        sigma = state[SCALAR]
        target = (np.asarray(n_b) - 1.0 - phi_of_sigma(sigma, gamma) - sigma) / np.sqrt(gamma)
    elif form == "primitive":
        target = np.asarray(n_b) - state[SCALAR]
    else:
        raise ValueError(f"unknown form {form!r}; use 'symmetric' or 'primitive'")
    res_hat = grid.div(sh[ELEC]) - grid.transform(target)
    div_b_hat = grid.div(sh[MAG])
    if band_limited:
        res_hat = grid.dealias(res_hat)
        div_b_hat = grid.dealias(div_b_hat)
    res = grid.inverse(res_hat)
    div_b = grid.inverse(div_b_hat)
    return {
        "gauss_e_l2": grid.l2_norm(res),
        "gauss_e_max": float(np.abs(res).max()),
        "gauss_b_l2": grid.l2_norm(div_b),
        "gauss_b_max": float(np.abs(div_b).max()),
    }


def cfl_dt(grid: GridSpec, gamma: float, state: np.ndarray, cfl: float) -> float:
    """Largest admissible step: cfl * dx / (1 + max|v| + max w(sigma))."""
    if not 0.0 < cfl < 1.0:
        raise ValueError(f"CFL number must lie in (0, 1), got {cfl}")
    speed = np.sqrt((state[VEL] ** 2).sum(axis=0)).max()
    c_max = 1.0 + speed + w_of_sigma(state[SCALAR], gamma).max()
    return float(cfl * grid.dx / c_max)


def step_rk4(y: np.ndarray, rhs: Callable[[np.ndarray], np.ndarray], h: float) -> np.ndarray:
    """One classical Runge-Kutta step."""
    k1 = rhs(y)
    k2 = rhs(y + 0.5 * h * k1)
    k3 = rhs(y + 0.5 * h * k2)
    k4 = rhs(y + h * k3)
    return y + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)


def integrate_fixed(
    y0: np.ndarray,
    rhs: Callable[[np.ndarray], np.ndarray],
    t_end: float,
    dt_max: Callable[[np.ndarray], float] | float,
    cadence: float | None = None,
) -> Iterator[tuple[float, np.ndarray]]:
    """Fixed-step RK4 integration, yielding (t, state) at cadence boundaries.

    dt_max may be a constant or a callable recomputed from the state at each
    cadence chunk (e.g. a CFL bound); within a chunk the step is uniform and
    chosen to land exactly on the boundary.  Yields the initial state first.
    """
    if t_end <= 0.0:
        raise ValueError(f"t_end must be positive, got {t_end}")
    if cadence is None:
        cadence = t_end
    n_chunks = int(round(t_end / cadence))
    if abs(n_chunks * cadence - t_end) > 1e-9 * t_end or n_chunks < 1:
        raise ValueError(f"cadence {cadence} does not divide t_end {t_end}")
    y = y0.copy()
    yield 0.0, y
    for chunk in range(1, n_chunks + 1):
        cap = dt_max(y) if callable(dt_max) else float(dt_max)
        steps = max(1, int(np.ceil(cadence / cap - 1e-12)))
        h = cadence / steps
        for _ in range(steps):
            y = step_rk4(y, rhs, h)
        yield chunk * cadence, y


def _band_mask(grid: GridSpec, band: int) -> np.ndarray:
    idx = np.abs(np.rint(np.fft.fftfreq(grid.n, 1.0 / grid.n)).astype(int))
    half = np.arange(grid.n // 2 + 1)
    return (
        (idx[:, None, None] <= band)
        & (idx[None, :, None] <= band)
        & (half[None, None, :] <= band)
    ).astype(float)


def _shaped_noise(grid: GridSpec, rng: np.random.Generator, band: int, env: np.ndarray) -> np.ndarray:
    """Centered noise under an envelope, band-limited after enveloping so the
    result is fully resolvable (no content beyond |index| = band)."""
    keep = _band_mask(grid, band)
    f = grid.inverse(keep * grid.transform(rng.standard_normal(grid.shape)))
    out = grid.inverse(keep * grid.transform(env * f))
    return out / np.abs(out).max()


def compatible_perturbation_primitive(
    grid: GridSpec,
    amp: float,
    seed: int = 0,
    band: int | None = None,
    envelope_width: float | None = None,
) -> np.ndarray:
    """Random primitive perturbation (rho, u, E, B) about the constant state.

    rho is mean-zero band-limited noise under a centered Gaussian envelope,
    u is free noise of the same shape, B is the curl of a noise potential,
    and E is purely longitudinal with div E = -rho solved spectrally.  All
    components are fully resolvable (band-limited) on the grid.
    """
    if amp <= 0.0:
        raise ValueError(f"perturbation amplitude must be positive, got {amp}")
    rng = np.random.default_rng(seed)
    band = band if band is not None else grid.n // 3 - 1
    width = envelope_width if envelope_width is not None else grid.box / 6.0
    env = np.exp(-(grid.radius**2) / width**2)

    pert = np.zeros((10,) + grid.shape)
    rho = _shaped_noise(grid, rng, band, env)
    rho -= rho.mean()
    pert[SCALAR] = amp * rho / np.abs(rho).max()
    for c in range(3):
        pert[VEL][c] = amp * _shaped_noise(grid, rng, band, env)
    pot = np.stack([_shaped_noise(grid, rng, band, env) for _ in range(3)])
    mag = grid.inverse(grid.curl(grid.transform(pot)))
    pert[MAG] = amp * mag / np.abs(mag).max()

    src = grid.transform(-pert[SCALAR])
    live = grid.k_sq > 0.0
    coef = np.zeros_like(src)
    np.divide(src, grid.k_sq, out=coef, where=live)
    pert[ELEC] = grid.inverse(-1j * grid.k * coef)
    return pert


def compatible_perturbation(
    grid: GridSpec,
    gamma: float,
    sigma_st: np.ndarray,
    amp: float,
    seed: int = 0,
    band: int | None = None,
    envelope_width: float | None = None,
) -> np.ndarray:
    """Random symmetrized perturbation consistent with both divergence laws.

    sigma and v are band-limited noise under a centered Gaussian envelope;
    B~ is the curl of such a noise potential (exactly solenoidal, zero mean);
    the electric field is purely longitudinal, solved spectrally so that the
    full nonlinear Gauss law holds for the total state (stationary plus
    perturbation).  A constant shift of sigma enforces the solvability
    condition that the induced charge integrates to zero on the box.
    """
    if amp <= 0.0:
        raise ValueError(f"perturbation amplitude must be positive, got {amp}")
    rng = np.random.default_rng(seed)
    band = band if band is not None else grid.n // 3 - 1
    width = envelope_width if envelope_width is not None else grid.box / 6.0
    env = np.exp(-(grid.radius**2) / width**2)

    pert = np.zeros((10,) + grid.shape)
    pert[SCALAR] = amp * _shaped_noise(grid, rng, band, env)
    for c in range(3):
        pert[VEL][c] = amp * _shaped_noise(grid, rng, band, env)
    pot = np.stack([_shaped_noise(grid, rng, band, env) for _ in range(3)])
    mag = grid.inverse(grid.curl(grid.transform(pot)))
    pert[MAG] = amp * mag / np.abs(mag).max()

    # shift sigma so the induced charge has zero mean (Newton on a scalar)
    c_shift = 0.0
    for _ in range(8):
        s_tot = sigma_st + pert[SCALAR] - c_shift
        charge = phi_of_sigma(s_tot, gamma) - phi_of_sigma(sigma_st, gamma) + pert[SCALAR] - c_shift
        mu = grid.integral(charge)
        dmu = -grid.integral(
            w_of_sigma(s_tot, gamma) ** ((3.0 - gamma) / (gamma - 1.0))
        )
        step = mu / dmu
        c_shift -= step
        if abs(step) < 1e-15 * max(1.0, abs(c_shift)):
            break
    pert[SCALAR] -= c_shift
    s_tot = sigma_st + pert[SCALAR]
    charge = phi_of_sigma(s_tot, gamma) - phi_of_sigma(sigma_st, gamma) + pert[SCALAR]

    # longitudinal electric field from div E = -charge/sqrt(gamma); modes whose
    # derivative symbol vanishes (zero and pure-Nyquist) carry no longitudinal
    # direction and are left empty
    src = grid.transform(-charge / np.sqrt(gamma))
    live = grid.k_sq > 0.0
    coef = np.zeros_like(src)
    np.divide(src, grid.k_sq, out=coef, where=live)
    pert[ELEC] = grid.inverse(-1j * grid.k * coef)
    return pert
