"""Compiled hot loops for the receding-horizon controller.

The controller evaluates tens of candidate rollouts per plan and plans
hundreds of thousands of times in a training run, so the rollout, cost,
and line-search loops are compiled with numba. When numba is not
importable the same functions run as plain Python with identical
semantics, just slower.

Everything here works on scalars and flat float64 arrays; the public
dataclass-based API lives in the controller and virtual trainer
modules.
"""

from __future__ import annotations

import math

try:
    from numba import njit

    HAVE_NUMBA = True
except ImportError:  # pragma: no cover - exercised only without numba
    HAVE_NUMBA = False

    def njit(*args, **kwargs):
        if args and callable(args[0]):
            return args[0]

        def wrap(f):
            return f

        return wrap

_INVPHI = (math.sqrt(5.0) - 1.0) / 2.0


@njit(cache=True)
def accel(x, v, alpha, beta, gamma, omega, u):
    return u - (alpha * x * x + beta * v * v - gamma) * v - omega * omega * x


@njit(cache=True)
def rk4_step(x, v, alpha, beta, gamma, omega, u, dt):
    a1 = accel(x, v, alpha, beta, gamma, omega, u)
    k1x = v
    k1v = a1
    k2v = accel(x + 0.5 * dt * k1x, v + 0.5 * dt * k1v, alpha, beta, gamma, omega, u)
    k2x = v + 0.5 * dt * k1v
    k3v = accel(x + 0.5 * dt * k2x, v + 0.5 * dt * k2v, alpha, beta, gamma, omega, u)
    k3x = v + 0.5 * dt * k2v
    k4v = accel(x + dt * k3x, v + dt * k3v, alpha, beta, gamma, omega, u)
    k4x = v + dt * k3v
    x2 = x + dt * (k1x + 2.0 * k2x + 2.0 * k3x + k4x) / 6.0
    v2 = v + dt * (k1v + 2.0 * k2v + 2.0 * k3v + k4v) / 6.0
    return x2, v2


@njit(cache=True)
def rollout_cost(
    x, v, alpha, beta, gamma, omega,
    u, dt_sub, n_sub,
    r_p, sigma, w_pos, w_vel, w_u,
):
    """Cost of holding input u over one planning horizon.

    Integrates the oscillator for n_sub RK4 substeps of dt_sub and
    accumulates

        J = w_pos/2 (x_end - r_p)^2
          + 1/2 integral( w_vel (v - sigma)^2 + w_u u^2 )

    with the integral taken by the trapezoid rule on the substep grid;
    sigma has n_sub + 1 entries (reference velocity at each substep
    instant including both ends).
    """
    run = w_vel * (v - sigma[0]) * (v - sigma[0]) + w_u * u * u
    total = 0.5 * run
    for i in range(n_sub):
        x, v = rk4_step(x, v, alpha, beta, gamma, omega, u, dt_sub)
        run = w_vel * (v - sigma[i + 1]) * (v - sigma[i + 1]) + w_u * u * u
        if i == n_sub - 1:
            total += 0.5 * run
        else:
            total += run
    dx = x - r_p
    return 0.5 * w_pos * dx * dx + 0.5 * dt_sub * total


@njit(cache=True)
def choose_control(
    x, v, alpha, beta, gamma, omega,
    dt_sub, n_sub,
    r_p, sigma, w_pos, w_vel, w_u,
    u_max, n_grid, tol_frac,
):
    """Minimize the horizon cost over u in [-u_max, u_max].

    Scans an n_grid uniform grid (ties go to the lower input), then
    narrows the bracket around the best grid point by golden-section
    search until it is shorter than tol_frac * u_max. Returns the
    midpoint of the final bracket. Fully deterministic.
    """
    best_j = 0
    best_c = rollout_cost(
        x, v, alpha, beta, gamma, omega,
        -u_max, dt_sub, n_sub, r_p, sigma, w_pos, w_vel, w_u,
    )
    step = 2.0 * u_max / (n_grid - 1)
    for j in range(1, n_grid):
        c = rollout_cost(
            x, v, alpha, beta, gamma, omega,
            -u_max + step * j, dt_sub, n_sub, r_p, sigma, w_pos, w_vel, w_u,
        )
        if c < best_c:
            best_c = c
            best_j = j

    lo = -u_max + step * (best_j - 1) if best_j > 0 else -u_max
    hi = -u_max + step * (best_j + 1) if best_j < n_grid - 1 else u_max

    tol = tol_frac * u_max
    c = hi - _INVPHI * (hi - lo)
    d = lo + _INVPHI * (hi - lo)
    fc = rollout_cost(
        x, v, alpha, beta, gamma, omega, c, dt_sub, n_sub, r_p, sigma, w_pos, w_vel, w_u
    )
    fd = rollout_cost(
        x, v, alpha, beta, gamma, omega, d, dt_sub, n_sub, r_p, sigma, w_pos, w_vel, w_u
    )
    while hi - lo > tol:
        if fc < fd:
            hi = d
            d = c
            fd = fc
            c = hi - _INVPHI * (hi - lo)
            fc = rollout_cost(
                x, v, alpha, beta, gamma, omega,
                c, dt_sub, n_sub, r_p, sigma, w_pos, w_vel, w_u,
            )
        else:
            lo = c
            c = d
            fc = fd
            d = lo + _INVPHI * (hi - lo)
            fd = rollout_cost(
                x, v, alpha, beta, gamma, omega,
                d, dt_sub, n_sub, r_p, sigma, w_pos, w_vel, w_u,
            )
    return 0.5 * (lo + hi)


@njit(cache=True)
def advance_tick(
    x, v, alpha, beta, gamma, omega,
    dt_sub, n_sub, n_tick_sub,
    r_p, sigma, w_pos, w_vel, w_u,
    u_max, n_grid, tol_frac,
):
    """Advance the controlled oscillator by one game tick.

    Runs n_tick_sub substeps of dt_sub, re-planning (fresh input from
    choose_control) every n_sub substeps against the partner target r_p
    and the reference velocity stream sigma, which must cover
    n_tick_sub + n_sub + 1 substep instants. The body position is kept
    on the [0, 1] play axis; hitting a wall zeroes the velocity.

    Returns (x, v, last_u, ok) where ok is False if the state went
    non-finite (the caller handles the reset).
    """
    u = 0.0
    for i in range(n_tick_sub):
        if i % n_sub == 0:
            u = choose_control(
                x, v, alpha, beta, gamma, omega,
                dt_sub, n_sub,
                r_p, sigma[i : i + n_sub + 1], w_pos, w_vel, w_u,
                u_max, n_grid, tol_frac,
            )
        x, v = rk4_step(x, v, alpha, beta, gamma, omega, u, dt_sub)
        if not (math.isfinite(x) and math.isfinite(v)):
            return x, v, u, False
        if x < 0.0:
            x = 0.0
            v = 0.0
        elif x > 1.0:
            x = 1.0
            v = 0.0
    return x, v, u, True
