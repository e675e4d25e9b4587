"""Independent finite-difference oracle for stationary profiles (1D).

Second-order central differences on a uniform interior grid (>= 512
nodes) with dense Newton iteration.  This path shares nothing with the
spectral solvers: it discretizes

    u'' + lam u - u^{p-1} = 0,  u(0) = u(L) = 0,  u > 0,

directly, either at fixed multiplier lam or as the augmented system
with the unit-mass row appended and lam as an unknown.  It provides the
reference values the spectral ground-state solvers are validated
against.

The Newton residual bottoms out near eps/h^2 (cancellation in the
divided differences), about 1e-9 in max norm at 1024 nodes, so the
default tolerance sits just above that floor; the profile error is
dominated by the h^2 discretization bias either way.
"""

from __future__ import annotations

import math

import numpy as np

__all__ = ["fd_solve_at_lambda", "fd_ground_state", "fd_residual", "fd_mass"]


def _fd_laplacian(n: int, h: float) -> np.ndarray:
    lap = np.zeros((n, n))
    idx = np.arange(n)
    lap[idx, idx] = -2.0 / h ** 2
    lap[idx[:-1], idx[:-1] + 1] = 1.0 / h ** 2
    lap[idx[1:], idx[1:] - 1] = 1.0 / h ** 2
    return lap


def fd_mass(u: np.ndarray, h: float) -> float:
    """Trapezoid mass with zero boundary values."""
    return float(h * np.dot(u, u))


def fd_residual(u: np.ndarray, lam: float, p: float, h: float) -> float:
    """Discrete L2 norm of u'' + lam u - u^{p-1}."""
    lap = (np.concatenate(([0.0], u[:-1])) - 2.0 * u
           + np.concatenate((u[1:], [0.0]))) / h ** 2
    r = lap + lam * u - np.abs(u) ** (p - 2.0) * u
    return float(math.sqrt(h * np.dot(r, r)))


def fd_solve_at_lambda(lam: float, p: float, nodes: int = 1024,
                       length: float = 1.0, tol: float = 1e-8,
                       max_iter: int = 60):
    """Positive solution of u'' + lam u = u^{p-1} at fixed lam > pi^2/L^2.

    Returns (x, u) on the interior nodes.  Newton with simple
    backtracking from a one-mode initial guess.
    """
    if nodes < 512:
        raise ValueError("oracle resolution floor is 512 nodes")
    lam1 = (math.pi / length) ** 2
    if lam <= lam1:
        raise ValueError("no positive solution for lam <= lambda_1")
    h = length / (nodes + 1)
    x = h * np.arange(1, nodes + 1)
    lap = _fd_laplacian(nodes, h)

    # one-mode amplitude estimate: mass ~ (2/3)(lam - lam1) in w1 units
    amp = math.sqrt(2.0) * math.sqrt(max(2.0 * (lam - lam1) / 3.0, 1e-8))
    u = amp * np.sin(math.pi * x / length)

    def res(v):
        return lap @ v + lam * v - np.abs(v) ** (p - 2.0) * v

    f = res(u)
    for _ in range(max_iter):
        if np.max(np.abs(f)) < tol:
            break
        jac = lap + lam * np.eye(nodes) - np.diag((p - 1.0) * np.abs(u) ** (p - 2.0))
        delta = np.linalg.solve(jac, -f)
        step_size = 1.0
        for _ in range(30):
            u_try = u + step_size * delta
            f_try = res(u_try)
            if np.max(np.abs(f_try)) < np.max(np.abs(f)):
                u, f = u_try, f_try
                break
            step_size *= 0.5
        else:
            raise RuntimeError("oracle Newton stalled at fixed lambda")
    else:
        raise RuntimeError("oracle Newton did not converge at fixed lambda")
    return x, u


def fd_ground_state(p: float, nodes: int = 1024, length: float = 1.0,
                    tol: float = 1e-8, max_iter: int = 80):
    """Unit-mass positive stationary profile via the augmented Newton
    system (profile plus multiplier, with the mass constraint row).

    Returns (x, u, lam).
    """
    if nodes < 512:
        raise ValueError("oracle resolution floor is 512 nodes")
    h = length / (nodes + 1)
    x = h * np.arange(1, nodes + 1)
    lap = _fd_laplacian(nodes, h)
    lam1 = (math.pi / length) ** 2

    u = math.sqrt(2.0 / length) * np.sin(math.pi * x / length)
    lam = lam1 + 1.5  # one-mode estimate at unit mass for p = 4; generic start

    def full_res(v, lm):
        r = lap @ v + lm * v - np.abs(v) ** (p - 2.0) * v
        return np.concatenate((r, [h * np.dot(v, v) - 1.0]))

    f = full_res(u, lam)
    for _ in range(max_iter):
        if np.max(np.abs(f)) < tol:
            break
        jac = np.zeros((nodes + 1, nodes + 1))
        jac[:nodes, :nodes] = (lap + lam * np.eye(nodes)
                               - np.diag((p - 1.0) * np.abs(u) ** (p - 2.0)))
        jac[:nodes, nodes] = u
        jac[nodes, :nodes] = 2.0 * h * u
        delta = np.linalg.solve(jac, -f)
        step_size = 1.0
        for _ in range(30):
            u_try = u + step_size * delta[:nodes]
            lam_try = lam + step_size * delta[nodes]
            f_try = full_res(u_try, lam_try)
            if np.max(np.abs(f_try)) < np.max(np.abs(f)):
                u, lam, f = u_try, lam_try, f_try
                break
            step_size *= 0.5
        else:
            raise RuntimeError("oracle Newton stalled on the augmented system")
    else:
        raise RuntimeError("oracle Newton did not converge on the augmented system")
    return x, u, float(lam)
