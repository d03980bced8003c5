"""Shared parameters and the classical discrete NLS lattice.

Lengths are in units of the coupling length, so the classical field obeys

    d alpha_k / dz = i (alpha_{k-1} + alpha_{k+1}) + i |alpha_k|^2 alpha_k

on an open chain (missing neighbours count as zero).
"""
from __future__ import annotations

import math
from dataclasses import dataclass, replace
from typing import Callable

import numpy as np

from .errors import ConfigError, NumericalBlowup

DEFAULT_N_SITES = 23
DEFAULT_STEP = 1e-3


@dataclass(frozen=True)
class SystemParams:
    """Normalized parameters of one waveguide-array run.

    Attributes
    ----------
    n_sites : int
        Number of waveguides.
    omega : float
        Propagation constant of the stationary soliton.
    quantum_scale : float
        Kerr strength relative to coupling, ``L = U v / kappa``. Zero selects
        the classical limit, where fluctuations are tracked divided by L.
    absorption : float
        Loss rate per unit normalized length.
    z_max, step : float
        Propagation length and fixed integrator step.
    """

    n_sites: int = DEFAULT_N_SITES
    omega: float = 10.0
    quantum_scale: float = 0.01
    absorption: float = 0.0
    z_max: float = 1.5
    step: float = DEFAULT_STEP

    def __post_init__(self):
        if int(self.n_sites) != self.n_sites or self.n_sites < 2:
            raise ConfigError(f"n_sites must be an integer >= 2, got {self.n_sites}")
        for name in ("omega", "quantum_scale", "absorption", "z_max", "step"):
            if not math.isfinite(getattr(self, name)):
                raise ConfigError(f"{name} must be finite")
        if self.quantum_scale < 0:
            raise ConfigError("quantum_scale must be >= 0")
        if self.absorption < 0:
            raise ConfigError("absorption must be >= 0")
        if self.z_max <= 0:
            raise ConfigError("z_max must be > 0")
        if not 0 < self.step <= self.z_max:
            raise ConfigError("step must satisfy 0 < step <= z_max")

    def with_(self, **changes) -> "SystemParams":
        return replace(self, **changes)

    @property
    def n_steps(self) -> int:
        return int(round(self.z_max / self.step))


def check_field(field) -> np.ndarray:
    """Return ``field`` as a finite 1-d complex array or raise ValueError."""
    a = np.asarray(field, dtype=complex)
    if a.ndim != 1 or a.size == 0:
        raise ValueError("field must be a non-empty 1-d array")
    if not np.all(np.isfinite(a)):
        raise ValueError("field has non-finite entries")
    return a


def hop(x: np.ndarray, axis: int = 0) -> np.ndarray:
    """Nearest-neighbour sum along ``axis`` with open ends."""
    if axis != 0:
        return np.moveaxis(hop(np.moveaxis(x, axis, 0)), 0, axis)
    if x.shape[0] < 2:
        return np.zeros_like(x)
    out = np.empty_like(x)
    out[0] = x[1]
    out[-1] = x[-2]
    out[1:-1] = x[:-2] + x[2:]
    return out


def hopping_matrix(n: int) -> np.ndarray:
    return np.eye(n, k=1) + np.eye(n, k=-1)


def dnls_rhs(field) -> np.ndarray:
    return _dnls_rhs(check_field(field))


def _dnls_rhs(a: np.ndarray) -> np.ndarray:
    # unchecked, for the integrator's inner loop
    return 1j * (hop(a) + (a.real * a.real + a.imag * a.imag) * a)


def classical_invariants(field) -> tuple[float, float]:
    """Power and Hamiltonian of the classical lattice.

    ``dnls_rhs`` is ``i dH/d(alpha*)`` for the Hamiltonian returned here,
    so both numbers are constants of motion.
    """
    a = check_field(field)
    norm = float(np.sum(np.abs(a) ** 2))
    coupling = 2.0 * np.real(np.sum(np.conj(a[:-1]) * a[1:]))
    ham = float(coupling + 0.5 * np.sum(np.abs(a) ** 4))
    return norm, ham


def rk4_step(rhs: Callable, y, h: float):
    """One classical Runge-Kutta step for ``y`` an array or tuple of arrays."""
    if isinstance(y, tuple):
        k1 = rhs(y)
        k2 = rhs(tuple(u + 0.5 * h * k for u, k in zip(y, k1)))
        k3 = rhs(tuple(u + 0.5 * h * k for u, k in zip(y, k2)))
        k4 = rhs(tuple(u + h * k for u, k in zip(y, k3)))
        return tuple(
            u + (h / 6.0) * (a + 2.0 * b + 2.0 * c + d)
            for u, a, b, c, d in zip(y, k1, k2, k3, k4)
        )
    k1 = rhs(y)
    k2 = rhs(y + 0.5 * h * k1)
    k3 = rhs(y + 0.5 * h * k2)
    k4 = rhs(y + h * k3)
    return y + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)


def integrate_classical(field, z_max: float, step: float, adaptive: bool = False,
                        rtol: float = 1e-11, atol: float = 1e-13) -> np.ndarray:
    """Propagate a classical field to ``z_max``; returns the final field."""
    a = check_field(field)
    if adaptive:
        from scipy.integrate import solve_ivp

        sol = solve_ivp(lambda z, y: _dnls_rhs(y), (0.0, z_max), a,
                        method="DOP853", rtol=rtol, atol=atol)
        if not sol.success:
            raise NumericalBlowup(sol.message)
        return sol.y[:, -1]
    n_steps = int(round(z_max / step))
    h = z_max / n_steps
    for _ in range(n_steps):
        a = rk4_step(_dnls_rhs, a, h)
    if not np.all(np.isfinite(a)):
        raise NumericalBlowup("classical field became non-finite")
    return a
