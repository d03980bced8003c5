"""Gaussian moment closure for the quantum lattice.

The state is the scaled mean field ``alpha_k = sqrt(L) <psi_k>`` plus the
connected second moments

    delta_n[k, l] = L <psi_k^+ psi_l> - conj(alpha_k) alpha_l
    delta_a[k, l] = L <psi_k psi_l>   - alpha_k alpha_l

With ``L = 0`` the fluctuations are carried divided by L (the ``rescaled``
flag), which is the finite linearized limit of the same equations.
"""
from __future__ import annotations

import logging
from dataclasses import dataclass, field, replace
from typing import Callable, Sequence

import numpy as np

from .core import SystemParams, hop, rk4_step
from .errors import NumericalBlowup

log = logging.getLogger(__name__)

BLOWUP_LIMIT = 1e12
SYMMETRY_TOL = 1e-10


@dataclass(frozen=True)
class MomentState:
    z: float
    alpha: np.ndarray
    delta_n: np.ndarray
    delta_a: np.ndarray
    quantum_scale: float = 0.0
    rescaled: bool = False

    @property
    def n_sites(self) -> int:
        return len(self.alpha)

    def fluctuations(self) -> tuple[np.ndarray, np.ndarray]:
        """Connected moments of the unscaled field operators (Delta / L)."""
        if self.rescaled:
            return self.delta_n, self.delta_a
        L = self.quantum_scale
        return self.delta_n / L, self.delta_a / L

    def site_power(self) -> np.ndarray:
        """Per-site ``|alpha_k|^2 + delta_n[k, k]`` in the scaled units."""
        dn = self.delta_n if not self.rescaled else self.quantum_scale * self.delta_n
        return np.abs(self.alpha) ** 2 + np.real(np.diag(dn))

    def total_power(self) -> float:
        return float(np.sum(self.site_power()))

    def symmetry_defect(self) -> float:
        dn, da = self.delta_n, self.delta_a
        return float(max(np.max(np.abs(dn - dn.conj().T)), np.max(np.abs(da - da.T))))

    def symmetrized(self) -> "MomentState":
        dn = 0.5 * (self.delta_n + self.delta_n.conj().T)
        da = 0.5 * (self.delta_a + self.delta_a.T)
        return replace(self, delta_n=dn, delta_a=da)

    def to_dict(self) -> dict:
        def cplx(a):
            a = np.asarray(a)
            return {"re": a.real.tolist(), "im": a.imag.tolist()}

        return {
            "z": float(self.z),
            "quantum_scale": float(self.quantum_scale),
            "rescaled": bool(self.rescaled),
            "alpha": cplx(self.alpha),
            "delta_n": cplx(self.delta_n),
            "delta_a": cplx(self.delta_a),
        }

    @classmethod
    def from_dict(cls, d: dict) -> "MomentState":
        def cplx(x):
            return np.asarray(x["re"], dtype=float) + 1j * np.asarray(x["im"], dtype=float)

        return cls(float(d["z"]), cplx(d["alpha"]), cplx(d["delta_n"]), cplx(d["delta_a"]),
                   float(d["quantum_scale"]), bool(d["rescaled"]))


def initial_state(profile, params: SystemParams | None = None) -> MomentState:
    """Coherent input carrying the soliton profile: all fluctuations vanish."""
    beta = np.asarray(getattr(profile, "beta", profile), dtype=complex)
    n = len(beta)
    L = params.quantum_scale if params is not None else 0.0
    zero = np.zeros((n, n), dtype=complex)
    return MomentState(0.0, beta.copy(), zero, zero.copy(), L, rescaled=(L == 0.0))


def _rhs_arrays(alpha, dn, da, feedback: float, source: float, gamma: float):
    """Right-hand side of the closed second-order system.

    ``feedback`` multiplies every fluctuation that acts back on the dynamics
    (1 for plain moments, 0 in the rescaled limit) and ``source`` is the
    coefficient of the diagonal quantum noise term (L, or 1 when rescaled).
    """
    a2 = alpha * alpha
    abs2 = np.abs(alpha) ** 2
    dnd = np.real(np.diag(dn)) * feedback
    dad = np.diag(da) * feedback

    d_alpha = 1j * hop(alpha) + 1j * abs2 * alpha + 1j * (2.0 * alpha * dnd + alpha.conj() * dad)

    occ = abs2 + dnd
    d_dn = (
        1j * (hop(dn, 1) - hop(dn, 0))
        + 2j * (occ[None, :] - occ[:, None]) * dn
        + 1j * (
            feedback * (da.conj() * da.diagonal()[None, :] - da * da.diagonal().conj()[:, None])
            + a2[None, :] * da.conj() - a2.conj()[:, None] * da
        )
    )

    pump = a2 + dad
    d_da = (
        1j * (hop(da, 1) + hop(da, 0))
        + 2j * (occ[:, None] + occ[None, :]) * da
        + 1j * pump[:, None] * dn
        + 1j * pump[None, :] * dn.conj()
    )
    d_da[np.diag_indices_from(d_da)] += 1j * source * pump

    if gamma:
        d_alpha -= 0.5 * gamma * alpha
        d_dn -= gamma * dn
        d_da -= gamma * da
    return d_alpha, d_dn, d_da


def _coefficients(state: MomentState, params: SystemParams) -> tuple[float, float]:
    if state.rescaled:
        return 0.0, 1.0
    return 1.0, params.quantum_scale


def moment_rhs(state: MomentState, params: SystemParams) -> MomentState:
    """z-derivative of ``state``, returned as a MomentState of rates."""
    fb, src = _coefficients(state, params)
    da_, dn_, dd_ = _rhs_arrays(state.alpha, state.delta_n, state.delta_a, fb, src,
                                params.absorption)
    return MomentState(state.z, da_, dn_, dd_, state.quantum_scale, state.rescaled)


@dataclass
class Trajectory:
    """Snapshots of one propagation run.

    ``records`` maps observer names to one value per snapshot; ``closures``
    holds the validity closure (a ``validity.ClosureState``) per snapshot
    and is filled only when it was integrated alongside.
    """

    params: SystemParams
    states: list[MomentState] = field(default_factory=list)
    closures: list = field(default_factory=list)
    records: dict = field(default_factory=dict)

    @property
    def z(self) -> np.ndarray:
        return np.array([s.z for s in self.states])

    @property
    def cumulants(self) -> list:
        return [c.cumulants for c in self.closures]

    def record(self, name: str) -> np.ndarray:
        return np.asarray(self.records[name])

    def err(self) -> np.ndarray:
        return np.array([c.err() for c in self.closures])


Observer = Callable[[MomentState, object], object]


def _max_abs(arrays) -> float:
    """Largest modulus over ``arrays``; inf if any entry is nan."""
    m = 0.0
    for a in arrays:
        if a.size:
            v = float(np.max(np.abs(a)))
            if np.isnan(v):
                return np.inf
            m = max(m, v)
    return m


def _check_finite(arrays, z):
    m = _max_abs(arrays)
    if not np.isfinite(m) or m > BLOWUP_LIMIT:
        raise NumericalBlowup(f"moment system left the valid range at z={z:.6g}")


def propagate(state0: MomentState, params: SystemParams,
              observers: dict[str, Observer] | Sequence[tuple[str, Observer]] = (),
              output_stride: int = 1, third_order: bool = False,
              adaptive: bool = False) -> Trajectory:
    """Integrate the closed moment system from ``state0.z`` up to ``params.z_max``.

    Fixed-step RK4 by default. Snapshots are taken every ``output_stride``
    steps and at the end; each is symmetrized (the size of the correction
    is logged) and passed to the observers as ``obs(state, closure)``.

    With ``third_order`` the validity closure (moments plus third cumulants,
    see ``validity``) is integrated jointly, starting from the same state
    with zero cumulants, and stored in ``Trajectory.closures``. It never acts
    on the Gaussian moments. If its cumulant hierarchy diverges it is marked
    broken and dropped; later snapshots report it broken (infinite Err).
    Third order is skipped in the rescaled ``L = 0`` limit, where the
    cumulants vanish identically.
    """
    from . import validity

    if output_stride < 1:
        raise ValueError("output_stride must be >= 1")
    observers = list(observers.items()) if isinstance(observers, dict) else list(observers)
    fb, src = _coefficients(state0, params)
    gamma = params.absorption
    L = params.quantum_scale
    n = state0.n_sites
    y = (state0.alpha, state0.delta_n, state0.delta_a)
    if third_order and state0.rescaled:
        log.info("third-order closure skipped in the rescaled limit")
        third_order = False
    if third_order:
        k0 = validity.zero_cumulants(n)
        y = y + y + (k0.kappa_aaa, k0.kappa_naa)

    def rhs(y):
        # overflow is caught by _check_finite and closure_ok, not by warnings
        with np.errstate(over="ignore", invalid="ignore"):
            out = _rhs_arrays(y[0], y[1], y[2], fb, src, gamma)
            if len(y) > 3:
                out = out + validity.closure_rhs(*y[3:], L, gamma)
        return out

    traj = Trajectory(params)
    for name, _ in observers:
        traj.records[name] = []
    last_broken = None

    def closure_ok(y):
        m = _max_abs(y[3:])
        return np.isfinite(m) and m <= validity.BREAKDOWN_LIMIT

    def snapshot(y, z):
        nonlocal last_broken
        _check_finite(y[:3], z)
        st = MomentState(z, y[0], y[1], y[2], state0.quantum_scale, state0.rescaled)
        defect = st.symmetry_defect()
        if defect > SYMMETRY_TOL:
            log.warning("symmetry defect %.3e at z=%.4g", defect, z)
        elif defect > 0:
            log.debug("symmetrization correction %.3e at z=%.4g", defect, z)
        st = st.symmetrized()
        out = (st.alpha, st.delta_n, st.delta_a)
        closure = None
        if third_order:
            if len(y) > 3 and closure_ok(y):
                m2 = MomentState(z, y[3], y[4], y[5], L).symmetrized()
                m3 = validity.ThirdCumulantState(y[6], y[7]).symmetrized()
                closure = validity.ClosureState(m2, m3)
                out = out + (m2.alpha, m2.delta_n, m2.delta_a, m3.kappa_aaa, m3.kappa_naa)
            else:
                if last_broken is None:
                    log.info("validity closure diverged before z=%.4g", z)
                    zero = validity.zero_cumulants(n)
                    last_broken = validity.ClosureState(st, zero, broken=True)
                closure = replace(last_broken, moments=st)
            traj.closures.append(closure)
        traj.states.append(st)
        for name, obs in observers:
            traj.records[name].append(obs(st, closure))
        return out

    z0 = state0.z
    span = params.z_max - z0
    if span <= 0:
        snapshot(y, z0)
        return traj
    n_steps = max(1, int(round(span / params.step)))
    h = span / n_steps

    if adaptive:
        _propagate_adaptive(y, rhs, z0, h, n_steps, output_stride, snapshot)
        return traj

    y = snapshot(y, z0)
    for i in range(1, n_steps + 1):
        y = rk4_step(rhs, y, h)
        if len(y) > 3 and not closure_ok(y):
            y = y[:3]
        if i % output_stride == 0 or i == n_steps:
            y = snapshot(y, z0 + i * h)
        elif i % 16 == 0:
            _check_finite(y[:3], z0 + i * h)
    return traj


def _propagate_adaptive(y, rhs, z0, h, n_steps, stride, snapshot):
    from scipy.integrate import solve_ivp

    shapes = [a.shape for a in y]
    sizes = [a.size for a in y]

    def pack(parts):
        return np.concatenate([np.ravel(p) for p in parts])

    def unpack(v):
        out, i = [], 0
        for shp, sz in zip(shapes, sizes):
            out.append(v[i:i + sz].reshape(shp))
            i += sz
        return tuple(out)

    idx = sorted(set(list(range(0, n_steps + 1, stride)) + [n_steps]))
    z_out = [z0 + i * h for i in idx]
    sol = solve_ivp(lambda z, v: pack(rhs(unpack(v))), (z_out[0], z_out[-1]), pack(y),
                    method="DOP853", t_eval=z_out, rtol=1e-10, atol=1e-12)
    if not sol.success:
        raise NumericalBlowup(sol.message)
    for j, z in enumerate(sol.t):
        snapshot(unpack(sol.y[:, j]), float(z))
