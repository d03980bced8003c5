"""Third-order cumulants and the Gaussian-closure error metric.

Normally ordered moments of the scaled operators ``a = sqrt(L) psi`` evolve
like the moments of the c-number process

    d beta_k = [i (beta_{k-1} + beta_{k+1}) + i beta_k^+ beta_k^2] dz + noise,
    <d beta_k d beta_l> = i L delta_kl beta_k^2 dz,
    <d beta_k^+ d beta_l^+> = -i L delta_kl (beta_k^+)^2 dz,

(and no cross noise), which reproduces the Heisenberg equations term by term.
Splitting ``beta = alpha + b`` and closing at third order (fourth and higher
cumulants zero) gives the cumulant equations in ``_kappa_rhs`` and the extra
cumulant terms in the mean and second-moment equations in
``moment_feedback``; ``docs/third_cumulants.md`` spells the derivation out.

The validity monitor integrates this closure next to the Gaussian one and
compares the cumulants it generates with the Gaussian third moments.

Tensors are stored in the scaled units, ``kappa = L**1.5 <<psi psi psi>>``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .core import SystemParams, hop
from .errors import DegenerateDenominator, IndexOutOfRange
from .moments import MomentState

DEFAULT_ERR_CAP = 0.1
SYMMETRY_TOL = 1e-10
# cumulant magnitude beyond which the validity closure counts as diverged
BREAKDOWN_LIMIT = 1e8

PATTERNS = ("aaa", "naa")


@dataclass(frozen=True)
class ThirdCumulantState:
    """Connected third moments of the fluctuation field.

    ``kappa_aaa[k, l, m] = <<a_k a_l a_m>>`` is fully symmetric and
    ``kappa_naa[k, l, m] = <<a_k^+ a_l a_m>>`` is symmetric in its last two
    indices.
    """

    kappa_aaa: np.ndarray
    kappa_naa: np.ndarray

    def symmetry_defect(self) -> float:
        ka, kn = self.kappa_aaa, self.kappa_naa
        perms = [(1, 0, 2), (0, 2, 1), (2, 1, 0), (1, 2, 0), (2, 0, 1)]
        d = max(np.max(np.abs(ka - ka.transpose(p))) for p in perms)
        return float(max(d, np.max(np.abs(kn - kn.transpose(0, 2, 1)))))

    def symmetrized(self) -> "ThirdCumulantState":
        ka = self.kappa_aaa
        ka = (ka + ka.transpose(1, 0, 2) + ka.transpose(0, 2, 1) + ka.transpose(2, 1, 0)
              + ka.transpose(1, 2, 0) + ka.transpose(2, 0, 1)) / 6.0
        kn = 0.5 * (self.kappa_naa + self.kappa_naa.transpose(0, 2, 1))
        return ThirdCumulantState(ka, kn)


@dataclass(frozen=True)
class ClosureState:
    """Snapshot of the third-order validity closure.

    ``moments`` are the closure's own mean and second moments (they differ
    from the Gaussian ones through the cumulant feedback). ``broken`` marks
    a closure whose cumulant hierarchy has diverged; its Err is infinite.
    """

    moments: MomentState
    cumulants: ThirdCumulantState
    broken: bool = False

    def err(self) -> float:
        if self.broken:
            return math.inf
        return err_metric(self.moments, self.cumulants)


def zero_cumulants(n: int) -> ThirdCumulantState:
    z = np.zeros((n, n, n), dtype=complex)
    return ThirdCumulantState(z, z.copy())


# Moment tables indexed by operator type: 0 is a, 1 is a^+.

def _m2(dn, da):
    return {(0, 0): da, (1, 0): dn, (0, 1): dn.T, (1, 1): da.conj()}


class _M3:
    def __init__(self, ka, kn):
        self.ka, self.kn = ka, kn
        self._cache = {}

    def __getitem__(self, c):
        if c not in self._cache:
            n = sum(c)
            if n == 0:
                t = self.ka
            elif n == 3:
                t = self.ka.conj()
            elif n == 1:
                t = np.moveaxis(self.kn, 0, c.index(1))
            else:
                t = self[tuple(1 - x for x in c)].conj()
            self._cache[c] = t
        return self._cache[c]

    def diag(self, c):
        """``T[s, s, q]`` for the table with types ``c``."""
        key = ("diag",) + c
        if key not in self._cache:
            t = self[c]
            idx = np.arange(t.shape[0])
            self._cache[key] = t[idx, idx, :]
        return self._cache[key]


def _drift_corr(c0, cx, cy, alpha, m2, m3):
    """``E[g_s X_p Y_q]`` over (s, p, q) for the centred drift ``g`` of type c0.

    The drift of ``b_s`` is
    ``i(Tb)_s + i[2|a|^2 b + a^2 b^+ + a^*(bb)~ + 2a(b^+ b)~ + (b^+ b b)~]_s``
    where ``~`` subtracts the mean; the drift of ``b_s^+`` is its conjugate.
    """
    u, v = c0, 1 - c0
    sgn = 1j if c0 == 0 else -1j
    a = alpha if c0 == 0 else alpha.conj()
    ac = a.conj()
    abs2 = np.abs(alpha) ** 2

    def col(x):
        return x[:, None, None]

    def pair(t0, t1):
        return (m2[(t0, cx)][:, :, None] * m2[(t1, cy)][:, None, :]
                + m2[(t0, cy)][:, None, :] * m2[(t1, cx)][:, :, None])

    def cross(t0, t1, t2):
        # one pair factor times a third-cumulant diagonal
        return (m2[(t0, cx)][:, :, None] * m3.diag((t1, t2, cy))[:, None, :]
                + m2[(t0, cy)][:, None, :] * m3.diag((t1, t2, cx))[:, :, None])

    # the cubic fluctuation (b^+ b b)~ contracts to one cumulant times one
    # pair; its on-site pairs shift the linear coefficients like occupations
    occ = 2.0 * (abs2 + np.diagonal(m2[(v, u)]))
    pump = a * a + np.diagonal(m2[(u, u)])
    out = sgn * hop(m3[(c0, cx, cy)], 0)
    out = out + sgn * (
        col(occ) * m3[(u, cx, cy)]
        + col(pump) * m3[(v, cx, cy)]
        + col(ac) * pair(u, u)
        + col(2.0 * a) * pair(v, u)
        + cross(v, u, u)
        + 2.0 * cross(u, v, u)
    )
    return out


def _kappa_rhs(alpha, dn, da, ka, kn, L, gamma=0.0):
    m2 = _m2(dn, da)
    m3 = _M3(ka, kn)
    idx = np.arange(len(alpha))

    f000 = _drift_corr(0, 0, 0, alpha, m2, m3)
    d_ka = f000 + np.moveaxis(f000, 0, 1) + np.moveaxis(f000, 0, 2)
    # Ito terms: <d a_s d a_s> = i L (alpha_s + b_s)^2
    w = 1j * L * (2.0 * alpha[:, None] * da + m3.diag((0, 0, 0)))
    d_ka[idx, idx, :] += w
    d_ka[idx, :, idx] += w
    d_ka[:, idx, idx] += w.T

    f100 = _drift_corr(1, 0, 0, alpha, m2, m3)
    f010 = _drift_corr(0, 1, 0, alpha, m2, m3)
    d_kn = f100 + np.moveaxis(f010, 0, 1) + np.moveaxis(f010, 0, 2)
    w = 1j * L * (2.0 * alpha[:, None] * m2[(0, 1)] + m3.diag((0, 0, 1)))
    d_kn[:, idx, idx] += w.T

    if gamma:
        d_ka -= 1.5 * gamma * ka
        d_kn -= 1.5 * gamma * kn
    return d_ka, d_kn


def moment_feedback(alpha, ka, kn):
    """Third-cumulant contributions to the mean and second-moment equations."""
    idx = np.arange(len(alpha))
    ac = alpha.conj()
    knd = kn[idx, idx, :]          # [k, l] = <<a_k^+ a_k a_l>>
    knl = kn[:, idx, idx]          # [k, l] = <<a_k^+ a_l a_l>>
    d_alpha = 1j * kn[idx, idx, idx]
    t = ac[:, None] * ka[idx, idx, :] + 2.0 * alpha[:, None] * knd
    d_da = 1j * (t + t.T)
    d_dn = (-1j * (alpha[:, None] * knl.T.conj() + 2.0 * ac[:, None] * knd)
            + 1j * (ac[None, :] * knl + 2.0 * alpha[None, :] * knd.T.conj()))
    return d_alpha, d_dn, d_da


def closure_rhs(alpha, dn, da, ka, kn, L, gamma=0.0):
    """Third-order closure: moments with cumulant feedback plus the cumulant equations."""
    from .moments import _rhs_arrays

    d1, d2, d3 = _rhs_arrays(alpha, dn, da, 1.0, L, gamma)
    f1, f2, f3 = moment_feedback(alpha, ka, kn)
    d4, d5 = _kappa_rhs(alpha, dn, da, ka, kn, L, gamma)
    return d1 + f1, d2 + f2, d3 + f3, d4, d5


def third_cumulant_rhs(m2: MomentState, m3: ThirdCumulantState,
                       params: SystemParams) -> ThirdCumulantState:
    if m2.rescaled:
        raise ValueError("third cumulants are not tracked in the rescaled L = 0 limit")
    d_ka, d_kn = _kappa_rhs(m2.alpha, m2.delta_n, m2.delta_a, m3.kappa_aaa, m3.kappa_naa,
                            params.quantum_scale, params.absorption)
    return ThirdCumulantState(d_ka, d_kn)


def _check_index(n, *idx):
    for i in idx:
        if not 0 <= i < n:
            raise IndexOutOfRange(f"site index {i} outside 0..{n - 1}")


def gaussian_third_moment(state: MomentState, pattern: str, k: int, l: int, m: int) -> complex:
    """Full third moment of the unscaled field with vanishing third cumulant.

    ``pattern`` is ``"aaa"`` for ``<psi_k psi_l psi_m>`` or ``"naa"`` for
    ``<psi_k^+ psi_l psi_m>``.
    """
    if pattern not in PATTERNS:
        raise ValueError(f"pattern must be one of {PATTERNS}")
    n = state.n_sites
    _check_index(n, k, l, m)
    L = state.quantum_scale
    if state.rescaled or L == 0:
        raise ValueError("moments of the unscaled field need L > 0")
    al = state.alpha
    conj_first = pattern == "naa"
    ops = [(1 if conj_first else 0, k), (0, l), (0, m)]

    def first(op):
        c, s = op
        return np.conj(al[s]) if c else al[s]

    def second(p, q):
        (c1, s1), (c2, s2) = p, q
        if c1 and c2:
            return np.conj(state.delta_a[s1, s2] + al[s1] * al[s2])
        if c1:
            return state.delta_n[s1, s2] + np.conj(al[s1]) * al[s2]
        if c2:
            return state.delta_n[s2, s1] + np.conj(al[s2]) * al[s1]
        return state.delta_a[s1, s2] + al[s1] * al[s2]

    x, y, w = ops
    val = (first(x) * second(y, w) + first(y) * second(x, w) + first(w) * second(x, y)
           - 2.0 * first(x) * first(y) * first(w))
    return complex(val / L ** 1.5)


def gaussian_moment_slices(state: MomentState) -> tuple[np.ndarray, np.ndarray]:
    """Scaled Gaussian moments ``<a_k^+ a_k a_l>`` and ``<a_k a_k a_l>`` over (k, l)."""
    al, dn, da = state.alpha, state.delta_n, state.delta_a
    dnd = np.real(np.diag(dn))
    dad = np.diag(da)
    ac = al.conj()
    naa = (np.abs(al) ** 2)[:, None] * al[None, :] + ac[:, None] * da + al[:, None] * dn \
        + dnd[:, None] * al[None, :]
    aaa = (al ** 2)[:, None] * al[None, :] + dad[:, None] * al[None, :] + 2.0 * al[:, None] * da
    return naa, aaa


def err_metric(m2: MomentState, m3: ThirdCumulantState) -> float:
    """Largest (k, k, l) third cumulant over the largest Gaussian third moment."""
    idx = np.arange(m2.n_sites)
    num = max(np.max(np.abs(m3.kappa_naa[idx, idx, :])),
              np.max(np.abs(m3.kappa_aaa[idx, idx, :])))
    naa, aaa = gaussian_moment_slices(m2)
    den = max(np.max(np.abs(naa)), np.max(np.abs(aaa)))
    if den < 1e-300:
        raise DegenerateDenominator("third moments vanish; Err is undefined for a zero field")
    return float(num / den)


def first_crossing(z, values, cap: float = DEFAULT_ERR_CAP):
    """First z at which ``values`` exceeds ``cap`` (linear interpolation), else None."""
    z = np.asarray(z, dtype=float)
    v = np.asarray(values, dtype=float)
    above = np.flatnonzero(v > cap)
    if above.size == 0:
        return None
    i = int(above[0])
    if i == 0:
        return float(z[0])
    z0, z1, v0, v1 = z[i - 1], z[i], v[i - 1], v[i]
    if not math.isfinite(v1):
        return float(z1)
    return float(z0 + (cap - v0) * (z1 - z0) / (v1 - v0))
