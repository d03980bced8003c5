"""Exact few-mode propagation in a truncated Fock basis.

Used only to check the closures. The state evolves as
``|psi(z)> = exp(-i H z) |psi(0)>`` with

    H = -sum_k (a_k^+ a_{k+1} + h.c.) - (L/2) sum_k a_k^+ a_k^+ a_k a_k,

which gives ``d a_k/dz = i[H, a_k] = i(a_{k-1} + a_{k+1}) + i L a_k^+ a_k a_k``,
the same Heisenberg equation the moment closure is built from. ``H``
conserves the total photon number, so the basis is truncated on that number
and each sector is evolved exactly by diagonalization.
"""
from __future__ import annotations

import itertools
import math
from dataclasses import dataclass

import numpy as np
from scipy import sparse

from .errors import TruncationOverflow

MAX_MODES = 3
MAX_CUTOFF = 30
SHELL_TOL = 1e-8
TAIL_TOL = 1e-10


def fock_basis(n_modes: int, cutoff: int) -> np.ndarray:
    """Occupation tuples with total photon number <= cutoff, sorted by total."""
    states = [s for s in itertools.product(range(cutoff + 1), repeat=n_modes)
              if sum(s) <= cutoff]
    states.sort(key=lambda s: (sum(s), s))
    return np.array(states, dtype=int)


@dataclass(frozen=True)
class FockState:
    n_modes: int
    cutoff: int
    amplitudes: np.ndarray
    quantum_scale: float
    basis: np.ndarray

    def norm(self) -> float:
        return float(np.linalg.norm(self.amplitudes))

    def shell_population(self) -> float:
        tot = self.basis.sum(axis=1)
        return float(np.sum(np.abs(self.amplitudes[tot == self.cutoff]) ** 2))

    def photon_number(self) -> float:
        return float(np.sum(np.abs(self.amplitudes) ** 2 * self.basis.sum(axis=1)))


def _lowering(basis: np.ndarray, mode: int) -> sparse.csr_matrix:
    """Sparse ``a_mode`` restricted to the basis (exact, since it only lowers)."""
    index = {tuple(s): i for i, s in enumerate(basis)}
    rows, cols, vals = [], [], []
    for j, s in enumerate(basis):
        n = s[mode]
        if n:
            t = list(s)
            t[mode] -= 1
            rows.append(index[tuple(t)])
            cols.append(j)
            vals.append(math.sqrt(n))
    dim = len(basis)
    return sparse.csr_matrix((vals, (rows, cols)), shape=(dim, dim))


def _check_size(n_modes, cutoff):
    if not 1 <= n_modes <= MAX_MODES:
        raise ValueError(f"oracle supports 1..{MAX_MODES} modes")
    if not 1 <= cutoff <= MAX_CUTOFF:
        raise ValueError(f"cutoff must be in 1..{MAX_CUTOFF}")


def coherent_state(amplitudes, cutoff: int, quantum_scale: float = 0.0) -> FockState:
    """Product coherent state with the given mean fields (unscaled units)."""
    amps = np.asarray(amplitudes, dtype=complex)
    _check_size(len(amps), cutoff)
    basis = fock_basis(len(amps), cutoff)
    log_fact = np.array([math.lgamma(n + 1) for n in range(cutoff + 1)])
    c = np.ones(len(basis), dtype=complex)
    for m, a in enumerate(amps):
        n = basis[:, m]
        if a == 0:
            c *= (n == 0)
        else:
            c *= np.exp(-0.5 * abs(a) ** 2 + n * np.log(a) - 0.5 * log_fact[n])
    tail = 1.0 - float(np.sum(np.abs(c) ** 2))
    if tail > TAIL_TOL:
        raise TruncationOverflow(f"coherent tail mass {tail:.2e} beyond cutoff {cutoff}")
    c /= np.linalg.norm(c)
    st = FockState(len(amps), cutoff, c, float(quantum_scale), basis)
    if st.shell_population() > SHELL_TOL:
        raise TruncationOverflow("cutoff shell is populated; raise the cutoff")
    return st


def hamiltonian(basis: np.ndarray, quantum_scale: float) -> sparse.csr_matrix:
    n_modes = basis.shape[1]
    ops = [_lowering(basis, m) for m in range(n_modes)]
    occ = basis.astype(float)
    h = sparse.diags(-0.5 * quantum_scale * np.sum(occ * (occ - 1.0), axis=1))
    for m in range(n_modes - 1):
        hop_ = ops[m].T @ ops[m + 1]
        h = h - hop_ - hop_.T
    return sparse.csr_matrix(h)


def exact_propagate(initial, quantum_scale: float, z: float, cutoff: int = 30,
                    absorption: float = 0.0) -> FockState:
    """Evolve a coherent input (amplitudes in unscaled units) to distance ``z``."""
    if absorption != 0.0:
        raise ValueError("the Fock oracle is unitary; absorption must be 0")
    st = initial if isinstance(initial, FockState) else coherent_state(initial, cutoff,
                                                                        quantum_scale)
    h = hamiltonian(st.basis, quantum_scale)
    tot = st.basis.sum(axis=1)
    out = np.zeros_like(st.amplitudes)
    for n in np.unique(tot):
        sel = tot == n
        idx = np.flatnonzero(sel)
        w, v = np.linalg.eigh(h[idx][:, idx].toarray())
        out[sel] = v @ (np.exp(-1j * w * z) * (v.conj().T @ st.amplitudes[sel]))
    res = FockState(st.n_modes, st.cutoff, out, float(quantum_scale), st.basis)
    if abs(res.norm() - 1.0) > 1e-10:
        raise TruncationOverflow("norm not conserved")
    if res.shell_population() > SHELL_TOL:
        raise TruncationOverflow("cutoff shell is populated; raise the cutoff")
    return res


@dataclass(frozen=True)
class FockMoments:
    """Exact moments in the scaled units of the closure.

    ``mean`` is the unscaled ``<a_k>``; the rest are multiplied by powers of
    ``sqrt(L)`` to match ``alpha``, ``delta_n``, ``delta_a`` and the third
    cumulant tensors.
    """

    mean: np.ndarray
    alpha: np.ndarray
    delta_n: np.ndarray
    delta_a: np.ndarray
    kappa_aaa: np.ndarray
    kappa_naa: np.ndarray


def exact_moments(state: FockState) -> FockMoments:
    ops = [_lowering(state.basis, m) for m in range(state.n_modes)]
    psi = state.amplitudes
    n = state.n_modes
    a1 = np.array([op @ psi for op in ops])                 # a_k |psi>
    a2 = np.array([[ops[k] @ a1[l] for l in range(n)] for k in range(n)])  # a_k a_l |psi>
    mean = a1 @ psi.conj()
    ann = np.einsum("i,kli->kl", psi.conj(), a2)            # <a_k a_l>
    nrm = np.einsum("ki,li->kl", a1.conj(), a1)             # <a_k^+ a_l>
    aaa = np.array([[[psi.conj() @ (ops[k] @ a2[l, m]) for m in range(n)]
                     for l in range(n)] for k in range(n)])
    naa = np.einsum("ki,lmi->klm", a1.conj(), a2)           # <a_k^+ a_l a_m>

    mc = mean.conj()
    d_a = ann - np.outer(mean, mean)
    d_n = nrm - np.outer(mc, mean)
    k_aaa = (aaa
             - mean[:, None, None] * ann[None, :, :]
             - mean[None, :, None] * ann[:, None, :]
             - mean[None, None, :] * ann[:, :, None]
             + 2.0 * mean[:, None, None] * mean[None, :, None] * mean[None, None, :])
    k_naa = (naa
             - mc[:, None, None] * ann[None, :, :]
             - mean[None, :, None] * nrm[:, None, :]
             - mean[None, None, :] * nrm[:, :, None]
             + 2.0 * mc[:, None, None] * mean[None, :, None] * mean[None, None, :])
    L = state.quantum_scale
    s = math.sqrt(L)
    return FockMoments(mean, s * mean, L * d_n, L * d_a, L * s * k_aaa, L * s * k_naa)
