"""Two-mode covariance matrices and logarithmic negativity.

Quadratures are ``q = (psi^+ + psi)/sqrt(2)`` and ``p = i(psi^+ - psi)/sqrt(2)``,
ordered ``(q_k, p_k, q_l, p_l)``; the vacuum covariance is ``I/2``.
"""
from __future__ import annotations

import logging
from dataclasses import dataclass

import numpy as np

from .errors import InvalidPair, NonFinite, UnphysicalCovariance, ZeroScale
from .moments import MomentState

log = logging.getLogger(__name__)

PHYSICAL_TOL = 1e-8
OMEGA2 = np.array([[0.0, 1.0], [-1.0, 0.0]])
OMEGA4 = np.kron(np.eye(2), OMEGA2)
TRANSPOSE_L = np.diag([1.0, 1.0, 1.0, -1.0])


@dataclass(frozen=True)
class CovarianceMatrix:
    entries: np.ndarray
    pair: tuple[int, int]

    def is_physical(self, tol: float = PHYSICAL_TOL) -> bool:
        return symplectic_eigenvalues(self.entries)[0] >= 0.5 - tol


def _check_pair(state: MomentState, k: int, l: int):
    n = state.n_sites
    if k == l or not (0 <= k < n and 0 <= l < n):
        raise InvalidPair(f"need two distinct sites in 0..{n - 1}, got ({k}, {l})")
    if not state.rescaled and state.quantum_scale <= 0:
        raise ZeroScale("fluctuations at L = 0 are only defined in the rescaled limit")


def covariance(state: MomentState, k: int, l: int, check: bool = True) -> CovarianceMatrix:
    """Quadrature covariance of waveguides ``k`` and ``l``.

    With ``check`` an UnphysicalCovariance is raised when the uncertainty
    relation is violated by more than PHYSICAL_TOL.
    """
    _check_pair(state, k, l)
    fn, fa = state.fluctuations()
    sites = (k, l)
    sigma = np.empty((4, 4))
    for i, a in enumerate(sites):
        for j, b in enumerate(sites):
            vac = 0.5 if a == b else 0.0
            s_pos, s_neg = fa[a, b] + fn[a, b], fn[a, b] - fa[a, b]
            sigma[2 * i, 2 * j] = s_pos.real + vac
            sigma[2 * i + 1, 2 * j + 1] = s_neg.real + vac
            sigma[2 * i, 2 * j + 1] = s_pos.imag
    for i in range(2):
        for j in range(2):
            sigma[2 * j + 1, 2 * i] = sigma[2 * i, 2 * j + 1]
    cov = CovarianceMatrix(sigma, (k, l))
    if check and not cov.is_physical():
        raise UnphysicalCovariance(
            f"pair {sites} at z={state.z:.4g}: smallest symplectic eigenvalue "
            f"{symplectic_eigenvalues(sigma)[0]:.6g} < 1/2")
    return cov


def symplectic_eigenvalues(sigma) -> tuple[float, float]:
    """Ascending moduli of the eigenvalue pairs of ``i Omega sigma``."""
    s = np.asarray(getattr(sigma, "entries", sigma), dtype=float)
    if s.shape != (4, 4):
        raise ValueError("expected a 4x4 covariance matrix")
    if not np.all(np.isfinite(s)):
        raise NonFinite("covariance matrix has non-finite entries")
    ev = np.sort(np.abs(np.linalg.eigvals(1j * OMEGA4 @ s)))
    # eigenvalues come in +-nu pairs; average each pair
    return float(0.5 * (ev[0] + ev[1])), float(0.5 * (ev[2] + ev[3]))


def symplectic_eigenvalues_closed_form(sigma) -> tuple[float, float]:
    """Two-mode invariant formula, kept as an independent cross-check."""
    s = np.asarray(getattr(sigma, "entries", sigma), dtype=float)
    a, b, c = s[:2, :2], s[2:, 2:], s[:2, 2:]
    delta = np.linalg.det(a) + np.linalg.det(b) + 2.0 * np.linalg.det(c)
    disc = max(delta ** 2 - 4.0 * np.linalg.det(s), 0.0)
    nu_minus = np.sqrt(max((delta - np.sqrt(disc)) / 2.0, 0.0))
    nu_plus = np.sqrt((delta + np.sqrt(disc)) / 2.0)
    return float(nu_minus), float(nu_plus)


def partial_transpose(sigma) -> np.ndarray:
    s = np.asarray(getattr(sigma, "entries", sigma), dtype=float)
    return TRANSPOSE_L @ s @ TRANSPOSE_L


def negativity_from_covariance(sigma) -> float:
    """Logarithmic negativity ``-1/2 sum_r log2 min(1, 2|l_r|)`` of a two-mode state.

    ``l_r`` runs over the four eigenvalues of ``i Omega sigma~``, where
    ``sigma~`` is the partial transpose, so each symplectic eigenvalue
    counts twice.
    """
    s_pt = partial_transpose(sigma)
    if not np.all(np.isfinite(s_pt)):
        raise NonFinite("covariance matrix has non-finite entries")
    lr = np.abs(np.linalg.eigvals(1j * OMEGA4 @ s_pt))
    terms = np.log2(np.minimum(1.0, 2.0 * lr))
    return float(max(0.0, -0.5 * np.sum(terms)))


def log_negativity(state: MomentState, k: int, l: int, check: bool = True) -> float:
    return negativity_from_covariance(covariance(state, k, l, check=check))


def negativity_map(state: MomentState, check: bool = False) -> np.ndarray:
    n = state.n_sites
    out = np.zeros((n, n))
    for k in range(n):
        for l in range(k + 1, n):
            out[k, l] = out[l, k] = log_negativity(state, k, l, check=check)
    return out


def two_mode_squeezed_covariance(r: float) -> np.ndarray:
    c, s = np.cosh(2 * r), np.sinh(2 * r)
    z = np.diag([1.0, -1.0])
    return 0.5 * np.block([[c * np.eye(2), s * z], [s * z, c * np.eye(2)]])
