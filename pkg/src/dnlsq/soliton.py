"""Real stationary profiles of the classical lattice and their stability.

A profile ``beta`` gives the stationary solution ``alpha_k = beta_k exp(i omega z)``
when

    F_k(beta) = -omega beta_k + beta_{k-1} + beta_{k+1} + beta_k^3 = 0.

Roots are found by Newton iteration seeded from the anticontinuum limit,
where every excited site sits at ``+-sqrt(omega)`` and the rest are dark.
"""
from __future__ import annotations

import json
import math
import re
from dataclasses import dataclass, field

import numpy as np

from .core import SystemParams, hop
from .errors import (
    ContinuationError,
    EdgeLeak,
    NoConvergence,
    SolverError,
    UnsupportedOmega,
    WrongBranch,
)

RESIDUAL_TOL = 1e-12
MAX_NEWTON_ITER = 50
EDGE_TOL = 1e-8
STABILITY_TOL = 1e-8
ZERO_MODE_CUTOFF = 1e-5


@dataclass(frozen=True)
class SolitonKind:
    """Number of sign changes between adjacent excited sites.

    0 is the fundamental (single-site) soliton, 1 the twisted pair and
    ``m >= 2`` a block of ``m + 1`` sites with alternating signs.
    """

    sign_changes: int = 0

    def __post_init__(self):
        if self.sign_changes < 0:
            raise ValueError("sign_changes must be >= 0")

    @property
    def n_excited(self) -> int:
        return self.sign_changes + 1

    @property
    def name(self) -> str:
        if self.sign_changes == 0:
            return "fundamental"
        if self.sign_changes == 1:
            return "twisted"
        return f"multi_twisted({self.sign_changes})"

    def __str__(self):
        return self.name

    @classmethod
    def parse(cls, text) -> "SolitonKind":
        if isinstance(text, SolitonKind):
            return text
        t = str(text).strip().lower().replace("-", "_")
        if t == "fundamental":
            return FUNDAMENTAL
        if t == "twisted":
            return TWISTED
        m = re.fullmatch(r"multi_?twisted\s*[\(:]?\s*(\d+)\s*\)?", t)
        if m and int(m.group(1)) >= 2:
            return cls(int(m.group(1)))
        raise ValueError(f"unknown soliton kind {text!r}")


FUNDAMENTAL = SolitonKind(0)
TWISTED = SolitonKind(1)


def MultiTwisted(m: int) -> SolitonKind:
    if m < 2:
        raise ValueError("multi-twisted solitons need at least 2 sign changes")
    return SolitonKind(m)


@dataclass(frozen=True)
class SolitonProfile:
    beta: np.ndarray
    omega: float
    kind: SolitonKind
    residual: float

    @property
    def n_sites(self) -> int:
        return len(self.beta)

    def excited_sites(self) -> list[int]:
        """Indices of the seed block (0-based), ordered left to right."""
        return list(excited_block(self.n_sites, self.kind))

    def central_pair(self) -> tuple[int, int]:
        """The two adjacent excited sites closest to the array centre.

        For a fundamental soliton this is the peak and its right neighbour.
        """
        sites = self.excited_sites()
        if len(sites) == 1:
            c = sites[0]
            return (c, c + 1) if c + 1 < self.n_sites else (c - 1, c)
        i = (len(sites) - 1) // 2
        return sites[i], sites[i + 1]

    def to_dict(self, stability: "StabilityReport | None" = None) -> dict:
        d = {
            "omega": float(self.omega),
            "kind": self.kind.name,
            "beta": [float(b) for b in self.beta],
            "residual": float(self.residual),
        }
        if stability is not None:
            d["stable"] = bool(stability.stable)
            d["max_growth_rate"] = float(stability.max_growth_rate)
        return d

    def to_json(self, stability=None) -> str:
        return json.dumps(self.to_dict(stability), indent=2)

    def to_csv_rows(self) -> list[tuple[int, float]]:
        return [(k + 1, float(b)) for k, b in enumerate(self.beta)]


@dataclass(frozen=True)
class StabilityReport:
    eigenvalues: np.ndarray
    max_growth_rate: float
    stable: bool
    zero_modes: int = field(default=0)


def excited_block(n_sites: int, kind: SolitonKind) -> range:
    size = kind.n_excited
    if size > n_sites:
        raise ValueError(f"{kind} needs at least {size} sites")
    start = n_sites // 2 - size // 2
    return range(start, start + size)


def residual(beta, omega: float) -> np.ndarray:
    beta = np.asarray(beta, dtype=float)
    return -omega * beta + hop(beta) + beta ** 3


def jacobian(beta, omega: float) -> np.ndarray:
    beta = np.asarray(beta, dtype=float)
    n = len(beta)
    return np.diag(3.0 * beta ** 2 - omega) + np.eye(n, k=1) + np.eye(n, k=-1)


def _check_omega(omega: float):
    if not omega > 2.0:
        raise UnsupportedOmega(f"stationary solitons exist only for omega > 2, got {omega}")


def seed_profile(kind, params: SystemParams) -> SolitonProfile:
    """Anticontinuum seed: excited sites at alternating +-sqrt(omega)."""
    kind = SolitonKind.parse(kind)
    _check_omega(params.omega)
    beta = np.zeros(params.n_sites)
    amp = math.sqrt(params.omega)
    for j, k in enumerate(excited_block(params.n_sites, kind)):
        beta[k] = amp if j % 2 == 0 else -amp
    res = float(np.max(np.abs(residual(beta, params.omega))))
    return SolitonProfile(beta, float(params.omega), kind, res)


def _sign_changes(beta: np.ndarray) -> int:
    scale = np.max(np.abs(beta))
    s = np.sign(beta[np.abs(beta) > 1e-12 * scale])
    return int(np.count_nonzero(s[1:] != s[:-1]))


def check_kind(beta: np.ndarray, kind: SolitonKind) -> None:
    """Raise WrongBranch unless ``beta`` has the sign structure of ``kind``."""
    amax = np.max(np.abs(beta))
    if not amax > 1e-6:
        raise WrongBranch("profile collapsed to the trivial zero state")
    changes = _sign_changes(beta)
    if changes != kind.sign_changes:
        raise WrongBranch(f"expected {kind.sign_changes} sign changes, found {changes}")
    if kind.sign_changes == 0:
        b = beta * np.sign(beta[np.argmax(np.abs(beta))])
        peaks = np.count_nonzero((b[1:-1] > b[:-2]) & (b[1:-1] > b[2:]))
        peaks += int(b[0] > b[1]) + int(b[-1] > b[-2])
        if peaks != 1:
            raise WrongBranch(f"fundamental profile has {peaks} maxima")


def solve_soliton(seed: SolitonProfile, params: SystemParams,
                  tol: float = RESIDUAL_TOL, max_iter: int = MAX_NEWTON_ITER) -> SolitonProfile:
    """Newton iteration from ``seed`` at frequency ``params.omega``."""
    omega = float(params.omega)
    _check_omega(omega)
    beta = np.array(seed.beta, dtype=float)
    if not np.all(np.isfinite(beta)):
        raise NoConvergence("seed has non-finite entries")
    res = np.max(np.abs(residual(beta, omega)))
    for _ in range(max_iter):
        if res <= tol:
            break
        try:
            delta = np.linalg.solve(jacobian(beta, omega), residual(beta, omega))
        except np.linalg.LinAlgError as exc:
            raise NoConvergence(f"singular Jacobian: {exc}") from exc
        beta = beta - delta
        if not np.all(np.isfinite(beta)):
            raise NoConvergence("Newton iterate diverged")
        res = np.max(np.abs(residual(beta, omega)))
    else:
        if res > tol:
            raise NoConvergence(f"residual {res:.3e} after {max_iter} iterations")
    if res > tol:
        raise NoConvergence(f"residual {res:.3e} after {max_iter} iterations")
    check_kind(beta, seed.kind)
    edge = max(abs(beta[0]), abs(beta[-1]))
    if edge > EDGE_TOL:
        raise EdgeLeak(f"edge amplitude {edge:.3e} exceeds {EDGE_TOL:g}; enlarge the array")
    return SolitonProfile(beta, omega, seed.kind, float(res))


def find_soliton(kind, params: SystemParams) -> SolitonProfile:
    return solve_soliton(seed_profile(kind, params), params)


def linearization(profile: SolitonProfile) -> np.ndarray:
    """Real 2N x 2N generator of small perturbations in the co-rotating frame.

    Writing the perturbation as ``u + i v`` gives ``u' = -L_- v`` and
    ``v' = L_+ u`` with ``L_+- = T + (3 or 1) beta^2 - omega``.
    """
    beta = profile.beta
    n = len(beta)
    t = np.eye(n, k=1) + np.eye(n, k=-1)
    l_plus = t + np.diag(3.0 * beta ** 2 - profile.omega)
    l_minus = t + np.diag(beta ** 2 - profile.omega)
    return np.block([[np.zeros((n, n)), -l_minus], [l_plus, np.zeros((n, n))]])


def linear_stability(profile: SolitonProfile) -> StabilityReport:
    eig = np.linalg.eigvals(linearization(profile))
    eig = eig[np.lexsort((eig.imag, eig.real))]
    nonzero = np.abs(eig) > ZERO_MODE_CUTOFF
    growth = float(np.max(eig.real[nonzero])) if np.any(nonzero) else 0.0
    return StabilityReport(
        eigenvalues=eig,
        max_growth_rate=growth,
        stable=growth <= STABILITY_TOL,
        zero_modes=int(np.count_nonzero(~nonzero)),
    )


def continuation(kind, omega_start: float, omega_end: float, steps: int,
                 params: SystemParams) -> list[SolitonProfile]:
    """Track a branch from ``omega_start`` to ``omega_end`` in ``steps`` equal steps.

    On failure a ContinuationError carries the failing omega and the
    profiles computed so far.
    """
    if steps < 1:
        raise ValueError("steps must be >= 1")
    _check_omega(omega_start)
    _check_omega(omega_end)
    kind = SolitonKind.parse(kind)
    profiles: list[SolitonProfile] = []
    seed = seed_profile(kind, params.with_(omega=omega_start))
    for omega in np.linspace(omega_start, omega_end, steps + 1):
        omega = float(omega)
        try:
            prof = solve_soliton(seed, params.with_(omega=omega))
        except SolverError as exc:
            raise ContinuationError(omega, profiles, exc) from exc
        profiles.append(prof)
        seed = prof
    return profiles
