"""The three experiments wired from the modules, plus the artifact writers.

``simulate`` is the shared core: propagate a soliton input, record the
pair negativity, Err and total power, and locate the validity window.
The ``run_*`` functions take a RunConfig, write files and return a summary.
"""
from __future__ import annotations

import logging
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from . import io
from .config import RunConfig
from .core import SystemParams
from .entanglement import log_negativity, negativity_map
from .moments import Trajectory, initial_state, propagate
from .soliton import SolitonProfile, find_soliton, linear_stability
from .validity import DEFAULT_ERR_CAP, first_crossing

log = logging.getLogger(__name__)


@dataclass
class PropagationResult:
    profile: SolitonProfile
    params: SystemParams
    pair: tuple[int, int]
    trajectory: Trajectory
    z: np.ndarray
    en: np.ndarray
    err: np.ndarray
    power: np.ndarray
    z_valid: float | None
    i_star: int

    @property
    def z_star(self) -> float:
        return float(self.z[self.i_star])

    @property
    def en_max(self) -> float:
        return float(self.en[self.i_star])

    def window(self) -> np.ndarray:
        if self.z_valid is None:
            return np.ones(len(self.z), dtype=bool)
        return self.z <= self.z_valid

    def summary(self) -> dict:
        return {
            "kind": self.profile.kind.name,
            "omega": self.profile.omega,
            "L": self.params.quantum_scale,
            "gamma": self.params.absorption,
            "pair": list(self.pair),
            "z_valid": self.z_valid,
            "z_star": self.z_star,
            "EN_at_z_star": self.en_max,
            "EN_max_overall": float(np.max(self.en)),
            "power_drift": float(np.max(np.abs(self.power - self.power[0]))),
        }


def simulate(profile: SolitonProfile, params: SystemParams, pair=None,
             err_cap: float = DEFAULT_ERR_CAP, output_stride: int = 10,
             adaptive: bool = False, validity: bool = True) -> PropagationResult:
    """Propagate the coherent soliton input and analyse the pair ``(k, l)``.

    ``pair`` defaults to the central pair of the profile. With ``validity``
    (and L > 0) the third-order closure runs alongside and ``z_valid`` is
    the first z where Err exceeds ``err_cap``; otherwise Err is reported as
    zero and the whole run counts as the window.
    """
    k, l = profile.central_pair() if pair is None else (int(pair[0]), int(pair[1]))
    observers = {
        "EN": lambda s, c: log_negativity(s, k, l),
        "power": lambda s, c: s.total_power(),
    }
    third = validity and params.quantum_scale > 0
    traj = propagate(initial_state(profile, params), params, observers,
                     output_stride=output_stride, third_order=third, adaptive=adaptive)
    z = traj.z
    err = traj.err() if third else np.zeros(len(z))
    z_valid = first_crossing(z, err, err_cap) if third else None
    en = traj.record("EN")
    w = np.ones(len(z), dtype=bool) if z_valid is None else z <= z_valid
    i_star = int(np.argmax(np.where(w, en, -np.inf)))
    return PropagationResult(profile, params, (k, l), traj, z, en, err,
                             traj.record("power"), z_valid, i_star)


def _outdir(cfg: RunConfig) -> Path:
    d = Path(cfg["output"]["directory"])
    d.mkdir(parents=True, exist_ok=True)
    return d


def _wants(cfg: RunConfig, fmt: str) -> bool:
    return fmt in cfg["output"]["formats"]


def _pair(cfg: RunConfig):
    p = cfg["experiment"]["pair"]
    return None if p is None else tuple(p)


def _simulate_cfg(cfg: RunConfig, profile=None, **changes) -> PropagationResult:
    params = cfg.system_params(**changes)
    if profile is None:
        profile = find_soliton(cfg.kind, params)
    integ = cfg["integration"]
    return simulate(profile, params, _pair(cfg), cfg["experiment"]["err_cap"],
                    integ["output_stride"], integ["adaptive"])


def run_soliton(cfg: RunConfig) -> dict:
    params = cfg.system_params()
    profile = find_soliton(cfg.kind, params)
    stab = linear_stability(profile)
    out, h = _outdir(cfg), cfg.hash()
    files = []
    summary = profile.to_dict(stab)
    summary["n_sites"] = profile.n_sites
    summary["excited_sites"] = profile.excited_sites()
    if _wants(cfg, "json"):
        files.append(io.write_json(out / "profile.json", summary, h))
        files.append(io.write_json(out / "stability.json", {
            "stable": stab.stable,
            "max_growth_rate": stab.max_growth_rate,
            "zero_modes": stab.zero_modes,
            "eigenvalues_re": stab.eigenvalues.real,
            "eigenvalues_im": stab.eigenvalues.imag,
        }, h))
    if _wants(cfg, "csv"):
        files.append(io.write_csv(out / "profile.csv", ["k", "beta"],
                                  [(k, b) for k, b in enumerate(profile.beta)], h))
    summary["files"] = [str(f) for f in files]
    return summary


def run_propagate(cfg: RunConfig) -> dict:
    res = _simulate_cfg(cfg)
    out, h = _outdir(cfg), cfg.hash()
    files = []
    if _wants(cfg, "csv"):
        rows = zip(res.z, res.en, res.err, res.power)
        files.append(io.write_csv(out / "entanglement.csv",
                                  ["z", "E_N", "Err", "total_power"], rows, h))
    if _wants(cfg, "sites"):
        rows = []
        for st in res.trajectory.states:
            a2 = np.abs(st.alpha) ** 2
            dn = np.real(np.diag(st.delta_n))
            rows.extend((st.z, k, a2[k], dn[k]) for k in range(st.n_sites))
        files.append(io.write_csv(out / "sites.csv",
                                  ["z", "k", "abs_alpha2", "delta_n_kk"], rows, h))
    if _wants(cfg, "snapshot"):
        files.append(io.write_json(out / "snapshot.json", {
            "z_star": res.trajectory.states[res.i_star].to_dict(),
            "final": res.trajectory.states[-1].to_dict(),
        }, h))
    summary = res.summary()
    if _wants(cfg, "json"):
        files.append(io.write_json(out / "summary.json", summary, h))
    summary["files"] = [str(f) for f in files]
    return summary


def map_support(m: np.ndarray, fraction: float = 0.1) -> list[tuple[int, int]]:
    """Pairs ``k < l`` whose cell is at least ``fraction`` of the map maximum."""
    top = float(np.max(m))
    if top <= 0:
        return []
    idx = np.argwhere(np.triu(m >= fraction * top, k=1))
    return [(int(a), int(b)) for a, b in idx]


def run_enmap(cfg: RunConfig) -> dict:
    res = _simulate_cfg(cfg)
    m = negativity_map(res.trajectory.states[res.i_star])
    out, h = _outdir(cfg), cfg.hash()
    files = []
    n = m.shape[0]
    if _wants(cfg, "csv"):
        rows = [[k] + list(m[k]) for k in range(n)]
        files.append(io.write_csv(out / "enmap.csv", ["k"] + [str(l) for l in range(n)], rows, h))
    summary = res.summary()
    summary["support"] = [list(p) for p in map_support(m)]
    summary["map_max"] = float(np.max(m))
    if _wants(cfg, "json"):
        files.append(io.write_json(out / "enmap.json", summary, h))
    summary["files"] = [str(f) for f in files]
    return summary


SWEEP_COLUMNS = ["index", "L", "gamma", "max_EN", "z_star", "z_valid", "intensity", "error"]


def _sweep_point(args):
    index, cfg_data, beta, L, gamma = args
    cfg = RunConfig(cfg_data)
    prof = SolitonProfile(np.asarray(beta), float(cfg["soliton"]["omega"]), cfg.kind, 0.0)
    try:
        res = _simulate_cfg(cfg, prof, quantum_scale=L, absorption=gamma)
    except Exception as exc:  # recorded in-row, the sweep carries on
        log.warning("sweep point %d (L=%g, gamma=%g) failed: %s", index, L, gamma, exc)
        return [index, L, gamma, None, None, None, None, f"{type(exc).__name__}: {exc}"]
    c = prof.central_pair()[0]
    intensity = abs(prof.beta[c]) ** 2 / L if L > 0 else None
    return [index, L, gamma, res.en_max, res.z_star, res.z_valid, intensity, ""]


def sweep_points(cfg: RunConfig) -> list[tuple[float, float]]:
    grid = cfg["experiment"]["sweep_grid"]
    return [(float(L), float(g)) for L in grid["L"] for g in grid["gamma"]]


def run_sweep(cfg: RunConfig) -> dict:
    # the classical profile does not depend on L or gamma; solve it once
    profile = find_soliton(cfg.kind, cfg.system_params())
    beta = profile.beta.tolist()
    jobs = [(i, cfg.data, beta, L, g) for i, (L, g) in enumerate(sweep_points(cfg))]
    workers = cfg["experiment"]["workers"]
    if workers > 1 and len(jobs) > 1:
        with ProcessPoolExecutor(max_workers=min(workers, len(jobs))) as pool:
            rows = list(pool.map(_sweep_point, jobs))
    else:
        rows = [_sweep_point(j) for j in jobs]
    rows.sort(key=lambda r: r[0])
    out, h = _outdir(cfg), cfg.hash()
    files = []
    if _wants(cfg, "csv"):
        files.append(io.write_csv(out / "sweep.csv", SWEEP_COLUMNS, rows, h))
    summary = {
        "kind": profile.kind.name,
        "omega": profile.omega,
        "points": [dict(zip(SWEEP_COLUMNS, r)) for r in rows],
        "failures": sum(1 for r in rows if r[-1]),
    }
    if _wants(cfg, "json"):
        files.append(io.write_json(out / "sweep.json", summary, h))
    summary["files"] = [str(f) for f in files]
    return summary


RUNNERS = {
    "soliton": run_soliton,
    "propagate": run_propagate,
    "enmap": run_enmap,
    "sweep": run_sweep,
}
