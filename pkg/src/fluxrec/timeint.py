"""Explicit RK4 time stepping with energy and conservation monitors.

The two monitored quantities are the broken-norm energy E = sum_m u_m . N_m
. u_m and the conserved integral Q = sum_m 1_m . N_m . u_m, where N = M + K
is the norm matrix of the scheme (plain mass matrix for c = 0).  Reductions
use numpy's pairwise summation so monitor values are reproducible.
"""

import csv
from dataclasses import dataclass, field

import numpy as np

from . import schemes as fs


class DivergenceError(RuntimeError):
    """Non-finite state encountered; carries the time it happened."""

    def __init__(self, t):
        super().__init__(f"non-finite solution values at t = {t:.6g}")
        self.t = t


@dataclass
class SolutionState:
    u: np.ndarray   # [nel, Np] coefficients
    t: float = 0.0


@dataclass
class MonitorRecord:
    t: float
    energy: float
    conserved: float
    diverged: bool = False


def monitor_values(u, ops):
    """(E, Q) in the scheme's norm; one code path for DG and ESFR since
    N = M when c = 0."""
    Nu = np.einsum("mij,mj->mi", ops.N_m, u)
    E = float(np.sum(u * Nu))
    Q = float(np.sum(Nu))
    return E, Q


def rk4_step(state, residual_fn, dt):
    """Classical four-stage explicit step."""
    if dt <= 0:
        raise ValueError(f"dt must be positive, got {dt}")
    u, t = state.u, state.t
    k1 = residual_fn(u)
    k2 = residual_fn(u + 0.5 * dt * k1)
    k3 = residual_fn(u + 0.5 * dt * k2)
    k4 = residual_fn(u + dt * k3)
    u_new = u + (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
    if not np.all(np.isfinite(u_new)):
        raise DivergenceError(t + dt)
    return SolutionState(u=u_new, t=t + dt)


def average_node_spacing(topo, p):
    """Mean distance between adjacent 1D volume nodes: element width over
    the p+1 nodes per direction, averaged over directions."""
    extent = topo.domain[:, 1] - topo.domain[:, 0]
    widths = extent / np.asarray(topo.nel_per_dir, dtype=float)
    return float(np.mean(widths / (p + 1)))


def run(state, ops, cfg, t_final, dt, divergence_factor=1e6):
    """March to t_final with monitors sampled at every accepted step.

    The final step is clipped to land exactly on t_final.  If |E| exceeds
    divergence_factor times the initial energy (or the state stops being
    finite), integration stops early and the last record is flagged.
    Returns (state, records).
    """
    residual_fn = lambda u: fs.residual(u, ops, cfg)
    E0, Q0 = monitor_values(state.u, ops)
    records = [MonitorRecord(t=state.t, energy=E0, conserved=Q0)]
    if t_final <= state.t:
        return state, records
    floor = max(abs(E0), 1e-300)
    while state.t < t_final - 1e-12 * max(1.0, abs(t_final)):
        step = min(dt, t_final - state.t)
        try:
            state = rk4_step(state, residual_fn, step)
        except DivergenceError:
            records[-1].diverged = True
            return state, records
        E, Q = monitor_values(state.u, ops)
        rec = MonitorRecord(t=state.t, energy=E, conserved=Q)
        records.append(rec)
        if abs(E) > divergence_factor * floor:
            rec.diverged = True
            return state, records
    return state, records


def _rel_drift(x, x0):
    denom = abs(x0) if abs(x0) > 1e-14 else 1.0
    return (x - x0) / denom


def write_monitor_csv(records, path):
    """Monitor stream: t, energy, energy_rel_drift, conserved, conserved_drift."""
    E0, Q0 = records[0].energy, records[0].conserved
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["t", "energy", "energy_rel_drift", "conserved", "conserved_drift"])
        for r in records:
            w.writerow([
                repr(float(r.t)),
                repr(float(r.energy)),
                repr(float(_rel_drift(r.energy, E0))),
                repr(float(r.conserved)),
                repr(float(_rel_drift(r.conserved, Q0))),
            ])
