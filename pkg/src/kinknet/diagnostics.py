"""Conserved quantities and residual checks for graph and periodic lattices.

Summation order is fixed (edges by ascending id, nodes by ascending index,
plain left-to-right accumulation) so that reported energies are reproducible
to the last bit.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .dynamics import (FieldState, NonlinearPotential, kirchhoff_imbalance,
                       semi_discrete_rhs, vertex_velocity)


def _ordered_sum(values) -> float:
    # np.sum uses pairwise summation; a sequential loop keeps the order explicit.
    total = 0.0
    for x in np.asarray(values, dtype=float).ravel().tolist():
        total += x
    return total


@dataclass(frozen=True)
class EnergyRecord:
    step: int
    time: float
    total_energy: float
    per_edge_energy: dict[int, float]
    kirchhoff_residual_max: float
    flux_residual_max: float


def edge_energy_density(u: np.ndarray, v: np.ndarray, dx: float,
                        pot: NonlinearPotential) -> np.ndarray:
    """Bracketed energy of nodes ``1 .. n-1`` of one edge, before the dx factor.

    The terminal vertex node has no velocity and only contributes its
    gradient term; node 0 contributes nothing.
    """
    w = np.diff(u) / dx
    dens = 0.5 * w * w
    dens[:-1] += 0.5 * v * v + pot.V(u[1:-1])
    return dens


def discrete_hamiltonian(state: FieldState, pot: NonlinearPotential
                         ) -> tuple[float, dict[int, float]]:
    """Rectangular-rule energy; returns ``(total, per-edge energies)``."""
    state.check_shapes()
    per_edge = {}
    for eid in state.graph.edge_ids:
        e = state.graph.edge(eid)
        dens = edge_energy_density(state.u[eid], state.v[eid], e.dx, pot)
        per_edge[eid] = _ordered_sum(dens) * e.dx
    total = 0.0
    for eid in state.graph.edge_ids:
        total += per_edge[eid]
    return total, per_edge


def discrete_momentum(state: FieldState) -> float:
    total = 0.0
    for eid in state.graph.edge_ids:
        e = state.graph.edge(eid)
        u = state.u[eid]
        w = (u[1:-1] - u[:-2]) / e.dx
        total += _ordered_sum(state.v[eid] * w) * e.dx
    return total


def _energy_residual(u, v_left, v, vdot, pot, dx):
    # u: nodes j-1, j, j+1 stacked as (um, uj, up); v_left = v_{j-1}
    um, uj, up = u
    w = (uj - um) / dx
    w_next = (up - uj) / dx
    w_dot = (v - v_left) / dx
    flux_right = -v * w_next
    flux_left = -v_left * w
    return v * vdot + w * w_dot + pot.f(uj) * v + (flux_right - flux_left) / dx


def local_energy_residual(state: FieldState, pot: NonlinearPotential) -> dict[int, np.ndarray]:
    """Per interior node: d/dt(node energy) + flux divergence.

    The time derivative is taken by the chain rule through the semi-discrete
    right-hand side.  The velocity of a vertex neighbour (needed by the rate
    of the first gradient term on an edge) is approximated by
    :func:`~kinknet.dynamics.vertex_velocity`.
    """
    _, vdot = semi_discrete_rhs(state, pot)
    ut_vertex = vertex_velocity(state)
    out = {}
    for eid in state.graph.edge_ids:
        e = state.graph.edge(eid)
        u = state.u[eid]
        v = state.v[eid]
        v_left = np.concatenate(([ut_vertex[e.start]], v[:-1]))
        out[eid] = _energy_residual((u[:-2], u[1:-1], u[2:]), v_left, v, vdot[eid], pot, e.dx)
    return out


def junction_flux_residual(state: FieldState) -> dict[int, float]:
    """Energy flux balance at each vertex: ``2 u_t(vertex) * sum_k (q_k - u0)/dx_k``."""
    ut = vertex_velocity(state)
    imbalance = kirchhoff_imbalance(state)
    return {vid: 2.0 * ut[vid] * imbalance[vid] for vid in state.graph.vertex_ids}


def energy_record(state: FieldState, pot: NonlinearPotential, step: int = 0) -> EnergyRecord:
    total, per_edge = discrete_hamiltonian(state, pot)
    kirch = kirchhoff_imbalance(state)
    flux = junction_flux_residual(state)
    return EnergyRecord(
        step=step,
        time=state.time,
        total_energy=total,
        per_edge_energy=per_edge,
        kirchhoff_residual_max=max(abs(x) for x in kirch.values()),
        flux_residual_max=max(abs(x) for x in flux.values()),
    )


def relative_drift(energies, reference: float | None = None) -> float:
    """max |E(t) - E(0)| / |E(0)| over a series."""
    energies = np.asarray(energies, dtype=float)
    ref = energies[0] if reference is None else reference
    if ref == 0:
        return 0.0 if np.all(energies == 0) else math.inf
    return float(np.max(np.abs(energies - ref)) / abs(ref))


# --- periodic lattice ----------------------------------------------------------

def periodic_hamiltonian(u: np.ndarray, v: np.ndarray, dx: float,
                         pot: NonlinearPotential) -> float:
    w = (u - np.roll(u, 1)) / dx
    return _ordered_sum(0.5 * v * v + 0.5 * w * w + pot.V(u)) * dx


def periodic_momentum(u: np.ndarray, v: np.ndarray, dx: float) -> float:
    w = (u - np.roll(u, 1)) / dx
    return _ordered_sum(v * w) * dx


def periodic_local_energy_residual(u: np.ndarray, v: np.ndarray, dx: float,
                                   pot: NonlinearPotential) -> np.ndarray:
    vdot = ((np.roll(u, -1) + np.roll(u, 1)) - 2.0 * u) / (dx * dx) - pot.f(u)
    return _energy_residual((np.roll(u, 1), u, np.roll(u, -1)), np.roll(v, 1), v,
                            vdot, pot, dx)
