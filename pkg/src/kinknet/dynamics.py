"""Discrete phase space on a metric graph and the explicit symplectic steppers.

Interior lattice nodes carry ``(u, v)``.  Vertex nodes carry only ``u``: after
every interior update the vertex value is re-imposed algebraically from the
discrete Kirchhoff balance

    sum_k (q_k - u_vertex) / dx_k = 0,

where ``q_k`` is the nearest interior value on incident slot ``k``.  The value
is stored once per vertex and copied into every incident endpoint slot, so
continuity holds bit for bit.
"""

from __future__ import annotations

import functools
from dataclasses import dataclass, field
from typing import Callable, Literal

import numpy as np

from .graph import MetricGraph, require_valid

TWO_PI = 2.0 * np.pi
Scheme = Literal["symplectic_euler", "leapfrog"]
SCHEMES = ("symplectic_euler", "leapfrog")

# Overflow is reported by _check_finite with an edge and node, not as a numpy warning.
_quiet_overflow = functools.partial(np.errstate, over="ignore", invalid="ignore")


class CFLError(ValueError):
    pass


class IntegrationBlowup(RuntimeError):
    def __init__(self, time: float, edge: int, node: int, field_name: str):
        self.time, self.edge, self.node, self.field_name = time, edge, node, field_name
        super().__init__(
            f"non-finite {field_name} at edge {edge}, node {node} (t={time:.6g})")


# --- nonlinearities ----------------------------------------------------------

def _wrap(u):
    # Reduce to [-pi, pi] so that every ground state 2*pi*k gives an exact zero.
    return u - TWO_PI * np.round(u / TWO_PI)


@dataclass(frozen=True)
class NonlinearPotential:
    """Force ``f`` and potential density ``V`` with ``V' = f``."""

    name: str
    f: Callable[[np.ndarray], np.ndarray]
    V: Callable[[np.ndarray], np.ndarray]


def _sg_force(u):
    return np.sin(_wrap(u))


def _sg_potential(u):
    # 2 sin^2(u/2) == 1 - cos u without the cancellation near u = 0.
    return 2.0 * np.sin(0.5 * _wrap(u)) ** 2


SINE_GORDON = NonlinearPotential("sine_gordon", _sg_force, _sg_potential)
KLEIN_GORDON = NonlinearPotential("klein_gordon", lambda u: u, lambda u: 0.5 * u * u)
FREE_WAVE = NonlinearPotential("free_wave", np.zeros_like, np.zeros_like)

POTENTIALS = {p.name: p for p in (SINE_GORDON, KLEIN_GORDON, FREE_WAVE)}


def get_potential(name: str) -> NonlinearPotential:
    try:
        return POTENTIALS[name]
    except KeyError:
        raise ValueError(
            f"unknown potential {name!r}; choose from {sorted(POTENTIALS)}") from None


# --- state -------------------------------------------------------------------

@dataclass
class FieldState:
    """Field values on every edge lattice at one time level.

    ``u[e]`` has ``n_points`` entries with the two endpoint entries mirroring
    ``u_vertex``; ``v[e]`` has ``n_points - 2`` entries (interior nodes only).
    """

    graph: MetricGraph
    time: float
    u: dict[int, np.ndarray]
    v: dict[int, np.ndarray]
    u_vertex: dict[int, float] = field(default_factory=dict)

    @classmethod
    def zeros(cls, graph: MetricGraph, time: float = 0.0) -> FieldState:
        u = {e.id: np.zeros(e.n_points) for e in graph.edges}
        v = {e.id: np.zeros(e.n_interior) for e in graph.edges}
        return cls(graph, time, u, v, {vid: 0.0 for vid in graph.vertex_ids})

    def copy(self) -> FieldState:
        return FieldState(self.graph, self.time,
                          {k: a.copy() for k, a in self.u.items()},
                          {k: a.copy() for k, a in self.v.items()},
                          dict(self.u_vertex))

    def check_shapes(self) -> None:
        for e in self.graph.edges:
            if e.id not in self.u or e.id not in self.v:
                raise ValueError(f"state has no arrays for edge {e.id}")
            if self.u[e.id].shape != (e.n_points,):
                raise ValueError(f"edge {e.id}: u has shape {self.u[e.id].shape}, "
                                 f"expected ({e.n_points},)")
            if self.v[e.id].shape != (e.n_interior,):
                raise ValueError(f"edge {e.id}: v has shape {self.v[e.id].shape}, "
                                 f"expected ({e.n_interior},)")

    def continuity_defects(self) -> list[tuple[int, str]]:
        """Edge ends whose stored endpoint differs from the vertex value."""
        bad = []
        for e in self.graph.edges:
            if self.u[e.id][0] != self.u_vertex[e.start]:
                bad.append((e.id, "start"))
            if self.u[e.id][-1] != self.u_vertex[e.end]:
                bad.append((e.id, "terminal"))
        return bad


@dataclass(frozen=True)
class StepperConfig:
    dt: float
    scheme: Scheme = "leapfrog"
    min_dx: float | None = None

    def __post_init__(self):
        if not (np.isfinite(self.dt) and self.dt > 0):
            raise ValueError(f"time step must be positive, got dt={self.dt}")
        if self.scheme not in SCHEMES:
            raise ValueError(f"unknown scheme {self.scheme!r}; choose from {SCHEMES}")
        if self.min_dx is not None and self.dt / self.min_dx > 1.0:
            raise CFLError(
                f"CFL violated: dt/dx = {self.dt}/{self.min_dx} = "
                f"{self.dt / self.min_dx:.4g} > 1")

    @classmethod
    def for_graph(cls, graph: MetricGraph, dt: float,
                  scheme: Scheme = "leapfrog") -> StepperConfig:
        return cls(dt, scheme, graph.min_dx)


# --- junctions ---------------------------------------------------------------

def junction_update(graph: MetricGraph, u: dict[int, np.ndarray]) -> dict[int, float]:
    """Impose the discrete Kirchhoff balance; writes endpoints of ``u`` in place.

    Each vertex value is the 1/dx-weighted mean of the nearest interior
    neighbours, which is the plain arithmetic mean for uniform spacing.
    """
    values = {}
    with _quiet_overflow():
        for vid, slots in graph.junction_slots:
            q_ref = u[slots[0][0]][slots[0][1]]
            num = 0.0
            den = 0.0
            for eid, j, w in slots:
                num += w * (u[eid][j] - q_ref)
                den += w
            values[vid] = float(q_ref + num / den)
    _mirror(graph, u, values)
    return values


def _mirror(graph, u, values):
    for e in graph.edges:
        u[e.id][0] = values[e.start]
        u[e.id][-1] = values[e.end]


def kirchhoff_imbalance(state: FieldState) -> dict[int, float]:
    """``sum_k (q_k - u_vertex) / dx_k`` per vertex."""
    out = {}
    for vid, slots in state.graph.junction_slots:
        u0 = state.u_vertex[vid]
        out[vid] = float(sum(w * (state.u[eid][j] - u0) for eid, j, w in slots))
    return out


def vertex_velocity(state: FieldState) -> dict[int, float]:
    """Approximate vertex u_t: the junction mean applied to adjacent interior v."""
    out = {}
    for vid, slots in state.graph.junction_slots:
        num = sum(w * state.v[eid][j - 1] for eid, j, w in slots)
        den = sum(w for _, _, w in slots)
        out[vid] = float(num / den)
    return out


# --- right-hand side and steppers ---------------------------------------------

def _acceleration(u: np.ndarray, dx: float, pot: NonlinearPotential) -> np.ndarray:
    return ((u[2:] + u[:-2]) - 2.0 * u[1:-1]) / (dx * dx) - pot.f(u[1:-1])


def semi_discrete_rhs(state: FieldState, pot: NonlinearPotential):
    """Return ``(du_dt, dv_dt)`` dictionaries over interior nodes."""
    state.check_shapes()
    du, dv = {}, {}
    for e in state.graph.edges:
        du[e.id] = state.v[e.id].copy()
        dv[e.id] = _acceleration(state.u[e.id], e.dx, pot)
    return du, dv


def _check_finite(state: FieldState) -> None:
    for e in state.graph.edges:
        for name, arr, offset in (("u", state.u[e.id], 0), ("v", state.v[e.id], 1)):
            bad = ~np.isfinite(arr)
            if bad.any():
                raise IntegrationBlowup(state.time, e.id, int(np.argmax(bad)) + offset, name)


def symplectic_euler_step(state: FieldState, pot: NonlinearPotential,
                          dt: float) -> FieldState:
    """One step: v from the level-m stencil, then u with the new v, then junctions."""
    state.check_shapes()
    nxt = state.copy()
    with _quiet_overflow():
        for e in state.graph.edges:
            u = nxt.u[e.id]
            v = nxt.v[e.id]
            v += dt * _acceleration(state.u[e.id], e.dx, pot)
            u[1:-1] += dt * v
        nxt.u_vertex = junction_update(state.graph, nxt.u)
    nxt.time = state.time + dt
    _check_finite(nxt)
    return nxt


def leapfrog_step(prev: FieldState, curr: FieldState, pot: NonlinearPotential,
                  dt: float) -> FieldState:
    """Three-level update of u; the returned v is the difference quotient
    ``(u_next - u_curr) / dt``, i.e. the symplectic Euler velocity."""
    curr.check_shapes()
    nxt = curr.copy()
    with _quiet_overflow():
        for e in curr.graph.edges:
            uc = curr.u[e.id]
            r2 = (dt / e.dx) ** 2
            un = nxt.u[e.id]
            un[1:-1] = (2.0 * uc[1:-1] - prev.u[e.id][1:-1]
                        + r2 * ((uc[2:] + uc[:-2]) - 2.0 * uc[1:-1])
                        - dt * dt * pot.f(uc[1:-1]))
        nxt.u_vertex = junction_update(curr.graph, nxt.u)
        for e in curr.graph.edges:
            nxt.v[e.id] = (nxt.u[e.id][1:-1] - curr.u[e.id][1:-1]) / dt
    nxt.time = curr.time + dt
    _check_finite(nxt)
    return nxt


def bootstrap_first_level(state: FieldState, pot: NonlinearPotential,
                          dt: float) -> FieldState:
    """Second level needed by leap-frog: one symplectic Euler step."""
    return symplectic_euler_step(state, pot, dt)


def project_initial_condition(graph: MetricGraph, u: dict[int, np.ndarray],
                              v: dict[int, np.ndarray] | None = None,
                              time: float = 0.0) -> FieldState:
    """Build a state from raw per-edge samples and impose the junction conditions.

    ``v`` arrays may be given either on all ``n_points`` nodes or on interior
    nodes only; endpoint velocities are discarded.
    """
    require_valid(graph)
    uu, vv = {}, {}
    for e in graph.edges:
        uu[e.id] = np.array(u[e.id], dtype=float)
        if uu[e.id].shape != (e.n_points,):
            raise ValueError(f"edge {e.id}: expected {e.n_points} u samples, "
                             f"got {uu[e.id].shape}")
        if v is None:
            vv[e.id] = np.zeros(e.n_interior)
        else:
            ve = np.array(v[e.id], dtype=float)
            if ve.shape == (e.n_points,):
                ve = ve[1:-1].copy()
            if ve.shape != (e.n_interior,):
                raise ValueError(f"edge {e.id}: expected {e.n_interior} interior "
                                 f"v samples, got {ve.shape}")
            vv[e.id] = ve
    values = junction_update(graph, uu)
    return FieldState(graph, time, uu, vv, values)


class Integrator:
    """Owns a trajectory and hands out successive states.

    For leap-frog the first step is the symplectic Euler bootstrap, so both
    schemes produce the same u trajectory up to round-off.
    """

    def __init__(self, state: FieldState, pot: NonlinearPotential, config: StepperConfig):
        if config.min_dx is None:
            config = StepperConfig.for_graph(state.graph, config.dt, config.scheme)
        elif config.min_dx > state.graph.min_dx:
            raise CFLError("stepper config was checked against a coarser lattice")
        self.pot = pot
        self.config = config
        self.state = state
        self.steps = 0
        self._t0 = state.time
        self._prev: FieldState | None = None

    def step(self) -> FieldState:
        dt = self.config.dt
        if self.config.scheme == "symplectic_euler" or self._prev is None:
            nxt = symplectic_euler_step(self.state, self.pot, dt)
        else:
            nxt = leapfrog_step(self._prev, self.state, self.pot, dt)
        # time as step * dt avoids accumulated rounding in long runs
        self.steps += 1
        nxt.time = self._t0 + self.steps * dt
        self._prev, self.state = self.state, nxt
        return nxt


# --- periodic lattice (no junctions) -----------------------------------------

def periodic_acceleration(u: np.ndarray, dx: float, pot: NonlinearPotential) -> np.ndarray:
    return ((np.roll(u, -1) + np.roll(u, 1)) - 2.0 * u) / (dx * dx) - pot.f(u)


def periodic_symplectic_euler_step(u: np.ndarray, v: np.ndarray, dx: float, dt: float,
                                   pot: NonlinearPotential) -> tuple[np.ndarray, np.ndarray]:
    v_new = v + dt * periodic_acceleration(u, dx, pot)
    return u + dt * v_new, v_new


def periodic_leapfrog_step(u_prev: np.ndarray, u: np.ndarray, dx: float, dt: float,
                           pot: NonlinearPotential) -> np.ndarray:
    r2 = (dt / dx) ** 2
    return (2.0 * u - u_prev + r2 * ((np.roll(u, -1) + np.roll(u, 1)) - 2.0 * u)
            - dt * dt * pot.f(u))
