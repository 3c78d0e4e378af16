"""Run configuration, initial conditions, and CSV output.

Config file (JSON)::

    {
      "dt": 0.01,
      "t_final": 25.0,
      "scheme": "leapfrog",              # or "symplectic_euler"
      "potential": "sine_gordon",        # klein_gordon, free_wave
      "output_every": 50,
      "output_dir": null,                # falls back to $KINKNET_OUT, then ./kinknet_out
      "staggered_velocity": true,
      "default_initial_condition": {"kind": "zero"},
      "initial_conditions": [
        {"edge": 1, "kind": "kink", "c": 0.95, "x0_fraction": 0.5,
         "polarity": 1, "direction": "forward"},
        {"edge": 2, "kind": "constant", "value": 6.283185307179586}
      ]
    }

With ``staggered_velocity`` the kink velocity is sampled at ``t = -dt/2``,
the time level the first symplectic Euler velocity corresponds to; this keeps
the leap-frog trajectory second-order accurate from the very first step.
"""

from __future__ import annotations

import os
from concurrent.futures import Future, ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Literal

import numpy as np

from .analytic import KinkSpec, kink_u, kink_v, lorentz_factor
from .diagnostics import EnergyRecord, energy_record, relative_drift
from .dynamics import (SCHEMES, FieldState, Integrator, IntegrationBlowup,
                       NonlinearPotential, StepperConfig, get_potential,
                       project_initial_condition)
from .graph import MetricGraph, edge_embedding, load_graph, read_json, require_valid

DEFAULT_OUT = "kinknet_out"
SNAPSHOT_HEADER = "edge_id,node_index,arclength,x,y,u,v"


class ConfigError(ValueError):
    pass


@dataclass(frozen=True)
class InitialConditionSpec:
    kind: Literal["zero", "constant", "kink"] = "zero"
    value: float = 0.0
    c: float = 0.0
    x0_fraction: float = 0.5
    polarity: int = 1
    direction: Literal["forward", "backward"] = "forward"

    def __post_init__(self):
        if self.kind not in ("zero", "constant", "kink"):
            raise ConfigError(f"unknown initial condition kind {self.kind!r}")
        if self.kind == "kink":
            try:
                lorentz_factor(self.c)
            except ValueError as exc:
                raise ConfigError(str(exc)) from None
            if not 0.0 <= self.x0_fraction <= 1.0:
                raise ConfigError(f"x0_fraction must lie in [0, 1], got {self.x0_fraction}")
            if self.polarity not in (1, -1):
                raise ConfigError(f"polarity must be +1 or -1, got {self.polarity!r}")
            if self.direction not in ("forward", "backward"):
                raise ConfigError(f"direction must be 'forward' or 'backward', "
                                  f"got {self.direction!r}")

    def sample(self, n_points: int, dx: float, t_u: float = 0.0,
               t_v: float = 0.0) -> tuple[np.ndarray, np.ndarray]:
        """``(u, v)`` on all ``n_points`` nodes of an edge."""
        if self.kind == "zero":
            return np.zeros(n_points), np.zeros(n_points)
        if self.kind == "constant":
            return np.full(n_points, float(self.value)), np.zeros(n_points)
        length = (n_points - 1) * dx
        s = np.arange(n_points) * dx
        centre = self.x0_fraction * length
        if self.direction == "backward":
            s = length - s
            centre = length - centre
        k = KinkSpec(c=self.c, x0=-centre, polarity=self.polarity)
        return kink_u(s, t_u, k), kink_v(s, t_v, k)


@dataclass(frozen=True)
class RunConfig:
    dt: float
    t_final: float
    scheme: str = "leapfrog"
    potential: str = "sine_gordon"
    output_every: int = 50
    output_dir: str | None = None
    staggered_velocity: bool = True
    default_initial_condition: InitialConditionSpec = field(
        default_factory=InitialConditionSpec)
    initial_conditions: dict[int, InitialConditionSpec] = field(default_factory=dict)

    @property
    def n_steps(self) -> int:
        return int(round(self.t_final / self.dt))

    def resolve_output_dir(self, override: str | Path | None = None) -> Path:
        for candidate in (override, self.output_dir, os.environ.get("KINKNET_OUT")):
            if candidate:
                return Path(candidate)
        return Path(DEFAULT_OUT)


def _get(doc, key, kind, where, default=...):
    if key not in doc:
        if default is ...:
            raise ConfigError(f"{where}{key}: missing required field")
        return default
    value = doc[key]
    if value is None and default is None:
        return None
    if kind is float:
        ok = isinstance(value, (int, float)) and not isinstance(value, bool)
    elif kind is int:
        ok = isinstance(value, int) and not isinstance(value, bool)
    else:
        ok = isinstance(value, kind)
    if not ok:
        raise ConfigError(f"{where}{key}: expected {kind.__name__}, got {value!r}")
    return kind(value)


def _ic_from_dict(doc, where) -> InitialConditionSpec:
    if not isinstance(doc, dict):
        raise ConfigError(f"{where}: expected an object")
    w = where + "."
    fields = dict(
        kind=_get(doc, "kind", str, w, "zero"),
        value=_get(doc, "value", float, w, 0.0),
        c=_get(doc, "c", float, w, 0.0),
        x0_fraction=_get(doc, "x0_fraction", float, w, 0.5),
        polarity=_get(doc, "polarity", int, w, 1),
        direction=_get(doc, "direction", str, w, "forward"),
    )
    try:
        return InitialConditionSpec(**fields)
    except ConfigError as exc:
        raise ConfigError(f"{where}: {exc}") from None


def config_from_dict(doc: dict) -> RunConfig:
    if not isinstance(doc, dict):
        raise ConfigError("top level: expected an object")
    dt = _get(doc, "dt", float, "")
    t_final = _get(doc, "t_final", float, "")
    if not dt > 0:
        raise ConfigError(f"dt: must be positive, got {dt}")
    if not t_final > 0:
        raise ConfigError(f"t_final: must be positive, got {t_final}")
    scheme = _get(doc, "scheme", str, "", "leapfrog")
    if scheme not in SCHEMES:
        raise ConfigError(f"scheme: unknown scheme {scheme!r}; choose from {SCHEMES}")
    potential = _get(doc, "potential", str, "", "sine_gordon")
    try:
        get_potential(potential)
    except ValueError as exc:
        raise ConfigError(f"potential: {exc}") from None
    every = _get(doc, "output_every", int, "", 50)
    if every < 1:
        raise ConfigError(f"output_every: must be >= 1, got {every}")

    default_ic = _ic_from_dict(doc.get("default_initial_condition", {"kind": "zero"}),
                               "default_initial_condition")
    ics: dict[int, InitialConditionSpec] = {}
    items = doc.get("initial_conditions", [])
    if not isinstance(items, list):
        raise ConfigError("initial_conditions: expected a list")
    for i, item in enumerate(items):
        where = f"initial_conditions[{i}]"
        if not isinstance(item, dict):
            raise ConfigError(f"{where}: expected an object")
        eid = _get(item, "edge", int, where + ".")
        if eid in ics:
            raise ConfigError(f"{where}.edge: edge {eid} listed twice")
        ics[eid] = _ic_from_dict(item, where)

    return RunConfig(
        dt=dt, t_final=t_final, scheme=scheme, potential=potential,
        output_every=every,
        output_dir=_get(doc, "output_dir", str, "", None),
        staggered_velocity=_get(doc, "staggered_velocity", bool, "", True),
        default_initial_condition=default_ic,
        initial_conditions=ics,
    )


def load_config(path: str | Path) -> RunConfig:
    doc = read_json(path, error=ConfigError)
    try:
        return config_from_dict(doc)
    except ConfigError as exc:
        raise ConfigError(f"{path}: {exc}") from None


@dataclass
class LoadedRun:
    graph: MetricGraph
    config: RunConfig
    state: FieldState

    @property
    def potential(self) -> NonlinearPotential:
        return get_potential(self.config.potential)

    @property
    def stepper(self) -> StepperConfig:
        return StepperConfig.for_graph(self.graph, self.config.dt, self.config.scheme)


def initial_state(graph: MetricGraph, config: RunConfig) -> FieldState:
    require_valid(graph)
    unknown = sorted(set(config.initial_conditions) - set(graph.edge_ids))
    if unknown:
        raise ConfigError(f"initial_conditions: unknown edge id(s) {unknown}")
    t_v = -0.5 * config.dt if config.staggered_velocity else 0.0
    u, v = {}, {}
    for e in graph.edges:
        spec = config.initial_conditions.get(e.id, config.default_initial_condition)
        u[e.id], v[e.id] = spec.sample(e.n_points, e.dx, 0.0, t_v)
    return project_initial_condition(graph, u, v)


def build_run(graph: MetricGraph, config: RunConfig) -> LoadedRun:
    StepperConfig.for_graph(graph, config.dt, config.scheme)
    return LoadedRun(graph, config, initial_state(graph, config))


def load_run(graph_file: str | Path, config_file: str | Path) -> LoadedRun:
    """Read both files, check them, and sample the t=0 state."""
    graph = load_graph(graph_file)
    require_valid(graph)
    return build_run(graph, load_config(config_file))


# --- output --------------------------------------------------------------------

def _fmt(x: float) -> str:
    return repr(float(x))


def snapshot_text(state: FieldState) -> str:
    g = state.graph
    lines = [SNAPSHOT_HEADER]
    for eid in g.edge_ids:
        e = g.edge(eid)
        xs, ys = edge_embedding(g, eid)
        u = state.u[eid].tolist()
        v = state.v[eid].tolist()
        last = e.n_points - 1
        for j in range(e.n_points):
            vj = "" if j == 0 or j == last else _fmt(v[j - 1])
            lines.append(f"{eid},{j},{_fmt(j * e.dx)},{_fmt(xs[j])},{_fmt(ys[j])},"
                         f"{_fmt(u[j])},{vj}")
    return "\n".join(lines) + "\n"


def write_snapshot(state: FieldState, path: str | Path) -> Path:
    path = Path(path)
    try:
        with open(path, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(snapshot_text(state))
    except OSError as exc:
        raise OSError(f"cannot write snapshot {path}: {exc}") from exc
    return path


def read_snapshot(path: str | Path, graph: MetricGraph, time: float = 0.0) -> FieldState:
    """Inverse of :func:`write_snapshot`; values round-trip exactly."""
    state = FieldState.zeros(graph, time)
    with open(path, encoding="utf-8") as fh:
        header = fh.readline().rstrip("\n")
        if header != SNAPSHOT_HEADER:
            raise ValueError(f"{path}: unexpected header {header!r}")
        for lineno, line in enumerate(fh, start=2):
            eid_s, j_s, _, _, _, u_s, v_s = line.rstrip("\n").split(",")
            eid, j = int(eid_s), int(j_s)
            e = graph.edge(eid)
            state.u[eid][j] = float(u_s)
            if j == 0:
                state.u_vertex[e.start] = float(u_s)
            elif j == e.n_points - 1:
                state.u_vertex[e.end] = float(u_s)
            else:
                if not v_s:
                    raise ValueError(f"{path}: line {lineno}: interior node without v")
                state.v[eid][j - 1] = float(v_s)
    return state


def energy_header(graph: MetricGraph) -> str:
    cols = ["step", "time", "total_energy", "kirchhoff_residual_max", "flux_residual_max"]
    cols += [f"energy_edge_{eid}" for eid in graph.edge_ids]
    return ",".join(cols)


def energy_row(rec: EnergyRecord) -> str:
    vals = [str(rec.step), _fmt(rec.time), _fmt(rec.total_energy),
            _fmt(rec.kirchhoff_residual_max), _fmt(rec.flux_residual_max)]
    vals += [_fmt(rec.per_edge_energy[eid]) for eid in sorted(rec.per_edge_energy)]
    return ",".join(vals)


class SimulationBlowup(RuntimeError):
    def __init__(self, cause: IntegrationBlowup, last_snapshot: Path | None):
        self.cause = cause
        self.last_snapshot = last_snapshot
        super().__init__(f"{cause}; last good snapshot: {last_snapshot}")


@dataclass
class SimulationResult:
    records: list[EnergyRecord]
    snapshots: list[Path]
    energy_file: Path
    final_state: FieldState

    @property
    def e0(self) -> float:
        return self.records[0].total_energy

    @property
    def e_final(self) -> float:
        return self.records[-1].total_energy

    @property
    def drift(self) -> float:
        return relative_drift([r.total_energy for r in self.records])

    def summary(self) -> str:
        return (f"E(0) = {self.e0:.12g}  E(T) = {self.e_final:.12g}  "
                f"max relative drift = {self.drift:.3e}")


def simulate(run: LoadedRun, out_dir: str | Path | None = None,
             write_files: bool = True) -> SimulationResult:
    """Step from t=0 to t_final, writing a snapshot and an energy row every
    ``output_every`` steps (and at the final step)."""
    cfg = run.config
    pot = run.potential
    out = cfg.resolve_output_dir(out_dir)
    integ = Integrator(run.state, pot, run.stepper)
    n_steps = cfg.n_steps
    records: list[EnergyRecord] = []
    snapshots: list[Path] = []
    pending: list[Future] = []
    energy_file = out / "energy.csv"

    if write_files:
        out.mkdir(parents=True, exist_ok=True)
        efh = open(energy_file, "w", encoding="utf-8", newline="\n")
        efh.write(energy_header(run.graph) + "\n")
    pool = ThreadPoolExecutor(max_workers=1) if write_files else None

    def emit(state: FieldState, step: int):
        rec = energy_record(state, pot, step)
        records.append(rec)
        if write_files:
            efh.write(energy_row(rec) + "\n")
            path = out / f"snapshot_{step:07d}.csv"
            pending.append(pool.submit(write_snapshot, state.copy(), path))
            snapshots.append(path)

    def last_good() -> Path | None:
        for fut, path in zip(reversed(pending), reversed(snapshots)):
            if fut.exception() is None:
                return path
        return None

    try:
        emit(integ.state, 0)
        for step in range(1, n_steps + 1):
            try:
                state = integ.step()
            except IntegrationBlowup as exc:
                for fut in pending:
                    fut.exception()
                raise SimulationBlowup(exc, last_good() if write_files else None) from exc
            if step % cfg.output_every == 0 or step == n_steps:
                emit(state, step)
        for fut in pending:
            fut.result()
    finally:
        if write_files:
            pool.shutdown(wait=True)
            efh.close()
    return SimulationResult(records, snapshots, energy_file, integ.state)
