"""Line-oriented run configuration.

The format is one `section.key = value` assignment per line with `#`
comments. Parsing is strict: unknown keys, duplicate keys, and malformed
values are errors carrying the offending line number. Values are typed by
a fixed schema and validated by the target dataclasses.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Dict, Optional, Tuple

from .grid import DEFAULT_HEIGHT, GridSpec
from .initial import InitialSpec
from .solver import Params, SolverConfig


class ConfigError(Exception):
    """Configuration rejected; `line` is set when a source line is known."""

    def __init__(self, message: str, line: Optional[int] = None):
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)
        self.line = line


@dataclass(frozen=True)
class StudySpec:
    """Perturbation-decay study controls.

    count runs are performed with initial-data perturbation amplitudes
    base_amplitude * 2^-n for n = 1 .. count.
    """

    count: int = 5
    base_amplitude: float = 1.0

    def __post_init__(self):
        if not isinstance(self.count, int) or self.count < 2:
            raise ValueError(f"study count must be an integer >= 2, got {self.count!r}")
        if not (self.base_amplitude > 0.0):
            raise ValueError(
                f"study base amplitude must be positive, got {self.base_amplitude!r}"
            )


@dataclass(frozen=True)
class RunConfig:
    grid: GridSpec
    params: Params
    solver: SolverConfig
    initial: InitialSpec = field(default_factory=InitialSpec)
    study: StudySpec = field(default_factory=StudySpec)
    output_dir: str = "out"


def _parse_int(text: str) -> int:
    try:
        return int(text)
    except ValueError:
        raise ValueError(f"expected an integer, got {text!r}")


def _parse_float(text: str) -> float:
    try:
        return float(text)
    except ValueError:
        raise ValueError(f"expected a number, got {text!r}")


def _parse_str(text: str) -> str:
    return text


# section.key -> (parser, required). Optional-with-default keys take their
# defaults from the target dataclasses so there is one source of truth.
_SCHEMA: Dict[str, Tuple[object, bool]] = {
    "grid.nx1": (_parse_int, True),
    "grid.nx2": (_parse_int, True),
    "grid.nz": (_parse_int, True),
    "grid.lx1": (_parse_float, False),
    "grid.lx2": (_parse_float, False),
    "grid.h": (_parse_float, False),
    "params.nu": (_parse_float, False),
    "params.r": (_parse_float, False),
    "params.kappa": (_parse_float, False),
    "params.xi_floor": (_parse_float, False),
    "solver.t_end": (_parse_float, True),
    "solver.cfl": (_parse_float, False),
    "solver.integrator": (_parse_str, False),
    "solver.dump_every": (_parse_int, False),
    "solver.dt_fixed": (_parse_float, False),
    "initial.profile": (_parse_str, False),
    "initial.amplitude": (_parse_float, False),
    "initial.u_amplitude": (_parse_float, False),
    "initial.k1": (_parse_int, False),
    "initial.k2": (_parse_int, False),
    "initial.dump": (_parse_str, False),
    "study.count": (_parse_int, False),
    "study.base_amplitude": (_parse_float, False),
    "output.dir": (_parse_str, False),
}

# nu has no universal default scale; require it explicitly like t_end? It
# does have a sensible desk-scale default, kept here.
_DEFAULT_NU = 0.01

_ASSIGN_HELP = "expected 'section.key = value'"


def parse_config(
    text: str, overrides: Optional[Dict[str, str]] = None
) -> RunConfig:
    """Parse configuration text, optionally merging override assignments.

    Overrides map full key paths to value strings (as the CLI flags do)
    and are applied after the file, replacing earlier assignments.
    """
    raw: Dict[str, Tuple[str, Optional[int]]] = {}
    for lineno, line in enumerate(text.splitlines(), start=1):
        body = line.split("#", 1)[0].strip()
        if not body:
            continue
        if "=" not in body:
            raise ConfigError(_ASSIGN_HELP, lineno)
        key, value = (part.strip() for part in body.split("=", 1))
        if not key or not value:
            raise ConfigError(_ASSIGN_HELP, lineno)
        if key not in _SCHEMA:
            raise ConfigError(f"unknown key {key!r}", lineno)
        if key in raw:
            raise ConfigError(f"duplicate key {key!r}", lineno)
        raw[key] = (value, lineno)
    for key, value in (overrides or {}).items():
        if key not in _SCHEMA:
            raise ConfigError(f"unknown key {key!r}")
        raw[key] = (value, None)

    values: Dict[str, object] = {}
    for key, (value, lineno) in raw.items():
        parser, _ = _SCHEMA[key]
        try:
            values[key] = parser(value)
        except ValueError as err:
            raise ConfigError(f"{key}: {err}", lineno) from None
    missing = [k for k, (_, required) in _SCHEMA.items() if required and k not in values]
    if missing:
        raise ConfigError(f"missing required keys: {', '.join(missing)}")

    def take(key: str, default):
        return values.get(key, default)

    try:
        grid = GridSpec(
            nx1=values["grid.nx1"],
            nx2=values["grid.nx2"],
            nz=values["grid.nz"],
            lx1=take("grid.lx1", 1.0),
            lx2=take("grid.lx2", 1.0),
            h=take("grid.h", DEFAULT_HEIGHT),
        )
        params = Params(
            nu=take("params.nu", _DEFAULT_NU),
            r=take("params.r", 0.0),
            kappa=take("params.kappa", 1.0),
            xi_floor=take("params.xi_floor", 1e-10),
        )
        solver = SolverConfig(
            t_end=values["solver.t_end"],
            cfl=take("solver.cfl", 0.4),
            integrator=take("solver.integrator", "ssp-rk2"),
            dump_every=take("solver.dump_every", 1),
            dt_fixed=take("solver.dt_fixed", None),
        )
        init = InitialSpec(
            profile=take("initial.profile", "rest"),
            amplitude=take("initial.amplitude", 0.1),
            u_amplitude=take("initial.u_amplitude", 0.0),
            k1=take("initial.k1", 1),
            k2=take("initial.k2", 1),
            dump=take("initial.dump", None),
        )
        study = StudySpec(
            count=take("study.count", 5),
            base_amplitude=take("study.base_amplitude", 1.0),
        )
    except ValueError as err:
        raise ConfigError(str(err)) from None
    return RunConfig(
        grid=grid,
        params=params,
        solver=solver,
        initial=init,
        study=study,
        output_dir=take("output.dir", "out"),
    )


def serialize_config(cfg: RunConfig) -> str:
    """Canonical text round-tripping through parse_config."""
    lines = [
        f"grid.nx1 = {cfg.grid.nx1}",
        f"grid.nx2 = {cfg.grid.nx2}",
        f"grid.nz = {cfg.grid.nz}",
        f"grid.lx1 = {cfg.grid.lx1!r}",
        f"grid.lx2 = {cfg.grid.lx2!r}",
        f"grid.h = {cfg.grid.h!r}",
        f"params.nu = {cfg.params.nu!r}",
        f"params.r = {cfg.params.r!r}",
        f"params.kappa = {cfg.params.kappa!r}",
        f"params.xi_floor = {cfg.params.xi_floor!r}",
        f"solver.t_end = {cfg.solver.t_end!r}",
        f"solver.cfl = {cfg.solver.cfl!r}",
        f"solver.integrator = {cfg.solver.integrator}",
        f"solver.dump_every = {cfg.solver.dump_every}",
    ]
    if cfg.solver.dt_fixed is not None:
        lines.append(f"solver.dt_fixed = {cfg.solver.dt_fixed!r}")
    lines += [
        f"initial.profile = {cfg.initial.profile}",
        f"initial.amplitude = {cfg.initial.amplitude!r}",
        f"initial.u_amplitude = {cfg.initial.u_amplitude!r}",
        f"initial.k1 = {cfg.initial.k1}",
        f"initial.k2 = {cfg.initial.k2}",
    ]
    if cfg.initial.dump is not None:
        lines.append(f"initial.dump = {cfg.initial.dump}")
    lines += [
        f"study.count = {cfg.study.count}",
        f"study.base_amplitude = {cfg.study.base_amplitude!r}",
        f"output.dir = {cfg.output_dir}",
    ]
    return "\n".join(lines) + "\n"
