"""Command-line entry point: config parsing, scenario dispatch, output files.

Configs are flat UTF-8 "key = value" files, one pair per line, with '#'
comments.  Unknown keys, missing required keys, and out-of-range values
are rejected with their line number.  A few keys accept the value
"auto" and are resolved against the grid or the initial state; every
resolved value, defaults included, is echoed to meta.txt so a run is
fully described by its output directory.

Outputs per run:
  trace.csv        per-iteration series, header iter,dt,energy,delta,sym_diff,volume
  hysteresis.csv   per-outer-step series (hysteresis scenarios only),
                   header step,volume,left_x,right_x,left_angle,right_angle,energy
  state_NNNN.pgm   binary P5 graymap snapshots: liquid=0, vapor=128, solid=255;
                   pixel rows run top-down (the highest-y grid row is written
                   first), columns left-right
  meta.txt         sorted "key = value" echo of the fully resolved config
  report.txt       scalar measurements of the run (areas, error norms, angles)

All outputs are deterministic: a repeated run with the same config is
byte-identical.  Wall-clock timings go to stdout only.
"""
from __future__ import annotations

import argparse
import math
import sys
from dataclasses import dataclass
from pathlib import Path
from typing import Callable, Sequence

import numpy as np

from .grid import GridSpec, PhasePartition
from .solver import RunTrace, SolverConfig, StepRecord
from .experiments import (
    HysteresisResult,
    HysteresisSchedule,
    drop_spreading_setup,
    patterned_wetting_setup,
    run_drop_spreading,
    run_hysteresis,
    run_two_circles,
    run_two_semicircles,
    sawtooth_wetting_setup,
    two_circles_setup,
    two_semicircles_setup,
)

__all__ = ["ConfigError", "RunConfig", "parse_config", "write_outputs", "main"]

TRACE_HEADER = "iter,dt,energy,delta,sym_diff,volume"
HYSTERESIS_HEADER = "step,volume,left_x,right_x,left_angle,right_angle,energy"


class ConfigError(ValueError):
    def __init__(self, line: int, message: str) -> None:
        super().__init__(f"line {line}: {message}")
        self.line = line


_REQUIRED = object()
_AUTO = object()  # stands for a value resolved later against the run setup


@dataclass(frozen=True)
class _Key:
    parse: Callable[[str], object]
    default: object
    check: Callable[[object], str | None] = lambda v: None
    allow_auto: bool = False


def _parse_bool(s: str) -> bool:
    low = s.lower()
    if low in ("true", "yes", "1", "on"):
        return True
    if low in ("false", "no", "0", "off"):
        return False
    raise ValueError(f"not a boolean: {s!r}")


def _positive(v) -> str | None:
    return None if v > 0 else f"must be positive, got {v}"


def _non_negative(v) -> str | None:
    return None if v >= 0 else f"must be non-negative, got {v}"


def _angle(v) -> str | None:
    return None if 0.0 < v < math.pi else f"must lie in (0, pi), got {v}"


def _resolution(v) -> str | None:
    if v < 8:
        return f"grid resolution must be at least 8, got {v}"
    if v % 4 != 0:
        return f"grid resolution must be divisible by 4, got {v}"
    return None


def _at_least_one(v) -> str | None:
    return None if v >= 1 else f"must be at least 1, got {v}"


def _direction(v) -> str | None:
    return None if v in ("advance", "recede") else f"must be 'advance' or 'recede', got {v!r}"


def _half_angle(v) -> str | None:
    return None if 0.0 < v < math.pi / 2.0 else f"must lie in (0, pi/2), got {v}"


_COMMON_KEYS = {
    "out_dir": _Key(str, "out"),
    "snapshot_every": _Key(int, 0, _non_negative),
}

_SCHEDULE_KEYS = {
    "dt": _Key(float, 1e-3, _positive),
    "r0": _Key(float, math.pi / 5.0, _positive),
    "direction": _Key(str, "advance", _direction),
    "delta_cells": _Key(int, _AUTO, _at_least_one, allow_auto=True),
    "n_steps": _Key(int, 100, _at_least_one),
    "settle_max_iters": _Key(int, 2000, _at_least_one),
    "min_volume": _Key(float, 0.0, _non_negative),
    "contact_band": _Key(float, _AUTO, _positive, allow_auto=True),
    "contact_h_excl": _Key(float, 0.0, _non_negative),
}

_SCHEMAS: dict[str, dict[str, _Key]] = {
    "two_circles": {
        **_COMMON_KEYS,
        "nx": _Key(int, 512, _resolution),
        "dt": _Key(float, 1e-3, _positive),
        "t_end": _Key(float, 0.02, _positive),
    },
    "two_semicircles": {
        **_COMMON_KEYS,
        "nx": _Key(int, 512, _resolution),
        "dt": _Key(float, 1e-3, _positive),
        "t_end": _Key(float, 0.02, _positive),
        "mirror_check": _Key(_parse_bool, False),
    },
    "drop_spreading": {
        **_COMMON_KEYS,
        "nx": _Key(int, 512, _resolution),
        "theta_y": _Key(float, math.pi / 3.0, _angle),
        "refine": _Key(_parse_bool, True),
        "dt0": _Key(float, _AUTO, _positive, allow_auto=True),
        "eps": _Key(float, _AUTO, _positive, allow_auto=True),
        "eps1": _Key(float, _AUTO, _positive, allow_auto=True),
        "dt_min": _Key(float, _AUTO, _positive, allow_auto=True),
        "max_iters": _Key(int, 10000, _at_least_one),
    },
    "hysteresis_patterned": {
        **_COMMON_KEYS,
        **_SCHEDULE_KEYS,
        "nx": _Key(int, 512, _resolution),
        "theta_a": _Key(float, math.pi / 5.0, _angle),
        "theta_b": _Key(float, 0.7 * math.pi, _angle),
        "k": _Key(int, 4, _at_least_one),
    },
    "hysteresis_sawtooth": {
        **_COMMON_KEYS,
        **_SCHEDULE_KEYS,
        "nx": _Key(int, 512, _resolution),
        "theta_y": _Key(float, math.pi / 2.0, _angle),
        "alpha": _Key(float, math.pi / 6.0, _half_angle),
        "k": _Key(int, 4, _at_least_one),
    },
}


@dataclass(frozen=True)
class RunConfig:
    """A fully validated scenario configuration.

    values maps every schema key to its typed value; keys left at
    "auto" hold the _AUTO sentinel until the runner resolves them.
    """

    scenario: str
    values: dict[str, object]

    def __getitem__(self, key: str):
        return self.values[key]


def parse_config(text: str) -> RunConfig:
    """Parse and validate a flat key = value config; errors carry line numbers."""
    pairs: dict[str, tuple[str, int]] = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(lineno, f"expected 'key = value', got {raw.strip()!r}")
        key, _, value = line.partition("=")
        key = key.strip()
        value = value.strip()
        if not key:
            raise ConfigError(lineno, "empty key")
        if key in pairs:
            raise ConfigError(lineno, f"duplicate key {key!r} (first on line {pairs[key][1]})")
        pairs[key] = (value, lineno)

    if "scenario" not in pairs:
        raise ConfigError(0, "missing required key 'scenario'")
    scenario, scen_line = pairs.pop("scenario")
    if not scenario:
        raise ConfigError(scen_line, "missing required key 'scenario'")
    if scenario not in _SCHEMAS:
        known = ", ".join(sorted(_SCHEMAS))
        raise ConfigError(scen_line, f"unknown scenario {scenario!r} (known: {known})")
    schema = _SCHEMAS[scenario]

    values: dict[str, object] = {}
    for key, (raw_value, lineno) in pairs.items():
        if key not in schema:
            raise ConfigError(lineno, f"unknown key {key!r} for scenario {scenario!r}")
        spec = schema[key]
        if raw_value == "auto":
            if not spec.allow_auto:
                raise ConfigError(lineno, f"key {key!r} does not accept 'auto'")
            values[key] = _AUTO
            continue
        try:
            value = spec.parse(raw_value)
        except ValueError:
            raise ConfigError(
                lineno, f"bad value {raw_value!r} for key {key!r} ({spec.parse.__name__})"
            ) from None
        problem = spec.check(value)
        if problem is not None:
            raise ConfigError(lineno, f"key {key!r}: {problem}")
        values[key] = value
    for key, spec in schema.items():
        if key not in values:
            if spec.default is _REQUIRED:
                raise ConfigError(0, f"missing required key {key!r}")
            values[key] = spec.default
    return RunConfig(scenario=scenario, values=values)


# ---------------------------------------------------------------------------
# serialization


def _fmt(v) -> str:
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, float):
        return repr(v)
    return str(v)


def config_lines(scenario: str, values: dict[str, object]) -> str:
    lines = [f"scenario = {scenario}"]
    lines += [f"{k} = {_fmt(v)}" for k, v in sorted(values.items())]
    return "\n".join(lines) + "\n"


def render_pgm(grid: GridSpec, liquid: np.ndarray, solid: np.ndarray) -> bytes:
    """Binary P5 graymap of one state: liquid=0, vapor=128, solid=255.

    The y axis points up in the grid but PGM rows run top-down, so the
    last grid row is written first.
    """
    img = np.full(grid.shape, 128, dtype=np.uint8)
    img[solid] = 255
    img[liquid] = 0
    header = f"P5\n{grid.nx} {grid.ny}\n255\n".encode("ascii")
    return header + img[::-1, :].tobytes()


def _trace_csv(records: Sequence[StepRecord]) -> str:
    lines = [TRACE_HEADER]
    for r in records:
        lines.append(
            f"{r.iteration},{_fmt(float(r.dt))},{_fmt(float(r.energy))},"
            f"{_fmt(float(r.delta))},{_fmt(float(r.sym_diff))},{_fmt(float(r.volume))}"
        )
    return "\n".join(lines) + "\n"


def _hysteresis_csv(result: HysteresisResult) -> str:
    lines = [HYSTERESIS_HEADER]
    for s in result.steps:
        lines.append(
            f"{s.step},{_fmt(float(s.volume))},{_fmt(float(s.left_x))},{_fmt(float(s.right_x))},"
            f"{_fmt(float(s.left_angle))},{_fmt(float(s.right_angle))},{_fmt(float(s.energy))}"
        )
    return "\n".join(lines) + "\n"


def _write(path: Path, data: str | bytes) -> None:
    try:
        if isinstance(data, bytes):
            path.write_bytes(data)
        else:
            path.write_text(data, encoding="utf-8")
    except OSError as e:
        raise RuntimeError(f"cannot write {path}: {e}") from None


def write_outputs(
    out_dir: str | Path,
    scenario: str,
    resolved: dict[str, object],
    initial: PhasePartition,
    final: PhasePartition,
    trace: RunTrace | None = None,
    hysteresis: HysteresisResult | None = None,
    report: Sequence[str] = (),
) -> Path:
    """Write the full deterministic output set for one run; returns the dir.

    Snapshots: state_0000.pgm is the initial state and the final state is
    written at the last iteration (or outer-step) index; any cadence
    snapshots recorded by the run land at their own indices.
    """
    out = Path(out_dir)
    try:
        out.mkdir(parents=True, exist_ok=True)
    except OSError as e:
        raise RuntimeError(f"cannot create {out}: {e}") from None

    _write(out / "meta.txt", config_lines(scenario, resolved))
    _write(out / "trace.csv", _trace_csv(trace.records if trace is not None else ()))
    if hysteresis is not None:
        _write(out / "hysteresis.csv", _hysteresis_csv(hysteresis))

    grid = initial.grid
    solid = initial.solid_mask().values
    states: dict[int, np.ndarray] = {0: initial.liquid.values}
    if trace is not None:
        for it, mask in trace.snapshots:
            states[it] = mask
        last = trace.records[-1].iteration if trace.records else 0
        states[last] = final.liquid.values
    if hysteresis is not None:
        for s, mask in hysteresis.snapshots:
            states[s] = mask
        last = hysteresis.steps[-1].step if hysteresis.steps else 0
        states[last] = final.liquid.values
    for idx in sorted(states):
        _write(out / f"state_{idx:04d}.pgm", render_pgm(grid, states[idx], solid))

    if report:
        _write(out / "report.txt", "\n".join(report) + "\n")
    return out


# ---------------------------------------------------------------------------
# scenario runners


def _run_two_circles(cfg: RunConfig) -> int:
    v = dict(cfg.values)
    res = run_two_circles(v["nx"], v["dt"], v["t_end"], snapshot_every=v["snapshot_every"])
    initial, _ = two_circles_setup(v["nx"])
    report = [
        f"smaller_area = {_fmt(res.smaller_area)}",
        f"oracle_smaller_area = {_fmt(res.oracle.smaller_area)}",
        f"vol_err = {_fmt(res.vol_err)}",
        f"l1 = {_fmt(res.errors.l1)}",
        f"linf = {_fmt(res.errors.linf)}",
        f"iterations = {len(res.trace.records)}",
        f"termination = {res.trace.termination}",
    ]
    out = write_outputs(
        v["out_dir"], cfg.scenario, v, initial, res.trace.final, trace=res.trace, report=report
    )
    print(f"two_circles: smaller area {res.smaller_area:.6f} "
          f"(reference {res.oracle.smaller_area:.6f}), wrote {out}")
    print(f"runtime: {res.runtime_s:.2f} s")
    return 0


def _run_two_semicircles(cfg: RunConfig) -> int:
    v = dict(cfg.values)
    res = run_two_semicircles(
        v["nx"], v["dt"], v["t_end"], mirror_check=v["mirror_check"],
        snapshot_every=v["snapshot_every"],
    )
    initial, _ = two_semicircles_setup(v["nx"])
    report = [
        f"smaller_area = {_fmt(res.smaller_area)}",
        f"oracle_half_area = {_fmt(0.5 * res.oracle.smaller_area)}",
        f"vol_err = {_fmt(res.vol_err)}",
        f"l1 = {_fmt(res.errors.l1)}",
        f"linf = {_fmt(res.errors.linf)}",
        f"iterations = {len(res.trace.records)}",
        f"termination = {res.trace.termination}",
    ]
    if res.mirror is not None:
        report += [
            f"mirror_hausdorff_cells = {_fmt(res.mirror.hausdorff_cells)}",
            f"mirror_sym_diff_cells = {res.mirror.sym_diff_cells}",
        ]
    out = write_outputs(
        v["out_dir"], cfg.scenario, v, initial, res.trace.final, trace=res.trace, report=report
    )
    print(f"two_semicircles: smaller area {res.smaller_area:.6f}, wrote {out}")
    print(f"runtime: {res.runtime_s:.2f} s")
    return 0


def _run_drop_spreading(cfg: RunConfig) -> int:
    v = dict(cfg.values)
    n = v["nx"]
    grid_dx = math.pi / n
    if v["dt0"] is _AUTO:
        v["dt0"] = 2.0 * grid_dx
    solver_defaults = SolverConfig(
        dt0=v["dt0"],
        eps=None if v["eps"] is _AUTO else v["eps"],
        eps1=None if v["eps1"] is _AUTO else v["eps1"],
        dt_min=None if v["dt_min"] is _AUTO else v["dt_min"],
    ).resolved(_drop_grid(n))
    v["eps"], v["eps1"], v["dt_min"] = solver_defaults.eps, solver_defaults.eps1, solver_defaults.dt_min
    res = run_drop_spreading(
        n,
        refine=v["refine"],
        dt0=v["dt0"],
        theta=v["theta_y"],
        max_iters=v["max_iters"],
        eps=v["eps"],
        eps1=v["eps1"],
        dt_min=v["dt_min"],
        snapshot_every=v["snapshot_every"],
    )
    initial, _ = drop_spreading_setup(n, v["theta_y"])
    angle = 0.5 * (res.contact.left_angle + res.contact.right_angle)
    report = [
        f"l1 = {_fmt(res.errors.l1)}",
        f"linf = {_fmt(res.errors.linf)}",
        f"vol_err = {_fmt(res.errors.vol_err)}",
        f"contact_angle = {_fmt(angle)}",
        f"angle_err = {_fmt(res.angle_err)}",
        f"cap_radius = {_fmt(res.cap.radius)}",
        f"final_dt = {_fmt(float(res.trace.records[-1].dt))}",
        f"iterations = {len(res.trace.records)}",
        f"termination = {res.trace.termination}",
        f"boundary_clearance = {_fmt(res.clearance)}",
    ]
    out = write_outputs(
        v["out_dir"], cfg.scenario, v, initial, res.trace.final, trace=res.trace, report=report
    )
    print(f"drop_spreading: L1 {res.errors.l1:.4f}, angle {angle:.4f} rad, "
          f"{res.trace.termination}, wrote {out}")
    print(f"runtime: {res.runtime_s:.2f} s")
    return 0


def _drop_grid(n: int) -> GridSpec:
    half = math.pi / 2.0
    return GridSpec(nx=n, ny=n, x0=-half, y0=-half, lx=math.pi, ly=math.pi)


def _run_hysteresis(cfg: RunConfig) -> int:
    v = dict(cfg.values)
    if cfg.scenario == "hysteresis_patterned":
        setup = patterned_wetting_setup(
            v["nx"], theta_a=v["theta_a"], theta_b=v["theta_b"], k=v["k"], r0=v["r0"]
        )
    else:
        setup = sawtooth_wetting_setup(
            v["nx"], theta_y=v["theta_y"], k=v["k"], alpha=v["alpha"], r0=v["r0"]
        )
    if v["delta_cells"] is _AUTO:
        # default volume increment: ~ V0/200 per outer step
        v["delta_cells"] = max(1, round(setup.partition.n_liquid / 200))
    if v["contact_band"] is _AUTO:
        v["contact_band"] = max(2.0 * math.sqrt(2.0 * v["dt"]), 8.0 * setup.partition.grid.dx)
    schedule = HysteresisSchedule(
        direction=v["direction"],
        delta_cells=v["delta_cells"],
        n_steps=v["n_steps"],
        settle_max_iters=v["settle_max_iters"],
    )
    res = run_hysteresis(
        setup.partition,
        setup.tensions,
        v["dt"],
        schedule,
        reference_y=setup.reference_y,
        h_excl=setup.h_excl,
        min_volume=v["min_volume"],
        snapshot_every=v["snapshot_every"],
        contact_band=v["contact_band"],
        contact_h_excl=v["contact_h_excl"],
    )
    report = [
        f"recorded_steps = {len(res.steps)}",
        f"aborted = {res.aborted if res.aborted is not None else 'none'}",
        f"reference_y = {_fmt(setup.reference_y)}",
        f"h_excl = {_fmt(setup.h_excl)}",
    ]
    if res.steps:
        report += [
            f"final_volume = {_fmt(res.steps[-1].volume)}",
            f"final_left_angle = {_fmt(res.steps[-1].left_angle)}",
            f"final_right_angle = {_fmt(res.steps[-1].right_angle)}",
        ]
    out = write_outputs(
        v["out_dir"], cfg.scenario, v, setup.partition, res.final, hysteresis=res, report=report
    )
    print(f"{cfg.scenario}: {len(res.steps)} steps recorded "
          f"({'clean' if res.aborted is None else res.aborted}), wrote {out}")
    if res.aborted in ("detached", "standoff", "fluid-exhausted"):
        print(f"sweep aborted: {res.aborted}", file=sys.stderr)
        return 1
    return 0


_RUNNERS = {
    "two_circles": _run_two_circles,
    "two_semicircles": _run_two_semicircles,
    "drop_spreading": _run_drop_spreading,
    "hysteresis_patterned": _run_hysteresis,
    "hysteresis_sawtooth": _run_hysteresis,
}


# ---------------------------------------------------------------------------
# entry point


def _overrides_to_config_text(name: str, tokens: Sequence[str]) -> str:
    lines = [f"scenario = {name}"]
    i = 0
    while i < len(tokens):
        tok = tokens[i]
        if not tok.startswith("--"):
            raise ConfigError(0, f"expected --key value, got {tok!r}")
        key = tok[2:]
        if "=" in key:
            key, _, val = key.partition("=")
        else:
            i += 1
            if i >= len(tokens):
                raise ConfigError(0, f"missing value for --{key}")
            val = tokens[i]
        lines.append(f"{key} = {val}")
        i += 1
    return "\n".join(lines)


def main(argv: Sequence[str] | None = None) -> int:
    parser = argparse.ArgumentParser(
        prog="tdwet",
        description="threshold-dynamics wetting simulations",
    )
    sub = parser.add_subparsers(dest="command", required=True)
    p_run = sub.add_parser("run", help="run a scenario from a config file")
    p_run.add_argument("config", help="path to a key = value config file")
    p_exp = sub.add_parser("experiment", help="run a named scenario with --key value overrides")
    p_exp.add_argument("name", help="scenario name")
    p_exp.add_argument("overrides", nargs=argparse.REMAINDER, help="--key value pairs")
    p_val = sub.add_parser("validate", help="parse a config and echo the resolved values")
    p_val.add_argument("config", help="path to a key = value config file")
    args = parser.parse_args(argv)

    try:
        if args.command in ("run", "validate"):
            try:
                text = Path(args.config).read_text(encoding="utf-8")
            except OSError as e:
                print(f"cannot read {args.config}: {e}", file=sys.stderr)
                return 1
            cfg = parse_config(text)
        else:
            cfg = parse_config(_overrides_to_config_text(args.name, args.overrides))
    except ConfigError as e:
        print(f"config error: {e}", file=sys.stderr)
        return 2

    if args.command == "validate":
        echo = {k: ("auto" if v is _AUTO else v) for k, v in cfg.values.items()}
        sys.stdout.write(config_lines(cfg.scenario, echo))
        print("config ok")
        return 0

    try:
        return _RUNNERS[cfg.scenario](cfg)
    except (RuntimeError, ValueError) as e:
        print(f"error: {e}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
