"""Run configuration: flat key=value text with sections.

Grammar (diff-friendly on purpose):

    # full-line comments start with '#'
    [section]
    key = value

Sections and keys are fixed; unknown ones are rejected with the nearest
valid name suggested.  Values: integers, floats (repr round-trip), the
booleans true/false, and for ``lattice.n_s`` a space-separated extent
list.  ``render`` writes a canonical form that reparses to an equal
RunConfig, and ``config_hash`` fingerprints that canonical text.
"""

from __future__ import annotations

import difflib
import hashlib
import logging
from dataclasses import dataclass, replace

from .geometry import LatticeShape
from .hmc import HmcParams
from .params import PhysParams

log = logging.getLogger(__name__)


class ConfigError(ValueError):
    pass


@dataclass(frozen=True)
class RunConfig:
    action: str
    shape: LatticeShape
    phys: PhysParams
    hmc: HmcParams
    outdir: str
    include_t2: bool = True
    dump_polyakov_scatter: bool = False
    checkpoint_every: int = 1000

    def __post_init__(self):
        if self.action not in ("wilson", "orbifold"):
            raise ConfigError(f"action must be wilson or orbifold, got {self.action!r}")
        if self.shape.d != self.phys.d:
            raise ConfigError(
                f"lattice has d={self.shape.d} but phys declares d={self.phys.d}"
            )
        if self.checkpoint_every < 1:
            raise ConfigError("checkpoint_every must be >= 1")


# section.key -> (required-for-actions, docstring)
_KEYS = {
    "run.action": "wilson | orbifold",
    "run.outdir": "output directory for CSV and checkpoint files",
    "run.include_t2": "keep the Gauss-law square term (default true)",
    "run.dump_polyakov_scatter": "write per-measurement (re_p, im_p) CSV",
    "run.checkpoint_every": "trajectories between checkpoints",
    "lattice.n_t": "temporal extent",
    "lattice.n_s": "space-separated spatial extents (defines d)",
    "phys.n": "gauge group SU(n)",
    "phys.g2": "coupling squared",
    "phys.a": "spatial lattice spacing",
    "phys.a_t": "temporal lattice spacing",
    "phys.m2": "scalar mass squared (orbifold only)",
    "phys.m2_u1": "U(1) mass squared (defaults to m2)",
    "hmc.seed": "64-bit RNG seed",
    "hmc.dt": "molecular-dynamics step size",
    "hmc.n_md": "steps per trajectory",
    "hmc.n_traj": "measured trajectories",
    "hmc.n_therm": "discarded thermalization trajectories",
    "hmc.meas_every": "measurement stride",
}

_REQUIRED = [
    "run.action",
    "run.outdir",
    "lattice.n_t",
    "lattice.n_s",
    "phys.n",
    "phys.g2",
    "phys.a",
    "phys.a_t",
    "hmc.seed",
    "hmc.dt",
    "hmc.n_md",
    "hmc.n_traj",
]


def _parse_bool(key, raw):
    if raw.lower() in ("true", "yes", "1"):
        return True
    if raw.lower() in ("false", "no", "0"):
        return False
    raise ConfigError(f"{key}: expected true/false, got {raw!r}")


def _parse_int(key, raw):
    try:
        return int(raw)
    except ValueError as err:
        raise ConfigError(f"{key}: expected an integer, got {raw!r}") from err


def _parse_float(key, raw):
    try:
        return float(raw)
    except ValueError as err:
        raise ConfigError(f"{key}: expected a number, got {raw!r}") from err


def parse_config(text: str) -> RunConfig:
    values: dict[str, str] = {}
    section = None
    for lineno, line in enumerate(text.splitlines(), start=1):
        stripped = line.strip()
        if not stripped or stripped.startswith("#"):
            continue
        if stripped.startswith("[") and stripped.endswith("]"):
            section = stripped[1:-1].strip()
            continue
        if "=" not in stripped:
            raise ConfigError(f"line {lineno}: expected 'key = value', got {line!r}")
        if section is None:
            raise ConfigError(f"line {lineno}: key outside any [section]")
        key, _, raw = stripped.partition("=")
        full = f"{section}.{key.strip()}"
        if full not in _KEYS:
            hint = difflib.get_close_matches(full, _KEYS, n=1)
            suffix = f"; nearest valid key is {hint[0]!r}" if hint else ""
            raise ConfigError(f"line {lineno}: unknown config key {full!r}{suffix}")
        if full in values:
            raise ConfigError(f"line {lineno}: duplicate key {full!r}")
        values[full] = raw.strip()

    missing = [k for k in _REQUIRED if k not in values]
    if missing:
        raise ConfigError(f"missing required keys: {', '.join(missing)}")

    action = values["run.action"]
    if action not in ("wilson", "orbifold"):
        raise ConfigError(f"run.action must be wilson or orbifold, got {action!r}")

    n_s = tuple(_parse_int("lattice.n_s", tok) for tok in values["lattice.n_s"].split())
    shape = LatticeShape(n_t=_parse_int("lattice.n_t", values["lattice.n_t"]), n_s=n_s)

    m2 = _parse_float("phys.m2", values.get("phys.m2", "0"))
    if "phys.m2_u1" in values:
        m2_u1 = _parse_float("phys.m2_u1", values["phys.m2_u1"])
    else:
        m2_u1 = m2  # the simulated default ties the two masses together
    if action == "wilson" and ("phys.m2" in values or "phys.m2_u1" in values):
        log.warning("wilson action ignores phys.m2 / phys.m2_u1 (fields kept as given)")
    if action == "orbifold" and "phys.m2" not in values:
        raise ConfigError("orbifold runs require phys.m2")

    phys = PhysParams(
        n=_parse_int("phys.n", values["phys.n"]),
        d=shape.d,
        g2=_parse_float("phys.g2", values["phys.g2"]),
        a=_parse_float("phys.a", values["phys.a"]),
        a_t=_parse_float("phys.a_t", values["phys.a_t"]),
        m2=m2,
        m2_u1=m2_u1,
    )
    hmc = HmcParams(
        dt=_parse_float("hmc.dt", values["hmc.dt"]),
        n_md=_parse_int("hmc.n_md", values["hmc.n_md"]),
        n_traj=_parse_int("hmc.n_traj", values["hmc.n_traj"]),
        n_therm=_parse_int("hmc.n_therm", values.get("hmc.n_therm", "0")),
        meas_every=_parse_int("hmc.meas_every", values.get("hmc.meas_every", "1")),
        seed=_parse_int("hmc.seed", values["hmc.seed"]),
    )
    return RunConfig(
        action=action,
        shape=shape,
        phys=phys,
        hmc=hmc,
        outdir=values["run.outdir"],
        include_t2=_parse_bool(
            "run.include_t2", values.get("run.include_t2", "true")
        ),
        dump_polyakov_scatter=_parse_bool(
            "run.dump_polyakov_scatter", values.get("run.dump_polyakov_scatter", "false")
        ),
        checkpoint_every=_parse_int(
            "run.checkpoint_every", values.get("run.checkpoint_every", "1000")
        ),
    )


def render(cfg: RunConfig) -> str:
    """Canonical text form; parse(render(cfg)) == cfg field by field."""
    lines = [
        "[run]",
        f"action = {cfg.action}",
        f"outdir = {cfg.outdir}",
        f"include_t2 = {'true' if cfg.include_t2 else 'false'}",
        f"dump_polyakov_scatter = {'true' if cfg.dump_polyakov_scatter else 'false'}",
        f"checkpoint_every = {cfg.checkpoint_every}",
        "[lattice]",
        f"n_t = {cfg.shape.n_t}",
        f"n_s = {' '.join(str(n) for n in cfg.shape.n_s)}",
        "[phys]",
        f"n = {cfg.phys.n}",
        f"g2 = {cfg.phys.g2!r}",
        f"a = {cfg.phys.a!r}",
        f"a_t = {cfg.phys.a_t!r}",
        f"m2 = {cfg.phys.m2!r}",
        f"m2_u1 = {cfg.phys.m2_u1!r}",
        "[hmc]",
        f"seed = {cfg.hmc.seed}",
        f"dt = {cfg.hmc.dt!r}",
        f"n_md = {cfg.hmc.n_md}",
        f"n_traj = {cfg.hmc.n_traj}",
        f"n_therm = {cfg.hmc.n_therm}",
        f"meas_every = {cfg.hmc.meas_every}",
    ]
    return "\n".join(lines) + "\n"


def config_hash(cfg: RunConfig) -> str:
    return hashlib.sha256(render(cfg).encode()).hexdigest()


def load_config(path) -> RunConfig:
    with open(path, "r", encoding="utf-8") as fh:
        return parse_config(fh.read())


def with_axis_value(cfg: RunConfig, axis: str, value: float, seed: int,
                    outdir: str) -> RunConfig:
    """Derived config for one scan point; m2 scans move m2_u1 along."""
    if axis == "m2":
        phys = replace(cfg.phys, m2=value, m2_u1=value)
    elif axis == "a_t":
        phys = replace(cfg.phys, a_t=value)
    elif axis == "a_iso":
        phys = replace(cfg.phys, a=value, a_t=value)
    else:
        raise ConfigError(f"unknown scan axis {axis!r} (use m2, a_t or a_iso)")
    hmc = replace(cfg.hmc, seed=seed)
    return replace(cfg, phys=phys, hmc=hmc, outdir=outdir)
