"""Run configuration: flat, sectioned ``key = value`` files.

Every key carries its SI unit as a suffix. Vectors are whitespace or comma
separated numbers. Unknown sections and keys are rejected by name so a typo
never silently falls back to a default.
"""

from __future__ import annotations

import configparser
import math
from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np

from .contact import ContactSmoothing
from .errors import ConfigError
from .gait import GaitParams, TrackingGains
from .params import GroundParams, RobotParams
from .sim import SimConfig
from .state import EulerAngles
from .trajopt.problems import TERMINAL_CHOICES


@dataclass(frozen=True)
class OptConfig:
    """Collocation settings; ``problem`` is "hrom" or "double_integrator"."""

    problem: str = "hrom"
    n: int = 21
    tol_c: float = 1e-4
    tol_g: float = 1e-3
    max_iter: int = 200
    tf_bounds: tuple = (0.5, 10.0)
    penalize: str = "edf"
    free_joint_inputs: bool = False
    horizon: float = 0.5
    terminal: tuple = ("displacement", "attitude", "lateral")
    smoothing_v: float = 0.01
    smoothing_z: float = 1e-3
    q_weight: float = 1.0
    r_weight: float = 1e-3
    time_limit: float | None = None
    final_time: float = 1.0
    target: float = 1.0

    def __post_init__(self):
        if self.problem not in ("hrom", "double_integrator"):
            raise ConfigError(f"opt.problem must be 'hrom' or 'double_integrator', got {self.problem!r}")
        if self.n < 2:
            raise ConfigError(f"opt.n must be at least 2, got {self.n}")
        if self.penalize not in ("edf", "wrench"):
            raise ConfigError(f"opt.penalize must be 'edf' or 'wrench', got {self.penalize!r}")
        lo, hi = self.tf_bounds
        if not 0 < lo <= hi:
            raise ConfigError(f"opt.tf_bounds_s must satisfy 0 < lo <= hi, got {self.tf_bounds}")
        bad = sorted(set(self.terminal) - set(TERMINAL_CHOICES))
        if bad:
            raise ConfigError(f"opt.terminal: unknown conditions {bad}, choose from {list(TERMINAL_CHOICES)} or none")

    @property
    def smoothing(self):
        return ContactSmoothing(self.smoothing_v, self.smoothing_z)


@dataclass(frozen=True)
class RunConfig:
    robot: RobotParams = field(default_factory=RobotParams)
    ground: GroundParams = field(default_factory=GroundParams)
    gait: GaitParams = field(default_factory=GaitParams)
    sim: SimConfig = field(default_factory=SimConfig)
    opt: OptConfig = field(default_factory=OptConfig)
    out_dir: str | None = None
    seed: int = 0
    source: dict = field(default_factory=dict, repr=False)


def _floats(text, count=None, key=""):
    parts = text.replace(",", " ").split()
    try:
        values = [float(p) for p in parts]
    except ValueError:
        raise ConfigError(f"{key}: expected numbers, got {text!r}") from None
    if count is not None and len(values) not in np.atleast_1d(count):
        raise ConfigError(f"{key}: expected {count} numbers, got {len(values)}")
    return values


def _float(text, key):
    return _floats(text, 1, key)[0]


def _int(text, key):
    try:
        return int(text)
    except ValueError:
        raise ConfigError(f"{key}: expected an integer, got {text!r}") from None


def _bool(text, key):
    low = text.strip().lower()
    if low in ("1", "true", "yes", "on"):
        return True
    if low in ("0", "false", "no", "off"):
        return False
    raise ConfigError(f"{key}: expected a boolean, got {text!r}")


def _matrix3(text, key):
    v = _floats(text, (3, 9), key)
    return np.diag(v) if len(v) == 3 else np.array(v).reshape(3, 3)


def _vec3(text, key):
    v = _floats(text, (1, 3), key)
    return np.full(3, v[0]) if len(v) == 1 else np.array(v)


def _legs(text, key):
    return np.array(_floats(text, 12, key)).reshape(4, 3)


def _words(text, key):
    words = tuple(w for w in text.replace(",", " ").split() if w)
    return () if words == ("none",) else words


def _optional_float(text, key):
    return None if text.strip().lower() in ("", "none") else _float(text, key)


# section -> key -> (target field, parser)
SCHEMA = {
    "robot": {
        "mass_kg": ("mass", _float),
        "inertia_kgm2": ("inertia", _matrix3),
        "hip_offsets_m": ("hip_offsets", _legs),
        "thruster_positions_m": ("thruster_positions", _legs),
        "thruster_axis": ("thruster_axis", lambda t, k: np.array(_floats(t, 3, k))),
        "max_thrust_per_edf_n": ("max_thrust_per_edf", _float),
        "leg_length_limits_m": ("leg_length_limits", lambda t, k: tuple(_floats(t, 2, k))),
        "gravity_mps2": ("gravity", lambda t, k: np.array(_floats(t, 3, k))),
    },
    "ground": {
        "k_gz_npm": ("k_gz", _float),
        "k_dz_nspm": ("k_dz", _float),
        "mu_c": ("mu_c", _float),
        "mu_s": ("mu_s", _float),
        "mu_v": ("mu_v", _float),
        "v_s_mps": ("v_s", _float),
        "path_half_width_m": ("path_half_width", _float),
        "ground_height_m": ("ground_height", _float),
    },
    "gait": {
        "v_ref_mps": ("forward_velocity_ref", _float),
        "step_time_s": ("step_time", _float),
        "pause_s": ("pause_time", _float),
        "step_height_m": ("step_height", _float),
        "stance_y_offset_m": ("stance_y_offset", _float),
        "duration_s": ("duration", _float),
        "swing_bow_m": ("swing_bow", _float),
        "stance_height_m": ("stance_height", _float),
    },
    "sim": {
        "dt_s": ("dt", _float),
        "duration_s": ("duration", _float),
        "kp_att": ("kp_att", _vec3),
        "kd_att": ("kd_att", _vec3),
        "reference_rad": ("reference", lambda t, k: EulerAngles(*_floats(t, 3, k))),
        "thrust_feedforward": ("thrust_feedforward", _float),
        "thrust_enabled": ("thrust_enabled", _bool),
        "contact_enabled": ("contact_enabled", _bool),
        "kp_joint": ("kp_joint", lambda t, k: np.full(12, _float(t, k))),
        "kd_joint": ("kd_joint", lambda t, k: np.full(12, _float(t, k))),
    },
    "opt": {
        "problem": ("problem", lambda t, k: t.strip()),
        "n": ("n", _int),
        "tol_c": ("tol_c", _float),
        "tol_g": ("tol_g", _float),
        "max_iter": ("max_iter", _int),
        "tf_bounds_s": ("tf_bounds", lambda t, k: tuple(_floats(t, 2, k))),
        "penalize": ("penalize", lambda t, k: t.strip()),
        "free_joint_inputs": ("free_joint_inputs", _bool),
        "horizon_s": ("horizon", _float),
        "terminal": ("terminal", _words),
        "smoothing_v_mps": ("smoothing_v", _float),
        "smoothing_z_m": ("smoothing_z", _float),
        "q_weight": ("q_weight", _float),
        "r_weight": ("r_weight", _float),
        "time_limit_s": ("time_limit", _optional_float),
        "final_time_s": ("final_time", _float),
        "target_m": ("target", _float),
    },
    "run": {
        "out_dir": ("out_dir", lambda t, k: t.strip()),
        "seed": ("seed", _int),
    },
}


def _parse(parser: configparser.ConfigParser):
    values = {name: {} for name in SCHEMA}
    for section in parser.sections():
        if section not in SCHEMA:
            raise ConfigError(f"unknown section [{section}]")
        for key, text in parser.items(section):
            if key not in SCHEMA[section]:
                raise ConfigError(f"unknown key {section}.{key}")
            target, conv = SCHEMA[section][key]
            values[section][target] = conv(text, f"{section}.{key}")
    return values


def _build(values, source) -> RunConfig:
    try:
        robot = RobotParams(**values["robot"])
        ground = GroundParams(**values["ground"])
        gait = GaitParams(**values["gait"])
        sim_kw = dict(values["sim"])
        kp_j, kd_j = sim_kw.pop("kp_joint", None), sim_kw.pop("kd_joint", None)
        tracking = TrackingGains(
            kp=TrackingGains().kp if kp_j is None else kp_j,
            kd=TrackingGains().kd if kd_j is None else kd_j,
        )
        sim = SimConfig(tracking=tracking, **sim_kw)
        opt = OptConfig(**values["opt"])
        run = values["run"]
        return RunConfig(robot, ground, gait, sim, opt, run.get("out_dir"), run.get("seed", 0), source)
    except ConfigError:
        raise
    except (ValueError, TypeError) as exc:
        raise ConfigError(str(exc)) from exc


def parse_config(text: str) -> RunConfig:
    """Parse config text; raises ConfigError on any malformed or unknown entry."""
    parser = configparser.ConfigParser(inline_comment_prefixes=("#", ";"), interpolation=None)
    parser.optionxform = str
    try:
        parser.read_string(text)
    except configparser.Error as exc:
        raise ConfigError(f"malformed config: {exc}") from exc
    source = {s: dict(parser.items(s)) for s in parser.sections()}
    return _build(_parse(parser), source)


def load_config(path) -> RunConfig:
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    return parse_config(text)


def with_overrides(config: RunConfig, **sim_or_opt) -> RunConfig:
    """Return a copy with sim.dt / sim.duration / opt.n replaced (None means keep)."""
    sim, opt, source = config.sim, config.opt, {k: dict(v) for k, v in config.source.items()}
    for name, value in sim_or_opt.items():
        if value is None:
            continue
        if name in ("dt", "duration"):
            try:
                sim = replace(sim, **{name: float(value)})
            except ValueError as exc:
                raise ConfigError(f"sim.{name}_s: {exc}") from exc
            source.setdefault("sim", {})[f"{name}_s"] = repr(float(value))
        elif name == "n":
            opt = replace(opt, n=int(value))
            source.setdefault("opt", {})["n"] = str(int(value))
        else:
            raise ConfigError(f"unknown override {name}")
    if not (sim.dt > 0 and math.isfinite(sim.dt) and sim.duration >= sim.dt):
        raise ConfigError(f"need dt > 0 and duration >= dt, got dt={sim.dt}, duration={sim.duration}")
    return replace(config, sim=sim, opt=opt, source=source)


def config_echo(config: RunConfig) -> dict:
    """Resolved values of every documented key, for the metadata sidecar."""
    r, g, ga, s, o = config.robot, config.ground, config.gait, config.sim, config.opt

    def arr(a):
        return np.asarray(a, dtype=float).tolist()

    return {
        "robot": {
            "mass_kg": r.mass, "inertia_kgm2": arr(r.inertia), "hip_offsets_m": arr(r.hip_offsets),
            "thruster_positions_m": arr(r.thruster_positions), "thruster_axis": arr(r.thruster_axis),
            "max_thrust_per_edf_n": r.max_thrust_per_edf, "leg_length_limits_m": list(r.leg_length_limits),
            "gravity_mps2": arr(r.gravity),
        },
        "ground": {
            "k_gz_npm": g.k_gz, "k_dz_nspm": g.k_dz, "mu_c": g.mu_c, "mu_s": g.mu_s, "mu_v": g.mu_v,
            "v_s_mps": g.v_s, "path_half_width_m": None if math.isinf(g.path_half_width) else g.path_half_width,
            "ground_height_m": g.ground_height,
        },
        "gait": {
            "v_ref_mps": ga.forward_velocity_ref, "step_time_s": ga.step_time, "pause_s": ga.pause_time,
            "step_height_m": ga.step_height, "stance_y_offset_m": ga.stance_y_offset,
            "duration_s": ga.duration, "swing_bow_m": ga.swing_bow, "stance_height_m": ga.stance_height,
        },
        "sim": {
            "dt_s": s.dt, "duration_s": s.duration, "kp_att": arr(s.kp_att), "kd_att": arr(s.kd_att),
            "reference_rad": arr(s.reference.as_array()), "thrust_feedforward": s.thrust_feedforward,
            "thrust_enabled": s.thrust_enabled, "contact_enabled": s.contact_enabled,
            "kp_joint": arr(s.tracking.kp), "kd_joint": arr(s.tracking.kd),
        },
        "opt": {
            "problem": o.problem, "n": o.n, "tol_c": o.tol_c, "tol_g": o.tol_g, "max_iter": o.max_iter,
            "tf_bounds_s": list(o.tf_bounds), "penalize": o.penalize, "free_joint_inputs": o.free_joint_inputs,
            "horizon_s": o.horizon, "terminal": list(o.terminal), "smoothing_v_mps": o.smoothing_v,
            "smoothing_z_m": o.smoothing_z, "q_weight": o.q_weight, "r_weight": o.r_weight,
            "time_limit_s": o.time_limit, "final_time_s": o.final_time, "target_m": o.target,
        },
        "run": {"out_dir": config.out_dir, "seed": config.seed},
    }
