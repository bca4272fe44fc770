"""Episode configuration: flat `key = value` text files with bracketed
section headers. Every key has a default; see README for the full table."""

from __future__ import annotations

import configparser
from dataclasses import dataclass, field

import numpy as np

from .attention import FusionConfig
from .behavior import BehaviorConfig, Routine
from .learning import PolicyConfig
from .viewer import SceneConfig, ViewerProfile, default_profile


class ConfigError(ValueError):
    def __init__(self, key: str, message: str):
        super().__init__(f"{key}: {message}")
        self.key = key


@dataclass
class EpisodeConfig:
    mode: str = "labels"  # labels | pixels
    steps: int = 1000
    frame_rate: float = 10.0
    decision_period: float = 2.0
    seed: int = 1
    out_dir: str = "runs/episode"
    dump_frames: bool = False
    async_values: bool = False
    learning: PolicyConfig = field(default_factory=PolicyConfig)
    behavior: BehaviorConfig = field(default_factory=BehaviorConfig)
    fusion: FusionConfig = field(default_factory=FusionConfig)
    profile: ViewerProfile = field(default_factory=default_profile)
    scene: SceneConfig = field(default_factory=SceneConfig)

    @property
    def frames_per_decision(self) -> int:
        ratio = self.decision_period * self.frame_rate
        n = round(ratio)
        if n < 1 or abs(ratio - n) > 1e-9:
            raise ConfigError(
                "episode.decision_period",
                f"decision period must be a positive multiple of the frame period (got ratio {ratio})",
            )
        return n

    def validate(self) -> "EpisodeConfig":
        if self.mode not in ("labels", "pixels"):
            raise ConfigError("episode.mode", f"unknown mode {self.mode!r}")
        if self.steps < 1:
            raise ConfigError("episode.steps", "steps must be >= 1")
        _ = self.frames_per_decision
        self.behavior.frame_rate = self.frame_rate
        return self


def _parse_routines(text: str, key: str) -> tuple[Routine, ...]:
    names = [t.strip() for t in text.split(",") if t.strip()]
    try:
        return tuple(Routine(n) for n in names)
    except ValueError as exc:
        raise ConfigError(key, str(exc)) from exc


def _get(parser, section, key, cast, default):
    if not parser.has_option(section, key):
        return default
    raw = parser.get(section, key)
    try:
        if cast is bool:
            return raw.strip().lower() in ("1", "true", "yes", "on")
        return cast(raw)
    except ValueError as exc:
        raise ConfigError(f"{section}.{key}", f"bad value {raw!r}") from exc


def _load_profile(parser) -> ViewerProfile:
    base = default_profile()
    if not parser.has_section("profile"):
        return base
    routines = base.routines
    if parser.has_option("profile", "routines"):
        routines = _parse_routines(parser.get("profile", "routines"), "profile.routines")
    n = len(routines)
    p = np.full((n, 2, n), 0.5)
    if routines == base.routines:
        p = base.p_star.copy()
    profile = ViewerProfile(
        routines=routines,
        p_star=p,
        erratic_rate=_get(parser, "profile", "erratic_rate", float, base.erratic_rate),
        compliance=_get(parser, "profile", "compliance", float, base.compliance),
    )
    if parser.has_section("p_star"):
        for key, raw in parser.items("p_star"):
            parts = key.split(".")
            try:
                value = float(raw)
                if len(parts) == 2:  # <attending|notattending>.<action>
                    att, action = parts
                    j = 1 if att == "attending" else 0
                    l = profile.index(Routine(_canonical(action, routines)))
                    profile.p_star[:, j, l] = value
                elif len(parts) == 3:  # <state_routine>.<att>.<action>
                    sr, att, action = parts
                    i = profile.index(Routine(_canonical(sr, routines)))
                    j = 1 if att == "attending" else 0
                    l = profile.index(Routine(_canonical(action, routines)))
                    profile.p_star[i, j, l] = value
                else:
                    raise ValueError("expected att.action or routine.att.action")
            except (ValueError, KeyError) as exc:
                raise ConfigError(f"p_star.{key}", str(exc)) from exc
    return profile


def _canonical(name: str, routines) -> str:
    # configparser lowercases option names; match case-insensitively
    for r in routines:
        if r.value.lower() == name.lower():
            return r.value
    return name


def load_config(path: str | None = None, overrides: dict | None = None) -> EpisodeConfig:
    parser = configparser.ConfigParser()
    if path is not None:
        read = parser.read(path)
        if not read:
            raise ConfigError("config", f"cannot read {path}")

    cfg = EpisodeConfig(
        mode=_get(parser, "episode", "mode", str, "labels"),
        steps=_get(parser, "episode", "steps", int, 1000),
        frame_rate=_get(parser, "episode", "frame_rate", float, 10.0),
        decision_period=_get(parser, "episode", "decision_period", float, 2.0),
        seed=_get(parser, "episode", "seed", int, 1),
        out_dir=_get(parser, "episode", "out", str, "runs/episode"),
        dump_frames=_get(parser, "episode", "dump_frames", bool, False),
        async_values=_get(parser, "episode", "async_values", bool, False),
    )
    cfg.learning = PolicyConfig(
        epsilon=_get(parser, "learning", "epsilon", float, 0.125),
        gamma=_get(parser, "learning", "gamma", float, 0.9),
        tol=_get(parser, "learning", "tol", float, 1e-6),
        max_sweeps=_get(parser, "learning", "max_sweeps", int, 10_000),
        random_policy=_get(parser, "learning", "random_policy", bool, False),
    )
    selectable = cfg.behavior.selectable
    if parser.has_option("behavior", "selectable"):
        selectable = _parse_routines(parser.get("behavior", "selectable"), "behavior.selectable")
    cfg.behavior = BehaviorConfig(
        frame_rate=cfg.frame_rate,
        t_idle=_get(parser, "behavior", "t_idle", float, 10.0),
        t_ponder=_get(parser, "behavior", "t_ponder", float, 2.0),
        t_resp=_get(parser, "behavior", "t_resp", float, 5.0),
        t_feedback=_get(parser, "behavior", "t_feedback", float, 2.0),
        r_lo=_get(parser, "behavior", "r_lo", float, 0.02),
        r_hi=_get(parser, "behavior", "r_hi", float, 0.30),
        selectable=selectable,
    )
    cfg.fusion = FusionConfig(
        tau_jerk=_get(parser, "fusion", "tau_jerk", float, 12.0),
        k_erratic=_get(parser, "fusion", "k_erratic", int, 3),
        t_recent=_get(parser, "fusion", "t_recent", float, 2.0),
    )
    cfg.profile = _load_profile(parser)
    cfg.scene = SceneConfig(
        width=_get(parser, "scene", "width", int, 128),
        height=_get(parser, "scene", "height", int, 128),
        bg_intensity=_get(parser, "scene", "bg_intensity", float, 60.0),
        noise_sigma=_get(parser, "scene", "noise_sigma", float, 2.0),
        face_ax=_get(parser, "scene", "face_ax", int, 24),
        face_ay=_get(parser, "scene", "face_ay", int, 30),
    )

    if overrides:
        for key, value in overrides.items():
            if value is not None:
                setattr(cfg, key, value)
    return cfg.validate()
