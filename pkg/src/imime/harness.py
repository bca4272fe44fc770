"""Closed-loop episode harness: wires the vision pipeline (pixel mode) or
ground-truth labels (label mode) through attention fusion, the behavior
engine, and the learning stack; plus the independent oracle solver and
episode metrics.

Randomness comes from four child streams of one seed, consumed in a fixed
documented order per frame: viewer, scheduler coin, epsilon draw, frame
noise. Reordering or re-purposing a stream is a breaking change guarded by
a golden log test.
"""

from __future__ import annotations

import csv
import hashlib
import os
from dataclasses import dataclass, field

import numpy as np

from . import body, face, viewer
from .attention import AttentionEvaluator, AttentionState
from .behavior import BehaviorEngine, Routine
from .config import ConfigError, EpisodeConfig
from .frames import write_pgm
from .learning import Learner, StateId

BACKGROUND_TRAINING_FRAMES = 10

# canonical expression references for the 14-dim characteristic flow:
# smile = outward+up mouth flow with cheek lift, frown = downward mouth/brow
DEFAULT_EXPRESSION_REFS = [
    ("Smile", np.array([0, 0, 0, 0, 0, -0.5, 0, -0.5, 0, 0, 0, 0, 0, -2.0])),
    ("Frown", np.array([0, 0.5, 0, 0.5, 0, 0, 0, 0, 0, 0, 0, 0, 0, 2.0])),
]


@dataclass
class EpisodeLog:
    rows: list = field(default_factory=list)  # per-frame dicts
    transitions: list = field(default_factory=list)  # (tick, old, new, cause)
    decisions: int = 0
    gamma: float = 0.9
    initial_state: StateId | None = None

    def decision_rows(self) -> list:
        return [r for r in self.rows if r["decision"]]


def _label_mode_attention(vstate: viewer.ViewerState, evaluator: AttentionEvaluator, now: float, jerk: float) -> AttentionState:
    orientation = "Frontal" if abs(vstate.yaw) < viewer.FRONTAL_YAW else ("Right" if vstate.yaw > 0 else "Left")
    return evaluator.evaluate(
        orientation_label=orientation,
        expression="Neutral",
        motion="Still",
        jerk=jerk,
        gesture=vstate.gesture,
        now=now,
    )


class PixelPipeline:
    """Full vision stack over synthesized frames."""

    def __init__(self, cfg: EpisodeConfig, noise_rng: np.random.Generator):
        self.cfg = cfg
        self.detector = face.BrightnessBlobDetector()
        self.track = face.HeadTrack()
        self.prev_face_frame = None
        self.prev_orientation = "Frontal"
        bg_frames = [
            viewer.synthesize_body_frame(None, cfg.scene, noise_rng)[0]
            for _ in range(BACKGROUND_TRAINING_FRAMES)
        ]
        self.background = body.train_background(bg_frames)
        self.pose_refs = viewer.build_pose_references(cfg.scene)

    def process(self, face_frame, body_frame, evaluator: AttentionEvaluator, now: float):
        rect = self.detector.detect(face_frame)
        orientation_label = None
        jerk = 0.0
        expression = "Neutral"
        motion = "Still"
        ratio = 0.0
        if rect is not None:
            s = face.symmetry_score(face_frame, rect)
            e = face.edge_cog_offset(face_frame, rect)
            est = face.fuse_orientation(s, e, self.prev_orientation)
            orientation_label = est.label
            self.prev_orientation = est.label
            cx, cy = rect.center
            self.track.push(cx, cy)
            if len(self.track) >= 5:
                jerk = face.estimate_jerk(self.track)
            if self.prev_face_frame is not None:
                try:
                    regions = face.partition_regions(rect)
                    fields = [face.block_flow(self.prev_face_frame, face_frame, r) for r in regions]
                    cf = face.characteristic_flow(fields)
                    expression = face.classify_expression(cf, DEFAULT_EXPRESSION_REFS)
                    whole = face.block_flow(self.prev_face_frame, face_frame, (rect.x, rect.y, rect.w, rect.h))
                    motion = face.classify_motion(whole, cf)
                except (face.RectTooSmall, ValueError):
                    pass
            ratio = rect.w * rect.h / (face_frame.width * face_frame.height)
        self.prev_face_frame = face_frame

        mask = body.segment_foreground(self.background, body_frame)
        gesture = None
        if mask.mean() >= 0.01:
            profile = body.drape(mask)
            pose = body.classify_pose(profile, self.pose_refs)
            if pose not in ("Unknown", "ArmsDown"):
                gesture = pose

        attention = evaluator.evaluate(
            orientation_label=orientation_label,
            expression=expression,
            motion=motion,
            jerk=jerk,
            gesture=gesture,
            now=now,
        )
        return attention, ratio, jerk, orientation_label


def run_episode(cfg: EpisodeConfig):
    """Run one seeded episode; returns (EpisodeLog, Learner)."""
    cfg.validate()
    seeds = np.random.SeedSequence(cfg.seed).spawn(4)
    rng_viewer = np.random.default_rng(seeds[0])
    rng_sched = np.random.default_rng(seeds[1])
    rng_eps = np.random.default_rng(seeds[2])
    rng_noise = np.random.default_rng(seeds[3])

    profile = cfg.profile
    learner = Learner(profile.routines, cfg.learning, async_mode=cfg.async_values)
    engine = BehaviorEngine(cfg.behavior, initial=profile.routines[0])
    engine.state.policy_routine = profile.routines[0]
    evaluator = AttentionEvaluator(cfg.fusion)
    vstate = viewer.ViewerState()
    pipeline = PixelPipeline(cfg, rng_noise) if cfg.mode == "pixels" else None

    fpd = cfg.frames_per_decision
    log = EpisodeLog(gamma=cfg.learning.gamma)
    frames_dir = None
    if cfg.dump_frames:
        frames_dir = os.path.join(cfg.out_dir, "frames")
        os.makedirs(frames_dir, exist_ok=True)

    committed: tuple[StateId, Routine] | None = None
    label_jerk_window: list[tuple[float, float]] = []

    for tick in range(cfg.steps):
        decision = tick % fpd == 0
        now = tick / cfg.frame_rate

        # 1. viewer stream
        if decision and committed is not None:
            s_prev, a_prev = committed
            vstate = viewer.step_viewer(profile, vstate, s_prev.routine, s_prev.attending, a_prev, rng_viewer)
        prompt = engine.state.game.prompted if engine.state.game.phase == "Prompted" else None
        vstate = viewer.frame_update(vstate, prompt, rng_viewer, profile.compliance)

        # 2. perception
        if pipeline is None:
            label_jerk_window.append((vstate.x, vstate.y))
            if len(label_jerk_window) > 5:
                label_jerk_window.pop(0)
            jerk = 0.0
            if len(label_jerk_window) == 5:
                p = np.array(label_jerk_window)
                d = p[4] - 4 * p[3] + 6 * p[2] - 4 * p[1] + p[0]
                jerk = float(np.hypot(d[0], d[1]))
            attention = _label_mode_attention(vstate, evaluator, now, jerk)
            orientation_label = "Frontal" if attention.attending else ("Right" if vstate.yaw > 0 else "Left")
            ratio = (2 * cfg.scene.face_ax + 1) * (2 * cfg.scene.face_ay + 1) / (cfg.scene.width * cfg.scene.height)
        else:
            face_frame, _ = viewer.synthesize_face_frame(vstate, cfg.scene, rng_noise)
            body_frame, _ = viewer.synthesize_body_frame(vstate.pose, cfg.scene, rng_noise)
            if frames_dir is not None:
                write_pgm(face_frame, os.path.join(frames_dir, f"face_{tick:06d}.pgm"))
                write_pgm(body_frame, os.path.join(frames_dir, f"body_{tick:06d}.pgm"))
            attention, ratio, jerk, orientation_label = pipeline.process(face_frame, body_frame, evaluator, now)

        # 3. learning at the decision tick: attribute reward, refresh model/values
        state_now = StateId(engine.state.policy_routine, attention.attending)
        if decision:
            if log.initial_state is None:
                log.initial_state = state_now
            learner.observe(attention)

        # 4. behavior arbitration (scheduler coin from the scheduler stream,
        #    epsilon draw from the policy stream)
        def policy_fn():
            action, _ = learner.choose(state_now, rng_eps)
            return action

        old_routine = engine.state.current
        routine, cause = engine.frame_step(
            attention, ratio, tick, rng_sched, decision=decision, policy_fn=policy_fn
        )
        if routine != old_routine:
            log.transitions.append((tick, old_routine.value, routine.value, cause))

        explored = False
        if decision:
            committed = (state_now, engine.state.policy_routine)
            learner.commit(*committed)
            explored = engine.state.policy_routine != learner.q.greedy(state_now)
            log.decisions += 1

        log.rows.append(
            {
                "tick": tick,
                "routine": routine.value,
                "cause": cause,
                "attending": int(attention.attending),
                "reward": int(attention.attending),
                "explore": int(explored),
                "jerk": round(jerk, 6),
                "orientation": orientation_label or "NoFace",
                "decision": int(decision),
            }
        )

    return log, learner


# --- oracle -------------------------------------------------------------------


def oracle_policy(profile: viewer.ViewerProfile, gamma: float = 0.9, tol: float = 1e-10):
    """Exact value iteration on the TRUE attend probabilities.

    Deliberately independent of learning.update_values: plain dict/loop code
    over (routine, attending) states, used as the brute-force oracle.
    """
    states = [(r, att) for r in profile.routines for att in (False, True)]
    values = {s: 0.0 for s in states}
    for _ in range(1_000_000):
        new_values = {}
        delta = 0.0
        for s in states:
            best = None
            for a in profile.routines:
                p = profile.prob(s[0], s[1], a)
                q = p * (1.0 + gamma * values[(a, True)]) + (1.0 - p) * gamma * values[(a, False)]
                if best is None or q > best:
                    best = q
            new_values[s] = best
            delta = max(delta, abs(best - values[s]))
        values = new_values
        if delta < tol:
            break
    policy = {}
    for s in states:
        best_a, best_q = None, None
        for a in profile.routines:
            p = profile.prob(s[0], s[1], a)
            q = p * (1.0 + gamma * values[(a, True)]) + (1.0 - p) * gamma * values[(a, False)]
            if best_q is None or q > best_q:
                best_a, best_q = a, q
        policy[s] = best_a
    return policy, values


# --- metrics ------------------------------------------------------------------


def metrics(log: EpisodeLog, learner: Learner, profile: viewer.ViewerProfile, window: int = 100) -> dict:
    decision_rows = log.decision_rows()
    rewards = [r["reward"] for r in decision_rows]
    gamma = log.gamma

    window_fractions = [
        float(np.mean(rewards[i : i + window])) for i in range(0, len(rewards), window) if rewards[i : i + window]
    ]
    realized = sum(r * gamma**i for i, r in enumerate(rewards))
    policy, values = oracle_policy(profile, gamma)
    if log.initial_state is not None:
        s0 = (log.initial_state.routine, log.initial_state.attending)
        oracle_value = values[s0]
    else:
        oracle_value = float(np.mean(list(values.values())))

    agreement = 0
    states = [(r, att) for r in profile.routines for att in (False, True)]
    for r, att in states:
        if learner.q.greedy(StateId(r, att)) == policy[(r, att)]:
            agreement += 1

    return {
        "decisions": len(decision_rows),
        "cumulative_reward": int(sum(rewards)),
        "attention_fraction_windows": window_fractions,
        "final_window_attention": window_fractions[-1] if window_fractions else 0.0,
        "discounted_return": realized,
        "oracle_value": oracle_value,
        "regret": oracle_value - realized,
        "exploration_rate": float(np.mean([r["explore"] for r in decision_rows])) if decision_rows else 0.0,
        "greedy_agreement": agreement / len(states),
    }


# --- persistence ----------------------------------------------------------------

LOG_FIELDS = ["tick", "routine", "cause", "attending", "reward", "explore", "jerk", "orientation", "decision"]


def write_log_csv(log: EpisodeLog, path) -> None:
    with open(path, "w", newline="") as f:
        writer = csv.DictWriter(f, fieldnames=LOG_FIELDS)
        writer.writeheader()
        for row in log.rows:
            writer.writerow(row)


def write_transitions_csv(log: EpisodeLog, path) -> None:
    with open(path, "w", newline="") as f:
        writer = csv.writer(f)
        writer.writerow(["tick", "old", "new", "cause"])
        writer.writerows(log.transitions)


def log_digest(log: EpisodeLog) -> str:
    h = hashlib.sha256()
    for row in log.rows:
        h.update(repr([row[k] for k in LOG_FIELDS]).encode())
    return h.hexdigest()


def save_episode(cfg: EpisodeConfig, log: EpisodeLog, learner: Learner) -> dict:
    os.makedirs(cfg.out_dir, exist_ok=True)
    write_log_csv(log, os.path.join(cfg.out_dir, "episode.csv"))
    write_transitions_csv(log, os.path.join(cfg.out_dir, "transitions.csv"))
    learner.dump_csv(os.path.join(cfg.out_dir, "learning.csv"))
    summary = metrics(log, learner, cfg.profile)
    with open(os.path.join(cfg.out_dir, "metrics.csv"), "w", newline="") as f:
        writer = csv.writer(f)
        writer.writerow(["metric", "value"])
        for key, value in summary.items():
            if key == "attention_fraction_windows":
                value = ";".join(f"{v:.4f}" for v in value)
            writer.writerow([key, value])
    return summary
