"""Ground-truth stochastic viewer and synthetic frame generator: closes the
interaction loop without cameras. Supplies attention labels directly (label
mode) or rendered face/body frames plus per-frame ground truth (pixel mode)."""

from __future__ import annotations

from dataclasses import dataclass, field, replace

import numpy as np

from .behavior import Routine
from .body import PoseReference, drape
from .frames import Frame

POSE_LABELS = ("ArmsDown", "LeftArmRaised", "RightArmRaised", "BothArmsRaised", "Wave")

FRONTAL_YAW = 15.0  # degrees; |yaw| below this means attending
BURST_LENGTH = 8  # frames of injected high-jerk motion
BURST_AMPLITUDE = 3.0  # px; 4th difference of an alternating burst is 16x this
RESPONSE_DELAY = 3  # frames between a prompt and a compliant gesture

# face synthesizer tuning (calibrated so the vision defaults recover ground truth)
SHADE_SLOPE_AT_45 = 2.32  # intensity/px lateral shading gradient at full yaw
FEATURE_SHIFT_FRAC = 0.19  # feature shift at full yaw, as a fraction of the semi-axis


class UnknownPoseLabel(ValueError):
    pass


@dataclass
class ViewerProfile:
    """True attend probabilities per (state, action), plus behavioral rates."""

    routines: tuple[Routine, ...]
    p_star: np.ndarray  # (n, 2, n): [state routine, attending, action]
    erratic_rate: float = 0.0  # per decision tick
    compliance: float = 0.9  # chance of mimicking a prompted gesture

    def index(self, r: Routine) -> int:
        return self.routines.index(r)

    def prob(self, s_routine: Routine, s_attending: bool, action: Routine) -> float:
        return float(self.p_star[self.index(s_routine), int(s_attending), self.index(action)])


def default_profile() -> ViewerProfile:
    """Shipped desk-scale profile: 4 selectable routines, 8 states, with a
    unique optimal action per state (Mimic while attending, Beckon while not)."""
    routines = (Routine.Beckon, Routine.Mimic, Routine.Ponder, Routine.PromptGesture)
    n = len(routines)
    p = np.zeros((n, 2, n))
    attending_probs = {Routine.Beckon: 0.20, Routine.Mimic: 0.90, Routine.Ponder: 0.30, Routine.PromptGesture: 0.40}
    inattentive_probs = {Routine.Beckon: 0.90, Routine.Mimic: 0.20, Routine.Ponder: 0.30, Routine.PromptGesture: 0.40}
    for l, a in enumerate(routines):
        p[:, 1, l] = attending_probs[a]
        p[:, 0, l] = inattentive_probs[a]
    return ViewerProfile(routines=routines, p_star=p)


@dataclass
class ViewerState:
    attending: bool = False
    yaw: float = 30.0  # degrees, positive turns toward the Right label
    x: float = 64.0
    y: float = 60.0
    gesture: str | None = None
    pose: str = "ArmsDown"
    burst_left: int = 0
    burst_phase: int = 0
    active_prompt: str | None = None
    will_comply: bool = False
    respond_in: int = 0

    def __post_init__(self):
        if self.attending and abs(self.yaw) >= FRONTAL_YAW:
            raise ValueError("attending viewer must face the display")


@dataclass
class SceneConfig:
    width: int = 128
    height: int = 128
    bg_intensity: float = 60.0
    noise_sigma: float = 2.0
    face_ax: int = 24  # face ellipse semi-axes
    face_ay: int = 30
    face_intensity: float = 200.0
    feature_intensity: float = 40.0
    body_intensity: float = 160.0

    def __post_init__(self):
        if 2 * self.face_ax + 1 > self.width or 2 * self.face_ay + 1 > self.height:
            raise ValueError("face does not fit in the frame")


def step_viewer(
    profile: ViewerProfile,
    state: ViewerState,
    s_routine: Routine,
    s_attending: bool,
    action: Routine,
    rng: np.random.Generator,
) -> ViewerState:
    """Decision-tick transition: resample the attend bit from the true model,
    redraw the head yaw accordingly, and maybe start an erratic burst."""
    p = profile.prob(s_routine, s_attending, action)
    attending = bool(rng.random() < p)
    if attending:
        yaw = float(np.clip(rng.normal(0.0, 3.0), -10.0, 10.0))
    else:
        yaw = float(rng.uniform(20.0, 45.0)) * (1.0 if rng.random() < 0.5 else -1.0)
    burst = state.burst_left
    if profile.erratic_rate > 0 and rng.random() < profile.erratic_rate:
        burst = BURST_LENGTH
    return replace(state, attending=attending, yaw=yaw, burst_left=burst)


def frame_update(
    state: ViewerState,
    prompt: str | None,
    rng: np.random.Generator,
    compliance: float = 0.9,
) -> ViewerState:
    """Per-frame viewer dynamics: position jitter, erratic bursts, and the
    delayed compliant response to a gesture prompt."""
    x = state.x + float(rng.normal(0.0, 0.3))
    y = state.y + float(rng.normal(0.0, 0.3))
    x = float(np.clip(x, 40.0, 88.0))
    y = float(np.clip(y, 40.0, 80.0))
    burst_left, burst_phase = state.burst_left, state.burst_phase
    if burst_left > 0:
        x += BURST_AMPLITUDE * (1.0 if burst_phase % 2 == 0 else -1.0)
        burst_left -= 1
        burst_phase += 1

    active_prompt, will_comply, respond_in = state.active_prompt, state.will_comply, state.respond_in
    if prompt != active_prompt:
        active_prompt = prompt
        if prompt is not None:
            will_comply = bool(rng.random() < compliance)
            respond_in = RESPONSE_DELAY
        else:
            will_comply, respond_in = False, 0
    gesture: str | None = None
    pose = "ArmsDown"
    if active_prompt is not None and will_comply:
        if respond_in > 0:
            respond_in -= 1
        else:
            gesture = active_prompt
            pose = active_prompt
    return replace(
        state,
        x=x,
        y=y,
        burst_left=burst_left,
        burst_phase=burst_phase,
        active_prompt=active_prompt,
        will_comply=will_comply,
        respond_in=respond_in,
        gesture=gesture,
        pose=pose,
    )


# --- frame synthesis -----------------------------------------------------------


def synthesize_face_frame(state: ViewerState, scene: SceneConfig, rng: np.random.Generator):
    """Render the face view: noisy background, bright head ellipse, dark eye
    and mouth features shifted by yaw, and a lateral shading gradient whose
    strength grows monotonically with |yaw|.

    Returns (Frame, ground truth dict with face_rect, yaw, attending)."""
    h, w = scene.height, scene.width
    img = np.full((h, w), scene.bg_intensity)
    if scene.noise_sigma > 0:
        img += rng.normal(0.0, scene.noise_sigma, size=(h, w))

    cx, cy = round(state.x), round(state.y)
    ax, ay = scene.face_ax, scene.face_ay
    ys, xs = np.mgrid[0:h, 0:w]
    inside = ((xs - cx) / ax) ** 2 + ((ys - cy) / ay) ** 2 <= 1.0
    img[inside] = scene.face_intensity

    slope = SHADE_SLOPE_AT_45 * state.yaw / 45.0
    img[inside] += slope * (xs[inside] - cx)

    shift = int(round(FEATURE_SHIFT_FRAC * ax * state.yaw / 45.0))
    eye_dy = -int(round(0.30 * ay))
    eye_dx = int(round(0.42 * ax))
    for ex in (cx - eye_dx + shift, cx + eye_dx + shift):
        disk = (xs - ex) ** 2 + (ys - (cy + eye_dy)) ** 2 <= 9
        img[disk & inside] = scene.feature_intensity
    mouth_y = cy + int(round(0.45 * ay))
    mouth_hw = int(round(0.40 * ax))
    bar = (np.abs(xs - (cx + shift)) <= mouth_hw) & (np.abs(ys - mouth_y) <= 1)
    img[bar & inside] = scene.feature_intensity

    frame = Frame(np.clip(img, 0, 255).astype(np.uint8))
    rect = (cx - ax, cy - ay, 2 * ax + 1, 2 * ay + 1)
    truth = {"face_rect": rect, "yaw": state.yaw, "attending": state.attending}
    return frame, truth


def silhouette_top_contour(label: str, scene: SceneConfig) -> np.ndarray:
    """Per-column top row (frame coordinates) of the canonical silhouette;
    columns with no body are set to the frame height."""
    w, h = scene.width, scene.height
    cx = w // 2
    top = np.full(w, float(h))

    def span(x0, x1, y):
        top[max(0, x0) : min(w, x1)] = np.minimum(top[max(0, x0) : min(w, x1)], y)

    torso_y = int(0.56 * h)
    head_y = int(0.41 * h)
    arm_y = int(0.59 * h)
    raised_y = int(0.22 * h)
    span(cx - 20, cx + 20, torso_y)
    span(cx - 8, cx + 8, head_y)
    if label == "ArmsDown":
        span(cx - 28, cx - 20, arm_y)
        span(cx + 20, cx + 28, arm_y)
    elif label == "LeftArmRaised":
        span(cx + 20, cx + 28, arm_y)
        span(cx - 36, cx - 26, raised_y)
    elif label == "RightArmRaised":
        span(cx - 28, cx - 20, arm_y)
        span(cx + 26, cx + 36, raised_y)
    elif label == "BothArmsRaised":
        span(cx - 36, cx - 26, raised_y)
        span(cx + 26, cx + 36, raised_y)
    elif label == "Wave":
        span(cx - 28, cx - 20, arm_y)
        for i, col in enumerate(range(cx + 20, min(w, cx + 46))):
            top[col] = min(top[col], int(0.47 * h) - 1.1 * i)
    else:
        raise UnknownPoseLabel(label)
    return top


def silhouette_mask(label: str, scene: SceneConfig) -> np.ndarray:
    top = silhouette_top_contour(label, scene)
    ys = np.arange(scene.height)[:, None]
    return ys >= top[None, :]


def synthesize_body_frame(state_pose: str | None, scene: SceneConfig, rng: np.random.Generator):
    """Render the body view: the pose silhouette composited over the noisy
    background. Pose None renders background only."""
    h, w = scene.height, scene.width
    img = np.full((h, w), scene.bg_intensity)
    if scene.noise_sigma > 0:
        img += rng.normal(0.0, scene.noise_sigma, size=(h, w))
    if state_pose is not None:
        mask = silhouette_mask(state_pose, scene)
        img[mask] = scene.body_intensity
    frame = Frame(np.clip(img, 0, 255).astype(np.uint8))
    return frame, state_pose


def build_pose_references(scene: SceneConfig | None = None) -> list[PoseReference]:
    """Drape profiles of the canonical noiseless silhouettes."""
    scene = scene or SceneConfig()
    refs = []
    for label in POSE_LABELS:
        profile = drape(silhouette_mask(label, scene))
        refs.append(PoseReference(label, profile))
    return refs
