"""Character pose math: morph-target blending, skeletal forward kinematics,
linear blend skinning, 1-D gradient noise for lifelike parameter jitter,
and pose interpolation. Emits poses as data only; no rendering."""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field

import numpy as np

MORPH_LIBRARY_SIZE = 42


class LengthMismatch(ValueError):
    pass


class AngleCountMismatch(ValueError):
    pass


class WeightSumError(ValueError):
    pass


class LayoutMismatch(ValueError):
    pass


# --- morph targets ----------------------------------------------------------


@dataclass(frozen=True)
class MorphTarget:
    label: str
    deltas: np.ndarray  # (n_vertices, 3)


def blend_morphs(base: np.ndarray, targets: list[MorphTarget], weights: np.ndarray) -> np.ndarray:
    """base + sum_j w_j * delta_j, weights in [0, 1]."""
    base = np.asarray(base, float)
    weights = np.asarray(weights, float)
    if len(targets) != len(weights):
        raise LengthMismatch(f"{len(targets)} targets vs {len(weights)} weights")
    out = base.copy()
    for t, w in zip(targets, weights):
        if t.deltas.shape != base.shape:
            raise LengthMismatch(f"target {t.label} shape {t.deltas.shape} != base {base.shape}")
        out += w * t.deltas
    return out


# --- skeleton and forward kinematics -----------------------------------------


@dataclass(frozen=True)
class Bone:
    name: str
    parent: int | None  # index of parent, None for the root
    offset: np.ndarray  # rest offset from the parent joint (3,)
    length: float
    axis: np.ndarray = field(default_factory=lambda: np.array([0.0, 0.0, 1.0]))


@dataclass(frozen=True)
class Skeleton:
    bones: list[Bone]

    def __post_init__(self):
        roots = [i for i, b in enumerate(self.bones) if b.parent is None]
        if len(roots) != 1:
            raise ValueError(f"skeleton must have exactly one root, found {len(roots)}")
        for i, b in enumerate(self.bones):
            if b.parent is not None and b.parent >= i:
                raise ValueError("bones must be topologically ordered (parent before child)")


def _rotation(axis: np.ndarray, angle: float) -> np.ndarray:
    """Rodrigues rotation as a 4x4 homogeneous matrix."""
    a = np.asarray(axis, float)
    a = a / np.linalg.norm(a)
    x, y, z = a
    c, s = math.cos(angle), math.sin(angle)
    C = 1.0 - c
    m = np.eye(4)
    m[:3, :3] = [
        [c + x * x * C, x * y * C - z * s, x * z * C + y * s],
        [y * x * C + z * s, c + y * y * C, y * z * C - x * s],
        [z * x * C - y * s, z * y * C + x * s, c + z * z * C],
    ]
    return m


def _translation(v: np.ndarray) -> np.ndarray:
    m = np.eye(4)
    m[:3, 3] = v
    return m


def forward_kinematics(skel: Skeleton, angles: np.ndarray) -> list[np.ndarray]:
    """Global 4x4 transform per bone: parent global times the bone's local
    (translate by rest offset, then rotate about the bone axis)."""
    if len(angles) != len(skel.bones):
        raise AngleCountMismatch(f"{len(angles)} angles for {len(skel.bones)} bones")
    globals_: list[np.ndarray] = []
    for bone, angle in zip(skel.bones, angles):
        local = _translation(bone.offset) @ _rotation(bone.axis, float(angle))
        if bone.parent is None:
            globals_.append(local)
        else:
            globals_.append(globals_[bone.parent] @ local)
    return globals_


def bone_tip(skel: Skeleton, transforms: list[np.ndarray], index: int) -> np.ndarray:
    """World position of the far end of a bone (its length along local x)."""
    tip = transforms[index] @ np.array([skel.bones[index].length, 0.0, 0.0, 1.0])
    return tip[:3]


# --- skinning -----------------------------------------------------------------


def skin(
    base: np.ndarray,
    transforms: list[np.ndarray],
    rest_transforms: list[np.ndarray],
    weights: list[list[tuple[int, float]]],
) -> np.ndarray:
    """Linear blend skinning: v' = sum_b w_b * (T_b @ inv(T_rest_b)) v."""
    base = np.asarray(base, float)
    if len(weights) != len(base):
        raise LengthMismatch("one weight list per vertex required")
    deltas = [t @ np.linalg.inv(r) for t, r in zip(transforms, rest_transforms)]
    out = np.zeros_like(base)
    for vi, (v, wlist) in enumerate(zip(base, weights)):
        total = sum(w for _, w in wlist)
        if abs(total - 1.0) > 1e-6:
            raise WeightSumError(f"vertex {vi} weights sum to {total}")
        hom = np.append(v, 1.0)
        acc = np.zeros(4)
        for b, w in wlist:
            acc += w * (deltas[b] @ hom)
        out[vi] = acc[:3]
    return out


# --- gradient noise -----------------------------------------------------------

_M64 = (1 << 64) - 1


def _mix(seed: int, i: int) -> int:
    z = (seed * 0x9E3779B97F4A7C15 + i * 0xBF58476D1CE4E5B9 + 0x94D049BB133111EB) & _M64
    z ^= z >> 30
    z = (z * 0xBF58476D1CE4E5B9) & _M64
    z ^= z >> 27
    z = (z * 0x94D049BB133111EB) & _M64
    z ^= z >> 31
    return z


def _gradient(seed: int, i: int) -> float:
    return (_mix(seed, i) >> 11) / float(1 << 53) * 2.0 - 1.0


def perlin_1d(seed: int, t: float) -> float:
    """Classic 1-D gradient noise in [-1, 1]; zero at integer lattice points."""
    i = math.floor(t)
    x = t - i
    g0 = _gradient(seed, i)
    g1 = _gradient(seed, i + 1)
    u = x * x * (3.0 - 2.0 * x)  # smoothstep
    value = g0 * x * (1.0 - u) + g1 * (x - 1.0) * u
    return 2.0 * value  # theoretical extrema are +/- 0.5


# --- poses ----------------------------------------------------------------------


@dataclass(frozen=True)
class PoseParams:
    angles: np.ndarray  # per-bone rotation (radians)
    morph_weights: np.ndarray  # per-morph blend weight in [0, 1]


BINOMIAL_5 = np.array([1.0, 4.0, 6.0, 4.0, 1.0]) / 16.0


def perturb_params(
    params: PoseParams,
    seed: int,
    t: float,
    amplitude: float,
    kernel: np.ndarray = BINOMIAL_5,
) -> PoseParams:
    """Add temporally smoothed gradient noise to every pose parameter.

    Each scalar gets its own derived noise seed; the raw stream is smoothed
    by discrete convolution with `kernel` (unit sample spacing) before being
    scaled and added. Morph weights are re-clamped to [0, 1].
    """
    if amplitude < 0:
        raise ValueError("amplitude must be >= 0")
    kernel = np.asarray(kernel, float)
    center = (len(kernel) - 1) / 2.0

    def noise(k: int) -> float:
        sub = _mix(seed, 7919 + k)
        return sum(c * perlin_1d(sub, t + (j - center)) for j, c in enumerate(kernel))

    n = len(params.angles)
    angles = params.angles + amplitude * np.array([noise(k) for k in range(n)])
    weights = params.morph_weights + amplitude * np.array(
        [noise(n + k) for k in range(len(params.morph_weights))]
    )
    return PoseParams(angles=angles, morph_weights=np.clip(weights, 0.0, 1.0))


def blend_poses(a: PoseParams, b: PoseParams, t: float) -> PoseParams:
    """Shortest-arc interpolation of angles; linear interpolation of weights."""
    if a.angles.shape != b.angles.shape or a.morph_weights.shape != b.morph_weights.shape:
        raise LayoutMismatch("pose parameter layouts differ")
    diff = np.mod(b.angles - a.angles + math.pi, 2.0 * math.pi) - math.pi
    angles = a.angles + t * diff
    weights = (1.0 - t) * a.morph_weights + t * b.morph_weights
    return PoseParams(angles=angles, morph_weights=weights)


# --- shipped face mesh and morph library ------------------------------------------


def build_face_mesh(nx: int = 8, ny: int = 8) -> np.ndarray:
    """Low-poly face patch: an nx-by-ny vertex grid on the unit square, z = 0."""
    xs, ys = np.meshgrid(np.linspace(0, 1, nx), np.linspace(0, 1, ny))
    return np.stack([xs.ravel(), ys.ravel(), np.zeros(nx * ny)], axis=1)


def build_morph_library(nx: int = 8, ny: int = 8) -> tuple[np.ndarray, list[MorphTarget]]:
    """The shipped 42-entry expression-primitive library on the low-poly face.

    Each target lifts a localized Gaussian bump of the face patch along z
    (magnitude and center per feature), covering eyebrow raises, eye blinks,
    cheek puffs, mouth shapes, and tongue positions.
    """
    base = build_face_mesh(nx, ny)
    features = [
        ("BrowRaiseLeft", (0.28, 0.78)),
        ("BrowRaiseRight", (0.72, 0.78)),
        ("BrowFurrowLeft", (0.35, 0.72)),
        ("BrowFurrowRight", (0.65, 0.72)),
        ("EyeWideLeft", (0.28, 0.62)),
        ("EyeWideRight", (0.72, 0.62)),
        ("BlinkLeft", (0.28, 0.58)),
        ("BlinkRight", (0.72, 0.58)),
        ("CheekPuffLeft", (0.22, 0.42)),
        ("CheekPuffRight", (0.78, 0.42)),
        ("Squint", (0.5, 0.6)),
        ("NoseWrinkle", (0.5, 0.5)),
        ("MouthOpen", (0.5, 0.22)),
        ("MouthWide", (0.5, 0.25)),
        ("MouthPucker", (0.5, 0.2)),
        ("SmileLeft", (0.35, 0.28)),
        ("SmileRight", (0.65, 0.28)),
        ("FrownLeft", (0.35, 0.18)),
        ("FrownRight", (0.65, 0.18)),
        ("LipCornerUp", (0.5, 0.3)),
        ("LipCornerDown", (0.5, 0.15)),
        ("JawLeft", (0.4, 0.1)),
        ("JawRight", (0.6, 0.1)),
        ("JawDrop", (0.5, 0.08)),
        ("TongueUp", (0.5, 0.24)),
        ("TongueDown", (0.5, 0.16)),
        ("TongueLeft", (0.44, 0.2)),
        ("TongueRight", (0.56, 0.2)),
        ("Smile", (0.5, 0.27)),
        ("Frown", (0.5, 0.17)),
        ("Surprise", (0.5, 0.7)),
        ("Grimace", (0.5, 0.33)),
        ("Pout", (0.5, 0.19)),
        ("Sneer", (0.55, 0.35)),
        ("Kiss", (0.5, 0.21)),
        ("Yawn", (0.5, 0.12)),
        ("WinkLeft", (0.28, 0.6)),
        ("WinkRight", (0.72, 0.6)),
        ("BrowsUp", (0.5, 0.8)),
        ("BrowsDown", (0.5, 0.74)),
        ("CheeksIn", (0.5, 0.42)),
        ("Neutral2", (0.5, 0.45)),
    ]
    assert len(features) == MORPH_LIBRARY_SIZE
    targets = []
    for idx, (label, (cx, cy)) in enumerate(features):
        d2 = (base[:, 0] - cx) ** 2 + (base[:, 1] - cy) ** 2
        amp = 0.08 + 0.002 * (idx % 7)
        dz = amp * np.exp(-d2 / 0.02)
        deltas = np.zeros_like(base)
        deltas[:, 2] = dz
        targets.append(MorphTarget(label, deltas))
    return base, targets


# canonical 12-label mapping for MIDI pitch classes
PITCH_CLASS_MORPHS = (
    "Smile",
    "Frown",
    "MouthOpen",
    "MouthWide",
    "MouthPucker",
    "BrowRaiseLeft",
    "BrowRaiseRight",
    "Surprise",
    "Squint",
    "TongueUp",
    "WinkLeft",
    "WinkRight",
)


def dump_mesh_csv(mesh: np.ndarray, path) -> None:
    with open(path, "w", newline="") as f:
        writer = csv.writer(f)
        writer.writerow(["x", "y", "z"])
        for v in mesh:
            writer.writerow([f"{c:.9g}" for c in v])
