"""Upper-body analysis: Gaussian background model, foreground segmentation,
1-D cloth drape profile, and pose classification by correlation."""

from __future__ import annotations

import csv
from dataclasses import dataclass

import numpy as np
from scipy import ndimage

from .frames import DimensionMismatch, Frame

VAR_FLOOR = 4.0
TAU_MAHAL = 3.0
TAU_POSE = 0.9

DRAPE_GRAVITY = 2.0
DRAPE_COUPLING = 0.25
DRAPE_TOL = 0.05
DRAPE_MAX_ITERS = 2000


class TooFewFrames(ValueError):
    pass


class EmptyReferenceSet(ValueError):
    pass


class LengthMismatch(ValueError):
    pass


@dataclass(frozen=True)
class BackgroundModel:
    mean: np.ndarray  # (h, w) float
    var: np.ndarray  # (h, w) float, >= VAR_FLOOR

    @property
    def shape(self):
        return self.mean.shape


@dataclass(frozen=True)
class PoseReference:
    label: str
    profile: np.ndarray


def train_background(frames: list[Frame], var_floor: float = VAR_FLOOR) -> BackgroundModel:
    """Per-pixel sample mean and population variance, variance floored."""
    if len(frames) < 2:
        raise TooFewFrames(f"need >= 2 frames, got {len(frames)}")
    shape = frames[0].pixels.shape
    for f in frames[1:]:
        if f.pixels.shape != shape:
            raise DimensionMismatch("training frames differ in size")
    stack = np.stack([f.pixels.astype(float) for f in frames])
    mean = stack.mean(axis=0)
    var = np.maximum(stack.var(axis=0), var_floor)
    return BackgroundModel(mean=mean, var=var)


def segment_foreground(model: BackgroundModel, frame: Frame, tau_mahal: float = TAU_MAHAL) -> np.ndarray:
    """Boolean mask: |I - mu| / sigma > tau, then one 3x3 majority-vote pass."""
    if frame.pixels.shape != model.shape:
        raise DimensionMismatch("frame does not match background model")
    dist = np.abs(frame.pixels.astype(float) - model.mean) / np.sqrt(model.var)
    raw = dist > tau_mahal
    votes = ndimage.uniform_filter(raw.astype(float), size=3, mode="constant")
    return votes > 0.5


def drape(
    mask: np.ndarray,
    gravity: float = DRAPE_GRAVITY,
    coupling: float = DRAPE_COUPLING,
    tol: float = DRAPE_TOL,
    max_iters: int = DRAPE_MAX_ITERS,
) -> np.ndarray:
    """Drop a 1-node-per-column cloth onto the mask and return the settled
    profile, normalized to [0, 1] (constant profiles normalize to all zeros).

    Each iteration every node falls by `gravity` until blocked by the topmost
    foreground pixel in its column, then relaxes toward its neighbors'
    average with weight `coupling`, never penetrating the support.
    """
    h, w = mask.shape
    # settle limit per column: row of the topmost foreground pixel, else the floor
    limits = np.full(w, float(h))
    cols = mask.any(axis=0)
    if cols.any():
        limits[cols] = mask.argmax(axis=0)[cols].astype(float)
    y = np.zeros(w)
    for _ in range(max_iters):
        fallen = np.minimum(y + gravity, limits)
        padded = np.concatenate(([fallen[0]], fallen, [fallen[-1]]))
        neighbor_avg = (padded[:-2] + padded[2:]) / 2.0
        relaxed = np.minimum(fallen + coupling * (neighbor_avg - fallen), limits)
        if np.abs(relaxed - y).max() < tol:
            y = relaxed
            break
        y = relaxed
    heights = h - y  # measure up from the frame bottom
    span = heights.max() - heights.min()
    if span == 0:
        return np.zeros(w)
    return (heights - heights.min()) / span


def classify_pose(
    profile: np.ndarray,
    refs: list[PoseReference],
    tau_pose: float = TAU_POSE,
) -> str:
    """Label of the reference with the highest Pearson correlation, or Unknown."""
    if not refs:
        raise EmptyReferenceSet("no pose references")
    best_label, best_r = "Unknown", -np.inf
    for ref in refs:
        if len(ref.profile) != len(profile):
            raise LengthMismatch(f"reference {ref.label} length {len(ref.profile)} != {len(profile)}")
        r = _pearson(profile, ref.profile)
        if r > best_r:
            best_label, best_r = ref.label, r
    return best_label if best_r >= tau_pose else "Unknown"


def _pearson(a: np.ndarray, b: np.ndarray) -> float:
    a = np.asarray(a, float)
    b = np.asarray(b, float)
    sa, sb = a.std(), b.std()
    if sa == 0 or sb == 0:
        return 0.0
    return float(((a - a.mean()) * (b - b.mean())).mean() / (sa * sb))


def save_background_csv(model: BackgroundModel, path) -> None:
    h, w = model.shape
    with open(path, "w", newline="") as f:
        writer = csv.writer(f)
        writer.writerow(["row", "kind"] + [f"c{i}" for i in range(w)])
        for r in range(h):
            writer.writerow([r, "mean"] + [f"{v:.6g}" for v in model.mean[r]])
            writer.writerow([r, "var"] + [f"{v:.6g}" for v in model.var[r]])


def load_background_csv(path) -> BackgroundModel:
    means, vars_ = {}, {}
    with open(path, newline="") as f:
        reader = csv.reader(f)
        next(reader)
        for row in reader:
            r, kind = int(row[0]), row[1]
            vals = np.array([float(v) for v in row[2:]])
            (means if kind == "mean" else vars_)[r] = vals
    h = len(means)
    mean = np.stack([means[r] for r in range(h)])
    var = np.stack([vars_[r] for r in range(h)])
    return BackgroundModel(mean=mean, var=var)


def save_pose_references_csv(refs: list[PoseReference], path) -> None:
    with open(path, "w", newline="") as f:
        writer = csv.writer(f)
        writer.writerow(["label"] + [f"c{i}" for i in range(len(refs[0].profile))])
        for ref in refs:
            writer.writerow([ref.label] + [f"{v:.8g}" for v in ref.profile])


def load_pose_references_csv(path) -> list[PoseReference]:
    refs = []
    with open(path, newline="") as f:
        reader = csv.reader(f)
        next(reader)
        for row in reader:
            refs.append(PoseReference(row[0], np.array([float(v) for v in row[1:]])))
    return refs
