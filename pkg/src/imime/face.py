"""Facial analysis: region optical flow, expression and motion classes,
head orientation from symmetry + edge cues, and the jerk operator."""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass, field

import numpy as np
from scipy import ndimage

from .frames import DimensionMismatch, Frame

REGION_LABELS = (
    "LeftEyebrow",
    "RightEyebrow",
    "LeftEye",
    "RightEye",
    "LeftCheek",
    "RightCheek",
    "Mouth",
)

# default facial-region geometry thresholds; all configurable
TAU_SYM = 0.06
TAU_COG = 0.25
TAU_STILL = 0.3
TAU_ZONE = 0.5
TAU_SPREAD = 0.35
TAU_EXPR = 0.85
TAU_MAG = 1.0
THETA_EDGE = 32.0
BLOCK_SIZE = 8
SEARCH_RADIUS = 7

MIN_FACE_SIDE = 14


class RectTooSmall(ValueError):
    pass


class InsufficientHistory(ValueError):
    pass


class EmptyReferenceSet(ValueError):
    pass


@dataclass(frozen=True)
class FaceRect:
    x: int
    y: int
    w: int
    h: int

    @property
    def center(self) -> tuple[float, float]:
        return (self.x + (self.w - 1) / 2.0, self.y + (self.h - 1) / 2.0)

    def validate(self, frame: Frame) -> None:
        if self.w < MIN_FACE_SIDE or self.h < MIN_FACE_SIDE:
            raise RectTooSmall(f"face rect {self.w}x{self.h} below {MIN_FACE_SIDE}px minimum")
        if self.x < 0 or self.y < 0 or self.x + self.w > frame.width or self.y + self.h > frame.height:
            raise ValueError("face rect outside frame")


def _frac_region(lo_col, hi_col, lo_row, hi_row):
    return (lo_col, hi_col, lo_row, hi_row)


@dataclass(frozen=True)
class RegionLayout:
    """Seven fractional sub-rectangles of a face rect, (col_lo, col_hi, row_lo, row_hi)."""

    regions: dict = field(
        default_factory=lambda: {
            "LeftEyebrow": _frac_region(0.10, 0.45, 0.15, 0.30),
            "RightEyebrow": _frac_region(0.55, 0.90, 0.15, 0.30),
            "LeftEye": _frac_region(0.10, 0.45, 0.30, 0.45),
            "RightEye": _frac_region(0.55, 0.90, 0.30, 0.45),
            "LeftCheek": _frac_region(0.10, 0.45, 0.50, 0.70),
            "RightCheek": _frac_region(0.55, 0.90, 0.50, 0.70),
            "Mouth": _frac_region(0.30, 0.70, 0.70, 0.90),
        }
    )


def partition_regions(rect: FaceRect, layout: RegionLayout | None = None) -> list[tuple]:
    """Split a face rect into the seven canonical pixel regions.

    Returns (x, y, w, h) tuples in REGION_LABELS order, half-open pixel
    intervals rounded from the fractional layout.
    """
    if layout is None:
        layout = RegionLayout()
    if rect.w < MIN_FACE_SIDE or rect.h < MIN_FACE_SIDE:
        raise RectTooSmall(f"face rect {rect.w}x{rect.h} below {MIN_FACE_SIDE}px minimum")
    out = []
    for label in REGION_LABELS:
        c0, c1, r0, r1 = layout.regions[label]
        x0 = rect.x + int(round(c0 * rect.w))
        x1 = rect.x + int(round(c1 * rect.w))
        y0 = rect.y + int(round(r0 * rect.h))
        y1 = rect.y + int(round(r1 * rect.h))
        w, h = x1 - x0, y1 - y0
        if w * h < 4 or w < 2 or h < 1:
            raise RectTooSmall(f"region {label} degenerates to {w}x{h}")
        out.append((x0, y0, w, h))
    return out


@dataclass(frozen=True)
class FlowField:
    """Block-matching displacements over a pixel region.

    vectors[i, j] = (dx, dy) for the block at grid cell (i, j);
    centers[i, j] = (cx, cy) block center in frame coordinates.
    """

    vectors: np.ndarray  # (ny, nx, 2) float
    centers: np.ndarray  # (ny, nx, 2) float
    region: tuple  # (x, y, w, h)

    @property
    def magnitudes(self) -> np.ndarray:
        return np.hypot(self.vectors[..., 0], self.vectors[..., 1])


def _block_edges(extent: int, size: int) -> list[tuple[int, int]]:
    return [(s, min(s + size, extent)) for s in range(0, extent, size)]


def block_flow(
    prev: Frame,
    cur: Frame,
    region: tuple,
    block_size: int = BLOCK_SIZE,
    search_radius: int = SEARCH_RADIUS,
) -> FlowField:
    """SAD block matching of `prev` content into `cur` within a region.

    Ties are broken toward the smallest displacement magnitude, then
    smallest |dy|, then smallest |dx|.
    """
    if not prev.same_size(cur):
        raise DimensionMismatch("frames differ in size")
    x, y, w, h = region
    H, W = prev.pixels.shape
    if x < 0 or y < 0 or x + w > W or y + h > H:
        raise ValueError("region outside frame")
    p = prev.pixels[y : y + h, x : x + w].astype(np.int64)
    c = cur.pixels.astype(np.int64)

    rows = _block_edges(h, block_size)
    cols = _block_edges(w, block_size)
    ny, nx = len(rows), len(cols)
    best_sad = np.full((ny, nx), np.inf)
    best = np.zeros((ny, nx, 2))

    candidates = sorted(
        (
            (dx, dy)
            for dy in range(-search_radius, search_radius + 1)
            for dx in range(-search_radius, search_radius + 1)
        ),
        key=lambda d: (d[0] * d[0] + d[1] * d[1], abs(d[1]), abs(d[0]), d[1], d[0]),
    )
    for dx, dy in candidates:
        r0 = max(0, -(y + dy))
        r1 = min(h, H - (y + dy))
        c0 = max(0, -(x + dx))
        c1 = min(w, W - (x + dx))
        if r0 >= r1 or c0 >= c1:
            continue
        diff = np.full((h, w), np.inf)
        diff[r0:r1, c0:c1] = np.abs(
            p[r0:r1, c0:c1] - c[y + dy + r0 : y + dy + r1, x + dx + c0 : x + dx + c1]
        )
        for i, (ra, rb) in enumerate(rows):
            for j, (ca, cb) in enumerate(cols):
                sad = diff[ra:rb, ca:cb].sum()
                if sad < best_sad[i, j]:
                    best_sad[i, j] = sad
                    best[i, j] = (dx, dy)

    centers = np.zeros((ny, nx, 2))
    for i, (ra, rb) in enumerate(rows):
        for j, (ca, cb) in enumerate(cols):
            centers[i, j] = (x + (ca + cb - 1) / 2.0, y + (ra + rb - 1) / 2.0)
    return FlowField(vectors=best, centers=centers, region=(x, y, w, h))


def characteristic_flow(fields: list[FlowField]) -> np.ndarray:
    """Concatenate mean (dx, dy) per region into a 14-vector (REGION_LABELS order)."""
    if len(fields) != 7:
        raise ValueError(f"expected 7 region flow fields, got {len(fields)}")
    parts = []
    for f in fields:
        parts.extend(f.vectors.reshape(-1, 2).mean(axis=0))
    return np.array(parts)


def classify_expression(
    cf: np.ndarray,
    refs: list[tuple[str, np.ndarray]],
    tau_expr: float = TAU_EXPR,
    tau_mag: float = TAU_MAG,
) -> str:
    """Nearest-reference label by cosine similarity, gated on magnitude."""
    if not refs:
        raise EmptyReferenceSet("no expression references")
    norm = float(np.linalg.norm(cf))
    if norm < tau_mag:
        return "Neutral"
    best_label, best_sim = "Neutral", -np.inf
    for label, ref in refs:
        rnorm = float(np.linalg.norm(ref))
        if rnorm == 0.0:
            raise ValueError(f"zero reference vector for {label}")
        sim = float(np.dot(cf, ref)) / (norm * rnorm)
        if sim > best_sim:
            best_label, best_sim = label, sim
    return best_label if best_sim >= tau_expr else "Neutral"


def classify_motion(
    field: FlowField,
    region_means: np.ndarray,
    tau_still: float = TAU_STILL,
    tau_zone: float = TAU_ZONE,
    tau_spread: float = TAU_SPREAD,
) -> str:
    """Still / Rigid / NonRigid from a whole-face flow field plus the 14-vector.

    Rigid needs motion in all seven zones AND a wide spatial spread of the
    peak blocks; spread = (std_x + std_y of peak centers) / face diagonal.
    """
    mags = field.magnitudes
    if mags.mean() < tau_still:
        return "Still"
    zone = region_means.reshape(7, 2)
    zone_mag = np.hypot(zone[:, 0], zone[:, 1])
    all_zones = bool((zone_mag > tau_zone).all())
    nonzero = mags[mags > 0]
    spread = 0.0
    if nonzero.size:
        thresh = np.percentile(nonzero, 75)
        peaks = field.centers[mags >= thresh]
        if len(peaks) > 1:
            _, _, w, h = field.region
            diag = float(np.hypot(w, h))
            spread = float(peaks[:, 0].std() + peaks[:, 1].std()) / diag
    if all_zones and spread > tau_spread:
        return "Rigid"
    return "NonRigid"


def symmetry_score(frame: Frame, rect: FaceRect) -> float:
    """Mean mirrored pixel distance in [0, 1] after a 3x3 median filter."""
    rect.validate(frame)
    sub = frame.pixels[rect.y : rect.y + rect.h, rect.x : rect.x + rect.w].astype(float)
    med = ndimage.median_filter(sub, size=3, mode="reflect")
    return float(np.abs(med - med[:, ::-1]).mean() / 255.0)


def edge_cog_offset(frame: Frame, rect: FaceRect, theta_edge: float = THETA_EDGE) -> float:
    """Horizontal offset in [-1, 1] of the centroid of significant edges.

    Positive means edge mass right of the rect centerline. Gradient is a
    3x3 Sobel normalized to intensity units per pixel step.
    """
    rect.validate(frame)
    sub = frame.pixels[rect.y : rect.y + rect.h, rect.x : rect.x + rect.w].astype(float)
    gx = ndimage.sobel(sub, axis=1, mode="reflect") / 4.0
    gy = ndimage.sobel(sub, axis=0, mode="reflect") / 4.0
    mag = np.hypot(gx, gy)
    sig = mag >= theta_edge
    if not sig.any():
        return 0.0
    weights = mag[sig]
    xs = np.nonzero(sig)[1].astype(float)
    cog = float((xs * weights).sum() / weights.sum())
    half = (rect.w - 1) / 2.0
    return float(np.clip((cog - half) / half, -1.0, 1.0))


@dataclass(frozen=True)
class OrientationEstimate:
    symmetry: float
    edge_offset: float
    label: str  # Left | Frontal | Right
    confidence: float


def fuse_orientation(
    s: float,
    e: float,
    prev_label: str = "Frontal",
    tau_sym: float = TAU_SYM,
    tau_cog: float = TAU_COG,
) -> OrientationEstimate:
    """Combine the symmetry and edge cues into a head-orientation estimate.

    Frontal requires both cues below threshold; otherwise the edge sign
    decides Left/Right, keeping the previous label when the edge cue is
    silent (hysteresis).
    """
    fs = 1.0 - min(1.0, s / tau_sym)
    fe = 1.0 - min(1.0, abs(e) / tau_cog)
    if s < tau_sym and abs(e) < tau_cog:
        return OrientationEstimate(s, e, "Frontal", fs * fe)
    conf = min(1.0, s / tau_sym) * min(1.0, abs(e) / tau_cog)
    if e < 0:
        label = "Left"
    elif e > 0:
        label = "Right"
    else:
        label = prev_label
        conf = min(1.0, s / tau_sym)
    return OrientationEstimate(s, e, label, conf)


class HeadTrack:
    """Ring buffer of recent face-rect centers; single writer."""

    def __init__(self, capacity: int = 16):
        if capacity < 5:
            raise ValueError("capacity must be >= 5")
        self._buf: deque = deque(maxlen=capacity)

    def push(self, x: float, y: float) -> None:
        self._buf.append((float(x), float(y)))

    def __len__(self) -> int:
        return len(self._buf)

    def positions(self) -> list[tuple[float, float]]:
        return list(self._buf)


def estimate_jerk(track: HeadTrack) -> float:
    """Euclidean norm of the 4th-order finite difference of head position."""
    pts = track.positions()
    if len(pts) < 5:
        raise InsufficientHistory(f"need 5 positions, have {len(pts)}")
    p = np.array(pts[-5:])  # oldest .. newest
    d = p[4] - 4 * p[3] + 6 * p[2] - 4 * p[1] + p[0]
    return float(np.hypot(d[0], d[1]))


class BrightnessBlobDetector:
    """Injected face-finder stand-in for synthetic frames: bounding box of
    the largest bright blob, grown to the minimum legal face size."""

    def __init__(self, threshold: float = 130.0):
        self.threshold = threshold

    def detect(self, frame: Frame) -> FaceRect | None:
        mask = frame.pixels.astype(float) >= self.threshold
        if not mask.any():
            return None
        labeled, n = ndimage.label(mask)
        if n > 1:
            sizes = ndimage.sum(mask, labeled, index=range(1, n + 1))
            mask = labeled == (int(np.argmax(sizes)) + 1)
        ys, xs = np.nonzero(mask)
        x0, x1 = int(xs.min()), int(xs.max()) + 1
        y0, y1 = int(ys.min()), int(ys.max()) + 1
        # pad out to the minimum rect size, staying inside the frame
        while x1 - x0 < MIN_FACE_SIDE:
            if x0 > 0:
                x0 -= 1
            elif x1 < frame.width:
                x1 += 1
            else:
                return None
        while y1 - y0 < MIN_FACE_SIDE:
            if y0 > 0:
                y0 -= 1
            elif y1 < frame.height:
                y1 += 1
            else:
                return None
        return FaceRect(x0, y0, x1 - x0, y1 - y0)
