"""Standard MIDI File parsing and mapping of note events to timed
facial-expression weight envelopes."""

from __future__ import annotations

import csv
import warnings
from dataclasses import dataclass

from .animation import PITCH_CLASS_MORPHS

DEFAULT_TEMPO = 500_000  # microseconds per quarter note
DEFAULT_ATTACK = 0.05
DEFAULT_RELEASE = 0.20


class MidiError(ValueError):
    pass


class BadHeader(MidiError):
    pass


class TruncatedChunk(MidiError):
    pass


class UnsupportedFormat(MidiError):
    pass


class BadVLQ(MidiError):
    pass


@dataclass(frozen=True)
class MidiEvent:
    tick: int  # absolute, after track merge
    channel: int  # -1 for meta/sysex
    kind: str  # note_on | note_off | tempo | other
    pitch: int = 0
    velocity: int = 0
    tempo: int = 0  # microseconds per quarter, for kind == "tempo"
    raw: bytes = b""


def read_vlq(data: bytes, pos: int) -> tuple[int, int]:
    """Variable-length quantity: 7 bits per byte, MSB continues, max 4 bytes."""
    value = 0
    for n in range(4):
        if pos >= len(data):
            raise TruncatedChunk("VLQ runs past end of chunk")
        byte = data[pos]
        pos += 1
        value = (value << 7) | (byte & 0x7F)
        if not byte & 0x80:
            return value, pos
    raise BadVLQ("VLQ longer than 4 bytes")


def _parse_track(data: bytes) -> list[MidiEvent]:
    events = []
    pos = 0
    tick = 0
    running_status = None
    while pos < len(data):
        delta, pos = read_vlq(data, pos)
        tick += delta
        if pos >= len(data):
            raise TruncatedChunk("event missing after delta time")
        status = data[pos]
        if status & 0x80:
            pos += 1
            if status < 0xF0:
                running_status = status
        else:
            if running_status is None:
                raise MidiError("data byte with no running status")
            status = running_status

        if status == 0xFF:  # meta
            if pos >= len(data):
                raise TruncatedChunk("meta event truncated")
            meta_type = data[pos]
            pos += 1
            length, pos = read_vlq(data, pos)
            payload = data[pos : pos + length]
            if len(payload) != length:
                raise TruncatedChunk("meta payload truncated")
            pos += length
            if meta_type == 0x51 and length == 3:
                tempo = (payload[0] << 16) | (payload[1] << 8) | payload[2]
                events.append(MidiEvent(tick, -1, "tempo", tempo=tempo))
            else:
                events.append(MidiEvent(tick, -1, "other", raw=bytes([0xFF, meta_type]) + payload))
        elif status in (0xF0, 0xF7):  # sysex
            length, pos = read_vlq(data, pos)
            payload = data[pos : pos + length]
            if len(payload) != length:
                raise TruncatedChunk("sysex payload truncated")
            pos += length
            events.append(MidiEvent(tick, -1, "other", raw=bytes([status]) + payload))
        else:
            kind_nibble = status & 0xF0
            channel = status & 0x0F
            n_data = 1 if kind_nibble in (0xC0, 0xD0) else 2
            payload = data[pos : pos + n_data]
            if len(payload) != n_data:
                raise TruncatedChunk("channel event truncated")
            pos += n_data
            if kind_nibble == 0x90:
                pitch, vel = payload
                if vel == 0:  # velocity-0 note-on is a note-off
                    events.append(MidiEvent(tick, channel, "note_off", pitch=pitch))
                else:
                    events.append(MidiEvent(tick, channel, "note_on", pitch=pitch, velocity=vel))
            elif kind_nibble == 0x80:
                events.append(MidiEvent(tick, channel, "note_off", pitch=payload[0]))
            else:
                events.append(MidiEvent(tick, channel, "other", raw=bytes([status]) + payload))
    return events


def parse_midi(data: bytes) -> tuple[int, list[MidiEvent]]:
    """Parse an SMF byte string into (division, merged time-sorted events)."""
    if len(data) < 14 or data[0:4] != b"MThd":
        raise BadHeader("missing MThd chunk")
    header_len = int.from_bytes(data[4:8], "big")
    if header_len != 6:
        raise BadHeader(f"MThd length {header_len}, expected 6")
    fmt = int.from_bytes(data[8:10], "big")
    n_tracks = int.from_bytes(data[10:12], "big")
    division = int.from_bytes(data[12:14], "big")
    if fmt == 2:
        raise UnsupportedFormat("format-2 files are not supported")
    if fmt not in (0, 1):
        raise BadHeader(f"unknown SMF format {fmt}")
    if division & 0x8000:
        raise UnsupportedFormat("SMPTE time division not supported")

    pos = 8 + header_len
    tracks = []
    while len(tracks) < n_tracks:
        if pos + 8 > len(data):
            raise TruncatedChunk("expected MTrk chunk")
        chunk_id = data[pos : pos + 4]
        chunk_len = int.from_bytes(data[pos + 4 : pos + 8], "big")
        body = data[pos + 8 : pos + 8 + chunk_len]
        if len(body) != chunk_len:
            raise TruncatedChunk("track chunk body truncated")
        pos += 8 + chunk_len
        if chunk_id != b"MTrk":
            continue  # alien chunks are skipped per the SMF spec
        tracks.append(_parse_track(body))

    merged = [ev for track in tracks for ev in track]
    merged.sort(key=lambda ev: ev.tick)  # stable: ties keep track order
    return division, merged


# --- expression envelopes -----------------------------------------------------


@dataclass(frozen=True)
class ExpressionEnvelope:
    label: str
    points: list[tuple[float, float]]  # (seconds, weight), times strictly increasing


def _tick_to_seconds_table(events: list[MidiEvent], division: int) -> list[tuple[int, float, int]]:
    """Tempo map entries (tick, seconds at that tick, us-per-quarter from there)."""
    table = [(0, 0.0, DEFAULT_TEMPO)]
    for ev in events:
        if ev.kind == "tempo":
            t0, s0, us = table[-1]
            seconds = s0 + (ev.tick - t0) * us / 1e6 / division
            table.append((ev.tick, seconds, ev.tempo))
    return table


def _seconds_at(table, division: int, tick: int) -> float:
    entry = table[0]
    for cand in table:
        if cand[0] <= tick:
            entry = cand
        else:
            break
    t0, s0, us = entry
    return s0 + (tick - t0) * us / 1e6 / division


def _note_envelope(label, start, end, peak, attack, release):
    points = [(start, 0.0)]
    if end <= start + attack:
        # note released before full attack: peak scales with elapsed fraction
        reached = peak * (end - start) / attack
        points.append((end, reached))
        points.append((end + release, 0.0))
    else:
        points.append((start + attack, peak))
        points.append((end, peak))
        points.append((end + release, 0.0))
    return ExpressionEnvelope(label, points)


def _envelope_value(env: ExpressionEnvelope, t: float) -> float:
    pts = env.points
    if t <= pts[0][0] or t >= pts[-1][0]:
        return 0.0
    for (t0, w0), (t1, w1) in zip(pts, pts[1:]):
        if t0 <= t <= t1:
            if t1 == t0:
                return max(w0, w1)
            return w0 + (w1 - w0) * (t - t0) / (t1 - t0)
    return 0.0


def _merge_max(a: ExpressionEnvelope, b: ExpressionEnvelope) -> ExpressionEnvelope:
    """Pointwise maximum of two piecewise-linear envelopes."""
    knots = sorted({t for t, _ in a.points} | {t for t, _ in b.points})
    # add crossing points between segments so the max stays piecewise linear
    extra = []
    for t0, t1 in zip(knots, knots[1:]):
        a0, b0 = _envelope_value(a, t0), _envelope_value(b, t0)
        a1, b1 = _envelope_value(a, t1), _envelope_value(b, t1)
        d0, d1 = a0 - b0, a1 - b1
        if d0 * d1 < 0:
            extra.append(t0 + (t1 - t0) * d0 / (d0 - d1))
    times = sorted(set(knots) | set(extra))
    points = [(t, max(_envelope_value(a, t), _envelope_value(b, t))) for t in times]
    return ExpressionEnvelope(a.label, points)


def events_to_envelopes(
    events: list[MidiEvent],
    division: int,
    mapping: dict[int, str] | None = None,
    attack: float = DEFAULT_ATTACK,
    release: float = DEFAULT_RELEASE,
) -> list[ExpressionEnvelope]:
    """Open an envelope per note-on (peak = velocity/127) and close it at the
    matching note-off; same-label overlaps merge by pointwise maximum."""
    if mapping is None:
        mapping = {pc: PITCH_CLASS_MORPHS[pc] for pc in range(12)}
    table = _tick_to_seconds_table(events, division)
    active: dict[tuple[int, int], tuple[float, float]] = {}
    raw: list[ExpressionEnvelope] = []
    for ev in events:
        if ev.kind == "note_on":
            active[(ev.channel, ev.pitch)] = (
                _seconds_at(table, division, ev.tick),
                ev.velocity / 127.0,
            )
        elif ev.kind == "note_off":
            key = (ev.channel, ev.pitch)
            if key not in active:
                warnings.warn(f"unmatched note-off for pitch {ev.pitch}", stacklevel=2)
                continue
            start, peak = active.pop(key)
            end = _seconds_at(table, division, ev.tick)
            label = mapping.get(ev.pitch % 12)
            if label is None:
                continue
            raw.append(_note_envelope(label, start, end, peak, attack, release))

    by_label: dict[str, ExpressionEnvelope] = {}
    order: list[str] = []
    for env in raw:
        if env.label in by_label:
            by_label[env.label] = _merge_max(by_label[env.label], env)
        else:
            by_label[env.label] = env
            order.append(env.label)
    out = []
    for label in order:
        env = by_label[label]
        pts = [(t, min(1.0, max(0.0, w))) for t, w in env.points]
        dedup = [pts[0]]
        for t, w in pts[1:]:
            if t > dedup[-1][0]:
                dedup.append((t, w))
        out.append(ExpressionEnvelope(label, dedup))
    return out


def save_envelopes_csv(envelopes: list[ExpressionEnvelope], path) -> None:
    with open(path, "w", newline="") as f:
        writer = csv.writer(f)
        writer.writerow(["label", "time", "weight"])
        for env in envelopes:
            for t, w in env.points:
                writer.writerow([env.label, f"{t:.9g}", f"{w:.9g}"])
