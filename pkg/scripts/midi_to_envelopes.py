#!/usr/bin/env python3
"""Convert a Standard MIDI File into facial-expression weight envelopes.

Usage:
    python3 scripts/midi_to_envelopes.py song.mid --out envelopes.csv
"""

import argparse
import sys

from imime.midi import events_to_envelopes, parse_midi, save_envelopes_csv


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("midi_file")
    ap.add_argument("--out", default="envelopes.csv")
    ap.add_argument("--attack", type=float, default=0.05)
    ap.add_argument("--release", type=float, default=0.20)
    args = ap.parse_args(argv)

    with open(args.midi_file, "rb") as f:
        division, events = parse_midi(f.read())
    envelopes = events_to_envelopes(events, division, attack=args.attack, release=args.release)
    save_envelopes_csv(envelopes, args.out)
    notes = sum(1 for e in events if e.kind == "note_on")
    print(f"{notes} notes -> {len(envelopes)} envelopes ({', '.join(e.label for e in envelopes)})")
    print(f"wrote {args.out}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
