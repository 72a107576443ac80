#!/usr/bin/env python3
"""From raw tracker samples to windowed feature signals, end to end.

Builds a synthetic recording (fixation plateaus separated by rapid jumps,
with dropped samples), then walks the full path: gap interpolation, velocity
based fixation/saccade detection, pupil smoothing and divisive baseline
normalization, ray-cast hits on scene objects with dwell accounting, and
finally sliding-window features ready for privatization.

Run: python3 demos/gaze_event_pipeline.py
"""
import numpy as np

from gazeprivkit.pipeline import (
    Collider,
    GazeSample,
    detect_events,
    divisive_baseline,
    gaze_hits,
    interpolate_gaps,
    ooi_attention,
    pupil_series,
    sg_smooth,
    window_features,
)


def direction(angle_deg: float) -> np.ndarray:
    a = np.radians(angle_deg)
    return np.array([np.sin(a), 0.0, np.cos(a)])


# 40 s recording at 20 Hz: drift slowly for 8 samples, jump 5 degrees, repeat
rng = np.random.default_rng(5)
samples = []
angle = 0.0
for i in range(800):
    t = i * 0.05
    if i % 8 == 7:
        angle += 5.0 * rng.choice([-1.0, 1.0])
    else:
        angle += 0.2 * rng.choice([-1.0, 1.0])
    gaze = None if i % 23 == 7 else direction(angle)
    pupil = None if i % 17 == 5 else 3.0 + 0.1 * np.sin(t) + 0.02 * rng.normal()
    samples.append(GazeSample(t, gaze, direction(0.0), np.zeros(3), pupil))

print("== gap interpolation and event detection ==")
complete = interpolate_gaps(samples)
events = detect_events(complete)
fixations = [e for e in events if e.kind == "fixation"]
saccades = [e for e in events if e.kind == "saccade"]
print(f"  {len(samples)} samples -> {len(fixations)} fixations, "
      f"{len(saccades)} saccades")
if saccades:
    amps = [e.amplitude_deg for e in saccades]
    print(f"  saccade amplitudes {min(amps):.1f}..{max(amps):.1f} deg")

print("\n== pupil smoothing and baseline normalization ==")
times, pupil = pupil_series(complete)
smoothed = sg_smooth(pupil, window=11, order=2)
normalized = divisive_baseline(smoothed, baseline_duration=1.0, step=0.05)
print(f"  raw mean {np.mean(pupil):.3f} mm -> normalized mean "
      f"{np.mean(normalized):.3f} (unitless, first second = 1)")

print("\n== scene attention ==")
colliders = [Collider("screen", (0.0, 0.0, 5.0), (1.0, 1.0, 0.5)),
             Collider("tablet", (4.0, 0.0, 5.0), (1.5, 1.0, 0.5))]
attention = ooi_attention(gaze_hits(complete, colliders))
for object_id, record in sorted(attention.items()):
    print(f"  {object_id}: {record.total_dwell:.1f}s over {record.visits} visits")

print("\n== sliding-window feature signals ==")
features = window_features(events, times, normalized, window=30.0, step=0.5)
for name, signal in features.signals.items():
    print(f"  {name:>22}: {len(signal)} windows, mean {np.mean(signal.values):.3f}")
