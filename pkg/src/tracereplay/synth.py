"""Inverse pipeline: render ground-truth scenarios into detection traces.

Lets the segmenter, classifier, and codegen be verified round-trip
without a device or a detector. A scenario is a list of timed finger
paths; the synthesizer turns every path point into a high-opacity
detection, appends a low-opacity fade tail where each finger lifts, and
optionally corrupts the result with a seeded noise model.
"""

from __future__ import annotations

import json
from dataclasses import dataclass

import numpy as np

from .errors import InvalidScenario, MalformedJson, SchemaViolation
from .model import (
    DetectionTrace,
    DeviceProfile,
    Opacity,
    TouchDetection,
)

SCENARIO_SCHEMA_VERSION = 1

#: Rendered touch-indicator bounding-box edge length in pixels.
INDICATOR_SIZE = 40.0

#: Fraction of jitter variance that is a per-contact systematic offset.
#: Detector localization error is dominated by a bias that is stable for
#: one contact's visual appearance; only the remainder varies per frame.
JITTER_BIAS_VARIANCE = 0.8

ACTION_KINDS = ("tap", "long_tap", "gesture")

#: (frame, x, y) sample of one finger's position.
PathPoint = tuple[int, float, float]


@dataclass(frozen=True)
class GroundTruthAction:
    """One user action: one timed path per finger.

    kind applies to single-finger actions; any action with two or more
    fingers is treated as a multi-fingered gesture downstream.
    """

    kind: str
    paths: tuple[tuple[PathPoint, ...], ...]

    def __post_init__(self):
        if self.kind not in ACTION_KINDS:
            raise InvalidScenario(f"unknown action kind {self.kind!r}")
        paths = tuple(
            tuple((int(f), float(x), float(y)) for f, x, y in path)
            for path in self.paths
        )
        object.__setattr__(self, "paths", paths)
        if not paths or any(not path for path in paths):
            raise InvalidScenario("action needs at least one non-empty path")
        if len(paths) > 10:
            raise InvalidScenario(f"at most 10 fingers supported, got {len(paths)}")
        for path in paths:
            frames = [p[0] for p in path]
            if any(b <= a for a, b in zip(frames, frames[1:])):
                raise InvalidScenario(
                    f"path frames must strictly increase, got {frames}"
                )

    @property
    def fingers(self) -> int:
        return len(self.paths)

    @property
    def start_frame(self) -> int:
        return min(path[0][0] for path in self.paths)

    @property
    def end_frame(self) -> int:
        return max(path[-1][0] for path in self.paths)

    @property
    def symbol(self) -> str:
        """Ground-truth action-type symbol (finger-count annotated)."""
        if self.fingers > 1:
            return f"G{self.fingers}"
        return {"tap": "T", "long_tap": "L", "gesture": "G"}[self.kind]

    def to_dict(self) -> dict:
        return {
            "kind": self.kind,
            "paths": [[[f, x, y] for f, x, y in path] for path in self.paths],
        }

    @classmethod
    def from_dict(cls, data: dict) -> "GroundTruthAction":
        if not isinstance(data, dict) or "kind" not in data or "paths" not in data:
            raise SchemaViolation("action must be an object with kind and paths")
        return cls(
            kind=data["kind"],
            paths=tuple(tuple(tuple(p) for p in path) for path in data["paths"]),
        )


@dataclass(frozen=True)
class GroundTruthScenario:
    """Chronological ground-truth actions plus the device they target."""

    profile: DeviceProfile
    actions: tuple[GroundTruthAction, ...]

    def __post_init__(self):
        object.__setattr__(self, "actions", tuple(self.actions))
        starts = [a.start_frame for a in self.actions]
        if any(b < a for a, b in zip(starts, starts[1:])):
            raise InvalidScenario("actions must be ordered by start frame")
        slop = self.profile.touch_slop
        for action in self.actions:
            if action.kind in ("tap", "long_tap") and action.fingers == 1:
                (path,) = action.paths
                x0, y0 = path[0][1], path[0][2]
                for _, x, y in path:
                    if ((x - x0) ** 2 + (y - y0) ** 2) ** 0.5 > slop:
                        raise InvalidScenario(
                            f"{action.kind} path wanders beyond touch slop"
                        )

    @property
    def symbols(self) -> tuple[str, ...]:
        return tuple(a.symbol for a in self.actions)

    def to_json(self) -> bytes:
        doc = {
            "schema_version": SCENARIO_SCHEMA_VERSION,
            "device": self.profile.to_dict(),
            "actions": [a.to_dict() for a in self.actions],
        }
        return json.dumps(doc, indent=2).encode("utf-8")

    @classmethod
    def from_json(cls, data: bytes | str) -> "GroundTruthScenario":
        try:
            doc = json.loads(data)
        except json.JSONDecodeError as exc:
            raise MalformedJson(f"invalid JSON: {exc}") from exc
        if not isinstance(doc, dict):
            raise SchemaViolation("top-level value must be an object")
        for key in ("schema_version", "device", "actions"):
            if key not in doc:
                raise SchemaViolation(f"document missing field '{key}'")
        if doc["schema_version"] != SCENARIO_SCHEMA_VERSION:
            raise SchemaViolation(
                f"unsupported schema_version {doc['schema_version']!r}"
            )
        return cls(
            profile=DeviceProfile.from_dict(doc["device"]),
            actions=tuple(GroundTruthAction.from_dict(a) for a in doc["actions"]),
        )


@dataclass(frozen=True)
class NoiseModel:
    """Detector-imperfection model applied during synthesis.

    position_jitter_sigma is the total per-axis standard deviation of
    detection-center error; most of its variance is a per-contact bias
    (see JITTER_BIAS_VARIANCE). false_positive_rate is a per-frame
    probability of injecting a spurious short-lived detection;
    dropout_rate is a per-detection probability of the detector missing
    a real touch. fade_frames is the length of the low-opacity tail
    after a finger lift.
    """

    position_jitter_sigma: float = 0.0
    false_positive_rate: float = 0.0
    dropout_rate: float = 0.0
    fade_frames: int = 3
    rng_seed: int = 0

    def __post_init__(self):
        if self.position_jitter_sigma < 0:
            raise SchemaViolation("position_jitter_sigma must be >= 0")
        if not 0.0 <= self.false_positive_rate <= 1.0:
            raise SchemaViolation("false_positive_rate must be in [0, 1]")
        if not 0.0 <= self.dropout_rate <= 1.0:
            raise SchemaViolation("dropout_rate must be in [0, 1]")
        if self.fade_frames < 1:
            raise SchemaViolation("fade_frames must be >= 1")


#: Calibration presets; "clean" is exact, the other two approximate the
#: detector-quality gap observed between physical devices and emulators.
NOISE_PRESETS = {
    "clean": NoiseModel(),
    "physical-device": NoiseModel(
        position_jitter_sigma=2.0, false_positive_rate=0.005, dropout_rate=0.01
    ),
    "emulator": NoiseModel(
        position_jitter_sigma=4.0, false_positive_rate=0.01, dropout_rate=0.03
    ),
}


def noise_preset(name: str, seed: int = 0) -> NoiseModel:
    if name not in NOISE_PRESETS:
        raise SchemaViolation(
            f"unknown noise preset {name!r}; options: {sorted(NOISE_PRESETS)}"
        )
    base = NOISE_PRESETS[name]
    return NoiseModel(
        position_jitter_sigma=base.position_jitter_sigma,
        false_positive_rate=base.false_positive_rate,
        dropout_rate=base.dropout_rate,
        fade_frames=base.fade_frames,
        rng_seed=seed,
    )


def synthesize_trace(
    scenario: GroundTruthScenario,
    noise: NoiseModel | None = None,
    frame_count: int | None = None,
) -> tuple[DetectionTrace, tuple[str, ...]]:
    """Render a scenario into a detection trace.

    Returns the trace plus the scenario's action-type symbol sequence.
    Deterministic for identical (scenario, noise) inputs. With a
    zero-noise model every high-opacity detection center equals a path
    point exactly. `frame_count` optionally pads the trace with empty
    trailing frames (false positives are injected across the full span).
    """
    noise = noise or NoiseModel()
    rng = np.random.default_rng(noise.rng_seed)
    profile = scenario.profile
    sigma = noise.position_jitter_sigma
    bias_sigma = sigma * JITTER_BIAS_VARIANCE ** 0.5
    frame_sigma = sigma * (1.0 - JITTER_BIAS_VARIANCE) ** 0.5

    detections: list[TouchDetection] = []
    for action in scenario.actions:
        for path in action.paths:
            bias = rng.normal(0.0, 1.0, 2) * bias_sigma
            last_pos = None
            for f, x, y in path:
                wobble = rng.normal(0.0, 1.0, 2) * frame_sigma
                cx = x + bias[0] + wobble[0]
                cy = y + bias[1] + wobble[1]
                confidence = float(rng.uniform(0.8, 1.0))
                dropped = rng.random() < noise.dropout_rate
                last_pos = (cx, cy)
                if not dropped:
                    detections.append(
                        _detection_at(profile, f, cx, cy, confidence, Opacity.HIGH)
                    )
            lift_frame = path[-1][0]
            for k in range(1, noise.fade_frames + 1):
                confidence = float(rng.uniform(0.75, 0.95))
                dropped = rng.random() < noise.dropout_rate
                if not dropped:
                    detections.append(
                        _detection_at(
                            profile, lift_frame + k, last_pos[0], last_pos[1],
                            confidence, Opacity.LOW,
                        )
                    )

    content_frames = 0
    if scenario.actions:
        content_frames = (
            max(a.end_frame for a in scenario.actions) + noise.fade_frames + 1
        )
    span = max(content_frames, frame_count or 0)

    # Spurious detections: short-lived, positioned anywhere, confidence
    # low enough that only some survive the downstream 0.7 filter.
    half = INDICATOR_SIZE / 2.0
    for f in range(span):
        if rng.random() < noise.false_positive_rate:
            fx = float(rng.uniform(half, profile.screen_width - half))
            fy = float(rng.uniform(half, profile.screen_height - half))
            lifetime = int(rng.integers(1, 3))
            confidence = float(rng.uniform(0.5, 1.0))
            for k in range(lifetime):
                detections.append(
                    _detection_at(profile, f + k, fx, fy, confidence, Opacity.HIGH)
                )

    total = max(
        span, max((d.frame for d in detections), default=-1) + 1
    )
    trace = DetectionTrace(
        profile=profile, detections=tuple(detections), frame_count=total
    )
    return trace, scenario.symbols


def _detection_at(
    profile: DeviceProfile,
    frame: int,
    cx: float,
    cy: float,
    confidence: float,
    opacity: Opacity,
) -> TouchDetection:
    """Build a detection whose bbox is centered on (cx, cy), kept on-screen."""
    size = INDICATOR_SIZE
    half = size / 2.0
    cx = min(max(cx, half), profile.screen_width - half)
    cy = min(max(cy, half), profile.screen_height - half)
    return TouchDetection(
        frame=frame,
        bbox=(cx - half, cy - half, size, size),
        confidence=confidence,
        opacity=opacity,
    )


def random_scenario(
    profile: DeviceProfile,
    seed: int,
    n_actions: int | None = None,
    weights: tuple[float, float, float, float] = (0.35, 0.15, 0.30, 0.20),
) -> GroundTruthScenario:
    """Draw a random but valid scenario: taps, long taps, gestures, and
    two-finger actions, with inter-action gaps wide enough that fade
    tails never bridge adjacent actions.

    `weights` orders as (tap, long_tap, gesture, two_finger).
    """
    rng = np.random.default_rng(seed)
    n = int(n_actions if n_actions is not None else rng.integers(5, 26))
    margin = 60.0
    width, height = float(profile.screen_width), float(profile.screen_height)
    cursor = int(rng.integers(5, 20))
    actions: list[GroundTruthAction] = []
    kinds = ("tap", "long_tap", "gesture", "two_finger")
    probs = np.asarray(weights, dtype=float)
    probs = probs / probs.sum()

    for _ in range(n):
        choice = kinds[int(rng.choice(4, p=probs))]
        if choice == "tap":
            duration = int(rng.integers(5, 16))
            action = _stationary_action("tap", cursor, duration, rng, width, height, margin)
        elif choice == "long_tap":
            duration = int(rng.integers(25, 46))
            action = _stationary_action("long_tap", cursor, duration, rng, width, height, margin)
        elif choice == "gesture":
            duration = int(rng.integers(8, 41))
            action = _swipe_action(cursor, duration, rng, width, height, margin)
        else:
            duration = int(rng.integers(10, 31))
            action = _two_finger_action(cursor, duration, rng, width, height, margin)
        actions.append(action)
        cursor = action.end_frame + int(rng.integers(8, 25))

    return GroundTruthScenario(profile=profile, actions=tuple(actions))


def _stationary_action(kind, start, duration, rng, width, height, margin):
    x = float(rng.uniform(margin, width - margin))
    y = float(rng.uniform(margin, height - margin))
    path = tuple((start + k, x, y) for k in range(duration))
    return GroundTruthAction(kind=kind, paths=(path,))


def _swipe_action(start, duration, rng, width, height, margin):
    x0 = float(rng.uniform(margin, width - margin))
    y0 = float(rng.uniform(margin, height - margin))
    angle = float(rng.uniform(0.0, 2.0 * np.pi))
    length = float(rng.uniform(80.0, 400.0))
    x1 = min(max(x0 + length * np.cos(angle), margin), width - margin)
    y1 = min(max(y0 + length * np.sin(angle), margin), height - margin)
    # Re-aim at the far side if clamping collapsed the travel distance;
    # a swipe must wander well past the touch slop to stay a gesture.
    if ((x1 - x0) ** 2 + (y1 - y0) ** 2) ** 0.5 < 60.0:
        x1 = margin if x0 > width / 2 else width - margin
        y1 = y0
    path = tuple(
        (start + k,
         x0 + (x1 - x0) * k / max(duration - 1, 1),
         y0 + (y1 - y0) * k / max(duration - 1, 1))
        for k in range(duration)
    )
    return GroundTruthAction(kind="gesture", paths=(path,))


def _two_finger_action(start, duration, rng, width, height, margin):
    # Wide enough inset that finger orbits (r <= 270px) never clamp.
    inset = margin + 280.0
    cx = float(rng.uniform(inset, width - inset))
    cy = float(rng.uniform(inset, height - inset))
    angle = float(rng.uniform(0.0, 2.0 * np.pi))
    ux, uy = float(np.cos(angle)), float(np.sin(angle))
    r0 = float(rng.uniform(80.0, 150.0))
    if rng.random() < 0.25:
        r1 = r0  # two-finger tap: both fingers hold still
        duration = min(duration, 15)
    elif rng.random() < 0.5:
        r1 = r0 + float(rng.uniform(40.0, 120.0))  # spread
    else:
        r1 = max(r0 - float(rng.uniform(40.0, 120.0)), 75.0)  # pinch
    paths = []
    for sign in (1.0, -1.0):
        path = []
        for k in range(duration):
            r = r0 + (r1 - r0) * k / max(duration - 1, 1)
            px = min(max(cx + sign * r * ux, margin), width - margin)
            py = min(max(cy + sign * r * uy, margin), height - margin)
            path.append((start + k, px, py))
        paths.append(tuple(path))
    return GroundTruthAction(kind="gesture", paths=tuple(paths))
