"""Action classification: Tap / LongTap / Gesture, then SFA/MFA grouping.

A segmented touch sequence is a Tap when every center stays within the
device touch slop of the first center and the active span (first touch
through last high-opacity touch) is at most 20 frames; a LongTap when it
is stationary but longer; a Gesture otherwise. Actions whose frames
mostly contain multiple simultaneous touches are regrouped into
multi-fingered actions via a chronological stack sweep, and each
multi-fingered group's finger count is the per-frame touch-count mode.
"""

from __future__ import annotations

import json
import math
from collections import Counter
from dataclasses import dataclass
from enum import Enum
from typing import Union

from .errors import MalformedJson, SchemaViolation
from .model import DetectionTrace, DeviceProfile, TouchDetection
from .segment import MAX_DISCARD_FRAMES, MIN_CONFIDENCE, TouchSequence, segment_trace

CLASSIFIED_SCHEMA_VERSION = 1

#: A stationary press at most this many frames long is a Tap.
TAP_CUTOFF_FRAMES = 20

#: Wall-clock equivalent of the 20-frame cutoff at the 30fps baseline,
#: used when classifying high-fps traces with a duration-based cutoff.
TAP_CUTOFF_MS = 667.0

#: Actions with a smaller fraction of high-opacity touches are spurious.
MIN_HIGH_FRACTION = 0.1

#: Strictly more than this fraction of multi-touch frames marks a
#: potential multi-fingered action.
MULTI_TOUCH_GATE = 0.5


class ActionKind(Enum):
    TAP = "tap"
    LONG_TAP = "long_tap"
    GESTURE = "gesture"

    @property
    def symbol(self) -> str:
        return {"tap": "T", "long_tap": "L", "gesture": "G"}[self.value]


@dataclass(frozen=True)
class AtomicAction:
    """One finger's classified contiguous contact."""

    kind: ActionKind
    sequence: TouchSequence

    @property
    def start_frame(self) -> int:
        return self.sequence.start_frame

    @property
    def end_frame(self) -> int:
        return self.sequence.end_frame

    @property
    def active_end_frame(self) -> int:
        """Last high-opacity frame: the fade tail is not active contact."""
        return self.sequence.last_high_frame

    @property
    def active_frames(self) -> int:
        return self.active_end_frame - self.start_frame + 1

    def to_dict(self) -> dict:
        return {
            "kind": self.kind.value,
            "touches": [t.to_dict() for t in self.sequence.touches],
        }

    @classmethod
    def from_dict(cls, data: dict) -> "AtomicAction":
        if not isinstance(data, dict) or "kind" not in data or "touches" not in data:
            raise SchemaViolation("action must be an object with kind and touches")
        try:
            kind = ActionKind(data["kind"])
        except ValueError:
            raise SchemaViolation(f"unknown action kind {data['kind']!r}") from None
        touches = tuple(TouchDetection.from_dict(t) for t in data["touches"])
        return cls(kind=kind, sequence=TouchSequence(touches=touches))


@dataclass(frozen=True)
class SingleFingerItem:
    action: AtomicAction

    @property
    def start_frame(self) -> int:
        return self.action.start_frame

    @property
    def end_frame(self) -> int:
        return self.action.end_frame

    def symbol(self, extended: bool = False) -> str:
        return self.action.kind.symbol


@dataclass(frozen=True)
class MultiFingerItem:
    actions: tuple[AtomicAction, ...]
    finger_count: int

    @property
    def start_frame(self) -> int:
        return min(a.start_frame for a in self.actions)

    @property
    def end_frame(self) -> int:
        return max(a.end_frame for a in self.actions)

    def symbol(self, extended: bool = False) -> str:
        return f"G{self.finger_count}" if extended else "G"


ScenarioItem = Union[SingleFingerItem, MultiFingerItem]


@dataclass(frozen=True)
class ClassifiedScenario:
    """Chronological single- and multi-fingered actions of one trace."""

    profile: DeviceProfile
    items: tuple[ScenarioItem, ...]

    def __post_init__(self):
        object.__setattr__(self, "items", tuple(self.items))
        starts = [item.start_frame for item in self.items]
        if any(b < a for a, b in zip(starts, starts[1:])):
            raise SchemaViolation("scenario items must be ordered by start frame")

    def symbols(self, extended: bool = False) -> tuple[str, ...]:
        return tuple(item.symbol(extended) for item in self.items)

    def to_json(self) -> bytes:
        items = []
        for item in self.items:
            if isinstance(item, SingleFingerItem):
                items.append({"type": "sfa", "action": item.action.to_dict()})
            else:
                items.append(
                    {
                        "type": "mfa",
                        "finger_count": item.finger_count,
                        "actions": [a.to_dict() for a in item.actions],
                    }
                )
        doc = {
            "schema_version": CLASSIFIED_SCHEMA_VERSION,
            "device": self.profile.to_dict(),
            "items": items,
        }
        return json.dumps(doc, indent=2).encode("utf-8")

    @classmethod
    def from_json(cls, data: bytes | str) -> "ClassifiedScenario":
        try:
            doc = json.loads(data)
        except json.JSONDecodeError as exc:
            raise MalformedJson(f"invalid JSON: {exc}") from exc
        if not isinstance(doc, dict):
            raise SchemaViolation("top-level value must be an object")
        for key in ("schema_version", "device", "items"):
            if key not in doc:
                raise SchemaViolation(f"document missing field '{key}'")
        if doc["schema_version"] != CLASSIFIED_SCHEMA_VERSION:
            raise SchemaViolation(
                f"unsupported schema_version {doc['schema_version']!r}"
            )
        profile = DeviceProfile.from_dict(doc["device"])
        items: list[ScenarioItem] = []
        for raw in doc["items"]:
            if not isinstance(raw, dict) or "type" not in raw:
                raise SchemaViolation("item must be an object with a type")
            if raw["type"] == "sfa":
                items.append(SingleFingerItem(AtomicAction.from_dict(raw["action"])))
            elif raw["type"] == "mfa":
                actions = tuple(AtomicAction.from_dict(a) for a in raw["actions"])
                items.append(
                    MultiFingerItem(
                        actions=actions, finger_count=_int(raw, "finger_count")
                    )
                )
            else:
                raise SchemaViolation(f"unknown item type {raw['type']!r}")
        return cls(profile=profile, items=tuple(items))


def tap_cutoff_frames(profile: DeviceProfile, duration_based: bool = False) -> int:
    """Tap/LongTap frame cutoff; optionally rescaled for high-fps traces."""
    if duration_based:
        return max(round(profile.fps * TAP_CUTOFF_MS / 1000.0), 1)
    return TAP_CUTOFF_FRAMES


def classify_action(
    sequence: TouchSequence,
    profile: DeviceProfile,
    duration_based_cutoff: bool = False,
) -> AtomicAction:
    """Label one touch sequence as Tap, LongTap, or Gesture."""
    x0, y0 = sequence.touches[0].center
    stationary = all(
        math.hypot(t.center[0] - x0, t.center[1] - y0) <= profile.touch_slop
        for t in sequence.touches
    )
    if not stationary:
        kind = ActionKind.GESTURE
    else:
        cutoff = tap_cutoff_frames(profile, duration_based_cutoff)
        active = sequence.last_high_frame - sequence.start_frame + 1
        kind = ActionKind.TAP if active <= cutoff else ActionKind.LONG_TAP
    return AtomicAction(kind=kind, sequence=sequence)


def filter_actions(
    actions: list[AtomicAction], min_high_fraction: float = MIN_HIGH_FRACTION
) -> list[AtomicAction]:
    """Drop mostly low-opacity actions and two-frame blips, keeping order."""
    kept = []
    for action in actions:
        touches = action.sequence.touches
        high_fraction = len(action.sequence.high_touches) / len(touches)
        span = action.end_frame - action.start_frame + 1
        if high_fraction >= min_high_fraction and span > MAX_DISCARD_FRAMES:
            kept.append(action)
    return kept


def per_frame_touch_counts(actions: list[AtomicAction]) -> Counter:
    """Simultaneous touch count per frame over the retained actions."""
    counts: Counter = Counter()
    for action in actions:
        for touch in action.sequence.touches:
            counts[touch.frame] += 1
    return counts


def group_overlapping(actions: list[AtomicAction]) -> list[list[AtomicAction]]:
    """Chronological stack sweep over frame-overlapping actions.

    Sorted by start frame, an action joins the group on top of the stack
    when its first frame precedes the last frame of any action already
    in that group; otherwise it opens a new group. Once a group is left
    behind it can never be rejoined (starts are sorted).
    """
    if not actions:
        return []
    ordered = sorted(
        actions,
        key=lambda a: (a.start_frame, a.end_frame, a.sequence.touches[0].center),
    )
    stack: list[list[AtomicAction]] = [[ordered[0]]]
    for action in ordered[1:]:
        top = stack[-1]
        if any(action.start_frame < member.end_frame for member in top):
            top.append(action)
        else:
            stack.append([action])
    return stack


def classify_finger_count(actions: list[AtomicAction]) -> int:
    """Mode of per-frame simultaneous-touch counts over the group's span.

    Robust against a stray short tap inflating the count; ties break
    toward the larger count.
    """
    if not actions:
        raise SchemaViolation("finger count of an empty group is undefined")
    counts = per_frame_touch_counts(actions)
    start = min(a.start_frame for a in actions)
    end = max(a.end_frame for a in actions)
    frequency = Counter(counts.get(f, 0) for f in range(start, end + 1))
    mode = max(frequency.items(), key=lambda kv: (kv[1], kv[0]))[0]
    return mode


def identify_sfa_mfa(
    actions: list[AtomicAction], profile: DeviceProfile
) -> ClassifiedScenario:
    """Partition classified actions into single- and multi-fingered items.

    An action whose own frame span is at most half multi-touch frames
    (measured against per-frame counts over all retained actions) is a
    single-fingered action outright; the rest are grouped by the stack
    sweep, with singleton groups demoted back to single-fingered.
    """
    ordered = sorted(
        actions,
        key=lambda a: (a.start_frame, a.end_frame, a.sequence.touches[0].center),
    )
    counts = per_frame_touch_counts(ordered)
    singles: list[AtomicAction] = []
    potential_multi: list[AtomicAction] = []
    for action in ordered:
        span = range(action.start_frame, action.end_frame + 1)
        multi = sum(1 for f in span if counts.get(f, 0) >= 2)
        if multi / len(span) > MULTI_TOUCH_GATE:
            potential_multi.append(action)
        else:
            singles.append(action)

    items: list[ScenarioItem] = [SingleFingerItem(a) for a in singles]
    for group in group_overlapping(potential_multi):
        if len(group) == 1:
            items.append(SingleFingerItem(group[0]))
        else:
            items.append(
                MultiFingerItem(
                    actions=tuple(group), finger_count=classify_finger_count(group)
                )
            )
    items.sort(key=lambda item: (item.start_frame, item.end_frame))
    return ClassifiedScenario(profile=profile, items=tuple(items))


def classify_trace(
    trace: DetectionTrace,
    min_confidence: float = MIN_CONFIDENCE,
    duration_based_cutoff: bool = False,
) -> ClassifiedScenario:
    """Full back half: segment, classify, filter, and regroup a trace."""
    sequences = segment_trace(trace, min_confidence)
    actions = [
        classify_action(s, trace.profile, duration_based_cutoff) for s in sequences
    ]
    return identify_sfa_mfa(filter_actions(actions), trace.profile)


def _int(data: dict, key: str) -> int:
    value = data.get(key)
    if not isinstance(value, int) or isinstance(value, bool):
        raise SchemaViolation(f"field '{key}' must be an integer, got {value!r}")
    return value
