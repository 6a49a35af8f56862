"""Device profile and detection-trace data model.

A detection trace is the boundary object between the upstream
touch-detection stage and this pipeline: one entry per detected touch
indicator, carrying the video frame index, bounding box, detector
confidence, and a binary opacity class (a low-opacity indicator marks a
finger lifting off the screen).

Trace JSON schema (version 1)::

    {
      "schema_version": 1,
      "device": {"name": str, "width": int, "height": int, "fps": int,
                 "touch_slop": int (optional, default 8)},
      "frame_count": int,
      "detections": [
        {"frame": int, "bbox": [x, y, w, h],
         "confidence": float, "opacity": "high" | "low"}
      ]
    }

All downstream logic works with the bbox center point only.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from enum import Enum

from .errors import BoundsViolation, MalformedJson, SchemaViolation

TRACE_SCHEMA_VERSION = 1

#: Minimum supported recording rate in frames per second.
MIN_FPS = 30

#: Default pixel radius a press may wander and still count as a tap.
DEFAULT_TOUCH_SLOP = 8


class Opacity(Enum):
    HIGH = "high"
    LOW = "low"


@dataclass(frozen=True)
class DeviceProfile:
    """Static facts about the recording device."""

    name: str
    screen_width: int
    screen_height: int
    fps: int
    touch_slop: int = DEFAULT_TOUCH_SLOP

    def __post_init__(self):
        if self.screen_width <= 0 or self.screen_height <= 0:
            raise SchemaViolation(
                f"screen size must be positive, got "
                f"{self.screen_width}x{self.screen_height}"
            )
        if self.fps < MIN_FPS:
            raise SchemaViolation(f"fps must be >= {MIN_FPS}, got {self.fps}")
        if self.touch_slop <= 0:
            raise SchemaViolation(f"touch_slop must be positive, got {self.touch_slop}")

    def to_dict(self) -> dict:
        return {
            "name": self.name,
            "width": self.screen_width,
            "height": self.screen_height,
            "fps": self.fps,
            "touch_slop": self.touch_slop,
        }

    @classmethod
    def from_dict(cls, data: dict) -> "DeviceProfile":
        _require(isinstance(data, dict), "device must be an object")
        for key in ("name", "width", "height", "fps"):
            _require(key in data, f"device missing field '{key}'")
        _require(isinstance(data["name"], str), "device name must be a string")
        return cls(
            name=data["name"],
            screen_width=_int_field(data, "width"),
            screen_height=_int_field(data, "height"),
            fps=_int_field(data, "fps"),
            touch_slop=_int_field(data, "touch_slop") if "touch_slop" in data
            else DEFAULT_TOUCH_SLOP,
        )


@dataclass(frozen=True)
class TouchDetection:
    """One detected touch indicator in one video frame."""

    frame: int
    bbox: tuple[float, float, float, float]  # (x, y, w, h) in pixels
    confidence: float
    opacity: Opacity

    def __post_init__(self):
        object.__setattr__(self, "bbox", tuple(float(v) for v in self.bbox))
        if self.frame < 0:
            raise SchemaViolation(f"frame must be non-negative, got {self.frame}")
        if len(self.bbox) != 4:
            raise SchemaViolation("bbox must have exactly 4 entries")
        if self.bbox[2] <= 0 or self.bbox[3] <= 0:
            raise SchemaViolation(f"bbox size must be positive, got {self.bbox}")
        if not 0.0 <= self.confidence <= 1.0:
            raise SchemaViolation(
                f"confidence must be in [0, 1], got {self.confidence}"
            )

    @property
    def center(self) -> tuple[float, float]:
        """Canonical touch coordinate: the bbox center."""
        x, y, w, h = self.bbox
        return (x + w / 2.0, y + h / 2.0)

    def to_dict(self) -> dict:
        return {
            "frame": self.frame,
            "bbox": list(self.bbox),
            "confidence": self.confidence,
            "opacity": self.opacity.value,
        }

    @classmethod
    def from_dict(cls, data: dict) -> "TouchDetection":
        _require(isinstance(data, dict), "detection must be an object")
        for key in ("frame", "bbox", "confidence", "opacity"):
            _require(key in data, f"detection missing field '{key}'")
        bbox = data["bbox"]
        _require(
            isinstance(bbox, list) and len(bbox) == 4
            and all(_is_number(v) for v in bbox),
            f"bbox must be a list of 4 numbers, got {bbox!r}",
        )
        _require(_is_number(data["confidence"]), "confidence must be a number")
        opacity = data["opacity"]
        _require(
            opacity in (Opacity.HIGH.value, Opacity.LOW.value),
            f"opacity must be 'high' or 'low', got {opacity!r}",
        )
        return cls(
            frame=_int_field(data, "frame"),
            bbox=tuple(bbox),
            confidence=float(data["confidence"]),
            opacity=Opacity(opacity),
        )


@dataclass(frozen=True)
class DetectionTrace:
    """All detections of one recording, sorted by frame.

    The constructor re-sorts detections (stable) so the frame-order
    invariant always holds, and validates every bbox against the
    profile's screen rectangle.
    """

    profile: DeviceProfile
    detections: tuple[TouchDetection, ...]
    frame_count: int

    def __post_init__(self):
        ordered = tuple(sorted(self.detections, key=lambda d: d.frame))
        object.__setattr__(self, "detections", ordered)
        if self.frame_count < 0:
            raise SchemaViolation(f"frame_count must be >= 0, got {self.frame_count}")
        width, height = self.profile.screen_width, self.profile.screen_height
        for det in ordered:
            if det.frame >= self.frame_count:
                raise SchemaViolation(
                    f"detection frame {det.frame} >= frame_count {self.frame_count}"
                )
            x, y, w, h = det.bbox
            if x < 0 or y < 0 or x + w > width or y + h > height:
                raise BoundsViolation(
                    f"bbox {det.bbox} outside {width}x{height} screen "
                    f"(frame {det.frame})"
                )

    def __len__(self) -> int:
        return len(self.detections)


def frame_time_ms(frame: int, fps: int) -> float:
    """Milliseconds elapsed at `frame` for a recording at `fps`.

    At 30fps consecutive frames are ~33.33 ms apart.
    """
    return frame * 1000.0 / fps


def parse_trace(data: bytes | str) -> DetectionTrace:
    """Parse a trace JSON document and validate all invariants.

    Raises MalformedJson on syntax errors, SchemaViolation on missing
    or out-of-range fields, BoundsViolation on off-screen boxes.
    Detections are re-sorted by frame if the document is unsorted.
    """
    if isinstance(data, bytes):
        try:
            data = data.decode("utf-8")
        except UnicodeDecodeError as exc:
            raise MalformedJson(f"input is not UTF-8: {exc}") from exc
    try:
        doc = json.loads(data)
    except json.JSONDecodeError as exc:
        raise MalformedJson(f"invalid JSON: {exc}") from exc

    _require(isinstance(doc, dict), "top-level value must be an object")
    for key in ("schema_version", "device", "frame_count", "detections"):
        _require(key in doc, f"document missing field '{key}'")
    _require(
        doc["schema_version"] == TRACE_SCHEMA_VERSION,
        f"unsupported schema_version {doc['schema_version']!r}",
    )
    _require(isinstance(doc["detections"], list), "detections must be a list")

    profile = DeviceProfile.from_dict(doc["device"])
    detections = tuple(TouchDetection.from_dict(d) for d in doc["detections"])
    return DetectionTrace(
        profile=profile,
        detections=detections,
        frame_count=_int_field(doc, "frame_count"),
    )


def serialize_trace(trace: DetectionTrace) -> bytes:
    """Serialize a trace to the JSON schema; inverse of parse_trace."""
    doc = {
        "schema_version": TRACE_SCHEMA_VERSION,
        "device": trace.profile.to_dict(),
        "frame_count": trace.frame_count,
        "detections": [d.to_dict() for d in trace.detections],
    }
    return json.dumps(doc, indent=2).encode("utf-8")


def _is_number(value) -> bool:
    return isinstance(value, (int, float)) and not isinstance(value, bool)


def _int_field(data: dict, key: str) -> int:
    value = data[key]
    _require(
        isinstance(value, int) and not isinstance(value, bool),
        f"field '{key}' must be an integer, got {value!r}",
    )
    return value


def _require(condition: bool, message: str) -> None:
    if not condition:
        raise SchemaViolation(message)
