import pytest

from tracereplay.model import DeviceProfile, Opacity, TouchDetection
from tracereplay.segment import TouchSequence

INDICATOR = 40.0


@pytest.fixture
def profile():
    return DeviceProfile(name="nexus5", screen_width=1080, screen_height=1920, fps=30)


def make_touch(frame, x, y, opacity=Opacity.HIGH, confidence=0.9, size=INDICATOR):
    """Detection whose bbox center is exactly (x, y)."""
    return TouchDetection(
        frame=frame,
        bbox=(x - size / 2, y - size / 2, size, size),
        confidence=confidence,
        opacity=opacity,
    )


def make_sequence(start, high_frames, x, y, fade_frames=0, dx=0.0, dy=0.0):
    """Sequence at (x, y) drifting (dx, dy) per frame, plus a fade tail."""
    touches = []
    for k in range(high_frames):
        touches.append(make_touch(start + k, x + dx * k, y + dy * k))
    lx, ly = x + dx * (high_frames - 1), y + dy * (high_frames - 1)
    for k in range(fade_frames):
        touches.append(
            make_touch(start + high_frames + k, lx, ly, opacity=Opacity.LOW)
        )
    return TouchSequence(touches=tuple(touches))
