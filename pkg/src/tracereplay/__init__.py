"""Compile touch-detection traces of screen recordings into replayable
device input scripts, plus the synthetic-trace generator and metrics
used to verify the pipeline end to end.
"""

from .classify import (
    ActionKind,
    AtomicAction,
    ClassifiedScenario,
    MultiFingerItem,
    SingleFingerItem,
    classify_action,
    classify_finger_count,
    classify_trace,
    filter_actions,
    identify_sfa_mfa,
)
from .codegen import (
    InputEvent,
    SendEventScript,
    assemble_script,
    emit_mfa_events,
    emit_sfa_events,
    parse_runnable,
    parse_script,
    serialize_script,
    translate_runnable,
    validate_script,
)
from .errors import TraceReplayError
from .metrics import (
    MetricsReport,
    evaluate_batch,
    lcs_ratio,
    levenshtein,
    precision_recall,
)
from .model import (
    DetectionTrace,
    DeviceProfile,
    Opacity,
    TouchDetection,
    frame_time_ms,
    parse_trace,
    serialize_trace,
)
from .replay import (
    BridgeTransport,
    DeviceTransport,
    MockTransport,
    ReplayConfig,
    ReplayReport,
    push_and_replay,
)
from .segment import (
    FrameGroup,
    TouchSequence,
    filter_confidence,
    group_consecutive,
    segment_actions,
    segment_trace,
)
from .synth import (
    GroundTruthAction,
    GroundTruthScenario,
    NoiseModel,
    noise_preset,
    random_scenario,
    synthesize_trace,
)

__version__ = "0.1.0"
