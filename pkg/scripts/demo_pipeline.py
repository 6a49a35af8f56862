#!/usr/bin/env python3
"""End-to-end demo: build a small scenario, render it into a detection
trace, classify it back, and compile the replayable scripts.

Artifacts land in out/demo by default. Pass --replay --dry-run to also
exercise the device driver against the in-memory transport.
"""

import argparse
from pathlib import Path

from tracereplay.classify import classify_trace
from tracereplay.codegen import assemble_script, serialize_script, translate_runnable
from tracereplay.config import DEVICE_PRESETS
from tracereplay.metrics import levenshtein
from tracereplay.model import serialize_trace
from tracereplay.replay import MockTransport, ReplayConfig, push_and_replay
from tracereplay.synth import (
    GroundTruthAction,
    GroundTruthScenario,
    noise_preset,
    synthesize_trace,
)


def demo_scenario(profile) -> GroundTruthScenario:
    tap = tuple((k, 540.0, 960.0) for k in range(8))
    swipe = tuple((25 + k, 200.0 + 28.0 * k, 1400.0) for k in range(20))
    long_press = tuple((60 + k, 300.0, 600.0) for k in range(28))
    pinch_a = tuple((105 + k, 440.0 - 6.0 * k, 960.0) for k in range(15))
    pinch_b = tuple((105 + k, 640.0 + 6.0 * k, 960.0) for k in range(15))
    return GroundTruthScenario(
        profile=profile,
        actions=(
            GroundTruthAction(kind="tap", paths=(tap,)),
            GroundTruthAction(kind="gesture", paths=(swipe,)),
            GroundTruthAction(kind="long_tap", paths=(long_press,)),
            GroundTruthAction(kind="gesture", paths=(pinch_a, pinch_b)),
        ),
    )


def main() -> None:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--out-dir", default="out/demo")
    parser.add_argument("--noise", default="clean")
    parser.add_argument("--seed", type=int, default=0)
    parser.add_argument("--replay", action="store_true")
    parser.add_argument("--dry-run", action="store_true")
    args = parser.parse_args()

    out = Path(args.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    profile = DEVICE_PRESETS["nexus5"]

    scenario = demo_scenario(profile)
    trace, truth = synthesize_trace(scenario, noise_preset(args.noise, args.seed))
    (out / "trace.json").write_bytes(serialize_trace(trace))
    print(f"scenario: {''.join(truth)}  ({len(trace)} detections)")

    classified = classify_trace(trace)
    pred = classified.symbols(extended=True)
    print(f"classified: {''.join(pred)}  (edit distance {levenshtein(pred, truth)})")

    script = assemble_script(classified)
    (out / "script.log").write_bytes(serialize_script(script))
    runnable = translate_runnable(script)
    (out / "script.bin").write_bytes(runnable)
    print(f"compiled {len(script.events)} events -> {out}/script.log, script.bin")

    log_head = serialize_script(script).decode().splitlines()
    for line in log_head[3:11]:
        print(f"  {line}")
    print(f"  ... {len(script.events) - 8} more events")

    if args.replay and args.dry_run:
        agent = out / "agent.stub"
        agent.write_bytes(b"\x7fELF-stub")
        report = push_and_replay(
            runnable, MockTransport(), ReplayConfig(agent_path=str(agent))
        )
        print(f"dry-run replay: exit={report.exit_code}, "
              f"{len(report.transcript)} transport calls")
        for call in report.transcript:
            print(f"  {call.op} {call.argument}")


if __name__ == "__main__":
    main()
