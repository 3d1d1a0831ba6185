#!/usr/bin/env python3
"""Mock robustness assessment tool speaking wire protocol v1."""

import json
import sys


def emit(obj):
    print(json.dumps(obj), flush=True)


def main():
    request = json.loads(sys.stdin.readline())
    emit({"event": "hello", "protocol_version": 1, "tool_id": "robustness-probe"})
    if "robustness.noise-stability" in request["metrics_requested"]:
        emit(
            {
                "event": "evidence",
                "metric_id": "robustness.noise-stability",
                "value": 0.93,
            }
        )
    emit({"event": "done", "status": "ok"})


if __name__ == "__main__":
    main()
