#!/usr/bin/env python3
"""Mock performance assessment tool speaking wire protocol v1."""

import json
import sys


def emit(obj):
    print(json.dumps(obj), flush=True)


def main():
    request = json.loads(sys.stdin.readline())
    emit({"event": "hello", "protocol_version": 1, "tool_id": "performance-probe"})
    if "accuracy.f1" in request["metrics_requested"]:
        emit(
            {
                "event": "evidence",
                "metric_id": "accuracy.f1",
                "value": 0.91,
                "instances": [
                    {"instance_id": "fold:0", "value": 0.9},
                    {"instance_id": "fold:1", "value": 0.92},
                ],
            }
        )
    emit({"event": "done", "status": "ok"})


if __name__ == "__main__":
    main()
