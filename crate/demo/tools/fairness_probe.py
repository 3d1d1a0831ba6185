#!/usr/bin/env python3
"""Mock fairness assessment tool speaking wire protocol v1.

Reads one request line from stdin, emits newline-delimited events on
stdout. A real tool would evaluate the subject; this one returns fixed
group-fairness numbers with per-group instance evidence.
"""

import json
import sys

VALUES = {
    "fairness.dpd": (
        0.04,
        [
            {"instance_id": "group:a-vs-b", "value": 0.04},
            {"instance_id": "group:a-vs-c", "value": 0.03},
        ],
    ),
    "fairness.eod": (0.06, None),
}


def emit(obj):
    print(json.dumps(obj), flush=True)


def main():
    request = json.loads(sys.stdin.readline())
    emit({"event": "hello", "protocol_version": 1, "tool_id": "fairness-probe"})
    emit({"event": "log", "message": f"probing {request['subject'] or '<unnamed subject>'}"})
    for metric in request["metrics_requested"]:
        if metric in VALUES:
            value, instances = VALUES[metric]
            event = {"event": "evidence", "metric_id": metric, "value": value}
            if instances:
                event["instances"] = instances
            emit(event)
    # this tool also reports a metric under its own naming; the engine
    # records it as unmapped until a human approves the label mapping
    emit({"event": "evidence", "metric_id": "demographic parity difference", "value": 0.04})
    emit({"event": "done", "status": "ok"})


if __name__ == "__main__":
    main()
