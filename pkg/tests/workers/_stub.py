"""Shared plumbing for the stub workers used in tests.

Each stub speaks newline-delimited JSON on stdio: a ready banner, then one
result (or deliberate misbehaviour) per evaluate request. Environment
variables configure the deterministic fake metrics and the misbehaviour
target so a single run degrades exactly one candidate.
"""

import json
import os
import sys


def read_requests():
    for line in sys.stdin:
        line = line.strip()
        if line:
            yield json.loads(line)


def default_result(request):
    seed = request["seed"]
    dsc = 0.5 + (seed % 997) / 10000.0
    hd95 = 1.0 + (seed % 13) / 10.0
    return {
        "type": "result",
        "id": request["id"],
        "dsc_avg": dsc,
        "hd95_avg": hd95,
        "per_class": {"lv": dsc, "myo": dsc, "rv": dsc},
        "params": int(os.environ.get("STUB_PARAMS", "1000000")),
        "flops": int(os.environ.get("STUB_FLOPS", "1000000000")),
        "eval_cost_seconds": 1.5,
        "curve": [
            {"epoch": 1, "dsc": round(dsc - 0.1, 6), "hd95": round(hd95 + 1.0, 6)},
            {"epoch": 2, "dsc": dsc, "hd95": hd95},
        ],
    }


def serve(handler):
    if os.environ.get("STUB_SKIP_READY") != "1":
        version = int(os.environ.get("STUB_PROTOCOL_VERSION", "1"))
        print(json.dumps({"type": "ready", "protocol_version": version}), flush=True)
    for request in read_requests():
        out = handler(request)
        if out is None:
            continue
        if out == "exit":
            sys.exit(3)
        if isinstance(out, str):
            print(out, flush=True)
        else:
            print(json.dumps(out), flush=True)
