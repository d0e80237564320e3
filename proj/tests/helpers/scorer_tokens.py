#!/usr/bin/env python3
"""Relevance scorer stub: each step scores its whitespace token count."""
import json
import sys

for line in sys.stdin:
    req = json.loads(line)
    scores = [float(len(step.split())) for step in req["steps"]]
    print(json.dumps({"id": req["id"], "scores": scores, "aggregation": "l2_sum"}), flush=True)
