"""
The command line, end to end
============================

Every library capability is reachable from `python3 -m gaucho` (or the
`gaucho` entry point) over files and pipes: format conversion, loss
landscapes, evaluation, the bounds self-check, and per-record JSONL
transforms. This script drives the CLI in-process against a temporary
directory and prints what each step produced.
"""

import json
import tempfile
from pathlib import Path

from gaucho.cli import main

tmp = Path(tempfile.mkdtemp(prefix="gaucho-demo-"))

# a small DOTA-style annotation file: 8 corner coords, category, difficult
(tmp / "scene.txt").write_text(
    "imagesource:demo\n"
    "gsd:0.5\n"
    "0 0 6 0 6 2 0 2 ship 0\n"
    "10 0 14 0 14 4 10 4 vehicle 0\n"
)

print("convert DOTA -> gaucho JSONL:")
rc = main(["convert", str(tmp / "scene.txt"), "--from", "dota", "--to",
           "gaucho", "--out", str(tmp / "scene.jsonl")])
for line in (tmp / "scene.jsonl").read_text().splitlines():
    print(" ", line)
print("exit code", rc)

# %%
# The landscape command emits CSV; here the ground truth sits at 89
# degrees and the sweep finds the boundary attractor at -90 as well.

rc = main(["landscape", "--gt", "3,1,89", "--dims", "3,1", "--loss", "kld",
           "--steps", "720", "--out", str(tmp / "land.csv")])
rows = (tmp / "land.csv").read_text().splitlines()
print()
print("landscape head:", rows[0])
for r in rows:
    if r.endswith(("local_min", "global_min")):
        print(" ", r)

# %%
# Evaluation consumes two JSONL files. Reusing the ground truth as its
# own predictions gives perfect AP and zero orientation error.

gt_lines = (tmp / "scene.jsonl").read_text().splitlines()
dets = []
for line in gt_lines:
    rec = json.loads(line)
    rec["score"] = 0.95
    dets.append(json.dumps(rec))
(tmp / "dets.jsonl").write_text("\n".join(dets) + "\n")

print()
print("eval, predictions == ground truth:")
rc = main(["eval", "--pred", str(tmp / "dets.jsonl"), "--gt",
           str(tmp / "scene.jsonl"), "--thresholds", "0.5,0.75",
           "--orientation"])

# %%
# The bounds self-check samples random shapes and verifies the Cholesky
# band on each; exit code 0 means no violations.

print()
rc = main(["bounds-check", "--samples", "20000", "--seed", "3"])
print("bounds-check exit code", rc)
