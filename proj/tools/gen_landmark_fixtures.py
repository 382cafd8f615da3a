#!/usr/bin/env python3
# Copyright 2026 The Smiledesign Authors
#
# Licensed under the Apache License, Version 2.0 (the "License");
# you may not use this file except in compliance with the License.
# You may obtain a copy of the License at
#
# https://www.apache.org/licenses/LICENSE-2.0
#
# Unless required by applicable law or agreed to in writing, software
# distributed under the License is distributed on an "AS IS" BASIS,
# WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
# See the License for the specific language governing permissions and
# limitations under the License.
"""Writes landmark interchange fixtures.

valid_NN.json are pretty-printed with shuffled key order; valid_NN.canonical
holds the expected single-line form built independently here.
"""

import argparse
import json
import pathlib
import random

MESH = 468


def point(rng):
    x = round(rng.uniform(0.05, 0.95), 6)
    y = round(rng.uniform(0.05, 0.95), 6)
    z = round(rng.choice([-1, 1]) * rng.uniform(0.01, 0.08), 5)
    return [x, y, z]


def canonical(doc):
    pts = ",".join("[" + ",".join(repr(float(v)) for v in p) + "]" for p in doc["points"])
    return ('{"version":1,"source_id":%s,"image":{"width":%d,"height":%d},"points":[%s]}\n'
            % (json.dumps(doc.get("source_id", "")), doc["image"]["width"],
               doc["image"]["height"], pts))


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--out", default="tests/fixtures/landmarks")
    ap.add_argument("--seed", type=int, default=468)
    args = ap.parse_args()
    out = pathlib.Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    rng = random.Random(args.seed)

    for i in range(20):
        pts = [point(rng) for _ in range(MESH)]
        if i % 4 == 0:
            pts[0] = [0, 1, 0]
        doc = {"points": pts, "image": {"height": rng.randint(512, 2048), "width": rng.randint(512, 2048)},
               "version": 1}
        if i % 3 != 2:
            doc["source_id"] = "fixture-%02d" % i
        (out / ("valid_%02d.json" % i)).write_text(json.dumps(doc, indent=2) + "\n")
        (out / ("valid_%02d.canonical" % i)).write_text(canonical(doc))

    short = {"version": 1, "image": {"width": 640, "height": 640},
             "points": [point(rng) for _ in range(MESH - 1)]}
    (out / "short_467.json").write_text(json.dumps(short) + "\n")

    bad = {"version": 1, "image": {"width": 640, "height": 640},
           "points": [point(rng) for _ in range(MESH)]}
    bad["points"][200][0] = 1.25
    (out / "out_of_range.json").write_text(json.dumps(bad) + "\n")


if __name__ == "__main__":
    main()
