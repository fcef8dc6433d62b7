#!/usr/bin/env python3
# Copyright 2026 The gridtopo Authors
#
# Licensed under the Apache License, Version 2.0 (the "License");
# you may not use this file except in compliance with the License.
# You may obtain a copy of the License at
#
#     http://www.apache.org/licenses/LICENSE-2.0
#
# Unless required by applicable law or agreed to in writing, software
# distributed under the License is distributed on an "AS IS" BASIS,
# WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
# See the License for the specific language governing permissions and
# limitations under the License.
"""Writes the IEEE 39-bus network files used by the examples and tests.

Line susceptances are 1/x from the standard branch reactances (parallel
transformer data folded into single lines). Generator inertia is
M = 2H / (2 pi 60) from the usual machine constants; load buses get
M = 1e-4, and every bus has damping 0.025.

    python3 tools/ieee39_fixture.py data/
"""

import json
import math
import sys
from pathlib import Path

BRANCHES = [
    (1, 2, 0.0411), (1, 39, 0.0250), (2, 3, 0.0151), (2, 25, 0.0086),
    (2, 30, 0.0181), (3, 4, 0.0213), (3, 18, 0.0133), (4, 5, 0.0128),
    (4, 14, 0.0129), (5, 6, 0.0026), (5, 8, 0.0112), (6, 7, 0.0092),
    (6, 11, 0.0082), (6, 31, 0.0250), (7, 8, 0.0046), (8, 9, 0.0363),
    (9, 39, 0.0250), (10, 11, 0.0043), (10, 13, 0.0043), (10, 32, 0.0200),
    (12, 11, 0.0435), (12, 13, 0.0435), (13, 14, 0.0101), (14, 15, 0.0217),
    (15, 16, 0.0094), (16, 17, 0.0089), (16, 19, 0.0195), (16, 21, 0.0135),
    (16, 24, 0.0059), (17, 18, 0.0082), (17, 27, 0.0173), (19, 20, 0.0138),
    (19, 33, 0.0142), (20, 34, 0.0180), (21, 22, 0.0140), (22, 23, 0.0096),
    (22, 35, 0.0143), (23, 24, 0.0350), (23, 36, 0.0272), (25, 26, 0.0323),
    (25, 37, 0.0232), (26, 27, 0.0147), (26, 28, 0.0474), (26, 29, 0.0625),
    (28, 29, 0.0151), (29, 38, 0.0156),
]

# Ten lines that do not exist in the base case, between buses two hops apart.
CANDIDATES = [
    (1, 9, 0.0300), (3, 14, 0.0250), (4, 6, 0.0200), (8, 11, 0.0300),
    (13, 15, 0.0250), (16, 23, 0.0200), (17, 26, 0.0300), (21, 24, 0.0200),
    (22, 24, 0.0300), (25, 28, 0.0350),
]

INERTIA_H = {30: 42.0, 31: 30.3, 32: 35.8, 33: 28.6, 34: 26.0, 35: 34.8,
             36: 26.4, 37: 24.3, 38: 34.5, 39: 500.0}
LOAD_INERTIA = 1e-4
DAMPING = 0.025
OMEGA_S = 2.0 * math.pi * 60.0


def bus_record(bus, reference, inertia_override=None):
    if inertia_override is not None:
        m = inertia_override
    elif bus in INERTIA_H:
        m = round(2.0 * INERTIA_H[bus] / OMEGA_S, 9)
    else:
        m = LOAD_INERTIA
    return {"id": bus, "inertia": m, "damping": DAMPING,
            "is_reference": bus == reference}


def line_record(a, b, x, status):
    return {"from": a, "to": b, "susceptance": round(1.0 / x, 6),
            "status": status}


def full_network():
    lines = [line_record(a, b, x, "existing") for a, b, x in BRANCHES]
    lines += [line_record(a, b, x, "candidate") for a, b, x in CANDIDATES]
    return {
        "schema": 1,
        "name": "ieee39",
        "defaults": {"inertia": LOAD_INERTIA, "damping": DAMPING},
        "metric": {"preset": "coherence"},
        "buses": [bus_record(b, 31) for b in range(1, 40)],
        "lines": lines,
    }


# Western corner of the system: buses 1-11, 13, 14, 30 and 39 with every
# branch among them as a radial-design candidate. Bus 30 hangs off bus 2
# only, so it serves as the reference. Inertia is 0.1 on load buses here so
# that impulse simulations run with an ordinary step.
SUB_BUSES = [1, 2, 3, 4, 5, 6, 7, 8, 9, 10, 11, 13, 14, 30, 39]


def subnetwork():
    keep = set(SUB_BUSES)
    lines = [line_record(a, b, x, "candidate") for a, b, x in BRANCHES
             if a in keep and b in keep]
    buses = [bus_record(b, 30, None if b in INERTIA_H else 0.1)
             for b in SUB_BUSES]
    return {
        "schema": 1,
        "name": "ieee39-west15",
        "defaults": {"inertia": 0.1, "damping": DAMPING},
        "metric": {"preset": "coherence"},
        "buses": buses,
        "lines": lines,
    }


def main():
    out = Path(sys.argv[1] if len(sys.argv) > 1 else ".")
    out.mkdir(parents=True, exist_ok=True)
    for name, net in (("ieee39.json", full_network()),
                      ("ieee39_west15.json", subnetwork())):
        (out / name).write_text(json.dumps(net, indent=1) + "\n")


if __name__ == "__main__":
    main()
