#!/usr/bin/env python3
# Copyright 2026 The convfeat Authors.
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
"""Writes the binary and text fixtures used by golden_test.

Encoders here are written from the format descriptions only, so they act as
an independent check on the C++ readers and writers.
"""

import json
import os
import struct

HERE = os.path.dirname(os.path.abspath(__file__))

SPEC = """data input channels=3 height=8 width=8
conv1 conv num_output=2 kernel=3 stride=1 pad=1
relu1 relu
pool1 pool window=2 stride=2
norm1 lrn local_size=5 alpha=1e-04 beta=0.75 k=2
fc2 fc num_output=3
drop2 dropout
prob softmax
"""


def u32(v):
  return struct.pack("<I", v)


def floats(values):
  return struct.pack("<%df" % len(values), *values)


def ramp(n, scale, offset):
  return [scale * i + offset for i in range(n)]


def dcf():
  layers = [
      ("conv1", (2, 3, 3, 3), ramp(54, 0.125, -3.0), [0.5, -0.5]),
      ("fc2", (3, 32, 1, 1), ramp(96, -0.0625, 2.0), [1.0, 0.0, -1.0]),
  ]
  out = b"DCF1" + u32(len(layers))
  for name, shape, weights, bias in layers:
    out += u32(len(name)) + name.encode()
    out += b"".join(u32(d) for d in shape)
    out += floats(weights)
    out += u32(len(bias)) + floats(bias)
  out += b"MEAN" + b"".join(u32(d) for d in (1, 3, 9, 9))
  out += floats(ramp(243, 0.5, 100.0))
  return out


def string(s):
  data = s.encode()
  return u32(len(data)) + data


def fmx():
  ids = ["a.ppm", "b.ppm", "c.ppm"]
  labels = ["cat", "dog", "cat"]
  values = [0.0, 1.5, -2.25, 3.0, 4.0, -0.5, 1e-3, 7.0, 8.0, 9.5, -10.0, 0.25]
  out = b"FMX1" + u32(3) + u32(4)
  out += b"".join(string(s) for s in ids)
  out += u32(1) + b"".join(string(s) for s in labels)
  out += string("fc6") + string("0123456789abcdef")
  out += floats(values)
  return out


def report():
  splits = [
      {"accuracy": 0.75, "chosen_reg": 0.001, "confusion": [[3, 1], [1, 3]]},
      {"accuracy": 0.5, "chosen_reg": 1e-05, "confusion": [[2, 2], [2, 2]]},
  ]
  doc = {
      "protocol": "splits",
      "classifier": "svm",
      "dropout": True,
      "per_class_train": 30,
      "seed": 7,
      "classes": ["cat", "dog"],
      "mean": 0.625,
      "std": 0.17677669529663687,
      "splits": splits,
  }
  return json.dumps(doc, indent=2) + "\n"


PROFILE_CSV = """layer,kind,mean_ms,std_ms
conv1,conv,12.500000,0.250000
relu1,neuron,0.750000,0.010000
pool1,pool,1.250000,0.050000
norm1,other,0.500000,0.000000
fc6,fc,20.000000,1.125000
"""


def main():
  files = {
      "golden.spec": SPEC.encode(),
      "golden.dcf": dcf(),
      "golden.fmx": fmx(),
      "report.json": report().encode(),
      "profile.csv": PROFILE_CSV.encode(),
  }
  for name, data in files.items():
    with open(os.path.join(HERE, name), "wb") as f:
      f.write(data)


if __name__ == "__main__":
  main()
