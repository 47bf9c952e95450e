#!/usr/bin/env python3
"""Colour-keyed keypoint detector used by the CLI tests.

Reads the image named by HFORGE_IMAGE, finds the centroid of each marker
colour and writes `joint_id u v confidence` lines to the path in argv[1].
"""
import os
import sys

import numpy as np
from PIL import Image

LEVELS = (0, 128, 255)


def marker_color(joint):
    code = joint + 1
    return LEVELS[code % 3], LEVELS[(code // 3) % 3], LEVELS[(code // 9) % 3]


def main():
    img = np.asarray(Image.open(os.environ["HFORGE_IMAGE"]).convert("RGB")).astype(np.int32)
    lines = ["# marker detector"]
    for joint in range(17):
        r, g, b = marker_color(joint)
        hit = (img[:, :, 0] == r) & (img[:, :, 1] == g) & (img[:, :, 2] == b)
        ys, xs = np.nonzero(hit)
        if len(xs) < 3:
            continue
        lines.append(f"{joint} {float(xs.mean())!r} {float(ys.mean())!r} 1.0")
    with open(sys.argv[1], "w") as out:
        out.write("\n".join(lines) + "\n")


if __name__ == "__main__":
    main()
