"""Wavefront OBJ export for ribbon strips.

Each stroke becomes one object group; each quad is written as two
triangles wound counter-clockwise as seen from the strip's consistent
normal side. Output is deterministic (no timestamps, fixed formatting).
"""
from __future__ import annotations

from typing import Iterable, Sequence, TextIO

from .brush import RibbonStrip, quad_normals, quad_raw_normal


def write_obj(strips: Sequence[RibbonStrip], stream: TextIO) -> None:
    stream.write("# ribbonlab ruled-ribbon export\n")
    offset = 0
    for s_i, strip in enumerate(strips):
        stream.write(f"g stroke_{s_i}\n")
        if strip.is_empty():
            continue
        for r in strip.rulings:
            stream.write(f"v {r.left.x:.9g} {r.left.y:.9g} {r.left.z:.9g}\n")
            stream.write(f"v {r.right.x:.9g} {r.right.y:.9g} {r.right.z:.9g}\n")
        if strip.quad_count == 0:
            offset += 2 * len(strip.rulings)
            continue
        consistent = quad_normals(strip)
        for q in range(strip.quad_count):
            l0 = offset + 2 * q + 1
            r0 = offset + 2 * q + 2
            r1 = offset + 2 * q + 4
            l1 = offset + 2 * q + 3
            raw = quad_raw_normal(strip.rulings[q], strip.rulings[q + 1])
            flipped = raw is not None and raw.dot(consistent[q]) < 0.0
            if flipped:
                stream.write(f"f {l0} {r1} {r0}\n")
                stream.write(f"f {l0} {l1} {r1}\n")
            else:
                stream.write(f"f {l0} {r0} {r1}\n")
                stream.write(f"f {l0} {r1} {l1}\n")
        offset += 2 * len(strip.rulings)


def export_obj(strips: Sequence[RibbonStrip] | Iterable[RibbonStrip], path: str) -> None:
    strips = list(strips)
    with open(path, "w", encoding="utf-8") as fh:
        write_obj(strips, fh)
