#!/usr/bin/env python3
"""Anchor grid construction.

Builds the default five-level pyramid for a 512x512 image, reports how
many anchors each level contributes, and prints the first few rows of
one level to show the (cx, cy, w, h) layout: row-major over cells, then
scale, then aspect ratio.
"""

from boxsim import DEFAULT_SPEC, AnchorSpec, build_grid


def main() -> None:
    grid = build_grid(DEFAULT_SPEC, (512, 512))
    print(f"default layout on 512x512 -> {len(grid)} anchors")
    for i, (stride, base) in enumerate(DEFAULT_SPEC.levels):
        block = grid.anchors[grid.level_slice(i)]
        print(f"  level {i}: stride {stride:>4.0f}, base {base:>4.0f}, "
              f"{len(block):>6} anchors, first center "
              f"({block[0, 0]:.1f}, {block[0, 1]:.1f})")

    print()
    print("level 1, first 6 anchors (3 aspect ratios per cell):")
    block = grid.anchors[grid.level_slice(1)]
    for row in block[:6]:
        print(f"  cx={row[0]:6.1f} cy={row[1]:6.1f} w={row[2]:6.2f} h={row[3]:6.2f}")

    # A custom single-level layout with two scales.
    spec = AnchorSpec(levels=((16.0, 16.0),), scales=(1.0, 1.5),
                      ratios=(1.0,))
    small = build_grid(spec, (64, 64))
    print()
    print(f"custom layout (one 16px level, scales 1.0/1.5) on 64x64 -> "
          f"{len(small)} anchors:")
    for row in small.anchors[:4]:
        print(f"  cx={row[0]:6.1f} cy={row[1]:6.1f} w={row[2]:6.2f} h={row[3]:6.2f}")


if __name__ == "__main__":
    main()
