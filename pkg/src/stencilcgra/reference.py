"""Scalar ground truth for stencil results and memory traffic.

Both stencils accumulate in one fixed order so results can be compared
bit-for-bit with the dataflow simulation:

* x terms left to right, starting with ``coeff[0] * in[i - rx]``;
* then y terms for ``dy = -ry .. -1, +1 .. +ry``.

Every step is a rounded multiply followed by a rounded add (no fused
multiply-add), which is what numpy does for separate ``*`` and ``+``.
Cells outside the interior keep the NaN sentinel.
"""

from __future__ import annotations

import numpy as np

SENTINEL = np.nan


class BadRadius(ValueError):
    pass


def stencil1d_ref(grid, rx: int, coeffs) -> np.ndarray:
    src = np.asarray(grid, dtype=np.float64)
    coeffs = [float(c) for c in coeffs]
    n = src.shape[0]
    if rx < 0 or len(coeffs) != 2 * rx + 1:
        raise BadRadius(f"radius {rx} with {len(coeffs)} coefficients")
    if n <= 2 * rx:
        raise BadRadius(f"grid of {n} points too small for radius {rx}")
    out = np.full(n, SENTINEL)
    m = n - 2 * rx
    acc = coeffs[0] * src[0:m]
    for p in range(1, 2 * rx + 1):
        acc = acc + coeffs[p] * src[p:p + m]
    out[rx:n - rx] = acc
    return out


def stencil2d_ref(grid, rx: int, ry: int, coeff_x, coeff_y) -> np.ndarray:
    """Star stencil on a row-major ``(ny, nx)`` grid.

    ``coeff_y[ry]`` (the center) is ignored; the center point is counted
    once, through ``coeff_x[rx]``.
    """
    src = np.asarray(grid, dtype=np.float64)
    if src.ndim != 2:
        raise BadRadius("expected a 2D grid")
    ny, nx = src.shape
    cx = [float(c) for c in coeff_x]
    cy = [float(c) for c in coeff_y]
    if rx < 0 or ry < 0 or len(cx) != 2 * rx + 1 or len(cy) != 2 * ry + 1:
        raise BadRadius(f"radii ({rx}, {ry}) vs coefficients ({len(cx)}, {len(cy)})")
    if nx <= 2 * rx or ny <= 2 * ry:
        raise BadRadius(f"grid {nx}x{ny} too small for radii ({rx}, {ry})")
    mx, my = nx - 2 * rx, ny - 2 * ry
    rows = slice(ry, ry + my)
    acc = cx[0] * src[rows, 0:mx]
    for p in range(1, 2 * rx + 1):
        acc = acc + cx[p] * src[rows, p:p + mx]
    for dy in [*range(-ry, 0), *range(1, ry + 1)]:
        acc = acc + cy[ry + dy] * src[ry + dy:ry + dy + my, rx:rx + mx]
    out = np.full((ny, nx), SENTINEL)
    out[ry:ny - ry, rx:nx - rx] = acc
    return out


def strip_widths(nx: int, rx: int, block_width: int) -> list[int]:
    """Input widths of consecutive vertical strips overlapping by 2*rx."""
    widths = []
    start = 0
    while True:
        end = min(start + block_width, nx)
        widths.append(end - start)
        if end == nx:
            return widths
        start = end - 2 * rx


def traffic_oracle(spec) -> dict[str, int]:
    """Expected load and store counts for one sweep over ``spec``.

    Accepts a 1D spec (has ``n``) or a 2D spec (has ``nx``/``ny``).  The 2D
    strip cover is enumerated here directly rather than taken from the
    generator's block plan.
    """
    if hasattr(spec, "n"):
        return {"loads_expected": spec.n, "stores_expected": spec.n - 2 * spec.rx}
    nx, ny, rx, ry = spec.nx, spec.ny, spec.rx, spec.ry
    budget = spec.storage_budget
    if ry == 0 or budget is None:
        width = nx
    else:
        width = min(nx, budget // (2 * ry))
    loads = sum(strip_widths(nx, rx, width)) * ny
    return {"loads_expected": loads, "stores_expected": (nx - 2 * rx) * (ny - 2 * ry)}
