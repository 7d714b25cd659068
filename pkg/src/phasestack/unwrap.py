"""Goldstein branch-cut phase unwrapping.

Residues (from phase_core.detect_residues) live on the dual lattice: the
charge at (i, j) sits between the four pixels whose top-left corner is
(i, j).  Branch cuts are blocked pixel edges; the flood-fill integration
never crosses a blocked edge, so no integration path can encircle an
unbalanced residue.

Unwrapped values are computed as psi + 2*pi*k with integer k propagated
from the seed, which makes path independence and the output-minus-input
multiple-of-2*pi property exact rather than accumulation-limited.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy import ndimage

from .core import TWO_PI, check_frame, detect_residues, mask_is_connected, wrap

_CROSS = np.array([[0, 1, 0], [1, 1, 1], [0, 1, 0]], dtype=bool)


@dataclass
class Surface:
    """Continuous (unwrapped) phase surface.

    values is in radians, defined up to a global additive 2*pi*k; mask
    marks the pixels actually reached by the integration.  warning is set
    when more than half of the valid input pixels were unreachable.
    """

    values: np.ndarray
    mask: np.ndarray
    warning: str | None = None


@dataclass
class BranchCutMap:
    """Blocked pixel edges barring integration paths.

    cut_right[r, c] blocks the edge between pixels (r, c) and (r, c+1);
    cut_down[r, c] blocks the edge between (r, c) and (r+1, c).
    """

    cut_right: np.ndarray
    cut_down: np.ndarray

    @property
    def edge_count(self) -> int:
        return int(self.cut_right.sum()) + int(self.cut_down.sum())

    def block_step(self, r: int, c: int, dr: int, dc: int) -> None:
        """Block the pixel edge crossed by a unit dual-lattice step."""
        if dc == 1:
            er, ec, arr = r, c + 1, self.cut_down
        elif dc == -1:
            er, ec, arr = r, c, self.cut_down
        elif dr == 1:
            er, ec, arr = r + 1, c, self.cut_right
        else:
            er, ec, arr = r, c, self.cut_right
        if 0 <= er < arr.shape[0] and 0 <= ec < arr.shape[1]:
            arr[er, ec] = True


def _cut_path(cuts: BranchCutMap, r0: int, c0: int, r1: int, c1: int) -> None:
    """Block edges along a 4-connected Bresenham path between dual nodes."""
    dr, dc = r1 - r0, c1 - c0
    sr = 1 if dr >= 0 else -1
    sc = 1 if dc >= 0 else -1
    dr, dc = abs(dr), abs(dc)
    r, c = r0, c0
    if dc >= dr:
        err = dc // 2
        for _ in range(dc):
            cuts.block_step(r, c, 0, sc)
            c += sc
            err -= dr
            if err < 0:
                cuts.block_step(r, c, sr, 0)
                r += sr
                err += dc
    else:
        err = dr // 2
        for _ in range(dr):
            cuts.block_step(r, c, sr, 0)
            r += sr
            err -= dc
            if err < 0:
                cuts.block_step(r, c, 0, sc)
                c += sc
                err += dr


def _border_sinks(mask: np.ndarray) -> np.ndarray:
    """Dual nodes whose 2x2 loop touches a border-connected invalid region.

    Interior invalid holes are not sinks: a cut ending at one would not
    stop integration paths from circling around it.
    """
    h, w = mask.shape
    invalid = ~mask
    if not invalid.any():
        return np.zeros((h - 1, w - 1), dtype=bool)
    labels, _ = ndimage.label(invalid, structure=np.ones((3, 3), dtype=bool))
    edge_labels = np.unique(
        np.concatenate([labels[0, :], labels[-1, :], labels[:, 0], labels[:, -1]])
    )
    grounded = np.isin(labels, edge_labels[edge_labels > 0])
    g = grounded
    touches = g[:-1, :-1] | g[:-1, 1:] | g[1:, :-1] | g[1:, 1:]
    return touches


def place_branch_cuts(charges: np.ndarray, mask: np.ndarray | None = None) -> BranchCutMap:
    """Goldstein branch-cut placement.

    Residues are visited in raster order.  Around each unbalanced residue
    a square search box grows one ring at a time (up to max(width, height));
    ring cells are scanned in raster order and the first hit wins: an
    opposite-charge unbalanced residue is paired with a cut chain, while a
    cell beyond the lattice or on a border-connected invalid region
    grounds the residue with a cut to the border.  Every residue ends
    balanced because the border is always reachable.
    """
    charges = np.asarray(charges)
    if charges.ndim != 2:
        raise ValueError("place_branch_cuts: charges must be 2-D")
    hh, ww = charges.shape
    h, w = hh + 1, ww + 1
    cuts = BranchCutMap(
        cut_right=np.zeros((h, w - 1), dtype=bool),
        cut_down=np.zeros((h - 1, w), dtype=bool),
    )
    if mask is None:
        sinks = np.zeros((hh, ww), dtype=bool)
    else:
        mask = np.asarray(mask, dtype=bool)
        if mask.shape != (h, w):
            raise ValueError("place_branch_cuts: mask shape mismatch")
        sinks = _border_sinks(mask)
    positions = np.argwhere(charges != 0)
    if positions.size == 0:
        return cuts

    balanced = np.zeros((hh, ww), dtype=bool)
    max_radius = max(h, w)
    for i0, j0 in positions:
        if balanced[i0, j0]:
            continue
        sign = charges[i0, j0]
        done = False
        for radius in range(1, max_radius + 1):
            for i, j in _ring(i0, j0, radius):
                inside = 0 <= i < hh and 0 <= j < ww
                if not inside or sinks[i, j]:
                    _cut_path(cuts, i0, j0, i, j)
                    balanced[i0, j0] = True
                    done = True
                    break
                if charges[i, j] == -sign and not balanced[i, j]:
                    _cut_path(cuts, i0, j0, i, j)
                    balanced[i0, j0] = True
                    balanced[i, j] = True
                    done = True
                    break
            if done:
                break
        if not done:  # unreachable: border ring always exists within max_radius
            raise AssertionError("branch cut search failed to terminate")
    return cuts


def _ring(i0: int, j0: int, r: int):
    """Cells at Chebyshev distance r from (i0, j0), in raster order."""
    out = []
    for j in range(j0 - r, j0 + r + 1):
        out.append((i0 - r, j))
    for i in range(i0 - r + 1, i0 + r):
        out.append((i, j0 - r))
        out.append((i, j0 + r))
    for j in range(j0 - r, j0 + r + 1):
        out.append((i0 + r, j))
    return out


def default_seed(mask: np.ndarray) -> tuple:
    """Valid pixel nearest the mask centroid (raster order on ties)."""
    rows, cols = np.nonzero(mask)
    if rows.size == 0:
        raise ValueError("default_seed: mask has no valid pixels")
    cy, cx = rows.mean(), cols.mean()
    k = np.argmin((rows - cy) ** 2 + (cols - cx) ** 2)
    return int(rows[k]), int(cols[k])


def _k_increments(frame: np.ndarray):
    """Integer 2*pi counts picked up when stepping between neighbors.

    Stepping from pixel a to neighbor b adds wrap(psi_b - psi_a) to the
    running surface; in integer form k_b = k_a + rint((wrap(d) - d)/2pi)
    with d = psi_b - psi_a.  Computed for all four step directions.
    """

    def inc(d):
        return np.rint((wrap(d) - d) / TWO_PI).astype(np.int64)

    d_right = frame[:, 1:] - frame[:, :-1]
    d_down = frame[1:, :] - frame[:-1, :]
    return inc(d_right), inc(-d_right), inc(d_down), inc(-d_down)


def flood_unwrap(
    frame: np.ndarray,
    mask: np.ndarray | None = None,
    cuts: BranchCutMap | None = None,
    seed: tuple | None = None,
) -> Surface:
    """Flood-fill integration from a seed pixel, never crossing a cut edge.

    The seed keeps its input value; every reached neighbor gets
    current + wrapped_diff(neighbor, current).  Pixels that cannot be
    reached without crossing a cut are invalid in the output mask.
    """
    frame = np.asarray(frame, dtype=np.float64)
    check_frame(frame, mask)
    h, w = frame.shape
    if mask is None:
        mask = np.ones((h, w), dtype=bool)
    else:
        mask = np.asarray(mask, dtype=bool)
    if not mask_is_connected(mask):
        raise ValueError("flood_unwrap: valid region is not 4-connected")
    if cuts is None:
        cuts = BranchCutMap(
            cut_right=np.zeros((h, w - 1), dtype=bool),
            cut_down=np.zeros((h - 1, w), dtype=bool),
        )
    if seed is None:
        seed = default_seed(mask)
    sr, sc = seed
    if not (0 <= sr < h and 0 <= sc < w) or not mask[sr, sc]:
        raise ValueError("flood_unwrap: seed pixel is not valid")

    inc_r, inc_l, inc_d, inc_u = _k_increments(frame)
    ok_right = mask[:, :-1] & mask[:, 1:] & ~cuts.cut_right
    ok_down = mask[:-1, :] & mask[1:, :] & ~cuts.cut_down

    k = np.zeros((h, w), dtype=np.int64)
    visited = np.zeros((h, w), dtype=bool)
    visited[sr, sc] = True
    front_r = np.array([sr])
    front_c = np.array([sc])
    while front_r.size:
        new_r, new_c = [], []
        # fixed direction order: right, down, left, up
        for dr, dc, ok, inc in (
            (0, 1, ok_right, inc_r),
            (1, 0, ok_down, inc_d),
            (0, -1, ok_right, inc_l),
            (-1, 0, ok_down, inc_u),
        ):
            if dc == 1:
                sel = (front_c < w - 1) & ok[front_r, np.minimum(front_c, w - 2)]
            elif dc == -1:
                sel = (front_c > 0) & ok[front_r, np.maximum(front_c - 1, 0)]
            elif dr == 1:
                sel = (front_r < h - 1) & ok[np.minimum(front_r, h - 2), front_c]
            else:
                sel = (front_r > 0) & ok[np.maximum(front_r - 1, 0), front_c]
            r0, c0 = front_r[sel], front_c[sel]
            r1, c1 = r0 + dr, c0 + dc
            fresh = ~visited[r1, c1]
            r0, c0, r1, c1 = r0[fresh], c0[fresh], r1[fresh], c1[fresh]
            if dc == 1:
                k[r1, c1] = k[r0, c0] + inc[r0, c0]
            elif dc == -1:
                k[r1, c1] = k[r0, c0] + inc[r0, c0 - 1]
            elif dr == 1:
                k[r1, c1] = k[r0, c0] + inc[r0, c0]
            else:
                k[r1, c1] = k[r0, c0] + inc[r0 - 1, c0]
            visited[r1, c1] = True
            new_r.append(r1)
            new_c.append(c1)
        front_r = np.concatenate(new_r)
        front_c = np.concatenate(new_c)

    values = np.where(visited, frame + TWO_PI * k, 0.0)
    n_valid = int(mask.sum())
    n_reached = int(visited.sum())
    warning = None
    if n_reached < n_valid:
        unreachable = n_valid - n_reached
        if unreachable > 0.5 * n_valid:
            warning = (
                f"unwrap reached only {n_reached} of {n_valid} valid pixels; "
                "branch cuts isolated most of the aperture"
            )
    return Surface(values=values, mask=visited, warning=warning)


class GoldsteinUnwrapper:
    """Residue detection, branch-cut placement, and flood integration.

    Counts invocations so a pipeline can report how many unwraps a
    strategy actually performed.
    """

    def __init__(self):
        self.call_count = 0

    def __call__(
        self,
        frame: np.ndarray,
        mask: np.ndarray | None = None,
        seed: tuple | None = None,
    ) -> Surface:
        self.call_count += 1
        charges = detect_residues(frame, mask)
        cuts = place_branch_cuts(charges, mask)
        return flood_unwrap(frame, mask, cuts, seed=seed)

    def reset(self) -> None:
        self.call_count = 0


def unwrap(frame: np.ndarray, mask: np.ndarray | None = None, seed: tuple | None = None) -> Surface:
    """One-shot Goldstein unwrap of a single frame."""
    return GoldsteinUnwrapper()(frame, mask, seed=seed)
