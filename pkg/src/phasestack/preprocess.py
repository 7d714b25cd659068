"""Pre-processing ahead of pattern classification: piston shift and
2x2 average pooling.

Pooling averages the wrapped values arithmetically, exactly as a stock
average-pooling layer would; circular averaging here would change the
cluster geometry the classifier sees.
"""

from __future__ import annotations

import numpy as np

from .core import check_frame, check_mask, wrap


def center_pixel(shape: tuple[int, int]) -> tuple[int, int]:
    """Anchor pixel (floor(h/2), floor(w/2)) used for piston removal."""
    h, w = shape
    return h // 2, w // 2


def piston_shift(
    frame: np.ndarray,
    mask: np.ndarray,
    anchor: tuple[int, int] | None = None,
) -> np.ndarray:
    """Remove the piston term by re-wrapping relative to the anchor pixel.

    output(m, n) = wrap(input(m, n) - input(i, j)) with (i, j) the center
    pixel by default; the anchor pixel of the output is exactly 0.

    Raises
    ------
    ValueError
        If the anchor pixel is invalid; pass an alternate ``anchor``.
    """
    frame = np.asarray(frame, dtype=np.float64)
    check_frame(frame, mask)
    check_mask(mask)
    if anchor is None:
        anchor = center_pixel(frame.shape)
    i, j = anchor
    if not mask[i, j]:
        raise ValueError(
            f"piston anchor pixel ({i}, {j}) is invalid; "
            "supply an alternate anchor inside the aperture"
        )
    out = wrap(frame - frame[i, j])
    return np.where(mask, out, 0.0)


def avg_pool2(frame: np.ndarray, mask: np.ndarray):
    """2x2 average pooling of a wrapped frame under a mask.

    Each output pixel is the arithmetic mean of the valid pixels in its
    2x2 block (re-wrapped into (-pi, pi]); it is invalid only when all
    four inputs are invalid.  A trailing odd row or column is dropped.

    Returns
    -------
    (pooled_frame, pooled_mask) with dims (floor(h/2), floor(w/2))

    Raises
    ------
    ValueError
        If the pooled result would be smaller than 4x4 (over-pooled;
        repeated pooling destroys the pattern features).
    """
    frame = np.asarray(frame, dtype=np.float64)
    mask = np.asarray(mask, dtype=bool)
    check_frame(frame, mask)
    h, w = frame.shape
    ho, wo = h // 2, w // 2
    if ho < 4 or wo < 4:
        raise ValueError(f"avg_pool2: pooled size {ho}x{wo} is below the 4x4 minimum")
    f = np.where(mask, frame, 0.0)[: 2 * ho, : 2 * wo]
    m = mask[: 2 * ho, : 2 * wo]
    blocks = f.reshape(ho, 2, wo, 2)
    counts = m.reshape(ho, 2, wo, 2).sum(axis=(1, 3))
    sums = blocks.sum(axis=(1, 3))
    pooled_mask = counts > 0
    with np.errstate(invalid="ignore"):
        pooled = np.where(pooled_mask, sums / np.maximum(counts, 1), 0.0)
    return wrap(pooled), pooled_mask


def prepare_for_clustering(
    frames: np.ndarray,
    mask: np.ndarray,
    pool_levels: int = 1,
    anchor: tuple[int, int] | None = None,
):
    """Piston-shift every frame, then pool ``pool_levels`` times.

    Returns (shifted_frames, pooled_frames, pooled_mask); the full-
    resolution piston-shifted frames feed the denoiser, the pooled copies
    feed the classifier.
    """
    if pool_levels < 0:
        raise ValueError("pool_levels must be >= 0")
    shifted = np.stack([piston_shift(f, mask, anchor) for f in frames])
    pooled = shifted
    pooled_mask = mask
    for _ in range(pool_levels):
        new_frames = []
        for f in pooled:
            pf, pm = avg_pool2(f, pooled_mask)
            new_frames.append(pf)
        pooled = np.stack(new_frames)
        pooled_mask = pm
    return shifted, pooled, pooled_mask
