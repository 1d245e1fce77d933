"""
Tile coding - sparse binary features for low-dimensional inputs

Each tiling is a uniform grid of `tiles` cells per dimension over the
normalized input range, shifted by an asymmetric fraction of a tile
(displacement 1, 3, 5, ... per dimension). Exactly one tile per tiling is
active, so a coded observation is `tilings` indices.
"""

from typing import Sequence, Tuple

import numpy as np


class TileCoder:
    """
    Grid tile coder

    Feature index layout: tiling-major, then the row-major tile coordinate,
    so indices fall in [0, tilings * tiles**d).
    """

    def __init__(self, tiles: int, tilings: int, bounds: Sequence[Tuple[float, float]]):
        if tiles < 1 or tilings < 1:
            raise ValueError("tiles and tilings must be >= 1")
        self.tiles = int(tiles)
        self.tilings = int(tilings)
        self.bounds = np.asarray(bounds, dtype=float)
        if self.bounds.ndim != 2 or self.bounds.shape[1] != 2:
            raise ValueError("bounds must be a sequence of (low, high) pairs")
        if np.any(self.bounds[:, 1] <= self.bounds[:, 0]):
            raise ValueError("each bound must satisfy low < high")

        self.dims = self.bounds.shape[0]
        self.tiles_per_tiling = self.tiles ** self.dims
        self.size = self.tilings * self.tiles_per_tiling

        displacement = 2 * np.arange(self.dims) + 1
        self._offsets = (np.arange(self.tilings)[:, None] * displacement[None, :] / self.tilings) % 1.0
        self._strides = self.tiles ** np.arange(self.dims - 1, -1, -1)
        self._tiling_base = np.arange(self.tilings) * self.tiles_per_tiling
        self._low = self.bounds[:, 0]
        self._span = self.bounds[:, 1] - self.bounds[:, 0]

    def encode(self, obs) -> np.ndarray:
        """Active feature indices for one observation (out-of-range values are clipped)"""
        normalized = np.clip((np.asarray(obs, dtype=float) - self._low) / self._span, 0.0, 1.0)
        scaled = normalized * (self.tiles - 1) + self._offsets
        coords = np.minimum(scaled.astype(np.int64), self.tiles - 1)
        return self._tiling_base + coords @ self._strides

    __call__ = encode


def tile_code(obs, tiles: int, tilings: int, bounds: Sequence[Tuple[float, float]]) -> np.ndarray:
    """One-shot tile coding; agents keep a TileCoder instead"""
    return TileCoder(tiles, tilings, bounds).encode(obs)
