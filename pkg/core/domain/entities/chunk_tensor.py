"""Domain entity for chunk-decomposed high-precision values"""

from dataclasses import dataclass
from typing import Tuple

import numpy as np

from ..exceptions import ParameterRangeError, ShapeError


@dataclass(frozen=True, eq=False)
class ChunkTensor:
    """Tensor of bp-bit chunks, least-significant chunk first

    ``data`` has shape ``shape + (K,)``; the trailing axis holds the chunks of
    one value.
    """

    data: np.ndarray
    bp: int = 8

    def __post_init__(self):
        """Validate chunk width and chunk values"""
        if not 1 <= self.bp <= 16:
            raise ParameterRangeError(f"Chunk width bp={self.bp} outside [1, 16]")
        if self.data.ndim < 1:
            raise ShapeError("Chunk data needs a trailing chunk axis")
        if self.data.size and int(self.data.max()) >= (1 << self.bp):
            raise ParameterRangeError(
                f"Chunk value {int(self.data.max())} does not fit {self.bp} bits"
            )

    @property
    def K(self) -> int:
        """Chunks per value"""
        return self.data.shape[-1]

    @property
    def shape(self) -> Tuple[int, ...]:
        """Shape of the value tensor (without the chunk axis)"""
        return self.data.shape[:-1]

    def column(self, k: int) -> np.ndarray:
        """All k-th chunks"""
        return self.data[..., k]

    def __len__(self) -> int:
        return self.K
