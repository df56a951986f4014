from typing import Tuple

from pydantic import BaseModel, Field


class GraphSpec(BaseModel):
    """Fixed stride-K row/column/depth connectivity over a (D, H, W) voxel grid."""

    stride_k: int = Field(ge=1, description="Distance between connected voxels.")
    dims: Tuple[int, int, int] = Field(description="Spatial extent (D, H, W).")

    model_config = {"frozen": True}
