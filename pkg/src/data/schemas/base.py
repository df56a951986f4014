from pydantic import BaseModel, ConfigDict


class ArrayModel(BaseModel):
    """Base model for records that carry numpy arrays or tensors."""

    model_config = ConfigDict(arbitrary_types_allowed=True)
