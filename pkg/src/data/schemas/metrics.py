from typing import Dict, List, Optional

from pydantic import BaseModel, ConfigDict, Field


class LossBreakdown(BaseModel):
    """Similarity and regularisation terms of one loss evaluation."""

    model_config = ConfigDict(populate_by_name=True)

    sim: float
    reg: float
    total: float
    lambda_: float = Field(alias="lambda")


class MetricReport(BaseModel):
    """Overlap and folding metrics of one registered pair."""

    pair_id: str = ""
    dice_per_label: Dict[int, Optional[float]]
    dice_mean: float
    njd_percent: float = Field(ge=0.0, le=100.0)


class EpochRecord(BaseModel):
    epoch: int
    sim_loss: float
    reg_loss: float
    total: float
    val_dice: Optional[float] = None


class TrainingResult(BaseModel):
    history: List[EpochRecord]
    best_epoch: Optional[int] = None
    best_val_dice: Optional[float] = None
