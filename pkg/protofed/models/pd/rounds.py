""" Federation round configuration """

from pydantic import BaseModel, ConfigDict, Field

from ..enums.all import Aggregation, OptimizerKind
from .loss import LossConfig


class RoundConfig(BaseModel):
    model_config = ConfigDict(
        extra="forbid",
        json_schema_extra={
            "metadata": {
                "label": "Communication rounds",
                "section": "rounds",
            }
        }
    )

    rounds: int = Field(20, ge=0, description="Communication rounds R")
    epochs: int = Field(100, ge=1, description="Local epochs E per round")
    clients: int = Field(4, ge=1, description="Client count K")
    batch_size: int = Field(64, ge=2, description="Windows per mini-batch; single-window batches are never trained on")
    optimizer: OptimizerKind = OptimizerKind.SGD
    lr: float = Field(0.01, ge=0.0)
    momentum: float = Field(0.0, ge=0.0, lt=1.0)
    beta1: float = Field(0.9, ge=0.0, lt=1.0)
    beta2: float = Field(0.999, ge=0.0, lt=1.0)
    adam_eps: float = Field(1e-8, gt=0.0)
    loss: LossConfig = Field(default_factory=LossConfig)
    aggregation: Aggregation = Aggregation.NORMALIZED
    parallel: bool = Field(False, description="Run client exchanges on a worker pool")
    client_timeout: float = Field(3600.0, gt=0.0, description="Seconds to wait for one client exchange")
    seed: int = 0
