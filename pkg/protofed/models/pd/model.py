""" LCNN backbone configuration """

from typing import Literal, Optional, Tuple

from pydantic import BaseModel, ConfigDict, Field, PositiveInt, model_validator

from ..enums.all import Activation


class LcnnConfig(BaseModel):
    model_config = ConfigDict(
        extra="forbid",
        json_schema_extra={
            "metadata": {
                "label": "LCNN backbone",
                "section": "model",
            }
        }
    )

    input_dim: PositiveInt = Field(16, description="Sensor channels d")
    window: PositiveInt = Field(32, description="Time steps T per window")
    lstm_hidden: PositiveInt = Field(32, description="LSTM hidden size h")
    conv_channels: Tuple[PositiveInt, PositiveInt, PositiveInt] = Field(
        (32, 64, 64), description="Output channels of the three conv stages"
    )
    kernel_size: PositiveInt = 3
    se_reduction: PositiveInt = 4
    embed_dim: Optional[PositiveInt] = Field(
        None, description="Embedding size m; always the last conv channel count"
    )
    num_classes: Literal[2] = 2
    activation: Activation = Activation.RELU
    dropout_rate: float = Field(0.2, ge=0.0, lt=1.0)
    clip_norm: Optional[float] = Field(
        5.0, gt=0, description="Gradient-norm clip for the LSTM parameters (None disables)"
    )

    @model_validator(mode="after")
    def _embed_dim_from_last_stage(self):
        last = self.conv_channels[-1]
        if self.embed_dim is None:
            self.embed_dim = last
        elif self.embed_dim != last:
            raise ValueError(f"embed_dim {self.embed_dim} must equal last conv channel count {last}")
        return self
