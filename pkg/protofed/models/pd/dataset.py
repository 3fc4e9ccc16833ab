""" Dataset specification """

from typing import Optional

from pydantic import BaseModel, ConfigDict, Field, PositiveInt, model_validator

from ..enums.all import LabelRule


class DatasetSpec(BaseModel):
    model_config = ConfigDict(
        extra="forbid",
        json_schema_extra={
            "metadata": {
                "label": "Imbalanced SCADA-like dataset",
                "section": "dataset",
            }
        }
    )

    channels: PositiveInt = Field(16, description="Sensor channels d")
    window: PositiveInt = Field(32, description="Window length T")
    rho: PositiveInt = Field(20, description="Train imbalance, non-icing per icing window")
    test_rho: PositiveInt = Field(10, description="Test imbalance")
    train_fraction: float = Field(0.6, gt=0.0, lt=1.0)
    train_windows: int = Field(4200, ge=2, description="Requested train windows per client")
    test_windows: Optional[int] = Field(
        None, ge=2, description="Test windows per client; derived from train_fraction when unset"
    )
    clients: PositiveInt = 4
    stride: Optional[PositiveInt] = Field(None, description="Window stride; T/2 when unset")
    label_rule: LabelRule = LabelRule.ANY
    ar_coef: float = Field(0.9, ge=0.0, lt=1.0, description="AR(1) coefficient of the base process")
    channel_corr: float = Field(0.3, ge=0.0, lt=1.0, description="Pairwise channel correlation")
    signature_channels: PositiveInt = Field(4, description="Channels carrying the icing signature")
    icing_shift: float = Field(1.0, description="Level shift of icing windows, in base std units")
    icing_scale: float = Field(1.5, gt=0.0, description="Std multiplier of icing windows")
    client_shift: float = Field(0.5, ge=0.0, description="Std of per-client channel offsets")
    client_scale: float = Field(0.2, ge=0.0, lt=1.0, description="Half-width of per-client channel scales")
    seed: int = 0

    @model_validator(mode="after")
    def _check_sizes(self):
        if self.signature_channels > self.channels:
            raise ValueError("signature_channels cannot exceed channels")
        if self.stride is None:
            self.stride = max(1, self.window // 2)
        if self.test_windows is None:
            fraction = self.train_fraction
            self.test_windows = max(2, int(round(self.train_windows * (1 - fraction) / fraction)))
        return self
