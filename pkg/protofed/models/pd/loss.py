""" Loss stack configuration """

from pydantic import BaseModel, ConfigDict, Field

from ..enums.all import LossSecondTerm


class LossConfig(BaseModel):
    model_config = ConfigDict(
        extra="forbid",
        populate_by_name=True,
        json_schema_extra={
            "metadata": {
                "label": "Imbalance-aware loss",
                "section": "loss",
            }
        }
    )

    lam: float = Field(0.25, ge=0.0, le=1.0, alias="lambda",
                       description="Weight of the prototype term against the supervised loss")
    tau: float = Field(0.5, gt=0.0, description="Contrastive temperature")
    gamma: float = Field(2.0, ge=0.0, description="Class-weight sensitivity")
    eps: float = Field(1e-8, gt=0.0, description="Numerical guard")
    second_term: LossSecondTerm = LossSecondTerm.CONTRASTIVE
