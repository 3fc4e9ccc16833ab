#   Copyright 2026 protofed authors
#
#   Licensed under the Apache License, Version 2.0 (the "License");
#   you may not use this file except in compliance with the License.
#   You may obtain a copy of the License at
#
#       http://www.apache.org/licenses/LICENSE-2.0
#
#   Unless required by applicable law or agreed to in writing, software
#   distributed under the License is distributed on an "AS IS" BASIS,
#   WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
#   See the License for the specific language governing permissions and
#   limitations under the License.

""" Enums for protofed """

from enum import IntEnum

try:
    from enum import StrEnum
except ImportError:
    from enum import Enum


    class StrEnum(str, Enum):
        pass


class Mode(StrEnum):
    FEDHPB = "fedhpb"
    FEDAVG = "fedavg"
    ABLATIONS = "ablations"


class Activation(StrEnum):
    RELU = "relu"
    SILU = "silu"


class OptimizerKind(StrEnum):
    SGD = "sgd"
    ADAM = "adam"


class Aggregation(StrEnum):
    NORMALIZED = "normalized"
    LITERAL = "literal"


class LossSecondTerm(StrEnum):
    NONE = "none"
    L2 = "l2"
    CONTRASTIVE = "contrastive"


class LabelRule(StrEnum):
    ANY = "any"
    MAJORITY = "majority"


class SweepAxis(StrEnum):
    WINDOW = "window"
    RHO = "rho"
    LAMBDA = "lambda"


class MsgType(IntEnum):
    PROTOTYPE_UPLOAD = 1
    GLOBAL_BROADCAST = 2
    PARAM_UPLOAD = 3
    PARAM_BROADCAST = 4
    ROUND_CONTROL = 5
    ERROR = 6
