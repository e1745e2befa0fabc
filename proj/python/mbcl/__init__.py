# Copyright 2026 The mbcl Authors.
#
# Licensed under the Apache License, Version 2.0 (the "License");
# you may not use this file except in compliance with the License.
# You may obtain a copy of the License at
#
#     http://www.apache.org/licenses/LICENSE-2.0
#
# Unless required by applicable law or agreed to in writing, software
# distributed under the License is distributed on an "AS IS" BASIS,
# WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
# See the License for the specific language governing permissions and
# limitations under the License.
"""Python access to the mbcl core.

Configuration everywhere is a dict of the same flat keys the command-line
tool accepts, e.g. ``{"model.dim": 16, "train.max_epochs": 3}``.
"""

import json

from . import _mbcl
from ._mbcl import (
    ConfigError,
    DataError,
    DimensionError,
    Error,
    IndexError,
    NumericError,
    ParseError,
    SchemaError,
    VerificationError,
    ablate,
    bpr_loss,
    check_gradients,
    compute_metrics,
    config_keys,
    contrast_loss,
    distinction_loss,
    generate,
    pairwise_f,
    pessimistic_rank,
    resolve_config,
)

__all__ = [
    "ConfigError",
    "DataError",
    "DimensionError",
    "Error",
    "IndexError",
    "NumericError",
    "ParseError",
    "SchemaError",
    "VerificationError",
    "ablate",
    "bpr_loss",
    "check_gradients",
    "compute_metrics",
    "config_keys",
    "contrast_loss",
    "distinction_loss",
    "generate",
    "pairwise_f",
    "pessimistic_rank",
    "resolve_config",
    "train",
]


def train(overrides=None, run_dir=""):
    """Train and evaluate; epoch history entries are returned as dicts."""
    result = _mbcl.train(dict(overrides or {}), run_dir)
    result["history"] = [json.loads(line) for line in result["history"]]
    return result
