# python/tsmix/__init__.py

# Copyright 2026  tsmix authors

# Licensed under the Apache License, Version 2.0 (the "License");
# you may not use this file except in compliance with the License.
# You may obtain a copy of the License at
#
#  http://www.apache.org/licenses/LICENSE-2.0
#
# THIS CODE IS PROVIDED *AS IS* BASIS, WITHOUT WARRANTIES OR CONDITIONS OF ANY
# KIND, EITHER EXPRESS OR IMPLIED, INCLUDING WITHOUT LIMITATION ANY IMPLIED
# WARRANTIES OR CONDITIONS OF TITLE, FITNESS FOR A PARTICULAR PURPOSE,
# MERCHANTABLITY OR NON-INFRINGEMENT.
# See the Apache 2 License for the specific language governing permissions and
# limitations under the License.

"""Python surface over the native source-separation core."""

from tsmix._core import (
    SeparatorConfig,
    TsmixError,
    energy,
    gen_synthetic_source,
    init_params,
    load_checkpoint,
    mix,
    mixit_loss,
    mixture_consistency_project,
    neg_thresh_snr,
    pit_loss,
    quantize_pcm16,
    read_wav,
    select_top_energy,
    separate,
    si_snr,
    si_snr_improvement,
    write_wav,
)

__all__ = [
    "SeparatorConfig",
    "TsmixError",
    "energy",
    "gen_synthetic_source",
    "init_params",
    "load_checkpoint",
    "mix",
    "mixit_loss",
    "mixture_consistency_project",
    "neg_thresh_snr",
    "pit_loss",
    "quantize_pcm16",
    "read_wav",
    "select_top_energy",
    "separate",
    "si_snr",
    "si_snr_improvement",
    "write_wav",
]
