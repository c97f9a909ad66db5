# Copyright 2026  HFC-VP authors
#
# Licensed under the Apache License, Version 2.0 (the "License");
# you may not use this file except in compliance with the License.
# You may obtain a copy of the License at
#
#  http://www.apache.org/licenses/LICENSE-2.0
#
# Unless required by applicable law or agreed to in writing, software
# distributed under the License is distributed on an "AS IS" BASIS,
# WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
# See the License for the specific language governing permissions and
# limitations under the License.
"""Python bindings for the hfcvp library.

Arrays of frames are float32 numpy matrices of shape (frames, bins).
Library failures raise ``hfcvp.Error``; its ``kind`` attribute names the
error category ("config error", "io error", ...).
"""

from ._hfcvp import (
    Error,
    anonymise,
    compute_eer,
    compute_mel,
    cosine_score,
    estimate_prior,
    finder_kl,
    finder_mse,
    generate_toy_corpus,
    generator_total,
    leakage_kl,
    leakage_mse,
    load_matrix,
    parameter_counts,
    run_cli,
    save_matrix,
    train,
    train_probe,
)

__version__ = "0.1.0"

