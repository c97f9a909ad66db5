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

import json
import math

import numpy as np
import pytest

import hfcvp


def test_losses_match_hand_arithmetic():
    assert hfcvp.leakage_mse([1, 0, 0, 0], [0.25] * 4) == pytest.approx(0.1875)
    assert hfcvp.finder_mse([0.5, 0.5, 0, 0], 0) == pytest.approx(0.125)
    assert hfcvp.finder_kl([0.25] * 4, 0) == pytest.approx(math.log(4))
    assert hfcvp.leakage_kl([0.25] * 4, [0.25] * 4) == pytest.approx(math.log(4))
    assert hfcvp.generator_total(0.5, 0.1, 0.065) == pytest.approx(0.5065)


def test_bad_inputs_raise_typed_errors():
    with pytest.raises(hfcvp.Error) as e:
        hfcvp.finder_mse([0.5, 0.5], 3)
    assert e.value.kind == "range error"
    with pytest.raises(hfcvp.Error):
        hfcvp.estimate_prior([], 3)


def test_prior_and_eer():
    assert hfcvp.estimate_prior([0, 0, 1, 2], 3) == pytest.approx([0.5, 0.25, 0.25])
    assert hfcvp.compute_eer([0.9, 0.8], [0.1, 0.2]) == 0.0
    assert hfcvp.compute_eer([0.1, 0.2], [0.9, 0.8]) == 1.0
    assert hfcvp.cosine_score([1, 0], [0, 2]) == pytest.approx(0.0)


def test_parameter_counts():
    n = hfcvp.parameter_counts("full", 904)
    assert n == {"hider": 2212768, "finder": 871724, "combiner": 22585760}


def test_mel_of_silence():
    m = hfcvp.compute_mel(np.zeros(22050, dtype=np.float32))
    assert m.shape[1] == 80
    assert np.allclose(m, math.log(1e-5))


def test_matrix_round_trip(tmp_path):
    a = np.arange(12, dtype=np.float32).reshape(3, 4) / 7
    hfcvp.save_matrix(tmp_path / "m.bin", a)
    b = hfcvp.load_matrix(tmp_path / "m.bin")
    assert b.dtype == np.float32
    assert np.array_equal(a, b)


def test_train_anonymise_probe(tmp_path):
    data, run, anon = tmp_path / "d", tmp_path / "run", tmp_path / "anon"
    n = hfcvp.generate_toy_corpus(data, num_classes=2, utterances_per_class=10, min_frames=10,
                                  max_frames=16, seed=3)
    assert n == 20
    log = hfcvp.train(data, run, {"epochs": 2, "batch_size": 8, "seed": 1})
    assert [row["epoch"] for row in log] == [1, 2]
    assert all(math.isfinite(row["loss_combiner"]) for row in log)
    r = hfcvp.anonymise(run / "checkpoints" / "last", data, anon, pool="toy:4",
                        export_hidden=True)
    assert r == {"utterances": 20, "failures": 0}
    manifest = json.loads((data / "manifest.json").read_text())
    reps = [hfcvp.load_matrix(anon / "hidden" / (rec["id"] + ".bin"))
            for rec in manifest["records"]]
    labels = [rec["label"] for rec in manifest["records"]]
    p = hfcvp.train_probe(reps, labels, 2, epochs=2)
    assert 0.0 <= p["accuracy"] <= 1.0
    assert p["train_size"] + p["test_size"] == 20
    with pytest.raises(hfcvp.Error) as e:
        hfcvp.train(data, tmp_path / "bad", {"epochs": 1, "no_such_key": 1})
    assert e.value.kind == "config error"


def test_cli_entry_point(tmp_path):
    code, out, _ = hfcvp.run_cli(["gen-toy", "--out", str(tmp_path / "d"), "--classes", "4",
                                  "--utterances-per-class", "2", "--json"])
    assert code == 0
    assert json.loads(out)["utterances"] == 8
    code, out, _ = hfcvp.run_cli(["prior", "--data", str(tmp_path / "d")])
    assert code == 0
    assert out.split() == ["0.250000"] * 4
    assert hfcvp.run_cli(["prior"])[0] == 1
