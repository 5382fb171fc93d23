# Copyright 2026 The flashsim Authors
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

import json
import os
import pathlib

import numpy as np
import pytest

import flashsim as fs

CONFIG_DIR = pathlib.Path(
    os.environ.get("FLASHSIM_CONFIG_DIR", pathlib.Path(__file__).resolve().parents[2] / "configs")
)


def delta_model(strength=1.0, hopping=0.5):
    lattice = fs.Lattice.ring(2)
    return fs.build_grw_model(1, lattice, fs.RateProfile.delta(strength), fs.HamiltonianSpec(hopping=hopping))


def plus_state():
    return np.array([1.0, 1.0], dtype=complex) / np.sqrt(2.0)


def test_model_accessors():
    m = delta_model()
    assert m.dim == 2
    assert m.n_sites == 2
    assert m.labels == ["particle1"]
    np.testing.assert_allclose(m.total_rate, np.eye(2), atol=1e-14)
    g = m.generator
    np.testing.assert_allclose(g, -0.5 * m.total_rate - 1j * m.hamiltonian, atol=1e-14)


def test_semigroup_exp_matches_eigendecomposition():
    m = delta_model()
    h = m.hamiltonian
    w, v = np.linalg.eigh(h)
    expected = np.exp(-0.5 * 0.7) * (v @ np.diag(np.exp(-1j * w * 0.7)) @ v.conj().T)
    np.testing.assert_allclose(fs.semigroup_exp(m.generator, 0.7), expected, atol=1e-12)


def test_collapse_localizes():
    m = delta_model()
    out = fs.collapse(m, plus_state(), 1, 0)
    np.testing.assert_allclose(np.abs(out), [0.0, 1.0], atol=1e-14)


def test_matter_density_sums_to_rate():
    m = delta_model(strength=2.0)
    d = fs.matter_density(m, plus_state())
    np.testing.assert_allclose(d, [1.0, 1.0], atol=1e-14)


def test_ensemble_is_reproducible_and_thread_invariant():
    m = delta_model()
    cfg = fs.SamplerConfig()
    cfg.t_max_horizon = 2.0
    cfg.seed = 7
    a = fs.run_ensemble(m, plus_state(), 64, cfg, [0.5, 1.0], threads=1)
    b = fs.run_ensemble(m, plus_state(), 64, cfg, [0.5, 1.0], threads=3)
    assert a["flash_counts"] == b["flash_counts"]
    assert a["trajectories"] == b["trajectories"]
    for r in a["rho"]:
        assert abs(np.trace(r) - 1.0) < 1e-12


def test_flash_count_mean_matches_rate():
    # Lambda_tot = I with unit strength: flash count is Poisson(T).
    m = delta_model()
    cfg = fs.SamplerConfig()
    cfg.t_max_horizon = 3.0
    cfg.seed = 11
    s = fs.run_ensemble(m, plus_state(), 4000, cfg)
    assert abs(s["mean_flash_count"] - 3.0) < 5.0 * np.sqrt(3.0 / 4000)


def test_checks_pass():
    m = delta_model()
    grid = fs.QuadratureGrid(10.0, 512, fs.QuadratureRule.SIMPSON)
    r = fs.check_normalization(m, plus_state(), grid)
    assert r.passed
    report = json.loads(r.to_json())
    assert report["pass"] is True
    assert fs.check_consistency(m, 2, grid).passed
    assert fs.check_constants().passed


def test_errors_carry_codes():
    m = delta_model()
    with pytest.raises(fs.FlashsimError) as info:
        fs.collapse(m, np.array([1.0, 0.0, 0.0], dtype=complex), 0, 0)
    assert info.value.code == "InvalidArgument"
    with pytest.raises(fs.FlashsimError) as info:
        fs.RateProfile.gaussian(1.0, -1.0)
    assert info.value.code == "BadProfile"


def test_load_config():
    model, psi = fs.load_config(str(CONFIG_DIR / "delta_two_site.json"))
    assert model.dim == 2
    assert abs(np.linalg.norm(psi) - 1.0) < 1e-12
