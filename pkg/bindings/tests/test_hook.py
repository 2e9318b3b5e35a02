"""Hook-demo checks: report schema, mass targets, and the trivial modes."""

import json
from pathlib import Path

import numpy as np
import pytest

from mast_bindings import tensorfile
from mast_bindings.hook import hook_demo

FIXTURES = Path(__file__).resolve().parent.parent / "fixtures"


@pytest.fixture(params=["default", "lambda0", "single"])
def fixture_dir(request):
    return FIXTURES / request.param


def test_masses_hit_targets(fixture_dir):
    report = hook_demo(fixture_dir)
    for head in report["heads"]:
        assert head["mass_max_abs_error"] <= 1e-6
        total = sum(head["achieved_mass_mean"])
        assert total == pytest.approx(1.0, abs=1e-6)


def test_schema_matches_native_report(fixture_dir):
    native = json.loads((fixture_dir / "report.json").read_text())
    ours = hook_demo(fixture_dir)
    assert set(native.keys()) <= set(ours.keys())
    assert set(native["heads"][0].keys()) == set(ours["heads"][0].keys())
    assert set(native["checksums"].keys()) <= set(ours["checksums"].keys())


def test_head_scalars_match_native(fixture_dir):
    native = json.loads((fixture_dir / "report.json").read_text())
    ours = hook_demo(fixture_dir)
    assert ours["omega"] == pytest.approx(native["omega"], abs=1e-9)
    for nh, bh in zip(native["heads"], ours["heads"]):
        assert bh["delta"] == pytest.approx(nh["delta"], abs=1e-6)
        assert bh["tau_applied"] == pytest.approx(nh["tau_applied"], abs=1e-6)


def test_outputs_match_native_within_tolerance(fixture_dir):
    ours = hook_demo(fixture_dir)
    for name in ("anchored_queries", "attention_weights", "attention_output",
                 "ddi_output"):
        native = tensorfile.load(fixture_dir / f"{name}.mstt")
        diff = np.abs(ours["tensors"][name].astype(np.float64)
                      - native.astype(np.float64)).max()
        assert diff <= 1e-6, f"{name}: {diff}"


def test_lambda_zero_keeps_stylization_queries():
    fdir = FIXTURES / "lambda0"
    ours = hook_demo(fdir)
    q_cs = tensorfile.load(fdir / "scene_q_cs.mstt")
    assert ours["tensors"]["anchored_queries"].tobytes() == q_cs.tobytes()


def test_fixed_unit_tau_is_pure_mass_allocation():
    # tau = 1 means the output is exactly the mass-allocated attention
    fdir = FIXTURES / "lambda0"
    ours = hook_demo(fdir)
    assert all(h["tau_applied"] == 1.0 for h in ours["heads"])
    native_out = tensorfile.load(fdir / "attention_output.mstt")
    diff = np.abs(ours["tensors"]["attention_output"].astype(np.float64)
                  - native_out.astype(np.float64)).max()
    assert diff <= 1e-6
