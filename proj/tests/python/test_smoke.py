import json
import os
import pathlib
import tempfile

import numpy as np
import pytest

import cikf


def tmp_dir():
    base = os.environ.get("CIKF_TEST_TMP")
    if base:
        pathlib.Path(base).mkdir(parents=True, exist_ok=True)
    return pathlib.Path(tempfile.mkdtemp(dir=base))


def scalar_model():
    s = cikf.ModelSpec()
    s.M, s.N, s.M_n = 1, 1, [1]
    s.A = np.array([[0.9]])
    s.V = np.array([[0.25]])
    s.H_n = [np.array([[1.0]])]
    s.R_n = [np.array([[1.0]])]
    s.x0_mean = np.zeros(1)
    s.Sigma0 = np.array([[1.0]])
    s.adjacency = np.zeros((1, 1), dtype=np.int32)
    return s


def small_params():
    p = cikf.ModelParams.desk()
    p.M, p.N, p.edges = 6, 4, 4
    return p


def test_scalar_first_step():
    sched = cikf.precompute_schedule(scalar_model(), 3)
    assert sched.horizon == 3
    assert sched.innovation_gain(0, 0)[0, 0] == pytest.approx(0.5, abs=1e-9)
    assert sched.state_gain(0, 0)[0, 0] == pytest.approx(1.0, abs=1e-9)
    assert sched.theory_mse_total[0] == pytest.approx(0.655, abs=1e-9)


def test_generated_model_round_trip():
    spec = cikf.generate_paper_model(small_params(), 3)
    assert cikf.validate_model(spec).ok()
    assert np.linalg.norm(spec.A, 2) == pytest.approx(1.05, rel=1e-12)
    path = tmp_dir() / "model.json"
    cikf.save_model(path, spec)
    back = cikf.load_model(path)
    assert back == spec
    assert cikf.model_hash(back) == cikf.model_hash(spec)


def test_pseudo_model_identities():
    spec = cikf.generate_paper_model(small_params(), 4)
    pm = cikf.build_pseudo_model(spec)
    G = sum(h.T @ np.linalg.inv(r) @ h for h, r in zip(spec.H_n, spec.R_n))
    assert np.allclose(pm.G, G, atol=1e-12)
    assert np.allclose(pm.G_dag, np.linalg.pinv(G, rcond=1e-12), atol=1e-9)
    assert np.allclose(pm.I_til @ pm.G, 0, atol=1e-10)


def test_montecarlo_tracks_theory():
    spec = cikf.generate_paper_model(small_params(), 1)
    sched = cikf.precompute_schedule(spec, 10)
    rep = cikf.run_montecarlo(spec, sched, 400, 10, 5, threads=2)
    emp = np.array(rep.emp_cikf)
    theory = np.array(rep.theory_cikf_per_agent)
    assert rep.runs == 400
    assert np.all(np.abs(emp / theory - 1) < 0.2)
    assert np.all(np.array(rep.theory_ckf) <= theory * (1 + 1e-12))
    again = cikf.run_montecarlo(spec, sched, 400, 10, 5, threads=1)
    assert again.emp_cikf == rep.emp_cikf
    summary = cikf.mse_compare(rep)
    assert summary.gap_theory_db >= 0
    assert json.loads(rep.to_json())["runs"] == 400


def test_stability_and_capacity():
    spec = cikf.generate_paper_model(small_params(), 1)
    sched = cikf.precompute_schedule(spec, 40)
    st = cikf.stability_check(spec, sched, 39)
    assert st.stable()
    cap = cikf.capacity_lower_bound(spec, budget=50)
    assert cap.unbounded or cap.C_lower > 0


def test_errors_are_translated():
    spec = cikf.generate_paper_model(small_params(), 1)
    other = cikf.generate_paper_model(small_params(), 2)
    sched = cikf.precompute_schedule(spec, 2)
    with pytest.raises(cikf.CikfError):
        cikf.stability_check(other, sched, 0)
    with pytest.raises(cikf.CikfError):
        cikf.load_model(tmp_dir() / "missing.json")


def test_command_line_entry():
    out = tmp_dir() / "m.json"
    code, stdout, _ = cikf.run_command(["generate", "--preset", "desk", "--seed", "2", "-o", str(out)])
    assert code == 0
    assert "model_hash" in stdout
    code, _, _ = cikf.run_command(["no-such-command"])
    assert code == 2
