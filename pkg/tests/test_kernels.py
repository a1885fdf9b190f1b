"""Pin the compiled kernels to the plain numpy reference path."""

import numpy as np
import pytest
from dataclasses import replace

import formsim as fs
from formsim import _kernels
from formsim.accel import JIT_ENABLED, maybe_jit

needs_jit = pytest.mark.skipif(not JIT_ENABLED,
                               reason="numba acceleration disabled")


def test_maybe_jit_passthrough_forms():
    @maybe_jit
    def f(x):
        return x + 1

    @maybe_jit(cache=False)
    def g(x):
        return x * 2

    assert f(1.0) == 2.0
    assert g(2.0) == 4.0


@needs_jit
def test_jit_actually_compiles():
    assert hasattr(_kernels._chol_factor, "py_func")


def test_chol_solve_matches_numpy(rng):
    for _ in range(50):
        m = int(rng.integers(1, 12))
        B = rng.normal(size=(m, m))
        G = B @ B.T + m * np.eye(m)
        b = rng.normal(size=m)
        L, ok = _kernels._chol_factor(G)
        assert ok
        x = _kernels._chol_solve(L, b)
        assert np.abs(x - np.linalg.solve(G, b)).max() < 1e-9


def test_chol_detects_indefinite():
    G = np.array([[1.0, 2.0], [2.0, 1.0]])  # eigenvalues 3, -1
    _, ok = _kernels._chol_factor(G)
    assert not ok


def test_kernel_desired_matches_module_constant():
    prof = fs.ConstantTwist(pose0=(5.0, 10.0, np.pi / 2), v=5.0, omega=1.0)
    out_q = np.empty(3)
    out_tw = np.empty(2)
    out_acc = np.empty(2)
    dummy_t = np.array([0.0, 1.0])
    dummy_v = np.zeros((2, 2))
    dummy_g = np.zeros((2, 3))
    for t in (0.0, 0.37, 2.9, 11.0):
        st = _kernels._desired_one(
            0, np.array(prof.pose0), np.array([5.0, 1.0]), dummy_t,
            dummy_v, dummy_v, 2, 1.0, dummy_g, 2, t, out_q, out_tw, out_acc)
        assert st == _kernels.STATUS_OK
        d = fs.desired_state(prof, t)
        assert np.abs(out_q - d.pose).max() < 1e-14
        assert np.array_equal(out_tw, d.twist)


def test_kernel_desired_matches_module_sampled():
    ts = np.linspace(0.0, 2.0, 9)
    tw = np.stack([2.0 + 0.3 * np.sin(ts), 0.8 + 0.1 * np.cos(ts)], axis=1)
    rt = np.stack([0.3 * np.cos(ts), -0.1 * np.sin(ts)], axis=1)
    prof = fs.SampledTwist(pose0=(1.0, -0.5, 0.4), times=ts, twists=tw,
                           rates=rt, grid_dt=5e-4)
    out_q = np.empty(3)
    out_tw = np.empty(2)
    out_acc = np.empty(2)
    for t in (0.0, 0.123, 0.9993, 1.777, 2.0):
        st = _kernels._desired_one(
            1, np.zeros(3), np.zeros(2), prof.times, prof.twists,
            prof.rates, len(prof.times), prof.grid_dt, prof._grid,
            len(prof._grid), t, out_q, out_tw, out_acc)
        assert st == _kernels.STATUS_OK
        d = fs.desired_state(prof, t)
        assert np.abs(out_q - d.pose).max() < 1e-13
        assert np.abs(out_tw - d.twist).max() < 1e-14
        assert np.abs(out_acc - d.accel).max() < 1e-12


@needs_jit
@pytest.mark.parametrize("name", ["kinematic-pentagon", "adaptive-pentagon"])
def test_drivers_agree(name):
    cfg = replace(fs.get_preset(name), t_final=0.3)
    tj = fs.simulate(cfg, driver="jit")
    tn = fs.simulate(cfg, driver="numpy")
    assert tj.columns == tn.columns
    assert np.abs(tj.data - tn.data).max() < 1e-10


@needs_jit
def test_drivers_agree_on_sampled_twist():
    ts = np.linspace(0.0, 1.0, 21)
    tw = np.stack([3.0 + 0.4 * np.sin(3 * ts), 1.0 + 0.2 * ts], axis=1)
    rt = np.stack([1.2 * np.cos(3 * ts), np.full(21, 0.2)], axis=1)
    traj = {"kind": "sampled_twist", "start": [0.5, 0.5, 0.1],
            "times": ts.tolist(), "twists": tw.tolist(),
            "rates": rt.tolist(), "grid_dt": 5e-4}
    doc = {
        "mode": "kinematic", "edges": [[1, 2]], "dt": 1e-3, "t_final": 0.4,
        "sample_every": 25, "gains": {"formation": [2.0, 2.0, 10.0]},
        "robots": [{"start": [0.0, 0.0, 0.0], "trajectory": traj},
                   {"start": [1.0, 1.0, 0.3], "trajectory": dict(traj)}],
    }
    cfg = fs.scenario_from_dict(doc)
    tj = fs.simulate(cfg, driver="jit")
    tn = fs.simulate(cfg, driver="numpy")
    assert np.abs(tj.data - tn.data).max() < 1e-10


@needs_jit
def test_drivers_agree_on_star_tree():
    from test_engine import _star_doc
    cfg = fs.scenario_from_dict(_star_doc())
    cfg = replace(cfg, t_final=0.4)
    tj = fs.simulate(cfg, driver="jit")
    tn = fs.simulate(cfg, driver="numpy")
    assert np.abs(tj.data - tn.data).max() < 1e-10


@needs_jit
def test_kernel_status_surfaces_as_exception():
    cfg = replace(fs.get_preset("adaptive-pentagon"), dt=0.5, t_final=4.0)
    with pytest.raises(fs.DivergenceError):
        fs.simulate(cfg, driver="jit")


def test_engine_rejects_unknown_driver():
    with pytest.raises(ValueError):
        fs.Engine(fs.get_preset("kinematic-pentagon"), driver="cuda")
