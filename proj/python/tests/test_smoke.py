import math

import numpy as np
import pytest

import rlvc


def test_harmonic_mean():
    assert rlvc.harmonic_mean(81.4, 80.9) == pytest.approx(81.15, abs=0.01)
    assert rlvc.harmonic_mean(0.0, 0.0) == 0.0


def test_schedule_posterior_identity():
    s = rlvc.Schedule.linear(8, 0.1, 0.4)
    assert s.steps == 8
    for t in range(8):
        c_x0, c_next, var = s.posterior(t)
        assert c_x0 + c_next * math.sqrt(s.alpha_bar(t + 1)) == pytest.approx(math.sqrt(s.alpha_bar(t)), abs=1e-12)
        assert var >= 0.0


def test_reward_values():
    w = np.zeros((3, 1))
    b = np.array([2.0, 1.0, 0.0])
    assert rlvc.log_softmax_reward(w, b, np.zeros(1), 0) == pytest.approx(-0.407606, abs=1e-6)
    with pytest.raises(rlvc.UsageError):
        rlvc.log_softmax_reward(w, b, np.zeros(1), 3)


def test_pd_loss_cases():
    v = np.array([[1.0, 0.0], [1.0, 0.0], [1.0, 0.0]])
    x = np.array([[2.0, 0.0], [0.0, 1.0], [-1.0, 0.0]])
    value, grad = rlvc.pd_loss(x, v)
    assert value == pytest.approx(1.0)
    assert grad.shape == (3, 2)


def test_ema():
    b = rlvc.EmaBaseline(0.9)
    b.reset(0.0)
    b.update([-1.0])
    assert b.value == pytest.approx(-0.1)


def test_config_precedence(tmp_path):
    cfg_file = tmp_path / "run.cfg"
    cfg_file.write_text("preset = cub\nepochs = 7\n")
    cfg = rlvc.config(cfg_file, epochs=3)
    assert cfg["epochs"] == "3"
    assert cfg["rl_start_epoch"] == "30"
    with pytest.raises(rlvc.ConfigError):
        rlvc.config(no_such_key=1)


def test_pipeline_end_to_end(tmp_path):
    data = tmp_path / "data"
    out = tmp_path / "out"
    small = dict(n_seen=6, n_unseen=2, d=8, d_z=6, samples_per_class=12, seed=2)
    rlvc.gen_synthetic(out=data, **small)
    ds = rlvc.load_dataset(str(data))
    assert ds["features"].shape == (96, 8)
    assert ds["roles"].count("unseen") == 2

    acc = rlvc.pretrain_reward(dataset=data, out=out)
    assert 0.0 <= acc <= 1.0
    rows = rlvc.train(dataset=data, out=out, epochs=3, rl_start_epoch=1)
    assert [r["epoch"] for r in rows] == [0, 1, 2]
    assert math.isnan(rows[0]["raw_reward_mean"])
    assert rows[2]["raw_reward_mean"] <= 0.0
    report = rlvc.evaluate(dataset=data, out=out, synth_per_class=20)
    assert set(report) == {"acc", "u", "s", "h"}
    assert (out / "report.txt").exists()

    with pytest.raises(rlvc.IoError):
        rlvc.evaluate(dataset=tmp_path / "missing", out=out)
