import json
import math

import pytest

qauto = pytest.importorskip("qauto")


def test_plus_x_on_z_is_half():
    p = qauto.probability(qauto.Qubit.plus_x(), qauto.Qubit.plus_z())
    assert p == pytest.approx(0.5, abs=1e-15)
    frac = qauto.measure_plus_fraction(qauto.Qubit.plus_x(), 0.0, 100000, 1)
    assert abs(frac - 0.5) < 0.01


def test_rotation_matrices_compose():
    r = qauto.rotation_inertial_to_body(0.1, 0.2, 0.3)
    back = qauto.euler_from_rotation(r)
    assert back == pytest.approx((0.1, 0.2, 0.3), abs=1e-12)
    yaw = qauto.yaw_matrix(math.pi / 2)
    assert yaw[0][1] == pytest.approx(1.0)
    assert yaw[1][0] == pytest.approx(-1.0)


def test_bb84_session():
    clean = qauto.bb84_session(20000, 0.0, 3)
    assert clean["verdict"] == "clean"
    assert clean["qber"] == 0.0
    assert clean["alice_key"] == clean["bob_key"]
    assert abs(clean["sift_fraction"] - 0.5) < 0.02
    eve = qauto.bb84_session(20000, 1.0, 3)
    assert eve["verdict"] == "compromised"
    assert abs(eve["qber"] - 0.25) < 0.03


def test_otp_round_trip():
    key = [1, 0, 1, 1, 0, 0, 1, 0] * 4
    msg = b"\x12\xab\xff\x00"
    assert qauto.otp_apply(qauto.otp_apply(msg, key), key) == msg
    with pytest.raises(qauto.Error):
        qauto.otp_apply(msg, key[:31])


def test_bell_test_violates_chsh():
    s, sigma = qauto.bell_test("phi+", 50000, 7)
    assert s - 2.0 > 5 * sigma
    e = 1 / math.sqrt(2)
    assert qauto.chsh(e, -e, e, e) == pytest.approx(2 * math.sqrt(2))
    tt, tr, rt, rr = qauto.joint_probabilities("phi+", 0.0, 0.0)
    assert (tt, tr, rt, rr) == pytest.approx((0.5, 0.0, 0.0, 0.5), abs=1e-15)


def test_closed_loop_mass_spring():
    one = ([1.0], [1.0])
    num, den = qauto.closed_loop([4.0], [1.0], *one, [1.0], [0.0, 0.0, 2.0], *one)
    assert num == [2.0]
    assert den == [2.0, 0.0, 1.0]
    t, y = qauto.step_response([1.0], [1.0, 1.0], 5.0, 1e-3)
    assert max(abs(yi - (1 - math.exp(-ti))) for ti, yi in zip(t, y)) < 1e-6


def test_perturbation_benchmark_scales_quadratically():
    r = qauto.perturbation_benchmark(0.01, 101)
    coarse = qauto.perturbation_benchmark(0.02, 101)
    assert coarse["max_error"] / r["max_error"] == pytest.approx(4.0, rel=0.05)
    assert r["error_exponent"] == pytest.approx(2.0, abs=0.1)


def test_run_scenario(tmp_path):
    doc = {"kind": "formation", "seed": 1}
    log = qauto.run_scenario(json.dumps(doc), str(tmp_path))
    assert log["exit_status"] == 0
    assert log["summary"]["converged"] is True
    assert (tmp_path / "formation.csv").exists()
    again = qauto.run_scenario_dict(doc)
    assert again["summary"] == log["summary"]


def test_schema_errors_raise():
    with pytest.raises(qauto.Error, match="foo"):
        qauto.run_scenario(json.dumps({"kind": "bb84", "bb84": {"foo": 1}}))
