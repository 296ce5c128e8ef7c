import numpy as np
import pytest

from eebeam import linkbudget as lb
from eebeam.exceptions import GainTableError, InvalidScenarioError

# sqrt(G_R G) / (4 pi d / lambda * sqrt(kappa T_R B_W)) evaluated separately
# with plain floats: 20 GHz, d = 35786 km, G_R = 41.7 dBi, G/T = 17.68 dB/K,
# B_W = 500 MHz, kappa = 1.38e-23, feed gain 55 dBi.
REF_D_55DBI = 1.7287957732627321


def nadir_params(K=1, M=1, **kw):
    return lb.ScenarioParams(user_positions=np.zeros((K, 2)), num_feeds=M, **kw)


def test_unit_inputs_give_one_over_four_pi():
    lam = 0.015
    # choose kappa so that kappa * T_R * B_W = 1 and d = lambda
    p = lb.ScenarioParams(user_positions=[[0.0, 0.0]], num_feeds=1, satellite_height=lam,
                          rx_antenna_gain_dBi=0.0, g_over_t_dB=0.0, bandwidth_Hz=1.0,
                          boltzmann=1.0)
    D = lb.antenna_pattern_matrix(p, lb.BeamGainModel([[1.0]]))
    assert D[0, 0] == pytest.approx(1 / (4 * np.pi), rel=1e-14)


def test_reference_link_budget_constant():
    p = nadir_params()
    assert p.wavelength == pytest.approx(0.015)
    D = lb.antenna_pattern_matrix(p, lb.BeamGainModel([[10 ** 5.5]]))
    assert D[0, 0] == pytest.approx(REF_D_55DBI, rel=1e-12)


def test_doubling_distance_halves_pattern():
    g = lb.BeamGainModel([[3.0]])
    d1 = lb.antenna_pattern_matrix(nadir_params(satellite_height=1e7), g)
    d2 = lb.antenna_pattern_matrix(nadir_params(satellite_height=2e7), g)
    assert d2[0, 0] == pytest.approx(d1[0, 0] / 2, rel=1e-14)


def test_gain_scaling_is_sqrt_homogeneous(rng):
    p = nadir_params(K=2, M=3)
    G = rng.uniform(1, 100, size=(2, 3))
    D1 = lb.antenna_pattern_matrix(p, lb.BeamGainModel(G))
    D4 = lb.antenna_pattern_matrix(p, lb.BeamGainModel(4 * G))
    np.testing.assert_allclose(D4, 2 * D1, rtol=1e-15)


def test_bad_gains_rejected():
    with pytest.raises(InvalidScenarioError):
        lb.BeamGainModel([[1.0, 0.0]])
    with pytest.raises(InvalidScenarioError):
        lb.antenna_pattern_matrix(nadir_params(K=1, M=2), lb.BeamGainModel([[1.0]]))


def test_scenario_invariants():
    with pytest.raises(InvalidScenarioError):
        nadir_params(K=3, M=2)
    with pytest.raises(InvalidScenarioError):
        nadir_params(total_power_W=0.0)
    with pytest.raises(InvalidScenarioError):
        nadir_params(static_power_W=-1.0)
    with pytest.raises(InvalidScenarioError):
        nadir_params(K=2, M=2, beam_weights=[0.0, 0.0])


def test_noise_temperature_from_g_over_t():
    p = nadir_params()
    assert p.noise_temperature == pytest.approx(10 ** ((41.7 - 17.68) / 10))


def test_phases_deterministic_and_unit_modulus():
    a = lb.sample_phase_matrix(5, 16)
    b = lb.sample_phase_matrix(5, 16)
    np.testing.assert_array_equal(a, b)
    np.testing.assert_allclose(np.abs(a), 1.0, atol=1e-12)
    assert not np.array_equal(a, lb.sample_phase_matrix(6, 16))


def test_phases_uniform_mean():
    phi = np.mod(np.angle(lb.sample_phase_matrix(0, 100_000)), 2 * np.pi)
    assert np.pi - 0.05 < phi.mean() < np.pi + 0.05


def test_assemble_examples():
    D = np.array([[1.0, 2.0], [3.0, 4.0]])
    ch = lb.assemble_channel(np.ones(2), D)
    np.testing.assert_array_equal(ch.H, D)
    ch = lb.assemble_channel([1j, -1], D)
    np.testing.assert_array_equal(ch.H, [[1j, 2j], [-3, -4]])
    with pytest.raises(InvalidScenarioError):
        lb.assemble_channel(np.ones(3), D)


def test_channel_modulus_equals_pattern_and_is_pure(default_cfg):
    p, g, ch = default_cfg.realize(3)
    np.testing.assert_allclose(np.abs(ch.H), ch.pattern, atol=1e-12)
    _, _, ch2 = default_cfg.realize(3)
    np.testing.assert_array_equal(ch.H, ch2.H)
    assert np.all(ch.pattern > 0) and np.all(np.isfinite(ch.pattern))


def write(tmp_path, text):
    f = tmp_path / "g.csv"
    f.write_text(text)
    return f


def test_gain_table_linear(tmp_path):
    m = lb.load_gain_table(write(tmp_path, "format=linear\n1,2\n3,4\n"))
    np.testing.assert_array_equal(m.gains, [[1, 2], [3, 4]])


def test_gain_table_db(tmp_path):
    m = lb.load_gain_table(write(tmp_path, "format=db\n1,2\n3,4\n"))
    np.testing.assert_allclose(m.gains, [[1.259, 1.585], [1.995, 2.512]], atol=5e-4)


@pytest.mark.parametrize("text", [
    "format=linear\n1,2\n3,4,5\n",
    "format=linear\n1,x\n",
    "format=linear\n1,-2\n",
    "format=dbm\n1,2\n",
    "",
])
def test_gain_table_errors(tmp_path, text):
    with pytest.raises(GainTableError):
        lb.load_gain_table(write(tmp_path, text))


def test_gain_table_declared_shape(tmp_path):
    f = write(tmp_path, "format=linear\n1,2,3\n4,5,6\n")
    with pytest.raises(GainTableError):
        lb.load_gain_table(f, shape=(2, 2))


def test_synthetic_gain_on_boresight_and_monotone():
    bores = np.array([[0.0, 0.0], [0.3, 0.0]])
    h = 35_786e3
    offsets = np.array([[0.0, 0.0], [0.1, 0.0]])
    p = lb.ScenarioParams(user_positions=h * np.tan(np.deg2rad(offsets)), num_feeds=2)
    m = lb.synthetic_gain_model(p, bores, taper=10.0, peak_gain_dBi=50.0)
    assert m.gains[0, 0] == pytest.approx(1e5, rel=1e-12)
    # user 1 is 0.1 deg from feed 0 and 0.2 deg from feed 1
    assert m.gains[1, 0] == pytest.approx(1e5 * np.exp(-10 * 0.1**2), rel=1e-9)
    assert m.gains[1, 0] > m.gains[1, 1]
    angles = lb.off_axis_angles(p, bores)
    order = np.argsort(angles.ravel())
    assert np.all(np.diff(m.gains.ravel()[order]) <= 0)


def test_synthetic_colocated_boresights_identical_columns():
    p = lb.ScenarioParams(user_positions=[[1e4, 0], [-3e4, 2e4]], num_feeds=2)
    m = lb.synthetic_gain_model(p, [[0.1, 0.1], [0.1, 0.1]], taper=5.0)
    np.testing.assert_array_equal(m.gains[:, 0], m.gains[:, 1])
    with pytest.raises(InvalidScenarioError):
        lb.synthetic_gain_model(p, [[0, 0], [0, 0]], taper=0.0)


def test_scenario_file_dbw_parsing(tmp_path):
    import json
    d = lb.default_scenario_dict()
    d["total_power_dBW"] = 10.0
    d["static_power_dBW"] = 7.0
    f = tmp_path / "s.json"
    f.write_text(json.dumps(d))
    cfg = lb.load_scenario(f)
    assert cfg.base.total_power_W == pytest.approx(10.0)
    assert cfg.base.static_power_W == pytest.approx(10 ** 0.7)
    np.testing.assert_allclose(cfg.base.sinr_thresholds, 1.0)
    assert lb.dbw_to_watts(10) == pytest.approx(10.0)


def test_scenario_with_gain_table(tmp_path):
    import json
    (tmp_path / "g.csv").write_text("format=db\n55,40\n40,55\n")
    d = {"num_users": 2, "num_feeds": 2, "user_positions_m": [[0, 0], [1e5, 0]],
         "gain_model": {"type": "table", "path": "g.csv"}}
    f = tmp_path / "s.json"
    f.write_text(json.dumps(d))
    p, g, ch = lb.load_scenario(f).realize(0)
    assert g.source == "table"
    assert ch.H.shape == (2, 2)
    assert ch.pattern[0, 0] > ch.pattern[0, 1]
