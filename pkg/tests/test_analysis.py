import json

import numpy as np
import pytest

from deltawave import DomainError, PacketParams, PhysParams, SpatialGrid, WaveField, l2_distance, run
from deltawave.analysis import (ConfigError, channel_norms, parse_config, read_field_csv, relative_density_error,
                                subsample, weighted_fluxes)
from deltawave.cli import main
from deltawave.stationary import flux_vs_k

BASE = {
    "phys": {"k0": 1.0, "V0": 1.0},
    "packet": {"x0": 10.0, "sigma": 1.0, "k1": 2.0},
    "grid": {"x_min": -20.0, "x_max": 20.0, "n_points": 81},
    "times": [0.0, 1.0],
}


def cfg(**kw):
    d = json.loads(json.dumps(BASE))
    d.update(kw)
    return d


def test_config_collects_every_problem():
    bad = cfg(mode="compare", phys={"m": -1.0}, packet={"x0": 1.0}, times=[2.0, -1.0], extra=1)
    with pytest.raises(ConfigError) as err:
        parse_config(bad)
    text = " | ".join(err.value.problems)
    for key in ("phys", "packet", "times", "oracle", "unknown keys"):
        assert key in text
    assert len(err.value.problems) >= 5


def test_config_times_align_with_dt():
    with pytest.raises(ConfigError, match="multiples"):
        parse_config(cfg(mode="oracle", oracle={"dt": 0.3}, times=[1.0]))
    parse_config(cfg(mode="oracle", oracle={"dt": 0.25}, times=[1.0]))


def test_config_grid_from_spacing():
    c = parse_config(cfg(mode="propagate", grid={"x_min": -20.0, "x_max": 20.0, "dx": 0.5}))
    assert c.grid.n_points == 81


def test_l2_distance_checks():
    g1, g2 = SpatialGrid(-1.0, 1.0, 11), SpatialGrid(-1.0, 1.0, 21)
    a = WaveField(g1, 0.0, np.ones(11))
    b = WaveField(g1, 0.0, np.zeros(11))
    assert l2_distance(a, b) == pytest.approx((np.sqrt(2.0), 0.0))
    with pytest.raises(DomainError):
        l2_distance(a, WaveField(g2, 0.0, np.ones(21)))
    with pytest.raises(DomainError):
        l2_distance(a, WaveField(g1, 1.0, np.ones(11)))
    assert channel_norms(a) == pytest.approx((2.0, 0.0))


def test_subsample():
    g = SpatialGrid(-1.0, 1.0, 21)
    w = WaveField(g, 0.0, np.arange(21.0))
    s = subsample(w, SpatialGrid(-1.0, 1.0, 11))
    assert s.psi1.real.tolist() == list(range(0, 21, 2))
    with pytest.raises(DomainError):
        subsample(w, SpatialGrid(-1.0, 1.0, 8))


def test_relative_density_error():
    ref = np.array([1.0, 2.0, 0.0])
    assert relative_density_error(ref, ref) == 0.0
    assert relative_density_error(1.1 * ref, ref) == pytest.approx(0.21)


def test_weighted_fluxes_sum_to_one():
    R, T1, T2 = weighted_fluxes(PhysParams(k0=1.0, V0=1.0), PacketParams(20.0, 4.0, 5.0))
    assert R + T1 + T2 == pytest.approx(1.0, abs=1e-10)
    k = np.linspace(4.0, 6.0, 20001)
    dens = np.sqrt(2 / np.pi) * 4.0 * np.exp(-32.0 * (k - 5.0) ** 2)
    assert T2 == pytest.approx(np.trapezoid(dens * flux_vs_k(PhysParams(k0=1.0, V0=1.0), k)[2], k), rel=1e-8)


def test_stationary_mode(tmp_path):
    c = parse_config(cfg(mode="stationary", k_scan={"k_min": 0.1, "k_max": 10.0, "n_k": 200}))
    assert run(c, None, tmp_path) == 0
    data = np.loadtxt(tmp_path / "stationary.csv", delimiter=",", skiprows=1)
    assert data.shape == (200, 5)
    assert np.max(np.abs(data[:, 1:4].sum(axis=1) - 1.0)) <= 1e-12
    summary = json.loads((tmp_path / "summary.json").read_text())
    assert summary["stationary"]["max_flux_defect"] <= 1e-12


def test_propagate_roundtrip(tmp_path):
    c = parse_config(cfg(mode="propagate"))
    assert run(c, None, tmp_path) == 0
    w = read_field_csv(tmp_path / "t_1.csv", c.grid, 1.0)
    header = (tmp_path / "t_1.csv").read_text().splitlines()[0]
    assert header == "x,re_psi1,im_psi1,abs2_psi1,re_psi2,im_psi2,abs2_psi2"
    from deltawave.analysis import analytic_field
    ref = analytic_field(c.phys, c.packet, c.grid, 1.0)
    assert np.array_equal(w.psi1, ref.psi1)


def test_compare_at_zero_coupling(tmp_path):
    raw = cfg(mode="compare", phys={"k0": 0.0, "V0": 1.0},
              grid={"x_min": -25.0, "x_max": 25.0, "dx": 0.1}, times=[1.0],
              oracle={"dt": 1e-3, "refine": 5, "stencil": 5})
    c = parse_config(raw)
    assert run(c, raw, tmp_path) == 0
    rep = json.loads((tmp_path / "summary.json").read_text())["comparison"]
    assert max(rep["l2_psi1"]) <= 1e-4
    assert rep["l2_psi2"] == [0.0]
    assert rep["norms_oracle"][0]["N2"] == 0.0


def test_series_mode(tmp_path):
    c = parse_config(cfg(mode="series", phys={"k0": 6.0, "V0": 0.5}, packet={"x0": 10.0, "sigma": 1.0, "k1": 5.0},
                         series={"regime": "high-energy", "n_terms": 6}))
    assert run(c, None, tmp_path) == 0
    terms = np.loadtxt(tmp_path / "terms.csv", delimiter=",", skiprows=1)
    assert terms.shape == (2 * 2 * 7, 5)
    assert (tmp_path / "t_0.csv").exists()


def test_provenance_has_no_timestamps(tmp_path):
    raw = cfg(mode="stationary")
    assert run(parse_config(raw), raw, tmp_path) == 0
    s = json.loads((tmp_path / "summary.json").read_text())
    assert s["provenance"]["config"] == raw
    assert set(s["provenance"]) == {"code_version", "config", "package"}


def _write(tmp_path, raw, name="cfg.json"):
    path = tmp_path / name
    path.write_text(json.dumps(raw))
    return str(path)


def test_cli_exit_codes(tmp_path):
    good = _write(tmp_path, cfg(mode="stationary"))
    assert main(["stationary", "--config", good, "--output-dir", str(tmp_path / "o"), "--quiet"]) == 0
    assert main(["propagate", "--config", good, "--quiet"]) == 2
    bad = _write(tmp_path, cfg(mode="stationary", phys={"V0": -1.0}), "bad.json")
    assert main(["stationary", "--config", bad, "--quiet"]) == 2
    (tmp_path / "junk.json").write_text("{not json")
    assert main(["stationary", "--config", str(tmp_path / "junk.json"), "--quiet"]) == 2
    assert main(["stationary", "--config", str(tmp_path / "missing.json"), "--quiet"]) == 4
    blocker = tmp_path / "file"
    blocker.write_text("x")
    assert main(["stationary", "--config", good, "--output-dir", str(blocker / "sub"), "--quiet"]) == 4
    num = _write(tmp_path, cfg(mode="series", phys={"k0": 1.0, "V0": 0.0}, series={"regime": "low-energy"}), "num.json")
    assert main(["series", "--config", num, "--output-dir", str(tmp_path / "n"), "--quiet"]) == 3


def test_cli_mode_can_come_from_command_line(tmp_path):
    path = _write(tmp_path, BASE)
    assert main(["stationary", "--config", path, "--output-dir", str(tmp_path / "o"), "--quiet"]) == 0
