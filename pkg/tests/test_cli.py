import csv
import subprocess
import sys

import pytest


def _run(args, cwd):
    return subprocess.run([sys.executable, "-m", "vdwrelax.cli", *args],
                          cwd=cwd, capture_output=True, text=True)


def _read_csv(path):
    with open(path) as fh:
        rows = [line for line in fh if not line.startswith("#")]
    return list(csv.DictReader(rows))


def _comments(path):
    with open(path) as fh:
        return [line for line in fh if line.startswith("#")]


@pytest.fixture(scope="module")
def pd_dir(tmp_path_factory):
    out = tmp_path_factory.mktemp("pd")
    cfg = out / "pd.cfg"
    cfg.write_text("""
zone_tau_min = 2.0
zone_tau_max = 3.2
zone_n_tau = 2
zone_e_min = 2.5
zone_e_max = 2.5
zone_n_e = 1
""")
    res = _run(["--output-dir", str(out), "phase-diagram", str(cfg)], out)
    assert res.returncode == 0, res.stderr
    return out


def test_phase_diagram_emits_four_files(pd_dir):
    for name in ("isotherms.csv", "spinodal.csv", "dome.csv", "zones.csv"):
        path = pd_dir / name
        assert path.is_file()
        header = _comments(path)
        assert any("a = 1" in line for line in header)
        assert any("Cv = 3" in line for line in header)


def test_phase_diagram_dome_row_near_saturation_anchor(pd_dir):
    rows = _read_csv(pd_dir / "dome.csv")
    best = min(rows, key=lambda r: abs(float(r["T"]) - 1.077))
    assert float(best["p"]) == pytest.approx(0.1, abs=1e-3)


def test_phase_diagram_zone_examples(pd_dir):
    rows = _read_csv(pd_dir / "zones.csv")
    zones = {(float(r["tau"]), float(r["e"])): r["zone"] for r in rows}
    assert zones[(2.0, 2.5)] == "Spinodal"
    assert zones[(3.2, 2.5)] == "MetastableVapor"


def test_phase_diagram_isotherms_include_critical(pd_dir):
    rows = _read_csv(pd_dir / "isotherms.csv")
    temps = sorted({float(r["T"]) for r in rows})
    assert any(abs(t - 1.1851851851851851) < 1e-12 for t in temps)


def test_relax_bundled_spinodal_campaign(tmp_path):
    res = _run(["--output-dir", str(tmp_path), "relax", "spinodal.cfg"],
               tmp_path)
    assert res.returncode == 0, res.stderr
    rows = _read_csv(tmp_path / "equilibria_summary.csv")
    assert len(rows) == 1
    row = rows[0]
    assert row["kind"] == "Saturation"
    got = (float(row["alpha"]), float(row["phi"]), float(row["xi"]))
    direct = max(abs(g - v) for g, v in zip(got, (0.255, 0.55, 0.47)))
    comp = max(abs((1 - g) - v) for g, v in zip(got, (0.255, 0.55, 0.47)))
    assert min(direct, comp) < 0.01
    assert float(row["residual"]) < 1e-9
    assert (tmp_path / "trajectory_000.csv").is_file()


def test_relax_metastable_bundled_configs_split_kinds(tmp_path):
    res = _run(["--output-dir", str(tmp_path / "s"), "relax",
                "metastable_small.cfg"], tmp_path)
    assert res.returncode == 0, res.stderr
    small = _read_csv(tmp_path / "s" / "equilibria_summary.csv")
    assert small[0]["kind"] == "Identification"
    res = _run(["--output-dir", str(tmp_path / "l"), "relax",
                "metastable_large.cfg"], tmp_path)
    assert res.returncode == 0, res.stderr
    large = _read_csv(tmp_path / "l" / "equilibria_summary.csv")
    assert large[0]["kind"] == "Saturation"


def test_relax_seeded_runs_are_byte_identical(tmp_path):
    cfg = tmp_path / "r.cfg"
    cfg.write_text("mix_tau = 3.0\nmix_e = 3.1\nt_final = 30\nn_random = 3\n")
    for d in ("a", "b"):
        res = _run(["--seed", "11", "--output-dir", str(tmp_path / d),
                    "relax", str(cfg)], tmp_path)
        assert res.returncode == 0, res.stderr
    for name in ("equilibria_summary.csv", "trajectory_000.csv",
                 "trajectory_002.csv"):
        assert ((tmp_path / "a" / name).read_bytes()
                == (tmp_path / "b" / name).read_bytes())


def test_eigen_defaults_mirror_reference_rows(tmp_path):
    res = _run(["--output-dir", str(tmp_path), "eigen"], tmp_path)
    assert res.returncode == 0, res.stderr
    rows = _read_csv(tmp_path / "eigen.csv")
    assert len(rows) == 5
    first = rows[0]
    assert first["kind"] == "Saturation"
    assert float(first["tau"]) == 1.99
    assert float(first["alpha"]) == pytest.approx(0.71, abs=0.05 * 0.71)
    assert float(first["phi"]) == pytest.approx(0.29, abs=0.05 * 0.29)
    assert float(first["xi"]) == pytest.approx(0.39, abs=0.05 * 0.39)
    assert float(first["tau1"]) == pytest.approx(4.76, abs=2e-2)
    assert float(first["tau2"]) == pytest.approx(0.82, abs=2e-2)
    for row in rows:
        assert float(row["lam1"]) < 0.0
        assert float(row["lam3"]) < 0.0
        assert float(row["max_imag"]) == pytest.approx(0.0, abs=1e-10)


def test_eigen_identification_rows_are_singular(tmp_path):
    cfg = tmp_path / "e.cfg"
    cfg.write_text("mixes = 3.0, 3.1; 4.0, 3.0\n")
    res = _run(["--output-dir", str(tmp_path), "eigen", str(cfg)], tmp_path)
    assert res.returncode == 0, res.stderr
    rows = _read_csv(tmp_path / "eigen.csv")
    assert len(rows) == 2
    for row in rows:
        assert row["kind"] == "Identification"
        assert abs(float(row["det"])) < 1e-12


def test_euler_bundled_sod_outputs(tmp_path):
    cfg = tmp_path / "sod_small.cfg"
    # the bundled file at a coarser resolution, for test speed
    cfg.write_text("""
n_cells = 120
x_min = 0.0
x_max = 1.0
x_discontinuity = 0.5
t_end = 0.2
cfl = 0.9
epsilon = 1e-2
left_rho = 1.111
left_u = 0.0
left_p = 0.2
left_alpha = 1e-6
left_phi = 1e-6
left_xi = 1e-6
right_rho = 0.277
right_u = 0.0
right_p = 0.11
right_alpha = 1e-6
right_phi = 1e-6
right_xi = 1e-6
snapshot_times = 0.1
""")
    res = _run(["--output-dir", str(tmp_path), "euler", str(cfg)], tmp_path)
    assert res.returncode == 0, res.stderr
    assert (tmp_path / "snapshot_000.csv").is_file()
    assert (tmp_path / "snapshot_001.csv").is_file()
    summary = {r["quantity"]: float(r["value"])
               for r in _read_csv(tmp_path / "summary.csv")}
    assert summary["positivity_ok"] == 1.0
    assert summary["min_c2"] > 0.0
    snap = _read_csv(tmp_path / "snapshot_001.csv")
    assert len(snap) == 120
    assert set(snap[0]) == {"x", "rho", "u", "p", "e", "T", "alpha", "phi",
                            "xi", "c2"}


def test_exit_code_2_on_config_errors(tmp_path):
    res = _run(["euler", "does_not_exist.cfg"], tmp_path)
    assert res.returncode == 2
    assert "config error" in res.stderr
    bad = tmp_path / "bad.cfg"
    bad.write_text("mix_tau = 2.0\nmix_e = 2.5\nbogus = 1\n")
    res = _run(["--output-dir", str(tmp_path), "relax", str(bad)], tmp_path)
    assert res.returncode == 2
    assert "bogus" in res.stderr


def test_exit_code_3_on_numerical_failure(tmp_path):
    cfg = tmp_path / "infeasible.cfg"
    cfg.write_text("""
n_cells = 20
x_min = 0.0
x_max = 1.0
x_discontinuity = 0.5
t_end = 0.1
cfl = 0.9
epsilon = 1e-2
left_rho = 1.0
left_u = 0.0
left_p = 0.2
left_alpha = 0.04
left_phi = 0.3
left_xi = 0.3
right_rho = 0.277
right_u = 0.0
right_p = 0.11
right_alpha = 1e-6
right_phi = 1e-6
right_xi = 1e-6
""")
    res = _run(["--output-dir", str(tmp_path), "euler", str(cfg)], tmp_path)
    assert res.returncode == 3
    assert "numerical failure" in res.stderr
