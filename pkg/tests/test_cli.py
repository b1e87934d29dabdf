import json

import pytest

from ercomp.cli import main


def run(capsys, *argv):
    code = main(list(argv))
    out = capsys.readouterr().out
    return code, out


def run_json(capsys, *argv):
    code, out = run(capsys, *argv)
    return code, json.loads(out)


# ------------------------------------------------------------ exact-dist


def test_exact_dist_rational_table(capsys):
    code, rep = run_json(
        capsys, "exact-dist", "--n", "3", "--p", "1/2", "--precision", "rational"
    )
    assert code == 0
    assert rep["experiment"] == "exact-dist"
    assert rep["metrics"]["table"] == {"1": "1/4", "2": "1/4", "3": "1/2"}
    assert rep["metrics"]["mean"] == "9/4"
    assert rep["metrics"]["warning"] is False
    assert rep["verdict"] == "pass"


def test_exact_dist_trivial_sizes(capsys):
    code, rep = run_json(
        capsys, "exact-dist", "--n", "1", "--p", "1/2", "--precision", "rational"
    )
    assert code == 0 and rep["metrics"]["table"] == {"1": "1"}
    code, rep = run_json(capsys, "exact-dist", "--n", "2", "--t", "0.0")
    assert code == 0
    probs = rep["metrics"]["table"]
    assert float(probs["1"]) == 1.0 and float(probs["2"]) == 0.0


def test_exact_dist_csv_table(tmp_path, capsys):
    out = tmp_path / "dist.csv"
    code, _ = run(
        capsys, "exact-dist", "--n", "3", "--p", "1/2",
        "--precision", "rational", "--format", "csv", "--out", str(out),
    )
    assert code == 0
    lines = out.read_text().strip().splitlines()
    assert lines == ["k,prob", "1,1/4", "2,1/4", "3,1/2"]


def test_exact_dist_error_codes(capsys):
    code, _ = run(capsys, "exact-dist", "--n", "6000", "--t", "0.5")
    assert code == 3  # over the size cap
    code, _ = run(capsys, "exact-dist", "--n", "9", "--t", "0.5",
                  "--precision", "rational")
    assert code == 2  # intensity needs a real exponential
    code, _ = run(capsys, "exact-dist", "--n", "5", "--p", "1.5")
    assert code == 2


# -------------------------------------------------------- verify-identity


def test_verify_identity_spot_case(capsys):
    code, rep = run_json(capsys, "verify-identity", "--n", "2", "--p", "1/2",
                         "--j", "1")
    assert code == 0
    assert rep["metrics"]["identity_cases"] == 1
    assert rep["metrics"]["spot_n2_p_half_j1"] == {"lhs": "3/4", "rhs": "3/4"}
    assert rep["verdict"] == "pass"


def test_verify_identity_small_sweep(capsys):
    code, rep = run_json(capsys, "verify-identity", "--n", "6")
    assert code == 0
    assert rep["metrics"]["identity_max_absdiff"] == 0.0
    assert rep["metrics"]["transfer_max_absdiff"] == 0.0
    assert rep["metrics"]["j_zero_all_one"] is True
    assert rep["metrics"]["identity_cases"] > 100
    assert rep["metrics"]["transfer_cases"] > 100


# ----------------------------------------------------------------- recover


def test_recover_rational_exact(capsys):
    code, rep = run_json(capsys, "recover", "--n", "10", "--p", "1/3",
                         "--precision", "rational")
    assert code == 0
    assert rep["metrics"]["max_abs_err"] == 0.0
    assert rep["verdict"] == "pass"


def test_recover_trivial_and_caps(capsys):
    code, rep = run_json(capsys, "recover", "--n", "1", "--p", "1/2",
                         "--precision", "rational")
    assert code == 0 and rep["verdict"] == "pass"
    code, _ = run(capsys, "recover", "--n", "400", "--p", "1/2",
                  "--precision", "rational")
    assert code == 3


# ---------------------------------------------------------- susceptibility


def test_susceptibility_small_grid(capsys):
    code, rep = run_json(capsys, "susceptibility", "--t", "0.5",
                         "--n-list", "50,100")
    assert code == 0
    m = rep["metrics"]
    assert m["ratio_order1"] <= 2.0 and m["ratio_order0"] <= 2.0
    rows = m["rows"]
    assert [r["n"] for r in rows] == [50, 100]
    assert rows[1]["expansion_order0"] == 2.0
    assert rep["verdict"] == "pass"


def test_susceptibility_echoes_expansion_value(capsys):
    code, rep = run_json(capsys, "susceptibility", "--t", "0.5",
                         "--n-list", "400")
    assert code == 0
    assert rep["metrics"]["rows"][0]["expansion_order1"] == pytest.approx(1.985)


def test_susceptibility_zero_intensity(capsys):
    code, rep = run_json(capsys, "susceptibility", "--t", "0.0",
                         "--n-list", "50")
    assert code == 0
    assert rep["metrics"]["rows"][0]["mean_exact"] in ("1", "1.0", "1.000000")


# -------------------------------------------------------------------- clt


def test_clt_degenerate_full_graph(capsys):
    code, rep = run_json(capsys, "clt", "--n", "30", "--p", "1",
                         "--replicas", "40", "--seed", "9")
    assert code == 0
    assert rep["metrics"]["ks"] == 0.5
    assert rep["verdict"] == "exploratory-degenerate"


def test_clt_small_run_reports_gaps(capsys):
    code, rep = run_json(capsys, "clt", "--n", "400", "--t", "2",
                         "--replicas", "60", "--seed", "5")
    assert code == 0
    m = rep["metrics"]
    assert m["theta_root_residual"] <= 1e-12
    assert 0 <= m["ks"] <= 1
    assert m["mean_gap"] >= 0
    assert rep["verdict"].startswith("exploratory")


def test_clt_rerun_from_report_reproduces(capsys):
    args = ("clt", "--n", "300", "--t", "2", "--replicas", "50", "--seed", "77")
    code1, rep1 = run_json(capsys, *args)
    code2, rep2 = run_json(capsys, *args)
    assert code1 == code2 == 0
    assert rep1["metrics"] == rep2["metrics"]
    assert rep1["inputs"] == rep2["inputs"]


# ------------------------------------------------------------------ rigid


def test_rigid_small_consistent(capsys):
    code, rep = run_json(capsys, "rigid", "--n", "20", "--t", "0.5",
                         "--replicas", "20000", "--seed", "3")
    assert code == 0
    assert rep["metrics"]["pvalue"] > 1e-4
    assert rep["verdict"] == "pass"


def test_rigid_single_vertex_trivial(capsys):
    code, rep = run_json(capsys, "rigid", "--n", "1", "--t", "0.5",
                         "--replicas", "100", "--seed", "3")
    assert code == 0 and rep["verdict"] == "pass"


# -------------------------------------------------------- critical-window


def test_window_beta_zero_is_exact(capsys):
    code, rep = run_json(capsys, "critical-window", "--n-list", "27,64",
                         "--beta", "0")
    assert code == 0
    assert rep["metrics"]["values"] == [0.0, 0.0]
    assert rep["verdict"] == "exploratory-met"


def test_window_small_grid_reports(capsys):
    code, rep = run_json(capsys, "critical-window", "--n-list", "27,64",
                         "--beta", "0.5", "--u", "1")
    assert code == 0  # exploratory outcomes never fail the run
    m = rep["metrics"]
    assert len(m["values"]) == 2 and len(m["gaps"]) == 2
    assert all(isinstance(v, float) for v in m["values"])
    assert rep["verdict"].startswith("exploratory")


# --------------------------------------------------------------- sbm-verify


def test_sbm_verify_er_preset(capsys):
    code, rep = run_json(capsys, "sbm-verify", "--preset", "er")
    assert code == 0
    assert rep["metrics"]["identity_max_absdiff"] == 0.0
    assert rep["metrics"]["transfer_max_absdiff"] == 0.0
    assert rep["verdict"] == "pass"


def test_sbm_verify_two_label_preset(capsys):
    code, rep = run_json(capsys, "sbm-verify", "--preset", "2x2")
    assert code == 0
    assert rep["metrics"]["zero_shift_equals_one"] is True
    assert rep["verdict"] == "pass"


def test_sbm_verify_explicit_model(capsys):
    code, rep = run_json(capsys, "sbm-verify", "--counts", "2,2",
                         "--pmat", "1/2,1/3;1/3,1/4")
    assert code == 0 and rep["verdict"] == "pass"
    code, _ = run(capsys, "sbm-verify", "--counts", "2,2",
                  "--pmat", "1/2,1/3;1/4,1/4")
    assert code == 2  # asymmetric matrix


# ------------------------------------------------------------- formatting


def test_csv_report_flattens_keys(tmp_path, capsys):
    out = tmp_path / "rep.csv"
    code, _ = run(capsys, "verify-identity", "--n", "2", "--p", "1/2",
                  "--j", "1", "--format", "csv", "--out", str(out))
    assert code == 0
    lines = out.read_text().strip().splitlines()
    assert len(lines) == 2
    header = lines[0].split(",")
    assert "experiment" in header
    assert any(h.startswith("metric.") for h in header)
    assert any(h.startswith("input.") for h in header)


def test_json_report_goes_to_file(tmp_path, capsys):
    out = tmp_path / "rep.json"
    code, stdout = run(capsys, "exact-dist", "--n", "3", "--p", "1/2",
                       "--precision", "rational", "--out", str(out))
    assert code == 0
    rep = json.loads(out.read_text())
    assert rep["metrics"]["table"]["3"] == "1/2"
