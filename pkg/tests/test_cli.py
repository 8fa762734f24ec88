import json

from neckglue.cli import main


def run(tmp_path, *args, sub="out"):
    out = tmp_path / sub
    return main(list(args) + ["--out", str(out), "--no-plot"]), out


def test_delaunay_smoke(tmp_path):
    code, out = run(tmp_path, "delaunay", "--n", "4", "--eps", "0.3")
    assert code == 0
    lines = (out / "delaunay_profile.csv").read_text().splitlines()
    assert lines[0] == "t,v,w,H"
    assert len(lines) > 100
    assert (out / "uprofile.csv").read_text().splitlines()[0] == "r,u,ru_r,r2u_rr"


def test_delaunay_parameter_error(tmp_path):
    code, _ = run(tmp_path, "delaunay", "--n", "4", "--eps", "0.8")
    assert code == 2


def test_delaunay_rejects_bad_dimension(tmp_path):
    code, _ = run(tmp_path, "delaunay", "--n", "12", "--eps", "0.1")
    assert code == 2


def test_spectrum_degenerate(tmp_path, capsys):
    code, out = run(tmp_path, "spectrum", "--family", "s2xs2", "--k1", "2")
    assert code == 0
    captured = capsys.readouterr().out
    assert "DEGENERATE" in captured and "(1, 0)" in captured
    assert (out / "spectrum.csv").exists()


def test_spectrum_nondegenerate_gap(tmp_path, capsys):
    code, _ = run(tmp_path, "spectrum", "--family", "s2xs2", "--k1", "3")
    assert code == 0
    captured = capsys.readouterr().out
    assert "NONDEGENERATE" in captured and "gap 2" in captured


def test_spectrum_invalid_curvature(tmp_path):
    code, _ = run(tmp_path, "spectrum", "--family", "s2xs2", "--k1", "7")
    assert code == 2


def test_spectrum_s2xs3_discrepancy_reported(tmp_path, capsys):
    code, _ = run(tmp_path, "spectrum", "--family", "s2xs3", "--k1", "2.0")
    assert code == 0
    assert "discrepancy" in capsys.readouterr().out


def test_match_zero_preset(tmp_path):
    code, out = run(tmp_path, "match", "--preset", "zero", "--eps", "0.1")
    assert code == 0
    lines = (out / "match.csv").read_text().splitlines()
    assert lines[0] == "iteration,b,lambda,a_norm,omega_norm,theta_norm,residual"
    assert len(lines) == 2
    cells = lines[1].split(",")
    assert float(cells[1]) == 0.0
    assert float(cells[2]) == 0.1**2 / 4


def test_match_synthetic_and_determinism(tmp_path):
    code1, out1 = run(tmp_path, "match", "--preset", "synthetic", "--seed", "7",
                      sub="a")
    code2, out2 = run(tmp_path, "match", "--preset", "synthetic", "--seed", "7",
                      sub="b")
    assert code1 == code2 == 0
    assert (out1 / "match.csv").read_bytes() == (out2 / "match.csv").read_bytes()


def test_match_magnitude_violation(tmp_path, capsys):
    code, _ = run(tmp_path, "match", "--preset", "synthetic", "--seed", "7",
                  "--h0-scale", "10")
    assert code == 1
    assert "magnitude" in capsys.readouterr().err


def test_interior_smoke(tmp_path):
    code, out = run(tmp_path, "interior", "--eps", "0.1", "--n-radial", "500")
    assert code == 0
    lines = (out / "interior.csv").read_text().splitlines()
    assert lines[0] == "iteration,iterate_norm,contraction,residual"


def test_interior_kappa_gate(tmp_path):
    code, _ = run(tmp_path, "interior", "--eps", "0.1", "--phi-coeff", "5.0")
    assert code == 2


def test_norms_smoke(tmp_path, capsys):
    code, out = run(tmp_path, "norms")
    assert code == 0
    assert "spread" in capsys.readouterr().out
    assert (out / "norms.csv").exists()


def test_config_file_and_flag_precedence(tmp_path):
    cfg = tmp_path / "cfg.json"
    cfg.write_text(json.dumps({"eps": 0.3, "n": 4}))
    code, _ = run(tmp_path, "delaunay", "--config", str(cfg))
    assert code == 0
    # explicit flag wins over the config value
    code2, _ = run(tmp_path, "delaunay", "--config", str(cfg), "--eps", "0.8")
    assert code2 == 2


def test_config_rejects_unknown_keys(tmp_path):
    cfg = tmp_path / "cfg.json"
    cfg.write_text(json.dumps({"nonsense": 1}))
    code, _ = run(tmp_path, "delaunay", "--config", str(cfg))
    assert code == 2


def test_env_var_output_dir(tmp_path, monkeypatch):
    monkeypatch.setenv("NECKGLUE_OUT", str(tmp_path / "envout"))
    code = main(["norms", "--no-plot"])
    assert code == 0
    assert (tmp_path / "envout" / "norms.csv").exists()


def test_float_formatting_17_digits(tmp_path):
    code, out = run(tmp_path, "match", "--preset", "zero", "--eps", "0.1")
    assert code == 0
    row = (out / "match.csv").read_text().splitlines()[1]
    assert "0.0025000000000000005" in row


def test_plots_rendered_alongside_csv(tmp_path):
    out = tmp_path / "plots"
    code = main(["spectrum", "--k1", "3", "--out", str(out)])
    assert code == 0
    assert (out / "spectrum.svg").exists()
    assert (out / "spectrum.csv").exists()
