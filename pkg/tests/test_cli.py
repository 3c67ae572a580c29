"""Command-line interface: exit codes, file outputs, determinism."""

import json
import subprocess
import sys

import pytest

from schwingerlab import QuasiFree, SpectralMeasure, save_model
from schwingerlab.cli import main
from schwingerlab.experiments import two_mass_mixture
from schwingerlab.serialize import write_json


@pytest.fixture
def model_file(tmp_path):
    path = tmp_path / "mixture.json"
    save_model(two_mass_mixture(1.0, 4.0), path)
    return str(path)


@pytest.fixture
def free_model_file(tmp_path):
    path = tmp_path / "free.json"
    save_model(QuasiFree(SpectralMeasure.delta(1.0)), path)
    return str(path)


@pytest.fixture
def recipe_file(tmp_path):
    path = tmp_path / "recipe.json"
    write_json(path, {"functions": [{"center": [4.0, 4.0], "width": 1.0}]})
    return str(path)


def test_verify_free_field_exits_zero(free_model_file, tmp_path, capsys):
    out = tmp_path / "out"
    code = main(["verify", free_model_file, "--out", str(out), "--seed", "3"])
    assert code == 0
    doc = json.loads((out / "checks.json").read_text())
    assert doc["passed"] and doc["quasi_free"]
    assert (out / "checks.txt").exists()


def test_verify_mixture_reports_not_quasifree(model_file, tmp_path):
    out = tmp_path / "out"
    code = main(["verify", model_file, "--out", str(out)])
    assert code == 0
    doc = json.loads((out / "checks.json").read_text())
    assert doc["passed"] and doc["quasi_free"] is False


def test_verify_malformed_weights_uses_schema_exit(tmp_path):
    path = tmp_path / "broken.json"
    write_json(path, {
        "format": "schwinger-model", "version": 1,
        "model": {"kind": "mixture", "children": [
            {"weight": 0.5, "model": {"kind": "quasifree", "atoms": [[1.0, 1.0]]}},
            {"weight": 0.4, "model": {"kind": "quasifree", "atoms": [[4.0, 1.0]]}},
        ]}})
    assert main(["verify", str(path), "--out", str(tmp_path / "o")]) == 2


def test_verify_unknown_tolerance_key_is_schema_error(model_file, tmp_path):
    tol = tmp_path / "tols.json"
    write_json(tol, {"reflekshun_positivity": 1e-9})
    code = main(["verify", model_file, "--out", str(tmp_path / "o"),
                 "--tolerance-file", str(tol)])
    assert code == 2


def test_verify_missing_file_is_schema_error(tmp_path):
    assert main(["verify", str(tmp_path / "nope.json"),
                 "--out", str(tmp_path / "o")]) == 2


def test_moments_table(model_file, recipe_file, tmp_path, capsys):
    out = tmp_path / "out"
    code = main(["moments", model_file, "--recipe", recipe_file,
                 "--order", "5", "--out", str(out)])
    assert code == 0
    doc = json.loads((out / "moments.json").read_text())
    rows = {row["order"]: row for row in doc["rows"]}
    # odd orders are zero; order 4 carries a nonzero connected part
    assert rows[5]["moment_analytic"] == [0.0, 0.0]
    assert abs(rows[4]["connected"][0]) > 1e-3
    assert rows[2]["method"] == "both"
    assert rows[2]["agreement_delta"] <= 1e-7 * abs(rows[2]["moment_analytic"][0])
    assert rows[5]["method"] == "analytic"


def test_moments_matches_sobolev_norm_for_free_field(free_model_file,
                                                     recipe_file, tmp_path):
    from schwingerlab import Grid, gaussian_packet, sobolev_norm
    out = tmp_path / "out"
    assert main(["moments", free_model_file, "--recipe", recipe_file,
                 "--order", "2", "--out", str(out)]) == 0
    doc = json.loads((out / "moments.json").read_text())
    s2 = doc["rows"][1]["moment_analytic"][0]
    grid = Grid(2, 32, 0.25)
    f = gaussian_packet(grid, [4.0, 4.0], 1.0)
    assert s2 == pytest.approx(sobolev_norm(f, 1.0) ** 2, rel=1e-12)


def test_moments_bad_recipe_field(model_file, tmp_path):
    recipe = tmp_path / "recipe.json"
    write_json(recipe, {"functions": [{"center": [4.0, 4.0], "girth": 1.0}]})
    assert main(["moments", model_file, "--recipe", str(recipe),
                 "--out", str(tmp_path / "o")]) == 2


def test_experiment_command(tmp_path):
    spec = tmp_path / "spec.json"
    write_json(spec, {
        "experiment_id": "two_mass_fourth_cumulant",
        "grid": {"d": 2, "n_per_axis": 32, "spacing": 0.25},
        "params": {"masses_sq": [1.0, 4.0],
                   "packet": {"center": [4.0, 4.0], "width": 1.0}},
    })
    out = tmp_path / "out"
    assert main(["experiment", str(spec), "--out", str(out)]) == 0
    doc = json.loads((out / "experiment.json").read_text())
    assert doc["passed"]
    assert (out / "experiment.txt").exists()


def test_refine_command_rejects_two_levels(tmp_path):
    spec = tmp_path / "ref.json"
    write_json(spec, {
        "grid": {"d": 1, "n_per_axis": 16, "spacing": 1.0},
        "params": {"d": 1, "extent": 16.0, "levels": [16, 32],
                   "masses_sq": [1.0],
                   "packet": {"center": [8.0], "width": 2.0}},
    })
    assert main(["refine", str(spec), "--out", str(tmp_path / "o")]) == 2


def test_refine_command_passes(tmp_path):
    spec = tmp_path / "ref.json"
    write_json(spec, {
        "grid": {"d": 1, "n_per_axis": 16, "spacing": 1.0},
        "params": {"d": 1, "extent": 16.0, "levels": [16, 32, 64],
                   "masses_sq": [1.0],
                   "packet": {"center": [8.0], "width": 2.0}},
    })
    out = tmp_path / "out"
    assert main(["refine", str(spec), "--out", str(out)]) == 0
    assert json.loads((out / "refinement.json").read_text())["passed"]


def test_sample_command_writes_reproducible_dump(model_file, tmp_path):
    out_a, out_b = tmp_path / "a", tmp_path / "b"
    assert main(["sample", model_file, "--count", "3", "--seed", "21",
                 "--out", str(out_a)]) == 0
    assert main(["sample", model_file, "--count", "3", "--seed", "21",
                 "--out", str(out_b)]) == 0
    assert (out_a / "samples.txt").read_bytes() == (out_b / "samples.txt").read_bytes()


def test_machine_format_prints_json(model_file, recipe_file, tmp_path, capsys):
    assert main(["moments", model_file, "--recipe", recipe_file, "--order", "2",
                 "--out", str(tmp_path / "o"), "--format", "machine"]) == 0
    parsed = json.loads(capsys.readouterr().out)
    assert parsed["rows"][0]["order"] == 1


def test_rerun_outputs_are_byte_identical_across_processes(model_file, tmp_path):
    outs = []
    for name in ("p", "q"):
        out = tmp_path / name
        proc = subprocess.run(
            [sys.executable, "-m", "schwingerlab.cli", "verify", model_file,
             "--out", str(out), "--seed", "5"],
            capture_output=True, text=True)
        assert proc.returncode == 0, proc.stderr
        outs.append((out / "checks.json").read_bytes())
    assert outs[0] == outs[1]


def test_refine_writes_curves_csv(tmp_path):
    spec = tmp_path / "ref.json"
    write_json(spec, {
        "grid": {"d": 1, "n_per_axis": 16, "spacing": 1.0},
        "params": {"d": 1, "extent": 16.0, "levels": [16, 32, 64],
                   "masses_sq": [1.0],
                   "packet": {"center": [8.0], "width": 2.0}},
    })
    out = tmp_path / "out"
    assert main(["refine", str(spec), "--out", str(out)]) == 0
    lines = (out / "curves.csv").read_text().strip().splitlines()
    assert lines[0] == "level,two_point,connected_fourth,rotation_defect"
    assert len(lines) == 4


def test_moments_output_carries_config_digest(model_file, recipe_file, tmp_path):
    out = tmp_path / "out"
    assert main(["moments", model_file, "--recipe", recipe_file,
                 "--order", "2", "--out", str(out)]) == 0
    doc = json.loads((out / "moments.json").read_text())
    assert len(doc["config_digest"]) == 64


def test_precision_failure_exit_code(model_file, recipe_file, tmp_path,
                                     monkeypatch):
    # exit 3 is reserved for a numeric route that both warns and disagrees
    import schwingerlab.cli as cli_mod
    from schwingerlab.functional import NumericMoment

    def broken(model, fs):
        return NumericMoment(complex(1e6), (0j, 0j, 0j), 1.0, True)

    monkeypatch.setattr(cli_mod, "moment_numeric", broken)
    code = main(["moments", model_file, "--recipe", recipe_file,
                 "--order", "2", "--out", str(tmp_path / "o")])
    assert code == 3


def test_experiment_tolerance_file_merges_and_validates(tmp_path):
    spec = tmp_path / "spec.json"
    write_json(spec, {
        "experiment_id": "two_mass_fourth_cumulant",
        "grid": {"d": 2, "n_per_axis": 32, "spacing": 0.25},
        "params": {"masses_sq": [1.0, 4.0],
                   "packet": {"center": [4.0, 4.0], "width": 1.0}},
    })
    tol = tmp_path / "tol.json"
    write_json(tol, {"closed_form_rel": 1e-8})
    assert main(["experiment", str(spec), "--out", str(tmp_path / "a"),
                 "--tolerance-file", str(tol)]) == 0
    bad = tmp_path / "bad.json"
    write_json(bad, {"closed_form_relly": 1e-8})
    assert main(["experiment", str(spec), "--out", str(tmp_path / "b"),
                 "--tolerance-file", str(bad)]) == 2
