"""Serialization round trips and command-line driver behavior."""

import json
import math
import os
from fractions import Fraction

import pytest

from dimlab import io
from dimlab.cli import main
from dimlab.constructions import alternating_plan, alternating_set, sweep_plan
from dimlab.exact import ValidationError
from dimlab.measure import DyadicMeasureTree
from dimlab.settree import DyadicSetTree


def cantor_tree(depth=8):
    return DyadicSetTree.from_digit_ifs(1, group=2, keep=[0, 3], depth=depth)


class TestJsonRoundTrips:
    def test_set_round_trip_preserves_everything(self, tmp_path):
        tree = cantor_tree(8)
        p = tmp_path / "set.json"
        io.save_json(tree, p)
        back = io.load_json(p)
        assert back.d == tree.d
        assert back.max_depth == tree.max_depth
        assert back.levels == tree.levels
        assert back.meta == tree.meta  # rational meta survives the tagging
        # symbolic extension works past the materialized depth
        assert back.box_count(40) == tree.box_count(40)

    def test_save_is_idempotent(self, tmp_path):
        tree = cantor_tree(6)
        a, b = tmp_path / "a.json", tmp_path / "b.json"
        io.save_json(tree, a)
        io.save_json(io.load_json(a), b)
        assert a.read_bytes() == b.read_bytes()

    def test_measure_round_trips(self, tmp_path):
        uni = DyadicMeasureTree.uniform_on_set(cantor_tree(6))
        atom = DyadicMeasureTree.atomic(
            [(Fraction(1, 3),), (Fraction(3, 4),)],
            [Fraction(1, 4), Fraction(3, 4)], 1, 5)
        for i, mu in enumerate((uni, atom)):
            p = tmp_path / f"mu{i}.json"
            io.save_json(mu, p)
            back = io.load_json(p)
            assert back.leaf_model == mu.leaf_model
            assert back.masses == mu.masses
            assert back.atoms == mu.atoms
            assert back.support.levels == mu.support.levels

    def test_plan_round_trips(self, tmp_path):
        for plan in (alternating_plan(Fraction(2, 5), Fraction(7, 10)),
                     sweep_plan(Fraction(2, 5), Fraction(7, 10))):
            p = tmp_path / "plan.json"
            io.save_json(plan, p)
            assert io.load_json(p) == plan

    def test_huge_counts_survive_as_hex(self, tmp_path):
        # segment anchors deep in the schedule exceed any float or int64
        plan = alternating_plan(Fraction(2, 5), Fraction(7, 10))
        tree = alternating_set(plan, 24)
        p = tmp_path / "alt.json"
        io.save_json(tree, p)
        assert '"$bighex"' in p.read_text()
        back = io.load_json(p)
        lvl = 105766
        assert back.box_count(lvl) == tree.box_count(lvl)
        assert tree.box_count(lvl).bit_length() > 2048

    def test_load_rejects_junk(self, tmp_path):
        with pytest.raises(ValidationError):
            io.load_json(tmp_path / "missing.json")
        bad = tmp_path / "bad.json"
        bad.write_text("{not json")
        with pytest.raises(ValidationError):
            io.load_json(bad)
        unknown = tmp_path / "unknown.json"
        unknown.write_text('{"type": "widget"}')
        with pytest.raises(ValidationError):
            io.load_json(unknown)

    def test_save_rejects_unknown_objects(self, tmp_path):
        with pytest.raises(ValidationError):
            io.save_json(object(), tmp_path / "x.json")


class TestCsv:
    def test_points_from_csv(self, tmp_path):
        p = tmp_path / "pts.csv"
        p.write_text("x,y\n# corner points\n1/3,1/2\n\n0.9,0.9\n")
        tree = io.points_from_csv(p, 2, 3)
        assert tree.d == 2 and tree.max_depth == 3
        assert len(tree.levels[3]) == 2

    def test_points_csv_errors(self, tmp_path):
        p = tmp_path / "pts.csv"
        p.write_text("0.5,0.5\n0.25\n")
        with pytest.raises(ValidationError):
            io.points_from_csv(p, 2, 4)
        empty = tmp_path / "empty.csv"
        empty.write_text("# nothing\n")
        with pytest.raises(ValidationError):
            io.points_from_csv(empty, 1, 4)

    def test_curve_to_csv_accepts_tuples_and_samples(self, tmp_path):
        p = tmp_path / "curve.csv"
        io.curve_to_csv([(1, 0.5, 0.01), (2, 0.25, 0.005)], p)
        lines = p.read_text().splitlines()
        assert lines[0] == "scale,value,err"
        assert lines[1] == "1,0.5,0.01"
        io.curve_to_csv([{"R": 2.0, "value": 3.5, "err": 0.1}], p)
        assert p.read_text().splitlines()[1] == "2.0,3.5,0.1"


class TestReportJson:
    def test_dataclass_report(self):
        mu = DyadicMeasureTree.uniform_on_set(cantor_tree(6))
        br = mu.energy_bracket(Fraction(1, 3), refine_depth=2)
        data = json.loads(io.report_to_json(br))
        assert data["s"] == "1/3"
        assert data["lower"] <= data["upper"]

    def test_dict_report_with_path(self, tmp_path):
        p = tmp_path / "rep.json"
        text = io.report_to_json({"ok": True, "ratio": Fraction(3, 7)}, p)
        assert json.loads(p.read_text()) == json.loads(text)
        assert json.loads(text)["ratio"] == "3/7"

    def test_rejects_other_types(self):
        with pytest.raises(ValidationError):
            io.report_to_json(42)


def run_cli(capsys, *argv):
    code = main(list(argv))
    out = capsys.readouterr()
    return code, out.out, out.err


@pytest.fixture
def cantor_file(tmp_path):
    p = tmp_path / "cantor.json"
    io.save_json(cantor_tree(9), p)
    return str(p)


class TestCliConstruct:
    def test_ifs_then_box_estimate(self, tmp_path, capsys):
        out = tmp_path / "set.json"
        code, text, _ = run_cli(capsys, "construct", "ifs", "--base", "4",
                                "--keep", "0,3", "--depth", "8",
                                "--out", str(out))
        assert code == 0 and out.exists()
        jout = tmp_path / "rep.json"
        cout = tmp_path / "fit.csv"
        code, text, _ = run_cli(capsys, "estimate", "box", "--in", str(out),
                                "--json", str(jout), "--csv", str(cout))
        assert code == 0
        assert "box: full=" in text
        # default window 1..8 includes the odd-level staircase treads
        assert json.loads(jout.read_text())["full"] == pytest.approx(0.5,
                                                                     abs=0.03)
        assert cout.read_text().startswith("level,log2_count")

    def test_alternating_artifacts(self, tmp_path, capsys):
        args = ["construct", "alternating", "--dim-low", "2/5",
                "--dim-high", "7/10", "--depth", "12",
                "--out", str(tmp_path / "set.json"),
                "--plan-out", str(tmp_path / "plan.json"),
                "--stage", "1", "--measure-out", str(tmp_path / "mu.json")]
        code, text, _ = run_cli(capsys, *args)
        assert code == 0
        assert "(depth 12, 128 leaf cubes)" in text
        assert isinstance(io.load_json(tmp_path / "mu.json"),
                          DyadicMeasureTree)

    def test_alternating_out_needs_depth(self, tmp_path, capsys):
        code, _, err = run_cli(capsys, "construct", "alternating",
                               "--dim-low", "2/5", "--dim-high", "7/10",
                               "--out", str(tmp_path / "set.json"))
        assert code == 2
        assert "--depth" in err

    def test_sweep_set(self, tmp_path, capsys):
        code, text, _ = run_cli(capsys, "construct", "sweep",
                                "--dim-low", "2/5", "--dim-high", "7/10",
                                "--depth", "8",
                                "--out", str(tmp_path / "sweep.json"))
        assert code == 0
        assert "(depth 8, 12 leaf cubes)" in text

    def test_ifs_rejects_non_power_base(self, tmp_path, capsys):
        code, _, err = run_cli(capsys, "construct", "ifs", "--base", "3",
                               "--keep", "0", "--depth", "4",
                               "--out", str(tmp_path / "x.json"))
        assert code == 2 and "power of two" in err

    def test_net_measure(self, tmp_path, cantor_file, capsys):
        out = tmp_path / "net.json"
        code, text, _ = run_cli(capsys, "construct", "measure",
                                "--set", cantor_file, "--kind", "net",
                                "--level", "4", "--out", str(out))
        assert code == 0
        mu = io.load_json(out)
        assert mu.leaf_model == "atoms" and len(mu.atoms) == 4

    def test_points_command(self, tmp_path, capsys):
        csv_path = tmp_path / "pts.csv"
        csv_path.write_text("0.1\n0.6\n0.9\n")
        code, text, _ = run_cli(capsys, "construct", "points",
                                "--csv", str(csv_path), "--snap-depth", "3",
                                "--out", str(tmp_path / "p.json"))
        assert code == 0 and "3 occupied" in text


class TestCliEstimate:
    def test_corr_and_frostman(self, cantor_file, capsys):
        for sub in ("corr", "frostman"):
            code, text, _ = run_cli(capsys, "estimate", sub,
                                    "--in", cantor_file,
                                    "--levels", "3..9")
            assert code == 0
            assert f"{sub}: full=0.5" in text

    def test_energy(self, cantor_file, capsys):
        code, text, _ = run_cli(capsys, "estimate", "energy",
                                "--in", cantor_file, "--s", "1/3",
                                "--rmax", "512")
        assert code == 0 and "energy s=1/3:" in text

    def test_fourier_corr_with_csv(self, tmp_path, cantor_file, capsys):
        cout = tmp_path / "curve.csv"
        code, text, _ = run_cli(capsys, "estimate", "fourier-corr",
                                "--in", cantor_file,
                                "--scales", "2^1..2^8", "--csv", str(cout))
        assert code == 0 and "fourier-corr: full=" in text
        assert len(cout.read_text().splitlines()) == 9

    def test_missing_input_is_validation_error(self, capsys):
        code, _, err = run_cli(capsys, "estimate", "box",
                               "--in", "/nonexistent.json")
        assert code == 2 and "error:" in err

    def test_unavailable_is_computation_error(self, tmp_path, capsys):
        mu3 = DyadicMeasureTree.atomic([(Fraction(1, 2),) * 3], [1], 3, 4)
        p = tmp_path / "mu3.json"
        io.save_json(mu3, p)
        code, _, err = run_cli(capsys, "estimate", "energy", "--in", str(p),
                               "--s", "1/2")
        assert code == 3 and "error:" in err

    def test_too_small_budget_is_computation_error(self, tmp_path, capsys):
        code, _, err = run_cli(capsys, "construct", "alternating",
                               "--dim-low", "2/5", "--dim-high", "7/10",
                               "--level-budget", "2",
                               "--plan-out", str(tmp_path / "p.json"))
        assert code == 3


class TestCliVerify:
    def test_alternating_counts(self, capsys):
        code, text, _ = run_cli(capsys, "verify", "alternating-counts")
        assert code == 0
        assert "alternating-counts: PASS" in text

    def test_sweep_counts(self, capsys):
        code, text, _ = run_cli(capsys, "verify", "sweep-counts")
        assert code == 0
        assert "sweep-counts: PASS" in text

    def test_corr_sandwich(self, cantor_file, capsys):
        code, text, _ = run_cli(capsys, "verify", "corr-sandwich",
                                "--in", cantor_file, "--levels", "2..8",
                                "--random-measures", "2", "--seed", "5")
        assert code == 0 and "corr-sandwich: PASS" in text

    def test_ineq_chain_pass_and_forced_fail(self, cantor_file, capsys):
        code, text, _ = run_cli(capsys, "verify", "ineq-chain",
                                "--in", cantor_file, "--levels", "4..9")
        assert code == 0 and "ineq-chain: PASS" in text
        code, text, _ = run_cli(capsys, "verify", "ineq-chain",
                                "--in", cantor_file, "--levels", "4..9",
                                "--tol", "-1")
        assert code == 4 and "ineq-chain: FAIL" in text

    def test_ball_lower_bound(self, cantor_file, capsys):
        code, text, _ = run_cli(capsys, "verify", "ball-lower-bound",
                                "--in", cantor_file, "--levels", "2,4,6,8")
        assert code == 0 and "ball-lower-bound: PASS" in text

    def test_fourier_sandwich(self, tmp_path, cantor_file, capsys):
        jout = tmp_path / "sw.json"
        code, text, _ = run_cli(capsys, "verify", "fourier-sandwich",
                                "--in", cantor_file, "--eps", "1/5",
                                "--scales", "2^-2..2^-6",
                                "--json", str(jout))
        assert code == 0 and "fourier-sandwich: PASS" in text
        assert jout.exists()

    def test_frostman_stages(self, capsys):
        code, text, _ = run_cli(capsys, "verify", "frostman-stages",
                                "--s", "1/2", "--d", "1", "--depth", "8",
                                "--samples", "64")
        assert code == 0 and "frostman-stages: PASS" in text


class TestCliExport:
    def test_measure_table(self, tmp_path, cantor_file, capsys):
        mu_path = tmp_path / "mu.json"
        io.save_json(DyadicMeasureTree.uniform_on_set(cantor_tree(5)),
                     mu_path)
        out = tmp_path / "table.csv"
        code, text, _ = run_cli(capsys, "export", "--in", str(mu_path),
                                "--csv", str(out), "--min-level", "1")
        assert code == 0
        lines = out.read_text().splitlines()
        assert lines[0] == "level,max_mass,corr_sum"
        assert len(lines) == 6

    def test_set_table(self, tmp_path, cantor_file, capsys):
        out = tmp_path / "table.csv"
        code, _, _ = run_cli(capsys, "export", "--in", cantor_file,
                             "--csv", str(out))
        assert code == 0
        assert out.read_text().splitlines()[0] == "level,box_count,"

    def test_plan_file_is_rejected(self, tmp_path, capsys):
        p = tmp_path / "plan.json"
        io.save_json(sweep_plan(Fraction(2, 5), Fraction(7, 10)), p)
        code, _, err = run_cli(capsys, "export", "--in", str(p),
                               "--csv", str(tmp_path / "x.csv"))
        assert code == 2


class TestCliPlumbing:
    def test_argparse_errors_exit_two(self):
        with pytest.raises(SystemExit) as exc:
            main(["estimate"])
        assert exc.value.code == 2
        with pytest.raises(SystemExit):
            main(["no-such-command"])

    def test_bad_rational_rejected_by_parser(self, capsys):
        with pytest.raises(SystemExit) as exc:
            main(["verify", "alternating-counts", "--dim-low", "0.4"])
        assert exc.value.code == 2

    def test_threads_flag_and_env(self, capsys, monkeypatch):
        monkeypatch.delenv("DIMLAB_THREADS", raising=False)
        code, _, _ = run_cli(capsys, "--threads", "2",
                             "verify", "alternating-counts")
        assert code == 0 and os.environ["DIMLAB_THREADS"] == "2"
        monkeypatch.setenv("DIMLAB_THREADS", "3")
        code, _, _ = run_cli(capsys, "verify", "alternating-counts")
        assert code == 0 and os.environ["DIMLAB_THREADS"] == "3"

    def test_threads_must_be_positive(self, capsys):
        code, _, err = run_cli(capsys, "--threads", "0",
                               "verify", "alternating-counts")
        assert code == 2
