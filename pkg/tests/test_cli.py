import json

import pytest

from obnox.cli import main
from obnox.core import make_instance
from obnox.helpers import dumps_instance


@pytest.fixture
def half_instance(tmp_path):
    path = tmp_path / "half.json"
    path.write_text(dumps_instance(make_instance(["1/4", "3/4"], ["11", "10"], d="1/2")))
    return path


class TestEval:
    def test_m3_on_midpoint_pair(self, fixtures_dir, capsys):
        assert main(["eval", str(fixtures_dir / "midpoint_pair.json"), "--mech", "M3"]) == 0
        out = capsys.readouterr().out
        assert "placement: (1, 0)" in out
        assert "social utility: 1\n" in out

    def test_m2_json(self, fixtures_dir, capsys):
        assert main(["eval", str(fixtures_dir / "sixths_pair.json"), "--mech", "M2", "--format", "json"]) == 0
        body = json.loads(capsys.readouterr().out)
        assert body["outcome"]["type"] == "lottery"
        assert len(body["outcome"]["support"]) == 4
        assert body["social_utility"]["exact"] == "1"

    def test_not_applicable(self, half_instance, capsys):
        assert main(["eval", str(half_instance), "--mech", "M1"]) == 3

    def test_malformed_instance(self, tmp_path):
        bad = tmp_path / "bad.json"
        bad.write_text('{"d": "0", "agents": [{"x": "0.5", "p": [1, 0]}]}')
        assert main(["eval", str(bad), "--mech", "M3"]) == 2

    def test_non_utf8_instance(self, tmp_path):
        bad = tmp_path / "latin1.json"
        bad.write_bytes(b'{"d": "0", "agents": [{"x": "\xbd", "p": [1, 0]}]}')
        assert main(["eval", str(bad), "--mech", "M3"]) == 2

    def test_missing_file(self, tmp_path):
        assert main(["eval", str(tmp_path / "nope.json"), "--mech", "M3"]) == 4

    def test_unknown_mechanism(self, fixtures_dir):
        assert main(["eval", str(fixtures_dir / "midpoint_pair.json"), "--mech", "M9"]) == 2


class TestOpt:
    def test_endpoint_pair(self, fixtures_dir, capsys):
        assert main(["opt", str(fixtures_dir / "endpoint_pair.json"), "--resolution", "12"]) == 0
        out = capsys.readouterr().out
        assert "opt value: 7/6" in out
        assert "grid agrees: yes" in out

    def test_json(self, fixtures_dir, capsys):
        assert main(["opt", str(fixtures_dir / "midpoint_pair.json"), "--format", "json"]) == 0
        body = json.loads(capsys.readouterr().out)
        assert body["value"]["exact"] == "1"
        assert body["upper_bound"]["exact"] == "2"


class TestVerify:
    def test_builtins_on_seeded_instances(self, capsys):
        assert main(["verify", "--count", "30", "--n", "4", "--d", "0,1/2"]) == 0
        body = json.loads(capsys.readouterr().out)
        assert body["passed"] is True
        summary = {row["mechanism"]: row for row in body["summary"]}
        assert summary["M1"]["skipped"] == 30
        assert summary["M4"]["checked"] == 60

    def test_negative_control(self, capsys):
        assert main(["verify", "--mech", "NC", "--count", "20"]) == 1
        body = json.loads(capsys.readouterr().out)
        assert body["passed"] is False
        assert body["failures"][0]["sp_violations"]

    def test_files(self, fixtures_dir, capsys):
        files = [str(p) for p in sorted(fixtures_dir.glob("*.json"))]
        assert main(["verify", *files, "--format", "text"]) == 0
        assert "passed: yes" in capsys.readouterr().out

    def test_malformed_json(self, tmp_path):
        bad = tmp_path / "bad.json"
        bad.write_text("{not json")
        assert main(["verify", str(bad)]) == 2

    def test_empty_mechanism_list(self):
        assert main(["verify", "--mech", ""]) == 2

    @pytest.mark.slow
    def test_two_hundred_instances(self):
        assert main(["verify", "--count", "200"]) == 0


class TestProbe:
    def test_deterministic_m3(self, capsys):
        assert main(["probe", "det", "M3"]) == 0
        lines = capsys.readouterr().out.splitlines()
        assert lines[0] == "2"
        assert lines[1] == "meets bound 2: yes"

    def test_randomized_m4(self, capsys):
        assert main(["probe", "rand", "M4"]) == 0
        lines = capsys.readouterr().out.splitlines()
        assert lines[0] == "7/6"
        assert lines[1] == "meets bound 14/13: yes"

    def test_randomized_m3_not_applicable(self):
        assert main(["probe", "rand", "M3"]) == 3

    def test_json(self, capsys):
        assert main(["probe", "rand", "M2", "--format", "json"]) == 0
        body = json.loads(capsys.readouterr().out)
        assert body["ratio"]["exact"] == "7/6"
        assert body["q"] == "1/2"


class TestSearch:
    def test_exhaustive_is_reproducible(self, capsys):
        args = ["search", "--mech", "M3", "--n", "2", "--exhaustive", "--resolution", "4"]
        assert main(args) == 0
        first = capsys.readouterr().out
        assert main(args) == 0
        assert capsys.readouterr().out == first
        assert json.loads(first)["exhaustive"] is True

    def test_adversarial_to_file(self, tmp_path):
        out = tmp_path / "search.json"
        assert main(["search", "--mech", "M4", "--n", "3", "--d", "1/4", "--budget", "200", "--out", str(out)]) == 0
        body = json.loads(out.read_text())
        assert body["evaluations"] == 200
        assert body["within_cap"] is True

    def test_unwritable_output(self, tmp_path):
        target = tmp_path / "missing" / "search.json"
        assert main(["search", "--mech", "M4", "--budget", "5", "--out", str(target)]) == 4


class TestSweep:
    def test_m4_csv(self, capsys):
        assert main(["sweep", "--mech", "M4", "--d", "0,1/4,1/2,1", "--count", "20"]) == 0
        lines = capsys.readouterr().out.splitlines()
        assert lines[0].startswith("mechanism,d,n,q10,q01,q11,seed,max_ratio,mean_ratio,sp_ok,cap_ok")
        assert len(lines) == 5

    def test_byte_identical_output(self, tmp_path):
        a, b = tmp_path / "a.csv", tmp_path / "b.csv"
        args = ["sweep", "--mech", "M2,M3", "--d", "0,1/3", "--n", "3,5", "--count", "15", "--seed", "9"]
        assert main([*args, "--out", str(a)]) == 0
        assert main([*args, "--out", str(b)]) == 0
        assert a.read_bytes() == b.read_bytes()

    def test_rejected_cells_are_skipped(self, capsys):
        args = ["sweep", "--mech", "M4,NC", "--d", "0,3/4", "--count", "5", "--no-sp"]
        assert main(args) == 0
        lines = capsys.readouterr().out.splitlines()
        assert len(lines) == 5
        assert lines[-1].startswith("NC,3/4,")
        assert lines[-1].endswith(",skipped")

    def test_no_mechanisms(self):
        assert main(["sweep", "--mech", ""]) == 2
        assert main(["sweep"]) == 2

    def test_bad_mix(self):
        assert main(["sweep", "--mech", "M4", "--mix", "1/2,1/2"]) == 2


class TestBounds:
    def test_text(self, capsys):
        assert main(["bounds"]) == 0
        out = capsys.readouterr().out
        assert out.count("\n") == 4
        assert "14/13" in out

    def test_csv(self, capsys):
        assert main(["bounds", "--format", "csv"]) == 0
        lines = capsys.readouterr().out.splitlines()
        assert lines[0] == "mechanism,setting,kind,upper_bound,universal_lower_bound"
