import json
import math
from math import pi

import pytest

import xxzchain.cli as cli
from xxzchain.cli import parse_angle, run
from xxzchain.errors import ValidationError


@pytest.fixture(scope="module")
def cache_dir(tmp_path_factory):
    return str(tmp_path_factory.mktemp("cache"))


def _run(capsys, argv):
    code = run(argv)
    captured = capsys.readouterr()
    return code, captured.out, captured.err


class TestParsing:
    def test_angle_pi_suffix(self):
        assert abs(parse_angle("0.5365pi") - 0.5365 * pi) < 1e-15
        assert parse_angle("pi") == pi
        assert parse_angle("1.25") == 1.25

    def test_angle_rejects_garbage(self):
        with pytest.raises(ValidationError):
            parse_angle("two-pi")

    def test_unknown_flag_exits_2(self, capsys):
        code, _, err = _run(capsys, ["solve", "--zeta", "0.5pi", "--flagX"])
        assert code == 2
        assert json.loads(err)["error"] == "validation"

    def test_conflicting_field_and_endpoint(self, capsys):
        code, _, err = _run(
            capsys, ["solve", "--zeta", "0.5365pi", "--q", "0.2", "--h", "1.0"]
        )
        assert code == 2
        assert "exactly one" in json.loads(err)["message"]

    def test_missing_subcommand(self, capsys):
        code, _, err = _run(capsys, [])
        assert code == 2


class TestSolve:
    def test_payload_fields(self, capsys, cache_dir):
        code, out, _ = _run(
            capsys,
            ["solve", "--zeta", "0.5365pi", "--q", "0.2", "--cache-dir", cache_dir],
        )
        assert code == 0
        data = json.loads(out)
        assert set(data) == {"J", "zeta", "q", "h", "p_F", "v_F", "v_inf", "Z_q", "D"}
        assert data["v_F"] < data["v_inf"]

    def test_free_fermion_values(self, capsys, cache_dir):
        with pytest.warns(UserWarning):
            code, out, _ = _run(
                capsys,
                ["solve", "--zeta", "0.5pi", "--h", "2.0", "--cache-dir", cache_dir],
            )
        assert code == 0
        data = json.loads(out)
        assert abs(data["q"] - 0.5 * math.log(2 + math.sqrt(3))) < 1e-8
        assert abs(data["p_F"] - pi / 3) < 1e-8
        assert abs(data["Z_q"] - 1.0) < 1e-8

    def test_byte_determinism(self, tmp_path, cache_dir, capsys):
        paths = [str(tmp_path / f"out{i}.json") for i in (1, 2)]
        for p in paths:
            code = run(
                [
                    "solve", "--zeta", "0.5365pi", "--q", "0.2",
                    "--cache-dir", cache_dir, "--out", p,
                ]
            )
            assert code == 0
        capsys.readouterr()
        assert open(paths[0], "rb").read() == open(paths[1], "rb").read()

    def test_seventeen_digits(self, capsys, cache_dir):
        _, out, _ = _run(
            capsys,
            ["solve", "--zeta", "0.5365pi", "--q", "0.2", "--cache-dir", cache_dir],
        )
        # q is exactly representable text at 17 significant digits
        assert '"q": 0.20000000000000001' in out


class TestStrings:
    def test_csv_layout(self, capsys):
        code, out, _ = _run(
            capsys, ["strings", "--zeta", "0.45pi", "--rmax", "5", "--format", "csv"]
        )
        assert code == 0
        lines = out.splitlines()
        assert lines[0] == "r,exists,sigma,line_im,sgn_p_prime,regime"
        assert len(lines) == 6
        # '.' decimal separator inside ',' separated fields
        assert any("1.5707963267948966" in ln for ln in lines)

    def test_json_rows(self, capsys):
        code, out, _ = _run(capsys, ["strings", "--zeta", "0.45pi", "--rmax", "4"])
        rows = json.loads(out)
        assert [row["r"] for row in rows] == [1, 2, 3, 4]


class TestConfigFile:
    def test_flags_override_config(self, tmp_path, capsys):
        cfg = tmp_path / "run.cfg"
        cfg.write_text(
            "zeta = 0.45pi\nrmax = 4\nformat = csv\n# comment line\n"
        )
        code, out, _ = _run(
            capsys, ["strings", "--config", str(cfg), "--format", "json"]
        )
        assert code == 0
        assert json.loads(out)[0]["r"] == 1

    def test_config_values_used(self, tmp_path, capsys):
        cfg = tmp_path / "run.cfg"
        cfg.write_text("zeta = 0.45pi\nrmax = 3\n")
        code, out, _ = _run(capsys, ["strings", "--config", str(cfg)])
        assert len(json.loads(out)) == 3

    def test_unknown_key_rejected(self, tmp_path, capsys):
        cfg = tmp_path / "run.cfg"
        cfg.write_text("zeta = 0.45pi\nbogus = 1\n")
        code, _, err = _run(capsys, ["strings", "--config", str(cfg)])
        assert code == 2
        assert "bogus" in json.loads(err)["message"]


class TestSaddlesExponents:
    def test_saddles_payload(self, capsys, cache_dir):
        code, out, _ = _run(
            capsys,
            [
                "saddles", "--zeta", "0.5365pi", "--q", "0.2",
                "--v", "0.6", "--rmax", "3", "--cache-dir", cache_dir,
            ],
        )
        assert code == 0
        data = json.loads(out)
        assert data["minimal"] is True
        assert {s["carrier"] for s in data["saddles"]} == {0, 1, 2, 3}

    def test_guard_band_velocity(self, capsys, cache_dir):
        code, _, err = _run(
            capsys,
            [
                "saddles", "--zeta", "0.5365pi", "--q", "0.2",
                "--v", "1.3459127348243545", "--rmax", "2",
                "--cache-dir", cache_dir,
            ],
        )
        assert code == 2
        assert json.loads(err)["error"] == "near-critical"

    def test_exponents_ranked(self, capsys, cache_dir):
        code, out, _ = _run(
            capsys,
            [
                "exponents", "--zeta", "0.5365pi", "--q", "0.2",
                "--v", "0.6", "--rmax", "3", "--bound", "1",
                "--cache-dir", cache_dir,
            ],
        )
        assert code == 0
        rows = json.loads(out)
        exps = [row["total_exponent"] for row in rows]
        assert exps == sorted(exps)
        assert rows[0]["total_exponent"] == 0

    def test_missing_velocity(self, capsys, cache_dir):
        code, _, err = _run(
            capsys,
            ["exponents", "--zeta", "0.5365pi", "--q", "0.2", "--cache-dir", cache_dir],
        )
        assert code == 2


class TestCache:
    def test_list_and_clear(self, capsys, cache_dir):
        code, out, _ = _run(capsys, ["cache", "list", "--cache-dir", cache_dir])
        assert code == 0
        listing = json.loads(out)
        assert listing["dir"] == cache_dir
        code, out, _ = _run(capsys, ["cache", "clear", "--cache-dir", cache_dir])
        assert code == 0
        assert json.loads(out)["removed"] >= 0
        code, out, _ = _run(capsys, ["cache", "list", "--cache-dir", cache_dir])
        assert json.loads(out)["entries"] == []


class TestVerifyDispatch:
    def test_pass_and_exit_codes(self, capsys, monkeypatch):
        rows = [
            {"identity": "n2", "rel_diff": 1e-9, "params": {}},
            {"kind": "gaussian", "rel_diff": 1e-12},
            {"kind": "exponential", "matches_product": True},
        ]
        monkeypatch.setattr(
            cli.contours, "run_verification_suite", lambda slow=False: list(rows)
        )
        code, out, _ = _run(capsys, ["verify", "--suite", "quick"])
        assert code == 0
        assert all(row["pass"] for row in json.loads(out))

    def test_failing_suite_exits_3(self, capsys, monkeypatch):
        rows = [{"identity": "n2", "rel_diff": 1e-3, "params": {}}]
        monkeypatch.setattr(
            cli.contours, "run_verification_suite", lambda slow=False: list(rows)
        )
        code, out, _ = _run(capsys, ["verify"])
        assert code == 3
        assert json.loads(out)[0]["pass"] is False
