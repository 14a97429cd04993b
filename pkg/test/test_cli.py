# test/test_cli.py
"""End-to-end tests of the command line surface."""
import csv
import json
from functools import partial

import numpy as np
import pytest

from app.commands import clt
from app.core.config import settings
from app.core.errors import ConsistencyError
from app.main import main
from app.models.dyadic import VerifyLevel
from app.services import verify_service
from app.services.fht_service import fht_quadrant
from app.services.verify_service import VerificationService

corrupted_fht = partial(fht_quadrant, shift_rule=lambda t: (t >> 1, t >> 1))

GOLDEN_KS = 0.003
GOLDEN_CLT = {"clt_sup_error_p8": 0.02, "clt_sup_error_p16": 0.01, "psi20_xi1_gauss_gap": 1e-4}


@pytest.fixture
def stored_golden(monkeypatch, tmp_path):
    """Stubs the expensive oracle values and writes a golden file, optionally with overrides."""
    monkeypatch.setattr(verify_service, "sampled_ks_p16", lambda: GOLDEN_KS)
    monkeypatch.setattr(verify_service, "clt_golden_values", lambda: dict(GOLDEN_CLT))

    def write(**overrides):
        values = {
            "ks_sampled_p16": GOLDEN_KS,
            "ks_sampled_count": verify_service.GOLDEN_SAMPLE_COUNT,
            "ks_sampled_seed": verify_service.GOLDEN_SEED,
            **GOLDEN_CLT,
        }
        values.update(overrides)
        path = tmp_path / "golden.json"
        path.write_text(json.dumps(values))
        return path
    return write


def _rows(path):
    with open(path, newline="") as f:
        return list(csv.reader(f))


class TestFhtCommand:
    def test_all_quadrants(self, write_p2, tmp_path):
        pixels = np.zeros((8, 8), dtype=np.int64)
        pixels[2, 3] = 9
        output = tmp_path / "acc.csv"
        assert main(["fht", "--input", str(write_p2(pixels)), "--quadrant", "all", "--output", str(output)]) == 0
        rows = _rows(output)
        assert rows[0] == ["quadrant", "t", "h", "sum"]
        assert len(rows) == 1 + 4 * 8 * 15
        meta = json.loads((tmp_path / "acc.csv.meta.json").read_text())
        assert set(meta["quadrants"]) == {"0", "1", "2", "3"}
        assert meta["quadrants"]["1"]["flip"].startswith("transpose")

    def test_single_quadrant(self, write_p2, tmp_path):
        output = tmp_path / "acc.csv"
        assert main(["fht", "--input", str(write_p2(np.ones((4, 4)))), "--quadrant", "2", "--output", str(output)]) == 0
        rows = _rows(output)[1:]
        assert {r[0] for r in rows} == {"2"}
        assert len(rows) == 4 * 7

    def test_dimension_error(self, write_p2, tmp_path):
        code = main(["fht", "--input", str(write_p2(np.ones((6, 6)))), "--output", str(tmp_path / "a.csv")])
        assert code == 3

    def test_pad(self, write_p2, tmp_path):
        output = tmp_path / "a.csv"
        assert main(["fht", "--input", str(write_p2(np.ones((6, 6)))), "--pad", "--quadrant", "0",
                     "--output", str(output)]) == 0
        assert len(_rows(output)) == 1 + 8 * 15

    def test_parse_error(self, tmp_path):
        path = tmp_path / "bad.pgm"
        path.write_bytes(b"P7\n")
        assert main(["fht", "--input", str(path), "--output", str(tmp_path / "a.csv")]) == 4


class TestLineCommand:
    def test_single_column(self, capsys):
        assert main(["line", "--p", "3", "--t", "6", "--x", "4"]) == 0
        lines = capsys.readouterr().out.splitlines()
        assert lines[0] == "x,D,num,E,E_float"
        assert lines[1].startswith("4,3,-3,-3/7,")

    def test_all_columns(self, capsys):
        assert main(["line", "--p", "2", "--t", "1"]) == 0
        assert len(capsys.readouterr().out.splitlines()) == 1 + 4

    def test_bad_p(self):
        assert main(["line", "--p", "0", "--t", "0"]) == 2

    def test_bad_column(self):
        assert main(["line", "--p", "3", "--t", "1", "--x", "8"]) == 2


class TestDevCommands:
    def test_stats(self, capsys):
        assert main(["dev", "stats", "--p", "2"]) == 0
        out = capsys.readouterr().out
        assert "variance,1/36," in out
        assert "max_num,1,1" in out

    def test_stats_sampled(self, tmp_path):
        output = tmp_path / "stats.csv"
        assert main(["dev", "stats", "--p", "8", "--samples", "5000", "--seed", "3", "--output", str(output)]) == 0
        rows = {r[0]: r[1] for r in _rows(output)}
        assert rows["variance"] == rows["variance_formula"]

    def test_hist(self, tmp_path):
        output = tmp_path / "hist.csv"
        assert main(["dev", "hist", "--p", "2", "--bins", "3", "--output", str(output)]) == 0
        assert [r[3] for r in _rows(output)[1:]] == ["1/8", "3/4", "1/8"]

    def test_hist_zero_bins(self, tmp_path):
        assert main(["dev", "hist", "--p", "2", "--bins", "0", "--output", str(tmp_path / "h.csv")]) == 2

    def test_ks(self, capsys):
        assert main(["dev", "ks", "--p", "1,4"]) == 0
        lines = capsys.readouterr().out.splitlines()
        assert lines[0] == "p,mode,ks_distance"
        assert lines[1] == "1,exhaustive,0.500000"

    def test_ks_bad_list(self):
        assert main(["dev", "ks", "--p", "4,x"]) == 2


class TestSpectralAndClt:
    def test_spectral(self, tmp_path):
        output = tmp_path / "spectral.csv"
        assert main(["spectral", "--p", "4", "--output", str(output)]) == 0
        summary = _rows(output)[-1]
        assert summary[0] == "summary"
        assert summary[4] == "5/1"
        assert summary[7] == "true"

    def test_clt(self, tmp_path, capsys):
        output = tmp_path / "clt.csv"
        code = main(["clt", "--p", "2,4", "--xi-max", "4", "--xi-steps", "8", "--grid", "256", "--output", str(output)])
        assert code == 0
        lines = output.read_text().splitlines()
        assert lines[0].startswith("#")
        assert len(lines) == 2 + 2 * 9
        assert "p=2 sup|psi - gauss|=" in capsys.readouterr().out

    def test_clt_strict_passes_when_error_shrinks(self, tmp_path):
        code = main(["clt", "--p", "2,8", "--xi-max", "4", "--xi-steps", "16", "--strict",
                     "--output", str(tmp_path / "c.csv")])
        assert code == 0

    @pytest.mark.parametrize("flags,code", [(["--strict"], 1), ([], 0)])
    def test_clt_growing_error(self, monkeypatch, tmp_path, flags, code):
        monkeypatch.setattr(clt, "sup_errors_non_increasing", lambda reports: False)
        output = tmp_path / "c.csv"
        args = ["clt", "--p", "2,4", "--xi-max", "4", "--xi-steps", "4", "--output", str(output)]
        assert main(args + flags) == code
        assert output.exists()

    def test_resource_error(self, tmp_path):
        code = main(["clt", "--p", "23", "--xi-max", "1", "--xi-steps", "1", "--output", str(tmp_path / "c.csv")])
        assert code == 5

    def test_clt_bad_grid(self, tmp_path):
        code = main(["clt", "--p", "2", "--xi-max", "4", "--xi-steps", "8", "--grid", "100",
                     "--output", str(tmp_path / "c.csv")])
        assert code == 2


class TestVerify:
    def test_corrupted_merge_rule_fails_oracle(self):
        service = VerificationService(VerifyLevel.QUICK, fht_transform=corrupted_fht)
        with pytest.raises(ConsistencyError):
            service.check_fht_oracle()

    def test_corrupted_rule_exit_code(self, monkeypatch, capsys):
        monkeypatch.setattr(verify_service, "fht_quadrant", corrupted_fht)
        monkeypatch.setattr(VerificationService, "_checks",
                            lambda self: [("fht_oracle", self.check_fht_oracle), ("mobius_circle", self.check_mobius)])
        assert main(["verify", "--level", "quick"]) != 0
        out = capsys.readouterr().out
        assert "FAIL  fht_oracle" in out
        assert "PASS  mobius_circle" in out

    def test_json_summary(self, monkeypatch, capsys):
        monkeypatch.setattr(VerificationService, "_checks", lambda self: [("mobius_circle", self.check_mobius)])
        assert main(["verify", "--json"]) == 0
        summary = json.loads(capsys.readouterr().out)
        assert summary["passed"] is True
        assert summary["checks"][0]["name"] == "mobius_circle"

    def test_missing_golden_fails_full_level(self, monkeypatch, tmp_path):
        service = VerificationService(VerifyLevel.FULL, golden_path=str(tmp_path / "missing.json"))
        with pytest.raises(ConsistencyError, match="no golden file"):
            service.check_golden()
        monkeypatch.setattr(VerificationService, "_checks", lambda self: [("golden_values", self.check_golden)])
        summary = service.run()
        assert not summary.passed
        assert "FAIL  golden_values" in service.render_table(summary)

    def test_golden_match(self, stored_golden):
        service = VerificationService(VerifyLevel.FULL, golden_path=str(stored_golden()))
        assert service.check_golden().startswith("golden file")
        assert "p=16(sampled):0.003000" in service.check_ks_golden()

    def test_golden_tampered_clt_value(self, stored_golden):
        path = stored_golden(clt_sup_error_p8=GOLDEN_CLT["clt_sup_error_p8"] + 1e-6)
        with pytest.raises(ConsistencyError, match="clt_sup_error_p8"):
            VerificationService(VerifyLevel.FULL, golden_path=str(path)).check_golden()

    def test_golden_tampered_ks_value(self, stored_golden):
        path = stored_golden(ks_sampled_p16=GOLDEN_KS - 0.006)
        with pytest.raises(ConsistencyError, match="sampled KS p=16"):
            VerificationService(VerifyLevel.FULL, golden_path=str(path)).check_ks_golden()

    def test_golden_ks_within_slack(self, stored_golden):
        path = stored_golden(ks_sampled_p16=GOLDEN_KS - 0.004)
        VerificationService(VerifyLevel.FULL, golden_path=str(path)).check_ks_golden()

    def test_golden_other_seed(self, stored_golden):
        path = stored_golden(ks_sampled_seed=verify_service.GOLDEN_SEED + 1)
        with pytest.raises(ConsistencyError, match="seed"):
            VerificationService(VerifyLevel.FULL, golden_path=str(path)).check_ks_golden()

    def test_golden_missing_key(self, tmp_path):
        path = tmp_path / "partial.json"
        path.write_text(json.dumps({"ks_sampled_p16": GOLDEN_KS}))
        with pytest.raises(ConsistencyError, match="lacks"):
            VerificationService(VerifyLevel.FULL, golden_path=str(path)).check_golden()

    def test_golden_not_json(self, tmp_path):
        path = tmp_path / "golden.json"
        path.write_text("{")
        with pytest.raises(ConsistencyError, match="not valid JSON"):
            VerificationService(VerifyLevel.FULL, golden_path=str(path)).check_golden()

    def test_golden_command_writes_file(self, stored_golden, tmp_path):
        output = tmp_path / "data" / "golden.json"
        assert main(["golden", "--output", str(output)]) == 0
        assert set(json.loads(output.read_text())) == verify_service.GOLDEN_KEYS
        VerificationService(VerifyLevel.FULL, golden_path=str(output)).check_golden()

    @pytest.mark.slow
    def test_quick_level_passes(self, capsys):
        assert main(["verify", "--level", "quick"]) == 0
        assert "PASS  overall (quick)" in capsys.readouterr().out

    @pytest.mark.slow
    def test_json_is_deterministic(self, monkeypatch):
        monkeypatch.setattr(settings, "DYADIC_THREADS", 1)
        first = VerificationService.render_json(VerificationService(VerifyLevel.QUICK).run())
        monkeypatch.setattr(settings, "DYADIC_THREADS", 8)
        second = VerificationService.render_json(VerificationService(VerifyLevel.QUICK).run())
        assert first == second


class TestArguments:
    def test_unknown_command(self):
        assert main(["nope"]) == 2

    def test_missing_flag(self):
        assert main(["spectral", "--p", "3"]) == 2

    def test_bench(self, capsys):
        assert main(["bench", "--n", "8"]) == 0
        assert "n=8: additions=332" in capsys.readouterr().out

    def test_bench_bad_n(self):
        assert main(["bench", "--n", "12"]) == 2
