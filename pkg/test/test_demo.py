from click.testing import CliRunner

from src.artifacts import read_summary
import src.demo as demo_module
from src.demo import demo
from src.selftest import CheckResult

SMALL = ["--rows", "24", "--cols", "24", "--maxit", "30", "--seed", "3", "--verbosity", "0"]


def test_inpaint_writes_outputs(tmp_path):
    result = CliRunner().invoke(demo, ["inpaint", *SMALL, "--outdir", str(tmp_path)])
    assert result.exit_code == 0, result.output
    names = {p.name for p in tmp_path.iterdir()}
    for stem in ("p1_dr", "p2_fb", "p2_dr"):
        assert f"sol_{stem}.pgm" in names
        assert f"trace_{stem}.csv" in names
    assert {"original.pgm", "observed.pgm", "summary.txt"} <= names
    summary = read_summary(tmp_path / "summary.txt")
    assert summary["seed"] == "3"
    assert float(summary["snr_p1_dr"]) > float(summary["snr_observed"])


def test_inpaint_is_reproducible(tmp_path):
    runner = CliRunner()
    for run in ("a", "b"):
        result = runner.invoke(demo, ["inpaint", *SMALL, "--outdir", str(tmp_path / run)])
        assert result.exit_code == 0, result.output
    for path in (tmp_path / "a").iterdir():
        assert path.read_bytes() == (tmp_path / "b" / path.name).read_bytes()


def test_inpaint_rejects_bad_probability(tmp_path):
    result = CliRunner().invoke(demo, ["inpaint", "--p", "1.5", "--outdir", str(tmp_path)])
    assert result.exit_code == 2


def test_inpaint_rejects_bad_verbosity(tmp_path):
    result = CliRunner().invoke(demo, ["inpaint", "--verbosity", "5", "--outdir", str(tmp_path)])
    assert result.exit_code == 2


def test_selftest_quick_passes():
    result = CliRunner().invoke(demo, ["selftest", "--quick"])
    assert result.exit_code == 0, result.output
    assert "FAIL" not in result.output
    assert "PASS lasso[admm]" in result.output


def test_selftest_exits_one_on_failure(monkeypatch):
    monkeypatch.setattr(demo_module, "run_selftest",
                        lambda seed, quick: [CheckResult("ok", True, ""), CheckResult("bad", False, "x")])
    result = CliRunner().invoke(demo, ["selftest"])
    assert result.exit_code == 1
    assert "FAIL bad" in result.output
