"""Tests for config parsing, the sweep harness, CSV output, and the CLI."""

import os

import numpy as np
import pytest

from phaselab.cli import main
from phaselab.errors import ConfigError
from phaselab.harness import (
    CSV_HEADER,
    ExperimentConfig,
    format_number,
    load_config,
    parse_config_text,
    parse_records,
    read_csv_lines,
    run_cell,
    run_sweep,
    serialize_config,
    stable_hash,
    summarize,
    write_csv,
)

MINIMAL = """
experiment_id = t
estimator = ncvx
noise = noiseless
n = 16
ratios = [10]
"""

TINY = """
experiment_id = tiny
estimator = ncvx
noise = noiseless
n = 16
ratios = [10]
trials = 1
master_seed = 5
"""


# ---------------------------------------------------------------------------
# stable_hash / format_number


def test_stable_hash_deterministic_and_distinct():
    a = stable_hash(0, "exp", 10.0, 1.0, 3)
    assert a == stable_hash(0, "exp", 10.0, 1.0, 3)
    assert a != stable_hash(0, "exp", 10.0, 1.0, 4)
    assert a != stable_hash(0, "exp", 12.0, 1.0, 3)
    assert a != stable_hash(1, "exp", 10.0, 1.0, 3)
    assert a != stable_hash(0, "exq", 10.0, 1.0, 3)
    assert 0 <= a < 2 ** 64


def test_format_number():
    assert format_number(None) == ""
    assert format_number(3) == "3"
    assert format_number(0.1) == "%.17g" % 0.1
    assert format_number(1.0) == "1"


# ---------------------------------------------------------------------------
# config parsing


def test_minimal_config_defaults():
    cfg = parse_config_text(MINIMAL)
    assert cfg.family == "complex_gaussian"
    assert cfg.trials == 50
    assert cfg.master_seed == 0
    assert cfg.init == "spectral"
    assert cfg.max_iters == 2500
    assert cfg.tol == 1e-9
    assert cfg.signal_scales == (1.0,)
    assert cfg.output_path == "t.csv"


def test_estimator_dependent_iteration_default():
    cfg = parse_config_text(MINIMAL.replace("ncvx", "cvx"))
    assert cfg.max_iters == 1000


def test_unknown_key_names_key_and_line():
    with pytest.raises(ConfigError) as exc:
        parse_config_text(MINIMAL + "foo = 1\n")
    assert exc.value.key == "foo"
    assert "'foo'" in str(exc.value)
    assert exc.value.line is not None


def test_duplicate_key_rejected():
    with pytest.raises(ConfigError) as exc:
        parse_config_text(MINIMAL + "n = 8\n")
    assert exc.value.key == "n"


def test_missing_required_key():
    with pytest.raises(ConfigError) as exc:
        parse_config_text("experiment_id = t\n")
    assert exc.value.key in ("estimator", "noise", "n", "ratios")


def test_comments_and_blank_lines_ignored():
    cfg = parse_config_text("# comment\n\n" + MINIMAL)
    assert cfg.experiment_id == "t"


def test_type_errors():
    with pytest.raises(ConfigError):
        parse_config_text(MINIMAL.replace("n = 16", "n = sixteen"))
    with pytest.raises(ConfigError):
        parse_config_text(MINIMAL.replace("ratios = [10]", "ratios = 10"))
    with pytest.raises(ConfigError):
        parse_config_text(MINIMAL.replace("ratios = [10]", "ratios = [10, x]"))


def test_cross_field_validation():
    with pytest.raises(ConfigError):  # dofs without student_t
        parse_config_text(MINIMAL + "dofs = [4]\n")
    with pytest.raises(ConfigError):  # student_t without dofs
        parse_config_text(MINIMAL.replace("noiseless", "student_t"))
    with pytest.raises(ConfigError):  # sparsity on non-sparse estimator
        parse_config_text(MINIMAL + "sparsity = 4\n")
    with pytest.raises(ConfigError):  # rank > 1 outside cvx
        parse_config_text(MINIMAL + "rank = 2\n")
    with pytest.raises(ConfigError):  # poisson undefined for bilinear data
        parse_config_text(
            MINIMAL.replace("ncvx", "blinddeconv").replace("noiseless", "poisson")
        )


def test_config_round_trip():
    text = serialize_config(parse_config_text(MINIMAL))
    cfg = parse_config_text(text)
    assert serialize_config(cfg) == text
    assert cfg == parse_config_text(MINIMAL)


def test_shipped_configs_round_trip():
    root = os.path.join(os.path.dirname(__file__), "..", "configs")
    names = sorted(os.listdir(root))
    assert len(names) == 6
    for name in names:
        path = os.path.join(root, name)
        cfg = load_config(path)
        with open(path, "r", encoding="utf-8") as fh:
            assert serialize_config(cfg) == fh.read()


# ---------------------------------------------------------------------------
# sweep execution


def test_single_cell_golden():
    cfg = parse_config_text(TINY)
    lines, rate = run_sweep(cfg)
    assert len(lines) == 3
    assert rate == 0.0
    recs = parse_records(lines)
    by_metric = {r.metric: r for r in recs}
    assert set(by_metric) == {"dist", "mae", "relative_mse"}
    assert by_metric["relative_mse"].value <= 1e-10
    assert by_metric["dist"].value == by_metric["mae"].value


def test_row_shape_and_blank_runtime():
    cfg = parse_config_text(TINY)
    lines, _ = run_sweep(cfg)
    for line in lines:
        fields = line.split(",")
        assert len(fields) == len(CSV_HEADER.split(","))
        assert fields[13] == ""  # runtime_ms deliberately blank
        assert fields[3] == "16" and fields[4] == "160"


def test_record_count_formula():
    cfg = parse_config_text(
        TINY.replace("ratios = [10]", "ratios = [6, 10]").replace(
            "trials = 1", "trials = 2\nsignal_scales = [0.5, 1]"
        )
    )
    lines, _ = run_sweep(cfg)
    assert len(lines) == 2 * 2 * 2 * 3


def test_sweep_deterministic():
    cfg = parse_config_text(TINY)
    a, _ = run_sweep(cfg)
    b, _ = run_sweep(cfg)
    assert a == b


def test_resume_merges_verbatim():
    cfg = parse_config_text(TINY.replace("trials = 1", "trials = 3"))
    full, _ = run_sweep(cfg)
    partial = [l for l in full if l.split(",")[8] != "2"]  # drop one trial's rows
    resumed, _ = run_sweep(cfg, existing_lines=partial)
    assert resumed == full


def test_dof_excluded_from_seed():
    # paired design: the same trial shares its seed across dof values
    cfg = parse_config_text(
        TINY.replace("noiseless", "student_t") + "dofs = [4, 8]\n"
    )
    lines, _ = run_sweep(cfg)
    seeds = {l.split(",")[7]: l.split(",")[9] for l in lines}
    assert seeds["4"] == seeds["8"]


def test_failure_rows():
    cfg = parse_config_text(TINY)
    lines, failed = run_cell(cfg, 10.0, 1.0, None, 0)
    assert not failed
    assert all(l.split(",")[10] != "failure" for l in lines)


# ---------------------------------------------------------------------------
# CSV io and summaries


def test_write_and_read_csv(tmp_path):
    path = tmp_path / "out.csv"
    cfg = parse_config_text(TINY)
    lines, _ = run_sweep(cfg)
    write_csv(path, lines)
    assert read_csv_lines(path) == lines
    with open(path, "rb") as fh:
        data = fh.read()
    assert data.startswith(CSV_HEADER.encode()) and data.endswith(b"\n")


def test_read_csv_rejects_bad_header(tmp_path):
    path = tmp_path / "bad.csv"
    path.write_text("a,b,c\n1,2,3\n")
    with pytest.raises(ConfigError):
        read_csv_lines(path)


def test_summarize_examples():
    recs = parse_records(
        [
            "t,ncvx,noiseless,16,160,10,1,,0,1,mae,0.1,5,",
            "t,ncvx,noiseless,16,160,10,1,,1,2,mae,0.3,5,",
        ]
    )
    rows = summarize(recs)
    assert len(rows) == 1
    assert rows[0]["mean"] == pytest.approx(0.2)
    assert rows[0]["std"] == pytest.approx(0.1)
    assert rows[0]["count"] == 2 and rows[0]["excluded"] == 0

    single = summarize(recs[:1])
    assert single[0]["mean"] == pytest.approx(0.1)
    assert single[0]["std"] == 0.0


def test_summarize_excludes_nan():
    recs = parse_records(
        [
            "t,ncvx,noiseless,16,160,10,1,,0,1,mae,0.1,5,",
            "t,ncvx,noiseless,16,160,10,1,,1,2,mae,nan,,",
        ]
    )
    rows = summarize(recs)
    assert rows[0]["count"] == 1 and rows[0]["excluded"] == 1
    assert rows[0]["mean"] == pytest.approx(0.1)


def test_summarize_empty_rejected():
    with pytest.raises(ConfigError):
        summarize([])


# ---------------------------------------------------------------------------
# CLI


def _write_cfg(tmp_path, text):
    path = tmp_path / "exp.cfg"
    path.write_text(text)
    return str(path)


def test_cli_run_and_report(tmp_path, capsys):
    cfg_path = _write_cfg(tmp_path, TINY)
    out_dir = str(tmp_path / "out")
    assert main(["run", "--config", cfg_path, "--out", out_dir]) == 0
    csv_path = os.path.join(out_dir, "tiny.csv")
    assert os.path.exists(csv_path)
    assert main(["report", "--csv", csv_path]) == 0
    out = capsys.readouterr().out
    assert "relative_mse" in out and "mean" in out


def test_cli_bad_config_exit_code(tmp_path):
    cfg_path = _write_cfg(tmp_path, "foo = 1\n")
    assert main(["run", "--config", cfg_path, "--out", str(tmp_path)]) == 2
    assert main(["report", "--csv", str(tmp_path / "missing.csv")]) == 2


def test_cli_check_suite(capsys):
    assert main(["check", "--suite", "packing"]) == 0
    out = capsys.readouterr().out
    assert "pass" in out and "[" in out


def test_cli_resume(tmp_path):
    cfg_path = _write_cfg(tmp_path, TINY.replace("trials = 1", "trials = 2"))
    out_dir = str(tmp_path / "out")
    assert main(["run", "--config", cfg_path, "--out", out_dir]) == 0
    csv_path = os.path.join(out_dir, "tiny.csv")
    with open(csv_path, "rb") as fh:
        fresh = fh.read()
    # truncate to one completed trial, then resume
    lines = read_csv_lines(csv_path)
    write_csv(csv_path, [l for l in lines if l.split(",")[8] == "0"])
    assert main(["run", "--config", cfg_path, "--resume", "--out", out_dir]) == 0
    with open(csv_path, "rb") as fh:
        assert fh.read() == fresh
