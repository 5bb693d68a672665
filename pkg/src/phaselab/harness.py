"""Config-driven experiment sweeps with deterministic seeding and CSV output.

One experiment per config file, flat `key = value` text with explicit list
syntax.  Every (ratio, scale, trial) cell derives its seed from a 64-bit
hash of the master seed and cell coordinates, so results are independent of
execution order and worker count.  Records are sorted into a canonical
order before writing; two runs of the same config produce byte-identical
CSV files.  Wall-clock timings are deliberately not persisted (the
runtime_ms column stays empty) to keep that guarantee.
"""

import concurrent.futures
import hashlib
import math
import os
import re
import tempfile
from dataclasses import dataclass, field, replace
from typing import List, Optional, Tuple

import numpy as np

from .convex import (
    NuclearBallConfig,
    PsdSolveConfig,
    blinddeconv_solve,
    extract_rank1,
    psd_ls_solve,
)
from .core import (
    FAMILIES,
    bilinear_apply,
    draw_bilinear_ensemble,
    draw_ensemble,
    lifted_apply,
    random_signal,
)
from .errors import ConfigError, NumericFailure
from .metrics import dist_modulo_phase, lifted_error
from .noise import NOISE_KINDS, NoiseModel, apply_noise, observe
from .wirtinger import INITS, WfConfig, prior_scaled_init, sparse_wf_solve, wf_solve

CSV_HEADER = (
    "experiment_id,estimator,noise_kind,n,m,ratio,signal_scale,dof,"
    "trial_index,seed,metric_name,metric_value,iterations,runtime_ms"
)

ESTIMATORS = ("ncvx", "cvx", "sparse", "blinddeconv")

# Metric rows emitted per successful trial, in canonical (sorted) order.
ESTIMATOR_METRICS = {
    "ncvx": ("dist", "mae", "relative_mse"),
    "sparse": ("dist", "mae", "relative_mse"),
    "cvx": ("dist", "lifted_frobenius", "mae", "relative_mse"),
    "cvx_lowrank": ("frobenius", "relative_frobenius"),
    "blinddeconv": ("frobenius", "relative_frobenius"),
}

_INT_RE = re.compile(r"^[+-]?\d+$")


@dataclass(frozen=True)
class ExperimentConfig:
    experiment_id: str
    estimator: str
    noise: str
    n: int
    ratios: Tuple[float, ...]
    family: str = "complex_gaussian"
    dofs: Tuple[float, ...] = ()
    noise_scale: float = 1.0
    signal_scales: Tuple[float, ...] = (1.0,)
    trials: int = 50
    master_seed: int = 0
    init: str = "spectral"
    max_iters: int = 2500
    tol: float = 1e-9
    sparsity: Optional[int] = None
    rank: int = 1
    output_path: str = ""

    def metric_names(self):
        if self.estimator == "cvx" and self.rank > 1:
            return ESTIMATOR_METRICS["cvx_lowrank"]
        return ESTIMATOR_METRICS[self.estimator]

    def cells(self):
        dofs = self.dofs if self.noise == "student_t" else (None,)
        return [
            (ratio, scale, dof, trial)
            for ratio in self.ratios
            for scale in self.signal_scales
            for dof in dofs
            for trial in range(self.trials)
        ]


def stable_hash(master_seed, experiment_id, ratio, scale, trial):
    """64-bit seed for one logical trial, stable across machines and job counts.

    Hashes a canonical string encoding with blake2b (8-byte digest).
    """
    key = "|".join(
        [
            str(int(master_seed)),
            str(experiment_id),
            format_number(ratio),
            format_number(scale),
            str(int(trial)),
        ]
    )
    digest = hashlib.blake2b(key.encode("utf-8"), digest_size=8).digest()
    return int.from_bytes(digest, "big")


def format_number(v):
    """Canonical text form: ints bare, floats with 17 significant digits."""
    if v is None:
        return ""
    if isinstance(v, (int, np.integer)) and not isinstance(v, bool):
        return str(int(v))
    return "%.17g" % float(v)


# ---------------------------------------------------------------------------
# config parsing


_DEFAULTS = {
    "family": "complex_gaussian",
    "noise_scale": 1.0,
    "signal_scales": (1.0,),
    "trials": 50,
    "master_seed": 0,
    "init": "spectral",
    "tol": 1e-9,
    "rank": 1,
}

_KNOWN_KEYS = (
    "experiment_id",
    "estimator",
    "family",
    "noise",
    "dofs",
    "noise_scale",
    "n",
    "ratios",
    "signal_scales",
    "trials",
    "master_seed",
    "init",
    "max_iters",
    "tol",
    "sparsity",
    "rank",
    "output_path",
)

_REQUIRED_KEYS = ("experiment_id", "estimator", "noise", "n", "ratios")

_STRING_KEYS = ("experiment_id", "estimator", "family", "noise", "init", "output_path")
_LIST_KEYS = ("ratios", "signal_scales", "dofs")
_INT_KEYS = ("n", "trials", "master_seed", "max_iters", "sparsity", "rank")
_FLOAT_KEYS = ("noise_scale", "tol")


def _parse_scalar(text, key, lineno):
    text = text.strip()
    if _INT_RE.match(text):
        return int(text)
    try:
        return float(text)
    except ValueError:
        return text


def _parse_value(text, key, lineno):
    text = text.strip()
    if text.startswith("["):
        if not text.endswith("]"):
            raise ConfigError(
                f"line {lineno}: unterminated list for key {key!r}", key=key, line=lineno
            )
        body = text[1:-1].strip()
        if not body:
            return ()
        return tuple(_parse_scalar(item, key, lineno) for item in body.split(","))
    return _parse_scalar(text, key, lineno)


def parse_config_text(text, source="<string>"):
    """Parse the flat key-value config format; reject unknown keys."""
    raw = {}
    for lineno, line in enumerate(text.splitlines(), start=1):
        stripped = line.strip()
        if not stripped or stripped.startswith("#"):
            continue
        if "=" not in stripped:
            raise ConfigError(
                f"{source}, line {lineno}: expected 'key = value', got {stripped!r}",
                line=lineno,
            )
        key, _, value = stripped.partition("=")
        key = key.strip()
        if key not in _KNOWN_KEYS:
            raise ConfigError(
                f"{source}, line {lineno}: unknown key {key!r}", key=key, line=lineno
            )
        if key in raw:
            raise ConfigError(
                f"{source}, line {lineno}: duplicate key {key!r}", key=key, line=lineno
            )
        raw[key] = (_parse_value(value, key, lineno), lineno)

    for key in _REQUIRED_KEYS:
        if key not in raw:
            raise ConfigError(f"{source}: missing required key {key!r}", key=key)

    def err(key, msg):
        lineno = raw[key][1] if key in raw else None
        raise ConfigError(f"{source}: key {key!r}: {msg}", key=key, line=lineno)

    values = {}
    for key, (value, lineno) in raw.items():
        if key in _STRING_KEYS and not isinstance(value, str):
            err(key, f"expected a string, got {value!r}")
        if key in _LIST_KEYS:
            if not isinstance(value, tuple):
                err(key, f"expected a list, got {value!r}")
            if any(isinstance(v, str) for v in value):
                err(key, "expected numeric list entries")
        if key in _INT_KEYS and not isinstance(value, int):
            err(key, f"expected an integer, got {value!r}")
        if key in _FLOAT_KEYS:
            if isinstance(value, (int, float)):
                value = float(value)
            else:
                err(key, f"expected a number, got {value!r}")
        values[key] = value

    for key, default in _DEFAULTS.items():
        values.setdefault(key, default)
    values.setdefault("dofs", ())
    values.setdefault("sparsity", None)
    if "max_iters" not in values:
        values["max_iters"] = {"cvx": 1000, "blinddeconv": 2000}.get(
            values["estimator"], 2500
        )
    if not values.get("output_path"):
        values["output_path"] = values["experiment_id"] + ".csv"

    cfg = ExperimentConfig(**values)
    _validate_config(cfg, source)
    return cfg


def _validate_config(cfg, source):
    def bad(msg, key=None):
        raise ConfigError(f"{source}: {msg}", key=key)

    if not cfg.experiment_id or "," in cfg.experiment_id or "|" in cfg.experiment_id:
        bad("experiment_id must be nonempty without ',' or '|'", "experiment_id")
    if cfg.estimator not in ESTIMATORS:
        bad(f"unknown estimator {cfg.estimator!r}", "estimator")
    if cfg.family not in FAMILIES:
        bad(f"unknown family {cfg.family!r}", "family")
    if cfg.noise not in NOISE_KINDS:
        bad(f"unknown noise kind {cfg.noise!r}", "noise")
    if cfg.n < 1:
        bad("n must be >= 1", "n")
    if not cfg.ratios:
        bad("ratios must be nonempty", "ratios")
    if any(r <= 0 for r in cfg.ratios):
        bad("ratios must be positive", "ratios")
    if not cfg.signal_scales or any(s <= 0 for s in cfg.signal_scales):
        bad("signal_scales must be positive and nonempty", "signal_scales")
    if cfg.trials < 1:
        bad("trials must be >= 1", "trials")
    if cfg.noise == "student_t":
        if not cfg.dofs:
            bad("student_t noise needs a dofs list", "dofs")
        if any(d <= 2 for d in cfg.dofs):
            bad("dofs must all be > 2", "dofs")
    elif cfg.dofs:
        bad("dofs is only valid with student_t noise", "dofs")
    if cfg.init not in INITS:
        bad(f"unknown init {cfg.init!r}", "init")
    if cfg.estimator == "sparse":
        if cfg.sparsity is None or not 1 <= cfg.sparsity <= cfg.n:
            bad("sparse estimator needs 1 <= sparsity <= n", "sparsity")
    elif cfg.sparsity is not None:
        bad("sparsity is only valid for the sparse estimator", "sparsity")
    if cfg.rank < 1 or cfg.rank > cfg.n:
        bad("rank must be in [1, n]", "rank")
    if cfg.rank > 1 and cfg.estimator != "cvx":
        bad("rank > 1 is only valid for the cvx estimator", "rank")
    if cfg.estimator == "blinddeconv" and cfg.noise == "poisson":
        bad("poisson noise is not defined for bilinear measurements", "noise")
    if cfg.max_iters < 1:
        bad("max_iters must be >= 1", "max_iters")
    if cfg.tol <= 0:
        bad("tol must be > 0", "tol")


def load_config(path):
    with open(path, "r", encoding="utf-8") as fh:
        return parse_config_text(fh.read(), source=str(path))


def serialize_config(cfg):
    """Canonical text form; load(serialize(cfg)) == cfg byte-for-byte stable."""
    lines = [
        f"experiment_id = {cfg.experiment_id}",
        f"estimator = {cfg.estimator}",
        f"family = {cfg.family}",
        f"noise = {cfg.noise}",
    ]
    if cfg.noise == "student_t":
        lines.append("dofs = [" + ", ".join(_cfg_num(d) for d in cfg.dofs) + "]")
    if cfg.noise in ("student_t", "gaussian"):
        lines.append(f"noise_scale = {_cfg_num(cfg.noise_scale)}")
    lines.append(f"n = {cfg.n}")
    lines.append("ratios = [" + ", ".join(_cfg_num(r) for r in cfg.ratios) + "]")
    lines.append(
        "signal_scales = [" + ", ".join(_cfg_num(s) for s in cfg.signal_scales) + "]"
    )
    lines.append(f"trials = {cfg.trials}")
    lines.append(f"master_seed = {cfg.master_seed}")
    if cfg.estimator in ("ncvx", "sparse"):
        lines.append(f"init = {cfg.init}")
    lines.append(f"max_iters = {cfg.max_iters}")
    lines.append(f"tol = {_cfg_num(cfg.tol)}")
    if cfg.estimator == "sparse":
        lines.append(f"sparsity = {cfg.sparsity}")
    if cfg.estimator == "cvx":
        lines.append(f"rank = {cfg.rank}")
    lines.append(f"output_path = {cfg.output_path}")
    return "\n".join(lines) + "\n"


def _cfg_num(v):
    if isinstance(v, (int, np.integer)) and not isinstance(v, bool):
        return str(int(v))
    return repr(float(v))


# ---------------------------------------------------------------------------
# sweep execution


def _noise_model(cfg, dof):
    if cfg.noise == "student_t":
        return NoiseModel("student_t", dof=dof, scale=cfg.noise_scale)
    if cfg.noise == "gaussian":
        return NoiseModel("gaussian", scale=cfg.noise_scale)
    return NoiseModel(cfg.noise)


def _row(cfg, m, ratio, scale, dof, trial, seed, metric, value, iterations):
    fields = [
        cfg.experiment_id,
        cfg.estimator,
        cfg.noise,
        str(cfg.n),
        str(m),
        format_number(ratio),
        format_number(scale),
        format_number(dof) if dof is not None else "",
        str(trial),
        str(seed),
        metric,
        format_number(value),
        str(iterations) if iterations is not None else "",
        "",  # runtime_ms: intentionally blank, see module docstring
    ]
    return ",".join(fields)


def run_cell(cfg, ratio, scale, dof, trial):
    """Run one logical trial; returns (csv lines, failed flag)."""
    seed = stable_hash(cfg.master_seed, cfg.experiment_id, ratio, scale, trial)
    m = int(round(ratio * cfg.n))
    rng = np.random.default_rng(seed)
    ens_seed = int(rng.integers(2 ** 63))
    obs_seed = int(rng.integers(2 ** 63))
    model = _noise_model(cfg, dof)

    metrics = {}
    iterations = None
    failed = False
    try:
        if cfg.estimator in ("ncvx", "sparse"):
            E = draw_ensemble(cfg.family, cfg.n, m, ens_seed)
            x = random_signal(
                cfg.n, scale, rng,
                sparsity=cfg.sparsity if cfg.estimator == "sparse" else None,
            )
            obs = observe(E, x, model, obs_seed)
            wf_cfg = WfConfig(
                max_iters=cfg.max_iters,
                tol=cfg.tol,
                init=cfg.init,
                sparsity=cfg.sparsity,
            )
            if cfg.estimator == "sparse":
                trace = sparse_wf_solve(E, obs.y, wf_cfg)
            elif cfg.init == "prior_scaled":
                trace = wf_solve(E, obs.y, wf_cfg, z0=prior_scaled_init(x, rng))
            else:
                trace = wf_solve(E, obs.y, wf_cfg)
            iterations = trace.iterations
            d = dist_modulo_phase(trace.estimate, x)
            metrics = {
                "dist": d,
                "mae": d,
                "relative_mse": d * d / (scale * scale),
            }
        elif cfg.estimator == "cvx" and cfg.rank == 1:
            E = draw_ensemble(cfg.family, cfg.n, m, ens_seed)
            x = random_signal(cfg.n, scale, rng)
            obs = observe(E, x, model, obs_seed)
            psd_cfg = PsdSolveConfig(max_iters=cfg.max_iters, tol=cfg.tol)
            Z, trace = psd_ls_solve(E, obs.y, psd_cfg)
            iterations = trace.iterations
            z = extract_rank1(Z)
            d = dist_modulo_phase(z, x)
            metrics = {
                "dist": d,
                "mae": d,
                "relative_mse": d * d / (scale * scale),
                "lifted_frobenius": lifted_error(Z, x),
            }
        elif cfg.estimator == "cvx":
            E = draw_ensemble(cfg.family, cfg.n, m, ens_seed)
            V = rng.standard_normal((cfg.n, cfg.rank)) + 1j * rng.standard_normal(
                (cfg.n, cfg.rank)
            )
            X = V @ V.conj().T
            X *= scale / np.linalg.norm(X)
            y = apply_noise(lifted_apply(E, X), model, obs_seed)
            psd_cfg = PsdSolveConfig(max_iters=cfg.max_iters, tol=cfg.tol)
            Z, trace = psd_ls_solve(E, y, psd_cfg)
            iterations = trace.iterations
            fro = float(np.linalg.norm(Z - X))
            metrics = {"frobenius": fro, "relative_frobenius": fro / scale}
        elif cfg.estimator == "blinddeconv":
            B = draw_bilinear_ensemble(cfg.family, cfg.n, m, ens_seed)
            x = random_signal(cfg.n, scale, rng)
            h = random_signal(cfg.n, 1.0, rng)
            X = np.outer(x, h.conj())
            y0 = bilinear_apply(B, X)
            y = _complex_additive_noise(y0, model, obs_seed)
            nb_cfg = NuclearBallConfig(
                radius=scale * 1.0, max_iters=cfg.max_iters, tol=cfg.tol
            )
            Z, trace = blinddeconv_solve(B, y, nb_cfg)
            iterations = trace.iterations
            fro = float(np.linalg.norm(Z - X))
            metrics = {"frobenius": fro, "relative_frobenius": fro / scale}
        else:  # pragma: no cover
            raise ConfigError(f"unknown estimator {cfg.estimator!r}")
    except NumericFailure as exc:
        failed = True
        iterations = exc.iterations
        metrics = {name: float("nan") for name in cfg.metric_names()}

    lines = [
        _row(cfg, m, ratio, scale, dof, trial, seed, name, metrics[name], iterations)
        for name in sorted(metrics)
    ]
    if failed:
        lines.append(
            _row(cfg, m, ratio, scale, dof, trial, seed, "failure", 1.0, iterations)
        )
    return lines, failed


def _complex_additive_noise(y0, model, seed):
    if model.kind == "noiseless":
        return y0.copy()
    rng = np.random.default_rng(seed)
    if model.kind == "student_t":
        xi = rng.standard_t(model.dof, size=y0.shape) + 1j * rng.standard_t(
            model.dof, size=y0.shape
        )
    elif model.kind == "gaussian":
        xi = rng.standard_normal(y0.shape) + 1j * rng.standard_normal(y0.shape)
    else:  # pragma: no cover - rejected at config validation
        raise ConfigError("bilinear measurements support additive noise only")
    return y0 + model.scale * xi / math.sqrt(2.0)


def _line_sort_key(line):
    f = line.split(",")
    dof = float(f[7]) if f[7] else -1.0
    return (float(f[5]), float(f[6]), dof, int(f[8]), f[10])


def _cell_key_of_line(line):
    f = line.split(",")
    dof = float(f[7]) if f[7] else None
    return (float(f[5]), float(f[6]), dof, int(f[8]))


def _cell_key(ratio, scale, dof, trial):
    return (float(ratio), float(scale), float(dof) if dof is not None else None, int(trial))


def _run_cell_star(args):
    cfg, cell = args
    return cell, run_cell(cfg, *cell)


def run_sweep(cfg, jobs=1, existing_lines=None):
    """Execute all cells of a config; returns (sorted csv lines, failure fraction).

    `existing_lines` (from --resume) supplies raw CSV data lines of already
    completed cells; those cells are skipped and their lines merged back
    verbatim, so a resumed run is byte-identical to a fresh one.
    """
    cells = cfg.cells()
    done = {}
    if existing_lines:
        expected = len(cfg.metric_names())
        grouped = {}
        for line in existing_lines:
            grouped.setdefault(_cell_key_of_line(line), []).append(line)
        for key, lines in grouped.items():
            if len(lines) >= expected:
                done[key] = lines
    todo = [c for c in cells if _cell_key(*c) not in done]

    failures = 0
    results = dict(done)
    if jobs > 1 and len(todo) > 1:
        with concurrent.futures.ProcessPoolExecutor(max_workers=jobs) as pool:
            for cell, (lines, failed) in pool.map(
                _run_cell_star, [(cfg, c) for c in todo], chunksize=8
            ):
                results[_cell_key(*cell)] = lines
                failures += failed
    else:
        for cell in todo:
            lines, failed = run_cell(cfg, *cell)
            results[_cell_key(*cell)] = lines
            failures += failed

    all_lines = [line for lines in results.values() for line in lines]
    all_lines.sort(key=_line_sort_key)
    failure_rate = failures / max(len(todo), 1) if todo else 0.0
    return all_lines, failure_rate


def write_csv(path, lines):
    """Atomic write of header + data lines with newline terminators."""
    directory = os.path.dirname(os.path.abspath(path))
    os.makedirs(directory, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=directory, suffix=".tmp")
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="") as fh:
            fh.write(CSV_HEADER + "\n")
            for line in lines:
                fh.write(line + "\n")
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def read_csv_lines(path):
    """Return the data lines of a harness CSV, validating the header."""
    with open(path, "r", encoding="utf-8") as fh:
        header = fh.readline().rstrip("\n")
        if header != CSV_HEADER:
            raise ConfigError(f"{path}: unexpected CSV header")
        return [line.rstrip("\n") for line in fh if line.strip()]


@dataclass(frozen=True)
class Record:
    ratio: float
    scale: float
    dof: Optional[float]
    trial: int
    metric: str
    value: float
    iterations: Optional[int]


def parse_records(lines):
    out = []
    for line in lines:
        f = line.split(",")
        out.append(
            Record(
                ratio=float(f[5]),
                scale=float(f[6]),
                dof=float(f[7]) if f[7] else None,
                trial=int(f[8]),
                metric=f[10],
                value=float(f[11]),
                iterations=int(f[12]) if f[12] else None,
            )
        )
    return out


def summarize(records):
    """Per-cell aggregates keyed by (metric, ratio, scale, dof).

    NaN values are excluded from mean/std and counted separately.
    Returns a list of dicts in canonical key order.
    """
    if not records:
        raise ConfigError("no records to summarize")
    cells = {}
    for rec in records:
        cells.setdefault((rec.metric, rec.ratio, rec.scale, rec.dof), []).append(
            rec.value
        )
    out = []
    for key in sorted(cells, key=lambda k: (k[0], k[1], k[2], k[3] if k[3] is not None else -1.0)):
        vals = np.array(cells[key], dtype=np.float64)
        good = vals[np.isfinite(vals)]
        metric, ratio, scale, dof = key
        out.append(
            {
                "metric": metric,
                "ratio": ratio,
                "scale": scale,
                "dof": dof,
                "mean": float(np.mean(good)) if len(good) else float("nan"),
                "std": float(np.std(good)) if len(good) else float("nan"),
                "count": int(len(good)),
                "excluded": int(len(vals) - len(good)),
            }
        )
    return out


def format_summary(rows):
    """Aligned text table for the report command (full precision means)."""
    headers = ["metric", "ratio", "scale", "dof", "mean", "std", "count", "excluded"]
    table = [headers]
    for row in rows:
        table.append(
            [
                row["metric"],
                format_number(row["ratio"]),
                format_number(row["scale"]),
                format_number(row["dof"]) if row["dof"] is not None else "-",
                format_number(row["mean"]),
                format_number(row["std"]),
                str(row["count"]),
                str(row["excluded"]),
            ]
        )
    widths = [max(len(r[i]) for r in table) for i in range(len(headers))]
    return "\n".join(
        "  ".join(cell.ljust(widths[i]) for i, cell in enumerate(row)).rstrip()
        for row in table
    )
