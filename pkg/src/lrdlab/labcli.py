"""Experiment orchestration: config, classification, scaling, Monte Carlo and verdicts."""

from __future__ import annotations

import argparse
import csv
import hashlib
import io
import json
import math
import sys
import time
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .errors import (
    ClassificationError,
    ConfigurationError,
    ConvergenceError,
    EstimationError,
    FormatError,
    InputDomainError,
    LabError,
    ModelError,
    NumericError,
)
from .innovations import InnovationModel
from .linproc import (
    FunctionalK,
    PathBatch,
    ProcessSpec,
    expect_K,
    iter_path_chunks,
    partial_sum_process,
    simulate_paths,
    surrogate_sums,
)
from .regvar import SlowVary
from .scaling import (
    LimitSpec,
    classify,
    limit_constants,
    memory_exponents,
    region_one_bracket,
    scaling_factor,
)
from .stable import StableLaw, gaussian_law, ks_distance, sampler_parameters, stable_cdf

__all__ = [
    "SCHEMA_VERSION",
    "TABLE_COLUMNS",
    "ExperimentConfig",
    "ExperimentReport",
    "run_experiment",
    "convergence_report",
    "main",
]

SCHEMA_VERSION = 1
TABLE_COLUMNS = ("config_id", "N", "A_N", "ks_t1", "ks_t05", "corr_incr", "var_ratio", "surrogate_gap")
MIN_HORIZON = 2**12

EXIT_PASS, EXIT_FAIL, EXIT_CONFIG, EXIT_NUMERIC = 0, 1, 2, 3

_TOP_REQUIRED = {"schema_version", "config_id", "process", "functional", "N_grid", "replicates", "seed"}
_TOP_OPTIONAL = {"t_grid", "J", "truncation_tol", "surrogate_replicates", "surrogate_lag", "theta", "checks",
                 "output_dir", "notes"}
_PROCESS_REQUIRED = {"alpha", "beta", "sigma1", "sigma2"}
_PROCESS_OPTIONAL = {"x0", "centering", "ell", "h"}
_THETA_KEYS = {"N", "replicates"}
_CHECK_KEYS = {"ks_final_max", "ks_decreasing", "var_ratio_band", "increment_independence", "marginal_ks_max",
               "bracket", "surrogate_decreasing"}


def _reject_unknown(d: dict, allowed: set, where: str) -> None:
    extra = set(d) - allowed
    if extra:
        raise ConfigurationError(f"unknown keys in {where}: {sorted(extra)}")


def _default_centering(alpha: float) -> str:
    if alpha == 1:
        return "Symmetric"
    return "MeanZero" if alpha > 1 else "None"


@dataclass(frozen=True)
class ExperimentConfig:
    """Reproducible description of one Monte Carlo experiment.

    ``J`` is either ``"auto"`` (``max(N, 4096)`` per grid point) or a fixed
    horizon.  ``truncation_tol`` bounds the neglected stable scale of the
    coefficients beyond ``J``; ``None`` records the bound without enforcing
    it.  ``checks`` overrides the region's default verdict thresholds.
    """

    config_id: str
    process: dict
    functional: dict
    N_grid: tuple
    replicates: int
    seed: int
    t_grid: tuple = (0.5, 1.0)
    J: object = "auto"
    truncation_tol: float | None = 1e-3
    surrogate_replicates: int = 100
    surrogate_lag: int | None = None
    theta: dict = field(default_factory=lambda: {"N": 2**14, "replicates": 1000})
    checks: dict = field(default_factory=dict)
    output_dir: str | None = None
    notes: str = ""

    @classmethod
    def from_dict(cls, d: dict) -> "ExperimentConfig":
        if not isinstance(d, dict):
            raise ConfigurationError("config must be a JSON object")
        missing = _TOP_REQUIRED - set(d)
        if missing:
            raise ConfigurationError(f"missing config keys: {sorted(missing)}")
        _reject_unknown(d, _TOP_REQUIRED | _TOP_OPTIONAL, "config")
        if d["schema_version"] != SCHEMA_VERSION:
            raise ConfigurationError(f"unsupported schema_version {d['schema_version']!r}")
        proc = dict(d["process"])
        if _PROCESS_REQUIRED - set(proc):
            raise ConfigurationError(f"missing process keys: {sorted(_PROCESS_REQUIRED - set(proc))}")
        _reject_unknown(proc, _PROCESS_REQUIRED | _PROCESS_OPTIONAL, "process")
        theta = dict(d.get("theta", {"N": 2**14, "replicates": 1000}))
        _reject_unknown(theta, _THETA_KEYS, "theta")
        checks = dict(d.get("checks", {}))
        _reject_unknown(checks, _CHECK_KEYS, "checks")
        cfg = cls(
            config_id=str(d["config_id"]),
            process=proc,
            functional=dict(d["functional"]),
            N_grid=tuple(int(n) for n in d["N_grid"]),
            replicates=int(d["replicates"]),
            seed=int(d["seed"]),
            t_grid=tuple(float(t) for t in d.get("t_grid", (0.5, 1.0))),
            J=d.get("J", "auto"),
            truncation_tol=d.get("truncation_tol", 1e-3),
            surrogate_replicates=int(d.get("surrogate_replicates", 100)),
            surrogate_lag=d.get("surrogate_lag"),
            theta={"N": int(theta.get("N", 2**14)), "replicates": int(theta.get("replicates", 1000))},
            checks=checks,
            output_dir=d.get("output_dir"),
            notes=str(d.get("notes", "")),
        )
        cfg.validate()
        return cfg

    @classmethod
    def load(cls, path) -> "ExperimentConfig":
        try:
            with open(path) as fh:
                doc = json.load(fh)
        except (OSError, json.JSONDecodeError) as exc:
            raise ConfigurationError(f"cannot read config {path}: {exc}") from exc
        return cls.from_dict(doc)

    def validate(self) -> None:
        g = self.N_grid
        if not g or any(n < 1 for n in g) or any(b <= a for a, b in zip(g, g[1:])):
            raise ConfigurationError("N_grid must be a strictly increasing list of positive counts")
        if self.replicates < 100:
            raise ConfigurationError("KS verdicts need at least 100 replicates")
        if not 0 <= self.seed < 2**64:
            raise ConfigurationError("seed must be an unsigned 64-bit integer")
        if len(self.t_grid) != 2 or not 0 < self.t_grid[0] < self.t_grid[1] <= 1:
            raise ConfigurationError("t_grid must be two increasing points in (0, 1]")
        if self.J != "auto" and not (isinstance(self.J, int) and self.J >= 1):
            raise ConfigurationError("J must be 'auto' or a positive integer")
        if not 0 <= self.surrogate_replicates <= self.replicates:
            raise ConfigurationError("surrogate_replicates must lie in [0, replicates]")
        try:
            self.base_spec()
            self.kernel()
        except (InputDomainError, ModelError) as exc:
            raise ConfigurationError(str(exc)) from exc

    def to_dict(self) -> dict:
        return {
            "schema_version": SCHEMA_VERSION,
            "config_id": self.config_id,
            "process": self.process,
            "functional": self.functional,
            "N_grid": list(self.N_grid),
            "replicates": self.replicates,
            "seed": self.seed,
            "t_grid": list(self.t_grid),
            "J": self.J,
            "truncation_tol": self.truncation_tol,
            "surrogate_replicates": self.surrogate_replicates,
            "surrogate_lag": self.surrogate_lag,
            "theta": self.theta,
            "checks": self.checks,
        }

    def with_seed(self, seed: int) -> "ExperimentConfig":
        d = self.to_dict()
        d["seed"] = int(seed)
        return ExperimentConfig.from_dict(d)

    def innovations(self) -> InnovationModel:
        p = self.process
        alpha = float(p["alpha"])
        h = SlowVary.from_dict(p["h"]) if "h" in p else SlowVary.constant()
        return InnovationModel(alpha, float(p["sigma1"]), float(p["sigma2"]), h=h, x0=float(p.get("x0", 1.0)),
                               centering=p.get("centering", _default_centering(alpha)))

    def base_spec(self) -> ProcessSpec:
        p = self.process
        ell = SlowVary.from_dict(p["ell"]) if "ell" in p else SlowVary.constant()
        return ProcessSpec(float(p["beta"]), ell, self.innovations(), J=None)

    def horizon(self, N: int) -> int:
        return max(N, MIN_HORIZON) if self.J == "auto" else int(self.J)

    def kernel(self) -> FunctionalK:
        return FunctionalK.from_dict(self.functional)


# -- targets -------------------------------------------------------------------------------

def _target_law(limit: LimitSpec, t: float) -> StableLaw:
    lim = limit.limit
    if lim["kind"] == "Stable":
        m = lim["multiplier"]
        return StableLaw(lim["alpha"], lim["sigma"] * abs(m) ** lim["alpha"], lim["D"] * math.copysign(1.0, m), t)
    gamma = lim["gamma"]
    if not gamma > 0:
        raise NumericError("the Brownian limit has zero variance")
    return gaussian_law(gamma**2 * t)


def _target_description(limit: LimitSpec) -> dict:
    law = _target_law(limit, 1.0)
    if limit.limit["kind"] == "Stable":
        return {"law": "K'(0) Z_t", "alpha": law.alpha, "sigma": law.sigma, "D": law.D,
                "sampler": sampler_parameters(law)}
    return {"law": "gamma W_t", "variance_at_t1": 2 * law.sigma}


# -- the experiment ------------------------------------------------------------------------

@dataclass
class ExperimentReport:
    """Deterministic outcome of :func:`run_experiment`; wall-clock time is kept apart."""

    config: dict
    region: dict
    memory: dict
    limit: dict
    target: dict
    rows: list
    diagnostics: list
    verdicts: list
    overall: str
    timing: dict = field(default_factory=dict, compare=False)

    def to_dict(self) -> dict:
        body = {
            "schema_version": SCHEMA_VERSION,
            "config": self.config,
            "region": self.region,
            "memory": self.memory,
            "limit": self.limit,
            "target": self.target,
            "table": self.rows,
            "diagnostics": self.diagnostics,
            "verdicts": self.verdicts,
            "overall": self.overall,
        }
        body["report_hash"] = hashlib.sha256(json.dumps(body, sort_keys=True).encode()).hexdigest()
        return body

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True, indent=2) + "\n"


def _verdict(name: str, invariant: str, ok: bool, detail: str) -> dict:
    return {"name": name, "invariant": invariant, "status": "PASS" if ok else "FAIL", "detail": detail}


def _default_checks(tag: str) -> dict:
    checks = {"ks_decreasing": True, "ks_final_max": 0.08, "increment_independence": True,
              "marginal_ks_max": 0.08, "var_ratio_band": None, "bracket": False, "surrogate_decreasing": False}
    if tag == "RegionI":
        checks.update(bracket=True, surrogate_decreasing=True)
    if tag == "CurveShort":
        checks.update(var_ratio_band=[0.75, 1.25])
    if tag in ("PointLong", "PointLongDeriv0"):
        checks.update(var_ratio_band=[0.7, 1.3], ks_final_max=None)
    return checks


def _surrogate_gap(cfg: ExperimentConfig, spec: ProcessSpec, K: FunctionalK, N: int, A: float, tag: str,
                   workers: int) -> float | None:
    R = cfg.surrogate_replicates
    if R == 0:
        return None
    lag = None
    if tag == "CurveShort":
        lag = int(cfg.surrogate_lag or max(1, spec.J // 16))
    gaps = []
    for batch in iter_path_chunks(spec, N, R, cfg.seed, workers=workers, keep_innovations=True,
                                  chunk=max(1, min(R, int(2e7 // (N + spec.J))))):
        s = surrogate_sums(batch, K, l=lag)
        other = s.S_Nl if lag is not None else s.T_N
        gaps.append((s.S_N - other) ** 2)
    return float(np.mean(np.concatenate(gaps))) / A**2


def run_experiment(cfg: ExperimentConfig, workers: int = 1, cache_dir=None) -> ExperimentReport:
    """Simulate every grid point, rescale, and test against the fully specified limit law.

    Parameters
    ----------
    cfg : ExperimentConfig
        Experiment description; the seed fixes every reported number.
    workers : int
        FFT worker threads; results do not depend on it.
    cache_dir : path, optional
        Directory of path caches written by the ``simulate`` subcommand;
        matching caches replace simulation.
    """
    t0 = time.perf_counter()
    K = cfg.kernel()
    base = cfg.base_spec()
    region = classify(base, K)
    memory = {}
    P_Q = None
    try:
        P_Q = memory_exponents(base)
    except (InputDomainError, ModelError):
        pass
    if P_Q is not None:
        memory = {"summand_log_power": P_Q[0], "summand_loglog_power": P_Q[1]}
    if region.tag == "OutOfScope":
        return ExperimentReport(cfg.to_dict(), {"tag": region.tag, "reason": region.reason}, memory, {}, {}, [],
                                [], [], "OUT_OF_SCOPE", {"total_seconds": time.perf_counter() - t0})
    largest = cfg.N_grid[-1]
    lim = limit_constants(region, base.with_horizon(cfg.horizon(largest)), K,
                          theta_replicates=cfg.theta["replicates"], theta_N=cfg.theta["N"], seed=cfg.seed)
    checks = _default_checks(region.tag)
    checks.update(cfg.checks)
    t_lo, t_hi = cfg.t_grid
    laws = {t: _target_law(lim, t) for t in (t_lo, t_hi, t_hi - t_lo)}
    cdfs = {t: (lambda v, law=law: stable_cdf(law, v)) for t, law in laws.items()}
    brownian = lim.limit["kind"] == "BrownianMotion"
    rows, diags, timing = [], [], {}
    for N in cfg.N_grid:
        tn = time.perf_counter()
        spec = base.with_horizon(cfg.horizon(N))
        meta = spec.truncation_metadata()
        if cfg.truncation_tol is not None and meta["alpha_scale"] > cfg.truncation_tol:
            raise ConfigurationError(f"N={N}: neglected coefficient scale {meta['alpha_scale']:.3g} exceeds "
                                     f"truncation_tol {cfg.truncation_tol}")
        A = scaling_factor(lim, spec, N)
        center = expect_K(spec, K)
        S = _partial_sums(cfg, spec, K, N, center, workers, cache_dir)
        lo, hi = S[:, 0] / A, S[:, 1] / A
        inc = hi - lo
        ks_t1 = ks_distance(hi, cdfs[t_hi])
        ks_t05 = ks_distance(lo, cdfs[t_lo])
        ks_inc = ks_distance(inc, cdfs[t_hi - t_lo])
        corr = float(np.corrcoef(lo, inc)[0, 1])
        var_ratio = float(np.var(hi, ddof=1) / (2 * laws[t_hi].sigma * t_hi)) if brownian else None
        gap = _surrogate_gap(cfg, spec, K, N, A, region.tag, workers)
        rows.append({"config_id": cfg.config_id, "N": N, "A_N": A, "ks_t1": ks_t1, "ks_t05": ks_t05,
                     "corr_incr": corr, "var_ratio": var_ratio, "surrogate_gap": gap})
        d = {"N": N, "J": spec.J, "center": center, "ks_increment": ks_inc,
             "neglected_scale": meta["alpha_scale"]}
        if region.tag == "RegionI":
            b_lo, b_hi = region_one_bracket(spec, N, A)
            d["bracket"] = [b_lo, b_hi]
        diags.append(d)
        timing[str(N)] = time.perf_counter() - tn
    verdicts = _verdicts(cfg, checks, rows, diags, A_tag=region.tag)
    overall = "PASS" if all(v["status"] == "PASS" for v in verdicts) else "FAIL"
    timing["total_seconds"] = time.perf_counter() - t0
    return ExperimentReport(cfg.to_dict(), {"tag": region.tag, "reason": region.reason}, memory, lim.to_dict(),
                            _target_description(lim), rows, diags, verdicts, overall, timing)


def _partial_sums(cfg, spec, K, N, center, workers, cache_dir) -> np.ndarray:
    t = np.array(cfg.t_grid)
    cached = _cache_path(cache_dir, spec, N, cfg) if cache_dir else None
    if cached is not None and cached.exists():
        batch = PathBatch.load(cached, spec)
        if batch.replicates >= cfg.replicates and batch.seed == cfg.seed:
            return partial_sum_process(batch, K, center, t)[: cfg.replicates]
    out = []
    for batch in iter_path_chunks(spec, N, cfg.replicates, cfg.seed, workers=workers):
        out.append(partial_sum_process(batch, K, center, t))
    return np.concatenate(out)


def _cache_path(cache_dir, spec: ProcessSpec, N: int, cfg: ExperimentConfig) -> Path:
    return Path(cache_dir) / f"{cfg.config_id}_{spec.spec_hash()}_N{N}_s{cfg.seed}.bin"


def _verdicts(cfg: ExperimentConfig, checks: dict, rows: list, diags: list, A_tag: str) -> list:
    out = []
    ks = [r["ks_t1"] for r in rows]
    last = rows[-1]
    M = cfg.replicates
    if checks.get("ks_decreasing"):
        ok = all(b < a for a, b in zip(ks, ks[1:]))
        out.append(_verdict("ks_decreasing", "KS to the limit law strictly decreasing in N", ok,
                            "KS(t=1) = " + ", ".join(f"{k:.4f}" for k in ks)))
    if checks.get("ks_final_max") is not None:
        thr = float(checks["ks_final_max"])
        out.append(_verdict("ks_final", f"KS at the largest N <= {thr}", ks[-1] <= thr, f"KS = {ks[-1]:.4f}"))
    if checks.get("var_ratio_band") is not None:
        lo, hi = checks["var_ratio_band"]
        v = last["var_ratio"]
        ok = v is not None and lo <= v <= hi
        out.append(_verdict("var_ratio", f"variance ratio at the largest N in [{lo}, {hi}]", ok,
                            f"ratio = {v:.4f}" if v is not None else "no finite variance"))
    if checks.get("increment_independence"):
        bound = 3 / math.sqrt(M)
        c = last["corr_incr"]
        out.append(_verdict("increment_independence", "|corr| of the rescaled increment pair <= 3/sqrt(M)",
                            abs(c) <= bound, f"corr = {c:.4f}, bound = {bound:.4f}"))
    if checks.get("marginal_ks_max") is not None:
        thr = float(checks["marginal_ks_max"])
        pair = (last["ks_t05"], diags[-1]["ks_increment"])
        out.append(_verdict("marginal_ks", f"KS of both increment marginals at the largest N <= {thr}",
                            max(pair) <= thr, f"KS(first) = {pair[0]:.4f}, KS(second) = {pair[1]:.4f}"))
    if checks.get("bracket") and A_tag == "RegionI":
        ok = all(d["bracket"][0] <= r["A_N"] < d["bracket"][1] for r, d in zip(rows, diags))
        out.append(_verdict("bracket", "lower bracket <= A_N < upper bracket at every N", ok,
                            "; ".join(f"N={r['N']}: {d['bracket'][0]:.6g} <= {r['A_N']:.6g} < {d['bracket'][1]:.6g}"
                                      for r, d in zip(rows, diags))))
    if checks.get("surrogate_decreasing"):
        g = [r["surrogate_gap"] for r in rows]
        ok = None not in g and all(b < a for a, b in zip(g, g[1:]))
        out.append(_verdict("surrogate_decreasing", "E|S_N - T_N|^2 / A_N^2 strictly decreasing in N", ok,
                            "gaps = " + ", ".join("n/a" if x is None else f"{x:.3g}" for x in g)))
    return out


# -- merging ---------------------------------------------------------------------------------

def convergence_report(reports, out_dir=None) -> dict:
    """Merge reports into one CSV table and an overall verdict.

    ``reports`` holds :class:`ExperimentReport` objects or their dictionaries.

    Raises
    ------
    FormatError
        On a schema-version mismatch.
    """
    docs = [r.to_dict() if isinstance(r, ExperimentReport) else r for r in reports]
    if not docs:
        raise InputDomainError("need at least one report")
    rows, failing = [], []
    for doc in docs:
        if doc.get("schema_version") != SCHEMA_VERSION:
            raise FormatError(f"report schema_version {doc.get('schema_version')!r} != {SCHEMA_VERSION}")
        rows.extend(doc["table"])
        cid = doc["config"]["config_id"]
        failing.extend(f"{cid}: {v['name']} ({v['invariant']})" for v in doc["verdicts"] if v["status"] != "PASS")
    buf = io.StringIO()
    w = csv.DictWriter(buf, fieldnames=TABLE_COLUMNS, lineterminator="\n")
    w.writeheader()
    for r in rows:
        w.writerow({k: ("" if r[k] is None else r[k]) for k in TABLE_COLUMNS})
    summary = {"schema_version": SCHEMA_VERSION, "overall": "FAIL" if failing else "PASS", "failing": failing,
               "configs": [d["config"]["config_id"] for d in docs]}
    if out_dir is not None:
        out = Path(out_dir)
        out.mkdir(parents=True, exist_ok=True)
        (out / "table.csv").write_text(buf.getvalue())
        (out / "summary.json").write_text(json.dumps(summary, sort_keys=True, indent=2) + "\n")
    summary["csv"] = buf.getvalue()
    return summary


def write_report(report: ExperimentReport, out_dir) -> Path:
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    (out / "report.json").write_text(report.to_json())
    (out / "timing.json").write_text(json.dumps(report.timing, sort_keys=True, indent=2) + "\n")
    convergence_report([report], out)
    return out / "report.json"


# -- command line ----------------------------------------------------------------------------

def _load(args) -> ExperimentConfig:
    cfg = ExperimentConfig.load(args.config)
    if getattr(args, "seed", None) is not None:
        cfg = cfg.with_seed(args.seed)
    return cfg


def _cmd_classify(args) -> int:
    cfg = _load(args)
    spec, K = cfg.base_spec(), cfg.kernel()
    region = classify(spec, K)
    print(f"region: {region.tag}")
    if region.reason:
        print(f"reason: {region.reason}")
    if region.tag == "RegionI":
        print("memory: long (the coefficient partial sums L(N) diverge)")
    elif region.tag in ("CurveLong", "PointLong", "PointLongDeriv0"):
        print("memory: long (the series of a_j^(alpha/2) H^(1/2)(1/a_j) diverges)")
    elif region.tag == "CurveShort":
        print("memory: short (the series of a_j^(alpha/2) H^(1/2)(1/a_j) converges)")
    return EXIT_PASS


def _cmd_scale(args) -> int:
    cfg = _load(args)
    spec, K = cfg.base_spec(), cfg.kernel()
    region = classify(spec, K)
    grid = args.N or cfg.N_grid
    print("N,A_N")
    for N in grid:
        print(f"{N},{scaling_factor(region, spec, N):.10g}")
    return EXIT_PASS


def _cmd_constants(args) -> int:
    cfg = _load(args)
    base, K = cfg.base_spec(), cfg.kernel()
    region = classify(base, K)
    lim = limit_constants(region, base.with_horizon(cfg.horizon(cfg.N_grid[-1])), K,
                          theta_replicates=cfg.theta["replicates"], theta_N=cfg.theta["N"], seed=cfg.seed)
    print(lim.to_json())
    return EXIT_PASS


def _cmd_simulate(args) -> int:
    cfg = _load(args)
    if not args.cache:
        raise ConfigurationError("simulate needs --cache <dir>")
    Path(args.cache).mkdir(parents=True, exist_ok=True)
    base = cfg.base_spec()
    for N in cfg.N_grid:
        spec = base.with_horizon(cfg.horizon(N))
        batch = simulate_paths(spec, N, cfg.replicates, cfg.seed, workers=args.threads,
                               truncation_tol=cfg.truncation_tol)
        path = _cache_path(args.cache, spec, N, cfg)
        batch.save(path)
        print(path)
    return EXIT_PASS


def _cmd_verify(args) -> int:
    cfg = _load(args)
    out = args.out or cfg.output_dir or "."
    report = run_experiment(cfg, workers=args.threads, cache_dir=args.cache)
    write_report(report, out)
    for v in report.verdicts:
        print(f"{v['status']} {v['name']}: {v['detail']}")
    print(f"overall: {report.overall}")
    return EXIT_FAIL if report.overall == "FAIL" else EXIT_PASS


def _cmd_report(args) -> int:
    docs = []
    for p in args.reports:
        try:
            docs.append(json.loads(Path(p).read_text()))
        except (OSError, json.JSONDecodeError) as exc:
            raise FormatError(f"cannot read report {p}: {exc}") from exc
    summary = convergence_report(docs, args.out)
    for f in summary["failing"]:
        print(f"FAIL {f}")
    print(f"overall: {summary['overall']}")
    return EXIT_FAIL if summary["overall"] == "FAIL" else EXIT_PASS


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="lrdlab", description="Limit theorems for functionals of "
                                     "heavy-tailed linear processes: classification, scaling and Monte Carlo checks.")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p, config=True):
        if config:
            p.add_argument("--config", required=True, help="experiment config (JSON)")
        p.add_argument("--seed", type=int, help="override the config seed")
        p.add_argument("--out", help="output directory")
        p.add_argument("--threads", type=int, default=1, help="FFT worker threads")
        p.add_argument("--cache", help="path cache directory")

    common(sub.add_parser("classify", help="print the region and memory verdict"))
    p = sub.add_parser("scale", help="print the A_N table")
    common(p)
    p.add_argument("--N", type=float, nargs="*", help="grid overriding the config")
    common(sub.add_parser("constants", help="print the limit specification as JSON"))
    common(sub.add_parser("simulate", help="write path caches for every grid point"))
    common(sub.add_parser("verify", help="run the full experiment"))
    p = sub.add_parser("report", help="merge report.json files")
    common(p, config=False)
    p.add_argument("reports", nargs="+", help="report.json files")
    return parser


_COMMANDS = {"classify": _cmd_classify, "scale": _cmd_scale, "constants": _cmd_constants,
             "simulate": _cmd_simulate, "verify": _cmd_verify, "report": _cmd_report}


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return _COMMANDS[args.command](args)
    except (ConfigurationError, FormatError, InputDomainError, ModelError, ClassificationError) as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (NumericError, ConvergenceError, EstimationError) as exc:
        print(f"numeric error: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except LabError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
