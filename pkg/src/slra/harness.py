"""Seeded instance generators, rate estimation and experiment presets.

Random streams
--------------
Every instance draws from its own NumPy ``Generator`` backed by PCG64 and
seeded with ``SeedSequence(master_seed, spawn_key=key)``, where ``key`` is
the tuple (row index, instance index) inside the preset. Instances are
therefore independent of worker count and execution order.

Presets
-------
``table1``           step-size cascade, GCD ``m = n = 25, d = 10, eps = 1e-3``
``table2``           iterations and output distance, GCD ``m = n = 10, d = 5``
``hankel_table4``    Newton vs Cadzow on the 7x5 rank-4 Hankel benchmark
``hankel_table5``    the same with an outlier on the 8th antidiagonal
``completion_phase`` success rate of completion at points of the phase plane

Iteration counts and distances reported for this method and for other
software (GPGCD, STLN) are carried in the summaries as ``ref_*`` columns
for comparison; none of that software is reimplemented.
"""

import csv
import io
import json
import logging
import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from datetime import datetime, timezone
from pathlib import Path
from typing import Optional

import numpy as np

from .linalg import EPS
from .solver import Method, SlraProblem, StoppingCriteria, Termination, solve
from .structures import (
    CoordinateMask,
    HankelSpec,
    HankelStructure,
    PolyPair,
    SylvesterStructure,
    completion_structure,
)

__all__ = [
    "GcdInstance",
    "CompletionInstance",
    "HankelInstance",
    "RateEstimate",
    "Report",
    "PRESETS",
    "make_rng",
    "gen_gcd",
    "gen_completion",
    "gen_hankel",
    "rate_estimate",
    "run_experiment",
    "worker_count",
]

log = logging.getLogger(__name__)

HANKEL_BETA = np.array([1.0, 2.0, 0.5, 1.5])
HANKEL_Z = np.exp(-np.array([0.1, 0.2, 0.3, 0.35]))
HANKEL_SHAPE = (7, 5)
HANKEL_RANK = 4
OUTLIER_ANTIDIAGONAL = 8  # 1-based
OUTLIER_SIZE = 0.01


def make_rng(seed, *key):
    """PCG64 generator for stream `key` under master `seed`."""
    ss = np.random.SeedSequence(int(seed), spawn_key=tuple(int(k) for k in key))
    return np.random.Generator(np.random.PCG64(ss))


def _as_rng(seed):
    if isinstance(seed, np.random.Generator):
        return seed
    return make_rng(seed)


def worker_count():
    env = os.environ.get("SLRA_THREADS")
    if env:
        return max(1, int(env))
    return os.cpu_count() or 1


# -- generators -----------------------------------------------------------


@dataclass
class GcdInstance:
    exact: PolyPair
    noisy: PolyPair
    epsilon: float
    d: int
    seed: object = None


def gen_gcd(m, n, d, epsilon, seed=0, max_retries=10):
    """Random approximate-GCD instance.

    Three factors with coefficients uniform in ``[-10, 10]`` and degrees
    ``m - d``, ``n - d``, ``d`` give ``(f~ h~, g~ h~)``, scaled to unit norm;
    the noisy pair adds independent ``N(0, epsilon)`` noise to every
    coefficient.
    """
    if not 1 <= d <= min(m, n):
        raise ValueError(f"need 1 <= d <= min(m, n), got d = {d}")
    if epsilon < 0:
        raise ValueError("epsilon must be non-negative")
    rng = _as_rng(seed)
    for _ in range(max_retries):
        ft = rng.uniform(-10, 10, m - d + 1)
        gt = rng.uniform(-10, 10, n - d + 1)
        ht = rng.uniform(-10, 10, d + 1)
        f = np.convolve(ft, ht)
        g = np.convolve(gt, ht)
        scale = math.sqrt(f @ f + g @ g)
        if scale > 0 and f[-1] != 0 and g[-1] != 0:
            break
    else:
        raise RuntimeError("could not draw non-degenerate factors")
    exact = PolyPair(f / scale, g / scale)
    if epsilon == 0:
        noisy = PolyPair(exact.f.copy(), exact.g.copy())
    else:
        noisy = PolyPair(
            exact.f + rng.normal(0.0, epsilon, m + 1),
            exact.g + rng.normal(0.0, epsilon, n + 1),
        )
    return GcdInstance(exact, noisy, float(epsilon), int(d), seed)


@dataclass
class CompletionInstance:
    truth: np.ndarray
    mask: CoordinateMask
    rank: int
    seed: object = None

    @property
    def sample_fraction(self):
        p, q = self.truth.shape
        return len(self.mask.observed) / (p * q)

    @property
    def dof_ratio(self):
        """``r (2p - r) / m``, degrees of freedom per observed entry."""
        p = self.truth.shape[0]
        return self.rank * (2 * p - self.rank) / len(self.mask.observed)

    @property
    def coordinates(self):
        return self.sample_fraction, self.dof_ratio


def gen_completion(p, r, m_samples, seed=0):
    """Random rank-``r`` ``p x p`` matrix ``L R`` and ``m_samples`` revealed entries."""
    if not 1 <= r < p:
        raise ValueError("need 1 <= r < p")
    if not r * (2 * p - r) <= m_samples <= p * p:
        raise ValueError(
            f"m_samples must lie in [r(2p-r), p^2] = [{r * (2 * p - r)}, {p * p}], got {m_samples}"
        )
    rng = _as_rng(seed)
    L = rng.normal(size=(p, r))
    R = rng.normal(size=(r, p))
    truth = L @ R
    flat = np.sort(rng.choice(p * p, size=m_samples, replace=False))
    observed = [(int(k // p), int(k % p)) for k in flat]
    return CompletionInstance(truth, CoordinateMask.from_matrix(truth, observed), int(r), seed)


@dataclass
class HankelInstance:
    clean: HankelSpec
    noisy: HankelSpec
    tau: float
    outlier: bool
    seed: object = None


def hankel_clean_values():
    """``nu_i = sum_l beta_l z_l^i`` for ``i = 1..11``."""
    i = np.arange(1, HANKEL_SHAPE[0] + HANKEL_SHAPE[1])
    return (HANKEL_BETA[None, :] * HANKEL_Z[None, :] ** i[:, None]).sum(axis=1)


def gen_hankel(tau, outlier=False, seed=0):
    """7x5 rank-4 Hankel benchmark plus ``tau`` times a uniform ``[0, 1]`` Hankel perturbation."""
    if tau < 0:
        raise ValueError("tau must be non-negative")
    rng = _as_rng(seed)
    clean = hankel_clean_values()
    delta = rng.uniform(0.0, 1.0, clean.size)
    noisy = clean + tau * delta if tau > 0 else clean.copy()
    if outlier:
        noisy[OUTLIER_ANTIDIAGONAL - 1] += OUTLIER_SIZE
    return HankelInstance(HankelSpec(HANKEL_SHAPE, clean), HankelSpec(HANKEL_SHAPE, noisy), float(tau), bool(outlier), seed)


# -- convergence rate -------------------------------------------------------


@dataclass
class RateEstimate:
    classification: str
    exponent: float
    local_exponents: list = field(default_factory=list)
    usable_steps: int = 0


def rate_estimate(trace, scale=None):
    """Empirical order of convergence from successive step norms.

    Step norms are divided by `scale` (default: the trace's ``||M0||``, or 1
    for a bare sequence). The leading run of steps in ``(floor, 1)`` with
    ``floor = 10 * eps`` is used; for each consecutive triple the local
    order ``log(s[i+2]/s[i+1]) / log(s[i+1]/s[i])`` is computed, which is
    the exponent ``e`` of ``s[i+1] = c s[i]^e`` with ``c`` eliminated. The
    median order classifies the run: ``>= 1.5`` quadratic, ``[0.8, 1.2]``
    linear, anything else (or fewer than three usable steps) inconclusive.
    """
    if hasattr(trace, "step_norms"):
        steps = np.asarray(trace.step_norms, dtype=float)
        if scale is None:
            scale = trace.initial_norm or 1.0
    else:
        steps = np.asarray(trace, dtype=float)
    if scale is None:
        scale = 1.0
    s = steps / scale
    floor = 10 * EPS
    usable = []
    for v in s:
        if not (floor < v < 1.0):
            break
        usable.append(v)
    if len(usable) < 3:
        return RateEstimate("inconclusive", float("nan"), [], len(usable))
    logs = np.log(usable)
    diffs = np.diff(logs)
    local = [float(diffs[i + 1] / diffs[i]) for i in range(len(diffs) - 1) if diffs[i] != 0]
    if not local:
        return RateEstimate("inconclusive", float("nan"), [], len(usable))
    e = float(np.median(local))
    if e >= 1.5:
        cls = "quadratic"
    elif 0.8 <= e <= 1.2:
        cls = "linear"
    else:
        cls = "inconclusive"
    return RateEstimate(cls, e, local, len(usable))


# -- experiment plumbing ------------------------------------------------------


REFERENCE_CASCADE = {
    "newton": [0.42e-3, 0.19e-5, 0.11e-9, 0.43e-18, 0.10e-34],
    "gpgcd": [0.20e-2, 0.30e-3, 0.15e-4, 0.68e-6, 0.17e-8],
}

# eps -> (NewtonSLRA iters, GPGCD iters, ||(f'-f, g'-g)||, ||(f'-f*, g'-g*)||)
REFERENCE_GCD = {
    1e-10: (4.0, 6.0, 1.86e-10, 3.12e-19),
    1e-9: (4.0, 6.6, 1.93e-9, 2.98e-17),
    1e-8: (4.0, 7.2, 2.01e-8, 3.16e-15),
    1e-7: (4.9, 8.7, 2.06e-7, 3.25e-13),
    1e-6: (5.0, 10.0, 1.62e-6, 5.45e-11),
    1e-5: (5.1, 11.9, 1.53e-5, 1.15e-9),
    1e-4: (5.6, 15.4, 1.82e-4, 1.99e-7),
    1e-3: (6.3, 24.4, 1.76e-3, 1.96e-5),
    1e-2: (7.1, 37.1, 1.87e-2, 3.26e-3),
    1e-1: (8.7, 49.2, 1.43e-1, 6.94e-2),
    1e0: (11.0, 50.0, 2.42e-1, 1.71e-1),
}

# tau -> (STLN1, STLN2, Cadzow, NewtonSLRA); None marks "did not converge in 100"
REFERENCE_HANKEL = {
    1e-8: (1.1, 1.7, 59.8, 2.4),
    1e-7: (1.6, 2.3, 75.3, 3.4),
    1e-6: (2.2, 2.2, 83.0, 3.9),
    1e-5: (2.1, 3.2, 92.4, 3.8),
    1e-4: (2.1, 3.9, 93.3, 4.0),
    1e-3: (4.0, 6.8, None, 4.1),
    1e-2: (4.5, 20.5, None, 4.2),
    1e-1: (6.9, 22.6, None, 4.2),
}

REFERENCE_HANKEL_OUTLIER = {
    1e-8: (8, None, 95, 4),
    1e-7: (8, None, None, 4),
    1e-6: (8, None, 90, 4),
    1e-5: (8, None, 95, 4),
    1e-4: (8, None, 99, 4),
    1e-3: (6, None, None, 4),
    1e-2: (20, None, None, 4.1),
    1e-1: (10, None, None, 4.4),
}


@dataclass(frozen=True)
class Preset:
    name: str
    instances: int
    params: dict
    row_columns: tuple
    summary_columns: tuple


PRESETS = {
    "table1": Preset(
        "table1",
        20,
        {"m": 25, "n": 25, "d": 10, "epsilon": 1e-3, "step_tol_rel": 1e-14, "max_iters": 50,
         "method": "newton_v1"},
        ("instance", "iterations", "termination", "initial_norm", "s1", "s2", "s3", "s4", "s5",
         "exponent", "classification", "squaring_ratio"),
        ("instances", "quadratic", "median_exponent", "median_squaring_ratio", "max_squaring_ratio"),
    ),
    "table2": Preset(
        "table2",
        20,
        {"m": 10, "n": 10, "d": 5, "epsilons": [10.0 ** k for k in range(-10, 1)],
         "step_tol_rel": 1e-14, "max_iters": 50, "method": "newton_v1"},
        ("epsilon", "instance", "iterations", "termination", "dist_to_input", "dist_to_exact"),
        ("epsilon", "instances", "mean_iterations", "mean_dist_to_input", "noise_scale",
         "ref_iterations", "ref_gpgcd_iterations", "ref_dist_to_input"),
    ),
    "hankel_table4": Preset(
        "hankel_table4",
        30,
        {"taus": [10.0 ** k for k in range(-8, 0)], "outlier": False, "sigma_tol": 1e-14,
         "max_iters": 100, "methods": ["auto", "cadzow"]},
        ("tau", "instance", "method", "iterations", "termination", "final_sigma"),
        ("tau", "method", "instances", "mean_iterations", "not_converged", "ref_value"),
    ),
    "hankel_table5": Preset(
        "hankel_table5",
        30,
        {"taus": [10.0 ** k for k in range(-8, 0)], "outlier": True, "sigma_tol": 1e-14,
         "max_iters": 100, "methods": ["auto", "cadzow"]},
        ("tau", "instance", "method", "iterations", "termination", "final_sigma"),
        ("tau", "method", "instances", "mean_iterations", "not_converged", "ref_value"),
    ),
    "completion_phase": Preset(
        "completion_phase",
        20,
        # grid points (m / p^2, r); all lie where convex relaxation already succeeds
        {"p": 40, "grid": [[0.5, 2], [0.6, 3], [0.7, 4]], "step_tol": 1e-4, "max_iters": 100,
         "success_tol": 1e-3, "solved_fraction": 0.75, "method": "auto"},
        ("point", "instance", "rank", "m_samples", "sample_fraction", "dof_ratio", "iterations",
         "termination", "rel_error", "success"),
        ("point", "rank", "m_samples", "sample_fraction", "dof_ratio", "instances", "success_rate",
         "solved"),
    ),
}


@dataclass
class Report:
    """Outcome of :func:`run_experiment`."""

    preset: str
    seed: int
    params: dict
    rows: list
    summary: list
    traces: dict = field(default_factory=dict)
    row_columns: tuple = ()
    summary_columns: tuple = ()
    files: list = field(default_factory=list)

    def to_dict(self):
        return {
            "preset": self.preset,
            "seed": self.seed,
            "params": self.params,
            "summary": self.summary,
            "rows": self.rows,
        }


def _stopping_rel(params, m0):
    return StoppingCriteria(step_tol=params["step_tol_rel"] * float(np.linalg.norm(m0)),
                            max_iters=params["max_iters"])


def _gcd_run(params, seed, key, eps):
    inst = gen_gcd(params["m"], params["n"], params["d"], eps, make_rng(seed, *key))
    sylv = SylvesterStructure(params["m"], params["n"], params["d"])
    m0 = sylv.embed(inst.noisy)
    res = solve(SlraProblem(m0, sylv.structure, sylv.rank, method=params["method"],
                            stopping=_stopping_rel(params, m0)))
    return inst, sylv, res


def _table1_task(params, seed, idx):
    inst, sylv, res = _gcd_run(params, seed, (0, idx), params["epsilon"])
    steps = list(res.trace.step_norms)
    n0 = res.trace.initial_norm
    est = rate_estimate(res.trace)
    ratio = steps[1] * n0 / steps[0] ** 2 if len(steps) >= 2 and steps[0] > 0 else float("nan")
    pad = steps[:5] + [float("nan")] * (5 - min(5, len(steps)))
    row = {"instance": idx, "iterations": res.iterations, "termination": res.termination.value,
           "initial_norm": n0, "s1": pad[0], "s2": pad[1], "s3": pad[2], "s4": pad[3], "s5": pad[4],
           "exponent": est.exponent, "classification": est.classification, "squaring_ratio": ratio}
    return [row], {f"i{idx}": res.trace}


def _table1_summary(params, rows):
    ratios = np.array([r["squaring_ratio"] for r in rows])
    return [{
        "instances": len(rows),
        "quadratic": sum(r["classification"] == "quadratic" for r in rows),
        "median_exponent": float(np.nanmedian([r["exponent"] for r in rows])),
        "median_squaring_ratio": float(np.nanmedian(ratios)),
        "max_squaring_ratio": float(np.nanmax(ratios)),
    }]


def _table2_task(params, seed, idx, row, eps):
    inst, sylv, res = _gcd_run(params, seed, (row, idx), eps)
    out = sylv.extract(res.final)
    return [{"epsilon": eps, "instance": idx, "iterations": res.iterations,
             "termination": res.termination.value, "dist_to_input": out.distance(inst.noisy),
             "dist_to_exact": out.distance(inst.exact)}], {f"e{row}_i{idx}": res.trace}


def _table2_summary(params, rows):
    out = []
    for eps in params["epsilons"]:
        sel = [r for r in rows if r["epsilon"] == eps]
        ref = REFERENCE_GCD.get(_lookup(REFERENCE_GCD, eps))
        out.append({
            "epsilon": eps,
            "instances": len(sel),
            "mean_iterations": float(np.mean([r["iterations"] for r in sel])),
            "mean_dist_to_input": float(np.mean([r["dist_to_input"] for r in sel])),
            "noise_scale": eps * math.sqrt(params["m"] + params["n"]),
            "ref_iterations": ref[0] if ref else None,
            "ref_gpgcd_iterations": ref[1] if ref else None,
            "ref_dist_to_input": ref[2] if ref else None,
        })
    return out


def _lookup(table, x):
    for k in table:
        if math.isclose(k, x, rel_tol=1e-9):
            return k
    return None


def _hankel_task(params, seed, idx, row, tau):
    inst = gen_hankel(tau, params["outlier"], make_rng(seed, row, idx))
    hs = HankelStructure(*HANKEL_SHAPE)
    m0 = hs.embed(inst.noisy)
    rows, traces = [], {}
    for method in params["methods"]:
        res = solve(SlraProblem(m0, hs.structure, HANKEL_RANK, method=method,
                                stopping=StoppingCriteria(step_tol=0, sigma_tol=params["sigma_tol"],
                                                          max_iters=params["max_iters"])))
        final_sigma = float(np.linalg.svd(res.final, compute_uv=False)[HANKEL_RANK])
        rows.append({"tau": tau, "instance": idx, "method": method, "iterations": res.iterations,
                     "termination": res.termination.value, "final_sigma": final_sigma})
        traces[f"t{row}_i{idx}_{method}"] = res.trace
    return rows, traces


def _hankel_summary(params, rows):
    table = REFERENCE_HANKEL_OUTLIER if params["outlier"] else REFERENCE_HANKEL
    out = []
    for tau in params["taus"]:
        ref = table.get(_lookup(table, tau))
        for method in params["methods"]:
            sel = [r for r in rows if r["tau"] == tau and r["method"] == method]
            ref_val = None
            if ref is not None:
                ref_val = ref[3] if Method(method) != Method.CADZOW else ref[2]
                ref_val = "100*" if ref_val is None else ref_val
            out.append({
                "tau": tau,
                "method": method,
                "instances": len(sel),
                "mean_iterations": float(np.mean([r["iterations"] for r in sel])),
                "not_converged": sum(r["termination"] != Termination.SIGMA_CONVERGED.value for r in sel),
                "ref_value": ref_val,
            })
    return out


def _completion_task(params, seed, idx, row, point):
    frac, r = point
    p = params["p"]
    m_samples = int(round(frac * p * p))
    inst = gen_completion(p, int(r), m_samples, make_rng(seed, row, idx))
    structure = completion_structure(inst.mask)
    res = solve(SlraProblem(structure.base, structure, int(r), method=params["method"],
                            stopping=StoppingCriteria(step_tol=params["step_tol"],
                                                      max_iters=params["max_iters"])))
    err = float(np.linalg.norm(res.final - inst.truth) / np.linalg.norm(inst.truth))
    return [{"point": row, "instance": idx, "rank": int(r), "m_samples": m_samples,
             "sample_fraction": inst.sample_fraction, "dof_ratio": inst.dof_ratio,
             "iterations": res.iterations, "termination": res.termination.value,
             "rel_error": err, "success": bool(err < params["success_tol"])}], {f"p{row}_i{idx}": res.trace}


def _completion_summary(params, rows):
    out = []
    for row_idx, (frac, r) in enumerate(params["grid"]):
        sel = [x for x in rows if x["point"] == row_idx]
        rate = float(np.mean([x["success"] for x in sel])) if sel else float("nan")
        out.append({
            "point": row_idx,
            "rank": int(r),
            "m_samples": sel[0]["m_samples"] if sel else None,
            "sample_fraction": sel[0]["sample_fraction"] if sel else frac,
            "dof_ratio": sel[0]["dof_ratio"] if sel else None,
            "instances": len(sel),
            "success_rate": rate,
            "solved": bool(rate > params["solved_fraction"]) if sel else False,
        })
    return out


def _tasks(preset, params, seed, instances):
    if preset == "table1":
        return [((0, i), (_table1_task, params, seed, i)) for i in range(instances)], _table1_summary
    if preset == "table2":
        return [((row, i), (_table2_task, params, seed, i, row, eps))
                for row, eps in enumerate(params["epsilons"]) for i in range(instances)], _table2_summary
    if preset in ("hankel_table4", "hankel_table5"):
        return [((row, i), (_hankel_task, params, seed, i, row, tau))
                for row, tau in enumerate(params["taus"]) for i in range(instances)], _hankel_summary
    if preset == "completion_phase":
        return [((row, i), (_completion_task, params, seed, i, row, tuple(pt)))
                for row, pt in enumerate(params["grid"]) for i in range(instances)], _completion_summary
    raise ValueError(f"unknown preset {preset!r}")


def _call(task):
    fn, *args = task
    return fn(*args)


def run_experiment(preset, overrides=None, seed=0, instances=None, out_dir=None, workers=None,
                   write_traces=True):
    """Run a preset and optionally write its CSV/JSON outputs to `out_dir`.

    Parameters
    ----------
    preset : str
        One of :data:`PRESETS`.
    overrides : dict, optional
        Replacement values for the preset's parameters.
    seed : int
        Master seed.
    instances : int, optional
        Random instances per table row (defaults to the preset's count).
    out_dir : path, optional
        Where to write ``<preset>.csv``, ``<preset>_summary.csv``,
        ``<preset>.json`` and ``traces/``.
    workers : int, optional
        Thread pool size; defaults to ``SLRA_THREADS`` or the CPU count.
    """
    if preset not in PRESETS:
        raise ValueError(f"unknown preset {preset!r}; choose from {sorted(PRESETS)}")
    spec = PRESETS[preset]
    params = dict(spec.params)
    unknown = set(overrides or {}) - set(params)
    if unknown:
        raise ValueError(f"unknown parameters for {preset}: {sorted(unknown)}")
    params.update(overrides or {})
    n_inst = spec.instances if instances is None else int(instances)
    if n_inst < 1:
        raise ValueError("instances must be >= 1")
    tasks, summarise = _tasks(preset, params, seed, n_inst)
    workers = workers or worker_count()
    log.info("running %s: %d tasks on %d workers", preset, len(tasks), workers)
    if workers == 1:
        outputs = [_call(t) for _, t in tasks]
    else:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            outputs = list(pool.map(_call, [t for _, t in tasks]))
    ordered = sorted(zip([k for k, _ in tasks], outputs), key=lambda kv: kv[0])
    rows, traces = [], {}
    for _, (task_rows, task_traces) in ordered:
        rows.extend(task_rows)
        traces.update(task_traces)
    report = Report(preset, int(seed), params, rows, summarise(params, rows), traces,
                    spec.row_columns, spec.summary_columns)
    if out_dir is not None:
        write_report(report, out_dir, write_traces=write_traces)
    return report


# -- output -------------------------------------------------------------------


def _fmt(v):
    if v is None:
        return ""
    if isinstance(v, (bool, np.bool_)):
        return "true" if v else "false"
    if isinstance(v, (float, np.floating)):
        return repr(float(v))
    return str(v)


def csv_text(columns, rows, timestamp=None):
    """CSV with a leading ``# generated <timestamp>`` line, then a fixed header."""
    buf = io.StringIO()
    stamp = timestamp or datetime.now(timezone.utc).isoformat(timespec="seconds")
    buf.write(f"# generated {stamp}\n")
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(columns)
    for r in rows:
        w.writerow([_fmt(r.get(c)) for c in columns])
    return buf.getvalue()


def trace_csv_text(trace):
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["iteration", "step_norm", "sigma_r", "sigma_r_plus_1"])
    for rec in trace.records:
        w.writerow([rec.iteration, _fmt(rec.step_norm), _fmt(rec.sigma_r), _fmt(rec.sigma_r_plus_1)])
    return buf.getvalue()


def _json_default(o):
    if isinstance(o, (np.floating,)):
        return float(o)
    if isinstance(o, (np.integer,)):
        return int(o)
    if isinstance(o, np.bool_):
        return bool(o)
    raise TypeError(f"not serialisable: {type(o)}")


def write_report(report, out_dir, write_traces=True):
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    stamp = datetime.now(timezone.utc).isoformat(timespec="seconds")
    files = []
    path = out / f"{report.preset}.csv"
    path.write_text(csv_text(report.row_columns, report.rows, stamp))
    files.append(path)
    path = out / f"{report.preset}_summary.csv"
    path.write_text(csv_text(report.summary_columns, report.summary, stamp))
    files.append(path)
    path = out / f"{report.preset}.json"
    path.write_text(json.dumps(report.to_dict(), indent=2, default=_json_default) + "\n")
    files.append(path)
    if write_traces:
        tdir = out / "traces"
        tdir.mkdir(exist_ok=True)
        for key, trace in report.traces.items():
            path = tdir / f"{report.preset}_{key}.csv"
            path.write_text(trace_csv_text(trace))
            files.append(path)
    report.files = files
    return files
