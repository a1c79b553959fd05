"""Experiment runner: replicate pools, raw sample rows and reports.

Every experiment expands its config into a grid of cells.  Cell ``i`` reads
the environment ``DisorderSpec(family, split_seed(master_seed, i), r)`` for
replicates r = 0..R-1, so outputs depend only on the config, never on the
worker count or completion order.
"""
from __future__ import annotations

import csv
import hashlib
import io
import json
import logging
import math
import os
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .. import __version__
from .._kernels import STATUS_OK
from ..disorder import DisorderSpec, split_seed
from ..engine import dyadic_decompose, log_partition_functions
from ..oracle import exact_second_moment, collision_weight, lambda_limit, moment_table
from ..stats import (clt_report, decay_report, empirical_moment, l2_decoupling_gap,
                     loglog_slope, taylor_gap, truncated_variance_sum)
from ..walk import coupling_constant, overlap_sums, return_probability_table
from .config import ExperimentConfig

__all__ = ["RunManifest", "RunFailure", "run", "sweep", "simulate", "MAX_EXCLUDED_FRACTION"]

log = logging.getLogger(__name__)

MAX_EXCLUDED_FRACTION = 1e-3


class RunFailure(RuntimeError):
    def to_dict(self):
        return {"error": "run_failed", "message": str(self)}


@dataclass
class RunManifest:
    config: dict
    version: str
    table_checksums: dict
    wall_clock_seconds: float
    files: list = field(default_factory=list)
    status: str = "ok"
    error: dict | None = None

    def to_dict(self) -> dict:
        return {"config": self.config, "version": self.version,
                "table_checksums": self.table_checksums,
                "wall_clock_seconds": self.wall_clock_seconds, "files": self.files,
                "status": self.status, "error": self.error}


# ---------------------------------------------------------------- simulation

def _simulate_chunk(args):
    family, seed, N, windows, beta, reps = args
    spec = DisorderSpec(family, seed, 0)
    return log_partition_functions(spec, windows, beta, replicates=reps)


def simulate(family, seed, windows, beta, replicates, workers=1):
    """Log partition functions for every replicate; rows in replicate order."""
    reps = np.asarray(replicates, dtype=np.int64)
    horizon = max(e for _, e in windows)
    if workers <= 1 or reps.size < 2:
        return _simulate_chunk((family, seed, horizon, windows, beta, reps))
    nchunks = min(reps.size, 4 * workers)
    chunks = np.array_split(reps, nchunks)
    with ProcessPoolExecutor(max_workers=workers) as pool:
        parts = list(pool.map(_simulate_chunk,
                              [(family, seed, horizon, windows, beta, c) for c in chunks]))
    return (np.concatenate([p[0] for p in parts]), np.concatenate([p[1] for p in parts]))


def _check_exclusions(status, label):
    bad = np.any(status != STATUS_OK, axis=1)
    n_bad = int(bad.sum())
    if n_bad:
        log.warning("%s: %d replicate(s) excluded after numeric-range failure", label, n_bad)
    if n_bad > MAX_EXCLUDED_FRACTION * status.shape[0]:
        raise RunFailure(f"{label}: {n_bad} of {status.shape[0]} replicates failed "
                         f"(limit {MAX_EXCLUDED_FRACTION:.1%})")
    return ~bad, n_bad


# ---------------------------------------------------------------- output

class _Writer:
    def __init__(self, out_dir):
        self.out_dir = out_dir
        self.files = []
        os.makedirs(out_dir, exist_ok=True)

    def _record(self, name, data: bytes):
        path = os.path.join(self.out_dir, name)
        with open(path, "wb") as fh:
            fh.write(data)
        self.files.append({"path": name, "sha256": hashlib.sha256(data).hexdigest()})

    def jsonl(self, name, rows):
        buf = "".join(json.dumps(r, sort_keys=True) + "\n" for r in rows)
        self._record(name, buf.encode())

    def json(self, name, obj):
        self._record(name, (json.dumps(obj, sort_keys=True, indent=2) + "\n").encode())

    def csv(self, name, rows, columns=None):
        if not rows:
            self._record(name, b"")
            return
        columns = columns or list(rows[0])
        buf = io.StringIO()
        w = csv.DictWriter(buf, fieldnames=columns, extrasaction="ignore", lineterminator="\n")
        w.writeheader()
        for r in rows:
            w.writerow({k: (repr(v) if isinstance(v, float) else v) for k, v in r.items()})
        self._record(name, buf.getvalue().encode())


def _tag(N, M=None, beta_hat=None):
    parts = [f"N{N}"]
    if M is not None:
        parts.append(f"M{M}")
    if beta_hat is not None:
        parts.append(f"b{beta_hat:g}")
    return "_".join(parts)


def _cells(cfg: ExperimentConfig, with_m=True):
    cells = []
    for N in cfg.N:
        for M in (cfg.M if with_m else [None]):
            for b in cfg.beta_hat:
                cells.append((N, M, b))
    return [(i, split_seed(cfg.master_seed, i)) + c for i, c in enumerate(cells)]


def _flat_summary(reports):
    flat = []
    for r in reports:
        row = {}
        for k, v in r.items():
            if isinstance(v, (dict, list)):
                continue
            row[k] = v
        flat.append(row)
    return flat


# ---------------------------------------------------------------- experiments

def _exp_tables(cfg, w):
    nmax = max(cfg.N)
    table = return_probability_table(nmax)
    R = overlap_sums(nmax)
    rows = []
    for n in range(1, nmax + 1):
        row = {"n": n, "p_2n": float(table[n]), "R_n": float(R[n])}
        for b in cfg.beta_hat:
            row[f"beta_N[{b:g}]"] = b / math.sqrt(R[n])
        rows.append(row)
    w.csv("tables.csv", rows)
    return []


def _exp_oracle(cfg, w):
    reports = []
    for N in cfg.N:
        for M in cfg.M:
            for b in cfg.beta_hat:
                mt = moment_table(N, M, b, cfg.family)
                w.csv(f"oracle_{_tag(N, M, b)}.csv", mt.rows())
                reports.append({"N": N, "M": M, "beta_hat": b, "family": cfg.family,
                                "big_lambda": mt.big_lambda, "lambda_MN": mt.lambda_MN,
                                "lambda_limit": lambda_limit(b),
                                "second_moment_W": exact_second_moment(
                                    0, N, mt.big_lambda, return_probability_table(N)),
                                "limit_second_moment_W": math.exp(lambda_limit(b))})
    return reports


def _w_only(cfg, w, kind):
    reports = []
    for idx, seed, N, _, b in _cells(cfg, with_m=False):
        beta = coupling_constant(b, N)
        logz, status = simulate(cfg.family, seed, [(0, N)], beta, range(cfg.replicates),
                                cfg.worker_count)
        ok, n_bad = _check_exclusions(status, f"{kind} {_tag(N, None, b)}")
        log_w = logz[ok, 0]
        wv = np.exp(log_w)
        rows = [{"replicate": r, "N": N, "beta_hat": b, "W_N": float(np.exp(logz[r, 0])),
                 "log_W_N": float(logz[r, 0]), "ok": bool(ok[r])}
                for r in range(cfg.replicates)]
        w.jsonl(f"{kind}_{_tag(N, None, b)}.jsonl", rows)
        rep = clt_report(log_w, b) if kind == "clt" else decay_report(wv, b)
        rep.update({"N": N, "cell": idx, "excluded": n_bad, "W_mean": float(wv.mean()),
                    "W_mean_stderr": float(wv.std(ddof=1) / math.sqrt(wv.size))})
        if kind == "supercritical":
            rep["log_W_mean"] = float(log_w.mean())
        reports.append(rep)
    return reports


def _dyadic_cell(cfg, seed, N, M, b):
    grid = dyadic_decompose(N, M)
    windows = [(0, N)] + [(grid.times[k], grid.times[k + 1]) for k in range(M)]
    logz, status = simulate(cfg.family, seed, windows, coupling_constant(b, N),
                            range(cfg.replicates), cfg.worker_count)
    if M == 1:
        logz[:, 1] = logz[:, 0]
    return grid, logz, status


def _exp_decouple(cfg, w):
    reports = []
    for idx, seed, N, M, b in _cells(cfg):
        grid, logz, status = _dyadic_cell(cfg, seed, N, M, b)
        ok, n_bad = _check_exclusions(status, f"decouple {_tag(N, M, b)}")
        W = np.exp(logz[:, 0])
        Z = np.exp(logz[:, 1:])
        P = np.prod(Z, axis=1)
        rows = [{"replicate": r, "N": N, "M": M, "beta_hat": b, "W_N": float(W[r]),
                 "log_W_N": float(logz[r, 0]), "Z": Z[r].tolist(), "product": float(P[r]),
                 "shared_environment": True, "ok": bool(ok[r])}
                for r in range(cfg.replicates)]
        w.jsonl(f"decouple_{_tag(N, M, b)}.jsonl", rows)
        gap = l2_decoupling_gap(W[ok], P[ok])
        reports.append({"N": N, "M": M, "beta_hat": b, "cell": idx, "excluded": n_bad,
                        "times": list(grid.times), "l2_gap": gap.value,
                        "l2_gap_stderr": gap.stderr, "W_mean": float(W[ok].mean()),
                        "product_mean": float(P[ok].mean())})
    return reports


def _exp_taylor(cfg, w):
    reports = []
    for idx, seed, N, M, b in _cells(cfg):
        grid, logz, status = _dyadic_cell(cfg, seed, N, M, b)
        ok, n_bad = _check_exclusions(status, f"taylor {_tag(N, M, b)}")
        lam2 = lambda_limit(b)
        rows, tg, lg, tv = [], [], [], []
        for r in range(cfg.replicates):
            if not ok[r]:
                rows.append({"replicate": r, "ok": False})
                continue
            u = np.expm1(logz[r, 1:])
            t = taylor_gap(u)
            g = abs(logz[r, 0] - logz[r, 1:].sum())
            s = truncated_variance_sum(u, cfg.alpha)
            tg.append(t)
            lg.append(g)
            tv.append(s)
            rows.append({"replicate": r, "N": N, "M": M, "beta_hat": b, "U": u.tolist(),
                         "taylor_gap": t, "log_gap": g, "truncated_sum": s,
                         "half_square_sum": float(0.5 * np.sum(u * u)), "ok": True})
        w.jsonl(f"taylor_{_tag(N, M, b)}.jsonl", rows)
        tg, lg, tv = map(np.asarray, (tg, lg, tv))
        half_sq = np.array([r["half_square_sum"] for r in rows if r.get("ok")])
        reports.append({
            "N": N, "M": M, "beta_hat": b, "cell": idx, "excluded": n_bad,
            "delta": cfg.delta, "alpha": cfg.alpha,
            "taylor_tail": float(np.mean(tg >= cfg.delta)),
            "log_gap_tail": float(np.mean(lg >= cfg.delta)),
            "half_square_tail": float(np.mean(np.abs(half_sq - lam2 / 2) > cfg.delta)),
            "truncated_sum_mean": float(tv.mean()), "lambda2": lam2,
        })
    return reports


def _exp_moments(cfg, w):
    reports = []
    for b in cfg.beta_hat:
        for N in cfg.N:
            idx = cfg.N.index(N) * len(cfg.beta_hat) + cfg.beta_hat.index(b)
            seed = split_seed(cfg.master_seed, idx)
            grids = {M: dyadic_decompose(N, M) for M in cfg.M}
            windows = [(0, N)]
            index = {}
            for M, g in grids.items():
                for k in range(M):
                    win = (g.times[k], g.times[k + 1])
                    if win not in index:
                        index[win] = len(windows)
                        windows.append(win)
            logz, status = simulate(cfg.family, seed, windows, coupling_constant(b, N),
                                    range(cfg.replicates), cfg.worker_count)
            ok, n_bad = _check_exclusions(status, f"moments {_tag(N, None, b)}")
            big_lambda = collision_weight(b, N, cfg.family)
            table = return_probability_table(N)
            p = 2.0 + cfg.eps0
            per_m = []
            u_by_m = {}
            for M, g in grids.items():
                cols = [index[(g.times[k], g.times[k + 1])] for k in range(M)]
                U = np.expm1(logz[:, cols])
                u_by_m[M] = U
                Uok = U[ok]
                second = [empirical_moment(Uok[:, k], 2.0) for k in range(M)]
                higher = [empirical_moment(Uok[:, k], p) for k in range(M)]
                oracle_var = [exact_second_moment(g.times[k], g.times[k + 1], big_lambda, table)
                              - 1.0 for k in range(M)]
                ksup = int(np.argmax([h.value for h in higher]))
                sum_sq = np.sum(Uok**2, axis=1)
                per_m.append({
                    "M": M, "times": list(g.times),
                    "second_moment": [e.value for e in second],
                    "second_moment_stderr": [e.stderr for e in second],
                    "oracle_var_u": oracle_var,
                    "moment_p": [e.value for e in higher],
                    "moment_p_stderr": [e.stderr for e in higher],
                    "sup_k": ksup + 1,
                    "sup_moment": higher[ksup].value,
                    "sup_moment_stderr": higher[ksup].stderr,
                    "scaled_sup_moment": higher[ksup].value * M ** (1 + cfg.eps0 / 2),
                    "sum_square_mean": float(sum_sq.mean()),
                    "sum_square_stderr": float(sum_sq.std(ddof=1) / math.sqrt(sum_sq.size)),
                    "oracle_lambda_MN": float(np.sum(oracle_var)),
                })
            rows = []
            for r in range(cfg.replicates):
                row = {"replicate": r, "N": N, "beta_hat": b, "W_N": float(np.exp(logz[r, 0])),
                       "ok": bool(ok[r])}
                for M in grids:
                    row[f"U_M{M}"] = u_by_m[M][r].tolist()
                rows.append(row)
            w.jsonl(f"moments_{_tag(N, None, b)}.jsonl", rows)
            Ms = [d["M"] for d in per_m]
            slope = loglog_slope(Ms, [d["scaled_sup_moment"] for d in per_m]) \
                if len(Ms) > 1 else float("nan")
            reports.append({"N": N, "beta_hat": b, "cell": idx, "excluded": n_bad,
                            "eps0": cfg.eps0, "p": p, "per_M": per_m,
                            "scaled_sup_slope": slope})
    return reports


_EXPERIMENTS = {
    "tables": _exp_tables,
    "oracle": _exp_oracle,
    "clt": lambda c, w: _w_only(c, w, "clt"),
    "supercritical": lambda c, w: _w_only(c, w, "supercritical"),
    "decouple": _exp_decouple,
    "taylor": _exp_taylor,
    "moments": _exp_moments,
}


def _table_checksums(cfg):
    nmax = max(cfg.N)
    vals = return_probability_table(nmax).values
    return {f"return_probability[1..{nmax}]": hashlib.sha256(vals.tobytes()).hexdigest()}


def run(cfg: ExperimentConfig) -> RunManifest:
    """Execute one experiment grid and write its outputs under ``cfg.out``."""
    cfg.validate()
    t0 = time.perf_counter()
    writer = _Writer(cfg.out)
    reports = _EXPERIMENTS[cfg.kind](cfg, writer)
    if cfg.kind != "tables":
        writer.json(f"{cfg.kind}_summary.json", {"kind": cfg.kind, "reports": reports})
        writer.csv(f"{cfg.kind}_summary.csv", _flat_summary(reports))
    manifest = RunManifest(cfg.to_dict(), __version__, _table_checksums(cfg),
                           time.perf_counter() - t0, list(writer.files))
    with open(os.path.join(cfg.out, "manifest.json"), "w") as fh:
        json.dump(manifest.to_dict(), fh, sort_keys=True, indent=2)
    return manifest


def sweep(configs) -> list:
    """Run configs in order; a failing config yields an error manifest."""
    manifests = []
    for cfg in configs:
        try:
            manifests.append(run(cfg))
        except Exception as exc:  # isolate per-config failures
            log.error("config %s failed: %s", cfg.kind, exc)
            err = exc.to_dict() if hasattr(exc, "to_dict") else {
                "error": type(exc).__name__, "message": str(exc)}
            manifests.append(RunManifest(cfg.to_dict(), __version__, {}, 0.0, [],
                                         status="error", error=err))
    return manifests


def read_summary(out_dir, kind):
    with open(os.path.join(out_dir, f"{kind}_summary.json")) as fh:
        return json.load(fh)["reports"]
