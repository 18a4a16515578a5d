"""CSV/JSON report emission for a set of run records."""

from __future__ import annotations

import csv
import json
from pathlib import Path

import numpy as np

from .stats import (ALPHA, downsample_indices, normalize_costs,
                    significance_symbol)

REFERENCE = "ABOM"
MAX_CURVE_POINTS = 500


class ReportError(ValueError):
    pass


def _final_fitness(records) -> dict[str, dict[str, list[float]]]:
    out: dict[str, dict[str, list[float]]] = {}
    for r in sorted(records, key=lambda r: (r.problem, r.algorithm, r.run)):
        out.setdefault(r.problem, {}).setdefault(r.algorithm, []).append(float(r.best_fitness))
    return out


def summarize(records, reference: str = REFERENCE, alpha: float = ALPHA) -> dict:
    """Per-problem fitness statistics and significance marks versus ``reference``.

    Marks read from the other algorithm's side: ``+`` means it beat the
    reference, ``-`` that it lost, ``≈`` no significant difference.
    """
    finals = _final_fitness(records)
    problems = {}
    for prob, algs in finals.items():
        stats = {}
        for alg, vals in algs.items():
            v = np.asarray(vals)
            stats[alg] = {"runs": int(v.size), "mean": float(v.mean()),
                          "std": float(v.std(ddof=1)) if v.size > 1 else 0.0,
                          "median": float(np.median(v)), "best": float(v.min()),
                          "worst": float(v.max())}
        marks = {}
        ref = algs.get(reference)
        if ref is not None and len(ref) >= 2:
            for alg, vals in algs.items():
                if alg == reference or len(vals) < 2:
                    continue
                sym, p = significance_symbol(vals, ref, alpha)
                marks[alg] = {"symbol": sym, "p_value": p}
        problems[prob] = {"algorithms": stats, "significance": marks}
    totals: dict[str, dict[str, int]] = {}
    for prob in problems.values():
        for alg, m in prob["significance"].items():
            t = totals.setdefault(alg, {"-": 0, "≈": 0, "+": 0})
            t[m["symbol"]] += 1
    return {"reference": reference, "alpha": alpha, "problems": problems,
            "totals": totals}


def curves(records, max_points: int = MAX_CURVE_POINTS) -> list[dict]:
    """Normalised mean and std curves per (problem, algorithm), downsampled."""
    rows = []
    for prob in sorted({r.problem for r in records}):
        norm = normalize_costs(records, prob)
        for alg in sorted(norm):
            runs = norm[alg]
            idx = downsample_indices(runs.shape[1], max_points)
            mean, std = runs.mean(axis=0), runs.std(axis=0)
            for i in idx:
                rows.append({"problem": prob, "algorithm": alg, "evaluation": int(i) + 1,
                             "mean": float(mean[i]), "std": float(std[i])})
    return rows


def emit_report(records, out_dir, reference: str = REFERENCE) -> dict[str, Path]:
    """Write ``traces.csv``, ``summary.json`` and ``curves.csv`` into ``out_dir``."""
    records = list(records)
    if not records:
        raise ReportError("no records to report")
    out = Path(out_dir)
    try:
        out.mkdir(parents=True, exist_ok=True)
        probe = out / ".write-test"
        probe.write_text("")
        probe.unlink()
    except OSError as exc:
        raise ReportError(f"cannot write to {out}: {exc}") from exc

    summary = summarize(records, reference)
    curve_rows = curves(records)
    summary["curves"] = {}
    for row in curve_rows:
        c = summary["curves"].setdefault(row["problem"], {}).setdefault(
            row["algorithm"], {"evaluation": [], "mean": [], "std": []})
        for k in ("evaluation", "mean", "std"):
            c[k].append(row[k])

    paths = {"traces": out / "traces.csv", "summary": out / "summary.json",
             "curves": out / "curves.csv"}
    with open(paths["traces"], "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["problem", "algorithm", "run", "evaluation", "best_fitness"])
        for r in sorted(records, key=lambda r: (r.problem, r.algorithm, r.run)):
            for i, v in enumerate(r.trace, start=1):
                w.writerow([r.problem, r.algorithm, r.run, i, repr(float(v))])
    with open(paths["curves"], "w", newline="") as fh:
        w = csv.DictWriter(fh, fieldnames=["problem", "algorithm", "evaluation", "mean", "std"])
        w.writeheader()
        w.writerows(curve_rows)
    paths["summary"].write_text(json.dumps(summary, indent=2, ensure_ascii=False))
    return paths


def read_traces(path) -> dict[tuple[str, str, int], np.ndarray]:
    """Load ``traces.csv`` back into ``{(problem, algorithm, run): trace}``."""
    out: dict[tuple[str, str, int], list[float]] = {}
    with open(path, newline="") as fh:
        for row in csv.DictReader(fh):
            key = (row["problem"], row["algorithm"], int(row["run"]))
            out.setdefault(key, []).append(float(row["best_fitness"]))
    return {k: np.asarray(v) for k, v in out.items()}
