"""Batch scoring, leaderboard arithmetic and report generation.

The bundled data file carries the published leaderboard (both evaluation
sets, three score columns per entry) so the arithmetic checks run
offline: every stored "Ave" is re-derived from its HASPI/HASQI pair, and
the best-entry-per-team correlation between the two metrics is
recomputed. A row is flagged when its stored mean cannot be explained by
display rounding (tolerance 0.0005).
"""

import csv
import json
import math
import os
import re
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from importlib import resources

import numpy as np

from .audio import read_wav
from .errors import StatisticsError
from .hearing_aid import amplify, flat_audiogram
from .metrics import (
    DEFAULT_CONFIG,
    better_ear,
    combined_score,
    intelligibility_score,
    quality_score,
)
from .scenes import thread_count

ROUNDING_TOLERANCE = 0.0005


def round3(value):
    """Round half away from zero at 3 decimals (display rounding)."""
    return math.floor(abs(value) * 1000.0 + 0.5) / 1000.0 * (1 if value >= 0 else -1)


def pearson(x, y):
    """Sample Pearson correlation coefficient.

    Needs at least 3 paired values and non-degenerate variance.
    """
    x = np.asarray(x, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    if x.shape != y.shape or x.ndim != 1:
        raise ValueError("pearson needs two equal-length 1-D score lists")
    if x.size < 3:
        raise ValueError(f"pearson needs at least 3 pairs, got {x.size}")
    xd = x - x.mean()
    yd = y - y.mean()
    denom = math.sqrt(float(np.sum(xd * xd)) * float(np.sum(yd * yd)))
    if denom == 0.0:
        raise StatisticsError("zero variance in a correlation input")
    return float(np.sum(xd * yd)) / denom


@dataclass(frozen=True)
class LeaderboardRow:
    """One entry's scores on one evaluation set."""

    entry: str
    eval_set: str
    haspi: float
    hasqi: float
    ave: float

    @property
    def recomputed_ave(self):
        return (self.haspi + self.hasqi) / 2.0

    def flagged(self, tolerance=ROUNDING_TOLERANCE):
        """True when the stored mean is not explainable by rounding."""
        return abs(self.ave - self.recomputed_ave) > tolerance + 1e-12

    @property
    def team(self):
        """Entries that differ only by a trailing tag belong to one team."""
        match = re.match(r"(E\d+)", self.entry)
        return match.group(1) if match else self.entry


def bundled_results_path():
    """Filesystem path of the published leaderboard shipped in the package."""
    return str(resources.files("clarity_bench").joinpath("data/published_results.csv"))


def load_published_results(path=None):
    """Rows of the published leaderboard (or any CSV in the same layout)."""
    path = path or bundled_results_path()
    rows = []
    with open(path, encoding="utf-8") as fp:
        reader = csv.DictReader(fp)
        for line_no, rec in enumerate(reader, start=2):
            try:
                rows.append(
                    LeaderboardRow(
                        entry=rec["entry"],
                        eval_set=rec["eval_set"],
                        haspi=float(rec["haspi"]),
                        hasqi=float(rec["hasqi"]),
                        ave=float(rec["ave"]),
                    )
                )
            except (KeyError, TypeError, ValueError) as exc:
                raise ValueError(f"{path}: line {line_no}: {exc}") from exc
    if not rows:
        raise ValueError(f"{path}: no leaderboard rows")
    return rows


def best_per_team(rows):
    """Highest-Ave entry of every team, the baseline included, in file order."""
    best = {}
    order = []
    for row in rows:
        team = row.team
        if team not in best:
            order.append(team)
            best[team] = row
        elif row.ave > best[team].ave:
            best[team] = row
    return [best[t] for t in order]


def verify_rows(rows, tolerance=ROUNDING_TOLERANCE):
    """All rows whose stored Ave disagrees with the recomputed mean."""
    return [row for row in rows if row.flagged(tolerance)]


def metric_correlation(rows):
    """Best-entry-per-team correlation between the two metric columns."""
    chosen = best_per_team(rows)
    return pearson([r.haspi for r in chosen], [r.hasqi for r in chosen])


def report_published(rows, tolerance=ROUNDING_TOLERANCE):
    """Text report: recomputed means, flags, and per-set correlations."""
    lines = []
    eval_sets = sorted({r.eval_set for r in rows})
    flagged_total = 0
    for eval_set in eval_sets:
        subset = [r for r in rows if r.eval_set == eval_set]
        lines.append(f"[{eval_set}]")
        lines.append(f"{'entry':<8}{'haspi':>8}{'hasqi':>8}{'ave':>8}{'recomputed':>12}  flag")
        for row in subset:
            flag = row.flagged(tolerance)
            flagged_total += int(flag)
            lines.append(
                f"{row.entry:<8}{row.haspi:>8.3f}{row.hasqi:>8.3f}{row.ave:>8.3f}"
                f"{round3(row.recomputed_ave):>12.3f}  {'FLAG' if flag else 'ok'}"
            )
        try:
            corr = metric_correlation(subset)
            lines.append(f"best-entry-per-team metric correlation: r = {corr:.3f}")
        except (ValueError, StatisticsError) as exc:
            lines.append(f"best-entry-per-team metric correlation: unavailable ({exc})")
        lines.append("")
    lines.append(f"flagged rows: {flagged_total}")
    return "\n".join(lines)


# ---------------------------------------------------------------------------
# Scoring rendered datasets


@dataclass(frozen=True)
class RunManifest:
    """Record of one scoring run; aggregates recomputable from records."""

    version: str
    dataset: str
    fidelity: str
    records: tuple
    aggregates: dict

    def __post_init__(self):
        for key in ("haspi_like", "hasqi_like", "ave"):
            mean = sum(r[key] for r in self.records) / len(self.records)
            if abs(mean - self.aggregates[key]) > 1e-9:
                raise ValueError(f"aggregate {key} does not match its records")


def score_dataset(manifest_path, audiogram=None, config=DEFAULT_CONFIG, taps=127):
    """Run the baseline (passthrough + amplification) over a dataset.

    For every scene the rendered ear signals are amplified with the
    audiogram's prescription and scored per ear against the stored
    reference; each metric keeps its better ear. Rows come back sorted
    by scene id regardless of worker scheduling.
    """
    audiogram = audiogram or flat_audiogram(40.0)
    with open(manifest_path, encoding="utf-8") as fp:
        manifest = json.load(fp)
    base = os.path.dirname(os.path.abspath(manifest_path))
    rate = manifest["rate"]

    def score_one(entry):
        scene_id = entry["id"]
        mix_path = os.path.join(base, entry["mix"])
        ref_path = os.path.join(base, entry["reference"])
        for path in (mix_path, ref_path):
            if not os.path.exists(path):
                raise FileNotFoundError(f"{scene_id}: missing {path}")
        ears = read_wav(mix_path, expected_rate=rate)
        reference = read_wav(ref_path, expected_rate=rate)
        amplified = amplify(ears, audiogram, taps=taps).ears
        ref = reference.channel(0)
        haspi = better_ear(
            intelligibility_score(ref, amplified.channel(0), audiogram.ear("left"), config, rate),
            intelligibility_score(ref, amplified.channel(1), audiogram.ear("right"), config, rate),
        )
        hasqi = better_ear(
            quality_score(ref, amplified.channel(0), audiogram.ear("left"), config, rate),
            quality_score(ref, amplified.channel(1), audiogram.ear("right"), config, rate),
        )
        score = combined_score(haspi, hasqi)
        return {
            "scene": scene_id,
            "haspi_like": score.haspi_like,
            "hasqi_like": score.hasqi_like,
            "ave": score.combined,
        }

    with ThreadPoolExecutor(max_workers=thread_count()) as pool:
        records = list(pool.map(score_one, manifest["scenes"]))
    records.sort(key=lambda r: r["scene"])

    aggregates = {
        key: sum(r[key] for r in records) / len(records)
        for key in ("haspi_like", "hasqi_like", "ave")
    }
    run = RunManifest(
        version=manifest.get("version", "unknown"),
        dataset=os.path.abspath(manifest_path),
        fidelity=manifest.get("fidelity", "unknown"),
        records=tuple(records),
        aggregates=aggregates,
    )
    return run


def write_scores_csv(run, path):
    """scene,haspi_like,hasqi_like,ave rows at 3-decimal display rounding.

    The displayed ave is the mean of the displayed metric columns, so
    verifying the file against itself never flags.
    """
    with open(path, "w", encoding="utf-8", newline="") as fp:
        writer = csv.writer(fp)
        writer.writerow(["scene", "haspi_like", "hasqi_like", "ave"])
        for rec in run.records:
            h = round3(rec["haspi_like"])
            q = round3(rec["hasqi_like"])
            writer.writerow(
                [rec["scene"], f"{h:.3f}", f"{q:.3f}", f"{round3((h + q) / 2.0):.3f}"]
            )


def write_run_manifest(run, path):
    payload = {
        "version": run.version,
        "dataset": run.dataset,
        "fidelity": run.fidelity,
        "records": list(run.records),
        "aggregates": run.aggregates,
    }
    with open(path, "w", encoding="utf-8") as fp:
        json.dump(payload, fp, indent=2, sort_keys=True)


def read_scores_csv(path):
    """Rows of a scores CSV; raises ValueError with the offending line."""
    rows = []
    with open(path, encoding="utf-8") as fp:
        reader = csv.DictReader(fp)
        if reader.fieldnames != ["scene", "haspi_like", "hasqi_like", "ave"]:
            raise ValueError(f"{path}: line 1: expected scene,haspi_like,hasqi_like,ave header")
        for line_no, rec in enumerate(reader, start=2):
            try:
                rows.append(
                    {
                        "scene": rec["scene"],
                        "haspi_like": float(rec["haspi_like"]),
                        "hasqi_like": float(rec["hasqi_like"]),
                        "ave": float(rec["ave"]),
                    }
                )
            except (KeyError, TypeError, ValueError) as exc:
                raise ValueError(f"{path}: line {line_no}: {exc}") from exc
    if not rows:
        raise ValueError(f"{path}: no score rows")
    return rows


def report_scores(paths, tolerance=ROUNDING_TOLERANCE):
    """Verify score CSVs: every ave column re-derived from its row."""
    lines = []
    flagged_total = 0
    for path in paths:
        rows = read_scores_csv(path)
        flags = [
            r for r in rows
            if abs(r["ave"] - (r["haspi_like"] + r["hasqi_like"]) / 2.0) > tolerance + 1e-12
        ]
        flagged_total += len(flags)
        means = {
            key: sum(r[key] for r in rows) / len(rows)
            for key in ("haspi_like", "hasqi_like", "ave")
        }
        lines.append(
            f"{path}: {len(rows)} scenes | mean haspi_like {means['haspi_like']:.3f} "
            f"| mean hasqi_like {means['hasqi_like']:.3f} | mean ave {means['ave']:.3f} "
            f"| flags {len(flags)}"
        )
        for r in flags:
            lines.append(f"  FLAG {r['scene']}: ave {r['ave']:.3f} != mean of metrics")
    lines.append(f"flagged rows: {flagged_total}")
    return "\n".join(lines)
