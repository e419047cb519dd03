"""Ranking CSV ingest (evaluator,round,rank1..rankK) and result tables."""

from __future__ import annotations

import csv
import json
from dataclasses import dataclass

from .stats import dunn_posthoc, kruskal_wallis
from .trueskill import rate_all


class RankingFileError(ValueError):
    pass


@dataclass(frozen=True)
class RankingRecord:
    evaluator: str
    round_id: str
    order: tuple  # best-matches-human first


def parse_rankings(lines, entities=None):
    """Parse CSV rows into records; malformed rows are returned as (line number, reason) rejects.

    The entity set is ``entities`` if given, else the set named by the first valid row.
    """
    records, rejects = [], []
    expected = set(entities) if entities else None
    saw_row = False
    for lineno, row in enumerate(csv.reader(lines), start=1):
        if not row or all(not c.strip() for c in row):
            continue
        saw_row = True
        cells = [c.strip() for c in row]
        if lineno == 1 and cells[0].lower() == "evaluator":
            continue
        if len(cells) < 4:
            rejects.append((lineno, f"expected evaluator, round and at least two ranks, got {len(cells)} fields"))
            continue
        order = tuple(cells[2:])
        if any(not c for c in order):
            rejects.append((lineno, "empty rank field"))
            continue
        if len(set(order)) != len(order):
            rejects.append((lineno, "ranking repeats an entity"))
            continue
        if expected is None:
            expected = set(order)
        elif set(order) != expected:
            rejects.append((lineno, f"ranking is not a permutation of {sorted(expected)}"))
            continue
        records.append(RankingRecord(cells[0], cells[1], order))
    if not saw_row:
        raise RankingFileError("ranking file is empty")
    return records, rejects


def read_rankings(path, entities=None):
    with open(path, newline="") as f:
        return parse_rankings(f, entities)


def analyze(records):
    """TrueSkill ratings plus Kruskal-Wallis/Dunn over the rank positions each entity received."""
    if not records:
        raise RankingFileError("no valid rankings")
    entities = sorted(records[0].order)
    ratings = rate_all(entities, [r.order for r in records])
    positions = {e: [] for e in entities}
    for r in records:
        for pos, e in enumerate(r.order, start=1):
            positions[e].append(float(pos))
    groups = [positions[e] for e in entities]
    h, p = kruskal_wallis(groups)
    dunn = [
        {"a": entities[d.i], "b": entities[d.j], "z": d.z, "p": d.p, "p_adjusted": d.p_adjusted}
        for d in dunn_posthoc(groups)
    ]
    table = [
        {"entity": e, "mu": ratings[e].mu, "sigma": ratings[e].sigma, "conservative": ratings[e].conservative}
        for e in sorted(entities, key=lambda e: -ratings[e].mu)
    ]
    return {"rankings": len(records), "ratings": table, "kruskal_wallis": {"H": h, "p": p}, "dunn": dunn}


def write_analysis(path, result):
    with open(path, "w") as f:
        json.dump(result, f, indent=1)
        f.write("\n")
