"""Micro-averaged alignment metrics.

Every (sentence, event) prediction is judged independently against the
truth set of its sentence; precision/recall/F1 aggregate pair counts over
the whole corpus. AUC, when pair-level scores are supplied, is ROC-AUC of
the scores against binary pair labels (ties counted half).
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import Mapping

import numpy as np

from .corpus import GroundTruth

__all__ = ["AlignmentResult", "MetricsReport", "compute_metrics", "roc_auc"]


@dataclass(frozen=True)
class AlignmentResult:
    predictions: Mapping[str, frozenset[str]]
    provenance: Mapping[str, object] = field(default_factory=dict)


@dataclass(frozen=True)
class MetricsReport:
    precision: float
    recall: float
    f1: float
    auc: float | None
    tp: int
    fp: int
    fn: int
    per_game: Mapping[str, Mapping[str, float]] = field(default_factory=dict)

    def to_dict(self) -> dict:
        data = {
            "precision": self.precision,
            "recall": self.recall,
            "f1": self.f1,
            "auc": self.auc,
            "tp": self.tp,
            "fp": self.fp,
            "fn": self.fn,
            "per_game": {g: dict(v) for g, v in sorted(self.per_game.items())},
        }
        return data

    def to_json(self, **extra: object) -> str:
        payload = self.to_dict()
        payload.update(extra)
        return json.dumps(payload, sort_keys=True, indent=2)


def _prf(tp: int, fp: int, fn: int) -> tuple[float, float, float]:
    precision = tp / (tp + fp) if tp + fp else 0.0
    recall = tp / (tp + fn) if tp + fn else 0.0
    f1 = 2 * precision * recall / (precision + recall) if precision + recall else 0.0
    return precision, recall, f1


def roc_auc(scores: np.ndarray, labels: np.ndarray) -> float | None:
    """Rank-based ROC-AUC with midrank tie handling; None if one class absent."""
    labels = np.asarray(labels, dtype=bool)
    scores = np.asarray(scores, dtype=np.float64)
    n_pos = int(labels.sum())
    n_neg = len(labels) - n_pos
    if n_pos == 0 or n_neg == 0:
        return None
    order = np.argsort(scores, kind="mergesort")
    ranks = np.empty(len(scores))
    sorted_scores = scores[order]
    i = 0
    while i < len(scores):
        j = i
        while j + 1 < len(scores) and sorted_scores[j + 1] == sorted_scores[i]:
            j += 1
        ranks[order[i : j + 1]] = 0.5 * (i + j) + 1.0
        i = j + 1
    pos_rank_sum = ranks[labels].sum()
    return float((pos_rank_sum - n_pos * (n_pos + 1) / 2.0) / (n_pos * n_neg))


def compute_metrics(
    result: AlignmentResult,
    truth: GroundTruth,
    pair_scores: Mapping[tuple[str, str], float] | None = None,
    game_of: Mapping[str, str] | None = None,
) -> MetricsReport:
    """Micro precision/recall/F1 over pairs, with optional AUC and per-game split."""
    unknown = [sid for sid in result.predictions if sid not in truth.alignments]
    if unknown:
        raise ValueError(f"predictions for sentences missing from truth: {unknown[:5]}")

    tp = fp = fn = 0
    by_game: dict[str, list[int]] = {}
    for sid, true_set in truth.alignments.items():
        predicted = result.predictions.get(sid, frozenset())
        s_tp = len(predicted & true_set)
        s_fp = len(predicted - true_set)
        s_fn = len(true_set - predicted)
        tp += s_tp
        fp += s_fp
        fn += s_fn
        if game_of is not None and sid in game_of:
            counts = by_game.setdefault(game_of[sid], [0, 0, 0])
            counts[0] += s_tp
            counts[1] += s_fp
            counts[2] += s_fn

    auc = None
    if pair_scores is not None:
        items = sorted(pair_scores.items())
        scores = np.array([v for _, v in items])
        labels = np.array([eid in truth.get(sid) for (sid, eid), _ in items])
        auc = roc_auc(scores, labels)

    precision, recall, f1 = _prf(tp, fp, fn)
    per_game = {}
    for game, (g_tp, g_fp, g_fn) in by_game.items():
        g_p, g_r, g_f1 = _prf(g_tp, g_fp, g_fn)
        per_game[game] = {
            "precision": g_p,
            "recall": g_r,
            "f1": g_f1,
            "tp": g_tp,
            "fp": g_fp,
            "fn": g_fn,
        }
    return MetricsReport(precision, recall, f1, auc, tp, fp, fn, per_game)
