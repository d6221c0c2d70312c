"""Hierarchy-aware gains, NDCG@1, run aggregation and paired t-tests."""

from __future__ import annotations

import json
import logging
import math
import warnings
from dataclasses import dataclass, field

import numpy as np
from scipy import integrate

from .exceptions import ConfigError, EvaluationError, UnknownTypeError
from .kb import TypeTaxonomy

logger = logging.getLogger(__name__)

GAIN_KINDS = ("strict", "linear", "exponential")


@dataclass(frozen=True)
class GainMode:
    kind: str = "strict"
    h: int = 6
    base: float = 2.0

    def __post_init__(self):
        if self.kind not in GAIN_KINDS:
            raise ConfigError(f"gain mode must be one of {GAIN_KINDS}, got {self.kind!r}")
        if self.kind == "linear" and self.h < 1:
            raise ConfigError("linear gain needs a taxonomy depth h >= 1")
        if self.base <= 1.0:
            raise ConfigError("exponential gain base must exceed 1")


def type_distance(taxonomy: TypeTaxonomy, t_a: str, t_g: str) -> int:
    """Edges on the undirected tree path between two types.

    Top-level types hang off a virtual root, so types in different trees
    are ``depth(t_a) + depth(t_g)`` apart.
    """
    for t in (t_a, t_g):
        if t not in taxonomy:
            raise UnknownTypeError(f"unknown type {t}")
    if t_a == t_g:
        return 0
    chain_a = [t_a] + taxonomy.ancestors(t_a)
    on_path = set(chain_a)
    lca_depth = 0
    for node in [t_g] + taxonomy.ancestors(t_g):
        if node in on_path:
            lca_depth = taxonomy.depth[node]
            break
    return taxonomy.depth[t_a] + taxonomy.depth[t_g] - 2 * lca_depth


def gain(mode: GainMode, d: int) -> float:
    if d < 0:
        raise ValueError("distance must be non-negative")
    if mode.kind == "strict":
        return 1.0 if d == 0 else 0.0
    if mode.kind == "linear":
        return max(0.0, 1.0 - d / mode.h)
    return float(mode.base) ** (-d)


def entity_gains(predictions, gold, mode: GainMode, taxonomy: TypeTaxonomy) -> dict:
    """Per-entity gain of the top-1 prediction; unpredicted entities score 0.

    The ideal gain at rank 1 is 1 in every mode, so the gain is already
    normalized.
    """
    extra = set(predictions) - set(gold)
    if extra:
        raise EvaluationError(f"{len(extra)} predicted entities lack a gold label, "
                              f"e.g. {sorted(extra)[0]}")
    gains = {}
    for e, g in gold.items():
        pred = predictions.get(e)
        gains[e] = 0.0 if pred is None else gain(mode, type_distance(taxonomy, pred, g))
    return gains


def ndcg_at_1(predictions, gold, mode: GainMode, taxonomy: TypeTaxonomy) -> float:
    gains = entity_gains(predictions, gold, mode, taxonomy)
    if not gains:
        raise EvaluationError("no gold-labelled entities to evaluate")
    return math.fsum(gains.values()) / len(gains)


def aggregate_runs(scores) -> tuple[float, float]:
    """Mean and sample standard deviation (n - 1 denominator)."""
    scores = [float(s) for s in scores]
    if not scores:
        raise EvaluationError("no run scores to aggregate")
    mean = math.fsum(scores) / len(scores)
    if len(scores) < 2:
        warnings.warn("fewer than 2 runs; reporting s = 0", stacklevel=2)
        return mean, 0.0
    var = math.fsum((s - mean) ** 2 for s in scores) / (len(scores) - 1)
    return mean, math.sqrt(var)


def student_t_pdf(x: float, dof: float) -> float:
    log_norm = (math.lgamma((dof + 1) / 2) - math.lgamma(dof / 2)
                - 0.5 * math.log(dof * math.pi))
    return math.exp(log_norm - (dof + 1) / 2 * math.log1p(x * x / dof))


def t_two_sided_p(t: float, dof: float) -> float:
    """Two-tailed p-value by adaptive quadrature of the Student t density."""
    if math.isinf(t):
        return 0.0
    tail, _ = integrate.quad(student_t_pdf, abs(t), math.inf, args=(dof,),
                             epsabs=1e-13, epsrel=1e-12, limit=200)
    return min(1.0, 2.0 * tail)


def paired_t_test(scores_x, scores_y) -> tuple[float, float]:
    """Two-tailed paired t-test on aligned per-entity (or per-run) scores.

    All-zero differences give ``(0.0, 1.0)``. Zero-variance, non-zero-mean
    differences give an infinite t and ``p = 0.0`` (read as p < 1e-12).
    """
    x = np.asarray(scores_x, dtype=np.float64)
    y = np.asarray(scores_y, dtype=np.float64)
    if x.shape != y.shape or x.ndim != 1:
        raise EvaluationError(f"paired t-test needs aligned vectors, got {x.shape} "
                              f"and {y.shape}")
    n = len(x)
    if n < 2:
        raise EvaluationError("paired t-test needs at least 2 pairs")
    d = x - y
    mean = math.fsum(d) / n
    sd = math.sqrt(math.fsum((d - mean) ** 2) / (n - 1))
    if sd == 0.0:
        if mean == 0.0:
            return 0.0, 1.0
        return math.copysign(math.inf, mean), 0.0
    t = mean / (sd / math.sqrt(n))
    return t, t_two_sided_p(t, n - 1)


# -- multi-system reports ---------------------------------------------------------

@dataclass
class SystemResult:
    """Scores of one system (one or more runs) under every gain mode."""

    name: str
    run_scores: dict = field(default_factory=dict)      # mode -> [ndcg per run]
    entity_gains: dict = field(default_factory=dict)    # mode -> {entity: mean gain over runs}
    run_entity_gains: dict = field(default_factory=dict)  # mode -> [{entity: gain}]

    def summary(self, mode) -> tuple[float, float | None]:
        scores = self.run_scores[mode]
        if len(scores) < 2:
            return scores[0], None
        return aggregate_runs(scores)


def evaluate_system(name, runs, gold, taxonomy: TypeTaxonomy, modes) -> SystemResult:
    """Score every run (a mapping entity -> predicted type) under each mode."""
    result = SystemResult(name)
    for mode in modes:
        per_run = [entity_gains(r, gold, mode, taxonomy) for r in runs]
        result.run_entity_gains[mode.kind] = per_run
        result.run_scores[mode.kind] = [math.fsum(g.values()) / len(g) for g in per_run]
        result.entity_gains[mode.kind] = {
            e: math.fsum(g[e] for g in per_run) / len(per_run) for e in gold}
    return result


def compare(a: SystemResult, b: SystemResult, mode: str, pairing="entity"):
    """Paired t-test of ``a`` against ``b`` under ``mode``.

    ``pairing="entity"`` pairs run-averaged per-entity gains; ``"run"`` pairs
    per-run NDCG@1 values, broadcasting a single-run system.
    """
    if pairing == "entity":
        ents = sorted(a.entity_gains[mode])
        return paired_t_test([a.entity_gains[mode][e] for e in ents],
                             [b.entity_gains[mode][e] for e in ents])
    if pairing == "run":
        xa, xb = a.run_scores[mode], b.run_scores[mode]
        if len(xa) == 1:
            xa = xa * len(xb)
        if len(xb) == 1:
            xb = xb * len(xa)
        return paired_t_test(xa, xb)
    raise ConfigError(f"pairing must be 'entity' or 'run', got {pairing!r}")


@dataclass
class EvalReport:
    systems: list
    modes: tuple
    significance: dict = field(default_factory=dict)  # (sys_a, sys_b, mode) -> (t, p)

    def to_table(self) -> str:
        """Tab-separated table: one row per system, NDCG@1 and s per mode."""
        head = ["system"]
        for m in self.modes:
            head += [f"{m}_ndcg@1", f"{m}_s"]
        lines = ["\t".join(head)]
        for sysres in self.systems:
            row = [sysres.name]
            for m in self.modes:
                mean, s = sysres.summary(m)
                row += [f"{mean:.4f}", "-" if s is None else f"{s:.4f}"]
            lines.append("\t".join(row))
        if self.significance:
            lines += ["", "# significance (two-tailed paired t-test)",
                      "system\tversus\tmode\tt\tp"]
            for (a, b, m), (t, p) in sorted(self.significance.items()):
                lines.append(f"{a}\t{b}\t{m}\t{t:.4f}\t{p:.3g}")
        return "\n".join(lines) + "\n"

    def to_jsonl(self) -> str:
        out = []
        for sysres in self.systems:
            for m in self.modes:
                mean, s = sysres.summary(m)
                out.append({"record": "score", "system": sysres.name, "mode": m,
                            "ndcg_at_1": mean, "s": s, "runs": sysres.run_scores[m]})
        for (a, b, m), (t, p) in sorted(self.significance.items()):
            out.append({"record": "significance", "system": a, "versus": b,
                        "mode": m, "t": None if math.isinf(t) else t, "p": p})
        return "".join(json.dumps(r, sort_keys=True) + "\n" for r in out)


def build_report(systems: dict, gold, taxonomy, *, baseline=None, pairs=(),
                 pairing="entity", base=2.0) -> EvalReport:
    """Evaluate named systems and test them against ``baseline`` and each other.

    ``systems`` maps a name to a list of runs (entity -> type mappings).
    ``pairs`` lists extra (system, system) comparisons.
    """
    modes = tuple(GainMode(k, max(taxonomy.h, 1), base) for k in GAIN_KINDS)
    results = [evaluate_system(n, runs, gold, taxonomy, modes)
               for n, runs in systems.items()]
    by_name = {r.name: r for r in results}
    report = EvalReport(results, GAIN_KINDS)
    todo = [(n, baseline) for n in by_name if baseline and n != baseline]
    todo += list(pairs)
    for a, b in todo:
        for m in GAIN_KINDS:
            report.significance[(a, b, m)] = compare(by_name[a], by_name[b], m, pairing)
    return report
