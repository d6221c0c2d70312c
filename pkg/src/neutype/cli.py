"""``neutype`` command-line interface.

Every subcommand accepts every config key as ``--key value`` (underscores
may be written as dashes) and ``--config FILE`` with ``key = value`` lines;
flags override the file. Exit status is 1 for configuration errors and 2
for data errors.
"""

from __future__ import annotations

import argparse
import logging
import sys
import warnings
from pathlib import Path

import numpy as np

from . import __version__
from .baselines import BM25TypeRanker, SDTypePredictor
from .config import ExperimentConfig, read_config_file, split_list
from .datasets import make_synthetic_kb
from .embeddings import load_word_vectors
from .evaluation import GainMode, aggregate_runs, build_report, ndcg_at_1
from .exceptions import ConfigError, DataError, NeuTypeError
from .features import (EntityFeaturizer, InputMask, bundles_to_matrix, cache_dir,
                       cache_key, read_feature_cache, write_feature_cache)
from .io import read_predictions, read_test_set, write_predictions, write_test_set
from .kb import KnowledgeBase, ingest_dump
from .nn import NeuTypeClassifier
from .sampling import SamplerConfig, sample_test_set, training_universe

logger = logging.getLogger("neutype")

COARSE_LEARNING_RATES = (0.1, 0.01, 0.001)
FINE_LEARNING_RATES = tuple(round(0.05 * k, 2) for k in range(1, 11))
SWEEP_OPTIMIZERS = ("sgd", "sgd_momentum", "adam")
SWEEP_DROPOUT_POSITIONS = ("before_M1", "after_M2", "between_M1_M2")
SWEEP_DROPOUT_RATES = (0.2, 0.4)


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise ConfigError(f"{self.prog}: {message}")


# -- helpers --------------------------------------------------------------------

def _require(cfg, *keys):
    for key in keys:
        if not getattr(cfg, key):
            raise ConfigError(f"missing required setting {key!r}")


def _load_kb(cfg) -> KnowledgeBase:
    _require(cfg, "kb")
    return KnowledgeBase.load(cfg.kb)


def _load_table(cfg):
    _require(cfg, "vectors")
    return load_word_vectors(cfg.vectors, cfg.dim)


def _test_sets(value) -> list[dict]:
    return [read_test_set(p) for p in split_list(value)]


def _features(cfg, kb, table, entities, mask) -> np.ndarray:
    """Feature matrix for ``entities``, rounded to float32 like the cache."""
    featurizer = EntityFeaturizer(kb, table, mask, cfg.normalize_c).fit()
    if not cfg.use_cache:
        bundles = featurizer.bundles(entities)
    else:
        directory = cache_dir()
        directory.mkdir(parents=True, exist_ok=True)
        path = directory / (cache_key(kb.content_hash(), table.content_hash(),
                                      featurizer.mask_, cfg.normalize_c) + ".ntfc")
        dims = (table.dim, table.dim, len(kb.taxonomy))
        known = {}
        if path.exists():
            cached, cached_dims = read_feature_cache(path)
            if cached_dims == dims:
                known = {b.entity: b for b in cached}
        missing = [e for e in dict.fromkeys(entities) if e not in known]
        if missing:
            known.update(zip(missing, featurizer.bundles(missing)))
            write_feature_cache(path, [known[e] for e in sorted(known)], dims)
        bundles = [known[e] for e in entities]
    if not bundles:
        return np.zeros((0, sum(featurizer.input_dims_)))
    return bundles_to_matrix(bundles).astype(np.float32).astype(np.float64)


def _featurizable(kb, entities, mask):
    mask = InputMask.parse(mask)
    if not mask.has_a:
        return list(entities)
    return [e for e in entities if e in kb.entities and kb.entities[e].description is not None]


def _training_data(cfg, kb):
    tests = _test_sets(cfg.test_set)
    universe = training_universe(kb, [list(t) for t in tests])
    entities = [e for e in sorted(universe) if kb.entities[e].gold_type is not None]
    entities = _featurizable(kb, entities, cfg.inputs)
    if not entities:
        raise DataError("no labelled training entities")
    y = [kb.entities[e].gold_type for e in entities]
    return entities, y


def _classifier(cfg, kb, table, seed, **overrides):
    mask = InputMask.parse(cfg.inputs)
    sizes = {"a": table.dim, "b": table.dim, "c": len(kb.taxonomy)}
    params = dict(
        architecture=cfg.architecture, inputs=cfg.inputs,
        input_dims=tuple(sizes[n] for n in mask.active),
        hidden_size=cfg.hidden_size, dropout=cfg.dropout_spec(),
        optimizer=cfg.optimizer, learning_rate=cfg.learning_rate,
        momentum=cfg.momentum, adam_beta1=cfg.adam_beta1, adam_beta2=cfg.adam_beta2,
        adam_epsilon=cfg.adam_epsilon, batch_size=cfg.batch_size,
        max_epochs=cfg.max_epochs, patience=cfg.patience,
        validation_fraction=cfg.validation_fraction, random_state=seed,
        classes=list(kb.taxonomy.types))
    params.update(overrides)
    return NeuTypeClassifier(**params)


# -- subcommands ----------------------------------------------------------------

def cmd_ingest(cfg, args):
    _require(cfg, "output")
    paths, roles = [], []
    for role in ("ontology", "types", "abstracts", "links"):
        for p in getattr(args, role) or []:
            paths.append(p)
            roles.append(role)
    kb = ingest_dump(paths, roles, closure=cfg.closure)
    digest = kb.save(cfg.output)
    for path, stats in kb.ingest_stats.items():
        print(f"{path}\tlines={stats['lines']}\tparsed={stats['parsed']}\t"
              f"skipped={stats['skipped']}\tblank_or_comment={stats['blank_or_comment']}")
    print(f"entities={len(kb.entities)}\ttypes={len(kb.taxonomy)}\th={kb.taxonomy.h}")
    print(f"kb_hash\t{digest}")


def cmd_sample(cfg, args):
    _require(cfg, "output")
    kb = _load_kb(cfg)
    exclude = set()
    for t in _test_sets(cfg.exclude):
        exclude.update(t)
    required = None
    if cfg.baseline_predictions:
        required = frozenset(read_predictions(cfg.baseline_predictions))
    config = SamplerConfig(m=cfg.m, total=cfg.total,
                           reserve_for_training=cfg.reserve_for_training,
                           seed=cfg.seed, require_description=cfg.require_description,
                           required_entities=required)
    result = sample_test_set(kb, config, exclude=exclude)
    write_test_set(cfg.output, result.entities, result.gold)
    reserved_path = cfg.output + ".reserved"
    Path(reserved_path).write_text("".join(e + "\n" for e in result.reserved_training),
                                   encoding="utf-8")
    for t, n in result.branch_counts.items():
        print(f"branch\t{t}\t{n}")
    print(f"test_entities\t{len(result)}\treserved\t{len(result.reserved_training)}")


def cmd_featurize(cfg, args):
    kb = _load_kb(cfg)
    table = _load_table(cfg)
    mask = InputMask.parse(cfg.inputs)
    if cfg.test_set:
        entities = [e for t in _test_sets(cfg.test_set) for e in t]
    else:
        entities = kb.typed_entities()
    entities = _featurizable(kb, entities, mask)
    featurizer = EntityFeaturizer(kb, table, mask, cfg.normalize_c).fit()
    bundles = featurizer.bundles(entities)
    dims = (table.dim, table.dim, len(kb.taxonomy))
    if cfg.output:
        out = Path(cfg.output)
    else:
        out = cache_dir() / (cache_key(kb.content_hash(), table.content_hash(), mask,
                                       cfg.normalize_c) + ".ntfc")
        out.parent.mkdir(parents=True, exist_ok=True)
    write_feature_cache(out, bundles, dims)
    print(f"features\t{len(bundles)}\t{out}")


def cmd_train(cfg, args):
    _require(cfg, "output")
    kb = _load_kb(cfg)
    table = _load_table(cfg)
    entities, y = _training_data(cfg, kb)
    X = _features(cfg, kb, table, entities, cfg.inputs)
    out = Path(cfg.output)
    out.mkdir(parents=True, exist_ok=True)
    tax_hash = kb.taxonomy.content_hash()
    manifest = ["run\tseed\tbest_epoch\tepochs\tbest_val_loss\tcheckpoint"]
    for run, seed in enumerate(cfg.seed_list(), start=1):
        clf = _classifier(cfg, kb, table, seed).fit(X, y)
        ckpt = out / f"run{run}.ntyp"
        clf.save(ckpt, tax_hash)
        (out / f"run{run}.log.tsv").write_text(clf.history_.to_tsv(), encoding="utf-8")
        manifest.append(f"{run}\t{seed}\t{clf.best_epoch_}\t{clf.n_epochs_}\t"
                        f"{clf.history_.best_val_loss:.6f}\t{ckpt.name}")
        print(f"run {run} (seed {seed}): best epoch {clf.best_epoch_}, "
              f"{clf.n_epochs_} epochs, val loss {clf.history_.best_val_loss:.4f} -> {ckpt}")
    (out / "manifest.tsv").write_text("\n".join(manifest) + "\n", encoding="utf-8")


def cmd_predict(cfg, args):
    _require(cfg, "checkpoint", "test_set", "output")
    kb = _load_kb(cfg)
    table = _load_table(cfg)
    checkpoints = split_list(cfg.checkpoint)
    entities = [e for t in _test_sets(cfg.test_set) for e in t]
    classes = np.asarray(kb.taxonomy.types)
    tax_hash = kb.taxonomy.content_hash()
    outputs = [Path(cfg.output)] if len(checkpoints) == 1 else \
        [Path(cfg.output) / (Path(c).stem + ".tsv") for c in checkpoints]
    if len(checkpoints) > 1:
        Path(cfg.output).mkdir(parents=True, exist_ok=True)
    for ckpt, out in zip(checkpoints, outputs):
        clf = NeuTypeClassifier.load(ckpt, classes, expected_taxonomy_hash=tax_hash)
        mask = clf.topology_.mask
        usable = _featurizable(kb, entities, mask)
        if len(usable) < len(entities):
            logger.warning("%d entities lack a description and get no prediction",
                           len(entities) - len(usable))
        rankings = {}
        if usable:
            probs = clf.predict_proba(_features(cfg, kb, table, usable, mask))
            for e, row in zip(usable, probs):
                order = np.argsort(-row, kind="stable")[:cfg.top_k]
                rankings[e] = [(classes[i], float(row[i])) for i in order]
        write_predictions(out, rankings)
        print(f"predictions\t{len(rankings)}\t{out}")


def cmd_baseline_sdtype(cfg, args):
    _require(cfg, "test_set", "output")
    kb = _load_kb(cfg)
    entities = [e for t in _test_sets(cfg.test_set) for e in t]
    model = SDTypePredictor(kb).fit(exclude=entities)
    rankings = {e: model.rank(e)[:cfg.top_k] for e in entities}
    write_predictions(cfg.output, rankings)
    covered = sum(1 for r in rankings.values() if r)
    print(f"predictions\t{covered}/{len(entities)}\t{cfg.output}")


def cmd_baseline_bm25(cfg, args):
    _require(cfg, "test_set", "output")
    kb = _load_kb(cfg)
    entities = [e for t in _test_sets(cfg.test_set) for e in t]
    corpus = {e: kb.entities[e].description for e in entities
              if e in kb.entities and kb.entities[e].description is not None}
    model = BM25TypeRanker(kb.taxonomy, cfg.k1, cfg.b).fit(corpus)
    rankings = {e: model.rank(e)[:cfg.top_k] for e in corpus}
    write_predictions(cfg.output, rankings)
    print(f"predictions\t{len(rankings)}/{len(entities)}\t{cfg.output}")


def cmd_evaluate(cfg, args):
    _require(cfg, "test_set", "predictions")
    kb = _load_kb(cfg)
    gold = {}
    for t in _test_sets(cfg.test_set):
        gold.update(t)
    mode = GainMode(cfg.mode, max(kb.taxonomy.h, 1), cfg.gain_base)
    scores = [ndcg_at_1(read_predictions(p), gold, mode, kb.taxonomy)
              for p in split_list(cfg.predictions)]
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        mean, s = aggregate_runs(scores)
    print(f"mode\t{cfg.mode}\truns\t{len(scores)}\tndcg@1\t{mean:.4f}\ts\t{s:.4f}")
    for i, sc in enumerate(scores, start=1):
        print(f"run\t{i}\t{sc:.6f}")
    if cfg.output:
        import json
        Path(cfg.output).write_text(json.dumps(
            {"mode": cfg.mode, "ndcg_at_1": mean, "s": s, "runs": scores},
            sort_keys=True) + "\n", encoding="utf-8")


def sweep_grid() -> list[dict]:
    """No-dropout arm: every optimizer with the coarse and fine learning rates."""
    grid = []
    for opt in SWEEP_OPTIMIZERS:
        for arm, rates in (("coarse", COARSE_LEARNING_RATES), ("fine", FINE_LEARNING_RATES)):
            for lr in rates:
                grid.append({"arm": arm, "optimizer": opt, "learning_rate": lr,
                             "dropout": ()})
    return grid


def dropout_grid(best: dict) -> list[dict]:
    return [{"arm": "dropout", "optimizer": best["optimizer"],
             "learning_rate": best["learning_rate"], "dropout": ((pos, p),)}
            for pos in SWEEP_DROPOUT_POSITIONS for p in SWEEP_DROPOUT_RATES]


def cmd_sweep(cfg, args):
    _require(cfg, "output")
    kb = _load_kb(cfg)
    table = _load_table(cfg)
    entities, y = _training_data(cfg, kb)
    X = _features(cfg, kb, table, entities, cfg.inputs)

    def run(setting):
        clf = _classifier(cfg, kb, table, cfg.seed, optimizer=setting["optimizer"],
                          learning_rate=setting["learning_rate"],
                          dropout=setting["dropout"]).fit(X, y)
        res = dict(setting, val_loss=clf.history_.best_val_loss,
                   best_epoch=clf.best_epoch_, epochs=clf.n_epochs_)
        logger.info("%s", res)
        return res

    results = [run(s) for s in sweep_grid()]
    best = min(results, key=lambda r: r["val_loss"])
    results += [run(s) for s in dropout_grid(best)]
    ranked = sorted(enumerate(results), key=lambda ir: (ir[1]["val_loss"], ir[0]))
    lines = ["rank\tarm\toptimizer\tlearning_rate\tdropout\tval_loss\tbest_epoch\tepochs"]
    for rank, (_, r) in enumerate(ranked, start=1):
        drop = ",".join(f"{pos}:{p}" for pos, p in r["dropout"]) or "none"
        lines.append(f"{rank}\t{r['arm']}\t{r['optimizer']}\t{r['learning_rate']}\t"
                     f"{drop}\t{r['val_loss']:.6f}\t{r['best_epoch']}\t{r['epochs']}")
    Path(cfg.output).write_text("\n".join(lines) + "\n", encoding="utf-8")
    print(f"sweep\t{len(results)} settings\tbest\t{lines[1]}")


def cmd_report(cfg, args):
    _require(cfg, "test_set")
    kb = _load_kb(cfg)
    gold = {}
    for t in _test_sets(cfg.test_set):
        gold.update(t)
    systems = {}
    for spec in args.system or []:
        name, sep, files = spec.partition("=")
        if not sep or not files:
            raise ConfigError(f"--system expects NAME=pred1.tsv[,pred2.tsv...], got {spec!r}")
        systems[name] = [read_predictions(p) for p in split_list(files)]
    if not systems:
        raise ConfigError("report needs at least one --system")
    pairs = []
    for spec in args.pair or []:
        a, sep, b = spec.partition(":")
        if not sep or a not in systems or b not in systems:
            raise ConfigError(f"--pair expects SYSTEM:SYSTEM of known systems, got {spec!r}")
        pairs.append((a, b))
    baseline = cfg.baseline if cfg.baseline in systems else None
    report = build_report(systems, gold, kb.taxonomy, baseline=baseline, pairs=pairs,
                          pairing=cfg.pairing, base=cfg.gain_base)
    table = report.to_table()
    if cfg.output:
        Path(cfg.output).write_text(table, encoding="utf-8")
        Path(cfg.output + ".jsonl").write_text(report.to_jsonl(), encoding="utf-8")
    sys.stdout.write(table)


def cmd_synthesize(cfg, args):
    _require(cfg, "output")
    data = make_synthetic_kb(n_entities=cfg.n_entities, links=cfg.link_regime,
                             seed=cfg.seed, dim=cfg.dim)
    for role, path in data.write(cfg.output).items():
        print(f"{role}\t{path}")


COMMANDS = {
    "ingest": (cmd_ingest, "parse N-Triples dumps into a serialized knowledge base"),
    "sample": (cmd_sample, "draw a balanced test set"),
    "featurize": (cmd_featurize, "write input components to a feature cache file"),
    "train": (cmd_train, "train seeded runs and store one checkpoint per run"),
    "predict": (cmd_predict, "predict types with a checkpoint"),
    "baseline-sdtype": (cmd_baseline_sdtype, "link-statistics weighted-voting baseline"),
    "baseline-bm25": (cmd_baseline_bm25, "BM25 type-label retrieval baseline"),
    "evaluate": (cmd_evaluate, "NDCG@1 of prediction files"),
    "sweep": (cmd_sweep, "learning-rate / optimizer / dropout grid search"),
    "report": (cmd_report, "comparison table with significance tests"),
    "synthesize": (cmd_synthesize, "write a synthetic KB dump and word vectors"),
}

_ALIASES = {"architecture": ["--arch"], "output": ["-o"]}


def build_parser() -> argparse.ArgumentParser:
    epilog = "config keys (key = default):\n" + ExperimentConfig.defaults_text()
    parser = _Parser(prog="neutype", description="Entity type prediction toolkit.",
                     epilog=epilog, formatter_class=argparse.RawDescriptionHelpFormatter)
    parser.add_argument("--version", action="version", version=f"neutype {__version__}")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)
    defaults = ExperimentConfig()
    from dataclasses import fields
    for name, (_, help_text) in COMMANDS.items():
        p = sub.add_parser(name, help=help_text, description=help_text, epilog=epilog,
                           formatter_class=argparse.RawDescriptionHelpFormatter)
        p.add_argument("--config", help="key = value settings file")
        p.add_argument("-v", "--verbose", action="count", default=0)
        if name == "ingest":
            for role in ("ontology", "types", "abstracts", "links"):
                p.add_argument(f"--{role}", action="append", metavar="FILE",
                               help=f"N-Triples file with role '{role}' (repeatable)")
        if name == "report":
            p.add_argument("--system", action="append", metavar="NAME=FILES",
                           help="system name and its per-run prediction files")
            p.add_argument("--pair", action="append", metavar="A:B",
                           help="extra pair of systems to test for significance")
        group = p.add_argument_group("config keys")
        for f in fields(ExperimentConfig):
            flags = ["--" + f.name.replace("_", "-")] + _ALIASES.get(f.name, [])
            if "_" in f.name:
                flags.append("--" + f.name)
            group.add_argument(*flags, dest="cfg_" + f.name, default=None, metavar="V",
                               help=f"{f.metadata['help']} (default: "
                                    f"{getattr(defaults, f.name)!r})")
    return parser


def main(argv=None) -> int:
    try:
        parser = build_parser()
        args = parser.parse_args(argv)
        logging.basicConfig(level=logging.WARNING - 10 * min(args.verbose, 2),
                            format="%(levelname)s %(name)s: %(message)s")
        cfg = ExperimentConfig()
        if args.config:
            cfg = cfg.update(read_config_file(args.config))
        flags = {k[4:]: v for k, v in vars(args).items()
                 if k.startswith("cfg_") and v is not None}
        cfg = cfg.update(flags)
        COMMANDS[args.command][0](cfg, args)
        return 0
    except ConfigError as exc:
        print(f"neutype: configuration error: {exc}", file=sys.stderr)
        return 1
    except (DataError, NeuTypeError) as exc:
        print(f"neutype: data error: {exc}", file=sys.stderr)
        return 2
    except OSError as exc:
        print(f"neutype: data error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
