"""Balanced test-set construction and the complementary training universe."""

from __future__ import annotations

import logging
from dataclasses import dataclass, field

import numpy as np

from .exceptions import ConfigError, SamplerError
from .kb import KnowledgeBase, TypeTaxonomy, local_name, most_specific_type

logger = logging.getLogger(__name__)

# Top-level type replaced by two of its children when forming branches.
DEFAULT_REPLACEMENTS = {"Agent": ("Person", "Organization")}


@dataclass(frozen=True)
class SamplerConfig:
    m: int = 10
    total: int = 1000
    reserve_for_training: bool = True
    seed: int = 0
    require_description: bool = True
    # Entities that must also have an external (baseline) prediction; None waives it.
    required_entities: frozenset | None = None

    def __post_init__(self):
        if self.m < 1:
            raise ConfigError("sampler m must be >= 1")
        if self.total < 1:
            raise ConfigError("sampler total must be >= 1")


@dataclass
class TestSet:
    entities: list = field(default_factory=list)
    gold: dict = field(default_factory=dict)
    reserved_training: list = field(default_factory=list)
    branch_counts: dict = field(default_factory=dict)

    def __len__(self):
        return len(self.entities)


def top_level_types(taxonomy: TypeTaxonomy, replacements=None) -> list[str]:
    """Depth-1 types with ``Agent`` swapped for ``Person`` and ``Organization``.

    Types are matched by local name. Missing replacements are skipped with a
    warning. Result is sorted by IRI.
    """
    if replacements is None:
        replacements = DEFAULT_REPLACEMENTS
    by_label = {}
    for t in taxonomy.types:
        by_label.setdefault(local_name(t), t)
    tops = {t for t in taxonomy.types if taxonomy.depth[t] == 1}
    for removed, added in replacements.items():
        iri = by_label.get(removed)
        if iri is None or iri not in tops:
            continue
        tops.discard(iri)
        for label in added:
            if label in by_label:
                tops.add(by_label[label])
            else:
                logger.warning("top-level replacement type %s not in taxonomy", label)
    return sorted(tops)


def branch_of(taxonomy: TypeTaxonomy, t: str, tops) -> str | None:
    tops = set(tops)
    for node in [t] + taxonomy.ancestors(t):
        if node in tops:
            return node
    return None


def eligible_entities(kb: KnowledgeBase, config: SamplerConfig, exclude=()) -> list[str]:
    exclude = set(exclude)
    out = []
    for e in kb.typed_entities():
        if e in exclude:
            continue
        if config.require_description and kb.entities[e].description is None:
            continue
        if config.required_entities is not None and e not in config.required_entities:
            continue
        out.append(e)
    return out


def sample_test_set(kb: KnowledgeBase, config: SamplerConfig = SamplerConfig(),
                    exclude=(), tops=None) -> TestSet:
    """Draw a test set balanced over the top-level branches.

    Each branch gets ``m`` entities when it has at least that many; smaller
    branches give everything to the test set, except for one entity kept
    back for training when ``reserve_for_training`` is set. The rest of the
    set is filled uniformly from the remaining eligible entities. An entity
    under several branches belongs to the first one in IRI order.

    ``exclude`` removes entities up front, e.g. another test set.
    """
    tax = kb.taxonomy
    if tops is None:
        tops = top_level_types(tax)
    tops = sorted(tops)
    if config.total < len(tops):
        raise ConfigError(f"total={config.total} is smaller than the {len(tops)} "
                          f"top-level branches")
    rng = np.random.default_rng(config.seed)
    pool = eligible_entities(kb, config, exclude)

    claimed = {t: [] for t in tops}
    for e in pool:
        branches = sorted({b for t in kb.types_of(e)
                           if (b := branch_of(tax, t, tops)) is not None})
        if branches:
            claimed[branches[0]].append(e)

    result = TestSet()
    chosen = set()
    for t in tops:
        members = claimed[t]
        if len(members) >= config.m:
            picks = [members[i] for i in sorted(rng.choice(len(members), config.m,
                                                           replace=False))]
        elif members and config.reserve_for_training:
            keep = int(rng.integers(len(members)))
            result.reserved_training.append(members[keep])
            picks = [e for i, e in enumerate(members) if i != keep]
        else:
            picks = list(members)
        result.branch_counts[t] = len(picks)
        result.entities.extend(picks)
        chosen.update(picks)

    if len(result.entities) > config.total:
        raise SamplerError(f"balanced draws already give {len(result.entities)} "
                           f"entities, more than total={config.total}")
    reserved = set(result.reserved_training)
    rest = [e for e in pool if e not in chosen and e not in reserved]
    need = config.total - len(result.entities)
    if need > len(rest):
        raise SamplerError(f"need {config.total} eligible entities but only "
                           f"{len(result.entities) + len(rest)} are available "
                           f"(short by {need - len(rest)})")
    if need:
        idx = sorted(rng.choice(len(rest), need, replace=False))
        result.entities.extend(rest[i] for i in idx)
    for e in result.entities:
        result.gold[e] = most_specific_type(kb, e)
    return result


def training_universe(kb: KnowledgeBase, test_sets) -> set[str]:
    """All typed entities minus every test set; reserved entities stay in."""
    held_out = set()
    for ts in test_sets:
        held_out.update(ts.entities if isinstance(ts, TestSet) else ts)
    return set(kb.typed_entities()) - held_out
