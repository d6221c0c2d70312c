"""Tab-separated test-set and prediction files."""

from __future__ import annotations

from pathlib import Path

from .exceptions import DataError


def _read_rows(path, min_cols):
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise DataError(f"cannot read {path}: {exc}") from exc
    for lineno, line in enumerate(text.splitlines(), start=1):
        if not line.strip() or line.startswith("#"):
            continue
        cols = line.split("\t")
        if len(cols) < min_cols:
            raise DataError(f"{path}:{lineno}: expected {min_cols} tab-separated columns")
        yield lineno, cols


def write_test_set(path, entities, gold) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for e in entities:
            fh.write(f"{e}\t{gold.get(e) or ''}\n")


def read_test_set(path) -> dict:
    """Entity -> gold type IRI (``None`` when the column is empty), file order kept."""
    return {cols[0]: (cols[1] or None) if len(cols) > 1 else None
            for _, cols in _read_rows(path, 1)}


def write_predictions(path, rankings) -> None:
    """``rankings`` maps entity -> list of (type, score), best first.

    Lines are ``entity<TAB>rank<TAB>type<TAB>score``; an empty ranking
    writes nothing for that entity.
    """
    with open(path, "w", encoding="utf-8") as fh:
        for e, ranking in rankings.items():
            for rank, (t, score) in enumerate(ranking, start=1):
                fh.write(f"{e}\t{rank}\t{t}\t{score:.10g}\n")


def read_predictions(path) -> dict:
    """Entity -> top-ranked type."""
    best = {}
    for lineno, cols in _read_rows(path, 4):
        e, rank, t = cols[0], cols[1], cols[2]
        try:
            rank = int(rank)
        except ValueError:
            raise DataError(f"{path}:{lineno}: rank {rank!r} is not an integer") from None
        if e not in best or rank < best[e][0]:
            best[e] = (rank, t)
    return {e: t for e, (_, t) in best.items()}
