"""Hand-written annotated programs used by the Hoare campaign and the CLI."""

from __future__ import annotations

from importlib import resources

from ..parser import Triple, parse_triple


def names() -> list[str]:
    return sorted(p.name[:-4] for p in resources.files(__name__).iterdir() if p.name.endswith(".imp"))


def source(name: str) -> str:
    return resources.files(__name__).joinpath(name + ".imp").read_text(encoding="utf-8")


def load(name: str) -> Triple:
    return parse_triple(source(name))


def load_corpus() -> list[tuple[str, Triple]]:
    return [(n, load(n)) for n in names()]
