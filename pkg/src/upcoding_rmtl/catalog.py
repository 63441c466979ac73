"""HCC catalog, competing-event hierarchy and severity sets.

The bundled catalog is the CMS-HCC version 28 list (115 categories) with, for
each category, the lower-severity categories that cannot be billed alongside it.
"""

from __future__ import annotations

import csv
import io
from dataclasses import dataclass, field
from graphlib import CycleError, TopologicalSorter
from importlib import resources
from pathlib import Path
from typing import Iterable, Mapping

__all__ = [
    "CatalogError",
    "HccEntry",
    "HccCatalog",
    "SeveritySet",
    "load_catalog",
    "dump_catalog",
    "severity_set_of",
]

BUNDLED_CATALOG = "v28_catalog.csv"


class CatalogError(ValueError):
    """Raised for malformed catalog files or hierarchy violations."""


@dataclass(frozen=True)
class HccEntry:
    hcc: int
    description: str
    competing: tuple[int, ...] = ()


@dataclass(frozen=True)
class SeveritySet:
    """Mutually exclusive HCCs of one condition, least severe first.

    ``members[0]`` is subtype ``s = 1`` and ``members[-1]`` is ``s = k``.
    """

    members: tuple[int, ...]

    def __post_init__(self):
        if len(self.members) < 1:
            raise CatalogError("a severity set needs at least one member")
        if len(set(self.members)) != len(self.members):
            raise CatalogError(f"duplicate members in severity set {self.members}")

    @property
    def k(self) -> int:
        return len(self.members)

    def index(self, hcc: int) -> int:
        """1-based severity index of ``hcc`` within the set."""
        try:
            return self.members.index(int(hcc)) + 1
        except ValueError:
            raise KeyError(f"HCC{hcc} is not in severity set {self.members}") from None

    def __contains__(self, hcc) -> bool:
        return int(hcc) in self.members

    def __iter__(self):
        return iter(self.members)

    def __len__(self):
        return len(self.members)


@dataclass(frozen=True)
class HccCatalog:
    entries: Mapping[int, HccEntry]
    _components: tuple[frozenset, ...] = field(default=(), repr=False, compare=False)

    def __post_init__(self):
        _validate_hierarchy(self.entries)
        object.__setattr__(self, "_components", _components(self.entries))

    def __contains__(self, hcc) -> bool:
        return int(hcc) in self.entries

    def __len__(self) -> int:
        return len(self.entries)

    def __iter__(self):
        return iter(sorted(self.entries))

    def __getitem__(self, hcc) -> HccEntry:
        try:
            return self.entries[int(hcc)]
        except KeyError:
            raise KeyError(f"HCC{hcc} is not in the catalog") from None

    @property
    def codes(self) -> tuple[int, ...]:
        return tuple(sorted(self.entries))

    def competing(self, hcc) -> tuple[int, ...]:
        return self[hcc].competing

    def excluded_by(self, hcc) -> frozenset[int]:
        """Every HCC that cannot be coded together with ``hcc``."""
        hcc = int(hcc)
        out = set(self[hcc].competing)
        out.update(h for h, e in self.entries.items() if hcc in e.competing)
        return frozenset(out)

    def exclusion_pairs(self) -> list[tuple[int, int]]:
        """All ``(a, b)`` with ``b`` in ``competing(a)``."""
        return [(h, c) for h in sorted(self.entries) for c in self.entries[h].competing]

    def component(self, hcc) -> frozenset[int]:
        hcc = int(hcc)
        self[hcc]
        for comp in self._components:
            if hcc in comp:
                return comp
        raise AssertionError("unreachable: every HCC has a component")

    def is_chain(self, hcc) -> bool:
        """True when ``hcc`` sits in a totally ordered severity hierarchy."""
        return _chain_order(self.component(hcc), self.entries) is not None

    def hierarchy_free(self) -> tuple[int, ...]:
        """HCCs with no competing events in either direction."""
        return tuple(h for h in self.codes if not self.excluded_by(h))

    def validate_set(self, hccs: Iterable[int]) -> None:
        """Raise if ``hccs`` names unknown HCCs or breaks an exclusion."""
        hccs = set(int(h) for h in hccs)
        unknown = hccs - set(self.entries)
        if unknown:
            raise CatalogError(f"unknown HCCs {sorted(unknown)}")
        for h in hccs:
            clash = hccs.intersection(self.entries[h].competing)
            if clash:
                raise CatalogError(f"HCC{h} cannot be coded with {sorted(clash)}")


def _validate_hierarchy(entries: Mapping[int, HccEntry]) -> None:
    for h, e in entries.items():
        if h != e.hcc:
            raise CatalogError(f"entry key {h} does not match HCC{e.hcc}")
        missing = [c for c in e.competing if c not in entries]
        if missing:
            raise CatalogError(f"HCC{h} lists unknown competing events {missing}")
        if h in e.competing:
            raise CatalogError(f"HCC{h} lists itself as a competing event")
    graph = {h: set(e.competing) for h, e in entries.items()}
    try:
        tuple(TopologicalSorter(graph).static_order())
    except CycleError as exc:
        raise CatalogError(f"cyclic competing relation: {exc.args[1]}") from None


def _components(entries: Mapping[int, HccEntry]) -> tuple[frozenset, ...]:
    parent = {h: h for h in entries}

    def find(x):
        while parent[x] != x:
            parent[x] = parent[parent[x]]
            x = parent[x]
        return x

    for h, e in entries.items():
        for c in e.competing:
            parent[find(c)] = find(h)
    groups: dict[int, set] = {}
    for h in entries:
        groups.setdefault(find(h), set()).add(h)
    return tuple(frozenset(g) for g in groups.values())


def _chain_order(component: frozenset, entries: Mapping[int, HccEntry]):
    # a chain is ordered so that competing(v_j) == {v_1, ..., v_{j-1}} exactly
    order = sorted(component, key=lambda h: len(entries[h].competing))
    for j, h in enumerate(order):
        if set(entries[h].competing) != set(order[:j]):
            return None
    return tuple(order)


def severity_set_of(catalog: HccCatalog, hcc) -> SeveritySet:
    """Ordered severity set containing ``hcc`` (least severe first).

    Only defined for HCCs in a pure severity chain, such as the dementia
    categories 127 < 126 < 125, or for HCCs without any competing events,
    which form a singleton set.

    Raises
    ------
    KeyError
        If ``hcc`` is not in the catalog.
    CatalogError
        If ``hcc`` belongs to a hierarchy that is not totally ordered.
    """
    order = _chain_order(catalog.component(hcc), catalog.entries)
    if order is None:
        raise CatalogError(
            f"HCC{hcc} belongs to a non-linear hierarchy "
            f"{sorted(catalog.component(hcc))}; no severity order is defined"
        )
    return SeveritySet(order)


def _parse(lines: Iterable[str], source: str) -> HccCatalog:
    reader = csv.reader(lines)
    header = next(reader, None)
    if header is None or [h.strip() for h in header] != ["hcc", "description", "competing"]:
        raise CatalogError(f"{source}: expected header 'hcc,description,competing'")
    entries: dict[int, HccEntry] = {}
    for row in reader:
        lineno = reader.line_num
        if not row or all(not c.strip() for c in row):
            continue
        if len(row) != 3:
            raise CatalogError(f"{source}:{lineno}: expected 3 fields, got {len(row)}")
        try:
            hcc = int(row[0].strip().upper().removeprefix("HCC"))
            competing = tuple(
                int(c.strip().upper().removeprefix("HCC"))
                for c in row[2].split(";")
                if c.strip()
            )
        except ValueError:
            raise CatalogError(f"{source}:{lineno}: non-integer HCC code in {row!r}") from None
        if hcc in entries:
            raise CatalogError(f"{source}:{lineno}: duplicate HCC{hcc}")
        entries[hcc] = HccEntry(hcc, row[1].strip(), competing)
    return HccCatalog(entries)


def load_catalog(path: str | Path | None = None) -> HccCatalog:
    """Load and validate a catalog CSV; ``None`` loads the bundled V28 table."""
    if path is None:
        text = resources.files("upcoding_rmtl.data").joinpath(BUNDLED_CATALOG).read_text()
        return _parse(io.StringIO(text), BUNDLED_CATALOG)
    with open(path, newline="") as f:
        return _parse(f, str(path))


def dump_catalog(catalog: HccCatalog, path: str | Path | None = None) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["hcc", "description", "competing"])
    for h in catalog:
        e = catalog[h]
        w.writerow([h, e.description, ";".join(str(c) for c in e.competing)])
    text = buf.getvalue()
    if path is not None:
        Path(path).write_text(text)
    return text
