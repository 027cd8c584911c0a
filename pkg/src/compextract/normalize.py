"""Canonicalization, quarantine and envelope merging of extracted rows."""
from __future__ import annotations

import re
from dataclasses import dataclass
from enum import Enum
from itertools import groupby
from typing import FrozenSet, Iterable, List, Tuple

from .errors import NormalizationError
from .intervals import Interval, envelope, length
from .parse import Flag, RawRecord, parse_weight


class Unit(str, Enum):
    PERCENT = "percent"
    PPM = "ppm"
    PPB = "ppb"


_UNIT_ALIASES = {
    "percent": Unit.PERCENT, "%": Unit.PERCENT, "wt%": Unit.PERCENT, "wt.%": Unit.PERCENT,
    "ppm": Unit.PPM,
    "ppb": Unit.PPB,
}

ELEMENTS = (
    "H He Li Be B C N O F Ne Na Mg Al Si P S Cl Ar K Ca Sc Ti V Cr Mn Fe Co Ni Cu Zn "
    "Ga Ge As Se Br Kr Rb Sr Y Zr Nb Mo Tc Ru Rh Pd Ag Cd In Sn Sb Te I Xe Cs Ba La Ce "
    "Pr Nd Pm Sm Eu Gd Tb Dy Ho Er Tm Yb Lu Hf Ta W Re Os Ir Pt Au Hg Tl Pb Bi Po At Rn "
    "Fr Ra Ac Th Pa U Np Pu Am Cm Bk Cf Es Fm Md No Lr Rf Db Sg Bh Hs Mt Ds Rg Cn Nh Fl "
    "Mc Lv Ts Og"
).split()

# Oxides reported in lunar major-element tables.
OXIDES = (
    "SiO2", "TiO2", "Al2O3", "Cr2O3", "FeO", "Fe2O3", "MnO", "MgO", "CaO", "Na2O",
    "K2O", "P2O5", "NiO", "BaO", "SrO", "ZrO2", "V2O3", "CoO", "H2O", "CO2", "SO3",
)

# Oxides take priority over elements on a case-folded clash (e.g. "co" is
# cobalt, "coo" is cobalt oxide, never ambiguous with the list above).
_CANONICAL = {e.lower(): e for e in ELEMENTS}
_CANONICAL.update({o.lower(): o for o in OXIDES})

_SUBSCRIPTS = str.maketrans("₀₁₂₃₄₅₆₇₈₉", "0123456789")
_NON_DIGIT = re.compile(r"\D+")


@dataclass(frozen=True)
class CompositionRecord:
    compound: str
    sample_id: str
    interval: Interval
    unit: Unit
    provenance: Tuple[Tuple[str, int], ...]
    flags: FrozenSet[str] = frozenset()
    # longest interval among the un-merged source rows; keeps the wide-merge
    # test independent of merge order
    widest_source: float = -1.0

    def __post_init__(self):
        if not re.fullmatch(r"[0-9]+", self.sample_id):
            raise ValueError(f"sample_id {self.sample_id!r} is not all digits")
        if not self.provenance:
            raise ValueError("provenance must be non-empty")
        object.__setattr__(self, "provenance", tuple(sorted(set(self.provenance))))
        # plain strings: str-Enum members hash by name, not value
        object.__setattr__(self, "flags", frozenset(f.value if isinstance(f, Flag) else f
                                                    for f in self.flags))
        if self.widest_source < 0:
            object.__setattr__(self, "widest_source", length(self.interval))

    @property
    def key(self) -> Tuple[str, str, Unit]:
        return (self.sample_id, self.compound, self.unit)

    def sort_key(self):
        return (self.sample_id, self.compound, self.unit.value)


def normalize_sample_id(raw: str) -> Tuple[str, str]:
    """Drop every non-digit character, e.g. phase labels glued onto the id.

    Returns (sample_id, raw).
    """
    digits = _NON_DIGIT.sub("", raw)
    if not digits:
        raise NormalizationError("unidentifiable-sample", f"no digits in sample id {raw!r}")
    return digits, raw


def canonicalize_compound(raw: str) -> Tuple[str, bool]:
    """Map case/subscript variants to a canonical oxide or element symbol.

    Unknown names (typically minerals) pass through unchanged with the
    suspect flag set.
    """
    name = raw.strip()
    key = re.sub(r"\s+", "", name.translate(_SUBSCRIPTS)).lower()
    if key in _CANONICAL:
        return _CANONICAL[key], False
    return name, True


def normalize_unit(raw: str) -> Unit:
    key = re.sub(r"\s+", "", raw).lower()
    try:
        return _UNIT_ALIASES[key]
    except KeyError:
        raise NormalizationError("unit", f"unrecognized unit {raw!r}") from None


@dataclass(frozen=True)
class Quarantined:
    raw: RawRecord
    reason: str
    message: str


def normalize_raw(rec: RawRecord) -> CompositionRecord:
    sample_id, _ = normalize_sample_id(rec.sample_raw)
    compound, suspect = canonicalize_compound(rec.compound_raw)
    unit = normalize_unit(rec.unit_raw)
    try:
        interval, flags = parse_weight(rec.weight_raw)
    except ValueError as exc:
        raise NormalizationError("weight", str(exc)) from exc
    if suspect:
        flags = flags | {Flag.SUSPECT_COMPOUND}
    return CompositionRecord(compound, sample_id, interval, unit,
                             ((rec.provenance.doc_id, rec.provenance.chunk_index),),
                             frozenset(f.value for f in flags))


def normalize_records(raws: Iterable[RawRecord]) -> Tuple[List[CompositionRecord], List[Quarantined]]:
    good, bad = [], []
    for rec in raws:
        try:
            good.append(normalize_raw(rec))
        except NormalizationError as exc:
            bad.append(Quarantined(rec, exc.reason, str(exc)))
    return good, bad


def merge_group(group: List[CompositionRecord], wide_factor: float = 5.0) -> CompositionRecord:
    """Envelope-merge records sharing one (sample_id, compound, unit) key."""
    first = group[0]
    if any(r.key != first.key for r in group):
        raise ValueError("merge_group needs records with a single key")
    env = envelope(*(r.interval for r in group))
    widest = max(r.widest_source for r in group)
    flags = set().union(*(r.flags for r in group)) - {Flag.WIDE_MERGE.value}
    if length(env) > wide_factor * widest:
        flags.add(Flag.WIDE_MERGE.value)
    provenance = tuple(p for r in group for p in r.provenance)
    return CompositionRecord(first.compound, first.sample_id, env, first.unit,
                             provenance, frozenset(flags), widest)


def dedupe_and_merge(records: Iterable[CompositionRecord], wide_factor: float = 5.0
                     ) -> List[CompositionRecord]:
    """Collapse duplicates and merge conflicting intervals to their envelope.

    Output is sorted by (sample_id, compound, unit) with unique keys.
    """
    ordered = sorted(records, key=CompositionRecord.sort_key)
    return [merge_group(list(g), wide_factor)
            for _, g in groupby(ordered, key=CompositionRecord.sort_key)]


def filter_units(records, unit: Unit):
    return [r for r in records if r.unit is unit]
