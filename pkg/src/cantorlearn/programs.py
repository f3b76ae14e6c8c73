"""A desk-scale registry standing in for the effective enumerations of partial
computable measures and reals.

The table is a finite list of entries plus an arithmetic padding scheme that
mints unboundedly many alias indices for each entry.  Every evaluation is
stage-bounded and monotone: knowledge intervals only shrink as the stage
grows, defined real bits never change, and disjointness verdicts never
retract.  Ground-truth totality flags and configurable flip schedules simulate
the limit-computable totality oracle.
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Callable, Optional, Sequence

from .cantor import BitSource, Bits, ClosedClass, check_bits
from .measures import (
    Interval,
    Measure,
    MeasureBall,
    MeasureView,
    Verdict,
    bernoulli_image,
    bit_source_from_spec,
    measure_from_spec,
)

ZERO = Fraction(0)
ONE = Fraction(1)

# alias indices live above every registry index; see ProgramTable.pad
PAD_BASE = 1_000_000


class WrongKindError(TypeError):
    """A real operation was applied to a measure entry or vice versa."""


class Entry:
    """Base class for table entries; subclasses document their definedness schedule."""

    kind = "measure"  # or "real"
    total: Optional[bool] = None

    def spec(self) -> dict:
        raise NotImplementedError

    # measure entries
    def knowledge(self, table: "ProgramTable", word: Bits, stage: int) -> Interval:
        raise WrongKindError(f"{type(self).__name__} is not a measure entry")

    def value_tuples(self, table: "ProgramTable", word: Bits, stage: int) -> list[Interval]:
        """The canonical enumeration's intervals for this string by this stage."""
        raise WrongKindError(f"{type(self).__name__} is not a measure entry")

    def param_interval(self, table: "ProgramTable", stage: int) -> Optional[Interval]:
        """Bernoulli parameter knowledge when the entry is product-structured."""
        return None

    def defined_length(self, table: "ProgramTable", stage: int) -> int:
        """Largest m <= stage with knowledge width <= 2^-m on all strings of length <= m."""
        return 0

    # real entries
    def real_bit(self, table: "ProgramTable", j: int, stage: int) -> Optional[int]:
        raise WrongKindError(f"{type(self).__name__} is not a real entry")


@dataclass
class ExactMeasureEntry(Entry):
    """Total measure generator: reveals exact values on strings of length <= stage - delay."""

    measure: Measure
    delay: int = 0
    kind = "measure"
    total: Optional[bool] = True

    def spec(self) -> dict:
        return {"entry": "exact-measure", "measure": self.measure.spec, "delay": self.delay}

    def knowledge(self, table, word, stage):
        if len(word) <= stage - self.delay:
            return Interval.exact(self.measure.mass(word))
        return Interval.unit()

    def value_tuples(self, table, word, stage):
        if len(word) <= stage - self.delay:
            return [Interval.exact(self.measure.mass(word))]
        return []

    def param_interval(self, table, stage):
        q = self.measure.bernoulli_param()
        return Interval.exact(q) if q is not None else None

    def defined_length(self, table, stage):
        return max(0, min(stage, stage - self.delay))


@dataclass
class EnumeratedMeasureEntry(Entry):
    """Partial measure given by an explicit stage-tagged tuple enumeration."""

    measure: Measure  # enumerated-kind Measure
    declared_total: Optional[bool] = None
    kind = "measure"

    def __post_init__(self):
        self.total = self.declared_total

    def spec(self) -> dict:
        return {"entry": "enumerated-measure", "measure": self.measure.spec}

    def knowledge(self, table, word, stage):
        return self.measure.knowledge(word, stage)

    def value_tuples(self, table, word, stage):
        return self.measure.tuples_at(word, stage)

    def defined_length(self, table, stage):
        m = 0
        while m + 1 <= stage:
            lvl = m + 1
            ok = all(
                self.measure.knowledge(format(k, f"0{n}b") if n else "", stage).width
                <= Fraction(1, 1 << lvl)
                for n in range(lvl + 1)
                for k in range(1 << n)
            )
            if not ok or (1 << lvl) > 4096:
                break
            m += 1
        return m


@dataclass
class StubEntry(Entry):
    """Diverging program: never reveals anything."""

    stub_kind: str = "measure"  # or "real"
    total: Optional[bool] = False

    def __post_init__(self):
        self.kind = self.stub_kind

    def spec(self) -> dict:
        return {"entry": "stub", "kind": self.stub_kind}

    def knowledge(self, table, word, stage):
        if self.stub_kind != "measure":
            raise WrongKindError("real stub has no measure knowledge")
        return Interval.unit()

    def value_tuples(self, table, word, stage):
        if self.stub_kind != "measure":
            raise WrongKindError("real stub has no measure knowledge")
        return []

    def real_bit(self, table, j, stage):
        if self.stub_kind != "real":
            raise WrongKindError("measure stub has no bits")
        return None

    def defined_length(self, table, stage):
        return 0


@dataclass
class RealEntry(Entry):
    """Total or partial computable real: bit j defined once stage >= j + delay."""

    source: BitSource
    delay: int = 0
    diverge_from: Optional[int] = None  # bits at positions >= this never define
    kind = "real"

    def __post_init__(self):
        self.total = self.diverge_from is None

    def spec(self) -> dict:
        out = {"entry": "real", "source": {"kind": self.source.kind, **self.source.spec}, "delay": self.delay}
        if self.diverge_from is not None:
            out["diverge_from"] = self.diverge_from
        return out

    def real_bit(self, table, j, stage):
        if self.diverge_from is not None and j >= self.diverge_from:
            return None
        if stage >= j + self.delay:
            return self.source.bit(j)
        return None


@dataclass
class BernoulliLiftEntry(Entry):
    """Measure entry computed from a real entry's bits: the Bernoulli measure
    whose parameter has that binary expansion, known at each stage to the
    parameter-interval width set by the bits defined so far.

    Parameter knowledge is capped at param_bits binary digits; every tolerance
    used in this laboratory sits far above 2^-96.
    """

    real_index: int
    param_bits: int = 96
    kind = "measure"

    def __post_init__(self):
        self._param_memo: dict[int, Interval] = {}

    def spec(self) -> dict:
        return {"entry": "bernoulli-lift", "real": self.real_index}

    def _param(self, table: "ProgramTable", stage: int) -> Interval:
        got = self._param_memo.get(stage)
        if got is not None:
            return got
        k = 0
        val = ZERO
        while k < min(stage, self.param_bits):
            b = table.eval_real(self.real_index, k, stage)
            if b is None:
                break
            val += Fraction(b, 1 << (k + 1))
            k += 1
        out = Interval(val, min(ONE, val + Fraction(1, 1 << k)))
        self._param_memo[stage] = out
        return out

    def param_interval(self, table, stage):
        return self._param(table, stage)

    def knowledge(self, table, word, stage):
        if len(word) > stage:
            return Interval.unit()
        p = self._param(table, stage)
        a = word.count("0")
        return bernoulli_image(p, a, len(word) - a)

    def value_tuples(self, table, word, stage):
        if len(word) > stage:
            return []
        return [self.knowledge(table, word, stage)]

    def defined_length(self, table, stage):
        p = self._param(table, stage)
        m = 0
        while m + 1 <= stage:
            lvl = m + 1
            wmax = max(bernoulli_image(p, a, lvl - a).width for a in range(lvl + 1))
            if wmax > Fraction(1, 1 << lvl):
                break
            m += 1
        return m

    def resolved_total(self, table: "ProgramTable") -> bool:
        return bool(table.entry(self.real_index).total)


@dataclass
class ParamLiftEntry(Entry):
    """Measure entry whose stage knowledge is the param map's ball at the
    longest defined prefix of a real entry."""

    param_map: "ParamMapLike"
    real_index: int
    kind = "measure"

    def spec(self) -> dict:
        return {"entry": "param-lift", "map": self.param_map.name, "real": self.real_index}

    def _prefix(self, table: "ProgramTable", stage: int) -> Bits:
        bits = []
        for j in range(stage):
            b = table.eval_real(self.real_index, j, stage)
            if b is None:
                break
            bits.append(str(b))
        return "".join(bits)

    def _ball(self, table: "ProgramTable", stage: int) -> MeasureBall:
        return self.param_map.star(self._prefix(table, stage))

    def knowledge(self, table, word, stage):
        if len(word) > stage:
            return Interval.unit()
        ball = self._ball(table, stage)
        out = Interval.unit()
        sup = ball.sup_mass(word)
        inf = getattr(ball, "inf_mass", None)
        lo = inf(word) if inf is not None else ZERO
        return Interval(lo, min(ONE, sup))

    def value_tuples(self, table, word, stage):
        if len(word) > stage:
            return []
        return [self.knowledge(table, word, stage)]

    def param_interval(self, table, stage):
        ball = self._ball(table, stage)
        if isinstance(ball, MeasureBall) and hasattr(ball, "param"):
            return ball.param
        return None

    def defined_length(self, table, stage):
        p = self.param_interval(table, stage)
        if p is None:
            return 0
        m = 0
        while m + 1 <= stage:
            lvl = m + 1
            wmax = max(bernoulli_image(p, a, lvl - a).width for a in range(lvl + 1))
            if wmax > Fraction(1, 1 << lvl):
                break
            m += 1
        return m


class ParamMapLike:
    """Minimal protocol the table needs from a parametrization map."""

    name: str
    domain: ClosedClass

    def star(self, word: Bits) -> MeasureBall:
        raise NotImplementedError

    def score_ball(self, word: Bits, depth: int) -> MeasureBall:
        raise NotImplementedError


@dataclass
class InverseLiftEntry(Entry):
    """Real entry emitting the longest common prefix of the parameter
    candidates not yet pruned against a measure entry's knowledge.

    Candidates of depth min(stage, cap) alive in the domain class survive
    unless their star ball is provably disjoint from the measure's stage
    knowledge; pruning only shrinks the survivor cone, so emitted bits are
    stable.  With no survivors the entry diverges past the last stable prefix.
    """

    param_map: ParamMapLike
    domain: ClosedClass
    measure_index: int
    depth_cap: int = 64
    frontier_cap: int = 512
    kind = "real"
    total: Optional[bool] = None

    def __post_init__(self):
        self._lcp_memo: dict[int, Bits] = {}

    def spec(self) -> dict:
        return {
            "entry": "inverse-lift",
            "map": self.param_map.name,
            "domain": self.domain.name,
            "measure": self.measure_index,
        }

    def _lcp(self, table: "ProgramTable", stage: int) -> Bits:
        got = self._lcp_memo.get(stage)
        if got is not None:
            return got
        view = table.view(self.measure_index)
        depth = min(stage, self.depth_cap)
        frontier: list[Bits] = [""]
        lcp = ""
        for _ in range(depth):
            nxt: list[Bits] = []
            overflow = False
            for w in frontier:
                for ch in "01":
                    cand = w + ch
                    if not self.domain.alive(cand, stage):
                        continue
                    if self.param_map.star(cand).contains(view, stage) == Verdict.NO:
                        continue
                    nxt.append(cand)
                    if len(nxt) > self.frontier_cap:
                        overflow = True
                        break
                if overflow:
                    break
            if overflow or not nxt:
                break
            frontier = nxt
            common = frontier[0]
            for w in frontier[1:]:
                k = 0
                while k < len(common) and common[k] == w[k]:
                    k += 1
                common = common[:k]
            lcp = common
        self._lcp_memo[stage] = lcp
        return lcp

    def real_bit(self, table, j, stage):
        lcp = self._lcp(table, stage)
        return int(lcp[j]) if j < len(lcp) else None


@dataclass
class AliasEntry(Entry):
    """Explicit registry alias of another entry (padding also exists arithmetically)."""

    base: int
    kind = "measure"  # adjusted on resolve; evaluation always delegates

    def spec(self) -> dict:
        return {"entry": "alias", "base": self.base}


ORACLE_FLIP_PERIOD = 2


@dataclass
class ProgramTable:
    """Finite registry of entries with arithmetic padding aliases.

    Base indices are positions in the registry; indices >= PAD_BASE encode
    pad(i, j) via the Cantor pairing, so alias allocation is order-free and
    deterministic.
    """

    entries: list[Entry] = field(default_factory=list)
    flip_schedules: dict[int, int] = field(default_factory=dict)  # index -> horizon
    _memo: dict = field(default_factory=dict)

    def add(self, entry: Entry) -> int:
        if len(self.entries) + 1 >= PAD_BASE:
            raise OverflowError("registry grew into the padding index space")
        self.entries.append(entry)
        return len(self.entries) - 1

    # -- index resolution ---------------------------------------------------

    def pad(self, i: int, j: int) -> int:
        """Alias index for (i, j): same object as i, strictly increasing in j."""
        if i < 0 or j < 0:
            raise IndexError("pad arguments must be nonnegative")
        z = (i + j) * (i + j + 1) // 2 + i
        return PAD_BASE + z

    def resolve(self, e: int) -> int:
        """Follow padding and registry aliases to the base registry index."""
        seen = set()
        while True:
            if e in seen:
                raise ValueError(f"alias cycle at {e}")
            seen.add(e)
            if e >= PAD_BASE:
                z = e - PAD_BASE
                w = int(((8 * z + 1) ** 0.5 - 1) // 2)
                while (w + 1) * (w + 2) // 2 <= z:
                    w += 1
                while w * (w + 1) // 2 > z:
                    w -= 1
                i = z - w * (w + 1) // 2
                e = i
                continue
            entry = self.entry_raw(e)
            if isinstance(entry, AliasEntry):
                e = entry.base
                continue
            return e

    def entry_raw(self, e: int) -> Entry:
        if not 0 <= e < len(self.entries):
            raise IndexError(f"index {e} not in table")
        return self.entries[e]

    def entry(self, e: int) -> Entry:
        return self.entry_raw(self.resolve(e))

    def __len__(self) -> int:
        return len(self.entries)

    # -- evaluation ---------------------------------------------------------

    def eval_measure(self, e: int, word: Bits, stage: int) -> Interval:
        check_bits(word)
        return self.entry(e).knowledge(self, word, stage)

    def value_tuples(self, e: int, word: Bits, stage: int) -> list[Interval]:
        return self.entry(e).value_tuples(self, word, stage)

    def eval_real(self, e: int, j: int, stage: int) -> Optional[int]:
        entry = self.entry(e)
        if entry.kind != "real":
            raise WrongKindError(f"entry {e} is not a real")
        return entry.real_bit(self, j, stage)

    def real_prefix(self, e: int, n: int, stage: int) -> Bits:
        bits = []
        for j in range(n):
            b = self.eval_real(e, j, stage)
            if b is None:
                break
            bits.append(str(b))
        return "".join(bits)

    def defined_length(self, e: int, stage: int) -> int:
        return self.entry(e).defined_length(self, stage)

    def view(self, e: int) -> "EntryView":
        return EntryView(self, e)

    def is_total(self, e: int) -> bool:
        entry = self.entry(e)
        if isinstance(entry, BernoulliLiftEntry):
            return entry.resolved_total(self)
        return bool(entry.total)

    # -- lifts (memoized allocation) -----------------------------------------

    def bernoulli_lift(self, e: int) -> int:
        key = ("bernoulli-lift", self.resolve(e))
        if key not in self._memo:
            self._memo[key] = self.add(BernoulliLiftEntry(real_index=e))
        return self._memo[key]

    def param_lift(self, f: ParamMapLike, e: int) -> int:
        key = ("param-lift", f.name, self.resolve(e))
        if key not in self._memo:
            self._memo[key] = self.add(ParamLiftEntry(param_map=f, real_index=e))
        return self._memo[key]

    def inverse_lift(self, f: ParamMapLike, d: ClosedClass, e: int) -> int:
        key = ("inverse-lift", f.name, d.name, self.resolve(e))
        if key not in self._memo:
            self._memo[key] = self.add(
                InverseLiftEntry(param_map=f, domain=d, measure_index=e)
            )
        return self._memo[key]

    # -- oracles ---------------------------------------------------------------

    def totality_oracle(self, e: int, stage: int) -> int:
        """Limit approximation of the entry's ground-truth totality.

        Below a configured flip horizon the value alternates with the stage
        parity; at and beyond the horizon it equals the ground truth.
        """
        truth = 1 if self.is_total(e) else 0
        horizon = self.flip_schedules.get(e)
        if horizon is not None and stage < horizon:
            return truth if stage % ORACLE_FLIP_PERIOD == 0 else 1 - truth
        return truth

    def measures_equal(self, e1: int, e2: int, depth: int, stage: int) -> Verdict:
        if self.resolve(e1) == self.resolve(e2):
            return Verdict.YES
        tol_w = Fraction(1, 1 << (depth + 2))
        tol_mid = Fraction(1, 1 << (depth + 1))
        all_tight = True
        for n in range(depth + 1):
            for k in range(1 << n):
                w = format(k, f"0{n}b") if n else ""
                i1 = self.eval_measure(e1, w, stage)
                i2 = self.eval_measure(e2, w, stage)
                if i1.disjoint(i2):
                    return Verdict.NO
                if i1.width > tol_w or i2.width > tol_w:
                    all_tight = False
                elif abs(i1.midpoint - i2.midpoint) > tol_mid:
                    all_tight = False
        return Verdict.YES if all_tight else Verdict.UNKNOWN

    # -- manifest ----------------------------------------------------------------

    def manifest(self) -> dict:
        return {
            "entries": [ent.spec() for ent in self.entries],
            "flip_schedules": {str(k): v for k, v in sorted(self.flip_schedules.items())},
        }

    def manifest_hash(self) -> str:
        blob = json.dumps(self.manifest(), sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(blob.encode()).hexdigest()


class EntryView(MeasureView):
    """Adapter exposing a table entry's stage knowledge to ball membership checks."""

    def __init__(self, table: ProgramTable, index: int):
        self.table = table
        self.index = index

    def knowledge(self, word: Bits, stage: int) -> Interval:
        return self.table.eval_measure(self.index, word, stage)

    def param_interval(self, stage: int) -> Optional[Interval]:
        return self.table.entry(self.index).param_interval(self.table, stage)


# ---------------------------------------------------------------------------
# manifest-driven construction


def entry_from_spec(spec: dict) -> Entry:
    kind = spec.get("entry")
    if kind == "exact-measure":
        return ExactMeasureEntry(measure_from_spec(spec["measure"]), delay=int(spec.get("delay", 0)))
    if kind == "enumerated-measure":
        return EnumeratedMeasureEntry(
            measure_from_spec(spec["measure"]), declared_total=spec.get("total")
        )
    if kind == "stub":
        return StubEntry(stub_kind=spec.get("kind", "measure"))
    if kind == "real":
        return RealEntry(
            bit_source_from_spec(spec["source"]),
            delay=int(spec.get("delay", 0)),
            diverge_from=spec.get("diverge_from"),
        )
    if kind == "alias":
        return AliasEntry(base=int(spec["base"]))
    raise ValueError(f"unknown entry spec {kind!r}")


def table_from_manifest(manifest: dict) -> ProgramTable:
    table = ProgramTable()
    for spec in manifest.get("entries", []):
        table.add(entry_from_spec(spec))
    table.flip_schedules = {int(k): int(v) for k, v in manifest.get("flip_schedules", {}).items()}
    return table
