"""Exact measures on Cantor space, the measure-space metric, and basic open balls.

All masses are ``fractions.Fraction`` values, so additivity, the metric partial
sums and every ball computation are exact; truncation error is always returned
as an explicit tail bound instead of a float tolerance.
"""

from __future__ import annotations

import json
import random
from dataclasses import dataclass, field
from enum import Enum
from fractions import Fraction
from typing import Callable, Iterable, Iterator, Optional, Sequence

from .cantor import BitSource, Bits, check_bits

ZERO = Fraction(0)
ONE = Fraction(1)

PRNG_NAME = "python-random-mt19937-v1"


class MalformedMeasureError(ValueError):
    """An enumeration asserted disjoint intervals for the same string."""


class InconsistentBallError(ValueError):
    """No measure satisfies the ball's constraints."""


class UndefinedConditionalError(ZeroDivisionError):
    """Conditional probability requested at a mass-zero prefix."""


class Verdict(Enum):
    YES = "yes"
    NO = "no"
    UNKNOWN = "unknown"


def _frac(x) -> Fraction:
    return x if isinstance(x, Fraction) else Fraction(x)


@dataclass(frozen=True, order=False)
class Interval:
    """A nonempty rational subinterval of [0,1], with open/closed endpoints."""

    lo: Fraction
    hi: Fraction
    lo_open: bool = False
    hi_open: bool = False

    def __post_init__(self):
        object.__setattr__(self, "lo", _frac(self.lo))
        object.__setattr__(self, "hi", _frac(self.hi))
        if self.lo > self.hi or (self.lo == self.hi and (self.lo_open or self.hi_open)):
            raise InconsistentBallError(f"empty interval {self!r}")

    @classmethod
    def exact(cls, v) -> "Interval":
        v = _frac(v)
        return cls(v, v)

    @classmethod
    def closed(cls, lo, hi) -> "Interval":
        return cls(_frac(lo), _frac(hi))

    @classmethod
    def open(cls, lo, hi) -> "Interval":
        return cls(_frac(lo), _frac(hi), True, True)

    @classmethod
    def unit(cls) -> "Interval":
        return cls(ZERO, ONE)

    @property
    def width(self) -> Fraction:
        return self.hi - self.lo

    @property
    def midpoint(self) -> Fraction:
        return (self.lo + self.hi) / 2

    def contains(self, x) -> bool:
        x = _frac(x)
        if x < self.lo or (x == self.lo and self.lo_open):
            return False
        if x > self.hi or (x == self.hi and self.hi_open):
            return False
        return True

    def contains_interval(self, other: "Interval") -> bool:
        lo_ok = other.lo > self.lo or (
            other.lo == self.lo and (not self.lo_open or other.lo_open)
        )
        hi_ok = other.hi < self.hi or (
            other.hi == self.hi and (not self.hi_open or other.hi_open)
        )
        return lo_ok and hi_ok

    def intersect(self, other: "Interval") -> Optional["Interval"]:
        if self.lo > other.lo or (self.lo == other.lo and self.lo_open):
            lo, lo_open = self.lo, self.lo_open
        else:
            lo, lo_open = other.lo, other.lo_open
        if self.hi < other.hi or (self.hi == other.hi and self.hi_open):
            hi, hi_open = self.hi, self.hi_open
        else:
            hi, hi_open = other.hi, other.hi_open
        if lo > hi or (lo == hi and (lo_open or hi_open)):
            return None
        return Interval(lo, hi, lo_open, hi_open)

    def disjoint(self, other: "Interval") -> bool:
        return self.intersect(other) is None

    def hull(self, other: "Interval") -> "Interval":
        return Interval(min(self.lo, other.lo), max(self.hi, other.hi))

    def as_json(self) -> list:
        return [str(self.lo), str(self.hi), self.lo_open, self.hi_open]


class Measure:
    """A measure on Cantor space: exact evaluator or stage-indexed enumeration.

    Exact measures expose ``mass``; enumerated ones only reveal interval
    knowledge per stage.  Both answer ``knowledge(word, stage)``.
    """

    def __init__(
        self,
        spec: dict,
        mass_fn: Optional[Callable[[Bits], Fraction]] = None,
        tuples: Optional[Sequence[tuple[Bits, Interval, int]]] = None,
    ):
        if (mass_fn is None) == (tuples is None):
            raise ValueError("exactly one of mass_fn / tuples required")
        self.spec = spec
        self._mass_fn = mass_fn
        self._cache: dict[Bits, Fraction] = {}
        self._tuples = tuple(tuples) if tuples is not None else None

    @property
    def is_exact(self) -> bool:
        return self._mass_fn is not None

    @property
    def kind(self) -> str:
        return "exact" if self.is_exact else "enumerated"

    def mass(self, word: Bits) -> Fraction:
        if not self.is_exact:
            raise MalformedMeasureError("enumerated measure has no exact evaluator")
        v = self._cache.get(word)
        if v is None:
            v = _frac(self._mass_fn(word))
            self._cache[word] = v
        return v

    def tuples_at(self, word: Bits, stage: int) -> list[Interval]:
        """The enumeration's intervals for this string revealed by the stage."""
        if self.is_exact:
            return [Interval.exact(self.mass(word))]
        return [iv for (w, iv, s) in self._tuples if w == word and s <= stage]

    def knowledge(self, word: Bits, stage: int) -> Interval:
        if self.is_exact:
            return Interval.exact(self.mass(word))
        out = Interval.unit()
        for iv in self.tuples_at(word, stage):
            nxt = out.intersect(iv)
            if nxt is None:
                raise MalformedMeasureError(
                    f"enumeration inconsistent at {word!r} by stage {stage}"
                )
            out = nxt
        return out

    def bernoulli_param(self) -> Optional[Fraction]:
        if self.spec.get("kind") == "bernoulli":
            return _frac(Fraction(self.spec["q"]))
        return None

    def spec_json(self) -> str:
        return json.dumps(self.spec, sort_keys=True)


def uniform() -> Measure:
    return Measure({"kind": "uniform"}, mass_fn=lambda w: Fraction(1, 1 << len(w)))


def bernoulli(q) -> Measure:
    q = _frac(q)
    if not ZERO <= q <= ONE:
        raise ValueError(f"parameter must be in [0,1], got {q}")

    def mass(w: Bits) -> Fraction:
        a = w.count("0")
        return q**a * (ONE - q) ** (len(w) - a)

    return Measure({"kind": "bernoulli", "q": f"{q.numerator}/{q.denominator}"}, mass_fn=mass)


def interleave_measure(z: BitSource) -> Measure:
    """The measure that forces bit z(n) at even-length prefixes and splits at odd ones."""

    def mass(w: Bits) -> Fraction:
        v = ONE
        for j, ch in enumerate(w):
            if j % 2 == 0:
                if int(ch) != z.bit(j // 2):
                    return ZERO
            else:
                v /= 2
        return v

    return Measure({"kind": "interleave", "z": {"kind": z.kind, **z.spec}}, mass_fn=mass)


def dirac(z: BitSource) -> Measure:
    """Point mass on the single real produced by the source."""

    def mass(w: Bits) -> Fraction:
        for j, ch in enumerate(w):
            if int(ch) != z.bit(j):
                return ZERO
        return ONE

    return Measure({"kind": "dirac", "z": {"kind": z.kind, **z.spec}}, mass_fn=mass)


def enumerated(tuples: Iterable[tuple[Bits, Interval, int]], spec: Optional[dict] = None) -> Measure:
    tups = [(check_bits(w), iv, int(s)) for (w, iv, s) in tuples]
    if spec is None:
        spec = {
            "kind": "enumerated",
            "tuples": [[w, str(iv.lo), str(iv.hi), s] for (w, iv, s) in tups],
        }
    return Measure(spec, tuples=tups)


def validate_enumeration(mu: Measure, depth: int, stage: int) -> bool:
    """Opt-in check of the parent/children sum compatibility of an enumeration.

    For every revealed (w, I) with both children revealed as (w0, J0), (w1, J1),
    requires I to meet [inf J0 + inf J1, sup J0 + sup J1].
    """
    for n in range(depth + 1):
        for w in _words(n):
            for iv in mu.tuples_at(w, stage):
                j0s = mu.tuples_at(w + "0", stage)
                j1s = mu.tuples_at(w + "1", stage)
                for j0 in j0s:
                    for j1 in j1s:
                        if iv.disjoint(Interval(j0.lo + j1.lo, min(ONE, j0.hi + j1.hi))):
                            return False
    return True


def _words(n: int) -> Iterator[Bits]:
    for k in range(1 << n):
        yield format(k, f"0{n}b") if n else ""


def measure_eval(mu: Measure, word: Bits, stage: int) -> Interval:
    """Stage-bounded knowledge interval for mu(word)."""
    check_bits(word)
    return mu.knowledge(word, stage)


def conditional(mu: Measure, word: Bits, b: int) -> Fraction:
    if b not in (0, 1):
        raise ValueError("bit must be 0 or 1")
    m = mu.mass(word)
    if m == 0:
        raise UndefinedConditionalError(f"mass zero at {word!r}")
    return mu.mass(word + str(b)) / m


def level_max_diff(mu: Measure, nu: Measure, n: int) -> Fraction:
    """max over words of length n of |mu - nu|, exact."""
    qm, qn = mu.bernoulli_param(), nu.bernoulli_param()
    if qm is not None and qn is not None:
        # product measures attain the level max at some zero-count class
        return max(
            abs(qm**a * (ONE - qm) ** (n - a) - qn**a * (ONE - qn) ** (n - a))
            for a in range(n + 1)
        )
    best = ZERO
    for w in _words(n):
        d = abs(mu.mass(w) - nu.mass(w))
        if d > best:
            best = d
    return best


def measure_distance(mu: Measure, nu: Measure, depth: int) -> tuple[Fraction, Fraction]:
    """Partial sum of the metric over levels 1..depth, with tail bound 2^-depth.

    The true distance lies within partial +/- tail (levels beyond depth each
    contribute at most 2^-n).
    """
    partial = ZERO
    for n in range(1, depth + 1):
        partial += Fraction(1, 1 << n) * level_max_diff(mu, nu, n)
    return partial, Fraction(1, 1 << depth)


# ---------------------------------------------------------------------------
# balls


class MeasureBall:
    """A basic open set of the measure space: constraints (word, interval).

    Concrete subclasses may generate their finite constraint set lazily and
    provide structure-aware implementations of the three queries below.
    """

    def constraints(self) -> Iterator[tuple[Bits, Interval]]:
        raise NotImplementedError

    def max_constraint_level(self) -> int:
        raise NotImplementedError

    def sup_mass(self, word: Bits) -> Fraction:
        """Upper bound on mu(word) over measures consistent with the ball."""
        raise NotImplementedError

    def size_upper(self, depth: int) -> Fraction:
        """Upper bound on sup{d(mu,nu)} accurate to the 2^-depth tail."""
        raise NotImplementedError

    def contains(self, view: "MeasureView", stage: int) -> Verdict:
        raise NotImplementedError


class MeasureView:
    """What a ball checks membership against: stage-bounded value knowledge.

    ``param_interval`` reports a Bernoulli parameter interval when the viewed
    measure is known to be a product measure, enabling per-level checks.
    """

    def knowledge(self, word: Bits, stage: int) -> Interval:
        raise NotImplementedError

    def param_interval(self, stage: int) -> Optional[Interval]:
        return None


class ExactMeasureView(MeasureView):
    def __init__(self, mu: Measure):
        self.mu = mu

    def knowledge(self, word: Bits, stage: int) -> Interval:
        return self.mu.knowledge(word, stage)

    def param_interval(self, stage: int) -> Optional[Interval]:
        q = self.mu.bernoulli_param()
        return Interval.exact(q) if q is not None else None


@dataclass(frozen=True)
class ExplicitBall(MeasureBall):
    constraint_list: tuple[tuple[Bits, Interval], ...]

    node_budget: int = 1 << 15

    def constraints(self) -> Iterator[tuple[Bits, Interval]]:
        return iter(self.constraint_list)

    def max_constraint_level(self) -> int:
        return max((len(w) for w, _ in self.constraint_list), default=0)

    def _propagate(self, depth: int) -> dict[Bits, Interval]:
        depth = max(depth, self.max_constraint_level())
        if (1 << (depth + 1)) > self.node_budget:
            raise InconsistentBallError(
                f"propagation to depth {depth} exceeds the node budget"
            )
        box: dict[Bits, Interval] = {"": Interval.exact(ONE)}
        for n in range(1, depth + 1):
            for w in _words(n):
                box[w] = Interval.unit()

        def clip(w: Bits, iv: Interval) -> bool:
            cur = box[w]
            nxt = cur.intersect(iv)
            if nxt is None:
                raise InconsistentBallError(f"constraints incompatible at {w!r}")
            nxt = Interval(nxt.lo, nxt.hi)  # closed hull is enough for bounds
            if nxt != cur:
                box[w] = nxt
                return True
            return False

        for w, iv in self.constraint_list:
            if len(w) > depth:
                continue
            clip(w, Interval(iv.lo, iv.hi))

        for _ in range(2 * depth + 4):
            changed = False
            for n in range(depth):  # downward
                for w in _words(n):
                    p, c0, c1 = box[w], box[w + "0"], box[w + "1"]
                    changed |= clip(w + "0", Interval(max(ZERO, p.lo - c1.hi), min(ONE, p.hi - c1.lo)))
                    p, c0 = box[w], box[w + "0"]
                    changed |= clip(w + "1", Interval(max(ZERO, p.lo - c0.hi), min(ONE, p.hi - c0.lo)))
            for n in range(depth - 1, -1, -1):  # upward
                for w in _words(n):
                    c0, c1 = box[w + "0"], box[w + "1"]
                    changed |= clip(w, Interval(c0.lo + c1.lo, min(ONE, c0.hi + c1.hi)))
            if not changed:
                break
        return box

    def sup_mass(self, word: Bits) -> Fraction:
        depth = self.max_constraint_level()
        box = self._propagate(depth)
        probe = word if len(word) <= depth else word[:depth]
        return box[probe].hi

    def size_upper(self, depth: int) -> Fraction:
        box = self._propagate(depth)
        total = ZERO
        for n in range(1, depth + 1):
            w_max = max(box[w].width for w in _words(n))
            total += Fraction(1, 1 << n) * w_max
        return total + Fraction(1, 1 << depth)

    def contains(self, view: MeasureView, stage: int) -> Verdict:
        verdict = Verdict.YES
        for w, iv in self.constraint_list:
            known = view.knowledge(w, stage)
            if iv.disjoint(known):
                return Verdict.NO
            if not iv.contains_interval(known):
                verdict = Verdict.UNKNOWN
        return verdict


def ball(constraints: Iterable[tuple[Bits, Interval]]) -> ExplicitBall:
    return ExplicitBall(tuple((check_bits(w), iv) for w, iv in constraints))


def bernoulli_image(param: Interval, zeros: int, ones: int) -> Interval:
    """Tight image of q^zeros (1-q)^ones over a parameter interval (closed hull)."""
    lo, hi = param.lo, param.hi

    def f(q: Fraction) -> Fraction:
        return q**zeros * (ONE - q) ** ones

    vals = [f(lo), f(hi)]
    if zeros + ones > 0:
        crit = Fraction(zeros, zeros + ones)
        if lo < crit < hi:
            vals.append(f(crit))
    return Interval(min(vals), max(vals))


@dataclass(frozen=True)
class BernoulliCylinderBall(MeasureBall):
    """Ball of all measures pinned, on every string down to a level, to the
    image of a Bernoulli parameter interval under the product formula."""

    param: Interval
    level: int

    def constraints(self) -> Iterator[tuple[Bits, Interval]]:
        for n in range(1, self.level + 1):
            for w in _words(n):
                yield w, bernoulli_image(self.param, w.count("0"), n - w.count("0"))

    def max_constraint_level(self) -> int:
        return self.level

    def _image(self, zeros: int, ones: int) -> Interval:
        return bernoulli_image(self.param, zeros, ones)

    def sup_mass(self, word: Bits) -> Fraction:
        probe = word[: self.level] if len(word) > self.level else word
        a = probe.count("0")
        return self._image(a, len(probe) - a).hi

    def inf_mass(self, word: Bits) -> Fraction:
        if len(word) > self.level:
            return ZERO
        a = word.count("0")
        return self._image(a, len(word) - a).lo

    def size_upper(self, depth: int) -> Fraction:
        total = ZERO
        h_cap = ONE
        for n in range(1, depth + 1):
            if n <= self.level:
                w_max = ZERO
                h_lvl = ZERO
                for a in range(n + 1):
                    img = self._image(a, n - a)
                    w_max = max(w_max, img.width)
                    h_lvl = max(h_lvl, img.hi)
                if n == self.level:
                    h_cap = h_lvl
            else:
                w_max = min(ONE, h_cap)
            total += Fraction(1, 1 << n) * w_max
        return total + Fraction(1, 1 << depth)

    def contains(self, view: MeasureView, stage: int) -> Verdict:
        p = view.param_interval(stage)
        if p is not None:
            # exact on parameter intervals: any shared parameter q realizes a
            # product measure inside both (so never disjoint deeper), and the
            # level-1 constraint is the parameter interval itself (so YES
            # requires containment there)
            if p.disjoint(self.param):
                return Verdict.NO
            if self.param.contains_interval(p):
                return Verdict.YES
            return Verdict.UNKNOWN
        # generic fallback: shallow exhaustive screen; sound but may stay UNKNOWN
        screen = min(self.level, 3)
        verdict = Verdict.YES if screen == self.level else Verdict.UNKNOWN
        for n in range(1, screen + 1):
            for w in _words(n):
                img = self._image(w.count("0"), n - w.count("0"))
                known = view.knowledge(w, stage)
                if img.disjoint(known):
                    return Verdict.NO
                if not img.contains_interval(known):
                    verdict = Verdict.UNKNOWN
        return verdict


@dataclass(frozen=True)
class InterleaveCylinderBall(MeasureBall):
    """Ball of the interleaving measures whose forced stream extends a pattern."""

    pattern: Bits

    def _value_range(self, word: Bits) -> Interval:
        hi = ONE
        free = False
        for j, ch in enumerate(word):
            if j % 2 == 0:
                t = j // 2
                if t < len(self.pattern):
                    if int(ch) != int(self.pattern[t]):
                        return Interval.exact(ZERO)
                else:
                    free = True
            else:
                hi /= 2
        return Interval(ZERO if free else hi, hi)

    def constraints(self) -> Iterator[tuple[Bits, Interval]]:
        for n in range(1, self.max_constraint_level() + 1):
            for w in _words(n):
                yield w, self._value_range(w)

    def max_constraint_level(self) -> int:
        return 2 * len(self.pattern)

    def sup_mass(self, word: Bits) -> Fraction:
        return self._value_range(word).hi

    def size_upper(self, depth: int) -> Fraction:
        total = ZERO
        pinned = self.max_constraint_level()
        h_cap = Fraction(1, 1 << len(self.pattern))
        for n in range(1, depth + 1):
            w_max = ZERO if n <= pinned else min(ONE, h_cap)
            total += Fraction(1, 1 << n) * w_max
        return total + Fraction(1, 1 << depth)

    def contains(self, view: MeasureView, stage: int) -> Verdict:
        verdict = Verdict.YES
        nodes = 0
        frontier: list[Bits] = [""]
        # walk only the ball's own support plus its dead single-step exits
        for n in range(self.max_constraint_level()):
            nxt: list[Bits] = []
            for w in frontier:
                for ch in "01":
                    child = w + ch
                    nodes += 1
                    if nodes > 4096:
                        return Verdict.UNKNOWN
                    iv = self._value_range(child)
                    known = view.knowledge(child, stage)
                    if iv.disjoint(known):
                        return Verdict.NO
                    if not iv.contains_interval(known):
                        verdict = Verdict.UNKNOWN
                    if iv.hi > 0:
                        nxt.append(child)
            frontier = nxt
        return verdict


def ball_size(c: MeasureBall, depth: int) -> Fraction:
    """Upper bound on the ball's size, accurate to the 2^-depth tail."""
    return c.size_upper(depth)


def ball_contains(c: MeasureBall, mu, stage: int) -> Verdict:
    """Three-valued membership; yes/no verdicts are stable as the stage grows."""
    view = mu if isinstance(mu, MeasureView) else ExactMeasureView(mu)
    return c.contains(view, stage)


# ---------------------------------------------------------------------------
# sampling


def sample_stream(mu: Measure, seed: int, n: int) -> Bits:
    """Deterministic stream of n bits sampled from an exact measure.

    Bit i is 0 with the exact conditional probability given the prefix so far;
    forced branches (other side mass 0) consume no randomness, so streams from
    interleaving measures carry the forced bits exactly.
    """
    if not mu.is_exact:
        raise MalformedMeasureError("sampling needs an exact measure")
    rng = random.Random(seed)
    out: list[str] = []
    prefix = ""
    m = mu.mass(prefix)
    if m == 0:
        raise UndefinedConditionalError("measure has zero mass at the start")
    for _ in range(n):
        m0 = mu.mass(prefix + "0")
        p0 = m0 / m
        if p0 == 1:
            b = "0"
        elif p0 == 0:
            b = "1"
        else:
            b = "0" if Fraction(rng.random()) < p0 else "1"
        prefix += b
        out.append(b)
        m = m0 if b == "0" else m - m0
    return "".join(out)


def sampled_source(mu: Measure, seed: int) -> BitSource:
    """A BitSource replaying sample_stream(mu, seed) bit by bit."""
    cache: dict[int, Bits] = {}

    def bit(i: int) -> int:
        n = 1 << max(3, i + 1).bit_length()
        if n not in cache:
            cache[n] = sample_stream(mu, seed, n)
        return int(cache[n][i])

    return BitSource.from_function(
        "sampled", {"measure": mu.spec, "seed": seed, "prng": PRNG_NAME}, bit
    )


def measure_from_spec(spec: dict) -> Measure:
    """Rebuild a measure from its JSON spec."""
    kind = spec.get("kind")
    if kind == "uniform":
        return uniform()
    if kind == "bernoulli":
        return bernoulli(Fraction(spec["q"]))
    if kind == "interleave":
        return interleave_measure(bit_source_from_spec(spec["z"]))
    if kind == "enumerated":
        tups = [
            (w, Interval.closed(Fraction(lo), Fraction(hi)), int(s))
            for (w, lo, hi, s) in spec["tuples"]
        ]
        return enumerated(tups, spec=spec)
    raise ValueError(f"unknown measure kind {kind!r}")


def bit_source_from_spec(spec: dict) -> BitSource:
    kind = spec.get("kind")
    if kind == "literal":
        return BitSource.literal(spec["word"])
    if kind == "constant":
        return BitSource.constant(int(spec["bit"]))
    if kind == "periodic":
        return BitSource.periodic(spec["cycle"], spec.get("head", ""))
    if kind == "rational":
        return BitSource.rational(Fraction(spec["value"]))
    if kind == "hat-rational":
        return BitSource.hat_rational(Fraction(spec["value"]))
    if kind == "sampled":
        return sampled_source(measure_from_spec(spec["measure"]), int(spec["seed"]))
    raise ValueError(f"unknown source kind {kind!r}")
