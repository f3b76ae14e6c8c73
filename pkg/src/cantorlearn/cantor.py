"""Finite and infinite binary sequences, interleaving, hat coding, closed classes.

Words over {0,1} are plain Python strings of ``'0'``/``'1'`` characters, which
serialize directly as the ASCII text interface used by the rest of the package.
Infinite sequences ("reals") are wrapped in :class:`BitSource`, a deterministic
position -> bit function with a JSON-able spec.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Callable, Optional

Bits = str


class BadWordError(ValueError):
    """Input is not a word over {0,1}."""


class HatDecodeError(ValueError):
    """Word contains a complete two-bit block that is not 01 or 10."""


class EndOfWordError(IndexError):
    """A literal bit source was read past its end."""


def check_bits(word: str) -> Bits:
    if not isinstance(word, str) or word.strip("01"):
        raise BadWordError(f"not a 0/1 word: {word!r}")
    return word


def interleave(z: Bits, y: Bits) -> Bits:
    """Join two words, z on even (0-indexed) positions and y on odd ones.

    Requires |z| == |y| or |z| == |y| + 1, so every prefix length of the join
    is reachable.
    """
    check_bits(z)
    check_bits(y)
    if len(z) - len(y) not in (0, 1):
        raise BadWordError(f"interleave needs |z| - |y| in {{0,1}}, got {len(z)}, {len(y)}")
    out = []
    for i in range(len(z) + len(y)):
        out.append(z[i // 2] if i % 2 == 0 else y[i // 2])
    return "".join(out)


def deinterleave(x: Bits) -> tuple[Bits, Bits]:
    """Split a word into its even-position and odd-position halves."""
    check_bits(x)
    return x[0::2], x[1::2]


def hat_encode(word: Bits) -> Bits:
    """Digit replacement 0 -> 01, 1 -> 10."""
    check_bits(word)
    return word.translate(str.maketrans({"0": "01", "1": "10"}))


def hat_decode(word: Bits) -> Bits:
    """Inverse of :func:`hat_encode` on complete blocks; a trailing odd bit is ignored."""
    check_bits(word)
    out = []
    for i in range(0, len(word) - 1, 2):
        block = word[i : i + 2]
        if block == "01":
            out.append("0")
        elif block == "10":
            out.append("1")
        else:
            raise HatDecodeError(f"block {block!r} at position {i} is not a hat image block")
    return "".join(out)


def is_hat_prefix(word: Bits) -> bool:
    """True iff word is a prefix of some hat-encoded real."""
    try:
        hat_decode(word)
    except HatDecodeError:
        return False
    return True


@dataclass(frozen=True)
class BitSource:
    """A deterministic infinite (or literal finite) binary sequence.

    ``bit(i)`` is a pure function of the source spec and the position, so
    sources can be shared, compared by spec, and replayed bit-for-bit.
    """

    kind: str
    spec: dict
    _bit: Callable[[int], int] = field(repr=False, compare=False)

    def bit(self, i: int) -> int:
        if i < 0:
            raise IndexError("negative position")
        b = self._bit(i)
        if b not in (0, 1):
            raise BadWordError(f"source produced non-bit {b!r}")
        return b

    def prefix(self, n: int) -> Bits:
        return "".join(str(self.bit(i)) for i in range(n))

    def spec_json(self) -> str:
        return json.dumps({"kind": self.kind, **self.spec}, sort_keys=True)

    @classmethod
    def literal(cls, word: Bits) -> "BitSource":
        check_bits(word)

        def bit(i: int, _w: str = word) -> int:
            if i >= len(_w):
                raise EndOfWordError(f"literal source of length {len(_w)} read at {i}")
            return int(_w[i])

        return cls(kind="literal", spec={"word": word}, _bit=bit)

    @classmethod
    def constant(cls, b: int) -> "BitSource":
        if b not in (0, 1):
            raise BadWordError(f"constant bit must be 0 or 1, got {b!r}")
        return cls(kind="constant", spec={"bit": b}, _bit=lambda i: b)

    @classmethod
    def periodic(cls, cycle: Bits, head: Bits = "") -> "BitSource":
        """head then cycle repeated forever; cycle must be nonempty."""
        check_bits(cycle)
        check_bits(head)
        if not cycle:
            raise BadWordError("empty cycle")

        def bit(i: int) -> int:
            if i < len(head):
                return int(head[i])
            return int(cycle[(i - len(head)) % len(cycle)])

        return cls(kind="periodic", spec={"head": head, "cycle": cycle}, _bit=bit)

    @classmethod
    def rational(cls, value: Fraction) -> "BitSource":
        """Binary expansion of a rational in [0,1].

        Dyadic rationals get the terminating expansion (trailing zeros);
        the value 1 is the all-ones sequence by convention.
        """
        value = Fraction(value)
        if not 0 <= value <= 1:
            raise ValueError(f"expansion needs a value in [0,1], got {value}")
        p, q = value.numerator, value.denominator

        def bit(i: int) -> int:
            if p == q:
                return 1
            return (p * (1 << (i + 1)) // q) % 2

        return cls(kind="rational", spec={"value": f"{p}/{q}"}, _bit=bit)

    @classmethod
    def hat_rational(cls, value: Fraction) -> "BitSource":
        """Hat encoding of the binary expansion of a rational in [0,1]."""
        base = cls.rational(value)

        def bit(i: int) -> int:
            z = base.bit(i // 2)
            return z if i % 2 == 0 else 1 - z

        return cls(kind="hat-rational", spec=dict(base.spec), _bit=bit)

    @classmethod
    def from_function(cls, kind: str, spec: dict, fn: Callable[[int], int]) -> "BitSource":
        return cls(kind=kind, spec=spec, _bit=fn)


def hat_value(value: Fraction, bits: int = 128) -> Fraction:
    """The rational with binary expansion hat(expansion(value)), to the given precision.

    Exact when the expansion of ``value`` is eventually periodic (always, for
    rationals): the hat image is again eventually periodic, so we detect the
    cycle instead of truncating.
    """
    src = BitSource.rational(value)
    p, q = Fraction(value).numerator, Fraction(value).denominator
    # remainder after i bits determines the tail; cycle detection on remainders
    seen: dict[int, int] = {}
    rem = p
    i = 0
    bits_list: list[int] = []
    while rem not in seen and i < bits:
        seen[rem] = i
        bits_list.append(src.bit(i))
        rem = (rem * 2) % q if p != q else p
        i += 1
    hat_bits = []
    for b in bits_list:
        hat_bits.extend((b, 1 - b))
    if rem in seen and p != q:
        start = seen[rem]
        head, cycle = hat_bits[: 2 * start], hat_bits[2 * start :]
        val = Fraction(0)
        for j, b in enumerate(head):
            val += Fraction(b, 1 << (j + 1))
        if cycle:
            cyc_val = 0
            for b in cycle:
                cyc_val = 2 * cyc_val + b
            val += Fraction(cyc_val, (1 << len(cycle)) - 1) / (1 << len(head))
        return val
    val = Fraction(0)
    for j, b in enumerate(hat_bits):
        val += Fraction(b, 1 << (j + 1))
    return val


@dataclass(frozen=True)
class ClosedClass:
    """An effectively closed subset of Cantor space as a co-enumerated forbidden-prefix set.

    ``forbid_time(prefix)`` returns the stage at which the prefix is revealed to
    be forbidden, or None if it never is.  A word is alive at stage s iff no
    prefix of it has been revealed by stage s; liveness is antitone in s by
    construction.
    """

    name: str
    forbid_time: Callable[[Bits], Optional[int]] = field(compare=False)

    def alive(self, word: Bits, stage: int) -> bool:
        check_bits(word)
        for k in range(len(word) + 1):
            t = self.forbid_time(word[:k])
            if t is not None and t <= stage:
                return False
        return True

    @classmethod
    def full(cls) -> "ClosedClass":
        return cls(name="full", forbid_time=lambda w: None)

    @classmethod
    def hat_image(cls) -> "ClosedClass":
        """Closure of the hat-image: words whose complete 2-blocks are all 01 or 10.

        Membership is decidable, so bad prefixes are revealed at stage 0.
        """

        def forbid_time(w: Bits) -> Optional[int]:
            if len(w) >= 2 and len(w) % 2 == 0 and w[-2:] in ("00", "11"):
                return 0
            return None

        return cls(name="hat-image", forbid_time=forbid_time)

    @classmethod
    def from_stage_sets(cls, stage_sets: dict[int, set[Bits]], name: str = "explicit") -> "ClosedClass":
        """Explicit stage-indexed forbidden sets; forbid[s] accumulates over stages."""
        first: dict[Bits, int] = {}
        for s in sorted(stage_sets):
            for w in stage_sets[s]:
                check_bits(w)
                first.setdefault(w, s)
        return cls(name=name, forbid_time=lambda w: first.get(w))


def class_alive(cls: ClosedClass, word: Bits, stage: int) -> bool:
    """True iff no prefix of the word is forbidden by the given stage."""
    return cls.alive(word, stage)
