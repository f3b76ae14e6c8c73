"""Compressor-backed surrogate for prefix-free complexity and the
measure-relative randomness deficiency used by every learner.

The estimate is a min over a fixed codec family (literal first, so the
|word| + header ceiling always holds) plus per-codec id penalties.  Learners
consume deficiencies through comparisons and thresholds only; nothing here
claims calibration against a universal machine.
"""

from __future__ import annotations

import math
import zlib
from fractions import Fraction
from typing import Optional, Sequence

from .cantor import Bits, check_bits
from .measures import MeasureBall

INFINITE_DEFICIENCY = math.inf

LITERAL_HEADER = 32
CODEC_HEADER = 8
ZLIB_BLOCK_BITS = 256


def ceil_neg_log2(u: Fraction) -> int:
    """Exact ceil(-log2 u) for rational u in (0, 1]; 0 for u >= 1."""
    if u <= 0:
        raise ValueError("u must be positive")
    if u >= 1:
        return 0
    p, q = u.numerator, u.denominator
    k = max(0, q.bit_length() - p.bit_length() - 1)
    while (p << k) < q:
        k += 1
    return k


def elias_gamma_bits(n: int) -> int:
    """Bit cost of Elias-gamma coding a positive integer."""
    return 2 * (n.bit_length() - 1) + 1


def pack_bits(word: Bits) -> bytes:
    out = bytearray()
    for i in range(0, len(word), 8):
        out.append(int(word[i : i + 8].ljust(8, "0"), 2))
    return bytes(out)


class Codec:
    name = "codec"

    def cost(self, word: Bits) -> int:
        t = self.tracker()
        for ch in word:
            t.push(ch)
        return t.cost()

    def tracker(self) -> "CodecTracker":
        raise NotImplementedError


class CodecTracker:
    def push(self, ch: str) -> None:
        raise NotImplementedError

    def cost(self) -> int:
        raise NotImplementedError


class LiteralCodec(Codec):
    name = "literal"

    class _T(CodecTracker):
        def __init__(self):
            self.n = 0

        def push(self, ch):
            self.n += 1

        def cost(self):
            return self.n + LITERAL_HEADER

    def tracker(self):
        return self._T()


class RunLengthCodec(Codec):
    name = "run-length"

    class _T(CodecTracker):
        def __init__(self):
            self.n = 0
            self.last = None
            self.run = 0
            self.done = 0  # gamma bits of completed runs

        def push(self, ch):
            self.n += 1
            if ch == self.last:
                self.run += 1
            else:
                if self.last is not None:
                    self.done += elias_gamma_bits(self.run)
                self.last = ch
                self.run = 1

        def cost(self):
            if self.n == 0:
                return CODEC_HEADER
            return 1 + self.done + elias_gamma_bits(self.run) + CODEC_HEADER

    def tracker(self):
        return self._T()


class PatternCodec(Codec):
    """Smallest-period coder: period bits verbatim plus two gamma lengths."""

    name = "pattern"

    class _T(CodecTracker):
        def __init__(self):
            self.word: list[str] = []
            self.border = [0]  # KMP failure function

        def push(self, ch):
            w = self.word
            k = self.border[len(w)] if w else 0
            while k and w[k] != ch:
                k = self.border[k]
            if w and w[k] == ch:
                k += 1
            elif not w:
                k = 0
            w.append(ch)
            self.border.append(k)

        def cost(self):
            n = len(self.word)
            if n == 0:
                return CODEC_HEADER
            period = n - self.border[n]
            reps = -(-n // period)
            return elias_gamma_bits(period) + period + elias_gamma_bits(reps) + CODEC_HEADER

    def tracker(self):
        return self._T()


class KTCodec(Codec):
    """Order-0 adaptive coder with the Krichevsky-Trofimov estimator, exact."""

    name = "kt"

    class _T(CodecTracker):
        def __init__(self):
            self.t = 0
            self.zeros = 0
            # running probability as num/den; step factor (2c+1)/(2t+2)
            self.num = 1
            self.den = 1

        def push(self, ch):
            c = self.zeros if ch == "0" else self.t - self.zeros
            self.num *= 2 * c + 1
            self.den *= 2 * self.t + 2
            self.t += 1
            if ch == "0":
                self.zeros += 1

        def cost(self):
            if self.t == 0:
                return CODEC_HEADER
            k = max(0, self.den.bit_length() - self.num.bit_length() - 1)
            while (self.num << k) < self.den:
                k += 1
            return k + CODEC_HEADER

    def tracker(self):
        return self._T()


class ZlibBlockCodec(Codec):
    """zlib over complete bit blocks plus a literal tail, so pushes stay cheap."""

    name = "zlib-block"

    class _T(CodecTracker):
        def __init__(self):
            self.bits: list[str] = []
            self.block_cost = 0
            self.blocks = 0

        def push(self, ch):
            self.bits.append(ch)
            n = len(self.bits)
            if n % ZLIB_BLOCK_BITS == 0:
                packed = pack_bits("".join(self.bits))
                self.block_cost = 8 * len(zlib.compress(packed, 9))
                self.blocks = n

        def cost(self):
            tail = len(self.bits) - self.blocks
            return self.block_cost + tail + CODEC_HEADER

    def tracker(self):
        return self._T()


DEFAULT_CODECS: tuple[Codec, ...] = (
    LiteralCodec(),
    RunLengthCodec(),
    PatternCodec(),
    KTCodec(),
    ZlibBlockCodec(),
)


class ComplexityEstimator:
    """min over the stage-available codec prefix of (code length + id penalty)."""

    def __init__(self, codecs: Sequence[Codec] = DEFAULT_CODECS):
        if not codecs or codecs[0].name != "literal":
            raise ValueError("codec family must lead with the literal codec")
        self.codecs = tuple(codecs)

    def penalties(self) -> list[int]:
        return [2 * i for i in range(len(self.codecs))]

    def upper(self, word: Bits, stage: int) -> int:
        if stage < 1:
            raise ValueError("stage must be >= 1")
        check_bits(word)
        avail = min(stage, len(self.codecs))
        pen = self.penalties()
        return min(self.codecs[i].cost(word) + pen[i] for i in range(avail))

    def tracker(self) -> "EstimatorTracker":
        return EstimatorTracker(self)

    def codec_ids(self) -> list[str]:
        return [c.name for c in self.codecs]


class EstimatorTracker:
    """Incremental estimate along a growing word."""

    def __init__(self, est: ComplexityEstimator):
        self.est = est
        self.trackers = [c.tracker() for c in est.codecs]
        self.n = 0

    def push(self, ch: str) -> None:
        for t in self.trackers:
            t.push(ch)
        self.n += 1

    def upper(self, stage: int) -> int:
        avail = min(stage, len(self.trackers))
        pen = self.est.penalties()
        return min(self.trackers[i].cost() + pen[i] for i in range(avail))


def complexity_upper(est: ComplexityEstimator, word: Bits, stage: int) -> int:
    return est.upper(word, stage)


def deficiency(table, est: ComplexityEstimator, e: int, word: Bits, stage: int):
    """ceil(-log2 of the stage-knowledge sup of the entry's mass) minus the estimate."""
    u = table.eval_measure(e, word, stage).hi
    if u == 0:
        return INFINITE_DEFICIENCY
    return ceil_neg_log2(u) - est.upper(word, max(1, stage))


def deficiency_ball(ball: MeasureBall, est: ComplexityEstimator, word: Bits, stage: int):
    """Deficiency against the sup of the mass over all measures in a ball."""
    u = ball.sup_mass(word)
    if u == 0:
        return INFINITE_DEFICIENCY
    return ceil_neg_log2(u) - est.upper(word, max(1, stage))


def random_verdict(table, est: ComplexityEstimator, e: int, x: Bits, c) -> bool:
    """Finite-horizon randomness surrogate: every prefix deficiency stays <= c."""
    check_bits(x)
    if c == INFINITE_DEFICIENCY:
        return True
    stage = max(1, len(x))
    tracker = est.tracker()
    if deficiency_at(table, tracker, e, "", stage) > c:
        return False
    for n in range(1, len(x) + 1):
        tracker.push(x[n - 1])
        if deficiency_at(table, tracker, e, x[:n], stage) > c:
            return False
    return True


def deficiency_at(table, tracker: EstimatorTracker, e: int, word: Bits, stage: int):
    u = table.eval_measure(e, word, stage).hi
    if u == 0:
        return INFINITE_DEFICIENCY
    return ceil_neg_log2(u) - tracker.upper(stage)


def max_prefix_deficiency(table, est: ComplexityEstimator, e: int, x: Bits):
    """Largest prefix deficiency along x at stage |x| (reporting helper)."""
    stage = max(1, len(x))
    tracker = est.tracker()
    best = deficiency_at(table, tracker, e, "", stage)
    for n in range(1, len(x) + 1):
        tracker.push(x[n - 1])
        d = deficiency_at(table, tracker, e, x[:n], stage)
        if d > best:
            best = d
    return best
