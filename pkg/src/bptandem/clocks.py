"""Poisson clock fields: the randomness source shared by every simulation.

Each site ``n >= 1`` carries an independent unit-rate Poisson stream and the
system carries one arrival stream. All streams derive deterministically from
``(seed, stream id)`` via ``numpy.random.SeedSequence`` spawn keys, so two
runs (or two coupled systems inside one run) built from the same seed see
byte-identical clock realizations regardless of how far each one reads.

Streams materialize lazily in chunks; nothing is generated for sites a run
never touches.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Dict, Optional, Sequence, Tuple

import numpy as np

__all__ = [
    "PoissonArrivals",
    "DeterministicArrivals",
    "StreamArrivals",
    "ArrivalProcessSpec",
    "AllValid",
    "NoneValid",
    "BernoulliMask",
    "CallableMask",
    "ValidityMask",
    "ClockField",
]

_ARRIVAL_KEY = (0, 0)
_SITE_NS = 1
_MASK_NS = 2

# chunk sizes for lazy stream materialization; values, not boundaries, decide
# what a stream looks like, so this schedule is free to change
_CHUNK_SCHEDULE = (64, 256, 1024, 4096)


def _chunk_size(index: int) -> int:
    if index < len(_CHUNK_SCHEDULE):
        return _CHUNK_SCHEDULE[index]
    return _CHUNK_SCHEDULE[-1]


class _PoissonStream:
    """Incremental homogeneous Poisson stream with an optional mask channel.

    ``take_until(t)`` returns every event time in ``(last consumed, t]``
    together with its validity flags; ``discard_until(t)`` drops that range.
    Both advance the stream, so each point is handed out exactly once.
    """

    def __init__(self, seed_seq: np.random.SeedSequence, rate: float,
                 mask_gen: Optional[np.random.Generator] = None,
                 invalid_prob: float = 0.0):
        self.rate = float(rate)
        self._gen = np.random.Generator(np.random.PCG64(seed_seq))
        self._mask_gen = mask_gen
        self._invalid_prob = float(invalid_prob)
        self._chunks: list = []  # pending (times, valid) pairs
        self._tail = 0.0  # last generated time
        self._chunk_index = 0

    def _generate_chunk(self) -> None:
        n = _chunk_size(self._chunk_index)
        self._chunk_index += 1
        gaps = self._gen.standard_exponential(n)
        if self.rate != 1.0:
            gaps = gaps / self.rate
        times = self._tail + np.cumsum(gaps)
        self._tail = float(times[-1])
        if self._mask_gen is not None:
            valid = self._mask_gen.random(n) >= self._invalid_prob
        else:
            valid = np.ones(n, dtype=bool)
        self._chunks.append((times, valid))

    def take_until(self, t: float) -> Tuple[np.ndarray, np.ndarray]:
        if self.rate == 0.0:
            return np.empty(0), np.empty(0, dtype=bool)
        while self._tail <= t:
            self._generate_chunk()
        out_t: list = []
        out_v: list = []
        while self._chunks:
            times, valid = self._chunks[0]
            if times[-1] <= t:
                out_t.append(times)
                out_v.append(valid)
                self._chunks.pop(0)
                continue
            k = int(np.searchsorted(times, t, side="right"))
            if k > 0:
                out_t.append(times[:k])
                out_v.append(valid[:k])
                self._chunks[0] = (times[k:], valid[k:])
            break
        if not out_t:
            return np.empty(0), np.empty(0, dtype=bool)
        return np.concatenate(out_t), np.concatenate(out_v)

    def discard_until(self, t: float) -> None:
        self.take_until(t)


class _SequenceStream:
    """Stream over a fixed strictly increasing time list (always valid)."""

    def __init__(self, times: Sequence[float]):
        arr = np.asarray(times, dtype=np.float64)
        if arr.ndim != 1:
            raise ValueError("arrival times must be a flat sequence")
        if arr.size and (arr[0] <= 0 or np.any(np.diff(arr) <= 0)):
            raise ValueError("arrival times must be strictly increasing and positive")
        self._times = arr
        self._cursor = 0

    def take_until(self, t: float) -> Tuple[np.ndarray, np.ndarray]:
        k = int(np.searchsorted(self._times, t, side="right"))
        out = self._times[self._cursor:k]
        self._cursor = max(self._cursor, k)
        return out, np.ones(out.size, dtype=bool)


class _CallableStream:
    """Stream pulled from a user callable ``source(t0, t1) -> times``."""

    def __init__(self, source: Callable[[float, float], Sequence[float]]):
        self._source = source
        self._t0 = 0.0

    def take_until(self, t: float) -> Tuple[np.ndarray, np.ndarray]:
        if t <= self._t0:
            return np.empty(0), np.empty(0, dtype=bool)
        arr = np.asarray(self._source(self._t0, t), dtype=np.float64)
        if arr.size:
            if np.any(arr <= self._t0) or np.any(arr > t):
                raise ValueError(
                    f"pluggable arrival source returned times outside ({self._t0}, {t}]"
                )
            if np.any(np.diff(arr) <= 0):
                raise ValueError("pluggable arrival source must return strictly increasing times")
        self._t0 = t
        return arr, np.ones(arr.size, dtype=bool)


@dataclass(frozen=True)
class PoissonArrivals:
    """Poisson arrival process with the given mean rate."""

    rate: float

    def __post_init__(self):
        if not (self.rate >= 0):
            raise ValueError(f"arrival rate must be non-negative, got {self.rate}")

    def _build(self, seed: int):
        return _PoissonStream(
            np.random.SeedSequence(entropy=seed, spawn_key=_ARRIVAL_KEY), self.rate
        )


@dataclass(frozen=True)
class DeterministicArrivals:
    """Fixed list of arrival epochs (strictly increasing, positive)."""

    times: tuple

    def __init__(self, times: Sequence[float]):
        object.__setattr__(self, "times", tuple(float(t) for t in times))
        _SequenceStream(self.times)  # validate eagerly

    @property
    def rate(self) -> float:
        if len(self.times) < 1:
            return 0.0
        return len(self.times) / self.times[-1]

    def _build(self, seed: int):
        return _SequenceStream(self.times)


@dataclass(frozen=True)
class StreamArrivals:
    """User-supplied stationary ergodic arrival source with a declared rate.

    ``source(t0, t1)`` must return the (sorted) arrival epochs in ``(t0, t1]``
    and is called once per engine window in increasing time order. Stateful
    sources should be wrapped in a fresh spec per run.
    """

    source: Callable[[float, float], Sequence[float]]
    rate: float

    def _build(self, seed: int):
        return _CallableStream(self.source)


ArrivalProcessSpec = (PoissonArrivals, DeterministicArrivals, StreamArrivals)


class ValidityMask:
    """Marks individual site-clock points invalid; arrivals are never masked."""

    def _site_channel(self, seed: int, site: int):
        """Return ``(mask_gen, invalid_prob)`` for a site stream."""
        raise NotImplementedError


class AllValid(ValidityMask):
    def _site_channel(self, seed: int, site: int):
        return None, 0.0


class NoneValid(ValidityMask):
    """Every site-clock point is invalid (arrivals still happen)."""

    def _site_channel(self, seed: int, site: int):
        return None, 0.0


class BernoulliMask(ValidityMask):
    """Each clock point is independently invalid with probability ``invalid_prob``.

    Draws come from a dedicated ``(mask_seed, site)`` sub-stream, one draw per
    clock point in stream order, so masking is reproducible and independent
    of the clock times themselves.
    """

    def __init__(self, invalid_prob: float, mask_seed: int = 0):
        if not (0.0 <= invalid_prob <= 1.0):
            raise ValueError(f"invalid_prob must be in [0, 1], got {invalid_prob}")
        self.invalid_prob = float(invalid_prob)
        self.mask_seed = int(mask_seed)

    def _site_channel(self, seed: int, site: int):
        seq = np.random.SeedSequence(entropy=self.mask_seed, spawn_key=(_MASK_NS, site))
        return np.random.Generator(np.random.PCG64(seq)), self.invalid_prob


class CallableMask(ValidityMask):
    """Validity decided by ``fn(site, times) -> bool array`` per chunk."""

    def __init__(self, fn: Callable[[int, np.ndarray], Sequence[bool]]):
        self.fn = fn


class ClockField:
    """All clock streams of one realization, addressed by stream id.

    Stream id 0 is the arrival process; stream id ``n >= 1`` is the unit-rate
    service clock at site ``n``.
    """

    def __init__(self, seed: int, arrivals, mask: Optional[ValidityMask] = None):
        if not isinstance(arrivals, ArrivalProcessSpec):
            raise TypeError(f"unknown arrival spec {arrivals!r}")
        self.seed = int(seed)
        self.arrivals = arrivals
        self.mask = mask if mask is not None else AllValid()
        self._arrival_stream = arrivals._build(self.seed)
        self._site_streams: Dict[int, _PoissonStream] = {}

    @property
    def arrival_rate(self) -> float:
        return self.arrivals.rate

    def _site_stream(self, site: int) -> _PoissonStream:
        if site < 1:
            raise ValueError(f"site index starts at 1, got {site}")
        stream = self._site_streams.get(site)
        if stream is None:
            seq = np.random.SeedSequence(entropy=self.seed, spawn_key=(_SITE_NS, site))
            if isinstance(self.mask, BernoulliMask):
                mask_gen, p = self.mask._site_channel(self.seed, site)
                stream = _PoissonStream(seq, 1.0, mask_gen, p)
            else:
                stream = _PoissonStream(seq, 1.0)
            self._site_streams[site] = stream
        return stream

    def arrival_take(self, t: float) -> np.ndarray:
        times, _ = self._arrival_stream.take_until(t)
        return times

    def site_take(self, site: int, t: float) -> Tuple[np.ndarray, np.ndarray]:
        stream = self._site_stream(site)
        times, valid = stream.take_until(t)
        if isinstance(self.mask, NoneValid):
            valid = np.zeros(times.size, dtype=bool)
        elif isinstance(self.mask, CallableMask) and times.size:
            out = np.asarray(self.mask.fn(site, times), dtype=bool)
            if out.shape != times.shape:
                raise ValueError("callable mask must return one flag per time")
            valid = out
        return times, valid

    def site_discard(self, site: int, t: float) -> None:
        """Consume (and drop) every point of ``site`` up to ``t``.

        Used when a site activates mid-run: its earlier points were no-ops,
        but they must still be consumed so the stream stays aligned across
        coupled systems that activate the site at different times.
        """
        self.site_take(site, t)
