"""State types, transition rules and order relations for back-pressure tandem queues.

Sites are numbered from 1. A state holds one queue length per site; under the
back-pressure rule site ``n`` may serve only while its queue strictly exceeds
the queue at site ``n + 1``. For a finite ladder of ``N`` sites the virtual
queue at site ``N + 1`` is identically zero, so site ``N`` serves whenever it
is non-empty and service there is a departure. An unbounded ladder is marked
with the ``INFINITE`` horizon; such states must have finite support.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum
from typing import NamedTuple, Sequence, Union

__all__ = [
    "INFINITE",
    "Horizon",
    "QueueState",
    "Arrival",
    "ServiceRing",
    "Event",
    "OrderRelation",
    "BusyInterval",
    "is_eligible",
    "apply_transition",
    "busy_interval",
    "busy_interval_packed",
    "compare",
    "check_tail_dominance",
]

#: Horizon marker for the unbounded site ladder. Compares above every site
#: index, which is the only property the code relies on.
INFINITE = math.inf

Horizon = Union[int, float]


def _validate_horizon(horizon: Horizon) -> None:
    if horizon is INFINITE or horizon == math.inf:
        return
    if not isinstance(horizon, int) or isinstance(horizon, bool) or horizon < 1:
        raise ValueError(f"horizon must be a positive int or INFINITE, got {horizon!r}")


@dataclass(frozen=True)
class QueueState:
    """Immutable queue-length vector.

    ``lengths[i]`` is the queue at site ``i + 1``. For a finite horizon the
    tuple has exactly ``horizon`` entries; for ``INFINITE`` it carries the
    finite support (trailing zeros trimmed).
    """

    lengths: tuple
    horizon: Horizon

    def __post_init__(self):
        _validate_horizon(self.horizon)
        lengths = tuple(int(x) for x in self.lengths)
        if any(x < 0 for x in lengths):
            raise ValueError("queue lengths must be non-negative")
        if self.horizon is INFINITE or self.horizon == math.inf:
            while lengths and lengths[-1] == 0:
                lengths = lengths[:-1]
        else:
            if len(lengths) != self.horizon:
                raise ValueError(
                    f"finite horizon {self.horizon} needs exactly that many entries, "
                    f"got {len(lengths)}"
                )
        object.__setattr__(self, "lengths", lengths)

    @classmethod
    def zero(cls, horizon: Horizon) -> "QueueState":
        _validate_horizon(horizon)
        if horizon is INFINITE or horizon == math.inf:
            return cls((), INFINITE)
        return cls((0,) * int(horizon), horizon)

    def queue(self, site: int) -> int:
        """Queue length at ``site`` (1-based); zero beyond the stored support."""
        if site < 1:
            raise ValueError(f"site index starts at 1, got {site}")
        if self.horizon != math.inf and site > self.horizon:
            raise ValueError(f"site {site} beyond horizon {self.horizon}")
        if site > len(self.lengths):
            return 0
        return self.lengths[site - 1]

    @property
    def total(self) -> int:
        """Total customer count across all sites."""
        return sum(self.lengths)

    @property
    def support(self) -> int:
        """Largest site with a non-zero queue (0 for the empty state)."""
        for i in range(len(self.lengths), 0, -1):
            if self.lengths[i - 1] > 0:
                return i
        return 0


@dataclass(frozen=True)
class Arrival:
    """External arrival into site 1."""


@dataclass(frozen=True)
class ServiceRing:
    """Clock ring at ``site``; moves one customer to ``site + 1`` if eligible."""

    site: int


Event = Union[Arrival, ServiceRing]


class OrderRelation(Enum):
    COMPONENTWISE = "componentwise"
    TAIL_SUM = "tail_sum"


class BusyInterval(NamedTuple):
    """Result of a busy-interval scan.

    ``saturated`` is set when a finite state has no qualifying site, in which
    case ``site`` is reported as ``N + 1``.
    """

    site: int
    saturated: bool


def is_eligible(state: QueueState, site: int) -> bool:
    """True when the back-pressure rule lets ``site`` serve.

    Requires ``Q_site > Q_{site+1}``, reading the queue beyond a finite edge
    as zero, so the last site of a finite ladder is eligible iff non-empty.
    """
    here = state.queue(site)
    if state.horizon != math.inf and site == state.horizon:
        nxt = 0
    else:
        nxt = state.queue(site + 1)
    return here > nxt


def apply_transition(state: QueueState, event: Event) -> QueueState:
    """Apply one event and return the new state.

    An ineligible ``ServiceRing`` is a suppressed move and returns the state
    unchanged; this mirrors how clock points that find nothing to do are
    simply ignored.
    """
    if isinstance(event, Arrival):
        lengths = list(state.lengths) or [0]
        lengths[0] += 1
        return QueueState(tuple(lengths), state.horizon)
    if isinstance(event, ServiceRing):
        site = event.site
        if not is_eligible(state, site):
            return state
        lengths = list(state.lengths)
        if site > len(lengths):
            raise AssertionError("eligible site must be within support")
        lengths[site - 1] -= 1
        if state.horizon == math.inf or site < state.horizon:
            while len(lengths) < site + 1:
                lengths.append(0)
            lengths[site] += 1
        # at the finite edge the move is a departure
        return QueueState(tuple(lengths), state.horizon)
    raise TypeError(f"unknown event {event!r}")


def busy_interval(state: QueueState) -> BusyInterval:
    """Left-most empty site: ``min {n : Q_n = 0}``.

    Finite states with every site occupied report ``N + 1`` with the
    ``saturated`` flag set; with the unbounded horizon the finite support
    guarantees a genuine empty site.
    """
    for n in range(1, len(state.lengths) + 1):
        if state.lengths[n - 1] == 0:
            return BusyInterval(n, False)
    if state.horizon == math.inf:
        return BusyInterval(len(state.lengths) + 1, False)
    if len(state.lengths) < state.horizon:
        raise AssertionError("finite state shorter than horizon")
    return BusyInterval(state.horizon + 1, True)


def busy_interval_packed(state: QueueState) -> BusyInterval:
    """Left-most site left empty after packing all customers to the left:
    ``min {n : Q_1 + ... + Q_n < n}``.

    Always at least :func:`busy_interval` of the same state. Saturation is
    reported as in :func:`busy_interval`.
    """
    prefix = 0
    for n in range(1, len(state.lengths) + 1):
        prefix += state.lengths[n - 1]
        if prefix < n:
            return BusyInterval(n, False)
    n = len(state.lengths)
    if state.horizon == math.inf:
        # beyond the support the prefix sum is the (finite) total
        return BusyInterval(max(n + 1, state.total + 1), False)
    if prefix < state.horizon:
        raise AssertionError("unreachable: scan covers the whole finite state")
    return BusyInterval(state.horizon + 1, True)


def _padded(a: QueueState, b: QueueState):
    width = max(len(a.lengths), len(b.lengths))
    xa = list(a.lengths) + [0] * (width - len(a.lengths))
    xb = list(b.lengths) + [0] * (width - len(b.lengths))
    return xa, xb


def compare(a: QueueState, b: QueueState, relation: OrderRelation) -> bool:
    """Partial-order comparison ``a <= b``.

    ``COMPONENTWISE`` compares per site. ``TAIL_SUM`` compares every suffix
    sum ``sum_{k >= n} Q_k``; it is coarser (componentwise implies tail-sum).
    States of different horizons are compared on padded supports.
    """
    xa, xb = _padded(a, b)
    if relation is OrderRelation.COMPONENTWISE:
        return all(x <= y for x, y in zip(xa, xb))
    if relation is OrderRelation.TAIL_SUM:
        ta = 0
        tb = 0
        for x, y in zip(reversed(xa), reversed(xb)):
            ta += x
            tb += y
            if ta > tb:
                return False
        return True
    raise TypeError(f"unknown relation {relation!r}")


def check_tail_dominance(state: QueueState) -> bool:
    """Check ``Q_n + 1 >= Q_k`` for every pair ``k > n``.

    This holds at the zero state and is preserved by the dynamics; it fails
    only for states (such as hand-built ones) with a strictly taller queue
    somewhere to the right.
    """
    suffix_max = 0
    for n in range(len(state.lengths), 0, -1):
        if n < len(state.lengths):
            suffix_max = max(suffix_max, state.lengths[n])
        if state.lengths[n - 1] + 1 < suffix_max:
            return False
    return True
