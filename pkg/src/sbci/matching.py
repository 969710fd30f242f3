"""Gale-Shapley stable matching with partial lists and unequal sides."""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass, field
from typing import Hashable, Mapping, Sequence


class PreferenceError(ValueError):
    pass


@dataclass(frozen=True)
class PreferenceProfile:
    """Strict preference lists; a counterpart missing from a list is unacceptable.

    Dict insertion order of ``proposers`` fixes the proposal order.
    """

    proposers: Mapping[Hashable, Sequence[Hashable]]
    acceptors: Mapping[Hashable, Sequence[Hashable]]

    def __post_init__(self):
        _check_side(self.proposers, self.acceptors, "proposer")
        _check_side(self.acceptors, self.proposers, "acceptor")

    def acceptable(self, p, a) -> bool:
        return a in self.proposers.get(p, ()) and p in self.acceptors.get(a, ())


def _check_side(side, other, label):
    for pid, prefs in side.items():
        if len(set(prefs)) != len(prefs):
            raise PreferenceError(f"{label} {pid!r} lists a candidate twice")
        unknown = [c for c in prefs if c not in other]
        if unknown:
            raise PreferenceError(f"{label} {pid!r} lists unknown ids {unknown!r}")


@dataclass
class Matching:
    pairs: dict = field(default_factory=dict)  # proposer -> acceptor
    unmatched_proposers: list = field(default_factory=list)
    unmatched_acceptors: list = field(default_factory=list)
    proposals: int = 0

    @property
    def unmatched(self) -> list:
        return self.unmatched_proposers + self.unmatched_acceptors

    def pair_set(self) -> set:
        return set(self.pairs.items())


def stable_match(profile: PreferenceProfile) -> Matching:
    """Proposer-optimal stable matching (deferred acceptance)."""
    rank = {a: {p: r for r, p in enumerate(prefs)} for a, prefs in profile.acceptors.items()}
    next_choice = {p: 0 for p in profile.proposers}
    held: dict = {}  # acceptor -> proposer
    free = deque(profile.proposers)
    proposals = 0
    while free:
        p = free.popleft()
        prefs = profile.proposers[p]
        while next_choice[p] < len(prefs):
            a = prefs[next_choice[p]]
            next_choice[p] += 1
            proposals += 1
            r = rank[a].get(p)
            if r is None:
                continue
            current = held.get(a)
            if current is None:
                held[a] = p
                break
            if r < rank[a][current]:
                held[a] = p
                free.append(current)
                break
    pairs = {p: a for a, p in held.items()}
    return Matching(
        pairs={p: pairs[p] for p in profile.proposers if p in pairs},
        unmatched_proposers=[p for p in profile.proposers if p not in pairs],
        unmatched_acceptors=[a for a in profile.acceptors if a not in held],
        proposals=proposals,
    )


def _prefers(prefs: Sequence, candidate, current) -> bool:
    """True if ``candidate`` is acceptable and ranked above ``current`` (None = single)."""
    if candidate not in prefs:
        return False
    if current is None:
        return True
    return prefs.index(candidate) < prefs.index(current)


def verify_stability(profile: PreferenceProfile, m: Matching) -> list[tuple]:
    """All blocking (proposer, acceptor) pairs of ``m``; empty iff ``m`` is stable."""
    partner_of_acceptor = {a: p for p, a in m.pairs.items()}
    blocking = []
    for p, p_prefs in profile.proposers.items():
        current = m.pairs.get(p)
        for a in p_prefs:
            if a == current:
                break  # everything further down is worse than the current partner
            if _prefers(profile.acceptors[a], p, partner_of_acceptor.get(a)):
                blocking.append((p, a))
    return blocking
