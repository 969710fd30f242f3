"""Transaction-partner policies: greedy SBCI selection and resource-manager pairing."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

from .core import threshold_for
from .matching import PreferenceProfile, stable_match

REJECT_ALL = None


@dataclass(frozen=True)
class ThresholdPolicy:
    threshold: float

    def __post_init__(self):
        if not 0.0 <= self.threshold <= 1.0:
            raise ValueError(f"threshold must lie in [0, 1], got {self.threshold!r}")

    @classmethod
    def for_alpha(cls, alpha: float) -> "ThresholdPolicy":
        return cls(threshold_for(alpha))

    def admits(self, sbci: float) -> bool:
        # "less than the threshold" is rejected, so equality is admitted
        return not sbci < self.threshold


@dataclass(frozen=True)
class UploadOffer:
    peer: int
    sbci: float
    bandwidth: float = 1.0

    def __post_init__(self):
        if not 0.0 <= self.sbci <= 1.0:
            raise ValueError(f"sbci must lie in [0, 1], got {self.sbci!r}")
        if not self.bandwidth > 0:
            raise ValueError(f"bandwidth must be positive, got {self.bandwidth!r}")


def select_source_greedy(responders: Sequence[UploadOffer]) -> int:
    """Cheapest uploader: minimum SBCI, ties to the lowest peer id."""
    if not responders:
        raise ValueError("no responders to choose from")
    return min(responders, key=lambda o: (o.sbci, o.peer)).peer


def select_downloader_greedy(requesters: Sequence[tuple[int, float]], policy: ThresholdPolicy):
    """Highest-SBCI admissible requester, or ``REJECT_ALL`` when none passes the threshold."""
    if not requesters:
        raise ValueError("no requesters to choose from")
    admitted = [(peer, x) for peer, x in requesters if policy.admits(x)]
    if not admitted:
        return REJECT_ALL
    return min(admitted, key=lambda r: (-r[1], r[0]))[0]


def build_downloader_preferences(offers: Sequence[UploadOffer]) -> list[int]:
    """Rank uploaders: bandwidth descending, then SBCI ascending, then id."""
    if not offers:
        raise ValueError("no offers to rank")
    return [o.peer for o in sorted(offers, key=lambda o: (-o.bandwidth, o.sbci, o.peer))]


def build_uploader_preferences(requesters: Sequence[tuple[int, float]], policy: ThresholdPolicy) -> list[int]:
    admitted = [(peer, x) for peer, x in requesters if policy.admits(x)]
    return [peer for peer, _ in sorted(admitted, key=lambda r: (-r[1], r[0]))]


def resource_manager_pair(uploader_prefs, downloader_prefs) -> list[tuple[int, int]]:
    """Downloader-proposing stable pairing; returns (uploader, downloader) pairs.

    ``uploader_prefs`` and ``downloader_prefs`` map each peer id to its ordered list.
    Pairs come back in downloader order.
    """
    profile = PreferenceProfile(proposers=downloader_prefs, acceptors=uploader_prefs)
    m = stable_match(profile)
    return [(u, d) for d, u in m.pairs.items()]
