"""End-to-end free-riding experiments.

Each request slot draws a requester, samples responders among cooperative
peers, applies the selection policy and records at most one transfer per
pairing. In stable-marriage mode a round batches ceil(responder_fraction * n)
requests for one resource manager. Once ``epoch_size`` slots have elapsed
(rounding up to whole rounds) the batched transactions go through the
index-manager overlay, which produces the indices used by the next epoch.

Random streams (numpy PCG64, split from one SeedSequence):
    0 roles      which peers free-ride, and in which conversion wave
    1 bandwidth  assignment of bandwidth classes to peers
    2 requests   requester draws
    3 responders responder samples
    4 sizes      requested resource sizes
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .config import ExperimentConfig
from .core import init_indices, new_ledgers
from .metrics import (
    COOPERATIVE,
    FREE_RIDER,
    PeerTotals,
    RejectionTally,
    aad,
    cooperative_rejection_rate,
    export_scatter,
    summary_row,
)
from .overlay import MessageCounters, Transaction, assign_managers, process_epoch
from .selection import (
    REJECT_ALL,
    ThresholdPolicy,
    UploadOffer,
    build_downloader_preferences,
    build_uploader_preferences,
    resource_manager_pair,
    select_downloader_greedy,
)

logger = logging.getLogger(__name__)

STREAMS = ("roles", "bandwidth", "requests", "responders", "sizes")
NEVER = np.iinfo(np.int64).max
EXTREME_WAVES = 8


def make_streams(seed: int) -> dict[str, np.random.Generator]:
    children = np.random.SeedSequence(seed).spawn(len(STREAMS))
    return {name: np.random.Generator(np.random.PCG64(ss)) for name, ss in zip(STREAMS, children)}


@dataclass
class BehaviorSchedule:
    """Slot at which each peer starts free-riding (``NEVER`` for cooperative peers)."""

    conversion: np.ndarray

    @classmethod
    def build(cls, model: str, n: int, fr_fraction: float, total: int, rng) -> "BehaviorSchedule":
        order = rng.permutation(n)
        conversion = np.full(n, NEVER, dtype=np.int64)
        if model == "simple":
            conversion[order[: round(fr_fraction * n)]] = 0
        elif model == "adaptive":
            quota = round(fr_fraction * n)
            start = quota - quota // 2
            conversion[order[:start]] = 0
            conversion[order[start:quota]] = total // 2
        elif model == "extreme":
            wave = round(0.1 * n)
            for k in range(EXTREME_WAVES):
                conversion[order[k * wave:(k + 1) * wave]] = (k * total) // EXTREME_WAVES
        else:
            raise ValueError(f"unknown free-rider model {model!r}")
        return cls(conversion)

    def is_free_rider(self, peer: int, slot: int) -> bool:
        return bool(self.conversion[peer] <= slot)

    def free_riders(self, slot: int) -> np.ndarray:
        return np.flatnonzero(self.conversion <= slot)

    def cooperative(self, slot: int) -> np.ndarray:
        return np.flatnonzero(self.conversion > slot)

    def classes(self, slot: int) -> list[str]:
        return [FREE_RIDER if c <= slot else COOPERATIVE for c in self.conversion.tolist()]

    def change_points(self) -> list[int]:
        return sorted({int(c) for c in self.conversion.tolist() if 0 < c < NEVER})


def bandwidth_profile(kind: str, n: int, rng, uniform_value: int = 255) -> np.ndarray:
    order = rng.permutation(n)
    bw = np.empty(n, dtype=np.int64)
    if kind == "uniform":
        bw[:] = uniform_value
    elif kind == "type1":
        bw[order[: n // 2]] = 10
        bw[order[n // 2:]] = 20
    elif kind == "type2":
        rank = np.arange(n)
        bw[order] = 10 * (1 + (10 * rank) // n)
    else:
        raise ValueError(f"unknown bandwidth model {kind!r}")
    return bw


def draw_resource_size(rng, lo: int = 1, hi: int = 255, size=None):
    """Uniform integer on [lo, hi] inclusive."""
    return rng.integers(lo, hi + 1, size=size)


def sample_responders(eligible, fraction: float, rng, exclude: int | None = None) -> np.ndarray:
    """Uniform sample without replacement of ceil(fraction * |eligible|) peers, never ``exclude``.

    Returned ids are sorted ascending.
    """
    if not 0.0 < fraction <= 1.0:
        raise ValueError(f"fraction must lie in (0, 1], got {fraction!r}")
    eligible = np.asarray(eligible)
    if exclude is not None:
        eligible = eligible[eligible != exclude]
    if eligible.size == 0:
        return eligible
    k = math.ceil(fraction * eligible.size)
    return np.sort(rng.choice(eligible, size=k, replace=False))


@dataclass
class EpochReport:
    epoch: int
    end_slot: int
    transactions: int
    aad: float
    coop_rejection_pct: float
    report_msgs: int
    query_msgs: int
    # per-peer snapshots, kept only when the simulation is asked for them
    sbci: np.ndarray | None = None
    upload: np.ndarray | None = None
    download: np.ndarray | None = None


@dataclass
class ExperimentResult:
    config: ExperimentConfig
    totals: PeerTotals
    classes: list[str]
    sbci: np.ndarray
    tally: RejectionTally
    epochs: list[EpochReport] = field(default_factory=list)
    transactions: list[Transaction] = field(default_factory=list)
    bandwidth: np.ndarray | None = None
    schedule: BehaviorSchedule | None = None

    @property
    def aad(self) -> float:
        return aad(self.totals)

    @property
    def coop_rejection_pct(self) -> float:
        return cooperative_rejection_rate(self.tally)

    @property
    def report_msgs(self) -> int:
        return sum(e.report_msgs for e in self.epochs)

    @property
    def query_msgs(self) -> int:
        return sum(e.query_msgs for e in self.epochs)

    def summary_row(self) -> list[str]:
        c = self.config
        return summary_row(c.model, c.alpha, c.fr_fraction, self.aad, self.coop_rejection_pct,
                           self.report_msgs, self.query_msgs)

    def scatter_rows(self) -> list[list[str]]:
        return export_scatter(self.totals, self.classes)


EpochHook = Callable[[int, list, np.ndarray, np.ndarray, MessageCounters], None]


class Simulation:
    def __init__(self, config: ExperimentConfig, on_epoch: EpochHook | None = None, snapshots: bool = False):
        self.config = c = config
        self.rng = make_streams(c.seed)
        n = c.n_peers
        self.schedule = BehaviorSchedule.build(c.model, n, c.fr_fraction, c.total_transactions, self.rng["roles"])
        self.bandwidth = bandwidth_profile(c.bandwidth, n, self.rng["bandwidth"], uniform_value=c.resource_max)
        self.policy = ThresholdPolicy.for_alpha(c.alpha)
        self.x = init_indices(n, c.alpha)
        self.ledgers = new_ledgers(self.x)
        self.assignment = assign_managers(list(range(n)), c.seed)
        self.totals = PeerTotals.zeros(n)
        self.tally = RejectionTally()
        self.on_epoch = on_epoch
        self.snapshots = snapshots
        self.slot = 0
        self.epoch = 0
        self.pending: list[Transaction] = []
        self.log: list[Transaction] = []
        self.reports: list[EpochReport] = []
        self._coop = self.schedule.cooperative(0)
        self._is_fr = self.schedule.conversion <= 0

    def _set_slot(self, slot: int) -> None:
        if slot in self._changes:
            self._coop = self.schedule.cooperative(slot)
            self._is_fr = self.schedule.conversion <= slot

    def _cls(self, peer: int) -> str:
        return FREE_RIDER if self._is_fr[peer] else COOPERATIVE

    def _transfer(self, uploader: int, downloader: int, amount: int) -> None:
        tx = Transaction(self.epoch, uploader, downloader, int(amount))
        self.pending.append(tx)
        self.totals.record(uploader, downloader, amount)

    def _close_epoch(self) -> None:
        x_prev = self.x
        x_new, counters = process_epoch(self.pending, self.assignment, self.ledgers, x_prev,
                                        self.config.alpha, epoch=self.epoch)
        if self.on_epoch is not None:
            self.on_epoch(self.epoch, list(self.pending), x_prev, x_new, counters)
        self.x = x_new
        report = EpochReport(
            epoch=self.epoch, end_slot=self.slot, transactions=len(self.pending),
            aad=aad(self.totals), coop_rejection_pct=_quiet_rate(self.tally),
            report_msgs=counters.report_msgs, query_msgs=counters.query_msgs,
        )
        if self.snapshots:
            report.sbci = x_new.copy()
            report.upload = self.totals.upload.copy()
            report.download = self.totals.download.copy()
        self.reports.append(report)
        self.log.extend(self.pending)
        self.pending = []
        self.epoch += 1

    def run(self) -> ExperimentResult:
        c = self.config
        total = c.total_transactions
        self._changes = set(self.schedule.change_points())
        requesters = self.rng["requests"].integers(0, c.n_peers, size=total) if c.policy == "greedy" else None
        sizes = draw_resource_size(self.rng["sizes"], c.resource_min, c.resource_max, size=total)
        boundaries = sorted(self._changes)
        batch = math.ceil(c.responder_fraction * c.n_peers)
        epoch_start = 0
        while self.slot < total:
            self._set_slot(self.slot)
            if c.policy == "greedy":
                self._greedy_round(int(requesters[self.slot]), int(sizes[self.slot]))
                self.slot += 1
            else:
                # a matching round is never split by an epoch tick, only by a behaviour change
                limit = min([total] + [b for b in boundaries if b > self.slot])
                k = min(batch, limit - self.slot)
                self._matching_round(k, sizes[self.slot:self.slot + k])
                self.slot += k
            if self.slot - epoch_start >= c.epoch_size or self.slot >= total:
                self._close_epoch()
                epoch_start = self.slot
        return ExperimentResult(
            config=c, totals=self.totals, classes=self.schedule.classes(max(total - 1, 0)),
            sbci=self.x, tally=self.tally, epochs=self.reports, transactions=self.log,
            bandwidth=self.bandwidth, schedule=self.schedule,
        )

    def _greedy_round(self, requester: int, size: int) -> None:
        x = self.x
        responders = sample_responders(self._coop, self.config.responder_fraction, self.rng["responders"],
                                       exclude=requester)
        if responders.size == 0:
            self.tally.unserved += 1
            return
        # responders are sorted, so argmin's first hit is the lowest id among equal indices
        source = int(responders[np.argmin(x[responders])])
        decision = select_downloader_greedy([(requester, float(x[requester]))], self.policy)
        rejected = decision is REJECT_ALL
        self.tally.request(self._cls(requester), self._cls(source), rejected)
        if not rejected:
            self._transfer(source, requester, size)

    def _matching_round(self, k: int, sizes) -> None:
        x = self.x
        downloaders = np.sort(self.rng["requests"].choice(self.config.n_peers, size=k, replace=False))
        eligible = np.setdiff1d(self._coop, downloaders, assume_unique=True)
        uploaders = sample_responders(eligible, self.config.responder_fraction, self.rng["responders"])
        if uploaders.size == 0:
            self.tally.unserved += k
            return
        offers = [UploadOffer(int(u), float(x[u]), int(self.bandwidth[u])) for u in uploaders]
        requests = [(int(d), float(x[d])) for d in downloaders]
        up_list = build_uploader_preferences(requests, self.policy)
        down_list = build_downloader_preferences(offers)
        pairs = resource_manager_pair({o.peer: up_list for o in offers}, {d: down_list for d, _ in requests})
        partner = {d: u for u, d in pairs}
        for (d, xd), size in zip(requests, sizes.tolist()):
            if not self.policy.admits(xd):
                self.tally.request(self._cls(d), COOPERATIVE, True)
            elif d in partner:
                u = partner[d]
                self.tally.request(self._cls(d), self._cls(u), False)
                self._transfer(u, d, min(size, int(self.bandwidth[u])))
            else:
                self.tally.unserved += 1


def _quiet_rate(tally: RejectionTally) -> float:
    if tally.requests[(COOPERATIVE, COOPERATIVE)] == 0:
        return 0.0
    return cooperative_rejection_rate(tally)


def run_experiment(config: ExperimentConfig, on_epoch: EpochHook | None = None,
                   snapshots: bool = False) -> ExperimentResult:
    return Simulation(config, on_epoch=on_epoch, snapshots=snapshots).run()
