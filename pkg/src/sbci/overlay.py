"""Distributed index-management plane.

Every peer (daughter) has its index computed by an index manager located by
hashing. Managers receive transaction-value reports from both sides of every
transaction, fetch counterpart indices from the other managers, and persist
two scalars per daughter: the current index and the cumulative transacted
volume. The network is abstract; messages are counted, not delivered.
"""

from __future__ import annotations

import bisect
import dataclasses
import hashlib
import io
from dataclasses import dataclass
from typing import Iterable, NamedTuple, Sequence

import numpy as np

from .core import PeerLedger, check_alpha, update_peer

LOG_HEADER = "epoch,uploader,downloader,amount"


class Transaction(NamedTuple):
    epoch: int
    uploader: int
    downloader: int
    amount: int | float


@dataclass
class MessageCounters:
    report_msgs: int = 0
    query_msgs: int = 0
    epoch: int = 0


def _ring_hash(seed: int, kind: str, peer: int) -> int:
    digest = hashlib.blake2b(f"{seed}:{kind}:{peer}".encode(), digest_size=8).digest()
    return int.from_bytes(digest, "big")


class ManagerAssignment:
    """Consistent-hash ring: a daughter's manager is the first live peer clockwise of its key."""

    def __init__(self, peers: Sequence[int], seed: int, managers: Sequence[int] | None = None):
        if not peers:
            raise ValueError("cannot assign managers for an empty peer list")
        self.peers = list(peers)
        self.seed = seed
        managers = self.peers if managers is None else list(managers)
        if not managers:
            raise ValueError("at least one live manager is required")
        self._ring = sorted((_ring_hash(seed, "node", m), m) for m in managers)
        self._positions = [pos for pos, _ in self._ring]
        self.mapping = {p: self._successor(_ring_hash(seed, "key", p)) for p in self.peers}

    def _successor(self, key: int) -> int:
        k = bisect.bisect_left(self._positions, key)
        return self._ring[k % len(self._ring)][1]

    @property
    def managers(self) -> list[int]:
        return [m for _, m in self._ring]

    def manager_of(self, peer: int) -> int:
        return self.mapping[peer]

    def daughters(self, manager: int) -> list[int]:
        return [p for p, m in self.mapping.items() if m == manager]

    def load(self) -> dict[int, int]:
        counts = {m: 0 for m in self.managers}
        for m in self.mapping.values():
            counts[m] += 1
        return counts

    def depart(self, peer: int) -> "ManagerAssignment":
        """Assignment after ``peer`` stops managing; its daughters pass to the next manager on the ring.

        The departed peer keeps its own ledger (it is still somebody's daughter).
        """
        remaining = [m for m in self.managers if m != peer]
        return ManagerAssignment(self.peers, self.seed, managers=remaining)


def assign_managers(peer_ids: Sequence[int], seed: int) -> ManagerAssignment:
    return ManagerAssignment(peer_ids, seed)


@dataclass
class _Inbox:
    up: dict
    down: dict


def process_epoch(
    transactions: Iterable,
    assignment: ManagerAssignment,
    ledgers: list[PeerLedger],
    x_prev,
    alpha: float,
    epoch: int = 0,
) -> tuple[np.ndarray, MessageCounters]:
    """Run one epoch of report / query / update through the index managers.

    ``transactions`` holds (uploader, downloader, amount) triples or
    ``Transaction`` records. ``ledgers`` is indexed by peer id and is the
    managers' persistent storage; it is updated in place. At epoch 0 managers
    already know the initial indices, so no queries are sent.
    """
    alpha = check_alpha(alpha)
    x_prev = np.asarray(x_prev, dtype=float)
    n = len(x_prev)
    if len(ledgers) != n:
        raise ValueError(f"{len(ledgers)} ledgers for {n} peers")
    counters = MessageCounters(epoch=epoch)

    # reporting phase: each side's value goes to that side's manager
    inboxes: dict[int, dict[int, _Inbox]] = {}
    for tx in transactions:
        up, down, amount = (tx.uploader, tx.downloader, tx.amount) if isinstance(tx, Transaction) else tx
        if not (0 <= up < n and 0 <= down < n):
            raise KeyError(f"unknown peer id in transaction {tx!r}")
        if up == down:
            raise ValueError(f"self-transfer in transaction {tx!r}")
        amount = float(amount)
        if not amount > 0.0:
            raise ValueError(f"non-positive amount in transaction {tx!r}")
        for daughter, book, other in ((up, "up", down), (down, "down", up)):
            box = inboxes.setdefault(assignment.manager_of(daughter), {}).setdefault(daughter, _Inbox({}, {}))
            entries = getattr(box, book)
            entries[other] = entries.get(other, 0.0) + amount
            counters.report_msgs += 1

    # query phase: answers come from the previous-epoch indices only
    fetched: dict[int, dict[int, float]] = {}
    for manager, boxes in inboxes.items():
        for daughter, box in boxes.items():
            counterparts = set(box.up) | set(box.down)
            if epoch != 0:
                counters.query_msgs += len(counterparts)
            known = {j: x_prev[j] for j in counterparts}
            known[daughter] = x_prev[daughter]
            fetched[daughter] = known

    # update phase
    x_new = x_prev.copy()
    for manager, boxes in inboxes.items():
        for daughter, box in boxes.items():
            x_new[daughter] = update_peer(
                sorted(box.up.items()), sorted(box.down.items()),
                fetched[daughter], ledgers[daughter], daughter, alpha,
            )
    return x_new, counters


def storage_footprint(assignment: ManagerAssignment, ledgers: Sequence[PeerLedger]) -> dict[int, int]:
    """Scalars persisted per manager: two for every daughter."""
    per_daughter = len(dataclasses.fields(PeerLedger))
    assert per_daughter == 2, "index managers must keep exactly two scalars per daughter"
    for ledger in ledgers:
        assert not hasattr(ledger, "__dict__"), "ledger carries extra state"
    load = assignment.load()
    return {m: per_daughter * k for m, k in load.items()}


def format_amount(amount) -> str:
    if isinstance(amount, (int, np.integer)):
        return str(int(amount))
    return repr(float(amount))


def parse_amount(token: str) -> int | float:
    token = token.strip()
    if any(c in token for c in ".eEnN"):
        return float(token)
    return int(token)


def format_log(transactions: Iterable[Transaction], header: bool = True) -> str:
    buf = io.StringIO()
    if header:
        buf.write(LOG_HEADER + "\n")
    for t in transactions:
        buf.write(f"{int(t.epoch)},{int(t.uploader)},{int(t.downloader)},{format_amount(t.amount)}\n")
    return buf.getvalue()


def parse_log(text: str) -> list[Transaction]:
    out = []
    for lineno, line in enumerate(text.splitlines(), 1):
        line = line.strip()
        if not line or line == LOG_HEADER:
            continue
        parts = line.split(",")
        if len(parts) != 4:
            raise ValueError(f"line {lineno}: expected 4 fields, got {len(parts)}")
        e, u, d, a = parts
        out.append(Transaction(int(e), int(u), int(d), parse_amount(a)))
    return out


def write_log(path, transactions: Iterable[Transaction]) -> None:
    with open(path, "w", newline="\n") as fh:
        fh.write(format_log(transactions))


def read_log(path) -> list[Transaction]:
    with open(path) as fh:
        return parse_log(fh.read())


def group_by_epoch(transactions: Iterable[Transaction]) -> dict[int, list[Transaction]]:
    out: dict[int, list[Transaction]] = {}
    for t in transactions:
        out.setdefault(t.epoch, []).append(t)
    return out
