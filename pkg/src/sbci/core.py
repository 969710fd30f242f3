"""Share-matrix algebra and the SBCI epoch update.

Peers are identified by 0-based integer ids. Index vectors are float64 numpy
arrays. Share matrices are stored sparsely (row -> {column: amount}) but can be
built from and exported to dense arrays; every summation runs over columns in
ascending order so dense and sparse inputs give bit-identical results.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np


class DimensionError(ValueError):
    """Raised when matrix, vector and ledger sizes disagree."""


class UndefinedRatio(ArithmeticError):
    """Raised when a ratio with a zero denominator is requested."""


def check_alpha(alpha: float) -> float:
    alpha = float(alpha)
    if not 0.0 < alpha < 1.0:
        raise ValueError(f"alpha must lie in the open interval (0, 1), got {alpha!r}")
    return alpha


def threshold_for(alpha: float) -> float:
    """Initial index and default admission threshold, alpha / (1 + alpha)."""
    alpha = check_alpha(alpha)
    return alpha / (1.0 + alpha)


class ShareMatrix:
    """Per-epoch transfer amounts; entry (i, j) is what peer i uploaded to peer j."""

    __slots__ = ("n", "_rows", "_cols")

    def __init__(self, n: int):
        if n < 1:
            raise ValueError("a share matrix needs at least one peer")
        self.n = int(n)
        self._rows: list[dict[int, float]] = [{} for _ in range(self.n)]
        self._cols: list[dict[int, float]] = [{} for _ in range(self.n)]

    @classmethod
    def from_dense(cls, dense) -> "ShareMatrix":
        arr = np.asarray(dense, dtype=float)
        if arr.ndim != 2 or arr.shape[0] != arr.shape[1]:
            raise DimensionError(f"share matrix must be square, got shape {arr.shape}")
        s = cls(arr.shape[0])
        for i, j in zip(*np.nonzero(arr)):
            s.add(int(i), int(j), float(arr[i, j]))
        return s

    @classmethod
    def from_triplets(cls, n: int, triplets: Iterable[tuple[int, int, float]]) -> "ShareMatrix":
        """Aggregate (uploader, downloader, amount) records in the order given."""
        s = cls(n)
        for i, j, amount in triplets:
            s.add(i, j, amount)
        return s

    def add(self, i: int, j: int, amount: float) -> None:
        if not (0 <= i < self.n and 0 <= j < self.n):
            raise DimensionError(f"peer id out of range for n={self.n}: ({i}, {j})")
        if i == j:
            raise ValueError(f"peer {i} cannot transfer to itself")
        amount = float(amount)
        if not amount >= 0.0:
            raise ValueError(f"transfer amounts must be non-negative, got {amount!r}")
        if amount == 0.0:
            return
        total = self._rows[i].get(j, 0.0) + amount
        self._rows[i][j] = total
        self._cols[j][i] = total

    def get(self, i: int, j: int) -> float:
        return self._rows[i].get(j, 0.0)

    def uploads(self, i: int) -> list[tuple[int, float]]:
        """Nonzero (downloader, amount) entries of row i, ascending by id."""
        return sorted(self._rows[i].items())

    def downloads(self, i: int) -> list[tuple[int, float]]:
        """Nonzero (uploader, amount) entries of column i, ascending by id."""
        return sorted(self._cols[i].items())

    def row_sum(self, i: int) -> float:
        return _ordered_sum(self.uploads(i))

    def col_sum(self, i: int) -> float:
        return _ordered_sum(self.downloads(i))

    def active_peers(self) -> list[int]:
        return [i for i in range(self.n) if self._rows[i] or self._cols[i]]

    def to_dense(self) -> np.ndarray:
        out = np.zeros((self.n, self.n))
        for i, row in enumerate(self._rows):
            for j, v in row.items():
                out[i, j] = v
        return out

    def triplets(self) -> list[tuple[int, int, float]]:
        return [(i, j, v) for i in range(self.n) for j, v in self.uploads(i)]

    def total(self) -> float:
        return sum(self.row_sum(i) for i in range(self.n))

    def __eq__(self, other):
        if not isinstance(other, ShareMatrix):
            return NotImplemented
        return self.n == other.n and self._rows == other._rows

    def __repr__(self):
        return f"ShareMatrix(n={self.n}, nnz={sum(len(r) for r in self._rows)})"


@dataclass(slots=True)
class PeerLedger:
    """Everything an index manager keeps about one daughter peer."""

    sbci: float
    total_transacted: float = 0.0


def _ordered_sum(entries: Sequence[tuple[int, float]]) -> float:
    acc = 0.0
    for _, v in entries:
        acc += v
    return acc


def _weighted_sum(entries: Sequence[tuple[int, float]], x) -> float:
    acc = 0.0
    for j, v in entries:
        acc += v * x[j]
    return acc


def _as_matrix(s) -> ShareMatrix:
    return s if isinstance(s, ShareMatrix) else ShareMatrix.from_dense(s)


def _check_dims(s: ShareMatrix, x) -> None:
    if len(x) != s.n:
        raise DimensionError(f"index vector has length {len(x)}, share matrix has n={s.n}")


def _check_peer(i: int, n: int) -> None:
    if not 0 <= i < n:
        raise DimensionError(f"peer id {i} out of range for n={n}")


def init_indices(n: int, alpha: float) -> np.ndarray:
    if n < 1:
        raise ValueError("need at least one peer")
    return np.full(int(n), threshold_for(alpha))


def upload_score(i: int, s, x) -> float:
    """SBCI-weighted upload of peer i, sum_j S[i][j] * x[j]."""
    s = _as_matrix(s)
    _check_dims(s, x)
    _check_peer(i, s.n)
    return _weighted_sum(s.uploads(i), x)


def weighted_download_score(i: int, s, x, alpha: float) -> float:
    """alpha * sum_j S[j][i] * x[j] + (1 - alpha) * sum_j S[j][i]."""
    alpha = check_alpha(alpha)
    s = _as_matrix(s)
    _check_dims(s, x)
    _check_peer(i, s.n)
    down = s.downloads(i)
    return alpha * _weighted_sum(down, x) + (1.0 - alpha) * _ordered_sum(down)


def bias_ratio(i: int, s, x) -> float:
    """Weighted upload over weighted download; raises UndefinedRatio on a zero denominator."""
    s = _as_matrix(s)
    _check_dims(s, x)
    _check_peer(i, s.n)
    den = _weighted_sum(s.downloads(i), x)
    if den == 0.0:
        raise UndefinedRatio(f"peer {i} has zero weighted download")
    return _weighted_sum(s.uploads(i), x) / den


def compute_beta(i: int, s, x, ledger: PeerLedger) -> float:
    """Share of peer i's lifetime volume that happened this epoch (0 when inactive)."""
    s = _as_matrix(s)
    _check_dims(s, x)
    _check_peer(i, s.n)
    beta, _ = _beta(s.uploads(i), s.downloads(i), x, ledger.total_transacted)
    return beta


def _beta(ups, downs, x, ttr_prev: float) -> tuple[float, float]:
    """Return (beta, new cumulative total). The total only advances on active epochs."""
    down_raw = _ordered_sum(downs)
    activity = _weighted_sum(ups, x) + down_raw
    if activity == 0.0:
        return 0.0, ttr_prev
    delta = _ordered_sum(ups) + down_raw
    ttr = ttr_prev + delta
    return delta / ttr, ttr


def update_peer(ups, downs, x_prev, ledger: PeerLedger, i: int, alpha: float) -> float:
    """Apply one epoch to a single peer and advance its ledger.

    ``ups`` and ``downs`` are (counterpart, amount) pairs ascending by counterpart;
    ``x_prev`` is read for counterpart indices and is never written. Shared by the
    in-process update and the index-manager overlay so both produce the same bits.
    """
    beta, ttr = _beta(ups, downs, x_prev, ledger.total_transacted)
    old = float(x_prev[i])
    if beta == 0.0:
        return old
    u = _weighted_sum(ups, x_prev)
    d = alpha * _weighted_sum(downs, x_prev) + (1.0 - alpha) * _ordered_sum(downs)
    if u + d == 0.0:
        raise ArithmeticError(f"peer {i}: positive beta with zero activity (0/0)")
    new = (1.0 - beta) * old + beta * (u / (u + d))
    ledger.sbci = new
    ledger.total_transacted = ttr
    return new


def new_ledgers(x) -> list[PeerLedger]:
    return [PeerLedger(float(v)) for v in x]


def epoch_update(s, x_prev, ledgers: list[PeerLedger], alpha: float) -> np.ndarray:
    """Compute x(t_n) from one epoch's share matrix and advance the ledgers in place.

    Ledgers of peers that were active this epoch receive the new index and total.
    """
    alpha = check_alpha(alpha)
    s = _as_matrix(s)
    _check_dims(s, x_prev)
    if len(ledgers) != s.n:
        raise DimensionError(f"{len(ledgers)} ledgers for n={s.n}")
    x_prev = np.asarray(x_prev, dtype=float)
    x_new = x_prev.copy()
    for i in s.active_peers():
        x_new[i] = update_peer(s.uploads(i), s.downloads(i), x_prev, ledgers[i], i, alpha)
    return x_new
