"""Fairness and efficiency metrics plus their CSV forms."""

from __future__ import annotations

import csv
import io
import logging
from collections import Counter
from dataclasses import dataclass, field

import numpy as np

logger = logging.getLogger(__name__)

COOPERATIVE = "cooperative"
FREE_RIDER = "free_rider"

SCATTER_HEADER = ["peer_id", "class", "upload", "download"]
SUMMARY_HEADER = ["model", "alpha", "fr_fraction", "aad", "coop_rejection_pct", "msgs_report", "msgs_query"]


@dataclass
class PeerTotals:
    upload: np.ndarray
    download: np.ndarray

    @classmethod
    def zeros(cls, n: int) -> "PeerTotals":
        return cls(np.zeros(n), np.zeros(n))

    def record(self, uploader: int, downloader: int, amount: float) -> None:
        self.upload[uploader] += amount
        self.download[downloader] += amount

    def copy(self) -> "PeerTotals":
        return PeerTotals(self.upload.copy(), self.download.copy())

    def __len__(self):
        return len(self.upload)


@dataclass
class RejectionTally:
    """Requests and rejections keyed by (requester class, uploader class)."""

    requests: Counter = field(default_factory=Counter)
    rejections: Counter = field(default_factory=Counter)
    unserved: int = 0

    def request(self, requester_class: str, uploader_class: str, rejected: bool) -> None:
        key = (requester_class, uploader_class)
        self.requests[key] += 1
        if rejected:
            self.rejections[key] += 1

    @property
    def total_requests(self) -> int:
        return sum(self.requests.values()) + self.unserved

    @property
    def total_rejections(self) -> int:
        return sum(self.rejections.values())


def aad(totals: PeerTotals) -> float:
    """Average absolute deviation of each peer's upload/download ratio from 1.

    A peer with no download contributes 0 if it never uploaded either and 1
    otherwise (an infinite ratio is capped at one unit of deviation).
    """
    n = len(totals)
    if n == 0:
        return 0.0
    up = np.asarray(totals.upload, dtype=float)
    down = np.asarray(totals.download, dtype=float)
    has_down = down > 0.0
    dev = np.where(up > 0.0, 1.0, 0.0)
    dev[has_down] = np.abs(1.0 - up[has_down] / down[has_down])
    return float(dev.sum() / n)


def cooperative_rejection_rate(tally: RejectionTally) -> float:
    """Percent of cooperative requests to cooperative uploaders that were rejected.

    Returns 0.0 (and logs a warning) when there were no such requests.
    """
    key = (COOPERATIVE, COOPERATIVE)
    asked = tally.requests[key]
    if asked == 0:
        logger.warning("no cooperative-to-cooperative requests; rejection rate reported as 0")
        return 0.0
    return 100.0 * tally.rejections[key] / asked


def _num(v) -> str:
    return format(float(v), ".12g")


def export_scatter(totals: PeerTotals, classes) -> list[list[str]]:
    """Rows ``peer_id,class,upload,download`` sorted by peer id (header excluded)."""
    return [[str(i), classes[i], _num(totals.upload[i]), _num(totals.download[i])] for i in range(len(totals))]


def rows_to_csv(header, rows) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    w.writerows(rows)
    return buf.getvalue()


def summary_row(model, alpha, fr_fraction, aad_value, rejection_pct, msgs_report, msgs_query) -> list[str]:
    return [str(model), _num(alpha), _num(fr_fraction), _num(aad_value), _num(rejection_pct),
            str(int(msgs_report)), str(int(msgs_query))]
