"""Adaptive windowing (ADWIN) change detector.

Keeps an exponential histogram of recent values: level r holds buckets of
exactly 2**r elements, at most ``max_buckets`` buckets per level; overflow
merges the two oldest buckets of a level into the next level. Bucket sums
are exact, so the window mean always equals the mean of the retained raw
sequence.

On every insertion each boundary between buckets is tested as a cut: a
change is declared when the two sub-window means differ by more than

    eps_cut = sqrt(ln(4 / delta') / (2 m)),   delta' = delta / (#cuts),

with m = n0*n1/(n0+n1), the pooled size of the sub-windows. When a cut
fails, the older sub-window is dropped and the scan repeats.

Buckets live in flat arrays ordered oldest to newest; the cut scan runs as
a compiled kernel when numba is available.
"""

from __future__ import annotations

import math

import numpy as np

try:
    from numba import njit

    _HAVE_NUMBA = True
except Exception:  # pragma: no cover - numba is optional
    _HAVE_NUMBA = False

    def njit(*args, **kwargs):
        def wrap(fn):
            return fn
        if args and callable(args[0]):
            return args[0]
        return wrap


@njit(cache=True)
def _scan_kernel(sums, sizes, length, total, n, ln_term):  # pragma: no cover - jitted
    n0 = 0.0
    s0 = 0.0
    for i in range(length - 1):
        n0 += sizes[i]
        s0 += sums[i]
        n1 = n - n0
        diff = s0 / n0 - (total - s0) / n1
        if diff * diff * (2.0 * n0 * n1 / (n0 + n1)) > ln_term:
            return i
    return -1


def _scan_numpy(sums, sizes, length, total, n, ln_term):
    if length < 2:
        return -1
    n0 = np.cumsum(sizes[: length - 1])
    s0 = np.cumsum(sums[: length - 1])
    n1 = n - n0
    diff = s0 / n0 - (total - s0) / n1
    fail = diff * diff * (2.0 * n0 * n1 / (n0 + n1)) > ln_term
    idx = int(np.argmax(fail))
    return idx if fail[idx] else -1


def epsilon_cut(m: float, delta_prime: float) -> float:
    """Closed-form cut threshold for pooled sub-window size ``m``."""
    return math.sqrt(math.log(4.0 / delta_prime) / (2.0 * m))


class Adwin:
    """Single-writer adaptive window over a real-valued series."""

    __slots__ = ("delta", "max_buckets", "_sums", "_vars", "_sizes", "_len",
                 "_level_counts", "n", "total", "variance_sum", "_use_numba")

    def __init__(self, delta: float = 0.05, max_buckets: int = 5):
        if not 0.0 < delta < 1.0:
            raise ValueError("delta must lie in (0, 1)")
        self.delta = delta
        self.max_buckets = max_buckets
        cap = 64
        self._sums = np.zeros(cap)
        self._vars = np.zeros(cap)
        self._sizes = np.zeros(cap)
        self._len = 0
        self._level_counts: list[int] = [0]
        self.n = 0
        self.total = 0.0
        self.variance_sum = 0.0
        self._use_numba = _HAVE_NUMBA

    # -- stats ---------------------------------------------------------------

    @property
    def mean(self) -> float:
        return self.total / self.n if self.n else 0.0

    @property
    def variance(self) -> float:
        return self.variance_sum / self.n if self.n else 0.0

    def bucket_count(self) -> int:
        return self._len

    def reset(self) -> None:
        self._len = 0
        self._level_counts = [0]
        self.n = 0
        self.total = 0.0
        self.variance_sum = 0.0

    # -- layout helpers ------------------------------------------------------
    # Flat arrays are ordered oldest -> newest: all buckets of level r+1
    # precede all buckets of level r.

    def _grow(self) -> None:
        cap = len(self._sums) * 2
        for name in ("_sums", "_vars", "_sizes"):
            arr = getattr(self, name)
            grown = np.zeros(cap)
            grown[: self._len] = arr[: self._len]
            setattr(self, name, grown)

    def _level_start(self, level: int) -> int:
        start = 0
        for r in range(len(self._level_counts) - 1, level, -1):
            start += self._level_counts[r]
        return start

    # -- insertion -------------------------------------------------------------

    def add(self, value: float) -> bool:
        changed, _ = self.add_and_check(value)
        return changed

    def add_and_check(self, value: float) -> tuple[bool, int]:
        """Append ``value``; returns (changed, number of dropped elements)."""
        value = float(value)
        if not math.isfinite(value):
            raise ValueError("ADWIN input must be finite")
        if self.n > 0:
            mean = self.total / self.n
            self.variance_sum += self.n * (value - mean) ** 2 / (self.n + 1)
        if self._len == len(self._sums):
            self._grow()
        self._sums[self._len] = value
        self._vars[self._len] = 0.0
        self._sizes[self._len] = 1.0
        self._len += 1
        self._level_counts[0] += 1
        self.n += 1
        self.total += value
        self._compress()
        dropped = self._detect()
        return dropped > 0, dropped

    def _compress(self) -> None:
        level = 0
        while level < len(self._level_counts) and self._level_counts[level] > self.max_buckets:
            if level + 1 == len(self._level_counts):
                self._level_counts.append(0)
            i = self._level_start(level)
            size = float(1 << level)
            s1, s2 = self._sums[i], self._sums[i + 1]
            v1, v2 = self._vars[i], self._vars[i + 1]
            m1, m2 = s1 / size, s2 / size
            self._sums[i] = s1 + s2
            self._vars[i] = v1 + v2 + size * size * (m1 - m2) ** 2 / (2.0 * size)
            self._sizes[i] = 2.0 * size
            # close the gap left by the absorbed bucket
            self._sums[i + 1: self._len - 1] = self._sums[i + 2: self._len]
            self._vars[i + 1: self._len - 1] = self._vars[i + 2: self._len]
            self._sizes[i + 1: self._len - 1] = self._sizes[i + 2: self._len]
            self._len -= 1
            self._level_counts[level] -= 2
            self._level_counts[level + 1] += 1
            level += 1

    # -- change detection --------------------------------------------------------

    def _detect(self) -> int:
        dropped_total = 0
        while self._len >= 2:
            n_cuts = self._len - 1
            ln_term = math.log(4.0 * n_cuts / self.delta)
            scan = _scan_kernel if self._use_numba else _scan_numpy
            cut = scan(self._sums, self._sizes, self._len, self.total, float(self.n), ln_term)
            if cut < 0:
                break
            dropped_total += self._drop_through(int(cut))
        return dropped_total

    def _drop_through(self, cut: int) -> int:
        """Remove buckets 0..cut inclusive (the oldest sub-window)."""
        dropped = 0
        for i in range(cut + 1):
            size = int(self._sizes[i])
            bsum = self._sums[i]
            bvar = self._vars[i]
            self.n -= size
            self.total -= bsum
            if self.n > 0:
                mean_removed = bsum / size
                mean_rest = self.total / self.n
                self.variance_sum -= bvar + size * self.n * (
                    mean_removed - mean_rest) ** 2 / (size + self.n)
            else:
                self.variance_sum = 0.0
            dropped += size
        remaining = cut + 1
        for level in range(len(self._level_counts) - 1, -1, -1):
            take = min(self._level_counts[level], remaining)
            self._level_counts[level] -= take
            remaining -= take
            if remaining == 0:
                break
        self._sums[: self._len - cut - 1] = self._sums[cut + 1: self._len]
        self._vars[: self._len - cut - 1] = self._vars[cut + 1: self._len]
        self._sizes[: self._len - cut - 1] = self._sizes[cut + 1: self._len]
        self._len -= cut + 1
        while len(self._level_counts) > 1 and self._level_counts[-1] == 0:
            self._level_counts.pop()
        return dropped
