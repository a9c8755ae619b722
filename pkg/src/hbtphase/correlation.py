"""Streaming, mergeable auto/cross correlation estimators.

``CorrelationAccumulator`` holds, for every lag on its grid, the pair count and
the sums ``sum a``, ``sum b``, ``sum a*b`` over pairs ``(a[i], b[i + lag])``,
plus zero-lag moments of each channel.  Sums are kept per block of
``block_length`` samples (a pair belongs to the block of its later sample) so
that a delete-one-block jackknife can give error bars for serially correlated
data.  Integer inputs are accumulated in int64, so merging two accumulators
reproduces the accumulator of the concatenated stream bit for bit.

Block alignment across a merge is exact when the left operand's length is a
multiple of ``block_length`` or the right operand is a single sample (the
``push_pair`` path); otherwise only the block split of the error estimate is
approximate, the totals stay exact.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

DEFAULT_MIN_SAMPLES = 1000


class InsufficientSamplesError(ValueError):
    pass


class ZeroMeanError(ValueError):
    pass


@dataclass(frozen=True)
class Estimate:
    value: float
    stderr: float
    n: int


@dataclass(frozen=True)
class CorrelationCurve:
    lags: np.ndarray
    value: np.ndarray
    stderr: np.ndarray
    n_pairs: np.ndarray


# column order of the per-lag block statistics
_N, _SA, _SB, _SAB = range(4)
# column order of the zero-lag channel moments
_M_N, _M_A, _M_B, _M_AA, _M_BB = range(5)


def _block_sums(values: np.ndarray, positions_start: int, n_total: int, block_length: int, n_blocks: int):
    """Sum ``values`` (sample positions ``positions_start..n_total-1``) into blocks."""
    padded = np.zeros(n_blocks * block_length, dtype=values.dtype)
    padded[positions_start:n_total] = values
    return padded.reshape(n_blocks, block_length).sum(axis=1)


class CorrelationAccumulator:
    def __init__(self, lags=(0,), block_length: int = 1, integer: bool = True):
        lags = np.unique(np.asarray(lags, dtype=np.int64))
        if len(lags) == 0:
            raise ValueError("lag grid is empty")
        if block_length < 1:
            raise ValueError("block_length must be >= 1")
        self.lags = lags
        self.block_length = int(block_length)
        self.integer = bool(integer)
        self.dtype = np.int64 if integer else np.float64
        self.max_lag = int(np.max(np.abs(lags)))
        self.n = 0
        self.lag_stats = np.zeros((0, len(lags), 4), dtype=self.dtype)
        self.moments = np.zeros((0, 5), dtype=self.dtype)
        self._head_a = np.zeros(0, self.dtype)
        self._head_b = np.zeros(0, self.dtype)
        self._tail_a = np.zeros(0, self.dtype)
        self._tail_b = np.zeros(0, self.dtype)

    # -- construction -----------------------------------------------------

    def _like(self) -> "CorrelationAccumulator":
        return CorrelationAccumulator(self.lags, self.block_length, self.integer)

    def _coerce(self, x) -> np.ndarray:
        x = np.asarray(x)
        if self.integer:
            if x.size and (not np.issubdtype(x.dtype, np.integer) and not np.all(x == np.round(x))):
                raise ValueError("integer accumulator needs integer counts")
            x = x.astype(np.int64)
            if x.size and x.min() < 0:
                raise ValueError("counts must be non-negative")
        else:
            x = x.astype(np.float64)
        return x

    @classmethod
    def from_arrays(cls, a, b, lags=(0,), block_length: int = 1, integer: bool = True):
        acc = cls(lags, block_length, integer)
        acc._fill(acc._coerce(a), acc._coerce(b))
        return acc

    def _fill(self, a: np.ndarray, b: np.ndarray) -> None:
        if a.shape != b.shape or a.ndim != 1:
            raise ValueError("a and b must be 1-D arrays of equal length")
        n = len(a)
        B = self.block_length
        n_blocks = -(-n // B)
        stats = np.zeros((n_blocks, len(self.lags), 4), dtype=self.dtype)
        for j, lag in enumerate(self.lags):
            L = abs(int(lag))
            if L >= n:
                continue
            # products indexed by the later sample position p = L..n-1
            if lag >= 0:
                ea, eb = a[: n - L], b[L:]
            else:
                ea, eb = a[L:], b[: n - L]
            stats[:, j, _N] = _block_sums(np.ones(n - L, self.dtype), L, n, B, n_blocks)
            stats[:, j, _SA] = _block_sums(ea, L, n, B, n_blocks)
            stats[:, j, _SB] = _block_sums(eb, L, n, B, n_blocks)
            stats[:, j, _SAB] = _block_sums(ea * eb, L, n, B, n_blocks)
        mom = np.zeros((n_blocks, 5), dtype=self.dtype)
        mom[:, _M_N] = _block_sums(np.ones(n, self.dtype), 0, n, B, n_blocks)
        mom[:, _M_A] = _block_sums(a, 0, n, B, n_blocks)
        mom[:, _M_B] = _block_sums(b, 0, n, B, n_blocks)
        mom[:, _M_AA] = _block_sums(a * a, 0, n, B, n_blocks)
        mom[:, _M_BB] = _block_sums(b * b, 0, n, B, n_blocks)
        self.n = n
        self.lag_stats = stats
        self.moments = mom
        m = self.max_lag
        self._head_a, self._head_b = a[:m].copy(), b[:m].copy()
        self._tail_a, self._tail_b = a[n - min(m, n):].copy(), b[n - min(m, n):].copy()

    # -- streaming --------------------------------------------------------

    def push_pair(self, a, b) -> "CorrelationAccumulator":
        self.merge_in(self.from_arrays([a], [b], self.lags, self.block_length, self.integer))
        return self

    def push_block(self, a, b) -> "CorrelationAccumulator":
        self.merge_in(self.from_arrays(a, b, self.lags, self.block_length, self.integer))
        return self

    def _check_compatible(self, other: "CorrelationAccumulator") -> None:
        if (not np.array_equal(self.lags, other.lags) or self.block_length != other.block_length
                or self.integer != other.integer):
            raise ValueError("accumulators have different lag grids, block lengths or types")

    def merge(self, other: "CorrelationAccumulator") -> "CorrelationAccumulator":
        """New accumulator equal to the one for ``self``'s stream followed by ``other``'s."""
        out = self._like()
        out._copy_from(self)
        out.merge_in(other)
        return out

    __or__ = merge

    def _copy_from(self, src: "CorrelationAccumulator") -> None:
        self.n = src.n
        self.lag_stats = src.lag_stats.copy()
        self.moments = src.moments.copy()
        self._head_a, self._head_b = src._head_a.copy(), src._head_b.copy()
        self._tail_a, self._tail_b = src._tail_a.copy(), src._tail_b.copy()

    def merge_in(self, other: "CorrelationAccumulator") -> None:
        self._check_compatible(other)
        if other.n == 0:
            return
        if self.n == 0:
            self._copy_from(other)
            return
        B = self.block_length
        offset = self.n
        n_total = offset + other.n
        first = offset // B
        n_blocks = max(-(-n_total // B), first + len(other.lag_stats))
        stats = np.zeros((n_blocks, len(self.lags), 4), dtype=self.dtype)
        mom = np.zeros((n_blocks, 5), dtype=self.dtype)
        stats[: len(self.lag_stats)] += self.lag_stats
        mom[: len(self.moments)] += self.moments
        stats[first: first + len(other.lag_stats)] += other.lag_stats
        mom[first: first + len(other.moments)] += other.moments

        # pairs straddling the junction: later sample in `other`, earlier in `self`
        tail_a, tail_b = self._tail_a, self._tail_b
        nt = len(tail_a)
        for j, lag in enumerate(self.lags):
            L = abs(int(lag))
            if L == 0:
                continue
            # later positions p = offset + u, u = 0..L-1 (within other),
            # earlier positions p - L = offset - L + u (within self)
            u = np.arange(min(L, other.n))
            earlier = offset - L + u
            ok = earlier >= 0
            u, earlier = u[ok], earlier[ok]
            if len(u) == 0:
                continue
            tail_idx = earlier - (offset - nt)
            if lag > 0:
                ea, eb = tail_a[tail_idx], other._head_b[u]
            else:
                ea, eb = other._head_a[u], tail_b[tail_idx]
            blk = (offset + u) // B
            for col, vals in ((_N, np.ones(len(u), self.dtype)), (_SA, ea), (_SB, eb), (_SAB, ea * eb)):
                np.add.at(stats[:, j, col], blk, vals)

        m = self.max_lag
        self._head_a = np.concatenate([self._head_a, other._head_a])[:m]
        self._head_b = np.concatenate([self._head_b, other._head_b])[:m]
        ta = np.concatenate([self._tail_a, other._tail_a])
        tb = np.concatenate([self._tail_b, other._tail_b])
        self._tail_a, self._tail_b = ta[len(ta) - min(m, len(ta)):], tb[len(tb) - min(m, len(tb)):]
        self.n = n_total
        self.lag_stats = stats
        self.moments = mom

    # -- totals -----------------------------------------------------------

    def totals(self) -> np.ndarray:
        """Per-lag totals, shape ``(n_lags, 4)``: pairs, sum a, sum b, sum ab."""
        return self.lag_stats.sum(axis=0)

    def moment_totals(self) -> np.ndarray:
        return self.moments.sum(axis=0)

    def lag_index(self, lag: int) -> int:
        idx = np.flatnonzero(self.lags == lag)
        if len(idx) == 0:
            raise KeyError(f"lag {lag} not on the grid")
        return int(idx[0])

    def defined(self, lag: int = 0) -> bool:
        """Whether a ratio estimate exists at ``lag`` (>= 2 pairs, non-zero means)."""
        t = self.totals()[self.lag_index(lag)]
        return t[_N] >= 2 and t[_SA] != 0 and t[_SB] != 0

    def __eq__(self, other) -> bool:
        if not isinstance(other, CorrelationAccumulator):
            return NotImplemented
        return (
            np.array_equal(self.lags, other.lags)
            and self.n == other.n
            and np.array_equal(self.lag_stats, other.lag_stats)
            and np.array_equal(self.moments, other.moments)
        )


def _jackknife(blocks: np.ndarray, total: np.ndarray, fn) -> tuple[float, float]:
    """Estimate ``fn(total)`` with a delete-one-block jackknife over non-empty blocks.

    ``fn`` maps a ``(..., n_columns)`` float array of sums to estimates.
    """
    total_f = total.astype(float)
    value = float(fn(total_f))
    used = blocks[np.any(blocks != 0, axis=1)]
    if len(used) < 2:
        return value, math.nan
    with np.errstate(divide="ignore", invalid="ignore"):
        loo = np.asarray(fn(total_f[None, :] - used.astype(float)), dtype=float)
    loo = loo[np.isfinite(loo)]
    k = len(loo)
    if k < 2:
        return value, math.nan
    var = (k - 1) / k * np.sum((loo - loo.mean()) ** 2)
    return value, float(math.sqrt(var))


def _ratio(t):
    return t[..., _SAB] * t[..., _N] / (t[..., _SA] * t[..., _SB])


def g2_cross_at(acc: CorrelationAccumulator, lag: int = 0, min_samples: int = DEFAULT_MIN_SAMPLES) -> Estimate:
    """Ratio-of-means ``<a(t) b(t+lag)> / (<a><b>)`` with jackknife error."""
    j = acc.lag_index(lag)
    blocks = acc.lag_stats[:, j, :]
    total = blocks.sum(axis=0)
    n = int(total[_N])
    if n < max(min_samples, 2):
        raise InsufficientSamplesError(f"{n} pairs at lag {lag}, need {max(min_samples, 2)}")
    if total[_SA] == 0 or total[_SB] == 0:
        raise ZeroMeanError("zero mean in one channel")
    value, err = _jackknife(blocks, total, _ratio)
    return Estimate(value, err, n)


def g2_cross(acc: CorrelationAccumulator, min_samples: int = DEFAULT_MIN_SAMPLES) -> CorrelationCurve:
    ests = [g2_cross_at(acc, int(lag), min_samples) for lag in acc.lags]
    return CorrelationCurve(
        lags=acc.lags.copy(),
        value=np.array([e.value for e in ests]),
        stderr=np.array([e.stderr for e in ests]),
        n_pairs=np.array([e.n for e in ests]),
    )


def g2_auto_zero(acc: CorrelationAccumulator, channel: str = "a", factorial: bool | None = None,
                 min_samples: int = DEFAULT_MIN_SAMPLES) -> Estimate:
    """Zero-lag autocorrelation of one channel.

    For photon counts (integer accumulators) the factorial moment
    ``<N(N-1)>/<N>^2`` removes the shot-noise contribution; for intensities
    the plain ``<I^2>/<I>^2`` is used.  Constant counts N give ``(N-1)/N``.
    """
    if factorial is None:
        factorial = acc.integer
    ci, cs = {"a": (_M_A, _M_AA), "b": (_M_B, _M_BB)}[channel]
    blocks = acc.moments
    total = blocks.sum(axis=0)
    n = int(total[_M_N])
    if n < max(min_samples, 2):
        raise InsufficientSamplesError(f"{n} samples, need {max(min_samples, 2)}")
    if total[ci] == 0:
        raise ZeroMeanError("zero mean counts")

    def fn(t):
        s1 = t[..., ci]
        s2 = t[..., cs] - (s1 if factorial else 0.0)
        return s2 * t[..., _M_N] / (s1 * s1)

    value, err = _jackknife(blocks, total, fn)
    return Estimate(value, err, n)


def channel_mean(acc: CorrelationAccumulator, channel: str = "a") -> Estimate:
    """Mean per sample of one channel, with jackknife error."""
    ci = {"a": _M_A, "b": _M_B}[channel]
    blocks = acc.moments
    total = blocks.sum(axis=0)
    n = int(total[_M_N])
    if n < 2:
        raise InsufficientSamplesError("need at least two samples")
    value, err = _jackknife(blocks, total, lambda t: t[..., ci] / t[..., _M_N])
    return Estimate(value, err, n)


def block_length_for(coherence_time: float, dt: float, factor: float = 8.0) -> int:
    """Jackknife block length covering ``factor`` coherence times."""
    return max(1, int(math.ceil(factor * coherence_time / dt)))
