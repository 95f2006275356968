"""Monte-Carlo error estimation for the Gaussian MAC."""

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from .._validation import check_positive_int, check_powers
from ..exceptions import CapExceededError, DomainError
from ..expurgation import CodeErrorProfile
from ..regions import gaussian_capacity
from . import _streams
from .codebook import DEFAULT_TUPLE_CAP, GaussianMacConfig, generate_codebook, sizes_from_rates
from .decoder import MLDecoder
from .stats import SimResult

CHUNK = 512
DEFAULT_PROFILE_BUDGET = 2**24


def draw_trials(seed, tag, trial_ids, sizes, n, messages=None):
    """Messages, noise and a tie-break uniform for each trial id.

    Each trial reads its own substream of ``(seed, tag)``. When
    ``messages`` is given (one tuple per trial) no messages are drawn.
    """
    count = len(trial_ids)
    w = np.empty((count, len(sizes)), dtype=np.int64) if messages is None else messages
    z = np.empty((count, n))
    u = np.empty(count)
    high = np.asarray(sizes, dtype=np.int64)
    streams = _streams.TrialStreams(seed, tag)
    for r, t in enumerate(trial_ids):
        rng = streams.at(int(t))
        if messages is None:
            w[r] = rng.integers(0, high)
        z[r] = rng.standard_normal(n)
        u[r] = rng.random()
    return w, z, u


def superpose(book, w):
    return sum(b[w[:, i]] for i, b in enumerate(book.books))


def _map_chunks(fn, total, threads):
    starts = list(range(0, total, CHUNK))
    threads = check_positive_int(threads, "threads")
    if threads == 1 or len(starts) == 1:
        parts = [fn(s, min(s + CHUNK, total)) for s in starts]
    else:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            parts = list(pool.map(lambda s: fn(s, min(s + CHUNK, total)), starts))
    return parts


@dataclass(frozen=True)
class TrialRecord:
    messages: np.ndarray
    decoded: np.ndarray

    @property
    def errors(self):
        return np.any(self.messages != self.decoded, axis=1)


def run_mac_trials(cfg, book, trials, seed, *, threads=1, decoder=None):
    """Sent and decoded message tuples for ``trials`` uniform-message trials."""
    book.check_against(cfg)
    trials = check_positive_int(trials, "trials", minimum=0)
    dec = decoder if decoder is not None else MLDecoder(cfg.tuple_cap).fit(book)

    def work(lo, hi):
        w, z, u = draw_trials(seed, _streams.MAC_TRIAL, range(lo, hi), cfg.message_sizes, cfg.n)
        y = superpose(book, w) + z
        return w, dec.predict(y, tie_u=u)

    if trials == 0:
        empty = np.empty((0, cfg.n_sources), dtype=np.int64)
        return TrialRecord(empty, empty)
    parts = _map_chunks(work, trials, threads)
    return TrialRecord(np.concatenate([p[0] for p in parts]), np.concatenate([p[1] for p in parts]))


def simulate_mac_error(cfg, book, trials, seed, *, threads=1):
    """Empirical ``Pr{decoded tuple != sent tuple}`` under uniform messages."""
    rec = run_mac_trials(cfg, book, trials, seed, threads=threads)
    return SimResult(trials=len(rec.messages), errors=int(rec.errors.sum()), seed=int(seed))


def sample_channel(cfg, book, trials, seed):
    """Sent tuples and channel outputs, without decoding."""
    book.check_against(cfg)
    w, z, _ = draw_trials(seed, _streams.MAC_TRIAL, range(trials), cfg.message_sizes, cfg.n)
    return w, superpose(book, w) + z


def measure_error_profile(cfg, book, trials_per_tuple, seed, *, budget=DEFAULT_PROFILE_BUDGET, threads=1):
    """Empirical conditional error of every message tuple.

    Tuple ``w`` (row-major flat index ``j``) is sent ``trials_per_tuple``
    times using trial ids ``j * trials_per_tuple + r``.
    """
    book.check_against(cfg)
    tpt = check_positive_int(trials_per_tuple, "trials_per_tuple")
    total = cfg.n_tuples * tpt
    if total > budget:
        raise CapExceededError(f"{total} decoding trials exceed the profile budget {budget}")
    dec = MLDecoder(cfg.tuple_cap).fit(book)
    flat_msgs = np.stack(np.unravel_index(np.arange(cfg.n_tuples), cfg.message_sizes), axis=1)

    def work(lo, hi):
        ids = np.arange(lo, hi)
        msgs = flat_msgs[ids // tpt]
        _, z, u = draw_trials(seed, _streams.PROFILE_TRIAL, ids, cfg.message_sizes, cfg.n, messages=msgs)
        y = superpose(book, msgs) + z
        return np.any(dec.predict(y, tie_u=u) != msgs, axis=1)

    wrong = np.concatenate(_map_chunks(work, total, threads))
    errors = wrong.reshape(cfg.n_tuples, tpt).mean(axis=1)
    return CodeErrorProfile(cfg.message_sizes, errors.reshape(cfg.message_sizes))


@dataclass(frozen=True)
class ScanRow:
    multiplier: float
    n: int
    message_size: int
    result: SimResult

    def as_row(self):
        lo, hi = self.result.ci
        return (self.multiplier, self.n, self.message_size, self.result.error_prob, lo, hi)


SCAN_HEADER = ("multiplier", "n", "Mi", "error", "ci_lo", "ci_hi")


def equal_rate_point(powers, multiplier):
    """``R_i = multiplier * C_sum / N`` for every source."""
    p = check_powers(powers)
    if not (math.isfinite(multiplier) and multiplier >= 0):
        raise DomainError(f"rate multiplier must be non-negative, got {multiplier}")
    r = multiplier * gaussian_capacity(math.fsum(p)) / p.size
    return tuple([r] * p.size)


def phase_transition_scan(
    powers,
    rate_multipliers,
    n_list,
    trials,
    seed,
    *,
    kind="sphere",
    tuple_cap=DEFAULT_TUPLE_CAP,
    threads=1,
):
    """Empirical error over a grid of equal-rate points and blocklengths.

    Every cell is validated against ``tuple_cap`` before any simulation runs.
    Cell ``(i, j)`` uses its own derived seed for both codebook and trials.
    """
    p = tuple(float(v) for v in check_powers(powers))
    cells = []
    for i, m in enumerate(rate_multipliers):
        for j, n in enumerate(n_list):
            n = check_positive_int(n, "n")
            sizes = sizes_from_rates(n, equal_rate_point(p, float(m)))
            cfg = GaussianMacConfig(n, p, sizes, tuple_cap)
            cells.append((float(m), n, cfg, _streams.derived_seed(seed, _streams.SCAN_CELL, i, j)))
    rows = []
    for m, n, cfg, cell_seed in cells:
        book = generate_codebook(cfg, kind, cell_seed)
        res = simulate_mac_error(cfg, book, trials, cell_seed, threads=threads)
        rows.append(ScanRow(m, n, cfg.message_sizes[0], res))
    return rows

