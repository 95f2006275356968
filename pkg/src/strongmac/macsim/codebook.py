"""MAC configurations, peak-power codebooks and their binary file format."""

import math
import struct
from dataclasses import dataclass, field

import numpy as np

from .._validation import MAX_SOURCES, check_positive_int, check_powers, check_rates
from ..exceptions import CapExceededError, DomainError
from . import _streams

DEFAULT_TUPLE_CAP = 2**20
MAGIC = b"MACB1"
KINDS = ("sphere", "iid_gauss_scaled")
# Largest exponent for which 2**(n R) is turned into a message count.
MAX_LOG2_SIZE = 62


def sizes_from_rates(n, rates):
    """``M_i = ceil(2**(n R_i))``."""
    n = check_positive_int(n, "n")
    r = check_rates(rates, len(np.atleast_1d(rates)))
    out = []
    for ri in r:
        e = n * float(ri)
        if e > MAX_LOG2_SIZE:
            raise CapExceededError(f"n*R = {e} bits per source is beyond any exhaustive decoder")
        out.append(math.ceil(2.0**e))
    return tuple(out)


@dataclass(frozen=True)
class GaussianMacConfig:
    """Gaussian MAC ``Y = sum_i X_i + Z`` with unit-variance noise."""

    n: int
    powers: tuple
    message_sizes: tuple
    tuple_cap: int = DEFAULT_TUPLE_CAP

    def __post_init__(self):
        n = check_positive_int(self.n, "n")
        p = check_powers(self.powers)
        if p.size > MAX_SOURCES:
            raise DomainError(f"at most {MAX_SOURCES} sources are supported")
        sizes = tuple(check_positive_int(m, "message size") for m in self.message_sizes)
        if len(sizes) != p.size:
            raise DomainError(f"{len(sizes)} message sizes for {p.size} sources")
        cap = check_positive_int(self.tuple_cap, "tuple_cap")
        if math.prod(sizes) > cap:
            raise CapExceededError(
                f"{math.prod(sizes)} message tuples exceed the exhaustive-decoding cap {cap}"
            )
        object.__setattr__(self, "n", n)
        object.__setattr__(self, "powers", tuple(float(v) for v in p))
        object.__setattr__(self, "message_sizes", sizes)
        object.__setattr__(self, "tuple_cap", cap)

    @classmethod
    def from_rates(cls, n, powers, rates, tuple_cap=DEFAULT_TUPLE_CAP):
        return cls(n, tuple(powers), sizes_from_rates(n, rates), tuple_cap)

    @property
    def n_sources(self):
        return len(self.powers)

    @property
    def n_tuples(self):
        return math.prod(self.message_sizes)


@dataclass(frozen=True)
class Codebook:
    """One ``(M_i, n)`` matrix of codewords per source, read-only."""

    books: tuple = field(repr=False)

    def __post_init__(self):
        books = []
        for b in self.books:
            a = np.array(b, dtype=np.float64, copy=True)
            if a.ndim != 2 or a.shape[0] < 1:
                raise DomainError("each codebook must be a non-empty 2-d array")
            if not np.all(np.isfinite(a)):
                raise DomainError("codewords must be finite")
            a.setflags(write=False)
            books.append(a)
        if not books:
            raise DomainError("a codebook needs at least one source")
        if len({b.shape[1] for b in books}) != 1:
            raise DomainError("all sources must share the blocklength")
        object.__setattr__(self, "books", tuple(books))

    @property
    def n(self):
        return self.books[0].shape[1]

    @property
    def sizes(self):
        return tuple(b.shape[0] for b in self.books)

    def __len__(self):
        return len(self.books)

    def __getitem__(self, i):
        return self.books[i]

    def peak_energies(self):
        return [np.einsum("ij,ij->i", b, b) for b in self.books]

    def satisfies_power(self, powers):
        p = check_powers(powers)
        if len(p) != len(self.books):
            return False
        return all(np.all(e <= self.n * pi) for e, pi in zip(self.peak_energies(), p))

    def scaled(self, gains):
        return Codebook(tuple(g * b for g, b in zip(gains, self.books)))

    def permuted(self, order):
        return Codebook(tuple(self.books[i] for i in order))

    def check_against(self, cfg):
        if self.sizes != cfg.message_sizes or self.n != cfg.n:
            raise DomainError(
                f"codebook shape (n={self.n}, M={list(self.sizes)}) does not match the configuration"
            )
        if not self.satisfies_power(cfg.powers):
            raise DomainError("codebook violates the peak power constraint")

    def to_bytes(self):
        header = MAGIC + struct.pack(f"<{2 + len(self.books)}q", self.n, len(self.books), *self.sizes)
        body = b"".join(np.ascontiguousarray(b, dtype="<f8").tobytes() for b in self.books)
        return header + body

    @classmethod
    def from_bytes(cls, data):
        if data[: len(MAGIC)] != MAGIC:
            raise DomainError("not a MACB1 codebook file")
        off = len(MAGIC)
        try:
            n, count = struct.unpack_from("<2q", data, off)
            off += 16
            if n < 1 or not 1 <= count <= MAX_SOURCES:
                raise DomainError(f"corrupt codebook header: n={n}, N={count}")
            sizes = struct.unpack_from(f"<{count}q", data, off)
            off += 8 * count
        except struct.error as exc:
            raise DomainError("truncated codebook header") from exc
        if any(m < 1 for m in sizes):
            raise DomainError("corrupt codebook header: message sizes must be positive")
        expected = off + 8 * n * sum(sizes)
        if len(data) != expected:
            raise DomainError(f"codebook file has {len(data)} bytes, expected {expected}")
        books = []
        for m in sizes:
            books.append(np.frombuffer(data, dtype="<f8", count=m * n, offset=off).reshape(m, n))
            off += 8 * m * n
        return cls(tuple(books))

    def save(self, path):
        with open(path, "wb") as fh:
            fh.write(self.to_bytes())

    @classmethod
    def load(cls, path):
        with open(path, "rb") as fh:
            return cls.from_bytes(fh.read())


def _enforce_peak(rows, limit):
    """Shrink rows whose squared norm rounds above ``limit``."""
    energy = np.einsum("ij,ij->i", rows, rows)
    while np.any(energy > limit):
        bad = energy > limit
        rows[bad] *= 1 - 1e-15
        energy = np.einsum("ij,ij->i", rows, rows)
    return rows


def _project_to_sphere(rows, radius):
    norms = np.linalg.norm(rows, axis=1)
    zero = norms == 0
    rows[zero, 0] = radius
    norms[zero] = radius
    return rows * (radius / norms)[:, None]


def generate_codebook(cfg, kind="sphere", seed=0):
    """Random codebook for ``cfg``.

    ``sphere`` draws each codeword uniformly on the sphere of radius
    ``sqrt(n P_i)``. ``iid_gauss_scaled`` draws iid ``Normal(0, P_i)`` entries
    and pulls codewords that fall outside the ball back onto its surface.
    Either way every codeword satisfies ``||x||**2 <= n P_i``.
    """
    if kind == "iid":
        kind = "iid_gauss_scaled"
    if kind not in KINDS:
        raise DomainError(f"unknown codebook kind {kind!r}; choose from {KINDS}")
    books = []
    for i, (m, p) in enumerate(zip(cfg.message_sizes, cfg.powers)):
        rng = _streams.stream(seed, _streams.CODEBOOK, i)
        g = rng.standard_normal((m, cfg.n))
        limit = cfg.n * p
        radius = math.sqrt(limit)
        if kind == "sphere":
            rows = _project_to_sphere(g, radius)
        else:
            rows = g * math.sqrt(p)
            outside = np.einsum("ij,ij->i", rows, rows) > limit
            rows[outside] = _project_to_sphere(rows[outside], radius)
        books.append(_enforce_peak(rows, limit))
    return Codebook(tuple(books))
