"""Exhaustive maximum-likelihood decoding for the Gaussian MAC."""

import math

import numpy as np
from sklearn.base import BaseEstimator
from sklearn.utils.validation import check_is_fitted

from ..exceptions import CapExceededError, DomainError
from .codebook import DEFAULT_TUPLE_CAP, Codebook

# Budget for the (batch x tuples) cost matrix held in memory at once.
DEFAULT_BATCH_ELEMENTS = 2**22
TIE_RTOL = 1e-12


class MLDecoder(BaseEstimator):
    """Nearest-sum decoder: ``argmin_w ||y - sum_i x_i(w_i)||``.

    ``fit`` takes a :class:`Codebook` (or a list of per-source matrices) and
    precomputes ``||sum_i x_i(w_i)||**2`` for every message tuple through the
    Gram matrices of the sources. ``predict`` then needs only one matrix
    product per source. Exact ties are broken uniformly at random when
    ``tie_u`` (uniform draws in ``[0, 1)``, one per row) is supplied, and
    toward the smallest flattened tuple index otherwise.

    Attributes
    ----------
    codebook_ : Codebook
    sizes_ : tuple of int
    energy_ : ndarray of shape ``sizes_``
        Squared norm of the superposed codeword of every tuple.
    """

    def __init__(self, tuple_cap=DEFAULT_TUPLE_CAP, batch_elements=DEFAULT_BATCH_ELEMENTS):
        self.tuple_cap = tuple_cap
        self.batch_elements = batch_elements

    def fit(self, codebook, y=None):
        book = codebook if isinstance(codebook, Codebook) else Codebook(tuple(codebook))
        sizes = book.sizes
        total = math.prod(sizes)
        if total > self.tuple_cap:
            raise CapExceededError(f"{total} message tuples exceed the decoding cap {self.tuple_cap}")
        k = len(sizes)
        energy = np.zeros(sizes)
        for i, b in enumerate(book.books):
            shape = [1] * k
            shape[i] = sizes[i]
            energy = energy + np.einsum("ij,ij->i", b, b).reshape(shape)
        for i in range(k):
            for j in range(i + 1, k):
                shape = [1] * k
                shape[i], shape[j] = sizes[i], sizes[j]
                energy = energy + 2 * (book.books[i] @ book.books[j].T).reshape(shape)
        self.codebook_ = book
        self.sizes_ = sizes
        self.energy_ = energy
        return self

    def _costs(self, Y):
        k = len(self.sizes_)
        cost = np.broadcast_to(self.energy_, (Y.shape[0],) + self.sizes_).copy()
        for i, b in enumerate(self.codebook_.books):
            shape = [Y.shape[0]] + [1] * k
            shape[i + 1] = self.sizes_[i]
            cost -= 2 * (Y @ b.T).reshape(shape)
        return cost.reshape(Y.shape[0], -1)

    def decision_function(self, Y):
        """``||y - sum x||**2 - ||y||**2`` for every row of ``Y`` and every tuple."""
        check_is_fitted(self, "energy_")
        return self._costs(self._check_y(Y))

    def _check_y(self, Y):
        Y = np.atleast_2d(np.asarray(Y, dtype=float))
        if Y.ndim != 2 or Y.shape[1] != self.codebook_.n:
            raise DomainError(f"outputs must have {self.codebook_.n} columns")
        return Y

    def predict(self, Y, tie_u=None):
        """Decoded message tuples, shape ``(len(Y), N)``."""
        check_is_fitted(self, "energy_")
        Y = self._check_y(Y)
        total = math.prod(self.sizes_)
        batch = max(1, self.batch_elements // total)
        flat = np.empty(Y.shape[0], dtype=np.int64)
        for start in range(0, Y.shape[0], batch):
            cost = self._costs(Y[start : start + batch])
            best = cost.min(axis=1)
            tie = cost <= (best + TIE_RTOL * (1 + np.abs(best)))[:, None]
            counts = tie.sum(axis=1)
            choice = cost.argmin(axis=1)
            if tie_u is not None:
                for r in np.flatnonzero(counts > 1):
                    cands = np.flatnonzero(tie[r])
                    pick = min(int(tie_u[start + r] * cands.size), cands.size - 1)
                    choice[r] = cands[pick]
            flat[start : start + batch] = choice
        return np.stack(np.unravel_index(flat, self.sizes_), axis=1)
