"""Efficient influence function algebra shared by the exact and sample code paths.

All functions operate elementwise on array-likes, so they work both for
float arrays and for numpy object arrays of :class:`fractions.Fraction`.

Notation, for a regime ``a`` and adjustment set ``Z``:

* ``ind[k]``  = I(A_0 = a_0, ..., A_k = a_k)
* ``pi[k]``   = P(A_k = a_k | Z_k(a_0..a_{k-1}))
* ``lam[k]``  = pi[0] * ... * pi[k]
* ``b[k]``    = E[b[k+1] | A_k = a_k, Z_k(a_0..a_{k-1})], ``b[p+1] = Y``

and the influence function is::

    psi = ind[p] / lam[p] * (Y - b[p])
          + sum_k ind[k-1] / lam[k-1] * (b[k] - b[k-1])

with ``ind[-1] = lam[-1] = 1`` and ``b[-1] = chi``.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

__all__ = ["EifTerms", "assemble_psi", "cumulative", "r_terms"]


def cumulative(values: Sequence) -> list:
    """Running products ``v[0], v[0]*v[1], ...``."""
    out = []
    acc = None
    for v in values:
        acc = v if acc is None else acc * v
        out.append(acc)
    return out


@dataclass
class EifTerms:
    psi: object
    residual: object
    increments: list  # increments[k] = ind[k-1]/lam[k-1] * (b[k] - b[k-1])


def assemble_psi(y, ind: Sequence, b: Sequence, pi: Sequence, chi) -> EifTerms:
    lam = cumulative(pi)
    p = len(b) - 1
    residual = ind[p] / lam[p] * (y - b[p])
    increments = []
    for k in range(p + 1):
        prev = chi if k == 0 else b[k - 1]
        diff = b[k] - prev
        increments.append(diff if k == 0 else ind[k - 1] / lam[k - 1] * diff)
    psi = residual
    for inc in increments:
        psi = psi + inc
    return EifTerms(psi, residual, increments)


def r_terms(ind: Sequence, treated: Sequence, pi_b: Sequence, b_gb: Sequence, b_b: Sequence) -> list:
    """Terms ``r_k`` of the variance decomposition for a nested pair.

    ``r_k = ind[k-1]/lam_B[k-1] * (I(A_k=a_k)/pi_B[k] - 1) * (b_k(G,B) - b_k(B))``
    where ``treated[k] = I(A_k = a_k)``.
    """
    lam = cumulative(pi_b)
    out = []
    for k in range(len(b_b)):
        core = (treated[k] / pi_b[k] - 1) * (b_gb[k] - b_b[k])
        out.append(core if k == 0 else ind[k - 1] / lam[k - 1] * core)
    return out
