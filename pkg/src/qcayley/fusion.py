"""Quantum dimensions and Cayley-tree edge weights for orthogonal free quantum groups.

The quantum dimensions of the irreducible corepresentations ``alpha_k`` of
``FO_N`` (or of ``FO(Q)`` with fundamental quantum dimension ``delta``) obey
the Chebyshev recursion::

    d_{-1} = 0,  d_0 = 1,  d_{k+1} = delta * d_k - d_{k-1}.

The weights of the reversing operator on sector ``l`` at level ``k`` are::

    s_{k,l}^2 = d_l d_{l-1} / (d_k d_{k-1}),    c_{k,l}^2 = 1 - s_{k,l}^2.

In exact mode every ``d_k`` and every squared weight is a Fraction; square
roots are only taken when a float is requested.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Dict, List, Union

from .exact import Surd, to_fraction

__all__ = [
    "FusionParams",
    "QDimSequence",
    "WeightEntry",
    "WeightTable",
    "ParameterDomainError",
    "IndexDomainError",
    "BoundaryRegimeWarning",
    "qdim",
    "chebyshev_qdim",
    "s_squared",
    "c_squared",
    "weight_table",
]

Scalar = Union[Fraction, float]


class ParameterDomainError(ValueError):
    """The dimension parameter is outside ``delta >= 2``."""


class IndexDomainError(ValueError):
    """A weight was requested for indices where it is undefined on the tree."""


class BoundaryRegimeWarning(UserWarning):
    """``delta == 2``: the degenerate q = 1 case, outside the ``qdim u > 2`` regime."""


@dataclass(frozen=True)
class FusionParams:
    """Dimension parameter of the fundamental corepresentation.

    ``delta`` is stored as a Fraction in exact mode and as a float otherwise.
    Integer ``delta = N`` is the Kac case ``FO_N``.
    """

    delta: Scalar
    exact_mode: bool = True

    def __post_init__(self):
        if self.exact_mode:
            value = to_fraction(self.delta)
        else:
            value = float(self.delta)
        if not value >= 2:
            raise ParameterDomainError(f"delta must be >= 2, got {self.delta!r}")
        object.__setattr__(self, "delta", value)
        if value == 2:
            warnings.warn(
                "delta = 2 is the boundary case d_k = k + 1 (qdim u = 2)",
                BoundaryRegimeWarning,
                stacklevel=3,
            )

    @property
    def is_boundary(self) -> bool:
        return self.delta == 2

    def as_float(self) -> "FusionParams":
        if not self.exact_mode:
            return self
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", BoundaryRegimeWarning)
            return FusionParams(float(self.delta), exact_mode=False)


@dataclass(frozen=True)
class QDimSequence:
    """Quantum dimensions ``d_{-1}, d_0, ..., d_{k_max}``.

    ``values[0]`` is ``d_{-1}``; use :meth:`d` for level-based access.
    """

    values: tuple

    @property
    def k_max(self) -> int:
        return len(self.values) - 2

    def d(self, k: int) -> Scalar:
        if not -1 <= k <= self.k_max:
            raise IndexError(k)
        return self.values[k + 1]

    def __len__(self) -> int:
        return len(self.values)

    def __iter__(self):
        return iter(self.values)

    def __getitem__(self, i):
        return self.values[i]


def qdim(params: FusionParams, k_max: int) -> QDimSequence:
    """Quantum dimensions ``[d_{-1}, d_0, ..., d_{k_max}]`` by the fusion recursion.

    >>> list(qdim(FusionParams(3), 4))
    [0, 1, 3, 8, 21, 55]
    """
    if k_max < 0:
        raise ValueError("k_max must be >= 0")
    delta = params.delta
    if params.exact_mode:
        vals: List[Scalar] = [Fraction(0), Fraction(1)]
        if delta.denominator == 1:
            vals = [0, 1]
            delta = delta.numerator
    else:
        vals = [0.0, 1.0]
    for _ in range(k_max):
        vals.append(delta * vals[-1] - vals[-2])
    return QDimSequence(tuple(vals))


def chebyshev_qdim(delta: float, k: int) -> float:
    """Closed form ``(q^{k+1} - q^{-k-1}) / (q - q^{-1})`` with ``q + 1/q = delta``.

    Independent of the recursion; used to cross-check it.
    """
    delta = float(delta)
    if k < 0:
        return 0.0
    if delta == 2.0:
        return float(k + 1)
    q = (delta + math.sqrt(delta * delta - 4.0)) / 2.0
    return (q ** (k + 1) - q ** (-(k + 1))) / (q - 1.0 / q)


def _check_indices(k: int, l: int) -> None:
    if l < 0:
        raise IndexDomainError(f"sector index must be >= 0, got l={l}")
    if k < 1 or k < l:
        raise IndexDomainError(f"weight undefined for k={k}, l={l} (need k >= max(l, 1))")


def _float_ratio(params: FusionParams, k: int, l: int) -> float:
    # d_l d_{l-1} / (d_k d_{k-1}) as a product of consecutive ratios, which
    # neither overflows nor loses accuracy near delta = 2
    delta = float(params.delta)
    if l == 0:
        return 0.0
    rho = 0.0  # d_{j-1} / d_j at j = 0
    out = 1.0
    for j in range(1, k + 1):
        rho_next = 1.0 / (delta - rho)
        if j > l:
            out *= rho * rho_next
        rho = rho_next
    return out


def s_squared(params: FusionParams, k: int, l: int) -> Scalar:
    """Squared off-corner weight ``s_{k,l}^2 = d_l d_{l-1} / (d_k d_{k-1})``.

    Exact Fraction in exact mode.  ``l = 0`` gives 0 because ``d_{-1} = 0``;
    ``k = l`` gives 1.
    """
    _check_indices(k, l)
    if l == 0:
        return Fraction(0) if params.exact_mode else 0.0
    if not params.exact_mode:
        return _float_ratio(params, k, l)
    d = qdim(params, k)
    return Fraction(d.d(l) * d.d(l - 1)) / (d.d(k) * d.d(k - 1))


def c_squared(params: FusionParams, k: int, l: int) -> Scalar:
    return 1 - s_squared(params, k, l)


@dataclass(frozen=True)
class WeightEntry:
    k: int
    c_squared: Scalar
    s_squared: Scalar

    @property
    def c(self) -> float:
        return math.sqrt(self.c_squared)

    @property
    def s(self) -> float:
        return math.sqrt(self.s_squared)

    def c_exact(self) -> Surd:
        return Surd.sqrt(self.c_squared)

    def s_exact(self) -> Surd:
        return Surd.sqrt(self.s_squared)


@dataclass(frozen=True)
class WeightTable:
    """Weights ``(c_{k,l}, s_{k,l})`` of sector ``l`` for ``max(l, 1) <= k <= k_max``."""

    l: int
    exact_mode: bool
    entries: Dict[int, WeightEntry] = field(default_factory=dict)

    def __getitem__(self, k: int) -> WeightEntry:
        return self.entries[k]

    def __contains__(self, k: int) -> bool:
        return k in self.entries

    def levels(self) -> List[int]:
        return sorted(self.entries)

    def to_records(self) -> List[dict]:
        rows = []
        for k in self.levels():
            e = self.entries[k]
            rows.append(
                {
                    "k": k,
                    "c_squared": str(e.c_squared) if self.exact_mode else repr(float(e.c_squared)),
                    "s_squared": str(e.s_squared) if self.exact_mode else repr(float(e.s_squared)),
                    "c": e.c,
                    "s": e.s,
                }
            )
        return rows


def weight_table(params: FusionParams, l: int, k_max: int) -> WeightTable:
    """Weights of sector ``l`` for every level ``max(l, 1) <= k <= k_max``.

    >>> t = weight_table(FusionParams(3), 1, 3)
    >>> [t[k].c_squared for k in t.levels()]
    [Fraction(0, 1), Fraction(7, 8), Fraction(55, 56)]
    """
    if not 0 <= l <= k_max:
        raise IndexDomainError(f"need 0 <= l <= k_max, got l={l}, k_max={k_max}")
    entries: Dict[int, WeightEntry] = {}
    start = max(l, 1)
    if params.exact_mode:
        d = qdim(params, k_max)
        num = Fraction(d.d(l) * d.d(l - 1)) if l >= 1 else Fraction(0)
        for k in range(start, k_max + 1):
            s2 = num / (d.d(k) * d.d(k - 1))
            entries[k] = WeightEntry(k, 1 - s2, s2)
    else:
        delta = float(params.delta)
        rho, s2 = 0.0, 1.0 if l >= 1 else 0.0
        for j in range(1, k_max + 1):
            rho_next = 1.0 / (delta - rho)
            if j > l and l >= 1:
                s2 *= rho * rho_next
            rho = rho_next
            if j >= start:
                entries[j] = WeightEntry(j, 1.0 - s2, s2)
    return WeightTable(l=l, exact_mode=params.exact_mode, entries=entries)
