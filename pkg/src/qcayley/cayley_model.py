"""Truncated matrix model of the reversing operator on one sector of the quantum Cayley tree.

Each sector ``q_l`` of the edge space of the ``FO`` Cayley tree is modelled with
one-dimensional cells ``(corner, level)``, where ``corner`` is one of
``'++', '+-', '-+', '--'`` (left/right ascending or descending).  Admissible
levels for sector ``l`` are::

    ++ : max(l-1, 0) <= k <= k_max
    +- : l <= k <= k_max        (empty when l = 0)
    -+ : l <= k <= k_max        (empty when l = 0)
    -- : l+1 <= k <= k_max

The reversing operator ``theta`` maps left-ascending cells at level ``k`` into
right-descending cells at level ``k+1`` and left-descending cells at level
``k`` into right-ascending cells at level ``k-1``, with magnitudes given by the
weights ``c_{k,l}, s_{k,l}`` of :mod:`qcayley.fusion`.  All other operators
(``W``, ``r``, ``s``, ``s'``, ``Lambda``) are derived from ``theta`` and the
corner projections.

Operators are stored as sparse dictionaries ``{(row, col): value}`` whose
values are floats or exact :class:`~qcayley.exact.Surd` numbers, so the same
code verifies identities in floating point and exactly.  Identities are only
meaningful away from the top truncation level; every check is restricted to an
interior mask computed from the number of level-shifting factors it involves.
"""

from __future__ import annotations

import io
import itertools
import json
import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Callable, Dict, Iterable, List, Mapping, Optional, Sequence, Tuple

import numpy as np
import scipy.sparse as sp

from .exact import Surd
from .fusion import FusionParams, weight_table

__all__ = [
    "CORNERS",
    "DEFAULT_SIGNS",
    "SectorSpec",
    "CellBasis",
    "SectorOperator",
    "IdentityCheck",
    "IdentityReport",
    "build_theta",
    "build_W",
    "corner_projection",
    "level_projection",
    "identity",
    "build_r",
    "build_s",
    "build_sprime",
    "build_lambda",
    "interior_mask",
    "verify_identities",
    "re_theta_spectrum",
    "search_sign_patterns",
]

CORNERS = ("++", "+-", "-+", "--")

# Sign of each of the eight nonzero blocks of theta.  Keys are
# (source corner, target corner); ascending blocks start at '++' or '+-'.
DEFAULT_SIGNS: Dict[Tuple[str, str], int] = {
    ("++", "--"): +1,
    ("++", "+-"): +1,
    ("+-", "+-"): -1,
    ("+-", "--"): +1,
    ("--", "++"): +1,
    ("--", "-+"): +1,
    ("-+", "-+"): -1,
    ("-+", "++"): +1,
}

# (source, target) -> (level step, "c" or "s")
_BLOCKS = {
    ("++", "--"): (+1, "c"),
    ("++", "+-"): (+1, "s"),
    ("+-", "+-"): (+1, "c"),
    ("+-", "--"): (+1, "s"),
    ("--", "++"): (-1, "c"),
    ("--", "-+"): (-1, "s"),
    ("-+", "-+"): (-1, "c"),
    ("-+", "++"): (-1, "s"),
}


@dataclass(frozen=True)
class SectorSpec:
    """Sector ``l`` truncated at level ``k_max`` (requires ``k_max >= l + 2``)."""

    params: FusionParams
    l: int
    k_max: int

    def __post_init__(self):
        if self.l < 0:
            raise ValueError(f"sector index must be >= 0, got {self.l}")
        if self.k_max < self.l + 2:
            raise ValueError(f"k_max must be >= l + 2 (got l={self.l}, k_max={self.k_max})")

    @property
    def exact(self) -> bool:
        return self.params.exact_mode


class CellBasis:
    """Ordered list of ``(corner, level)`` cells of a truncated sector."""

    def __init__(self, l: int, k_max: int):
        self.l = l
        self.k_max = k_max
        cells = []
        for corner in CORNERS:
            lo, hi = self.level_range(corner)
            cells.extend((corner, k) for k in range(lo, hi + 1))
        self.cells: Tuple[Tuple[str, int], ...] = tuple(cells)
        self._index = {c: i for i, c in enumerate(self.cells)}

    def level_range(self, corner: str) -> Tuple[int, int]:
        """Inclusive level range of a corner; empty when ``lo > hi``."""
        l, k_max = self.l, self.k_max
        if corner == "++":
            return max(l - 1, 0), k_max
        if corner in ("+-", "-+"):
            return (l, k_max) if l >= 1 else (1, 0)
        if corner == "--":
            return l + 1, k_max
        raise KeyError(f"unknown corner {corner!r}")

    def __len__(self) -> int:
        return len(self.cells)

    def __iter__(self):
        return iter(self.cells)

    def __contains__(self, cell) -> bool:
        return cell in self._index

    def index(self, corner: str, k: int) -> int:
        return self._index[(corner, k)]

    def get(self, corner: str, k: int) -> Optional[int]:
        return self._index.get((corner, k))

    def labels(self) -> List[str]:
        return [f"{c}:{k}" for c, k in self.cells]

    def __eq__(self, other) -> bool:
        return isinstance(other, CellBasis) and self.cells == other.cells

    def __repr__(self) -> str:
        return f"CellBasis(l={self.l}, k_max={self.k_max}, size={len(self)})"


class SectorOperator:
    """Sparse real operator on a :class:`CellBasis`.

    Values are floats or :class:`Surd`; arithmetic keeps exact values exact.
    """

    __slots__ = ("basis", "entries", "exact")

    def __init__(self, basis: CellBasis, entries: Mapping[Tuple[int, int], object], exact: bool):
        self.basis = basis
        self.exact = exact
        self.entries: Dict[Tuple[int, int], object] = {
            ij: v for ij, v in entries.items() if not _is_zero(v)
        }

    # -- construction helpers ---------------------------------------------
    @classmethod
    def zero(cls, basis: CellBasis, exact: bool) -> "SectorOperator":
        return cls(basis, {}, exact)

    @classmethod
    def diagonal(cls, basis: CellBasis, indices: Iterable[int], exact: bool, value=1):
        one = Surd(value) if exact else float(value)
        return cls(basis, {(i, i): one for i in indices}, exact)

    # -- algebra ----------------------------------------------------------
    def _check(self, other: "SectorOperator") -> None:
        if self.basis != other.basis:
            raise ValueError("operators live on different bases")

    def __add__(self, other: "SectorOperator") -> "SectorOperator":
        self._check(other)
        out = dict(self.entries)
        for ij, v in other.entries.items():
            out[ij] = out[ij] + v if ij in out else v
        return SectorOperator(self.basis, out, self.exact and other.exact)

    def __neg__(self) -> "SectorOperator":
        return SectorOperator(self.basis, {ij: -v for ij, v in self.entries.items()}, self.exact)

    def __sub__(self, other: "SectorOperator") -> "SectorOperator":
        return self + (-other)

    def scale(self, c) -> "SectorOperator":
        c = Surd(c) if self.exact else float(c)
        return SectorOperator(self.basis, {ij: c * v for ij, v in self.entries.items()}, self.exact)

    def __rmul__(self, c) -> "SectorOperator":
        return self.scale(c)

    def __matmul__(self, other: "SectorOperator") -> "SectorOperator":
        self._check(other)
        by_row: Dict[int, List[Tuple[int, object]]] = {}
        for (k, j), v in other.entries.items():
            by_row.setdefault(k, []).append((j, v))
        out: Dict[Tuple[int, int], object] = {}
        for (i, k), a in self.entries.items():
            for j, b in by_row.get(k, ()):
                term = a * b
                out[(i, j)] = out[(i, j)] + term if (i, j) in out else term
        return SectorOperator(self.basis, out, self.exact and other.exact)

    def __pow__(self, n: int) -> "SectorOperator":
        if n < 0:
            return self.T ** (-n)
        out = identity(self.basis, self.exact)
        for _ in range(n):
            out = out @ self
        return out

    @property
    def T(self) -> "SectorOperator":
        """Adjoint (real transpose)."""
        return SectorOperator(self.basis, {(j, i): v for (i, j), v in self.entries.items()}, self.exact)

    adjoint = T

    # -- inspection -------------------------------------------------------
    def __getitem__(self, key):
        (c1, k1), (c2, k2) = key
        i, j = self.basis.index(c1, k1), self.basis.index(c2, k2)
        return self.entries.get((i, j), Surd(0) if self.exact else 0.0)

    def nnz(self) -> int:
        return len(self.entries)

    def to_float(self) -> "SectorOperator":
        return SectorOperator(self.basis, {ij: float(v) for ij, v in self.entries.items()}, False)

    def to_scipy(self) -> sp.csr_matrix:
        n = len(self.basis)
        if not self.entries:
            return sp.csr_matrix((n, n))
        rows, cols = zip(*self.entries)
        data = [float(v) for v in self.entries.values()]
        return sp.csr_matrix((data, (rows, cols)), shape=(n, n))

    def to_dense(self) -> np.ndarray:
        return self.to_scipy().toarray()

    def restrict(self, rows: Sequence[int], cols: Optional[Sequence[int]] = None) -> Dict[Tuple[int, int], object]:
        cols = rows if cols is None else cols
        rs, cs = set(rows), set(cols)
        return {ij: v for ij, v in self.entries.items() if ij[0] in rs and ij[1] in cs}

    def max_abs(self, mask: Optional[Sequence[int]] = None) -> float:
        ents = self.entries if mask is None else self.restrict(mask)
        return max((abs(float(v)) for v in ents.values()), default=0.0)

    def is_zero_on(self, mask: Optional[Sequence[int]] = None) -> bool:
        ents = self.entries if mask is None else self.restrict(mask)
        return all(_is_zero(v) for v in ents.values())

    def __repr__(self) -> str:
        kind = "exact" if self.exact else "float"
        return f"SectorOperator({self.basis!r}, nnz={self.nnz()}, {kind})"

    # -- export -----------------------------------------------------------
    def to_matrix_market(self) -> str:
        """Matrix Market coordinate text; cell labels in comment lines."""
        buf = io.StringIO()
        n = len(self.basis)
        buf.write("%%MatrixMarket matrix coordinate real general\n")
        for idx, (corner, k) in enumerate(self.basis.cells, start=1):
            buf.write(f"% cell {idx} {corner} {k}\n")
        buf.write(f"{n} {n} {self.nnz()}\n")
        for (i, j) in sorted(self.entries):
            buf.write(f"{i + 1} {j + 1} {float(self.entries[(i, j)])!r}\n")
        return buf.getvalue()

    def to_json(self) -> dict:
        cells = [{"corner": c, "level": k} for c, k in self.basis.cells]
        entries = [
            {"row": i, "col": j, "value": float(self.entries[(i, j)])}
            for (i, j) in sorted(self.entries)
        ]
        return {"l": self.basis.l, "k_max": self.basis.k_max, "cells": cells, "entries": entries}


def _is_zero(v) -> bool:
    if isinstance(v, Surd):
        return v.is_zero()
    return v == 0


def identity(basis: CellBasis, exact: bool) -> SectorOperator:
    return SectorOperator.diagonal(basis, range(len(basis)), exact)


def _weight_values(spec: SectorSpec) -> Tuple[Callable[[int], object], Callable[[int], object]]:
    table = weight_table(spec.params, spec.l, spec.k_max)

    def c(k):
        e = table[k]
        return e.c_exact() if spec.exact else e.c

    def s(k):
        e = table[k]
        return e.s_exact() if spec.exact else e.s

    return c, s


def build_theta(spec: SectorSpec, signs: Optional[Mapping[Tuple[str, str], int]] = None) -> SectorOperator:
    """Reversing operator on the truncated sector.

    Ascending blocks out of level ``k`` carry the weights at level ``k+1``;
    descending blocks out of level ``k`` carry the weights at level ``k``.
    ``signs`` overrides :data:`DEFAULT_SIGNS` block by block.
    """
    sign = dict(DEFAULT_SIGNS)
    if signs:
        unknown = set(signs) - set(sign)
        if unknown:
            raise KeyError(f"unknown theta blocks {sorted(unknown)}")
        sign.update(signs)
    basis = CellBasis(spec.l, spec.k_max)
    c, s = _weight_values(spec)
    entries: Dict[Tuple[int, int], object] = {}
    for (src, dst), (step, kind) in _BLOCKS.items():
        lo, hi = basis.level_range(src)
        for k in range(lo, hi + 1):
            tgt = basis.get(dst, k + step)
            if tgt is None:
                continue
            wk = k + 1 if step > 0 else k
            val = c(wk) if kind == "c" else s(wk)
            if sign[(src, dst)] < 0:
                val = -val
            entries[(tgt, basis.index(src, k))] = val
    return SectorOperator(basis, entries, spec.exact)


def build_W(spec: SectorSpec) -> SectorOperator:
    """Reflection: identity on ``++``/``--``, levelwise swap of ``+-`` and ``-+``."""
    basis = CellBasis(spec.l, spec.k_max)
    one = Surd(1) if spec.exact else 1.0
    entries = {}
    for i, (corner, k) in enumerate(basis.cells):
        if corner in ("++", "--"):
            entries[(i, i)] = one
        else:
            other = "-+" if corner == "+-" else "+-"
            entries[(basis.index(other, k), i)] = one
    return SectorOperator(basis, entries, spec.exact)


def corner_projection(spec: SectorSpec, corner: str) -> SectorOperator:
    if corner not in CORNERS:
        raise KeyError(f"unknown corner label {corner!r}")
    basis = CellBasis(spec.l, spec.k_max)
    idx = [i for i, (c, _) in enumerate(basis.cells) if c == corner]
    return SectorOperator.diagonal(basis, idx, spec.exact)


def level_projection(spec: SectorSpec, k: int) -> SectorOperator:
    basis = CellBasis(spec.l, spec.k_max)
    idx = [i for i, (_, kk) in enumerate(basis.cells) if kk == k]
    return SectorOperator.diagonal(basis, idx, spec.exact)


def _corners(spec: SectorSpec) -> Dict[str, SectorOperator]:
    return {c: corner_projection(spec, c) for c in CORNERS}


def build_r(spec: SectorSpec, theta: Optional[SectorOperator] = None) -> SectorOperator:
    """``r = -p_{+-} theta p_{+-}``: the weighted right shift on the ``+-`` corner."""
    theta = build_theta(spec) if theta is None else theta
    p = corner_projection(spec, "+-")
    return -(p @ theta @ p)


def build_s(spec: SectorSpec, theta: Optional[SectorOperator] = None) -> SectorOperator:
    """``s = p_{+-} theta p_{++}``."""
    theta = build_theta(spec) if theta is None else theta
    return corner_projection(spec, "+-") @ theta @ corner_projection(spec, "++")


def build_sprime(spec: SectorSpec, theta: Optional[SectorOperator] = None) -> SectorOperator:
    """``s' = p_{+-} theta^* p_{--}``."""
    theta = build_theta(spec) if theta is None else theta
    return corner_projection(spec, "+-") @ theta.T @ corner_projection(spec, "--")


def build_lambda(spec: SectorSpec, theta: Optional[SectorOperator] = None) -> SectorOperator:
    """``Lambda = (1 + W)(r - r^*) + 2(s^* - s'^*)``, supported on ``+-`` columns.

    Stored on the full sector basis; its domain is the ``+-`` corner.
    """
    if spec.l == 0:
        raise ValueError("Lambda is undefined on the classical sector l = 0")
    theta = build_theta(spec) if theta is None else theta
    r = build_r(spec, theta)
    s = build_s(spec, theta)
    sp_ = build_sprime(spec, theta)
    one_plus_w = identity(theta.basis, spec.exact) + build_W(spec)
    return one_plus_w @ (r - r.T) + 2 * (s.T - sp_.T)


def interior_mask(basis: CellBasis, depth: int) -> List[int]:
    """Cells whose level lies at least ``depth`` below the truncation level.

    A product of ``depth`` level-shifting factors applied to such a cell never
    leaves the truncated space, so the truncated product agrees with the
    infinite operator on these rows and columns.  The lower boundary is
    encoded exactly (``c_{l,l} = 0`` and the corner offsets) and needs no cut.
    """
    return [i for i, (_, k) in enumerate(basis.cells) if k <= basis.k_max - depth]


@dataclass
class IdentityCheck:
    name: str
    max_deviation: float
    passed: bool
    depth: int
    mask_size: int
    exact_zero: Optional[bool] = None

    def to_json(self) -> dict:
        out = {
            "max_deviation": self.max_deviation,
            "pass": self.passed,
            "mask_depth": self.depth,
            "mask_size": self.mask_size,
        }
        if self.exact_zero is not None:
            out["exact_zero"] = self.exact_zero
        return out


@dataclass
class IdentityReport:
    delta: str
    l: int
    k_max: int
    tol: float
    exact: bool
    checks: List[IdentityCheck] = field(default_factory=list)

    @property
    def passed(self) -> bool:
        return all(c.passed for c in self.checks)

    def __getitem__(self, name: str) -> IdentityCheck:
        for c in self.checks:
            if c.name == name:
                return c
        raise KeyError(name)

    def names(self) -> List[str]:
        return [c.name for c in self.checks]

    def failures(self) -> List[str]:
        return [c.name for c in self.checks if not c.passed]

    def to_json(self) -> dict:
        return {
            "delta": self.delta,
            "sector": self.l,
            "k_max": self.k_max,
            "tol": self.tol,
            "exact": self.exact,
            "interior_mask": "levels k <= k_max - depth, depth = number of level-shifting factors",
            "pass": self.passed,
            "identities": {c.name: c.to_json() for c in self.checks},
        }


def _identity_cases(spec: SectorSpec, theta: SectorOperator):
    """Yield ``(name, depth, residual)``; each residual should vanish on the mask."""
    exact = spec.exact
    basis = theta.basis
    one = identity(basis, exact)
    p = _corners(spec)
    th, ths = theta, theta.T
    W = build_W(spec)

    yield "theta_columns_orthonormal", 2, ths @ th - one
    yield "theta_rows_orthonormal", 2, th @ ths - one
    yield "W_involutive", 0, W @ W - one
    yield "W_conjugation", 1, W @ th @ W - ths
    yield "W_corner_swap", 0, W @ p["+-"] - p["-+"] @ W
    yield "corners_sum_to_identity", 0, p["++"] + p["+-"] + p["-+"] + p["--"] - one

    pe = p["++"] + p["--"]
    for n in (1, 2, 3):
        yield f"weak_involutivity_n{n}", n, pe @ (th ** n) @ pe - pe @ (ths ** n) @ pe

    if spec.l == 0:
        yield "theta_squared_identity", 2, th @ th - one
        return

    pmm, ppp, ppm = p["--"], p["++"], p["+-"]
    yield "cancel_into_bottom_corner", 2, pmm @ th @ ppp @ ths @ ppm + pmm @ th @ ppm @ ths @ ppm
    yield "cancel_into_top_corner", 2, ppp @ th @ pmm @ th @ ppm + ppp @ ths @ ppm @ th @ ppm
    yield "off_corner_defect_via_top", 2, ppm @ th @ ppp @ ths @ ppm - (ppm - ppm @ th @ ppm @ ths @ ppm)
    yield "off_corner_defect_via_bottom", 2, ppm @ ths @ pmm @ th @ ppm - (ppm - ppm @ ths @ ppm @ th @ ppm)

    r = build_r(spec, th)
    s = build_s(spec, th)
    sprime = build_sprime(spec, th)
    yield "ss_plus_rr", 2, s @ s.T + r @ r.T - ppm
    yield "sprime_plus_rr", 2, sprime @ sprime.T + r.T @ r - ppm

    lam = build_lambda(spec, th)
    re2 = (r + r.T) @ (r + r.T)
    yield "lambda_gram", 2, lam.T @ lam - (8 * ppm - 2 * re2)
    yield "lambda_intertwining", 2, (th + ths) @ lam + lam @ (r + r.T)
    yield "lambda_top_corner", 1, ppp @ lam - 2 * s.T
    yield "lambda_W_fixed", 1, W @ lam - lam


def verify_identities(
    spec: SectorSpec,
    tol: float = 1e-12,
    signs: Optional[Mapping[Tuple[str, str], int]] = None,
) -> IdentityReport:
    """Check the reversing-operator identity calculus on the interior of the sector.

    Failures are recorded in the report, never raised.
    """
    theta = build_theta(spec, signs)
    report = IdentityReport(
        delta=str(spec.params.delta), l=spec.l, k_max=spec.k_max, tol=tol, exact=spec.exact
    )
    for name, depth, residual in _identity_cases(spec, theta):
        mask = interior_mask(theta.basis, depth)
        dev = residual.max_abs(mask)
        exact_zero = residual.is_zero_on(mask) if spec.exact else None
        passed = dev <= tol and (exact_zero is not False)
        report.checks.append(IdentityCheck(name, dev, passed, depth, len(mask), exact_zero))
    return report


def re_theta_spectrum(spec: SectorSpec, theta: Optional[SectorOperator] = None) -> Tuple[np.ndarray, np.ndarray]:
    """Eigenvalues (ascending) and eigenvectors of ``(theta + theta^*)/2`` on the truncation.

    Exploratory: near ``-1`` and ``+1`` the truncation edge mixes with the
    genuine ``Ker(theta +- 1)`` eigenvectors.
    """
    theta = build_theta(spec) if theta is None else theta
    m = theta.to_dense()
    return np.linalg.eigh((m + m.T) / 2)


def search_sign_patterns(spec: SectorSpec, tol: float = 1e-10) -> List[Dict[Tuple[str, str], int]]:
    """All 2^8 block sign patterns for which every identity check passes.

    Runs in floating point; meant for small truncations.
    """
    float_spec = SectorSpec(spec.params.as_float(), spec.l, spec.k_max)
    blocks = list(DEFAULT_SIGNS)
    found = []
    for combo in itertools.product((1, -1), repeat=len(blocks)):
        signs = dict(zip(blocks, combo))
        if verify_identities(float_spec, tol=tol, signs=signs).passed:
            found.append(signs)
    return found
