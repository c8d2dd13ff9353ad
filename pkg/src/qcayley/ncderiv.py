"""Noncommutative polynomials, free difference quotients and the orthogonality relations.

Polynomials are finite maps from words (tuples of variables) to coefficients.
Variables are formally self-adjoint; for the orthogonality system they are the
pairs ``(i, j)`` with ``1 <= i, j <= N``.  Elements of the algebraic tensor
square are maps from pairs of words to coefficients.

Tensor square conventions
-------------------------
* Bimodule action: ``P . (R (x) S) . Q = PR (x) SQ`` (:meth:`TensorPoly.lmul`,
  :meth:`TensorPoly.rmul`).
* Composition ``T1 * T2`` multiplies in ``A (x) A^op``:
  ``(R1 (x) S1)(R2 (x) S2) = R1 R2 (x) S2 S1``.  This is the product that
  evaluation turns into matrix multiplication.
* Evaluation at ``d x d`` matrices: ``R (x) S`` acts on ``zeta (x) xi`` by
  ``R(X) zeta (x) xi S(X)``.  With row-major vectorization (basis index
  ``a*d + b`` for ``e_a (x) e_b``) this is ``kron(R(X), S(X).T)``.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Dict, Hashable, Iterable, List, Mapping, Optional, Sequence, Tuple, Union

import numpy as np

__all__ = [
    "NcPoly",
    "TensorPoly",
    "DerivativeMatrix",
    "EvaluatedOperator",
    "var",
    "grid_variables",
    "fdq",
    "orthogonality_relations",
    "relation_labels",
    "jacobian",
    "expected_jacobian_entry",
    "closed_form_check",
    "evaluate_poly",
    "evaluate_tensor",
    "eval_derivative_operator",
    "numerical_rank",
    "random_special_orthogonal",
    "scalar_point",
    "scalar_point_ranks",
    "random_poly",
    "poly_to_json",
    "poly_from_json",
]

Variable = Hashable
Word = Tuple[Variable, ...]
Coeff = Union[int, Fraction, complex, float]


def _conj(c: Coeff) -> Coeff:
    return c.conjugate() if isinstance(c, complex) else c


def _word_key(w: Word):
    return tuple(_var_key(v) for v in w)


def _var_key(v):
    return tuple(v) if isinstance(v, tuple) else (v,)


class NcPoly:
    """Noncommutative polynomial in self-adjoint variables.

    >>> x1, x2 = var(1), var(2)
    >>> (x1 * x2).adjoint() == x2 * x1
    True
    """

    __slots__ = ("terms",)

    def __init__(self, terms: Optional[Mapping[Word, Coeff]] = None):
        self.terms: Dict[Word, Coeff] = {}
        for w, c in (terms or {}).items():
            if c != 0:
                self.terms[tuple(w)] = c

    @classmethod
    def constant(cls, c: Coeff) -> "NcPoly":
        return cls({(): c})

    @classmethod
    def one(cls) -> "NcPoly":
        return cls.constant(Fraction(1))

    @classmethod
    def monomial(cls, word: Sequence[Variable], c: Coeff = Fraction(1)) -> "NcPoly":
        return cls({tuple(word): c})

    @staticmethod
    def _coerce(other) -> Optional["NcPoly"]:
        if isinstance(other, NcPoly):
            return other
        if isinstance(other, (int, Fraction, float, complex)):
            return NcPoly.constant(other)
        return None

    def __add__(self, other):
        o = self._coerce(other)
        if o is None:
            return NotImplemented
        out = dict(self.terms)
        for w, c in o.terms.items():
            out[w] = out.get(w, 0) + c
        return NcPoly(out)

    __radd__ = __add__

    def __neg__(self) -> "NcPoly":
        return NcPoly({w: -c for w, c in self.terms.items()})

    def __sub__(self, other):
        o = self._coerce(other)
        if o is None:
            return NotImplemented
        return self + (-o)

    def __rsub__(self, other):
        o = self._coerce(other)
        if o is None:
            return NotImplemented
        return o + (-self)

    def __mul__(self, other):
        o = self._coerce(other)
        if o is None:
            return NotImplemented
        out: Dict[Word, Coeff] = {}
        for w1, c1 in self.terms.items():
            for w2, c2 in o.terms.items():
                w = w1 + w2
                out[w] = out.get(w, 0) + c1 * c2
        return NcPoly(out)

    def __rmul__(self, other):
        o = self._coerce(other)
        if o is None:
            return NotImplemented
        return o * self

    def __pow__(self, n: int) -> "NcPoly":
        out = NcPoly.one()
        for _ in range(n):
            out = out * self
        return out

    def adjoint(self) -> "NcPoly":
        """Reverse every word and conjugate coefficients."""
        return NcPoly({tuple(reversed(w)): _conj(c) for w, c in self.terms.items()})

    def __eq__(self, other) -> bool:
        o = self._coerce(other)
        if o is None:
            return NotImplemented
        return (self - o).is_zero()

    __hash__ = None  # type: ignore[assignment]

    def is_zero(self) -> bool:
        return not self.terms

    def words(self) -> List[Word]:
        """Words in canonical (lexicographic) order."""
        return sorted(self.terms, key=_word_key)

    def variables(self) -> set:
        return {v for w in self.terms for v in w}

    def degree(self) -> int:
        return max((len(w) for w in self.terms), default=-1)

    def __repr__(self) -> str:
        if not self.terms:
            return "0"
        parts = []
        for w in self.words():
            c = self.terms[w]
            mono = "*".join(_fmt_var(v) for v in w) or "1"
            parts.append(f"{c}*{mono}" if w else f"{c}")
        return " + ".join(parts)


def _fmt_var(v) -> str:
    if isinstance(v, tuple):
        return "x" + "".join(str(i) for i in v)
    return f"x{v}"


def var(v: Variable) -> NcPoly:
    return NcPoly.monomial((v,))


def grid_variables(N: int) -> List[Tuple[int, int]]:
    """The variables ``x_{ij}``, row-major."""
    return [(i, j) for i in range(1, N + 1) for j in range(1, N + 1)]


class TensorPoly:
    """Element of the algebraic tensor square, as a map ``(left word, right word) -> coeff``."""

    __slots__ = ("terms",)

    def __init__(self, terms: Optional[Mapping[Tuple[Word, Word], Coeff]] = None):
        self.terms: Dict[Tuple[Word, Word], Coeff] = {}
        for (a, b), c in (terms or {}).items():
            if c != 0:
                self.terms[(tuple(a), tuple(b))] = c

    @classmethod
    def pure(cls, left: NcPoly, right: NcPoly) -> "TensorPoly":
        """``left (x) right``."""
        out: Dict[Tuple[Word, Word], Coeff] = {}
        for a, ca in left.terms.items():
            for b, cb in right.terms.items():
                out[(a, b)] = out.get((a, b), 0) + ca * cb
        return cls(out)

    @classmethod
    def one(cls) -> "TensorPoly":
        return cls({((), ()): Fraction(1)})

    def __add__(self, other: "TensorPoly") -> "TensorPoly":
        if not isinstance(other, TensorPoly):
            return NotImplemented
        out = dict(self.terms)
        for k, c in other.terms.items():
            out[k] = out.get(k, 0) + c
        return TensorPoly(out)

    def __neg__(self) -> "TensorPoly":
        return TensorPoly({k: -c for k, c in self.terms.items()})

    def __sub__(self, other: "TensorPoly") -> "TensorPoly":
        return self + (-other)

    def scale(self, c: Coeff) -> "TensorPoly":
        return TensorPoly({k: c * v for k, v in self.terms.items()})

    def __mul__(self, other):
        """Composition in ``A (x) A^op``; scalars scale."""
        if isinstance(other, (int, Fraction, float, complex)):
            return self.scale(other)
        if not isinstance(other, TensorPoly):
            return NotImplemented
        out: Dict[Tuple[Word, Word], Coeff] = {}
        for (a1, b1), c1 in self.terms.items():
            for (a2, b2), c2 in other.terms.items():
                k = (a1 + a2, b2 + b1)
                out[k] = out.get(k, 0) + c1 * c2
        return TensorPoly(out)

    def __rmul__(self, other):
        if isinstance(other, (int, Fraction, float, complex)):
            return self.scale(other)
        return NotImplemented

    def lmul(self, P: NcPoly) -> "TensorPoly":
        """Left bimodule action ``P . (R (x) S) = PR (x) S``."""
        out: Dict[Tuple[Word, Word], Coeff] = {}
        for w, cp in P.terms.items():
            for (a, b), c in self.terms.items():
                k = (w + a, b)
                out[k] = out.get(k, 0) + cp * c
        return TensorPoly(out)

    def rmul(self, Q: NcPoly) -> "TensorPoly":
        """Right bimodule action ``(R (x) S) . Q = R (x) SQ``."""
        out: Dict[Tuple[Word, Word], Coeff] = {}
        for (a, b), c in self.terms.items():
            for w, cq in Q.terms.items():
                k = (a, b + w)
                out[k] = out.get(k, 0) + c * cq
        return TensorPoly(out)

    def __eq__(self, other) -> bool:
        if not isinstance(other, TensorPoly):
            return NotImplemented
        return (self - other).is_zero()

    __hash__ = None  # type: ignore[assignment]

    def is_zero(self) -> bool:
        return not self.terms

    def keys(self) -> List[Tuple[Word, Word]]:
        return sorted(self.terms, key=lambda k: (_word_key(k[0]), _word_key(k[1])))

    def __repr__(self) -> str:
        if not self.terms:
            return "0"
        parts = []
        for a, b in self.keys():
            left = "*".join(_fmt_var(v) for v in a) or "1"
            right = "*".join(_fmt_var(v) for v in b) or "1"
            parts.append(f"{self.terms[(a, b)]}*({left} (x) {right})")
        return " + ".join(parts)


def fdq(P: NcPoly, i: Variable) -> TensorPoly:
    """Free difference quotient: ``a x_i b`` contributes ``a (x) b`` per occurrence.

    >>> fdq(var(1) * var(2) * var(1), 1)
    1*(1 (x) x2*x1) + 1*(x1*x2 (x) 1)
    """
    out: Dict[Tuple[Word, Word], Coeff] = {}
    for w, c in P.terms.items():
        for p, v in enumerate(w):
            if v == i:
                k = (w[:p], w[p + 1 :])
                out[k] = out.get(k, 0) + c
    return TensorPoly(out)


# ---------------------------------------------------------------------------
# orthogonality relations
# ---------------------------------------------------------------------------


def relation_labels(N: int) -> List[Tuple[int, int, int]]:
    """``(p, k, l)`` for ``F_{pkl}``: all of ``F_1`` row-major, then ``F_2``."""
    return [(p, k, l) for p in (1, 2) for k in range(1, N + 1) for l in range(1, N + 1)]


def orthogonality_relations(N: int) -> List[NcPoly]:
    """Components of ``F_1 = x^t x - 1`` and ``F_2 = x x^t - 1`` (length ``2 N^2``)."""
    if N < 2:
        raise ValueError("N must be >= 2")
    out = []
    for p, k, l in relation_labels(N):
        terms: Dict[Word, Coeff] = {}
        for q in range(1, N + 1):
            w = ((q, k), (q, l)) if p == 1 else ((k, q), (l, q))
            terms[w] = terms.get(w, 0) + Fraction(1)
        if k == l:
            terms[()] = Fraction(-1)
        out.append(NcPoly(terms))
    return out


@dataclass
class DerivativeMatrix:
    """``l x m`` matrix of tensor-square elements; rows are relations, columns variables."""

    entries: List[List[TensorPoly]]
    variables: List[Variable]
    row_labels: Optional[List[object]] = None

    @property
    def shape(self) -> Tuple[int, int]:
        return len(self.entries), len(self.variables)

    def __getitem__(self, idx) -> TensorPoly:
        r, c = idx
        return self.entries[r][c]


def jacobian(F: Sequence[NcPoly], N: Optional[int] = None, variables: Optional[Sequence[Variable]] = None) -> DerivativeMatrix:
    """``(dF)_{j,i} = fdq(F_j, x_i)`` over the ``N x N`` grid of variables (or ``variables``)."""
    if variables is None:
        if N is None:
            raise ValueError("give N or an explicit variable list")
        variables = grid_variables(N)
    variables = list(variables)
    rows = [[fdq(Fj, v) for v in variables] for Fj in F]
    labels = relation_labels(N) if N is not None and len(F) == 2 * N * N else None
    return DerivativeMatrix(rows, variables, labels)


def expected_jacobian_entry(p: int, k: int, l: int, i: int, j: int) -> TensorPoly:
    """Closed form of ``d_{ij} F_{pkl}``.

    ``d_{ij} F_{1kl} = [k=j] (1 (x) x_{il}) + [l=j] (x_{ik} (x) 1)``;
    ``d_{ij} F_{2kl} = [i=k] (1 (x) x_{lj}) + [i=l] (x_{kj} (x) 1)``.
    """
    one = NcPoly.one()
    out = TensorPoly()
    if p == 1:
        if k == j:
            out = out + TensorPoly.pure(one, var((i, l)))
        if l == j:
            out = out + TensorPoly.pure(var((i, k)), one)
    elif p == 2:
        if i == k:
            out = out + TensorPoly.pure(one, var((l, j)))
        if i == l:
            out = out + TensorPoly.pure(var((k, j)), one)
    else:
        raise ValueError(f"relation family must be 1 or 2, got {p}")
    return out


def closed_form_check(N: int, F: Optional[Sequence[NcPoly]] = None) -> dict:
    """Compare ``jacobian(F)`` with the closed forms entrywise.

    Returns ``{"N", "pass", "entries_checked", "mismatches": [...]}``; each
    mismatch locates the relation ``(p, k, l)`` and variable ``(i, j)``.
    """
    if N < 2:
        raise ValueError("N must be >= 2")
    F = orthogonality_relations(N) if F is None else list(F)
    labels = relation_labels(N)
    if len(F) != len(labels):
        raise ValueError(f"expected {len(labels)} relations, got {len(F)}")
    D = jacobian(F, N)
    mismatches = []
    for r, (p, k, l) in enumerate(labels):
        for c, (i, j) in enumerate(D.variables):
            got = D[r, c]
            want = expected_jacobian_entry(p, k, l, i, j)
            if got != want:
                mismatches.append(
                    {
                        "relation": [p, k, l],
                        "variable": [i, j],
                        "expected": repr(want),
                        "got": repr(got),
                    }
                )
    return {
        "N": N,
        "pass": not mismatches,
        "entries_checked": len(labels) * len(D.variables),
        "mismatches": mismatches,
    }


# ---------------------------------------------------------------------------
# evaluation
# ---------------------------------------------------------------------------


def _as_matrix(x, d: Optional[int]) -> np.ndarray:
    a = np.atleast_2d(np.asarray(x, dtype=complex))
    if a.shape[0] != a.shape[1]:
        raise ValueError(f"expected a square matrix, got shape {a.shape}")
    if d is not None and a.shape[0] != d:
        raise ValueError(f"dimension mismatch: expected {d}x{d}, got {a.shape}")
    return a


def _point_dim(X: Mapping[Variable, np.ndarray]) -> int:
    dims = {np.atleast_2d(np.asarray(x)).shape for x in X.values()}
    if len(dims) != 1:
        raise ValueError(f"dimension mismatch among evaluation matrices: {sorted(dims)}")
    shape = dims.pop()
    if shape[0] != shape[1]:
        raise ValueError(f"expected square matrices, got {shape}")
    return shape[0]


def _eval_word(w: Word, X: Mapping[Variable, np.ndarray], d: int, cache: Dict[Word, np.ndarray]) -> np.ndarray:
    if w in cache:
        return cache[w]
    out = np.eye(d, dtype=complex)
    for v in w:
        if v not in X:
            raise KeyError(f"no matrix given for variable {v!r}")
        out = out @ _as_matrix(X[v], d)
    cache[w] = out
    return out


def evaluate_poly(P: NcPoly, X: Mapping[Variable, np.ndarray]) -> np.ndarray:
    d = _point_dim(X) if X else 1
    cache: Dict[Word, np.ndarray] = {}
    out = np.zeros((d, d), dtype=complex)
    for w, c in P.terms.items():
        out += complex(c) * _eval_word(w, X, d, cache)
    return out


def evaluate_tensor(T: TensorPoly, X: Mapping[Variable, np.ndarray], _cache=None) -> np.ndarray:
    """``d^2 x d^2`` matrix of ``T`` acting on ``C^d (x) C^d``: ``sum c kron(R(X), S(X).T)``."""
    d = _point_dim(X) if X else 1
    cache: Dict[Word, np.ndarray] = {} if _cache is None else _cache
    out = np.zeros((d * d, d * d), dtype=complex)
    for (a, b), c in T.terms.items():
        out += complex(c) * np.kron(_eval_word(a, X, d, cache), _eval_word(b, X, d, cache).T)
    return out


@dataclass
class EvaluatedOperator:
    """Block matrix of shape ``(l d^2, m d^2)``; block ``(j, i)`` evaluates entry ``(j, i)``."""

    matrix: np.ndarray
    d: int
    l: int
    m: int

    def block(self, j: int, i: int) -> np.ndarray:
        s = self.d * self.d
        return self.matrix[j * s : (j + 1) * s, i * s : (i + 1) * s]


def eval_derivative_operator(D: DerivativeMatrix, X: Mapping[Variable, np.ndarray]) -> EvaluatedOperator:
    d = _point_dim(X) if X else 1
    l, m = D.shape
    s = d * d
    out = np.zeros((l * s, m * s), dtype=complex)
    cache: Dict[Word, np.ndarray] = {}
    for j in range(l):
        for i in range(m):
            T = D[j, i]
            if not T.is_zero():
                out[j * s : (j + 1) * s, i * s : (i + 1) * s] = evaluate_tensor(T, X, cache)
    return EvaluatedOperator(out, d, l, m)


def numerical_rank(M: np.ndarray, tol: float = 1e-8) -> int:
    """Number of singular values above ``tol`` times the largest one."""
    if tol <= 0:
        raise ValueError("tol must be > 0")
    M = np.asarray(M)
    if M.size == 0:
        return 0
    sv = np.linalg.svd(M, compute_uv=False)
    if sv[0] == 0:
        return 0
    return int(np.sum(sv > tol * sv[0]))


def random_special_orthogonal(N: int, rng: np.random.Generator) -> np.ndarray:
    """Haar-random element of ``SO(N)``.

    QR of a standard Gaussian matrix, columns rescaled by ``sign(diag(R))``,
    then the first column negated if the determinant is ``-1``.
    """
    A = rng.standard_normal((N, N))
    Q, R = np.linalg.qr(A)
    Q = Q * np.sign(np.diag(R))
    if np.linalg.det(Q) < 0:
        Q[:, 0] = -Q[:, 0]
    return Q


def scalar_point(O: np.ndarray) -> Dict[Tuple[int, int], np.ndarray]:
    """Evaluation point ``x_{ij} = O[i-1, j-1]`` as ``1 x 1`` matrices."""
    N = O.shape[0]
    return {(i, j): np.array([[O[i - 1, j - 1]]]) for i in range(1, N + 1) for j in range(1, N + 1)}


def scalar_point_ranks(N: int, points: int = 10, seed: int = 0, tol: float = 1e-8, F: Optional[Sequence[NcPoly]] = None) -> List[int]:
    """Rank of ``dF`` at ``points`` seeded random ``SO(N)`` scalar points."""
    rng = np.random.default_rng(seed)
    F = orthogonality_relations(N) if F is None else F
    D = jacobian(F, N)
    ranks = []
    for _ in range(points):
        O = random_special_orthogonal(N, rng)
        ranks.append(numerical_rank(eval_derivative_operator(D, scalar_point(O)).matrix, tol))
    return ranks


def random_poly(
    rng: np.random.Generator,
    variables: Sequence[Variable],
    n_terms: int = 4,
    max_degree: int = 3,
    max_coeff: int = 5,
) -> NcPoly:
    """Sparse polynomial with small rational coefficients."""
    terms: Dict[Word, Coeff] = {}
    for _ in range(n_terms):
        deg = int(rng.integers(0, max_degree + 1))
        w = tuple(variables[int(rng.integers(len(variables)))] for _ in range(deg))
        num = int(rng.integers(-max_coeff, max_coeff + 1))
        den = int(rng.integers(1, max_coeff + 1))
        terms[w] = terms.get(w, 0) + Fraction(num, den)
    return NcPoly(terms)


# ---------------------------------------------------------------------------
# serialization
# ---------------------------------------------------------------------------


def _var_to_json(v):
    return list(v) if isinstance(v, tuple) else v


def _var_from_json(v):
    return tuple(v) if isinstance(v, list) else v


def poly_to_json(P: NcPoly) -> dict:
    """``{"terms": [{"word": [[i, j], ...], "re": .., "im": .., "q": "p/q"}]}`` in canonical word order.

    ``q`` is present for rational coefficients and carries them exactly.
    """
    terms = []
    for w in P.words():
        c = P.terms[w]
        z = complex(c)
        t = {"word": [_var_to_json(v) for v in w], "re": z.real, "im": z.imag}
        if isinstance(c, (int, Fraction)):
            t["q"] = str(Fraction(c))
        terms.append(t)
    return {"terms": terms}


def poly_from_json(data: Union[str, dict]) -> NcPoly:
    """Inverse of :func:`poly_to_json`; real coefficients come back as Fractions."""
    if isinstance(data, str):
        data = json.loads(data)
    terms: Dict[Word, Coeff] = {}
    for t in data["terms"]:
        w = tuple(_var_from_json(v) for v in t["word"])
        re, im = t.get("re", 0), t.get("im", 0)
        if "q" in t:
            c: Coeff = Fraction(t["q"])
        else:
            c = Fraction(str(re)) if im == 0 else complex(re, im)
        terms[w] = terms.get(w, 0) + c
    return NcPoly(terms)
