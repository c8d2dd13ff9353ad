"""Weighted unilateral shifts: spectral measures, Dyck-path moments and the determinant-class functional.

A weighted shift ``R delta_k = w_{k+1} delta_{k+1}`` truncated to ``n``
positions has real part ``(R + R^*)/2``, a symmetric tridiagonal (Jacobi)
matrix with zero diagonal and off-diagonal ``w_k / 2``.  Its spectral measure
with respect to ``delta_0`` has even moments::

    m_{2k} = 4^{-k} * sum over Dyck paths pi of length 2k of c_pi

where ``c_pi`` multiplies ``w_{j+1}^2`` for every up/down pair between levels
``j`` and ``j+1``.  The moments therefore only involve squared weights, which
are exact rationals for the FO Cayley weights.

The determinant-class functional is::

    (1/8) * sum_i mass_i * log(1 - lambda_i) / (1 - lambda_i^2)

over the atoms of the truncated spectral measure; the power series
``log(1 - u)/(1 - u) = sum_k a_k u^k`` with ``a_k = -H_k`` gives the moment
expansion ``sum_k a_k m_{2k}`` of ``int log(1-t^2)/(1-t^2) dmu``.
"""

from __future__ import annotations

import csv
import io
import math
import warnings
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Callable, Dict, List, Optional, Sequence, Tuple, Union

import numpy as np
from scipy import integrate
from scipy.linalg import eigh_tridiagonal

from .fusion import FusionParams, weight_table

__all__ = [
    "WeightedShift",
    "SpectralMeasure",
    "MomentSeries",
    "DetClassReport",
    "SeriesEstimate",
    "PrecisionWarning",
    "from_cayley",
    "real_part_tridiagonal",
    "spectral_measure",
    "moments_dyck",
    "moments_enumerate",
    "dyck_paths",
    "eigen_moments",
    "catalan",
    "cauchy_product",
    "harmonic",
    "series_coefficients_a",
    "semicircle_moment",
    "semicircle_integral",
    "detclass_series",
    "detclass_functional",
    "detclass_report",
    "semicircle_functional",
    "real_part_dense",
    "range_proxy",
    "fk_logdet",
]

Scalar = Union[Fraction, float]


class PrecisionWarning(UserWarning):
    """An eigenvalue of the truncated real part is within 1e-14 of 1."""


# ---------------------------------------------------------------------------
# shifts and measures
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class WeightedShift:
    """Truncated weighted shift on positions ``0..n-1``.

    ``weights_sq[j-1]`` is ``w_j^2``, the squared amplitude into position
    ``j``; exactly ``n - 1`` of them are stored.  Fractions keep the moment
    computations exact.
    """

    weights_sq: Tuple[Scalar, ...]

    def __post_init__(self):
        ws = tuple(self.weights_sq)
        for w2 in ws:
            if not 0 < w2 <= 1:
                raise ValueError(f"squared weights must lie in (0, 1], got {w2!r}")
        object.__setattr__(self, "weights_sq", ws)

    @property
    def n(self) -> int:
        return len(self.weights_sq) + 1

    @property
    def exact(self) -> bool:
        return all(isinstance(w, (int, Fraction)) for w in self.weights_sq)

    @property
    def weights(self) -> np.ndarray:
        return np.sqrt(np.array([float(w) for w in self.weights_sq], dtype=float))

    def truncate(self, n: int) -> "WeightedShift":
        if n < 1 or n > self.n:
            raise ValueError(f"cannot truncate a size-{self.n} shift to {n}")
        return WeightedShift(self.weights_sq[: n - 1])

    @classmethod
    def unit(cls, n: int) -> "WeightedShift":
        return cls((Fraction(1),) * (n - 1))

    @classmethod
    def from_weights(cls, weights: Sequence[float]) -> "WeightedShift":
        return cls(tuple(float(w) ** 2 for w in weights))

    @classmethod
    def random(cls, n: int, rng: np.random.Generator, denominator: int = 64) -> "WeightedShift":
        """Random exact squared weights ``j / denominator`` with ``1 <= j <= denominator``."""
        js = rng.integers(1, denominator + 1, size=n - 1)
        return cls(tuple(Fraction(int(j), denominator) for j in js))


def from_cayley(params: FusionParams, l: int, n: int) -> WeightedShift:
    """The shift ``r`` of sector ``l`` seen from its bottom ``+-`` cell.

    Position ``j`` is level ``l + j`` and ``w_j = c_{l+j, l}``.
    """
    if l < 1:
        raise ValueError("the +- corner is empty for l = 0")
    if n < 1:
        raise ValueError("n must be >= 1")
    table = weight_table(params, l, l + n - 1)
    return WeightedShift(tuple(table[l + j].c_squared for j in range(1, n)))


def real_part_tridiagonal(shift: WeightedShift) -> Tuple[np.ndarray, np.ndarray]:
    """Diagonal (zeros) and off-diagonal ``w_k/2`` of ``Re R``."""
    return np.zeros(shift.n), shift.weights / 2.0


def real_part_dense(shift: WeightedShift) -> np.ndarray:
    n = shift.n
    R = np.zeros((n, n))
    if n > 1:
        R[np.arange(1, n), np.arange(n - 1)] = shift.weights
    return (R + R.T) / 2.0


@dataclass
class SpectralMeasure:
    """Atomic measure: eigenvalues and masses."""

    eigenvalues: np.ndarray
    masses: np.ndarray

    def __post_init__(self):
        self.eigenvalues = np.asarray(self.eigenvalues, dtype=float)
        self.masses = np.asarray(self.masses, dtype=float)

    def __len__(self) -> int:
        return len(self.eigenvalues)

    def total_mass(self) -> float:
        return float(math.fsum(self.masses))

    def integrate(self, f: Callable[[np.ndarray], np.ndarray]) -> float:
        return float(math.fsum(self.masses * f(self.eigenvalues)))

    def moment(self, p: int) -> float:
        return self.integrate(lambda t: t**p)

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["lambda", "mass"])
        for lam, m in zip(self.eigenvalues, self.masses):
            w.writerow([repr(float(lam)), repr(float(m))])
        return buf.getvalue()

    def to_json(self) -> dict:
        return {
            "atoms": [
                {"lambda": float(lam), "mass": float(m)}
                for lam, m in zip(self.eigenvalues, self.masses)
            ]
        }


def spectral_measure(shift: WeightedShift, base_index: int = 0) -> SpectralMeasure:
    """Spectral measure of ``Re R`` with respect to the vector state at ``base_index``."""
    if not 0 <= base_index < shift.n:
        raise IndexError(base_index)
    if shift.n == 1:
        return SpectralMeasure(np.zeros(1), np.ones(1))
    d, e = real_part_tridiagonal(shift)
    try:
        lam, V = eigh_tridiagonal(d, e)
    except np.linalg.LinAlgError as exc:
        raise RuntimeError(f"tridiagonal eigensolver failed for n={shift.n}: {exc}") from exc
    return SpectralMeasure(lam, V[base_index, :] ** 2)


def eigen_moments(shift: WeightedShift, k_max: int) -> np.ndarray:
    """Even moments ``m_0, m_2, ..., m_{2 k_max}`` from the eigendecomposition."""
    mu = spectral_measure(shift)
    return np.array([mu.moment(2 * k) for k in range(k_max + 1)])


# ---------------------------------------------------------------------------
# moments
# ---------------------------------------------------------------------------


@dataclass
class MomentSeries:
    """Even moments ``m_0, m_2, ..., m_{2 k_max}``; odd moments vanish."""

    values: List[Scalar]

    @property
    def k_max(self) -> int:
        return len(self.values) - 1

    def m(self, k: int) -> Scalar:
        """The moment of order ``2k``."""
        return self.values[k]

    def to_json(self) -> dict:
        return {
            "k_max": self.k_max,
            "moments": [
                {
                    "order": 2 * k,
                    "value": float(v),
                    **({"exact": str(v)} if isinstance(v, Fraction) else {}),
                }
                for k, v in enumerate(self.values)
            ],
        }


def moments_dyck(shift: WeightedShift, k_max: int) -> MomentSeries:
    """Even moments by a level-indexed transfer-matrix recursion.

    Paths live on levels ``0..n-1`` of the truncation, so the result equals
    the moments of the truncated real part for every order and those of the
    infinite shift for ``k <= n - 1``.  Exact when the squared weights are
    Fractions; otherwise evaluated in floats with a factor 1/2 per step so
    nothing overflows.
    """
    if k_max < 0:
        raise ValueError("k_max must be >= 0")
    top = min(k_max, shift.n - 1)
    if shift.exact:
        w2 = [Fraction(w) for w in shift.weights_sq[:top]]
        half = Fraction(1, 2)
        v: List[Fraction] = [Fraction(1)] + [Fraction(0)] * top
        out: List[Scalar] = [Fraction(1)]
        for step in range(1, 2 * k_max + 1):
            new = [Fraction(0)] * (top + 1)
            hi = min(step, 2 * k_max - step, top)
            for j in range(hi + 1):
                acc = Fraction(0)
                if j >= 1:
                    acc += v[j - 1]
                if j + 1 <= top:
                    acc += w2[j] * v[j + 1]
                new[j] = acc * half
            v = new
            if step % 2 == 0:
                out.append(v[0])
        return MomentSeries(out)

    w2f = np.array([float(w) for w in shift.weights_sq[:top]], dtype=float)
    vf = np.zeros(top + 1)
    vf[0] = 1.0
    outf: List[Scalar] = [1.0]
    for step in range(1, 2 * k_max + 1):
        new = np.zeros(top + 1)
        new[1:] += vf[:-1]
        new[:-1] += w2f * vf[1:]
        vf = 0.5 * new
        if step % 2 == 0:
            outf.append(float(vf[0]))
    return MomentSeries(outf)


def dyck_paths(k: int):
    """Yield every Dyck path of semilength ``k`` as a tuple of +1/-1 steps."""

    def rec(prefix, height, ups):
        if len(prefix) == 2 * k:
            yield tuple(prefix)
            return
        if ups < k:
            prefix.append(1)
            yield from rec(prefix, height + 1, ups + 1)
            prefix.pop()
        if height > 0:
            prefix.append(-1)
            yield from rec(prefix, height - 1, ups)
            prefix.pop()

    yield from rec([], 0, 0)


def moments_enumerate(shift: WeightedShift, k_max: int) -> MomentSeries:
    """Brute-force Dyck enumeration; exponential, meant as an oracle for ``k_max <= 8``."""
    w2 = list(shift.weights_sq)
    out: List[Scalar] = []
    for k in range(k_max + 1):
        total: Scalar = Fraction(0) if shift.exact else 0.0
        for path in dyck_paths(k):
            height, c = 0, Fraction(1) if shift.exact else 1.0
            ok = True
            for step in path:
                if step < 0:
                    c *= w2[height - 1]
                height += step
                if height > len(w2):
                    ok = False
                    break
            if ok:
                total += c
        out.append(total / 4**k if shift.exact else total / 4.0**k)
    return MomentSeries(out)


def catalan(k: int) -> int:
    if k < 0:
        raise ValueError("k must be >= 0")
    return math.comb(2 * k, k) // (k + 1)


def semicircle_moment(k: int) -> Fraction:
    """``4^{-k} C_k``, the moment of order ``2k`` of the unit-weight shift."""
    return Fraction(catalan(k), 4**k)


# ---------------------------------------------------------------------------
# series
# ---------------------------------------------------------------------------


def cauchy_product(a: Sequence[Scalar], b: Sequence[Scalar], k_max: int) -> List[Scalar]:
    """Coefficients ``0..k_max`` of the product of two power series (quadratic time)."""
    return [sum((a[i] * b[k - i] for i in range(k + 1)), Fraction(0)) for k in range(k_max + 1)]


def harmonic(k: int) -> Fraction:
    return sum((Fraction(1, j) for j in range(1, k + 1)), Fraction(0))


def series_coefficients_a(k_max: int, exact: bool = True) -> List[Scalar]:
    """Coefficients of ``log(1-u)/(1-u) = sum_k a_k u^k``.

    The Cauchy product of ``log(1-u) = -sum_{j>=1} u^j/j`` with the geometric
    series is a running sum, so ``a_k = -H_k`` and ``a_0 = 0``.
    """
    if k_max < 0:
        raise ValueError("k_max must be >= 0")
    out: List[Scalar] = [Fraction(0) if exact else 0.0]
    acc: Scalar = Fraction(0) if exact else 0.0
    for j in range(1, k_max + 1):
        acc -= Fraction(1, j) if exact else 1.0 / j
        out.append(acc)
    return out


def semicircle_integral(f: Callable[[float], float], endpoint_weight: bool = False) -> float:
    """``int_{-1}^{1} f(t) (2/pi) sqrt(1-t^2) dt`` by adaptive quadrature.

    ``(2/pi) sqrt(1-t^2)`` is the spectral density of the unit-weight shift's
    real part with respect to ``delta_0``.  With ``endpoint_weight`` the
    integrand is ``f(t) (2/pi) / sqrt(1-t^2)`` (for integrands carrying a
    ``1/(1-t^2)`` factor), handled by the algebraic endpoint weight.
    """
    # t = cos(theta) removes the algebraic endpoint behaviour
    if endpoint_weight:
        g = lambda th: f(math.cos(th))
    else:
        g = lambda th: f(math.cos(th)) * math.sin(th) ** 2
    val, _ = integrate.quad(g, 0.0, math.pi, limit=400, epsabs=1e-12, epsrel=1e-12)
    val *= 2 / math.pi
    return float(val)


@dataclass
class SeriesEstimate:
    """Partial sum ``sum_{k<=K} a_k m_{2k}`` with a bracket for the full series.

    Terms are non-positive, so the partial sum is an upper bound for the full
    series; adding the unit-shift tail (terms dominate termwise) gives a lower
    bound.
    """

    k_max: int
    partial_sum: float
    unit_partial_sum: float
    unit_limit: float
    lower_bound: float

    def to_json(self) -> dict:
        return {
            "k_max": self.k_max,
            "partial_sum": self.partial_sum,
            "unit_partial_sum": self.unit_partial_sum,
            "unit_limit": self.unit_limit,
            "lower_bound": self.lower_bound,
            "upper_bound": self.partial_sum,
        }


def detclass_series(shift: WeightedShift, k_max: int) -> SeriesEstimate:
    """Moment-series estimate of ``int log(1-t^2)/(1-t^2) dmu``.

    Needs a shift with at least ``k_max + 1`` positions so the moments are
    those of the infinite shift.
    """
    if k_max < 0:
        raise ValueError("k_max must be >= 0")
    if shift.n < k_max + 1:
        raise ValueError(f"need n >= k_max + 1 = {k_max + 1}, got n={shift.n}")
    a = np.array(series_coefficients_a(k_max, exact=False))
    if shift.exact and k_max <= 200:
        m = np.array([float(v) for v in moments_dyck(shift, k_max).values])
    else:
        float_shift = WeightedShift(tuple(float(w) for w in shift.weights_sq))
        m = np.array(moments_dyck(float_shift, k_max).values)
    unit = np.ones(k_max + 1)
    for k in range(1, k_max + 1):
        unit[k] = unit[k - 1] * (2 * k - 1) / (2 * (k + 1))
    partial = float(math.fsum(a * m))
    unit_partial = float(math.fsum(a * unit))
    unit_limit = semicircle_integral(lambda t: math.log1p(-t * t) if abs(t) < 1 else 0.0, endpoint_weight=True)
    return SeriesEstimate(
        k_max=k_max,
        partial_sum=partial,
        unit_partial_sum=unit_partial,
        unit_limit=unit_limit,
        lower_bound=partial + (unit_limit - unit_partial),
    )


# ---------------------------------------------------------------------------
# determinant-class functional
# ---------------------------------------------------------------------------


def _log1m(t: np.ndarray) -> np.ndarray:
    return np.log1p(-t)


def detclass_functional(
    shift: WeightedShift,
    n: Optional[int] = None,
    weighted: bool = True,
    prefactor: float = 1 / 8,
) -> float:
    """``prefactor * sum_i m_i (1 - lambda_i^2)^{-1} log(1 - lambda_i)`` on the size-``n`` truncation.

    ``weighted=False`` drops the ``(1 - t^2)^{-1}`` factor.
    """
    sh = shift if n is None else shift.truncate(n)
    mu = spectral_measure(sh)
    lam = mu.eigenvalues
    if np.any(np.abs(lam) >= 1 - 1e-14):
        warnings.warn(
            f"eigenvalue within 1e-14 of +-1 at n={sh.n}; functional is ill-conditioned",
            PrecisionWarning,
            stacklevel=2,
        )
    f = _log1m(lam)
    if weighted:
        f = f / (1.0 - lam * lam)
    return prefactor * float(math.fsum(mu.masses * f))


def range_proxy(shift: WeightedShift, n: Optional[int] = None) -> float:
    """``<delta_0, (1 - (Re R)^2)^{-1} delta_0>``: finite iff ``delta_0`` is in the range of ``sqrt(1 - (Re R)^2)``."""
    sh = shift if n is None else shift.truncate(n)
    mu = spectral_measure(sh)
    return mu.integrate(lambda t: 1.0 / (1.0 - t * t))


def semicircle_functional(weighted: bool = True, prefactor: float = 1 / 8) -> float:
    """The functional of :func:`detclass_functional` for the semicircle law."""
    if weighted:
        return prefactor * semicircle_integral(lambda t: math.log1p(-t) if t < 1 else 0.0, endpoint_weight=True)
    return prefactor * semicircle_integral(lambda t: math.log1p(-t) if t < 1 else 0.0)


@dataclass
class DetClassReport:
    """Functional values along a truncation schedule."""

    schedule: List[int]
    values: List[float]
    range_proxy: List[float]
    extrapolated: float
    converged: bool
    tol: float
    reference: float
    lower_bound: float
    weighted: bool = True
    series: Optional[SeriesEstimate] = None
    meta: Dict[str, object] = field(default_factory=dict)

    @property
    def all_finite(self) -> bool:
        return all(math.isfinite(v) for v in self.values)

    def differences(self) -> List[float]:
        return [abs(b - a) for a, b in zip(self.values, self.values[1:])]

    def to_json(self) -> dict:
        out = {
            **self.meta,
            "weighted": self.weighted,
            "truncations": [
                {"n": n, "value": v, "range_proxy": rp}
                for n, v, rp in zip(self.schedule, self.values, self.range_proxy)
            ],
            "successive_differences": self.differences(),
            "extrapolated": self.extrapolated,
            "converged": self.converged,
            "tol": self.tol,
            "semicircle_reference": self.reference,
            "lower_bound": self.lower_bound,
            "all_finite": self.all_finite,
        }
        if self.series is not None:
            out["series"] = self.series.to_json()
        return out


def detclass_report(
    shift: WeightedShift,
    schedule: Sequence[int] = (100, 200, 400, 800, 1600),
    tol: float = 1e-2,
    weighted: bool = True,
    series_k_max: Optional[int] = None,
) -> DetClassReport:
    """Evaluate :func:`detclass_functional` along a doubling schedule.

    ``converged`` is set when the last two values differ by less than
    ``tol``.  ``extrapolated`` assumes an ``O(1/n)`` error between the last
    two doubling steps (empirical, no ground truth).  ``lower_bound`` is the
    semicircle value of the same functional minus 1.
    """
    schedule = list(schedule)
    values, proxies = [], []
    for n in schedule:
        values.append(detclass_functional(shift, n, weighted=weighted))
        proxies.append(range_proxy(shift, n))
    if len(values) >= 2:
        n1, n2 = schedule[-2], schedule[-1]
        v1, v2 = values[-2], values[-1]
        extrap = v2 + (v2 - v1) * n1 / (n2 - n1)
        converged = abs(v2 - v1) < tol
    else:
        extrap, converged = values[-1], False
    ref = semicircle_functional(weighted=weighted)
    series = detclass_series(shift, series_k_max) if series_k_max else None
    return DetClassReport(
        schedule=schedule,
        values=values,
        range_proxy=proxies,
        extrapolated=extrap,
        converged=converged,
        tol=tol,
        reference=ref,
        lower_bound=ref - 1.0,
        weighted=weighted,
        series=series,
    )


# ---------------------------------------------------------------------------
# Fuglede-Kadison determinant
# ---------------------------------------------------------------------------


def fk_logdet(
    H: np.ndarray,
    state: Optional[np.ndarray] = None,
    zero_tol: float = 1e-12,
) -> Tuple[float, float]:
    """``(tau(log_+ |H|), exp of it)`` for a Hermitian matrix.

    ``state=None`` uses the normalized trace; a vector uses the vector state
    ``<v, . v>`` (normalised to unit length).  Eigenvalues with
    ``|lambda| <= zero_tol`` contribute ``log_+(0) = 0``.
    """
    H = np.asarray(H)
    if H.ndim != 2 or H.shape[0] != H.shape[1]:
        raise ValueError("expected a square matrix")
    if not np.allclose(H, H.conj().T, atol=1e-12, rtol=0):
        raise ValueError("fk_logdet requires a Hermitian matrix")
    lam, V = np.linalg.eigh(H)
    absl = np.abs(lam)
    logs = np.where(absl > zero_tol, np.log(np.where(absl > zero_tol, absl, 1.0)), 0.0)
    if state is None:
        weights = np.full(len(lam), 1.0 / len(lam))
    else:
        v = np.asarray(state, dtype=complex)
        v = v / np.linalg.norm(v)
        weights = np.abs(V.conj().T @ v) ** 2
    val = float(math.fsum(weights * logs))
    return val, math.exp(val)
