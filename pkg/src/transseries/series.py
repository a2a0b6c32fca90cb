"""The well-based series engine.

A TransSeries is a grid certificate plus an exact expander: given a cutoff
monomial, the expander returns *every* term whose monomial is >= the cutoff.
The certificate (finitely many base monomials, finitely many infinitesimal
ratio monomials) is what makes those queries finite, and it is the
constructive witness that the support is Noetherian.

Supports of grid series can have order type beyond omega, so a plain
"next term" stream cannot be the primitive; decreasing term iteration is
provided as a fuel-bounded facade on top of cutoff expansion.
"""

from __future__ import annotations

import heapq
import math
import threading
from collections import deque
from dataclasses import dataclass
from fractions import Fraction
from typing import Callable, Iterable, Iterator, NamedTuple, Optional, Sequence

from .errors import (BudgetExceededError, DivisionByZeroSeries, DomainError,
                     PartialConstantError, PreconditionError,
                     SummabilityViolationError)
from .limits import LIMITS
from .monomial import (ONE, Monomial, format_term_sum, mono_cmp, mono_max,
                       mono_mul, sort_monomials)


class Term(NamedTuple):
    coeff: object
    mono: Monomial


# -- constant backends -------------------------------------------------------


class ExactBackend:
    """Exact rationals; exp and log are partial (defined at 0 resp. 1)."""

    name = "exact"

    def coerce(self, c):
        return Fraction(c)

    def exp(self, c):
        if c == 0:
            return Fraction(1)
        raise PartialConstantError(f"exp({c}) is irrational; exact backend only knows exp(0)")

    def log(self, c):
        if c == 1:
            return Fraction(0)
        raise PartialConstantError(f"log({c}) is irrational; exact backend only knows log(1)")

    def pow(self, c, r: Fraction):
        c = Fraction(c)
        r = Fraction(r)
        if r.denominator == 1:
            n = r.numerator
            if c == 0 and n < 0:
                raise DomainError("0 to a negative power")
            return c ** n
        if c < 0:
            raise DomainError(f"negative base {c} with fractional exponent {r}")
        num = _exact_root(c.numerator, r.denominator)
        den = _exact_root(c.denominator, r.denominator)
        if num is None or den is None:
            raise PartialConstantError(f"{c}^({r}) is irrational")
        return Fraction(num, den) ** r.numerator


class FloatBackend:
    """Binary floats with total exp/log; for CLI demos only."""

    name = "float"

    def coerce(self, c):
        return float(c)

    def exp(self, c):
        return math.exp(c)

    def log(self, c):
        if c <= 0:
            raise DomainError(f"log of non-positive constant {c}")
        return math.log(c)

    def pow(self, c, r):
        if c < 0 and Fraction(r).denominator != 1:
            raise DomainError(f"negative base {c} with fractional exponent {r}")
        return float(c) ** float(r)


EXACT = ExactBackend()
FLOAT = FloatBackend()


def _exact_root(n: int, q: int) -> Optional[int]:
    """The exact integer q-th root of n, or None (bisection; no floats)."""
    if n in (0, 1):
        return n
    lo, hi = 1, 1 << ((n.bit_length() + q - 1) // q + 1)
    while lo <= hi:
        mid = (lo + hi) // 2
        p = mid ** q
        if p == n:
            return mid
        if p < n:
            lo = mid + 1
        else:
            hi = mid - 1
    return None


# -- grid certificates --------------------------------------------------------


@dataclass(frozen=True)
class GridCertificate:
    """Finite bases and infinitesimal ratios; certified support is
    { b * prod z_i^{v_i} : b in bases, v in N^n }."""

    bases: frozenset
    ratios: frozenset

    def __post_init__(self):
        for z in self.ratios:
            if not z.is_small():
                raise PreconditionError(f"certificate ratio {z.render()} is not infinitesimal")

    @staticmethod
    def of(bases: Iterable[Monomial], ratios: Iterable[Monomial] = ()) -> "GridCertificate":
        return GridCertificate(frozenset(bases), frozenset(ratios))

    def union(self, other: "GridCertificate") -> "GridCertificate":
        return GridCertificate(self.bases | other.bases, self.ratios | other.ratios)

    def product(self, other: "GridCertificate") -> "GridCertificate":
        if not self.bases or not other.bases:
            return GridCertificate(frozenset(), frozenset())
        bases = frozenset(mono_mul(a, b) for a in self.bases for b in other.bases)
        return GridCertificate(bases, self.ratios | other.ratios)

    @property
    def is_trivial(self) -> bool:
        return not self.bases

    def grid_max(self) -> Optional[Monomial]:
        if not self.bases:
            return None
        return mono_max(self.bases)

    def points_above(self, cutoff: Monomial, fuel: Optional[int] = None) -> set:
        """All grid monomials >= cutoff (finite, or BudgetExceededError)."""
        fuel = LIMITS.expand_fuel if fuel is None else fuel
        out: set = set()
        ratios = sort_monomials(self.ratios)
        for b in self.bases:
            out |= _region_monomials(b, ratios, cutoff, fuel)
        return out

    def member(self, m: Monomial, min_factors: int = 0,
               fuel: Optional[int] = None) -> bool:
        """Is m a grid point (with at least min_factors ratio factors)?"""
        fuel = LIMITS.expand_fuel if fuel is None else fuel
        ratios = sort_monomials(self.ratios)
        for b in self.bases:
            if _region_contains(b, ratios, m, min_factors, fuel):
                return True
        return False


def _region_monomials(base: Monomial, ratios: list, cutoff: Monomial,
                      fuel: int) -> set:
    """Monomials of the downward-closed lattice region {v : base*z^v >= cutoff}."""
    if mono_cmp(base, cutoff) < 0:
        return set()
    n = len(ratios)
    found = {base}
    if n == 0:
        return found
    start = (0,) * n
    seen = {start}
    queue = deque([(start, base)])
    budget = fuel
    while queue:
        v, m = queue.popleft()
        budget -= 1
        if budget < 0:
            raise BudgetExceededError(
                "grid expansion exceeded fuel; the cutoff may lie beyond the "
                "grid's archimedean reach")
        for i in range(n):
            w = v[:i] + (v[i] + 1,) + v[i + 1:]
            if w in seen:
                continue
            seen.add(w)
            m2 = mono_mul(m, ratios[i])
            if mono_cmp(m2, cutoff) >= 0:
                found.add(m2)
                queue.append((w, m2))
    return found


def _region_contains(base: Monomial, ratios: list, target: Monomial,
                     min_factors: int, fuel: int) -> bool:
    if not ratios:
        return base is target and min_factors <= 0
    if mono_cmp(base, target) < 0:
        return False
    n = len(ratios)
    start = (0,) * n
    seen = {start}
    queue = deque([(start, base)])
    budget = fuel
    while queue:
        v, m = queue.popleft()
        budget -= 1
        if budget < 0:
            raise BudgetExceededError("grid membership search exceeded fuel")
        if m is target and sum(v) >= min_factors:
            return True
        for i in range(n):
            w = v[:i] + (v[i] + 1,) + v[i + 1:]
            if w in seen:
                continue
            seen.add(w)
            m2 = mono_mul(m, ratios[i])
            if mono_cmp(m2, target) >= 0:
                queue.append((w, m2))
    return False


# -- the series type ----------------------------------------------------------


class _HeapKey:
    __slots__ = ("m",)

    def __init__(self, m):
        self.m = m

    def __lt__(self, other):
        return mono_cmp(self.m, other.m) > 0  # max-heap on monomials


class TransSeries:
    """A well-based series over the log-exp monomial group.

    `cert` bounds the support; `expand(cutoff)` returns the exact finite
    dict of all terms with monomial >= cutoff.  Values are immutable and
    results are memoized at the deepest cutoff seen so far.  Memo access
    is serialized per series; the operation graph is a DAG, so nested
    expansion never self-locks and results are interleaving-independent.
    """

    __slots__ = ("cert", "_expander", "_cutoff", "_cache", "_lock")

    def __init__(self, cert: GridCertificate, expander: Callable[[Monomial], dict]):
        self.cert = cert
        self._expander = expander
        self._cutoff = None
        self._cache = None
        self._lock = threading.RLock()

    # -- exact expansion ---------------------------------------------------

    def expand(self, cutoff: Monomial) -> dict:
        """All terms with monomial >= cutoff, as {Monomial: coeff}, exact."""
        if self.cert.is_trivial:
            return {}
        with self._lock:
            if self._cutoff is not None and mono_cmp(cutoff, self._cutoff) >= 0:
                return {m: c for m, c in self._cache.items()
                        if mono_cmp(m, cutoff) >= 0}
            got = self._expander(cutoff)
            self._cache = {m: c for m, c in got.items() if c}
            self._cutoff = cutoff
            return dict(self._cache)

    def terms_above(self, cutoff: Monomial) -> list:
        """Terms with monomial >= cutoff, sorted decreasing."""
        d = self.expand(cutoff)
        return [Term(d[m], m) for m in sort_monomials(d)]

    def with_cert(self, cert: GridCertificate) -> "TransSeries":
        return TransSeries(cert, self.expand)

    # -- decreasing-term facade ---------------------------------------------

    def _candidates(self) -> Iterator[Monomial]:
        """Certificate grid monomials in strictly decreasing order.

        Frontier priority queue over lattice points; ties broken by
        (base index, lattice exponent) so the walk is value-canonical.
        """
        ratios = sort_monomials(self.cert.ratios)
        n = len(ratios)
        heap = []
        seen = set()
        for bi, b in enumerate(sort_monomials(self.cert.bases)):
            start = (0,) * n
            seen.add((bi, start))
            heapq.heappush(heap, (_HeapKey(b), bi, start, b))
        while heap:
            top = heap[0][0].m
            group = []
            while heap and heap[0][0].m is top:
                group.append(heapq.heappop(heap))
            for _, bi, v, m in group:
                for i in range(n):
                    w = v[:i] + (v[i] + 1,) + v[i + 1:]
                    if (bi, w) in seen:
                        continue
                    seen.add((bi, w))
                    m2 = mono_mul(m, ratios[i])
                    heapq.heappush(heap, (_HeapKey(m2), bi, w, m2))
            yield top

    def first_terms(self, n: int, fuel: Optional[int] = None) -> list:
        """The n largest terms (fewer if the support is smaller), exact.

        Raises BudgetExceededError if the candidate walk cannot decide
        within fuel (supports with long zero-coefficient grid prefixes).
        """
        if n <= 0 or self.cert.is_trivial:
            return []
        fuel = LIMITS.term_fuel if fuel is None else fuel
        steps = 0
        last = {}
        for cand in self._candidates():
            steps += 1
            if steps > fuel:
                raise BudgetExceededError(
                    f"could not locate {n} terms within {fuel} candidate monomials")
            last = self.expand(cand)
            if len(last) >= n:
                tops = sort_monomials(last)[:n]
                return [Term(last[m], m) for m in tops]
        return [Term(last[m], m) for m in sort_monomials(last)]

    def leading_term(self, fuel: Optional[int] = None) -> Optional[Term]:
        """Dominant term, or None if the series is provably zero."""
        got = self.first_terms(1, fuel)
        return got[0] if got else None

    def iter_terms(self, fuel: Optional[int] = None) -> Iterator[Term]:
        """Terms in strictly decreasing monomial order (fuel-bounded walk)."""
        fuel = LIMITS.term_fuel if fuel is None else fuel
        steps = 0
        emitted = set()
        for cand in self._candidates():
            steps += 1
            if steps > fuel:
                raise BudgetExceededError("term iteration exceeded fuel")
            d = self.expand(cand)
            for m in sort_monomials(d):
                if m not in emitted:
                    emitted.add(m)
                    yield Term(d[m], m)

    def is_provably_zero(self, fuel: Optional[int] = None) -> bool:
        return self.leading_term(fuel) is None

    # -- arithmetic sugar -----------------------------------------------------

    def __add__(self, other):
        return add(self, as_series(other))

    __radd__ = __add__

    def __neg__(self):
        return scale(self, -1)

    def __sub__(self, other):
        return add(self, -as_series(other))

    def __rsub__(self, other):
        return add(as_series(other), -self)

    def __mul__(self, other):
        if isinstance(other, TransSeries):
            return mul(self, other)
        return scale(self, other)

    __rmul__ = __mul__

    def __truediv__(self, other):
        if isinstance(other, TransSeries):
            return mul(self, invert(other))
        return scale(self, Fraction(1) / Fraction(other)
                     if not isinstance(other, float) else 1.0 / other)

    def render(self, nterms: int = 8, fuel: Optional[int] = None) -> str:
        return render_series(self, nterms, fuel=fuel)

    def __repr__(self):
        try:
            return f"TransSeries({self.render(4)})"
        except BudgetExceededError:
            return "TransSeries(<budget exceeded>)"


def as_series(x) -> TransSeries:
    if isinstance(x, TransSeries):
        return x
    if isinstance(x, Monomial):
        return mono_series(x)
    return const(x)


# -- constructors -------------------------------------------------------------


def from_terms(terms: Iterable) -> TransSeries:
    """Finite series from (coeff, monomial) pairs; merges and drops zeros."""
    acc: dict = {}
    for coeff, m in terms:
        if isinstance(coeff, int):
            coeff = Fraction(coeff)
        acc[m] = acc.get(m, 0) + coeff
    acc = {m: c for m, c in acc.items() if c}
    cert = GridCertificate.of(acc.keys())

    def expander(cutoff):
        return {m: c for m, c in acc.items() if mono_cmp(m, cutoff) >= 0}

    return TransSeries(cert, expander)


ZERO = from_terms([])


def const(c) -> TransSeries:
    return from_terms([(c, ONE)])


ONE_SERIES = const(1)


def mono_series(m: Monomial) -> TransSeries:
    return from_terms([(1, m)])


# -- linear operations ---------------------------------------------------------


def scale(s: TransSeries, c) -> TransSeries:
    if isinstance(c, int):
        c = Fraction(c)
    if not c:
        return ZERO

    def expander(cutoff):
        return {m: c * v for m, v in s.expand(cutoff).items()}

    return TransSeries(s.cert, expander)


def add(s: TransSeries, t: TransSeries) -> TransSeries:
    cert = s.cert.union(t.cert)

    def expander(cutoff):
        acc = dict(s.expand(cutoff))
        for m, c in t.expand(cutoff).items():
            acc[m] = acc.get(m, 0) + c
        return acc

    return TransSeries(cert, expander)


def sum_family(fam: Sequence[TransSeries]) -> TransSeries:
    """Sum of a finite family (regrouping-invariant).

    A single flat node: expansion loops over the children, so wide sums
    (combinatorial coefficient formulas) cost no recursion depth.
    """
    fam = list(fam)
    if not fam:
        return ZERO
    if len(fam) == 1:
        return fam[0]
    cert = fam[0].cert
    for s in fam[1:]:
        cert = cert.union(s.cert)

    def expander(cutoff):
        acc: dict = {}
        for s in fam:
            for m, c in s.expand(cutoff).items():
                acc[m] = acc.get(m, 0) + c
        return acc

    return TransSeries(cert, expander)


def mul(s: TransSeries, t: TransSeries) -> TransSeries:
    """Cauchy product; every coefficient is the full finite convolution."""
    cert = s.cert.product(t.cert)

    def expander(cutoff):
        ms = s.cert.grid_max()
        mt = t.cert.grid_max()
        if ms is None or mt is None:
            return {}
        left = s.expand(mono_mul(cutoff, mt.inv()))
        right = t.expand(mono_mul(cutoff, ms.inv()))
        acc: dict = {}
        for u, a in left.items():
            for v, b in right.items():
                w = mono_mul(u, v)
                if mono_cmp(w, cutoff) >= 0:
                    acc[w] = acc.get(w, 0) + a * b
        return acc

    return TransSeries(cert, expander)


# -- dominance ---------------------------------------------------------------


@dataclass(frozen=True)
class DominanceVerdict:
    relation: str            # 'prec' | 'succ' | 'asymp' | 'sim' | 'incomparable-zero'
    left: Optional[Term]
    right: Optional[Term]

    def __str__(self):
        return self.relation

    @property
    def asymp(self) -> bool:
        """Equal dominant monomials ('sim' is the refinement with equal terms)."""
        return self.relation in ("asymp", "sim")

    @property
    def preceq(self) -> bool:
        return self.relation in ("prec", "asymp", "sim")

    @property
    def succeq(self) -> bool:
        return self.relation in ("succ", "asymp", "sim")


def dominance(s: TransSeries, t: TransSeries,
              fuel: Optional[int] = None) -> DominanceVerdict:
    """Compare dominant monomials; zero operands get dedicated verdicts."""
    ls = s.leading_term(fuel)
    lt = t.leading_term(fuel)
    if ls is None and lt is None:
        return DominanceVerdict("incomparable-zero", None, None)
    if ls is None:
        return DominanceVerdict("prec", None, lt)
    if lt is None:
        return DominanceVerdict("succ", ls, None)
    c = mono_cmp(ls.mono, lt.mono)
    if c < 0:
        return DominanceVerdict("prec", ls, lt)
    if c > 0:
        return DominanceVerdict("succ", ls, lt)
    if ls.coeff == lt.coeff:
        return DominanceVerdict("sim", ls, lt)
    return DominanceVerdict("asymp", ls, lt)


def is_infinitesimal(s: TransSeries, fuel: Optional[int] = None) -> bool:
    lt = s.leading_term(fuel)
    return lt is None or lt.mono.is_small()


def dominant_decompose(s: TransSeries, fuel: Optional[int] = None) -> tuple:
    """Unique (c, d, eps) with s = c*d*(1+eps) and eps infinitesimal."""
    lt = s.leading_term(fuel)
    if lt is None:
        raise DomainError("the zero series has no dominant decomposition")
    c, d = lt.coeff, lt.mono
    unit = mul(s, mono_series(d.inv()))
    eps = add(scale(unit, Fraction(1) / c if not isinstance(c, float) else 1.0 / c),
              scale(ONE_SERIES, -1))
    return c, d, eps


def truncate_initial(s: TransSeries, cutoff: Monomial) -> TransSeries:
    """Keep exactly the terms with monomial strictly > cutoff."""
    d = s.expand(cutoff)
    return from_terms([(c, m) for m, c in d.items() if mono_cmp(m, cutoff) > 0])


# -- geometric and lazy summation machinery -----------------------------------


def _infinitesimal_bases(cert: GridCertificate, dom: Monomial,
                         fuel: Optional[int] = None) -> frozenset:
    """Rewrite the part of the grid at or below `dom` with bases <= dom.

    Walks each base's region strictly above dom and collects the boundary
    children; sound because the region is downward closed.
    """
    fuel = LIMITS.expand_fuel if fuel is None else fuel
    ratios = sort_monomials(cert.ratios)
    n = len(ratios)
    out = set()
    for b in cert.bases:
        if mono_cmp(b, dom) <= 0:
            out.add(b)
            continue
        if n == 0:
            continue  # this base's only point lies above dom: no support there
        start = (0,) * n
        seen = {start}
        queue = deque([(start, b)])
        budget = fuel
        while queue:
            v, m = queue.popleft()
            budget -= 1
            if budget < 0:
                raise BudgetExceededError(
                    "certificate refinement exceeded fuel; grid reaches above "
                    f"{dom.render()} in a higher archimedean class")
            for i in range(n):
                w = v[:i] + (v[i] + 1,) + v[i + 1:]
                if w in seen:
                    continue
                seen.add(w)
                m2 = mono_mul(m, ratios[i])
                if mono_cmp(m2, dom) <= 0:
                    out.add(m2)
                else:
                    queue.append((w, m2))
    return frozenset(out)


def geometric_substitute(coeffs, eps: TransSeries,
                         fuel: Optional[int] = None) -> TransSeries:
    """Sum_k c_k eps^k for infinitesimal eps.

    `coeffs` is a callable k -> constant or a finite sequence (missing
    entries are zero).  Summability is the Neumann-series argument made
    constructive: the refined certificate of eps has infinitesimal bases,
    so each cutoff admits a finite power bound.
    """
    if callable(coeffs):
        cf = coeffs
        max_k = None
    else:
        seq = list(coeffs)
        cf = lambda k: seq[k] if k < len(seq) else 0
        max_k = len(seq) - 1

    lt = eps.leading_term(fuel)
    if lt is None:
        return const(cf(0))
    if not lt.mono.is_small():
        raise PreconditionError(
            f"geometric substitution requires an infinitesimal series; "
            f"dominant monomial is {lt.mono.render()}")
    tight_bases = _infinitesimal_bases(eps.cert, lt.mono)
    tight = eps.with_cert(GridCertificate(tight_bases, eps.cert.ratios))
    rho = mono_max(tight_bases) if tight_bases else None
    cert = GridCertificate(frozenset([ONE]),
                           frozenset(eps.cert.ratios) | tight_bases)
    powers = [ONE_SERIES]

    def expander(cutoff):
        acc: dict = {}
        if mono_cmp(ONE, cutoff) >= 0:
            c0 = cf(0)
            if c0:
                acc[ONE] = c0
        if rho is None:
            return acc
        level = 0
        bound = ONE
        guard = LIMITS.level_fuel
        while True:
            bound = mono_mul(bound, rho)
            if mono_cmp(bound, cutoff) < 0:
                break
            level += 1
            guard -= 1
            if guard < 0:
                raise BudgetExceededError(
                    "geometric substitution: power bound search exceeded fuel")
        top = level if max_k is None else min(level, max_k)
        for k in range(1, top + 1):
            while len(powers) <= k:
                powers.append(mul(powers[-1], tight))
            ck = cf(k)
            if not ck:
                continue
            for m, v in powers[k].expand(cutoff).items():
                acc[m] = acc.get(m, 0) + ck * v
        return acc

    return TransSeries(cert, expander)


def invert(s: TransSeries, fuel: Optional[int] = None) -> TransSeries:
    """Multiplicative inverse via dominant decomposition and Neumann series."""
    lt = s.leading_term(fuel)
    if lt is None:
        raise DivisionByZeroSeries("cannot invert the zero series")
    c, d, eps = dominant_decompose(s, fuel)
    geo = geometric_substitute(lambda k: Fraction(-1) ** k
                               if not isinstance(c, float) else (-1.0) ** k, eps)
    cinv = Fraction(1) / c if not isinstance(c, float) else 1.0 / c
    return scale(mul(geo, mono_series(d.inv())), cinv)


def sum_lazy(producer: Iterable, bases: Iterable[Monomial],
             ratios: Iterable[Monomial]) -> TransSeries:
    """Sum of a lazy indexed family sharing one grid certificate.

    `producer` yields (level, TransSeries) with nondecreasing levels; the
    series at level L must have support inside the declared grid with at
    least L ratio factors.  Violations discovered during enumeration raise
    SummabilityViolationError naming the witness monomial.
    """
    cert = GridCertificate.of(bases, ratios)
    zmax = mono_max(cert.ratios) if cert.ratios else None
    gmax = cert.grid_max()
    it = iter(producer)
    consumed: list = []
    state = {"exhausted": False, "last_level": -1}
    checked: set = set()

    def pull_through(level_cap):
        while not state["exhausted"] and state["last_level"] <= level_cap:
            if len(consumed) > LIMITS.level_fuel:
                raise BudgetExceededError("sum_lazy pulled too many summands")
            try:
                level, series = next(it)
            except StopIteration:
                state["exhausted"] = True
                return
            if level < state["last_level"]:
                raise PreconditionError("sum_lazy producer levels must be nondecreasing")
            state["last_level"] = level
            consumed.append((level, series))

    def expander(cutoff):
        if gmax is None:
            return {}
        if zmax is None:
            pull_through(LIMITS.level_fuel)
            if not state["exhausted"]:
                raise PreconditionError(
                    "sum_lazy with no ratios requires a finite producer")
            cap = 0
        else:
            cap = -1
            bound = gmax
            guard = LIMITS.level_fuel
            while mono_cmp(bound, cutoff) >= 0:
                cap += 1
                bound = mono_mul(bound, zmax)
                guard -= 1
                if guard < 0:
                    raise BudgetExceededError("sum_lazy level bound exceeded fuel")
            # window past the cap: those summands must be provably silent
            # above the cutoff, else the level contract was violated
            pull_through(cap + LIMITS.divergence_window)
        acc: dict = {}
        for idx, (level, series) in enumerate(consumed):
            if level > cap:
                stray = series.expand(cutoff)
                if stray:
                    raise SummabilityViolationError(
                        f"level-{level} summand reaches above the cutoff "
                        f"bound with {next(iter(stray)).render()}",
                        witness=next(iter(stray)))
                continue
            for m, c in series.expand(cutoff).items():
                if (idx, m) not in checked:
                    if not cert.member(m, min_factors=level):
                        raise SummabilityViolationError(
                            f"monomial {m.render()} of the level-{level} summand "
                            f"is outside the declared grid", witness=m)
                    checked.add((idx, m))
                acc[m] = acc.get(m, 0) + c
        return acc

    return TransSeries(cert, expander)


def extend_strongly_linear(map_fn: Callable[[Monomial], TransSeries],
                           s: TransSeries, *,
                           image_bases: Iterable[Monomial],
                           image_ratios: Iterable[Monomial],
                           growth: Monomial,
                           multiplicative: bool = False) -> TransSeries:
    """The unique strongly linear extension of a Noetherian monomial map.

    The caller certifies the image family: a common grid certificate
    (image_bases, image_ratios) and a growth bound, a monomial with
    supp(map_fn(m)) <= m * growth for every grid monomial m of s.  With the
    product flag set the map is spot-checked multiplicative on certificate
    generator pairs.
    """
    if image_bases is None or image_ratios is None or growth is None:
        raise PreconditionError(
            "extend_strongly_linear needs the common image certificate "
            "(image_bases, image_ratios, growth)")
    icert = GridCertificate.of(image_bases, image_ratios)
    cache: dict = {}

    def image(m):
        got = cache.get(m)
        if got is None:
            got = cache[m] = map_fn(m)
        return got

    if multiplicative:
        gens = sort_monomials(set(s.cert.bases) | set(s.cert.ratios))[:3]
        for a in gens:
            for b in gens:
                lhs = image(mono_mul(a, b)).first_terms(2, fuel=64)
                rhs = mul(image(a), image(b)).first_terms(2, fuel=64)
                if lhs != rhs:
                    raise PreconditionError(
                        f"map is not multiplicative on {a.render()}, {b.render()}")

    checked: set = set()

    def expander(cutoff):
        pulled = s.expand(mono_mul(cutoff, growth.inv()))
        acc: dict = {}
        for m, coeff in pulled.items():
            for mi, ci in image(m).expand(cutoff).items():
                if mi not in checked:
                    if not icert.member(mi):
                        raise SummabilityViolationError(
                            f"image monomial {mi.render()} of {m.render()} "
                            f"escapes the declared image grid", witness=mi)
                    checked.add(mi)
                acc[mi] = acc.get(mi, 0) + coeff * ci
        return acc

    return TransSeries(icert, expander)


def iterate_contracting(phi: Callable[[TransSeries], TransSeries], coeffs,
                        s: TransSeries, *, gamma: Iterable[Monomial],
                        fuel: Optional[int] = None) -> TransSeries:
    """Sum_k c_k phi^[k](s) for a contracting strongly linear endomap.

    `gamma` is the finite set of infinitesimal contraction generators:
    supp(phi(t)) must lie in supp(t) * (lattice over gamma, >= 1 factor).
    Contraction is spot-checked on the certificate generators of s; a
    violation names the offending monomial.
    """
    if callable(coeffs):
        cf = coeffs
        max_k = None
    else:
        seq = list(coeffs)
        cf = lambda k: seq[k] if k < len(seq) else 0
        max_k = len(seq) - 1

    gamma = frozenset(gamma)
    for z in gamma:
        if not z.is_small():
            raise PreconditionError(
                f"contraction generator {z.render()} is not infinitesimal")
    for g in set(s.cert.bases) | set(s.cert.ratios):
        img = phi(mono_series(g))
        lt = img.leading_term(fuel)
        if lt is not None and mono_cmp(lt.mono, g) >= 0:
            raise SummabilityViolationError(
                f"operator is not contracting at {g.render()}: image has "
                f"monomial {lt.mono.render()}", witness=(g, lt.mono))

    if not gamma:
        return scale(s, cf(0))
    rho = mono_max(gamma)
    gmax = s.cert.grid_max()
    cert = GridCertificate(s.cert.bases, s.cert.ratios | gamma)
    iterates = [s]

    def expander(cutoff):
        if gmax is None:
            return {}
        cap = -1
        bound = gmax
        guard = LIMITS.level_fuel
        while mono_cmp(bound, cutoff) >= 0:
            cap += 1
            bound = mono_mul(bound, rho)
            guard -= 1
            if guard < 0:
                raise BudgetExceededError("iterate_contracting bound exceeded fuel")
        top = cap if max_k is None else min(cap, max_k)
        acc: dict = {}
        for k in range(top + 1):
            while len(iterates) <= k:
                iterates.append(phi(iterates[-1]))
            ck = cf(k)
            if not ck:
                continue
            for m, v in iterates[k].expand(cutoff).items():
                acc[m] = acc.get(m, 0) + ck * v
        return acc

    return TransSeries(cert, expander)


# -- equality helpers and rendering -------------------------------------------


def equal_below(s: TransSeries, t: TransSeries, cutoff: Monomial) -> bool:
    """Exact equality of all terms with monomial >= cutoff (decidable)."""
    return s.expand(cutoff) == t.expand(cutoff)


def equal_prefix(s: TransSeries, t: TransSeries, n: int,
                 fuel: Optional[int] = None) -> bool:
    """Do the n largest terms of both series coincide exactly?"""
    return s.first_terms(n, fuel) == t.first_terms(n, fuel)


def depth_cutoff(s: TransSeries, depth: int):
    """(cutoff, exhausted): the (depth+1)-th grid candidate of s, or the
    last one if the grid has fewer points."""
    last = None
    walker = s._candidates()
    for _ in range(depth + 1):
        try:
            last = next(walker)
        except StopIteration:
            return last, True
    return last, False


def compare_to_depth(s: TransSeries, t: TransSeries, depth: int):
    """Exact comparison through the first `depth` grid positions.

    Returns (equal, cutoff, discrepancies) where discrepancies are the
    terms of s - t above the positional cutoff, largest first.
    """
    diff = add(s, scale(t, -1))
    cutoff, exhausted = depth_cutoff(diff, depth)
    if cutoff is None:
        return True, None, []
    d = diff.expand(cutoff)
    if not exhausted:
        d = {m: c for m, c in d.items() if mono_cmp(m, cutoff) > 0}
    bad = [Term(d[m], m) for m in sort_monomials(d)]
    return not bad, cutoff, bad


def render_series(s: TransSeries, nterms: int = 8,
                  fuel: Optional[int] = None) -> str:
    """`c1*m1 + ... + O(mK)` with up to nterms nonzero terms.

    Walks at most 2*nterms+6 grid positions looking for nonzero
    coefficients; the O-monomial marks where knowledge ends (the next
    unexplored grid position, or the first unshown term)."""
    if s.cert.is_trivial:
        return "0"
    walker = s._candidates()
    budget = (2 * nterms + 6) if fuel is None else fuel
    d: dict = {}
    exhausted = False
    while budget > 0:
        budget -= 1
        try:
            cand = next(walker)
        except StopIteration:
            exhausted = True
            break
        d = s.expand(cand)
        if len(d) > nterms:
            break
    order = sort_monomials(d)
    terms = [(d[m], m) for m in order[:nterms]]
    body = format_term_sum(terms) if terms else ""
    omark = None
    if len(order) > nterms:
        omark = order[nterms]
    elif not exhausted:
        try:
            omark = next(walker)
        except StopIteration:
            omark = None
    if omark is None:
        return body or "0"
    tail = f"O({omark.render()})"
    return f"{body} + {tail}" if body else tail
