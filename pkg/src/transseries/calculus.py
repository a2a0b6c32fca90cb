"""Differential and logarithmic structure on the transseries field.

The derivation is the strongly linear extension of m -> m * dagger(m) with
dagger(l_k) = (l_0 ... l_k)^{-1} and x' = 1.  log and exp follow the
multiplicative decomposition s = c*d*(1+eps); right composition is defined
on atoms by l_0 o g = g, l_{k+1} o g = log(l_k o g), extended
multiplicatively over monomials and strongly linearly over series.
"""

from __future__ import annotations

from fractions import Fraction
from math import factorial
from typing import Optional, Sequence

from .errors import DomainError, PreconditionError, ResourceError
from .limits import LIMITS
from .monomial import (ONE, X, Monomial, atom, dagger_terms, deriv_terms,
                       make_monomial, mono_cmp, mono_max, mono_mul, mono_pow,
                       pre_log)
from .series import (EXACT, ONE_SERIES, ZERO, GridCertificate, TransSeries,
                     add, const, dominant_decompose, extend_strongly_linear,
                     from_terms, geometric_substitute, invert, mono_series,
                     mul, scale, sum_family)

X_SERIES = mono_series(X)


def dagger(m: Monomial) -> TransSeries:
    """The logarithmic derivative m'/m = (ell m)'; a finite exact series."""
    return from_terms(dagger_terms(m))


def dagger_support_closure(gens, fuel: int = 10_000) -> frozenset:
    """Smallest monomial set containing every dagger support of `gens`
    and closed under taking dagger supports.

    Finite because dagger supports only involve inverse log-atom products
    and strictly lower exponential height; this set is the per-degree
    factor alphabet for iterated derivatives.
    """
    out: set = set()
    work = list(gens)
    while work:
        fuel -= 1
        if fuel < 0:
            raise ResourceError("dagger support closure did not stabilise")
        g = work.pop()
        for _, d in dagger_terms(g):
            if d not in out:
                out.add(d)
                work.append(d)
    return frozenset(out)


def derive(s: TransSeries) -> TransSeries:
    """Strongly linear derivation; Leibniz holds to any depth."""
    gens = set(s.cert.bases) | set(s.cert.ratios)
    dag: set = set()
    for g in gens:
        dag |= {d for _, d in dagger_terms(g)}
    if not dag or s.cert.is_trivial:
        return ZERO
    growth = mono_max(dag)
    image_bases = {mono_mul(b, d) for b in s.cert.bases for d in dag}
    return extend_strongly_linear(
        lambda m: from_terms(deriv_terms(m)), s,
        image_bases=image_bases, image_ratios=s.cert.ratios, growth=growth)


def derive_n(s: TransSeries, n: int) -> TransSeries:
    for _ in range(n):
        s = derive(s)
    return s


def log_series(s: TransSeries, backend=EXACT) -> TransSeries:
    """log s = ell(d) + log_K(c) + sum_{k>0} (-1)^{k-1}/k * eps^k."""
    c, d, eps = dominant_decompose(s)
    if not c > 0:
        raise DomainError("log of a series with non-positive leading coefficient")
    logc = backend.log(c)
    tail = geometric_substitute(
        lambda k: Fraction(0) if k == 0 else Fraction((-1) ** (k - 1), k), eps)
    out = add(pre_log(d), tail)
    if logc:
        out = add(out, const(logc))
    return out


def exp_series(s: TransSeries, backend=EXACT) -> TransSeries:
    """exp of s = L + c + eps: the monomial exp(L) times exp_K(c) times
    the factorial series in eps.

    The purely large part L must materialise within the expansion budget;
    its coefficients become exact rationals in the monomial.
    """
    parts = s.expand(ONE)
    large = [(m, c) for m, c in parts.items() if m.is_large()]
    c0 = parts.get(ONE, 0)
    head = make_monomial({}, [(Fraction(c), m) for m, c in large])
    ec = backend.exp(backend.coerce(c0)) if c0 else 1
    eps = s - from_terms([(c, m) for m, c in large] + ([(c0, ONE)] if c0 else []))
    tail = geometric_substitute(lambda k: Fraction(1, factorial(k)), eps)
    out = mul(mono_series(head), tail)
    if ec != 1:
        out = scale(out, ec)
    return out


def pow_series(s: TransSeries, r, backend=EXACT) -> TransSeries:
    """s^r for rational r; integer powers are exact products, fractional
    powers use c^r * d^r * binomial series in eps (requires c^r exact)."""
    r = Fraction(r)
    if r == 0:
        return ONE_SERIES
    if r.denominator == 1:
        n = r.numerator
        base = s if n > 0 else invert(s)
        out = base
        for _ in range(abs(n) - 1):
            out = mul(out, base)
        return out
    c, d, eps = dominant_decompose(s)
    cr = backend.pow(c, r)

    def binom(k: int):
        out = Fraction(1)
        for i in range(k):
            out *= (r - i) / (i + 1)
        return out

    tail = geometric_substitute(binom, eps)
    return scale(mul(mono_series(mono_pow(d, r)), tail), cr)


# -- right composition --------------------------------------------------------


class CompositionHandle:
    """Right composition by a fixed positive infinite series g.

    Memoizes atom and monomial images; composition of a series is the
    strongly linear extension over its term expansion.
    """

    def __init__(self, g: TransSeries, backend=EXACT):
        lt = g.leading_term()
        if lt is None or not lt.mono.is_large() or not lt.coeff > 0:
            raise PreconditionError(
                "composition requires a positive infinite right argument")
        self.g = g
        self.backend = backend
        self._atoms = [g]            # atom_image(k) = l_k o g
        self._monos: dict = {ONE: ONE_SERIES}

    def atom_image(self, k: int) -> TransSeries:
        while len(self._atoms) <= k:
            self._atoms.append(log_series(self._atoms[-1], self.backend))
        return self._atoms[k]

    def mono_image(self, m: Monomial) -> TransSeries:
        got = self._monos.get(m)
        if got is not None:
            return got
        out = ONE_SERIES
        for k, r in m.log_powers:
            out = mul(out, pow_series(self.atom_image(k), r, self.backend))
        if m.exp_terms:
            arg = ZERO
            for c, u in m.exp_terms:
                arg = add(arg, scale(self.mono_image(u), c))
            out = mul(out, exp_series(arg, self.backend))
        self._monos[m] = out
        return out

    def image_dominant(self, m: Monomial) -> Monomial:
        return self.mono_image(m).leading_term().mono


def compose(f: TransSeries, h) -> TransSeries:
    """f o g, extended strongly linearly from monomial images."""
    from .series import _infinitesimal_bases  # certificate refinement helper

    if isinstance(h, TransSeries):
        h = CompositionHandle(h)
    if f.cert.is_trivial:
        return ZERO

    base_img = {b: h.mono_image(b) for b in f.cert.bases}
    bases: set = set()
    ratios: set = set()
    for img in base_img.values():
        bases |= set(img.cert.bases)
        ratios |= set(img.cert.ratios)
    rho = None
    for z in f.cert.ratios:
        img = h.mono_image(z)
        lt = img.leading_term()
        if not lt.mono.is_small():
            raise PreconditionError(
                f"composed ratio {z.render()} failed to stay infinitesimal")
        tight = _infinitesimal_bases(img.cert, lt.mono)
        ratios |= tight | set(img.cert.ratios)
        top = mono_max(tight)
        if rho is None or mono_cmp(top, rho) > 0:
            rho = top
    cert = GridCertificate(frozenset(bases), frozenset(ratios))
    zmin = min(f.cert.ratios) if f.cert.ratios else None

    def expander(cutoff):
        cut_f = None
        for b, img in base_img.items():
            mb = img.cert.grid_max()
            cap = 0
            if rho is not None:
                bound = mb
                guard = LIMITS.level_fuel
                while mono_cmp(bound, cutoff) >= 0:
                    cap += 1
                    bound = mono_mul(bound, rho)
                    guard -= 1
                    if guard < 0:
                        raise ResourceError("composition level bound exceeded fuel")
            floor = b if zmin is None else mono_mul(b, mono_pow(zmin, cap))
            if cut_f is None or mono_cmp(floor, cut_f) < 0:
                cut_f = floor
        acc: dict = {}
        for m, coeff in f.expand(cut_f).items():
            for mi, ci in h.mono_image(m).expand(cutoff).items():
                acc[mi] = acc.get(mi, 0) + coeff * ci
        return acc

    return TransSeries(cert, expander)


# -- Faà di Bruno --------------------------------------------------------------


def _compositions(total: int, parts: int):
    """Ordered tuples of `parts` positive integers summing to `total`."""
    if parts == 0:
        if total == 0:
            yield ()
        return
    for first in range(1, total - parts + 2):
        for rest in _compositions(total - first, parts - 1):
            yield (first,) + rest


def faa_di_bruno_coeff(composed_derivs: Sequence[TransSeries],
                       inner_derivs: Sequence[TransSeries],
                       k: int) -> TransSeries:
    """The order-k coefficient (f o g)^{(k)}/k! assembled combinatorially.

    `composed_derivs[n]` must be f^{(n)} o g and `inner_derivs[j]` must be
    g^{(j)} (index 0 unused), both through order k.  Equals the k-fold
    derivative of the composite divided by k!.
    """
    if k > LIMITS.faa_order_bound:
        raise ResourceError(
            f"Faà di Bruno order {k} exceeds bound {LIMITS.faa_order_bound}")
    if k == 0:
        return composed_derivs[0]
    terms = []
    for n in range(1, k + 1):
        outer = scale(composed_derivs[n], Fraction(1, factorial(n)))
        for v in _compositions(k, n):
            term = outer
            for j in v:
                term = mul(term, scale(inner_derivs[j], Fraction(1, factorial(j))))
            terms.append(term)
    return sum_family(terms)


class DerivationOperator:
    """The ambient derivation packaged for coefficientwise lifting."""

    kind = "derivation"

    def apply(self, s: TransSeries) -> TransSeries:
        return derive(s)


DERIVATION = DerivationOperator()
