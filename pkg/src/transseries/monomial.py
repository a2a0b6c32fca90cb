"""The log-exp monomial group.

A monomial is  prod_k l_k^{r_k} * exp(L)  where l_0 = x, l_{k+1} = log l_k,
the r_k are exact rationals, and L (the exp argument) is a *finite* purely
large sum of coefficient/monomial pairs.  Finiteness of L is what makes the
group order decidable: comparison reduces to the sign of the leading term
of the pre-logarithm difference, a finite computation grounded by falling
exponential height.

Canonical form: exp arguments never contain a bare atom l_j with j >= 1
(such a term c*l_j is absorbed as l_{j-1}^c into the log-power part), so
structural identity coincides with equality in the group.  Instances are
interned; equality is identity.
"""

from __future__ import annotations

from fractions import Fraction
from functools import cmp_to_key, lru_cache
from typing import Iterable, Mapping

from .errors import ResourceError
from .limits import LIMITS

Rat = Fraction

_INTERN: dict = {}


class Monomial:
    __slots__ = ("log_powers", "exp_terms", "_height", "_log_depth",
                 "_dagger", "_hash")

    log_powers: tuple  # ((atom_index, Fraction exponent), ...) ascending index
    exp_terms: tuple   # ((Fraction coeff, Monomial), ...) decreasing, all > 1

    def __init__(self, log_powers, exp_terms):
        # not for direct use: go through make_monomial for canonical instances
        self.log_powers = log_powers
        self.exp_terms = exp_terms
        self._height = None
        self._log_depth = None
        self._dagger = None
        self._hash = hash((log_powers, exp_terms))

    def __hash__(self):
        return self._hash

    # interning makes identity the equality; inherit object.__eq__

    def __repr__(self):
        return f"Monomial({self.render()})"

    # -- ordering ---------------------------------------------------------

    def __lt__(self, other):
        return mono_cmp(self, other) < 0

    def __le__(self, other):
        return mono_cmp(self, other) <= 0

    def __gt__(self, other):
        return mono_cmp(self, other) > 0

    def __ge__(self, other):
        return mono_cmp(self, other) >= 0

    # -- group operations -------------------------------------------------

    def __mul__(self, other: "Monomial") -> "Monomial":
        return mono_mul(self, other)

    def __truediv__(self, other: "Monomial") -> "Monomial":
        return mono_mul(self, mono_inv(other))

    def __pow__(self, r) -> "Monomial":
        return mono_pow(self, r)

    def inv(self) -> "Monomial":
        return mono_inv(self)

    # -- structure --------------------------------------------------------

    @property
    def is_one(self) -> bool:
        return not self.log_powers and not self.exp_terms

    def atom_index(self):
        """Index j if this is the bare atom l_j, else None."""
        if not self.exp_terms and len(self.log_powers) == 1:
            k, r = self.log_powers[0]
            if r == 1:
                return k
        return None

    @property
    def height(self) -> int:
        if self._height is None:
            if not self.exp_terms:
                self._height = 0
            else:
                self._height = 1 + max(u.height for _, u in self.exp_terms)
        return self._height

    @property
    def log_depth(self) -> int:
        if self._log_depth is None:
            d = max((k for k, _ in self.log_powers), default=0)
            for _, u in self.exp_terms:
                d = max(d, u.log_depth)
            self._log_depth = d
        return self._log_depth

    def is_large(self) -> bool:
        """m > 1 in the group order."""
        return mono_cmp(self, ONE) > 0

    def is_small(self) -> bool:
        """m < 1 (infinitesimal)."""
        return mono_cmp(self, ONE) < 0

    # -- rendering --------------------------------------------------------

    def render(self) -> str:
        if self.is_one:
            return "1"
        parts = []
        for k, r in self.log_powers:
            parts.append(_atom_name(k) + _power_suffix(r))
        if self.exp_terms:
            parts.append("exp(" + format_term_sum(self.exp_terms) + ")")
        return "*".join(parts)


def _atom_name(k: int) -> str:
    return "log(" * k + "x" + ")" * k


def _power_suffix(r: Rat) -> str:
    if r == 1:
        return ""
    if r.denominator == 1:
        return f"^{r.numerator}"
    return f"^({r})"


def format_term_sum(terms: Iterable[tuple]) -> str:
    """Render ((coeff, monomial), ...) as `a*m1 + b*m2 - ...` (parseable)."""
    out = []
    for coeff, mono in terms:
        neg = coeff < 0
        mag = -coeff if neg else coeff
        if mono.is_one:
            body = _coeff_str(mag)
        elif mag == 1:
            body = mono.render()
        else:
            body = f"{_coeff_str(mag)}*{mono.render()}"
        if not out:
            out.append(f"-{body}" if neg else body)
        else:
            out.append(f"- {body}" if neg else f"+ {body}")
    return " ".join(out) if out else "0"


def _coeff_str(c) -> str:
    if isinstance(c, Fraction):
        return str(c)
    if isinstance(c, float):
        return f"{c:.12g}"
    return str(c)


# -- construction ----------------------------------------------------------


def make_monomial(log_powers: Mapping[int, Rat] | Iterable,
                  exp_terms: Iterable = ()) -> Monomial:
    """Build the canonical, interned monomial with the given data.

    `log_powers` maps atom index to rational exponent; `exp_terms` is any
    iterable of (coeff, Monomial) pairs with every monomial > 1.  Bare-atom
    exp components are absorbed, zero entries dropped, terms merged.
    """
    powers: dict = {}
    items = log_powers.items() if isinstance(log_powers, Mapping) else log_powers
    for k, r in items:
        r = Fraction(r)
        if r:
            powers[k] = powers.get(k, Fraction(0)) + r

    merged: dict = {}
    for c, u in exp_terms:
        c = Fraction(c)
        if c:
            merged[u] = merged.get(u, Fraction(0)) + c

    cleaned = []
    for u, c in merged.items():
        if not c:
            continue
        j = u.atom_index()
        if j is not None and j >= 1:
            powers[j - 1] = powers.get(j - 1, Fraction(0)) + c
        else:
            cleaned.append((c, u))

    powers = {k: r for k, r in powers.items() if r}
    lp = tuple(sorted(powers.items()))
    et = tuple(sorted(cleaned, key=lambda t: _SORT_KEY(t[1]), reverse=True))

    key = (lp, et)
    hit = _INTERN.get(key)
    if hit is not None:
        return hit
    for c, u in et:
        if not u.is_large():
            raise ValueError(f"exp argument term {u.render()} is not purely large")
    m = Monomial(lp, et)
    if m.height > LIMITS.height_bound:
        raise ResourceError(
            f"monomial height {m.height} exceeds bound {LIMITS.height_bound}")
    if m.log_depth > LIMITS.log_depth_bound:
        raise ResourceError(
            f"log depth {m.log_depth} exceeds bound {LIMITS.log_depth_bound}")
    _INTERN[key] = m
    return m


def _SORT_KEY(m: Monomial):
    return cmp_to_key(mono_cmp)(m)


ONE = make_monomial({})
X = make_monomial({0: 1})


def atom(k: int) -> Monomial:
    """The k-th iterated-log atom: atom(0) = x, atom(k) = log^k(x)."""
    return make_monomial({k: 1})


# -- group laws ------------------------------------------------------------


def mono_mul(a: Monomial, b: Monomial) -> Monomial:
    powers = dict(a.log_powers)
    for k, r in b.log_powers:
        powers[k] = powers.get(k, Fraction(0)) + r
    return make_monomial(powers, list(a.exp_terms) + list(b.exp_terms))


def mono_inv(a: Monomial) -> Monomial:
    return make_monomial({k: -r for k, r in a.log_powers},
                         [(-c, u) for c, u in a.exp_terms])


def mono_pow(a: Monomial, r) -> Monomial:
    r = Fraction(r)
    if not r:
        return ONE
    return make_monomial({k: p * r for k, p in a.log_powers},
                         [(c * r, u) for c, u in a.exp_terms])


# -- the group order -------------------------------------------------------


@lru_cache(maxsize=None)
def mono_cmp(a: Monomial, b: Monomial) -> int:
    """Total order on monomials: sign of ell(a) - ell(b).

    ell is the pre-logarithm; the difference is a finite series whose
    dominant coefficient decides.  Recursion on strictly smaller
    exponential height, with a lexicographic fast path at height zero.
    """
    if a is b:
        return 0
    if not a.exp_terms and not b.exp_terms:
        da, db = dict(a.log_powers), dict(b.log_powers)
        for k in sorted(set(da) | set(db)):
            ra, rb = da.get(k, 0), db.get(k, 0)
            if ra != rb:
                return 1 if ra > rb else -1
        return 0
    diff: dict = {}
    for k, r in a.log_powers:
        key = atom(k + 1)
        diff[key] = diff.get(key, Fraction(0)) + r
    for k, r in b.log_powers:
        key = atom(k + 1)
        diff[key] = diff.get(key, Fraction(0)) - r
    for c, u in a.exp_terms:
        diff[u] = diff.get(u, Fraction(0)) + c
    for c, u in b.exp_terms:
        diff[u] = diff.get(u, Fraction(0)) - c
    diff = {m: c for m, c in diff.items() if c}
    if not diff:
        return 0
    dom = max(diff, key=cmp_to_key(mono_cmp))
    return 1 if diff[dom] > 0 else -1


def mono_max(monos: Iterable[Monomial]) -> Monomial:
    return max(monos, key=cmp_to_key(mono_cmp))


def mono_min(monos: Iterable[Monomial]) -> Monomial:
    return min(monos, key=cmp_to_key(mono_cmp))


def sort_monomials(monos: Iterable[Monomial], reverse: bool = True) -> list:
    return sorted(monos, key=cmp_to_key(mono_cmp), reverse=reverse)


# -- pre-logarithm and logarithmic derivative ------------------------------


def pre_log_terms(m: Monomial) -> list:
    """ell(m) as a finite list of (coeff, monomial) terms."""
    terms = [(r, atom(k + 1)) for k, r in m.log_powers]
    terms.extend(m.exp_terms)
    return terms


def dagger_terms(m: Monomial) -> tuple:
    """m-dagger = m'/m = (ell m)' as a finite merged term tuple.

    Atom rule: dagger(l_k) = (l_0 l_1 ... l_k)^{-1}; exp arguments
    differentiate termwise via u' = u * dagger(u).
    """
    if m._dagger is None:
        acc: dict = {}
        for k, r in m.log_powers:
            d = make_monomial({i: -1 for i in range(k + 1)})
            acc[d] = acc.get(d, Fraction(0)) + r
        for c, u in m.exp_terms:
            for dc, dm in dagger_terms(u):
                key = mono_mul(u, dm)
                acc[key] = acc.get(key, Fraction(0)) + c * dc
        m._dagger = tuple((c, mo) for mo, c in acc.items() if c)
    return m._dagger


def deriv_terms(m: Monomial) -> list:
    """m' = m * dagger(m) as a finite term list."""
    return [(c, mono_mul(m, d)) for c, d in dagger_terms(m)]


def height_depth(m: Monomial) -> tuple:
    """(exponential height, max iterated-log index used)."""
    return (m.height, m.log_depth)


def pre_log(m: Monomial):
    """ell(m) as a TransSeries (purely large or zero)."""
    from .series import from_terms
    return from_terms(pre_log_terms(m))
