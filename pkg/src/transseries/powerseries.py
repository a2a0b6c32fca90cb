"""Formal power series over the transseries field, and the cut algebras.

A PowerSeries is a lazy coefficient sequence with a declared finite degree
or a joint grid certificate (bases S, ratios Z, per-degree factors D):
supp(P_k) must lie in grid(S, Z u D-small) times a product of exactly k
elements of D.  That is the constructive shape under which the infinite
sums of evaluation, translation, and coefficientwise lifting carry finite
grid certificates.

Cuts are boundary-presented final segments of the monomial group; the
negative-cone test decides the cut ordering on mixed monomials m*X^k, and
cut membership is a certificate-level geometric-descent test on per-degree
grid maxima.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from fractions import Fraction
from math import comb
from typing import Callable, Optional, Sequence

from .errors import (BudgetExceededError, EvaluationRefusedError,
                     PreconditionError, SummabilityViolationError)
from .limits import LIMITS
from .monomial import (ONE, Monomial, mono_cmp, mono_max, mono_mul, mono_pow,
                       sort_monomials)
from .series import (ZERO, GridCertificate, TransSeries, add, mono_series,
                     mul, render_series, scale, sum_family, sum_lazy,
                     _infinitesimal_bases)


# -- joint certificates --------------------------------------------------------


@dataclass(frozen=True)
class PSJointCert:
    """supp(P_k) is inside grid(bases, ratios u small factors) times a
    product of exactly k elements of `factors`."""

    bases: frozenset
    ratios: frozenset
    factors: frozenset

    @staticmethod
    def of(bases, ratios, factors) -> "PSJointCert":
        return PSJointCert(frozenset(bases), frozenset(ratios), frozenset(factors))

    @property
    def small_factors(self) -> frozenset:
        return frozenset(d for d in self.factors if d.is_small())

    def coefficient_ratios(self) -> frozenset:
        return self.ratios | self.small_factors


class PowerSeries:
    """Lazy sequence of TransSeries coefficients."""

    def __init__(self, coeff_fn: Callable[[int], TransSeries], *,
                 finite_degree: Optional[int] = None,
                 joint: Optional[PSJointCert] = None):
        self._fn = coeff_fn
        self._memo: dict = {}
        self.finite_degree = finite_degree
        self.joint = joint

    def coeff(self, k: int) -> TransSeries:
        if k < 0:
            raise PreconditionError("negative coefficient index")
        if self.finite_degree is not None and k > self.finite_degree:
            return ZERO
        got = self._memo.get(k)
        if got is None:
            got = self._memo[k] = self._fn(k)
        return got

    def __getitem__(self, k: int) -> TransSeries:
        return self.coeff(k)

    @property
    def is_finite(self) -> bool:
        return self.finite_degree is not None

    @staticmethod
    def from_coeffs(coeffs: Sequence[TransSeries]) -> "PowerSeries":
        coeffs = list(coeffs)
        bases: set = set()
        ratios: set = set()
        for c in coeffs:
            bases |= set(c.cert.bases)
            ratios |= set(c.cert.ratios)
        joint = PSJointCert(frozenset(bases), frozenset(ratios),
                            frozenset([ONE]))
        return PowerSeries(lambda k: coeffs[k] if k < len(coeffs) else ZERO,
                           finite_degree=max(len(coeffs) - 1, 0), joint=joint)

    def render(self, order: int = 6, coeff_terms: int = 4) -> str:
        stop = order if self.finite_degree is None else min(order, self.finite_degree)
        parts = []
        for k in range(stop + 1):
            body = render_series(self.coeff(k), coeff_terms)
            if body == "0":
                continue
            if k == 0:
                parts.append(f"({body})")
            elif k == 1:
                parts.append(f"({body})*X")
            else:
                parts.append(f"({body})*X^{k}")
        out = " + ".join(parts) if parts else "0"
        if self.finite_degree is None or self.finite_degree > order:
            out += f" + O(X^{order + 1})"
        return out


def monomial_geometric(m: Monomial) -> PowerSeries:
    """The series sum_k m^k X^k (the increasing-cuts separator family)."""
    return PowerSeries(lambda k: mono_series(mono_pow(m, k)),
                       joint=PSJointCert.of([ONE], [], [m]))


# -- elementary operations ------------------------------------------------------


def ps_add(p: PowerSeries, q: PowerSeries) -> PowerSeries:
    fin = None
    if p.is_finite and q.is_finite:
        fin = max(p.finite_degree, q.finite_degree)
    joint = None
    if p.joint and q.joint:
        joint = PSJointCert(p.joint.bases | q.joint.bases,
                            p.joint.ratios | q.joint.ratios,
                            p.joint.factors | q.joint.factors)
    return PowerSeries(lambda k: add(p.coeff(k), q.coeff(k)),
                       finite_degree=fin, joint=joint)


def ps_mul(p: PowerSeries, q: PowerSeries) -> PowerSeries:
    fin = None
    if p.is_finite and q.is_finite:
        fin = p.finite_degree + q.finite_degree
    joint = None
    if p.joint and q.joint:
        joint = PSJointCert(
            frozenset(mono_mul(a, b)
                      for a in p.joint.bases for b in q.joint.bases),
            p.joint.ratios | q.joint.ratios,
            p.joint.factors | q.joint.factors)

    def cf(k):
        out = ZERO
        for i in range(k + 1):
            out = add(out, mul(p.coeff(i), q.coeff(k - i)))
        return out

    return PowerSeries(cf, finite_degree=fin, joint=joint)


def ps_derive(p: PowerSeries) -> PowerSeries:
    """P' = sum (k+1) P_{k+1} X^k; Conv(P') = Conv(P)."""
    fin = None
    if p.is_finite:
        fin = max(p.finite_degree - 1, 0)
    joint = None
    if p.joint:
        d = p.joint.factors
        bases = (frozenset(mono_mul(s, f) for s in p.joint.bases for f in d)
                 if d else frozenset())
        joint = PSJointCert(bases, p.joint.ratios, d)
    return PowerSeries(lambda k: scale(p.coeff(k + 1), k + 1),
                       finite_degree=fin, joint=joint)


def _positive_compositions(total: int, parts: int):
    if parts == 0:
        if total == 0:
            yield ()
        return
    for first in range(1, total - parts + 2):
        for rest in _positive_compositions(total - first, parts - 1):
            yield (first,) + rest


def ps_compose(p: PowerSeries, q: PowerSeries) -> PowerSeries:
    """P o Q with Q_0 = 0; coefficient k is the finite sum over ordered
    factorizations of k into positive parts."""
    q0 = q.coeff(0)
    try:
        if q0.leading_term(fuel=64) is not None:
            raise PreconditionError("ps_compose requires Q_0 = 0")
    except BudgetExceededError:
        raise PreconditionError(
            "ps_compose could not verify Q_0 = 0 within budget")

    def cf(k):
        if k == 0:
            return p.coeff(0)
        terms = []
        top = k if p.finite_degree is None else min(k, p.finite_degree)
        for n in range(1, top + 1):
            pn = p.coeff(n)
            for v in _positive_compositions(k, n):
                term = pn
                for j in v:
                    term = mul(term, q.coeff(j))
                terms.append(term)
        return sum_family(terms)

    fin = None
    if p.is_finite and q.is_finite:
        fin = p.finite_degree * max(q.finite_degree, 1)
    joint = None
    if p.joint and q.joint:
        extra_p = {d for d in p.joint.factors if not d.is_one}
        if all(d.is_small() for d in extra_p) and \
           all(mono_cmp(s, ONE) <= 0 for s in q.joint.bases):
            joint = PSJointCert(
                p.joint.bases,
                p.joint.ratios | q.joint.ratios | extra_p
                | q.joint.small_factors
                | frozenset(s for s in q.joint.bases if s.is_small()),
                q.joint.factors)
    return PowerSeries(cf, finite_degree=fin, joint=joint)


# -- cuts -----------------------------------------------------------------------


@dataclass(frozen=True)
class CutSpec:
    """A boundary-presented final segment of the monomial group."""

    variant: str                      # 'all' | 'empty' | 'above' | 'above_eq'
    boundary: Optional[Monomial] = None

    @staticmethod
    def all() -> "CutSpec":
        return CutSpec("all")

    @staticmethod
    def empty() -> "CutSpec":
        return CutSpec("empty")

    @staticmethod
    def above(b: Monomial) -> "CutSpec":
        return CutSpec("above", b)

    @staticmethod
    def above_eq(b: Monomial) -> "CutSpec":
        return CutSpec("above_eq", b)

    def describe(self) -> str:
        if self.variant == "all":
            return "all monomials"
        if self.variant == "empty":
            return "empty segment"
        rel = ">" if self.variant == "above" else ">="
        return f"monomials {rel} {self.boundary.render()}"

    def contains_mono(self, m: Monomial) -> bool:
        if self.variant == "all":
            return True
        if self.variant == "empty":
            return False
        c = mono_cmp(m, self.boundary)
        return c > 0 if self.variant == "above" else c >= 0


def _in_negative_cone(w: Monomial, j: int, s: CutSpec) -> bool:
    # w*X^j < 1 in the cut ordering: j = 0 needs w infinitesimal; j > 0
    # needs a segment witness u with w <= u^{-j}, decided at the boundary.
    if j == 0:
        return w.is_small()
    if j < 0:
        return False
    if s.variant == "all":
        return True
    if s.variant == "empty":
        return False
    c = mono_cmp(w, mono_pow(s.boundary, -j))
    return c < 0 if s.variant == "above" else c <= 0


def cut_compare(a: tuple, b: tuple, s: CutSpec) -> str:
    """Compare m*X^k against n*X^k' in the cut ordering.

    Returns 'prec', 'succ', 'eq', or 'incomparable'.
    """
    (m, k), (n, kp) = a, b
    if m is n and k == kp:
        return "eq"
    w = mono_mul(m, n.inv())
    if _in_negative_cone(w, k - kp, s):
        return "prec"
    if _in_negative_cone(w.inv(), kp - k, s):
        return "succ"
    return "incomparable"


@dataclass(frozen=True)
class CutVerdict:
    kind: str                          # 'member' | 'non_member' | 'inconclusive'
    witnesses: tuple = field(default_factory=tuple)
    checked_prefix: int = 0

    @property
    def is_member(self) -> bool:
        return self.kind == "member"


def cut_member(p: PowerSeries, s: CutSpec,
               prefix: Optional[int] = None) -> CutVerdict:
    """Certificate-level membership of P in the cut algebra of s.

    Member: every cross-degree pair of per-degree grid maxima descends in
    the cut ordering.  Non-member: verified dominant terms are pairwise
    incomparable across all scanned degrees.  Otherwise inconclusive.
    """
    prefix = LIMITS.cut_prefix if prefix is None else prefix
    if s.variant == "all":
        return CutVerdict("member", (), prefix)
    if s.variant == "empty":
        if p.is_finite:
            return CutVerdict("member", (), prefix)
        wits = _verified_dominants(p, prefix)
        if len(wits) >= 2:
            (k1, d1), (k2, d2) = wits[0], wits[1]
            return CutVerdict("non_member", ((d1, k1), (d2, k2)), prefix)
        return CutVerdict("inconclusive", (), prefix)

    maxima = []
    for k in range(prefix + 1):
        c = p.coeff(k)
        if p.is_finite and k > p.finite_degree:
            break
        gm = c.cert.grid_max()
        if gm is not None:
            maxima.append((k, gm))
    # Only pairs at degree gap >= 2 matter (any 3-element bad sequence
    # contains one), and bad pairs confined to the head are harmless: an
    # infinite bad sequence could drop those finitely many degrees.  So
    # membership holds when no bad gap->=2 pair starts in the tail half.
    head = prefix // 2
    ok = True
    for (i, mi), (j, mj) in itertools.combinations(maxima, 2):
        if j - i < 2:
            continue
        w = mono_mul(mj, mi.inv())
        if not _in_negative_cone(w, j - i, s) and i >= head:
            ok = False
            break
    if ok:
        return CutVerdict("member", tuple(maxima), prefix)

    doms = _verified_dominants(p, prefix)
    if len(doms) >= 2:
        bad_pairs = []
        all_bad = True
        for (i, di), (j, dj) in itertools.combinations(doms, 2):
            w = mono_mul(dj, di.inv())
            if _in_negative_cone(w, j - i, s):
                all_bad = False
                break
            bad_pairs.append(((di, i), (dj, j)))
        if all_bad and bad_pairs:
            return CutVerdict("non_member", tuple(bad_pairs[:2]), prefix)
    return CutVerdict("inconclusive", (), prefix)


def _verified_dominants(p: PowerSeries, prefix: int) -> list:
    out = []
    stop = prefix if p.finite_degree is None else min(prefix, p.finite_degree)
    for k in range(stop + 1):
        try:
            lt = p.coeff(k).leading_term(fuel=64)
        except BudgetExceededError:
            continue
        if lt is not None:
            out.append((k, lt.mono))
    return out


# -- convergence ----------------------------------------------------------------


@dataclass(frozen=True)
class ConvReport:
    verdict: str                       # 'certified_convergent' | 'certified_divergent' | 'inconclusive'
    witnesses: tuple = field(default_factory=tuple)
    checked_prefix: int = 0
    detail: str = ""

    @property
    def convergent(self) -> bool:
        return self.verdict == "certified_convergent"

    @property
    def divergent(self) -> bool:
        return self.verdict == "certified_divergent"


def conv_contains(p: PowerSeries, delta: TransSeries,
                  prefix: Optional[int] = None) -> ConvReport:
    """Does the coefficient family (P_k delta^k) stay summable?

    Convergence is certified through cut duality: membership of P in the
    algebra of the cut above the dominant monomial of delta.  Divergence
    needs a verified window of non-shrinking dominant terms.
    """
    prefix = LIMITS.cut_prefix if prefix is None else prefix
    try:
        lt = delta.leading_term()
    except BudgetExceededError:
        return ConvReport("inconclusive", (), 0,
                          "could not locate the dominant term of delta")
    if lt is None:
        return ConvReport("certified_convergent", (), 0, "delta = 0")
    dd = lt.mono
    if p.is_finite:
        return ConvReport("certified_convergent", (), p.finite_degree,
                          "polynomial: converges everywhere")
    verdict = cut_member(p, CutSpec.above(dd), prefix)
    if verdict.is_member:
        return ConvReport("certified_convergent", verdict.witnesses, prefix,
                          f"member of the cut algebra above {dd.render()}")

    doms = _verified_dominants(p, prefix)
    window = LIMITS.divergence_window
    run = []
    for (i, di), (j, dj) in zip(doms, doms[1:]):
        if j != i + 1:
            run = []
            continue
        ratio = mono_mul(mono_mul(dj, di.inv()), dd)
        if mono_cmp(ratio, ONE) >= 0:
            run.append((di, dj))
            if len(run) >= window:
                return ConvReport(
                    "certified_divergent", tuple(run), prefix,
                    "dominant terms of P_k delta^k stopped shrinking")
        else:
            run = []
    return ConvReport("inconclusive", (), prefix,
                      "certificate test failed and no divergence witness found")


def ps_eval(p: PowerSeries, delta: TransSeries,
            prefix: Optional[int] = None,
            report: Optional[ConvReport] = None) -> TransSeries:
    """sum_k P_k delta^k via the lazy leveled sum; refuses without a
    certified-convergent report."""
    report = conv_contains(p, delta, prefix) if report is None else report
    if not report.convergent:
        raise EvaluationRefusedError(
            f"evaluation refused: {report.verdict} ({report.detail})",
            report=report)
    lt = delta.leading_term()
    if lt is None:
        return p.coeff(0)
    if p.is_finite:
        out = p.coeff(0)
        power = None
        for k in range(1, p.finite_degree + 1):
            power = delta if power is None else mul(power, delta)
            out = add(out, mul(p.coeff(k), power))
        return out
    if p.joint is None:
        raise PreconditionError(
            "ps_eval on an infinite power series needs a joint grid certificate")
    if not p.joint.factors:
        # a product of k>0 factors from an empty alphabet is empty: the
        # joint contract forces every higher coefficient to vanish
        return p.coeff(0)
    dd = lt.mono
    joint = p.joint
    ratios = set(joint.coefficient_ratios())
    tight = _infinitesimal_bases(delta.cert, dd)
    ratios |= {mono_mul(t, dd.inv()) for t in tight if t is not dd}
    ratios |= set(delta.cert.ratios)
    for d in joint.factors:
        pair = mono_mul(d, dd)
        if pair.is_small():
            ratios.add(pair)
    ratios = {z for z in ratios if z.is_small()}

    def producer():
        power = None
        k = 0
        while True:
            if k == 0:
                yield 0, p.coeff(0)
            else:
                power = delta if power is None else mul(power, delta)
                yield k, mul(p.coeff(k), power)
            k += 1

    return sum_lazy(producer(), joint.bases, ratios)


def cut_eval(p: PowerSeries, delta: TransSeries, s: CutSpec,
             prefix: Optional[int] = None) -> TransSeries:
    """Evaluation inside a cut algebra: requires verified membership and
    delta strictly below the segment.

    When the strict-boundary algebra misses P but the boundary-inclusive
    one contains it and delta stays strictly below the boundary itself,
    evaluation is still certified (the same summability argument applies
    to the slightly larger segment).
    """
    verdict = cut_member(p, s, prefix)
    if not verdict.is_member and s.variant == "above":
        wider = cut_member(p, CutSpec.above_eq(s.boundary), prefix)
        lt0 = delta.leading_term()
        if wider.is_member and (lt0 is None or
                                mono_cmp(lt0.mono, s.boundary) < 0):
            verdict, s = wider, CutSpec.above_eq(s.boundary)
    if not verdict.is_member:
        raise PreconditionError(
            f"cut_eval requires membership; got {verdict.kind}")
    lt = delta.leading_term()
    if lt is not None:
        if s.variant == "empty":
            pass  # polynomials evaluate anywhere
        elif s.variant == "above":
            if mono_cmp(lt.mono, s.boundary) > 0:
                raise PreconditionError("delta is not below the final segment")
        elif s.variant == "above_eq":
            if mono_cmp(lt.mono, s.boundary) >= 0:
                raise PreconditionError("delta is not below the final segment")
    report = ConvReport("certified_convergent", (), prefix or 0,
                        f"cut membership: {s.describe()}")
    return ps_eval(p, delta, prefix, report=report)


def ps_translate(p: PowerSeries, eps: TransSeries,
                 prefix: Optional[int] = None) -> PowerSeries:
    """P shifted by eps: coefficient k is sum_i C(k+i,k) P_{k+i} eps^i.

    Requires certified convergence at eps; satisfies the group law
    P_{+(d+e)} = (P_{+d})_{+e} on certified arguments.
    """
    report = conv_contains(p, eps, prefix)
    if not report.convergent:
        raise PreconditionError(
            f"translation requires certified convergence at eps: {report.verdict}")

    if p.is_finite:
        def cf(k):
            out = ZERO
            power = None
            for i in range(p.finite_degree - k + 1):
                if i == 0:
                    term = p.coeff(k)
                else:
                    power = eps if power is None else mul(power, eps)
                    term = mul(p.coeff(k + i), power)
                out = add(out, scale(term, comb(k + i, k)))
            return out
        return PowerSeries(cf, finite_degree=p.finite_degree)

    if p.joint is None:
        raise PreconditionError(
            "translating an infinite power series needs a joint certificate")
    joint = p.joint
    factors = sort_monomials(joint.factors) if joint.factors else []

    def shifted_joint(k: int) -> PSJointCert:
        if not factors:
            return PSJointCert(joint.bases if k == 0 else frozenset(),
                               joint.ratios, joint.factors)
        distinct = [d for d in factors if not d.is_one]
        if len(distinct) ** min(k, 16) > 4096:
            raise PreconditionError(
                f"translation coefficient order {k} needs "
                f"{len(distinct)}^{k} shifted bases; raise ps_order_cap "
                "or reduce the order")
        bases = set()
        for combo in itertools.combinations_with_replacement(factors, k):
            shift = ONE
            for d in combo:
                shift = mono_mul(shift, d)
            bases |= {mono_mul(b, shift) for b in joint.bases}
        return PSJointCert(frozenset(bases), joint.ratios, joint.factors)

    def cf(k):
        shifted = PowerSeries(
            lambda i: scale(p.coeff(k + i), comb(k + i, k)),
            joint=shifted_joint(k))
        rep = ConvReport("certified_convergent", (), prefix or 0,
                         "inherited from the translated series")
        return ps_eval(shifted, eps, prefix, report=rep)

    lt = eps.leading_term()
    new_ratios = set(joint.ratios)
    if lt is not None:
        de = lt.mono
        tight = _infinitesimal_bases(eps.cert, de)
        new_ratios |= {mono_mul(t, de.inv()) for t in tight if t is not de}
        new_ratios |= set(eps.cert.ratios)
        for d in joint.factors:
            pair = mono_mul(d, de)
            if pair.is_small():
                new_ratios.add(pair)
    new_ratios = {z for z in new_ratios if z.is_small()}
    return PowerSeries(cf, joint=PSJointCert(joint.bases,
                                             frozenset(new_ratios),
                                             joint.factors))


# -- coefficientwise lifting ----------------------------------------------------


def pullback_cut(op, target: CutSpec) -> CutSpec:
    """The source cut whose boundary is the dominant monomial of the
    boundary image (the divisible-case computation of the preimage segment)."""
    if target.variant in ("all", "empty"):
        return target
    dom = op.image_dominant(target.boundary)
    return CutSpec(target.variant, dom)


def lift_coefficientwise(op, p: PowerSeries,
                         s_source: Optional[CutSpec] = None,
                         s_target: Optional[CutSpec] = None,
                         prefix: Optional[int] = None) -> PowerSeries:
    """Apply a strongly linear operator to every coefficient.

    `op` is a morphism handle (kind 'morphism': apply / apply_monomial /
    image_dominant) or the ambient derivation (kind 'derivation').  When a
    target cut is supplied the result's membership is checked on a prefix
    and a violation raises with its witness.
    """
    kind = getattr(op, "kind", "morphism")

    if kind == "derivation":
        from .monomial import dagger_terms
        joint = None
        if p.joint is not None:
            gens = set(p.joint.bases) | set(p.joint.ratios) | set(p.joint.factors)
            dag = set()
            for g in gens:
                dag |= {d for _, d in dagger_terms(g)}
            bases = frozenset(mono_mul(b, d)
                              for b in p.joint.bases for d in dag)
            joint = PSJointCert(bases, p.joint.ratios, p.joint.factors)
        out = PowerSeries(lambda k: op.apply(p.coeff(k)),
                          finite_degree=p.finite_degree, joint=joint)
    else:
        if s_source is not None and s_target is not None:
            expected = pullback_cut(op, s_target)
            if expected != s_source:
                raise PreconditionError(
                    "source cut must be the pullback of the target cut "
                    f"({expected.describe()})")
        joint = None
        if p.joint is not None:
            bases: set = set()
            ratios: set = set()
            for b in p.joint.bases:
                img = op.apply_monomial(b)
                bases |= set(img.cert.bases)
                ratios |= set(img.cert.ratios)
            for z in p.joint.ratios | p.joint.small_factors:
                img = op.apply_monomial(z)
                dom = img.leading_term().mono
                tight = _infinitesimal_bases(img.cert, dom)
                ratios |= set(tight) | set(img.cert.ratios)
            factors = set()
            for d in p.joint.factors:
                img = op.apply_monomial(d)
                dom = img.leading_term().mono
                factors.add(dom)
                tight = _infinitesimal_bases(img.cert, dom)
                ratios |= {mono_mul(t, dom.inv()) for t in tight if t is not dom}
                ratios |= set(img.cert.ratios)
            ratios = {z for z in ratios if z.is_small()}
            joint = PSJointCert(frozenset(bases), frozenset(ratios),
                                frozenset(factors))
        out = PowerSeries(lambda k: op.apply(p.coeff(k)),
                          finite_degree=p.finite_degree, joint=joint)

    if s_target is not None:
        verdict = cut_member(out, s_target, prefix)
        if verdict.kind == "non_member":
            raise SummabilityViolationError(
                "coefficientwise lift left the target cut algebra",
                witness=verdict.witnesses)
    return out
