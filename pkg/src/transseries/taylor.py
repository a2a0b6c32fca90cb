"""Taylor deformation of strongly linear operators and its theorems.

The deformation of an operator T at a displacement delta sends f to
sum_k T(f^(k))/k! * delta^k.  Its domain is certified monomial by
monomial: f is accepted when delta lies strictly below T(x) and
T(dagger(m)) * delta is infinitesimal across f's certificate generators.
Outside that locus the engine either certifies divergence with a support
witness (the sharpness remark made executable) or stays inconclusive.

The identity, log-commutation, and chain-rule checks compare both sides
of the corresponding theorems to a stated positional depth, exactly.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional

from .calculus import (CompositionHandle, compose, dagger,
                       dagger_support_closure, derive, log_series)
from .errors import (BudgetExceededError, DomainError, PartialConstantError,
                     PreconditionError)
from .limits import LIMITS
from .monomial import (ONE, X, Monomial, dagger_terms, deriv_terms, mono_cmp,
                       mono_inv, mono_mul)
from .powerseries import (ConvReport, PowerSeries, PSJointCert,
                          lift_coefficientwise, ps_eval)
from .series import (TransSeries, add, compare_to_depth, from_terms,
                     mono_series, mul, scale)

X_INV = mono_inv(X)
X_SERIES = mono_series(X)


class OperatorHandle:
    """A strongly linear ordered-ring morphism: the identity or right
    composition with a fixed positive infinite series."""

    kind = "morphism"

    def __init__(self, variant: str, handle: Optional[CompositionHandle] = None):
        if variant not in ("identity", "right_compose"):
            raise PreconditionError(f"unknown operator variant {variant!r}")
        self.variant = variant
        self.handle = handle

    @staticmethod
    def identity() -> "OperatorHandle":
        return OperatorHandle("identity")

    @staticmethod
    def right_compose(g) -> "OperatorHandle":
        if not isinstance(g, CompositionHandle):
            g = CompositionHandle(g)
        return OperatorHandle("right_compose", g)

    @property
    def is_identity(self) -> bool:
        return self.variant == "identity"

    def apply(self, s: TransSeries) -> TransSeries:
        if self.is_identity:
            return s
        return compose(s, self.handle)

    def apply_monomial(self, m: Monomial) -> TransSeries:
        if self.is_identity:
            return mono_series(m)
        return self.handle.mono_image(m)

    def image_dominant(self, m: Monomial) -> Monomial:
        if self.is_identity:
            return m
        return self.handle.image_dominant(m)

    def image_of_x(self) -> TransSeries:
        return X_SERIES if self.is_identity else self.handle.g

    def describe(self) -> str:
        if self.is_identity:
            return "identity"
        return f"composition with {self.handle.g.render(3)}"


@dataclass
class LocusSpec:
    """An operator together with the displacement to deform by."""

    op: OperatorHandle
    delta: TransSeries


def is_flat(m: Monomial) -> bool:
    """Flat means dagger(m) stays at or below x^{-1}."""
    lt = dagger(m).leading_term()
    return lt is None or mono_cmp(lt.mono, X_INV) <= 0


def spec_condition_check(m: Monomial, prefix: Optional[int] = None) -> dict:
    """The derivative-support dichotomy at a single monomial.

    Flat monomials must have every derivative-support dagger at or below
    x^{-1}; non-flat ones must keep the dagger's archimedean class.
    """
    prefix = LIMITS.support_prefix if prefix is None else prefix
    if m is ONE:
        raise PreconditionError("the dichotomy concerns monomials != 1")
    dlt = dagger(m).leading_term()
    flat = dlt is None or mono_cmp(dlt.mono, X_INV) <= 0
    mprime = from_terms(deriv_terms(m))
    supp = [t.mono for t in mprime.terms_above(_grid_floor(mprime))][:prefix]
    for n in supp:
        nlt = dagger(n).leading_term()
        if flat:
            ok = nlt is None or mono_cmp(nlt.mono, X_INV) <= 0
        else:
            ok = nlt is not None and nlt.mono is dlt.mono
        if not ok:
            return {"ok": False, "flat": flat, "witness": n,
                    "checked": len(supp)}
    return {"ok": True, "flat": flat, "witness": None, "checked": len(supp)}


def _grid_floor(s: TransSeries) -> Monomial:
    # finite series: a cutoff at (below) the smallest support monomial
    d = s.expand(min(s.cert.bases)) if s.cert.bases else {}
    if not d:
        return ONE
    return min(d)


def locus_contains(spec: LocusSpec, f: TransSeries,
                   prefix: Optional[int] = None) -> ConvReport:
    """Decide membership of f in the deformation domain.

    Convergent: delta below the operator image of x and every certificate
    generator's transformed dagger shrinks below 1 after multiplying by
    delta.  Divergent: a verified non-flat support monomial violating the
    bound.  Inconclusive otherwise.
    """
    prefix = LIMITS.support_prefix if prefix is None else prefix
    op, delta = spec.op, spec.delta
    lt_d = delta.leading_term()
    if lt_d is None:
        return ConvReport("certified_convergent", (), 0,
                          "delta = 0: the deformation degenerates to the operator")
    dd = lt_d.mono
    dom_x = op.image_of_x().leading_term().mono
    delta_below_x = mono_cmp(dd, dom_x) < 0

    gens = set(f.cert.bases) | set(f.cert.ratios)
    witnesses = []
    gens_ok = True
    for g in sorted(gens, key=lambda m: m.render()):
        terms = dagger_terms(g)
        if not terms:
            continue
        img = op.apply(dagger(g))
        lt = img.leading_term()
        if lt is None:
            continue
        check = mono_mul(lt.mono, dd)
        ok = check.is_small()
        witnesses.append((g, check, ok))
        gens_ok = gens_ok and ok
    if delta_below_x and gens_ok:
        return ConvReport("certified_convergent", tuple(witnesses), prefix,
                          "generator daggers shrink below 1 under the operator")

    # look for a sharpness witness in the actual support
    try:
        cutoff, _ = _support_prefix_cutoff(f, prefix)
        supp = [m for m in f.expand(cutoff)] if cutoff is not None else []
    except BudgetExceededError:
        supp = []
    for m in supp:
        if m is ONE or is_flat(m):
            continue
        if not delta_below_x:
            return ConvReport(
                "certified_divergent", ((m, dd),), prefix,
                f"delta is not below the operator image of x and {m.render()} "
                "is not flat")
        lt = op.apply(dagger(m)).leading_term()
        if lt is not None and not mono_mul(lt.mono, dd).is_small():
            return ConvReport(
                "certified_divergent", ((m, mono_mul(lt.mono, dd)),), prefix,
                f"support monomial {m.render()} has a non-shrinking "
                "transformed dagger")
    return ConvReport("inconclusive", tuple(witnesses), prefix,
                      "generator check failed but no support witness was found")


def _support_prefix_cutoff(f: TransSeries, prefix: int):
    from .series import depth_cutoff
    return depth_cutoff(f, prefix)


def taylor_series(f: TransSeries, spec: Optional[LocusSpec] = None, *,
                  check: bool = True) -> PowerSeries:
    """The Taylor morphism f -> sum f^(k)/k! X^k with its joint certificate.

    The per-degree factor alphabet is the dagger-support closure of f's
    certificate generators: the k-th derivative multiplies the support by
    exactly k such factors.
    """
    if check:
        if spec is None:
            raise PreconditionError("taylor_series needs a locus to certify")
        rep = locus_contains(spec, f)
        if not rep.convergent:
            raise PreconditionError(
                f"Taylor series refused: locus is {rep.verdict} ({rep.detail})")
    gens = set(f.cert.bases) | set(f.cert.ratios)
    factors = dagger_support_closure(gens)
    joint = PSJointCert(frozenset(f.cert.bases), frozenset(f.cert.ratios),
                        factors)
    derivs = [f]

    def cf(k):
        while len(derivs) <= k:
            derivs.append(derive(derivs[-1]))
        return scale(derivs[k], _inv_factorial(k))

    # no dagger factors means f is a constant: the series stops at X^0
    fin = 0 if not factors else None
    return PowerSeries(cf, joint=joint, finite_degree=fin)


def _inv_factorial(k: int):
    from fractions import Fraction
    from math import factorial
    return Fraction(1, factorial(k))


def taylor_deform(f: TransSeries, spec: LocusSpec, *,
                  verify_descent: bool = True) -> TransSeries:
    """T_delta of the operator applied to f, as the three-step pipeline:
    Taylor morphism, coefficientwise operator image, evaluation at delta."""
    rep = locus_contains(spec, f)
    if not rep.convergent:
        raise PreconditionError(
            f"Taylor deformation refused: locus is {rep.verdict} ({rep.detail})")
    if spec.delta.leading_term() is None:
        return spec.op.apply(f)
    t = taylor_series(f, spec, check=False)
    lifted = lift_coefficientwise(spec.op, t)
    ev_report = ConvReport("certified_convergent", rep.witnesses,
                           rep.checked_prefix, "locus-certified")
    out = ps_eval(lifted, spec.delta, report=ev_report)
    if verify_descent:
        _check_descent(lifted, spec.delta, orders=3)
    return out


def _check_descent(lifted: PowerSeries, delta: TransSeries, orders: int):
    # computed terms must satisfy T(f) > T(f') delta > T(f'') delta^2 ...
    prev = None
    power = None
    for k in range(orders):
        term = lifted.coeff(k)
        if k > 0:
            power = delta if power is None else mul(power, delta)
            term = mul(term, power)
        lt = term.leading_term(fuel=64)
        if lt is None:
            return
        if prev is not None and mono_cmp(lt.mono, prev) >= 0:
            raise DomainError(
                "descent chain violated: the certified locus should force "
                f"strictly falling terms, got {lt.mono.render()} at order {k}")
        prev = lt.mono


@dataclass
class IdentityReport:
    status: str                      # 'EQUAL' | 'UNEQUAL' | 'SKIPPED'
    detail: str = ""
    lhs: Optional[TransSeries] = None
    rhs: Optional[TransSeries] = None
    discrepancy: tuple = field(default_factory=tuple)
    conv_report: Optional[ConvReport] = None

    @property
    def equal(self) -> bool:
        return self.status == "EQUAL"


def taylor_identity_check(f: TransSeries, g: TransSeries, delta: TransSeries,
                          depth: int = 8) -> IdentityReport:
    """Does composing at g + delta equal the deformation of composition
    at g?  Skips (never fails) when the locus is not certified."""
    handle = CompositionHandle(g)
    spec = LocusSpec(OperatorHandle.right_compose(handle), delta)
    rep = locus_contains(spec, f)
    if not rep.convergent:
        return IdentityReport("SKIPPED",
                              f"locus {rep.verdict}: {rep.detail}",
                              conv_report=rep)
    lhs = compose(f, add(g, delta))
    rhs = taylor_deform(f, spec)
    equal, cutoff, bad = compare_to_depth(lhs, rhs, depth)
    if equal:
        return IdentityReport("EQUAL", f"agrees through depth {depth}",
                              lhs, rhs, conv_report=rep)
    t = bad[0]
    return IdentityReport(
        "UNEQUAL",
        f"first discrepancy {t.coeff} * {t.mono.render()}",
        lhs, rhs, tuple(bad), rep)


def analytic_commutation_check(f: TransSeries, spec: LocusSpec,
                               depth: int = 6) -> IdentityReport:
    """Deformation commutes with log on certified positive arguments."""
    lt = f.leading_term()
    if lt is None or not lt.coeff > 0:
        raise PreconditionError("log commutation needs a positive series")
    try:
        logf = log_series(f)
        lhs = taylor_deform(logf, spec)
        rhs = log_series(taylor_deform(f, spec))
    except (PartialConstantError, PreconditionError) as e:
        return IdentityReport("SKIPPED", str(e))
    equal, cutoff, bad = compare_to_depth(lhs, rhs, depth)
    if equal:
        return IdentityReport("EQUAL", f"agrees through depth {depth}", lhs, rhs)
    t = bad[0]
    return IdentityReport("UNEQUAL",
                          f"first discrepancy {t.coeff} * {t.mono.render()}",
                          lhs, rhs, tuple(bad))


def chain_rule_transport_check(f: TransSeries, spec: LocusSpec,
                               depth: int = 6) -> IdentityReport:
    """d(T(f)) = d(T(x)) * T(f') on the certified locus."""
    try:
        lhs = derive(taylor_deform(f, spec))
        rhs = mul(derive(taylor_deform(X_SERIES, spec)),
                  taylor_deform(derive(f), spec))
    except (PartialConstantError, PreconditionError) as e:
        return IdentityReport("SKIPPED", str(e))
    equal, cutoff, bad = compare_to_depth(lhs, rhs, depth)
    if equal:
        return IdentityReport("EQUAL", f"agrees through depth {depth}", lhs, rhs)
    t = bad[0]
    return IdentityReport("UNEQUAL",
                          f"first discrepancy {t.coeff} * {t.mono.render()}",
                          lhs, rhs, tuple(bad))
