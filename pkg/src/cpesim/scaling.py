"""Mechanized scale analysis of the thin-layer reduction.

Every term of the nondimensional equations (mass, horizontal momentum,
vertical momentum) is tracked with an exact symbolic coefficient, a product
of powers of the aspect ratio eps and of the dimensionless groups. Applying
the asymptotic viscosity regime

    mu1 / Re1 = nu1,    mu_i / Re_i = eps^2 nu_i (i = 2, 3),
    lam / Re_lam = eps^2 gamma,

and the canonical normalization (the vertical momentum equation is
multiplied by eps^2) assigns each term an integer eps-order. The reduced
system keeps exactly the order-zero terms.

Coefficients are exponent vectors over a fixed symbol basis, no floating
point is involved, so kept/dropped decisions are exact.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Dict, List, Sequence, Tuple

# Display and canonical ordering of coefficient symbols.
SYMBOLS = (
    "eps",
    "Ma",
    "Fr",
    "Re1",
    "Re2",
    "Re3",
    "Re_lam",
    "mu1",
    "mu2",
    "mu3",
    "lam",
    "nu1",
    "nu2",
    "nu3",
    "gamma",
)

EQUATIONS = ("mass", "horizontal-momentum", "vertical-momentum")

_RELATIVE_TOL = 1e-12


@dataclass(frozen=True)
class Coefficient:
    """Exact product  factor * prod(sym^power)  over the symbol basis."""

    factor: int = 1
    powers: Tuple[Tuple[str, int], ...] = ()

    def __post_init__(self):
        seen = set()
        for sym, p in self.powers:
            if sym not in SYMBOLS:
                raise ValueError(f"unknown symbol {sym!r}")
            if sym in seen:
                raise ValueError(f"repeated symbol {sym!r}")
            seen.add(sym)
        # fixed display order regardless of construction order
        canon = tuple(
            sorted(
                ((s, p) for s, p in self.powers if p != 0),
                key=lambda sp: SYMBOLS.index(sp[0]),
            )
        )
        object.__setattr__(self, "powers", canon)

    def power(self, sym: str) -> int:
        for s, p in self.powers:
            if s == sym:
                return p
        return 0

    def times(self, sym: str, p: int) -> "Coefficient":
        d = dict(self.powers)
        d[sym] = d.get(sym, 0) + p
        return Coefficient(self.factor, tuple(d.items()))

    def __str__(self) -> str:
        parts = []
        for sym, p in self.powers:
            parts.append(sym if p == 1 else f"{sym}^{p}")
        if self.factor != 1 or not parts:
            parts.insert(0, str(self.factor))
        return "*".join(parts)


@dataclass(frozen=True)
class TermScale:
    """One term of one nondimensional equation with its exact coefficient."""

    equation: str
    term_id: str
    coefficient: Coefficient
    eps_order: int

    def __post_init__(self):
        if self.equation not in EQUATIONS:
            raise ValueError(f"unknown equation {self.equation!r}")

    @property
    def key(self) -> str:
        return f"{self.equation}.{self.term_id}"


@dataclass(frozen=True)
class ScaleSet:
    """Reference scales of the flow; consistency is enforced exactly.

    The advective time T = L/U and the thin-layer relation between the
    aspect ratio H/L and the velocity ratio V/U must both hold to 1e-12
    relative.
    """

    U: float
    L: float
    H: float
    T: float
    V: float
    rho: float
    mu1: float
    mu2: float
    mu3: float
    lam: float
    g: float
    c: float

    def __post_init__(self):
        for name in ("U", "L", "H", "T", "V", "rho", "mu1", "mu2", "mu3", "lam", "g", "c"):
            v = getattr(self, name)
            if not (v > 0.0 and math.isfinite(v)):
                raise ValueError(f"scale {name} must be positive and finite, got {v!r}")
        if abs(self.T - self.L / self.U) > _RELATIVE_TOL * abs(self.T):
            raise ValueError("time scale must satisfy T = L/U")
        if abs(self.H / self.L - self.V / self.U) > _RELATIVE_TOL * abs(self.H / self.L):
            raise ValueError("aspect ratio must satisfy H/L = V/U")

    @property
    def eps(self) -> float:
        return self.H / self.L


@dataclass(frozen=True)
class DimensionlessNumbers:
    """Froude, Mach, Reynolds groups and the aspect ratio."""

    Fr: float
    Ma: float
    Re1: float
    Re2: float
    Re3: float
    Re_lam: float
    eps: float

    def __post_init__(self):
        for name in ("Fr", "Ma", "Re1", "Re2", "Re3", "Re_lam", "eps"):
            v = getattr(self, name)
            if not (v > 0.0 and math.isfinite(v)):
                raise ValueError(f"{name} must be positive and finite, got {v!r}")


def dimensionless_numbers(s: ScaleSet) -> DimensionlessNumbers:
    """Evaluate the dimensionless groups from the reference scales."""
    return DimensionlessNumbers(
        Fr=s.U / math.sqrt(s.g * s.H),
        Ma=s.U / s.c,
        Re1=s.rho * s.U * s.L / s.mu1,
        Re2=s.rho * s.U * s.L / s.mu2,
        Re3=s.rho * s.U * s.L / s.mu3,
        Re_lam=s.rho * s.U * s.L / s.lam,
        eps=s.H / s.L,
    )


def _c(factor: int = 1, **powers: int) -> Coefficient:
    return Coefficient(factor, tuple(powers.items()))


# The three nondimensional equations, term by term, with the coefficients
# they carry before any regime substitution. The vertical momentum terms are
# listed as displayed, before the canonical eps^2 normalization.
_RAW_TERMS: Tuple[Tuple[str, str, Coefficient], ...] = (
    ("mass", "time-derivative", _c()),
    ("mass", "horizontal-transport", _c()),
    ("mass", "vertical-transport", _c()),
    ("horizontal-momentum", "time-derivative", _c()),
    ("horizontal-momentum", "horizontal-advection", _c()),
    ("horizontal-momentum", "vertical-advection", _c()),
    ("horizontal-momentum", "pressure-gradient", _c(Ma=-2)),
    ("horizontal-momentum", "strain-viscosity", _c(Re1=-1, mu1=1)),
    ("horizontal-momentum", "vertical-shear-viscosity", _c(eps=-2, Re2=-1, mu2=1)),
    ("horizontal-momentum", "vertical-velocity-gradient", _c(Re2=-1, mu2=1)),
    ("horizontal-momentum", "dilatation-gradient", _c(Re_lam=-1, lam=1)),
    ("horizontal-momentum", "vertical-compression-gradient", _c(Re_lam=-1, lam=1)),
    ("vertical-momentum", "time-derivative", _c()),
    ("vertical-momentum", "horizontal-advection", _c()),
    ("vertical-momentum", "vertical-advection", _c()),
    ("vertical-momentum", "pressure-gradient", _c(eps=-2, Ma=-2)),
    ("vertical-momentum", "gravity", _c(eps=-2, Fr=-2)),
    ("vertical-momentum", "shear-divergence", _c(eps=-2, Re3=-1, mu3=1)),
    ("vertical-momentum", "horizontal-gradient-viscosity", _c(Re3=-1, mu3=1)),
    ("vertical-momentum", "vertical-compression-viscosity", _c(2, eps=-2, Re3=-1, mu3=1)),
    ("vertical-momentum", "dilatation-gradient", _c(eps=-2, Re_lam=-1, lam=1)),
    ("vertical-momentum", "vertical-compression-gradient", _c(eps=-2, Re_lam=-1, lam=1)),
)

# (viscosity symbol, Reynolds symbol, replacement, extra eps power)
_REGIME = (
    ("mu1", "Re1", "nu1", 0),
    ("mu2", "Re2", "nu2", 2),
    ("mu3", "Re3", "nu3", 2),
    ("lam", "Re_lam", "gamma", 2),
)


def _apply_regime(coeff: Coefficient) -> Coefficient:
    d = dict(coeff.powers)
    for visc, rey, repl, extra in _REGIME:
        if d.get(visc, 0) == 1 and d.get(rey, 0) == -1:
            del d[visc]
            del d[rey]
            d[repl] = d.get(repl, 0) + 1
            d["eps"] = d.get("eps", 0) + extra
    return Coefficient(coeff.factor, tuple(d.items()))


def scale_terms(d: DimensionlessNumbers, apply_regime: bool) -> List[TermScale]:
    """Enumerate every term of the scaled equations with its eps-order.

    The vertical momentum equation is normalized by eps^2 in both modes;
    `apply_regime` controls only the viscosity substitution. Without it the
    horizontal vertical-shear term keeps its raw eps^-2 coefficient, which
    is how an un-normalized system is recognized downstream.

    The numbers `d` fix the modeling context (they are validated, the
    bookkeeping itself is exact and symbolic).
    """
    if not isinstance(d, DimensionlessNumbers):
        raise TypeError("scale_terms expects DimensionlessNumbers")
    out = []
    for equation, term_id, coeff in _RAW_TERMS:
        if equation == "vertical-momentum":
            coeff = coeff.times("eps", 2)
        if apply_regime:
            coeff = _apply_regime(coeff)
        out.append(TermScale(equation, term_id, coeff, coeff.power("eps")))
    return out


def reduce_system(terms: Sequence[TermScale]) -> List[str]:
    """Keep the eps-order-zero terms of a fully scaled system.

    Returns the kept terms as "equation.term-id" strings in input order.
    Refuses empty input, input that does not cover all three equations,
    and systems containing negative eps-orders (the signature of a term
    list built without the asymptotic regime).
    """
    if not terms:
        raise ValueError("no terms to reduce")
    covered = {t.equation for t in terms}
    missing = [e for e in EQUATIONS if e not in covered]
    if missing:
        raise ValueError(f"term list does not cover equations: {', '.join(missing)}")
    negative = [t for t in terms if t.eps_order < 0]
    if negative:
        worst = min(negative, key=lambda t: t.eps_order)
        raise ValueError(
            f"term {worst.key} has eps-order {worst.eps_order}; "
            "the asymptotic regime was not applied"
        )
    return [t.key for t in terms if t.eps_order == 0]


def audit_table(terms: Sequence[TermScale]) -> str:
    """Fixed-width table of the term bookkeeping for the CLI audit."""
    rows = [("equation", "term", "coefficient", "eps-order", "status")]
    for t in terms:
        rows.append(
            (
                t.equation,
                t.term_id,
                str(t.coefficient),
                str(t.eps_order),
                "kept" if t.eps_order == 0 else "dropped",
            )
        )
    widths = [max(len(r[i]) for r in rows) for i in range(5)]
    lines = []
    for i, r in enumerate(rows):
        lines.append("  ".join(c.ljust(widths[j]) for j, c in enumerate(r)).rstrip())
        if i == 0:
            lines.append("  ".join("-" * w for w in widths))
    return "\n".join(lines)
