"""Exact polynomials with nonnegative integer numerators over a power of W.

A :class:`ScaledPoly` stores the coefficients of ``x**lo .. x**hi`` as Python
integers in a numpy object array; the value it represents is that integer
polynomial divided by ``base**scale``.  Every probability after ``k`` rolls of
a die with total weight ``W`` is an integer multiple of ``W**-k``, so keeping a
shared denominator avoids rational normalisation in the convolution loop.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterable, Sequence

import numpy as np

from .predicates import FactorSieve, PredicateSpec, hit_mask

__all__ = [
    "DieSpec",
    "ScaledPoly",
    "die_pgf",
    "convolve",
    "convolve_die",
    "split_by_predicate",
    "mass",
    "location_moment",
    "format_poly_text",
    "parse_poly_text",
]


@dataclass(frozen=True)
class DieSpec:
    """Face values with positive integer weights; ``P(face v) = weight / W``."""

    faces: tuple[tuple[int, int], ...]

    def __post_init__(self):
        faces = tuple(sorted((int(v), int(w)) for v, w in self.faces))
        if not faces:
            raise ValueError("a die needs at least one face")
        values = [v for v, _ in faces]
        if len(set(values)) != len(values):
            raise ValueError(f"duplicate face values in {values}")
        if values[0] < 1:
            raise ValueError("face values must be >= 1")
        if any(w < 1 for _, w in faces):
            raise ValueError("face weights must be positive integers")
        object.__setattr__(self, "faces", faces)

    @classmethod
    def fair(cls, n: int) -> DieSpec:
        if n < 1:
            raise ValueError(f"a fair die needs n >= 1 faces, got {n}")
        return cls(tuple((i, 1) for i in range(1, n + 1)))

    @classmethod
    def parse(cls, text: str) -> DieSpec:
        """Parse ``"1:2,2:1"`` (value:weight pairs); a bare value means weight 1."""
        faces = []
        for part in text.split(","):
            part = part.strip()
            if not part:
                continue
            v, sep, w = part.partition(":")
            faces.append((int(v), int(w) if sep else 1))
        return cls(tuple(faces))

    @property
    def W(self) -> int:
        return sum(w for _, w in self.faces)

    @property
    def min_face(self) -> int:
        return self.faces[0][0]

    @property
    def max_face(self) -> int:
        return self.faces[-1][0]

    @property
    def is_fair(self) -> bool:
        return len({w for _, w in self.faces}) == 1 and all(
            v == i + 1 for i, (v, _) in enumerate(self.faces)
        )

    def probability(self, value: int) -> Fraction:
        return Fraction(dict(self.faces).get(value, 0), self.W)

    def describe(self) -> str:
        if self.is_fair:
            return f"fair-{len(self.faces)}"
        return ",".join(f"{v}:{w}" for v, w in self.faces)

    def runs(self) -> list[tuple[int, int, int]]:
        """Maximal runs ``(first_value, length, weight)`` of consecutive equal-weight faces."""
        out: list[tuple[int, int, int]] = []
        for v, w in self.faces:
            if out and out[-1][2] == w and out[-1][0] + out[-1][1] == v:
                first, length, _ = out[-1]
                out[-1] = (first, length + 1, w)
            else:
                out.append((v, 1, w))
        return out


def _as_object_array(values: Iterable[int]) -> np.ndarray:
    values = list(values)
    arr = np.empty(len(values), dtype=object)
    arr[:] = [int(c) for c in values]
    return arr


@dataclass(frozen=True, eq=False)
class ScaledPoly:
    """``(sum_j coeffs[j] * x**(lo + j)) / base**scale`` with ``coeffs[j] >= 0``."""

    lo: int
    coeffs: np.ndarray = field(repr=False)
    scale: int
    base: int

    def __post_init__(self):
        coeffs = self.coeffs
        if not (isinstance(coeffs, np.ndarray) and coeffs.dtype == object):
            coeffs = _as_object_array(coeffs)
        coeffs.setflags(write=False)
        object.__setattr__(self, "coeffs", coeffs)

    @classmethod
    def monomial(cls, exponent: int, base: int, numerator: int = 1, scale: int = 0) -> ScaledPoly:
        return cls(exponent, _as_object_array([numerator]), scale, base)

    @classmethod
    def zero(cls, base: int, scale: int = 0) -> ScaledPoly:
        return cls(0, _as_object_array([]), scale, base)

    @classmethod
    def from_terms(cls, terms: dict[int, int], base: int, scale: int) -> ScaledPoly:
        """Build from ``{exponent: numerator}``."""
        terms = {e: c for e, c in terms.items() if c}
        if not terms:
            return cls.zero(base, scale)
        lo, hi = min(terms), max(terms)
        return cls(lo, _as_object_array(terms.get(e, 0) for e in range(lo, hi + 1)), scale, base)

    @property
    def hi(self) -> int:
        return self.lo + len(self.coeffs) - 1

    @property
    def is_zero(self) -> bool:
        return not any(self.coeffs)

    def terms(self) -> list[tuple[int, int]]:
        """Nonzero ``(exponent, numerator)`` pairs in increasing exponent order."""
        return [(self.lo + j, int(c)) for j, c in enumerate(self.coeffs) if c]

    def coefficient(self, exponent: int) -> Fraction:
        j = exponent - self.lo
        if 0 <= j < len(self.coeffs):
            return Fraction(int(self.coeffs[j]), self.base**self.scale)
        return Fraction(0)

    def as_fractions(self) -> dict[int, Fraction]:
        den = self.base**self.scale
        return {e: Fraction(c, den) for e, c in self.terms()}

    def normalized(self) -> ScaledPoly:
        nz = np.flatnonzero(self.coeffs != 0)
        if len(nz) == 0:
            return ScaledPoly.zero(self.base, self.scale)
        a, b = int(nz[0]), int(nz[-1])
        if a == 0 and b == len(self.coeffs) - 1:
            return self
        return ScaledPoly(self.lo + a, self.coeffs[a : b + 1].copy(), self.scale, self.base)

    def __eq__(self, other):
        # Equality of represented polynomials, not of storage.
        if not isinstance(other, ScaledPoly):
            return NotImplemented
        return self.as_fractions() == other.as_fractions()

    def __hash__(self):
        return hash(tuple(sorted(self.as_fractions().items())))


def die_pgf(die: DieSpec) -> ScaledPoly:
    terms = dict(die.faces)
    return ScaledPoly.from_terms(terms, die.W, 1)


def _shift_add(long: np.ndarray, short: Sequence[tuple[int, int]], n_out: int) -> np.ndarray:
    out = np.zeros(n_out, dtype=object)
    n = len(long)
    for offset, c in short:
        if c == 1:
            out[offset : offset + n] += long
        else:
            out[offset : offset + n] += long * c
    return out


def convolve(a: ScaledPoly, b: ScaledPoly) -> ScaledPoly:
    """Exact product; scales add.  Both operands must share the same base."""
    if a.base != b.base:
        raise ValueError(f"cannot multiply polynomials over bases {a.base} and {b.base}")
    scale = a.scale + b.scale
    if a.is_zero or b.is_zero:
        return ScaledPoly.zero(a.base, scale)
    if len(b.coeffs) > len(a.coeffs):
        a, b = b, a
    short = [(j, int(c)) for j, c in enumerate(b.coeffs) if c]
    out = _shift_add(a.coeffs, short, len(a.coeffs) + len(b.coeffs) - 1)
    return ScaledPoly(a.lo + b.lo, out, scale, a.base).normalized()


def convolve_die(p: ScaledPoly, die: DieSpec) -> ScaledPoly:
    """``p * P(x)`` for the die's PGF, using sliding-window sums per run of equal-weight faces.

    Produces the same result as ``convolve(p, die_pgf(die))`` with roughly two
    big-integer additions per coefficient per run instead of one per face.
    """
    if p.base != die.W:
        raise ValueError(f"polynomial base {p.base} does not match die weight {die.W}")
    if p.is_zero:
        return ScaledPoly.zero(p.base, p.scale + 1)
    n = len(p.coeffs)
    lo_face, hi_face = die.min_face, die.max_face
    m = n + hi_face - lo_face
    short_faces = []
    long_runs = []
    for first, length, w in die.runs():
        if length <= 3:
            short_faces.extend((v - lo_face, w) for v in range(first, first + length))
        else:
            long_runs.append((first - lo_face, length, w))
    out = _shift_add(p.coeffs, short_faces, m)
    if long_runs:
        prefix = np.empty(n + 1, dtype=object)
        prefix[0] = 0
        np.cumsum(p.coeffs, out=prefix[1:])
        idx = np.arange(m)
        for d0, length, w in long_runs:
            # out[i] += w * (p[i-d0] + ... + p[i-d0-length+1])
            upper = np.clip(idx - d0 + 1, 0, n)
            lower = np.clip(idx - d0 - length + 1, 0, n)
            window = prefix[upper] - prefix[lower]
            out += window if w == 1 else window * w
    return ScaledPoly(p.lo + lo_face, out, p.scale + 1, p.base)


def split_by_predicate(
    p: ScaledPoly, pred: PredicateSpec, sieve: FactorSieve | None = None
) -> tuple[ScaledPoly, ScaledPoly]:
    """Return ``(hits, survivors)``: terms whose exponent satisfies ``pred`` and the rest."""
    if p.is_zero:
        return ScaledPoly.zero(p.base, p.scale), p
    mask = hit_mask(pred, p.lo, p.hi, sieve)
    hits = np.zeros(len(p.coeffs), dtype=object)
    hits[mask] = p.coeffs[mask]
    rest = p.coeffs.copy()
    rest[mask] = 0
    return (
        ScaledPoly(p.lo, hits, p.scale, p.base).normalized(),
        ScaledPoly(p.lo, rest, p.scale, p.base).normalized(),
    )


def _moment_numerator(p: ScaledPoly, r: int) -> int:
    if p.is_zero:
        return 0
    if r == 0:
        return int(p.coeffs.sum())
    n = _as_object_array(range(p.lo, p.hi + 1))
    return int((p.coeffs * n**r).sum())


def mass(p: ScaledPoly) -> Fraction:
    """Value at ``x = 1``."""
    return Fraction(_moment_numerator(p, 0), p.base**p.scale)


def location_moment(p: ScaledPoly, r: int) -> Fraction:
    """``sum_n n**r * coeff_n`` exactly."""
    if r < 0:
        raise ValueError("moment order must be nonnegative")
    return Fraction(_moment_numerator(p, r), p.base**p.scale)


def format_poly_text(polys: Iterable[tuple[int | None, ScaledPoly]], base: int) -> str:
    """Serialise polynomials as ``exponent<TAB>numerator<TAB>scale`` lines.

    ``polys`` yields ``(k, poly)`` pairs; when ``k`` is not None a ``# k=<k>``
    line precedes that polynomial's terms.
    """
    lines = [f"# W={base}"]
    for k, poly in polys:
        if k is not None:
            lines.append(f"# k={k}")
        lines.extend(f"{e}\t{c}\t{poly.scale}" for e, c in poly.terms())
    return "\n".join(lines) + "\n"


def parse_poly_text(text: str) -> tuple[int, list[tuple[int | None, dict[int, Fraction]]]]:
    """Inverse of :func:`format_poly_text`: ``(W, [(k, {exponent: coefficient})])``."""
    base = None
    groups: list[tuple[int | None, dict[int, Fraction]]] = []
    for raw in text.splitlines():
        line = raw.strip()
        if not line:
            continue
        if line.startswith("#"):
            key, _, value = line[1:].strip().partition("=")
            if key == "W":
                base = int(value)
            elif key == "k":
                groups.append((int(value), {}))
            continue
        if base is None:
            raise ValueError("polynomial text is missing its '# W=' header")
        e, num, scale = line.split("\t")
        if not groups:
            groups.append((None, {}))
        groups[-1][1][int(e)] = Fraction(int(num), base ** int(scale))
    if base is None:
        raise ValueError("polynomial text is missing its '# W=' header")
    return base, groups
