"""Sparse polynomial maps between block-graded spaces, with truncated
composition, formal inversion and resonance-class projections.

A PolyMap sends a block-graded source space to a block-graded target space
and is stored as {(target coordinate, exponent tuple): coefficient} with no
constant terms, so the zero section is always preserved.  Coefficients are
either all exact rationals or all binary64; the two modes never mix.  Every
operation that can grow degree takes an explicit truncation cap.

Monomials are ordered graded-lexicographically (total degree first, then the
exponent tuple) and serialization follows that order, so equal maps always
serialize identically.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from functools import cached_property
from itertools import combinations_with_replacement
from typing import Iterable, Iterator, Mapping, Sequence

from . import linsolve
from .spectrum import (
    SUB_RESONANCE,
    HomogeneousType,
    SpectrumSpec,
    TypeClass,
    classify_type,
    degree_bound,
)

RATIONAL = "rational"
FLOAT = "float"


@dataclass(frozen=True)
class GradedDims:
    """Coordinate block sizes, fastest block first."""

    dims: tuple[int, ...]

    def __init__(self, dims: Sequence[int]) -> None:
        dims_t = tuple(int(m) for m in dims)
        if not dims_t or any(m < 1 for m in dims_t):
            raise ValueError(f"block dimensions must be positive, got {dims_t}")
        object.__setattr__(self, "dims", dims_t)

    @property
    def ell(self) -> int:
        return len(self.dims)

    @cached_property
    def total(self) -> int:
        return sum(self.dims)

    @cached_property
    def offsets(self) -> tuple[int, ...]:
        out, acc = [], 0
        for m in self.dims:
            out.append(acc)
            acc += m
        return tuple(out)

    @cached_property
    def block_of(self) -> tuple[int, ...]:
        out = []
        for i, m in enumerate(self.dims):
            out.extend([i] * m)
        return tuple(out)

    def block_slice(self, i: int) -> slice:
        return slice(self.offsets[i], self.offsets[i] + self.dims[i])

    def block_degrees(self, exponents: Sequence[int]) -> tuple[int, ...]:
        """Per-block total degrees of an exponent tuple."""
        out = []
        for i in range(self.ell):
            sl = self.block_slice(i)
            out.append(sum(exponents[sl.start : sl.stop]))
        return tuple(out)


def _check_scalar(value, mode):
    if mode == RATIONAL:
        if isinstance(value, Fraction):
            return value
        if isinstance(value, int):
            return Fraction(value)
        raise TypeError(f"rational mode got {value!r}")
    if mode == FLOAT:
        if isinstance(value, float):
            return value
        if isinstance(value, int):
            return float(value)
        raise TypeError(f"float mode got {value!r}")
    raise ValueError(f"unknown scalar mode {mode!r}")


def monomial_key(coord: int, exponents: tuple[int, ...]):
    return (sum(exponents), exponents, coord)


class PolyMap:
    """A polynomial map with no constant term between graded spaces."""

    __slots__ = ("source", "target", "cap", "mode", "coeffs")

    def __init__(
        self,
        source: GradedDims,
        target: GradedDims,
        cap: int,
        mode: str,
        coeffs: Mapping[tuple[int, tuple[int, ...]], object],
    ) -> None:
        if cap < 1:
            raise ValueError(f"degree cap must be >= 1, got {cap}")
        if mode not in (RATIONAL, FLOAT):
            raise ValueError(f"unknown scalar mode {mode!r}")
        clean = {}
        for (coord, exps), value in coeffs.items():
            exps = tuple(int(e) for e in exps)
            if len(exps) != source.total:
                raise ValueError(
                    f"exponent tuple {exps} does not match source dimension {source.total}"
                )
            if not 0 <= coord < target.total:
                raise ValueError(f"target coordinate {coord} out of range")
            deg = sum(exps)
            if deg < 1:
                raise ValueError("constant terms are not allowed")
            if deg > cap:
                raise ValueError(f"monomial degree {deg} exceeds cap {cap}")
            if any(e < 0 for e in exps):
                raise ValueError(f"negative exponent in {exps}")
            value = _check_scalar(value, mode)
            if value:
                clean[(coord, exps)] = value
        self.source = source
        self.target = target
        self.cap = cap
        self.mode = mode
        self.coeffs = clean

    # -- basics ---------------------------------------------------------

    def __eq__(self, other) -> bool:
        # The cap is bookkeeping, not part of the polynomial's identity.
        if not isinstance(other, PolyMap):
            return NotImplemented
        return (
            self.source == other.source
            and self.target == other.target
            and self.mode == other.mode
            and self.coeffs == other.coeffs
        )

    __hash__ = None  # mutable container semantics

    def __repr__(self) -> str:
        return (
            f"PolyMap({self.source.dims}->{self.target.dims}, cap={self.cap}, "
            f"mode={self.mode}, terms={len(self.coeffs)})"
        )

    def is_zero(self) -> bool:
        return not self.coeffs

    def degree(self) -> int:
        """Largest degree with a nonzero term (0 for the zero map)."""
        return max((sum(e) for _, e in self.coeffs), default=0)

    def sorted_items(self):
        return sorted(self.coeffs.items(), key=lambda kv: monomial_key(*kv[0]))

    def map_coeffs(self, fn, mode=None) -> "PolyMap":
        return PolyMap(
            self.source,
            self.target,
            self.cap,
            mode or self.mode,
            {k: fn(v) for k, v in self.coeffs.items()},
        )

    def to_float(self) -> "PolyMap":
        if self.mode == FLOAT:
            return self
        return self.map_coeffs(float, mode=FLOAT)

    def add(self, other: "PolyMap", cap: int | None = None) -> "PolyMap":
        self._check_compatible(other)
        cap = cap if cap is not None else max(self.cap, other.cap)
        out = dict(self.coeffs)
        for k, v in other.coeffs.items():
            w = out.get(k)
            out[k] = v if w is None else w + v
        out = {k: v for k, v in out.items() if sum(k[1]) <= cap}
        return PolyMap(self.source, self.target, cap, self.mode, out)

    def sub(self, other: "PolyMap", cap: int | None = None) -> "PolyMap":
        return self.add(other.scale(-1), cap=cap)

    def scale(self, factor) -> "PolyMap":
        factor = _check_scalar(factor, self.mode)
        return self.map_coeffs(lambda v: v * factor)

    def _check_compatible(self, other: "PolyMap") -> None:
        if self.mode != other.mode:
            raise ValueError(f"scalar modes differ: {self.mode} vs {other.mode}")
        if self.source != other.source or self.target != other.target:
            raise ValueError("graded shapes differ")

    def homogeneous_part(self, degree: int) -> "PolyMap":
        kept = {k: v for k, v in self.coeffs.items() if sum(k[1]) == degree}
        return PolyMap(self.source, self.target, max(degree, 1), self.mode, kept)

    def jet(self, cap: int) -> "PolyMap":
        kept = {k: v for k, v in self.coeffs.items() if sum(k[1]) <= cap}
        return PolyMap(self.source, self.target, cap, self.mode, kept)

    def max_abs(self) -> float:
        return max((abs(v) for v in self.coeffs.values()), default=0.0)

    # -- linear part ----------------------------------------------------

    def linear_matrix(self):
        """Row-major matrix of the degree-1 part."""
        zero = Fraction(0) if self.mode == RATIONAL else 0.0
        n_s, n_t = self.source.total, self.target.total
        rows = [[zero] * n_s for _ in range(n_t)]
        for (coord, exps), value in self.coeffs.items():
            if sum(exps) != 1:
                continue
            rows[coord][exps.index(1)] = value
        return rows

    # -- evaluation -----------------------------------------------------

    def evaluate(self, point: Sequence):
        """Value at a point; exact when both map and point are rational."""
        if len(point) != self.source.total:
            raise ValueError("point dimension mismatch")
        zero = Fraction(0) if self.mode == RATIONAL else 0.0
        out = [zero] * self.target.total
        for (coord, exps), value in self.sorted_items():
            term = value
            for x, e in zip(point, exps):
                if e:
                    term = term * x**e
            out[coord] = out[coord] + term
        return out

    # -- class structure ------------------------------------------------

    def type_of(self, coord: int, exps: tuple[int, ...]) -> HomogeneousType:
        if self.source.dims != self.target.dims:
            raise ValueError("homogeneous types need an endomorphism shape")
        return HomogeneousType(self.target.block_of[coord], self.source.block_degrees(exps))


def zero_map(source: GradedDims, target: GradedDims, cap: int, mode: str) -> PolyMap:
    return PolyMap(source, target, cap, mode, {})


def identity_map(dims: GradedDims, cap: int, mode: str) -> PolyMap:
    one = Fraction(1) if mode == RATIONAL else 1.0
    coeffs = {}
    for c in range(dims.total):
        exps = tuple(1 if j == c else 0 for j in range(dims.total))
        coeffs[(c, exps)] = one
    return PolyMap(dims, dims, cap, mode, coeffs)


def from_linear(matrix, source: GradedDims, target: GradedDims, cap: int, mode: str) -> PolyMap:
    coeffs = {}
    for c, row in enumerate(matrix):
        for j, value in enumerate(row):
            if value:
                exps = tuple(1 if k == j else 0 for k in range(source.total))
                coeffs[(c, exps)] = value
    return PolyMap(source, target, cap, mode, coeffs)


def monomials(n_vars: int, degree: int) -> Iterator[tuple[int, ...]]:
    """All exponent tuples of the given total degree, graded-lex order."""
    for combo in combinations_with_replacement(range(n_vars), degree):
        exps = [0] * n_vars
        for idx in combo:
            exps[idx] += 1
        yield tuple(exps)


def monomial_basis(dims: GradedDims, degree: int) -> list[tuple[int, tuple[int, ...]]]:
    """(coordinate, exponents) pairs of one homogeneous degree, sorted."""
    out = []
    for exps in monomials(dims.total, degree):
        for c in range(dims.total):
            out.append((c, exps))
    out.sort(key=lambda k: monomial_key(*k))
    return out


def class_basis(
    spec: SpectrumSpec, dims: GradedDims, degree: int, classes: Iterable[TypeClass]
) -> list[tuple[int, tuple[int, ...]]]:
    classes = frozenset(classes)
    out = []
    for c, exps in monomial_basis(dims, degree):
        t = HomogeneousType(dims.block_of[c], dims.block_degrees(exps))
        if classify_type(spec, t) in classes:
            out.append((c, exps))
    return out


# -- composition and inversion ------------------------------------------


def _poly_mul(p: dict, q: dict, cap: int) -> dict:
    out: dict = {}
    q_items = [(e, sum(e), v) for e, v in q.items()]
    for e1, v1 in p.items():
        d1 = sum(e1)
        for e2, d2, v2 in q_items:
            if d1 + d2 > cap:
                continue
            e = tuple(a + b for a, b in zip(e1, e2))
            w = out.get(e)
            out[e] = v1 * v2 if w is None else w + v1 * v2
    return {e: v for e, v in out.items() if v}


def compose(outer: PolyMap, inner: PolyMap, cap: int) -> PolyMap:
    """Truncated composition outer(inner(t)) up to total degree cap.

    Exact in rational mode: truncation only discards monomials above the cap,
    never rounds what it keeps.
    """
    if outer.mode != inner.mode:
        raise ValueError("scalar modes differ in composition")
    if outer.source.dims != inner.target.dims:
        raise ValueError("composition shape mismatch")
    components: list[dict] = [{} for _ in range(inner.target.total)]
    for (coord, exps), value in inner.coeffs.items():
        components[coord][exps] = value

    power_cache: dict[tuple[int, int], dict] = {}

    def powers(j: int, e: int) -> dict:
        key = (j, e)
        got = power_cache.get(key)
        if got is not None:
            return got
        out = components[j] if e == 1 else _poly_mul(powers(j, e - 1), components[j], cap)
        power_cache[key] = out
        return out

    acc: dict = {}
    for (coord, exps), value in outer.coeffs.items():
        if sum(exps) > cap:
            continue
        prod: dict | None = None
        for j, e in enumerate(exps):
            if not e:
                continue
            factor = powers(j, e)
            prod = factor if prod is None else _poly_mul(prod, factor, cap)
            if not prod:
                break
        if not prod:
            continue
        for e_out, v in prod.items():
            # the e=1 power shortcut can carry inner terms above the cap
            if sum(e_out) > cap:
                continue
            key = (coord, e_out)
            w = acc.get(key)
            acc[key] = value * v if w is None else w + value * v
    return PolyMap(inner.source, outer.target, cap, outer.mode, acc)


def left_linear(matrix, pmap: PolyMap, target: GradedDims | None = None) -> PolyMap:
    """Compose a linear map (as a matrix) with a PolyMap on the left."""
    target = target or pmap.target
    acc: dict = {}
    for (coord, exps), value in pmap.coeffs.items():
        for r in range(len(matrix)):
            m = matrix[r][coord]
            if m:
                key = (r, exps)
                w = acc.get(key)
                acc[key] = m * value if w is None else w + m * value
    return PolyMap(pmap.source, target, pmap.cap, pmap.mode, acc)


def invert(pmap: PolyMap, cap: int, float_tol: float = 1e-9) -> PolyMap:
    """Formal compositional inverse up to the cap.

    Degree-by-degree back substitution; the result is verified against the
    identity (exactly in rational mode) before it is returned.
    """
    if pmap.source.dims != pmap.target.dims:
        raise ValueError("can only invert maps between equally graded spaces")
    a = pmap.linear_matrix()
    try:
        a_inv = linsolve.invert(a)
    except linsolve.SingularMatrix as err:
        raise ValueError("linear part is not invertible") from err
    inv = from_linear(a_inv, pmap.target, pmap.source, cap, pmap.mode)
    higher = pmap.sub(pmap.jet(1), cap=pmap.cap)
    for degree in range(2, cap + 1):
        defect = compose(higher, inv, degree).homogeneous_part(degree)
        if defect.is_zero():
            continue
        correction = left_linear(a_inv, defect.scale(-1), target=pmap.source)
        inv = inv.add(correction, cap=cap)
    check = compose(pmap, inv, cap).sub(identity_map(pmap.source, cap, pmap.mode))
    if pmap.mode == RATIONAL:
        if not check.is_zero():
            raise AssertionError("formal inverse failed exact verification")
    elif check.max_abs() > float_tol * max(1.0, inv.max_abs()):
        raise AssertionError(
            f"formal inverse residual {check.max_abs():.3e} beyond tolerance"
        )
    return inv


# -- class projections --------------------------------------------------


def project(pmap: PolyMap, spec: SpectrumSpec, classes: Iterable[TypeClass]) -> PolyMap:
    """Keep exactly the monomials whose homogeneous type lies in `classes`."""
    classes = frozenset(classes)
    kept = {
        k: v
        for k, v in pmap.coeffs.items()
        if classify_type(spec, pmap.type_of(*k)) in classes
    }
    return PolyMap(pmap.source, pmap.target, pmap.cap, pmap.mode, kept)


def max_off_class(pmap: PolyMap, spec: SpectrumSpec, classes: Iterable[TypeClass]):
    """Largest coefficient magnitude outside the given classes."""
    classes = frozenset(classes)
    worst = 0
    for k, v in pmap.coeffs.items():
        if classify_type(spec, pmap.type_of(*k)) not in classes:
            worst = max(worst, abs(v))
    return worst


def is_in_class(pmap: PolyMap, spec: SpectrumSpec, classes: Iterable[TypeClass], tol=0) -> bool:
    return max_off_class(pmap, spec, classes) <= tol


# -- the polynomial groups ----------------------------------------------

GROUP_TAGS = {
    "sub-resonance": SUB_RESONANCE,
    "resonance": frozenset({TypeClass.RESONANCE}),
}


@dataclass(frozen=True)
class GroupElement:
    """Member of the sub-resonance (or resonance) polynomial group.

    Invariants checked at construction: every monomial lies in the tagged
    class, the linear part is invertible, and the degree stays within the
    spectrum's bound.
    """

    poly: PolyMap
    tag: str

    @property
    def dims(self) -> GradedDims:
        return self.poly.source


def make_group_element(poly: PolyMap, spec: SpectrumSpec, tag: str, tol=0) -> GroupElement:
    if tag not in GROUP_TAGS:
        raise ValueError(f"unknown group tag {tag!r}")
    if poly.source.dims != poly.target.dims:
        raise ValueError("group elements are self-maps")
    d = degree_bound(spec)
    if poly.degree() > d:
        raise ValueError(f"degree {poly.degree()} exceeds the bound {d}")
    off = max_off_class(poly, spec, GROUP_TAGS[tag])
    if off > tol:
        raise ValueError(f"off-class coefficient of size {off} under tag {tag!r}")
    try:
        linsolve.invert(poly.linear_matrix())
    except linsolve.SingularMatrix as err:
        raise ValueError("linear part not invertible") from err
    return GroupElement(poly=poly, tag=tag)


def group_inverse(g: GroupElement, spec: SpectrumSpec, tol=0, float_tol: float = 1e-9) -> GroupElement:
    """Exact group inverse: degree stays <= d and the class is preserved.

    The closure g o g^{-1} = Id is asserted on the untruncated composition
    (degree cap d*d), not truncated away.
    """
    d = degree_bound(spec)
    inv = invert(g.poly, d).jet(d)
    full = compose(g.poly, inv, d * d).sub(identity_map(g.dims, d * d, g.poly.mode))
    if g.poly.mode == RATIONAL:
        if not full.is_zero():
            raise AssertionError("group inverse is not exact at degree <= d")
    elif full.max_abs() > float_tol * max(1.0, inv.max_abs()):
        raise AssertionError(
            f"group inverse residual {full.max_abs():.3e} beyond tolerance"
        )
    return make_group_element(inv, spec, g.tag, tol=tol)


# -- serialization ------------------------------------------------------


def to_records(pmap: PolyMap) -> list[dict]:
    records = []
    for (coord, exps), value in pmap.sorted_items():
        rec = {"coord": coord, "exponents": list(exps)}
        if pmap.mode == RATIONAL:
            rec["num"] = value.numerator
            rec["den"] = value.denominator
        else:
            rec["value"] = value
        records.append(rec)
    return records


def from_records(
    records: Iterable[Mapping],
    source: GradedDims,
    target: GradedDims,
    cap: int,
    mode: str,
) -> PolyMap:
    coeffs = {}
    for rec in records:
        coord = int(rec["coord"])
        exps = tuple(int(e) for e in rec["exponents"])
        if mode == RATIONAL:
            value = Fraction(int(rec["num"]), int(rec["den"]))
        else:
            value = float(rec["value"])
        key = (coord, exps)
        if key in coeffs:
            raise ValueError(f"duplicate record for {key}")
        coeffs[key] = value
    return PolyMap(source, target, cap, mode, coeffs)
