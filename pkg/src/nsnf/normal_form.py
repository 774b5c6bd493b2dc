"""Inductive construction of sub-resonance Taylor conjugacies and their
further reduction to resonance normal forms.

Degree by degree, the conjugacy defect against the fiber maps is projected
to the quotient by the sub-resonance subspace and killed by a fixed point of
a contracting conjugation operator; on a finite base the fixed point is a
per-cycle linear solve.  The sub-resonance component of each Taylor term is
a free lift: zero by default, caller-pinned, or a seeded random section.
The same cycle-solve machinery, run with the backward-contracting operator,
strips strict sub-resonance terms from the normal form afterwards.
"""

from __future__ import annotations

import random
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Mapping, Sequence

from . import linsolve
from .base import Extension, FiniteBase, ValidationReport, validate_extension
from .polymap import (
    FLOAT,
    RATIONAL,
    SUB_RESONANCE,
    GradedDims,
    GroupElement,
    PolyMap,
    class_basis,
    compose,
    from_linear,
    identity_map,
    left_linear,
    make_group_element,
    monomial_key,
    project,
    zero_map,
)
from .spectrum import (
    HomogeneousType,
    SpectrumSpec,
    TypeClass,
    classify_type,
    degree_bound,
    phi_contraction_bound,
    spectral_constants,
)


class BuildRefused(ValueError):
    """Validation failed and no force flag was given."""


class BuildError(RuntimeError):
    """Internal consistency failure; certified preconditions were violated."""


# -- lift strategies ----------------------------------------------------


@dataclass(frozen=True)
class LiftStrategy:
    """Choice of the free sub-resonance component of each Taylor term.

    kind 'complement' pins every section to zero, 'pinned' reads sections
    from a caller-supplied table, 'seeded' adds deterministic random offsets
    (drawn from `seed`) on top of optional base sections.
    """

    kind: str = "complement"
    sections: Mapping[tuple[int, int], PolyMap] = field(default_factory=dict)
    seed: int | None = None
    amplitude: Fraction = Fraction(1, 8)


def complement_lift() -> LiftStrategy:
    return LiftStrategy(kind="complement")


def pinned_lift(sections: Mapping[tuple[int, int], PolyMap]) -> LiftStrategy:
    return LiftStrategy(kind="pinned", sections=dict(sections))


def seeded_lift(
    seed: int,
    base_sections: Mapping[tuple[int, int], PolyMap] | None = None,
    amplitude: Fraction = Fraction(1, 8),
) -> LiftStrategy:
    return LiftStrategy(
        kind="seeded", sections=dict(base_sections or {}), seed=seed, amplitude=amplitude
    )


class _SectionSource:
    """Resolves the lift section for each (point, degree) deterministically.

    Seeded draws consume the generator in a fixed order over degrees,
    points and basis monomials, so one seed always yields one build.
    """

    def __init__(self, strategy, spec, dims, mode, p, d, classes=SUB_RESONANCE):
        self.strategy = strategy
        self.spec = spec
        self.dims = dims
        self.mode = mode
        self.classes = classes
        self.offsets: dict[tuple[int, int], PolyMap] = {}
        if strategy.kind == "seeded":
            if strategy.seed is None:
                raise ValueError("seeded lift needs a seed")
            rng = random.Random(strategy.seed)
            for degree in range(2, d + 1):
                basis = class_basis(spec, dims, degree, classes)
                for x in range(p):
                    coeffs = {}
                    for key in basis:
                        num = rng.randint(-8, 8)
                        value = Fraction(num, 8) * strategy.amplitude
                        if value:
                            coeffs[key] = value if mode == RATIONAL else float(value)
                    if coeffs:
                        self.offsets[(x, degree)] = PolyMap(dims, dims, degree, mode, coeffs)
        elif strategy.kind not in ("complement", "pinned"):
            raise ValueError(f"unknown lift kind {strategy.kind!r}")

    def section(self, x: int, degree: int) -> PolyMap:
        out = zero_map(self.dims, self.dims, degree, self.mode)
        pinned = self.strategy.sections.get((x, degree))
        if pinned is not None:
            self._check(pinned, degree)
            out = out.add(pinned)
        offset = self.offsets.get((x, degree))
        if offset is not None:
            out = out.add(offset)
        return out

    def _check(self, section: PolyMap, degree: int) -> None:
        if section.mode != self.mode:
            raise ValueError("lift section scalar mode mismatch")
        if section.source.dims != self.dims.dims:
            raise ValueError("lift section grading mismatch")
        for (c, exps) in section.coeffs:
            if sum(exps) != degree:
                raise ValueError(f"lift section for degree {degree} is not homogeneous")
            t = HomogeneousType(self.dims.block_of[c], self.dims.block_degrees(exps))
            if classify_type(self.spec, t) not in self.classes:
                raise ValueError("lift section leaves its resonance class")


# -- cycle solves -------------------------------------------------------


def _solve_cycle(mats, rhs, one, pull: bool):
    """Fixed point of h_j = A_j h_{j+1} + b_j (pull) or h_{j+1} = A_j h_j + b_j
    (push) around one cycle; indices mod the cycle length."""
    q = len(mats)
    n = len(rhs[0])
    if n == 0:
        return [[] for _ in range(q)]
    zero = one * 0
    ident = linsolve.identity(n, one)
    if pull:
        prefix = ident
        c = [zero] * n
        for j in range(q):
            pb = linsolve.mat_vec(prefix, rhs[j])
            c = [u + v for u, v in zip(c, pb)]
            prefix = linsolve.mat_mul(prefix, mats[j])
        m = prefix
    else:
        m = ident
        c = [zero] * n
        for j in range(q):
            c = [u + v for u, v in zip(linsolve.mat_vec(mats[j], c), rhs[j])]
            m = linsolve.mat_mul(mats[j], m)
    i_minus_m = [
        [(one if i == j else zero) - m[i][j] for j in range(n)] for i in range(n)
    ]
    h0 = linsolve.solve(i_minus_m, c)
    out = [None] * q
    out[0] = h0
    if pull:
        for j in range(q - 1, 0, -1):
            nxt = out[(j + 1) % q]
            out[j] = [
                u + v for u, v in zip(linsolve.mat_vec(mats[j], nxt), rhs[j])
            ]
    else:
        for j in range(q - 1):
            out[j + 1] = [
                u + v for u, v in zip(linsolve.mat_vec(mats[j], out[j]), rhs[j])
            ]
    return out


def _coords(poly: PolyMap, keys, index):
    zero = Fraction(0) if poly.mode == RATIONAL else 0.0
    vec = [zero] * len(keys)
    for key, value in poly.coeffs.items():
        pos = index.get(key)
        if pos is not None:
            vec[pos] = value
    return vec


def _poly_from_coords(dims, degree, keys, vec, mode) -> PolyMap:
    coeffs = {k: v for k, v in zip(keys, vec) if v}
    return PolyMap(dims, dims, degree, mode, coeffs)


# -- the Taylor build ---------------------------------------------------


@dataclass
class NormalFormResult:
    """Per-point Taylor conjugacy H_x (degree N, unit linear part) and the
    sub-resonance polynomial normal form P_x it conjugates the fibers to."""

    ext: Extension
    spec: SpectrumSpec
    n_taylor: int
    alpha: Fraction
    h_taylor: tuple[PolyMap, ...]
    p_normal: tuple[GroupElement, ...]
    lift_kind: str
    lift_seed: int | None
    lift_sections: dict[tuple[int, int], PolyMap]
    certified_exponents: dict[int, Fraction]
    certified: bool
    validation: ValidationReport

    def p_poly(self, x: int) -> PolyMap:
        return self.p_normal[x].poly

    def sub_res_jets(self) -> dict[tuple[int, int], PolyMap]:
        """Sub-resonance components of the Taylor terms, keyed (point, degree).

        Pinning these into a fresh build reproduces this result exactly.
        """
        d = degree_bound(self.spec)
        out = {}
        for x, h in enumerate(self.h_taylor):
            for degree in range(2, d + 1):
                part = project(h.homogeneous_part(degree), self.spec, SUB_RESONANCE)
                if not part.is_zero():
                    out[(x, degree)] = part
        return out

    def to_float(self) -> "NormalFormResult":
        if self.ext.mode == FLOAT:
            return self
        return NormalFormResult(
            ext=self.ext.to_float(),
            spec=self.spec,
            n_taylor=self.n_taylor,
            alpha=self.alpha,
            h_taylor=tuple(h.to_float() for h in self.h_taylor),
            p_normal=tuple(
                GroupElement(poly=g.poly.to_float(), tag=g.tag) for g in self.p_normal
            ),
            lift_kind=self.lift_kind,
            lift_seed=self.lift_seed,
            lift_sections={k: v.to_float() for k, v in self.lift_sections.items()},
            certified_exponents=dict(self.certified_exponents),
            certified=self.certified,
            validation=self.validation,
        )


def _linear_data(ext: Extension):
    mats, invs, lin_polys, inv_polys = [], [], [], []
    for pm in ext.fibers:
        m = pm.linear_matrix()
        try:
            m_inv = linsolve.invert(m)
        except linsolve.SingularMatrix as err:
            raise BuildError("fiber linear part is singular") from err
        mats.append(m)
        invs.append(m_inv)
        lin_polys.append(from_linear(m, ext.dims, ext.dims, 1, ext.mode))
        inv_polys.append(from_linear(m_inv, ext.dims, ext.dims, 1, ext.mode))
    return mats, invs, lin_polys, inv_polys


def _all_block_diagonal(mats, dims: GradedDims) -> bool:
    for m in mats:
        for r in range(dims.total):
            for c in range(dims.total):
                if dims.block_of[r] != dims.block_of[c] and m[r][c]:
                    return False
    return True


def _grouped_basis(spec, dims, degree, classes, diagonal):
    """Solve-basis keys split into invariant groups.

    With block-diagonal linear parts the conjugation operator preserves each
    (target block, block-degree vector) subspace, so the cycle solves factor
    into small independent blocks.  Otherwise everything is one group.
    """
    keys = class_basis(spec, dims, degree, classes)
    if not diagonal:
        return [keys] if keys else []
    groups: dict[tuple, list] = {}
    for c, exps in keys:
        label = (dims.block_of[c], dims.block_degrees(exps))
        groups.setdefault(label, []).append((c, exps))
    return [groups[label] for label in sorted(groups)]


def _certified_exponent(spec, dims, degree, classes, direction) -> Fraction | None:
    keys = class_basis(spec, dims, degree, classes)
    worst = None
    for c, exps in keys:
        t = HomogeneousType(dims.block_of[c], dims.block_degrees(exps))
        bound = phi_contraction_bound(spec, t, direction)
        if worst is None or bound > worst:
            worst = bound
    return worst


def build_taylor(
    ext: Extension,
    spec: SpectrumSpec,
    n_taylor: int,
    alpha,
    lift: LiftStrategy | None = None,
    force: bool = False,
    float_tol: float = 1e-9,
) -> NormalFormResult:
    """Solve the conjugacy degree by degree up to the Taylor degree N.

    Refuses to run when validation fails, unless `force` is set, in which
    case the result carries certified=False.  All class and vanishing
    assertions are exact in rational mode.
    """
    lift = lift or complement_lift()
    alpha = Fraction(alpha)
    validation = validate_extension(ext, spec, n_taylor, alpha)
    if not validation.passed and not force:
        names = ", ".join(c.name for c in validation.failures())
        raise BuildRefused(f"validation failed ({names}); pass force to override")

    constants = validation.constants
    d = constants.d
    if n_taylor < d:
        raise BuildRefused(f"Taylor degree {n_taylor} is below the degree bound {d}")

    dims, mode, base, p = ext.dims, ext.mode, ext.base, ext.base.p
    mats, invs, lin_polys, inv_polys = _linear_data(ext)
    diagonal = _all_block_diagonal(mats, dims)
    one = Fraction(1) if mode == RATIONAL else 1.0

    h = [identity_map(dims, n_taylor, mode) for _ in range(p)]
    p_poly = [lin_polys[x].jet(d) for x in range(p)]
    sections = _SectionSource(lift, spec, dims, mode, p, d)
    used_sections: dict[tuple[int, int], PolyMap] = {}
    certified_exponents: dict[int, Fraction] = {}

    for degree in range(2, n_taylor + 1):
        rn = []
        for x in range(p):
            fx = base.image(x)
            lhs = compose(h[fx], ext.fiber(x), degree).homogeneous_part(degree)
            rhs = compose(p_poly[x], h[x], degree).homogeneous_part(degree)
            rn.append(lhs.sub(rhs))

        groups = _grouped_basis(spec, dims, degree, {TypeClass.NON_SUB}, diagonal)
        cert = _certified_exponent(spec, dims, degree, {TypeClass.NON_SUB}, "forward")
        if cert is not None:
            certified_exponents[degree] = cert
            if validation.passed and not cert < 0:
                raise BuildError(
                    f"certified exponent {cert} at degree {degree} is not negative"
                )

        hbar = [zero_map(dims, dims, degree, mode) for _ in range(p)]
        for keys in groups:
            index = {k: i for i, k in enumerate(keys)}
            a_mats, b_vecs = [], []
            for x in range(p):
                cols = []
                for c, exps in keys:
                    mono = PolyMap(dims, dims, degree, mode, {(c, exps): one})
                    img = left_linear(invs[x], compose(mono, lin_polys[x], degree))
                    col = _coords(img, keys, index)
                    if diagonal:
                        leaked = [
                            k
                            for k in img.coeffs
                            if k not in index
                            and classify_type(spec, img.type_of(*k)) is TypeClass.NON_SUB
                        ]
                        if leaked:
                            raise BuildError("conjugation left its type block")
                    cols.append(col)
                a_mats.append([[cols[j][i] for j in range(len(keys))] for i in range(len(keys))])
                q_poly = left_linear(invs[x], rn[x])
                b_vecs.append(_coords(q_poly, keys, index))
            for cycle in base.cycles:
                cycle_mats = [a_mats[x] for x in cycle]
                cycle_rhs = [b_vecs[x] for x in cycle]
                try:
                    sols = _solve_cycle(cycle_mats, cycle_rhs, one, pull=True)
                except linsolve.SingularMatrix as err:
                    raise BuildError(
                        f"singular cycle solve at degree {degree}, cycle {cycle}"
                    ) from err
                for x, vec in zip(cycle, sols):
                    hbar[x] = hbar[x].add(_poly_from_coords(dims, degree, keys, vec, mode))

        hn = []
        for x in range(p):
            section = sections.section(x, degree)
            if degree > d and not section.is_zero():
                raise BuildError(f"lift section offered above the degree bound at {degree}")
            if not section.is_zero():
                used_sections[(x, degree)] = section
            hn.append(hbar[x].add(section))

        for x in range(p):
            fx = base.image(x)
            pn = (
                rn[x]
                .add(compose(hn[fx], lin_polys[x], degree))
                .sub(left_linear(mats[x], hn[x]))
            )
            scale = max(1.0, pn.max_abs() if mode == FLOAT else 1.0)
            if degree > d:
                if mode == RATIONAL:
                    if not pn.is_zero():
                        raise BuildError(f"normal form has a degree-{degree} term")
                elif pn.max_abs() > float_tol * scale:
                    raise BuildError(
                        f"normal form degree-{degree} residue {pn.max_abs():.3e}"
                    )
            else:
                off = project(pn, spec, {TypeClass.NON_SUB})
                if mode == RATIONAL:
                    if not off.is_zero():
                        raise BuildError(
                            f"non-sub-resonance residue in the normal form at degree {degree}"
                        )
                    p_poly[x] = p_poly[x].add(pn)
                else:
                    if off.max_abs() > float_tol * scale:
                        raise BuildError(
                            f"non-sub-resonance residue {off.max_abs():.3e} at degree {degree}"
                        )
                    # numerical dust below tolerance is dropped after the assert
                    p_poly[x] = p_poly[x].add(project(pn, spec, SUB_RESONANCE))
            h[x] = h[x].add(hn[x], cap=n_taylor)

    for x in range(p):
        fx = base.image(x)
        lhs = compose(h[fx], ext.fiber(x), n_taylor)
        rhs = compose(p_poly[x], h[x], n_taylor)
        diff = lhs.sub(rhs)
        if mode == RATIONAL:
            if not diff.is_zero():
                raise BuildError("jet conjugacy identity failed")
        elif diff.max_abs() > float_tol * max(1.0, lhs.max_abs()):
            raise BuildError(f"jet conjugacy residual {diff.max_abs():.3e}")

    tol = 0 if mode == RATIONAL else float_tol
    p_group = tuple(make_group_element(pm, spec, "sub-resonance", tol=tol) for pm in p_poly)
    return NormalFormResult(
        ext=ext,
        spec=spec,
        n_taylor=n_taylor,
        alpha=alpha,
        h_taylor=tuple(h),
        p_normal=p_group,
        lift_kind=lift.kind,
        lift_seed=lift.seed,
        lift_sections=used_sections,
        certified_exponents=certified_exponents,
        certified=validation.passed,
        validation=validation,
    )


def perturb_lift(
    nf: NormalFormResult, seed: int, amplitude: Fraction = Fraction(1, 8)
) -> NormalFormResult:
    """Re-run the build with seeded random sub-resonance offsets added to the
    sections this result used.  Amplitude zero reproduces the input."""
    if amplitude == 0:
        return build_taylor(
            nf.ext,
            nf.spec,
            nf.n_taylor,
            nf.alpha,
            lift=pinned_lift(nf.sub_res_jets()),
            force=not nf.certified,
        )
    strategy = seeded_lift(seed, base_sections=nf.sub_res_jets(), amplitude=amplitude)
    return build_taylor(
        nf.ext, nf.spec, nf.n_taylor, nf.alpha, lift=strategy, force=not nf.certified
    )


# -- resonance reduction ------------------------------------------------


@dataclass
class ResonanceResult:
    """Sub-resonance change H'_x taking the normal form to resonance form."""

    spec: SpectrumSpec
    base: FiniteBase
    h_prime: tuple[GroupElement, ...]
    p_res: tuple[GroupElement, ...]
    lift_kind: str
    lift_seed: int | None
    lift_sections: dict[tuple[int, int], PolyMap]
    certified_exponents: dict[int, Fraction]


def _block_diag_part(matrix, dims: GradedDims):
    out = [list(row) for row in matrix]
    zero = matrix[0][0] * 0
    for r in range(dims.total):
        for c in range(dims.total):
            if dims.block_of[r] != dims.block_of[c]:
                out[r][c] = zero
    return out


def reduce_family(
    base: FiniteBase,
    spec: SpectrumSpec,
    p_elems: Sequence[GroupElement],
    lift: LiftStrategy | None = None,
    float_tol: float = 1e-9,
) -> ResonanceResult:
    """Conjugate a sub-resonance family to pure resonance form.

    Handles flag-triangular linear parts: the block-diagonal part becomes
    the resonance linear term and the strict part is absorbed into H'.
    The resonance component of each degree >= 2 term of H' is the free
    lift; the linear term of H' is normalized to identity plus a strict
    part.
    """
    lift = lift or complement_lift()
    if len(p_elems) != base.p:
        raise ValueError("one group element per base point required")
    dims = p_elems[0].dims
    mode = p_elems[0].poly.mode
    d = degree_bound(spec)
    one = Fraction(1) if mode == RATIONAL else 1.0
    res_only = frozenset({TypeClass.RESONANCE})

    a_mats = [g.poly.linear_matrix() for g in p_elems]
    d_mats = [_block_diag_part(m, dims) for m in a_mats]
    u_is_zero = all(
        m[r][c] == dm[r][c]
        for m, dm in zip(a_mats, d_mats)
        for r in range(dims.total)
        for c in range(dims.total)
    )
    try:
        a_invs = [linsolve.invert(m) for m in a_mats]
    except linsolve.SingularMatrix as err:
        raise BuildError("normal form linear part is singular") from err
    a_polys = [from_linear(m, dims, dims, 1, mode) for m in a_mats]
    a_inv_polys = [from_linear(m, dims, dims, 1, mode) for m in a_invs]

    sections = _SectionSource(lift, spec, dims, mode, base.p, d, classes=res_only)
    used_sections: dict[tuple[int, int], PolyMap] = {}
    certified_exponents: dict[int, Fraction] = {}

    # Degree 1: strip the strict flag-triangular part of the linear term.
    ss1 = class_basis(spec, dims, 1, {TypeClass.STRICT_SUB})
    h1 = [zero_map(dims, dims, 1, mode) for _ in range(base.p)]
    if ss1 and not u_is_zero:
        cert = _certified_exponent(spec, dims, 1, {TypeClass.STRICT_SUB}, "backward")
        certified_exponents[1] = cert
        index = {k: i for i, k in enumerate(ss1)}
        l_mats, b_vecs = [], []
        for x in range(base.p):
            cols = []
            for c, exps in ss1:
                mono = PolyMap(dims, dims, 1, mode, {(c, exps): one})
                img = left_linear(d_mats[x], compose(mono, a_inv_polys[x], 1))
                _assert_stays_strict(img, spec, mode, float_tol)
                cols.append(_coords(img, ss1, index))
            l_mats.append([[cols[j][i] for j in range(len(ss1))] for i in range(len(ss1))])
            u_poly = from_linear(
                [
                    [a - b for a, b in zip(ra, rb)]
                    for ra, rb in zip(a_mats[x], d_mats[x])
                ],
                dims,
                dims,
                1,
                mode,
            )
            b_poly = compose(u_poly.scale(-1), a_inv_polys[x], 1)
            b_vecs.append(_coords(b_poly, ss1, index))
        for cycle in base.cycles:
            try:
                sols = _solve_cycle(
                    [l_mats[x] for x in cycle], [b_vecs[x] for x in cycle], one, pull=False
                )
            except linsolve.SingularMatrix as err:
                raise BuildError(f"singular reduction solve at degree 1, cycle {cycle}") from err
            for x, vec in zip(cycle, sols):
                h1[x] = _poly_from_coords(dims, 1, ss1, vec, mode)

    h_prime = [identity_map(dims, d, mode).add(h1[x]) for x in range(base.p)]
    p_res = [from_linear(d_mats[x], dims, dims, 1, mode).jet(1) for x in range(base.p)]
    g1_polys = [h_prime[x].jet(1) for x in range(base.p)]
    g1_inv_polys = []
    for x in range(base.p):
        try:
            g1_inv_polys.append(from_linear(linsolve.invert(g1_polys[x].linear_matrix()), dims, dims, 1, mode))
        except linsolve.SingularMatrix as err:
            raise BuildError("degree-1 change of coordinates is singular") from err

    for degree in range(2, d + 1):
        ss = class_basis(spec, dims, degree, {TypeClass.STRICT_SUB})
        cert = _certified_exponent(spec, dims, degree, {TypeClass.STRICT_SUB}, "backward")
        if cert is not None:
            certified_exponents[degree] = cert

        k_parts, deltas = [], []
        for x in range(base.p):
            fx = base.image(x)
            lhs = compose(h_prime[fx], p_elems[x].poly, degree).homogeneous_part(degree)
            rhs = compose(p_res[x], h_prime[x], degree).homogeneous_part(degree)
            k = lhs.sub(rhs)
            _assert_sub_res(k, spec, mode, float_tol, where=f"defect at degree {degree}")
            k_parts.append(k)
            delta = sections.section(x, degree)
            if not delta.is_zero():
                used_sections[(x, degree)] = delta
            deltas.append(delta)

        h_n = [zero_map(dims, dims, degree, mode) for _ in range(base.p)]
        if ss:
            index = {k: i for i, k in enumerate(ss)}
            l_mats, b_vecs = [], []
            for x in range(base.p):
                fx = base.image(x)
                cols = []
                for c, exps in ss:
                    mono = PolyMap(dims, dims, degree, mode, {(c, exps): one})
                    img = left_linear(d_mats[x], compose(mono, a_inv_polys[x], degree))
                    _assert_stays_strict(img, spec, mode, float_tol)
                    cols.append(_coords(img, ss, index))
                l_mats.append([[cols[j][i] for j in range(len(ss))] for i in range(len(ss))])
                # Known inhomogeneity: strict part of the defect plus the
                # lift's interaction with the triangular linear term, minus
                # the correction aligning the resonance complement with the
                # degree-1 change of coordinates.
                w_known = k_parts[x].add(compose(deltas[fx], a_polys[x], degree)).sub(
                    left_linear(d_mats[x], deltas[x])
                )
                rho = project(w_known, spec, res_only)
                correction = compose(rho, g1_polys[x], degree).sub(rho)
                c_poly = (
                    correction.sub(project(w_known, spec, {TypeClass.STRICT_SUB}))
                )
                b_poly = compose(c_poly, a_inv_polys[x], degree)
                b_vecs.append(_coords(b_poly, ss, index))
            for cycle in base.cycles:
                try:
                    sols = _solve_cycle(
                        [l_mats[x] for x in cycle], [b_vecs[x] for x in cycle], one, pull=False
                    )
                except linsolve.SingularMatrix as err:
                    raise BuildError(
                        f"singular reduction solve at degree {degree}, cycle {cycle}"
                    ) from err
                for x, vec in zip(cycle, sols):
                    h_n[x] = _poly_from_coords(dims, degree, ss, vec, mode)

        for x in range(base.p):
            h_prime[x] = h_prime[x].add(deltas[x]).add(h_n[x])
        for x in range(base.p):
            fx = base.image(x)
            hn_full = deltas[fx].add(h_n[fx])
            v = k_parts[x].add(compose(hn_full, a_polys[x], degree)).sub(
                left_linear(d_mats[x], deltas[x].add(h_n[x]))
            )
            p_n = compose(v, g1_inv_polys[x], degree)
            off = project(p_n, spec, {TypeClass.STRICT_SUB, TypeClass.NON_SUB})
            if mode == RATIONAL:
                if not off.is_zero():
                    raise BuildError(f"resonance form keeps a strict term at degree {degree}")
                p_res[x] = p_res[x].add(p_n, cap=d)
            else:
                if off.max_abs() > float_tol * max(1.0, p_n.max_abs()):
                    raise BuildError(
                        f"strict residue {off.max_abs():.3e} in resonance form at degree {degree}"
                    )
                p_res[x] = p_res[x].add(project(p_n, spec, res_only), cap=d)

    for x in range(base.p):
        fx = base.image(x)
        lhs = compose(h_prime[fx], p_elems[x].poly, d * d)
        rhs = compose(p_res[x], h_prime[x], d * d)
        diff = lhs.sub(rhs)
        if mode == RATIONAL:
            if not diff.is_zero():
                raise BuildError("resonance conjugacy identity failed")
        elif diff.max_abs() > float_tol * max(1.0, lhs.max_abs()):
            raise BuildError(f"resonance conjugacy residual {diff.max_abs():.3e}")

    tol = 0 if mode == RATIONAL else float_tol
    return ResonanceResult(
        spec=spec,
        base=base,
        h_prime=tuple(
            make_group_element(pm.jet(d), spec, "sub-resonance", tol=tol) for pm in h_prime
        ),
        p_res=tuple(
            make_group_element(pm.jet(d), spec, "resonance", tol=tol) for pm in p_res
        ),
        lift_kind=lift.kind,
        lift_seed=lift.seed,
        lift_sections=used_sections,
        certified_exponents=certified_exponents,
    )


def resonance_reduce(nf: NormalFormResult, lift: LiftStrategy | None = None) -> ResonanceResult:
    return reduce_family(nf.ext.base, nf.spec, nf.p_normal, lift=lift)


def _assert_sub_res(poly, spec, mode, float_tol, where=""):
    off = project(poly, spec, {TypeClass.NON_SUB})
    if mode == RATIONAL:
        if not off.is_zero():
            raise BuildError(f"unexpected non-sub-resonance terms: {where}")
    elif off.max_abs() > float_tol * max(1.0, poly.max_abs()):
        raise BuildError(f"unexpected non-sub-resonance residue {off.max_abs():.3e}: {where}")


def _assert_stays_strict(poly, spec, mode, float_tol):
    off = project(poly, spec, {TypeClass.RESONANCE, TypeClass.NON_SUB})
    if mode == RATIONAL:
        if not off.is_zero():
            raise BuildError("backward conjugation left the strict subspace")
    elif off.max_abs() > float_tol * max(1.0, poly.max_abs()):
        raise BuildError("backward conjugation left the strict subspace")
