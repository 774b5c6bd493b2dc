"""Structural checks on build results: uniqueness of the coordinate
change up to sub-resonance (resp. resonance) transitions, centralizer
membership of commuting extensions, flag preservation, and the single-block
linearization specialization."""

from __future__ import annotations

import random
from dataclasses import dataclass
from fractions import Fraction

from .base import Extension
from .evaluator import EvalConfig, Evaluator
from .normal_form import NormalFormResult, ResonanceResult, build_taylor, pinned_lift
from .polymap import (
    RATIONAL,
    SUB_RESONANCE,
    PolyMap,
    compose,
    invert,
    max_off_class,
)
from .spectrum import TypeClass, criticality, degree_bound


class VerifyError(RuntimeError):
    """A verification precondition failed; carries the stage that rejected."""

    def __init__(self, stage: str, message: str):
        super().__init__(f"[{stage}] {message}")
        self.stage = stage


@dataclass
class TransitionWitness:
    """Per-point transition (or centralizer) jets with class verdicts."""

    tag: str
    maps: tuple[PolyMap, ...]
    off_class: tuple[float, ...]
    ok: bool
    stage: str = "class"
    detail: str = ""


_CLASSES = {
    "sub-resonance": SUB_RESONANCE,
    "resonance": frozenset({TypeClass.RESONANCE}),
}


def _same_instance(a: Extension, b: Extension) -> bool:
    return (
        a.base == b.base
        and a.dims == b.dims
        and a.fibers == b.fibers
        and a.mode == b.mode
    )


def _witness(maps, spec, tag, float_tol) -> TransitionWitness:
    mode = maps[0].mode
    classes = _CLASSES[tag]
    offs, oks = [], []
    for g in maps:
        off = max_off_class(g, spec, classes)
        off = float(off) if off else 0.0
        limit = 0.0 if mode == RATIONAL else float_tol * max(1.0, g.max_abs())
        offs.append(off)
        oks.append(off <= limit)
    return TransitionWitness(
        tag=tag,
        maps=tuple(maps),
        off_class=tuple(offs),
        ok=all(oks),
    )


def transition_jets(nf_a: NormalFormResult, nf_b: NormalFormResult) -> tuple[PolyMap, ...]:
    """Degree-d jets of H_a_x composed with the inverse of H_b_x."""
    d = degree_bound(nf_a.spec)
    out = []
    for h_a, h_b in zip(nf_a.h_taylor, nf_b.h_taylor):
        out.append(compose(h_a, invert(h_b, d), d))
    return tuple(out)


def check_uniqueness(
    nf_a: NormalFormResult, nf_b: NormalFormResult, float_tol: float = 1e-9
) -> TransitionWitness:
    """Two builds of one instance differ by a sub-resonance transition family."""
    if not _same_instance(nf_a.ext, nf_b.ext) or nf_a.spec != nf_b.spec:
        raise VerifyError("inputs", "builds come from different instances")
    return _witness(transition_jets(nf_a, nf_b), nf_a.spec, "sub-resonance", float_tol)


def full_changes(nf: NormalFormResult, red: ResonanceResult) -> tuple[PolyMap, ...]:
    """Degree-d jets of the composite coordinate change H'_x o H_x."""
    d = degree_bound(nf.spec)
    return tuple(
        compose(hp.poly, h, d) for hp, h in zip(red.h_prime, nf.h_taylor)
    )


def check_uniqueness_resonance(
    nf_a: NormalFormResult,
    red_a: ResonanceResult,
    nf_b: NormalFormResult,
    red_b: ResonanceResult,
    float_tol: float = 1e-9,
) -> TransitionWitness:
    """Transitions between reduced coordinate changes stay resonance."""
    if not _same_instance(nf_a.ext, nf_b.ext) or nf_a.spec != nf_b.spec:
        raise VerifyError("inputs", "builds come from different instances")
    d = degree_bound(nf_a.spec)
    maps = []
    for h_a, h_b in zip(full_changes(nf_a, red_a), full_changes(nf_b, red_b)):
        maps.append(compose(h_a, invert(h_b, d), d))
    return _witness(maps, nf_a.spec, "resonance", float_tol)


def pinned_rebuild_matches(nf: NormalFormResult) -> bool:
    """Pinning the sub-resonance jets of a build reproduces it bitwise."""
    again = build_taylor(
        nf.ext,
        nf.spec,
        nf.n_taylor,
        nf.alpha,
        lift=pinned_lift(nf.sub_res_jets()),
        force=not nf.certified,
    )
    return again.h_taylor == nf.h_taylor and again.p_normal == nf.p_normal


def check_flag_preservation(p: PolyMap, spec) -> bool:
    """True iff no monomial targeting block i uses coordinates of faster
    blocks j < i, so every fast subspace is invariant."""
    dims = p.target
    for (c, exps) in p.coeffs:
        i = dims.block_of[c]
        s = p.source.block_degrees(exps)
        if any(s[j] for j in range(i)):
            return False
    return True


def check_linearization(nf: NormalFormResult, float_tol: float = 1e-9) -> bool:
    """Single-block spectra admit no nonlinear sub-resonance terms, so the
    normal form must be exactly the linear part of the fibers."""
    if nf.spec.ell != 1:
        raise VerifyError("inputs", "linearization check needs a single block")
    if degree_bound(nf.spec) != 1:
        return False
    for x in range(nf.ext.base.p):
        p = nf.p_poly(x)
        lin = p.jet(1)
        if nf.ext.mode == RATIONAL:
            if p != lin or lin.linear_matrix() != nf.ext.fiber(x).linear_matrix():
                return False
        else:
            if p.sub(lin).max_abs() > float_tol * max(1.0, p.max_abs()):
                return False
            fl = nf.ext.fiber(x).linear_matrix()
            pl = p.linear_matrix()
            gap = max(
                abs(a - b) for ra, rb in zip(pl, fl) for a, b in zip(ra, rb)
            )
            if gap > float_tol:
                return False
    return True


def check_centralizer(
    nf: NormalFormResult,
    ext_g: Extension,
    n_prime: int,
    alpha_prime,
    reduced: ResonanceResult | None = None,
    float_tol: float = 1e-9,
    samples: int = 0,
    seed: int = 0,
    cfg: EvalConfig | None = None,
) -> TransitionWitness:
    """Conjugate a commuting extension into normal-form coordinates.

    Stages: regularity/criticality of the commuting extension, base-map
    commutation, fiber-map commutation (exact in rational mode), splitting
    preservation of its derivative at the zero section, then the class
    verdict on Q_x, optionally cross-checked by pointwise limit evaluation.
    """
    spec, ext_f = nf.spec, nf.ext
    alpha_prime = Fraction(alpha_prime)

    if n_prime > nf.n_taylor or n_prime + alpha_prime > nf.n_taylor + nf.alpha:
        raise VerifyError(
            "criticality", "commuting extension claims more regularity than the build"
        )
    crit = criticality(spec, n_prime, alpha_prime)
    if not crit.ok:
        raise VerifyError(
            "criticality",
            f"nu' = {crit.nu} with bound {crit.eps_bound} rejects epsilon {spec.epsilon}",
        )

    f, g = ext_f.base, ext_g.base
    if ext_g.dims != ext_f.dims or ext_g.mode != ext_f.mode:
        raise VerifyError("inputs", "commuting extension lives on a different bundle")
    if f.compose_with(g) != g.compose_with(f):
        raise VerifyError("commutation", "base maps do not commute")

    cap = max(
        max(pm.degree() for pm in ext_f.fibers), 1
    ) * max(max(pm.degree() for pm in ext_g.fibers), 1)
    for x in range(f.p):
        lhs = compose(ext_g.fiber(f.image(x)), ext_f.fiber(x), cap)
        rhs = compose(ext_f.fiber(g.image(x)), ext_g.fiber(x), cap)
        diff = lhs.sub(rhs)
        bad = (
            not diff.is_zero()
            if ext_f.mode == RATIONAL
            else diff.max_abs() > float_tol * max(1.0, lhs.max_abs())
        )
        if bad:
            raise VerifyError(
                "commutation", f"extensions do not commute over point {x}"
            )

    dims = ext_f.dims
    for x in range(f.p):
        gamma = ext_g.fiber(x).linear_matrix()
        for r in range(dims.total):
            for c in range(dims.total):
                if dims.block_of[r] == dims.block_of[c]:
                    continue
                entry = gamma[r][c]
                bad = bool(entry) if ext_f.mode == RATIONAL else abs(entry) > float_tol
                if bad:
                    raise VerifyError(
                        "derivative",
                        f"derivative at the zero section mixes blocks at point {x}",
                    )

    d = degree_bound(spec)
    if reduced is None:
        changes = nf.h_taylor
        tag = "sub-resonance"
    else:
        changes = full_changes(nf, reduced)
        tag = "resonance"
    q_maps = []
    for x in range(f.p):
        inner = compose(ext_g.fiber(x), invert(changes[x], d), d)
        q_maps.append(compose(changes[g.image(x)], inner, d))
    witness = _witness(q_maps, spec, tag, float_tol)

    if samples:
        ev = Evaluator(nf, cfg)
        rng = random.Random(seed)
        worst = 0.0
        n = dims.total
        radius = ev.cfg.radius / 2.0
        g_float = ext_g.to_float()
        q_float = [q.to_float() for q in q_maps]
        for _ in range(samples):
            x = rng.randrange(f.p)
            raw = [rng.gauss(0.0, 1.0) for _ in range(n)]
            nrm = max(abs(c) for c in raw) or 1.0
            t = tuple(radius * rng.random() * c / nrm for c in raw)
            left = ev.eval_h(g.image(x), g_float.fiber(x).evaluate(t)).value
            right = q_float[x].evaluate(ev.eval_h(x, t).value)
            gap = max(abs(a - b) for a, b in zip(left, right))
            worst = max(worst, gap)
        if worst > 10 * ev.cfg.tol:
            return TransitionWitness(
                tag=witness.tag,
                maps=witness.maps,
                off_class=witness.off_class,
                ok=False,
                stage="pointwise",
                detail=f"jet route and limit route disagree by {worst:.3e}",
            )
        witness.detail = f"max pointwise gap {worst:.3e} over {samples} samples"
    return witness
