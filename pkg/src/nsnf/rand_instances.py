"""Seeded random validated instances for stress runs.

Sizes skew small so batch builds stay fast.  Linear parts are scalar
multiples of signed permutation matrices per block, which realize the
singular-value bands exactly in rational arithmetic; nonlinear terms are
sparse with small coefficients so the contraction certificate keeps a
wide margin.
"""

from __future__ import annotations

import math
import random
from dataclasses import dataclass
from fractions import Fraction

from .base import Extension, FiniteBase, validate_extension
from .polymap import RATIONAL, GradedDims, PolyMap
from .spectrum import SpectrumSpec, criticality, spectral_constants

_P_WEIGHTS = (3, 3, 2, 1, 1, 1)
_M_WEIGHTS = (6, 3, 1, 1)
# slow rate is pinned at -1; the fast/middle pools keep the degree bound <= 3
_FAST_POOL = (Fraction(-3, 2), Fraction(-2), Fraction(-5, 2), Fraction(-3))
_MID_POOL = (Fraction(-5, 4), Fraction(-3, 2), Fraction(-7, 4))


@dataclass(frozen=True)
class RandomInstance:
    ext: Extension
    spec: SpectrumSpec
    n_taylor: int
    alpha: Fraction
    seed: int


def _draw_spectrum(rng: random.Random, ell: int) -> list[Fraction]:
    if ell == 1:
        return [Fraction(-1)]
    if ell == 2:
        return [rng.choice(_FAST_POOL), Fraction(-1)]
    mid = rng.choice(_MID_POOL)
    fast = rng.choice([f for f in _FAST_POOL if f < mid])
    return [fast, mid, Fraction(-1)]


def _draw_dims(rng: random.Random, ell: int, m_max: int, total_cap: int) -> list[int]:
    while True:
        dims = [
            rng.choices(range(1, m_max + 1), weights=_M_WEIGHTS[:m_max])[0]
            for _ in range(ell)
        ]
        if sum(dims) <= total_cap:
            return dims


def _band_rate(rng: random.Random, chi_i: Fraction, eps_f: float) -> Fraction:
    """A rational rate with log strictly inside the band, margin 0.4 eps."""
    for _ in range(16):
        u = rng.uniform(-0.4, 0.4)
        rate = Fraction(math.exp(float(chi_i) + u * eps_f)).limit_denominator(1000)
        if rate > 0 and abs(math.log(float(rate)) - float(chi_i)) < 0.6 * eps_f:
            return rate
    raise RuntimeError("band rate draw failed to converge")


def _linear_block(rng: random.Random, m: int, rate: Fraction) -> list[tuple[int, int, Fraction]]:
    """Entries (row, col, value) of rate times a signed permutation."""
    cols = list(range(m))
    rng.shuffle(cols)
    return [(r, cols[r], rate * rng.choice((1, -1))) for r in range(m)]


def _nonlinear_terms(rng: random.Random, n: int, max_deg: int, count: int) -> dict:
    coeffs: dict = {}
    for _ in range(count):
        deg = rng.randint(2, max_deg)
        coord = rng.randrange(n)
        exps = [0] * n
        for j in rng.choices(range(n), k=deg):
            exps[j] += 1
        key = (coord, tuple(exps))
        value = Fraction(rng.choice((-4, -3, -2, -1, 1, 2, 3, 4)), 16)
        coeffs[key] = coeffs.get(key, Fraction(0)) + value
    return {k: v for k, v in coeffs.items() if v}


def _draw(rng: random.Random, seed: int, single_block: bool) -> RandomInstance:
    if single_block:
        ell = 1
        dims_list = [rng.randint(2, 4)]
    else:
        ell = rng.choices((1, 2, 3), weights=(2, 3, 2))[0]
        dims_list = _draw_dims(rng, ell, m_max=4, total_cap=6)
    chi = _draw_spectrum(rng, ell)
    dims = GradedDims(dims_list)
    n = dims.total

    d = math.floor(chi[0] / chi[-1])
    extra = 1
    if not single_block and n <= 3 and rng.random() < 0.35:
        extra = 2
    n_taylor = min(5, d + extra)
    alpha = Fraction(0)

    probe = SpectrumSpec(chi, Fraction(1, 10 ** 6))
    gate = min(
        spectral_constants(probe).eps0,
        criticality(probe, n_taylor, alpha).eps_bound,
    )
    epsilon = gate * Fraction(rng.randint(3, 7), 10)
    spec = SpectrumSpec(chi, epsilon)
    eps_f = float(epsilon)

    p = rng.choices(range(1, 7), weights=_P_WEIGHTS)[0]
    perm = list(range(p))
    rng.shuffle(perm)
    base = FiniteBase(perm)

    fibers = []
    for _ in range(p):
        coeffs: dict = {}
        for i in range(ell):
            sl = dims.block_slice(i)
            rate = _band_rate(rng, chi[i], eps_f)
            for r, c, value in _linear_block(rng, dims_list[i], rate):
                exps = [0] * n
                exps[sl.start + c] = 1
                coeffs[(sl.start + r, tuple(exps))] = value
        count = rng.randint(2, 5) if single_block else rng.randint(1, 4)
        max_deg = 2 if single_block else min(3, n_taylor)
        coeffs.update(_nonlinear_terms(rng, n, max_deg, count))
        cap = max(1, max(sum(e) for _, e in coeffs))
        fibers.append(PolyMap(dims, dims, cap, RATIONAL, coeffs))

    ext = Extension(base, dims, fibers, sigma=0.25, xi=0.95, mode=RATIONAL)
    return RandomInstance(ext=ext, spec=spec, n_taylor=n_taylor, alpha=alpha, seed=seed)


def random_instance(seed: int, single_block: bool = False) -> RandomInstance:
    """Draw until the validation gate passes; deterministic in the seed."""
    for attempt in range(32):
        rng = random.Random((seed << 5) + attempt)
        try:
            inst = _draw(rng, seed, single_block)
        except RuntimeError:
            continue
        report = validate_extension(inst.ext, inst.spec, inst.n_taylor, inst.alpha)
        if report.passed:
            return inst
    raise RuntimeError(f"no validated instance within 32 attempts for seed {seed}")
