#!/usr/bin/env python3
"""Regenerate the shipped instance files in instances/.

Every file is produced from package APIs, so the JSON stays in sync with
the serialization format; output is deterministic.
"""

from __future__ import annotations

import argparse
import math
import os
import sys
from fractions import Fraction as F

sys.path.insert(0, os.path.join(os.path.dirname(__file__), "..", "src"))

from nsnf.base import Extension, FiniteBase, power_extension
from nsnf.instance import instance_json, save_instance
from nsnf.polymap import FLOAT, RATIONAL, GradedDims, PolyMap
from nsnf.spectrum import SpectrumSpec

D11 = GradedDims([1, 1])
SPEC21 = SpectrumSpec([F(-2), F(-1)], F(1, 5))


def worked_extension(mode: str) -> Extension:
    if mode == FLOAT:
        a, b, one = math.exp(-2.0), math.exp(-1.0), 1.0
    else:
        a, b, one = F(27, 200), F(46, 125), F(1)
    fiber = PolyMap(
        D11,
        D11,
        2,
        mode,
        {(0, (1, 0)): a, (0, (0, 2)): one, (1, (0, 1)): b, (1, (1, 1)): one},
    )
    return Extension(FiniteBase([0]), D11, [fiber], sigma=0.25, xi=0.95, mode=mode)


def scalar_extension() -> tuple[Extension, SpectrumSpec]:
    dims = GradedDims([1])
    fiber = PolyMap(dims, dims, 2, RATIONAL, {(0, (1,)): F(46, 125), (0, (2,)): F(1)})
    ext = Extension(FiniteBase([0]), dims, [fiber], sigma=0.25, xi=0.95, mode=RATIONAL)
    return ext, SpectrumSpec([F(-1)], F(1, 4))


def strictsub_extension(mode: str) -> Extension:
    if mode == FLOAT:
        a, b, one = math.exp(-2.0), math.exp(-1.0), 1.0
    else:
        a, b, one = F(27, 200), F(46, 125), F(1)
    fiber = PolyMap(
        D11, D11, 1, mode, {(0, (1, 0)): a, (0, (0, 1)): one, (1, (0, 1)): b}
    )
    return Extension(FiniteBase([0]), D11, [fiber], sigma=0.25, xi=0.95, mode=mode)


def three_cycle_extension() -> Extension:
    rates0 = [F(27, 200), F(31, 250), F(14, 100)]
    rates1 = [F(46, 125), F(7, 20), F(39, 100)]
    fibers = []
    for x in range(3):
        coeffs = {
            (0, (1, 0)): rates0[x],
            (1, (0, 1)): rates1[x],
            (0, (0, 2)): F(1, 2 + x),
            (1, (1, 1)): F(1, 3 + x),
        }
        fibers.append(PolyMap(D11, D11, 2, RATIONAL, coeffs))
    return Extension(FiniteBase([1, 2, 0]), D11, fibers, sigma=0.25, xi=0.95)


def noncommuting_fibers(ext: Extension) -> Extension:
    """Linear diagonal maps: contracting scalars never commute with the
    worked quadratic fibers, so the centralizer check must abort."""
    fiber = PolyMap(
        D11, D11, 1, RATIONAL, {(0, (1, 0)): F(27, 200), (1, (0, 1)): F(46, 125)}
    )
    return Extension(ext.base, D11, [fiber], sigma=0.25, xi=0.95, mode=RATIONAL)


def build_all(out_dir: str) -> list[str]:
    os.makedirs(out_dir, exist_ok=True)
    written = []

    def emit(name: str, raw: dict) -> None:
        path = os.path.join(out_dir, name)
        save_instance(raw, path)
        written.append(path)

    for mode, name in ((FLOAT, "worked_2block.json"), (RATIONAL, "worked_2block_rational.json")):
        ext = worked_extension(mode)
        squared = power_extension(ext, 2)
        emit(
            name,
            instance_json(
                SPEC21,
                ext,
                n_taylor=3,
                alpha=0,
                commuting=squared,
                commuting_n=3,
                commuting_alpha=0,
                options={"seed": 0, "tol": 1e-12, "samples": 1000, "radius": 0.05},
            ),
        )

    ext, spec = scalar_extension()
    emit(
        "scalar_quadratic.json",
        instance_json(
            spec,
            ext,
            n_taylor=3,
            alpha=0,
            commuting=power_extension(ext, 2),
            commuting_n=3,
            commuting_alpha=0,
        ),
    )

    for mode, name in (
        (FLOAT, "strictsub_linear.json"),
        (RATIONAL, "strictsub_linear_rational.json"),
    ):
        emit(
            name,
            instance_json(
                SPEC21,
                strictsub_extension(mode),
                n_taylor=2,
                alpha=1,
                options={"force": True},
            ),
        )

    cycle = three_cycle_extension()
    emit(
        "three_cycle.json",
        instance_json(
            SPEC21,
            cycle,
            n_taylor=3,
            alpha=0,
            commuting=power_extension(cycle, 2),
            commuting_n=3,
            commuting_alpha=0,
        ),
    )

    worked_rat = worked_extension(RATIONAL)
    emit(
        "noncommuting.json",
        instance_json(
            SPEC21,
            worked_rat,
            n_taylor=3,
            alpha=0,
            commuting=noncommuting_fibers(worked_rat),
            commuting_n=3,
            commuting_alpha=0,
        ),
    )
    return written


def main() -> int:
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--out-dir", default=os.path.join(os.path.dirname(__file__), "..", "instances"))
    args = ap.parse_args()
    for path in build_all(args.out_dir):
        print("wrote", os.path.normpath(path))
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
