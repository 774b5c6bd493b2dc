"""Instance files: JSON descriptions of an extension, its spectrum bands,
regularity, optional commuting extension, and run options.

Rationals are serialized as {"num": ..., "den": ...} objects (plain ints
are accepted and read as integers).  Parse failures raise InstanceError
with the JSON path of the offending field.
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass, field
from fractions import Fraction

from .base import Extension, FiniteBase
from .evaluator import EvalConfig
from .normal_form import LiftStrategy, complement_lift, seeded_lift
from .polymap import FLOAT, RATIONAL, GradedDims, PolyMap, from_records, to_records
from .spectrum import SpectrumSpec


class InstanceError(ValueError):
    """Malformed instance file; message carries the JSON path."""


def _fail(where: str, message: str):
    raise InstanceError(f"{where}: {message}")


def parse_fraction(obj, where: str) -> Fraction:
    if isinstance(obj, bool):
        _fail(where, "expected a rational, got a boolean")
    if isinstance(obj, int):
        return Fraction(obj)
    if isinstance(obj, dict):
        extra = set(obj) - {"num", "den"}
        if extra:
            _fail(where, f"unexpected keys {sorted(extra)} in rational")
        try:
            num = obj["num"]
        except KeyError:
            _fail(where, "rational object needs a 'num' field")
        den = obj.get("den", 1)
        if not isinstance(num, int) or not isinstance(den, int):
            _fail(where, "rational parts must be integers")
        if den == 0:
            _fail(where, "zero denominator")
        return Fraction(num, den)
    _fail(where, f"expected a rational (int or num/den object), got {type(obj).__name__}")


def fraction_json(value: Fraction) -> dict:
    value = Fraction(value)
    return {"num": value.numerator, "den": value.denominator}


@dataclass(frozen=True)
class RunOptions:
    lift: str = "complement"
    seed: int = 0
    tol: float = 1e-12
    k_max: int = 200
    samples: int = 1000
    radius: float = 0.05
    force: bool = False

    def lift_strategy(self) -> LiftStrategy:
        if self.lift == "complement":
            return complement_lift()
        if self.lift == "seeded":
            return seeded_lift(self.seed)
        raise InstanceError(f"options.lift: unsupported strategy {self.lift!r}")

    def eval_config(self) -> EvalConfig:
        return EvalConfig(tol=self.tol, k_max=self.k_max, radius=self.radius)


@dataclass
class Instance:
    spec: SpectrumSpec
    ext: Extension
    n_taylor: int
    alpha: Fraction
    commuting: Extension | None
    commuting_n: int | None
    commuting_alpha: Fraction | None
    options: RunOptions
    digest: str
    raw: dict = field(repr=False)

    @property
    def mode(self) -> str:
        return self.ext.mode

    def with_mode(self, mode: str) -> "Instance":
        if mode == self.mode:
            return self
        if mode == FLOAT:
            return Instance(
                spec=self.spec,
                ext=self.ext.to_float(),
                n_taylor=self.n_taylor,
                alpha=self.alpha,
                commuting=self.commuting.to_float() if self.commuting else None,
                commuting_n=self.commuting_n,
                commuting_alpha=self.commuting_alpha,
                options=self.options,
                digest=self.digest,
                raw=self.raw,
            )
        raise InstanceError(
            "mode: cannot convert a float instance to exact rationals"
        )


def _parse_poly_records(records, dims: GradedDims, mode: str, where: str) -> PolyMap:
    if not isinstance(records, list) or not records:
        _fail(where, "expected a non-empty list of coefficient records")
    cap = 1
    cleaned = []
    for j, rec in enumerate(records):
        spot = f"{where}[{j}]"
        if not isinstance(rec, dict):
            _fail(spot, "coefficient record must be an object")
        if "coord" not in rec or "exponents" not in rec:
            _fail(spot, "record needs 'coord' and 'exponents'")
        exps = rec["exponents"]
        if not isinstance(exps, list) or not all(isinstance(e, int) for e in exps):
            _fail(spot, "'exponents' must be a list of integers")
        cap = max(cap, sum(exps))
        if mode == RATIONAL:
            if "value" in rec:
                _fail(spot, "rational instances use num/den, not 'value'")
            cleaned.append(
                {
                    "coord": rec["coord"],
                    "exponents": exps,
                    "num": rec.get("num", 0),
                    "den": rec.get("den", 1),
                }
            )
        else:
            if "num" in rec or "den" in rec:
                _fail(spot, "float instances use 'value', not num/den")
            if "value" not in rec:
                _fail(spot, "record needs 'value'")
            cleaned.append(
                {"coord": rec["coord"], "exponents": exps, "value": float(rec["value"])}
            )
    try:
        return from_records(cleaned, dims, dims, cap, mode)
    except (ValueError, TypeError, ZeroDivisionError) as err:
        _fail(where, str(err))


def _parse_extension(block: dict, dims: GradedDims, mode: str, where: str) -> Extension:
    for key in ("permutation", "fibers"):
        if block.get(key) is None:
            _fail(where, f"missing '{key}'")
    perm = block["permutation"]
    if not isinstance(perm, list):
        _fail(f"{where}.permutation", "expected a list")
    try:
        base = FiniteBase(perm)
    except ValueError as err:
        _fail(f"{where}.permutation", str(err))
    fibers_raw = block["fibers"]
    if not isinstance(fibers_raw, list) or len(fibers_raw) != base.p:
        _fail(f"{where}.fibers", f"expected one fiber record list per point ({base.p})")
    fibers = [
        _parse_poly_records(rec, dims, mode, f"{where}.fibers[{x}]")
        for x, rec in enumerate(fibers_raw)
    ]
    sigma = block.get("sigma")
    xi = block.get("xi")
    try:
        return Extension(base, dims, fibers, sigma=sigma, xi=xi, mode=mode)
    except ValueError as err:
        _fail(where, str(err))


def parse_instance(raw: dict, digest: str | None = None) -> Instance:
    if not isinstance(raw, dict):
        _fail("$", "instance must be a JSON object")
    for key in ("spectrum", "regularity", "base", "dims", "sigma", "xi", "mode", "fibers"):
        if key not in raw:
            _fail("$", f"missing top-level field '{key}'")

    mode = raw["mode"]
    if mode not in (RATIONAL, FLOAT):
        _fail("mode", f"expected 'rational' or 'float', got {mode!r}")

    spectrum = raw["spectrum"]
    if not isinstance(spectrum, dict) or "chi" not in spectrum or "epsilon" not in spectrum:
        _fail("spectrum", "needs 'chi' and 'epsilon'")
    chi = [
        parse_fraction(c, f"spectrum.chi[{i}]") for i, c in enumerate(spectrum["chi"])
    ]
    eps = parse_fraction(spectrum["epsilon"], "spectrum.epsilon")
    try:
        spec = SpectrumSpec(chi, eps)
    except ValueError as err:
        _fail("spectrum", str(err))

    reg = raw["regularity"]
    if not isinstance(reg, dict) or "n_taylor" not in reg:
        _fail("regularity", "needs 'n_taylor' (and optional 'alpha')")
    n_taylor = reg["n_taylor"]
    if not isinstance(n_taylor, int) or n_taylor < 1:
        _fail("regularity.n_taylor", "expected a positive integer")
    alpha = parse_fraction(reg.get("alpha", 0), "regularity.alpha")

    dims_raw = raw["dims"]
    if not isinstance(dims_raw, list) or not all(
        isinstance(m, int) and m >= 1 for m in dims_raw
    ):
        _fail("dims", "expected a list of positive block dimensions")
    if len(dims_raw) != spec.ell:
        _fail("dims", f"{len(dims_raw)} blocks against {spec.ell} spectrum values")
    dims = GradedDims(dims_raw)

    base_block = raw["base"]
    if not isinstance(base_block, dict) or "permutation" not in base_block:
        _fail("base", "needs 'permutation' (and optional 'p')")
    declared_p = base_block.get("p")
    if declared_p is not None and declared_p != len(base_block["permutation"]):
        _fail("base.p", "does not match the permutation length")

    ext = _parse_extension(
        {
            "permutation": base_block["permutation"],
            "fibers": raw["fibers"],
            "sigma": raw["sigma"],
            "xi": raw["xi"],
        },
        dims,
        mode,
        "$",
    )

    commuting = None
    commuting_n = None
    commuting_alpha = None
    if raw.get("commuting") is not None:
        cm = raw["commuting"]
        if not isinstance(cm, dict):
            _fail("commuting", "expected an object")
        commuting = _parse_extension(
            {
                "permutation": cm.get("permutation"),
                "fibers": cm.get("fibers"),
                "sigma": raw["sigma"],
                "xi": raw["xi"],
            },
            dims,
            mode,
            "commuting",
        )
        cm_reg = cm.get("regularity", {})
        commuting_n = cm_reg.get("n_taylor", n_taylor)
        commuting_alpha = parse_fraction(
            cm_reg.get("alpha", alpha), "commuting.regularity.alpha"
        )
        if not isinstance(commuting_n, int) or commuting_n < 1:
            _fail("commuting.regularity.n_taylor", "expected a positive integer")

    opts = raw.get("options", {})
    if not isinstance(opts, dict):
        _fail("options", "expected an object")
    known = {"lift", "seed", "tol", "k_max", "samples", "radius", "force"}
    extra = set(opts) - known
    if extra:
        _fail("options", f"unknown option keys {sorted(extra)}")
    sigma = float(raw["sigma"])
    options = RunOptions(
        lift=opts.get("lift", "complement"),
        seed=opts.get("seed", 0),
        tol=float(opts.get("tol", 1e-12)),
        k_max=int(opts.get("k_max", 200)),
        samples=int(opts.get("samples", 1000)),
        radius=float(opts.get("radius", min(0.05, sigma / 5.0))),
        force=bool(opts.get("force", False)),
    )
    if options.lift not in ("complement", "seeded"):
        _fail("options.lift", f"unsupported strategy {options.lift!r}")
    if options.radius > sigma:
        _fail("options.radius", "exceeds the certified ball radius sigma")

    if digest is None:
        digest = digest_of(raw)
    return Instance(
        spec=spec,
        ext=ext,
        n_taylor=n_taylor,
        alpha=alpha,
        commuting=commuting,
        commuting_n=commuting_n,
        commuting_alpha=commuting_alpha,
        options=options,
        digest=digest,
        raw=raw,
    )


def digest_of(raw: dict) -> str:
    canon = json.dumps(raw, sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(canon.encode()).hexdigest()


def load_instance(path: str) -> Instance:
    try:
        with open(path) as fh:
            raw = json.load(fh)
    except FileNotFoundError:
        raise InstanceError(f"{path}: no such instance file")
    except json.JSONDecodeError as err:
        raise InstanceError(f"{path}:{err.lineno}:{err.colno}: {err.msg}")
    try:
        return parse_instance(raw)
    except InstanceError as err:
        raise InstanceError(f"{path}: {err}") from None


def poly_records(pm: PolyMap) -> list[dict]:
    """Serialization order is the graded monomial order; deterministic."""
    return to_records(pm)


def extension_json(ext: Extension) -> dict:
    return {
        "permutation": list(ext.base.perm),
        "fibers": [poly_records(ext.fiber(x)) for x in range(ext.base.p)],
    }


def instance_json(
    spec: SpectrumSpec,
    ext: Extension,
    n_taylor: int,
    alpha,
    commuting: Extension | None = None,
    commuting_n: int | None = None,
    commuting_alpha=None,
    options: dict | None = None,
) -> dict:
    """Assemble the canonical JSON object for an instance."""
    raw = {
        "spectrum": {
            "chi": [fraction_json(c) for c in spec.chi],
            "epsilon": fraction_json(spec.epsilon),
        },
        "regularity": {"n_taylor": n_taylor, "alpha": fraction_json(Fraction(alpha))},
        "base": {"p": ext.base.p, "permutation": list(ext.base.perm)},
        "dims": list(ext.dims.dims),
        "sigma": ext.sigma,
        "xi": ext.xi,
        "mode": ext.mode,
        "fibers": [poly_records(ext.fiber(x)) for x in range(ext.base.p)],
    }
    if commuting is not None:
        block = extension_json(commuting)
        if commuting_n is not None:
            block["regularity"] = {
                "n_taylor": commuting_n,
                "alpha": fraction_json(Fraction(commuting_alpha if commuting_alpha is not None else 0)),
            }
        raw["commuting"] = block
    if options:
        raw["options"] = dict(options)
    return raw


def save_instance(raw: dict, path: str) -> None:
    with open(path, "w") as fh:
        json.dump(raw, fh, indent=2, sort_keys=True)
        fh.write("\n")
