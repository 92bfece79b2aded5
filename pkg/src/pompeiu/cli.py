"""Command line: ``pompeiu {eval,converge,measure,verify}``.

Exit codes: 0 success, 1 configuration error, 2 numerical failure,
3 verification breach. Reports are ``{"header": ..., "payload": ...}``;
the header carries the SHA-256 of the canonical payload text.
"""

from __future__ import annotations

import argparse
import csv
import hashlib
import io
import json
import sys
from pathlib import Path

import numpy as np

from . import __version__
from . import config as cfgmod
from .calculus import cfc_boundary_limit, continuous_fc, holomorphic_fc, smooth_fc_terms
from .contour import ContourSequence, build_distance_field, contour_sequence
from .errors import ConfigError, DegenerateLevel, NumericalError
from .functions import CONTINUOUS, MollifierSequence
from .matrix import LinearFunctional, matrix_to_json, oracle_fc, spectral_norm
from .reduce import set_threads
from .regularity import epsilon_ladder, truncation_samples, truncation_study
from .spectral import (borel_set_from_json, family_axiom_report, mu, operator_measure,
                       spectral_projectors)
from .verify import CHECKS, run_suite, shipped_fixtures

EXIT_OK, EXIT_CONFIG, EXIT_NUMERICAL, EXIT_BREACH = 0, 1, 2, 3


class Breach(Exception):
    """Raised after the report is written when an invariant failed."""


# -- serialization -----------------------------------------------------------


def plain(obj):
    """JSON-ready copy: complex -> {re, im}, arrays -> lists, non-finite -> None."""
    if isinstance(obj, dict):
        return {str(k): plain(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [plain(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return plain(obj.tolist())
    if isinstance(obj, (bool, np.bool_)):
        return bool(obj)
    if isinstance(obj, (int, np.integer)):
        return int(obj)
    if isinstance(obj, (complex, np.complexfloating)):
        return {"re": plain(float(obj.real)), "im": plain(float(obj.imag))}
    if isinstance(obj, (float, np.floating)):
        x = float(obj)
        return x if np.isfinite(x) else None
    return obj


def canonical(payload) -> str:
    return json.dumps(plain(payload), sort_keys=True, separators=(",", ":"), allow_nan=False)


def render_report(command: str, payload, threads: int, seed: int) -> str:
    body = canonical(payload)
    header = {"tool": "pompeiu", "version": __version__, "command": command,
              "threads": threads, "seed": seed,
              "payload_sha256": hashlib.sha256(body.encode()).hexdigest()}
    return json.dumps({"header": header, "payload": json.loads(body)}, sort_keys=True,
                      indent=1, allow_nan=False) + "\n"


def _emit(text: str, out) -> None:
    if out is None:
        sys.stdout.write(text)
    else:
        Path(out).write_text(text)


def _quad_kwargs(quad: dict) -> dict:
    return {"resolution": quad["grid_resolution"], "patch_radius_cells": quad["patch_radius_cells"]}


def _oracle_deviation(spec, f, value):
    if spec.oracle is None:
        return None, None
    ref = oracle_fc(spec, f)
    dev = float(spectral_norm(value - ref))
    return dev, dev / max(float(spectral_norm(ref)), 1e-300)


# -- commands ----------------------------------------------------------------


def cmd_eval(cfg: dict, rng) -> dict:
    prob = cfgmod.build_matrix(cfg, rng)
    f = cfgmod.build_function(cfg)
    quad = cfgmod.quadrature(cfg)
    tol = cfgmod.tolerances(cfg)
    c = cfgmod.build_contour(cfg, prob.spec)
    opts = cfg.get("eval", {})
    kind = opts.get("calculus", "auto")
    if kind == "auto":
        kind = "holomorphic" if f.is_holomorphic else ("continuous" if f.smoothness == CONTINUOUS
                                                       else "smooth")
    extra = {}
    if kind == "holomorphic":
        value = holomorphic_fc(prob.a, prob.spec, f, c)
        bd, ar = value, np.zeros_like(value)
    elif kind == "smooth":
        bd, ar = smooth_fc_terms(prob.a, prob.spec, f, c, **_quad_kwargs(quad))
        value = bd - ar
    else:
        mol = opts.get("mollifier", {})
        widths = tuple(mol.get("widths", (0.2, 0.1, 0.05)))
        x0, x1, y0, y1 = c.bbox()
        pad = 5 * widths[0]
        m = MollifierSequence(f, widths, (x0 - pad, x1 + pad, y0 - pad, y1 + pad),
                              mol.get("resolution", 512))
        res = continuous_fc(prob.a, prob.spec, m, c, tol=tol["continuous"], **_quad_kwargs(quad))
        value = res.value
        bd, ar = smooth_fc_terms(prob.a, prob.spec, m.members()[-1], c, **_quad_kwargs(quad))
        extra = {"mollifier_widths": list(widths), "differences": res.differences}
    dev, rel = _oracle_deviation(prob.spec, f, value)
    return {"calculus": kind, "function": f.to_json(), "dim": prob.a.shape[0],
            "result": matrix_to_json(value),
            "terms": {"boundary": matrix_to_json(bd), "area": matrix_to_json(ar)},
            "oracle_deviation": dev, "oracle_relative_deviation": rel,
            "contour": {"level": c.level, "loops": len(c.loops), "nodes": int(c.nodes.size)},
            "quadrature": quad, **extra}


def _converge_boundary(cfg, prob, f, quad, order):
    levels = quad.get("levels")
    if not levels or len(levels) < 2:
        raise ConfigError("a boundary-limit study needs quadrature.levels with at least 2 entries")
    if any(not (b < a) for a, b in zip(levels, levels[1:])):
        raise ConfigError(f"levels must be strictly decreasing, got {levels}")
    if cfg.get("contour", {}).get("kind", "level") == "circles":
        cs = ContourSequence.circles(prob.spec.eigenvalues, levels, quad["contour_nodes"])
    else:
        fld = build_distance_field(prob.spec, resolution=quad["grid_resolution"], max_level=levels[0])
        if min(levels) < fld.floor:
            raise ConfigError(f"DegenerateLevel: level {min(levels)!r} is below the grid floor "
                              f"{fld.floor!r}; raise grid_resolution or the levels")
        cs = contour_sequence(fld, levels, quad["contour_nodes"])
    bl = cfc_boundary_limit(prob.a, prob.spec, f, cs, order=order)
    values = [float(spectral_norm(v)) for v in bl.values]
    dev, rel = _oracle_deviation(prob.spec, f, bl.extrapolated)
    payload = {"study": "boundary_limit", "levels": levels, "values": [matrix_to_json(v) for v in bl.values],
               "residuals": bl.residuals, "extrapolated": matrix_to_json(bl.extrapolated),
               "order": order, "oracle_deviation": dev, "oracle_relative_deviation": rel}
    return list(levels), values, list(bl.residuals), payload


def _converge_truncation(cfg, prob, quad, opts):
    top = float(opts.get("top", 1.0))
    fld = build_distance_field(prob.spec, resolution=quad["grid_resolution"], max_level=top)
    eps = opts.get("epsilons")
    if eps is None:
        eps = epsilon_ladder(floor=fld.floor).tolist()
    if min(eps) < fld.floor:
        raise ConfigError(f"DegenerateLevel: epsilon {min(eps)!r} is below the grid floor "
                          f"{fld.floor!r}; raise grid_resolution or the ladder")
    if max(eps) >= top:
        raise ConfigError(f"epsilons must lie below top = {top!r}")
    vals = truncation_samples(fld, eps, top, nodes=quad["contour_nodes"])
    try:
        rep = truncation_study(eps, vals)
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc
    payload = {"study": "truncation", "top": top, **rep.verdict_json(),
               "epsilons": list(eps), "values": vals, "residuals": rep.residuals,
               "aitken": rep.details["aitken"]}
    return list(eps), list(vals), list(rep.residuals), payload


def cmd_converge(cfg: dict, rng) -> tuple:
    prob = cfgmod.build_matrix(cfg, rng)
    quad = cfgmod.quadrature(cfg)
    opts = cfg.get("converge", {})
    if opts.get("study", "boundary_limit") == "boundary_limit":
        f = cfgmod.build_function(cfg)
        lv, vals, res, payload = _converge_boundary(cfg, prob, f, quad, float(opts.get("order", 2.0)))
    else:
        lv, vals, res, payload = _converge_truncation(cfg, prob, quad, opts)
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["level", "value", "residual"])
    for k, (t, v) in enumerate(zip(lv, vals)):
        w.writerow([repr(float(t)), repr(float(v)), "" if k == 0 else repr(float(res[k - 1]))])
    return buf.getvalue(), payload


def cmd_measure(cfg: dict, rng) -> dict:
    prob = cfgmod.build_matrix(cfg, rng)
    tol = cfgmod.tolerances(cfg)
    opts = cfg.get("measure", {})
    n = prob.a.shape[0]
    fam = spectral_projectors(prob.a, prob.spec, opts.get("radius"))
    axioms = family_axiom_report(fam, opts.get("trials", 100), rng)
    ident = fam.identity_residual()
    axioms |= {"identity": ident, "identity_pass": ident <= tol["identity"],
               "idempotence": fam.idempotence_residual(),
               "reconstruction": fam.reconstruction_residual(prob.a)}
    if "functional" in opts:
        lam = LinearFunctional([cfgmod.parse_complex(v) for v in opts["functional"]])
    else:
        lam = LinearFunctional(rng.normal(size=n) + 1j * rng.normal(size=n))
    if "vector" in opts:
        x = np.array([cfgmod.parse_complex(v) for v in opts["vector"]])
    else:
        x = rng.normal(size=n) + 1j * rng.normal(size=n)
    if lam.dim != n or x.shape != (n,):
        raise ConfigError(f"functional and vector must have length {n}")
    m = mu(fam, lam, x)
    sets = []
    for obj in opts.get("sets", []):
        try:
            e = borel_set_from_json(obj)
        except (ValueError, KeyError, TypeError) as exc:
            raise ConfigError(f"bad set {obj!r}: {exc}") from exc
        sets.append({"set": e.to_json(), "mu": m(e), "nu": matrix_to_json(operator_measure(fam, e))})
    return {"family": fam.to_json(), "axioms": axioms, "functional": lam.coefficients, "vector": x,
            "measure": m.to_json(), "sets": sets}


def cmd_verify(cfg: dict, seed: int, log) -> dict:
    opts = cfg.get("verify", {})
    checks = opts.get("checks", list(CHECKS))
    shipped = {Path(p).stem: p for p in shipped_fixtures()}
    fixtures = [shipped.get(name, name) for name in opts.get("fixtures", list(shipped))]
    quad = cfgmod.quadrature(cfg) | {"trials": opts.get("trials", 100)}

    def progress(row):
        log(f"{'PASS' if row['pass'] else 'FAIL'}  {row['fixture']:<14} {row['check']:<24} "
            f"{row['value']:.3e} <= {row['tolerance']:.1e}")

    out = run_suite(fixtures, checks, cfgmod.tolerances(cfg), quad, seed, progress)
    return {"checks": checks, "fixtures": [Path(p).stem for p in fixtures], **out}


# -- entry point -------------------------------------------------------------


def _u64(text: str) -> int:
    v = int(text)
    if not 0 <= v < 2 ** 64:
        raise argparse.ArgumentTypeError("seed must be an unsigned 64-bit integer")
    return v


def _nonneg(text: str) -> int:
    v = int(text)
    if v < 0:
        raise argparse.ArgumentTypeError("threads must be >= 0")
    return v


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="pompeiu", description="Matrix functional calculus by Cauchy-Pompeiu integrals.")
    p.add_argument("--version", action="version", version=f"pompeiu {__version__}")
    sub = p.add_subparsers(dest="command", required=True)
    for name, text in [("eval", "evaluate f(A) with the holomorphic, smooth or continuous calculus"),
                       ("converge", "boundary-limit or truncation ladder; writes CSV plus a JSON sidecar"),
                       ("measure", "spectral family, atomic measures and axiom report"),
                       ("verify", "invariant suite on fixtures; exit 3 on any breach")]:
        s = sub.add_parser(name, help=text)
        s.add_argument("--config", metavar="PATH", required=name != "verify")
        s.add_argument("--out", metavar="PATH")
        s.add_argument("--threads", type=_nonneg, default=1, metavar="N", help="0 means one per CPU")
        s.add_argument("--seed", type=_u64, default=0, metavar="U64")
    return p


def main(argv=None) -> int:
    try:
        args = build_parser().parse_args(argv)
    except SystemExit as exc:
        return EXIT_OK if exc.code == 0 else EXIT_CONFIG

    def log(msg):
        print(msg, file=sys.stderr)

    try:
        cfg = cfgmod.load_config(args.config)
        set_threads(args.threads)
        rng = np.random.default_rng(args.seed)
        if args.command == "eval":
            text = render_report("eval", cmd_eval(cfg, rng), args.threads, args.seed)
            _emit(text, args.out)
        elif args.command == "converge":
            table, payload = cmd_converge(cfg, rng)
            report = render_report("converge", payload, args.threads, args.seed)
            if args.out is None:
                sys.stdout.write(table + report)
            else:
                Path(args.out).write_text(table)
                Path(args.out).with_suffix(".verdict.json").write_text(report)
        elif args.command == "measure":
            _emit(render_report("measure", cmd_measure(cfg, rng), args.threads, args.seed), args.out)
        else:
            payload = cmd_verify(cfg, args.seed, log)
            _emit(render_report("verify", payload, args.threads, args.seed), args.out)
            log(f"{payload['passed']} passed, {payload['failed']} failed")
            if payload["failed"]:
                raise Breach(f"{payload['failed']} invariant(s) breached")
    except Breach as exc:
        log(f"verification breach: {exc}")
        return EXIT_BREACH
    except DegenerateLevel as exc:
        log(f"config error: DegenerateLevel: {exc}")
        return EXIT_CONFIG
    except ConfigError as exc:
        log(f"config error: {exc}")
        return EXIT_CONFIG
    except NumericalError as exc:
        hint = ""
        if getattr(exc, "suggested_radius", None) is not None:
            hint = f" (suggested radius {exc.suggested_radius!r})"
        log(f"numerical error in {exc.operation}: {type(exc).__name__}: {exc}{hint}")
        return EXIT_NUMERICAL
    except ValueError as exc:
        # precondition violations inside operations (bad levels, poles inside)
        log(f"config error: {exc}")
        return EXIT_CONFIG
    return EXIT_OK


def main_exit() -> None:
    sys.exit(main())


if __name__ == "__main__":
    main_exit()
