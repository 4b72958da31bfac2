"""Command-line driver: verify examples, exercise the variety, scan grids.

Exit codes: 0 all verdicts pass, 1 a verification ran and failed, 2 usage
or configuration error. Reports are deterministic for a fixed (config,
seed) apart from the wall-time field.
"""

from __future__ import annotations

import argparse
import itertools
import json
import sys
import time
from dataclasses import dataclass, field

import numpy as np

from . import variety as vy
from ._parallel import parallel_map
from .chart import DEFAULT_TOLS, harmonicity_report, sample_points
from .errors import Curv4Error, DegenerateFrameError, InputError
from .examples import REGISTRY, build_example, example_names
from .frames import (
    cluster_count,
    extract_frame,
    invariant_counts,
    skw_residuals,
    sy_invariants,
)
from .numerics import StencilConfig

SCHEMA_VERSION = "1"

# constructor-style aliases accepted by scan and verify
_KIND_ALIASES = {
    "constant_curvature": "s4",
    "product_surfaces": "s2xs2",
    "line_cross_space": "rxs3",
    "kpc_warped": "kpc",
    "bump_nonharmonic": "bump",
    "random_perturbed_flat": "randflat",
}


@dataclass
class RunConfig:
    """Echoed verbatim into every report."""

    example: str = ""
    samples: int = 16
    stencil: StencilConfig = field(default_factory=StencilConfig)
    tolerances: dict = field(default_factory=lambda: dict(DEFAULT_TOLS))
    seed: int = 0
    output: str = ""
    fmt: str = "json"

    def to_dict(self):
        return {
            "example": self.example,
            "samples": self.samples,
            "step": self.stencil.step,
            "order": self.stencil.order,
            "third_step": self.stencil.third_step,
            "tolerances": dict(self.tolerances),
            "seed": self.seed,
            "format": self.fmt,
        }


@dataclass
class Report:
    """Payload plus the exit code derived from its verdicts."""

    payload: dict
    exit_code: int


def _jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return [_jsonable(v) for v in obj.tolist()]
    if isinstance(obj, (np.floating, float)):
        return float(obj)
    if isinstance(obj, (np.integer, int)):
        return int(obj)
    if isinstance(obj, (np.bool_, bool)):
        return bool(obj)
    return obj


def _resolve_example(name):
    name = name.strip()
    if name.endswith("-default"):
        name = name[: -len("-default")]
    kind = name.split(":", 1)[0]
    if kind in _KIND_ALIASES:
        name = _KIND_ALIASES[kind] + name[len(kind):]
    return name


def _emit(payload, fmt, out, csv_writer=None):
    """Serialize the payload to --out or stdout; returns nothing."""
    if fmt == "json":
        text = json.dumps(_jsonable(payload), indent=2, sort_keys=True) + "\n"
    else:
        if csv_writer is None:
            raise InputError("csv output is not available for this command")
        import io

        buf = io.StringIO()
        csv_writer(buf)
        text = buf.getvalue()
    if out:
        with open(out, "w") as fh:
            fh.write(text)
        verdicts = payload.get("summary", {}).get("verdicts", {})
        print(f"wrote {out}; verdicts: {_jsonable(verdicts)}")
    else:
        sys.stdout.write(text)


def _verify_payload(config):
    """Assemble the verify report body (shared with scan cells)."""
    chart = build_example(config.example)
    t_start = time.perf_counter()
    rep = harmonicity_report(
        chart,
        cfg=config.stencil,
        count=config.samples,
        seed=config.seed,
        tols=config.tolerances,
    )
    tols = rep.tols

    points = [
        {"x": list(map(float, x)), "residuals": dict(rows), "counts": {}}
        for x, rows in zip(rep.points, rep.rows)
    ]

    frames = []
    degenerate = 0
    frame_count = min(4, len(rep.points))
    skw_max = {}
    for idx in range(frame_count):
        x = rep.points[idx]
        try:
            fr = extract_frame(chart, x, cfg=config.stencil)
        except DegenerateFrameError:
            degenerate += 1
            points[idx]["counts"] = {"degenerate": True}
            continue
        frames.append(fr)
        rows = skw_residuals(fr)
        sy = sy_invariants(fr)
        points[idx]["residuals"].update(rows)
        points[idx]["counts"] = {
            "r": cluster_count(fr.lam),
            "w": cluster_count(np.linalg.eigvalsh(fr.w_plus)),
            "w_minus": cluster_count(np.linalg.eigvalsh(fr.w_minus)),
            "zeta": sy["zeta"],
            "source": fr.source,
        }
        for key, val in rows.items():
            skw_max[key] = max(skw_max.get(key, 0.0), val)

    counts = invariant_counts(frames, degenerate_points=degenerate)
    skw_ok = all(v <= tols["third"] for v in skw_max.values()) if skw_max else True

    maxima = dict(rep.maxima)
    maxima.update(skw_max)
    verdicts = {
        "harmonic": bool(rep.harmonic),
        "skw": bool(skw_ok),
    }
    verdicts["overall"] = bool(verdicts["harmonic"] and verdicts["skw"])
    payload = {
        "schema_version": SCHEMA_VERSION,
        "config": config.to_dict(),
        "chart": {"name": chart.name, "params": _jsonable(chart.params)},
        "points": points,
        "summary": {
            "verdicts": verdicts,
            "maxima": maxima,
            "s_values": [float(v) for v in rep.s_values],
            "s_spread": float(rep.s_spread),
            "counts": {
                "r": counts.r,
                "w": counts.w,
                "w_minus": counts.w_minus,
                "d_lower": counts.d_lower,
                "case": counts.case_label,
                "degenerate_points": counts.degenerate_points,
            },
            "tolerances": tols,
        },
        "timing": {"wall_seconds": time.perf_counter() - t_start},
    }
    return payload


def _verify_csv(payload, fh):
    keys = sorted({k for p in payload["points"] for k in p["residuals"]})
    fh.write(f"# curv4 verify {payload['chart']['name']} schema {SCHEMA_VERSION}\n")
    fh.write(",".join(["x1", "x2", "x3", "x4"] + keys) + "\n")
    for p in payload["points"]:
        vals = [repr(v) for v in p["x"]]
        vals += [repr(p["residuals"][k]) if k in p["residuals"] else "" for k in keys]
        fh.write(",".join(vals) + "\n")


def cmd_verify(config):
    payload = _verify_payload(config)
    exit_code = 0 if payload["summary"]["verdicts"]["overall"] else 1
    return Report(payload=payload, exit_code=exit_code)


def cmd_variety(config, source, count, mode, tol):
    t_start = time.perf_counter()
    points = []
    origin = {}
    if source[0] == "point":
        name = source[1]
        if name not in vy.NAMED_POINTS:
            raise InputError(
                f"unknown named point {name!r}; choices: {', '.join(sorted(vy.NAMED_POINTS))}"
            )
        points = [vy.NAMED_POINTS[name]()]
        origin = {"point": name}
        tol = 1e-6 if tol is None else tol
    elif source[0] == "sample":
        count = source[1]
        points = vy.sample_variety(seed=config.seed, count=count, constraint_mode=mode)
        origin = {"sample": count, "mode": mode}
        tol = 1e-6 if tol is None else tol
    else:
        name = _resolve_example(source[1])
        chart = build_example(name)
        xs = sample_points(chart, count=count, seed=config.seed)
        tol = 1e-3 if tol is None else tol
        for x in xs:
            fr = extract_frame(chart, x, cfg=config.stencil)
            points.append(vy.from_frame(fr).normalized())
        origin = {"from_example": name, "count": count}

    reports = [vy.system_residuals(p, tol) for p in points]
    rows = []
    for rep in reports:
        rows.append(
            {
                "residuals": dict(rep.rows),
                "rank": rep.rank,
                "passed": rep.passed,
            }
        )
    all_passed = all(r.passed for r in reports)
    payload = {
        "schema_version": SCHEMA_VERSION,
        "config": {**config.to_dict(), "origin": origin, "tol": tol},
        "points": [
            {
                "F": p.F,
                "sigma": p.sigma,
                "lam": p.lam,
                "s": p.s,
                **row,
            }
            for p, row in zip(points, rows)
        ],
        "summary": {
            "verdicts": {"membership": all_passed, "overall": all_passed},
            "maxima": {
                "eq1": max(r.eq1_residual for r in reports),
                "fsi": max(r.fsi_residual for r in reports),
                "fsp.sv4": max(r.fsp_residual for r in reports),
            },
            "ranks": [r.rank for r in reports],
        },
        "timing": {"wall_seconds": time.perf_counter() - t_start},
    }

    def csv_writer(fh):
        note = f"curv4 variety {origin} seed {config.seed} tol {tol:g}"
        vy.export_csv(points, fh, tol=tol, note=note)

    return Report(payload=payload, exit_code=0 if all_passed else 1), csv_writer


def cmd_scan(config, kind, param_grid):
    kind = _KIND_ALIASES.get(kind, kind)
    if kind not in REGISTRY:
        raise InputError(f"unknown example kind {kind!r}; choices: {', '.join(example_names())}")
    spec = REGISTRY[kind]
    for name in param_grid:
        if name not in spec.param_names:
            raise InputError(
                f"{kind} has no parameter {name!r} (has: {', '.join(spec.param_names) or 'none'})"
            )
    axes = []
    for name, default in zip(spec.param_names, spec.defaults):
        axes.append([(name, v) for v in param_grid.get(name, [default])])
    cells = [dict(combo) for combo in itertools.product(*axes)] if axes else [{}]

    t_start = time.perf_counter()

    def run_cell(cell):
        if cell:
            arg = ",".join(f"{cell[n]:g}" for n in spec.param_names)
            name = f"{kind}:{arg}"
        else:
            name = kind
        sub = RunConfig(
            example=name,
            samples=config.samples,
            stencil=config.stencil,
            tolerances=config.tolerances,
            seed=config.seed,
        )
        payload = _verify_payload(sub)
        return {
            "params": cell,
            "example": name,
            "maxima": payload["summary"]["maxima"],
            "counts": payload["summary"]["counts"],
            "harmonic": payload["summary"]["verdicts"]["harmonic"],
        }

    rows = parallel_map(run_cell, cells)
    rows.sort(key=lambda r: tuple(r["params"].get(n, 0.0) for n in spec.param_names))
    all_harmonic = all(r["harmonic"] for r in rows)
    agg = {}
    for row in rows:
        for key, val in row["maxima"].items():
            agg[key] = max(agg.get(key, 0.0), val)
    payload = {
        "schema_version": SCHEMA_VERSION,
        "config": {**config.to_dict(), "kind": kind, "grid": {k: list(v) for k, v in param_grid.items()}},
        "points": rows,
        "summary": {
            "verdicts": {"all_harmonic": all_harmonic, "overall": all_harmonic},
            "maxima": agg,
            "cells": len(rows),
        },
        "timing": {"wall_seconds": time.perf_counter() - t_start},
    }

    def csv_writer(fh):
        keys = sorted(agg)
        fh.write(f"# curv4 scan {kind} schema {SCHEMA_VERSION}\n")
        fh.write(",".join(list(spec.param_names) + keys + ["case", "harmonic"]) + "\n")
        for row in rows:
            vals = [repr(float(row["params"].get(n, 0.0))) for n in spec.param_names]
            vals += [repr(row["maxima"].get(k, 0.0)) for k in keys]
            vals += [row["counts"]["case"], str(int(row["harmonic"]))]
            fh.write(",".join(vals) + "\n")

    return Report(payload=payload, exit_code=0 if all_harmonic else 1), csv_writer


def _add_common(p):
    # numeric defaults live in _config_from_args so a --spec file can fill them
    p.add_argument("--samples", type=int, default=None, help="sample point count (default 16)")
    p.add_argument("--step", type=float, default=None, help="FD step for 1st/2nd derivatives")
    p.add_argument("--order", type=int, choices=(2, 4, 6), default=None, help="FD stencil order")
    p.add_argument("--third-step", type=float, default=None, help="FD step for 3rd derivatives")
    p.add_argument("--tol-algebraic", type=float, default=None)
    p.add_argument("--tol-second", type=float, default=None)
    p.add_argument("--tol-third", type=float, default=None)
    p.add_argument("--seed", type=int, default=None, help="sampling seed (default 0)")
    p.add_argument("--out", default="", help="write the report here instead of stdout")
    p.add_argument("--format", dest="fmt", choices=("json", "csv"), default="json")


def _config_from_args(args, file_cfg=None):
    file_cfg = file_cfg or {}
    stencil_kwargs = {}
    for key, attr in (("step", "step"), ("order", "order"), ("third_step", "third_step")):
        val = getattr(args, attr if attr != "third_step" else "third_step", None)
        if val is None:
            val = file_cfg.get(key)
        if val is not None:
            stencil_kwargs[key] = val
    if "order" in stencil_kwargs:
        stencil_kwargs["order"] = int(stencil_kwargs["order"])
    stencil = StencilConfig(**stencil_kwargs)
    tols = dict(file_cfg.get("tolerances", {}))
    for tier in ("algebraic", "second", "third"):
        val = getattr(args, f"tol_{tier}")
        if val is not None:
            tols[tier] = val
    samples = args.samples if args.samples is not None else file_cfg.get("samples", 16)
    if samples < 1:
        raise InputError("--samples must be at least 1")
    seed = args.seed if args.seed is not None else file_cfg.get("seed", 0)
    return RunConfig(
        samples=int(samples),
        stencil=stencil,
        tolerances=tols,
        seed=int(seed),
        output=args.out,
        fmt=args.fmt,
    )


def _load_spec_file(path):
    try:
        with open(path) as fh:
            data = json.load(fh)
    except (OSError, json.JSONDecodeError) as exc:
        raise InputError(f"cannot read spec file {path}: {exc}") from exc
    if not isinstance(data, dict):
        raise InputError(f"spec file {path} must hold a JSON object")
    return data


def build_parser():
    parser = argparse.ArgumentParser(
        prog="curv4",
        description="numerical verification of harmonic-curvature 4-metrics",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    pv = sub.add_parser("verify", help="harmonicity and frame-identity report")
    pv.add_argument("--example", default=None, help=f"one of: {', '.join(example_names())}")
    pv.add_argument("--spec", default=None, help="JSON config file with an example definition")
    _add_common(pv)

    pt = sub.add_parser("variety", help="polynomial-system membership")
    src = pt.add_mutually_exclusive_group(required=True)
    src.add_argument("--from-example", default=None, help="harvest frame data from an example")
    src.add_argument("--point", default=None, help="named point, e.g. zeros-with-product-sigma")
    src.add_argument("--sample", type=int, default=None, metavar="N", help="draw N variety samples")
    pt.add_argument("--count", type=int, default=4, help="points to harvest with --from-example")
    pt.add_argument("--mode", choices=("linear-only", "full"), default="full")
    pt.add_argument("--tol", type=float, default=None, help="membership tolerance")
    _add_common(pt)

    ps = sub.add_parser("scan", help="parameter-grid harmonicity scan")
    ps.add_argument("kind", help="example kind, e.g. s2xs2 or product_surfaces")
    ps.add_argument(
        "--param",
        action="append",
        default=[],
        metavar="name=v1,v2,...",
        help="grid values for one parameter; repeatable",
    )
    _add_common(ps)

    return parser


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        if args.command == "verify":
            file_cfg = {}
            example = args.example
            if args.spec:
                file_cfg = _load_spec_file(args.spec)
                if example is None:
                    example = file_cfg.get("name") or file_cfg.get("example")
                    if example is None and "kind" in file_cfg:
                        params = file_cfg.get("params", {})
                        spec = REGISTRY.get(file_cfg["kind"])
                        if spec is None:
                            raise InputError(f"unknown kind in spec file: {file_cfg['kind']!r}")
                        vals = [params.get(n, d) for n, d in zip(spec.param_names, spec.defaults)]
                        example = (
                            f"{file_cfg['kind']}:{','.join(f'{v:g}' for v in vals)}"
                            if vals
                            else file_cfg["kind"]
                        )
            if example is None:
                raise InputError("verify needs --example or --spec")
            config = _config_from_args(args, file_cfg)
            config.example = _resolve_example(example)
            report = cmd_verify(config)
            _emit(
                report.payload,
                config.fmt,
                config.output,
                csv_writer=lambda fh: _verify_csv(report.payload, fh),
            )
            return report.exit_code

        if args.command == "variety":
            config = _config_from_args(args)
            if args.point is not None:
                source = ("point", args.point)
            elif args.sample is not None:
                if args.sample < 1:
                    raise InputError("--sample must be at least 1")
                source = ("sample", args.sample)
            else:
                source = ("example", args.from_example)
                config.example = _resolve_example(args.from_example)
            report, csv_writer = cmd_variety(
                config, source, count=args.count, mode=args.mode, tol=args.tol
            )
            _emit(report.payload, config.fmt, config.output, csv_writer=csv_writer)
            return report.exit_code

        grid = {}
        for item in args.param:
            name, _, raw = item.partition("=")
            if not raw:
                raise InputError(f"--param needs name=v1,v2,... (got {item!r})")
            try:
                grid[name.strip()] = [float(v) for v in raw.split(",") if v.strip()]
            except ValueError as exc:
                raise InputError(f"bad grid values in {item!r}") from exc
        config = _config_from_args(args)
        report, csv_writer = cmd_scan(config, args.kind.strip(), grid)
        _emit(report.payload, config.fmt, config.output, csv_writer=csv_writer)
        return report.exit_code
    except Curv4Error as exc:
        print(f"curv4: error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
