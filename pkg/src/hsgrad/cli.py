"""Command-line front end: run sweeps and drop tidy CSV results plus a JSON
manifest into an output directory.

Subcommands: equivalence, extension, hardy, capacity, content, decompose,
counterexample.  Each reads an optional JSON config (sane defaults
otherwise) and writes results.csv + manifest.json under --out.  Exit codes:
0 success, 2 bad config, 3 uncertified numerics, 4 failed geometric
construction.  Runs are sequential and seeded, hence reproducible;
--threads is accepted for interface stability but execution stays
single-threaded so results never depend on scheduling.
"""

from __future__ import annotations

import argparse
import csv
import hashlib
import json
import sys
from pathlib import Path

import numpy as np

from . import __version__
from .errors import CertificationError, ConstructionError, ParameterError, ResolutionError, ToolkitError


def _load_config(path):
    if path is None:
        return {}
    try:
        return json.loads(Path(path).read_text())
    except (OSError, json.JSONDecodeError) as exc:
        raise ParameterError(f"cannot read config: {exc}") from exc


def _write_outputs(outdir, command, config, rows):
    outdir = Path(outdir)
    outdir.mkdir(parents=True, exist_ok=True)
    manifest_path = outdir / "manifest.json"
    version = 1
    if manifest_path.exists():
        try:
            version = int(json.loads(manifest_path.read_text()).get("run_version", 0)) + 1
        except (json.JSONDecodeError, ValueError):
            version = 1
    fields = sorted({k for row in rows for k in row})
    with open(outdir / "results.csv", "w", newline="") as fh:
        wtr = csv.DictWriter(fh, fieldnames=fields)
        wtr.writeheader()
        for row in rows:
            wtr.writerow(row)
    manifest = {
        "command": command,
        "tool_version": __version__,
        "run_version": version,
        "config": config,
        "config_sha256": hashlib.sha256(
            json.dumps(config, sort_keys=True).encode()
        ).hexdigest(),
        "axes": fields,
        "n_rows": len(rows),
    }
    manifest_path.write_text(json.dumps(manifest, indent=2) + "\n")


# ---------------------------------------------------------------------------
# Subcommands
# ---------------------------------------------------------------------------

def _cmd_equivalence(config, seed):
    from .corpus import calibration_corpus
    from .fields import SampledField, grid_cloud, lp_quasinorm
    from .gradients import build_constraints, canonical_gradient
    from .lp import solve_min_gradient_p1

    ndim = int(config.get("ndim", 1))
    resolutions = config.get("resolutions", [32, 64] if ndim == 1 else [16])
    rows = []
    for res in resolutions:
        shape = (res,) * ndim
        cloud = grid_cloud(np.zeros(ndim), np.ones(ndim), shape)
        for name, fn in calibration_corpus(ndim):
            f = SampledField(cloud, fn(cloud.points))
            g, const = canonical_gradient(f)
            lp = build_constraints(f, rng=seed)
            sol = solve_min_gradient_p1(lp)
            canonical_norm = lp_quasinorm(g.effective_values, cloud.weights, 1.0)
            rows.append({
                "function": name,
                "resolution": res,
                "canonical_norm": canonical_norm,
                "lp_norm": sol.objective,
                "ratio": canonical_norm / sol.objective if sol.objective else float("inf"),
                "constant": const,
                "lp_gap": sol.gap,
            })
    return rows


def _cmd_extension(config, seed):
    from .covers import whitney_collar_cover
    from .extension import build_extension_plan, extension_quality
    from .fields import SampledField, domain_grid_cloud
    from .geometry import load_domain, Rectangle

    if "domain" in config:
        domain = load_domain(config["domain"])
    else:
        domain = Rectangle((0.0, 0.0), (1.0, 1.0))
    eps0 = float(config.get("eps0", 0.06))
    res = int(config.get("resolution", 40))
    cover = whitney_collar_cover(domain, eps0)
    plan = build_extension_plan(domain, cover)
    cloud, mask = domain_grid_cloud(domain, (res,) * domain.ndim)
    catalog = {
        "affine": lambda p: p[:, 0] + p[:, 1],
        "quadratic": lambda p: (p[:, 0] - 0.4) ** 2 + p[:, 1] ** 2,
        "sine": lambda p: np.sin(2 * np.pi * p[:, 0]) * np.cos(np.pi * p[:, 1]),
        "constant": lambda p: np.ones(len(p)),
    }
    rows = []
    for name in config.get("functions", ["affine", "quadratic"]):
        if name not in catalog:
            raise ParameterError(f"unknown extension test function {name!r}")
        f = SampledField(cloud, catalog[name](cloud.points), mask)
        rep = extension_quality(plan, f, rng=seed)
        rows.append({
            "function": name,
            "resolution": res,
            "eps0": eps0,
            "ratio": rep["ratio"],
            "norm_extension": rep["norm_extension"],
            "norm_interior": rep["norm_interior"],
            "overlap_bound": cover.overlap_bound,
        })
    return rows


def _cmd_hardy(config, seed):
    from .corpus import compact_square_corpus
    from .fields import SampledField, grid_cloud
    from .geometry import Rectangle
    from .hardy import hardy_quotient_ratio

    res = int(config.get("resolution", 16))
    p = float(config.get("p", 1.0))
    count = int(config.get("count", 20))
    domain = Rectangle((0.0, 0.0), (1.0, 1.0))
    cloud = grid_cloud(np.zeros(2), np.ones(2), (res, res))
    rows = []
    for name, fn in compact_square_corpus(count):
        f = SampledField(cloud, fn(cloud.points))
        rep = hardy_quotient_ratio(f, domain, p=p)
        rows.append({"function": name, "resolution": res, "p": p, "ratio": rep["ratio"]})
    return rows


def _cmd_capacity(config, seed):
    from .fields import grid_cloud
    from .hardy import hardy_capacity, witness_capacity_bound

    res = int(config.get("resolution", 12))
    r_e = float(config.get("e_radius", 0.15))
    r_u = float(config.get("u_radius", 0.4))
    cloud = grid_cloud(np.zeros(2), np.ones(2), (res, res))
    d = np.linalg.norm(cloud.points - 0.5, axis=1)
    e_mask = d <= r_e
    u_mask = d < r_u
    cap = hardy_capacity(cloud.points, cloud.weights, e_mask, u_mask, rng=seed)
    wit = witness_capacity_bound(cloud.points, cloud.weights, e_mask, u_mask, rng=seed)
    return [{
        "resolution": res,
        "e_radius": r_e,
        "u_radius": r_u,
        "capacity": cap["capacity"],
        "witness_bound": wit["bound"],
        "n_pairs": cap["n_pairs"],
    }]


def _cmd_content(config, seed):
    from .hardy import hausdorff_content

    s = float(config.get("s", 1.0))
    if "points" in config:
        pts = np.asarray(config["points"], dtype=float)
    else:
        rng = np.random.default_rng(seed)
        pts = rng.uniform(0, 1, size=(int(config.get("count", 100)), 2))
    rep = hausdorff_content(pts, s)
    return [{
        "s": s,
        "n_points": len(pts),
        "lower": rep["lower"],
        "upper": rep["upper"],
        "n_cover_balls": len(rep["balls"]),
    }]


def _cmd_decompose(config, seed):
    from .corpus import random_mean_zero_field
    from .fields import SampledField, grid_cloud
    from .gradients import forward_difference, mean_zero_decompose

    shape = tuple(config.get("shape", [8, 8]))
    n_fields = int(config.get("count", 10))
    cloud = grid_cloud(np.zeros(len(shape)), np.ones(len(shape)), shape)
    rows = []
    for k in range(n_fields):
        phi = random_mean_zero_field(shape, seed + k)
        f = SampledField(cloud, phi.ravel())
        psis = mean_zero_decompose(f)
        recon = sum(
            forward_difference(p.as_grid(), ax, cloud.spacing) for ax, p in enumerate(psis)
        )
        err = float(np.max(np.abs(recon - phi)))
        rows.append({"seed": seed + k, "shape": "x".join(map(str, shape)), "max_error": err})
    return rows


def _cmd_counterexample(config, seed):
    from .hardy import counterexample_log_weight

    delta = float(config.get("delta", 1.0 / 64.0))
    exponents = config.get("exponents", [4, 8, 16])
    rows = []
    for t in exponents:
        rep = counterexample_log_weight(np.exp(-float(t)), delta)
        rows.append({
            "t": t,
            "delta": delta,
            "l1_du": rep["l1_du"],
            "hardy_sum": rep["hardy_sum"],
        })
    return rows


_COMMANDS = {
    "equivalence": _cmd_equivalence,
    "extension": _cmd_extension,
    "hardy": _cmd_hardy,
    "capacity": _cmd_capacity,
    "content": _cmd_content,
    "decompose": _cmd_decompose,
    "counterexample": _cmd_counterexample,
}


def main(argv=None):
    parser = argparse.ArgumentParser(prog="hsgrad", description=__doc__)
    parser.add_argument("command", choices=sorted(_COMMANDS))
    parser.add_argument("--config", help="JSON config file")
    parser.add_argument("--out", default="hsgrad-out", help="output directory")
    parser.add_argument("--seed", type=int, default=0)
    parser.add_argument("--threads", type=int, default=1,
                        help="accepted for compatibility; execution is sequential")
    parser.add_argument("--deterministic", action="store_true",
                        help="accepted for compatibility; runs are always deterministic")
    args = parser.parse_args(argv)

    try:
        config = _load_config(args.config)
        rows = _COMMANDS[args.command](config, args.seed)
        _write_outputs(args.out, args.command, config, rows)
    except (ParameterError, KeyError, TypeError, ValueError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except CertificationError as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return 3
    except (ConstructionError, ResolutionError) as exc:
        print(f"construction failure: {exc}", file=sys.stderr)
        return 4
    except ToolkitError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 3
    print(f"{args.command}: wrote {len(rows)} rows to {args.out}/results.csv")
    return 0


if __name__ == "__main__":
    sys.exit(main())
