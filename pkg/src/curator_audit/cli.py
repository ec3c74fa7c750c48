"""Command-line entry point: sample, audit, region, attack, reproduce.

Exit codes: 0 ok, 1 usage error, 2 attack unavailable, 3 cache integrity
error, 4 attack refuted by the confirming audit.
"""

from __future__ import annotations

import argparse
import csv
import json
import logging
import math
import sys
from pathlib import Path

from .auditors import AUDITORS, run_auditor
from .cache import IntegrityError, SampleCache
from .config import ConfigError, ExperimentConfig
from .fp_analyzer import (AttackUnavailable, EmptyRegion, UnsupportedCombination, classify, construct_attack,
                          _candidates)
from .ground_truth import true_epsilon
from .mechanisms import Family, blackbox
from .reproduce import FIGURES, UnknownFigure, reproduce, write_csv

log = logging.getLogger("curator_audit")

EXIT_OK, EXIT_USAGE, EXIT_UNAVAILABLE, EXIT_INTEGRITY, EXIT_REFUTED = 0, 1, 2, 3, 4


class _Parser(argparse.ArgumentParser):
    # argparse's default status 2 would collide with "attack unavailable"
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _parse_grid(text: str) -> list[list[float]]:
    if not text.strip():
        return []
    return [[float(v) for v in pt.split(",")] for pt in text.split(";") if pt.strip()]


def _auditor_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--auditor", choices=AUDITORS)
    p.add_argument("--c", type=float, help="DP-Sniper probability floor (also DPSGD/Delta-Siege alpha floor)")
    p.add_argument("--tau", type=float, help="MPL density floor")
    p.add_argument("--delta-c", type=float, help="claimed delta")
    p.add_argument("--rho", help="Delta-Siege surrogate: inv, exp:<k>, eps, optionally wrapped in log(...)")
    p.add_argument("--samples", type=int, help="sample budget per audit")


def _experiment_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--config", help="JSON experiment config; flags override its fields")
    p.add_argument("--family")
    p.add_argument("--params", help="parameter grid: points separated by ';', coordinates by ','")
    p.add_argument("--pattern", help="input pattern name, e.g. 'One Above'")
    p.add_argument("--dimension", type=int)
    p.add_argument("--seed", type=int, nargs="+", help="one or more seeds")
    p.add_argument("--eps-c", type=float, help="claimed epsilon (enables verdicts)")
    p.add_argument("--output", help="output directory")
    p.add_argument("--cache-dir", help="sample cache directory")
    _auditor_flags(p)


def build_config(args) -> ExperimentConfig:
    d = json.loads(Path(args.config).read_text()) if args.config else {}
    simple = {"family": args.family, "pattern": args.pattern, "dimension": args.dimension,
              "eps_c": args.eps_c, "output": args.output, "cache_dir": args.cache_dir,
              "auditor": args.auditor, "samples": args.samples}
    d.update({k: v for k, v in simple.items() if v is not None})
    if args.params is not None:
        d["grid"] = _parse_grid(args.params)
    if args.seed is not None:
        d["seeds"] = args.seed
    if args.delta_c is not None:
        d["delta_c"] = args.delta_c
    ac = dict(d.get("auditor_config", {}))
    for flag in ("c", "tau", "rho"):
        v = getattr(args, flag)
        if v is not None:
            ac[flag] = v
    if args.delta_c is not None and d.get("auditor", "dpsniper") in ("deltasiege", "dpsgd"):
        ac["delta_c"] = args.delta_c
    d["auditor_config"] = ac
    for key in ("family", "grid"):
        if key not in d:
            raise ConfigError(f"missing {key!r} (flag or config field)")
    return ExperimentConfig.from_dict(d)


# ---------------------------------------------------------------------------
# subcommands
# ---------------------------------------------------------------------------


def cmd_sample(args) -> int:
    cfg = build_config(args)
    if not cfg.grid:
        raise ConfigError("the parameter grid is empty")
    cache = SampleCache(cfg.cache_dir or Path(cfg.output) / "cache")
    n = cfg.samples or 10_000
    for spec in cfg.specs():
        pair = cfg.pair(spec)
        for seed in cfg.seeds:
            for side, x in (("a", pair.a), ("a_prime", pair.a_prime)):
                cache.get_or_draw(spec, x, n, seed)
                print(f"{cache.key(spec, x, n, seed)}\t{spec.family.value}\t{list(spec.params)}\t{side}\tseed={seed}")
    return EXIT_OK


REPORT_COLUMNS = ("config_hash", "family", "params", "pattern", "tool", "orientation", "seed", "xi_star",
                  "ci_low", "ci_high", "eps_star", "eps_star_lower_bound", "eps_c", "verdict", "samples")


def _fmt(v):
    if isinstance(v, float) and not math.isfinite(v):
        return "inf" if v > 0 else "-inf"
    return v


def run_audit(cfg: ExperimentConfig) -> list[dict]:
    cache = SampleCache(cfg.cache_dir) if cfg.cache_dir else None
    records = []
    for params in cfg.grid:
        spec = cfg.spec(params)
        pair = cfg.pair(spec)
        sampler = cache.sampler(spec) if cache else blackbox(spec)
        eps = true_epsilon(spec, cfg.delta_c, pair)
        for seed in cfg.seeds:
            rec = run_auditor(cfg.auditor, sampler, pair, cfg.audit_kwargs(), seed, cfg.both_orientations)
            est = rec.estimate
            row = {"config_hash": cfg.point_config(params, seed).digest(), "family": spec.family.value,
                   "params": ";".join(f"{p:g}" for p in spec.params), "pattern": pair.pattern,
                   "tool": cfg.auditor, "orientation": rec.orientation, "seed": seed, "xi_star": est.xi_star,
                   "ci_low": est.ci_low, "ci_high": est.ci_high, "eps_star": eps.value,
                   "eps_star_lower_bound": eps.lower_bound, "eps_c": cfg.eps_c, "verdict": None,
                   "samples": est.sample_count}
            if cfg.eps_c is not None:
                row["verdict"] = classify(cfg.eps_c, eps.value, est.ci_low, eps.lower_bound).verdict.value
            records.append({"row": row, "record": {**rec.to_dict(), "spec": spec.to_dict(),
                                                   "spec_hash": spec.digest(), "config_hash": row["config_hash"],
                                                   "eps_star": _fmt(eps.value), "verdict": row["verdict"]}})
    return records


def _write_report(out: Path, stem: str, records: list[dict]) -> None:
    out.mkdir(parents=True, exist_ok=True)
    with open(out / f"{stem}.csv", "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(REPORT_COLUMNS)
        for r in records:
            w.writerow(["" if r["row"][k] is None else _fmt(r["row"][k]) for k in REPORT_COLUMNS])
    with open(out / f"{stem}.jsonl", "w") as fh:
        for r in records:
            fh.write(json.dumps(r["record"], sort_keys=True, default=str) + "\n")


def cmd_audit(args) -> int:
    cfg = build_config(args)
    records = run_audit(cfg)
    _write_report(Path(cfg.output), "audit", records)
    for r in records:
        row = r["row"]
        print(f"{row['family']}({row['params']}) seed={row['seed']} xi*={row['xi_star']:.4f} "
              f"ci_low={row['ci_low']:.4f} eps*={row['eps_star']:.4f} verdict={row['verdict'] or '-'}")
    print(f"{len(records)} record(s) written to {cfg.output}")
    return EXIT_OK


def _region_settings(args) -> dict:
    cfg = {}
    for k in ("c", "tau", "rho", "delta_c"):
        v = getattr(args, k)
        if v is not None:
            cfg[k] = v
    if args.h is not None:
        cfg["h"] = args.h
    if args.k is not None:
        cfg["k"] = args.k
    return cfg


def cmd_region(args) -> int:
    family = Family.parse(args.family)
    regions = [make() for make in _candidates(family, args.auditor, args.eps_c, _region_settings(args))]
    out = []
    for region in regions:
        d = region.to_dict()
        if args.check:
            from .boundary_oracle import check_boundaries
            d["boundary_checks"] = [b.to_dict() for b in check_boundaries(region)]
        out.append(d)
    print(json.dumps(out, indent=2, default=str))
    if args.output:
        rows = [r for region in regions for r in region.csv_rows()]
        path = Path(args.output)
        path.parent.mkdir(parents=True, exist_ok=True)
        with open(path, "w", newline="") as fh:
            cols = list(rows[0]) if rows else ["family", "auditor", "analysis", "variable"]
            w = csv.DictWriter(fh, cols, lineterminator="\n")
            w.writeheader()
            w.writerows(rows)
    return EXIT_OK


def cmd_attack(args) -> int:
    settings = _region_settings(args)
    try:
        manifest = construct_attack(args.family, args.auditor, args.eps_c, settings, args.margin)
    except (AttackUnavailable, EmptyRegion, UnsupportedCombination) as e:
        print(f"attack unavailable: {e}", file=sys.stderr)
        return EXIT_UNAVAILABLE
    spec = manifest.spec
    audit_cfg = {k: v for k, v in settings.items() if k in ("c", "tau", "rho", "delta_c")}
    if args.auditor == "dpsniper":
        audit_cfg.pop("delta_c", None)
    cfg = ExperimentConfig(spec.family.value, [list(spec.params)], args.auditor, audit_cfg,
                           structure={k: v for k, v in spec.to_dict().items()
                                      if k not in ("family", "params")},
                           seeds=args.seed or [0], samples=args.samples, eps_c=args.eps_c,
                           delta_c=manifest.claim.delta_c, output=args.output or "attack")
    records = run_audit(cfg)
    out = Path(cfg.output)
    _write_report(out, "attack_audit", records)
    verdicts = [r["row"]["verdict"] for r in records]
    (out / "manifest.json").write_text(json.dumps(
        {**manifest.to_dict(), "confirming_verdicts": verdicts}, indent=2, sort_keys=True, default=str) + "\n")
    print(f"{manifest.analysis}: {spec.family.value}{tuple(round(p, 6) for p in spec.params)} "
          f"claim eps_c={args.eps_c} verdicts={verdicts}")
    return EXIT_OK if all(v == "FP" for v in verdicts) else EXIT_REFUTED


def cmd_reproduce(args) -> int:
    names = list(FIGURES) if args.figure == ["all"] else args.figure
    for name in names:
        if name.lower() not in FIGURES:
            raise UnknownFigure(f"unknown figure {name!r}; expected one of {', '.join(FIGURES)} or all")
    grid = json.loads(args.grid) if args.grid is not None else None
    for name in names:
        rows = reproduce(name, grid, seed=args.seed, scale=args.scale, workers=args.workers)
        path = write_csv(name.lower(), rows, Path(args.output) / f"{name.lower()}.csv")
        print(f"{name}: {len(rows)} row(s) -> {path}")
    return EXIT_OK


# ---------------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="curator-audit", description="Blackbox DP auditing and false-positive analysis")
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    s = sub.add_parser("sample", help="draw and cache sample batches")
    _experiment_flags(s)
    s.set_defaults(fn=cmd_sample)

    a = sub.add_parser("audit", help="audit a parameter grid and classify verdicts")
    _experiment_flags(a)
    a.set_defaults(fn=cmd_audit)

    for name, fn, help_ in (("region", cmd_region, "solve the FP region for a family/auditor pair"),
                            ("attack", cmd_attack, "construct a curator attack and confirm it by auditing")):
        r = sub.add_parser(name, help=help_)
        r.add_argument("--family", required=True)
        r.add_argument("--eps-c", type=float, required=True)
        r.add_argument("--h", type=int, help="RAPPOR hash count")
        r.add_argument("--k", type=int, help="RAPPOR filter size")
        r.add_argument("--output")
        _auditor_flags(r)
        r.set_defaults(fn=fn)
        if name == "region":
            r.add_argument("--check", action="store_true", help="cross-check boundaries against the oracle")
        else:
            r.add_argument("--seed", type=int, nargs="+")
            r.add_argument("--margin", type=float, default=0.02)

    rp = sub.add_parser("reproduce", help="emit the CSV series behind a figure or table")
    rp.add_argument("figure", nargs="+", help=f"one of {', '.join(FIGURES)} or all")
    rp.add_argument("--seed", type=int, default=0)
    rp.add_argument("--scale", type=float, default=1.0, help="fraction of the default sample budgets")
    rp.add_argument("--workers", type=int, default=1)
    rp.add_argument("--grid", help="JSON list of grid points overriding the default grid")
    rp.add_argument("--output", default="results")
    rp.set_defaults(fn=cmd_reproduce)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    if args.command in ("region", "attack") and args.auditor is None:
        parser.error("--auditor is required")
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(message)s")
    try:
        return args.fn(args)
    except IntegrityError as e:
        print(f"integrity error: {e}", file=sys.stderr)
        return EXIT_INTEGRITY
    except (ConfigError, UnknownFigure, UnsupportedCombination, ValueError) as e:
        msg = e.args[0] if isinstance(e, KeyError) and e.args else e
        print(f"error: {msg}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
