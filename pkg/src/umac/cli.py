"""Command-line entry point: ``umac {design,simulate,sweep,trace}``."""

from __future__ import annotations

import argparse
import logging
import sys
from dataclasses import fields, replace
from pathlib import Path

import numpy as np

from . import harness
from .ldpc.code import write_alist
from .ldpc.design import ga_threshold, optimize_degree_distribution, write_distribution
from .ldpc.peg import peg_construct
from .phy import SystemParams, random_scenario, transmit
from .receiver import ReceiverConfig, decode, format_trace, per_user_error

log = logging.getLogger("umac")

# flag -> (section, key); every config key can be overridden from the command line
_OVERRIDES = {}
for _section, _cls in (("system", SystemParams), ("receiver", ReceiverConfig)):
    for _f in fields(_cls):
        _OVERRIDES[_f.name] = (_section, _f.name)
for _f in fields(harness.ExperimentConfig):
    if _f.name not in ("system", "receiver", "code"):
        _OVERRIDES[_f.name] = ("experiment", _f.name)
for _f in fields(harness.CodeSource):
    _OVERRIDES[_f.name] = ("experiment", _f.name)


def _add_config_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("-c", "--config", help="key=value config file with [system] [receiver] [experiment]")
    group = p.add_argument_group("config overrides")
    for key in _OVERRIDES:
        group.add_argument(f"--{key.replace('_', '-')}", dest=f"ov_{key}", metavar="VALUE")


def _config(args) -> harness.ExperimentConfig:
    sections = {"system": {}, "receiver": {}, "experiment": {}}
    base_dir = None
    if args.config:
        for name, values in harness.read_config_sections(args.config).items():
            sections.setdefault(name, {}).update(values)
        base_dir = Path(args.config).parent
    for key, (section, name) in _OVERRIDES.items():
        value = getattr(args, f"ov_{key}")
        if value is not None:
            sections[section][name] = value
    cfg = harness.config_from_mapping(sections, base_dir)
    # paths given on the command line are relative to the working directory
    for key in ("alist", "distribution"):
        value = getattr(args, f"ov_{key}")
        if value is not None:
            cfg = replace(cfg, code=replace(cfg.code, **{key: str(Path(value))}))
    return cfg


def _parse_list(text, conv):
    return [conv(x) for x in text.split(",") if x.strip()]


def cmd_design(args) -> int:
    cfg = _config(args)
    sysp, src = cfg.system, cfg.code
    rate = args.rate if args.rate is not None else sysp.code_rate
    dist = optimize_degree_distribution(rate, src.design_max_var_degree, src.design_seed,
                                        population=src.design_population,
                                        generations=src.design_generations)
    print(f"threshold sigma* = {ga_threshold(dist):.4f}  design rate = {dist.rate:.4f}")
    write_distribution(dist, args.dist_out)
    print(f"wrote {args.dist_out}")
    if args.alist_out:
        code = peg_construct(dist, sysp.nc, sysp.bc, src.peg_seed)
        write_alist(code, args.alist_out)
        print(f"wrote {args.alist_out} ({code.n}, {code.k}) girth {code.girth()}")
    if args.dictionary_out:
        harness.build_dictionary(cfg).save(args.dictionary_out)
        print(f"wrote {args.dictionary_out} ({sysp.n_p} x {sysp.num_sequences}, seed {cfg.dictionary_seed})")
    return 0


def cmd_simulate(args) -> int:
    cfg = _config(args)
    record = harness.run_point(cfg)
    out = cfg.output
    if not out:
        raise ValueError("no output path: pass --output or set output in [experiment]")
    harness.write_report([record], out)
    print(f"ka={record.ka} ebn0_db={record.ebn0_db} pupe={record.pupe:.4f} "
          f"+/- {record.pupe_ci95:.4f} -> {out}")
    return 0


def cmd_sweep(args) -> int:
    cfg = _config(args)
    out = cfg.output
    if not out:
        raise ValueError("no output path: pass --output or set output in [experiment]")
    code = harness.build_code(cfg)
    dictionary = harness.build_dictionary(cfg)
    kas = _parse_list(args.ka_list, int) if args.ka_list else [cfg.system.ka]
    records = []
    if args.bisect:
        for ka in kas:
            def evaluate(ebn0, ka=ka):
                rec = harness.run_point(cfg.with_point(ka, ebn0), code, dictionary)
                records.append(rec)
                log.info("ka=%d ebn0=%.3f pupe=%.4f", ka, ebn0, rec.pupe)
                return rec.pupe
            est, _ = harness.find_min_ebn0(evaluate, args.lo, args.hi, args.target, args.resolution)
            print(f"ka={ka} required_ebn0_db={est:.3f}")
    else:
        if not args.ebn0_list:
            raise ValueError("grid sweep needs --ebn0-list (or use --bisect)")
        for ka in kas:
            for eb in _parse_list(args.ebn0_list, float):
                rec = harness.run_point(cfg.with_point(ka, eb), code, dictionary)
                records.append(rec)
                print(f"ka={ka} ebn0_db={eb} pupe={rec.pupe:.4f}")
    harness.write_report(records, out)
    print(f"wrote {out}")
    return 0


def cmd_trace(args) -> int:
    cfg = _config(args)
    code = harness.build_code(cfg)
    dictionary = harness.build_dictionary(cfg)
    sysp = cfg.system
    rng = np.random.default_rng(harness.trial_seed(cfg.base_seed, args.trial))
    scenario = random_scenario(sysp, code, rng)
    frame = transmit(scenario, dictionary, sysp.sigma2, rng)
    outcome = decode(frame, dictionary, code, sysp.ka, cfg.receiver)
    text = format_trace(outcome)
    if cfg.output:
        Path(cfg.output).write_text(text)
    sys.stdout.write(text)
    print(f"# reason: {outcome.reason}; per-user error {per_user_error(scenario, outcome):.4f}",
          file=sys.stderr)
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="umac", description=__doc__)
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("design", help="optimise a degree distribution and build a PEG code")
    _add_config_flags(p)
    p.add_argument("--rate", type=float, help="target rate (default: bc / nc)")
    p.add_argument("--dist-out", default="code.dist")
    p.add_argument("--alist-out", default="code.alist", help="empty string to skip")
    p.add_argument("--dictionary-out", default="", help="also export the spreading dictionary (binary)")
    p.set_defaults(func=cmd_design)

    p = sub.add_parser("simulate", help="one sweep point to CSV")
    _add_config_flags(p)
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("sweep", help="grid or bisection sweep to CSV")
    _add_config_flags(p)
    p.add_argument("--ka-list", help="comma-separated Ka values")
    p.add_argument("--ebn0-list", help="comma-separated Eb/N0 values (grid mode)")
    p.add_argument("--bisect", action="store_true", help="search the minimum Eb/N0 per Ka")
    p.add_argument("--lo", type=float, default=-1.0)
    p.add_argument("--hi", type=float, default=4.0)
    p.add_argument("--target", type=float, default=0.05)
    p.add_argument("--resolution", type=float, default=0.05)
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("trace", help="decode one frame and print the per-round trace")
    _add_config_flags(p)
    p.add_argument("--trial", type=int, default=0, help="trial index (seed derivation)")
    p.set_defaults(func=cmd_trace)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(message)s")
    try:
        return args.func(args)
    except (ValueError, OSError, RuntimeError) as exc:
        print(f"umac: error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
