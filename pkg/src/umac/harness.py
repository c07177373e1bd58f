"""Seeded Monte Carlo experiments, minimum-Eb/N0 search and CSV reports."""

from __future__ import annotations

import configparser
import csv
import math
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field, fields, replace
from functools import lru_cache
from pathlib import Path

import numpy as np

from .ldpc.code import LdpcCode, read_alist
from .ldpc.design import optimize_degree_distribution, read_distribution
from .ldpc.peg import peg_construct
from .phy import SignatureDictionary, SystemParams, generate_dictionary, random_scenario, transmit
from .receiver import ReceiverConfig, decode, per_user_error

__all__ = [
    "MIX_MULTIPLIERS",
    "mix64",
    "trial_seed",
    "CodeSource",
    "ExperimentConfig",
    "TrialRecord",
    "SweepRecord",
    "load_config",
    "config_from_mapping",
    "build_code",
    "build_dictionary",
    "run_trial",
    "run_point",
    "aggregate",
    "find_min_ebn0",
    "BracketExhausted",
    "write_report",
    "read_report",
    "REPORT_HEADER",
]

MASK64 = (1 << 64) - 1
# splitmix64 finaliser: golden-ratio increment, then two xorshift-multiply rounds
MIX_INCREMENT = 0x9E3779B97F4A7C15
MIX_MULTIPLIERS = (0xBF58476D1CE4E5B9, 0x94D049BB133111EB)

REPORT_HEADER = ["ka", "ebn0_db", "trials", "pupe", "pupe_ci95", "mean_outer_rounds", "seconds"]


def mix64(x: int) -> int:
    z = (x + MIX_INCREMENT) & MASK64
    z = ((z ^ (z >> 30)) * MIX_MULTIPLIERS[0]) & MASK64
    z = ((z ^ (z >> 27)) * MIX_MULTIPLIERS[1]) & MASK64
    return z ^ (z >> 31)


def trial_seed(base_seed: int, index: int) -> int:
    return mix64((base_seed ^ index) & MASK64)


@dataclass(frozen=True)
class CodeSource:
    """Where the LDPC code comes from: an alist file, a distribution file, or a fresh design."""

    alist: str = ""
    distribution: str = ""
    design_max_var_degree: int = 6
    design_seed: int = 1
    design_population: int = 20
    design_generations: int = 40
    peg_seed: int = 1


@dataclass(frozen=True)
class ExperimentConfig:
    system: SystemParams = field(default_factory=SystemParams)
    receiver: ReceiverConfig = field(default_factory=ReceiverConfig)
    code: CodeSource = field(default_factory=CodeSource)
    trials: int = 100
    base_seed: int = 0
    dictionary_seed: int = 0
    workers: int = 1
    timing: bool = False
    output: str = ""

    def __post_init__(self):
        if self.trials < 1:
            raise ValueError("trials must be >= 1")
        if self.workers < 1:
            raise ValueError("workers must be >= 1")

    def with_point(self, ka: int | None = None, ebn0_db: float | None = None) -> "ExperimentConfig":
        changes = {}
        if ka is not None:
            changes["ka"] = ka
        if ebn0_db is not None:
            changes["ebn0_db"] = ebn0_db
        return replace(self, system=replace(self.system, **changes))


@dataclass
class TrialRecord:
    seed: int
    ka: int
    ebn0_db: float
    missed: int
    outer_rounds: int
    seconds: float


@dataclass
class SweepRecord:
    ka: int
    ebn0_db: float
    trials: int
    pupe: float
    pupe_ci95: float
    mean_outer_rounds: float
    seconds: float


# config file ----------------------------------------------------------------

_SECTION_TYPES = {
    "system": SystemParams,
    "receiver": ReceiverConfig,
}
_EXPERIMENT_KEYS = {f.name: f.type for f in fields(ExperimentConfig)
                    if f.name not in ("system", "receiver", "code")}
_CODE_KEYS = {f.name: f.type for f in fields(CodeSource)}


def _convert(value, type_name: str, key: str):
    type_name = str(type_name)
    try:
        if type_name == "bool":
            if isinstance(value, bool):
                return value
            lowered = str(value).strip().lower()
            if lowered in ("1", "true", "yes", "on"):
                return True
            if lowered in ("0", "false", "no", "off"):
                return False
            raise ValueError(value)
        if type_name == "int":
            return int(value)
        if type_name == "float":
            return float(value)
        return str(value)
    except ValueError as exc:
        raise ValueError(f"config key {key!r}: cannot parse {value!r} as {type_name}") from exc


def config_from_mapping(sections: dict, base_dir: Path | None = None) -> ExperimentConfig:
    """Build a config from ``{section: {key: value}}``; unknown keys are errors."""
    unknown = set(sections) - {"system", "receiver", "experiment"}
    if unknown:
        raise ValueError(f"unknown config section(s): {sorted(unknown)}")
    built = {}
    for name, cls in _SECTION_TYPES.items():
        types = {f.name: f.type for f in fields(cls)}
        kwargs = {}
        for key, value in sections.get(name, {}).items():
            if key not in types:
                raise ValueError(f"unknown key {key!r} in [{name}]")
            kwargs[key] = _convert(value, types[key], key)
        built[name] = cls(**kwargs)
    exp_kwargs, code_kwargs = {}, {}
    for key, value in sections.get("experiment", {}).items():
        if key in _EXPERIMENT_KEYS:
            exp_kwargs[key] = _convert(value, _EXPERIMENT_KEYS[key], key)
        elif key in _CODE_KEYS:
            code_kwargs[key] = _convert(value, _CODE_KEYS[key], key)
        else:
            raise ValueError(f"unknown key {key!r} in [experiment]")
    for key in ("alist", "distribution"):
        path = code_kwargs.get(key)
        if path:
            p = Path(path)
            if base_dir is not None and not p.is_absolute():
                p = base_dir / p
            if not p.is_file():
                raise FileNotFoundError(f"{key} file {p} does not exist")
            code_kwargs[key] = str(p)
    return ExperimentConfig(system=built["system"], receiver=built["receiver"],
                            code=CodeSource(**code_kwargs), **exp_kwargs)


def read_config_sections(path) -> dict:
    parser = configparser.ConfigParser(interpolation=None)
    parser.optionxform = str
    read = parser.read(path)
    if not read:
        raise FileNotFoundError(f"config file {path} not found")
    return {s: dict(parser.items(s)) for s in parser.sections()}


def load_config(path) -> ExperimentConfig:
    """Read a ``[system] [receiver] [experiment]`` key=value config file."""
    return config_from_mapping(read_config_sections(path), Path(path).parent)


def dump_config(cfg: ExperimentConfig) -> str:
    sections = {"system": asdict(cfg.system), "receiver": asdict(cfg.receiver)}
    exp = {k: getattr(cfg, k) for k in _EXPERIMENT_KEYS}
    exp.update(asdict(cfg.code))
    sections["experiment"] = exp
    out = []
    for name, values in sections.items():
        out.append(f"[{name}]")
        out += [f"{k} = {v}" for k, v in values.items()]
        out.append("")
    return "\n".join(out)


# code and dictionary --------------------------------------------------------

@lru_cache(maxsize=8)
def _designed_code(rate: float, nc: int, k: int, src: CodeSource) -> LdpcCode:
    dist = optimize_degree_distribution(rate, src.design_max_var_degree, src.design_seed,
                                        population=src.design_population,
                                        generations=src.design_generations)
    return peg_construct(dist, nc, k, src.peg_seed)


@lru_cache(maxsize=8)
def _code_from_files(alist: str, distribution: str, nc: int, k: int, peg_seed: int) -> LdpcCode:
    if alist:
        return read_alist(alist)
    return peg_construct(read_distribution(distribution), nc, k, peg_seed)


def build_code(cfg: ExperimentConfig) -> LdpcCode:
    sysp, src = cfg.system, cfg.code
    if src.alist or src.distribution:
        code = _code_from_files(src.alist, src.distribution, sysp.nc, sysp.bc, src.peg_seed)
    else:
        code = _designed_code(sysp.code_rate, sysp.nc, sysp.bc, src)
    if (code.n, code.k) != (sysp.nc, sysp.bc):
        raise ValueError(f"code is ({code.n}, {code.k}) but the system needs ({sysp.nc}, {sysp.bc})")
    return code


def build_dictionary(cfg: ExperimentConfig) -> SignatureDictionary:
    sysp = cfg.system
    return generate_dictionary(sysp.n_p, sysp.bp, sysp.column_energy, cfg.dictionary_seed)


# Monte Carlo ----------------------------------------------------------------

def run_trial(cfg: ExperimentConfig, code: LdpcCode, dictionary: SignatureDictionary,
              index: int) -> TrialRecord:
    seed = trial_seed(cfg.base_seed, index)
    rng = np.random.default_rng(seed)
    sysp = cfg.system
    start = time.perf_counter()
    scenario = random_scenario(sysp, code, rng)
    frame = transmit(scenario, dictionary, sysp.sigma2, rng)
    outcome = decode(frame, dictionary, code, sysp.ka, cfg.receiver)
    missed = int(round(per_user_error(scenario, outcome) * sysp.ka))
    elapsed = time.perf_counter() - start if cfg.timing else 0.0
    return TrialRecord(seed, sysp.ka, sysp.ebn0_db, missed, len(outcome.rounds), elapsed)


def _trial_worker(args):
    cfg, code, dictionary, index = args
    return run_trial(cfg, code, dictionary, index)


def aggregate(cfg: ExperimentConfig, trials: list) -> SweepRecord:
    """Order-independent reduction of trial records into one sweep point."""
    ka = cfg.system.ka
    n = len(trials)
    missed = sum(t.missed for t in trials)
    pupe = missed / (n * ka)
    ci = 1.96 * math.sqrt(pupe * (1.0 - pupe) / (n * ka))
    rounds = sum(t.outer_rounds for t in trials) / n
    seconds = sum(t.seconds for t in trials)
    return SweepRecord(ka, cfg.system.ebn0_db, n, pupe, ci, rounds, seconds)


def run_point(cfg: ExperimentConfig, code: LdpcCode | None = None,
              dictionary: SignatureDictionary | None = None, return_trials: bool = False):
    """Run ``cfg.trials`` independent trials at one ``(ka, ebn0_db)`` point."""
    code = code if code is not None else build_code(cfg)
    dictionary = dictionary if dictionary is not None else build_dictionary(cfg)
    jobs = [(cfg, code, dictionary, i) for i in range(cfg.trials)]
    if cfg.workers > 1:
        with ProcessPoolExecutor(max_workers=cfg.workers) as pool:
            trials = list(pool.map(_trial_worker, jobs))
    else:
        trials = [_trial_worker(j) for j in jobs]
    record = aggregate(cfg, trials)
    return (record, trials) if return_trials else record


class BracketExhausted(RuntimeError):
    """The error-rate target is not crossed inside the search bracket."""


def find_min_ebn0(evaluate, lo: float, hi: float, target_pe: float = 0.05,
                  resolution_db: float = 0.05):
    """Bisection for the smallest Eb/N0 meeting ``target_pe``.

    ``evaluate(ebn0_db)`` returns a per-user error rate assumed non-increasing
    in Eb/N0.  Endpoints are not evaluated; at most
    ``ceil(log2((hi - lo) / resolution_db))`` evaluations are made.  Returns
    ``(estimate, evaluations)`` where ``evaluations`` lists ``(ebn0, pe)``.
    """
    if not hi > lo:
        raise ValueError("need hi > lo")
    if resolution_db <= 0:
        raise ValueError("resolution_db must be positive")
    evaluations = []
    a, b = lo, hi
    while b - a > resolution_db:
        mid = 0.5 * (a + b)
        pe = evaluate(mid)
        evaluations.append((mid, pe))
        if pe <= target_pe:
            b = mid
        else:
            a = mid
    met = [pe <= target_pe for _, pe in evaluations]
    if evaluations and all(met) and a == lo:
        raise BracketExhausted(f"target {target_pe} met at every point; crossing may lie below {lo} dB")
    if evaluations and not any(met) and b == hi:
        raise BracketExhausted(f"target {target_pe} never met; crossing lies above {b - resolution_db:.3f} dB "
                               f"or beyond {hi} dB")
    return 0.5 * (a + b), evaluations


# reports --------------------------------------------------------------------

def write_report(records, path) -> None:
    """CSV with :data:`REPORT_HEADER`, rows ordered by ``(ka, ebn0_db)``."""
    records = list(records)
    if not records:
        raise ValueError("no records to report")
    rows = sorted(records, key=lambda r: (r.ka, r.ebn0_db))
    path = Path(path)
    try:
        with path.open("w", newline="") as fh:
            writer = csv.writer(fh, lineterminator="\n")
            writer.writerow(REPORT_HEADER)
            for r in rows:
                writer.writerow([r.ka, repr(float(r.ebn0_db)), r.trials, repr(float(r.pupe)),
                                 repr(float(r.pupe_ci95)), repr(float(r.mean_outer_rounds)),
                                 repr(float(r.seconds))])
    except OSError as exc:
        raise OSError(f"cannot write report {path}: {exc.strerror or exc}") from exc


def read_report(path) -> list:
    with Path(path).open(newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader)
        if header != REPORT_HEADER:
            raise ValueError(f"{path}: unexpected header {header}")
        return [SweepRecord(int(r[0]), float(r[1]), int(r[2]), float(r[3]), float(r[4]),
                            float(r[5]), float(r[6])) for r in reader]
