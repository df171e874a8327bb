"""Command-line entry point.

Subcommands ``normalize``, ``select``, ``cv``, ``holdout``, ``sweep`` and
``synth``. Experiment settings come from a flat ``key = value`` config file
(``#`` starts a comment, relative paths resolve against the file's
directory); command-line flags override it. The seed falls back to the
``PU_NEGSEL_SEED`` environment variable when neither gives one.

Exit codes: 0 success, 1 usage error, 2 data error, 3 convergence warning
under ``--strict``.
"""

from __future__ import annotations

import argparse
import logging
import os
import sys
import typing
import warnings
from dataclasses import asdict, fields, replace
from pathlib import Path

import numpy as np

from . import __version__
from .exceptions import DataError
from .harness import ExperimentConfig, header_line, load_dataset, select_terms, sweep_s, write_report
from .harness import run_cv, run_holdout
from .labels import temporal_sets
from .learner import make_learner
from .negsel import SelectionConfig, rho, select_negatives, trace_rows
from .netio import STRING_SCALE, load_network, normalize, write_network
from .svm import ConvergenceWarning
from .synth import SynthParams, generate, write_instance

logger = logging.getLogger("pu_negsel")

EXIT_OK, EXIT_USAGE, EXIT_DATA, EXIT_CONVERGENCE = 0, 1, 2, 3
SEED_ENV = "PU_NEGSEL_SEED"
PATH_KEYS = ("network", "annotations_old", "annotations_new", "out_dir")
DEFAULT_S_VALUES = "10,25,50,100,150"


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        raise UsageError(f"{self.prog}: error: {message}")


def _coerce(key: str, text: str):
    tp = typing.get_type_hints(ExperimentConfig)[key]
    args = [a for a in typing.get_args(tp) if a is not type(None)] or [tp]
    base = args[0]
    if text.lower() in ("none", "na", "") and type(None) in typing.get_args(tp):
        return None
    if base is bool:
        low = text.lower()
        if low in ("1", "true", "yes", "on"):
            return True
        if low in ("0", "false", "no", "off"):
            return False
        raise UsageError(f"{key}: expected a boolean, got {text!r}")
    try:
        return base(text)
    except ValueError:
        raise UsageError(f"{key}: cannot parse {text!r} as {base.__name__}") from None


def read_config(path) -> dict:
    """Parse a flat ``key = value`` file into ExperimentConfig keyword arguments."""
    path = Path(path)
    known = {f.name for f in fields(ExperimentConfig)}
    out = {}
    try:
        lines = path.read_text(encoding="utf-8").splitlines()
    except OSError as exc:
        raise DataError(f"cannot read config: {exc.strerror}", path) from None
    for lineno, line in enumerate(lines, 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        key, sep, value = line.partition("=")
        key, value = key.strip(), value.strip()
        if not sep or not key:
            raise UsageError(f"{path}:{lineno}: expected 'key = value'")
        if key not in known:
            raise UsageError(f"{path}:{lineno}: unknown config key {key!r}")
        if key in PATH_KEYS and value:
            value = str((path.parent / value).resolve())
        out[key] = _coerce(key, value)
    return out


def format_config(cfg: ExperimentConfig) -> str:
    """The inverse of :func:`read_config`, used to log and save resolved settings."""
    lines = [header_line(cfg)]
    for k, v in asdict(cfg).items():
        lines.append(f"{k} = {'none' if v is None else v}\n")
    return "".join(lines)


def resolve_config(args) -> ExperimentConfig:
    values = read_config(args.config) if args.config else {}
    overrides = {"B": args.B, "s": args.s, "learner": args.learner, "mode": args.mode,
                 "seed": args.seed, "workers": args.workers, "out_dir": args.out}
    for key, val in overrides.items():
        if val is not None:
            values[key] = val
    if args.B is not None:
        values.pop("B_frac", None)
    if "seed" not in values and os.environ.get(SEED_ENV):
        try:
            values["seed"] = int(os.environ[SEED_ENV])
        except ValueError:
            raise UsageError(f"{SEED_ENV} must be an integer") from None
    if "workers" not in values:
        values["workers"] = os.cpu_count() or 1
    if values.get("mode") == "pnosub":
        values.pop("B", None)
        values.pop("B_frac", None)
    try:
        cfg = ExperimentConfig(**values)
    except (TypeError, ValueError) as exc:
        raise UsageError(str(exc)) from None
    if cfg.network is None or cfg.annotations_old is None:
        raise UsageError("the config must name a network and annotations_old")
    return cfg


def _out_dir(cfg: ExperimentConfig) -> Path:
    out = Path(cfg.out_dir or ".")
    out.mkdir(parents=True, exist_ok=True)
    return out


def _log_config(cfg: ExperimentConfig, out: Path) -> None:
    text = format_config(cfg)
    logger.info("resolved config:\n%s", text.rstrip())
    (out / "resolved.cfg").write_text(text, encoding="utf-8")


def cmd_normalize(args) -> int:
    cfg = resolve_config(args)
    out = _out_dir(cfg)
    _log_config(cfg, out)
    g = normalize(load_network(cfg.network, threshold=cfg.threshold),
                  scale=STRING_SCALE if cfg.scale else None)
    path = out / "network_normalized.tsv"
    write_network(g, path, header=header_line(cfg))
    logger.info("%d nodes, %d edges -> %s", g.n, g.W.nnz // 2, path)
    return EXIT_OK


def cmd_select(args) -> int:
    """Select negatives for every term from all of its non-positive nodes."""
    cfg = resolve_config(args)
    if cfg.mode != "al":
        raise UsageError("select runs active selection; use --mode al")
    out = _out_dir(cfg)
    _log_config(cfg, out)
    data = load_dataset(cfg)
    terms = select_terms(data, cfg)
    if args.term:
        terms = [t for t in terms if t.term_id in set(args.term)]
        if not terms:
            raise DataError(f"none of the requested terms pass the filters: {args.term}")
    g = data.graph
    learner = make_learner(cfg.learner_config())
    header = header_line(cfg)
    with open(out / "selected.tsv", "w", encoding="utf-8", newline="\n") as sel, \
            open(out / "trace.tsv", "w", encoding="utf-8", newline="\n") as tr:
        sel.write(header + "term\tnode_id\n")
        tr.write(header + "term\titeration\tnode_id\tconfidence\tis_noisy\n")
        for t in terms:
            pos = np.flatnonzero(t.y_old == 1)
            neg = np.flatnonzero(t.y_old == 0)
            budget = cfg.budget_for(len(neg))
            chosen, trace = select_negatives(
                g, pos, neg, SelectionConfig(budget, cfg.s, rng_seed=cfg.seed), learner)
            noisy = temporal_sets(t).noisy
            for i in chosen:
                sel.write(f"{t.term_id}\t{g.node_ids[i]}\n")
            for row in trace_rows(t.term_id, trace, g.node_ids, noisy):
                tr.write("\t".join(map(str, row)) + "\n")
            msg = f"{t.term_id}: {len(chosen)} negatives, {trace.retrain_count} retrains"
            if len(noisy):
                msg += f", rho={rho(trace, noisy):.3f}"
            logger.info(msg)
    return EXIT_OK


def _evaluate(args, runner) -> int:
    cfg = resolve_config(args)
    out = _out_dir(cfg)
    _log_config(cfg, out)
    data = load_dataset(cfg)
    report = runner(cfg, data)
    write_report(report, out, data.graph.node_ids, timing=args.timing)
    c = report.corpus
    logger.info("%s: %d terms  P=%.4f R=%.4f F=%.4f AUPR=%.4f Fmax=%.4f rho=%.4f",
                report.kind, c["n_terms"], c["P"], c["R"], c["F"], c["AUPR"], c["Fmax"], c["rho"])
    return EXIT_OK


def cmd_cv(args) -> int:
    return _evaluate(args, run_cv)


def cmd_holdout(args) -> int:
    return _evaluate(args, run_holdout)


def cmd_sweep(args) -> int:
    cfg = resolve_config(args)
    try:
        s_values = [int(v) for v in args.s_values.split(",") if v.strip()]
    except ValueError:
        raise UsageError(f"--s-values must be comma-separated integers, got {args.s_values!r}")
    if not s_values or min(s_values) < 1:
        raise UsageError("--s-values needs positive batch sizes")
    cfg = replace(cfg, mode="al")
    out = _out_dir(cfg)
    _log_config(cfg, out)
    points = sweep_s(cfg, s_values)
    with open(out / "sweep.tsv", "w", encoding="utf-8", newline="\n") as fh:
        fh.write(header_line(cfg) + "s\tF\tretrains\texpected_retrains\twall_time\n")
        for p in points:
            fh.write(f"{p.s}\t{p.mean_f:.10g}\t{p.retrains}\t{p.expected_retrains}\t"
                     f"{p.wall_time:.6g}\n")
            logger.info("s=%d F=%.4f retrains=%d (expected %d) %.2fs", p.s, p.mean_f,
                        p.retrains, p.expected_retrains, p.wall_time)
    return EXIT_OK


def cmd_synth(args) -> int:
    seed = args.seed
    if seed is None:
        seed = int(os.environ.get(SEED_ENV, 0) or 0)
    try:
        params = SynthParams(n=args.n, clusters=args.clusters, p_in=args.p_in, p_bg=args.p_bg,
                             p_out=args.p_out, p_noisy=args.p_noisy, n_terms=args.terms,
                             n_pos=args.positives, noise=args.noise, seed=seed)
        params.check()
    except ValueError as exc:
        raise UsageError(str(exc)) from None
    paths = write_instance(generate(params), params, args.out or ".")
    logger.info("synthetic instance written; config at %s", paths["config"])
    return EXIT_OK


def _add_run_flags(p):
    p.add_argument("--config", help="flat key = value config file")
    p.add_argument("--B", type=int, help="negative budget")
    p.add_argument("--s", type=int, help="batch size of each active selection step")
    p.add_argument("--learner", choices=("svm", "rf"))
    p.add_argument("--mode", choices=("al", "pnosub", "prndsub"))
    p.add_argument("--seed", type=int)
    p.add_argument("--workers", type=int, help="worker processes (default: all CPUs)")
    p.add_argument("--out", help="output directory")
    p.add_argument("--strict", action="store_true",
                   help="treat solver convergence warnings as errors (exit 3)")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="pu-negsel", description=__doc__.split("\n\n")[0])
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", parser_class=_Parser, required=True)

    p = sub.add_parser("normalize", help="threshold and normalize a network")
    _add_run_flags(p)
    p.set_defaults(func=cmd_normalize)

    p = sub.add_parser("select", help="actively select negatives for each term")
    _add_run_flags(p)
    p.add_argument("--term", action="append", help="restrict to this term (repeatable)")
    p.set_defaults(func=cmd_select)

    for name, func, text in (("cv", cmd_cv, "k-fold cross-validation"),
                             ("holdout", cmd_holdout, "temporal holdout evaluation")):
        p = sub.add_parser(name, help=text)
        _add_run_flags(p)
        p.add_argument("--timing", action="store_true", help="also write timing.tsv")
        p.set_defaults(func=func)

    p = sub.add_parser("sweep", help="active-learning CV for several batch sizes")
    _add_run_flags(p)
    p.add_argument("--s-values", default=DEFAULT_S_VALUES)
    p.set_defaults(func=cmd_sweep)

    d = SynthParams()
    p = sub.add_parser("synth", help="write a planted-partition test instance")
    p.add_argument("--n", type=int, default=d.n)
    p.add_argument("--clusters", type=int, default=d.clusters)
    p.add_argument("--p-in", type=float, default=d.p_in)
    p.add_argument("--p-bg", type=float, default=d.p_bg)
    p.add_argument("--p-out", type=float, default=d.p_out)
    p.add_argument("--p-noisy", type=float, default=d.p_noisy)
    p.add_argument("--terms", type=int, default=d.n_terms)
    p.add_argument("--positives", type=int, default=d.n_pos)
    p.add_argument("--noise", type=int, default=None,
                   help="planted noisy nodes per term (default: 10%% of the negatives)")
    p.add_argument("--seed", type=int)
    p.add_argument("--out", help="output directory")
    p.set_defaults(func=cmd_synth, strict=False)
    return parser


def main(argv=None) -> int:
    logging.basicConfig(level=logging.INFO, format="%(levelname)s %(name)s: %(message)s",
                        stream=sys.stderr)
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except UsageError as exc:
        print(exc, file=sys.stderr)
        return EXIT_USAGE
    except SystemExit as exc:  # --help / --version
        return EXIT_OK if not exc.code else EXIT_USAGE
    if args.verbose:
        logger.setLevel(logging.DEBUG)
    try:
        with warnings.catch_warnings():
            if args.strict:
                warnings.simplefilter("error", ConvergenceWarning)
            return args.func(args)
    except UsageError as exc:
        print(f"pu-negsel: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except ConvergenceWarning as exc:
        print(f"pu-negsel: convergence failure: {exc}", file=sys.stderr)
        return EXIT_CONVERGENCE
    except (DataError, OSError, ValueError) as exc:
        print(f"pu-negsel: data error: {exc}", file=sys.stderr)
        return EXIT_DATA


if __name__ == "__main__":
    sys.exit(main())
