"""Command-line entry point: ``micmac {synth,crossval,select,compare,report}``.

Every option may also come from an INI config file (``--config``); command
line flags take precedence. Exit codes: 0 ok, 1 runtime failure, 2 usage.
"""

from __future__ import annotations

import argparse
import configparser
import logging
import os
import sys
import time
from dataclasses import replace
from pathlib import Path

from micmac.crossval import DEFAULT_SCHEMES, Scheme, make_fold_plan, run_experiments
from micmac.dataset import DatasetError, SubjectLeakageError, load_dataset, save_dataset
from micmac.learners import LearnerConfig
from micmac.seeding import derive_seed
from micmac.selectors import SelectorConfig, micmac_select, preselect_rf, write_trace
from micmac.synth import SynthConfig, generate, save_ground_truth

log = logging.getLogger("micmac")

# option dest -> (config section, type, default)
SYNTH_OPTS = {
    "subjects": ("synth", int, 60),
    "samples": ("synth", int, 9),
    "features": ("synth", int, None),
    "informative": ("synth", int, 12),
    "effect": ("synth", float, 1.5),
    "subject_std": ("synth", float, 1.0),
    "copies": ("synth", int, 1),
    "rho": ("synth", float, 0.8),
    "synth_seed": ("synth", int, 0),
}
RUN_OPTS = {
    "data": ("data", str, None),
    "schemes": ("run", str, None),
    "repeats": ("run", int, 10),
    "outer": ("run", int, 10),
    "inner": ("run", int, 9),
    "seed": ("run", int, 0),
    "out": ("run", str, "results"),
    "threshold": ("selection", float, 0.0),
    "epsilon": ("selection", float, 1e-6),
    "max_selected": ("selection", int, 100),
    "preselect": ("selection", int, 100),
    "k_max": ("selection", int, 100),
    "knn_k": ("learners", int, 3),
    "svm_c": ("learners", float, 1.0),
    "svm_gamma": ("learners", float, None),
    "svm_tol": ("learners", float, 1e-3),
    "rf_trees": ("learners", int, 100),
    "rf_depth": ("learners", int, 10),
}
# config key names inside a section; synth seed is spelled "seed" there
_CONFIG_KEY = {"synth_seed": "seed"}


class UsageError(Exception):
    pass


def _jobs_default() -> int:
    try:
        return max(1, int(os.environ.get("MICMAC_JOBS", "1")))
    except ValueError:
        return 1


def _read_config(path, known: dict) -> dict:
    if path is None:
        return {}
    cp = configparser.ConfigParser()
    if not cp.read(path, encoding="utf-8"):
        raise UsageError(f"cannot read config file {path}")
    allowed = {}
    for dest, (section, typ, _) in known.items():
        allowed[(section, _CONFIG_KEY.get(dest, dest))] = (dest, typ)
    values = {}
    for section in cp.sections():
        for key, raw in cp.items(section):
            if (section, key) not in allowed:
                raise UsageError(f"invalid config key [{section}] {key}")
            dest, typ = allowed[(section, key)]
            try:
                values[dest] = typ(raw)
            except ValueError:
                raise UsageError(f"config key [{section}] {key}: cannot parse {raw!r}") from None
    values["_sections"] = set(cp.sections())
    return values


def _resolve(args, known: dict) -> dict:
    """Merge flags over config values over defaults."""
    cfg = _read_config(getattr(args, "config", None), known)
    out = {}
    for dest, (_, _, default) in known.items():
        flag = getattr(args, dest, None)
        out[dest] = flag if flag is not None else cfg.get(dest, default)
    out["_sections"] = cfg.get("_sections", set())
    return out


def _write_config(values: dict, known: dict, path: Path) -> None:
    cp = configparser.ConfigParser()
    for dest, (section, _, _) in known.items():
        v = values.get(dest)
        if v is None:
            continue
        if not cp.has_section(section):
            cp.add_section(section)
        cp.set(section, _CONFIG_KEY.get(dest, dest), str(v))
    with path.open("w", encoding="utf-8") as fh:
        cp.write(fh)


def _synth_config(v: dict) -> SynthConfig:
    if v["features"] is None:
        raise UsageError("--features is required")
    try:
        return SynthConfig(n_subjects=v["subjects"], samples_per_subject=v["samples"],
                           n_features=v["features"], n_informative=v["informative"],
                           effect_size=v["effect"], subject_effect_std=v["subject_std"],
                           n_redundant_copies=v["copies"], rho=v["rho"], seed=v["synth_seed"])
    except ValueError as exc:
        raise UsageError(str(exc)) from None


def _selector_config(v: dict, wrapper: str = "knn") -> SelectorConfig:
    try:
        learner = LearnerConfig(kind=wrapper, knn_k=v["knn_k"], svm_c=v["svm_c"], svm_gamma=v["svm_gamma"],
                                svm_tol=v["svm_tol"])
        forest = LearnerConfig(kind="rf", rf_trees=v["rf_trees"], rf_max_depth=v["rf_depth"])
        return SelectorConfig(wrapper=learner, threshold=v["threshold"], max_selected=v["max_selected"],
                              epsilon=v["epsilon"], preselect_n=v["preselect"], forest=forest)
    except ValueError as exc:
        raise UsageError(str(exc)) from None


def _schemes(v: dict) -> list[Scheme]:
    raw = v["schemes"]
    if not raw:
        return list(DEFAULT_SCHEMES)
    items = raw if isinstance(raw, list) else [s for s in str(raw).replace(";", ",").split(",")]
    out = []
    for item in items:
        for s in str(item).split(","):
            if s.strip():
                try:
                    out.append(Scheme.parse(s))
                except ValueError as exc:
                    raise UsageError(str(exc)) from None
    return out


def _load_data(v: dict):
    has_synth = "synth" in v["_sections"] or v.get("features") is not None
    if v["data"] and has_synth:
        raise UsageError("give exactly one data source: --data or a [synth] config section")
    if v["data"]:
        return load_dataset(v["data"])
    if has_synth:
        d, _ = generate(_synth_config(v))
        return d
    raise UsageError("no data source: pass --data or a config with a [synth] section")


# ------------------------------------------------------------------ commands

def cmd_synth(args) -> int:
    v = _resolve(args, SYNTH_OPTS)
    cfg = _synth_config(v)
    d, truth = generate(cfg)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    save_dataset(d, out / "data.csv")
    save_ground_truth(truth, d.feature_names, out / "ground_truth.csv")
    print(f"wrote {out / 'data.csv'}: {d.n_samples} samples x {d.n_features} features, "
          f"{len(d.subjects)} subjects, {len(truth.informative)} informative, "
          f"{len(truth.duplicates)} duplicates")
    return 0


def cmd_crossval(args) -> int:
    from micmac.report import emit_report

    known = {**RUN_OPTS, **SYNTH_OPTS}
    v = _resolve(args, known)
    if args.scheme:
        v["schemes"] = args.scheme
    schemes = _schemes(v)
    cfg = _selector_config(v)
    d = _load_data(v)
    jobs = args.jobs if args.jobs is not None else _jobs_default()
    t0 = time.perf_counter()
    report = run_experiments(d, schemes, n_repeats=v["repeats"], base_seed=v["seed"], cfg=cfg,
                             n_outer=v["outer"], n_inner=v["inner"], k_max=v["k_max"], jobs=jobs)
    out = Path(v["out"])
    emit_report(report, out, figures=not args.no_png)
    v["schemes"] = ",".join(s.spec for s in schemes)
    if v["data"]:
        # the saved config names one data source, so synth keys are dropped
        v["data"] = str(Path(v["data"]).resolve())
        known = RUN_OPTS
    _write_config(v, known, out / "run_config.ini")
    print(f"{'scheme':<22}{'best selection':>24}{'top-12 selection':>20}")
    for row in report.summary_rows():
        flag = " (approximate)" if report.results[row["scheme"]].approximate else ""
        print(f"{row['scheme']:<22}{row['best_acc']:>12.3f} +- {row['best_acc_std']:.3f} ({row['best_k']:>3})"
              f"{row['top12_acc']:>12.3f} +- {row['top12_std']:.3f}{flag}")
    print(f"reports in {out} ({time.perf_counter() - t0:.1f} s)")
    return 0


def cmd_select(args) -> int:
    v = _resolve(args, {**RUN_OPTS, **SYNTH_OPTS})
    cfg = _selector_config(v, wrapper=args.wrapper)
    d = _load_data(v)
    plan = make_fold_plan(d.subject_ids, d.labels, v["outer"], v["inner"], seed=v["seed"])
    if not 0 <= args.fold < plan.n_outer or not 0 <= args.inner_fold < v["inner"]:
        raise UsageError("fold index out of range")
    fold = plan.outer[args.fold]
    F0 = preselect_rf(d.for_subjects(fold.train_val), cfg, seed=derive_seed(v["seed"], 0, args.fold))
    tr, va = fold.inner[args.inner_fold]
    trace = micmac_select(d.for_subjects(tr), d.for_subjects(va), F0, cfg)
    if args.trace_out:
        write_trace(trace, args.trace_out)
    print("step,feature_name,merit,phi_after")
    for i, (f, mu, phi) in enumerate(zip(trace.features, trace.merits, trace.phis)):
        print(f"{i},{f},{mu:.6g},{phi:.6g}")
    print(f"stopped: {trace.reason}")
    return 0


def _report_groups(paths, metric: str, only) -> dict:
    from micmac.report import read_experiments

    groups = {}
    counts: dict = {}
    for p in paths:
        p = Path(p)
        exp = p / "experiments.csv" if p.is_dir() else p.with_name("experiments.csv")
        if not exp.exists():
            raise FileNotFoundError(f"{exp}: no per-experiment accuracies (experiments.csv)")
        label = (p if p.is_dir() else p.parent).resolve().name or str(p)
        counts[label] = counts.get(label, 0) + 1
        if counts[label] > 1:
            label = f"{label}#{counts[label]}"
        for scheme, vals in read_experiments(exp).items():
            if only and scheme not in only:
                continue
            groups[f"{label}/{scheme}"] = vals[f"{metric}_acc"]
    return groups


def cmd_compare(args) -> int:
    from micmac.report import write_tukey
    from micmac.stats import tukey_hsd

    only = set(args.scheme or [])
    groups = _report_groups(args.reports, args.metric, only)
    if len(groups) < 2:
        print("error: need >= 2 groups to compare", file=sys.stderr)
        return 1
    sizes = {len(v) for v in groups.values()}
    if len(sizes) > 1:
        log.warning("unequal repeat counts %s; using the Tukey-Kramer harmonic-mean adjustment", sorted(sizes))
    pairs = tukey_hsd(groups)
    out = Path(args.out)
    if out.parent:
        out.parent.mkdir(parents=True, exist_ok=True)
    write_tukey(pairs, out)
    for t in pairs:
        print(f"{t.group_a} vs {t.group_b}: q={t.q:.4f} p={t.p:.4f}")
    return 0


def cmd_report(args) -> int:
    from micmac.report import read_curves, read_summary, render_figures

    out = Path(args.dir)
    rows = read_summary(out / "report.csv")
    if not rows:
        print("error: no results", file=sys.stderr)
        return 1
    curves = read_curves(out, [r["scheme"] for r in rows])
    render_figures(curves, rows, out, png=not args.no_png)
    for r in rows:
        print(f"{r['scheme']:<22}{r['best_acc']:.3f} +- {r['best_acc_std']:.3f} ({r['best_k']})  "
              f"top-12 {r['top12_acc']:.3f} +- {r['top12_std']:.3f}")
    return 0


# ------------------------------------------------------------------ parser

def _add_run_options(p):
    p.add_argument("--config", help="INI file with [data]/[synth]/[run]/[selection]/[learners] sections")
    p.add_argument("--data", help="dataset CSV")
    p.add_argument("--outer", type=int, help="outer folds (default 10)")
    p.add_argument("--inner", type=int, help="inner folds (default 9)")
    p.add_argument("--seed", type=int, help="root seed (default 0)")
    p.add_argument("--threshold", type=float, help="merit threshold T (default 0)")
    p.add_argument("--epsilon", type=float, help="merit denominator floor (default 1e-6)")
    p.add_argument("--max-selected", dest="max_selected", type=int)
    p.add_argument("--preselect", type=int, help="features kept by preselection (default 100)")
    p.add_argument("--knn-k", dest="knn_k", type=int)
    p.add_argument("--svm-c", dest="svm_c", type=float)
    p.add_argument("--svm-gamma", dest="svm_gamma", type=float)
    p.add_argument("--svm-tol", dest="svm_tol", type=float)
    p.add_argument("--rf-trees", dest="rf_trees", type=int)
    p.add_argument("--rf-depth", dest="rf_depth", type=int)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="micmac", description=__doc__.splitlines()[0])
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("synth", help="generate a synthetic dataset with planted features")
    p.add_argument("--config")
    p.add_argument("--subjects", type=int)
    p.add_argument("--samples", type=int, help="samples per subject (default 9)")
    p.add_argument("--features", type=int)
    p.add_argument("--informative", type=int)
    p.add_argument("--effect", type=float)
    p.add_argument("--subject-std", dest="subject_std", type=float)
    p.add_argument("--copies", type=int, help="near-duplicates per informative feature")
    p.add_argument("--rho", type=float)
    p.add_argument("--seed", dest="synth_seed", type=int)
    p.add_argument("--out", default=".", help="output directory (default .)")
    p.set_defaults(func=cmd_synth)

    p = sub.add_parser("crossval", help="run repeated nested cross-validation experiments")
    _add_run_options(p)
    p.add_argument("--scheme", action="append",
                   help="scheme such as micmac:knn:knn or mrmr:svm (repeatable; default: all eight)")
    p.add_argument("--repeats", type=int, help="experiments (default 10)")
    p.add_argument("--k-max", dest="k_max", type=int, help="largest k on the accuracy curve (default 100)")
    p.add_argument("--out", help="output directory (default results)")
    p.add_argument("--jobs", type=int, help="worker processes (default $MICMAC_JOBS or 1)")
    p.add_argument("--no-png", action="store_true", help="skip matplotlib figures")
    p.set_defaults(func=cmd_crossval)

    p = sub.add_parser("select", help="print the MICMAC trace for a single inner fold")
    _add_run_options(p)
    p.add_argument("--wrapper", choices=("knn", "svm"), default="knn")
    p.add_argument("--fold", type=int, default=0, help="outer fold index")
    p.add_argument("--inner-fold", dest="inner_fold", type=int, default=0)
    p.add_argument("--trace-out", dest="trace_out", help="write the trace CSV here")
    p.set_defaults(func=cmd_select)

    p = sub.add_parser("compare", help="Tukey HSD across report directories")
    p.add_argument("reports", nargs="+", help="report directories (or their report.csv)")
    p.add_argument("--metric", choices=("best", "top12"), default="best")
    p.add_argument("--scheme", action="append", help="restrict to these scheme names")
    p.add_argument("--out", default="tukey.csv")
    p.set_defaults(func=cmd_compare)

    p = sub.add_parser("report", help="re-render figures and print the summary of a report directory")
    p.add_argument("dir")
    p.add_argument("--no-png", action="store_true")
    p.set_defaults(func=cmd_report)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except UsageError as exc:
        parser.print_usage(sys.stderr)
        print(f"{parser.prog}: error: {exc}", file=sys.stderr)
        return 2
    except SubjectLeakageError as exc:
        print(f"fatal: subject leakage detected: {exc}", file=sys.stderr)
        return 1
    except (DatasetError, FileNotFoundError, ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
