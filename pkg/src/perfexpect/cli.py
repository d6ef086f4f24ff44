"""
Command-line entry point.

    perfexpect synth --out data --n-pieces 20 --rule linear
    perfexpect validate --corpus data/corpus.json
    perfexpect evaluate --corpus data/corpus.json --feature-set E+S --target bpr_d --out run1
    perfexpect compare --config run.json --target all --out run2
    perfexpect sensitivity --corpus data/corpus.json --model run1/model_0.json --out run1

Settings come from built-in defaults, then a flat JSON ``--config`` file,
then command-line flags (highest precedence).
"""
from __future__ import annotations

import argparse
import csv
import hashlib
import io
import json
import logging
import os
import platform
import sys
from dataclasses import asdict, dataclass, fields
from typing import List, Optional

import numpy as np

from . import __version__
from .corpus import group_by_onset, load_raw, read_corpus, validate_piece, write_corpus
from .errors import ConfigurationError, PerfExpectError
from .evaluation import (FoldModel, compare_feature_sets, evaluate_cv, feature_matrix,
                         fit_fold, melody_pitch_range, table1_rows)
from .expectancy import ExpectancyConfig, ExpectancyModel
from .features import FEATURE_SETS, uses_expectancy
from .regressor import TrainingConfig
from .sensitivity import average_maps, sensitivity_map
from .synth import RULES, synth_corpus
from .targets import TARGET_KINDS, all_targets

log = logging.getLogger("perfexpect")

COMMANDS = ("validate", "targets", "features", "expectancy", "train", "evaluate", "compare",
            "sensitivity", "synth")


@dataclass
class RunConfig:
    corpus: str = ""
    feature_set: str = "E+S"
    target: str = "bpr"
    folds: int = 5
    seed: int = 0
    out: str = "perfexpect-out"
    model: str = ""
    # expectancy
    max_order: int = 3
    stm: bool = False
    bias: float = 1.0
    selection_threshold: float = 0.01
    selection_folds: int = 3
    # regressor / training
    hidden: int = 5
    learning_rate: float = 1e-3
    max_epochs: int = 500
    patience: int = 25
    validation_fraction: float = 0.15
    # evaluation / sensitivity
    window: int = 8
    alpha: float = 0.05
    pooled: bool = False
    # synth
    n_pieces: int = 20
    min_len: int = 60
    max_len: int = 120
    rule: str = "linear"

    def targets(self) -> List[str]:
        if self.target == "all":
            return list(TARGET_KINDS)
        return [t.strip() for t in self.target.split(",")]

    def check(self, command: str) -> None:
        if self.feature_set not in FEATURE_SETS:
            raise ConfigurationError(f"feature_set must be one of {FEATURE_SETS}")
        for t in self.targets():
            if t not in TARGET_KINDS:
                raise ConfigurationError(f"unknown target {t!r}")
        if self.folds < 2:
            raise ConfigurationError("folds must be >= 2")
        if not self.out:
            raise ConfigurationError("out must be non-empty")
        if command not in ("synth",) and not self.corpus:
            raise ConfigurationError("--corpus is required")
        if self.rule not in RULES:
            raise ConfigurationError(f"rule must be one of {RULES}")
        self.training()  # validates the training fields

    def expectancy(self) -> ExpectancyConfig:
        return ExpectancyConfig(max_order=self.max_order, stm=self.stm, bias=self.bias,
                                selection_threshold=self.selection_threshold,
                                selection_folds=self.selection_folds)

    def training(self, seed: Optional[int] = None) -> TrainingConfig:
        return TrainingConfig(learning_rate=self.learning_rate, max_epochs=self.max_epochs,
                              patience=self.patience,
                              validation_fraction=self.validation_fraction,
                              seed=self.seed if seed is None else seed)


def _bool(text):
    if isinstance(text, bool):
        return text
    if text.lower() in ("1", "true", "yes", "on"):
        return True
    if text.lower() in ("0", "false", "no", "off"):
        return False
    raise argparse.ArgumentTypeError(f"expected a boolean, got {text!r}")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="perfexpect", description=__doc__.splitlines()[1])
    parser.add_argument("--version", action="version", version=__version__)
    parser.add_argument("command", choices=COMMANDS)
    parser.add_argument("--config", help="flat JSON file with RunConfig keys")
    parser.add_argument("-v", "--verbose", action="store_true")
    types = {int: int, float: float, str: str, bool: _bool}
    for f in fields(RunConfig):
        kind = types[type(f.default)]
        parser.add_argument("--" + f.name.replace("_", "-"), dest=f.name, type=kind,
                            default=None, metavar=f.name.upper() if kind is not _bool else "BOOL",
                            nargs="?" if kind is _bool else None,
                            const=True if kind is _bool else None)
    return parser


def load_config(args):
    """Merge defaults, config file and flags; also report whether --out was given."""
    values = {}
    types = {f.name: type(f.default) for f in fields(RunConfig)}
    out_given = args.out is not None
    if args.config:
        with open(args.config, encoding="utf-8") as fh:
            cfg = json.load(fh)
        if not isinstance(cfg, dict):
            raise ConfigurationError("config file must hold a JSON object")
        for k, v in cfg.items():
            key = k.replace("-", "_")
            if key not in types:
                raise ConfigurationError(f"unknown config key {k!r}")
            kind = types[key]
            ok = (isinstance(v, bool) if kind is bool else
                  isinstance(v, (int, float)) and not isinstance(v, bool) if kind is float else
                  isinstance(v, kind) and not isinstance(v, bool) if kind is int else
                  isinstance(v, kind))
            if not ok:
                raise ConfigurationError(f"config key {k!r} must be of type {kind.__name__}")
            values[key] = kind(v)
        out_given = out_given or "out" in cfg
    for k in types:
        v = getattr(args, k)
        if v is not None:
            values[k] = v
    return RunConfig(**values), out_given


def _sha256(path) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for block in iter(lambda: fh.read(1 << 16), b""):
            h.update(block)
    return h.hexdigest()


def _versions() -> dict:
    import matplotlib
    import numba
    import scipy
    return {"perfexpect": __version__, "python": platform.python_version(),
            "numpy": np.__version__, "scipy": scipy.__version__,
            "matplotlib": matplotlib.__version__, "numba": numba.__version__}


def _dump(obj) -> str:
    return json.dumps(obj, indent=1, sort_keys=True, allow_nan=True) + "\n"


class Run:
    """Tracks outputs of one invocation and writes the manifest."""

    def __init__(self, command, config: RunConfig, config_path=None):
        self.command = command
        self.config = config
        self.config_path = config_path
        self.outputs = []

    def path(self, name):
        os.makedirs(self.config.out, exist_ok=True)
        return os.path.join(self.config.out, name)

    def write_text(self, name, text):
        path = self.path(name)
        with open(path, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
        self.outputs.append(name)
        return path

    def write_json(self, name, obj):
        return self.write_text(name, _dump(obj))

    def write_rows(self, name, rows):
        buf = io.StringIO()
        csv.writer(buf, lineterminator="\n").writerows(rows)
        return self.write_text(name, buf.getvalue())

    def manifest(self):
        inputs = {}
        for key, path in (("corpus", self.config.corpus), ("config", self.config_path),
                          ("model", self.config.model)):
            if path and os.path.isfile(path):
                inputs[key] = {"path": path, "sha256": _sha256(path)}
        self.write_json("manifest.json", {
            "command": self.command, "config": asdict(self.config), "seed": self.config.seed,
            "versions": _versions(), "inputs": inputs,
            "outputs": sorted(set(self.outputs) | {"manifest.json"}),
        })


def _emit_rows(run: Run, name: str, rows, to_file: bool):
    if to_file:
        run.write_rows(name, rows)
    else:
        csv.writer(sys.stdout, lineterminator="\n").writerows(rows)


def cmd_validate(run: Run, to_file: bool) -> int:
    with open(run.config.corpus, "rb") as fh:
        pieces = load_raw(fh.read())
    diags = [d for p in pieces for d in validate_piece(p)]
    lines = [str(d) for d in diags] or ["ok: %d pieces valid" % len(pieces)]
    for line in lines:
        print(line)
    if to_file:
        run.write_json("diagnostics.json", [asdict(d) for d in diags])
    return 1 if any(d.severity == "error" for d in diags) else 0


def cmd_targets(run: Run, to_file: bool) -> int:
    rows = [["piece_id", "onset_index", "onset_beats", "bpr", "bpr_d", "vel", "vel_d"]]
    for piece in read_corpus(run.config.corpus):
        seq = group_by_onset(piece)
        t = all_targets(seq)
        for i, g in enumerate(seq.groups):
            rows.append([piece.id, i, repr(g.onset_beats)] +
                        [repr(float(t[k].values[i])) for k in TARGET_KINDS])
    _emit_rows(run, "targets.csv", rows, to_file)
    return 0


def _load_model_file(path) -> FoldModel:
    with open(path, encoding="utf-8") as fh:
        return FoldModel.from_dict(json.load(fh))


def cmd_features(run: Run, to_file: bool, feature_set=None) -> int:
    cfg = run.config
    feature_set = feature_set or cfg.feature_set
    pieces = read_corpus(cfg.corpus)
    exp = None
    if uses_expectancy(feature_set):
        if cfg.model:
            exp = _load_model_file(cfg.model).expectancy
        if exp is None:
            exp = ExpectancyModel.fit(pieces, cfg.expectancy(), melody_pitch_range(pieces))
    rows = None
    for piece in pieces:
        fm = feature_matrix(piece, feature_set, exp)
        if rows is None:
            rows = [["piece_id", "onset_index"] + list(fm.columns)]
        rows.extend([piece.id, i] + [repr(float(v)) for v in r] for i, r in enumerate(fm.rows))
    name = "expectancy.csv" if feature_set == "E" else "features.csv"
    _emit_rows(run, name, rows, to_file)
    return 0


def cmd_train(run: Run) -> int:
    cfg = run.config
    pieces = read_corpus(cfg.corpus)
    target = cfg.targets()[0]
    model, exp = fit_fold(pieces, cfg.feature_set, target, cfg.training(), cfg.expectancy(),
                          cfg.hidden, melody_pitch_range(pieces), cfg.seed)
    ids = [p.id for p in pieces]
    run.write_json("model.json", FoldModel(-1, model, exp, ids, []).to_dict())
    return 0


def _evaluate(cfg: RunConfig, pieces, feature_set, target):
    return evaluate_cv(pieces, feature_set, target, cfg.folds, cfg.seed, cfg.training(),
                       cfg.expectancy(), cfg.hidden, cfg.pooled)


def cmd_evaluate(run: Run) -> int:
    from .plotting import render_r2_summary

    cfg = run.config
    pieces = read_corpus(cfg.corpus)
    reports = []
    for target in cfg.targets():
        rep = _evaluate(cfg, pieces, cfg.feature_set, target)
        reports.append(rep)
        suffix = "" if len(cfg.targets()) == 1 else f"_{target}"
        for m in rep.models:
            run.write_json(f"model{suffix}_{m.fold}.json", m.to_dict())
        fig = run.path(f"r2_{target}.svg")
        render_r2_summary({cfg.feature_set: rep}, fig, target)
        run.outputs.append(os.path.basename(fig))
    run.write_json("report.json", {"reports": [r.to_dict() for r in reports]})
    run.write_rows("table1.csv", table1_rows(reports))
    for r in reports:
        print(f"{r.feature_set:4s} {r.target:6s} R2={r.mean_r2:.4f} r={r.mean_r:.4f}")
    return 0


def cmd_compare(run: Run) -> int:
    from .plotting import render_r2_summary

    cfg = run.config
    pieces = read_corpus(cfg.corpus)
    reports, stats = [], {}
    for target in cfg.targets():
        by_set = {fs: _evaluate(cfg, pieces, fs, target) for fs in FEATURE_SETS}
        reports.extend(by_set.values())
        for fs, rep in by_set.items():
            for m in rep.models:
                run.write_json(f"model_{fs}_{target}_{m.fold}.json", m.to_dict())
        stats[target] = compare_feature_sets(by_set, cfg.alpha).to_dict()
        fig = run.path(f"r2_{target}.svg")
        render_r2_summary(by_set, fig, target)
        run.outputs.append(os.path.basename(fig))
    run.write_json("report.json", {"reports": [r.to_dict() for r in reports]})
    run.write_rows("table1.csv", table1_rows(reports))
    run.write_json("stats.json", stats)
    for r in reports:
        print(f"{r.feature_set:4s} {r.target:6s} R2={r.mean_r2:.4f} r={r.mean_r:.4f}")
    for target, s in stats.items():
        print(f"{target}: F({s['df_between']},{s['df_within']})={s['F']:.3f} p={s['p_value']:.4g}")
    return 0


def cmd_sensitivity(run: Run) -> int:
    """With --model: map over every piece of the corpus. Without: cross-validate
    and average the per-fold maps computed on each fold's test pieces."""
    from .plotting import render_map

    cfg = run.config
    pieces = read_corpus(cfg.corpus)
    if cfg.model:
        fm = _load_model_file(cfg.model)
        reg = fm.regressor
        mats = [feature_matrix(p, reg.feature_set, fm.expectancy) for p in pieces]
        smap = sensitivity_map(reg, mats, cfg.window)
        target = reg.target or cfg.targets()[0]
    else:
        target = cfg.targets()[0]
        rep = _evaluate(cfg, pieces, cfg.feature_set, target)
        by_id = {p.id: p for p in pieces}
        maps = []
        for m in rep.models:
            mats = [feature_matrix(by_id[i], cfg.feature_set, m.expectancy) for i in m.test_ids]
            if any(len(x) > 2 * cfg.window + 1 for x in mats):
                maps.append(sensitivity_map(m.regressor, mats, cfg.window))
        smap = average_maps(maps)
    run.write_text(f"sensitivity_{target}.csv", smap.to_csv())
    render_map(smap, run.path(f"sensitivity_{target}.svg"), title=target.upper())
    run.outputs.append(f"sensitivity_{target}.svg")
    return 0


def cmd_synth(run: Run) -> int:
    cfg = run.config
    pieces = synth_corpus(cfg.n_pieces, cfg.min_len, cfg.max_len, cfg.seed, cfg.rule)
    path = run.path("corpus.json")
    write_corpus(pieces, path)
    run.outputs.append("corpus.json")
    print(path)
    return 0


def run_command(command: str, cfg: RunConfig, config_path=None, explicit_out=True) -> int:
    cfg.check(command)
    run = Run(command, cfg, config_path)
    if command == "validate":
        code = cmd_validate(run, explicit_out)
    elif command == "targets":
        code = cmd_targets(run, explicit_out)
    elif command == "features":
        code = cmd_features(run, explicit_out)
    elif command == "expectancy":
        code = cmd_features(run, explicit_out, "E")
    elif command == "train":
        code = cmd_train(run)
    elif command == "evaluate":
        code = cmd_evaluate(run)
    elif command == "compare":
        code = cmd_compare(run)
    elif command == "sensitivity":
        code = cmd_sensitivity(run)
    elif command == "synth":
        code = cmd_synth(run)
    else:
        raise ConfigurationError(f"unknown command {command!r}")
    if explicit_out or command not in ("validate", "targets", "features", "expectancy"):
        run.manifest()
    return code


def _error_record(command, exc) -> str:
    record = {"error": getattr(exc, "kind", type(exc).__name__), "command": command,
              "message": str(exc)}
    for attr in ("piece_id", "field", "line", "offset", "epoch"):
        if getattr(exc, attr, None) is not None:
            record[attr] = getattr(exc, attr)
    return json.dumps(record, sort_keys=True)


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        cfg, out_given = load_config(args)
        return run_command(args.command, cfg, args.config, explicit_out=out_given)
    except (PerfExpectError, OSError, json.JSONDecodeError) as exc:
        print(_error_record(args.command, exc), file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
