"""Benchmark harness: trials, corruption, grid search, method comparison.

One experiment is: load and normalize a dataset, calibrate the deletion
rate to a target observed fraction if asked, then over independent
trials split off a training fold, corrupt both folds, fit every method
across a hyperparameter grid, and report each method at its best grid
point by mean test RMSE across trials.  Tuning on the test fold is the
reported protocol of the results being reproduced, kept as-is on
purpose; it is not a recommended practice.

All randomness is derived from the master seed through named
subsequences, so a report is a pure function of its ExperimentSpec
(runtime aside).
"""

from __future__ import annotations

import json
import time
from dataclasses import dataclass, field, replace

import numpy as np

from . import corruption as corr
from .corruption import CorruptionKind, CorruptionSpec, calibrate_beta
from .dataset import Dataset, load_csv, normalize, split, stats
from .imputation import apply_baseline_matrix, fit_independent, fit_mean, fit_zero
from .solver import Hyperparams, SolverConfig, predict_batch, ridge_alpha, solve_irr
from .theory import BoundInputs, generalization_gap, rademacher_bound

METHODS = ("zero", "mean", "ind", "irr", "nocorr")
_ALIASES = {"independent": "ind", "no-corr": "nocorr", "nocorruption": "nocorr"}

# purposes for derived seeds
_SPLIT, _TRAIN_MASK, _TEST_MASK, _CALIBRATE = 0, 1, 2, 3


def derive_seed(master_seed, trial, purpose) -> int:
    """Stable sub-seed from (master, trial, purpose)."""
    ss = np.random.SeedSequence([int(master_seed), int(trial), int(purpose)])
    return int(ss.generate_state(1)[0])


def canonical_methods(names) -> tuple:
    out = []
    for name in names:
        key = _ALIASES.get(str(name).strip().lower(), str(name).strip().lower())
        if key not in METHODS:
            raise ValueError(f"unknown method {name!r}; choose from {METHODS}")
        if key not in out:
            out.append(key)
    if not out:
        raise ValueError("no methods selected")
    return tuple(out)


@dataclass(frozen=True)
class ExperimentSpec:
    """Everything a benchmark run depends on."""

    dataset_path: str
    label_column: object = -1
    corruption: object = "native"  # CorruptionSpec or the string "native"
    target_fraction: float | None = None
    train_size: int = 1000
    trials: int = 5
    methods: tuple = METHODS
    grid: tuple = tuple(range(-12, 11))
    master_seed: int = 0
    full_grid: bool = False
    report_bounds: bool = False
    has_header: bool = False
    solver: SolverConfig = field(default_factory=SolverConfig)

    def __post_init__(self):
        object.__setattr__(self, "methods", canonical_methods(self.methods))
        object.__setattr__(self, "grid", tuple(int(g) for g in self.grid))
        if self.trials < 1:
            raise ValueError("trials must be at least 1")
        if not self.grid:
            raise ValueError("grid must be nonempty")
        if self.corruption != "native" and not isinstance(self.corruption, CorruptionSpec):
            raise ValueError("corruption must be a CorruptionSpec or 'native'")
        if self.target_fraction is not None and not 0.0 < self.target_fraction <= 1.0:
            raise ValueError("target_fraction must be in (0, 1]")


@dataclass(frozen=True)
class MethodResult:
    rmse_mean: float
    rmse_std: float
    best_lambda: float
    best_gamma: float | None
    per_trial: tuple
    notes: tuple = ()

    def to_obj(self):
        return {
            "rmse_mean": self.rmse_mean,
            "rmse_std": self.rmse_std,
            "best_lambda": self.best_lambda,
            "best_gamma": self.best_gamma,
            "per_trial": list(self.per_trial),
            "notes": list(self.notes),
        }


@dataclass(frozen=True)
class ExperimentReport:
    dataset_path: str
    n_rows: int
    n_features: int
    corruption: object
    beta: float | None
    target_fraction: float | None
    fraction_mean: float
    fraction_std: float
    train_size: int
    trials: int
    master_seed: int
    grid: tuple
    irr_grid_mode: str
    methods: dict
    notes: tuple
    cells_scored: int
    cells_flagged: int
    bounds: dict | None
    runtime_seconds: float

    def to_obj(self):
        if isinstance(self.corruption, CorruptionSpec):
            cobj = {
                "kind": self.corruption.kind.value,
                "beta": self.corruption.beta,
                "seed": self.corruption.seed,
            }
            if self.corruption.kind is CorruptionKind.COLUMN_BLOCK:
                cobj["block_size"] = self.corruption.block_size
                cobj["eligible_blocks"] = list(self.corruption.eligible_blocks)
        else:
            cobj = "native"
        return {
            "dataset": self.dataset_path,
            "n_rows": self.n_rows,
            "n_features": self.n_features,
            "corruption": cobj,
            "beta": self.beta,
            "target_fraction": self.target_fraction,
            "fraction_remaining": {"mean": self.fraction_mean, "std": self.fraction_std},
            "train_size": self.train_size,
            "trials": self.trials,
            "master_seed": self.master_seed,
            "grid": {"exponents": list(self.grid), "irr_mode": self.irr_grid_mode},
            "methods": {k: v.to_obj() for k, v in self.methods.items()},
            "notes": list(self.notes),
            "cells": {"scored": self.cells_scored, "flagged": self.cells_flagged},
            "bounds": self.bounds,
            "runtime_seconds": self.runtime_seconds,
        }

    def to_json(self) -> str:
        return json.dumps(self.to_obj(), indent=2)


@dataclass
class _Trial:
    train_clean: Dataset
    test_clean: Dataset
    train: Dataset
    test: Dataset
    fraction: float


def _corrupt_fold(fold: Dataset, cspec: CorruptionSpec, beta, seed) -> Dataset:
    eff = replace(cspec, beta=beta if beta is not None else cspec.beta, seed=seed)
    Z = corr.apply(eff, fold.X)
    return replace(fold, X=fold.X * Z, Z=Z)


def _prepare_trials(ds, spec, beta):
    out = []
    for t in range(spec.trials):
        tr, te = split(ds, spec.train_size, derive_seed(spec.master_seed, t, _SPLIT))
        if spec.corruption == "native":
            out.append(_Trial(tr, te, tr, te, stats(tr).fraction_remaining))
            continue
        tr_c = _corrupt_fold(
            tr, spec.corruption, beta, derive_seed(spec.master_seed, t, _TRAIN_MASK)
        )
        te_c = _corrupt_fold(
            te, spec.corruption, beta, derive_seed(spec.master_seed, t, _TEST_MASK)
        )
        out.append(_Trial(tr, te, tr_c, te_c, stats(tr_c).fraction_remaining))
    return out


def _fit_baseline(kind, train):
    if kind == "zero":
        return fit_zero()
    if kind == "mean":
        return fit_mean(train)
    return fit_independent(train)


def _ridge_curve(Xtr, ytr, Xte, yte, exponents):
    """Test RMSE of linear ridge, one value per lambda exponent."""
    G = Xtr @ Xtr.T
    K = 0.5 * (G + G.T)
    out = {}
    for e in exponents:
        alpha = ridge_alpha(K, ytr, 2.0**e)
        w = Xtr.T @ alpha
        resid = yte - Xte @ w
        out[e] = float(np.sqrt((resid @ resid) / yte.shape[0]))
    return out


def _irr_cell(trial, le, ge, cfg):
    hp = Hyperparams(lam=2.0**le, gamma=2.0**ge)
    sol = solve_irr(trial.train, hp, cfg)
    pred = predict_batch(sol, trial.test)
    resid = trial.test.y - pred
    return float(np.sqrt((resid @ resid) / trial.test.m)), sol.diagnostics.converged


def _coarse_pairs(grid):
    coarse = grid[::3]
    return [(le, ge) for le in coarse for ge in coarse]


def _refine_pairs(grid, center, done):
    le0, ge0 = center
    cand = []
    for le in (le0 - 1, le0, le0 + 1):
        for ge in (ge0 - 1, ge0, ge0 + 1):
            if le in grid and ge in grid and (le, ge) not in done:
                cand.append((le, ge))
    return cand


def _std(values):
    arr = np.asarray(values, dtype=float)
    if arr.size < 2:
        return 0.0
    return float(np.std(arr, ddof=1))


def _pick_best(curves, exponents):
    best_e = min(exponents, key=lambda e: float(np.mean([c[e] for c in curves])))
    per_trial = tuple(c[best_e] for c in curves)
    return best_e, per_trial


def run_experiment(spec: ExperimentSpec) -> ExperimentReport:
    """Run the full protocol and aggregate a report; see the module doc."""
    ds = normalize(load_csv(spec.dataset_path, spec.label_column, spec.has_header))
    return _run_on_dataset(spec, ds)


def _run_on_dataset(spec: ExperimentSpec, ds: Dataset) -> ExperimentReport:
    t_start = time.perf_counter()
    notes = []

    if spec.corruption != "native" and not np.all(ds.Z == 1.0):
        raise ValueError(
            "artificial corruption needs a fully observed dataset; "
            "this one already has missing entries"
        )

    beta = None
    if isinstance(spec.corruption, CorruptionSpec):
        if spec.corruption.kind is CorruptionKind.COLUMN_BLOCK:
            if spec.target_fraction is not None:
                notes.append("target_fraction ignored: column corruption has no rate")
        elif spec.target_fraction is not None:
            beta = calibrate_beta(
                ds.X,
                spec.corruption.kind,
                spec.target_fraction,
                derive_seed(spec.master_seed, 0, _CALIBRATE),
            )
            notes.append(
                f"beta calibrated to {beta:.6f} for fraction {spec.target_fraction}"
            )
        else:
            beta = spec.corruption.beta
    elif spec.target_fraction is not None:
        notes.append("target_fraction ignored for native missingness")

    trials = _prepare_trials(ds, spec, beta)
    fractions = [t.fraction for t in trials]

    methods = {}
    cells_scored = 0
    cells_flagged = 0

    for name in spec.methods:
        if name == "nocorr":
            if spec.corruption == "native":
                notes.append(
                    "nocorr unavailable: native missingness has no uncorrupted view"
                )
                continue
            curves = []
            for t, trial in enumerate(trials):
                try:
                    curves.append(
                        _ridge_curve(
                            trial.train_clean.X,
                            trial.train_clean.y,
                            trial.test_clean.X,
                            trial.test_clean.y,
                            spec.grid,
                        )
                    )
                except Exception as exc:
                    raise RuntimeError(f"trial {t}, method nocorr: {exc}") from exc
            cells_scored += len(spec.grid) * len(trials)
            best_e, per_trial = _pick_best(curves, spec.grid)
            methods[name] = MethodResult(
                rmse_mean=float(np.mean(per_trial)),
                rmse_std=_std(per_trial),
                best_lambda=2.0**best_e,
                best_gamma=None,
                per_trial=per_trial,
            )
        elif name in ("zero", "mean", "ind"):
            curves = []
            for t, trial in enumerate(trials):
                try:
                    imp = _fit_baseline(name, trial.train)
                    Xtr = apply_baseline_matrix(imp, trial.train.X, trial.train.Z)
                    Xte = apply_baseline_matrix(imp, trial.test.X, trial.test.Z)
                    curves.append(
                        _ridge_curve(Xtr, trial.train.y, Xte, trial.test.y, spec.grid)
                    )
                except Exception as exc:
                    raise RuntimeError(f"trial {t}, method {name}: {exc}") from exc
            cells_scored += len(spec.grid) * len(trials)
            best_e, per_trial = _pick_best(curves, spec.grid)
            methods[name] = MethodResult(
                rmse_mean=float(np.mean(per_trial)),
                rmse_std=_std(per_trial),
                best_lambda=2.0**best_e,
                best_gamma=None,
                per_trial=per_trial,
            )
        else:  # irr
            scores = {}
            flags = {}

            def eval_pairs(pair_list):
                nonlocal cells_scored, cells_flagged
                for le, ge in pair_list:
                    per = []
                    conv = []
                    for t, trial in enumerate(trials):
                        try:
                            r, ok = _irr_cell(trial, le, ge, spec.solver)
                        except Exception as exc:
                            raise RuntimeError(
                                f"trial {t}, method irr, "
                                f"lambda=2^{le}, gamma=2^{ge}: {exc}"
                            ) from exc
                        per.append(r)
                        conv.append(ok)
                        cells_scored += 1
                        if not ok:
                            cells_flagged += 1
                    scores[(le, ge)] = per
                    flags[(le, ge)] = conv

            if spec.full_grid:
                eval_pairs([(le, ge) for le in spec.grid for ge in spec.grid])
            else:
                eval_pairs(_coarse_pairs(spec.grid))
                center = min(scores, key=lambda p: float(np.mean(scores[p])))
                eval_pairs(_refine_pairs(spec.grid, center, set(scores)))
            best = min(scores, key=lambda p: float(np.mean(scores[p])))
            per_trial = tuple(scores[best])
            mnotes = []
            bad_total = sum(c.count(False) for c in flags.values())
            if bad_total:
                total = sum(len(c) for c in flags.values())
                mnotes.append(f"{bad_total} of {total} solves non-converged")
            bad_best = flags[best].count(False)
            if bad_best:
                mnotes.append(f"{bad_best} non-converged at the selected grid point")
            methods[name] = MethodResult(
                rmse_mean=float(np.mean(per_trial)),
                rmse_std=_std(per_trial),
                best_lambda=2.0 ** best[0],
                best_gamma=2.0 ** best[1],
                per_trial=per_trial,
                notes=tuple(mnotes),
            )

    bounds = None
    if spec.report_bounds:
        if "irr" in methods:
            hp = Hyperparams(
                lam=methods["irr"].best_lambda, gamma=methods["irr"].best_gamma
            )
            b = BoundInputs.from_dataset(trials[0].train, hp)
            bounds = {
                "B": b.B,
                "R": b.R,
                "gamma": b.gamma,
                "lambda": b.lam,
                "rademacher_bound": rademacher_bound(b),
                "generalization_gap_delta_0.05": generalization_gap(b, 0.05),
            }
        else:
            notes.append("bounds skipped: irr not among the methods")

    return ExperimentReport(
        dataset_path=str(spec.dataset_path),
        n_rows=ds.m,
        n_features=ds.d,
        corruption=spec.corruption,
        beta=beta,
        target_fraction=spec.target_fraction,
        fraction_mean=float(np.mean(fractions)),
        fraction_std=_std(fractions),
        train_size=spec.train_size,
        trials=spec.trials,
        master_seed=spec.master_seed,
        grid=spec.grid,
        irr_grid_mode="full" if spec.full_grid else "pruned",
        methods=methods,
        notes=tuple(notes),
        cells_scored=cells_scored,
        cells_flagged=cells_flagged,
        bounds=bounds,
        runtime_seconds=time.perf_counter() - t_start,
    )


def sweep_fraction(spec: ExperimentSpec, fractions):
    """Run the experiment once per target fraction; rows for plotting.

    Returns (fraction, method, rmse_mean, rmse_std) tuples, recalibrating
    beta for each fraction.
    """
    rows = []
    for f in fractions:
        if not 0.0 < f <= 1.0:
            raise ValueError(f"fractions must lie in (0, 1], got {f}")
        report = run_experiment(replace(spec, target_fraction=float(f)))
        for name, res in report.methods.items():
            rows.append((float(f), name, res.rmse_mean, res.rmse_std))
    return rows


def run_onevsall(spec: ExperimentSpec, digit: int) -> ExperimentReport:
    """One-vs-all digit regression with column corruption.

    Labels become +1 for the chosen digit and -1 otherwise (bypassing
    label normalization); features are normalized as usual; corruption
    is the strided column-block process over the central image columns
    unless the spec already carries a column spec.
    """
    if not 0 <= int(digit) <= 9:
        raise ValueError(f"digit must be 0..9, got {digit}")
    digit = int(digit)

    raw = load_csv(spec.dataset_path, spec.label_column, spec.has_header)
    hit = raw.y == float(digit)
    if not hit.any():
        raise ValueError(f"digit {digit} absent from the data; labels would be all -1")
    if hit.all():
        raise ValueError(f"every row is digit {digit}; labels would be all +1")

    ds = normalize(raw)
    ds = replace(ds, y=np.where(hit, 1.0, -1.0), label_range=None)

    if (
        isinstance(spec.corruption, CorruptionSpec)
        and spec.corruption.kind is CorruptionKind.COLUMN_BLOCK
    ):
        cspec = spec.corruption
    else:
        seed = (
            spec.corruption.seed
            if isinstance(spec.corruption, CorruptionSpec)
            else spec.master_seed
        )
        cspec = CorruptionSpec(
            CorruptionKind.COLUMN_BLOCK,
            block_size=8,
            eligible_blocks=(2, 3, 4),
            seed=seed,
        )
    spec = replace(spec, corruption=cspec, target_fraction=None)
    return _run_on_dataset(spec, ds)


_TSV_COLUMNS = (("zero", "zero-imp"), ("mean", "mean-imp"), ("ind", "ind-imp"),
                ("irr", "IRR"), ("nocorr", "no corr"))


def _cell(res):
    if res is None:
        return "-"
    return f"{res.rmse_mean:.3f}±{res.rmse_std:.3f}"


def write_report_tsv(report: ExperimentReport, path):
    """One-row table of mean RMSE with std per method."""
    header = ["dataset", "corruption", "fraction"]
    header += [label for _, label in _TSV_COLUMNS]
    kind = (
        report.corruption.kind.value
        if isinstance(report.corruption, CorruptionSpec)
        else "native"
    )
    row = [
        report.dataset_path,
        kind,
        f"{report.fraction_mean:.3f}±{report.fraction_std:.3f}",
    ]
    row += [_cell(report.methods.get(key)) for key, _ in _TSV_COLUMNS]
    with open(path, "w") as fh:
        fh.write("\t".join(header) + "\n")
        fh.write("\t".join(row) + "\n")


def write_sweep_tsv(rows, path):
    """Plot-ready long-format table: fraction, method, rmse_mean, rmse_std."""
    with open(path, "w") as fh:
        fh.write("fraction\tmethod\trmse_mean\trmse_std\n")
        for frac, method, mean, std in rows:
            fh.write(f"{frac:.6g}\t{method}\t{mean:.6f}\t{std:.6f}\n")
