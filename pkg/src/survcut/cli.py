"""Command-line surface: simulate, fit, baseline, evaluate, bench.

Every command is deterministic given its flags and seed (bench's measured
wall-clock columns excepted), returns 0 on success, and maps usage, data and
numeric failures to exit codes 2, 3 and 4.
"""

from __future__ import annotations

import argparse
import json
import sys
import time
from pathlib import Path

import numpy as np

from .baselines import mt_detect
from .binarize import binarize_at_cutpoints, fit_bins, transform
from .coxloss import linear_predictor
from .cutpoints import extract_cutpoints
from .data import (CutPointModel, SurvivalDataset, ValidationError, load_csv,
                   save_csv)
from .metrics import c_index, m1_distance, m2_count
from .prox import constant_weights
from .selection import CVResult, cross_validate, map_ordered, tv_gamma_bound
from .simulate import GroundTruth, SimConfig, simulate_dataset
from .solver import (NumericError, SolverConfig, fit, fit_dense_cox,
                     refit_constrained)


def _write_json(obj: dict, path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(obj, fh, indent=2, sort_keys=True)
        fh.write("\n")


def _read_json(path) -> dict:
    with open(path, encoding="utf-8") as fh:
        return json.load(fh)


def _fmt(v: float) -> str:
    return "" if np.isnan(v) else repr(float(v))


# ---------------------------------------------------------------------------
# pipelines (importable; the commands below are thin wrappers)


def fit_pipeline(ds: SurvivalDataset, bins: int = 50, gamma: float | None = None,
                 folds: int = 10, grid_size: int = 30, seed: int = 0,
                 threads: int = 1, config: SolverConfig | None = None):
    """Full detector: binarize, pick the penalty by CV unless given, fit,
    extract cut-points, attach the constrained refit on the detected grid.

    Returns (model, cv result or None, fit result, scheme).
    """
    scheme = fit_bins(ds, bins)
    design = transform(ds, scheme)
    if design.layout.total == 0:
        raise ValidationError("no usable features")
    cv: CVResult | None = None
    if gamma is None:
        cv = cross_validate(ds, scheme, folds=folds, seed=seed,
                            grid_size=grid_size, threads=threads)
        gamma = cv.chosen_gamma
    res = fit(design, ds.times, ds.events,
              constant_weights(design.layout, float(gamma)),
              config=config or SolverConfig())
    model = extract_cutpoints(res.beta, scheme, ds.feature_names)
    refit = [np.zeros(0) for _ in range(ds.p)]
    if int(model.k_hat.sum()) > 0:
        dz = binarize_at_cutpoints(ds.features, model.cutpoints)
        coef = refit_constrained(dz, ds.times, ds.events)
        for b, j in enumerate(dz.feature_ids):
            refit[int(j)] = coef.block(b)
    model.refit_coef = refit
    return model, cv, res, scheme


def evaluate_pipeline(ds: SurvivalDataset, truth: GroundTruth,
                      models: dict[str, CutPointModel], test_split: float = 0.3,
                      seed: int = 0, threads: int = 1) -> list[tuple[str, str, float]]:
    """Detection metrics against the truth plus held-out concordance rows.

    Concordance refits each model's cut-point design on the training part of
    a seeded split and scores the held-out part; a plain Cox fit on the raw
    continuous features is reported under the method name ``continuous``.
    """
    if truth.p != ds.p:
        raise ValidationError("truth covers a different number of features")
    if not 0.0 < test_split < 1.0:
        raise ValidationError("test split must lie in (0, 1)")
    rows: list[tuple[str, str, float]] = []
    for name, model in models.items():
        if len(model.cutpoints) != ds.p:
            raise ValidationError(f"model '{name}' covers a different feature count")
        rows.append((name, "m1", m1_distance(truth.mu_star, model.cutpoints,
                                             truth.sparse_set)))
        rows.append((name, "m2", m2_count(model.k_hat, truth.sparse_set)))

    perm = np.random.default_rng([seed, 1]).permutation(ds.n)
    n_test = int(round(test_split * ds.n))
    test_idx, train_idx = perm[:n_test], perm[n_test:]
    if not ds.events[train_idx].any() or not ds.events[test_idx].any():
        raise ValidationError("event-free side in the evaluation split")
    x_tr, x_te = ds.features[train_idx], ds.features[test_idx]
    t_tr, e_tr = ds.times[train_idx], ds.events[train_idx]
    t_te, e_te = ds.times[test_idx], ds.events[test_idx]

    def one(item: tuple[str, CutPointModel]) -> tuple[str, str, float]:
        name, model = item
        if int(model.k_hat.sum()) == 0:
            risks = np.zeros(t_te.shape[0])
        else:
            dz_tr = binarize_at_cutpoints(x_tr, model.cutpoints)
            coef = refit_constrained(dz_tr, t_tr, e_tr)
            risks = linear_predictor(binarize_at_cutpoints(x_te, model.cutpoints), coef)
        return (name, "c_index", c_index(risks, t_te, e_te))

    rows.extend(map_ordered(one, list(models.items()), threads))
    b = fit_dense_cox(x_tr, t_tr, e_tr)
    rows.append(("continuous", "c_index", c_index(x_te @ b, t_te, e_te)))
    return rows


def bench_pipeline(sweep: str, values: list[int], reps: int = 3, seed: int = 0,
                   n: int = 2000, p: int = 1, k_star: int = 1, bins: int = 50):
    """Wall-clock of one penalized fit vs the two scan baselines per design."""
    from .baselines import mt_scan, mt_select  # local to keep module load light

    rows = []
    for vi, val in enumerate(values):
        cfg = SimConfig(
            n=val if sweep == "n" else n,
            p=val if sweep == "p" else p,
            k_star=k_star,
            seed=int(np.random.SeedSequence(entropy=[seed, vi]).generate_state(1)[0]),
        )
        samples: dict[str, list[float]] = {"survcut": [], "mt-grid": [], "mt-all": []}
        for rep in range(reps):
            rep_cfg = SimConfig(**{**cfg.__dict__, "seed": cfg.seed + rep})
            ds, _ = simulate_dataset(rep_cfg)
            scheme = fit_bins(ds, bins)
            design = transform(ds, scheme)
            gamma = 0.3 * tv_gamma_bound(design, ds.times, ds.events)

            t0 = time.perf_counter()
            res = fit(design, ds.times, ds.events,
                      constant_weights(design.layout, gamma))
            extract_cutpoints(res.beta, scheme, ds.feature_names)
            samples["survcut"].append(time.perf_counter() - t0)

            for method, grid in (("mt-grid", "scheme"), ("mt-all", "all")):
                t0 = time.perf_counter()
                for j in range(ds.p):
                    scan = mt_scan(ds.features[:, j], ds.times, ds.events,
                                   grid=grid, scheme=scheme, feature=j)
                    mt_select(scan, "bonferroni")
                samples[method].append(time.perf_counter() - t0)
        for method, ts in samples.items():
            arr = np.asarray(ts)
            rows.append((sweep, int(val), method, float(arr.mean()),
                         float(arr.std(ddof=1)) if reps > 1 else 0.0, reps))
    return rows


# ---------------------------------------------------------------------------
# commands


def cmd_simulate(args) -> int:
    cfg = SimConfig(n=args.n, p=args.p, rho=args.rho, k_star=args.k_star,
                    nu=args.nu, sigma=args.sigma, censoring_rate=args.r_c,
                    sparsity=args.r_s, seed=args.seed)
    ds, truth = simulate_dataset(cfg)
    out = Path(args.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    data_path, truth_path = out / "data.csv", out / "truth.json"
    save_csv(ds, data_path)
    _write_json(truth.to_dict(), truth_path)
    censored = 1.0 - float(ds.events.mean())
    print(f"wrote {data_path} and {truth_path} "
          f"(n={ds.n}, p={ds.p}, censored={censored:.3f})")
    return 0


def cmd_fit(args) -> int:
    ds = load_csv(args.data)
    model, cv, res, _ = fit_pipeline(ds, bins=args.bins, gamma=args.gamma,
                                     folds=args.folds, grid_size=args.grid_size,
                                     seed=args.seed, threads=args.threads)
    _write_json(model.to_dict(), args.out)
    if cv is not None and args.out_cv:
        with open(args.out_cv, "w", encoding="utf-8") as fh:
            fh.write("gamma,mean_score,std_error,chosen\n")
            for i, g in enumerate(cv.gammas):
                fh.write(f"{_fmt(g)},{_fmt(cv.mean_score[i])},"
                         f"{_fmt(cv.std_error[i])},{int(i == cv.chosen_index)}\n")
    k_total = int(model.k_hat.sum())
    print(f"wrote {args.out} (gamma={res.gamma:.6g}, cut-points={k_total}, "
          f"iterations={res.iterations}, converged={res.converged})")
    return 0


def cmd_baseline(args) -> int:
    ds = load_csv(args.data)
    scheme = fit_bins(ds, args.bins) if args.grid == "scheme" else None
    model = mt_detect(ds, method=args.method, grid=args.grid, alpha=args.alpha,
                      scheme=scheme)
    _write_json(model.to_dict(), args.out)
    print(f"wrote {args.out} (method={args.method}, grid={args.grid}, "
          f"cut-points={int(model.k_hat.sum())})")
    return 0


def cmd_evaluate(args) -> int:
    ds = load_csv(args.data)
    truth = GroundTruth.from_dict(_read_json(args.truth))
    models: dict[str, CutPointModel] = {}
    for spec_arg in args.cutpoints:
        if "=" in spec_arg:
            name, path = spec_arg.split("=", 1)
        else:
            name, path = spec_arg.rsplit("/", 1)[-1].removesuffix(".json"), spec_arg
        if not name or not path:
            print(f"error: bad --cutpoints entry '{spec_arg}'", file=sys.stderr)
            return 2
        models[name] = CutPointModel.from_dict(_read_json(path))
    rows = evaluate_pipeline(ds, truth, models, test_split=args.test_split,
                             seed=args.seed, threads=args.threads)
    with open(args.out, "w", encoding="utf-8") as fh:
        fh.write("method,metric,value\n")
        for name, metric, value in rows:
            fh.write(f"{name},{metric},{_fmt(value)}\n")
    print(f"wrote {args.out} ({len(rows)} rows)")
    return 0


def cmd_bench(args) -> int:
    values = [int(v) for v in args.values.split(",") if v]
    if not values:
        print("error: --values must list at least one integer", file=sys.stderr)
        return 2
    rows = bench_pipeline(args.sweep, values, reps=args.reps, seed=args.seed,
                          n=args.n, p=args.p, k_star=args.k_star, bins=args.bins)
    with open(args.out, "w", encoding="utf-8") as fh:
        fh.write("sweep,value,method,mean_seconds,std_seconds,reps\n")
        for sweep, val, method, mean_s, std_s, reps in rows:
            fh.write(f"{sweep},{val},{method},{_fmt(mean_s)},{_fmt(std_s)},{reps}\n")
    print(f"wrote {args.out} ({len(rows)} rows)")
    return 0


# ---------------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="survcut",
        description="Cut-point detection in right-censored survival data",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    sim = sub.add_parser("simulate", help="draw a synthetic dataset with known cut-points")
    sim.add_argument("--n", type=int, required=True)
    sim.add_argument("--p", type=int, default=50)
    sim.add_argument("--rho", type=float, default=0.5)
    sim.add_argument("--k-star", type=int, default=2)
    sim.add_argument("--nu", type=float, default=2.0)
    sim.add_argument("--sigma", type=float, default=0.1)
    sim.add_argument("--r-c", type=float, default=0.3, help="target censoring fraction")
    sim.add_argument("--r-s", type=float, default=0.2, help="fraction of null features")
    sim.add_argument("--seed", type=int, default=0)
    sim.add_argument("--out-dir", default=".", help="directory for data.csv and truth.json")
    sim.set_defaults(func=cmd_simulate)

    fit_p = sub.add_parser("fit", help="detect cut-points with the penalized model")
    fit_p.add_argument("--data", required=True)
    fit_p.add_argument("--bins", type=int, default=50)
    fit_p.add_argument("--gamma", type=float, default=None,
                       help="penalty level; cross-validated when omitted")
    fit_p.add_argument("--folds", type=int, default=10)
    fit_p.add_argument("--grid-size", type=int, default=30)
    fit_p.add_argument("--seed", type=int, default=0)
    fit_p.add_argument("--threads", type=int, default=1)
    fit_p.add_argument("--out", default="cutpoints.json")
    fit_p.add_argument("--out-cv", default="cv.csv")
    fit_p.set_defaults(func=cmd_fit)

    base = sub.add_parser("baseline", help="multiple-testing baseline detector")
    base.add_argument("--data", required=True)
    base.add_argument("--method", choices=("mt-b", "mt-ls"), default="mt-b")
    base.add_argument("--grid", choices=("all", "scheme"), default="all")
    base.add_argument("--alpha", type=float, default=0.05)
    base.add_argument("--bins", type=int, default=50)
    base.add_argument("--out", default="cutpoints_mt.json")
    base.set_defaults(func=cmd_baseline)

    ev = sub.add_parser("evaluate", help="score detections against a known truth")
    ev.add_argument("--data", required=True)
    ev.add_argument("--truth", required=True)
    ev.add_argument("--cutpoints", action="append", required=True,
                    metavar="NAME=FILE", help="repeatable; NAME defaults to the file stem")
    ev.add_argument("--test-split", type=float, default=0.3)
    ev.add_argument("--seed", type=int, default=0)
    ev.add_argument("--threads", type=int, default=1)
    ev.add_argument("--out", default="metrics.csv")
    ev.set_defaults(func=cmd_evaluate)

    bench = sub.add_parser("bench", help="wall-clock comparison of the detectors")
    bench.add_argument("--sweep", choices=("n", "p"), required=True)
    bench.add_argument("--values", required=True, help="comma-separated sweep values")
    bench.add_argument("--reps", type=int, default=3)
    bench.add_argument("--n", type=int, default=2000, help="fixed n when sweeping p")
    bench.add_argument("--p", type=int, default=1, help="fixed p when sweeping n")
    bench.add_argument("--k-star", type=int, default=1)
    bench.add_argument("--bins", type=int, default=50)
    bench.add_argument("--seed", type=int, default=0)
    bench.add_argument("--out", default="bench.csv")
    bench.set_defaults(func=cmd_bench)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        return args.func(args)
    except ValidationError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 3
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 3
    except (json.JSONDecodeError, KeyError) as exc:
        print(f"error: malformed input file ({exc})", file=sys.stderr)
        return 3
    except (NumericError, np.linalg.LinAlgError, FloatingPointError) as exc:
        print(f"numeric failure: {exc}", file=sys.stderr)
        return 4


if __name__ == "__main__":
    sys.exit(main())
