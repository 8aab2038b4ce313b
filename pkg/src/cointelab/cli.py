"""Command-line front end: simulation, diagnostics, moment and weight
queries, PDE-surrogate training, backtests, band-strategy training, and the
full multi-strategy comparison experiment.

Every output file starts with a ``# root_seed=<seed>`` line followed by a
tab-separated column header; floats are written with repr so a rerun with
the same seed reproduces the files byte for byte.

Exit codes: 0 success, 2 invalid configuration, 3 numerical fault, 4 I/O.
"""

from __future__ import annotations

import argparse
import json
import sys
from dataclasses import dataclass, fields
from pathlib import Path

import numpy as np

from cointelab import backtest as btmod
from cointelab import bandml as bmlmod
from cointelab import dgm as dgmmod
from cointelab import moments as momod
from cointelab import mvc as mvcmod
from cointelab import net as netmod
from cointelab import sim as simmod
from cointelab.sim import CointelationParams, DAILY_DT

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_NUMERICAL = 3
EXIT_IO = 4

HISTOGRAM_BINS = 41
STRATEGY_LABELS = ("MVC", "SC", "FM", "ML_LS", "ML")


class ConfigError(ValueError):
    """The supplied flags/config file do not form a valid run."""


# -- experiment configuration ------------------------------------------------


@dataclass(frozen=True)
class ExperimentConfig:
    mu: float = 0.05
    sigma: float = 0.17
    eta: float = 0.16
    kappa: float = 0.1
    rho: float = -0.6
    x0: float = 1.0
    y0: float = 1.0
    horizon_days: int = 1000
    n_paths: int = 500
    seed: int = 0
    tau: float = 0.5
    gamma: float = 0.5
    pi_max: float = dgmmod.DEFAULT_PI_MAX
    h: int = 5
    grid_step: float = 0.05
    substeps: int = 8
    checkpoint: str = ""
    train_dgm: bool = False
    dgm_steps: int = 20000
    dgm_alpha0: float = 1e-3
    dgm_decay: float = 0.9999
    dgm_width: int = 50
    dgm_layers: int = 3
    dgm_seed: int = 0
    outdir: str = "experiment-out"

    def __post_init__(self):
        if self.n_paths < 1:
            raise ConfigError("n_paths must be >= 1")
        if self.horizon_days < 2:
            raise ConfigError("horizon_days must be >= 2")

    def params(self) -> CointelationParams:
        return CointelationParams(
            mu=self.mu, sigma=self.sigma, eta=self.eta, kappa=self.kappa,
            rho=self.rho, x0=self.x0, y0=self.y0,
        )


@dataclass(frozen=True)
class ExperimentSummary:
    n_paths: int
    seed: int
    labels: tuple
    mean_returns: dict
    stderrs: dict
    win_rates: dict
    histograms: dict  # name -> (bin_edges, counts)
    ranking: str


def _percent_ranking(means: dict) -> str:
    ordered = sorted(means, key=lambda k: means[k])
    return " < ".join(ordered)


def run_experiment(config: ExperimentConfig, model=None):
    """Simulate doubled-horizon paths, train the band strategies on the
    first half, evaluate all five strategies on the second half."""
    params = config.params()
    momod.check_denominators(params)
    dt = DAILY_DT
    eval_horizon = config.horizon_days * dt

    if model is None:
        if config.checkpoint:
            model = netmod.load_checkpoint(config.checkpoint)
        elif config.train_dgm:
            problem = dgmmod.cointelation_pde_problem(
                params, config.gamma, horizon=eval_horizon, seed=config.seed
            )
            model = netmod.init_network(config.dgm_width, config.dgm_layers, seed=config.dgm_seed)
            tc = dgmmod.TrainConfig(
                alpha0=config.dgm_alpha0,
                lambda_decay=config.dgm_decay,
                max_steps=config.dgm_steps,
                seed=config.dgm_seed,
            )
            model, _ = dgmmod.train(model, problem, tc)
        else:
            raise ConfigError("no checkpoint supplied and DGM training disabled")

    paths = simmod.simulate_pair_batch(
        params,
        2 * config.horizon_days * dt,
        config.n_paths,
        dt=dt,
        substeps=config.substeps,
        root_seed=config.seed,
    )

    m = config.horizon_days
    mvc_rule = btmod.MVCRule(params, tau=config.tau, dt=dt)
    returns = {label: np.empty(config.n_paths) for label in STRATEGY_LABELS}
    example = None

    for j, path in enumerate(paths):
        train_half = path.slice(0, m + 1)
        eval_half = path.slice(m, 2 * m + 1)
        rx = np.diff(eval_half.x) / eval_half.x[:-1]
        ry = np.diff(eval_half.y) / eval_half.y[:-1]

        w_mvc1, w_mvc2 = mvc_rule.weights_for_path(eval_half)

        t_rel = eval_half.times[:-1]
        z = eval_half.x[:-1] / eval_half.y[:-1]
        try:
            pi = np.asarray(
                dgmmod.optimal_pi(
                    model, t_rel, z, params, config.gamma, pi_max=config.pi_max
                ),
                dtype=float,
            )
        except dgmmod.SurrogateEvaluationError:
            pi = np.zeros(len(t_rel))
        w_sc = np.column_stack([pi, -pi])
        w_mvc = np.column_stack([w_mvc1, w_mvc2])

        w_ds, used_sc = btmod.switch_weights(w_sc, w_mvc, rx, ry)

        ml = bmlmod.fit_band_strategies(train_half, h=config.h, grid_step=config.grid_step)
        ml_ls = bmlmod.fit_band_strategies(
            train_half, h=config.h, grid_step=config.grid_step, kinds=("PM", "MP")
        )
        w_ml = np.column_stack(bmlmod.BandRule(ml).weights_for_path(eval_half))
        w_mlls = np.column_stack(bmlmod.BandRule(ml_ls).weights_for_path(eval_half))

        schedules = {"MVC": w_mvc, "SC": w_sc, "FM": w_ds, "ML_LS": w_mlls, "ML": w_ml}
        for label, w in schedules.items():
            growth = 1.0 + w[:, 0] * rx + w[:, 1] * ry
            wealth = btmod.wealth_from_growth(growth, 1.0)
            returns[label][j] = wealth[-1] - 1.0

        if j == 0:
            example = (eval_half, schedules)

    means = {k: float(v.mean()) for k, v in returns.items()}
    ses = {
        k: float(v.std(ddof=1) / np.sqrt(config.n_paths)) if config.n_paths > 1 else 0.0
        for k, v in returns.items()
    }
    win_rates = {}
    for a, b in (("ML", "FM"), ("ML_LS", "SC"), ("SC", "MVC"), ("FM", "SC")):
        win_rates[f"{a}>{b}"] = float(np.mean(returns[a] > returns[b]))

    histograms = {}
    for a, b in (("ML", "FM"), ("ML_LS", "SC")):
        excess = returns[a] - returns[b]
        lo, hi = float(excess.min()), float(excess.max())
        if hi <= lo:
            lo, hi = lo - 0.5, hi + 0.5
        counts, edges = np.histogram(excess, bins=HISTOGRAM_BINS, range=(lo, hi))
        histograms[f"{a}_minus_{b}"] = (edges, counts)

    summary = ExperimentSummary(
        n_paths=config.n_paths,
        seed=config.seed,
        labels=STRATEGY_LABELS,
        mean_returns=means,
        stderrs=ses,
        win_rates=win_rates,
        histograms=histograms,
        ranking=_percent_ranking(means),
    )
    return summary, returns, example


# -- file plumbing -----------------------------------------------------------


def _fmt(value):
    if isinstance(value, (float, np.floating)):
        return repr(float(value))
    return str(value)


def write_table(path, columns, rows, seed, trailer=()):
    lines = [f"# root_seed={seed}", "\t".join(columns)]
    for row in rows:
        lines.append("\t".join(_fmt(v) for v in row))
    lines.extend(trailer)
    Path(path).write_text("\n".join(lines) + "\n")


def emit_outputs(summary: ExperimentSummary, returns: dict, example, outdir) -> list:
    out = Path(outdir)
    out.mkdir(parents=True, exist_ok=True)
    written = []

    p = out / "summary.tsv"
    write_table(
        p,
        ["strategy", "mean_return", "stderr"],
        [(k, summary.mean_returns[k], summary.stderrs[k]) for k in summary.labels],
        summary.seed,
        trailer=[f"# ranking: {summary.ranking}"],
    )
    written.append(p)

    p = out / "win_rates.tsv"
    write_table(
        p,
        ["comparison", "win_rate"],
        sorted(summary.win_rates.items()),
        summary.seed,
    )
    written.append(p)

    p = out / "per_path_returns.tsv"
    rows = [
        (j, *[returns[k][j] for k in summary.labels])
        for j in range(summary.n_paths)
    ]
    write_table(p, ["path", *summary.labels], rows, summary.seed)
    written.append(p)

    for name, (edges, counts) in summary.histograms.items():
        p = out / f"hist_{name}.tsv"
        write_table(
            p,
            ["bin_lo", "bin_hi", "count"],
            [(edges[i], edges[i + 1], int(counts[i])) for i in range(len(counts))],
            summary.seed,
        )
        written.append(p)

    if example is not None:
        eval_half, schedules = example
        p = out / "illustrative_path.tsv"
        cols = ["step", "time", "x", "y", "spread"]
        for label in summary.labels:
            cols.extend([f"w1_{label}", f"w2_{label}"])
        rows = []
        for k in range(len(eval_half.times) - 1):
            row = [
                k,
                eval_half.times[k],
                eval_half.x[k],
                eval_half.y[k],
                eval_half.x[k] - eval_half.y[k],
            ]
            for label in summary.labels:
                row.extend([schedules[label][k, 0], schedules[label][k, 1]])
            rows.append(row)
        write_table(p, cols, rows, summary.seed)
        written.append(p)
    return written


# -- argument plumbing --------------------------------------------------------


def _add_model_flags(sub):
    sub.add_argument("--mu", type=float, default=None)
    sub.add_argument("--sigma", type=float, default=None)
    sub.add_argument("--eta", type=float, default=None)
    sub.add_argument("--kappa", type=float, default=None)
    sub.add_argument("--rho", type=float, default=None)
    sub.add_argument("--x0", type=float, default=None)
    sub.add_argument("--y0", type=float, default=None)


_PARAM_DEFAULTS = dict(mu=0.05, sigma=0.17, eta=0.16, kappa=0.1, rho=-0.6, x0=1.0, y0=1.0)


def _params_from_args(args) -> CointelationParams:
    vals = {
        k: getattr(args, k) if getattr(args, k) is not None else v
        for k, v in _PARAM_DEFAULTS.items()
    }
    return CointelationParams(**vals)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="cointelab",
        description="Simulation, diagnostics, PDE-surrogate control, and "
        "strategy comparison for mean-reverting asset pairs.",
    )
    subs = parser.add_subparsers(dest="command", required=True)

    s = subs.add_parser("simulate", help="simulate joint price paths")
    _add_model_flags(s)
    s.add_argument("--horizon-days", type=int, default=1000)
    s.add_argument("--n-paths", type=int, default=1)
    s.add_argument("--seed", type=int, default=0)
    s.add_argument("--substeps", type=int, default=8)
    s.add_argument("--out", required=True)

    s = subs.add_parser("diagnose", help="run the pair-relationship test on simulated data")
    _add_model_flags(s)
    s.add_argument("--horizon-days", type=int, default=1000)
    s.add_argument("--seed", type=int, default=0)
    s.add_argument("--substeps", type=int, default=8)
    s.add_argument("--gamma-c", type=float, default=None,
                   help="crossing constant; fitted from no-reversion controls when omitted")
    s.add_argument("--lambda-ic", dest="lambda_ic", type=float, default=None,
                   help="inferred-correlation decay constant; fitted when omitted")
    s.add_argument("--n-controls", type=int, default=200)
    s.add_argument("--out", default=None)

    s = subs.add_parser("moments", help="closed-form one-step return moments")
    _add_model_flags(s)
    s.add_argument("--x", type=float, default=1.0)
    s.add_argument("--y", type=float, default=1.0)
    s.add_argument("--dt", type=float, default=DAILY_DT)
    s.add_argument("--out", default=None)

    s = subs.add_parser("mvc", help="closed-form mean-variance weights")
    _add_model_flags(s)
    s.add_argument("--x", type=float, default=1.0)
    s.add_argument("--y", type=float, default=1.0)
    s.add_argument("--dt", type=float, default=DAILY_DT)
    s.add_argument("--tau", type=float, default=mvcmod.DEFAULT_TAU)
    s.add_argument("--out", default=None)

    s = subs.add_parser("dgm-train", help="train a PDE surrogate and save a checkpoint")
    _add_model_flags(s)
    s.add_argument("--problem", choices=("merton", "cointelation"), default="cointelation")
    s.add_argument("--gamma", type=float, default=0.5)
    s.add_argument("--horizon-days", type=int, default=1000)
    s.add_argument("--merton-T", type=float, default=1.0)
    s.add_argument("--x-lo", type=float, default=0.1)
    s.add_argument("--x-hi", type=float, default=2.0)
    s.add_argument("--steps", type=int, default=20000)
    s.add_argument("--alpha0", type=float, default=1e-3)
    s.add_argument("--decay", type=float, default=0.9999)
    s.add_argument("--width", type=int, default=50)
    s.add_argument("--layers", type=int, default=3)
    s.add_argument("--batch-interior", type=int, default=256)
    s.add_argument("--batch-terminal", type=int, default=64)
    s.add_argument("--tolerance", type=float, default=1e-8)
    s.add_argument("--seed", type=int, default=0)
    s.add_argument("--checkpoint", required=True)
    s.add_argument("--report", default=None)

    s = subs.add_parser("backtest", help="run one strategy on one simulated path")
    _add_model_flags(s)
    s.add_argument("--strategy", choices=("fixed", "mvc", "sc", "ds"), required=True)
    s.add_argument("--horizon-days", type=int, default=1000)
    s.add_argument("--seed", type=int, default=0)
    s.add_argument("--substeps", type=int, default=8)
    s.add_argument("--v0", type=float, default=1.0)
    s.add_argument("--tau", type=float, default=mvcmod.DEFAULT_TAU)
    s.add_argument("--gamma", type=float, default=0.5)
    s.add_argument("--pi-max", dest="pi_max", type=float, default=dgmmod.DEFAULT_PI_MAX)
    s.add_argument("--w1", type=float, default=0.5)
    s.add_argument("--w2", type=float, default=0.5)
    s.add_argument("--checkpoint", default=None)
    s.add_argument("--out", required=True)

    s = subs.add_parser("bandml-train", help="train the band-wise spread strategy")
    _add_model_flags(s)
    s.add_argument("--horizon-days", type=int, default=1000)
    s.add_argument("--seed", type=int, default=0)
    s.add_argument("--substeps", type=int, default=8)
    s.add_argument("--h", type=int, default=bmlmod.DEFAULT_H)
    s.add_argument("--grid-step", type=float, default=bmlmod.DEFAULT_GRID_STEP)
    s.add_argument("--kinds", default="PP,PM,MP")
    s.add_argument("--out", required=True)

    s = subs.add_parser("experiment", help="full five-strategy comparison")
    s.add_argument("--config", default=None, help="JSON file of ExperimentConfig fields")
    _add_model_flags(s)
    s.add_argument("--horizon-days", dest="horizon_days", type=int, default=None)
    s.add_argument("--n-paths", dest="n_paths", type=int, default=None)
    s.add_argument("--seed", type=int, default=None)
    s.add_argument("--tau", type=float, default=None)
    s.add_argument("--gamma", type=float, default=None)
    s.add_argument("--pi-max", dest="pi_max", type=float, default=None)
    s.add_argument("--h", type=int, default=None)
    s.add_argument("--grid-step", dest="grid_step", type=float, default=None)
    s.add_argument("--substeps", type=int, default=None)
    s.add_argument("--checkpoint", default=None)
    s.add_argument("--train-dgm", dest="train_dgm", action="store_true", default=None)
    s.add_argument("--dgm-steps", dest="dgm_steps", type=int, default=None)
    s.add_argument("--dgm-alpha0", dest="dgm_alpha0", type=float, default=None)
    s.add_argument("--dgm-decay", dest="dgm_decay", type=float, default=None)
    s.add_argument("--dgm-width", dest="dgm_width", type=int, default=None)
    s.add_argument("--dgm-layers", dest="dgm_layers", type=int, default=None)
    s.add_argument("--dgm-seed", dest="dgm_seed", type=int, default=None)
    s.add_argument("--outdir", default=None)

    return parser


def experiment_config_from_args(args) -> ExperimentConfig:
    values = {}
    if args.config:
        raw = json.loads(Path(args.config).read_text())
        if not isinstance(raw, dict):
            raise ConfigError("config file must hold a JSON object")
        known = {f.name for f in fields(ExperimentConfig)}
        unknown = set(raw) - known
        if unknown:
            raise ConfigError(f"unknown config keys: {sorted(unknown)}")
        values.update(raw)
    for f in fields(ExperimentConfig):
        flag = getattr(args, f.name, None)
        if flag is not None:
            values[f.name] = flag
    return ExperimentConfig(**values)


# -- subcommand bodies ---------------------------------------------------------


def _cmd_simulate(args):
    params = _params_from_args(args)
    paths = simmod.simulate_pair_batch(
        params, args.horizon_days * DAILY_DT, args.n_paths,
        substeps=args.substeps, root_seed=args.seed,
    )
    rows = []
    for j, p in enumerate(paths):
        for k in range(len(p.times)):
            rows.append((j, k, p.times[k], p.x[k], p.y[k]))
    write_table(args.out, ["path", "step", "time", "x", "y"], rows, args.seed)
    return EXIT_OK


def _report_rows(report):
    rows = [("applicable", report.applicable), ("passed", report.passed)]
    for i, d in enumerate(report.delta_ts):
        rows.append((f"inferred_corr_empirical_dt{d}", report.empirical[i]))
        rows.append((f"inferred_corr_approx_dt{d}", report.approx[i]))
    rows.extend(
        [
            ("correlation_pass", report.correlation_pass),
            ("observed_crosses", report.observed_crosses),
            ("observed_crosses_normalized", report.observed_crosses_normalized),
            ("expected_crosses", report.expected_crosses),
            ("crossing_pass", report.crossing_pass),
        ]
    )
    return rows


def _cmd_diagnose(args):
    params = _params_from_args(args)
    path = simmod.simulate_pair(
        params, args.horizon_days * DAILY_DT, substeps=args.substeps, seed=args.seed
    )
    gamma_c = args.gamma_c
    if gamma_c is None:
        gamma_c = simmod.fit_gamma(
            params, n_steps=args.horizon_days, n_paths=args.n_controls, seed=args.seed
        )
    lambda_ic = args.lambda_ic
    if lambda_ic is None:
        lambda_ic = simmod.fit_lambda_ic(
            params, n_steps=args.horizon_days, seed=args.seed
        )
    report = simmod.cointelation_test(
        path.x, path.y, params.kappa, gamma_c, lambda_ic=lambda_ic
    )
    rows = [("gamma_c", gamma_c), ("lambda_ic", lambda_ic)] + _report_rows(report)
    if args.out:
        write_table(args.out, ["quantity", "value"], rows, args.seed)
    else:
        for k, v in rows:
            print(f"{k}\t{_fmt(v)}")
    return EXIT_OK


def _cmd_moments(args):
    params = _params_from_args(args)
    m = momod.return_moments(params, args.x, args.y, args.dt)
    rows = [
        ("e_rx", m.e_rx), ("e_ry", m.e_ry), ("var_rx", m.var_rx),
        ("var_ry", m.var_ry), ("cov_rxy", m.cov_rxy), ("mean_y", m.mean_y),
        ("mean_xy", m.mean_xy), ("mean_y2", m.mean_y2), ("flagged", m.flagged),
    ]
    if args.out:
        write_table(args.out, ["quantity", "value"], rows, 0)
    else:
        for k, v in rows:
            print(f"{k}\t{_fmt(v)}")
    return EXIT_OK


def _cmd_mvc(args):
    params = _params_from_args(args)
    m = momod.return_moments(params, args.x, args.y, args.dt)
    cov = mvcmod.covariance_matrix(m)
    w = mvcmod.mvc_weights(np.array([m.e_rx, m.e_ry]), cov, args.tau)
    util = mvcmod.mvc_utility(w.as_array(), np.array([m.e_rx, m.e_ry]), cov, args.tau)
    rows = [("h1", w.h1), ("h2", w.h2), ("clipped", w.clipped), ("utility", util)]
    if args.out:
        write_table(args.out, ["quantity", "value"], rows, 0)
    else:
        for k, v in rows:
            print(f"{k}\t{_fmt(v)}")
    return EXIT_OK


def _cmd_dgm_train(args):
    if args.problem == "merton":
        mu = args.mu if args.mu is not None else _PARAM_DEFAULTS["mu"]
        sigma = args.sigma if args.sigma is not None else _PARAM_DEFAULTS["sigma"]
        problem = dgmmod.merton_problem(
            mu, sigma, args.gamma, args.merton_T, x_range=(args.x_lo, args.x_hi)
        )
    else:
        params = _params_from_args(args)
        problem = dgmmod.cointelation_pde_problem(
            params, args.gamma, horizon=args.horizon_days * DAILY_DT, seed=args.seed
        )
    net = netmod.init_network(args.width, args.layers, seed=args.seed)
    tc = dgmmod.TrainConfig(
        alpha0=args.alpha0,
        lambda_decay=args.decay,
        batch_interior=args.batch_interior,
        batch_terminal=args.batch_terminal,
        max_steps=args.steps,
        tolerance=args.tolerance,
        seed=args.seed,
    )
    net, report = dgmmod.train(net, problem, tc)
    netmod.save_checkpoint(net, args.checkpoint)
    if args.report:
        rows = [(n, loss) for n, loss in report.loss_history]
        write_table(
            args.report, ["step", "loss"], rows, args.seed,
            trailer=[
                f"# steps_run={report.steps_run}",
                f"# final_loss={report.final_loss!r}",
                f"# clip_events={report.clip_events}",
                f"# converged={report.converged}",
                f"# diverged={report.diverged}",
            ],
        )
    if report.diverged:
        return EXIT_NUMERICAL
    return EXIT_OK


def _cmd_backtest(args):
    params = _params_from_args(args)
    path = simmod.simulate_pair(
        params, args.horizon_days * DAILY_DT, substeps=args.substeps, seed=args.seed
    )
    if args.strategy == "fixed":
        rule = lambda k, xs, ys: (args.w1, args.w2)  # noqa: E731
        label = "fixed-weights"
    elif args.strategy == "mvc":
        rule = btmod.mvc_strategy(params, tau=args.tau)
        label = "MVC"
    else:
        if not args.checkpoint:
            raise ConfigError(f"strategy {args.strategy} needs --checkpoint")
        model = netmod.load_checkpoint(args.checkpoint)
        sc_rule = btmod.sc_strategy(model, params, args.gamma, pi_max=args.pi_max)
        if args.strategy == "sc":
            rule, label = sc_rule, "SC"
        else:
            mvc_rule = btmod.mvc_strategy(params, tau=args.tau)
            rule = btmod.dynamic_switching(sc_rule, mvc_rule, v0=args.v0)
            label = "DS"
    trace = btmod.run_strategy(path, rule, args.v0, label=label)
    header = f"# root_seed={args.seed}\n"
    Path(args.out).write_text(header + btmod.trace_to_text(trace))
    return EXIT_OK


def _cmd_bandml_train(args):
    params = _params_from_args(args)
    path = simmod.simulate_pair(
        params, args.horizon_days * DAILY_DT, substeps=args.substeps, seed=args.seed
    )
    kinds = tuple(k.strip() for k in args.kinds.split(",") if k.strip())
    trained = bmlmod.fit_band_strategies(
        path, h=args.h, grid_step=args.grid_step, kinds=kinds
    )
    header = f"# root_seed={args.seed}\n"
    Path(args.out).write_text(header + bmlmod.strategies_to_text(trained))
    return EXIT_OK


def _cmd_experiment(args):
    config = experiment_config_from_args(args)
    summary, returns, example = run_experiment(config)
    emit_outputs(summary, returns, example, config.outdir)
    print(f"ranking: {summary.ranking}")
    for k in summary.labels:
        print(f"{k}\t{summary.mean_returns[k]!r}\t(se {summary.stderrs[k]!r})")
    for k in sorted(summary.win_rates):
        print(f"win_rate {k}\t{summary.win_rates[k]!r}")
    return EXIT_OK


_COMMANDS = {
    "simulate": _cmd_simulate,
    "diagnose": _cmd_diagnose,
    "moments": _cmd_moments,
    "mvc": _cmd_mvc,
    "dgm-train": _cmd_dgm_train,
    "backtest": _cmd_backtest,
    "bandml-train": _cmd_bandml_train,
    "experiment": _cmd_experiment,
}

_NUMERICAL_ERRORS = (
    momod.ParameterDegeneracyError,
    mvcmod.SingularCovarianceError,
    mvcmod.FlaggedMomentError,
    dgmmod.DegenerateProblemError,
    dgmmod.LossEvaluationError,
    dgmmod.SurrogateEvaluationError,
    simmod.SimulationError,
    simmod.UndefinedCorrelationError,
    np.linalg.LinAlgError,
    FloatingPointError,
    OverflowError,
    ZeroDivisionError,
)


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return _COMMANDS[args.command](args)
    except _NUMERICAL_ERRORS as exc:
        print(f"numerical fault: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    except OSError as exc:
        print(f"i/o error: {exc}", file=sys.stderr)
        return EXIT_IO
    except (ConfigError, ValueError, json.JSONDecodeError) as exc:
        print(f"invalid configuration: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
