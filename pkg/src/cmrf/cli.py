"""Command-line interface and experiment driver.

Subcommands: ``sample`` (draw a dataset from the benchmark generative
model), ``fit`` (fit one model and score it), ``score`` (re-score a
saved model against a dataset), ``kld`` (divergence of a saved model
from the generative model), and ``sweep`` (full multi-trial truncation
sweep writing per-trial and aggregate CSV tables).

All randomness flows from the seeds in the configuration, so identical
invocations produce byte-identical outputs.  The environment variable
``CMRF_OUTPUT_DIR`` supplies the default directory for output files.
"""

import argparse
import configparser
import math
import os
import sys
from dataclasses import dataclass, field

import numpy as np

from .basis import make_basis
from .core import build_chain, build_grid, load_dataset, save_dataset
from .evaluate import mc_log_partition, kld_estimate, score_model
from .infer import chain_marginals_exact, discretize
from .learn import fit, load_model, recover_coefficients, save_model
from .sample import SamplerConfig, generative_energy, mh_sample

TRIAL_HEADER = "trial,K,loglik,loglik_se,aic,kld,kld_se,lnZ,lnZ_se,seed"
AGGREGATE_HEADER = "K,mean_loglik,sd_loglik,mean_aic,sd_aic,mean_kld,sd_kld,argmin_count"
SCORE_HEADER = "K,loglik,loglik_se,aic,kld,kld_se,lnZ,lnZ_se,M,seed"


@dataclass
class ExperimentConfig:
    """Settings for one sweep; defaults match the benchmark protocol."""

    graph_kind: str = "chain"
    n: int = 9
    rows: int = 3
    cols: int = 3
    interval: tuple = (0.0, 1.0)
    basis_kind: str = "cosine"
    max_order: int = 16
    N: int = 1000
    K_list: tuple = (0, 1, 2, 3, 4, 5, 6)
    epsilon: float = 1e-4
    M: int = 20_000
    trials: int = 100
    seed: int = 0
    burn_in: int = 10_000
    thinning: int = 10
    kld: bool = True
    kld_samples: int = 2000
    negate_generative: bool = False
    lnz_grid: int = 256
    output_dir: str = field(default_factory=lambda: os.environ.get("CMRF_OUTPUT_DIR", "."))

    def validate(self):
        if self.trials < 1:
            raise ValueError("trials must be >= 1")
        if any(k < 0 for k in self.K_list):
            raise ValueError("K values must be >= 0")
        if max(self.K_list) > self.max_order:
            raise ValueError(
                f"K_list contains {max(self.K_list)} > basis max_order {self.max_order}"
            )

    def build_graph(self):
        if self.graph_kind == "chain":
            return build_chain(self.n)
        if self.graph_kind == "grid":
            return build_grid(self.rows, self.cols)
        raise ValueError(f"unknown graph kind {self.graph_kind!r}")


def load_config(path):
    """Read an INI-style config file into an :class:`ExperimentConfig`."""
    if not os.path.exists(path):
        raise FileNotFoundError(path)
    cp = configparser.ConfigParser()
    cp.read(path)
    cfg = ExperimentConfig()

    if cp.has_section("graph"):
        g = cp["graph"]
        cfg.graph_kind = g.get("kind", cfg.graph_kind)
        cfg.n = g.getint("n", cfg.n)
        cfg.rows = g.getint("rows", cfg.rows)
        cfg.cols = g.getint("cols", cfg.cols)
        if "interval" in g:
            lo, hi = (float(v) for v in g["interval"].split(","))
            cfg.interval = (lo, hi)
    if cp.has_section("sampler"):
        s = cp["sampler"]
        cfg.burn_in = s.getint("burn_in", cfg.burn_in)
        cfg.thinning = s.getint("thinning", cfg.thinning)
        cfg.seed = s.getint("seed", cfg.seed)
        cfg.negate_generative = s.getboolean("negate", cfg.negate_generative)
    if cp.has_section("eval"):
        e = cp["eval"]
        cfg.basis_kind = e.get("basis", cfg.basis_kind)
        cfg.max_order = e.getint("max_order", cfg.max_order)
        cfg.N = e.getint("N", cfg.N)
        if "K_list" in e:
            cfg.K_list = tuple(int(v) for v in e["K_list"].split(","))
        cfg.epsilon = e.getfloat("epsilon", cfg.epsilon)
        cfg.M = e.getint("M", cfg.M)
        cfg.trials = e.getint("trials", cfg.trials)
        cfg.kld = e.getboolean("kld", cfg.kld)
        cfg.kld_samples = e.getint("kld_samples", cfg.kld_samples)
        cfg.lnz_grid = e.getint("lnz_grid", cfg.lnz_grid)
    if cp.has_section("output"):
        cfg.output_dir = cp["output"].get("dir", cfg.output_dir)
    return cfg


def _fmt(value):
    if value is None:
        return ""
    if isinstance(value, float):
        return repr(value)
    return str(value)


def _is_chain(graph):
    return graph.edges == tuple((i, i + 1) for i in range(graph.n - 1))


def _model_log_partition(model, graph, M, seed, lnz_grid):
    """Exact transfer-matrix value on chains, Monte Carlo otherwise."""
    if _is_chain(graph):
        _, lnz = chain_marginals_exact(discretize(model, lnz_grid))
        return lnz, 0.0
    return mc_log_partition(model, M, seed)


def _run_trial(config, graph, basis, gen, trial, trial_seed):
    """All per-K scores of one trial; returns a list of row dicts."""
    data = mh_sample(
        gen, config.N,
        SamplerConfig(config.burn_in, config.thinning, trial_seed),
    )
    if config.kld:
        kld_data = mh_sample(
            gen, config.kld_samples,
            SamplerConfig(config.burn_in, config.thinning, (trial_seed, 1)),
        )
        lnz_gen, se_gen = _model_log_partition(
            gen, graph, config.M, (trial_seed, 2), config.lnz_grid
        )
        gen_logp = -gen.energy(kld_data.values) - lnz_gen

    rows = []
    for K in config.K_list:
        model = fit(data, graph, basis, K, config.epsilon)
        lnz, lnz_se = _model_log_partition(
            model, graph, config.M, (trial_seed, 3, K), config.lnz_grid
        )
        kld_val = kld_se = None
        if config.kld:
            gaps = gen_logp - (-model.energy(kld_data.values) - lnz)
            n = graph.n
            kld_val = float(np.mean(gaps)) / n
            se_mean = float(np.std(gaps, ddof=1)) / math.sqrt(config.kld_samples)
            kld_se = math.sqrt(se_mean**2 + se_gen**2 + lnz_se**2) / n
        score = score_model(model, data, K, lnz, lnz_se, config.M, trial_seed,
                            kld=kld_val, kld_se=kld_se)
        rows.append({"trial": trial, "seed": trial_seed, "score": score})
    return rows


def run_sweep(config):
    """Run every trial of the sweep and write the two CSV reports.

    A failing trial is logged to stderr and skipped; rows of finished
    trials are flushed as they complete.  Returns the per-trial and
    aggregate CSV paths.
    """
    config.validate()
    graph = config.build_graph()
    basis = make_basis(config.basis_kind, config.interval, config.max_order)
    gen = generative_energy(graph, config.interval, config.negate_generative)

    os.makedirs(config.output_dir, exist_ok=True)
    trial_path = os.path.join(config.output_dir, "sweep_trials.csv")
    agg_path = os.path.join(config.output_dir, "sweep_aggregate.csv")

    all_rows = []
    with open(trial_path, "w", encoding="utf-8") as fh:
        fh.write(TRIAL_HEADER + "\n")
        for trial in range(config.trials):
            trial_seed = config.seed + trial
            try:
                rows = _run_trial(config, graph, basis, gen, trial, trial_seed)
            except Exception as exc:  # abort only this trial
                print(f"trial {trial} failed: {exc}", file=sys.stderr)
                continue
            for row in rows:
                s = row["score"]
                fh.write(",".join(_fmt(v) for v in (
                    row["trial"], s.K, s.loglik, s.loglik_se, s.aic,
                    s.kld, s.kld_se, s.log_partition, s.log_partition_se,
                    row["seed"],
                )) + "\n")
            fh.flush()
            all_rows.extend(rows)

    _write_aggregate(agg_path, config.K_list, all_rows)
    return trial_path, agg_path


def _write_aggregate(path, K_list, rows):
    by_trial = {}
    for row in rows:
        by_trial.setdefault(row["trial"], {})[row["score"].K] = row["score"]

    argmin_count = {K: 0 for K in K_list}
    for scores in by_trial.values():
        best = min(scores, key=lambda K: scores[K].aic)
        argmin_count[best] += 1

    def stats(values):
        vals = [v for v in values if v is not None]
        if not vals:
            return None, None
        mean = float(np.mean(vals))
        sd = float(np.std(vals, ddof=1)) if len(vals) > 1 else 0.0
        return mean, sd

    with open(path, "w", encoding="utf-8") as fh:
        fh.write(AGGREGATE_HEADER + "\n")
        for K in K_list:
            scores = [t[K] for t in by_trial.values() if K in t]
            mean_l, sd_l = stats([s.loglik for s in scores])
            mean_a, sd_a = stats([s.aic for s in scores])
            mean_k, sd_k = stats([s.kld for s in scores])
            fh.write(",".join(_fmt(v) for v in (
                K, mean_l, sd_l, mean_a, sd_a, mean_k, sd_k, argmin_count[K],
            )) + "\n")


def write_score_csv(path, score):
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(SCORE_HEADER + "\n")
        fh.write(",".join(_fmt(v) for v in (
            score.K, score.loglik, score.loglik_se, score.aic,
            score.kld, score.kld_se, score.log_partition,
            score.log_partition_se, score.M, score.seed,
        )) + "\n")


def fit_once(data_path, graph, basis, K, epsilon, M, seed,
             model_path, score_path, coeffs_path=None, lnz_grid=256):
    """Fit a model to a dataset file, score it, and write the outputs."""
    if not os.path.exists(data_path):
        raise FileNotFoundError(data_path)
    data = load_dataset(data_path, basis.interval)
    model = fit(data, graph, basis, K, epsilon)
    lnz, lnz_se = _model_log_partition(model, graph, M, seed, lnz_grid)
    score = score_model(model, data, K, lnz, lnz_se, M, seed)
    save_model(model, model_path)
    write_score_csv(score_path, score)
    if coeffs_path is not None:
        _write_coefficients(coeffs_path, model)
    return model, score


def _write_coefficients(path, model):
    coeffs = recover_coefficients(model)
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("# node i s value / edge u v s t value\n")
        for i in range(coeffs.graph.n):
            for s in range(1, coeffs.K + 1):
                fh.write(f"node {i} {s} {coeffs.node_energy[i, s - 1]!r}\n")
        for (u, v), mat in coeffs.edge_energy.items():
            for s in range(1, coeffs.K + 1):
                for t in range(1, coeffs.K + 1):
                    fh.write(f"edge {u} {v} {s} {t} {mat[s - 1, t - 1]!r}\n")


# -- argument handling ----------------------------------------------------


def _parse_graph(text):
    kind, _, rest = text.partition(":")
    if kind == "chain":
        return build_chain(int(rest))
    if kind == "grid":
        r, _, c = rest.partition("x")
        return build_grid(int(r), int(c))
    raise ValueError(f"unknown graph spec {text!r} (use chain:N or grid:RxC)")


def _out_path(args, name):
    base = getattr(args, "output_dir", None) or os.environ.get("CMRF_OUTPUT_DIR", ".")
    if os.path.isabs(name):
        return name
    os.makedirs(base, exist_ok=True)
    return os.path.join(base, name)


def _add_common(p):
    p.add_argument("--output-dir", default=None,
                   help="directory for outputs (default: $CMRF_OUTPUT_DIR or .)")


def _build_parser():
    parser = argparse.ArgumentParser(
        prog="cmrf",
        description="Learn, validate, and select continuous pairwise MRFs.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("sample", help="draw a dataset from the generative model")
    p.add_argument("--graph", default="chain:9")
    p.add_argument("--interval", nargs=2, type=float, default=(0.0, 1.0))
    p.add_argument("--count", type=int, default=1000)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--burn-in", type=int, default=10_000)
    p.add_argument("--thinning", type=int, default=10)
    p.add_argument("--negate-generative-energy", action="store_true")
    p.add_argument("--out", default="dataset.csv")
    _add_common(p)

    p = sub.add_parser("fit", help="fit one model to a dataset and score it")
    p.add_argument("--data", required=True)
    p.add_argument("--graph", default="chain:9")
    p.add_argument("--interval", nargs=2, type=float, default=(0.0, 1.0))
    p.add_argument("--basis", default="cosine", choices=("cosine", "legendre"))
    p.add_argument("-K", "--order", type=int, default=2)
    p.add_argument("--epsilon", type=float, default=1e-4)
    p.add_argument("--M", type=int, default=20_000)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out-model", default="model.txt")
    p.add_argument("--out-score", default="score.csv")
    p.add_argument("--dump-coefficients", default=None)
    _add_common(p)

    p = sub.add_parser("score", help="score a saved model against a dataset")
    p.add_argument("--model", required=True)
    p.add_argument("--data", required=True)
    p.add_argument("--M", type=int, default=20_000)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", default="score.csv")
    _add_common(p)

    p = sub.add_parser("kld", help="divergence of a saved model from the generative model")
    p.add_argument("--model", required=True)
    p.add_argument("--samples", type=int, default=2000)
    p.add_argument("--M", type=int, default=20_000)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--negate-generative-energy", action="store_true")
    p.add_argument("--out", default="kld.csv")
    _add_common(p)

    p = sub.add_parser("sweep", help="multi-trial truncation sweep from a config file")
    p.add_argument("--config", required=True)
    p.add_argument("--trials", type=int, default=None)
    p.add_argument("--N", type=int, default=None)
    p.add_argument("--seed", type=int, default=None)
    _add_common(p)
    return parser


def _cmd_sample(args):
    graph = _parse_graph(args.graph)
    gen = generative_energy(graph, tuple(args.interval), args.negate_generative_energy)
    cfg = SamplerConfig(args.burn_in, args.thinning, args.seed)
    data = mh_sample(gen, args.count, cfg)
    out = _out_path(args, args.out)
    save_dataset(data, out)
    print(out)
    return 0


def _cmd_fit(args):
    graph = _parse_graph(args.graph)
    basis = make_basis(args.basis, tuple(args.interval))
    coeffs = _out_path(args, args.dump_coefficients) if args.dump_coefficients else None
    _, score = fit_once(
        args.data, graph, basis, args.order, args.epsilon, args.M, args.seed,
        _out_path(args, args.out_model), _out_path(args, args.out_score),
        coeffs_path=coeffs,
    )
    print(f"K={score.K} loglik={score.loglik!r} aic={score.aic!r}")
    return 0


def _cmd_score(args):
    for path in (args.model, args.data):
        if not os.path.exists(path):
            raise FileNotFoundError(path)
    model = load_model(args.model)
    data = load_dataset(args.data, model.interval)
    lnz, lnz_se = _model_log_partition(model, model.graph, args.M, args.seed, 256)
    score = score_model(model, data, model.K, lnz, lnz_se, args.M, args.seed)
    out = _out_path(args, args.out)
    write_score_csv(out, score)
    print(f"K={score.K} loglik={score.loglik!r} aic={score.aic!r}")
    return 0


def _cmd_kld(args):
    if not os.path.exists(args.model):
        raise FileNotFoundError(args.model)
    model = load_model(args.model)
    gen = generative_energy(model.graph, model.interval, args.negate_generative_energy)
    est, se = kld_estimate(gen, model, args.samples, args.seed, M=args.M)
    out = _out_path(args, args.out)
    with open(out, "w", encoding="utf-8") as fh:
        fh.write("kld,kld_se,samples,M,seed\n")
        fh.write(f"{est!r},{se!r},{args.samples},{args.M},{args.seed}\n")
    print(f"kld={est!r} se={se!r}")
    return 0


def _cmd_sweep(args):
    config = load_config(args.config)
    if args.trials is not None:
        config.trials = args.trials
    if args.N is not None:
        config.N = args.N
    if args.seed is not None:
        config.seed = args.seed
    if args.output_dir is not None:
        config.output_dir = args.output_dir
    trial_path, agg_path = run_sweep(config)
    print(trial_path)
    print(agg_path)
    return 0


_COMMANDS = {
    "sample": _cmd_sample,
    "fit": _cmd_fit,
    "score": _cmd_score,
    "kld": _cmd_kld,
    "sweep": _cmd_sweep,
}


def main(argv=None):
    args = _build_parser().parse_args(argv)
    try:
        return _COMMANDS[args.command](args)
    except FileNotFoundError as exc:
        print(f"error: no such file: {exc.args[0]}", file=sys.stderr)
        return 2
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
