"""Command-line surface: embed, update, recombine, eval, bench, gen.

Exit codes: 0 success, 1 usage error, 2 data error, 3 numeric failure.
Every run echoes its effective configuration to stderr as "# key = value"
lines; re-running with the same configuration reproduces the outputs.
"""

from __future__ import annotations

import argparse
import csv
import os
import sys
import time
from dataclasses import dataclass, field, fields

import numpy as np

from . import checkpoint as ckpt
from . import evaluate
from .dynamic import update
from .embed import (
    RngSpec,
    Weights,
    default_weight_grid,
    grid_search_weights,
    recombine,
)
from .errors import DataError, NumericError
from .graph import (
    Graph,
    GraphDelta,
    apply_delta,
    generate_er,
    generate_sbm,
    load_delta_file,
    load_edge_list,
)
from .parallel import embed_parallel

DEFAULT_DIM = 128
DEFAULT_ORDER = 3


class _Parser(argparse.ArgumentParser):
    def error(self, message):  # usage errors exit 1, not argparse's 2
        self.print_usage(sys.stderr)
        print(f"{self.prog}: error: {message}", file=sys.stderr)
        raise SystemExit(1)


@dataclass
class RunConfig:
    """Effective hyperparameters of one invocation, echoed for reproducibility."""

    command: str
    input: str | None = None
    delta: str | None = None
    checkpoint: str | None = None
    output: str | None = None
    binary_output: str | None = None
    dim: int = DEFAULT_DIM
    order: int = DEFAULT_ORDER
    alpha: tuple[float, ...] | None = None
    seed: int = 0
    normalization: str = "adjacency"
    workers: int = field(default_factory=lambda: os.cpu_count() or 1)
    weighted: bool = False
    hidden_fraction: float = 0.3
    eval: str = "reconstruction"
    mode: str = "all"
    rate: float = 0.01
    k: tuple[int, ...] = ()
    dataset: str | None = None
    embedding_output: str | None = None
    model: str = "er"
    nodes: int = 1000
    edges: int = 5000
    blocks: int = 4
    p_in: float = 0.1
    p_out: float = 0.01
    fix: str = "nodes"
    fixed_value: int | None = None
    sweep: tuple[int, ...] = ()
    workers_sweep: tuple[int, ...] = ()

    def echo(self, out=None):
        out = out if out is not None else sys.stderr
        for f in fields(self):
            v = getattr(self, f.name)
            if v is None or v == ():
                continue
            if isinstance(v, tuple):
                v = ",".join(str(x) for x in v)
            print(f"# {f.name} = {v}", file=out)

    def weights(self) -> Weights:
        if self.alpha is not None:
            if len(self.alpha) != self.order + 1:
                raise DataError(
                    f"--alpha needs {self.order + 1} values for order {self.order}")
            return Weights(self.alpha)
        return Weights((1.0,) * (self.order + 1))


def _parse_alpha(text: str) -> tuple[float, ...]:
    try:
        return tuple(float(x) for x in text.split(","))
    except ValueError:
        raise DataError(f"bad --alpha list {text!r}") from None


def _parse_int_list(text: str) -> tuple[int, ...]:
    try:
        return tuple(int(float(x)) for x in text.split(","))
    except ValueError:
        raise DataError(f"bad integer list {text!r}") from None


def _apply_config_file(cfg: RunConfig, path: str):
    """key=value lines override flag values (later entries win)."""
    converters = {
        "alpha": _parse_alpha, "k": _parse_int_list, "sweep": _parse_int_list,
        "workers_sweep": _parse_int_list,
    }
    try:
        fh = open(path, "r", encoding="utf-8")
    except OSError as e:
        raise DataError(f"cannot read config {path}: {e}") from e
    with fh:
        for lineno, line in enumerate(fh, 1):
            body = line.split("#", 1)[0].strip()
            if not body:
                continue
            if "=" not in body:
                raise DataError(f"{path}:{lineno}: expected key=value")
            key, _, value = body.partition("=")
            key = key.strip().replace("-", "_")
            value = value.strip()
            if not hasattr(cfg, key) or key == "command":
                raise DataError(f"{path}:{lineno}: unknown config key {key!r}")
            if key in converters:
                setattr(cfg, key, converters[key](value))
                continue
            current = getattr(cfg, key)
            if isinstance(current, bool):
                setattr(cfg, key, value.lower() in ("1", "true", "yes"))
            elif isinstance(current, int):
                setattr(cfg, key, int(float(value)))
            elif isinstance(current, float):
                setattr(cfg, key, float(value))
            else:
                setattr(cfg, key, value)


def _build_parser() -> _Parser:
    p = _Parser(prog="randne", description=__doc__)
    sub = p.add_subparsers(dest="command", required=True)

    def common(sp, *names):
        if "input" in names:
            sp.add_argument("--input", help="edge list file")
        if "core" in names:
            sp.add_argument("--dim", type=int, default=None)
            sp.add_argument("--order", type=int, default=None)
            sp.add_argument("--alpha", type=str, default=None,
                            help="comma list of order+1 coefficients")
            sp.add_argument("--normalization",
                            choices=("adjacency", "transition"), default=None)
            sp.add_argument("--workers", type=int, default=None)
            sp.add_argument("--weighted", action="store_true", default=None)
        sp.add_argument("--seed", type=int, default=None)
        sp.add_argument("--config", help="key=value file overriding flags")

    sp = sub.add_parser("embed", help="compute an embedding and checkpoint")
    common(sp, "input", "core")
    sp.add_argument("--output", help="embedding text file")
    sp.add_argument("--binary-output", help="embedding binary container")
    sp.add_argument("--checkpoint", help="projection state output path")

    sp = sub.add_parser("update", help="fold a delta into a checkpoint")
    common(sp, "input", "core")
    sp.add_argument("--checkpoint", required=False, help="input state")
    sp.add_argument("--delta", help="delta file: '+ u v [w]' / '- u v [w]'")
    sp.add_argument("--output", help="updated state path")
    sp.add_argument("--embedding-output", help="updated embedding text file")

    sp = sub.add_parser("recombine", help="re-weight a checkpoint's parts")
    common(sp)
    sp.add_argument("--checkpoint", required=False)
    sp.add_argument("--alpha", type=str, default=None)
    sp.add_argument("--output", help="embedding text file")
    sp.add_argument("--binary-output")

    sp = sub.add_parser("eval", help="reconstruction / link prediction metrics")
    common(sp, "input", "core")
    sp.add_argument("--checkpoint")
    sp.add_argument("--eval", choices=("reconstruction", "linkpred", "dynamic"),
                    default=None)
    sp.add_argument("--hidden-fraction", type=float, default=None)
    sp.add_argument("--mode", choices=("all", "sampled"), default=None)
    sp.add_argument("--rate", type=float, default=None)
    sp.add_argument("--k", type=str, default=None, help="comma list for Precision@K")
    sp.add_argument("--output", help="CSV path (default stdout)")
    sp.add_argument("--dataset", help="dataset name for the CSV rows")

    sp = sub.add_parser("bench", help="scaling and speedup measurements")
    common(sp, "core")
    sp.add_argument("--fix", choices=("nodes", "edges"), default=None)
    sp.add_argument("--fixed-value", type=int, default=None)
    sp.add_argument("--sweep", type=str, default=None,
                    help="comma list of the swept quantity")
    sp.add_argument("--workers-sweep", type=str, default=None)
    sp.add_argument("--output", help="CSV path (default stdout)")

    sp = sub.add_parser("gen", help="synthesize a graph")
    common(sp)
    sp.add_argument("--model", choices=("er", "sbm"), default=None)
    sp.add_argument("--nodes", type=int, default=None)
    sp.add_argument("--edges", type=int, default=None)
    sp.add_argument("--blocks", type=int, default=None)
    sp.add_argument("--p-in", type=float, default=None)
    sp.add_argument("--p-out", type=float, default=None)
    sp.add_argument("--output", required=False)
    return p


def _config_from_args(args) -> RunConfig:
    cfg = RunConfig(command=args.command)
    for f in fields(RunConfig):
        if f.name == "command":
            continue
        v = getattr(args, f.name, None)
        if v is None:
            continue
        if f.name == "alpha":
            v = _parse_alpha(v)
        elif f.name in ("k", "sweep", "workers_sweep"):
            v = _parse_int_list(v)
        setattr(cfg, f.name, v)
    if getattr(args, "config", None):
        _apply_config_file(cfg, args.config)
    return cfg


def _usage_error(msg: str) -> SystemExit:
    print(f"randne: error: {msg}", file=sys.stderr)
    return SystemExit(1)


def _require(cfg: RunConfig, *names):
    for name in names:
        if getattr(cfg, name) in (None, ""):
            raise _usage_error(f"--{name.replace('_', '-')} is required")


def _load_graph(cfg: RunConfig) -> Graph:
    g = load_edge_list(cfg.input, weighted=cfg.weighted)
    rep = getattr(g, "load_report", {})
    if rep.get("duplicates_dropped") or rep.get("self_loops_dropped"):
        print(f"# cleaned input: {rep['duplicates_dropped']} duplicate edges, "
              f"{rep['self_loops_dropped']} self-loops", file=sys.stderr)
    return g


def cmd_embed(cfg: RunConfig) -> int:
    _require(cfg, "input")
    g = _load_graph(cfg)
    w = cfg.weights()
    state, emb = embed_parallel(g, cfg.dim, w, RngSpec(cfg.seed),
                                cfg.normalization, cfg.workers)
    if cfg.checkpoint:
        ckpt.save_state(cfg.checkpoint, state, g.labels)
    if cfg.output:
        ckpt.write_embedding_text(cfg.output, emb, g.labels)
    if cfg.binary_output:
        ckpt.save_embedding_binary(cfg.binary_output, emb, g.labels)
    print(f"# embedded {g.n_nodes} nodes, {g.n_edges} edges, dim {cfg.dim}, "
          f"order {cfg.order}", file=sys.stderr)
    return 0


def cmd_update(cfg: RunConfig) -> int:
    _require(cfg, "input", "checkpoint", "delta")
    g_old = _load_graph(cfg)
    state, labels = ckpt.load_state(cfg.checkpoint)
    delta = load_delta_file(cfg.delta)
    g_new = apply_delta(g_old, delta)  # validates the delta against the graph
    stats: dict = {}
    t0 = time.perf_counter()
    new_state = update(state, g_old, delta, stats=stats)
    elapsed = time.perf_counter() - t0
    labels = labels + [str(i) for i in range(len(labels), new_state.n_nodes)]
    if cfg.output:
        ckpt.save_state(cfg.output, new_state, labels)
    if cfg.embedding_output or cfg.binary_output:
        if cfg.alpha is not None:
            w = Weights(cfg.alpha)
        else:
            w = state.weights or Weights((1.0,) * (state.order + 1))
        emb = recombine(new_state, w)
        if cfg.embedding_output:
            ckpt.write_embedding_text(cfg.embedding_output, emb, labels)
        if cfg.binary_output:
            ckpt.save_embedding_binary(cfg.binary_output, emb, labels)
    print(f"# update: {delta.n_changes} edge changes, {delta.n_new_nodes} new nodes, "
          f"{elapsed:.4f}s, frontier sizes {stats['frontier_sizes']}, "
          f"graph now {g_new.n_nodes} nodes / {g_new.n_edges} edges", file=sys.stderr)
    return 0


def cmd_recombine(cfg: RunConfig) -> int:
    _require(cfg, "checkpoint")
    if cfg.alpha is None:
        raise _usage_error("--alpha is required for recombine")
    state, labels = ckpt.load_state(cfg.checkpoint)
    w = Weights(cfg.alpha)
    emb = recombine(state, w)
    if cfg.output:
        ckpt.write_embedding_text(cfg.output, emb, labels)
    if cfg.binary_output:
        ckpt.save_embedding_binary(cfg.binary_output, emb, labels)
    return 0


def _csv_writer(cfg: RunConfig):
    if cfg.output:
        fh = open(cfg.output, "w", newline="", encoding="utf-8")
    else:
        fh = sys.stdout
    w = csv.writer(fh)
    return fh, w


def _auc_for_method(scores_pos, scores_neg) -> float:
    return evaluate.auc(scores_pos, scores_neg)


def _method_scores(g_train: Graph, emb, us, vs, seed: int):
    """Score the given pairs with every reported method."""
    rng = np.random.default_rng(seed ^ 0x5EED)
    return {
        "randne": evaluate.score_pairs(emb, us, vs).scores,
        "common_neighbors": evaluate.common_neighbors(g_train, (us, vs)).scores,
        "adamic_adar": evaluate.adamic_adar(g_train, (us, vs)).scores,
        "random": rng.random(len(us)),
    }


def _embedding_for(cfg: RunConfig, g_train: Graph, full_graph: Graph):
    """Embedding used in an eval run: a supplied checkpoint, or a fresh
    embedding of the train graph (with grid-searched weights when --alpha
    is omitted)."""
    if cfg.checkpoint:
        state, _ = ckpt.load_state(cfg.checkpoint)
        if state.n_nodes != g_train.n_nodes:
            raise DataError("checkpoint node count does not match the graph")
        w = Weights(cfg.alpha) if cfg.alpha is not None else (
            state.weights or Weights((1.0,) * (state.order + 1)))
        return recombine(state, w)
    state, emb = embed_parallel(g_train, cfg.dim, cfg.weights(), RngSpec(cfg.seed),
                                cfg.normalization, cfg.workers)
    if cfg.alpha is None:
        validation = evaluate.split_edges(g_train, 0.1, cfg.seed + 1)
        vstate, _ = embed_parallel(validation.train, cfg.dim, cfg.weights(),
                                   RngSpec(cfg.seed), cfg.normalization, cfg.workers)
        best = grid_search_weights(vstate, default_weight_grid(cfg.order), validation)
        print(f"# grid-searched alpha = {','.join(str(a) for a in best.alpha)}",
              file=sys.stderr)
        emb = recombine(state, best)
    return emb


def cmd_eval(cfg: RunConfig) -> int:
    _require(cfg, "input")
    g = _load_graph(cfg)
    dataset = cfg.dataset or os.path.basename(cfg.input)
    fh, w = _csv_writer(cfg)
    w.writerow(["task", "dataset", "method", "param", "value", "seed"])
    try:
        if cfg.eval == "reconstruction":
            _eval_reconstruction(cfg, g, dataset, w)
        elif cfg.eval == "linkpred":
            _eval_linkpred(cfg, g, dataset, w)
        else:
            _eval_dynamic(cfg, g, dataset, w)
    finally:
        if fh is not sys.stdout:
            fh.close()
    return 0


def _eval_reconstruction(cfg: RunConfig, g: Graph, dataset: str, w):
    emb = _embedding_for(cfg, g, g)
    us, vs = evaluate.candidate_pair_arrays(
        g, mode=cfg.mode, rate=cfg.rate, seed=cfg.seed, exclude=None)
    is_edge = evaluate._contains(evaluate._edge_code_set(g),
                                 us * np.int64(g.n_nodes) + vs)
    scores = _method_scores(g, emb, us, vs, cfg.seed)
    if 0 < np.count_nonzero(is_edge) < len(is_edge):
        for method, s in scores.items():
            value = evaluate.auc(s[is_edge], s[~is_edge])
            w.writerow(["reconstruction_auc", dataset, method, cfg.mode,
                        f"{value:.6f}", cfg.seed])
    else:
        print("# AUC skipped: candidate pairs are all edges or all non-edges",
              file=sys.stderr)
    for k in cfg.k:
        ranked = evaluate.ScoredPairs(us, vs, scores["randne"])
        value = evaluate.precision_at_k(ranked, g, k)
        w.writerow(["reconstruction_precision", dataset, "randne", k,
                    f"{value:.6f}", cfg.seed])


def _eval_linkpred(cfg: RunConfig, g: Graph, dataset: str, w):
    split = evaluate.split_edges(g, cfg.hidden_fraction, cfg.seed)
    emb = _embedding_for(cfg, split.train, g)
    us, vs = evaluate.candidate_pair_arrays(
        g, mode=cfg.mode, rate=cfg.rate, seed=cfg.seed, exclude=split.train)
    test_codes = np.sort(split.test_us * np.int64(g.n_nodes) + split.test_vs)
    is_test = evaluate._contains(test_codes, us * np.int64(g.n_nodes) + vs)
    scores = _method_scores(split.train, emb, us, vs, cfg.seed)
    for method, s in scores.items():
        value = evaluate.auc(s[is_test], s[~is_test])
        w.writerow(["linkpred_auc", dataset, method, cfg.hidden_fraction,
                    f"{value:.6f}", cfg.seed])
    for k in cfg.k:
        ranked = evaluate.ScoredPairs(us, vs, scores["randne"])
        value = evaluate.precision_at_k(ranked, (split.test_us, split.test_vs), k)
        w.writerow(["linkpred_precision", dataset, "randne", k,
                    f"{value:.6f}", cfg.seed])


def _eval_dynamic(cfg: RunConfig, g: Graph, dataset: str, w):
    """Observed edges grow 30% -> 70% in 10% steps; the projection state is
    updated incrementally and link prediction re-evaluated on the rest."""
    from .graph import _build_graph

    us, vs, ws_ = g.edge_pairs()
    m = len(us)
    rng = np.random.default_rng(cfg.seed)
    order_perm = rng.permutation(m)
    fractions = [0.3, 0.4, 0.5, 0.6, 0.7]
    counts = [int(round(f * m)) for f in fractions]
    idx0 = order_perm[: counts[0]]
    mask = np.zeros(m, dtype=bool)
    mask[idx0] = True
    g_train = _build_graph(us[mask], vs[mask], ws_[mask], g.n_nodes, list(g.labels))
    weights = cfg.weights()
    state, emb = embed_parallel(g_train, cfg.dim, weights, RngSpec(cfg.seed),
                                cfg.normalization, cfg.workers)
    for step, frac in enumerate(fractions):
        test = ~mask
        tus, tvs = us[test], vs[test]
        neg_u, neg_v = evaluate.sample_negative_pairs(
            g, count=min(10 * len(tus), 10 ** 6), seed=cfg.seed + step)
        pos_scores = _method_scores(g_train, emb, tus, tvs, cfg.seed + step)
        neg_scores = _method_scores(g_train, emb, neg_u, neg_v, cfg.seed + step)
        for method in pos_scores:
            value = evaluate.auc(pos_scores[method], neg_scores[method])
            w.writerow(["dynamic_auc", dataset, method, frac,
                        f"{value:.6f}", cfg.seed])
        if step + 1 == len(fractions):
            break
        new_idx = order_perm[counts[step]: counts[step + 1]]
        delta = GraphDelta(0, us[new_idx], vs[new_idx], ws_[new_idx])
        state = update(state, g_train, delta)
        emb = recombine(state, weights)
        mask[new_idx] = True
        g_train = apply_delta(g_train, delta)


def cmd_bench(cfg: RunConfig) -> int:
    fh, w = _csv_writer(cfg)
    w.writerow(["n", "m", "seconds", "workers"])
    weights = cfg.weights()
    try:
        fixed = cfg.fixed_value or (10 ** 6 if cfg.fix == "nodes" else 10 ** 7)
        sweep = cfg.sweep or ((10 ** 6, 2 * 10 ** 6, 4 * 10 ** 6)
                              if cfg.fix == "nodes"
                              else (25 * 10 ** 4, 5 * 10 ** 5, 10 ** 6))
        points = [(fixed, s) if cfg.fix == "nodes" else (s, fixed) for s in sweep]
        for n, m in points:
            g = generate_er(n, m, cfg.seed)
            t0 = time.perf_counter()
            embed_parallel(g, cfg.dim, weights, RngSpec(cfg.seed),
                           cfg.normalization, cfg.workers)
            w.writerow([n, m, f"{time.perf_counter() - t0:.4f}", cfg.workers])
            fh.flush()
        if cfg.workers_sweep:
            n, m = points[-1]
            g = generate_er(n, m, cfg.seed)
            for nw in cfg.workers_sweep:
                t0 = time.perf_counter()
                embed_parallel(g, cfg.dim, weights, RngSpec(cfg.seed),
                               cfg.normalization, nw)
                w.writerow([n, m, f"{time.perf_counter() - t0:.4f}", nw])
    finally:
        if fh is not sys.stdout:
            fh.close()
    return 0


def cmd_gen(cfg: RunConfig) -> int:
    _require(cfg, "output")
    if cfg.model == "er":
        g = generate_er(cfg.nodes, cfg.edges, cfg.seed)
        header = f"# er nodes={cfg.nodes} edges={cfg.edges} seed={cfg.seed}"
    else:
        g = generate_sbm(cfg.nodes, cfg.blocks, cfg.p_in, cfg.p_out, cfg.seed)
        header = (f"# sbm nodes={cfg.nodes} blocks={cfg.blocks} "
                  f"p_in={cfg.p_in} p_out={cfg.p_out} seed={cfg.seed}")
    us, vs, ws_ = g.edge_pairs()
    with open(cfg.output, "w", encoding="utf-8") as fh:
        fh.write(header + "\n")
        for u, v in zip(us, vs):
            fh.write(f"{u} {v}\n")
    print(f"# wrote {g.n_edges} edges on {g.n_nodes} nodes to {cfg.output}",
          file=sys.stderr)
    return 0


_COMMANDS = {
    "embed": cmd_embed,
    "update": cmd_update,
    "recombine": cmd_recombine,
    "eval": cmd_eval,
    "bench": cmd_bench,
    "gen": cmd_gen,
}


def main(argv=None) -> int:
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        return int(e.code) if e.code is not None else 1
    try:
        cfg = _config_from_args(args)
        cfg.echo()
        code = _COMMANDS[args.command](cfg)
    except DataError as e:
        print(f"randne: data error: {e}", file=sys.stderr)
        return 2
    except NumericError as e:
        print(f"randne: numeric failure: {e}", file=sys.stderr)
        return 3
    except ValueError as e:
        print(f"randne: data error: {e}", file=sys.stderr)
        return 2
    except SystemExit as e:
        return int(e.code) if e.code is not None else 1
    return code


if __name__ == "__main__":
    sys.exit(main())
