"""Command-line entry point: ``hinanom <subcommand> ...``.

Exit status: 0 success, 1 usage error, 2 data error, 3 numerical failure.
"""
from __future__ import annotations

import argparse
import hashlib
import json
import logging
import secrets
import sys
import warnings
from dataclasses import asdict, fields, replace
from pathlib import Path

import numpy as np

from . import __version__, kernels
from ._accel import set_threads
from .baselines import METHODS as BASELINE_METHODS
from .baselines import baseline_distances, default_rhos
from .errors import DataError, NumericalError, SchemaError
from .evaluation import ALL_METHODS, ExperimentConfig, format_gnuplot, format_results, run_experiment
from .graph import load_graph, schema_of
from .metapath import enumerate_metapaths, make_metapath
from .qanet import QanetParams, RankedList, format_ranked, read_query_file, run_query
from .synth import SynthConfig, generate_network, inject_anomalies, read_network, write_network
from .toy import CANDIDATES, REFERENCE, toy_graph

log = logging.getLogger("hinanom")

SYNTH_KEYS = {f.name: f.type for f in fields(SynthConfig)}
QANET_KEYS = {"rank": int, "clusters": int, "als_iterations": int, "kmeans_max_iterations": int, "max_length": int,
              "als_tol": float}
EXPERIMENT_KEYS = ("sweep_variable", "sweep_values", "query_type", "ref_size", "cand_size", "repetitions",
                   "methods", "seed")

CONFIG_HELP = """\
Config files hold one 'key = value' per line; '#' starts a comment.
Network keys: n_nodes, n_colors, n_types, p_intra, p_inter, p_anom,
  anomaly_fraction, seed.
Experiment keys (eval only): sweep_variable (network_size | node_types |
  communities | ref_size | query_type), sweep_values (comma list),
  query_type, ref_size, cand_size, repetitions, methods (comma list of
  qanet, netout, pathsim, cossim), seed, plus QANet keys rank, clusters,
  als_iterations, als_tol, kmeans_max_iterations, max_length and any
  network key."""


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(1, f"{self.prog}: error: {message}\n")


def read_config(path) -> dict:
    out = {}
    for lineno, raw in enumerate(Path(path).read_text(encoding="utf-8").splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        key, sep, value = line.partition("=")
        if not sep:
            raise UsageError(f"{path}:{lineno}: expected 'key = value'")
        out[key.strip()] = value.strip()
    return out


def _convert(value: str, typ):
    typ = {"int": int, "float": float}.get(typ, typ)
    try:
        return typ(value)
    except ValueError:
        raise UsageError(f"cannot parse {value!r} as {typ.__name__}") from None


def synth_from_config(cfg: dict) -> SynthConfig:
    return SynthConfig(**{k: _convert(v, SYNTH_KEYS[k]) for k, v in cfg.items() if k in SYNTH_KEYS})


def experiment_from_config(cfg: dict) -> ExperimentConfig:
    unknown = set(cfg) - set(SYNTH_KEYS) - set(QANET_KEYS) - set(EXPERIMENT_KEYS)
    if unknown:
        raise UsageError(f"unknown config keys: {', '.join(sorted(unknown))}")
    kw = {}
    for key in ("query_type", "ref_size", "cand_size", "repetitions", "seed"):
        if key in cfg:
            kw[key] = _convert(cfg[key], int)
    if "sweep_variable" in cfg:
        kw["sweep_variable"] = cfg["sweep_variable"]
    if "sweep_values" in cfg:
        kw["sweep_values"] = tuple(_convert(v.strip(), int) for v in cfg["sweep_values"].split(",") if v.strip())
    if "methods" in cfg:
        kw["methods"] = tuple(m.strip() for m in cfg["methods"].split(",") if m.strip())
    synth_cfg = {k: v for k, v in cfg.items() if k in SYNTH_KEYS and k != "seed"}
    kw["synth"] = synth_from_config(synth_cfg)
    kw["qanet"] = QanetParams(**{k: _convert(v, QANET_KEYS[k]) for k, v in cfg.items() if k in QANET_KEYS})
    return ExperimentConfig(**kw)


def _digest(path) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 20), b""):
            h.update(chunk)
    return h.hexdigest()


def write_manifest(path, command, params, seed, inputs=(), metapaths=None):
    manifest = {
        "command": command,
        "argv": sys.argv[1:],
        "params": params,
        "seed": seed,
        "metapaths": metapaths or [],
        "version": __version__,
        "kernel_backend": kernels.BACKEND,
        "inputs": {str(p): _digest(p) for p in inputs},
    }
    Path(path).write_text(json.dumps(manifest, indent=2, default=str) + "\n", encoding="utf-8")


def _resolve_seed(args) -> int:
    if args.seed is None:
        args.seed = secrets.randbits(32)
        print(f"seed: {args.seed}", file=sys.stderr)
    return args.seed


def _require_files(*paths):
    for p in paths:
        if p is None or not Path(p).is_file():
            raise UsageError(f"input file not found: {p}")


def metapath_from_types(schema, spec: str):
    """Resolve ``APV`` or ``A-P-V`` to the unique relation path over those types."""
    labels = spec.split("-") if "-" in spec else list(spec)
    try:
        types = [schema.type_id(lab) for lab in labels]
    except SchemaError:
        raise UsageError(f"meta-path {spec!r} names an unknown node type") from None
    paths = [[]]
    for a, b in zip(types, types[1:]):
        opts = [r.id for r in schema.relations if (r.src_type, r.dst_type) == (a, b)]
        paths = [p + [r] for p in paths for r in opts]
    if len(paths) != 1 or len(paths[0]) != len(types) - 1 or not paths[0]:
        raise UsageError(f"meta-path {spec!r} does not resolve to exactly one relation sequence")
    return make_metapath(schema, paths[0])


def cmd_generate(args):
    if args.config:
        _require_files(args.config)
    cfg = read_config(args.config) if args.config else {}
    if "seed" in cfg and args.seed is None:
        args.seed = int(cfg["seed"])
    seed = _resolve_seed(args)
    synth = replace(synth_from_config(cfg), seed=seed)
    net = generate_network(synth)
    paths = write_network(args.out, net)
    write_manifest(Path(args.out) / "manifest.json", "generate", asdict(synth), seed,
                   inputs=[args.config] if args.config else [])
    print(f"wrote {net.graph.n_nodes} nodes, {len(net.pairs)} links to {paths['nodes'].parent}")
    return 0


def cmd_inject(args):
    src = Path(args.network)
    files = [src / "nodes.tsv", src / "edges.tsv", src / "labels.tsv"]
    _require_files(*files)
    seed = _resolve_seed(args)
    net = read_network(*files)
    net = inject_anomalies(net, args.fraction, args.p_anom, seed=seed, keep_edges=args.keep_edges)
    write_network(args.out, net)
    write_manifest(Path(args.out) / "manifest.json", "inject",
                   {"fraction": args.fraction, "p_anom": args.p_anom, "keep_edges": args.keep_edges},
                   seed, inputs=files)
    print(f"flagged {int(net.is_anomalous.sum())} anomalous nodes")
    return 0


def cmd_query(args):
    _require_files(args.nodes, args.edges, args.query)
    seed = _resolve_seed(args)
    graph = load_graph(args.nodes, args.edges, undirected=args.undirected)
    schema = schema_of(graph)
    query = read_query_file(args.query, graph)
    params = QanetParams(args.rank, args.clusters, args.iterations, args.kmeans_iterations, seed, args.max_length,
                         args.als_tol)
    if args.method == "qanet":
        ranked = run_query(graph, query, params)
        mps = enumerate_metapaths(schema, args.max_length)
    else:
        rhos = [metapath_from_types(schema, r) for r in args.rho] if args.rho else default_rhos(schema, query.node_type)
        ranked = RankedList.from_scores(query.candidates, baseline_distances(graph, query, args.method, rhos, schema))
        mps = rhos
    text = format_ranked(ranked, graph.node_labels)
    if args.out:
        Path(args.out).write_text(text, encoding="utf-8")
        write_manifest(f"{args.out}.manifest.json", "query", {"method": args.method, **asdict(params),
                       "undirected": args.undirected}, seed, inputs=[args.nodes, args.edges, args.query],
                       metapaths=[[k, mp.describe(schema)] for k, mp in enumerate(mps)])
    else:
        sys.stdout.write(text)
    return 0


def cmd_eval(args):
    _require_files(args.config)
    cfg = read_config(args.config)
    if "seed" in cfg and args.seed is None:
        args.seed = int(cfg["seed"])
    seed = _resolve_seed(args)
    config = replace(experiment_from_config(cfg), seed=seed)

    def progress(value, rep, lis):
        log.info("%s=%s rep %d: %s", config.sweep_variable, value, rep,
                 " ".join(f"{m}={li:.3f}" for m, li in lis.items()))

    results = run_experiment(config, progress=progress)
    Path(args.out).write_text(format_results(results), encoding="utf-8")
    if args.gnuplot:
        Path(args.gnuplot).write_text(format_gnuplot(results), encoding="utf-8")
    write_manifest(f"{args.out}.manifest.json", "eval", asdict(config), seed, inputs=[args.config])
    sys.stdout.write(format_results(results))
    return 0


def toy_table(rank: int = 2, clusters: int = 1, seed: int = 0) -> str:
    graph = toy_graph()
    schema = schema_of(graph)
    from .qanet import AnomalyQuery

    query = AnomalyQuery.create(graph, [graph.index_of(REFERENCE)], [graph.index_of(c) for c in CANDIDATES])
    apv = metapath_from_types(schema, "APV")
    lists = {m: RankedList.from_scores(query.candidates, baseline_distances(graph, query, m, [apv], schema))
             for m in BASELINE_METHODS}
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", RuntimeWarning)
        lists["qanet"] = run_query(graph, query, QanetParams(rank=rank, clusters=clusters, seed=seed))
    cols = BASELINE_METHODS + ("qanet",)
    lines = ["name\t" + "\t".join(f"{m}_score\t{m}_rank" for m in cols)]
    for name in CANDIDATES:
        v = graph.index_of(name)
        cells = [f"{lists[m].score_of(v):.4f}\t{lists[m].rank_of(v)}" for m in cols]
        lines.append(name + "\t" + "\t".join(cells))
    return "\n".join(lines) + "\n"


def cmd_toy(args):
    seed = 0 if args.seed is None else args.seed
    sys.stdout.write(toy_table(args.rank, args.clusters, seed))
    return 0


def cmd_schema(args):
    _require_files(args.nodes, args.edges)
    graph = load_graph(args.nodes, args.edges, undirected=args.undirected)
    schema = schema_of(graph)
    print(schema.describe())
    for k, mp in enumerate(enumerate_metapaths(schema, args.max_length)):
        print(f"k={k}\t{mp.describe(schema)}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="hinanom", description="Query-based anomaly ranking in typed networks.",
                epilog=CONFIG_HELP, formatter_class=argparse.RawDescriptionHelpFormatter)
    p.add_argument("--threads", type=int, default=None, help="cap on numba worker threads")
    p.add_argument("-v", "--verbose", action="store_true")
    p.add_argument("--version", action="version", version=__version__)
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    def seed_arg(sp):
        sp.add_argument("--seed", type=int, default=None,
                        help="master seed; a random one is chosen, printed and recorded if omitted")

    g = sub.add_parser("generate", help="generate a synthetic network", epilog=CONFIG_HELP,
                       formatter_class=argparse.RawDescriptionHelpFormatter)
    g.add_argument("--config", help="key = value network config")
    g.add_argument("--out", required=True, help="output directory")
    seed_arg(g)
    g.set_defaults(func=cmd_generate)

    i = sub.add_parser("inject", help="inject anomalies into a generated network")
    i.add_argument("--network", required=True, help="directory with nodes.tsv, edges.tsv, labels.tsv")
    i.add_argument("--fraction", type=float, default=0.05)
    i.add_argument("--p-anom", type=float, default=0.5)
    i.add_argument("--keep-edges", action="store_true", help="add anomalous links without removing old ones")
    i.add_argument("--out", required=True)
    seed_arg(i)
    i.set_defaults(func=cmd_inject)

    q = sub.add_parser("query", help="rank the candidates of one query")
    q.add_argument("--nodes", required=True)
    q.add_argument("--edges", required=True)
    q.add_argument("--query", required=True, help="file with 'ref: ...' and 'cand: ...' lines")
    q.add_argument("--method", choices=ALL_METHODS, default="qanet")
    q.add_argument("--undirected", action="store_true", help="also insert every edge reversed")
    q.add_argument("--rank", type=int, default=4)
    q.add_argument("--clusters", type=int, default=1)
    q.add_argument("--iterations", type=int, default=50, help="ALS iterations")
    q.add_argument("--als-tol", type=float, default=1e-6, help="ALS early-stop threshold on fit change; 0 disables")
    q.add_argument("--kmeans-iterations", type=int, default=100)
    q.add_argument("--max-length", type=int, default=2)
    q.add_argument("--rho", action="append", help="baseline meta-path by type labels, e.g. APV (repeatable)")
    q.add_argument("--out", help="ranked TSV output (stdout if omitted)")
    seed_arg(q)
    q.set_defaults(func=cmd_query)

    e = sub.add_parser("eval", help="run a lift-index sweep", epilog=CONFIG_HELP,
                       formatter_class=argparse.RawDescriptionHelpFormatter)
    e.add_argument("--config", required=True)
    e.add_argument("--out", required=True, help="results TSV")
    e.add_argument("--gnuplot", help="optional gnuplot data file")
    seed_arg(e)
    e.set_defaults(func=cmd_eval)

    t = sub.add_parser("toy", help="print the four-method table for the toy bibliography")
    t.add_argument("--rank", type=int, default=2)
    t.add_argument("--clusters", type=int, default=1)
    seed_arg(t)
    t.set_defaults(func=cmd_toy)

    s = sub.add_parser("schema", help="print the schema and enumerated meta-paths")
    s.add_argument("--nodes", required=True)
    s.add_argument("--edges", required=True)
    s.add_argument("--undirected", action="store_true")
    s.add_argument("--max-length", type=int, default=2)
    s.set_defaults(func=cmd_schema)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    if args.threads:
        set_threads(args.threads)
    try:
        return args.func(args)
    except UsageError as exc:
        parser.print_usage(sys.stderr)
        print(f"hinanom: error: {exc}", file=sys.stderr)
        return 1
    except (NumericalError, np.linalg.LinAlgError, FloatingPointError) as exc:
        print(f"hinanom: numerical failure: {exc}", file=sys.stderr)
        return 3
    except (DataError, OSError) as exc:
        print(f"hinanom: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
