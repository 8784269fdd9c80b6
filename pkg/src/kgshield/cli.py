"""kgshield command line: generate | reason | anonymize | verify | evaluate.

Exit status is 0 on success, 1 on a runtime failure (including a failed
verification) and 2 on a usage error.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
import time
from pathlib import Path

from . import __version__
from .anonymize import AnonymizationParams, AnonymizationResult, anonymize, split_and_merge
from .errors import InvalidParameter, KGShieldError, NotWeaklyConnected
from .generators import assign_weights, erdos_renyi_directed, scale_free
from .graph import Graph, load_graph, save_graph, weakly_connected_components
from .metrics import evaluate, verify_kx_anonymisation
from .reasoner import Query, RuleProgram, answer_queries, reason, write_derived_csv, write_query_result

SEED_ENV = "KGSHIELD_SEED"


class UsageError(Exception):
    pass


def _seed(args) -> int:
    if args.seed is not None:
        return args.seed
    raw = os.environ.get(SEED_ENV)
    if raw is None:
        return 0
    try:
        return int(raw)
    except ValueError:
        raise UsageError(f"{SEED_ENV} must be an integer, got {raw!r}") from None


def _queries(specs) -> list[Query]:
    out = []
    for s in specs or []:
        for part in s.split(","):
            if part.strip():
                try:
                    out.append(Query.parse(part))
                except InvalidParameter as exc:
                    raise UsageError(str(exc)) from None
    return out


def _rules(name: str) -> RuleProgram:
    try:
        return RuleProgram.parse(name)
    except InvalidParameter as exc:
        raise UsageError(str(exc)) from None


def _write_json(obj, path: str | None) -> None:
    text = json.dumps(obj, indent=2, sort_keys=True, default=str) + "\n"
    if path is None or path == "-":
        sys.stdout.write(text)
    else:
        Path(path).write_text(text, encoding="utf-8")


def _summary(g: Graph) -> str:
    return f"vertices={g.num_vertices} edges={g.num_edges} weighted={'yes' if g.weighted else 'no'}"


# --- generate -------------------------------------------------------------

def cmd_generate(args) -> int:
    seed = _seed(args)
    if args.model == "erdos":
        g = erdos_renyi_directed(args.n, args.m, seed, self_loops=not args.no_self_loops)
    else:
        if args.alpha is None:
            raise UsageError("--model powerlaw needs --alpha")
        g = scale_free(args.n, args.alpha, seed)
    g = assign_weights(g, args.weights, seed)
    save_graph(g, args.output)
    print(_summary(g))
    return 0


# --- reason ---------------------------------------------------------------

def cmd_reason(args) -> int:
    g = load_graph(args.input)
    sigma = _rules(args.rules)
    rg = reason(g, sigma)
    count = write_derived_csv(rg, args.output)
    print(f"derived={count} rules={sigma.value}")
    queries = _queries(args.query)
    if args.answers and len(queries) != 1:
        raise UsageError("--answers needs exactly one --query")
    if queries:
        answers = answer_queries(g, sigma, queries)
        for q, ans in zip(queries, answers):
            print(f"{q}: {len(ans)} answers")
        if args.answers:
            write_query_result(g, answers[0], args.answers)
    return 0


# --- anonymize ------------------------------------------------------------

def _mapping_doc(g: Graph, result: AnonymizationResult, written_edges) -> dict:
    released = result.released
    row_of = {e.id: i for i, e in enumerate(written_edges)}
    return {
        "vertices": {g.labels[v]: released.labels[a] for v, a in sorted(result.identity_map.items())},
        "edges": [[e.id, row_of[result.edge_map[e.id]]] for e in g.edges if e.id in result.edge_map],
    }


def cmd_anonymize(args) -> int:
    if args.algo == "kguard" and args.x is None:
        raise UsageError("--algo kguard needs -x")
    g = load_graph(args.input)
    sigma = _rules(args.rules)
    seed = _seed(args)
    params = AnonymizationParams(k=args.k, x=args.x, queries=_queries(args.queries), m=args.M,
                                 seed=seed, workers=args.workers)
    comps = weakly_connected_components(g)
    started = time.perf_counter()
    if args.split_threshold is not None:
        result = split_and_merge(g, sigma, params, args.algo, args.split_threshold)
    else:
        if len(comps) > 1 and not args.per_component:
            raise NotWeaklyConnected([len(c) for c in comps])
        result = anonymize(g, sigma, params, args.algo)
    written = save_graph(result.released, args.output)

    info = {k: v for k, v in result.info.items() if k not in ("noising_scores_base", "noising_scores_final")}
    manifest = {
        "command": "anonymize",
        "version": __version__,
        "input": str(args.input),
        "output": str(args.output),
        "algorithm": args.algo,
        "rules": sigma.value,
        "params": params.describe(),
        "per_component": bool(args.per_component),
        "split_threshold": args.split_threshold,
        "components": len(comps),
        "counts": {
            "vertices_in": g.num_vertices,
            "edges_in": g.num_edges,
            "vertices_out": result.released.num_vertices,
            "edges_out": result.released.num_edges,
            "synthetic_vertices": len(result.synthetic_vertices),
            "synthetic_edges": len(result.synthetic_edges),
        },
        "nodes_overhead_pct": 100.0 * (result.released.num_vertices - g.num_vertices) / max(g.num_vertices, 1),
        "augmentation_intact": result.augmentation_intact,
        "noising_best_score": {
            "base": min(result.info.get("noising_scores_base", [0.0])),
            "final": min(result.info.get("noising_scores_final", [0.0])),
        },
        "info": info,
        "wall_seconds": round(time.perf_counter() - started, 3),
        "replay": _replay_argv(args, seed),
    }
    if args.bucket_stats and "bucket_sets" in result.trace:
        manifest["bucket_stats"] = [bs.stats() for bs in result.trace["bucket_sets"]]
    if args.emit_mapping:
        print(f"warning: {args.emit_mapping} links released vertices to original ones; "
              "never publish it alongside the release", file=sys.stderr)
        _write_json(_mapping_doc(g, result, written), args.emit_mapping)
        manifest["mapping"] = str(args.emit_mapping)
    _write_json(manifest, args.manifest or str(Path(args.output).with_suffix(".manifest.json")))
    print(f"{_summary(result.released)} overhead={manifest['nodes_overhead_pct']:.1f}%")
    return 0


def _replay_argv(args, seed: int) -> list[str]:
    argv = ["anonymize", "-i", str(args.input), "-o", str(args.output), "--algo", args.algo,
            "-k", str(args.k), "--rules", args.rules, "-M", str(args.M), "--seed", str(seed)]
    if args.x is not None:
        argv += ["-x", str(args.x)]
    for q in args.queries or []:
        argv += ["--queries", q]
    if args.per_component:
        argv.append("--per-component")
    if args.split_threshold is not None:
        argv += ["--split-threshold", str(args.split_threshold)]
    return argv


# --- verify / evaluate ----------------------------------------------------

def _load_pair(args, man: dict) -> tuple[Graph, Graph, AnonymizationResult | None]:
    g = load_graph(args.original)
    a = load_graph(args.released)
    mapping = args.mapping or man.get("mapping")
    if mapping:
        doc = json.loads(Path(mapping).read_text(encoding="utf-8"))
        by_label_g = {lab: v for v, lab in g.labels.items()}
        by_label_a = {lab: v for v, lab in a.labels.items()}
        imap = {by_label_g[o]: by_label_a[r] for o, r in doc["vertices"].items()}
        emap = {int(o): int(r) for o, r in doc.get("edges", [])}
    elif g.label_universe <= a.label_universe:
        # labels were not replaced, so they identify vertices directly
        by_label_a = {lab: v for v, lab in a.labels.items()}
        imap = {v: by_label_a[lab] for v, lab in g.labels.items()}
        emap = _match_edges_by_endpoints(g, a, imap)
    else:
        return g, a, None
    res = AnonymizationResult(released=a, identity_map=imap, edge_map=emap,
                              synthetic_edges=frozenset(), synthetic_vertices=frozenset(
                                  set(a.vertices) - set(imap.values())))
    return g, a, res


def _match_edges_by_endpoints(g: Graph, a: Graph, imap) -> dict[int, int]:
    pool: dict[tuple[int, int], list[int]] = {}
    for e in a.edges:
        pool.setdefault((e.src, e.dst), []).append(e.id)
    out = {}
    for e in g.edges:
        ids = pool.get((imap[e.src], imap[e.dst]))
        if ids:
            out[e.id] = ids.pop(0)
    return out


def _manifest(args) -> dict:
    if not args.manifest:
        return {}
    return json.loads(Path(args.manifest).read_text(encoding="utf-8"))


def _need_mapping(what: str) -> UsageError:
    return UsageError(
        f"{what} compares the release with the original vertex by vertex, which needs the "
        "identity map: pass --mapping (written by `anonymize --emit-mapping`)")


def cmd_verify(args) -> int:
    man = _manifest(args)
    g, _, res = _load_pair(args, man)
    if res is None:
        raise _need_mapping("verification")
    sigma = _rules(args.rules or man.get("rules", "none"))
    k = args.k or man.get("params", {}).get("k")
    x = args.x or man.get("params", {}).get("x")
    if not k or not x:
        raise UsageError("verify needs -k and -x (or a manifest that records them)")
    report = verify_kx_anonymisation(g, res, sigma, int(k), int(x), workers=args.workers)
    _write_json(report.to_dict(), args.output)
    return 0 if report.passed else 1


def cmd_evaluate(args) -> int:
    man = _manifest(args)
    g, a, res = _load_pair(args, man)
    sigma = _rules(args.rules or man.get("rules", "none"))
    queries = _queries(args.queries or man.get("params", {}).get("queries", []))
    want_delta = args.delta or args.sample is not None
    if res is None and (queries or want_delta):
        raise _need_mapping("utility and delta-anonymity evaluation")
    k = args.k or man.get("params", {}).get("k")
    x = args.x or man.get("params", {}).get("x")
    if want_delta and (not k or not x):
        raise UsageError("--delta needs -k and -x (or a manifest that records them)")
    target = res if res is not None else a
    report = evaluate(g, target, sigma, queries, int(k) if want_delta else None,
                      int(x) if want_delta else None, args.sample, _seed(args), args.workers)
    doc = report.to_json()
    if man and "augmentation_intact" in man:
        doc["augmentation_intact"] = bool(man["augmentation_intact"])
    if args.sample is not None:
        doc["sampled"] = args.sample
    _write_json(doc, args.output)
    return 0


# --- parser ---------------------------------------------------------------

def _positive(text: str) -> int:
    v = int(text)
    if v < 1:
        raise argparse.ArgumentTypeError(f"expected a positive integer, got {text}")
    return v


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="kgshield", description=__doc__.splitlines()[0])
    p.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = p.add_subparsers(dest="command", required=True)

    gen = sub.add_parser("generate", help="write a seeded random graph")
    gen.add_argument("--model", choices=("erdos", "powerlaw"), required=True)
    gen.add_argument("--n", type=int, required=True)
    gen.add_argument("--m", type=int, help="edge count for erdos (default n ln n / 2)")
    gen.add_argument("--alpha", type=float, help="power-law exponent")
    gen.add_argument("--weights", choices=("uniform", "economic", "none"), default="uniform")
    gen.add_argument("--no-self-loops", action="store_true")
    gen.add_argument("--seed", type=int)
    gen.add_argument("-o", "--output", required=True)
    gen.set_defaults(func=cmd_generate)

    rsn = sub.add_parser("reason", help="write the derived edges of a rule program")
    rsn.add_argument("-i", "--input", required=True)
    rsn.add_argument("--rules", required=True)
    rsn.add_argument("-o", "--output", required=True)
    rsn.add_argument("--query", action="append", help="also answer a query, e.g. holding:2")
    rsn.add_argument("--answers", help="write the answer labels here")
    rsn.set_defaults(func=cmd_reason)

    an = sub.add_parser("anonymize", help="release a (k,x)-isomorphism anonymisation")
    an.add_argument("-i", "--input", required=True)
    an.add_argument("-o", "--output", required=True)
    an.add_argument("--algo", choices=("klone", "kguard"), default="klone")
    an.add_argument("-k", type=int, required=True)
    an.add_argument("-x", type=_positive)
    an.add_argument("--rules", default="none")
    an.add_argument("--queries", action="append", help="e.g. two-owns,two-q-owns:0.5")
    an.add_argument("-M", type=_positive, default=20, help="weight-noising trials")
    an.add_argument("--seed", type=int)
    an.add_argument("--workers", type=_positive, default=1)
    an.add_argument("--per-component", action="store_true", help="accept disconnected input")
    an.add_argument("--split-threshold", type=_positive, help="split & merge above this component size")
    an.add_argument("--manifest", help="manifest path (default <output stem>.manifest.json)")
    an.add_argument("--emit-mapping", help="write the private identity map here")
    an.add_argument("--bucket-stats", action="store_true", help="record bucket statistics in the manifest")
    an.set_defaults(func=cmd_anonymize)

    for name, func, helptext in (("verify", cmd_verify, "check every anonymisation condition"),
                                 ("evaluate", cmd_evaluate, "utility, fidelity and privacy metrics")):
        sp = sub.add_parser(name, help=helptext)
        sp.add_argument("--original", required=True)
        sp.add_argument("--released", required=True)
        sp.add_argument("--mapping")
        sp.add_argument("--manifest")
        sp.add_argument("--rules")
        sp.add_argument("-k", type=int)
        sp.add_argument("-x", type=_positive)
        sp.add_argument("--workers", type=_positive, default=1)
        sp.add_argument("-o", "--output", help="write JSON here instead of stdout")
        if name == "evaluate":
            sp.add_argument("--queries", action="append")
            sp.add_argument("--delta", action="store_true", help="compute exhaustive delta-anonymity")
            sp.add_argument("--sample", type=_positive, help="estimate delta-anonymity on N sampled NAGs")
            sp.add_argument("--seed", type=int)
        sp.set_defaults(func=func)
    return p


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        return args.func(args)
    except UsageError as exc:
        print(f"kgshield: usage error: {exc}", file=sys.stderr)
        return 2
    except NotWeaklyConnected as exc:
        print(f"kgshield: {exc}; pass --per-component or --split-threshold", file=sys.stderr)
        return 1
    except KGShieldError as exc:
        print(f"kgshield: {exc}", file=sys.stderr)
        return 1
    except OSError as exc:
        print(f"kgshield: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
