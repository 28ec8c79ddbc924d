"""Command-line interface.

Subcommands:

* ``answer`` -- rank answers for each query (approximate by default,
  ``--exact`` for full grounding plus power iteration)
* ``ground`` -- write serialized grounded graphs for training queries
* ``train``  -- learn feature weights from labeled examples
* ``eval``   -- score an answer file against labeled examples
* ``synth``  -- generate synthetic hyperlink or citation datasets
* ``bench``  -- compare the numba and numpy kernel backends

All commands exit 0 on success; failures print a machine-parseable
``error<TAB>message`` line to stderr and exit nonzero.  Per-query
failures in ``answer``/``ground`` are recorded in the output and do not
abort the run.
"""

from __future__ import annotations

import argparse
import os
import sys
import time
from pathlib import Path

from .facts import load_facts
from .graph import deserialize, serialize
from .grounder import GroundingParams, approximate_ground, ground_full
from .inference import auc, average_precision, extract_answers, power_iterate
from .learner import (SgdConfig, TrainingExample, ground_examples,
                      label_grounding, train_on_groundings)
from .parser import parse_atom, parse_program
from .weights import (WEIGHT_FNS, ParameterVector, load_params, save_params)


def _add_common(p: argparse.ArgumentParser):
    p.add_argument("--rules", help="rules file")
    p.add_argument("--facts", help="TSV facts file")
    p.add_argument("--params-in", help="load learned weights (TSV)")
    p.add_argument("--alpha", type=float, default=0.2)
    p.add_argument("--alpha-prime", type=float, default=0.1)
    p.add_argument("--epsilon", type=float, default=1e-4)
    p.add_argument("--max-t", type=int, default=100)
    p.add_argument("--weightfn", choices=sorted(WEIGHT_FNS), default="linear")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", help="output file (default stdout)")


def _setup(args):
    program = parse_program(Path(args.rules).read_text())
    store = load_facts(Path(args.facts).read_text())
    params = GroundingParams(args.alpha, args.alpha_prime, args.epsilon,
                             args.max_t)
    w = (load_params(Path(args.params_in).read_text())
         if args.params_in else ParameterVector())
    fn = WEIGHT_FNS[args.weightfn]
    return program, store, params, w, fn


def _emit(args, text: str):
    if args.out:
        Path(args.out).write_text(text)
    else:
        sys.stdout.write(text)


def _read_queries(path: str):
    return [parse_atom(line.strip()) for line in Path(path).read_text().splitlines()
            if line.strip() and not line.lstrip().startswith("%")]


def _read_examples(path: str):
    examples = []
    for line in Path(path).read_text().splitlines():
        if not line.strip():
            continue
        fields = line.split("\t")
        query = parse_atom(fields[0])
        pos = tuple(repr(parse_atom(f[1:])) for f in fields[1:]
                    if f.startswith("+"))
        neg = tuple(repr(parse_atom(f[1:])) for f in fields[1:]
                    if f.startswith("-"))
        examples.append(TrainingExample(query, pos, neg))
    return examples


def cmd_answer(args) -> int:
    program, store, params, w, fn = _setup(args)
    queries = _read_queries(args.queries)
    out, t_ground, t_ppr = [], 0.0, 0.0
    for q in queries:
        try:
            if args.exact:
                t0 = time.perf_counter()
                g = ground_full(q, program, store, params, w, fn)
                t_ground += time.perf_counter() - t0
                t0 = time.perf_counter()
                v = power_iterate(g, w, fn, params.max_T,
                                  alpha_prime=params.alpha_prime)
                t_ppr += time.perf_counter() - t0
            else:
                t0 = time.perf_counter()
                g, p, _ = approximate_ground(q, program, store, params, w, fn)
                t_ground += time.perf_counter() - t0
                v = [0.0] * g.num_nodes
                for nid, mass in p.items():
                    v[nid] = mass
            answers = extract_answers(g, v)
            out.append(f"query\t{q!r}")
            for rank, (answer, prob) in enumerate(answers, 1):
                out.append(f"{rank}\t{prob!r}\t{answer}")
        except Exception as e:  # per-query failures don't abort the run
            out.append(f"query\t{q!r}")
            out.append(f"error\t{e}")
    print(f"time\tgrounding\t{t_ground:.6f}", file=sys.stderr)
    print(f"time\tppr\t{t_ppr:.6f}", file=sys.stderr)
    _emit(args, "\n".join(out) + "\n")
    return 0


def cmd_ground(args) -> int:
    program, store, params, w, fn = _setup(args)
    examples = _read_examples(args.train)
    records = []
    for ex in examples:
        g, _, _ = approximate_ground(ex.query, program, store, params, w, fn)
        lg = label_grounding(ex, g)
        if not (lg.pos_nodes or lg.neg_nodes):
            print(f"warning\tno labeled solutions for {ex.query!r}",
                  file=sys.stderr)
        records.append(serialize(g))
    _emit(args, "\n".join(records))
    return 0


def cmd_train(args) -> int:
    program, store, params, w, fn = _setup(args)
    examples = _read_examples(args.train)
    cfg = SgdConfig(mu=args.mu, eta=args.eta, epochs=args.epochs,
                    threads=args.threads, loss=args.loss)
    if args.groundings:
        graphs = deserialize(Path(args.groundings).read_text())
        if len(graphs) != len(examples):
            print(f"error\t{len(graphs)} groundings for "
                  f"{len(examples)} examples", file=sys.stderr)
            return 2
        groundings = [label_grounding(ex, g)
                      for ex, g in zip(examples, graphs)]
    else:
        groundings = ground_examples(examples, program, store, params, w, fn)
    usable = [lg for lg in groundings if lg.usable]
    if not usable:
        print("error\tno usable training examples "
              "(each needs a positive and a negative in its grounding)",
              file=sys.stderr)
        return 2
    result = train_on_groundings(groundings, cfg, args.seed,
                                 params.alpha_prime, fn)
    for epoch, loss in enumerate(result.epoch_losses, 1):
        print(f"epoch\t{epoch}\t{loss:.6f}", file=sys.stderr)
    if result.skipped_examples:
        print(f"skipped\t{result.skipped_examples}", file=sys.stderr)
    text = save_params(result.weights)
    if args.params_out:
        Path(args.params_out).write_text(text)
    else:
        sys.stdout.write(text)
    return 0


def _read_answers(path: str):
    per_query: dict[str, dict[str, float]] = {}
    current = None
    for line in Path(path).read_text().splitlines():
        if not line.strip():
            continue
        kind, _, rest = line.partition("\t")
        if kind == "query":
            current = rest
            per_query.setdefault(current, {})
        elif kind == "error":
            continue
        else:
            prob, answer = rest.split("\t")
            per_query[current][answer] = float(prob)
    return per_query


def cmd_eval(args) -> int:
    per_query = _read_answers(args.answers)
    examples = _read_examples(args.labels)
    lines = []
    maps = []
    wins = pairs = 0.0
    for ex in examples:
        scores = per_query.get(repr(ex.query), {})
        relevant = set(ex.positives)
        universe = set(scores) | relevant | set(ex.negatives)
        ranked = sorted(universe, key=lambda a: (-scores.get(a, 0.0), a))
        ap = average_precision(ranked, relevant) if relevant else 0.0
        maps.append(ap)
        for p in ex.positives:
            for n in ex.negatives:
                sp, sn = scores.get(p, 0.0), scores.get(n, 0.0)
                wins += 1.0 if sp > sn else (0.5 if sp == sn else 0.0)
                pairs += 1
        try:
            q_auc = auc(scores, relevant, universe)
            lines.append(f"{ex.query!r}\t{ap:.6f}\t{q_auc:.6f}")
        except ValueError:
            lines.append(f"{ex.query!r}\t{ap:.6f}\tNA")
    global_auc = wins / pairs if pairs else float("nan")
    lines.append(f"summary\tMAP\t{sum(maps) / len(maps):.6f}")
    lines.append(f"summary\tAUC\t{global_auc:.6f}")
    _emit(args, "\n".join(lines) + "\n")
    return 0


def cmd_synth(args) -> int:
    from .synth import (CITATION_RULES, HYPERLINK_RULES, SyntheticDbSpec,
                        citation_corpus, hyperlink_db)
    outdir = Path(args.out_dir)
    outdir.mkdir(parents=True, exist_ok=True)
    if args.task == "hyperlink":
        spec = SyntheticDbSpec(args.entities, args.degree, args.vocab,
                               args.seed)
        facts, queries = hyperlink_db(spec, num_queries=args.queries)
        (outdir / "rules.pl").write_text(HYPERLINK_RULES)
        (outdir / "facts.tsv").write_text(facts)
        (outdir / "queries.txt").write_text(queries)
    else:
        facts, train, test = citation_corpus(num_papers=args.papers,
                                             seed=args.seed)
        (outdir / "rules.pl").write_text(CITATION_RULES)
        (outdir / "facts.tsv").write_text(facts)
        (outdir / "train.tsv").write_text(train)
        (outdir / "test.tsv").write_text(test)
    return 0


def cmd_bench(args) -> int:
    """Time the hot kernels on a random grounded-graph-shaped instance
    under both backends (numba in-process; numpy via a subprocess with
    PPRLOG_BACKEND=numpy when numba is active, and vice versa)."""
    import json
    import subprocess

    payload = dict(nodes=args.nodes, degree=args.degree, T=args.T,
                   reps=args.reps)
    rows = [_bench_once(payload)]
    other = {"numba": "numpy", "numpy": "numba"}[rows[0]["backend"]]
    env = dict(os.environ, PPRLOG_BACKEND=other)
    try:
        out = subprocess.run(
            [sys.executable, "-m", "pprlog.cli", "_bench-worker",
             json.dumps(payload)],
            capture_output=True, text=True, env=env, check=True)
        rows.append(json.loads(out.stdout))
    except subprocess.CalledProcessError as e:
        print(f"warning\tbackend {other} unavailable: {e.stderr.strip()}",
              file=sys.stderr)
    print("backend\tpower_iter_s\tgrad_iter_s")
    for row in rows:
        print(f"{row['backend']}\t{row['power']:.6f}\t{row['grad']:.6f}")
    return 0


def _bench_once(payload: dict) -> dict:
    import numpy as np

    from .kernels import (backend_name, grad_power_iterate_arrays,
                          power_iterate_arrays)
    rng = np.random.default_rng(0)
    n, deg, T, reps = (payload["nodes"], payload["degree"], payload["T"],
                       payload["reps"])
    src = np.repeat(np.arange(n), deg)
    dst = rng.integers(0, n, n * deg)
    prob = np.full(n * deg, 1.0 / deg)
    F = 8
    dprob = rng.normal(0, 0.01, (F, n * deg))
    # Warm-up covers numba compilation so timings measure steady state.
    power_iterate_arrays(src, dst, prob, n, 0, 2, 0.0)
    grad_power_iterate_arrays(src, dst, prob, dprob, n, 0, 2)
    t0 = time.perf_counter()
    for _ in range(reps):
        power_iterate_arrays(src, dst, prob, n, 0, T, 0.0)
    t_power = (time.perf_counter() - t0) / reps
    t0 = time.perf_counter()
    for _ in range(reps):
        grad_power_iterate_arrays(src, dst, prob, dprob, n, 0, T)
    t_grad = (time.perf_counter() - t0) / reps
    return {"backend": backend_name(), "power": t_power, "grad": t_grad}


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="pprlog", description=__doc__)
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("answer", help="rank answers for queries")
    _add_common(p)
    p.add_argument("--queries", required=True)
    p.add_argument("--exact", action="store_true",
                   help="full grounding + power iteration")
    p.set_defaults(func=cmd_answer)

    p = sub.add_parser("ground", help="serialize grounded training graphs")
    _add_common(p)
    p.add_argument("--train", required=True, help="labeled examples file")
    p.set_defaults(func=cmd_ground)

    p = sub.add_parser("train", help="learn feature weights")
    _add_common(p)
    p.add_argument("--train", required=True)
    p.add_argument("--groundings", help="reuse serialized groundings")
    p.add_argument("--params-out")
    p.add_argument("--mu", type=float, default=0.001)
    p.add_argument("--eta", type=float, default=1.0)
    p.add_argument("--epochs", type=int, default=5)
    p.add_argument("--threads", type=int, default=1)
    p.add_argument("--loss", choices=["squared", "log"], default="squared")
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("eval", help="score answers against labels")
    p.add_argument("--answers", required=True)
    p.add_argument("--labels", required=True)
    p.add_argument("--out")
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("synth", help="generate synthetic data")
    p.add_argument("--task", choices=["hyperlink", "citation"],
                   default="hyperlink")
    p.add_argument("--entities", type=int, default=64)
    p.add_argument("--degree", type=float, default=4.0)
    p.add_argument("--vocab", type=int, default=50)
    p.add_argument("--papers", type=int, default=12)
    p.add_argument("--queries", type=int, default=16)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out-dir", required=True)
    p.set_defaults(func=cmd_synth)

    p = sub.add_parser("bench", help="compare kernel backends")
    p.add_argument("--nodes", type=int, default=5000)
    p.add_argument("--degree", type=int, default=8)
    p.add_argument("--T", type=int, default=20)
    p.add_argument("--reps", type=int, default=5)
    p.set_defaults(func=cmd_bench)

    return ap


def main(argv=None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    if argv and argv[0] == "_bench-worker":
        import json
        print(json.dumps(_bench_once(json.loads(argv[1]))))
        return 0
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except Exception as e:
        print(f"error\t{e}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
