"""Command-line entry point: ``anoneval <subcommand> ...``.

Every subcommand prints one JSON object to stdout. Exit status is 0 on
success, 1 for input errors and 2 for computational domain errors.
"""

from __future__ import annotations

import argparse
import json
import logging
import os
import sys
from pathlib import Path

from . import corpus, report
from .attack import (
    IDENTITY,
    AnonymizationPolicy,
    Assignment,
    PopulationConfig,
    Strategy,
    run_attack,
    standard_fixture,
)
from .errors import AnonEvalError, InputError
from .metrics import compute_eer, compute_wer, putr
from .pitch import PitchConfig, corpus_pitch_correlation
from .selection import (
    Direction,
    SelectionParams,
    build_pool,
    pseudo_members,
    pseudo_xvector,
    select_random,
    select_random_gender_preserving,
)

OUT_DIR_ENV = "ANONEVAL_OUT_DIR"
log = logging.getLogger("anoneval")


def _emit(obj) -> None:
    print(json.dumps(obj, indent=2))


def _out_dir(args) -> Path | None:
    d = args.out_dir or os.environ.get(OUT_DIR_ENV)
    return Path(d) if d else None


def _lambda_grid(text: str) -> list[float]:
    try:
        grid = [float(x) for x in text.split(",") if x.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"bad lambda grid {text!r}") from None
    if not grid:
        raise argparse.ArgumentTypeError("empty lambda grid")
    return grid


# ---------------------------------------------------------------------------


def cmd_eer(args):
    trials = corpus.parse_trials(args.trials)
    scored = corpus.parse_scores(args.scores, trials)
    res = compute_eer(scored)
    out = {
        "eer": res.eer,
        "eer_percent": round(100 * res.eer, 2),
        "num_target": res.num_target,
        "num_nontarget": res.num_nontarget,
    }
    d = _out_dir(args)
    if d:
        d.mkdir(parents=True, exist_ok=True)
        path = d / "det_sweep.csv"
        path.write_text(
            "threshold,far,frr\n" + "".join(f"{p.threshold!r},{p.far!r},{p.frr!r}\n" for p in res.sweep)
        )
        out["sweep_file"] = str(path)
    _emit(out)


def cmd_wer(args):
    ts = corpus.parse_transcripts(args.ref, args.hyp, strip_punct=args.strip_punct)
    res = compute_wer(ts.pairs)
    tot = res.total
    _emit(
        {
            "wer": res.wer,
            "wer_percent": round(100 * res.wer, 2),
            "substitutions": tot.sub,
            "insertions": tot.ins,
            "deletions": tot.dele,
            "reference_tokens": tot.ntok,
            "utterances": len(ts.pairs),
            "missing_hypotheses": len(ts.missing_hypotheses),
        }
    )


def cmd_pitch_corr(args):
    pairs = []
    rate = None
    for lineno, fields in corpus._lines(args.pairs):
        if len(fields) != 3:
            raise corpus.MalformedLine(args.pairs, lineno, "expected: utt_id original.wav anonymized.wav")
        base = Path(args.pairs).parent
        orig = corpus.read_wav(base / fields[1], expected_rate=rate)
        rate = orig.sample_rate
        anon = corpus.read_wav(base / fields[2], expected_rate=rate)
        pairs.append((fields[0], orig.audio, anon.audio))
    cfg = PitchConfig(pitch_floor=args.floor, pitch_ceiling=args.ceiling)
    res = corpus_pitch_correlation([(o, a) for _, o, a in pairs], cfg)
    _emit(
        {
            "pitch_correlation": res.mean,
            "pitch_correlation_display": round(res.mean, 2),
            "defined_pairs": res.num_defined,
            "undefined_pairs": res.num_undefined,
            "per_pair": {utt: v for (utt, _, _), v in zip(pairs, res.per_pair)},
        }
    )


def cmd_putr(args):
    scale = 1.0 if args.fraction else 100.0
    rates = {k: getattr(args, k) / scale for k in ("wer0", "wer1", "eer0", "eer1")}
    for k in rates:
        rates[k] = report.clamp_rate(rates[k], args.num_trials, k)
    points = [
        {"lambda": lam, "putr": putr(rates["wer0"], rates["wer1"], rates["eer0"], rates["eer1"], lam)}
        for lam in args.lambda_grid
    ]
    for p in points:
        p["putr_display"] = round(p["putr"], 4)
    _emit({"inputs": rates, "sweep": points})


def cmd_pool(args):
    pool = build_pool(corpus.parse_embeddings(args.embeddings))
    corpus.write_embeddings(args.out, ((e.speaker_id, e.gender, e.vector) for e in pool.entries))
    _emit({"speakers": len(pool), "dim": pool.dim, "out": str(args.out)})


def cmd_select(args):
    pool = build_pool(corpus.parse_embeddings(args.pool))
    if args.strategy == "random":
        t = select_random(pool, args.source_id, args.seed)
        _emit({"strategy": args.strategy, "target": t.speaker_id, "gender": t.gender.value})
    elif args.strategy == "gender-preserving":
        if not args.source_gender:
            raise InputError("--source-gender is required for gender-preserving selection")
        t = select_random_gender_preserving(pool, args.source_id, args.source_gender, args.seed)
        _emit({"strategy": args.strategy, "target": t.speaker_id, "gender": t.gender.value})
    else:
        if not args.source:
            raise InputError("--source embedding file is required for pseudo-xvector selection")
        sources = build_pool(corpus.parse_embeddings(args.source))
        match = [e for e in sources.entries if e.speaker_id == args.source_id]
        if not match:
            raise InputError(f"speaker {args.source_id!r} not found in {args.source}")
        params = SelectionParams(args.n_closest, args.m_sampled, Direction(args.direction), args.seed)
        members = pseudo_members(pool, match[0].vector, params)
        vec = pseudo_xvector(pool, match[0].vector, params)
        _emit(
            {
                "strategy": args.strategy,
                "members": [pool.ids[i] for i in members],
                "vector": [float(v) for v in vec],
            }
        )


_POLICIES = {
    "identity": lambda a: IDENTITY,
    "random": lambda a: AnonymizationPolicy(Strategy.RANDOM, Assignment(a.assignment), a.leakage),
    "gender-preserving": lambda a: AnonymizationPolicy(
        Strategy.GENDER_PRESERVING, Assignment(a.assignment), a.leakage
    ),
    "pseudo-xvector": lambda a: AnonymizationPolicy(
        Strategy.PSEUDO_XVECTOR,
        Assignment(a.assignment),
        a.leakage,
        SelectionParams(a.n_closest, a.m_sampled, Direction(a.direction)),
    ),
}


def cmd_simulate(args):
    pop, pool = standard_fixture(
        args.seed,
        PopulationConfig(args.speakers, args.utts, args.dim, args.between, args.within),
        pool_size=args.pool_size,
    )
    policy = _POLICIES[args.strategy](args)
    res = run_attack(pop, pool, policy, policy, args.trials, args.seed)
    out = {
        "strategy": args.strategy,
        "assignment": args.assignment,
        "leakage": args.leakage,
        "eer": res.eer_value,
        "eer_percent": round(100 * res.eer_value, 2),
        "trials": len(res.trials),
    }
    d = _out_dir(args)
    if d:
        d.mkdir(parents=True, exist_ok=True)
        corpus.write_trials(d / "trials", res.trials)
        corpus.write_scores(d / "scores", res.trials)
        out["trials_file"] = str(d / "trials")
        out["scores_file"] = str(d / "scores")
    _emit(out)


def cmd_report(args):
    rows = report.read_rows_csv(args.rows)
    if args.weights:
        rows = report.apply_weights(rows, corpus.parse_weights(args.weights))
    rep = report.build_report(
        rows, args.lambda_grid, args.baseline, args.num_trials, args.seed, args.timestamp
    )
    d = _out_dir(args) or Path(".")
    formats = [f.strip() for f in args.format.split(",") if f.strip()]
    written = report.render_report(rep, d, formats)
    _emit(
        {
            "aggregates": [
                {"metric": a.metric, "system": a.system, "split": a.split, "value": a.value}
                for a in rep.aggregates
            ],
            "files": {k: str(v) for k, v in written.items()},
            "config_hash": rep.metadata["config_hash"],
        }
    )


# ---------------------------------------------------------------------------


class _Parser(argparse.ArgumentParser):
    # usage errors are input errors: exit 1, not argparse's default 2
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(1, f"{self.prog}: error: {message}\n")


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="anoneval", description=__doc__.splitlines()[0])
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True)

    def out_dir(sp):
        sp.add_argument("--out-dir", help=f"artifact directory (default: ${OUT_DIR_ENV})")

    sp = sub.add_parser("eer", help="equal error rate from Kaldi trials + scores")
    sp.add_argument("--trials", required=True)
    sp.add_argument("--scores", required=True)
    out_dir(sp)
    sp.set_defaults(func=cmd_eer)

    sp = sub.add_parser("wer", help="corpus word error rate")
    sp.add_argument("--ref", required=True)
    sp.add_argument("--hyp", required=True)
    sp.add_argument("--strip-punct", action="store_true")
    sp.set_defaults(func=cmd_wer)

    sp = sub.add_parser("pitch-corr", help="mean per-utterance F0 correlation")
    sp.add_argument("--pairs", required=True, help="lines: utt_id original.wav anonymized.wav")
    sp.add_argument("--floor", type=float, default=75.0)
    sp.add_argument("--ceiling", type=float, default=600.0)
    sp.set_defaults(func=cmd_pitch_corr)

    sp = sub.add_parser("putr", help="privacy-to-utility trade-off over a lambda grid")
    for name in ("wer0", "wer1", "eer0", "eer1"):
        sp.add_argument(f"--{name}", type=float, required=True)
    sp.add_argument("--fraction", action="store_true", help="rates are fractions, not percent")
    sp.add_argument("--lambda-grid", type=_lambda_grid, default=list(report.DEFAULT_LAMBDAS))
    sp.add_argument("--num-trials", type=int, help="enables clamping of zero rates")
    sp.set_defaults(func=cmd_putr)

    sp = sub.add_parser("pool", help="average utterance embeddings into a speaker pool")
    sp.add_argument("--embeddings", required=True)
    sp.add_argument("--out", required=True)
    sp.set_defaults(func=cmd_pool)

    sp = sub.add_parser("select", help="choose a target speaker from a pool")
    sp.add_argument("--pool", required=True)
    sp.add_argument("--strategy", choices=["random", "gender-preserving", "pseudo-xvector"], default="random")
    sp.add_argument("--source-id", required=True)
    sp.add_argument("--source-gender")
    sp.add_argument("--source", help="embedding file holding the source speaker")
    sp.add_argument("--n-closest", type=int, default=200)
    sp.add_argument("--m-sampled", type=int, default=20)
    sp.add_argument("--direction", choices=[d.value for d in Direction], default="closest")
    sp.add_argument("--seed", type=int, default=0)
    sp.set_defaults(func=cmd_select)

    sp = sub.add_parser("simulate", help="semi-informed attacker on synthetic embeddings")
    sp.add_argument("--speakers", type=int, default=20)
    sp.add_argument("--utts", type=int, default=10)
    sp.add_argument("--dim", type=int, default=32)
    sp.add_argument("--between", type=float, default=1.0)
    sp.add_argument("--within", type=float, default=0.1)
    sp.add_argument("--pool-size", type=int, default=400)
    sp.add_argument("--strategy", choices=sorted(_POLICIES), default="random")
    sp.add_argument("--assignment", choices=[a.value for a in Assignment], default="per-utterance")
    sp.add_argument("--leakage", type=float, default=0.0)
    sp.add_argument("--n-closest", type=int, default=200)
    sp.add_argument("--m-sampled", type=int, default=20)
    sp.add_argument("--direction", choices=[d.value for d in Direction], default="closest")
    sp.add_argument("--trials", type=int, default=10_000)
    sp.add_argument("--seed", type=int, default=0)
    out_dir(sp)
    sp.set_defaults(func=cmd_simulate)

    sp = sub.add_parser("report", help="aggregate per-subset rows into tables and a trade-off sweep")
    sp.add_argument("--rows", required=True, help="CSV: metric,system,split,subset,gender,weight,value")
    sp.add_argument("--weights", help="override subset weights (name gender weight)")
    sp.add_argument("--lambda-grid", type=_lambda_grid, default=list(report.DEFAULT_LAMBDAS))
    sp.add_argument("--baseline", default="Orig")
    sp.add_argument("--num-trials", type=int)
    sp.add_argument("--seed", type=int)
    sp.add_argument("--timestamp", help="fixed timestamp for reproducible output")
    sp.add_argument("--format", default="markdown,csv,svg")
    out_dir(sp)
    sp.set_defaults(func=cmd_report)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s: %(message)s")
    try:
        args.func(args)
    except AnonEvalError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return exc.exit_code
    return 0


if __name__ == "__main__":
    sys.exit(main())
