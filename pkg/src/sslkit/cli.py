"""Command-line entry point over files.

Human-readable summaries go to stdout, machine-readable records go to
files (always written atomically), and the exit status reflects success.
Nothing touches the network unless a backend endpoint or a remote
embedder is explicitly requested; credentials travel only through the
environment.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from . import bootstrap as bs
from . import normalizer as nm
from . import records
from . import retrieval as rt
from . import risk as rk
from .document import parse_document
from .errors import ParseError, SslError
from .validation import validate
from .views import RepresentationVariant, compose_input, source_outline

CREDENTIAL_ENV = "SSLKIT_API_KEY"


def _fail(exc: Exception) -> int:
    print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
    return 1


def _print_report(report) -> None:
    for issue in report.issues:
        print(f"{issue.severity.value.upper()} {issue.code.value} {issue.location}: {issue.message}")
    print("accepted" if report.accepted else "rejected")


def cmd_validate(args) -> int:
    text = Path(args.record).read_bytes()
    try:
        doc = parse_document(text)
    except ParseError as exc:
        code = type(exc).__name__
        print(f"HARD {code} {exc.path}: {exc}")
        print("rejected")
        if args.report:
            records.atomic_write_text(
                args.report,
                json.dumps(
                    {
                        "accepted": False,
                        "issues": [
                            {
                                "severity": "hard",
                                "code": code,
                                "location": exc.path,
                                "message": str(exc),
                            }
                        ],
                    }
                )
                + "\n",
            )
        return 1
    report = validate(doc)
    _print_report(report)
    if args.report:
        records.atomic_write_text(
            args.report, json.dumps(nm.report_to_obj(report)) + "\n"
        )
    return 0 if report.accepted else 1


def cmd_project(args) -> int:
    variant = RepresentationVariant(args.variant)
    doc = None
    if args.record:
        doc = parse_document(Path(args.record).read_bytes())
    desc = Path(args.desc).read_text(encoding="utf-8") if args.desc else ""
    md = Path(args.md).read_text(encoding="utf-8") if args.md else ""
    view = compose_input(variant, desc, md, doc)
    print(view.text)
    return 0


def cmd_outline(args) -> int:
    md = Path(args.md).read_text(encoding="utf-8")
    print(source_outline(md))
    return 0


def cmd_normalize(args) -> int:
    cfg = (
        nm.NormalizerConfig.from_mapping(records.load_key_value_config(args.config))
        if args.config
        else nm.NormalizerConfig()
    )
    backend = nm.HttpGenerationBackend(args.backend, api_key_env=CREDENTIAL_ENV)
    sources = []
    for lineno, obj in records.read_jsonl(args.corpus):
        if "skill_id" not in obj:
            raise ValueError(f"{args.corpus}:{lineno}: record missing skill_id")
        source_md = obj.get("source_md", "")
        if not source_md and obj.get("source_md_path"):
            source_md = (Path(args.corpus).parent / obj["source_md_path"]).read_text(
                encoding="utf-8"
            )
        sources.append((obj["skill_id"], source_md))
    outcomes, yield_report = nm.normalize_corpus(
        sources, backend, cfg, checkpoint_path=args.checkpoint
    )
    records.write_jsonl_atomic(
        args.out, (nm.outcome_to_obj(sid, o) for sid, o in outcomes.items())
    )
    yield_obj = {
        "total": yield_report.total,
        "accepted": yield_report.accepted,
        "yield_fraction": yield_report.yield_fraction,
        "empty_corpus": yield_report.empty_corpus,
    }
    if args.yield_out:
        records.atomic_write_text(args.yield_out, json.dumps(yield_obj) + "\n")
    print(
        f"normalized {yield_report.accepted}/{yield_report.total} "
        f"(yield {yield_report.yield_fraction:.4f})"
    )
    return 0


def _table(headers: list[str], rows: list[list[str]]) -> str:
    widths = [
        max(len(headers[c]), *(len(r[c]) for r in rows)) if rows else len(headers[c])
        for c in range(len(headers))
    ]
    def fmt(row):
        return "  ".join(cell.ljust(widths[c]) for c, cell in enumerate(row)).rstrip()
    return "\n".join([fmt(headers)] + [fmt(r) for r in rows])


def cmd_eval_retrieval(args) -> int:
    variant = RepresentationVariant(args.variant)
    queries = rt.load_queries(args.queries)
    corpus = rt.load_corpus(args.corpus)
    if args.embedder == "offline":
        embedder = rt.HashedTokenEmbedder()
    else:
        if not args.embed_endpoint:
            raise ValueError("remote embedder requires --embed-endpoint")
        embedder = rt.HttpEmbeddingBackend(args.embed_endpoint, api_key_env=CREDENTIAL_ENV)
    evaluation = rt.evaluate_variant(queries, corpus, variant, embedder)

    rows = [evaluation.overall] + [
        evaluation.by_type[t] for t in rt.QueryType if t in evaluation.by_type
    ]
    print(
        _table(
            ["scope", "n", "MRR@50", "NDCG@5", "NDCG@10", "Recall@10"],
            [
                [
                    row.scope,
                    str(row.n_queries),
                    f"{row.mrr50:.3f}",
                    f"{row.ndcg5:.3f}",
                    f"{row.ndcg10:.3f}",
                    f"{row.recall10:.3f}",
                ]
                for row in rows
            ],
        )
    )
    if args.out:
        records.write_jsonl_atomic(
            f"{args.out}.metrics.jsonl",
            (rt.metrics_row_to_obj(variant, row) for row in rows),
        )
        records.write_jsonl_atomic(
            f"{args.out}.per_query.jsonl",
            (rt.result_to_obj(r) for r in evaluation.per_query),
        )
    return 0


def cmd_eval_risk(args) -> int:
    gold = rk.load_gold_labels(args.gold)
    preds = rk.load_predictions(args.preds)
    missing = sorted(set(gold) - set(preds))
    if missing:
        raise ValueError(f"predictions missing for {len(missing)} skills, e.g. {missing[:3]}")
    skill_ids = list(gold)
    per_dim = {}
    for i, dim in enumerate(rk.DIMENSIONS):
        dim_preds = [preds[sid][i] for sid in skill_ids]
        dim_gold = [gold[sid].labels[i] for sid in skill_ids]
        per_dim[dim] = rk.dimension_metrics(dim_preds, dim_gold)
    macro = rk.macro_metrics(per_dim)

    rows = [
        [dim.value, f"{m.accuracy:.3f}", f"{m.precision:.3f}", f"{m.recall:.3f}", f"{m.f1:.3f}"]
        for dim, m in per_dim.items()
    ]
    rows.append(
        ["macro", f"{macro.accuracy:.3f}", f"{macro.precision:.3f}", f"{macro.recall:.3f}", f"{macro.f1:.3f}"]
    )
    print(_table(["dimension", "accuracy", "precision", "recall", "f1"], rows))

    if args.report:
        obj = {
            "per_dimension": {
                dim.value: dict(m._asdict()) for dim, m in per_dim.items()
            },
            "macro": dict(macro._asdict()),
            "n_skills": len(skill_ids),
        }
        records.atomic_write_text(args.report, json.dumps(obj, indent=2) + "\n")
    if args.per_unit:
        records.write_jsonl_atomic(
            args.per_unit,
            (
                {
                    "skill_id": sid,
                    "gold": [rk.label_str(v) for v in gold[sid].labels],
                    "pred": [rk.label_str(v) for v in preds[sid]],
                }
                for sid in skill_ids
            ),
        )
    return 0


def cmd_aggregate_votes(args) -> int:
    round1 = rk.load_vote_log(args.round1)
    review = rk.load_vote_log(args.review) if args.review else {}
    finals = []
    reviewed_count = 0
    for skill_id, vote_objs in round1.items():
        votes = [rk.model_vote_from_obj(v) for v in vote_objs]
        first = rk.aggregate_first_round(votes)
        if first.disputed and skill_id in review:
            review_votes = [rk.review_vote_from_obj(v) for v in review[skill_id]]
            final = rk.apply_review(first, review_votes)
            reviewed_count += 1
        else:
            final = first.labels
        finals.append(rk.gold_record_obj(skill_id, final))
    records.write_jsonl_atomic(args.out, finals)
    print(f"aggregated {len(finals)} skills ({reviewed_count} with review round)")
    return 0


def cmd_stratify(args) -> int:
    corpus = rt.load_corpus(args.corpus)
    assignments = []
    counts = {s: 0 for s in rk.Stratum}
    for entry in corpus:
        if entry.document is None:
            raise ValueError(f"skill {entry.skill_id}: no structured record to stratify")
        stratum = rk.stratify(entry.document)
        counts[stratum] += 1
        assignments.append({"skill_id": entry.skill_id, "stratum": stratum.value})
    if args.out:
        records.write_jsonl_atomic(args.out, assignments)
    print(
        f"high {counts[rk.Stratum.HIGH]}, medium {counts[rk.Stratum.MEDIUM]}, "
        f"low {counts[rk.Stratum.LOW]}"
    )
    return 0


def _load_score_units(base_path: str, ssl_path: str) -> list[bs.PairedUnit]:
    def read(path):
        out = {}
        for lineno, obj in records.read_jsonl(path):
            unit_id = obj.get("query_id") or obj.get("unit_id")
            if unit_id is None:
                raise ValueError(f"{path}:{lineno}: record missing query_id/unit_id")
            score = obj.get("reciprocal_rank", obj.get("score"))
            if score is None:
                raise ValueError(f"{path}:{lineno}: record missing reciprocal_rank/score")
            out[unit_id] = float(score)
        return out

    base, ssl = read(base_path), read(ssl_path)
    if set(base) != set(ssl):
        raise ValueError("base and ssl files cover different unit sets")
    return [bs.PairedUnit(uid, base[uid], ssl[uid]) for uid in base]


def _load_label_units(base_path: str, ssl_path: str) -> list[bs.PairedUnit]:
    def read(path):
        out = {}
        for lineno, obj in records.read_jsonl(path):
            unit_id = obj.get("skill_id") or obj.get("unit_id")
            if unit_id is None:
                raise ValueError(f"{path}:{lineno}: record missing skill_id/unit_id")
            gold = [g == "risk" for g in obj["gold"]]
            pred = [p == "risk" for p in obj["pred"]]
            if len(gold) != rk.N_DIMENSIONS or len(pred) != rk.N_DIMENSIONS:
                raise ValueError(f"{path}:{lineno}: labels must cover six dimensions")
            out[unit_id] = (tuple(gold), tuple(pred))
        return out

    base, ssl = read(base_path), read(ssl_path)
    if set(base) != set(ssl):
        raise ValueError("base and ssl files cover different unit sets")
    units = []
    for uid in base:
        if base[uid][0] != ssl[uid][0]:
            raise ValueError(f"unit {uid}: gold labels differ between base and ssl files")
        base_pairs = tuple(zip(base[uid][0], base[uid][1]))
        ssl_pairs = tuple(zip(ssl[uid][0], ssl[uid][1]))
        units.append(bs.PairedUnit(uid, base_pairs, ssl_pairs))
    return units


def cmd_bootstrap(args) -> int:
    if args.task == "retrieval":
        units = _load_score_units(args.base, args.ssl)
        aggregator = bs.mean_score
        metric = "MRR@50"
    else:
        units = _load_label_units(args.base, args.ssl)
        aggregator = bs.macro_f1_of_label_pairs
        metric = "macro_f1"
    ordered = sorted(units, key=lambda u: u.unit_id)
    base_value = aggregator([u.base for u in ordered])
    ssl_value = aggregator([u.ssl for u in ordered])
    result = bs.paired_bootstrap(
        units, aggregator, replicates=args.replicates, seed=args.seed
    )
    row = {
        "task": args.task,
        "metric": metric,
        "base": base_value,
        "ssl": ssl_value,
        "delta": result.point_delta,
        "ci_low": result.ci_low,
        "ci_high": result.ci_high,
        "replicates": result.replicates,
        "seed": result.seed,
        "generator": result.generator,
    }
    if args.out:
        records.atomic_write_text(args.out, json.dumps(row) + "\n")
    print(
        f"{args.task} {metric}: base {base_value:.3f}, ssl {ssl_value:.3f}, "
        f"delta {result.point_delta:.3f}, 95% CI [{result.ci_low:.3f}, {result.ci_high:.3f}]"
    )
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="sslkit", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("validate", help="validate a skill record file")
    p.add_argument("record")
    p.add_argument("--report", help="write a machine-readable report here")
    p.set_defaults(func=cmd_validate)

    p = sub.add_parser("project", help="render one retrieval input variant")
    p.add_argument("--variant", required=True, choices=[v.value for v in RepresentationVariant])
    p.add_argument("--record", help="skill record file (required for structured variants)")
    p.add_argument("--desc", help="description text file")
    p.add_argument("--md", help="source document file")
    p.set_defaults(func=cmd_project)

    p = sub.add_parser("outline", help="print the deterministic source outline")
    p.add_argument("md")
    p.set_defaults(func=cmd_outline)

    p = sub.add_parser("normalize", help="normalize a corpus through a backend endpoint")
    p.add_argument("corpus")
    p.add_argument("--config", help="key=value config file for budgets/temperatures")
    p.add_argument("--backend", required=True, help="generation endpoint URL")
    p.add_argument("--out", required=True, help="outcome records file")
    p.add_argument("--yield-out", dest="yield_out", help="write the yield report here")
    p.add_argument("--checkpoint", help="resumable outcome log keyed by skill_id")
    p.set_defaults(func=cmd_normalize)

    p = sub.add_parser("eval-retrieval", help="run the discovery evaluation")
    p.add_argument("--variant", required=True, choices=[v.value for v in RepresentationVariant])
    p.add_argument("--queries", required=True)
    p.add_argument("--corpus", required=True)
    p.add_argument("--embedder", choices=["offline", "remote"], default="offline")
    p.add_argument("--embed-endpoint", dest="embed_endpoint", help="embedding endpoint URL (remote only)")
    p.add_argument("--out", help="output prefix for metric and per-query files")
    p.set_defaults(func=cmd_eval_retrieval)

    p = sub.add_parser("eval-risk", help="score predictions against gold labels")
    p.add_argument("--gold", required=True)
    p.add_argument("--preds", required=True)
    p.add_argument("--report", help="write the metric report here")
    p.add_argument("--per-unit", dest="per_unit", help="write per-skill gold/pred pairs here")
    p.set_defaults(func=cmd_eval_risk)

    p = sub.add_parser("aggregate-votes", help="majority-vote model ballots into final labels")
    p.add_argument("--round1", required=True, help="first-round vote log")
    p.add_argument("--review", help="review-round vote log for disputed dimensions")
    p.add_argument("--out", required=True, help="final label file")
    p.set_defaults(func=cmd_aggregate_votes)

    p = sub.add_parser("stratify", help="assign evidence strata over a corpus")
    p.add_argument("corpus")
    p.add_argument("--out", help="write stratum assignments here")
    p.set_defaults(func=cmd_stratify)

    p = sub.add_parser("bootstrap", help="paired bootstrap CI over per-unit results")
    p.add_argument("--task", required=True, choices=["retrieval", "risk"])
    p.add_argument("--base", required=True, help="per-unit results of the baseline system")
    p.add_argument("--ssl", required=True, help="per-unit results of the structured system")
    p.add_argument("--replicates", type=int, default=20000)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", help="write the result row here")
    p.set_defaults(func=cmd_bootstrap)

    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (SslError, ValueError, OSError) as exc:
        return _fail(exc)


if __name__ == "__main__":
    sys.exit(main())
