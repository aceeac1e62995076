"""Command-line entry point.

Subcommands: validate, compile, likelihood, genbias, cluster-styles,
tag-bias, offense, corpus-freq, mock-score. Every stage reads and writes the
versioned JSONL/CSV schemas, so stages can be re-run or swapped for real
model adapters independently.
"""
from __future__ import annotations

import argparse
import csv
import json
import sys
from pathlib import Path

from . import genbias as gb
from . import harness, likelihood, mitigation, offense
from .compiler import SentenceCompiler
from .errors import HbError
from .jsonl import read_jsonl, write_jsonl
from .registry import default_data_dir, load_registry, validate_registry


def _load_registry_from_dir(data_dir):
    data_dir = Path(data_dir) if data_dir else default_data_dir()
    return load_registry(data_dir / "descriptors.jsonl", data_dir / "nouns.jsonl",
                         data_dir / "templates.jsonl")


def _write_csv(path, header, rows):
    with open(path, "w", newline="", encoding="utf-8") as f:
        writer = csv.writer(f)
        writer.writerow(header)
        writer.writerows(rows)


# ---------------------------------------------------------------------------
# Subcommands

def cmd_validate(args):
    if args.file:
        if not args.kind:
            print("--kind is required with --file", file=sys.stderr)
            return 2
        sentence_ids = None
        if args.sentences:
            sentence_ids = {rec["id"] for _, rec in read_jsonl(args.sentences)}
        response_ids = None
        if args.responses:
            response_ids = {rec["response_id"] for _, rec in read_jsonl(args.responses)}
        report = harness.validate_schema(args.file, args.kind,
                                         sentence_ids=sentence_ids,
                                         response_ids=response_ids)
        for violation in report.violations:
            print(violation)
        print(f"{report.path}: {report.record_count} records, "
              f"{len(report.violations)} violations")
        return 0 if report.ok else 1

    reg = _load_registry_from_dir(args.data_dir)
    report = validate_registry(reg)
    for violation in report.violations:
        print(f"violation: {violation}")
    for warning in report.warnings:
        print(f"warning: {warning}")
    counts = report.gender_restricted_counts
    print(f"descriptors: {len(reg.descriptors)}  nouns: {len(reg.nouns)}  "
          f"templates: {len(reg.templates)}")
    print(f"gender-restricted descriptors: female_only={counts['female_only']} "
          f"male_only={counts['male_only']}")
    print("registry OK" if report.ok else
          f"registry INVALID ({len(report.violations)} violations)")
    return 0 if report.ok else 1


def cmd_compile(args):
    reg = _load_registry_from_dir(args.data_dir)
    compiler = SentenceCompiler(reg)
    records = (rec.to_record()
               for rec in compiler.compile(args.variants, seed=args.seed))
    count = write_jsonl(args.out, records)
    print(f"wrote {count} sentences to {args.out}")
    return 0


def cmd_mock_score(args):
    profile = (harness.MockProfile.from_file(args.profile) if args.profile
               else harness.MockProfile(seed=args.seed))
    reg = _load_registry_from_dir(args.data_dir)
    stance_of = {t.id: t.stance for t in reg.templates}

    def sentences():
        from .compiler import SentenceRecord
        for _, rec in read_jsonl(args.sentences):
            yield SentenceRecord.from_record(rec)

    if args.emit == "ppl":
        count = write_jsonl(args.out, (
            {"schema_version": 1, "sentence_id": rec.id,
             "perplexity": harness.mock_perplexity(rec, profile)}
            for rec in sentences()))
    elif args.emit == "offense":
        count = write_jsonl(args.out, (
            {"schema_version": 1, "id": rec.id,
             "prob_offensive": harness.mock_offense(
                 rec, profile, stance_of.get(rec.template_id, "neutral"))}
            for rec in sentences()))
    elif args.emit == "responses":
        count = write_jsonl(args.out, (
            resp for rec in sentences() for resp in harness.mock_responses(rec, profile)))
    else:  # styles
        def style_records():
            for rec in sentences():
                for j in range(profile.responses_per_sentence):
                    yield {"schema_version": 1,
                           "response_id": harness.mock_response_id(rec.id, j),
                           "probs": harness.mock_style_vector(rec, profile,
                                                              response_index=j)}
        count = write_jsonl(args.out, style_records())
        if args.manifest_out:
            with open(args.manifest_out, "w", encoding="utf-8") as f:
                json.dump({"schema_version": 1,
                           "styles": [f"style_{k:03d}"
                                      for k in range(profile.style_count)]}, f)
                f.write("\n")
    print(f"wrote {count} {args.emit} records to {args.out}")
    return 0


def cmd_likelihood(args):
    table = likelihood.ingest_perplexities(args.scores, args.sentences)
    rows = []
    for axis in table.axes():
        try:
            report = likelihood.pairwise_significance(
                table, axis, args.template, min_len=args.min_len,
                max_len=args.max_len, alpha=args.alpha)
        except HbError:
            continue
        rows.append([axis, report.template_id, report.pair_count,
                     f"{report.percent_significant:.2f}",
                     "; ".join(report.low_ppl_descriptors),
                     "; ".join(report.high_ppl_descriptors)])
    rows.sort(key=lambda r: -float(r[3]))
    _write_csv(args.out, ["axis", "template_id", "pair_count",
                          "percent_significant", "low_ppl_descriptors",
                          "high_ppl_descriptors"], rows)
    if args.distributions_out:
        summaries = likelihood.distribution_summary(table)
        _write_csv(args.distributions_out,
                   ["axis", "template_id", "count", "median", "q1", "q3",
                    "min", "max"],
                   [[s.axis, s.template_id, s.count, s.median, s.q1, s.q3,
                     s.min, s.max] for s in summaries])
    print(f"wrote pairwise significance for {len(rows)} axes to {args.out}")
    return 0


def _build_grid(args):
    if getattr(args, "manifest", None):
        manifest = gb.load_style_manifest(args.manifest)
    else:
        # style names are only needed for cluster lookups; derive placeholder
        # names from the first style record's dimension
        first = next(iter(read_jsonl(args.styles)), None)
        if first is None:
            raise HbError(f"{args.styles}: no style records")
        manifest = [f"style_{k:03d}" for k in range(len(first[1]["probs"]))]
    return gb.ingest_style_vectors(args.styles, args.responses, args.sentences,
                                   manifest)


def cmd_genbias(args):
    grid = _build_grid(args)
    clusters = gb.load_cluster_specs(args.clusters) if args.clusters else []
    out_dir = Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)

    report = gb.build_gen_bias_report(grid, clusters, axis=args.axis)
    header = ["label", "axis_filter", "fgb_x1000"]
    row = [args.label, report.axis_filter, repr(report.fgb_x1000)]
    for name in sorted(report.per_cluster):
        pgb, scgb = report.per_cluster[name]
        header += [f"{name}_pgb_x1000", f"{name}_scgb_x1000"]
        row += [repr(pgb), repr(scgb)]
    _write_csv(out_dir / "genbias.csv", header, [row])

    if not args.axis:
        axes = sorted(set(grid.descriptor_axis.values()))
        rows = []
        for axis in axes:
            sub = grid.filter_axis(axis)
            rows.append([args.label, axis, repr(gb.full_gen_bias(sub)),
                         len(sub.descriptors())])
        _write_csv(out_dir / "genbias_by_axis.csv",
                   ["label", "axis", "fgb_x1000", "descriptor_count"], rows)
    print(f"wrote generation-bias reports to {out_dir}")
    return 0


def cmd_cluster_styles(args):
    grid = _build_grid(args)
    dendrogram = gb.cluster_styles(grid)
    payload = {
        "schema_version": 1,
        "leaves": list(dendrogram.leaves),
        "merges": [[a, b, h] for a, b, h in dendrogram.merges],
        "isolated": list(dendrogram.isolated),
    }
    if args.around:
        members = dendrogram.flat_cluster_containing(args.around, args.height)
        payload["flat_cluster"] = {"style": args.around, "height": args.height,
                                   "members": sorted(members)}
    with open(args.out, "w", encoding="utf-8") as f:
        json.dump(payload, f, indent=2)
        f.write("\n")
    print(f"wrote dendrogram over {len(dendrogram.leaves)} styles to {args.out}")
    return 0


def cmd_tag_bias(args):
    grid = _build_grid(args)
    contexts = {}
    texts = {}
    for _, rec in read_jsonl(args.responses):
        contexts[rec["response_id"]] = rec.get("context", "")
        texts[rec["response_id"]] = rec.get("text", "")
    config = mitigation.BiasProjectionConfig(alpha=args.alpha, beta=args.beta)
    pairs = mitigation.tag_pairs(grid, contexts, config, response_texts=texts)
    count = write_jsonl(args.out, (p.to_record() for p in pairs))
    n_bias = sum(1 for p in pairs if p.label == "bias")
    print(f"wrote {count} tagged pairs to {args.out} "
          f"({n_bias} bias / {count - n_bias} no_bias)")
    return 0


def cmd_offense(args):
    table = offense.ingest_offense(args.scores, args.sentences,
                                   responses=args.responses)
    out_dir = Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)

    by_template = offense.offense_by_template(table)
    reg = _load_registry_from_dir(args.data_dir) if args.data_dir else None
    pattern_of = ({t.id: t.pattern for t in reg.templates} if reg else {})
    _write_csv(out_dir / "offense_by_template.csv",
               ["template_id", "pattern", "mean", "std", "descriptor_count"],
               [[r["template_id"], pattern_of.get(r["template_id"], ""),
                 repr(r["mean"]), repr(r["std"]), r["descriptor_count"]]
                for r in by_template])

    if args.template:
        edges = [float(e) for e in args.bucket_edges.split(",")]
        buckets = offense.offense_by_descriptor(table, args.template, edges)
        rows = []
        for bucket in buckets:
            for descriptor, mean, is_nonce in bucket.entries:
                rows.append([args.template, bucket.low, bucket.high,
                             descriptor + ("*" if is_nonce else ""), repr(mean)])
        _write_csv(out_dir / "offense_by_descriptor.csv",
                   ["template_id", "bucket_low", "bucket_high", "descriptor",
                    "mean"], rows)

    fraction = offense.offensive_fraction(table, threshold=args.threshold)
    _write_csv(out_dir / "offense_fraction.csv",
               ["threshold", "fraction_offensive", "item_count"],
               [[args.threshold, repr(fraction), len(table)]])
    print(f"wrote offense reports to {out_dir}")
    return 0


def cmd_corpus_freq(args):
    reg = _load_registry_from_dir(args.data_dir)
    single_word = [d.text for d in reg.descriptors if " " not in d.text]
    report = offense.descriptor_frequency(
        args.corpus, single_word, sample_size=args.sample, seed=args.seed,
        corpus_format=args.corpus_format)
    rows = [[d, report.occurrences[d], report.examples_scanned,
             repr(report.frequency(d))]
            for d in sorted(single_word)]
    _write_csv(args.out, ["descriptor", "occurrences", "examples_scanned",
                          "frequency"], rows)
    print(f"scanned {report.examples_scanned} examples for "
          f"{len(single_word)} descriptors -> {args.out}")
    return 0


# ---------------------------------------------------------------------------

def build_parser():
    parser = argparse.ArgumentParser(
        prog="hb",
        description="Compile templated identity prompts and measure "
                    "demographic bias in model scores.")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("validate", help="validate the registry or a score file")
    p.add_argument("--data-dir", default=None)
    p.add_argument("--file", default=None, help="score/response file to check")
    p.add_argument("--kind", choices=harness.SCHEMA_KINDS, default=None)
    p.add_argument("--sentences", default=None)
    p.add_argument("--responses", default=None)
    p.set_defaults(func=cmd_validate)

    p = sub.add_parser("compile", help="compile the sentence dataset")
    p.add_argument("--data-dir", default=None)
    p.add_argument("--variants", choices=["none", "all", "sampled"], default="none")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_compile)

    p = sub.add_parser("mock-score", help="emit deterministic mock scores")
    p.add_argument("--sentences", required=True)
    p.add_argument("--profile", default=None)
    p.add_argument("--data-dir", default=None)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--emit", choices=["ppl", "styles", "offense", "responses"],
                   required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--manifest-out", default=None)
    p.set_defaults(func=cmd_mock_score)

    p = sub.add_parser("likelihood", help="pairwise perplexity significance")
    p.add_argument("--sentences", required=True)
    p.add_argument("--scores", required=True)
    p.add_argument("--template", default=likelihood.DEFAULT_ANALYSIS_TEMPLATE)
    p.add_argument("--alpha", type=float, default=likelihood.DEFAULT_ALPHA)
    p.add_argument("--min-len", type=int, default=likelihood.DEFAULT_MIN_DESCRIPTOR_LEN)
    p.add_argument("--max-len", type=int, default=likelihood.DEFAULT_MAX_DESCRIPTOR_LEN)
    p.add_argument("--out", required=True)
    p.add_argument("--distributions-out", default=None)
    p.set_defaults(func=cmd_likelihood)

    for name, func, extra in (
            ("genbias", cmd_genbias, "genbias"),
            ("cluster-styles", cmd_cluster_styles, "cluster"),
            ("tag-bias", cmd_tag_bias, "tag")):
        p = sub.add_parser(name)
        p.add_argument("--sentences", required=True)
        p.add_argument("--responses", required=True)
        p.add_argument("--styles", required=True)
        p.add_argument("--manifest", required=(extra != "tag"))
        if extra == "genbias":
            p.add_argument("--clusters", default=None)
            p.add_argument("--axis", default=None)
            p.add_argument("--label", default="run")
            p.add_argument("--out", required=True)
        elif extra == "cluster":
            p.add_argument("--around", default=None)
            p.add_argument("--height", type=float, default=0.5)
            p.add_argument("--out", required=True)
        else:
            p.add_argument("--alpha", type=int, choices=[0, 1, 2], default=0)
            p.add_argument("--beta", type=float, required=True)
            p.add_argument("--out", required=True)
        p.set_defaults(func=func)

    p = sub.add_parser("offense", help="offensiveness differential reports")
    p.add_argument("--sentences", required=True)
    p.add_argument("--scores", required=True)
    p.add_argument("--responses", default=None)
    p.add_argument("--template", default=None)
    p.add_argument("--bucket-edges", default="0,0.25,0.5,0.75,1")
    p.add_argument("--threshold", type=float, default=0.5)
    p.add_argument("--data-dir", default=None)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_offense)

    p = sub.add_parser("corpus-freq", help="descriptor frequency in a corpus")
    p.add_argument("--corpus", required=True)
    p.add_argument("--data-dir", default=None)
    p.add_argument("--sample", type=int, default=None)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--corpus-format", choices=["auto", "text", "jsonl"],
                   default="auto")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_corpus_freq)

    return parser


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except HbError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
