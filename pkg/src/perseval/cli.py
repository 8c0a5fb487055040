"""Command-line interface.

Subcommands orchestrate the corpus -> metric -> engine -> meta-eval
pipelines and write deterministic, timestamp-free artifacts, so a rerun
with the same inputs is byte-identical. Flags may come from a flat
key=value config file; explicit flags win, and PERSEVAL_JOBS overrides
any --jobs value. Exit codes: 0 success, 1 usage, 2 data error,
3 numeric error.
"""
from __future__ import annotations

import argparse
import json
import os
import sys
from pathlib import Path

from .corpus import (
    build_surrogates,
    load_corpus,
    load_rated_pool,
    sample_collections,
    save_corpus,
)
from .engine import (
    PAccConfig,
    PenaltyConfig,
    save_table_csv,
    save_table_json,
    score_table,
)
from .errors import DataError, NumericError, ParseError
from .metaeval import (
    HIGHER_IS_BETTER,
    borda_kendall,
    kendall_tau,
    load_ranking,
    load_ratings,
    pearson_r,
    permutation_pvalues,
    perseval_hj,
    rank_models,
    save_ranking,
    spearman_rho,
    stability_report,
)
from .metrics import METRIC_NAMES, get_metric

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_DATA = 2
EXIT_NUMERIC = 3


class _Parser(argparse.ArgumentParser):
    """argparse that exits 1 (not 2) on usage problems."""

    def error(self, message):
        self.print_usage(sys.stderr)
        sys.stderr.write(f"error: {message}\n")
        raise SystemExit(EXIT_USAGE)


def _read_config_file(path) -> dict[str, str]:
    out: dict[str, str] = {}
    with open(path, "r", encoding="utf-8") as fh:
        for lineno, raw in enumerate(fh, start=1):
            line = raw.strip()
            if not line or line.startswith("#"):
                continue
            if "=" not in line:
                raise ParseError(
                    f"{path}:{lineno}: expected 'key = value', got {line!r}"
                )
            key, _, value = line.partition("=")
            out[key.strip().replace("-", "_")] = value.strip()
    return out


class _Resolver:
    """Flag value > config-file value > default; records what resolved."""

    def __init__(self, args):
        self.args = args
        self.config = (_read_config_file(args.config)
                       if getattr(args, "config", None) else {})
        self.resolved: dict[str, str] = {}

    def get(self, key, default, cast=str):
        value = getattr(self.args, key, None)
        if value is None and key in self.config:
            value = cast(self.config[key])
        if value is None:
            value = default
        if value is not None:
            self.resolved[key] = (repr(value) if isinstance(value, float)
                                  else str(value))
        return value

    def jobs(self, default=1) -> int:
        value = self.get("jobs", default, int)
        env = os.environ.get("PERSEVAL_JOBS")
        if env is not None:
            value = int(env)
            self.resolved["jobs"] = str(value)
        if value < 1:
            raise ValueError(f"jobs must be >= 1, got {value}")
        return value


def _write_text(path, text: str):
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(text)


def _write_json(path, obj):
    _write_text(path, json.dumps(obj, indent=2, sort_keys=True) + "\n")


def _write_csv(path, rows):
    _write_text(path, "".join(",".join(row) + "\n" for row in rows))


def _echo_config(out_dir, command: str, resolver: _Resolver):
    lines = [f"command = {command}"]
    for key in sorted(resolver.resolved):
        lines.append(f"{key} = {resolver.resolved[key]}")
    _write_text(Path(out_dir) / "resolved_config.txt",
                "\n".join(lines) + "\n")


def _parse_list(raw: str) -> list[str]:
    return [part.strip() for part in raw.split(",") if part.strip()]


def _metric_names(raw: str) -> list[str]:
    names = []
    for name in _parse_list(raw):
        canonical = {"bleu": "bleu1"}.get(name, name)
        if canonical not in METRIC_NAMES:
            raise ValueError(
                f"unknown metric {name!r}; choose from "
                f"{', '.join(METRIC_NAMES)}"
            )
        names.append(canonical)
    if not names:
        raise ValueError("empty metric list")
    return names


def _build_metric(name: str, res: _Resolver):
    matrix_path = res.get("bscore_matrix", None)
    dist_path = res.get("infolm_distributions", None)
    a_param = res.get("infolm_alpha", 1.0, float)
    b_param = res.get("infolm_beta", 1.0, float)
    if name == "bscore" and matrix_path is None:
        raise ValueError("metric bscore requires --bscore-matrix")
    if name == "infolm" and dist_path is None:
        raise ValueError("metric infolm requires --infolm-distributions")
    return get_metric(name, matrix_path=matrix_path,
                      distributions_path=dist_path,
                      a_param=a_param, b_param=b_param)


def _penalty_config(res: _Resolver) -> PenaltyConfig:
    return PenaltyConfig(
        alpha=res.get("alpha", 3.0, float),
        beta=res.get("beta", 1.7, float),
        gamma=res.get("gamma", 4.0, float),
        epsilon=res.get("epsilon", 1e-8, float),
    )


def _pacc_config(res: _Resolver) -> PAccConfig:
    return PAccConfig(
        alpha_pacc=res.get("pacc_alpha", 0.5, float),
        beta_pacc=res.get("pacc_beta", 1.0, float),
    )


def _select_models(corpus, res: _Resolver) -> list[str]:
    raw = res.get("models", "")
    if raw:
        models = _parse_list(raw)
        missing = sorted(set(models) - set(corpus.model_ids))
        if missing:
            raise DataError(f"models not present in corpus: {missing}")
        return models
    if not corpus.model_ids:
        raise DataError("corpus contains no generated summaries")
    return list(corpus.model_ids)


def _ranking_csv_rows(ranking):
    yield ("rank", "model", "score", "tied_with")
    for model, rank in ranking.entries:
        group = next((g for g in ranking.ties if model in g), ())
        tied = "|".join(m for m in group if m != model)
        score = ranking.scores.get(model)
        yield (str(rank), model,
               "" if score is None else repr(score), tied)


def _load_flat_scores(path) -> dict[str, float]:
    with open(path, "r", encoding="utf-8") as fh:
        obj = json.load(fh)
    if isinstance(obj, dict) and isinstance(obj.get("scores"), dict):
        obj = obj["scores"]
    if not isinstance(obj, dict) or not obj:
        raise ParseError(f"{path}: expected a model -> score mapping")
    try:
        return {str(k): float(v) for k, v in obj.items()}
    except (TypeError, ValueError):
        raise ParseError(f"{path}: scores must be numeric")


# -- subcommands -------------------------------------------------------


def cmd_evaluate(args) -> int:
    res = _Resolver(args)
    if args.corpus is None:
        raise ValueError("--corpus is required")
    if args.out is None:
        raise ValueError("--out is required")
    res.resolved["corpus"] = str(args.corpus)
    res.resolved["out"] = str(args.out)
    config = _penalty_config(res)
    pacc = _pacc_config(res)
    res.get("seed", 0, int)
    jobs = res.jobs()
    metric_names = _metric_names(res.get("metrics", "rouge_l"))
    corpus = load_corpus(args.corpus)
    models = _select_models(corpus, res)
    metric_objs = [_build_metric(name, res) for name in metric_names]

    table = score_table(corpus, models, metric_objs, config, pacc,
                        jobs=jobs)
    out = Path(args.out)
    _echo_config(out, "evaluate", res)
    out.mkdir(parents=True, exist_ok=True)
    save_table_csv(table, out / "scores.csv")
    save_table_json(table, out / "scores.json")
    _write_json(out / "system_scores.json", {
        name: {
            measure: table.system_scores(name, measure)
            for measure in HIGHER_IS_BETTER
        }
        for name in metric_names
    })
    for name in metric_names:
        board = rank_models(table.system_scores(name, "perseval"),
                            higher_is_better=True,
                            measure=f"perseval/{name}")
        _write_csv(out / f"leaderboard_{name}.csv",
                   _ranking_csv_rows(board))
        _write_json(out / f"leaderboard_{name}.json", board.to_json_obj())
    _write_csv(out / "skipped.csv",
               [("doc_id", "reason")] + [
                   (d, "fewer than two gold users")
                   for d in corpus.flagged_doc_ids
               ])
    print(f"scored {len(models)} model(s) x {len(metric_names)} metric(s) "
          f"over {len(corpus.scorable_doc_ids)} document(s); "
          f"skipped {len(corpus.flagged_doc_ids)}")
    return EXIT_OK


def cmd_surrogates(args) -> int:
    res = _Resolver(args)
    if args.pool is None:
        raise ValueError("--pool is required")
    if args.out is None:
        raise ValueError("--out is required")
    res.resolved["pool"] = str(args.pool)
    res.resolved["out"] = str(args.out)
    threshold = res.get("threshold", 6, int)
    pool = load_rated_pool(args.pool)
    corpus, warnings = build_surrogates(pool, threshold)
    for warning in warnings:
        print(f"warning: {warning}", file=sys.stderr)
    Path(args.out).parent.mkdir(parents=True, exist_ok=True)
    save_corpus(corpus, args.out)
    print(f"wrote surrogate corpus: {len(corpus.documents)} document(s), "
          f"{len(corpus.golds)} gold(s), {len(corpus.generated)} "
          f"generated summarie(s), {len(warnings)} dropped pair(s)")
    return EXIT_OK


def cmd_stability(args) -> int:
    res = _Resolver(args)
    if args.corpus is None:
        raise ValueError("--corpus is required")
    if args.out is None:
        raise ValueError("--out is required")
    res.resolved["corpus"] = str(args.corpus)
    res.resolved["out"] = str(args.out)
    config = _penalty_config(res)
    pacc = _pacc_config(res)
    seed = res.get("seed", 0, int)
    jobs = res.jobs()
    sets = res.get("sets", 10, int)
    measure = res.get("measure", "perseval")
    if measure not in HIGHER_IS_BETTER:
        raise ValueError(f"unknown measure {measure!r}")
    fractions = [float(f) for f in
                 _parse_list(res.get("fractions", "0.8,0.6,0.4,0.2"))]
    metric_name = _metric_names(res.get("metric", "rouge_l"))[0]
    corpus = load_corpus(args.corpus)
    models = _select_models(corpus, res)
    metric = _build_metric(metric_name, res)

    table = score_table(corpus, models, [metric], config, pacc, jobs=jobs)
    entries = {m: table.get(m, metric_name) for m in models}

    def scorer(sample):
        return {
            m: entries[m].system_over_docs(sample.doc_ids, measure)
            for m in models
        }

    collections = sample_collections(corpus, fractions, sets, seed)
    report = stability_report(collections, scorer,
                              HIGHER_IS_BETTER[measure])
    out = Path(args.out)
    _echo_config(out, "stability", res)
    _write_csv(out / "stability.csv", report.csv_rows())
    _write_json(out / "stability.json", report.to_json_obj())
    _write_csv(out / "samples.csv",
               [("fraction", "set", "spearman", "kendall")] + [
                   (repr(s["fraction"]), str(s["set"]),
                    repr(s["spearman"]), repr(s["kendall"]))
                   for s in report.sample_stats
               ])
    print(f"stability over {len(fractions)} fraction(s) x {sets} set(s): "
          f"epsilon_spearman = {report.epsilon_spearman}, "
          f"epsilon_kendall = {report.epsilon_kendall}, "
          f"delta = {report.delta_stability}")
    return EXIT_OK


def cmd_correlate(args) -> int:
    res = _Resolver(args)
    if args.scores_a is None or args.scores_b is None:
        raise ValueError("--scores-a and --scores-b are required")
    res.resolved["scores_a"] = str(args.scores_a)
    res.resolved["scores_b"] = str(args.scores_b)
    seed = res.get("seed", 0, int)
    a = _load_flat_scores(args.scores_a)
    b = _load_flat_scores(args.scores_b)
    if set(a) != set(b):
        raise DataError(
            f"score files cover different models: "
            f"{sorted(set(a) ^ set(b))}"
        )
    models = sorted(a)
    x = [a[m] for m in models]
    y = [b[m] for m in models]
    r = pearson_r(x, y)
    rho = spearman_rho(x, y)
    tau = kendall_tau(x, y)
    pvals = permutation_pvalues(x, y, seed=seed)
    print(f"pearson_r = {r}")
    print(f"spearman_rho = {rho} (p = {pvals['spearman_p']})")
    print(f"kendall_tau = {tau} (p = {pvals['kendall_p']})")
    if args.out is not None:
        res.resolved["out"] = str(args.out)
        out = Path(args.out)
        _echo_config(out, "correlate", res)
        _write_json(out / "correlate.json", {
            "models": models,
            "pearson_r": r,
            "spearman_rho": rho,
            "spearman_p": pvals["spearman_p"],
            "kendall_tau": tau,
            "kendall_p": pvals["kendall_p"],
        })
    return EXIT_OK


def cmd_aggregate(args) -> int:
    res = _Resolver(args)
    if not args.rankings:
        raise ValueError("at least one --rankings file is required")
    if args.out is None:
        raise ValueError("--out is required")
    res.resolved["rankings"] = ",".join(str(p) for p in args.rankings)
    res.resolved["out"] = str(args.out)
    rankings = [load_ranking(p) for p in args.rankings]
    combined = borda_kendall(rankings)
    out = Path(args.out)
    _echo_config(out, "aggregate", res)
    save_ranking(combined, out / "borda.json")
    _write_csv(out / "borda.csv", _ranking_csv_rows(combined))
    order = " > ".join(m for m, _ in combined.entries)
    print(f"aggregate ranking: {order}")
    if combined.ties:
        groups = "; ".join(", ".join(g) for g in combined.ties)
        print(f"ties (broken lexicographically): {groups}")
    return EXIT_OK


def cmd_hj(args) -> int:
    res = _Resolver(args)
    if args.out is None:
        raise ValueError("--out is required")
    res.resolved["out"] = str(args.out)
    config = _penalty_config(res)
    source = res.get("source", "ratings")
    threshold = res.get("threshold", 6, int)
    metric_name = _metric_names(res.get("surrogate_metric", "rouge_l"))[0]
    metric = _build_metric(metric_name, res)
    if source == "ratings":
        if args.corpus is None or args.ratings is None:
            raise ValueError("--corpus and --ratings are required")
        res.resolved["corpus"] = str(args.corpus)
        res.resolved["ratings"] = str(args.ratings)
        corpus = load_corpus(args.corpus)
        scores = perseval_hj(corpus, load_ratings(args.ratings), metric,
                             config, source="ratings")
    elif source == "rating_diff":
        if args.pool is None:
            raise ValueError("--pool is required for rating_diff")
        res.resolved["pool"] = str(args.pool)
        pool = load_rated_pool(args.pool)
        corpus = None
        if args.corpus is not None:
            res.resolved["corpus"] = str(args.corpus)
            corpus = load_corpus(args.corpus)
        scores = perseval_hj(corpus, pool, metric, config,
                             source="rating_diff", threshold=threshold)
    else:
        raise ValueError(f"unknown source {source!r}")
    out = Path(args.out)
    _echo_config(out, "hj", res)
    _write_json(out / "hj_scores.json", scores)
    for measure in ("degress", "egises", "perseval"):
        _write_json(out / f"hj_{measure}.json",
                    {m: scores[m][measure] for m in scores})
    for model in sorted(scores):
        row = scores[model]
        print(f"{model}: degress = {row['degress']}, "
              f"egises = {row['egises']}, perseval = {row['perseval']}")
    return EXIT_OK


def cmd_ablation(args) -> int:
    res = _Resolver(args)
    if args.corpus is None or args.ref_scores is None or args.out is None:
        raise ValueError("--corpus, --ref-scores, and --out are required")
    res.resolved["corpus"] = str(args.corpus)
    res.resolved["ref_scores"] = str(args.ref_scores)
    res.resolved["out"] = str(args.out)
    jobs = res.jobs()
    pacc = _pacc_config(res)
    alpha = res.get("alpha", 3.0, float)
    gamma = res.get("gamma", 4.0, float)
    epsilon = res.get("epsilon", 1e-8, float)
    betas = [float(v) for v in
             _parse_list(res.get("betas", "1.0,1.2,1.4,1.6,1.8,2.0"))]
    metric_name = _metric_names(res.get("metric", "rouge_l"))[0]
    corpus = load_corpus(args.corpus)
    models = _select_models(corpus, res)
    metric = _build_metric(metric_name, res)
    ref = _load_flat_scores(args.ref_scores)
    if set(ref) != set(models):
        raise DataError(
            f"reference scores cover different models: "
            f"{sorted(set(ref) ^ set(models))}"
        )
    ordered = sorted(models)
    ref_vec = [ref[m] for m in ordered]
    rows = [("beta", "pearson_r", "spearman_rho", "kendall_tau")]
    for beta in betas:
        config = PenaltyConfig(alpha=alpha, beta=beta, gamma=gamma,
                               epsilon=epsilon)
        table = score_table(corpus, models, [metric], config, pacc,
                            jobs=jobs)
        scores = table.system_scores(metric_name, "perseval")
        vec = [scores[m] for m in ordered]
        rows.append((repr(beta), repr(pearson_r(vec, ref_vec)),
                     repr(spearman_rho(vec, ref_vec)),
                     repr(kendall_tau(vec, ref_vec))))
    out = Path(args.out)
    _echo_config(out, "ablation", res)
    _write_csv(out / "ablation.csv", rows)
    print(f"wrote ablation grid over {len(betas)} beta value(s)")
    return EXIT_OK


# -- parser ------------------------------------------------------------


def _add_common(sub):
    sub.add_argument("--config", help="flat key=value config file")
    sub.add_argument("--alpha", type=float)
    sub.add_argument("--beta", type=float)
    sub.add_argument("--gamma", type=float)
    sub.add_argument("--epsilon", type=float)
    sub.add_argument("--pacc-alpha", dest="pacc_alpha", type=float)
    sub.add_argument("--pacc-beta", dest="pacc_beta", type=float)
    sub.add_argument("--seed", type=int)
    sub.add_argument("--jobs", type=int)
    sub.add_argument("--models")
    sub.add_argument("--bscore-matrix", dest="bscore_matrix")
    sub.add_argument("--infolm-distributions", dest="infolm_distributions")
    sub.add_argument("--infolm-alpha", dest="infolm_alpha", type=float)
    sub.add_argument("--infolm-beta", dest="infolm_beta", type=float)


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="perseval",
                     description="Personalization-aware summary evaluation")
    commands = parser.add_subparsers(dest="command", required=True)

    p = commands.add_parser("evaluate", parents=[], help="score a corpus")
    p.add_argument("--corpus")
    p.add_argument("--metrics")
    p.add_argument("--out")
    _add_common(p)
    p.set_defaults(func=cmd_evaluate)

    p = commands.add_parser("surrogates",
                            help="fold a rated pool into a corpus")
    p.add_argument("--pool")
    p.add_argument("--threshold", type=int)
    p.add_argument("--out")
    p.add_argument("--config")
    p.set_defaults(func=cmd_surrogates)

    p = commands.add_parser("stability",
                            help="rank stability under resampling")
    p.add_argument("--corpus")
    p.add_argument("--metric")
    p.add_argument("--measure")
    p.add_argument("--fractions")
    p.add_argument("--sets", type=int)
    p.add_argument("--out")
    _add_common(p)
    p.set_defaults(func=cmd_stability)

    p = commands.add_parser("correlate",
                            help="correlate two score files")
    p.add_argument("--scores-a", dest="scores_a")
    p.add_argument("--scores-b", dest="scores_b")
    p.add_argument("--out")
    p.add_argument("--seed", type=int)
    p.add_argument("--config")
    p.set_defaults(func=cmd_correlate)

    p = commands.add_parser("aggregate",
                            help="aggregate rankings by summed rank")
    p.add_argument("--rankings", nargs="+")
    p.add_argument("--out")
    p.add_argument("--config")
    p.set_defaults(func=cmd_aggregate)

    p = commands.add_parser("hj",
                            help="human-judgement reference scores")
    p.add_argument("--corpus")
    p.add_argument("--ratings")
    p.add_argument("--pool")
    p.add_argument("--source")
    p.add_argument("--threshold", type=int)
    p.add_argument("--surrogate-metric", dest="surrogate_metric")
    p.add_argument("--out")
    _add_common(p)
    p.set_defaults(func=cmd_hj)

    p = commands.add_parser("ablation",
                            help="beta grid vs reference correlations")
    p.add_argument("--corpus")
    p.add_argument("--metric")
    p.add_argument("--betas")
    p.add_argument("--ref-scores", dest="ref_scores")
    p.add_argument("--out")
    _add_common(p)
    p.set_defaults(func=cmd_ablation)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        return args.func(args)
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except NumericError as exc:
        print(f"numeric error: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except DataError as exc:
        print(f"data error: {exc}", file=sys.stderr)
        return EXIT_DATA
    except OSError as exc:
        print(f"data error: {exc}", file=sys.stderr)
        return EXIT_DATA


if __name__ == "__main__":
    sys.exit(main())
