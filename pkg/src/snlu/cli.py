"""Command-line interface.

Subcommands: gen-data, train, eval, predict, repl, bias-sweep, ablate.
Exit codes: 0 success, 1 usage error, 2 runtime error. All randomness flows
from --seed / the config seed.
"""
from __future__ import annotations

import argparse
import json
import logging
import os
import sys

from . import datagen, evalrun, pipeline
from .errors import SnluError
from .text import RawQuery, example_to_json, load_dataset

log = logging.getLogger("snlu")


def _setup_logging():
    level = {"error": logging.ERROR, "info": logging.INFO,
             "debug": logging.DEBUG}.get(os.environ.get("SNLU_LOG", "error"))
    logging.basicConfig(level=level or logging.ERROR,
                        format="%(levelname)s %(message)s", stream=sys.stderr)


def _parser():
    p = argparse.ArgumentParser(prog="snlu")
    sub = p.add_subparsers(dest="command", required=True)

    g = sub.add_parser("gen-data", help="write a synthetic dataset bundle")
    g.add_argument("--seed", type=int, default=0)
    g.add_argument("--out", required=True, help="output directory")
    g.add_argument("--total", type=int, default=15687)
    g.add_argument("--entity-typo", action="store_true",
                   help="also perturb entity surface forms")

    t = sub.add_parser("train", help="train a pipeline bundle")
    t.add_argument("--config", required=True)
    t.add_argument("--out", required=True, help="bundle file path")
    t.add_argument("--seed", type=int, default=None, help="override config seed")
    t.add_argument("--limit", type=int, default=None,
                   help="cap the training set size")

    e = sub.add_parser("eval", help="evaluate a bundle on the test split")
    e.add_argument("--config", required=True)
    e.add_argument("--bundle", required=True)

    pr = sub.add_parser("predict", help="predict one query")
    pr.add_argument("--bundle", required=True)
    pr.add_argument("--text", required=True)

    r = sub.add_parser("repl", help="read queries from stdin, JSON per line")
    r.add_argument("--bundle", required=True)

    b = sub.add_parser("bias-sweep", help="accuracy vs category-bias percentage")
    b.add_argument("--config", required=True)
    b.add_argument("--bias-values", default="0.0,0.05,0.10,0.15,0.20,0.25")
    b.add_argument("--seeds", default="0,1,2")
    b.add_argument("--out", default=None, help="CSV output path (default stdout)")
    b.add_argument("--limit", type=int, default=None)

    a = sub.add_parser("ablate", help="run the three self-ablation variants")
    a.add_argument("--config", required=True)
    a.add_argument("--seeds", default="0,1,2")
    a.add_argument("--out", default=None, help="CSV output path (default stdout)")
    a.add_argument("--limit", type=int, default=None)
    return p


def _csv_floats(s):
    return [float(x) for x in s.split(",") if x]


def _csv_ints(s):
    return [int(x) for x in s.split(",") if x]


def cmd_gen_data(args):
    os.makedirs(args.out, exist_ok=True)
    spec = datagen.GenSpec(total=args.total, entity_typo=args.entity_typo,
                           seed=args.seed)
    dataset, gaz = datagen.generate(spec)
    taxonomy = dataset.taxonomy

    def out(name):
        return os.path.join(args.out, name)

    with open(out("dataset.jsonl"), "w", encoding="utf-8") as f:
        for ex in dataset.examples:
            f.write(example_to_json(ex, taxonomy) + "\n")
    with open(out("gazetteer.tsv"), "w", encoding="utf-8") as f:
        f.write("# phrase<TAB>entity_type\n")
        for typ in sorted(gaz.entries):
            for phrase in sorted(gaz.entries[typ]):
                f.write(f"{' '.join(phrase)}\t{typ}\n")
    with open(out("taxonomy.json"), "w", encoding="utf-8") as f:
        json.dump(taxonomy.to_dict(), f, indent=2)
        f.write("\n")
    from .rules import rules_to_json
    with open(out("rules.json"), "w", encoding="utf-8") as f:
        json.dump(rules_to_json(datagen.starter_rules(taxonomy), taxonomy),
                  f, indent=2)
        f.write("\n")
    cfg = pipeline.PipelineConfig(seed=args.seed).to_dict()
    cfg.update({
        "dataset": "dataset.jsonl",
        "gazetteer": "gazetteer.tsv",
        "taxonomy": "taxonomy.json",
        "rules": "rules.json",
        "clubbing": {taxonomy.category_names[c]: sorted(ts)
                     for c, ts in sorted(datagen.club_groups(taxonomy).items())},
    })
    with open(out("config.json"), "w", encoding="utf-8") as f:
        json.dump(cfg, f, indent=2)
        f.write("\n")
    log.info("wrote dataset bundle to %s", args.out)
    return 0


def _load_all(config_path, seed=None, limit=None):
    cfg, taxonomy, gaz, rules, dataset_path = pipeline.load_artifacts(config_path)
    if dataset_path is None:
        raise SnluError("config does not name a dataset")
    if seed is not None:
        cfg.seed = seed
    if limit is not None:
        cfg.limit = limit
    dataset = load_dataset(dataset_path, taxonomy)
    return cfg, gaz, rules, dataset


def cmd_train(args):
    cfg, gaz, rules, dataset = _load_all(args.config, args.seed, args.limit)
    bundle = pipeline.train_pipeline(cfg, dataset, gaz, rules, log=log.info)
    pipeline.save_bundle(bundle, args.out)
    log.info("bundle written to %s", args.out)
    return 0


def cmd_eval(args):
    _, _, _, dataset = _load_all(args.config)
    bundle = pipeline.load_bundle(args.bundle)
    from .text import split_dataset
    _, _, test = split_dataset(dataset, bundle.config.seed)
    im, sm, cat_acc = evalrun.evaluate_bundle(bundle, test)
    row = evalrun.metrics_row("final", im, sm)
    print("variant,int_p,int_r,int_f1,int_acc,slot_p,slot_r,slot_f1")
    print(",".join([row["variant"]] +
                   [f"{row[k]:.4f}" for k in ("int_p", "int_r", "int_f1",
                                              "int_acc", "slot_p", "slot_r",
                                              "slot_f1")]))
    log.info("category accuracy %.4f", cat_acc)
    return 0


def cmd_predict(args):
    bundle = pipeline.load_bundle(args.bundle)
    out = pipeline.run(bundle, RawQuery(args.text))
    print(json.dumps(out.to_json(bundle.taxonomy), ensure_ascii=False))
    return 0


def cmd_repl(args):
    bundle = pipeline.load_bundle(args.bundle)
    for line in sys.stdin:
        line = line.strip()
        if not line:
            continue
        try:
            out = pipeline.run(bundle, RawQuery(line))
            print(json.dumps(out.to_json(bundle.taxonomy), ensure_ascii=False),
                  flush=True)
        except SnluError as e:
            print(json.dumps({"error": str(e)}), flush=True)
    return 0


def _write_csv(path, header, lines):
    text = "\n".join([header] + lines) + "\n"
    if path:
        with open(path, "w", encoding="utf-8") as f:
            f.write(text)
    else:
        sys.stdout.write(text)


def cmd_bias_sweep(args):
    cfg, gaz, rules, dataset = _load_all(args.config, limit=args.limit)
    rows = evalrun.bias_sweep(cfg, dataset, gaz, rules,
                              _csv_floats(args.bias_values),
                              _csv_ints(args.seeds), log=log.info)
    _write_csv(args.out, "bias,seed,accuracy",
               [f"{r['bias']},{r['seed']},{r['accuracy']:.4f}" for r in rows])
    return 0


def cmd_ablate(args):
    cfg, gaz, rules, dataset = _load_all(args.config, limit=args.limit)
    rows = evalrun.ablation_run(cfg, dataset, gaz, rules,
                                _csv_ints(args.seeds), log=log.info)
    cols = ("int_p", "int_r", "int_f1", "int_acc", "slot_p", "slot_r", "slot_f1")
    _write_csv(args.out, "variant,seed," + ",".join(cols),
               [",".join([r["variant"], str(r["seed"])] +
                         [f"{r[c]:.4f}" for c in cols]) for r in rows])
    return 0


COMMANDS = {
    "gen-data": cmd_gen_data,
    "train": cmd_train,
    "eval": cmd_eval,
    "predict": cmd_predict,
    "repl": cmd_repl,
    "bias-sweep": cmd_bias_sweep,
    "ablate": cmd_ablate,
}


def main(argv=None) -> int:
    _setup_logging()
    parser = _parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        return 0 if e.code == 0 else 1
    try:
        return COMMANDS[args.command](args)
    except SnluError as e:
        print(f"error: {e}", file=sys.stderr)
        return 2
    except (OSError, ValueError) as e:
        print(f"error: {e}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
