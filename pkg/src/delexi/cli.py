"""``delexi`` command line: batch commands with a run manifest per invocation."""

from __future__ import annotations

import argparse
import hashlib
import json
import logging
import os
import sys
from dataclasses import dataclass, field
from datetime import datetime, timezone
from multiprocessing import Pool
from pathlib import Path
from typing import Optional, Sequence

from delexi import __version__
from delexi.annotation import (
    ClaimEvidencePair,
    dumps,
    iter_jsonl,
    pair_from_json,
    pair_to_json,
    read_tagged,
    write_tagged,
)
from delexi.attention import AuditConfig, audit, dump_report, read_attention
from delexi.embeddings import NoiseConfig, read_glove, synth_embeddings, write_glove
from delexi.errors import DelexiError, FormatError
from delexi.ingestion import (
    SplitConfig,
    attach_annotations,
    label_stats,
    read_fever,
    read_fnc,
    split_train_dev,
)
from delexi.labels import DEFAULT_DISCUSS_FRACTION, MappingConfig, map_fever_to_fnc, map_fnc_to_fever
from delexi.masking import CONTENT_POS, STRATEGY_NAMES, MaskStrategy, mask_pair
from delexi.tags import load_aliases

log = logging.getLogger("delexi")

EXIT_OK, EXIT_ERROR, EXIT_USAGE = 0, 1, 2


def sha256_file(path) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 20), b""):
            h.update(chunk)
    return h.hexdigest()


@dataclass
class RunManifest:
    command: str
    argv: list[str]
    config: dict
    inputs: dict[str, str]
    outputs: dict[str, str] = field(default_factory=dict)
    seeds: list[int] = field(default_factory=list)
    extra: dict = field(default_factory=dict)
    tool_version: str = __version__
    timestamp: str = ""

    def to_json(self) -> dict:
        return {
            "command": self.command,
            "argv": self.argv,
            "config": self.config,
            "inputs": self.inputs,
            "outputs": self.outputs,
            "seeds": self.seeds,
            "extra": self.extra,
            "tool_version": self.tool_version,
            "timestamp": self.timestamp,
        }

    def write(self, path) -> None:
        with open(path, "w", encoding="utf-8") as fh:
            json.dump(self.to_json(), fh, indent=2, sort_keys=True, ensure_ascii=False)
            fh.write("\n")


class RecordErrors:
    """Collects per-record failures; ``strict`` turns the first one into an abort."""

    def __init__(self, strict: bool):
        self.strict = strict
        self.items: list[dict] = []

    def add(self, where, exc: Exception):
        if self.strict:
            raise exc
        self.items.append({"record": where, "error": str(exc)})

    def report(self) -> int:
        for item in self.items:
            print(json.dumps(item, ensure_ascii=False), file=sys.stderr)
        if self.items:
            print(f"delexi: {len(self.items)} record(s) failed", file=sys.stderr)
            return EXIT_ERROR
        return EXIT_OK


# -- commands ------------------------------------------------------------------


def _load_dataset(args) -> tuple[list[ClaimEvidencePair], list[str]]:
    pairs, inputs = [], []
    if args.fever:
        with open(args.fever, encoding="utf-8") as fh:
            pairs.extend(read_fever(fh, source=args.fever))
        inputs.append(args.fever)
    for stances, bodies in args.fnc or []:
        with open(stances, encoding="utf-8", newline="") as s, open(
            bodies, encoding="utf-8", newline=""
        ) as b:
            pairs.extend(read_fnc(s, b, id_prefix=Path(stances).stem))
        inputs += [stances, bodies]
    if getattr(args, "input", None):
        with open(args.input, encoding="utf-8") as fh:
            pairs.extend(read_tagged(fh, source=args.input))
        inputs.append(args.input)
    return pairs, inputs


def cmd_ingest(args, errors):
    if not (args.fever or args.fnc):
        raise FormatError("ingest needs --fever or --fnc")
    pairs, inputs = _load_dataset(args)
    if args.sidecar:
        with open(args.sidecar, encoding="utf-8") as fh:
            pairs = attach_annotations(pairs, read_tagged(fh, source=args.sidecar))
        inputs.append(args.sidecar)
    with open(args.out, "w", encoding="utf-8") as fh:
        n = write_tagged(pairs, fh)
    return inputs, [args.out], {"records": n}


def cmd_split(args, errors):
    if (args.dev_fraction is None) == (args.counts is None):
        raise FormatError("split needs exactly one of --dev-fraction or --counts")
    train_n, dev_n = args.counts if args.counts else (None, None)
    config = SplitConfig(
        dev_fraction=args.dev_fraction,
        train_count=train_n,
        dev_count=dev_n,
        seed=args.seed,
        stratify=args.stratify,
    )
    lines = []
    with open(args.input, encoding="utf-8") as fh:
        raw = fh.readlines()
    objs = dict(iter_jsonl(raw, source=args.input))
    for lineno, line in enumerate(raw, start=1):
        if lineno in objs:
            lines.append((objs[lineno], line if line.endswith("\n") else line + "\n"))
    ids = [str(o.get("id")) for o, _ in lines]
    if len(set(ids)) != len(ids):
        raise FormatError("record ids are not unique; split needs distinct ids")
    train, dev = split_train_dev(lines, config, stratify_key=lambda item: str(item[0].get("label")))
    for path, part in ((args.train_out, train), (args.dev_out, dev)):
        with open(path, "w", encoding="utf-8") as fh:
            fh.writelines(line for _, line in part)
    extra = {"train_count": len(train), "dev_count": len(dev), "total": len(lines)}
    return [args.input], [args.train_out, args.dev_out], extra


def cmd_map_labels(args, errors):
    with open(args.input, encoding="utf-8") as fh:
        pairs = list(read_tagged(fh, source=args.input))
    if args.direction == "fever2fnc":
        config = MappingConfig(discuss_fraction=args.discuss_fraction, seed=args.seed, mode=args.mode)
        mapped = map_fever_to_fnc(pairs, config)
    else:
        mapped = map_fnc_to_fever(pairs)
    with open(args.out, "w", encoding="utf-8") as fh:
        write_tagged(mapped, fh)
    return [args.input], [args.out], {"records": len(mapped), "stats": label_stats(mapped).as_dict()}


_WORKER_STRATEGY: Optional[MaskStrategy] = None


def _init_worker(strategy):
    global _WORKER_STRATEGY
    _WORKER_STRATEGY = strategy


def _mask_line(item):
    lineno, line = item
    try:
        pair = pair_from_json(json.loads(line))
        return lineno, dumps(mask_pair(pair, _WORKER_STRATEGY).to_json()), None
    except (DelexiError, ValueError, KeyError, TypeError) as exc:
        return lineno, None, f"{type(exc).__name__}: {exc}"


def cmd_mask(args, errors):
    content = CONTENT_POS
    if args.content_pos:
        content = frozenset(p.strip() for p in args.content_pos.split(",") if p.strip())
    strategy = MaskStrategy(
        kind=STRATEGY_NAMES[args.strategy], content_pos_classes=content, ss_span_mode=args.ss_span_mode
    )
    n = 0
    with open(args.input, encoding="utf-8") as src, open(args.out, "w", encoding="utf-8") as dst:
        items = ((i, line) for i, line in enumerate(src, start=1) if line.strip())
        if args.jobs > 1:
            pool = Pool(args.jobs, initializer=_init_worker, initargs=(strategy,))
            results = pool.imap(_mask_line, items, chunksize=64)
        else:
            pool = None
            _init_worker(strategy)
            results = map(_mask_line, items)
        try:
            for lineno, out, err in results:
                if err is not None:
                    errors.add(f"{args.input}:{lineno}", FormatError(err, line=lineno, source=args.input))
                    continue
                dst.write(out + "\n")
                n += 1
        finally:
            if pool is not None:
                pool.terminate()
    return [args.input], [args.out], {"records": n}


def _read_tag_list(path) -> list[str]:
    tags: set[str] = set()
    with open(path, encoding="utf-8") as fh:
        text = fh.read()
    if path.endswith(".jsonl") or text.lstrip().startswith("{"):
        for _, obj in iter_jsonl(text.splitlines(), source=path):
            tags.update(obj.get("tags", []))
    else:
        tags.update(line.strip() for line in text.splitlines() if line.strip())
    return sorted(tags)


def cmd_synth(args, errors):
    tags = _read_tag_list(args.tags)
    with open(args.base, encoding="utf-8") as fh:
        base = read_glove(fh, source=args.base)
    aliases = load_aliases(args.aliases) if args.aliases else None
    config = NoiseConfig(mean=args.mean, variance=args.variance, seed=args.seed)
    table = synth_embeddings(tags, base, config, skip_missing=args.skip_missing, aliases=aliases)
    with open(args.out, "w", encoding="utf-8") as fh:
        write_glove(table, fh)
    inputs = [args.tags, args.base] + ([args.aliases] if args.aliases else [])
    return inputs, [args.out], {"tags": len(tags), "written": len(table)}


def cmd_audit(args, errors):
    with open(args.attention, encoding="utf-8") as fh:
        records = read_attention(fh, source=args.attention)
    annotations = {}
    inputs = [args.attention]
    if args.sidecar:
        with open(args.sidecar, encoding="utf-8") as fh:
            annotations = {p.id: p for p in read_tagged(fh, source=args.sidecar)}
        inputs.append(args.sidecar)
    pos_map = {}
    if args.pos_map:
        with open(args.pos_map, encoding="utf-8") as fh:
            pos_map = json.load(fh)
        inputs.append(args.pos_map)
    config = AuditConfig(
        in_domain_model=args.in_domain_model,
        out_of_domain_model=args.out_of_domain_model,
        k=args.k,
        pos_bucketing=pos_map,
    )
    report = audit(records, annotations, config)
    for instance_id in report.incomplete:
        errors.add(instance_id, FormatError(f"instance {instance_id!r} lacks a record for one model"))
    with open(args.out, "w", encoding="utf-8") as fh:
        dump_report(report, fh)
    outputs = [args.out]
    if args.csv:
        with open(args.csv, "w", encoding="utf-8", newline="") as fh:
            report.write_csv(fh)
        outputs.append(args.csv)
    return inputs, outputs, {"selected": len(report.selected)}


def cmd_stats(args, errors):
    if not (args.fever or args.fnc or args.input):
        raise FormatError("stats needs --in, --fever or --fnc")
    pairs, inputs = _load_dataset(args)
    stats = label_stats(pairs).as_dict()
    text = json.dumps(stats, indent=2) + "\n"
    outputs = []
    if args.out:
        with open(args.out, "w", encoding="utf-8") as fh:
            fh.write(text)
        outputs.append(args.out)
    else:
        sys.stdout.write(text)
    return inputs, outputs, {"stats": stats}


def cmd_replay(args, errors):
    with open(args.manifest_file, encoding="utf-8") as fh:
        manifest = json.load(fh)
    for path, digest in manifest["inputs"].items():
        if sha256_file(path) != digest:
            raise FormatError(f"input {path} changed since the recorded run")
    status = main(manifest["argv"])
    if status != EXIT_OK:
        raise DelexiError(f"replayed command exited with status {status}")
    for path, digest in manifest["outputs"].items():
        if sha256_file(path) != digest:
            raise DelexiError(f"replayed output {path} differs from the recorded run")
    return list(manifest["inputs"]), [], {"replayed": manifest["command"]}


# -- parser ----------------------------------------------------------------------


def _common(p: argparse.ArgumentParser):
    p.add_argument("--config", metavar="FILE", help="key=value file of flag defaults")
    p.add_argument("--strict", action="store_true", help="abort on the first bad record")
    p.add_argument("--jobs", type=int, default=os.cpu_count() or 1, help="worker processes")
    p.add_argument("--manifest", metavar="PATH", help="manifest path (default: OUT.manifest.json)")
    p.add_argument("-v", "--verbose", action="store_true")


def _seed(value: str) -> int:
    seed = int(value)
    if seed < 0:
        raise argparse.ArgumentTypeError("seed must be non-negative")
    return seed


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="delexi", description=__doc__)
    parser.add_argument("--version", action="version", version=f"delexi {__version__}")
    sub = parser.add_subparsers(dest="command", required=True, metavar="COMMAND")

    def dataset_args(p, with_input):
        p.add_argument("--fever", metavar="JSONL")
        p.add_argument("--fnc", nargs=2, action="append", metavar=("STANCES", "BODIES"))
        if with_input:
            p.add_argument("--in", dest="input", metavar="JSONL", help="tagged JSONL with labels")

    p = sub.add_parser("ingest", help="read FEVER/FNC data into tagged JSONL")
    dataset_args(p, False)
    p.add_argument("--sidecar", metavar="JSONL", help="annotation sidecar joined by id")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_ingest, primary="out")

    p = sub.add_parser("split", help="seeded train/dev split of a JSONL file")
    p.add_argument("--in", dest="input", required=True)
    p.add_argument("--train-out", required=True)
    p.add_argument("--dev-out", required=True)
    p.add_argument("--dev-fraction", type=float)
    p.add_argument("--counts", nargs=2, type=int, metavar=("TRAIN", "DEV"))
    p.add_argument("--seed", type=_seed, default=0)
    p.add_argument("--stratify", action="store_true", help="apportion dev per label")
    p.set_defaults(func=cmd_split, primary="train_out")

    p = sub.add_parser("map-labels", help="convert between FEVER and FNC label spaces")
    p.add_argument("--direction", choices=("fever2fnc", "fnc2fever"), required=True)
    p.add_argument("--mode", choices=("provenance", "sampled"), default="provenance")
    p.add_argument("--discuss-fraction", type=float, default=DEFAULT_DISCUSS_FRACTION)
    p.add_argument("--seed", type=_seed, default=0)
    p.add_argument("--in", dest="input", required=True)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_map_labels, primary="out")

    p = sub.add_parser("mask", help="apply a masking strategy to tagged JSONL")
    p.add_argument("--strategy", choices=sorted(STRATEGY_NAMES), required=True)
    p.add_argument("--ss-span-mode", choices=("span", "token"), default="span")
    p.add_argument("--content-pos", metavar="TAGS", help="comma-separated POS tags eligible for supersense masking")
    p.add_argument("--in", dest="input", required=True)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_mask, primary="out")

    p = sub.add_parser("synth-embeddings", help="pseudo-pretrained vectors for mask tags")
    p.add_argument("--tags", required=True, help="masked JSONL or one tag per line")
    p.add_argument("--base", required=True, help="GloVe text file")
    p.add_argument("--mean", type=float, default=0.0)
    p.add_argument("--variance", type=float, default=0.1)
    p.add_argument("--seed", type=_seed, default=0)
    p.add_argument("--aliases", metavar="JSON", help="category -> root word table")
    p.add_argument("--skip-missing", action="store_true")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_synth, primary="out")

    p = sub.add_parser("audit-attention", help="divergent-attention error analysis")
    p.add_argument("--attention", required=True, help="attention dump JSONL")
    p.add_argument("--sidecar", help="tagged JSONL for POS and NE lookup")
    p.add_argument("--in-domain-model", required=True)
    p.add_argument("--out-of-domain-model", required=True)
    p.add_argument("-k", type=int, default=3)
    p.add_argument("--pos-map", metavar="JSON", help="fine POS -> bucket overrides")
    p.add_argument("--out", required=True)
    p.add_argument("--csv", help="plot-ready histogram CSV")
    p.set_defaults(func=cmd_audit, primary="out")

    p = sub.add_parser("stats", help="label distribution")
    dataset_args(p, True)
    p.add_argument("--out")
    p.set_defaults(func=cmd_stats, primary="out")

    p = sub.add_parser("replay", help="re-run a recorded manifest and verify outputs")
    p.add_argument("manifest_file")
    p.set_defaults(func=cmd_replay, primary=None)

    for name, action in sub.choices.items():
        if name != "replay":
            _common(action)
        else:
            action.add_argument("-v", "--verbose", action="store_true")
            action.set_defaults(strict=False, manifest=None, config=None)
    return parser


def expand_config(argv: list[str]) -> list[str]:
    """Splice ``--config FILE`` entries in as flags; explicit flags still win."""
    if "--config" not in argv:
        return argv
    i = argv.index("--config")
    if i + 1 >= len(argv):
        return argv
    path = argv[i + 1]
    rest = argv[:i] + argv[i + 2 :]
    flags: list[str] = []
    try:
        with open(path, encoding="utf-8") as fh:
            lines = fh.readlines()
    except OSError as exc:
        raise FormatError(f"cannot read config {path}: {exc}") from None
    for lineno, line in enumerate(lines, start=1):
        line = line.strip()
        if not line or line.startswith("#"):
            continue
        key, sep, value = line.partition("=")
        if not sep:
            raise FormatError("expected key=value", line=lineno, source=path)
        flag = "--" + key.strip().replace("_", "-")
        value = value.strip()
        if value.lower() in ("true", "yes", "on"):
            flags.append(flag)
        elif value.lower() in ("false", "no", "off"):
            continue
        else:
            flags += [flag, *value.split()]
    # config flags go right after the subcommand so later explicit flags override
    return rest[:1] + flags + rest[1:]


def _config_snapshot(args) -> dict:
    skip = {"func", "primary", "verbose", "jobs", "manifest", "config"}
    return {k: v for k, v in sorted(vars(args).items()) if k not in skip}


def main(argv: Optional[Sequence[str]] = None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    try:
        expanded = expand_config(argv)
    except DelexiError as exc:
        print(f"delexi: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    parser = build_parser()
    try:
        args = parser.parse_args(expanded)
    except SystemExit as exc:
        return int(exc.code) if exc.code is not None else EXIT_OK
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(name)s: %(message)s")
    if getattr(args, "jobs", 1) < 1:
        args.jobs = 1

    errors = RecordErrors(args.strict)
    try:
        inputs, outputs, extra = args.func(args, errors)
    except (DelexiError, OSError, ValueError) as exc:
        print(json.dumps({"error": type(exc).__name__, "message": str(exc)}, ensure_ascii=False), file=sys.stderr)
        return EXIT_ERROR

    status = errors.report()
    manifest_path = args.manifest
    if manifest_path is None and args.primary and getattr(args, args.primary, None):
        manifest_path = getattr(args, args.primary) + ".manifest.json"
    if manifest_path and args.command != "replay":
        seeds = [args.seed] if getattr(args, "seed", None) is not None else []
        RunManifest(
            command=args.command,
            argv=expanded,
            config=_config_snapshot(args),
            inputs={p: sha256_file(p) for p in inputs},
            outputs={p: sha256_file(p) for p in outputs},
            seeds=seeds,
            extra={**extra, "record_errors": len(errors.items)},
            timestamp=datetime.now(timezone.utc).isoformat(timespec="seconds"),
        ).write(manifest_path)
    return status


if __name__ == "__main__":
    sys.exit(main())
