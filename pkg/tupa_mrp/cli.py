"""
Command-line entry point.

Usage: tupa-mrp <command> [options]

Exit codes: 0 success, 1 data or validation findings, 2 usage or I/O problems.
"""
import argparse
import json
import logging
import sys
from pathlib import Path
from typing import Dict, List, Optional, Tuple

from . import __version__
from .classifier import load_model, parse_corpus, save_model, train
from .companion import TokenRow, companion_index, read_conllu, text_from_rows, write_conllu
from .config import Config
from .constraints import PROFILE_TEMPLATE, FrameworkProfile, resolve_profile
from .errors import TupaMrpError
from .evaluate import format_report, score_corpus
from .graph import Graph, corpus_stats, graph_to_dot, load_mrp, save_mrp, validate, write_mrp
from .irep import from_intermediate, read_irep, to_intermediate, write_irep
from .logger import get_logger, setup_logger
from .oracle import gold_sequence, verify
from .synthetic import generate_corpus
from .transitions import format_sequence

logger = get_logger('cli')

OK, FINDINGS, USAGE = 0, 1, 2
DIRECTIONS = ('mrp2irep', 'irep2mrp', 'companion2conllu')

Rows = List[TokenRow]


class UsageError(Exception):
    """Bad combination of arguments; reported with exit code 2."""


# --------------------------------------------------------------------------- #
# Shared helpers
# --------------------------------------------------------------------------- #

def _open_out(path: Optional[str]):
    if not path or path == '-':
        return sys.stdout
    Path(path).parent.mkdir(parents=True, exist_ok=True)
    return open(path, 'w', encoding='utf-8', newline='\n')


def _close_out(stream):
    if stream is not sys.stdout:
        stream.close()


def _load_companions(path: Optional[str], fmt: str = 'mrp') -> Dict[str, Tuple[str, Rows]]:
    """Graph id -> (source text, token rows)."""
    if not path:
        raise UsageError("companion data is required (--companion); raw text input is not supported")
    if fmt == 'irep':
        raise UsageError("companion data comes as mrp or conllu, not irep")
    if fmt == 'conllu':
        with open(path, 'r', encoding='utf-8') as f:
            sentences = read_conllu(f)
        index = {}
        for k, (sent_id, rows) in enumerate(sentences):
            index[sent_id if sent_id is not None else str(k)] = (text_from_rows(rows), rows)
        return index
    companions = load_mrp(path)
    rows = companion_index(companions)
    return {str(g.id): (g.input, rows[str(g.id)]) for g in companions}


def _paired(graphs: List[Graph], companions: Dict[str, Tuple[str, Rows]]) -> List[Tuple[Graph, Rows]]:
    corpus = []
    for graph in graphs:
        entry = companions.get(str(graph.id))
        if entry is None:
            logger.warning(f"graph {graph.id}: no companion data, skipped")
            continue
        corpus.append((graph, entry[1]))
    return corpus


def _profile(args, framework: Optional[str]) -> FrameworkProfile:
    tag = args.framework or framework
    if not tag:
        raise UsageError("no framework tag: pass --framework")
    return resolve_profile(tag, args.profile)


def _seed(args, config: Config) -> int:
    return args.seed if args.seed is not None else config.getint('seed', 1)


def _jobs(args, config: Config) -> int:
    return args.jobs if args.jobs is not None else config.getint('jobs', 1)


# --------------------------------------------------------------------------- #
# Commands
# --------------------------------------------------------------------------- #

def cmd_convert(args, config: Config) -> int:
    failures = 0
    out = _open_out(args.out)
    try:
        if args.direction == 'companion2conllu':
            for graph in load_mrp(args.input):
                try:
                    rows = companion_index([graph])[str(graph.id)]
                except TupaMrpError as e:
                    logger.warning(f"graph {graph.id}: {e}")
                    failures += 1
                    continue
                write_conllu(rows, out, sent_id=graph.id, text=graph.input)

        elif args.direction == 'mrp2irep':
            companions = _load_companions(args.companion, args.format)
            converted = []
            for graph, rows in _paired(load_mrp(args.input), companions):
                try:
                    profile = resolve_profile(args.framework or graph.framework, args.profile)
                    converted.append(to_intermediate(graph, rows, profile))
                except TupaMrpError as e:
                    logger.warning(f"graph {graph.id}: {e}")
                    failures += 1
            write_irep(converted, out)

        else:
            companions = _load_companions(args.companion, args.format)
            with open(args.input, 'r', encoding='utf-8') as f:
                igraphs = read_irep(f)
            graphs = []
            for igraph in igraphs:
                graph_id = str(igraph.meta.get('id'))
                if graph_id not in companions:
                    logger.warning(f"graph {graph_id}: no companion data")
                    failures += 1
                    continue
                text, rows = companions[graph_id]
                try:
                    graphs.append(from_intermediate(igraph, rows, igraph.meta.get('input', text)))
                except TupaMrpError as e:
                    logger.warning(f"graph {graph_id}: {e}")
                    failures += 1
            write_mrp(graphs, out)
    finally:
        _close_out(out)

    if failures:
        logger.error(f"convert ({args.direction}): {failures} graph(s) failed")
        return FINDINGS
    return OK


def cmd_validate(args, config: Config) -> int:
    findings = 0
    graphs = load_mrp(args.input)
    for graph in graphs:
        report = validate(graph, _profile(args, graph.framework))
        for violation in report.violations:
            print(f"{graph.id}\t{violation.code}\t{violation.message}")
        findings += not report
    logger.info(f"{len(graphs) - findings}/{len(graphs)} graph(s) valid")
    return FINDINGS if findings else OK


def cmd_stats(args, config: Config) -> int:
    stats = corpus_stats(load_mrp(args.input), jobs=_jobs(args, config))
    out = _open_out(args.out)
    try:
        out.write(json.dumps(stats.to_json(), indent=2) + '\n')
    finally:
        _close_out(out)
    return OK


def cmd_oracle(args, config: Config) -> int:
    companions = _load_companions(args.companion, args.format)
    failures = 0
    out = _open_out(args.out)
    try:
        for graph, rows in _paired(load_mrp(args.input), companions):
            try:
                igraph = to_intermediate(graph, rows, _profile(args, graph.framework))
                sequence = gold_sequence(igraph, rows)
                if args.verify and not verify(igraph, rows):
                    logger.warning(f"graph {graph.id}: replay does not reproduce the gold graph")
                    failures += 1
            except TupaMrpError as e:
                logger.warning(f"graph {graph.id}: {e}")
                failures += 1
                continue
            out.write(f"# id = {graph.id}\n")
            out.write(format_sequence(sequence))
            out.write('\n')
    finally:
        _close_out(out)
    return FINDINGS if failures else OK


def cmd_train(args, config: Config) -> int:
    companions = _load_companions(args.companion, args.format)
    graphs = load_mrp(args.input)
    corpus = _paired(graphs, companions)
    if not corpus:
        raise UsageError("no training graph has companion data")
    profile = _profile(args, corpus[0][0].framework)

    dev = None
    if args.dev:
        dev = _paired(load_mrp(args.dev), _load_companions(args.dev_companion or args.companion, args.format))

    init = load_model(args.resume) if args.resume else None
    model = train(corpus, profile, config, epochs=args.epochs, seed=_seed(args, config), init=init, dev=dev,
                  progress=not args.quiet)
    save_model(model, args.model)
    logger.info(f"model written to {args.model}")
    history = model.meta.get('history', [])
    if model.meta.get('init_dev_f') is not None and history:
        best = max(r.get('dev_f', 0.0) for r in history)
        logger.info(f"dev F {model.meta['init_dev_f']:.4f} before fine-tuning, {best:.4f} after")

    if args.metrics:
        out = _open_out(args.metrics)
        try:
            for record in model.meta.get('history', []):
                out.write(json.dumps(record) + '\n')
        finally:
            _close_out(out)
    return OK


def cmd_parse(args, config: Config) -> int:
    model = load_model(args.model)
    companions = _load_companions(args.input, args.format)
    items = [(graph_id, text, rows) for graph_id, (text, rows) in companions.items()]
    outcomes = parse_corpus(model, items, _jobs(args, config), config.getint('step_budget_factor', 10))
    truncated = sum(o.truncated for o in outcomes)
    if truncated:
        logger.warning(f"{truncated} parse(s) hit the step budget")
    out = _open_out(args.out)
    try:
        write_mrp((o.graph for o in outcomes), out)
    finally:
        _close_out(out)
    return OK


def cmd_evaluate(args, config: Config) -> int:
    restarts = args.restarts if args.restarts is not None else config.getint('restarts', 10)
    iterations = args.iterations if args.iterations is not None else config.getint('iterations', 5000)
    report = score_corpus(
        load_mrp(args.gold), load_mrp(args.system),
        restarts=restarts, iterations=iterations, seed=_seed(args, config),
        exact_limit=config.getint('exact_limit', 5040), jobs=_jobs(args, config),
    )
    print(format_report(report, macro=args.macro))
    if args.out:
        out = _open_out(args.out)
        try:
            out.write(json.dumps(report.to_json(macro=args.macro), indent=2) + '\n')
        finally:
            _close_out(out)
    return OK


def cmd_generate(args, config: Config) -> int:
    if not args.framework:
        raise UsageError("generate needs --framework")
    target = Path(args.out or config.get('data_dir'))
    target.mkdir(parents=True, exist_ok=True)
    corpus = generate_corpus(args.framework, args.size, seed=_seed(args, config), cyclic_fraction=args.cyclic_fraction)
    key = args.framework.lower()
    save_mrp([g for g, _ in corpus], target / f"{key}.mrp")
    save_mrp([c for _, c in corpus], target / f"{key}.companion.mrp")
    logger.info(f"wrote {len(corpus)} {key} graph(s) to {target}")
    return OK


def cmd_dot(args, config: Config) -> int:
    graphs = load_mrp(args.input)
    if args.id:
        graphs = [g for g in graphs if str(g.id) == args.id]
        if not graphs:
            raise UsageError(f"no graph with id {args.id}")
    out = _open_out(args.out)
    try:
        for graph in graphs:
            out.write(graph_to_dot(graph))
    finally:
        _close_out(out)
    return OK


def cmd_init_config(args, config: Config) -> int:
    path = Path(args.path)
    if path.exists() and not args.force:
        raise UsageError(f"'{path}' exists; pass --force to overwrite")
    Config.write_template(path)
    print(f"[Success] Configuration saved to: {path}")
    if args.profile_template:
        profile_path = Path(args.profile_template)
        profile_path.parent.mkdir(parents=True, exist_ok=True)
        profile_path.write_text(PROFILE_TEMPLATE, encoding='utf-8')
        print(f"[Success] Profile template saved to: {profile_path}")
    return OK


# --------------------------------------------------------------------------- #
# Argument parsing
# --------------------------------------------------------------------------- #

def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument('--config', help='Path to config file (default: ./tupa_mrp.ini or ~/.tupa_mrp/config.ini)')
    common.add_argument('--framework', help='Framework tag (ucca, ptg, amr, drg, eds, dm, psd)')
    common.add_argument('--seed', type=int, help='Seed for every random decision')
    common.add_argument('--jobs', type=int, help='Worker threads')
    common.add_argument('--profile', help='Framework profile override file (INI)')
    common.add_argument('--format', choices=('mrp', 'conllu', 'irep'), default='mrp',
                        help='Format of companion input')
    common.add_argument('-v', '--verbose', action='store_true', help='Debug logging')
    common.add_argument('--log-file', help='Also log to this file')

    parser = argparse.ArgumentParser(prog='tupa-mrp', description='Transition-based meaning representation parsing')
    parser.add_argument('--version', action='version', version=f'%(prog)s {__version__}')
    sub = parser.add_subparsers(dest='command', metavar='command')
    sub.required = True

    p = sub.add_parser('convert', parents=[common], help='Convert between MRP, intermediate and CoNLL-U')
    p.add_argument('input')
    p.add_argument('--direction', choices=DIRECTIONS, default='mrp2irep')
    p.add_argument('--companion', help='Companion data for the input graphs')
    p.add_argument('-o', '--out', help='Output file (default: stdout)')
    p.set_defaults(func=cmd_convert)

    p = sub.add_parser('validate', parents=[common], help='Check graphs against their framework profile')
    p.add_argument('input')
    p.set_defaults(func=cmd_validate)

    p = sub.add_parser('stats', parents=[common], help='Cyclic graph counts per framework')
    p.add_argument('input')
    p.add_argument('-o', '--out')
    p.set_defaults(func=cmd_stats)

    p = sub.add_parser('oracle', parents=[common], help='Dump gold transition sequences')
    p.add_argument('input')
    p.add_argument('--companion')
    p.add_argument('--verify', action='store_true', help='Replay every sequence and compare with the gold graph')
    p.add_argument('-o', '--out')
    p.set_defaults(func=cmd_oracle)

    p = sub.add_parser('train', parents=[common], help='Train a model')
    p.add_argument('input')
    p.add_argument('--companion')
    p.add_argument('--model', required=True, help='Where to write the model (.npz)')
    p.add_argument('--dev', help='Validation graphs for best-epoch selection')
    p.add_argument('--dev-companion', help='Companion data for --dev (default: --companion)')
    p.add_argument('--continue', dest='resume', metavar='MODEL', help='Continue training from this model')
    p.add_argument('--epochs', type=int)
    p.add_argument('--metrics', help='Per-epoch history as JSON lines')
    p.add_argument('--quiet', action='store_true', help='No progress bar')
    p.set_defaults(func=cmd_train)

    p = sub.add_parser('parse', parents=[common], help='Parse companion data into MRP graphs')
    p.add_argument('input', help='Companion data (MRP, or CoNLL-U with --format conllu)')
    p.add_argument('--model', required=True)
    p.add_argument('-o', '--out')
    p.set_defaults(func=cmd_parse)

    p = sub.add_parser('evaluate', parents=[common], help='MRP F-score of system graphs against gold graphs')
    p.add_argument('gold')
    p.add_argument('system')
    p.add_argument('--restarts', type=int)
    p.add_argument('--iterations', type=int)
    p.add_argument('--macro', action='store_true', help='Also report the mean of per-class F')
    p.add_argument('-o', '--out', help='JSON report')
    p.set_defaults(func=cmd_evaluate)

    p = sub.add_parser('generate', parents=[common], help='Write a synthetic corpus and its companion data')
    p.add_argument('--size', type=int, default=100)
    p.add_argument('--cyclic-fraction', type=float, default=0.0)
    p.add_argument('-o', '--out', help='Output directory (default: data_dir from the config)')
    p.set_defaults(func=cmd_generate)

    p = sub.add_parser('dot', parents=[common], help='Graphviz source for graphs')
    p.add_argument('input')
    p.add_argument('--id', help='Only this graph')
    p.add_argument('-o', '--out')
    p.set_defaults(func=cmd_dot)

    p = sub.add_parser('init-config', parents=[common], help='Write a config file template')
    p.add_argument('path', nargs='?', default='tupa_mrp.ini')
    p.add_argument('--profile-template', help='Also write a profile override template here')
    p.add_argument('--force', action='store_true')
    p.set_defaults(func=cmd_init_config)

    return parser


def main(argv: Optional[List[str]] = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        return e.code if isinstance(e.code, int) else USAGE

    setup_logger(log_file=args.log_file, level=logging.DEBUG if args.verbose else logging.INFO)

    try:
        config = Config(args.config)
    except FileNotFoundError as e:
        logger.error(f"ERROR: {e}")
        return USAGE
    except ValueError as e:
        logger.error(f"ERROR: Config file is invalid: {e}")
        return USAGE

    try:
        return args.func(args, config)
    except UsageError as e:
        logger.error(f"ERROR: {e}")
        return USAGE
    except OSError as e:
        logger.error(f"ERROR: {e}")
        return USAGE
    except TupaMrpError as e:
        logger.error(f"{args.command}: {e}")
        return FINDINGS
    except ValueError as e:
        logger.error(f"{args.command}: {e}")
        return USAGE
    except KeyboardInterrupt:
        logger.warning("\n\nCancelled by user.")
        return 130


if __name__ == '__main__':
    sys.exit(main())
