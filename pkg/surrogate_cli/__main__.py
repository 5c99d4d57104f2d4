"""
python -m surrogate_cli <command> --config <path> [--seed N] [--out DIR] [--dry-run] [--resume CKPT]

Commands: generate, train, eval, ablate, dump-kernels.
Exit codes: 0 ok, 2 config error, 3 data error, 4 numeric divergence.
"""
import argparse
import sys
from os.path import join
from time import time
from typing import List, Optional

from surrogate_tools import logger
from surrogate_tools.training.trainer import LAST_CHECKPOINT
from surrogate_cli.commands import (
    RESUME_LAST, cmd_ablate, cmd_dump_kernels, cmd_eval, cmd_generate, cmd_train, load_config, prepare_config)
from surrogate_cli.errors import EXIT_OK, get_exit_code

GENERATE = 'generate'
TRAIN = 'train'
EVAL = 'eval'
ABLATE = 'ablate'
DUMP_KERNELS = 'dump-kernels'

# config key overridden by --out
OUT_KEYS = {
    GENERATE: ('data', 'dir'),
    TRAIN: ('run', 'output_dir'),
    ABLATE: ('run', 'output_dir'),
}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog='surrogate_cli', description='Parameter-conditioned neural PDE surrogates')
    commands = parser.add_subparsers(dest='command', metavar='command')
    commands.required = True

    def add(name, help_text, config_required=True):
        sub = commands.add_parser(name, help=help_text)
        sub.add_argument('--config', required=config_required, help='experiment config (JSON)')
        sub.add_argument('--seed', type=int, default=None, help='overrides data and training seeds')
        sub.add_argument('--out', default=None, help='output directory')
        return sub

    add(GENERATE, 'generate PDEB1 datasets and their manifest')
    train = add(TRAIN, 'train a surrogate and evaluate it')
    train.add_argument('--dry-run', action='store_true', default=False,
                       help='validate the config and log parameter counts only')
    train.add_argument('--resume', default=None,
                       help='checkpoint to resume from, "{}" for the run\'s last one'.format(RESUME_LAST))
    for name, help_text in ((EVAL, 'evaluate a checkpoint'), (DUMP_KERNELS, 'dump gated depthwise kernels')):
        sub = add(name, help_text, config_required=False)
        sub.add_argument('--checkpoint', default=None,
                         help='checkpoint file, default <run.output_dir>/{}'.format(LAST_CHECKPOINT))
    add(ABLATE, 'run the ablation sweep')
    return parser


def run(args: argparse.Namespace):
    raw = load_config(args.config) if args.config else None

    if args.command in (EVAL, DUMP_KERNELS):
        config = prepare_config(raw, seed=args.seed)[0] if raw is not None else None
        checkpoint = args.checkpoint
        if checkpoint is None:
            if config is None:
                raise argparse.ArgumentTypeError('either --config or --checkpoint is required')
            checkpoint = join(config['run']['output_dir'], LAST_CHECKPOINT)
        command = cmd_eval if args.command == EVAL else cmd_dump_kernels
        return command(checkpoint, config, args.out)

    config, config_hash = prepare_config(raw, seed=args.seed, out=args.out, out_key=OUT_KEYS[args.command])
    logger.info('Config {} ({})'.format(args.config, config_hash))
    if args.command == GENERATE:
        return cmd_generate(config, config_hash)
    if args.command == TRAIN:
        return cmd_train(config, config_hash, dry_run=args.dry_run, resume=args.resume)
    return cmd_ablate(config, config_hash)


def main(argv: Optional[List[str]] = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logger.setup()
    start = time()
    try:
        run(args)
    except argparse.ArgumentTypeError as e:
        parser.error(str(e))
    except Exception as e:
        code = get_exit_code(e)
        logger.error('{}: {}'.format(type(e).__name__, e))
        return code
    finally:
        logger.total_time(start)
    return EXIT_OK


if __name__ == '__main__':
    sys.exit(main())
