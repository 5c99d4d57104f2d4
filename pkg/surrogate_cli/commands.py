"""
Commands of the surrogate CLI. Each takes a validated experiment config (see validators.validate_config)
and its hash; every file a command writes embeds that hash.

USAGE EXAMPLE:

    config, config_hash = prepare_config(load_config('configs/burgers.json'))
    cmd_generate(config, config_hash)
    run_dir = cmd_train(config, config_hash)['run_dir']
"""
from concurrent.futures import ProcessPoolExecutor
from copy import deepcopy
from itertools import product
from os.path import basename, exists, join
from statistics import median
from typing import Any, Dict, List, Optional, Sequence, Tuple

import numpy as np

from surrogate_tools import logger
from surrogate_tools.configuration import cfg_value
from surrogate_tools.decorators import ConfigError, DataError, timeit
from surrogate_tools.misc import (
    check_file_checksum, check_path, file_checksum, get_config_hash, get_text_hash, load_json, save_json)
from surrogate_tools.models.cape import (
    DROP_LAYERNORM, NO_LAYERNORM, CapeConfig, ablate, default_variant, dump_gated_kernels)
from surrogate_tools.models.checkpoint import model_tensors, read_checkpoint
from surrogate_tools.models.conditioning import CAPE, Surrogate
from surrogate_tools.models.fno import FNO_WIDTH, FNO_WIDTH_WITH_CAPE
from surrogate_tools.pde.dataset import dataset_path, generate_dataset, read_dataset
from surrogate_tools.pde.grid import Dataset, Grid1D, TEST, TRAIN, split_holdout
from surrogate_tools.tabular import ResultTable
from surrogate_tools.training.curriculum import CURRICULUM
from surrogate_tools.training.evaluation import EvalReport, evaluate
from surrogate_tools.training.trainer import LAST_CHECKPOINT, TrainConfig, Trainer, last_checkpoint
from surrogate_cli.validators import NO_DROP, validate_config

MANIFEST = 'manifest.json'
RUN_CONFIG = 'config.json'
SWEEP_SUMMARY = 'summary.csv'
SWEEP_RUNS = 'runs.csv'
RESUME_LAST = 'last'

SWEEP_WORKERS = cfg_value('SWEEP_WORKERS', cast=int, default=0)

SUMMARY_COLS = (
    'member', 'drop', 'mode', 'alpha', 'n_seeds', 'nrmse_median', 'delta', 'nrmse_seen', 'nrmse_unseen',
    'dataset_hash', 'config_hash')
RUN_COLS = ('member', 'drop', 'mode', 'alpha', 'seed', 'nrmse_test', 'nrmse_seen', 'nrmse_unseen', 'run_dir',
            'config_hash')


def load_config(path: str) -> Dict[str, Any]:
    raw, err = load_json(path)
    if err:
        raise ConfigError('Cannot read experiment config {}: {}'.format(path, err))
    if not isinstance(raw, dict):
        raise ConfigError('Experiment config {} must be a JSON object'.format(path))
    return raw


def prepare_config(raw: Dict[str, Any], seed: int = None, out: str = None,
                   out_key: Tuple[str, str] = ('run', 'output_dir')) -> Tuple[Dict[str, Any], str]:
    """
    Validated config with command-line overrides applied, and its hash

    :param seed: overrides both the data and the training seed
    :param out: overrides config[out_key[0]][out_key[1]]
    """
    config = validate_config(raw)
    if seed is not None:
        if seed < 0:
            raise ConfigError('Seed must not be negative, got {}'.format(seed))
        config['data']['seed'] = seed
        config['train']['seed'] = seed
    if out is not None:
        section, key = out_key
        config[section][key] = out
    return config, get_config_hash(config)


def grid_from(config: Dict[str, Any]) -> Grid1D:
    return Grid1D(**config['data']['grid'])


def cape_config_from(config: Dict[str, Any]) -> Optional[CapeConfig]:
    if config['model']['conditioning'] != CAPE:
        if config['cape']['ablation']:
            raise ConfigError('cape.ablation needs model.conditioning "cape"')
        return None
    section = config['cape']
    cape = CapeConfig(
        channels=1, d=section['d'], ell=section['ell'], kernel=section['kernel'], modes=section['modes'],
        variant=section['variant'] or default_variant(config['model']['kind']), hidden=section['hidden'],
        branch_order=section['branch_order'])
    for drop in section['ablation']:
        cape = ablate(cape, drop)
    return cape


def train_config_from(config: Dict[str, Any]) -> TrainConfig:
    return TrainConfig(checkpoint_every=config['run']['checkpoint_every'], **config['train'])


def build_surrogate(config: Dict[str, Any]) -> Surrogate:
    """ Freshly initialised surrogate; the init stream is derived from the training seed """
    model = config['model']
    cape = cape_config_from(config)
    fno = dict(model['fno'])
    if fno['width'] is None:
        fno['width'] = FNO_WIDTH_WITH_CAPE if cape is not None else FNO_WIDTH
    cnn = {'channels': tuple(model['cnn']['channels']), 'kernel': model['cnn']['kernel']}
    rng = np.random.default_rng(np.random.SeedSequence(config['train']['seed']).spawn(1)[0])
    return Surrogate.build(model['kind'], model['conditioning'], 1, rng, fno=fno, cnn=cnn, cape=cape)


def data_files(config: Dict[str, Any]) -> List[Tuple[str, float, int]]:
    """ (split, parameter, trajectory count) of every file the config needs """
    data = config['data']
    files = [(TRAIN, float(p), data['n_train']) for p in data['train_params']]
    files += [(TEST, float(p), data['n_test']) for p in data['test_params']]
    if data['n_test_seen']:
        files += [(TEST, float(p), data['n_test_seen']) for p in data['train_params']
                  if float(p) not in {float(q) for q in data['test_params']}]
    return files


def manifest_checksums(data_dir: str) -> Dict[str, str]:
    """ {file name: sha256} of the manifest written by generate, empty when there is none """
    path = join(data_dir, MANIFEST)
    if not exists(path):
        return {}
    manifest, err = load_json(path)
    if err:
        raise DataError('Cannot read {}: {}'.format(path, err))
    return {entry['file']: entry['sha256'] for entry in manifest.get('files', [])}


def _load(config: Dict[str, Any], split: str, params: Sequence[float]) -> List[Dataset]:
    data = config['data']
    grid = grid_from(config)
    checksums = manifest_checksums(data['dir'])
    datasets = []
    for param in params:
        path = dataset_path(data['dir'], data['kind'], split, param)
        if not exists(path):
            raise DataError('Dataset {} not found, run "generate" with the same config first'.format(path))
        expected = checksums.get(basename(path))
        if expected and not check_file_checksum(path, expected):
            raise DataError('Dataset {} does not match its manifest checksum'.format(path))
        dataset = read_dataset(path)
        if dataset.grid != grid:
            raise DataError('Dataset {} was generated on {}, config asks for {}'.format(path, dataset.grid, grid))
        datasets.append(dataset)
    return datasets


def load_train_sets(config: Dict[str, Any]) -> List[Dataset]:
    return _load(config, TRAIN, config['data']['train_params'])


def load_test_sets(config: Dict[str, Any]) -> List[Dataset]:
    params = [param for split, param, _ in data_files(config) if split == TEST]
    return _load(config, TEST, params)


def dataset_hash(config: Dict[str, Any]) -> str:
    """ Hash of the checksums of every data file of the config """
    data = config['data']
    checksums = []
    for split, param, _ in data_files(config):
        path = dataset_path(data['dir'], data['kind'], split, param)
        if not exists(path):
            raise DataError('Dataset {} not found'.format(path))
        checksums.append(file_checksum(path))
    return get_text_hash(','.join(checksums))[:16]


def _save(path: str, data: Dict[str, Any]):
    ok, err = save_json(path, data)
    if not ok:
        raise OSError('Cannot write {}: {}'.format(path, err))


@timeit(stdout=logger.info, prefix='Command ')
def cmd_generate(config: Dict[str, Any], config_hash: str) -> Dict[str, Any]:
    """ PDEB1 files of every split and parameter plus manifest.json with their SHA-256 """
    data = config['data']
    grid = grid_from(config)
    files = []
    for split, param, n_traj in data_files(config):
        written = generate_dataset(
            data['kind'], [param], n_traj, grid, data['seed'], split, data['dir'], data['oversample'],
            data['workers'])
        path = written[param]
        files.append({
            'file': basename(path), 'split': split, 'param': param, 'n_traj': n_traj,
            'sha256': file_checksum(path)})

    manifest = {
        'config_hash': config_hash,
        'kind': data['kind'],
        'seed': data['seed'],
        'grid': grid.to_dict(),
        'files': files,
    }
    _save(join(data['dir'], MANIFEST), manifest)
    logger.info('Generated {} files in {}'.format(len(files), data['dir']))
    return manifest


def _evaluate_all(surrogate: Surrogate, config: Dict[str, Any], config_hash: str) -> EvalReport:
    report = evaluate(
        surrogate, load_test_sets(config), seen_params=config['data']['train_params'], config_hash=config_hash,
        batch_size=config['train']['batch_size'])
    report.meta['parameter_counts'] = surrogate.parameter_counts()
    return report


def _report_summary(report: EvalReport) -> Dict[str, float]:
    return {
        'nrmse_test': report.mean_nrmse(split=TEST),
        'nrmse_seen': report.mean_nrmse(split=TEST, seen=True),
        'nrmse_unseen': report.mean_nrmse(split=TEST, seen=False),
    }


@timeit(stdout=logger.info, prefix='Command ')
def cmd_train(config: Dict[str, Any], config_hash: str, dry_run: bool = False,
              resume: str = None) -> Dict[str, Any]:
    """
    Trains one surrogate and evaluates it on the test files

    :param dry_run: only builds the model and logs its parameter counts
    :param resume: checkpoint path, or "last" for the run directory's last checkpoint
    :return: run directory, parameter counts and mean test nRMSE (seen / unseen)
    """
    surrogate = build_surrogate(config)
    counts = surrogate.parameter_counts()
    logger.info('Model {} / {}: base {} + CAPE {} = {} parameters'.format(
        config['model']['kind'], config['model']['conditioning'], counts['base'], counts['cape'], counts['total']))
    run_dir = config['run']['output_dir']
    if dry_run:
        return {'run_dir': run_dir, 'parameter_counts': counts}

    train_config = train_config_from(config)
    train_sets, val_sets = [], []
    for dataset in load_train_sets(config):
        train, val = split_holdout(dataset, train_config.val_fraction)
        train_sets.append(train)
        if val is not None:
            val_sets.append(val)

    check_path(run_dir)
    _save(join(run_dir, RUN_CONFIG), {'config_hash': config_hash, 'config': config})
    trainer = Trainer(surrogate, train_config, run_dir, config_hash, experiment=config)
    if resume:
        path = last_checkpoint(run_dir) if resume == RESUME_LAST else resume
        if path is None or not exists(path):
            raise DataError('Checkpoint to resume from not found: {}'.format(path or join(run_dir, LAST_CHECKPOINT)))
        trainer.resume(path)
    logger.attach_run(run_dir)
    try:
        trainer.fit(train_sets, val_sets)
    finally:
        logger.detach_run()

    report = _evaluate_all(surrogate, config, config_hash)
    report.write(run_dir)
    result = {'run_dir': run_dir, 'parameter_counts': counts}
    result.update(_report_summary(report))
    logger.info('Run {}: test nRMSE {:.4g} (seen {:.4g}, unseen {:.4g})'.format(
        run_dir, result['nrmse_test'], result['nrmse_seen'], result['nrmse_unseen']))
    return result


def load_surrogate(checkpoint: str, config: Dict[str, Any] = None) -> Tuple[Surrogate, Dict[str, Any], str]:
    """ Surrogate restored from a checkpoint, built from the config embedded in it unless one is given """
    tensors, meta = read_checkpoint(checkpoint)
    if config is None:
        if not meta.get('experiment'):
            raise ConfigError('Checkpoint {} carries no experiment config'.format(checkpoint))
        config = validate_config(meta['experiment'])
    config_hash = meta.get('config_hash') or get_config_hash(config)
    surrogate = build_surrogate(config)
    surrogate.load_state(model_tensors(tensors))
    return surrogate, config, config_hash


@timeit(stdout=logger.info, prefix='Command ')
def cmd_eval(checkpoint: str, config: Dict[str, Any] = None, out: str = None) -> EvalReport:
    """ EvalReport of a checkpoint on the config's test files, written to out (default: the run directory) """
    surrogate, config, config_hash = load_surrogate(checkpoint, config)
    report = _evaluate_all(surrogate, config, config_hash)
    report.meta['checkpoint'] = basename(checkpoint)
    out_dir = out or config['run']['output_dir']
    check_path(out_dir)
    report.write(out_dir)
    logger.info('Evaluated {}: test nRMSE {:.4g}'.format(checkpoint, report.mean_nrmse(split=TEST)))
    return report


def _member_name(drop: str, mode: str, alpha: float) -> str:
    return '{}_{}_a{}'.format(drop, mode, repr(alpha))


def sweep_members(config: Dict[str, Any]) -> List[Dict[str, Any]]:
    """ One config per (drop, mode, alpha, seed) of the ablate section """
    sweep = config['ablate']
    alphas = sweep['alphas'] or [config['train']['alpha']]
    seeds = sweep['seeds'] or [config['train']['seed']]
    sweep_dir = config['run']['output_dir']
    if config['model']['conditioning'] != CAPE and any(drop != NO_DROP for drop in sweep['drops']):
        raise ConfigError('Structural ablations need model.conditioning "cape"')
    variant = config['cape']['variant'] or default_variant(config['model']['kind'])
    if DROP_LAYERNORM in sweep['drops'] and variant == NO_LAYERNORM:
        raise ConfigError('Dropping layernorm from a CAPE without LayerNorm repeats the full model')

    members = []
    for drop, mode, alpha, seed in product(sweep['drops'], sweep['modes'], alphas, seeds):
        member = deepcopy(config)
        if drop != NO_DROP and drop not in member['cape']['ablation']:
            member['cape']['ablation'] = member['cape']['ablation'] + [drop]
        member['train'].update(mode=mode, alpha=float(alpha), seed=seed)
        name = _member_name(drop, mode, float(alpha))
        member['run']['output_dir'] = join(sweep_dir, name, 'seed_{}'.format(seed))
        members.append({'name': name, 'drop': drop, 'mode': mode, 'alpha': float(alpha), 'seed': seed,
                        'config': member})
    return members


def _run_member(member: Dict[str, Any]) -> Dict[str, Any]:
    config = member['config']
    logger.set_label('{}/seed_{}'.format(member['name'], member['seed']))
    try:
        result = cmd_train(config, get_config_hash(config))
    finally:
        logger.set_label(None)
    result.update({key: member[key] for key in ('name', 'drop', 'mode', 'alpha', 'seed')})
    result['config_hash'] = get_config_hash(config)
    return result


def format_delta(value: float, reference: Optional[float]) -> str:
    """ "(+0.02)" style difference to the full method, "(±0.00)" when it rounds to zero """
    if reference is None or value != value or reference != reference:
        return ''
    delta = value - reference
    if round(delta, 2) == 0:
        return '(±0.00)'
    return '({:+.2f})'.format(delta)


@timeit(stdout=logger.info, prefix='Command ')
def cmd_ablate(config: Dict[str, Any], config_hash: str, workers: int = SWEEP_WORKERS) -> ResultTable:
    """
    Trains every sweep member and writes runs.csv (one row per seed) and summary.csv (median over seeds)

    :param workers: parallel member processes, 0 runs them in this process
    """
    members = sweep_members(config)
    data_hash = dataset_hash(config)
    sweep_dir = config['run']['output_dir']
    check_path(sweep_dir)
    logger.info('Sweep of {} runs in {} (dataset {})'.format(len(members), sweep_dir, data_hash))

    if workers and workers > 1 and len(members) > 1:
        with ProcessPoolExecutor(max_workers=workers) as executor:
            results = list(executor.map(_run_member, members))
    else:
        results = [_run_member(member) for member in members]

    runs = ResultTable([
        (r['name'], r['drop'], r['mode'], r['alpha'], r['seed'], r['nrmse_test'], r['nrmse_seen'],
         r['nrmse_unseen'], r['run_dir'], r['config_hash']) for r in results], RUN_COLS)
    runs.write_csv(join(sweep_dir, SWEEP_RUNS))

    medians = []
    for key, group in runs.grouped('member', 'drop', 'mode', 'alpha'):
        values = tuple(median(group.extract_column(col)) for col in ('nrmse_test', 'nrmse_seen', 'nrmse_unseen'))
        medians.append((key, len(group), values))

    full = [values[0] for key, _, values in medians
            if key[1] == NO_DROP and key[2] == CURRICULUM and key[3] == float(config['train']['alpha'])]
    reference = full[0] if full else None
    if reference is None:
        logger.warning('Sweep has no full-method member, deltas are left empty')

    summary = ResultTable([], SUMMARY_COLS)
    for (name, drop, mode, alpha), n_seeds, (test, seen, unseen) in medians:
        summary.append((name, drop, mode, alpha, n_seeds, test, format_delta(test, reference), seen,
                        unseen, data_hash, config_hash))
    summary.write_csv(join(sweep_dir, SWEEP_SUMMARY))
    _save(join(sweep_dir, RUN_CONFIG), {'config_hash': config_hash, 'dataset_hash': data_hash, 'config': config})
    return summary


@timeit(stdout=logger.info, prefix='Command ')
def cmd_dump_kernels(checkpoint: str, config: Dict[str, Any] = None, out: str = None) -> List[str]:
    """ kernels_<param>.csv with the gated depthwise kernels for every train and test parameter """
    surrogate, config, _ = load_surrogate(checkpoint, config)
    if surrogate.cape is None:
        raise ConfigError('Kernel dump needs a CAPE surrogate, checkpoint has "{}"'.format(surrogate.mode))
    out_dir = out or config['run']['output_dir']
    check_path(out_dir)
    params = sorted({float(p) for p in config['data']['train_params'] + config['data']['test_params']})
    paths = []
    for param in params:
        path = join(out_dir, 'kernels_{}.csv'.format(repr(param)))
        dump_gated_kernels(surrogate.cape, param, path)
        paths.append(path)
    logger.info('Dumped gated kernels of {} parameters to {}'.format(len(params), out_dir))
    return paths
