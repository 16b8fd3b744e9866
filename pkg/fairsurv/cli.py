"""
Command line
============

``fairsurv`` runs the sample size workflow from one JSON config:

1. load the cohort (CSV) or sample a synthetic one;
2. calibrate the core model or take it as given;
3. use the observed follow-up or simulate it under the censoring spec;
4. compute the unit information matrix;
5. profile precision at each sample size and/or find the required n;
6. write the reports.

Subcommands::

    fairsurv run CONFIG [--set path=value ...] [--out DIR]
    fairsurv calibrate CONFIG
    fairsurv synth export CONFIG OUT.csv
    fairsurv fisher export CONFIG [OUT.json]
    fairsurv compare CONFIG
    fairsurv size-grid CONFIG [--sizes N ...]

Exit codes: 0 success, 1 output failure, 2 config error, 3 data validation,
4 numerical failure, 5 infeasible target.
"""

import argparse
import logging
import os
import sys

import lifelines
import matplotlib
import numpy as np
import pandas as pd
import scipy

import fairsurv
from fairsurv import config
from fairsurv import consts
from fairsurv import exceptions
from fairsurv import fisher
from fairsurv import ingest
from fairsurv import model_compare
from fairsurv import precision
from fairsurv import report
from fairsurv import samplesize
from fairsurv import synth
from fairsurv import utils
from fairsurv.core_model import CalibrationTarget
from fairsurv.core_model import CoreModel
from fairsurv.core_model import calibrate
from fairsurv.core_model import standardized_equal_weights


logger = logging.getLogger(__name__)

LOG_FORMAT = '%(asctime)s %(levelname)s %(name)s: %(message)s'


class Pipeline():

    def __init__(self, settings):
        """Stages of one run; each stage is computed once, on demand.

        Args:
            settings (dict): A validated run config.
        """

        self.settings = settings
        self.seeds = settings['seed']
        self.censoring = synth.CensoringSpec.from_dict(settings['censoring'])
        self._cohort = None
        self._model = None
        self._followup = None
        self._info = None
        self.followup_source = None

    @property
    def horizon(self):
        return float(self.settings['horizon'])

    @property
    def cohort(self):
        """(PredictorTable, observed FollowUp or None)."""

        if self._cohort is None:
            data = self.settings['data']
            if data['csv'] is not None:
                table, followup = ingest.load_cohort(
                    data['csv']['path'], data['csv'])
            else:
                spec = synth.PredictorSpec(data['synth']['predictors'])
                table = synth.sample_predictors(
                    spec, data['synth']['n'], self.seeds['simulation'])
                followup = None

            if data['standardize']:
                table = ingest.standardize(table, data['standardize'])
            self._cohort = (table, followup)
        return self._cohort

    @property
    def table(self):
        return self.cohort[0]

    @property
    def model(self):
        if self._model is None:
            self._model = self.build_model()
        return self._model

    def build_model(self):
        settings = self.settings['core_model']
        table = self.table

        if settings['alpha'] is not None:
            beta = resolve_weights(
                settings['beta'], table, '/core_model/beta')
            model = CoreModel(
                settings['alpha'], settings['delta'], beta, self.horizon)
            logger.info(
                'Core model given: alpha=%.4f delta=%.4f.', model.alpha,
                model.delta)
            return model

        if settings['beta_relative'] is not None:
            beta = resolve_weights(
                settings['beta_relative'], table, '/core_model/beta_relative')
        else:
            signs = resolve_weights(
                settings['equal_standardized_weights'], table,
                '/core_model/equal_standardized_weights')
            beta = standardized_equal_weights(table, signs)

        target = CalibrationTarget(
            settings['overall_risk'], settings['c_index'], self.horizon,
            tolerance_risk=settings['tolerance_risk'],
            tolerance_c=settings['tolerance_c'],
            max_iterations=settings['max_iterations'])
        return calibrate(
            table, beta, target, self.censoring, self.seeds['calibration'],
            censoring_free=settings['censoring_free_c'],
            simulation_size=settings['simulation_size'])

    @property
    def followup(self):
        if self._followup is None:
            observed = self.cohort[1]
            if observed is not None:
                self._followup = observed
                self.followup_source = 'observed'
            else:
                self._followup = synth.simulate_followup(
                    self.model, self.table, self.censoring,
                    self.seeds['simulation'])
                self.followup_source = 'simulated'
            logger.info(
                'Follow-up %s: %d events out of %d.', self.followup_source,
                int(self._followup.event.sum()), len(self._followup))
        return self._followup

    @property
    def info(self):
        if self._info is None:
            self._info = fisher.unit_information(
                self.model, self.table, self.followup)
        return self._info

    def profile(self, n):
        return precision.precision_profile(
            self.model, self.table, n=n,
            thresholds=self.settings['thresholds'],
            level=self.settings['level'], info=self.info,
            draws=self.settings['mape_draws'], seed=self.seeds['mape'],
            z=self.settings['z_multiplier'])

    def sample_size(self):
        targets = self.settings['precision_targets']
        if targets is None:
            return None
        return samplesize.cohort_required_n(
            self.model, self.table, self.followup,
            samplesize.PrecisionTargets.from_dict(targets),
            level=self.settings['level'], info=self.info,
            z=self.settings['z_multiplier'])

    def manifest(self, files=()):
        table = self.table
        followup = self.followup
        return dict(
            config=self.settings,
            config_sha256=config.config_hash(self.settings),
            seeds=self.seeds,
            versions=dict(
                fairsurv=fairsurv.__version__, numpy=np.__version__,
                scipy=scipy.__version__, pandas=pd.__version__,
                lifelines=lifelines.__version__,
                matplotlib=matplotlib.__version__),
            core_model=self.model.to_dict(),
            condition_estimate=self.info.condition_estimate,
            counts=dict(
                individuals=table.n_individuals,
                parameters=table.n_predictors + 1,
                events=int(followup.event.sum()),
                censored=int(len(followup) - followup.event.sum())),
            followup_source=self.followup_source,
            provenance=table.provenance,
            files=sorted(files))


def resolve_weights(weights, table, pointer):
    """Weights as a vector aligned with the table columns.

    A list is taken in column order; a mapping is keyed by column name
    (missing columns get 0).
    """

    if isinstance(weights, dict):
        unknown = [name for name in weights if name not in table.predictor_names]
        if unknown:
            raise exceptions.ConfigError(
                'Unknown predictors in {}: {}.'.format(
                    pointer, ', '.join(unknown)),
                errors={pointer: 'Unknown predictors: {}.'.format(
                    ', '.join(unknown))})
        return np.array([
            float(weights.get(name, 0.0)) for name in table.predictor_names])

    if len(weights) != table.n_predictors:
        message = 'Expected {} weights ({}), got {}.'.format(
            table.n_predictors, ', '.join(table.predictor_names), len(weights))
        raise exceptions.ConfigError(message, errors={pointer: message})
    return np.asarray(weights, dtype=float)


def individuals_frame(pipeline, profile):
    frame = profile.individuals.copy()
    frame.insert(0, 'n', profile.n)
    frame.insert(0, 'id', np.arange(len(frame)))
    for name, labels in pipeline.table.group_labels.items():
        frame.insert(2, name, labels)
    return frame


def run(pipeline, out_dir):
    """Full workflow: every output of the run under ``out_dir``.

    Return:
        dict: The report written to report.json.
    """

    settings = pipeline.settings
    options = settings['report']
    report.ensure_directory(out_dir)
    written = []

    def path(*parts):
        written.append(os.path.join(*parts))
        return os.path.join(out_dir, *parts)

    profiles = [pipeline.profile(n) for n in settings['sample_sizes']]
    result = pipeline.sample_size()

    document = dict(
        core_model=pipeline.model.to_dict(),
        unit_information=pipeline.info.to_dict(),
        followup=ingest.followup_summary(pipeline.followup, pipeline.horizon),
        followup_source=pipeline.followup_source,
        profiles=[],
        sample_size=None if result is None else result.to_dict())

    subgroups = []
    for profile in profiles:
        entry = profile.to_dict()
        entry['ranges'] = {
            '{:g}'.format(limit): report.range_summary(
                profile, max_true_risk=limit)
            for limit in options['risk_ranges']
            if (profile.individuals['true_risk'] <= limit).any()}
        for group in options['groups']:
            subgroups.append(report.subgroup_summary(
                profile, group, options['fairness_factor']))
        document['profiles'].append(entry)

    if profiles:
        report.write_csv(
            pd.concat([individuals_frame(pipeline, p) for p in profiles]),
            path('individuals.csv'))
        report.write_csv(
            report.table_rows(profiles, options['risk_ranges']),
            path('summary.csv'))
    if subgroups:
        report.write_csv(
            pd.concat(subgroups, ignore_index=True), path('subgroups.csv'))
    if result is not None:
        report.write_csv(result.individuals, path('sample_size.csv'))

    if options['plots'] and profiles:
        if pipeline.table.n_individuals < consts.LOWESS_MIN_POINTS:
            logger.warning('Too few individuals to draw plots.')
        else:
            # The first sample size is also written without the n suffix.
            suffixes = [(profiles[0], '')] + [
                (profile, '__n={}'.format(profile.n)) for profile in profiles]
            for profile, suffix in suffixes:
                series = report.report_series(
                    profile, suffix=suffix, groups=options['groups'],
                    bandwidth=options['lowess_bandwidth'])
                files = report.emit_plots(
                    series, os.path.join(out_dir, 'plots'))
                written += [
                    os.path.relpath(item, out_dir) for item in files]

    report.write_json(document, path('report.json'))
    report.write_json(
        pipeline.manifest(written + ['manifest.json']), path('manifest.json'))
    logger.info('Run written to %s.', out_dir)
    return document


def size_grid(pipeline, sizes):
    """Cohort aggregates at each sample size (one row per n)."""

    if not sizes:
        raise exceptions.ConfigError(
            'No sample size to evaluate.',
            errors={'/sample_sizes': 'At least one sample size is required.'})

    rows = []
    for n in sorted(sizes):
        profile = pipeline.profile(n)
        aggregate = profile.aggregate()
        row = dict(n=n, count=aggregate['count'])
        for metric in profile.metrics:
            row['mean_' + metric] = aggregate[metric]['mean']
        row['mean_se_mu'] = float(profile.individuals['se_mu'].mean())
        rows.append(row)

    frame = pd.DataFrame(rows)
    widths = frame['mean_width'].to_numpy()
    if np.any(np.diff(widths) > 0):
        raise exceptions.ModelEvaluationError(
            'Mean interval widths do not decrease with the sample size.')
    return frame


def compare(pipeline):
    followup = pipeline.cohort[1]
    if followup is None:
        raise exceptions.ConfigError(
            'Model comparison needs observed follow-up.',
            errors={'/data/csv/time_column': 'Required to compare models.'})

    options = pipeline.settings['compare']
    exponential = model_compare.fit_exponential(pipeline.table, followup)
    weibull = model_compare.fit_weibull(
        pipeline.table, followup, fixed_shape=options['fixed_shape'])
    return model_compare.compare_intervals(
        exponential, weibull, pipeline.table, pipeline.horizon,
        level=pipeline.settings['level'], scale=options['scale'],
        z=pipeline.settings['z_multiplier'])


def command_run(pipeline, args):
    run(pipeline, args.out or pipeline.settings['output'])


def command_calibrate(pipeline, args):
    out_dir = args.out or pipeline.settings['output']
    report.ensure_directory(out_dir)
    report.write_json(
        pipeline.model.to_dict(), os.path.join(out_dir, 'core_model.json'))
    print(utils.canonical_json(pipeline.model.to_dict()))


def command_synth_export(pipeline, args):
    ingest.write_cohort(pipeline.table, pipeline.followup, args.target)


def command_fisher_export(pipeline, args):
    data = dict(
        unit_information=pipeline.info.to_dict(),
        core_model=pipeline.model.to_dict(),
        followup_source=pipeline.followup_source)
    if args.target:
        report.write_json(data, args.target)
    else:
        print(utils.canonical_json(data))


def command_compare(pipeline, args):
    out_dir = args.out or pipeline.settings['output']
    comparison = compare(pipeline)
    report.ensure_directory(out_dir)
    report.write_csv(
        comparison.individuals, os.path.join(out_dir, 'compare.csv'))
    report.write_json(
        comparison.to_dict(), os.path.join(out_dir, 'compare.json'))


def command_size_grid(pipeline, args):
    out_dir = args.out or pipeline.settings['output']
    frame = size_grid(pipeline, args.sizes or pipeline.settings['sample_sizes'])
    report.ensure_directory(out_dir)
    report.write_csv(frame, os.path.join(out_dir, 'size_grid.csv'))
    print(frame.to_string(index=False))


def build_parser():
    parser = argparse.ArgumentParser(
        prog='fairsurv',
        description='Sample size for precise individual risk predictions '
                    'from time-to-event prediction models.')
    parser.add_argument(
        '--version', action='version', version=fairsurv.__version__)
    verbosity = parser.add_mutually_exclusive_group()
    verbosity.add_argument('-v', '--verbose', action='store_true')
    verbosity.add_argument('-q', '--quiet', action='store_true')

    common = argparse.ArgumentParser(add_help=False)
    common.add_argument('config', help='JSON run config.')
    common.add_argument(
        '--set', dest='overrides', action='append', default=[],
        metavar='PATH=VALUE', help='Override a config field.')
    common.add_argument('--out', help='Output directory.')

    commands = parser.add_subparsers(dest='command', required=True)

    command = commands.add_parser(
        'run', parents=[common], help='Run the whole workflow.')
    command.set_defaults(handler=command_run)

    command = commands.add_parser(
        'calibrate', parents=[common], help='Calibrate the core model.')
    command.set_defaults(handler=command_calibrate)

    command = commands.add_parser(
        'compare', parents=[common],
        help='Compare exponential and Weibull intervals.')
    command.set_defaults(handler=command_compare)

    command = commands.add_parser(
        'size-grid', parents=[common],
        help='Aggregates for a list of sample sizes.')
    command.add_argument('--sizes', nargs='+', type=int)
    command.set_defaults(handler=command_size_grid)

    for name, handler, help_text, target_required in (
            ('synth', command_synth_export,
             'Export the cohort with its follow-up as CSV.', True),
            ('fisher', command_fisher_export,
             'Export the unit information matrix as JSON.', False)):
        group = commands.add_parser(name, help=help_text)
        actions = group.add_subparsers(dest='action', required=True)
        command = actions.add_parser('export', parents=[common], help=help_text)
        command.add_argument(
            'target', nargs=None if target_required else '?',
            help='Output file.')
        command.set_defaults(handler=handler)

    command = commands.add_parser(
        'synth-export', parents=[common],
        help='Same as "synth export".')
    command.add_argument('target', help='Output CSV file.')
    command.set_defaults(handler=command_synth_export)

    command = commands.add_parser(
        'export-info', parents=[common],
        help='Same as "fisher export".')
    command.add_argument('target', nargs='?', help='Output JSON file.')
    command.set_defaults(handler=command_fisher_export)

    return parser


def configure_logging(verbose=False, quiet=False):
    level = logging.INFO
    if verbose:
        level = logging.DEBUG
    elif quiet:
        level = logging.WARNING
    logging.basicConfig(level=level, format=LOG_FORMAT, stream=sys.stderr)


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    configure_logging(args.verbose, args.quiet)

    try:
        settings = config.load_config(args.config, args.overrides)
        args.handler(Pipeline(settings), args)
    except exceptions.ConfigError as e:
        logger.error('%s', e)
        for pointer, message in sorted(e.errors.items()):
            logger.error('  %s: %s', pointer, message)
        return e.exit_code
    except exceptions.FairsurvError as e:
        logger.error('%s', e)
        return e.exit_code

    return consts.EXIT_OK


if __name__ == '__main__':
    sys.exit(main())
