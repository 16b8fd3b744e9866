"""
Ingest
======

Loads cohort data (predictors plus optional follow-up) from CSV files and
holds it in two immutable containers:

**PredictorTable**

The n×P matrix of core predictor values, one tag per column (continuous,
binary or indicator), optional fairness-group labels and the standardization
metadata of re-scaled columns. Categorical predictors are expanded into k−1
indicator columns named ``<name><level>`` (``grade2``, ``grade3``) against a
reference level.

**FollowUp**

Observed follow-up time (minimum of event and censoring time) and the event
indicator. The log follow-up time is always derived from the time.

Missing cells are rejected, never imputed.
"""

import logging

import numpy as np
import pandas as pd
from lifelines import KaplanMeierFitter

from fairsurv import consts
from fairsurv import exceptions


logger = logging.getLogger(__name__)


class PredictorTable():

    def __init__(
            self, values, predictor_names, kinds, group_labels=None,
            standardization=None, provenance=None):
        """Initialize the table.

        Args:
            values (array): n×P matrix of predictor values.
            predictor_names (list): One name per column.
            kinds (list): One kind per column (continuous, binary, indicator).
            group_labels (dict): Fairness variable name → per-individual
                labels.
            standardization (dict): Column name → (mean, sd) used to
                standardize that column.
            provenance (dict): How the table was built (logged and reported).
        """

        values = np.array(values, dtype=float)
        if values.ndim == 1:
            values = values.reshape(-1, len(predictor_names))
        if values.ndim != 2 or values.shape[1] != len(predictor_names):
            raise exceptions.InvalidArgumentError(
                'The values should be a matrix with one column per predictor.')
        if len(kinds) != len(predictor_names):
            raise exceptions.InvalidArgumentError(
                'Each predictor needs exactly one kind.')
        if len(set(predictor_names)) != len(predictor_names):
            raise exceptions.InvalidArgumentError(
                'Predictor names should be unique.')

        missing = np.where(~np.isfinite(values).all(axis=1))[0]
        if missing.size:
            raise exceptions.DataValidationError(
                'Missing or non-finite predictor values in rows {}.'.format(
                    missing.tolist()), rows=missing.tolist())

        for position, kind in enumerate(kinds):
            if kind in (consts.BINARY, consts.INDICATOR):
                column = values[:, position]
                wrong = np.where((column != 0) & (column != 1))[0]
                if wrong.size:
                    raise exceptions.DataValidationError(
                        'Column "{}" should only contain 0 or 1 (rows {}).'
                        .format(predictor_names[position], wrong.tolist()),
                        rows=wrong.tolist())

        standardization = dict(standardization or {})
        for name, (mean, sd) in standardization.items():
            if not sd > 0:
                raise exceptions.DegenerateColumnError(
                    'Column "{}" has a non-positive standard deviation.'
                    .format(name))

        group_labels = {
            name: np.asarray(labels).astype(str)
            for name, labels in (group_labels or {}).items()}
        for name, labels in group_labels.items():
            if len(labels) != values.shape[0]:
                raise exceptions.InvalidArgumentError(
                    'Group "{}" does not have one label per individual.'
                    .format(name))

        values.setflags(write=False)
        self.values = values
        self.predictor_names = list(predictor_names)
        self.kinds = list(kinds)
        self.group_labels = group_labels
        self.standardization = standardization
        self.provenance = dict(provenance or {})

    @property
    def n_individuals(self):
        return self.values.shape[0]

    @property
    def n_predictors(self):
        return self.values.shape[1]

    def __len__(self):
        return self.n_individuals

    def design_matrix(self):
        """Rows xᵢ = (1, x₁ᵢ, …, x_Pᵢ)."""

        return np.column_stack([np.ones(self.n_individuals), self.values])

    def column(self, name):
        return self.values[:, self.index(name)]

    def index(self, name):
        try:
            return self.predictor_names.index(name)
        except ValueError:
            raise exceptions.InvalidArgumentError(
                'Unknown predictor "{}".'.format(name))

    def replace(self, values=None, standardization=None, group_labels=None):
        return PredictorTable(
            self.values if values is None else values,
            self.predictor_names, self.kinds,
            group_labels=(
                self.group_labels if group_labels is None else group_labels),
            standardization=(
                self.standardization if standardization is None
                else standardization),
            provenance=self.provenance)

    def take(self, indices):
        """Table made of the given rows (repeats allowed)."""

        indices = np.asarray(indices, dtype=int)
        return PredictorTable(
            self.values[indices], self.predictor_names, self.kinds,
            group_labels={
                name: labels[indices]
                for name, labels in self.group_labels.items()},
            standardization=self.standardization,
            provenance=self.provenance)

    def frame(self):
        frame = pd.DataFrame(self.values, columns=self.predictor_names)
        for name, labels in self.group_labels.items():
            if name not in frame.columns:
                frame[name] = labels
        return frame


class FollowUp():

    def __init__(self, time, event):
        """Initialize the follow-up.

        Args:
            time (array): Observed follow-up time, > 0.
            event (array): 1 for an event, 0 for a censored individual.
        """

        time = np.array(time, dtype=float).ravel()
        event = np.array(event, dtype=float).ravel()
        if time.shape != event.shape:
            raise exceptions.InvalidArgumentError(
                'Time and event should have the same length.')

        wrong = np.where(~(np.isfinite(time) & (time > 0)))[0]
        if wrong.size:
            raise exceptions.DataValidationError(
                'Follow-up time should be positive (rows {}).'.format(
                    wrong.tolist()), rows=wrong.tolist())

        wrong = np.where((event != 0) & (event != 1))[0]
        if wrong.size:
            raise exceptions.DataValidationError(
                'Event indicator should be 0 or 1 (rows {}).'.format(
                    wrong.tolist()), rows=wrong.tolist())

        time.setflags(write=False)
        event = event.astype(int)
        event.setflags(write=False)
        self.time = time
        self.event = event

    @property
    def log_time(self):
        return np.log(self.time)

    @property
    def n_individuals(self):
        return self.time.shape[0]

    def __len__(self):
        return self.n_individuals

    def take(self, indices):
        indices = np.asarray(indices, dtype=int)
        return FollowUp(self.time[indices], self.event[indices])


def load_cohort(path, schema):
    """Load and validate a cohort CSV.

    Args:
        path (str): CSV file (comma separated, header row, UTF-8).
        schema (dict): Column mapping: ``predictors`` (list of ``name``,
            ``kind``, optional ``reference_level`` and ``levels``), optional
            ``time_column``, ``event_column``, ``time_scale_divisor`` and
            ``group_columns``.
    Return:
        tuple: (PredictorTable, FollowUp or None)
    """

    try:
        frame = pd.read_csv(path, encoding='utf-8')
    except FileNotFoundError:
        raise exceptions.SchemaError('File "{}" does not exist.'.format(path))
    except IsADirectoryError:
        raise exceptions.SchemaError('"{}" is a directory.'.format(path))
    except (UnicodeDecodeError, pd.errors.EmptyDataError,
            pd.errors.ParserError) as e:
        raise exceptions.DataValidationError(
            'File "{}" is not a readable UTF-8 CSV: {}'.format(path, e))

    predictors = schema.get('predictors') or []
    time_column = schema.get('time_column')
    event_column = schema.get('event_column')
    group_columns = list(schema.get('group_columns') or [])

    expected = [predictor['name'] for predictor in predictors]
    expected += [name for name in (time_column, event_column) if name]
    expected += group_columns
    missing = [name for name in expected if name not in frame.columns]
    if missing:
        raise exceptions.SchemaError(
            'Missing columns in "{}": {}.'.format(path, ', '.join(missing)))

    used = frame[list(dict.fromkeys(expected))]
    empty = np.where(used.isna().any(axis=1).to_numpy())[0]
    if empty.size:
        raise exceptions.DataValidationError(
            'Missing cells in rows {}.'.format(empty.tolist()),
            rows=empty.tolist())

    columns = []
    names = []
    kinds = []
    expansions = {}
    bad_rows = set()

    for predictor in predictors:
        name = predictor['name']
        kind = predictor['kind']
        raw = frame[name]

        if kind == consts.CATEGORICAL:
            labels = _labels(raw)
            levels = [str(level) for level in (
                predictor.get('levels') or sorted(set(labels), key=_level_key))]
            unknown = np.where(~np.isin(labels, levels))[0]
            if unknown.size:
                bad_rows.update(unknown.tolist())
                continue

            reference = predictor.get('reference_level')
            reference = levels[0] if reference is None else str(reference)
            if reference not in levels:
                raise exceptions.SchemaError(
                    'Reference level "{}" is not a level of "{}".'.format(
                        reference, name))

            indicators = []
            for level in levels:
                if level == reference:
                    continue
                columns.append((labels == level).astype(float))
                names.append('{}{}'.format(name, level))
                kinds.append(consts.INDICATOR)
                indicators.append(names[-1])
            expansions[name] = dict(
                reference_level=reference, indicators=indicators)
            continue

        numeric = pd.to_numeric(raw, errors='coerce').to_numpy(dtype=float)
        wrong = np.where(~np.isfinite(numeric))[0]
        if wrong.size:
            bad_rows.update(wrong.tolist())
            continue
        columns.append(numeric)
        names.append(name)
        kinds.append(kind)

    followup = None
    if time_column and event_column:
        divisor = float(schema.get('time_scale_divisor') or 1.0)
        time = pd.to_numeric(frame[time_column], errors='coerce').to_numpy(
            dtype=float) / divisor
        event = pd.to_numeric(frame[event_column], errors='coerce').to_numpy(
            dtype=float)
        wrong = np.where(
            ~(np.isfinite(time) & (time > 0))
            | ~np.isin(event, (0.0, 1.0)))[0]
        bad_rows.update(wrong.tolist())
        if not bad_rows:
            followup = FollowUp(time, event)

    if bad_rows:
        rows = sorted(bad_rows)
        raise exceptions.DataValidationError(
            'Invalid values in rows {}.'.format(rows), rows=rows)

    values = (
        np.column_stack(columns) if columns
        else np.empty((len(frame), 0)))
    provenance = dict(
        source=str(path), rows=int(len(frame)), predictors=len(predictors),
        parameters=len(names), expansions=expansions)
    table = PredictorTable(
        values, names, kinds,
        group_labels={name: _labels(frame[name]) for name in group_columns},
        provenance=provenance)

    logger.info(
        'Loaded %d rows from %s: %d predictors expanded to %d parameters.',
        provenance['rows'], path, provenance['predictors'],
        provenance['parameters'])
    for name, expansion in expansions.items():
        logger.info(
            'Categorical "%s" expanded to %s (reference level %s).',
            name, expansion['indicators'], expansion['reference_level'])

    return table, followup


def standardize(table, columns):
    """Replace continuous columns by (x − mean)/SD (sample SD).

    Args:
        table (PredictorTable): The table.
        columns (list): Names of continuous columns.
    Return:
        PredictorTable: A new table with the metadata stored.
    """

    values = np.array(table.values)
    standardization = dict(table.standardization)

    for name in columns:
        position = table.index(name)
        if table.kinds[position] != consts.CONTINUOUS:
            raise exceptions.InvalidArgumentError(
                'Only continuous columns can be standardized ("{}").'.format(
                    name))

        column = values[:, position]
        mean = float(np.mean(column))
        sd = float(np.std(column, ddof=1)) if column.size > 1 else 0.0
        if not sd > 0:
            raise exceptions.DegenerateColumnError(
                'Column "{}" has a zero standard deviation.'.format(name))
        values[:, position] = (column - mean) / sd

        # Compose with a previous standardization so un-standardizing goes
        # back to the original scale.
        if name in standardization:
            previous_mean, previous_sd = standardization[name]
            mean, sd = previous_mean + mean * previous_sd, previous_sd * sd
        standardization[name] = (mean, sd)
        logger.debug('Standardized "%s" (mean %g, sd %g).', name, mean, sd)

    return table.replace(values=values, standardization=standardization)


def unstandardize(table, columns):
    values = np.array(table.values)
    standardization = dict(table.standardization)

    for name in columns:
        if name not in standardization:
            raise exceptions.InvalidArgumentError(
                'Column "{}" is not standardized.'.format(name))
        mean, sd = standardization.pop(name)
        position = table.index(name)
        values[:, position] = values[:, position] * sd + mean

    return table.replace(values=values, standardization=standardization)


def followup_summary(followup, horizon):
    """Summarize follow-up: person-time, event rate and Kaplan-Meier risk.

    Args:
        followup (FollowUp): The follow-up.
        horizon (float): Time point t* of the Kaplan-Meier risk.
    Return:
        dict
    """

    time = followup.time
    event = followup.event.astype(bool)
    person_time = float(time.sum())

    kmf = KaplanMeierFitter()
    kmf.fit(durations=time, event_observed=event)
    survival = float(kmf.survival_function_at_times(horizon).iloc[0])

    return dict(
        n=int(time.size),
        events=int(event.sum()),
        censored=int((~event).sum()),
        person_time=person_time,
        event_rate=float(event.sum()) / person_time,
        mean_followup=float(time.mean()),
        mean_followup_censored=(
            float(time[~event].mean()) if (~event).any() else None),
        mean_followup_events=float(time[event].mean()) if event.any() else None,
        max_followup=float(time.max()),
        km_risk_at_horizon=1.0 - survival)


def write_cohort(table, followup, path):
    """Write a cohort in the layout ``load_cohort`` reads.

    Categorical predictors are written as their indicator columns (declared
    ``binary`` when read back); group labels are appended as extra columns.
    """

    frame = table.frame()
    if followup is not None:
        frame['time'] = followup.time
        frame['event'] = followup.event
    frame.to_csv(path, index=False, float_format='%.17g')
    logger.info('Wrote %d rows to %s.', len(frame), path)
    return frame


def cohort_schema(table, followup):
    """Column mapping matching ``write_cohort`` output."""

    schema = dict(
        predictors=[
            dict(name=name, kind=(
                consts.BINARY if kind == consts.INDICATOR else kind))
            for name, kind in zip(table.predictor_names, table.kinds)],
        group_columns=list(table.group_labels))
    if followup is not None:
        schema.update(time_column='time', event_column='event')
    return schema


def _labels(column):
    labels = column.astype(str).to_numpy()
    # Integral floats read from CSV (2.0) label the same level as 2.
    return np.array([
        label[:-2] if label.endswith('.0') else label for label in labels])


def _level_key(level):
    try:
        return (0, float(level), level)
    except ValueError:
        return (1, 0.0, level)
