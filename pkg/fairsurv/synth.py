"""
Synthetic cohorts
=================

Generates a cohort when no dataset is at hand:

1. predictor values sampled independently from declared marginal
   distributions (``sample_predictors``);
2. exponential event times under a core model, by inversion
   tᵢ = −ln(U)/ηᵢ (``simulate_event_times``);
3. a censoring mechanism applied on top (``apply_censoring``).

Every operation draws from its own stream, seeded with
``SeedSequence([seed, tag])``, so that adding censoring never perturbs the
event-time draws and identical (spec, n, seed) give identical outputs.
"""

import logging
import math

import numpy as np

from fairsurv import consts
from fairsurv import exceptions
from fairsurv.ingest import FollowUp
from fairsurv.ingest import PredictorTable


logger = logging.getLogger(__name__)


def stream(seed, tag):
    """Random generator dedicated to one operation."""

    return np.random.default_rng(np.random.SeedSequence([int(seed), tag]))


class PredictorSpec():

    def __init__(self, predictors):
        """Declared predictor distributions (conditionally independent).

        Args:
            predictors (list): Items ``{name, distribution, group?}`` where
                distribution is one of:
                ``{type: normal, mean, sd}``,
                ``{type: lognormal, log_mean, log_sd}``,
                ``{type: bernoulli, p}``,
                ``{type: categorical, levels, probabilities}``.
        """

        self.predictors = [dict(predictor) for predictor in predictors]
        for predictor in self.predictors:
            self.validate(predictor)

    @staticmethod
    def validate(predictor):
        name = predictor.get('name')
        distribution = predictor.get('distribution') or {}
        kind = distribution.get('type')

        def fail(message):
            raise exceptions.SpecError(
                'Predictor "{}": {}'.format(name, message))

        if not name:
            fail('a name is required.')
        if kind == consts.NORMAL:
            if not distribution.get('sd', 0) > 0:
                fail('sd should be positive.')
        elif kind == consts.LOGNORMAL:
            if not distribution.get('log_sd', 0) > 0:
                fail('log_sd should be positive.')
        elif kind == consts.BERNOULLI:
            p = distribution.get('p')
            if p is None or not 0 <= p <= 1:
                fail('p should be in [0, 1].')
        elif kind == consts.CATEGORICAL:
            levels = distribution.get('levels') or []
            probabilities = distribution.get('probabilities') or []
            if len(levels) < 2 or len(levels) != len(probabilities):
                fail('categorical needs one probability per level (≥ 2).')
            if len(set(map(str, levels))) != len(levels):
                fail('levels should be unique.')
            if any(not 0 <= p <= 1 for p in probabilities):
                fail('probabilities should be in [0, 1].')
            if abs(math.fsum(probabilities) - 1) > 1e-9:
                fail('probabilities should sum to 1.')
        else:
            fail('unknown distribution "{}".'.format(kind))


class CensoringSpec():

    def __init__(
            self, variant=consts.CENSORING_NONE, rate=None,
            no_censor_before=None, uniform_until=None,
            administrative_max=None):
        """Censoring mechanism.

        Args:
            variant (str): none, exponential or delayed_uniform.
            rate (float): Exponential censoring rate λ per time unit.
            no_censor_before (float): Start a of the uniform window.
            uniform_until (float): End b of the uniform window.
            administrative_max (float): Everyone still followed at this time
                is censored there (defaults to uniform_until).
        """

        self.variant = variant
        self.rate = rate
        self.no_censor_before = no_censor_before
        self.uniform_until = uniform_until
        self.administrative_max = (
            uniform_until if administrative_max is None
            else administrative_max)

        if variant == consts.CENSORING_EXPONENTIAL:
            if rate is None or not rate > 0:
                raise exceptions.SpecError(
                    'Exponential censoring needs a positive rate.')
        elif variant == consts.CENSORING_DELAYED_UNIFORM:
            a, b, cap = (
                self.no_censor_before, self.uniform_until,
                self.administrative_max)
            if None in (a, b, cap) or not 0 <= a < b <= cap:
                raise exceptions.SpecError(
                    'Delayed-uniform censoring needs '
                    '0 ≤ no_censor_before < uniform_until ≤ '
                    'administrative_max.')
        elif variant != consts.CENSORING_NONE:
            raise exceptions.SpecError(
                'Unknown censoring variant "{}".'.format(variant))

    @classmethod
    def from_dict(cls, values):
        values = values or {}
        return cls(
            variant=values.get('variant') or consts.CENSORING_NONE,
            rate=values.get('rate'),
            no_censor_before=values.get('no_censor_before'),
            uniform_until=values.get('uniform_until'),
            administrative_max=values.get('administrative_max'))

    def draw(self, n, seed):
        """Censoring times for n individuals (inf when uncensored)."""

        rng = stream(seed, consts.TAG_CENSORING)
        if self.variant == consts.CENSORING_NONE:
            return np.full(n, np.inf)

        u = open_uniform(rng, n)
        if self.variant == consts.CENSORING_EXPONENTIAL:
            return -np.log(u) / self.rate

        a, b = self.no_censor_before, self.uniform_until
        return np.minimum(a + u * (b - a), self.administrative_max)


def sample_predictors(spec, n, seed):
    """Draw n rows from the declared distributions.

    Categorical predictors are expanded into k−1 indicators against their first
    level, as ``ingest`` does.

    Args:
        spec (PredictorSpec): The distributions.
        n (int): Number of individuals (≥ 1).
        seed (int): Seed of the predictor stream.
    Return:
        PredictorTable
    """

    if n < 1:
        raise exceptions.SpecError('At least one individual is required.')

    rng = stream(seed, consts.TAG_PREDICTORS)
    columns, names, kinds, groups = [], [], [], {}
    expansions = {}

    for predictor in spec.predictors:
        name = predictor['name']
        distribution = predictor['distribution']
        kind = distribution['type']

        if kind == consts.NORMAL:
            values = rng.normal(
                distribution.get('mean', 0.0), distribution['sd'], size=n)
        elif kind == consts.LOGNORMAL:
            values = rng.lognormal(
                distribution.get('log_mean', 0.0), distribution['log_sd'],
                size=n)
        elif kind == consts.BERNOULLI:
            values = (rng.random(n) < distribution['p']).astype(float)
        else:
            levels = [str(level) for level in distribution['levels']]
            probabilities = np.asarray(distribution['probabilities'], float)
            drawn = rng.choice(
                len(levels), size=n, p=probabilities / probabilities.sum())
            labels = np.asarray(levels)[drawn]
            for position, level in enumerate(levels[1:], start=1):
                columns.append((drawn == position).astype(float))
                names.append('{}{}'.format(name, level))
                kinds.append(consts.INDICATOR)
            expansions[name] = dict(
                reference_level=levels[0],
                indicators=['{}{}'.format(name, level) for level in levels[1:]])
            if predictor.get('group'):
                groups[name] = labels
            continue

        columns.append(values)
        names.append(name)
        kinds.append(
            consts.BINARY if kind == consts.BERNOULLI else consts.CONTINUOUS)
        if predictor.get('group'):
            groups[name] = values.astype(int) if kind == consts.BERNOULLI \
                else values

    values = np.column_stack(columns) if columns else np.empty((n, 0))
    provenance = dict(
        source='synthetic', rows=int(n), predictors=len(spec.predictors),
        parameters=len(names), expansions=expansions, seed=int(seed))
    logger.info(
        'Sampled %d synthetic individuals with %d parameters.', n, len(names))
    return PredictorTable(
        values, names, kinds, group_labels=groups, provenance=provenance)


def event_times_from_uniforms(model, table, uniforms):
    """Inversion tᵢ = −ln(Uᵢ)/ηᵢ with ηᵢ = exp(μᵢ)."""

    mu = model.linear_predictor(table)
    if not np.isfinite(mu).all():
        raise exceptions.ModelEvaluationError(
            'The linear predictor is not finite for every individual.')
    return -np.log(uniforms) / np.exp(mu)


def simulate_event_times(model, table, seed):
    """Exponential event times under the core model.

    Args:
        model (CoreModel): The core model.
        table (PredictorTable): The cohort.
        seed (int): Seed of the event stream.
    Return:
        numpy.ndarray: One event time per individual.
    """

    rng = stream(seed, consts.TAG_EVENTS)
    uniforms = open_uniform(rng, table.n_individuals)
    return event_times_from_uniforms(model, table, uniforms)


def apply_censoring(event_times, spec, seed):
    """Combine event times with censoring times.

    Args:
        event_times (array): Positive event times.
        spec (CensoringSpec): The censoring mechanism.
        seed (int): Seed of the censoring stream.
    Return:
        FollowUp: time = min(t, c), event = 1 iff t ≤ c.
    """

    event_times = np.asarray(event_times, dtype=float)
    if not (event_times > 0).all():
        raise exceptions.InvalidArgumentError(
            'Event times should be positive.')

    censoring = spec.draw(event_times.size, seed)
    event = event_times <= censoring
    followup = FollowUp(np.where(event, event_times, censoring), event)
    logger.debug(
        'Censoring %s applied: %d events out of %d.',
        spec.variant, int(event.sum()), event.size)
    return followup


def synthesize(spec, n, model, censoring, seed):
    """Predictors, event times and censoring in one go (each on its stream)."""

    table = sample_predictors(spec, n, seed)
    times = simulate_event_times(model, table, seed)
    return table, apply_censoring(times, censoring, seed)


def simulate_followup(model, table, censoring, seed):
    times = simulate_event_times(model, table, seed)
    return apply_censoring(times, censoring, seed)


def open_uniform(rng, n):
    # Uniform on (0, 1): random() is in [0, 1) and 0 would give an infinite
    # time.
    uniforms = rng.random(n)
    uniforms[uniforms == 0.0] = np.finfo(float).tiny
    return uniforms
