"""
Core model
==========

The exponential core model: each individual has a constant hazard
ηᵢ = exp(μᵢ) with

    μᵢ = α + δ·(β₁x₁ᵢ + … + β_Px_Pᵢ)

and risk by time t of Fᵢ(t) = 1 − exp(−ηᵢ·t).

The model is either given directly (α, δ, β) or calibrated: for relative
weights β, ``calibrate`` finds α and δ so the cohort mean risk at the horizon
and Harrell's C-index (computed on a simulated realization of event and
censoring times) hit their targets.
"""

import logging
from collections import namedtuple

import numpy as np
from lifelines.utils import concordance_index
from scipy import optimize

from fairsurv import consts
from fairsurv import exceptions
from fairsurv import synth


logger = logging.getLogger(__name__)


CalibrationReport = namedtuple('CalibrationReport', [
    'alpha', 'delta', 'c_index', 'overall_risk', 'iterations', 'converged',
    'simulation_size', 'censored'])


class CoreModel():

    def __init__(self, alpha, delta, beta, horizon, calibration=None):
        """Initialize the core model.

        Args:
            alpha (float): Log baseline hazard.
            delta (float): Global multiplicative factor of the weights.
            beta (array): Relative weights, one per predictor column.
            horizon (float): Prediction time point t* (> 0).
            calibration (CalibrationReport): Set when α and δ were calibrated.
        """

        if not horizon > 0:
            raise exceptions.InvalidArgumentError(
                'The horizon should be positive.')

        beta = np.array(beta, dtype=float).ravel()
        beta.setflags(write=False)
        self.alpha = float(alpha)
        self.delta = float(delta)
        self.beta = beta
        self.horizon = float(horizon)
        self.calibration = calibration

    @property
    def n_predictors(self):
        return self.beta.size

    @property
    def coefficients(self):
        """(α, δβ₁, …, δβ_P): the log-hazard regression coefficients."""

        return np.concatenate([[self.alpha], self.delta * self.beta])

    def linear_predictor(self, table):
        return linear_predictor(self, table)

    def event_rate(self, table):
        return np.exp(self.linear_predictor(table))

    def true_risk(self, table, t=None):
        return true_risk(self, table, self.horizon if t is None else t)

    def survival(self, table, t=None):
        return 1.0 - self.true_risk(table, t)

    def to_dict(self):
        values = dict(
            alpha=self.alpha, delta=self.delta, beta=self.beta.tolist(),
            horizon=self.horizon)
        if self.calibration is not None:
            values['calibration'] = dict(self.calibration._asdict())
        return values


class CalibrationTarget():

    def __init__(
            self, overall_risk, c_index, horizon,
            tolerance_risk=consts.DEFAULT_TOLERANCE_RISK,
            tolerance_c=consts.DEFAULT_TOLERANCE_C,
            max_iterations=consts.DEFAULT_MAX_ITERATIONS):

        if not 0 < overall_risk < 1:
            raise exceptions.InvalidArgumentError(
                'The overall risk should be in (0, 1).')
        if not 0.5 <= c_index < 1:
            raise exceptions.InvalidArgumentError(
                'The C-index target should be in [0.5, 1).')
        if not (tolerance_risk > 0 and tolerance_c > 0):
            raise exceptions.InvalidArgumentError(
                'Tolerances should be positive.')
        if not horizon > 0:
            raise exceptions.InvalidArgumentError(
                'The horizon should be positive.')

        self.overall_risk = float(overall_risk)
        self.c_index = float(c_index)
        self.horizon = float(horizon)
        self.tolerance_risk = float(tolerance_risk)
        self.tolerance_c = float(tolerance_c)
        self.max_iterations = int(max_iterations)


def linear_predictor(model, table):
    """μᵢ = α + δ·(β·xᵢ) for every row of the table."""

    if table.n_predictors != model.n_predictors:
        raise exceptions.InvalidArgumentError(
            'The model has {} weights but the table has {} predictors.'.format(
                model.n_predictors, table.n_predictors))
    return model.alpha + model.delta * (table.values @ model.beta)


def risk_from_mu(mu, t):
    """F(t) = 1 − exp(−exp(μ)·t)."""

    return -np.expm1(-np.exp(mu) * t)


def log_rate_from_risk(risk, t):
    """Log rate μ whose risk by time t is the given risk."""

    return np.log(-np.log1p(-np.asarray(risk, dtype=float)) / t)


def true_risk(model, table, t):
    if not t > 0:
        raise exceptions.InvalidArgumentError('The time should be positive.')
    return risk_from_mu(linear_predictor(model, table), t)


def harrell_c(mu, followup):
    """Harrell's C-index of the log rates against observed follow-up.

    Comparable pairs: i had an event and timeᵢ < timeⱼ, or i had an event, j is
    censored and timeᵢ ≤ timeⱼ. A pair is concordant when μᵢ > μⱼ; ties in μ
    count 0.5.
    """

    mu = np.asarray(mu, dtype=float)
    if mu.shape[0] != followup.n_individuals:
        raise exceptions.InvalidArgumentError(
            'One log rate is required per individual.')

    return _concordance(mu, followup.time, followup.event)


def standardized_equal_weights(table, signs):
    """Equal unit weights on standardized predictors, with directions.

    Args:
        table (PredictorTable): Table whose continuous columns are
            standardized.
        signs (list): −1 or +1 per predictor column.
    Return:
        numpy.ndarray: The weights.
    """

    signs = np.asarray(signs, dtype=float).ravel()
    if signs.size != table.n_predictors:
        raise exceptions.InvalidArgumentError(
            'One sign is required per predictor column.')
    if not np.isin(signs, (-1.0, 1.0)).all():
        raise exceptions.InvalidArgumentError('Signs should be −1 or +1.')

    for name, kind in zip(table.predictor_names, table.kinds):
        if kind == consts.CONTINUOUS and name not in table.standardization:
            raise exceptions.InvalidArgumentError(
                'Continuous predictor "{}" should be standardized.'.format(
                    name))
    return signs


def solve_alpha(scores, delta, overall_risk, horizon):
    """Intercept giving the cohort mean risk at the horizon.

    The mean risk is strictly increasing in α; it is bracketed by the closed
    form of the intercept-only model shifted by the score range.
    """

    base = float(log_rate_from_risk(overall_risk, horizon))
    shifted = delta * scores
    low, high = base - shifted.max(), base - shifted.min()
    if high - low <= 0:
        return low

    def gap(alpha):
        return risk_from_mu(alpha + shifted, horizon).mean() - overall_risk

    return optimize.brentq(gap, low, high, xtol=1e-12, rtol=1e-15)


def calibrate(
        table, beta, target, censoring, seed, censoring_free=False,
        simulation_size=None):
    """Find α and δ matching an overall risk and a C-index.

    The intercept is always solved exactly for the risk target; δ is found by
    bisection on the C-index computed over one fixed simulated realization
    (same uniforms for every candidate), which makes the objective
    deterministic.

    Args:
        table (PredictorTable): The cohort (≥ 2 rows).
        beta (array): Relative weights.
        target (CalibrationTarget): Risk and C-index targets.
        censoring (CensoringSpec): Censoring applied to the simulation.
        seed (int): Seed of the simulation.
        censoring_free (bool): Compute the C-index without censoring.
        simulation_size (int): Rows of the simulation (defaults to the cohort
            if it has at least 5000 rows, else 10000 resampled rows).
    Return:
        CoreModel
    """

    if table.n_individuals < 2:
        raise exceptions.InvalidArgumentError(
            'Calibration needs at least two individuals.')

    beta = np.asarray(beta, dtype=float).ravel()
    scores = table.values @ beta
    horizon = target.horizon
    risk = target.overall_risk

    def report(alpha, delta, c_index, iterations, converged, size):
        return CalibrationReport(
            alpha=float(alpha), delta=float(delta), c_index=c_index,
            overall_risk=float(
                risk_from_mu(alpha + delta * scores, horizon).mean()),
            iterations=iterations, converged=converged,
            simulation_size=size, censored=not censoring_free)

    if np.ptp(scores) == 0:
        if abs(target.c_index - 0.5) > target.tolerance_c:
            raise exceptions.InfeasibleTargetError(
                'A C-index of {} cannot be reached: the weights do not '
                'separate individuals.'.format(target.c_index))
        # Constant scores are absorbed by the intercept once delta is 0.
        alpha = float(log_rate_from_risk(risk, horizon))
        model = CoreModel(
            alpha, 0.0, beta, horizon,
            calibration=report(alpha, 0.0, 0.5, 0, True, 0))
        logger.info('Intercept-only calibration: alpha=%.6f.', alpha)
        return model

    sample = _simulation_rows(table.n_individuals, seed, simulation_size)
    sample_scores = scores[sample]
    rng = synth.stream(seed, consts.TAG_EVENTS)
    uniforms = synth.open_uniform(rng, sample.size)
    censor_times = (
        np.full(sample.size, np.inf) if censoring_free
        else censoring.draw(sample.size, seed))

    cache = {}

    def evaluate(delta):
        if delta not in cache:
            alpha = solve_alpha(scores, delta, risk, horizon)
            mu = alpha + delta * sample_scores
            times = -np.log(uniforms) / np.exp(mu)
            event = times <= censor_times
            followup_time = np.where(event, times, censor_times)
            c_index = _concordance(mu, followup_time, event)
            cache[delta] = (alpha, c_index)
            logger.debug(
                'Calibration delta=%.6f alpha=%.6f C=%.5f', delta, alpha,
                c_index)
        return cache[delta]

    def close(delta):
        return abs(evaluate(delta)[1] - target.c_index) <= target.tolerance_c

    def best():
        delta = min(cache, key=lambda d: abs(cache[d][1] - target.c_index))
        return delta, cache[delta]

    def finish(delta, converged=True):
        alpha, c_index = evaluate(delta)
        calibration = report(
            alpha, delta, c_index, len(cache), converged, int(sample.size))
        logger.info(
            'Calibrated core model: alpha=%.4f delta=%.4f C=%.4f risk=%.4f '
            '(%d evaluations).', alpha, delta, c_index,
            calibration.overall_risk, len(cache))
        return CoreModel(
            alpha, delta, beta, horizon, calibration=calibration)

    if close(0.0):
        return finish(0.0)

    spread = float(np.std(scores))
    low, high = 0.0, 1.0 / spread
    while evaluate(high)[1] < target.c_index:
        if close(high):
            return finish(high)
        low, high = high, high * 2.0
        if high * spread > 50.0 or len(cache) >= target.max_iterations:
            delta, (alpha, c_index) = best()
            raise exceptions.InfeasibleTargetError(
                'A C-index of {} cannot be reached with these weights '
                '(best {:.4f}).'.format(target.c_index, c_index))

    if close(high):
        return finish(high)

    while len(cache) < target.max_iterations:
        middle = 0.5 * (low + high)
        if close(middle):
            return finish(middle)
        if evaluate(middle)[1] < target.c_index:
            low = middle
        else:
            high = middle
        if high - low <= 1e-12 * max(1.0, high):
            break

    delta, (alpha, c_index) = best()
    raise exceptions.CalibrationError(
        'Calibration did not converge after {} evaluations (best C={:.4f} at '
        'alpha={:.4f}, delta={:.4f}).'.format(
            len(cache), c_index, alpha, delta),
        best=report(alpha, delta, c_index, len(cache), False, int(sample.size)))


def _simulation_rows(n, seed, simulation_size):
    if simulation_size is None and n >= consts.CALIBRATION_MIN_ROWS:
        return np.arange(n)

    size = simulation_size or consts.CALIBRATION_SIMULATION_ROWS
    if size == n:
        return np.arange(n)
    rng = synth.stream(seed, consts.TAG_RESAMPLE)
    return rng.integers(0, n, size=size)


def _concordance(mu, time, event):
    # Higher hazard means shorter survival: the scores are −μ.
    try:
        return float(concordance_index(time, -mu, event_observed=event))
    except ZeroDivisionError:
        raise exceptions.UndefinedConcordanceError(
            'There is no comparable pair to compute the C-index.')
