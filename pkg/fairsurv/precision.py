"""
Precision
=========

Anticipated precision of individual risk estimates for a development sample
of size n (Option A):

- var(μ̂_new) = n⁻¹ x_new I⁻¹ x′_new;
- a normal interval on the log rate, mapped to the risk scale at t;
- the probability that the estimate falls on the other side of a risk
  threshold (closed form);
- the mean absolute (and root mean squared) prediction error, by sampling the
  uncertainty distribution;
- the expected loss in net benefit at the threshold.
"""

import logging
from collections import namedtuple

import numpy as np
import pandas as pd
from scipy.stats import norm

from fairsurv import consts
from fairsurv import exceptions
from fairsurv import synth
from fairsurv.core_model import log_rate_from_risk
from fairsurv.core_model import risk_from_mu
from fairsurv.fisher import unit_information


logger = logging.getLogger(__name__)

METRICS = ('width', 'mape', 'rmspe')
SAMPLING_CHUNK_ROWS = 1024


IndividualPrecision = namedtuple('IndividualPrecision', [
    'mu', 'se_mu', 'true_risk', 'interval', 'width', 'mape', 'rmspe',
    'misclass_prob', 'nb_loss'])


def z_value(level=consts.DEFAULT_LEVEL, multiplier=None):
    """Normal quantile of a two-sided level (or a fixed multiplier)."""

    if multiplier is not None:
        return float(multiplier)
    if not 0 < level < 1:
        raise exceptions.InvalidArgumentError(
            'The confidence level should be in (0, 1).')
    return float(norm.ppf(0.5 + level / 2.0))


def prediction_variance(info, x_new, n):
    """var(μ̂_new) for one row or every row of a matrix (intercept first)."""

    if not n >= 1:
        raise exceptions.InvalidArgumentError(
            'The sample size should be at least 1.')
    return info.quadratic_form(x_new) / n


def risk_interval(mu, se_mu, t, level=consts.DEFAULT_LEVEL, z=None):
    """Risk-scale interval from μ ∓ z·se mapped through F.

    Return:
        tuple: (lower, upper), scalars or arrays like the inputs.
    """

    if np.any(np.asarray(se_mu) < 0):
        raise exceptions.InvalidArgumentError(
            'Standard errors should be non-negative.')
    if not t > 0:
        raise exceptions.InvalidArgumentError('The time should be positive.')

    z = z_value(level) if z is None else z
    mu = np.asarray(mu, dtype=float)
    se_mu = np.asarray(se_mu, dtype=float)
    lower = risk_from_mu(mu - z * se_mu, t)
    upper = risk_from_mu(mu + z * se_mu, t)
    if lower.ndim == 0:
        return float(lower), float(upper)
    return lower, upper


def misclassification_probability(mu, se_mu, t, threshold):
    """Mass of N(μ, se²) on the other side of the threshold's log rate.

    Return:
        float or array in [0, 1]; 0 when se is 0.
    """

    if not 0 < threshold < 1:
        raise exceptions.InvalidArgumentError(
            'The risk threshold should be in (0, 1).')

    mu = np.asarray(mu, dtype=float)
    se_mu = np.asarray(se_mu, dtype=float)
    mu_z = float(log_rate_from_risk(threshold, t))
    positive = se_mu > 0
    safe = np.where(positive, se_mu, 1.0)
    score = (mu_z - mu) / safe
    below = risk_from_mu(mu, t) < threshold
    probability = np.where(below, norm.sf(score), norm.cdf(score))
    probability = np.where(positive, probability, 0.0)
    return float(probability) if probability.ndim == 0 else probability


def prediction_errors(
        mu, se_mu, t, draws=consts.DEFAULT_MAPE_DRAWS, seed=consts.SEED_MAPE):
    """MAPE and RMSPE of sampled risks around the true risk.

    Standard-normal draws come from one stream, chunk by chunk, so the result
    only depends on the seed and the row order.

    Return:
        tuple: (mape, rmspe), arrays with one value per individual.
    """

    if draws < 1:
        raise exceptions.InvalidArgumentError(
            'At least one draw is required.')

    mu = np.atleast_1d(np.asarray(mu, dtype=float))
    se_mu = np.broadcast_to(
        np.asarray(se_mu, dtype=float), mu.shape).astype(float)
    rng = synth.stream(seed, consts.TAG_MAPE)
    mape = np.empty(mu.shape)
    rmspe = np.empty(mu.shape)

    for start in range(0, mu.size, SAMPLING_CHUNK_ROWS):
        stop = min(start + SAMPLING_CHUNK_ROWS, mu.size)
        normals = rng.standard_normal((stop - start, draws))
        centre = mu[start:stop, None]
        sampled = risk_from_mu(centre + se_mu[start:stop, None] * normals, t)
        differences = sampled - risk_from_mu(centre, t)
        mape[start:stop] = np.abs(differences).mean(axis=1)
        rmspe[start:stop] = np.sqrt((differences ** 2).mean(axis=1))

    return mape, rmspe


def mape(mu, se_mu, t, draws=consts.DEFAULT_MAPE_DRAWS, seed=consts.SEED_MAPE):
    errors = prediction_errors(mu, se_mu, t, draws=draws, seed=seed)[0]
    return float(errors[0]) if np.ndim(mu) == 0 else errors


def rmspe(mu, se_mu, t, draws=consts.DEFAULT_MAPE_DRAWS, seed=consts.SEED_MAPE):
    errors = prediction_errors(mu, se_mu, t, draws=draws, seed=seed)[1]
    return float(errors[0]) if np.ndim(mu) == 0 else errors


def net_benefit_loss(true_risk, misclass_prob, threshold):
    """Δ = P(misclassification)·|p − (1 − p)·z/(1 − z)|."""

    if not 0 < threshold < 1:
        raise exceptions.InvalidArgumentError(
            'The risk threshold should be in (0, 1).')
    p = np.asarray(true_risk, dtype=float)
    odds = threshold / (1.0 - threshold)
    loss = np.asarray(misclass_prob, dtype=float) * np.abs(p - (1.0 - p) * odds)
    return float(loss) if loss.ndim == 0 else loss


def misclass_column(threshold):
    return 'misclass@{:g}'.format(threshold)


def nb_loss_column(threshold):
    return 'nb_loss@{:g}'.format(threshold)


class PrecisionReport():

    def __init__(
            self, individuals, n, horizon, level, thresholds,
            group_labels=None):
        """Per-individual precision at one sample size.

        Args:
            individuals (DataFrame): One row per individual (mu, se_mu,
                true_risk, lower, upper, width, mape, rmspe, misclass@z,
                nb_loss@z).
            n (int): Development sample size.
            horizon (float): Time point t*.
            level (float): Confidence level of the intervals.
            thresholds (list): Risk thresholds.
            group_labels (dict): Fairness labels aligned with the rows.
        """

        self.individuals = individuals
        self.n = int(n)
        self.horizon = float(horizon)
        self.level = float(level)
        self.thresholds = list(thresholds)
        self.group_labels = {
            name: np.asarray(labels)
            for name, labels in (group_labels or {}).items()}

    def __len__(self):
        return len(self.individuals)

    @property
    def metrics(self):
        columns = list(METRICS)
        for threshold in self.thresholds:
            columns += [misclass_column(threshold), nb_loss_column(threshold)]
        return columns

    def individual(self, position):
        row = self.individuals.iloc[position]
        return IndividualPrecision(
            mu=row['mu'], se_mu=row['se_mu'], true_risk=row['true_risk'],
            interval=(row['lower'], row['upper']), width=row['width'],
            mape=row['mape'], rmspe=row['rmspe'],
            misclass_prob={
                z: row[misclass_column(z)] for z in self.thresholds},
            nb_loss={z: row[nb_loss_column(z)] for z in self.thresholds})

    def subset(self, mask):
        mask = np.asarray(mask, dtype=bool)
        return PrecisionReport(
            self.individuals.loc[mask].reset_index(drop=True), self.n,
            self.horizon, self.level, self.thresholds,
            group_labels={
                name: labels[mask]
                for name, labels in self.group_labels.items()})

    def aggregate(self, mask=None):
        """mean/min/median/max of every metric (plus sum for NB loss)."""

        frame = self.individuals
        if mask is not None:
            frame = frame.loc[np.asarray(mask, dtype=bool)]
        if frame.empty:
            raise exceptions.EmptyScopeError('No individual to summarize.')

        summary = dict(count=int(len(frame)))
        for column in self.metrics:
            values = frame[column].to_numpy()
            summary[column] = dict(
                mean=float(values.mean()), min=float(values.min()),
                median=float(np.median(values)), max=float(values.max()))
            if column.startswith('nb_loss'):
                summary[column]['sum'] = float(values.sum())
        return summary

    def to_dict(self):
        return dict(
            n=self.n, horizon=self.horizon, level=self.level,
            thresholds=self.thresholds, aggregates=self.aggregate())


def precision_profile(
        model, table, followup=None, n=None, thresholds=(),
        level=consts.DEFAULT_LEVEL, info=None, draws=consts.DEFAULT_MAPE_DRAWS,
        seed=consts.SEED_MAPE, z=None):
    """Option A: expected precision for every individual at sample size n.

    Args:
        model (CoreModel): Core model (assumed true).
        table (PredictorTable): Individuals to profile.
        followup (FollowUp): Follow-up used for the unit information (not
            needed when ``info`` is given).
        n (int): Development sample size.
        thresholds (list): Risk thresholds for misclassification.
        level (float): Confidence level.
        info (UnitInformation): Precomputed unit information.
        draws (int): Draws per individual for MAPE/RMSPE.
        seed (int): Seed of the MAPE draws.
        z (float): Fixed multiplier instead of the exact normal quantile.
    Return:
        PrecisionReport
    """

    if n is None or not n >= 1:
        raise exceptions.InvalidArgumentError(
            'The sample size should be at least 1.')
    if info is None:
        if followup is None:
            raise exceptions.InvalidArgumentError(
                'Either the follow-up or the unit information is required.')
        info = unit_information(model, table, followup)

    t = model.horizon
    z = z_value(level) if z is None else z
    mu = model.linear_predictor(table)
    se_mu = np.sqrt(prediction_variance(info, table.design_matrix(), n))
    risk = risk_from_mu(mu, t)
    lower, upper = risk_interval(mu, se_mu, t, z=z)
    mape_values, rmspe_values = prediction_errors(
        mu, se_mu, t, draws=draws, seed=seed)

    columns = dict(
        mu=mu, se_mu=se_mu, true_risk=risk, lower=lower, upper=upper,
        width=upper - lower, mape=mape_values, rmspe=rmspe_values)
    for threshold in thresholds:
        misclass = misclassification_probability(mu, se_mu, t, threshold)
        columns[misclass_column(threshold)] = misclass
        columns[nb_loss_column(threshold)] = net_benefit_loss(
            risk, misclass, threshold)

    individuals = pd.DataFrame(columns)
    report = PrecisionReport(
        individuals, n, t, level, thresholds, group_labels=table.group_labels)
    logger.info(
        'n=%d: mean width %.4f, mean MAPE %.4f.', n,
        float(individuals['width'].mean()), float(individuals['mape'].mean()))
    return report
