"""
Sample size
===========

Option B: the development sample size that achieves a target precision.
Inverting var(μ̂_new) = n⁻¹ x_new I⁻¹ x′_new gives, for one individual,

    n = x_new I⁻¹ x′_new / var(μ̂_new)

The allowed variance comes from a maximum interval width on the risk scale,
chosen per individual from a small table of (risk level, maximum width) bins:
each individual takes the bin whose risk level is closest to their true risk.
The governing sample size is the largest requirement over the individuals in
scope.
"""

import logging

import numpy as np
import pandas as pd

from fairsurv import consts
from fairsurv import exceptions
from fairsurv import precision
from fairsurv.core_model import log_rate_from_risk
from fairsurv.core_model import risk_from_mu
from fairsurv.fisher import unit_information


logger = logging.getLogger(__name__)

BISECTION_STEPS = 200
MEAN_METRICS = ('width', 'mape', 'misclass')


class PrecisionTargets():

    def __init__(self, bins, scope=None):
        """Maximum interval widths by risk level.

        Args:
            bins (list): (risk level, maximum width) pairs, or dicts with
                ``risk`` and ``max_width``; risk levels strictly increasing.
            scope (dict): Optional ``max_true_risk``, ``min_true_risk`` and
                ``group`` (``{column, level}``) restricting the individuals
                the targets apply to.
        """

        pairs = []
        for item in bins:
            if isinstance(item, dict):
                item = (item.get('risk'), item.get('max_width'))
            pairs.append((float(item[0]), float(item[1])))

        if not pairs:
            raise exceptions.InvalidArgumentError(
                'At least one precision target is required.')
        risks = [risk for risk, _ in pairs]
        if any(not 0 < risk < 1 for risk in risks):
            raise exceptions.InvalidArgumentError(
                'Target risk levels should be in (0, 1).')
        if any(a >= b for a, b in zip(risks, risks[1:])):
            raise exceptions.InvalidArgumentError(
                'Target risk levels should be strictly increasing.')
        if any(not 0 < width < 1 for _, width in pairs):
            raise exceptions.InvalidArgumentError(
                'Target widths should be in (0, 1).')

        self.bins = pairs
        self.scope = dict(scope or {})

    @property
    def risks(self):
        return np.array([risk for risk, _ in self.bins])

    @property
    def widths(self):
        return np.array([width for _, width in self.bins])

    @classmethod
    def from_dict(cls, values):
        return cls(values['bins'], scope=values.get('scope'))

    def to_dict(self):
        return dict(
            bins=[dict(risk=risk, max_width=width) for risk, width in self.bins],
            scope=self.scope)

    def assign(self, true_risk):
        """Position of the closest bin for every risk (ties go to the lower
        bin)."""

        distances = np.abs(
            np.asarray(true_risk, dtype=float)[:, None] - self.risks[None, :])
        return np.argmin(distances, axis=1)


def interval_width(mu, se_mu, t, z):
    lower = risk_from_mu(mu - z * se_mu, t)
    upper = risk_from_mu(mu + z * se_mu, t)
    return upper - lower


def variance_target_from_width(
        risk, width, t, level=consts.DEFAULT_LEVEL, z=None):
    """var(μ̂) giving a risk-scale interval of the given width.

    The interval is centred on the log rate of the risk; its width is strictly
    increasing in the standard error, which is found by bisection.

    Args:
        risk (float or array): True risk F(t) in (0, 1).
        width (float or array): Target width w.
        t (float): Time point.
        level (float): Confidence level.
        z (float): Fixed multiplier instead of the exact normal quantile.
    Return:
        float or array: The variance target.
    Exception:
        InfeasibleTargetError: If the width cannot be reached.
    """

    risk = np.asarray(risk, dtype=float)
    width = np.broadcast_to(np.asarray(width, dtype=float), risk.shape)
    if np.any(width <= 0):
        raise exceptions.InvalidArgumentError(
            'Target widths should be positive.')
    if np.any((risk <= 0) | (risk >= 1)):
        raise exceptions.InvalidArgumentError('Risks should be in (0, 1).')

    z = precision.z_value(level) if z is None else z
    mu = log_rate_from_risk(risk, t)

    widest = interval_width(mu, consts.MAX_LOG_RATE_SE, t, z)
    infeasible = (width >= 1) | (width >= widest)
    if np.any(infeasible):
        position = int(np.argmax(infeasible))
        raise exceptions.InfeasibleTargetError(
            'A width of {:g} cannot be reached at a risk of {:g} (largest '
            'attainable {:g}).'.format(
                float(width.flat[position]), float(risk.flat[position]),
                float(np.ravel(widest)[position])))

    low = np.zeros(risk.shape)
    high = np.full(risk.shape, consts.MAX_LOG_RATE_SE)
    for _ in range(BISECTION_STEPS):
        middle = 0.5 * (low + high)
        wide = interval_width(mu, middle, t, z) >= width
        high = np.where(wide, middle, high)
        low = np.where(wide, low, middle)
        if np.all(high - low <= 1e-15 * np.maximum(1.0, high)):
            break

    se = 0.5 * (low + high)
    variance = se ** 2
    return float(variance) if variance.ndim == 0 else variance


def required_n(info, x_new, target_variance):
    """n = x I⁻¹ x′ / var, rounded up (at least 1)."""

    target_variance = np.asarray(target_variance, dtype=float)
    if np.any(target_variance <= 0):
        raise exceptions.InvalidArgumentError(
            'The target variance should be positive.')

    n = np.maximum(1.0, np.ceil(info.quadratic_form(x_new) / target_variance))
    if n.ndim == 0:
        return int(n)
    return n.astype(np.int64)


def scope_mask(table, true_risk, scope):
    """Individuals a target applies to."""

    scope = scope or {}
    mask = np.ones(table.n_individuals, dtype=bool)
    if scope.get('max_true_risk') is not None:
        mask &= true_risk <= scope['max_true_risk']
    if scope.get('min_true_risk') is not None:
        mask &= true_risk >= scope['min_true_risk']

    group = scope.get('group')
    if group:
        column = group['column']
        if column not in table.group_labels:
            raise exceptions.InvalidArgumentError(
                'Unknown group column "{}".'.format(column))
        mask &= table.group_labels[column] == str(group['level'])

    if not mask.any():
        raise exceptions.EmptyScopeError(
            'No individual falls in the target scope {}.'.format(scope))
    return mask


class SampleSizeResult():

    def __init__(self, n_star, individuals, binding, bins, targets):
        """Outcome of ``cohort_required_n``.

        Args:
            n_star (int): Governing sample size.
            individuals (DataFrame): Per-individual requirement.
            binding (DataFrame): Individuals with the largest requirement,
                with their predictor values.
            bins (DataFrame): Per-bin summary.
            targets (PrecisionTargets): The targets.
        """

        self.n_star = int(n_star)
        self.individuals = individuals
        self.binding = binding
        self.bins = bins
        self.targets = targets

    def to_dict(self):
        scoped = self.individuals.loc[self.individuals['in_scope']]
        required = scoped['required_n'].to_numpy(dtype=float)
        return dict(
            n_star=self.n_star,
            targets=self.targets.to_dict(),
            in_scope=int(len(scoped)),
            required_n=dict(
                min=float(required.min()), median=float(np.median(required)),
                mean=float(required.mean()), max=float(required.max())),
            bins=self.bins.to_dict(orient='records'),
            binding=self.binding.to_dict(orient='records'))


def cohort_required_n(
        model, table, followup, targets, level=consts.DEFAULT_LEVEL,
        info=None, z=None):
    """Option B: the sample size meeting every target in scope.

    Args:
        model (CoreModel): Core model (assumed true).
        table (PredictorTable): The cohort.
        followup (FollowUp): Follow-up for the unit information (not needed
            when ``info`` is given).
        targets (PrecisionTargets): Width targets and scope.
        level (float): Confidence level.
        info (UnitInformation): Precomputed unit information.
        z (float): Fixed multiplier instead of the exact normal quantile.
    Return:
        SampleSizeResult
    """

    if info is None:
        info = unit_information(model, table, followup)

    t = model.horizon
    true_risk = model.true_risk(table)
    mask = scope_mask(table, true_risk, targets.scope)
    positions = targets.assign(true_risk)
    max_width = targets.widths[positions]

    design = table.design_matrix()
    variance = np.full(table.n_individuals, np.nan)
    needed = np.full(table.n_individuals, np.nan)
    variance[mask] = variance_target_from_width(
        true_risk[mask], max_width[mask], t, level=level, z=z)
    needed[mask] = required_n(info, design[mask], variance[mask])

    individuals = pd.DataFrame(dict(
        true_risk=true_risk,
        bin_risk=targets.risks[positions],
        max_width=max_width,
        target_variance=variance,
        required_n=needed,
        in_scope=mask))

    n_star = int(np.nanmax(needed))
    order = np.argsort(-np.where(mask, needed, -np.inf), kind='stable')
    top = order[:min(consts.BINDING_INDIVIDUALS, int(mask.sum()))]
    binding = table.frame().iloc[top].reset_index().rename(
        columns={'index': 'row'})
    binding['true_risk'] = true_risk[top]
    binding['required_n'] = needed[top].astype(np.int64)

    rows = []
    for position, (risk, width) in enumerate(targets.bins):
        selected = mask & (positions == position)
        values = needed[selected]
        rows.append(dict(
            risk=risk, max_width=width, count=int(selected.sum()),
            max_n=int(values.max()) if values.size else None,
            mean_n=float(values.mean()) if values.size else None))
    bins = pd.DataFrame(rows)

    logger.info(
        'Required sample size %d (%d individuals in scope).', n_star,
        int(mask.sum()))
    return SampleSizeResult(n_star, individuals, binding, bins, targets)


def required_n_for_mean(
        model, table, followup, metric, target, threshold=None, scope=None,
        level=consts.DEFAULT_LEVEL, info=None, draws=consts.DEFAULT_MAPE_DRAWS,
        seed=consts.SEED_MAPE, z=None):
    """Smallest n whose mean width, MAPE or misclassification meets a target.

    The mean is taken over the individuals in scope; the search is an integer
    bisection on [1, 10⁹]. MAPE reuses the same draws at every n, so it
    decreases with n like the other metrics.

    Return:
        int
    """

    if metric not in MEAN_METRICS:
        raise exceptions.InvalidArgumentError(
            'The metric should be one of {}.'.format(MEAN_METRICS))
    if metric == 'misclass' and threshold is None:
        raise exceptions.InvalidArgumentError(
            'A risk threshold is required for misclassification.')
    if not target > 0:
        raise exceptions.InvalidArgumentError('The target should be positive.')
    if info is None:
        info = unit_information(model, table, followup)

    t = model.horizon
    z = precision.z_value(level) if z is None else z
    mu = model.linear_predictor(table)
    mask = scope_mask(table, risk_from_mu(mu, t), scope)
    mu = mu[mask]
    quadratic = info.quadratic_form(table.design_matrix()[mask])

    def mean_metric(n):
        se = np.sqrt(quadratic / n)
        if metric == 'width':
            values = interval_width(mu, se, t, z)
        elif metric == 'mape':
            values = precision.prediction_errors(
                mu, se, t, draws=draws, seed=seed)[0]
        else:
            values = precision.misclassification_probability(
                mu, se, t, threshold)
        return float(np.mean(values))

    if mean_metric(1) <= target:
        return 1
    if mean_metric(consts.MAX_SAMPLE_SIZE) > target:
        raise exceptions.InfeasibleTargetError(
            'A mean {} of {:g} is not reached below n = {}.'.format(
                metric, target, consts.MAX_SAMPLE_SIZE))

    low, high = 1, consts.MAX_SAMPLE_SIZE
    while high - low > 1:
        middle = (low + high) // 2
        if mean_metric(middle) <= target:
            high = middle
        else:
            low = middle

    logger.info('Mean %s of %g reached at n=%d.', metric, target, high)
    return high
