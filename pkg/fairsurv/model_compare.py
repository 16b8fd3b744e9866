"""
Model comparison
================

Robustness check of the exponential assumption: exponential and Weibull
(accelerated failure time) regressions are fitted to an observed cohort by
maximum likelihood, and the per-individual risk intervals of the two fits are
compared.

Exponential, log-hazard scale, μ = xβ:

    ℓ(β) = Σ dμ − t·exp(μ)

Weibull AFT with location γ and shape k = exp(s), z = k·(ln t − xγ):

    ℓ(γ, s) = Σ d(s − ln t + z) − exp(z)

With k = 1 and γ = −β both log-likelihoods are identical.
"""

import logging

import numpy as np
import pandas as pd
from scipy import linalg

from fairsurv import consts
from fairsurv import exceptions
from fairsurv import precision
from fairsurv.core_model import risk_from_mu
from fairsurv.fisher import UnitInformation


logger = logging.getLogger(__name__)

MAX_STEP_HALVINGS = 60
DIFFERENCE_STEP = 1e-5


class FittedSurvivalModel():

    def __init__(
            self, family, coefficients, ancillary, covariance, loglik,
            converged, iterations, names=None):
        """A fitted parametric survival model.

        Args:
            family (str): exponential or weibull.
            coefficients (array): Intercept and slopes (log-hazard scale for
                the exponential, AFT location for the Weibull).
            ancillary (float): Weibull shape k (None for the exponential).
            covariance (array): Covariance of the parameters; for the Weibull
                the last row/column is the log shape.
            loglik (float): Maximized log-likelihood.
            converged (bool): If Newton-Raphson converged.
            iterations (int): Newton iterations.
            names (list): Parameter names (intercept first).
        """

        self.family = family
        self.coefficients = np.asarray(coefficients, dtype=float)
        self.ancillary = None if ancillary is None else float(ancillary)
        self.covariance = np.asarray(covariance, dtype=float)
        self.loglik = float(loglik)
        self.converged = bool(converged)
        self.iterations = int(iterations)
        self.names = list(names or [])

    @property
    def parameters(self):
        if self.family == consts.WEIBULL:
            return np.append(self.coefficients, np.log(self.ancillary))
        return self.coefficients

    def risk(self, table, t):
        design = table.design_matrix()
        if self.family == consts.WEIBULL:
            return weibull_risk(self.parameters, design, t)
        return risk_from_mu(design @ self.coefficients, t)

    def to_dict(self):
        return dict(
            family=self.family,
            names=self.names,
            coefficients=self.coefficients.tolist(),
            ancillary=self.ancillary,
            standard_errors=np.sqrt(np.diag(self.covariance)).tolist(),
            loglik=self.loglik,
            converged=self.converged,
            iterations=self.iterations)


def exponential_loglik(beta, design, time, event):
    mu = design @ beta
    return float(np.sum(event * mu - time * np.exp(mu)))


def exponential_score(beta, design, time, event):
    """Σ xᵢ(dᵢ − wᵢ) with wᵢ = tᵢ·exp(μᵢ)."""

    weights = time * np.exp(design @ beta)
    return design.T @ (event - weights)


def exponential_hessian(beta, design, time):
    """−Σ xᵢxᵢ′wᵢ."""

    weights = time * np.exp(design @ beta)
    return -(design * weights[:, None]).T @ design


def weibull_loglik(theta, design, log_time, event):
    gamma, s = theta[:-1], theta[-1]
    z = np.exp(s) * (log_time - design @ gamma)
    return float(np.sum(event * (s - log_time + z) - np.exp(z)))


def weibull_score(theta, design, log_time, event):
    gamma, s = theta[:-1], theta[-1]
    k = np.exp(s)
    z = k * (log_time - design @ gamma)
    ez = np.exp(z)
    return np.append(
        k * (design.T @ (ez - event)), np.sum(event + z * (event - ez)))


def weibull_hessian(theta, design, log_time, event):
    gamma, s = theta[:-1], theta[-1]
    k = np.exp(s)
    z = k * (log_time - design @ gamma)
    ez = np.exp(z)

    size = theta.size
    hessian = np.empty((size, size))
    hessian[:-1, :-1] = -(k ** 2) * ((design * ez[:, None]).T @ design)
    cross = k * (design.T @ (ez * (1.0 + z) - event))
    hessian[:-1, -1] = cross
    hessian[-1, :-1] = cross
    hessian[-1, -1] = np.sum(z * (event - ez) - z ** 2 * ez)
    return hessian


def weibull_risk(theta, design, t):
    """F(t) = 1 − exp(−exp(k(ln t − xγ)))."""

    gamma, s = theta[:-1], theta[-1]
    return -np.expm1(-np.exp(np.exp(s) * (np.log(t) - design @ gamma)))


def newton_raphson(
        objective, start, max_iterations=consts.NEWTON_MAX_ITERATIONS,
        tolerance=consts.NEWTON_TOLERANCE, floor=0.0):
    """Maximize a concave log-likelihood.

    Args:
        objective (callable): θ → (loglik, score, hessian).
        start (array): Start values.
        max_iterations (int): Newton iterations allowed.
        tolerance (float): Convergence when max |score| is below it.
        floor (float): Score level reachable within rounding; when no step
            improves the log-likelihood and max |score| is below it, the fit
            has converged.
    Return:
        tuple: (θ, loglik, hessian, iterations)
    Exception:
        ConvergenceError: When the maximum is not reached.
    """

    theta = np.array(start, dtype=float)
    loglik, score, hessian = objective(theta)

    for iteration in range(max_iterations + 1):
        largest = float(np.max(np.abs(score)))
        logger.debug(
            'Newton iteration %d: loglik=%.10g max|score|=%.3g', iteration,
            loglik, largest)
        if largest < tolerance:
            return theta, loglik, hessian, iteration
        if iteration == max_iterations:
            break

        step = _newton_step(hessian, score)
        for _ in range(MAX_STEP_HALVINGS):
            candidate = theta + step
            values = objective(candidate)
            if np.isfinite(values[0]) and values[0] >= loglik:
                break
            step = step / 2.0
        else:
            if largest <= floor:
                return theta, loglik, hessian, iteration
            raise exceptions.ConvergenceError(
                'No step improves the log-likelihood (max |score| {:.3g}); '
                'the predictors may separate the events.'.format(largest))

        if largest <= floor and values[0] - loglik <= 1e-14 * abs(loglik):
            return theta, loglik, hessian, iteration
        theta = candidate
        loglik, score, hessian = values

    raise exceptions.ConvergenceError(
        'Newton-Raphson did not converge in {} iterations (max |score| '
        '{:.3g}).'.format(max_iterations, largest))


def _newton_step(hessian, score):
    information = -hessian
    scale = max(float(np.abs(np.diag(information)).max()), 1.0)
    ridge = 0.0
    while True:
        try:
            factor = linalg.cho_factor(
                information + ridge * np.eye(score.size), lower=True)
            return linalg.cho_solve(factor, score)
        except linalg.LinAlgError:
            # Away from the maximum the log-likelihood may not be concave.
            ridge = 1e-8 * scale if ridge == 0.0 else ridge * 10.0


def _check_cohort(table, followup):
    if followup.n_individuals != table.n_individuals:
        raise exceptions.InvalidArgumentError(
            'The follow-up and the table should describe the same '
            'individuals.')
    if followup.event.sum() == 0:
        raise exceptions.InvalidArgumentError(
            'At least one event is required to fit a survival model.')
    if table.n_individuals <= table.n_predictors + 1:
        raise exceptions.InvalidArgumentError(
            'More individuals than parameters are required.')


def _covariance(hessian, n, names):
    # Reuses the unit information checks (positive definite, conditioning).
    info = UnitInformation(-hessian / n, names=names)
    return info.inverse / n


def fit_exponential(
        table, followup, max_iterations=consts.NEWTON_MAX_ITERATIONS,
        tolerance=consts.NEWTON_TOLERANCE):
    """Maximum likelihood exponential regression.

    Args:
        table (PredictorTable): Predictors.
        followup (FollowUp): Observed follow-up.
        max_iterations (int): Newton iterations allowed.
        tolerance (float): Score tolerance.
    Return:
        FittedSurvivalModel
    """

    _check_cohort(table, followup)
    design = table.design_matrix()
    time = followup.time
    event = followup.event.astype(float)
    names = ['(intercept)'] + table.predictor_names

    start = np.zeros(design.shape[1])
    start[0] = np.log(event.sum() / time.sum())

    def objective(beta):
        return (
            exponential_loglik(beta, design, time, event),
            exponential_score(beta, design, time, event),
            exponential_hessian(beta, design, time))

    beta, loglik, hessian, iterations = newton_raphson(
        objective, start, max_iterations=max_iterations, tolerance=tolerance,
        floor=1e-8 * design.shape[0])
    fit = FittedSurvivalModel(
        consts.EXPONENTIAL, beta, None,
        _covariance(hessian, design.shape[0], names), loglik, True,
        iterations, names=names)
    logger.info(
        'Exponential fit: loglik=%.4f in %d iterations.', loglik, iterations)
    return fit


def fit_weibull(
        table, followup, fixed_shape=None,
        max_iterations=consts.NEWTON_MAX_ITERATIONS,
        tolerance=consts.NEWTON_TOLERANCE):
    """Maximum likelihood Weibull AFT regression.

    Starts at the exponential solution (γ = −β, log shape 0).

    Args:
        table (PredictorTable): Predictors.
        followup (FollowUp): Observed follow-up.
        fixed_shape (float): Hold the shape at this value (only the location
            is estimated; the log-shape variance is reported as 0).
        max_iterations (int): Newton iterations allowed.
        tolerance (float): Score tolerance.
    Return:
        FittedSurvivalModel
    """

    if fixed_shape is not None and not fixed_shape > 0:
        raise exceptions.InvalidArgumentError('The shape should be positive.')

    exponential = fit_exponential(
        table, followup, max_iterations=max_iterations, tolerance=tolerance)
    design = table.design_matrix()
    log_time = followup.log_time
    event = followup.event.astype(float)
    names = ['(intercept)'] + table.predictor_names
    n, size = design.shape

    if fixed_shape is None:
        def objective(theta):
            return (
                weibull_loglik(theta, design, log_time, event),
                weibull_score(theta, design, log_time, event),
                weibull_hessian(theta, design, log_time, event))

        start = np.append(-exponential.coefficients, 0.0)
        theta, loglik, hessian, iterations = newton_raphson(
            objective, start, max_iterations=max_iterations,
            tolerance=tolerance, floor=1e-8 * n)
        covariance = _covariance(hessian, n, names + ['log(shape)'])
    else:
        s = float(np.log(fixed_shape))

        def objective(gamma):
            theta = np.append(gamma, s)
            return (
                weibull_loglik(theta, design, log_time, event),
                weibull_score(theta, design, log_time, event)[:-1],
                weibull_hessian(theta, design, log_time, event)[:-1, :-1])

        start = -exponential.coefficients / fixed_shape
        gamma, loglik, hessian, iterations = newton_raphson(
            objective, start, max_iterations=max_iterations,
            tolerance=tolerance, floor=1e-8 * n)
        theta = np.append(gamma, s)
        covariance = np.zeros((size + 1, size + 1))
        covariance[:-1, :-1] = _covariance(hessian, n, names)

    fit = FittedSurvivalModel(
        consts.WEIBULL, theta[:-1], float(np.exp(theta[-1])), covariance,
        loglik, True, iterations, names=names)
    logger.info(
        'Weibull fit: shape=%.4f loglik=%.4f in %d iterations.',
        fit.ancillary, loglik, iterations)
    return fit


def delta_method_gradient(function, theta, step=DIFFERENCE_STEP):
    """Central differences of a vector function of the parameters.

    Return:
        numpy.ndarray: rows × parameters Jacobian.
    """

    theta = np.asarray(theta, dtype=float)
    columns = []
    for position in range(theta.size):
        h = step * max(1.0, abs(theta[position]))
        forward = theta.copy()
        backward = theta.copy()
        forward[position] += h
        backward[position] -= h
        columns.append((function(forward) - function(backward)) / (2.0 * h))
    return np.column_stack(columns)


class ComparisonReport():

    def __init__(self, individuals, exponential, weibull, scale, level):
        self.individuals = individuals
        self.exponential = exponential
        self.weibull = weibull
        self.scale = scale
        self.level = float(level)

    @property
    def lr_statistic(self):
        """2·(ℓ_weibull − ℓ_exponential), ≥ 0 for nested fits."""

        return 2.0 * (self.weibull.loglik - self.exponential.loglik)

    def aggregates(self):
        frame = self.individuals
        return dict(
            count=int(len(frame)),
            mean_width_exponential=float(frame['width_exp'].mean()),
            median_width_exponential=float(frame['width_exp'].median()),
            mean_width_weibull=float(frame['width_wei'].mean()),
            median_width_weibull=float(frame['width_wei'].median()),
            mean_width_difference=float(frame['width_difference'].mean()),
            median_width_difference=float(frame['width_difference'].median()),
            unreliable=int(frame['unreliable'].sum()),
            clamped=int(frame['clamped'].sum()),
            lr_statistic=self.lr_statistic,
            shape=self.weibull.ancillary)

    def to_dict(self):
        return dict(
            scale=self.scale,
            level=self.level,
            exponential=self.exponential.to_dict(),
            weibull=self.weibull.to_dict(),
            aggregates=self.aggregates())


def compare_intervals(
        exp_fit, wei_fit, table, t, level=consts.DEFAULT_LEVEL,
        scale=consts.SCALE_RISK, z=None):
    """Per-individual risk intervals of both fits.

    The exponential interval maps μ̂ ∓ z·se through F. The Weibull interval is
    a delta-method interval with numerical derivatives, either directly on the
    risk scale (endpoints clamped to [0, 1] and flagged) or on the
    log(−log(1 − F)) scale. Individuals whose risk-scale standard error
    exceeds 0.25 are flagged as unreliable.

    Args:
        exp_fit (FittedSurvivalModel): Exponential fit.
        wei_fit (FittedSurvivalModel): Weibull fit.
        table (PredictorTable): Individuals to compare.
        t (float): Time point.
        level (float): Confidence level.
        scale (str): risk or loglog.
        z (float): Fixed multiplier instead of the exact normal quantile.
    Return:
        ComparisonReport
    """

    if not (exp_fit.converged and wei_fit.converged):
        raise exceptions.InvalidArgumentError('Both fits should be converged.')
    if scale not in (consts.SCALE_RISK, consts.SCALE_LOGLOG):
        raise exceptions.InvalidArgumentError(
            'Unknown interval scale "{}".'.format(scale))
    if not t > 0:
        raise exceptions.InvalidArgumentError('The time should be positive.')

    z = precision.z_value(level) if z is None else z
    design = table.design_matrix()

    mu = design @ exp_fit.coefficients
    se_mu = np.sqrt(np.einsum(
        'ij,jk,ik->i', design, exp_fit.covariance, design))
    lower_exp, upper_exp = precision.risk_interval(mu, se_mu, t, z=z)
    risk_exp = risk_from_mu(mu, t)

    theta = wei_fit.parameters
    covariance = wei_fit.covariance

    def standard_error(function):
        gradient = delta_method_gradient(function, theta)
        return np.sqrt(np.maximum(
            np.einsum('ij,jk,ik->i', gradient, covariance, gradient), 0.0))

    risk_wei = weibull_risk(theta, design, t)
    se_risk = standard_error(lambda value: weibull_risk(value, design, t))

    if scale == consts.SCALE_RISK:
        lower_raw = risk_wei - z * se_risk
        upper_raw = risk_wei + z * se_risk
        lower_wei = np.clip(lower_raw, 0.0, 1.0)
        upper_wei = np.clip(upper_raw, 0.0, 1.0)
        clamped = (lower_raw < 0.0) | (upper_raw > 1.0)
    else:
        def loglog(value):
            gamma, s = value[:-1], value[-1]
            return np.exp(s) * (np.log(t) - design @ gamma)

        centre = loglog(theta)
        se_loglog = standard_error(loglog)
        lower_wei = -np.expm1(-np.exp(centre - z * se_loglog))
        upper_wei = -np.expm1(-np.exp(centre + z * se_loglog))
        clamped = np.zeros(risk_wei.shape, dtype=bool)

    individuals = pd.DataFrame(dict(
        risk_exp=risk_exp, lower_exp=lower_exp, upper_exp=upper_exp,
        width_exp=upper_exp - lower_exp,
        risk_wei=risk_wei, lower_wei=lower_wei, upper_wei=upper_wei,
        width_wei=upper_wei - lower_wei,
        se_risk_wei=se_risk))
    individuals['width_difference'] = (
        individuals['width_wei'] - individuals['width_exp'])
    individuals['unreliable'] = se_risk > consts.UNRELIABLE_RISK_SE
    individuals['clamped'] = clamped

    report = ComparisonReport(individuals, exp_fit, wei_fit, scale, level)
    aggregates = report.aggregates()
    logger.info(
        'Mean interval width: exponential %.4f, Weibull %.4f (%s scale).',
        aggregates['mean_width_exponential'],
        aggregates['mean_width_weibull'], scale)
    return report
