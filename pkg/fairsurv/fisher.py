"""
Unit information
================

Fisher's information of the exponential core model decomposes into the
sample size and a *unit* information matrix:

    var(β̂) = n⁻¹ I⁻¹,    I = E(xᵢxᵢ′ wᵢ),    wᵢ = exp(yᵢ + μᵢ)

where yᵢ is the log follow-up time and μᵢ the core-model log rate at its
assumed true parameters. The expectation is the mean over the supplied
cohort; a larger synthetic cohort gives a closer expectation.
"""

import logging

import numpy as np
from scipy import linalg

from fairsurv import consts
from fairsurv import exceptions


logger = logging.getLogger(__name__)


class UnitInformation():

    def __init__(self, matrix, names=None):
        """Validate and invert the unit information matrix.

        Args:
            matrix (array): (P+1)×(P+1) symmetric positive definite matrix.
            names (list): Parameter names (intercept first), used in errors.
        Exception:
            RankDeficiencyError: If the matrix is singular, not positive
                definite or too badly conditioned to be inverted.
        """

        matrix = np.array(matrix, dtype=float)
        if matrix.ndim == 0:
            matrix = matrix.reshape(1, 1)
        if matrix.ndim != 2 or matrix.shape[0] != matrix.shape[1]:
            raise exceptions.InvalidArgumentError(
                'The information matrix should be square.')

        scale = max(float(np.abs(matrix).max()), np.finfo(float).tiny)
        if np.abs(matrix - matrix.T).max() > 1e-12 * scale:
            raise exceptions.InvalidArgumentError(
                'The information matrix should be symmetric.')
        matrix = 0.5 * (matrix + matrix.T)

        self.names = list(names) if names is not None else [
            'x{}'.format(position) for position in range(matrix.shape[0])]

        try:
            factor = linalg.cho_factor(matrix, lower=True)
        except linalg.LinAlgError:
            raise self.deficiency(matrix, 'is not positive definite')

        condition = float(np.linalg.cond(matrix))
        if not np.isfinite(condition) or (
                1.0 / condition < consts.MIN_RECIPROCAL_CONDITION):
            raise self.deficiency(
                matrix, 'is ill-conditioned (condition {:.3g})'.format(
                    condition))

        inverse = linalg.cho_solve(factor, np.eye(matrix.shape[0]))
        inverse = 0.5 * (inverse + inverse.T)

        matrix.setflags(write=False)
        inverse.setflags(write=False)
        self.matrix = matrix
        self.inverse = inverse
        self.condition_estimate = condition

    @property
    def dimension(self):
        return self.matrix.shape[0]

    def deficiency(self, matrix, reason):
        values, vectors = np.linalg.eigh(matrix)
        direction = vectors[:, 0]
        direction = direction / direction[np.argmax(np.abs(direction))]
        terms = ', '.join(
            '{:+.3g}·{}'.format(weight, name)
            for weight, name in zip(direction, self.names)
            if abs(weight) > 1e-6)
        return exceptions.RankDeficiencyError(
            'The unit information matrix {}; null direction: {}.'.format(
                reason, terms), direction=direction)

    def quadratic_form(self, rows):
        """xI⁻¹x′ for one row or for every row of a matrix."""

        rows = np.asarray(rows, dtype=float)
        if rows.shape[-1] != self.dimension:
            raise exceptions.InvalidArgumentError(
                'Rows should have {} entries (intercept first).'.format(
                    self.dimension))
        if rows.ndim == 1:
            return float(rows @ self.inverse @ rows)
        return np.einsum('ij,jk,ik->i', rows, self.inverse, rows)

    def to_dict(self):
        return dict(
            names=self.names,
            matrix=self.matrix.tolist(),
            inverse=self.inverse.tolist(),
            condition_estimate=self.condition_estimate)


def information_weights(model, table, followup):
    """wᵢ = exp(yᵢ + μᵢ) = timeᵢ·exp(μᵢ)."""

    if followup.n_individuals != table.n_individuals:
        raise exceptions.InvalidArgumentError(
            'The follow-up and the table should describe the same '
            'individuals.')
    return np.exp(followup.log_time + model.linear_predictor(table))


def unit_information(model, table, followup):
    """Unit information matrix of the core model over a cohort.

    Args:
        model (CoreModel): Core model at its assumed true parameters.
        table (PredictorTable): Predictor values.
        followup (FollowUp): Observed follow-up.
    Return:
        UnitInformation
    """

    weights = information_weights(model, table, followup)
    design = table.design_matrix()
    n, dimension = design.shape

    # Accumulated over fixed-size row chunks in order, so the sum does not
    # depend on the cohort size beyond the chunking.
    total = np.zeros((dimension, dimension))
    for start in range(0, n, consts.INFORMATION_CHUNK_ROWS):
        rows = design[start:start + consts.INFORMATION_CHUNK_ROWS]
        weighted = rows * weights[start:start + consts.INFORMATION_CHUNK_ROWS,
                                  None]
        total += weighted.T @ rows

    info = UnitInformation(
        total / n, names=['(intercept)'] + table.predictor_names)
    logger.info(
        'Unit information over %d individuals: dimension %d, condition '
        'estimate %.4g.', n, dimension, info.condition_estimate)
    return info


def parameter_covariance(info, n):
    """var(β̂) = n⁻¹I⁻¹."""

    if not n >= 1:
        raise exceptions.InvalidArgumentError(
            'The sample size should be at least 1.')
    return info.inverse / n
