import math

import pytest

from fairsurv import exceptions
from fairsurv import validators


@pytest.mark.parametrize('validator, good, bad', [
    (validators.GreaterThan(0), 0.1, 0),
    (validators.AtLeast(1), 1, 0.99),
    (validators.AtMost(1), 1, 1.01),
    (validators.SmallerThan(1), 0.99, 1),
    (validators.Between(0, 1), 0.5, 1),
    (validators.In('none', 'exponential'), 'none', 'weibull'),
    (validators.Finite(), 3.0, math.inf),
    (validators.NotEmpty(), [1], []),
    (validators.StrictlyIncreasing(), [0.1, 0.2], [0.2, 0.2]),
])
def test_validators(validator, good, bad):
    assert validator(good) == good
    with pytest.raises(exceptions.FieldException):
        validator(bad)


def test_between_is_open():
    between = validators.Between(0, 1)
    for value in (0, 1):
        with pytest.raises(exceptions.FieldException) as error:
            between(value)
        assert 'between 0 and 1' in error.value.args[0]


def test_each_reports_the_item():
    each = validators.Each(validators.Between(0, 1), basetype=(int, float))
    assert each([0.2, 0.5]) == [0.2, 0.5]

    with pytest.raises(exceptions.FieldException) as error:
        each([0.2, 1.5])
    assert error.value.args[0].startswith('Item 1:')

    with pytest.raises(exceptions.FieldException) as error:
        each([0.2, 'x'])
    assert 'Item 1' in error.value.args[0]

    with pytest.raises(exceptions.FieldException):
        validators.Each(basetype=int)([1, True])
