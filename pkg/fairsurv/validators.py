"""
Validators
==========

Reusable checks attached to fields. Each validator is a callable that returns
the (possibly normalized) value or raises a ``FieldException`` describing what
is wrong.

Example::

    Field(Between(0, 1), basetype=NUMBER, required=True)
"""

import math

from fairsurv import exceptions


class Base():
    message = 'This value is not valid.'

    def __init__(self, value):
        self.value = value

    def check(self, value):
        return True

    def __call__(self, value):
        if not self.check(value):
            raise exceptions.FieldException(
                self.message.format(value=self.value))
        return value


class Finite(Base):
    message = 'This value should be a finite number.'

    def __init__(self):
        super().__init__(None)

    def check(self, value):
        return math.isfinite(value)


class GreaterThan(Base):
    message = 'This value should be greater than {value}.'

    def check(self, value):
        return value > self.value


class AtLeast(Base):
    message = 'This value should be at least {value}.'

    def check(self, value):
        return value >= self.value


class AtMost(Base):
    message = 'This value should be at most {value}.'

    def check(self, value):
        return value <= self.value


class SmallerThan(Base):
    message = 'This value should be smaller than {value}.'

    def check(self, value):
        return value < self.value


class MultipleInput(Base):
    def __init__(self, *value):
        self.value = value


class In(MultipleInput):
    message = 'This value should be one of {value}.'

    def check(self, value):
        return value in self.value


class Between(MultipleInput):
    """Open interval check: low < value < high."""

    message = 'This value should be strictly between {value[0]} and {value[1]}.'

    def check(self, value):
        low, high = self.value
        return low < value < high


class NotEmpty(Base):
    message = 'This list should not be empty.'

    def __init__(self):
        super().__init__(None)

    def check(self, value):
        return len(value) > 0


class Each(MultipleInput):
    """Apply a basetype check and validators to every item of a list."""

    def __init__(self, *validators, basetype=None):
        self.value = validators
        self.basetype = basetype

    def __call__(self, values):
        items = []
        for position, item in enumerate(values):
            if self.basetype is not None and (
                    isinstance(item, bool) and bool not in _types(self.basetype)
                    or not isinstance(item, self.basetype)):
                raise exceptions.FieldException(
                    'Item {} is not following the right format.'.format(
                        position))
            for validator in self.value:
                try:
                    item = validator(item)
                except exceptions.FieldException as e:
                    raise exceptions.FieldException(
                        'Item {}: {}'.format(position, e.args[0]))
            items.append(item)
        return items


class StrictlyIncreasing(Base):
    message = 'The values should be strictly increasing.'

    def __init__(self):
        super().__init__(None)

    def check(self, value):
        return all(a < b for a, b in zip(value, value[1:]))


def _types(basetype):
    return basetype if isinstance(basetype, tuple) else (basetype,)
