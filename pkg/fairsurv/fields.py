"""
Field
=====

The field handles the base validation of a config value. It checks first if
the value is required, fills the default when the value is absent, checks the
type, then invokes any additional validators.

A field can also carry a nested schema (``schema=``): the schema is run by the
parent schema so the errors of the nested block are reported with their full
path.
"""

from copy import deepcopy

from fairsurv import exceptions


NUMBER = (int, float)


class Field():
    def __init__(
            self, *validators, basetype=str, required=False, default=None,
            schema=None, many=False):
        """Field

        Arg:
            validators (set): All the additional validators you will want to
                run against the value.
            basetype (type): A type (or tuple of types) the value should be
                an instance of. Booleans are only accepted if ``bool`` is
                explicitly listed.
            required (boolean): If this field is required. If absent, it will
                throw an exception.
            default: The value used when the field is absent. Mutable
                defaults are copied.
            schema (Schema): Nested schema for dict values (or for every item
                of a list value when ``many`` is set).
            many (boolean): If the nested schema applies to each list item.
        """

        self.basetype = basetype
        self.required = required
        self.default = default
        self.schema = schema
        self.many = many
        self.validators = validators or []

    def accepts(self, value):
        types = self.basetype
        if not isinstance(types, tuple):
            types = (types,)

        if isinstance(value, bool) and bool not in types:
            return False
        return isinstance(value, types)

    def validate(self, value):
        """Validator

        Arg:
            value: The value to run the validators against.

        Exception:
            FieldException: If an error has occurred with the field value, an
                exception is immediately raised (either by this method, or by
                one of the validator).

        Return:
            The value (or the default).
        """

        if value is None:
            if self.required:
                raise exceptions.FIELD_REQUIRED
            return deepcopy(self.default)

        if not self.accepts(value):
            raise exceptions.FIELD_WRONG_FORMAT

        for validator in self.validators:
            value = validator(value)

        return value
