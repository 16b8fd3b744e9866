"""
Schemas
=======

Schemas define the structure of a config block: which fields it has, how each
field is validated, and which cross-field checks apply to the block.

**Fields**

Each field validates its own value (see ``fairsurv.fields``). If a field
carries a nested schema, the nested block is validated as well and its errors
are reported with their full JSON pointer (``/core_model/c_index``).

**Checks**

Checks are cross-field rules, registered with a decorator. They only run once
every field of the block is valid, and they report their error on the pointer
they were registered for::

    data = Schema(csv=Field(basetype=dict), synth=Field(basetype=dict))

    @data.check('')
    def one_source(values):
        if (values['csv'] is None) == (values['synth'] is None):
            raise exceptions.FIELD_EXCLUSIVE

**Errors**

Validation never stops on the first error: every invalid field of every block
is collected, so a config can be fixed in one pass. The result is an oto
``Response``; on failure ``resp.errors['message']`` maps pointers to messages.
"""

from oto import response

from fairsurv import consts
from fairsurv import exceptions
from fairsurv import utils


class Schema():

    def __init__(self, strict=True, **fields):
        """Initialize the Schema.

        Args:
            strict (bool): If unknown keys are reported as errors.
            fields (dict): The fields of the block.
        """

        self.strict = strict
        self.fields = fields
        self.checks = []

    def check(self, name):
        """Register a cross-field check.

        Args:
            name (str): Key the error is attached to ('' for the block).
        """

        def wrapper(method):
            self.checks.append((name, method))
            return method
        return wrapper

    def validate(self, values, path=''):
        """Validate a block.

        Args:
            values (dict): The values to validate.
            path (str): JSON pointer of the block (used in error keys).
        Return:
            Response: message is the cleaned block on success.
        """

        if not isinstance(values, dict):
            return response.create_error_response(
                consts.ERROR_CODE_VALIDATION,
                {path or '/': exceptions.FIELD_WRONG_FORMAT.args[0]})

        data = dict()
        errors = dict()

        if self.strict:
            for name in values:
                if name not in self.fields:
                    errors[utils.json_pointer(path, name)] = (
                        exceptions.FIELD_UNKNOWN.args[0])

        for name, field in self.fields.items():
            pointer = utils.json_pointer(path, name)
            try:
                value = field.validate(values.get(name))
            except exceptions.FieldException as e:
                errors[pointer] = e.args[0]
                continue

            if field.schema is not None and value is not None:
                value = self.validate_nested(field, value, pointer, errors)

            data[name] = value

        if not errors:
            for name, method in self.checks:
                pointer = utils.json_pointer(path, name) if name else (
                    path or '/')
                try:
                    method(data)
                except exceptions.FieldException as e:
                    errors[pointer] = e.args[0]

        if errors:
            return response.create_error_response(
                consts.ERROR_CODE_VALIDATION, errors)

        return response.Response(message=data)

    def validate_nested(self, field, value, pointer, errors):
        if not field.many:
            nested = field.schema.validate(value, pointer)
            if not nested:
                errors.update(nested.errors.get('message'))
            return nested.message

        items = []
        for position, item in enumerate(value):
            nested = field.schema.validate(
                item, utils.json_pointer(pointer, position))
            if not nested:
                errors.update(nested.errors.get('message'))
            items.append(nested.message)
        return items
