import functools
import math
import numbers


def _tuple_of_impl(inst, attr, value, *, child_types):
    """
    The validator implementation for `tuple_of`.
    The description of `inst`, `attrs`, and `value` comes from:
    http://www.attrs.org/en/stable/examples.html#decorator

    :param inst: The *instance* that’s being validated.
    :param attr: the *attribute* that it’s validating.
    :param value: The value that is passed for it.
    :param tuple[type] child_types: A keyword only argument specifying the
        accepted types.
    :raise TypeError: If the validation fails.
    """
    if not isinstance(value, tuple):
        msg = "'{name}' must be a tuple but got {value!r}"
        raise TypeError(msg.format(name=attr.name, value=value))

    for i, v in enumerate(value):
        if not isinstance(v, child_types):
            msg = (
                "'{name}' must be a tuple of {types!r} but got"
                " {value!r} and item in index {i} is not one of"
                " the expected types"
            )
            raise TypeError(msg.format(name=attr.name, types=child_types, value=value, i=i))


def tuple_of(*child_types):
    """
    Creates a validator that accepts a tuple whose items are all of the listed
    types. A tuple is used due to its immutable nature, which keeps frozen
    snapshots frozen all the way down.

    :param list[type] child_types:
    :rtype: Callable
    :return: A callable to be used as a validator with the `attr` module.
    """
    return functools.partial(_tuple_of_impl, child_types=child_types)


def _number_in_range_impl(inst, attr, value, *, low, high, low_open, description):
    if isinstance(value, bool) or not isinstance(value, numbers.Real):
        msg = "'{name}' must be a number but got {value!r}"
        raise TypeError(msg.format(name=attr.name, value=value))

    below = value <= low if low_open else value < low
    if math.isnan(value) or below or value > high:
        msg = "'{name}' must be {description} but got {value!r}"
        raise ValueError(msg.format(name=attr.name, description=description, value=value))


non_negative = functools.partial(
    _number_in_range_impl, low=0.0, high=math.inf, low_open=False, description="non-negative"
)
"""Validator for finite or infinite numbers greater than or equal to zero."""

positive = functools.partial(
    _number_in_range_impl, low=0.0, high=math.inf, low_open=True, description="positive"
)

probability = functools.partial(
    _number_in_range_impl, low=0.0, high=1.0, low_open=False, description="in [0, 1]"
)


def binary_label(inst, attr, value):
    """
    Validator for class labels, which must be exactly `+1` or `-1`.
    """
    if isinstance(value, bool) or value not in (1, -1):
        msg = "'{name}' must be +1 or -1 but got {value!r}"
        raise ValueError(msg.format(name=attr.name, value=value))
