"""
Common DTO helpers shared by configuration and report models.
"""

from typing import Any, Mapping, Type, TypeVar

from pydantic import BaseModel, ValidationError, constr

from ..errors import ConfigError

# Identifier of a run or grid cell; also used as a file stem
Identifier = constr(min_length=1, max_length=64, pattern=r"^[A-Za-z0-9_.\-]+$")

M = TypeVar("M", bound=BaseModel)


def parse_model(model: Type[M], data: Mapping[str, Any]) -> M:
    """
    Validate ``data`` into ``model``, reporting failures as :class:`ConfigError`.

    Args:
        model: Pydantic model class
        data: Raw field values (strings are coerced)

    Returns:
        The validated model instance
    """
    try:
        return model.model_validate(dict(data))
    except ValidationError as e:
        problems = []
        for err in e.errors():
            location = ".".join(str(p) for p in err["loc"]) or model.__name__
            problems.append(f"{location}: {err['msg']}")
        raise ConfigError(f"Invalid {model.__name__}: {'; '.join(problems)}") from e
