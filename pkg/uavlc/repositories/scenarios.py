from pathlib import Path
from typing import Optional, Tuple, Union

import numpy as np
from pydantic import ValidationError

from uavlc.core.config import get_settings
from uavlc.exceptions.app_exceptions import SchemaException, ValidationException
from uavlc.models.scenario import Scenario
from uavlc.schemas.scenario import ScenarioCounts, ScenarioSchema


def _field_path(error: dict) -> str:
    return ".".join(str(part) for part in error["loc"]) or "<root>"


def parse_scenario(text: Union[str, bytes]) -> Scenario:
    """
    Parses a JSON scenario document.

    - SchemaException: the document does not match the schema (message
      starts with the dotted field path)
    - ValidationException: the values break a Scenario invariant
    """
    try:
        schema = ScenarioSchema.model_validate_json(text)
    except ValidationError as exc:
        first = exc.errors()[0]
        raise SchemaException(f"{_field_path(first)}: {first['msg']}")
    return schema.to_domain()


def load_scenario(source: Union[str, Path]) -> Scenario:
    """Accepts a file path or the document text itself."""
    if isinstance(source, str) and source.lstrip().startswith("{"):
        return parse_scenario(source)
    path = Path(source)
    if not path.is_file():
        raise SchemaException(f"<root>: scenario file not found: {path}")
    return parse_scenario(path.read_text(encoding="utf-8"))


def base_scenario() -> Scenario:
    return load_scenario(get_settings().base_scenario)


def random_scenario(
    seed: int,
    counts: Optional[ScenarioCounts] = None,
    base: Optional[Scenario] = None,
    demand_range: Optional[Tuple[float, float]] = None,
) -> Scenario:
    """
    Draws users and RIS positions uniformly in the base area and illumination
    demands uniformly in demand_range; everything else is taken from `base`.

    Users, RISs and demands use separate streams of the seed, so changing
    one count keeps the other draws, and the first L RIS positions are the
    same for every L.
    """
    base = base or base_scenario()
    counts = counts or ScenarioCounts()
    settings = get_settings()
    low, high = demand_range or (settings.demand_low, settings.demand_high)
    if not 0.0 <= low <= high:
        raise ValidationException("demand range must satisfy 0 <= low <= high")

    user_count = counts.user_count if counts.user_count is not None else base.user_count
    ris_count = counts.ris_count if counts.ris_count is not None else base.ris_count
    user_rng, ris_rng, demand_rng = (
        np.random.default_rng(s) for s in np.random.SeedSequence(seed).spawn(3)
    )
    area = np.array(base.area)
    return base.with_changes(
        uav_count=counts.uav_count if counts.uav_count is not None else base.uav_count,
        ris_elements=counts.ris_elements if counts.ris_elements is not None else base.ris_elements,
        users=user_rng.uniform(0.0, 1.0, size=(user_count, 2)) * area,
        ris_positions=ris_rng.uniform(0.0, 1.0, size=(ris_count, 2)) * area,
        illumination_demands=demand_rng.uniform(low, high, size=user_count),
    )
