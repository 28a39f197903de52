"""Fuel-shock toolkit configuration."""

from __future__ import annotations

try:
    from pydantic_settings import BaseSettings

    _USES_PYDANTIC_SETTINGS = True
except ModuleNotFoundError:
    # Compatibility fallback for environments where only pydantic is installed.
    # pydantic v2 exposes v1 settings under pydantic.v1; v1 exposes BaseSettings directly.
    try:
        from pydantic.v1 import BaseSettings  # type: ignore[attr-defined]
    except ImportError:
        from pydantic import BaseSettings  # type: ignore[no-redef]

    _USES_PYDANTIC_SETTINGS = False


class Settings(BaseSettings):
    service_name: str = "fuelshock"
    version: str = "1.0.0"
    parameter_dir: str = "data/reference"
    log_level: str = "INFO"

    # AIDS estimator defaults
    price_index: str = "translog"
    tolerance: float = 1e-8
    max_iter: int = 500
    fgls_tolerance: float = 1e-10
    fgls_max_iter: int = 200

    # Delta method: step = jacobian_step * max(1, |theta|)
    jacobian_step: float = 1e-6

    pm25_conversion_factor: float = 0.65
    aggregation_rule: str = "mean"
    emission_weighting: str = "km"

    output_format: str = "csv"
    float_precision: int = 3
    scenario_workers: int = 4

    if _USES_PYDANTIC_SETTINGS:
        model_config = {"env_prefix": "FUELSHOCK_"}
    else:
        class Config:
            env_prefix = "FUELSHOCK_"


settings = Settings()
