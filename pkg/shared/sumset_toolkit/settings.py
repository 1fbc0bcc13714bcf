"""
Settings - validated configuration for the sumset toolkit

Values come from defaults, then SUMSET_* environment variables, then
per-invocation overrides from the command line.
"""

import os
from typing import Any, Dict, Optional

from pydantic import BaseModel, Field, field_validator

ENV_PREFIX = "SUMSET_"


class Settings(BaseModel):
    """Tunable constants shared by all services"""

    model_config = {"frozen": True}

    dense_cap: int = Field(default=2 ** 22, ge=16, description="Longest dense vector a convolution may produce")
    prime_constant: float = Field(default=4.0, gt=0, description="c in the prime ranges [c N log^2 U]")
    hash_levels: int = Field(default=2, ge=1, le=6, description="Primes per function in deterministic families")
    brute_cutoff: int = Field(default=32, ge=1, description="Grid side at or below which remainder cells run brute force")
    sample_threshold: int = Field(default=256, ge=1, description="Populations this small are counted exactly, never sampled")
    sampling_delta: float = Field(default=0.5, gt=0, le=1)
    graph_lemma_iteration_constant: float = Field(default=4.0, gt=0)
    las_vegas_retries: int = Field(default=8, ge=1)
    family_retry_cap: int = Field(default=64, ge=1)
    fft_cost_factor: float = Field(default=1.0, gt=0, description="Weight of transform cells against pair probes")
    ell_constant: float = Field(default=8.0, gt=0, description="Scale of the tuned grid side")
    deterministic: bool = False
    debug: bool = False
    seed: Optional[int] = None

    @field_validator("seed")
    @classmethod
    def _seed_non_negative(cls, value):
        if value is not None and value < 0:
            raise ValueError("seed must be non-negative")
        return value

    @classmethod
    def from_env(cls, environ: Optional[Dict[str, str]] = None, **overrides: Any) -> "Settings":
        """Build settings from SUMSET_* variables plus explicit overrides"""
        environ = os.environ if environ is None else environ
        values: Dict[str, Any] = {}
        for name in cls.model_fields:
            raw = environ.get(ENV_PREFIX + name.upper())
            if raw is not None and raw != "":
                values[name] = raw
        values.update({k: v for k, v in overrides.items() if v is not None})
        return cls.model_validate(values)

    def with_overrides(self, **overrides: Any) -> "Settings":
        """Copy with the given non-None fields replaced"""
        data = self.model_dump()
        data.update({k: v for k, v in overrides.items() if v is not None})
        return Settings.model_validate(data)
