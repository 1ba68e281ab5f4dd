from __future__ import annotations

from pydantic import AliasChoices, Field
from pydantic_settings import BaseSettings, SettingsConfigDict


class Settings(BaseSettings):
    model_config = SettingsConfigDict(env_file='.env', env_file_encoding='utf-8', env_prefix='BAP_', extra='ignore')

    # RICF
    ricf_max_iter: int = 10
    ricf_tol: float = 1e-8

    # Penalized score: (loglik - multiplier * (d + #edges) * log n) / n
    penalty_multiplier: float = 1.0

    # Search
    improvement_threshold: float = 1e-12
    burn_in_constant: float = 1.0

    # Equivalence classes
    epsilon: float = 1e-10
    collider_max_edges: int = 20
    msep_exhaustive_max_vertices: int = 6
    msep_samples_per_pair: int = 64

    # Oracle guards
    wright_max_vertices: int = 8
    enumerate_max_vertices: int = 4

    # Data handling
    standardize: bool = True

    # Runtime
    threads: int = Field(default=1, validation_alias=AliasChoices('BAP_THREADS', 'BAP_N_JOBS', 'threads'))
    log_level: str = 'INFO'

    def burn_in_steps(self, d: int) -> int:
        return max(1, int(round(self.burn_in_constant * d ** 4)))


settings = Settings()
