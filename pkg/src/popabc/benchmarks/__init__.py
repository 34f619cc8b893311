"""Bundled benchmark models with known or pinned-synthetic targets."""
from __future__ import annotations

from ..diagnostics import PosteriorOracle
from ..models import ModelSpec
from . import coalescent, conjugate, mixture

MODEL_BUILDERS = {
    "mixture-toy": mixture.model,
    "coalescent-msat": coalescent.model,
    "conjugate-normal": conjugate.model,
}

ORACLE_BUILDERS = {
    "mixture-toy": mixture.oracle,
    "conjugate-normal": conjugate.oracle,
}


def model_names() -> list[str]:
    return sorted(MODEL_BUILDERS)


def get_model(name: str) -> ModelSpec:
    try:
        return MODEL_BUILDERS[name]()
    except KeyError:
        raise KeyError(
            f"unknown model {name!r}; available: {', '.join(model_names())}"
        ) from None


def get_oracle(name: str) -> PosteriorOracle | None:
    builder = ORACLE_BUILDERS.get(name)
    return builder() if builder is not None else None
