"""Security alert triage pipeline: ontology normalization, reasoning-chain
compression under token budgets, confidence-thresholded routing, and
SOAR-ready audit records.

Every function takes and returns plain dicts/lists mirroring the JSONL
formats of the `triagekit` CLI.
"""

from ._core import (  # noqa: F401
    ConfigError,
    InputError,
    build_tuple,
    check_fidelity,
    classify_keywords,
    compress,
    default_config,
    evaluate,
    generate_synthetic,
    infer,
    information_density,
    map_label,
    normalize,
    oracle_optimal,
    partition,
    perturb,
    route,
    score_chain,
    split,
    token_count,
    triage_stream,
    validate_label,
)

__version__ = "0.1.0"

__all__ = [
    "ConfigError",
    "InputError",
    "build_tuple",
    "check_fidelity",
    "classify_keywords",
    "compress",
    "default_config",
    "evaluate",
    "generate_synthetic",
    "infer",
    "information_density",
    "map_label",
    "normalize",
    "oracle_optimal",
    "partition",
    "perturb",
    "route",
    "score_chain",
    "split",
    "token_count",
    "triage_stream",
    "validate_label",
]
