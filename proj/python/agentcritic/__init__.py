"""Python access to the agentcritic toolkit."""

from ._agentcritic import (
    ConfigError,
    CriticModel,
    Error,
    InvalidArgument,
    IoError,
    NumericError,
    TransportError,
    alpha_schedule,
    cosine_similarity,
    embed_text,
    fixture_json,
    fixture_names,
    map_to_valid,
    normalize_scores,
    optimal_path_length,
    run_cli,
    select_action,
)

__all__ = [
    "ConfigError",
    "CriticModel",
    "Error",
    "InvalidArgument",
    "IoError",
    "NumericError",
    "TransportError",
    "alpha_schedule",
    "cosine_similarity",
    "embed_text",
    "fixture_json",
    "fixture_names",
    "map_to_valid",
    "normalize_scores",
    "optimal_path_length",
    "run_cli",
    "select_action",
]


def main() -> int:
    import sys

    rc, out, err = run_cli(sys.argv[1:])
    sys.stdout.write(out)
    sys.stderr.write(err)
    return rc
