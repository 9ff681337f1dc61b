"""src package initializer for the poset-channel capacity bound modules."""

__all__ = [
    "channel",
    "cli",
    "config",
    "errors",
    "mixing",
    "oracle",
    "poset_dag",
    "result_io",
    "simplex",
    "solver",
    "zoo",
]
