__all__ = [
    "audit",
    "cli",
    "config",
    "dispatch",
    "errors",
    "geo",
    "ldt",
    "progress",
    "protocol",
    "routes",
    "sim",
    "store",
    "trigger",
]
