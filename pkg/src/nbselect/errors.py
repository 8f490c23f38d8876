class UsageError(ValueError):
    """Bad user-supplied configuration: unknown criterion name, malformed
    structure string, invalid flag combination.  Distinguished from plain
    ``ValueError`` so the service/CLI can map it to a usage exit status."""
