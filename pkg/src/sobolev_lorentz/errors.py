class CertificationError(RuntimeError):
    """A computed quantity failed a mathematical check it is required to pass."""
