class LambdaStoreError(Exception):
    pass


class ConfigError(LambdaStoreError, ValueError):
    pass


class NumericalInvariantError(LambdaStoreError, ArithmeticError):
    """A runtime monitor (trace, Hermiticity, phase structure, finiteness) tripped.

    ``monitor`` names the check; ``z_index`` and ``t`` locate it when known.
    """

    def __init__(self, monitor, message, z_index=None, t=None):
        where = []
        if z_index is not None:
            where.append(f"z-index {z_index}")
        if t is not None:
            where.append(f"t'={t:.6e}")
        suffix = f" at {', '.join(where)}" if where else ""
        super().__init__(f"[{monitor}] {message}{suffix}")
        self.monitor = monitor
        self.z_index = z_index
        self.t = t


class AdiabaticRelationError(LambdaStoreError, ValueError):
    """Adiabatic coherence relation undefined (zero control coupling)."""


class NoStoredCoherenceError(LambdaStoreError, ValueError):
    pass


class NothingReleasedError(LambdaStoreError, ValueError):
    pass
