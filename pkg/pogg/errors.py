class PoggError(Exception):
    """Base class for all custom exceptions in the pogg laboratory."""

    pass


class PoggBuildModelError(PoggError):
    def __init__(self, err: Exception, message: str = "Failed to build game model"):
        super().__init__(f"{message}: {err}")


class PoggConfigError(PoggError):
    def __init__(self, err: Exception, message: str):
        out = f"{message}\nError: {err}" if err is not None else f"{message}"
        super().__init__(out)


class PoggSampleError(PoggError):
    def __init__(self, message: str):
        super().__init__(f"Inconsistent sample: {message}")


class PoggProfileError(PoggError):
    def __init__(self, message: str = "Operation requires a profile that contributes on Root and Clean samples"):
        super().__init__(f"{message}")


class PoggVacuousBoundError(PoggError):
    """Raised when a threshold has a non-positive denominator or an empty region."""

    def __init__(self, message: str):
        super().__init__(f"Bound vacuous: {message}")


class PoggNoCriticalPairError(PoggError):
    def __init__(self, max_s: float, reason: str = "max S <= 1"):
        self.max_s = max_s
        super().__init__(f"No interior critical pair ({reason}): max S = {max_s}")


class PoggEnumerationCapError(PoggError):
    def __init__(self, total_players: int, cap: int):
        self.total_players = total_players
        self.cap = cap
        super().__init__(f"Enumeration cap exceeded: N = {total_players} > cap {cap}")


class PoggOutputError(PoggError):
    def __init__(self, err: Exception, path: str):
        super().__init__(f"Failed to write artifact '{path}': {err}")
