"""Error types for the language-model bridge."""


class BridgeError(RuntimeError):
    pass


class TransportError(BridgeError):
    """The client could not obtain a response (network, auth, missing replay)."""


class ParseError(BridgeError):
    """The response did not yield a usable waypoint block."""


class PromptError(BridgeError):
    """A template variable was left unbound."""


class UnknownInstructionError(BridgeError):
    """The rule-based translator does not recognize the instruction."""


class TranslationError(BridgeError):
    """Translation failed after exhausting retries."""
