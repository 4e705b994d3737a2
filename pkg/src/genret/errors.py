"""Exception types shared across the toolkit."""


class GenRetError(Exception):
    """Base class for all toolkit errors."""


class CorpusError(GenRetError):
    """Malformed corpus files or broken referential integrity."""


class DocIdError(GenRetError):
    """A document ID could not be built or an assignment is not bijective."""


class TrieError(GenRetError):
    """Invalid trie construction or lookup of an unknown prefix/ID."""


class DecodeError(GenRetError):
    """Beam search invoked against an unusable trie or configuration."""


class ScorerTransportError(GenRetError):
    """Remote scorer connection failed, timed out, or was closed mid-request."""


class ProtocolError(GenRetError):
    """Remote scorer replied with a malformed or contract-violating message."""


class EvalError(GenRetError):
    """Evaluation preconditions violated (e.g. empty gold set)."""


class StageError(GenRetError):
    """Pipeline failure carrying the name of the stage that raised."""

    def __init__(self, stage: str, message: str):
        super().__init__(f"{stage}: {message}")
        self.stage = stage
