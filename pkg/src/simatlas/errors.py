"""Common exception base for the testbed."""


class AtlasError(Exception):
    """Base class for all errors raised by this package."""

    code = "AtlasError"

    def __init__(self, message: str = "", **details):
        super().__init__(message or self.code)
        self.message = message or self.code
        self.details = details

    def as_dict(self) -> dict:
        out = {"code": self.code, "message": self.message}
        out.update(self.details)
        return out
