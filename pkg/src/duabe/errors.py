"""Exception hierarchy shared by every layer of the package."""

from __future__ import annotations


class DuAbeError(Exception):
    """Base class for all DU-ABE failures."""


class FormatError(DuAbeError, ValueError):
    """Malformed encoding; ``offset`` points at the first bad byte when known."""

    def __init__(self, message: str, offset: int | None = None):
        if offset is not None:
            message = f"{message} (at offset {offset})"
        super().__init__(message)
        self.offset = offset


class EmptyInputError(DuAbeError, ValueError):
    pass


class UnsupportedSecurityLevelError(DuAbeError, ValueError):
    pass


# -- policy -----------------------------------------------------------------

class EmptyPolicyError(DuAbeError, ValueError):
    pass


class PolicySyntaxError(DuAbeError, ValueError):
    def __init__(self, position: int, expected: str, found: str = ""):
        detail = f"expected {expected} at position {position}"
        if found:
            detail += f", found {found!r}"
        super().__init__(detail)
        self.position = position
        self.expected = expected
        self.found = found


class PolicyNotSatisfiedError(DuAbeError):
    """The held attributes do not span the target vector of the access matrix."""


class UniverseTooLargeError(DuAbeError, ValueError):
    pass


# -- scheme -----------------------------------------------------------------

class MixedAttributesError(DuAbeError, ValueError):
    pass


class MixedGidsError(DuAbeError, ValueError):
    pass


class DuplicateHolderError(DuAbeError, ValueError):
    pass


class DuplicateIssuerError(DuAbeError, ValueError):
    pass


class EmptyShareListError(DuAbeError, ValueError):
    pass


class EmptyGidError(DuAbeError, ValueError):
    pass


class MissingAttributeKeyError(DuAbeError, KeyError):
    def __init__(self, attribute: str):
        super().__init__(attribute)
        self.attribute = attribute

    def __str__(self) -> str:
        return f"no public key for attribute {self.attribute!r}"


class GidMismatchError(DuAbeError):
    pass


class IncompleteKeyError(DuAbeError):
    """A user key aggregates fewer shares than the attribute's authority group."""


# -- protocol ---------------------------------------------------------------

class ParamsDisagreementError(DuAbeError):
    pass


class TransportFailureError(DuAbeError):
    def __init__(self, gid: str, reason: str):
        super().__init__(f"{gid}: {reason}")
        self.gid = gid
        self.reason = reason


class NotAMemberError(DuAbeError):
    pass


class ShareVerificationFailedError(DuAbeError):
    def __init__(self, issuer: str, reason: str = "pairing check failed"):
        super().__init__(f"key share from {issuer!r} rejected: {reason}")
        self.issuer = issuer


class KeyRequestRejectedError(DuAbeError):
    def __init__(self, issuer: str, reason: str):
        super().__init__(f"{issuer!r} rejected the key request: {reason}")
        self.issuer = issuer
        self.reason = reason


class KeyRequestTimeoutError(DuAbeError):
    def __init__(self, missing: list[str]):
        super().__init__(f"no response from {', '.join(sorted(missing))}")
        self.missing = sorted(missing)


# -- files / cli ------------------------------------------------------------

class MissingParamsError(DuAbeError):
    pass


class RefusesOverwriteError(DuAbeError, FileExistsError):
    pass


class PayloadAuthFailureError(DuAbeError):
    pass


class ScenarioParseError(DuAbeError, ValueError):
    pass
