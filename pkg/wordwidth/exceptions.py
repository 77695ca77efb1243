from rest_framework.exceptions import ValidationError
from django.conf import settings
import logging

logger = logging.getLogger(__name__)


class LabError(Exception):
    """
    Base error for every library failure.
    `exit_code` follows the command contract: 1 for violated preconditions
    or broken guarantees, 2 for soft failures such as exhausted searches.
    """
    code = "LAB_ERROR"
    default_message = "The computation failed."
    exit_code = 1

    def __init__(self, message=None, details=None):
        self.message = message or self.default_message
        self.details = list(details or [])
        super().__init__(self.message)


class PreconditionError(LabError):
    code = "PRECONDITION_FAILED"
    default_message = "Input does not satisfy the operation's preconditions."


class DimensionMismatchError(PreconditionError):
    code = "DIMENSION_MISMATCH"
    default_message = "Matrix dimensions do not match."


class NotUnimodularError(PreconditionError):
    code = "NOT_UNIMODULAR"
    default_message = "Matrix determinant is not a unit."


class MembershipError(PreconditionError):
    code = "MEMBERSHIP_FAILED"
    default_message = "Element is not in the required subgroup."


class MatrixFormatError(PreconditionError):
    code = "PARSE_ERROR"
    default_message = "Malformed matrix text."


class WordSyntaxError(PreconditionError):
    code = "PARSE_ERROR"
    default_message = "Malformed word."

    def __init__(self, message=None, position=None, text=None):
        self.position = position
        self.text = text
        details = []
        if position is not None:
            details.append({"field": "position", "message": str(position)})
        super().__init__(message, details)


class TrivialWordError(PreconditionError):
    code = "TRIVIAL_WORD"
    default_message = "The word is trivial in the free group."


class OutOfRelationError(PreconditionError):
    code = "OUT_OF_RELATION"
    default_message = "No commutator relation covers this index pattern."


class RankDeficiencyError(PreconditionError):
    code = "RANK_DEFICIENT"
    default_message = "The differential is not onto modulo p."

    def __init__(self, message=None, rank=None, expected=None):
        self.rank = rank
        self.expected = expected
        super().__init__(message, [{"field": "rank", "message": f"{rank} of {expected}"}])


class CertificateError(LabError):
    code = "CERTIFICATE_FAILED"
    default_message = "Certificate replay failed."


class BudgetExceededError(LabError):
    code = "BUDGET_EXCEEDED"
    default_message = "The configured budget is too small for this computation."
    exit_code = 2


class SoftFailure(LabError):
    code = "SEARCH_EXHAUSTED"
    default_message = "The best-effort search did not finish within its budget."
    exit_code = 2


def build_error_payload(exc):
    """
    Renders any exception into the error envelope
    {"error": {"code", "message", "details": [{"field", "message"}]}}.
    """
    payload = {
        "error": {
            "code": "GENERIC_ERROR",
            "message": "An error occurred.",
            "details": []
        }
    }
    error_payload = payload["error"]

    if isinstance(exc, LabError):
        error_payload["code"] = exc.code
        error_payload["message"] = exc.message
        error_payload["details"] = exc.details
    elif isinstance(exc, ValidationError):
        error_payload["code"] = "VALIDATION_ERROR"
        error_payload["message"] = "Invalid input data."
        details = []
        if isinstance(exc.detail, dict):
            for field, messages in exc.detail.items():
                if isinstance(messages, list):
                    for message in messages:
                        details.append({"field": field, "message": str(message)})
                else:
                    details.append({"field": field, "message": str(messages)})
        elif isinstance(exc.detail, list):
            for message in exc.detail:
                details.append({"field": "non_field_errors", "message": str(message)})
        else:
            details.append({"field": "detail", "message": str(exc.detail)})
        error_payload["details"] = details
    else:
        logger.error(f"Unhandled exception: {exc}", exc_info=True)
        error_payload["code"] = "INTERNAL_ERROR"
        error_payload["message"] = "An unexpected error occurred."
        # Raw exception text only in DEBUG mode
        error_payload["details"] = [{"field": "unexpected_error", "message": "An unexpected error occurred."}]
        if settings.DEBUG:
            error_payload["details"][0]["message"] = str(exc)

    return payload


def exit_code_for(exc):
    if isinstance(exc, LabError):
        return exc.exit_code
    return 1
