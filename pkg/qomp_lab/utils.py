import csv
import io
import json
import uuid
from pathlib import Path
from typing import Any, Iterable, Optional, Sequence, Union

PathLike = Union[str, Path]


def create_error_response(
    detail: str,
    criticality: str = "critical",
    recovery_suggestion: Optional[str] = None,
    **kwargs
):
    """
    Create a standardized error response following the common error format

    Args:
        detail: The main error message
        criticality: Indicates if the process was stopped (critical, non-critical, unknown)
        recovery_suggestion: Optional human-readable suggestion for resolving the error
        kwargs: Any additional fields to include in the error

    Returns:
        Dict with error information in the common error format
    """
    error = {"criticality": criticality, "id": str(uuid.uuid4()), "detail": detail}

    if recovery_suggestion:
        error["recoverySuggestion"] = recovery_suggestion

    for key, value in kwargs.items():
        if key not in error:
            error[key] = value

    return error


def dumps_json(payload: Any) -> str:
    """Serialize with sorted keys and fixed indentation so reruns are byte-identical."""
    return json.dumps(payload, sort_keys=True, indent=2) + "\n"


def format_csv(header: Sequence[str], rows: Iterable[Sequence[Any]]) -> str:
    buffer = io.StringIO()
    writer = csv.writer(buffer, lineterminator="\n")
    writer.writerow(header)
    for row in rows:
        writer.writerow(["" if cell is None else cell for cell in row])
    return buffer.getvalue()


def write_text(path: Optional[PathLike], text: str) -> None:
    """Write to a file, or to stdout when no path is given."""
    if path is None:
        print(text, end="")
        return
    target = Path(path)
    if target.parent and not target.parent.exists():
        target.parent.mkdir(parents=True, exist_ok=True)
    target.write_text(text, encoding="utf-8")
