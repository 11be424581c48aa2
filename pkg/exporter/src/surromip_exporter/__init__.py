"""Export trained ML models into the surromip interchange format."""

from .export import (
    ExportError,
    ExportJob,
    UnsupportedModelError,
    VerificationError,
    convert_model,
    export_model,
    verify_export,
)

__all__ = [
    "ExportError",
    "ExportJob",
    "UnsupportedModelError",
    "VerificationError",
    "convert_model",
    "export_model",
    "verify_export",
]
