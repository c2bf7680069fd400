"""Masked-LM embedding export to the protoverb interchange format."""

from .export import ExportError, ExportJob, export

__all__ = ["ExportError", "ExportJob", "export"]
__version__ = "0.1.0"
