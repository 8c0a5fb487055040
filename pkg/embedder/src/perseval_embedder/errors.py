"""Exception taxonomy for the exporter."""


class ExportError(Exception):
    """Base class for everything the exporter can raise on purpose."""


class CorpusFormatError(ExportError):
    """The corpus file violates the line-oriented JSON contract."""


class ModelLoadError(ExportError):
    """The named pretrained model could not be loaded."""
