"""Exception types shared across the toolkit."""


class TiamError(Exception):
    """Base class for all toolkit errors."""


class TemplateError(TiamError):
    """Malformed template definition or placeholder misuse."""


class AssignmentError(TemplateError):
    """Slot assignment rejected by the template's uniqueness constraints."""


class InfeasibleTemplateError(TemplateError):
    """Label or attribute sets too small to fill every slot."""


class SchemaError(TiamError):
    """Input document does not match its documented schema."""


class DataError(TiamError):
    """Operation applied to data that cannot support it."""


class EmptyMaskError(DataError):
    """Segmentation mask with no foreground pixels."""
