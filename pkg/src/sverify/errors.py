"""Exception hierarchy.

Every error carries a stable ``code`` so the CLI can map it to an exit status
without string matching.
"""


class SVerifyError(Exception):
    code = "error"


class DegenerateMetric(SVerifyError):
    code = "degenerate_metric"


class SlotOutOfRange(SVerifyError):
    code = "slot_out_of_range"


class DegenerateSpan(SVerifyError):
    code = "degenerate_span"


class DimensionMismatch(SVerifyError):
    code = "dimension_mismatch"


class StructureMismatch(SVerifyError):
    code = "structure_mismatch"


class DegeneratePlane(SVerifyError):
    code = "degenerate_plane"


class NotInImagePhi(SVerifyError):
    code = "not_in_image_phi"


class LightlikeVector(SVerifyError):
    code = "lightlike_vector"


class FrameMismatch(SVerifyError):
    code = "frame_mismatch"


class SingularDesign(SVerifyError):
    code = "singular_design"


class UnknownExample(SVerifyError):
    code = "unknown_example"


class GateFailure(SVerifyError):
    """Raised when a chart structure is not certified as an S-structure."""

    code = "gate_failure"

    def __init__(self, message, checks=None):
        super().__init__(message)
        self.checks = list(checks or [])


class ConfigError(SVerifyError):
    code = "config_error"


class ExpressionError(ConfigError):
    code = "expression_error"
