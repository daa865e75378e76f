"""Exception hierarchy. Every error raised on purpose derives from FloorLineError."""


class FloorLineError(Exception):
    """Base class for all errors raised by this package."""


# -- geometry ---------------------------------------------------------------

class DegenerateQuad(FloorLineError):
    """Quad correspondence yields a rank-deficient linear system."""


class PointAtInfinity(FloorLineError):
    """Projective map sends the point to (near-)zero homogeneous depth."""


class SingularMatrix(FloorLineError):
    """Matrix is not invertible (or cannot be normalized to m22 = 1)."""


# -- io ---------------------------------------------------------------------

class MalformedHeader(FloorLineError):
    """PGM header or payload content is not well-formed."""


class TruncatedPayload(FloorLineError):
    """PGM payload is shorter than width * height samples."""


class MaxvalTooLarge(FloorLineError):
    """PGM maxval exceeds 255 (multi-byte samples unsupported)."""


class IoFailure(FloorLineError):
    """Underlying file operation failed."""


class SchemaViolation(FloorLineError):
    """JSON document violates the declared schema.

    ``path`` is a JSON-pointer-style location of the offending field.
    """

    def __init__(self, path: str, message: str):
        self.path = path
        super().__init__(f"{path or '/'}: {message}")


class PaletteViolation(FloorLineError):
    """Mask contains label codes outside its declared palette."""


# -- augmentation -----------------------------------------------------------

class UnmappedLabel(FloorLineError):
    """Relabeling table is missing codes present in the mask."""

    def __init__(self, codes):
        self.codes = tuple(sorted(codes))
        super().__init__(f"no mapping for label codes {list(self.codes)}")


# -- dataset stats ----------------------------------------------------------

class ProbabilityOutOfRange(FloorLineError):
    """A probability argument falls outside [0, 1]."""


class EmptyDataset(FloorLineError):
    """Aggregate operation received no input items."""


# -- attention kernel -------------------------------------------------------

class DimensionMismatch(FloorLineError):
    """Operand shapes are incompatible."""


class StaleCache(FloorLineError):
    """Backward pass received a cache that does not match the upstream gradient."""


class LabelOutOfRange(FloorLineError):
    """Target label exceeds the number of prediction channels."""


# -- postprocess ------------------------------------------------------------

class DegenerateSpread(FloorLineError):
    """Pixel cluster is too narrow in x for a stable line fit."""


class TooFewLines(FloorLineError):
    """Vanishing-point refinement needs at least two line groups."""


class LineOutsideFacade(FloorLineError):
    """Evaluated segment lies entirely outside the facade's vertical range."""


# -- metrics ----------------------------------------------------------------

class EmptyRaster(FloorLineError):
    """Rasterized line covers zero in-bounds pixels."""
