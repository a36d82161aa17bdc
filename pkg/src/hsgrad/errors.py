"""Exception hierarchy shared by all hsgrad modules."""


class ToolkitError(Exception):
    """Base class for all hsgrad errors."""


class DomainError(ToolkitError):
    """A point lies outside the domain / bounding box it was required to be in."""


class ParameterError(ToolkitError):
    """An argument is out of its admissible range (exponents, radii, ...)."""


class UnsupportedStructureError(ToolkitError):
    """Operation needs a structured cloud (uniform grid) and got something else."""


class SizeError(ToolkitError):
    """Instance too large for an exact enumeration oracle."""


class PreconditionError(ToolkitError):
    """A documented operation precondition is violated."""


class DegeneratePairError(PreconditionError):
    """Duplicate points make a pairwise constraint degenerate."""


class ConstructionError(ToolkitError):
    """A geometric construction (cover, chain, extension plan) failed.

    ``partial`` carries whatever was built before the failure, for diagnostics.
    """

    def __init__(self, message, partial=None):
        super().__init__(message)
        self.partial = partial


class ResolutionError(ToolkitError):
    """The sample cloud is too coarse for the requested construction."""


class CertificationError(ToolkitError):
    """An LP solve could not be certified to the requested gap."""
