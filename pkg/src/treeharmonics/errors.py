"""Exception taxonomy shared across the package.

Every error raised by the library derives from :class:`TreeHarmonicsError`,
so callers (and the CLI) can catch one base class.  The leaf classes are
named after the invariant they report.
"""


class TreeHarmonicsError(Exception):
    """Base class for all errors raised by this package."""


# ---- tree construction -------------------------------------------------

class EmptyInput(TreeHarmonicsError):
    """The parent list was empty."""


class MultipleRoots(TreeHarmonicsError):
    """More than one vertex has no parent."""


class CycleDetected(TreeHarmonicsError):
    """The parent assignment is not acyclic (or leaves no root at all)."""


class MixedLeafLevels(TreeHarmonicsError):
    """Not all childless vertices sit at the same distance from the top."""


# ---- level arithmetic --------------------------------------------------

class LevelUnderflow(TreeHarmonicsError):
    """A walk below level 0 was requested."""


class LevelOverflow(TreeHarmonicsError):
    """A walk above the top vertex was requested."""


# ---- measures and geometry --------------------------------------------

class DimensionMismatch(TreeHarmonicsError):
    """An array's length does not match the tree (vertices or leaves)."""


class NoInternalVertices(TreeHarmonicsError):
    """An operation needing at least one internal vertex got a single-vertex tree."""


class RadiusOutOfRange(TreeHarmonicsError):
    """A boundary ball radius falls outside the truncation's level range."""


# ---- analysis ----------------------------------------------------------

class InvalidExponent(TreeHarmonicsError):
    """An exponent p outside the operation's admissible range."""


class RequiresLocallyDoubling(TreeHarmonicsError):
    """The flow's lower doubling constant is not > 1, so the bound is undefined."""


# ---- instance files ----------------------------------------------------

class ParseError(TreeHarmonicsError):
    """An instance file is not syntactically well formed."""


class ValidationError(TreeHarmonicsError):
    """A structurally valid input violates a named invariant."""
