from typing import Optional


class GazetteerError(Exception):
    """Root of every domain error raised by the toolkit."""
    pass


class InvalidSurface(GazetteerError):
    """A name variant surface breaks the storage invariants."""
    pass


# --------------------------------------------------------------------- #
# Resource file errors
# --------------------------------------------------------------------- #
class ResourceFormatError(GazetteerError):
    """A line of the resource file could not be parsed."""

    def __init__(self, line_no: int, message: str) -> None:
        self.line_no = line_no
        super().__init__(f"line {line_no}: {message}")


class MalformedLine(ResourceFormatError):
    pass


class InvalidType(ResourceFormatError):
    pass


class InvalidLanguage(ResourceFormatError):
    pass


class DuplicateVariant(ResourceFormatError):
    pass


# --------------------------------------------------------------------- #
# Moderation errors
# --------------------------------------------------------------------- #
class EditError(GazetteerError):
    """A moderation edit cannot be applied to the repository."""

    def __init__(self, message: str, line_no: Optional[int] = None) -> None:
        self.message = message
        self.line_no = line_no
        super().__init__(message if line_no is None else f"line {line_no}: {message}")

    def at_line(self, line_no: int) -> "EditError":
        """Return a copy of this error tagged with the edit-log line."""
        return type(self)(self.message, line_no=line_no)


class UnknownEntity(EditError):
    pass


class UnknownVariant(EditError):
    pass


class SelfMerge(EditError):
    pass
