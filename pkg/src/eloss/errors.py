"""Exception types shared across the package.

The CLI maps these onto exit codes: ``InvalidArgument`` -> 2,
``InvalidData`` (and its subclasses) -> 3.
"""


class InvalidArgument(ValueError):
    """A caller-supplied parameter is out of range or inconsistent."""


class InvalidData(ValueError):
    """Input values cannot be used (non-finite entries, unparsable files)."""


class DegenerateSampleError(InvalidData):
    """The sample makes an estimate undefined, e.g. duplicate points give log(0)."""


class ParseError(InvalidData):
    def __init__(self, message, path=None, line=None):
        self.path = path
        self.line = line
        where = ""
        if path is not None:
            where += f"{path}"
        if line is not None:
            where += f":{line}"
        super().__init__(f"{where}: {message}" if where else message)
