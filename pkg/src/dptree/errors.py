"""Exception hierarchy shared by the library and the command line.

Every error carries the process exit code the CLI reports for it.
"""


class TreeAggError(Exception):
    exit_code = 1
    code = "error"


class InputError(TreeAggError, ValueError):
    """Malformed or out-of-range input (exit code 2)."""

    exit_code = 2
    code = "input"


class MalformedLineError(InputError):
    code = "malformed_line"


class DuplicateIdError(InputError):
    code = "duplicate_id"


class CycleError(InputError):
    code = "cycle"


class MultipleRootsError(InputError):
    code = "multiple_roots"


class NoRootError(InputError):
    code = "no_root"


class UnknownNodeError(InputError, KeyError):
    code = "unknown_node"

    def __str__(self):
        return Exception.__str__(self)


class PreconditionError(TreeAggError):
    """A utility precondition does not hold; privacy is unaffected (exit code 3)."""

    exit_code = 3
    code = "precondition"

    def __init__(self, message, required=None):
        super().__init__(message)
        self.required = required


class ResourceError(TreeAggError):
    exit_code = 4
    code = "resource"
