"""Reservoir-driven holonomies: simulation and verification of DFS transport."""

__version__ = '0.3.0'


class HolodynException(Exception):
    """
    Library error.

    The first argument is a code from :mod:`holodyn.errno`, the remaining ones
    are human-readable diagnostics.
    """

    def __init__(self, code, *details):
        super().__init__(code, *details)
        self.code = code
        self.details = details

    @property
    def exit_code(self):
        from holodyn import errno
        if self.code in errno.PRECONDITION_CODES:
            return errno.EXIT_PRECONDITION
        return errno.EXIT_INVARIANT

    def __str__(self):
        if not self.details:
            return 'HolodynException(%d)' % self.code
        return '[%d] %s' % (self.code, '; '.join(str(d) for d in self.details))
