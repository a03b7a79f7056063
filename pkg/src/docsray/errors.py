"""Exception hierarchy shared across the engine."""


class DocsrayError(Exception):
    """Base class for all engine errors."""


class TransportError(DocsrayError):
    """An HTTP backend could not be reached after the bounded retries."""


class BackendError(DocsrayError):
    """A backend responded but the response is unusable (empty, wrong shape)."""


class CapabilityError(DocsrayError):
    """The request needs a capability (e.g. vision) the backend lacks."""


class LayoutParseError(DocsrayError):
    """A paged-layout file violates the schema; message names page and field."""


class IndexFormatError(DocsrayError):
    """An index file has the wrong version, a bad checksum, or is corrupt."""
