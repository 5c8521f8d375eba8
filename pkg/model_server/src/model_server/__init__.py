"""HTTP shim serving a masked language model over the gateway wire protocol.

Endpoints: POST /fill, POST /embed, GET /capabilities, GET /healthz. The
server is stateless per request; the pinned model identifier is reported in
/capabilities so recorded responses stay attributable.
"""

__version__ = "0.1.0"

from .backend import MaskedLMBackend, TransformersBackend
from .server import ServerConfig, create_app
