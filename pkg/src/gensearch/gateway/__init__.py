from .base import (
    Gateway,
    GatewayError,
    GenerationParams,
    JUDGE_PARAMS,
    ProviderRefusalError,
    ProviderSpec,
    TransportError,
)
from .http import HttpGateway
from .stub import (
    CallLog,
    CallRecord,
    FixtureDirMissingError,
    STUB_EMBED_DIMENSION,
    StubGateway,
    fixture_digest,
    fixture_path,
    make_stub_gateway,
    write_default_fixture,
    write_fixture,
)

__all__ = [
    "CallLog",
    "CallRecord",
    "FixtureDirMissingError",
    "Gateway",
    "GatewayError",
    "GenerationParams",
    "HttpGateway",
    "JUDGE_PARAMS",
    "ProviderRefusalError",
    "ProviderSpec",
    "STUB_EMBED_DIMENSION",
    "StubGateway",
    "TransportError",
    "fixture_digest",
    "fixture_path",
    "make_stub_gateway",
    "write_default_fixture",
    "write_fixture",
]
