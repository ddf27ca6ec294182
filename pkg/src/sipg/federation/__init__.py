"""Socket federation: wire protocol, coordinator, federates, file exchange."""

from sipg.federation.protocol import (PROTOCOL_VERSION, ProtocolError,
                                      FrameDecoder, encode_frame)
from sipg.federation.coordinator import FederationCoordinator
from sipg.federation.federate import FederateClient, SectorFederate, FederationError
from sipg.federation.exchange import (ExchangeError, FlowsDocument,
                                      export_flows_text, parse_flows_text,
                                      boundary_overrides)

__all__ = [
    "PROTOCOL_VERSION",
    "ProtocolError",
    "FrameDecoder",
    "encode_frame",
    "FederationCoordinator",
    "FederateClient",
    "SectorFederate",
    "FederationError",
    "ExchangeError",
    "FlowsDocument",
    "export_flows_text",
    "parse_flows_text",
    "boundary_overrides",
]
