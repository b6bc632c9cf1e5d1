from .client import ChatCompletion, CompletionClient, EndpointError
from .config import EndpointConfig, GatewayConfig, load_gateway_config
from .prompts import load_templates
from .service import Gateway, RouteResult, create_app

__all__ = [
    "ChatCompletion",
    "CompletionClient",
    "EndpointConfig",
    "EndpointError",
    "Gateway",
    "GatewayConfig",
    "RouteResult",
    "create_app",
    "load_gateway_config",
    "load_templates",
]
