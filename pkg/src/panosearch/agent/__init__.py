"""Agent-side protocol: prompts, response parsing, policies, remote client."""

from panosearch.parsing import ParsedResponse, parse_response, render_response
from panosearch.agent.policies import BaselinePolicy, OraclePolicy, make_policy
from panosearch.agent.prompts import PromptBundle, build_prompt
from panosearch.agent.remote import EndpointConfig, RemoteAgent

__all__ = [
    "BaselinePolicy",
    "EndpointConfig",
    "OraclePolicy",
    "ParsedResponse",
    "PromptBundle",
    "RemoteAgent",
    "build_prompt",
    "make_policy",
    "parse_response",
    "render_response",
]
