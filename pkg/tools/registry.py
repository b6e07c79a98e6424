"""
Auction Tools Registry - command name to tool instance
"""

import logging
from typing import Dict, List

from tools.mechanism_tools import CheckRegularityTool, RunMechanismTool
from tools.tool_base import AuctionToolBase
from tools.verification_tools import OracleCompareTool, VerifySuiteTool

logger = logging.getLogger(__name__)


class AuctionToolsRegistry:
    """
    Registry holding one instance of every CLI command.
    """

    def __init__(self):
        self.tools: Dict[str, AuctionToolBase] = {}
        self._register_default_tools()

    def _register_default_tools(self) -> None:
        for tool in (RunMechanismTool(), OracleCompareTool(), VerifySuiteTool(), CheckRegularityTool()):
            self.register_tool(tool)

    def register_tool(self, tool: AuctionToolBase) -> None:
        self.tools[tool.name] = tool
        logger.debug(f"Registered command {tool.name}")

    def get_tool(self, name: str) -> AuctionToolBase:
        if name not in self.tools:
            raise KeyError(f"Unknown command {name!r}")
        return self.tools[name]

    def list_tools(self) -> List[Dict[str, str]]:
        return [{"name": tool.name, "description": tool.description} for tool in self.tools.values()]
