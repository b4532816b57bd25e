"""
ComfyUI SOL Kernel Extension

Nodes that run Symbolic Operator Logic scripts and the built-in property
suites inside a workflow.
"""

from .sol_kernel.nodes import NODE_CLASS_MAPPINGS, NODE_DISPLAY_NAME_MAPPINGS
from .sol_kernel.utils.log import log_info, log_warning

__all__ = ["NODE_CLASS_MAPPINGS", "NODE_DISPLAY_NAME_MAPPINGS"]

if NODE_CLASS_MAPPINGS:
    log_info(f"SOL Kernel loaded {len(NODE_CLASS_MAPPINGS)} nodes: {', '.join(sorted(NODE_CLASS_MAPPINGS))}")
else:
    log_warning("SOL Kernel loaded no nodes")
