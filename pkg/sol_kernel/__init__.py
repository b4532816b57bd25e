"""Symbolic Operator Logic kernel, command line and ComfyUI nodes"""

__version__ = "0.1.0"
