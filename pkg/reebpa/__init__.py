# reebpa/__init__.py
# Pure logic layer, no front-end dependencies. The CLI in reebpa.cli is the only entry point.

__version__ = "1.0.0"
TOOL_NAME = "reebpa"
REPORT_SCHEMA = "reebpa/1"
