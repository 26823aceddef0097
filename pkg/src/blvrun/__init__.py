"""blvrun: run a script, capture its traceback, and present a concise summary."""

__version__ = "0.1.0"
