"""lscript: a small statically typed script language with model-filled typed holes.

Each hole is checked against its expected type and the live lexical scope
before any generated code runs; rejected snippets leave the session
untouched and their diagnostics drive bounded retries.
"""

__version__ = "0.1.0"
