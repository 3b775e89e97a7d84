"""S-expression reading and writing.

Atoms are kept as plain strings; interpretation (numeral, bit-vector
literal, symbol) is left to the caller.  Comments run from ``;`` to the
end of the line.
"""
from __future__ import annotations

Sexp = "str | list"


class SexpError(ValueError):
    def __init__(self, msg: str, line: int = 0):
        super().__init__(f"line {line}: {msg}" if line else msg)
        self.line = line


_DELIMS = "()"


def tokenize(text: str):
    """Yield (token, line) pairs."""
    line = 1
    i = 0
    n = len(text)
    while i < n:
        c = text[i]
        if c == "\n":
            line += 1
            i += 1
        elif c in " \t\r":
            i += 1
        elif c == ";":
            while i < n and text[i] != "\n":
                i += 1
        elif c in _DELIMS:
            yield c, line
            i += 1
        elif c == "|":
            # quoted symbol, SMT-LIB style
            j = text.find("|", i + 1)
            if j < 0:
                raise SexpError("unterminated |symbol|", line)
            yield text[i : j + 1], line
            line += text.count("\n", i, j)
            i = j + 1
        elif c == '"':
            j = i + 1
            while j < n and text[j] != '"':
                j += 1
            if j >= n:
                raise SexpError("unterminated string", line)
            yield text[i : j + 1], line
            i = j + 1
        else:
            j = i
            while j < n and text[j] not in " \t\r\n();|\"":
                j += 1
            yield text[i:j], line
            i = j


def parse_all(text: str) -> list:
    """Parse every toplevel s-expression in *text*."""
    stack: list[list] = []
    top: list = []
    last_line = 1
    for tok, line in tokenize(text):
        last_line = line
        if tok == "(":
            stack.append([])
        elif tok == ")":
            if not stack:
                raise SexpError("unbalanced ')'", line)
            done = stack.pop()
            (stack[-1] if stack else top).append(done)
        else:
            (stack[-1] if stack else top).append(tok)
    if stack:
        raise SexpError("unbalanced '('", last_line)
    return top


def parse_one(text: str):
    exprs = parse_all(text)
    if len(exprs) != 1:
        raise SexpError(f"expected one expression, got {len(exprs)}")
    return exprs[0]


def render(node) -> str:
    if isinstance(node, str):
        return node
    return "(" + " ".join(render(x) for x in node) + ")"
