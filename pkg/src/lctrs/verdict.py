"""Verdicts and proof traces shared by the provers."""

from dataclasses import dataclass, field


YES = "YES"
NO = "NO"
MAYBE = "MAYBE"


@dataclass
class Proof:
    """A replayable trace: human-readable lines plus structured details.

    ``lines`` is what ``--proof`` prints; ``details`` keeps the objects the
    lines were rendered from (split candidates, closing equations, found
    precedences, ...) so they stay checkable without string parsing.
    """

    method: str
    lines: list = field(default_factory=list)
    details: dict = field(default_factory=dict)

    def note(self, text: str, indent: int = 0):
        self.lines.append("  " * indent + text)

    def extend(self, other: "Proof", indent: int = 0):
        for line in other.lines:
            self.lines.append("  " * indent + line)
        for key, value in other.details.items():
            if isinstance(value, list):
                self.details.setdefault(key, []).extend(value)
            else:
                self.details.setdefault(key, value)

    def add_detail(self, key: str, value):
        self.details.setdefault(key, []).append(value)

    def render(self) -> str:
        return "\n".join(self.lines)


@dataclass
class Verdict:
    answer: str  # YES / NO / MAYBE
    method: str = ""
    proof: Proof | None = None
    elapsed: float = 0.0
    reason: str = ""

    @property
    def definitive(self) -> bool:
        return self.answer in (YES, NO)
