"""Structured diagnostics shared by the checkers, the compiler and the CLI.

A Diagnostic names the rule whose side condition failed, the source span it
was raised at (when one is known), what was expected and what was found.  The
``trail`` records the judgment frames between the failure leaf and the root
judgment, innermost first.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace


@dataclass(frozen=True)
class Span:
    file: str
    line: int
    col: int

    def __str__(self) -> str:
        return f"{self.file}:{self.line}:{self.col}"


@dataclass(frozen=True)
class Diagnostic:
    rule: str
    expected: str = ""
    found: str = ""
    note: str = ""
    span: Span | None = None
    trail: tuple[str, ...] = field(default_factory=tuple)

    def at(self, span: Span | None) -> "Diagnostic":
        """Attach a span if none is recorded yet."""
        if self.span is not None or span is None:
            return self
        return replace(self, span=span)

    def pushed(self, frame: str) -> "Diagnostic":
        return replace(self, trail=self.trail + (frame,))

    def render(self) -> str:
        """Line-oriented text form: ``ERROR <rule> at <file>:<line>:<col>: ...``."""
        loc = str(self.span) if self.span is not None else "<input>:0:0"
        msg = f"ERROR {self.rule} at {loc}: expected {self.expected or '?'}, found {self.found or '?'}"
        if self.note:
            msg += f" ({self.note})"
        return msg

    def __str__(self) -> str:
        return self.render()


class SeqcoreError(Exception):
    """Base for all errors raised out of the kernel."""


class CheckError(SeqcoreError):
    """A typechecking failure carrying its Diagnostic."""

    def __init__(self, diagnostic: Diagnostic):
        super().__init__(diagnostic.render())
        self.diagnostic = diagnostic


class ParseError(SeqcoreError):
    """A syntax failure in surface or core text, carrying its Diagnostic."""

    def __init__(self, diagnostic: Diagnostic):
        super().__init__(diagnostic.render())
        self.diagnostic = diagnostic
