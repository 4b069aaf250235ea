"""Exception hierarchy.

Domain errors carry a ``witness`` describing the offending object so that
callers (and the command line front end) can report it verbatim.
"""

from __future__ import annotations

from typing import Any


class BToricError(Exception):
  """Base class for all library errors."""


class DomainError(BToricError):
  """A mathematically meaningful failure on well-formed input."""

  def __init__(self, message: str, witness: Any = None):
    super().__init__(message)
    self.witness = witness

  @property
  def name(self) -> str:
    return type(self).__name__


class InvalidPresentation(DomainError):
  """Structurally malformed monoid presentation."""


class NotIntegral(DomainError):
  """A stated relation fails in the ambient lattice."""


class NotSaturated(DomainError):
  pass


class HasTorsion(DomainError):
  pass


class NotSharp(DomainError):
  pass


class RankOverflow(DomainError):
  """A configured enumeration bound was exceeded."""


class NotInMonoid(DomainError):
  pass


class InvalidPoint(DomainError):
  pass


class ChartMismatch(DomainError):
  pass


class UnsupportedFace(DomainError):
  pass


class NotAlmostComplex(DomainError):
  pass


class TransversalityViolation(DomainError):
  pass


class NotClosed(DomainError):
  pass


class NotExact(DomainError):
  pass


class NotIntegrable(DomainError):
  pass


class PreconditionResidual(DomainError):
  pass


class DegreeOverflow(DomainError):
  pass


class ParseError(BToricError):
  """Malformed input file; carries a 1-based line and column when known."""

  def __init__(self, message: str, line: int | None = None,
               column: int | None = None, hint: str | None = None):
    self.line = line
    self.column = column
    self.hint = hint
    where = ""
    if line is not None:
      where = f" (line {line}" + (f", column {column}" if column else "") + ")"
    text = message + where
    if hint:
      text += f"; expected {hint}"
    super().__init__(text)
    self.message = message
