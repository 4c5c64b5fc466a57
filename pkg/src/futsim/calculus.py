"""Abstract syntax, configurations, and redex search for the futures calculus.

Expressions are integers, additions, future creations, and (at run time only)
future references. A configuration is an ordered collection of closures, one
per thread, each realizing a distinct future id.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Union

from .scaling import FrequencyLadder, FrequencyLevel

FutureId = int

# Fixed-width arithmetic: both the sequential oracle and the Add rule wrap the
# same way, so they cannot disagree on overflow.
INT_BITS = 64
_INT_MIN = -(1 << (INT_BITS - 1))
_INT_MASK = (1 << INT_BITS) - 1


def wrap_int(n: int) -> int:
    """Wrap to 64-bit two's complement."""
    return ((n - _INT_MIN) & _INT_MASK) + _INT_MIN


@dataclass(frozen=True)
class IntLit:
    value: int


@dataclass(frozen=True)
class Add:
    left: "Expression"
    right: "Expression"


@dataclass(frozen=True)
class FutureCreate:
    body: "Expression"


@dataclass(frozen=True)
class FutureRef:
    fid: FutureId


Expression = Union[IntLit, Add, FutureCreate, FutureRef]


def is_value(expr: Expression) -> bool:
    return isinstance(expr, (IntLit, FutureRef))


def node_count(expr: Expression) -> int:
    if isinstance(expr, Add):
        return 1 + node_count(expr.left) + node_count(expr.right)
    if isinstance(expr, FutureCreate):
        return 1 + node_count(expr.body)
    return 1


def expr_depth(expr: Expression) -> int:
    if isinstance(expr, Add):
        return 1 + max(expr_depth(expr.left), expr_depth(expr.right))
    if isinstance(expr, FutureCreate):
        return 1 + expr_depth(expr.body)
    return 1


def contains_future_ref(expr: Expression) -> bool:
    if isinstance(expr, FutureRef):
        return True
    if isinstance(expr, Add):
        return contains_future_ref(expr.left) or contains_future_ref(expr.right)
    if isinstance(expr, FutureCreate):
        return contains_future_ref(expr.body)
    return False


def future_ref_ids(expr: Expression) -> list[FutureId]:
    """All future ids referenced in expr, in left-to-right occurrence order."""
    out: list[FutureId] = []

    def walk(e: Expression) -> None:
        if isinstance(e, FutureRef):
            out.append(e.fid)
        elif isinstance(e, Add):
            walk(e.left)
            walk(e.right)
        elif isinstance(e, FutureCreate):
            walk(e.body)

    walk(expr)
    return out


# ---------------------------------------------------------------------------
# Context paths and redex search
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class HoleLeft:
    """Frame for an addition whose hole is the left operand: (hole + right)."""

    right: Expression


@dataclass(frozen=True)
class HoleRight:
    """Frame for an addition whose hole is the right operand: (left + hole)."""

    left: Expression


Frame = Union[HoleLeft, HoleRight]
Context = tuple[Frame, ...]

EMPTY_CONTEXT: Context = ()


@dataclass(frozen=True)
class ArithRedex:
    context: Context
    left: int
    right: int


@dataclass(frozen=True)
class CreateRedex:
    context: Context
    body: Expression


@dataclass(frozen=True)
class ClaimSite:
    context: Context
    target: FutureId


@dataclass(frozen=True)
class NoRedex:
    is_value: bool


RedexSite = Union[ArithRedex, CreateRedex, ClaimSite, NoRedex]


def _leftmost_redex(expr: Expression, frames: list[Frame]) -> Union[ArithRedex, CreateRedex, None]:
    if isinstance(expr, FutureCreate):
        # A future expression is itself the redex; evaluation never enters its body.
        return CreateRedex(tuple(frames), expr.body)
    if isinstance(expr, Add):
        frames.append(HoleLeft(expr.right))
        found = _leftmost_redex(expr.left, frames)
        if found is not None:
            return found
        frames.pop()
        if isinstance(expr.left, IntLit) and isinstance(expr.right, IntLit):
            return ArithRedex(tuple(frames), expr.left.value, expr.right.value)
        frames.append(HoleRight(expr.left))
        found = _leftmost_redex(expr.right, frames)
        if found is not None:
            return found
        frames.pop()
    return None


def _leftmost_claim(expr: Expression, frames: list[Frame]) -> Union[ClaimSite, None]:
    if isinstance(expr, FutureRef):
        return ClaimSite(tuple(frames), expr.fid)
    if isinstance(expr, Add):
        frames.append(HoleLeft(expr.right))
        found = _leftmost_claim(expr.left, frames)
        if found is not None:
            return found
        frames.pop()
        frames.append(HoleRight(expr.left))
        found = _leftmost_claim(expr.right, frames)
        if found is not None:
            return found
        frames.pop()
    return None


def decompose(expr: Expression) -> RedexSite:
    """Locate the unique next action in an expression.

    Left-to-right order: the leftmost addition-of-integers or future-creation
    redex wins; only when no redex remains anywhere does the expression expose
    a claim, at its leftmost future reference. Descent skips over claim-pending
    subterms, which keeps the search total: restricting descent to value-only
    left siblings would strand reducible work to the right of a pending claim
    (e.g. ``(fv1 + fv2) + (3 + 4)``) with no applicable rule.

    A bare integer is the only expression with no action left.
    """
    found = _leftmost_redex(expr, [])
    if found is not None:
        return found
    claim = _leftmost_claim(expr, [])
    if claim is not None:
        return claim
    return NoRedex(is_value=isinstance(expr, IntLit))


def plug(context: Context, filler: Expression) -> Expression:
    """Rebuild the expression a context was torn from; inverse of decompose."""
    expr = filler
    for frame in reversed(context):
        if isinstance(frame, HoleLeft):
            expr = Add(expr, frame.right)
        elif isinstance(frame, HoleRight):
            expr = Add(frame.left, expr)
        else:
            raise TypeError(f"not a context frame: {frame!r}")
    return expr


def eval_sequential(expr: Expression) -> int:
    """Evaluate with every future erased; the determinacy oracle."""
    if isinstance(expr, IntLit):
        return expr.value
    if isinstance(expr, Add):
        return wrap_int(eval_sequential(expr.left) + eval_sequential(expr.right))
    if isinstance(expr, FutureCreate):
        return eval_sequential(expr.body)
    raise ValueError("cannot sequentially evaluate an expression holding future references")


# ---------------------------------------------------------------------------
# Configurations
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class Closure:
    """One thread: an expression evaluated at a frequency, realizing a future id."""

    freq: FrequencyLevel
    expr: Expression
    realizes: FutureId


@dataclass(frozen=True)
class Configuration:
    """Ordered closures, most recently created first, plus the fresh-id counter."""

    closures: tuple[Closure, ...]
    next_fresh: FutureId
    root: FutureId

    def closure_for(self, fid: FutureId) -> Closure:
        for c in self.closures:
            if c.realizes == fid:
                return c
        raise KeyError(f"no closure realizes fv{fid}")


def initial_configuration(expr: Expression, level: FrequencyLevel, root_id: FutureId = 0) -> Configuration:
    return Configuration(closures=(Closure(level, expr, root_id),), next_fresh=root_id + 1, root=root_id)


def is_terminal(config: Configuration) -> bool:
    return (
        len(config.closures) == 1
        and config.closures[0].realizes == config.root
        and isinstance(config.closures[0].expr, IntLit)
    )


class ConfigurationError(Exception):
    """A configuration violates a structural invariant."""


def validate_configuration(config: Configuration, ladder: FrequencyLadder | None = None) -> None:
    """Check producer uniqueness, no dangling futures, acyclicity, and ladder membership."""
    producers: dict[FutureId, Closure] = {}
    for c in config.closures:
        if c.realizes in producers:
            raise ConfigurationError(f"two closures realize fv{c.realizes}")
        producers[c.realizes] = c
    if config.root not in producers:
        raise ConfigurationError(f"no closure realizes the root fv{config.root}")

    referenced: dict[FutureId, int] = {}
    for c in config.closures:
        for fid in future_ref_ids(c.expr):
            if fid not in producers:
                raise ConfigurationError(f"dangling reference to fv{fid}")
            referenced[fid] = referenced.get(fid, 0) + 1
    if config.root in referenced:
        raise ConfigurationError("the root future must not be referenced")
    for fid in producers:
        if fid != config.root and referenced.get(fid, 0) != 1:
            raise ConfigurationError(f"fv{fid} referenced {referenced.get(fid, 0)} times, expected once")

    # Each non-root future is referenced exactly once, so reachability from the
    # root implies the realizes/references relation is a tree (hence acyclic).
    seen: set[FutureId] = set()
    stack = [config.root]
    while stack:
        fid = stack.pop()
        if fid in seen:
            raise ConfigurationError(f"fv{fid} reachable twice; reference cycle or sharing")
        seen.add(fid)
        stack.extend(future_ref_ids(producers[fid].expr))
    if seen != set(producers):
        orphans = sorted(set(producers) - seen)
        raise ConfigurationError(f"closures unreachable from the root: {orphans}")

    if ladder is not None:
        for c in config.closures:
            if not ladder.contains(c.freq):
                raise ConfigurationError(f"fv{c.realizes} runs at {c.freq} outside the ladder")
