"""Interaction acts: the device-independent units of user-service interaction.

An act says *what* can happen (show information, enter text, pick one of a set
of alternatives, ...) and deliberately says nothing about widgets, devices or
modalities.  Presentation is layered on separately through customization forms
(`ubi.forms`) and chosen per device by an interaction engine (`ubi.engine`,
`ubi.renderers`).

Everything in this module is an immutable value; trees can be shared freely
between threads and sessions.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field
from typing import Union


class ActKind(enum.Enum):
    """The closed vocabulary of interaction kinds."""

    INPUT = "input"
    OUTPUT = "output"
    SELECTION = "selection"
    MODIFICATION = "modification"
    CREATE = "create"
    DESTROY = "destroy"
    START = "start"
    STOP = "stop"

    def __str__(self) -> str:
        return self.value


KIND_BY_NAME = {kind.value: kind for kind in ActKind}

#: Kinds that may travel upstream. ``output`` only presents information the
#: user cannot act on, so it never produces a response.
RESPONSE_KINDS = frozenset(k for k in ActKind if k is not ActKind.OUTPUT)

#: Kinds an alternative may hand back in place of a plain selection response.
ALTERNATIVE_RETURN_KINDS = frozenset({ActKind.CREATE, ActKind.STOP})


@dataclass(frozen=True)
class LifeCycle:
    """How long a component generated from an act stays in the interface.

    ``persistent`` components stay until the service removes them,
    ``confirmed`` components disappear once the user has acted on them, and
    ``temporary`` components are taken down after ``duration`` seconds.
    """

    mode: str
    duration: float | None = None

    _MODES = ("temporary", "confirmed", "persistent")

    def __post_init__(self) -> None:
        if self.mode not in self._MODES:
            raise ValueError(f"unknown life cycle mode: {self.mode!r}")
        if self.mode == "temporary":
            if self.duration is None or not self.duration > 0:
                raise ValueError("temporary life cycle requires duration > 0")
        elif self.duration is not None:
            raise ValueError(f"{self.mode} life cycle carries no duration")

    @property
    def is_temporary(self) -> bool:
        return self.mode == "temporary"

    @property
    def is_confirmed(self) -> bool:
        return self.mode == "confirmed"

    @property
    def is_persistent(self) -> bool:
        return self.mode == "persistent"


PERSISTENT = LifeCycle("persistent")
CONFIRMED = LifeCycle("confirmed")


def temporary(seconds: float) -> LifeCycle:
    return LifeCycle("temporary", float(seconds))


Metadata = tuple[tuple[str, str], ...]


@dataclass(frozen=True)
class Alternative:
    """One choice offered by a selection act.

    Alternatives inherit life cycle and modality from their parent selection;
    they only carry an id, a label, the value sent back when picked, and
    optionally the kind of act the pick turns into (``returns``), which
    realizes the asymmetric flow where picking an alternative hands a
    ``create`` or ``stop`` back to the service instead of a selection value.
    """

    id: str
    label: str
    return_value: str
    returns: ActKind | None = None


@dataclass(frozen=True)
class InteractionAct:
    """A single interaction act.

    ``response_number`` and ``alternatives`` are meaningful only for
    selections: the number of alternatives the user may activate while the
    selection is presented, and the alternatives themselves.
    """

    id: str
    kind: ActKind
    life: LifeCycle = PERSISTENT
    modal: bool = False
    default_info: str = ""
    name: str | None = None
    group: str | None = None
    metadata: Metadata = ()
    response_number: int | None = None
    alternatives: tuple[Alternative, ...] = ()

    def __post_init__(self) -> None:
        object.__setattr__(self, "metadata", tuple(self.metadata))
        object.__setattr__(self, "alternatives", tuple(self.alternatives))


@dataclass(frozen=True)
class IslGroup:
    """An ordered group of acts (or nested groups) presented together.

    Groups carry the same attribute set as single acts and may nest without
    bound in the model; the codec enforces a configurable depth limit.
    """

    id: str
    life: LifeCycle = PERSISTENT
    modal: bool = False
    default_info: str = ""
    name: str | None = None
    group: str | None = None
    metadata: Metadata = ()
    children: tuple[Union[InteractionAct, "IslGroup"], ...] = ()

    def __post_init__(self) -> None:
        object.__setattr__(self, "metadata", tuple(self.metadata))
        object.__setattr__(self, "children", tuple(self.children))


IslNode = Union[InteractionAct, IslGroup]


@dataclass(frozen=True)
class UpstreamResponse:
    """What travels back when the user acts: the act id plus input data.

    The response kind may differ from the presented act's kind (a selection
    alternative can return a create or a stop).  Life cycle, modality, names
    and metadata never travel upstream.
    """

    act_id: str
    kind: ActKind
    payload: str | None = None


@dataclass(frozen=True)
class Violation:
    """A broken tree invariant, reported as data rather than an exception."""

    act_id: str
    rule: str
    message: str


def iter_nodes(root: IslNode):
    """Depth-first, document-order iteration over a tree's nodes."""
    stack = [root]
    while stack:
        node = stack.pop()
        yield node
        if isinstance(node, IslGroup):
            stack.extend(reversed(node.children))


def validate_tree(root: IslNode) -> list[Violation]:
    """Check every model invariant of ``root``; return one violation per break.

    An empty list means the tree is valid. Violations are data: the offending
    id and the rule it breaks.
    """
    violations: list[Violation] = []
    seen_ids: set[str] = set()

    def check_id(node_id: str) -> None:
        if not node_id:
            violations.append(Violation(node_id, "empty-id", "id must be a non-empty token"))
        elif node_id in seen_ids:
            violations.append(
                Violation(node_id, "duplicate-id", f"id {node_id!r} appears more than once")
            )
        else:
            seen_ids.add(node_id)

    for node in iter_nodes(root):
        check_id(node.id)
        if isinstance(node, IslGroup):
            continue
        if node.kind is ActKind.SELECTION:
            if node.response_number is None:
                violations.append(
                    Violation(node.id, "selection-missing-response-number",
                              "selection acts carry a response number")
                )
            if not node.alternatives:
                violations.append(
                    Violation(node.id, "selection-missing-alternatives",
                              "selection acts carry at least one alternative")
                )
            elif node.response_number is not None and not (
                1 <= node.response_number <= len(node.alternatives)
            ):
                violations.append(
                    Violation(
                        node.id, "response-number-out-of-range",
                        f"response number {node.response_number} not in "
                        f"1..{len(node.alternatives)}",
                    )
                )
            for alt in node.alternatives:
                check_id(alt.id)
                if alt.returns is not None and alt.returns not in ALTERNATIVE_RETURN_KINDS:
                    violations.append(
                        Violation(alt.id, "alternative-bad-returns",
                                  f"alternatives may only return create or stop, "
                                  f"not {alt.returns.value}")
                    )
        else:
            if node.response_number is not None:
                violations.append(
                    Violation(node.id, "unexpected-response-number",
                              f"{node.kind.value} acts carry no response number")
                )
            if node.alternatives:
                violations.append(
                    Violation(node.id, "unexpected-alternatives",
                              f"{node.kind.value} acts carry no alternatives")
                )

    return violations
