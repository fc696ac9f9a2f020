"""Renderer-independent interaction engine core.

A Session tracks which components are live, who holds the modal lock, and
which temporary components are due for removal.  Every state change is
reported as a stream of UiMutation values; renderers consume the stream (or
the session's live view) without re-implementing any semantics, so replaying
the stream against an empty view must reconstruct the live set exactly.

Sessions are single-writer: callers serialize all calls on one session.
Time is injected, never read from the wall clock.
"""

from __future__ import annotations

import heapq
import itertools
import time
from collections import deque
from dataclasses import dataclass, field
from typing import Callable, Iterable, Union

from .acts import (
    ActKind,
    Alternative,
    InteractionAct,
    IslGroup,
    IslNode,
    UpstreamResponse,
)
from .forms import CustomizationForm, EMPTY_FORM, ResolvedPresentation, resolve

EXPIRED = "expired"
CONFIRMED_DONE = "confirmed"
SERVICE = "service"
SESSION_END = "session-end"

REMOVE_REASONS = frozenset({EXPIRED, CONFIRMED_DONE, SERVICE, SESSION_END})


class EngineError(Exception):
    """Base class for session failures."""


class UnknownComponent(EngineError):
    pass


class NotActionable(EngineError):
    """The target exists but cannot produce responses."""


class ActionOnOutput(NotActionable):
    pass


class BlockedByModal(EngineError):
    pass


class ResponseCountExceeded(EngineError):
    pass


class DuplicateLiveId(EngineError):
    pass


class InvalidActionPayload(EngineError):
    pass


class SessionEnded(EngineError):
    pass


@dataclass(frozen=True)
class AddComponent:
    act: IslNode
    presentation: ResolvedPresentation


@dataclass(frozen=True)
class RemoveComponent:
    act_id: str
    reason: str


@dataclass(frozen=True)
class LockOthers:
    except_id: str


@dataclass(frozen=True)
class Unlock:
    pass


UiMutation = Union[AddComponent, RemoveComponent, LockOthers, Unlock]


@dataclass
class LiveComponent:
    """Book-keeping for one live act or group."""

    act: IslNode
    presentation: ResolvedPresentation
    created_at: float
    seq: int
    parent_id: str | None
    children: list[str] = field(default_factory=list)
    responses_used: int = 0
    expires_at: float | None = None

    @property
    def is_group(self) -> bool:
        return isinstance(self.act, IslGroup)


class Session:
    """One user's interaction state against one service."""

    def __init__(self, session_id: str, form: CustomizationForm = EMPTY_FORM,
                 clock: Callable[[], float] = time.monotonic):
        self.session_id = session_id
        self.form = form
        self.clock = clock
        self.live: dict[str, LiveComponent] = {}
        self.roots: list[str] = []
        self.alt_owner: dict[str, str] = {}
        self.modal_holder: str | None = None
        self._modal_queue: deque[str] = deque()
        self._timers: list[tuple[float, int, str]] = []
        self._seq = itertools.count()
        self._last_tick = None
        self.ended = False

    # -- queries -----------------------------------------------------------

    def get(self, act_id: str) -> LiveComponent:
        try:
            return self.live[act_id]
        except KeyError:
            raise UnknownComponent(f"no live component {act_id!r}") from None

    def owner_of(self, component_id: str) -> str:
        """The live act id a UI component belongs to (alternatives map to
        their selection)."""
        if component_id in self.alt_owner:
            return self.alt_owner[component_id]
        if component_id in self.live:
            return component_id
        raise UnknownComponent(f"no live component {component_id!r}")

    def is_blocked(self, component_id: str) -> bool:
        """True when the modal holder's subtree does not contain the target."""
        if self.modal_holder is None:
            return False
        node_id = self.owner_of(component_id)
        while node_id is not None:
            if node_id == self.modal_holder:
                return False
            node_id = self.live[node_id].parent_id
        return True

    # -- documents ---------------------------------------------------------

    def apply_document(self, tree: IslNode) -> list[UiMutation]:
        """Make every act in the tree live, in document order.

        A ``stop`` act anywhere in the tree is session control: the session
        ends and everything live is removed.  ``start`` acts are likewise
        control-only and never become components.
        """
        self._require_open()
        if any(_is_stop(node) for node in _walk(tree)):
            return self._end_components()

        fresh: set[str] = set()
        for node in _walk(tree):
            if _is_start(node):
                continue
            for new_id in _component_ids(node):
                if new_id in self.live or new_id in self.alt_owner or new_id in fresh:
                    raise DuplicateLiveId(f"id {new_id!r} is already live")
                fresh.add(new_id)

        out: list[UiMutation] = []
        self._add_node(tree, None, out)
        self._settle_modal(out)
        return out

    def _add_node(self, node: IslNode, parent_id: str | None,
                  out: list[UiMutation]) -> None:
        if _is_start(node):
            return
        record = LiveComponent(
            act=node,
            presentation=resolve(node, self.form),
            created_at=self.clock(),
            seq=next(self._seq),
            parent_id=parent_id,
        )
        self.live[node.id] = record
        if parent_id is None:
            self.roots.append(node.id)
        else:
            self.live[parent_id].children.append(node.id)
        if isinstance(node, InteractionAct):
            for alt in node.alternatives:
                self.alt_owner[alt.id] = node.id
        if node.life.is_temporary:
            record.expires_at = record.created_at + node.life.duration
            heapq.heappush(self._timers, (record.expires_at, record.seq, node.id))
        if node.modal:
            self._modal_queue.append(node.id)
        out.append(AddComponent(node, record.presentation))
        if isinstance(node, IslGroup):
            for child in node.children:
                self._add_node(child, node.id, out)

    # -- actions -----------------------------------------------------------

    def handle_action(self, component_id: str, payload: str | None = None
                      ) -> tuple[list[UpstreamResponse], list[UiMutation]]:
        """Turn a user action on a component into upstream responses.

        The component is an act id, or the id of a selection alternative; a
        selection may also be addressed by its own id with the chosen
        alternative's return value as payload.
        """
        self._require_open()
        owner_id = self.owner_of(component_id)
        record = self.live[owner_id]
        act = record.act

        if record.is_group:
            raise NotActionable(f"groups accept no actions ({component_id!r})")
        if act.kind is ActKind.OUTPUT:
            raise ActionOnOutput(f"output {component_id!r} presents only")
        if self.is_blocked(component_id):
            raise BlockedByModal(
                f"{component_id!r} is blocked while {self.modal_holder!r} is modal"
            )

        if act.kind is ActKind.SELECTION:
            response = self._selection_response(record, component_id, payload)
        else:
            response = UpstreamResponse(act.id, act.kind, payload)

        mutations: list[UiMutation] = []
        if act.life.is_confirmed:
            self._remove_subtree(owner_id, CONFIRMED_DONE, mutations)
            self._settle_modal(mutations)
        return [response], mutations

    def _selection_response(self, record: LiveComponent, component_id: str,
                            payload: str | None) -> UpstreamResponse:
        act = record.act
        if component_id == act.id:
            matches = [a for a in act.alternatives if a.return_value == payload]
            if not matches:
                raise InvalidActionPayload(
                    f"{payload!r} names no alternative of {act.id!r}"
                )
            alt = matches[0]
        else:
            alt = next(a for a in act.alternatives if a.id == component_id)
        if record.responses_used >= act.response_number:
            raise ResponseCountExceeded(
                f"selection {act.id!r} already used its "
                f"{act.response_number} response(s)"
            )
        record.responses_used += 1
        if alt.returns is not None:
            # direct activation forwards caller data; addressing the
            # selection by id spends the payload on alternative matching
            carried = payload if component_id == alt.id else None
            return UpstreamResponse(alt.id, alt.returns, carried)
        return UpstreamResponse(act.id, ActKind.SELECTION, alt.return_value)

    # -- time --------------------------------------------------------------

    def tick(self, now: float | None = None) -> list[UiMutation]:
        """Remove every temporary component whose time is up (inclusive)."""
        if self.ended:
            return []
        if now is None:
            now = self.clock()
        if self._last_tick is not None and now < self._last_tick:
            raise ValueError(f"time went backwards: {now} < {self._last_tick}")
        self._last_tick = now

        out: list[UiMutation] = []
        while self._timers and self._timers[0][0] <= now:
            expires_at, seq, act_id = heapq.heappop(self._timers)
            record = self.live.get(act_id)
            if record is None or record.seq != seq:
                continue
            self._remove_subtree(act_id, EXPIRED, out)
        if out:
            self._settle_modal(out)
        return out

    # -- removal -----------------------------------------------------------

    def service_remove(self, ids: Iterable[str]) -> list[UiMutation]:
        """Remove the given components (and their subtrees) on service order."""
        self._require_open()
        wanted = list(ids)
        for act_id in wanted:
            if act_id not in self.live:
                raise UnknownComponent(f"no live component {act_id!r}")
        out: list[UiMutation] = []
        for act_id in wanted:
            if act_id in self.live:
                self._remove_subtree(act_id, SERVICE, out)
        self._settle_modal(out)
        return out

    def end(self) -> tuple[UpstreamResponse, list[UiMutation]]:
        """User-initiated session end: a stop response plus full teardown."""
        self._require_open()
        mutations = self._end_components()
        return UpstreamResponse(self.session_id, ActKind.STOP), mutations

    def start_response(self) -> UpstreamResponse:
        """The synthesized opening response announcing this session."""
        return UpstreamResponse(self.session_id, ActKind.START)

    def _end_components(self) -> list[UiMutation]:
        out: list[UiMutation] = []
        for root_id in list(self.roots):
            self._remove_subtree(root_id, SESSION_END, out)
        self._settle_modal(out)
        self.ended = True
        return out

    def _remove_subtree(self, act_id: str, reason: str,
                        out: list[UiMutation]) -> None:
        record = self.live[act_id]
        if record.parent_id is None:
            self.roots.remove(act_id)
        else:
            self.live[record.parent_id].children.remove(act_id)
        self._discard(act_id, reason, out)

    def _discard(self, act_id: str, reason: str, out: list[UiMutation]) -> None:
        record = self.live.pop(act_id)
        if isinstance(record.act, InteractionAct):
            for alt in record.act.alternatives:
                self.alt_owner.pop(alt.id, None)
        if act_id in self._modal_queue:
            self._modal_queue.remove(act_id)
        out.append(RemoveComponent(act_id, reason))
        for child_id in record.children:
            self._discard(child_id, reason, out)

    def _settle_modal(self, out: list[UiMutation]) -> None:
        holder = self.modal_holder
        if holder is not None and holder in self.live:
            return
        next_holder = None
        while self._modal_queue:
            candidate = self._modal_queue[0]
            if candidate in self.live:
                next_holder = candidate
                self._modal_queue.popleft()
                break
            self._modal_queue.popleft()
        if holder is not None:
            out.append(Unlock())
        if next_holder is not None:
            out.append(LockOthers(next_holder))
        self.modal_holder = next_holder

    def _require_open(self) -> None:
        if self.ended:
            raise SessionEnded(f"session {self.session_id!r} has ended")


def _walk(tree: IslNode):
    stack = [tree]
    while stack:
        node = stack.pop()
        yield node
        if isinstance(node, IslGroup):
            stack.extend(reversed(node.children))


def _is_stop(node: IslNode) -> bool:
    return isinstance(node, InteractionAct) and node.kind is ActKind.STOP


def _is_start(node: IslNode) -> bool:
    return isinstance(node, InteractionAct) and node.kind is ActKind.START


def _component_ids(node: IslNode):
    yield node.id
    if isinstance(node, InteractionAct):
        for alt in node.alternatives:
            yield alt.id


def materialize(mutations: Iterable[UiMutation]) -> dict[str, IslNode]:
    """Replay a mutation stream against an empty view.

    Returns the live components by id. Renderer-independence check: this must
    equal the session's own live registry after any call sequence.
    """
    view: dict[str, IslNode] = {}
    for mutation in mutations:
        if isinstance(mutation, AddComponent):
            view[mutation.act.id] = mutation.act
        elif isinstance(mutation, RemoveComponent):
            del view[mutation.act_id]
    return view
