"""Calendar service: event CRUD plus day/week/month navigation.

The UI is regenerated in full after every handled response; component ids
are minted fresh per emission so the engine never sees a reused id. Event
data optionally persists to a tab-separated file, rewritten atomically.
"""

from __future__ import annotations

import itertools
import os
import pathlib
import tempfile
from dataclasses import dataclass
from datetime import date, datetime, time, timedelta

from ..acts import ActKind, Alternative, InteractionAct, IslGroup, UpstreamResponse
from .base import Service, ServiceUpdate

EPOCH_FOCUS = date(2003, 5, 12)
MODES = ("day", "week", "month")

DEFAULT_TITLE = "New event"
DEFAULT_START_TIME = time(9, 0)
DEFAULT_DURATION = 30

_TIME_FORMAT = "%Y-%m-%dT%H:%M"


class CalendarError(Exception):
    pass


class MalformedPayload(CalendarError):
    pass


class UnknownEvent(CalendarError):
    pass


class MalformedStorage(CalendarError):
    pass


@dataclass(frozen=True)
class CalendarEvent:
    id: str
    start: datetime
    duration: int
    title: str

    def __post_init__(self) -> None:
        if self.duration <= 0:
            raise ValueError("duration must be positive minutes")
        if not self.title or any(c in self.title for c in "\t\n\r"):
            raise ValueError("title must be non-empty plain text")


def parse_event_payload(text: str) -> tuple[str, datetime, int]:
    """Split ``title@YYYY-MM-DDTHH:MM+MINUTES`` into its three parts."""
    title, at, when = text.rpartition("@")
    if not at or not title:
        raise MalformedPayload(f"expected title@start+minutes, got {text!r}")
    stamp, plus, minutes = when.partition("+")
    if not plus:
        raise MalformedPayload(f"missing +minutes duration in {text!r}")
    try:
        start = datetime.strptime(stamp, _TIME_FORMAT)
    except ValueError:
        raise MalformedPayload(f"bad start time {stamp!r}") from None
    try:
        duration = int(minutes)
    except ValueError:
        raise MalformedPayload(f"bad duration {minutes!r}") from None
    if duration <= 0:
        raise MalformedPayload("duration must be positive")
    if any(c in title for c in "\t\n\r"):
        raise MalformedPayload("title must not contain tabs or line breaks")
    return title, start, duration


def _add_months(first: date, months: int) -> date:
    index = first.year * 12 + first.month - 1 + months
    year, month = divmod(index, 12)
    return date(year, month + 1, 1)


def normalize_focus(mode: str, focus: date) -> date:
    # week focuses pin to Monday and month focuses to the 1st so that
    # stepping back and forward always returns to the same date
    if mode == "week":
        return focus - timedelta(days=focus.weekday())
    if mode == "month":
        return focus.replace(day=1)
    return focus


def step_focus(mode: str, focus: date, direction: int) -> date:
    focus = normalize_focus(mode, focus)
    if mode == "day":
        return focus + timedelta(days=direction)
    if mode == "week":
        return focus + timedelta(days=7 * direction)
    return _add_months(focus, direction)


def view_window(mode: str, focus: date) -> tuple[date, date]:
    """Half-open [start, end) date range the view shows."""
    focus = normalize_focus(mode, focus)
    if mode == "day":
        return focus, focus + timedelta(days=1)
    if mode == "week":
        return focus, focus + timedelta(days=7)
    return focus, _add_months(focus, 1)


class CalendarService(Service):
    name = "calendar"

    def __init__(self, storage: str | os.PathLike | None = None,
                 focus: date = EPOCH_FOCUS, mode: str = "day"):
        if mode not in MODES:
            raise ValueError(f"mode must be one of {MODES}")
        self.storage = pathlib.Path(storage) if storage is not None else None
        self.events: dict[str, CalendarEvent] = {}
        self.mode = mode
        self.focus = normalize_focus(mode, focus)
        self._component_seq = itertools.count(1)
        self._event_seq = itertools.count(1)
        self._routes: dict[str, tuple[str, str | None]] = {}
        self._roots: tuple[str, ...] = ()
        if self.storage is not None and self.storage.exists():
            self._load()

    # -- service interface ---------------------------------------------------

    def attach(self) -> ServiceUpdate:
        return self._refresh()

    def handle(self, response: UpstreamResponse) -> ServiceUpdate:
        route = self._routes.get(response.act_id)
        if route is None:
            raise UnknownEvent(f"{response.act_id!r} is not a live component")
        role, event_id = route
        if role == "nav":
            self._navigate(response.payload)
        elif role == "new":
            self._create(response.payload)
        elif role == "edit":
            self._edit(event_id, response.payload)
        else:
            self._destroy(event_id)
        return self._refresh()

    # -- state transitions -----------------------------------------------------

    def _navigate(self, value: str | None) -> None:
        if value in MODES:
            self.mode = value
            self.focus = normalize_focus(value, self.focus)
        elif value == "next":
            self.focus = step_focus(self.mode, self.focus, 1)
        elif value == "back":
            self.focus = step_focus(self.mode, self.focus, -1)
        else:
            raise MalformedPayload(f"unknown navigation value {value!r}")

    def _create(self, payload: str | None) -> None:
        if payload is None or payload == "":
            # a bare New click makes a placeholder the user can then edit
            title = DEFAULT_TITLE
            start = datetime.combine(self.focus, DEFAULT_START_TIME)
            duration = DEFAULT_DURATION
        else:
            title, start, duration = parse_event_payload(payload)
        event = CalendarEvent(self._mint_event_id(), start, duration, title)
        self.events[event.id] = event
        self._save()

    def _edit(self, event_id: str, payload: str | None) -> None:
        if event_id not in self.events:
            raise UnknownEvent(f"no event {event_id!r}")
        if payload is None:
            raise MalformedPayload("modification needs title@start+minutes")
        title, start, duration = parse_event_payload(payload)
        self.events[event_id] = CalendarEvent(event_id, start, duration, title)
        self._save()

    def _destroy(self, event_id: str) -> None:
        if self.events.pop(event_id, None) is None:
            raise UnknownEvent(f"no event {event_id!r}")
        self._save()

    # -- UI ----------------------------------------------------------------

    def visible_events(self) -> list[CalendarEvent]:
        lo, hi = view_window(self.mode, self.focus)
        shown = [e for e in self.events.values() if lo <= e.start.date() < hi]
        return sorted(shown, key=lambda e: (e.start, e.id))

    def heading(self) -> str:
        if self.mode == "day":
            return f"Day {self.focus.isoformat()}"
        if self.mode == "week":
            return f"Week of {self.focus.isoformat()}"
        return f"Month {self.focus:%Y-%m}"

    def ui(self) -> IslGroup:
        self._routes.clear()
        rows: list = [InteractionAct(
            self._mint(), ActKind.OUTPUT, default_info=self.heading())]

        shown = self.visible_events()
        if not shown:
            rows.append(InteractionAct(
                self._mint(), ActKind.OUTPUT, default_info="No events"))
        for event in shown:
            label = (f"{event.start:%Y-%m-%d %H:%M} {event.title} "
                     f"({event.duration} min)")
            rows.append(InteractionAct(
                self._mint(), ActKind.OUTPUT, default_info=label))
            edit = InteractionAct(
                self._mint(), ActKind.MODIFICATION, group="calendar",
                default_info=f"Edit {event.title}")
            wipe = InteractionAct(
                self._mint(), ActKind.DESTROY, group="calendar",
                default_info=f"Delete {event.title}")
            self._routes[edit.id] = ("edit", event.id)
            self._routes[wipe.id] = ("remove", event.id)
            rows.extend([edit, wipe])
        events_group = IslGroup(
            self._mint(), default_info="Events", children=tuple(rows))

        nav = InteractionAct(
            self._mint(), ActKind.SELECTION, name="nextSelect",
            group="calendar", default_info="Navigation", response_number=1,
            alternatives=(
                Alternative(self._mint(), "Back", "back"),
                Alternative(self._mint(), "Day", "day"),
                Alternative(self._mint(), "Week", "week"),
                Alternative(self._mint(), "Month", "month"),
                Alternative(self._mint(), "Next", "next"),
            ))
        self._routes[nav.id] = ("nav", None)

        new_alt = Alternative(self._mint(), "New", "new",
                              returns=ActKind.CREATE)
        new_sel = InteractionAct(
            self._mint(), ActKind.SELECTION, name="newSelect",
            group="calendar", default_info="Event actions", response_number=1,
            alternatives=(new_alt,))
        self._routes[new_alt.id] = ("new", None)

        return IslGroup(self._mint(), default_info="Calendar",
                        children=(events_group, nav, new_sel))

    def _refresh(self) -> ServiceUpdate:
        old = self._roots
        tree = self.ui()
        self._roots = (tree.id,)
        return ServiceUpdate(remove=old, present=(tree,))

    def _mint(self) -> str:
        return f"c{next(self._component_seq)}"

    def _mint_event_id(self) -> str:
        return f"ev{next(self._event_seq)}"

    # -- persistence ---------------------------------------------------------

    def _load(self) -> None:
        highest = 0
        for lineno, line in enumerate(
                self.storage.read_text(encoding="utf-8").splitlines(), 1):
            if not line.strip():
                continue
            parts = line.split("\t")
            if len(parts) != 4:
                raise MalformedStorage(f"line {lineno}: expected 4 fields")
            event_id, stamp, minutes, title = parts
            try:
                start = datetime.strptime(stamp, _TIME_FORMAT)
                event = CalendarEvent(event_id, start, int(minutes), title)
            except ValueError as err:
                raise MalformedStorage(f"line {lineno}: {err}") from None
            if event_id in self.events:
                raise MalformedStorage(f"line {lineno}: duplicate {event_id!r}")
            self.events[event_id] = event
            if event_id.startswith("ev") and event_id[2:].isdigit():
                highest = max(highest, int(event_id[2:]))
        self._event_seq = itertools.count(highest + 1)

    def _save(self) -> None:
        if self.storage is None:
            return
        lines = [
            f"{e.id}\t{e.start:{_TIME_FORMAT}}\t{e.duration}\t{e.title}\n"
            for e in sorted(self.events.values(), key=lambda e: (e.start, e.id))
        ]
        fd, scratch = tempfile.mkstemp(dir=self.storage.parent,
                                       prefix=self.storage.name)
        try:
            with os.fdopen(fd, "w", encoding="utf-8") as handle:
                handle.writelines(lines)
            os.replace(scratch, self.storage)
        except BaseException:
            os.unlink(scratch)
            raise
