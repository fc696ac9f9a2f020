"""Customization forms: per-device presentation hints layered over act trees.

A form maps selectors to presentation entries.  Selectors address acts on
three levels that may be combined: the act's symbolic group, its kind, and
its symbolic name.  Entries are either a directive (a renderer template
identifier, e.g. ``text.buttons``) or a resource (an opaque media reference).

Forms are immutable after parsing.  Hierarchy is expressed through parent
ids; ``flatten`` folds a parent chain into a single form with child entries
overriding parent entries for the same (selector, entry kind).
"""

from __future__ import annotations

import pathlib
import xml.etree.ElementTree as ET
from dataclasses import dataclass
from typing import Iterable, Mapping

from .acts import ActKind, KIND_BY_NAME
from .codec import MalformedDocument

DIRECTIVE = "directive"
RESOURCE = "resource"

FORM_TAG = "form"
_SELECTOR_TAGS = {"group": "group", "element": "kind", "id": "name"}


class FormError(Exception):
    """Base class for customization form failures."""


class UnknownSelectorElement(FormError):
    pass


class DuplicateSelector(FormError):
    pass


class CyclicHierarchy(FormError):
    pass


# Specificity of each selector shape, keyed (has group, has kind, has name).
# More dimensions beat fewer; name beats kind beats group within a count.
_RANK = {
    (True, True, True): 7,
    (True, False, True): 6,
    (True, True, False): 5,
    (False, True, True): 4,
    (False, False, True): 3,
    (False, True, False): 2,
    (True, False, False): 1,
}


@dataclass(frozen=True)
class FormSelector:
    """What an entry applies to. At least one dimension must be set."""

    group: str | None = None
    kind: ActKind | None = None
    name: str | None = None

    def __post_init__(self) -> None:
        if self.group is None and self.kind is None and self.name is None:
            raise ValueError("selector must set group, kind or name")

    @property
    def rank(self) -> int:
        return _RANK[(self.group is not None, self.kind is not None,
                      self.name is not None)]

    def matches(self, kind: ActKind | None, name: str | None,
                group: str | None) -> bool:
        """True when every dimension the selector sets equals the act's."""
        if self.group is not None and self.group != group:
            return False
        if self.kind is not None and self.kind is not kind:
            return False
        if self.name is not None and self.name != name:
            return False
        return True


@dataclass(frozen=True)
class FormEntry:
    selector: FormSelector
    kind: str
    data: str

    def __post_init__(self) -> None:
        if self.kind not in (DIRECTIVE, RESOURCE):
            raise ValueError(f"entry kind must be directive or resource, "
                             f"got {self.kind!r}")


@dataclass(frozen=True)
class CustomizationForm:
    """A parsed form. ``id`` is empty for anonymous single-selector files."""

    id: str = ""
    parent: str | None = None
    entries: tuple[FormEntry, ...] = ()

    def __post_init__(self) -> None:
        object.__setattr__(self, "entries", tuple(self.entries))


EMPTY_FORM = CustomizationForm()


@dataclass(frozen=True)
class ResolvedPresentation:
    """Presentation picked for one act: winning directive plus resources.

    ``source`` is the entry the directive came from, or None when the act
    fell through to renderer defaults.
    """

    directive: str | None = None
    resources: tuple[str, ...] = ()
    source: FormEntry | None = None

    @property
    def is_default(self) -> bool:
        return self.source is None


DEFAULT_PRESENTATION = ResolvedPresentation()


def _reject_stray_text(elem: ET.Element) -> None:
    for chunk in [elem.text] + [child.tail for child in elem]:
        if chunk and chunk.strip():
            raise MalformedDocument(
                f"stray text {chunk.strip()!r} inside <{elem.tag}>"
            )


def _name_attr(elem: ET.Element) -> str:
    name = elem.get("name")
    if not name:
        raise MalformedDocument(f"<{elem.tag}> requires a name attribute")
    return name


def _parse_data(elem: ET.Element) -> str:
    _reject_stray_text(elem)
    data = None
    for child in elem:
        if child.tag != "data":
            raise UnknownSelectorElement(
                f"unexpected <{child.tag}> inside <{elem.tag}>"
            )
        if data is not None:
            raise MalformedDocument(f"repeated <data> inside <{elem.tag}>")
        if len(child):
            raise MalformedDocument("data element must not contain child elements")
        data = (child.text or "").strip()
    if data is None:
        raise MalformedDocument(f"<{elem.tag}> without a <data> element")
    return data


def _parse_selector_element(elem: ET.Element, dims: dict,
                            entries: list[FormEntry], seen: set) -> None:
    dimension = _SELECTOR_TAGS[elem.tag]
    if dims.get(dimension) is not None:
        raise MalformedDocument(f"{dimension} level set twice in one selector")
    value = _name_attr(elem)
    if dimension == "kind":
        kind = KIND_BY_NAME.get(value)
        if kind is None:
            raise UnknownSelectorElement(f"unknown act kind {value!r}")
        value = kind
    dims = {**dims, dimension: value}
    selector = FormSelector(**dims)
    _reject_stray_text(elem)
    for child in elem:
        if child.tag in _SELECTOR_TAGS:
            _parse_selector_element(child, dims, entries, seen)
        elif child.tag in (DIRECTIVE, RESOURCE):
            key = (selector, child.tag)
            if key in seen:
                raise DuplicateSelector(
                    f"second {child.tag} for the same selector"
                )
            seen.add(key)
            entries.append(FormEntry(selector, child.tag, _parse_data(child)))
        else:
            raise UnknownSelectorElement(
                f"unknown selector element <{child.tag}>"
            )


def parse_form(text: str) -> CustomizationForm:
    """Parse a form document.

    The root is either ``<form id parent?>`` holding selector sections, or a
    bare selector element (an anonymous form with a single section).
    """
    if not isinstance(text, str):
        raise MalformedDocument(f"expected text, got {type(text).__name__}")
    try:
        root = ET.fromstring(text)
    except ET.ParseError as exc:
        raise MalformedDocument(str(exc)) from exc

    entries: list[FormEntry] = []
    seen: set = set()
    if root.tag in _SELECTOR_TAGS:
        _parse_selector_element(root, {}, entries, seen)
        return CustomizationForm("", None, tuple(entries))
    if root.tag != FORM_TAG:
        raise UnknownSelectorElement(f"unknown root element <{root.tag}>")

    _reject_stray_text(root)
    for child in root:
        if child.tag not in _SELECTOR_TAGS:
            raise UnknownSelectorElement(
                f"unknown selector element <{child.tag}>"
            )
        _parse_selector_element(child, {}, entries, seen)
    return CustomizationForm(root.get("id", ""), root.get("parent"),
                             tuple(entries))


def _selector_path(selector: FormSelector) -> list[tuple[str, str]]:
    path = []
    if selector.group is not None:
        path.append(("group", selector.group))
    if selector.kind is not None:
        path.append(("element", selector.kind.value))
    if selector.name is not None:
        path.append(("id", selector.name))
    return path


def serialize_form(form: CustomizationForm) -> str:
    """Serialize to canonical nested markup; parse_form inverts it."""
    from xml.sax.saxutils import escape, quoteattr

    attrs = ""
    if form.id:
        attrs += f" id={quoteattr(form.id)}"
    if form.parent is not None:
        attrs += f" parent={quoteattr(form.parent)}"
    out = [f"<{FORM_TAG}{attrs}>"]
    for entry in form.entries:
        path = _selector_path(entry.selector)
        for depth, (tag, value) in enumerate(path, start=1):
            out.append(f"{'  ' * depth}<{tag} name={quoteattr(value)}>")
        pad = "  " * (len(path) + 1)
        out.append(f"{pad}<{entry.kind}>")
        out.append(f"{pad}  <data>{escape(entry.data)}</data>")
        out.append(f"{pad}</{entry.kind}>")
        for depth, (tag, _) in enumerate(reversed(path)):
            out.append(f"{'  ' * (len(path) - depth)}</{tag}>")
    out.append(f"</{FORM_TAG}>")
    return "\n".join(out) + "\n"


def parent_chain(form: CustomizationForm,
                 registry: Mapping[str, CustomizationForm]) -> list[CustomizationForm]:
    """The form's ancestry, root first, ``form`` last.

    Raises CyclicHierarchy when parent links loop; unknown parent ids raise
    KeyError from the registry lookup.
    """
    chain = [form]
    seen = {form.id} if form.id else set()
    while chain[0].parent is not None:
        parent_id = chain[0].parent
        if parent_id in seen:
            raise CyclicHierarchy(f"form {parent_id!r} is its own ancestor")
        seen.add(parent_id)
        chain.insert(0, registry[parent_id])
    return chain


def flatten(chain: Iterable[CustomizationForm]) -> CustomizationForm:
    """Fold a parent chain (child last) into one form.

    Later entries replace earlier ones with the same (selector, entry kind);
    everything else unions. The result keeps the last form's id and drops the
    parent link.
    """
    merged: dict[tuple[FormSelector, str], FormEntry] = {}
    seen_ids: set[str] = set()
    last = EMPTY_FORM
    for form in chain:
        if form.id:
            if form.id in seen_ids:
                raise CyclicHierarchy(f"form {form.id!r} repeats in the chain")
            seen_ids.add(form.id)
        for entry in form.entries:
            merged[(entry.selector, entry.kind)] = entry
        last = form
    return CustomizationForm(last.id, None, tuple(merged.values()))


def resolve_fields(form: CustomizationForm, *, kind: ActKind | None = None,
                   name: str | None = None,
                   group: str | None = None) -> ResolvedPresentation:
    """Resolve presentation for the given act coordinates.

    The directive comes from the matching entry of highest specificity;
    resources collect from every matching entry, most specific first.
    Selector shapes are totally ordered, so the winner is unique.
    """
    directive_entry = None
    resource_entries = []
    for entry in form.entries:
        if not entry.selector.matches(kind, name, group):
            continue
        if entry.kind == DIRECTIVE:
            if directive_entry is None or entry.selector.rank > directive_entry.selector.rank:
                directive_entry = entry
        else:
            resource_entries.append(entry)
    resource_entries.sort(key=lambda e: -e.selector.rank)
    if directive_entry is None and not resource_entries:
        return DEFAULT_PRESENTATION
    return ResolvedPresentation(
        directive=directive_entry.data if directive_entry else None,
        resources=tuple(e.data for e in resource_entries),
        source=directive_entry,
    )


def resolve(act, form: CustomizationForm) -> ResolvedPresentation:
    """Resolve presentation for an act tree node (groups have no kind)."""
    return resolve_fields(form, kind=getattr(act, "kind", None),
                          name=act.name, group=act.group)


def load_forms(directory: str | pathlib.Path) -> dict[str, CustomizationForm]:
    """Parse every *.form file in a directory.

    Forms are keyed by their id; anonymous forms fall back to the file stem.
    """
    registry: dict[str, CustomizationForm] = {}
    for path in sorted(pathlib.Path(directory).glob("*.form")):
        form = parse_form(path.read_text(encoding="utf-8"))
        key = form.id or path.stem
        if key in registry:
            raise DuplicateSelector(f"two forms share the id {key!r}")
        registry[key] = form
    return registry
