"""Wire encoding of act trees, in two directions.

Downstream documents (service to engine) carry full act trees; upstream
documents (engine to service) carry only response ids plus input data.  The
grammars are documented in docs/isl-downstream.dtd and docs/isl-upstream.dtd.

Parsing is total: any input either parses or raises exactly one CodecError
subclass.  Serialization is canonical (fixed element order, explicit life and
modal), so parse(serialize(x)) is structurally equal to x in both directions.
"""

from __future__ import annotations

import xml.etree.ElementTree as ET
from xml.sax.saxutils import escape, quoteattr

from .acts import (
    KIND_BY_NAME,
    ActKind,
    Alternative,
    InteractionAct,
    IslGroup,
    IslNode,
    LifeCycle,
    PERSISTENT,
    UpstreamResponse,
    validate_tree,
)

DEFAULT_DEPTH_LIMIT = 32

GROUP_TAG = "isl"
UPSTREAM_TAG = "isl-response"

_ACT_FIELD_TAGS = ("id", "name", "group", "life", "modal", "response-number", "string", "meta")
_ALT_FIELD_TAGS = ("id", "string", "return-value")


class CodecError(Exception):
    """Base class for every classified parse/serialize failure."""


class MalformedDocument(CodecError):
    pass


class UnknownElement(CodecError):
    pass


class MissingId(CodecError):
    pass


class InvalidLifeValue(CodecError):
    pass


class InvalidFieldValue(CodecError):
    pass


class DuplicateIdInDocument(CodecError):
    pass


class DepthLimitExceeded(CodecError):
    pass


class InvalidTree(CodecError):
    def __init__(self, violations):
        super().__init__("; ".join(f"{v.act_id}: {v.message}" for v in violations))
        self.violations = violations


class InvalidResponse(CodecError):
    pass


def _root_element(text: str) -> ET.Element:
    if not isinstance(text, str):
        raise MalformedDocument(f"expected text, got {type(text).__name__}")
    try:
        return ET.fromstring(text)
    except ET.ParseError as exc:
        raise MalformedDocument(str(exc)) from exc


def _stripped_text(elem: ET.Element, what: str) -> str:
    if len(elem):
        raise MalformedDocument(f"{what} element must not contain child elements")
    return (elem.text or "").strip()


def _raw_text(elem: ET.Element, what: str) -> str:
    if len(elem):
        raise MalformedDocument(f"{what} element must not contain child elements")
    return elem.text or ""


def _reject_stray_text(elem: ET.Element) -> None:
    for chunk in [elem.text] + [child.tail for child in elem]:
        if chunk and chunk.strip():
            raise MalformedDocument(
                f"stray text {chunk.strip()!r} inside <{elem.tag}>"
            )


def _parse_life(elem: ET.Element) -> LifeCycle:
    mode = _stripped_text(elem, "life")
    if mode not in ("temporary", "confirmed", "persistent"):
        raise InvalidLifeValue(f"unknown life cycle value: {mode!r}")
    duration = elem.get("duration")
    if mode == "temporary":
        if duration is None:
            raise InvalidLifeValue("temporary life cycle requires a duration attribute")
        try:
            seconds = float(duration)
        except ValueError:
            raise InvalidLifeValue(f"bad duration: {duration!r}") from None
        if not seconds > 0:
            raise InvalidLifeValue(f"duration must be > 0, got {duration!r}")
        return LifeCycle("temporary", seconds)
    if duration is not None:
        raise InvalidLifeValue(f"{mode} life cycle carries no duration")
    return LifeCycle(mode)


def _parse_modal(elem: ET.Element) -> bool:
    value = _stripped_text(elem, "modal")
    if value == "true":
        return True
    if value == "false":
        return False
    raise InvalidFieldValue(f"modal must be true or false, got {value!r}")


def _parse_response_number(elem: ET.Element) -> int:
    value = _stripped_text(elem, "response-number")
    try:
        number = int(value)
    except ValueError:
        raise InvalidFieldValue(f"bad response number: {value!r}") from None
    if number < 1:
        raise InvalidFieldValue(f"response number must be positive, got {number}")
    return number


def _parse_meta(elem: ET.Element) -> tuple[str, str]:
    key = elem.get("key")
    if key is None:
        raise MalformedDocument("meta element requires a key attribute")
    return key, _raw_text(elem, "meta")


def _parse_alternative(elem: ET.Element) -> Alternative:
    _reject_stray_text(elem)
    alt_id = label = return_value = None
    for child in elem:
        if child.tag == "id":
            alt_id = _stripped_text(child, "id")
        elif child.tag == "string":
            label = _raw_text(child, "string")
        elif child.tag == "return-value":
            return_value = _stripped_text(child, "return-value")
        else:
            raise UnknownElement(f"unexpected <{child.tag}> inside alternative")
    if not alt_id:
        raise MissingId("alternative without id")
    returns = None
    returns_attr = elem.get("returns")
    if returns_attr is not None:
        kind = KIND_BY_NAME.get(returns_attr)
        if kind is None or kind not in (ActKind.CREATE, ActKind.STOP):
            raise InvalidFieldValue(
                f"alternative returns must be create or stop, got {returns_attr!r}"
            )
        returns = kind
    return Alternative(alt_id, label or "", return_value or "", returns)


class _Fields:
    """Shared attribute set of acts and groups, accumulated during the walk."""

    __slots__ = ("id", "name", "group", "life", "modal", "default_info",
                 "metadata", "response_number", "alternatives", "seen")

    def __init__(self):
        self.id = None
        self.name = None
        self.group = None
        self.life = PERSISTENT
        self.modal = False
        self.default_info = ""
        self.metadata = []
        self.response_number = None
        self.alternatives = []
        self.seen = set()

    def take(self, child: ET.Element) -> bool:
        """Consume a field element; False when the child is not a field."""
        tag = child.tag
        if tag not in _ACT_FIELD_TAGS and tag != "alternative":
            return False
        if tag != "meta" and tag != "alternative":
            if tag in self.seen:
                raise MalformedDocument(f"repeated <{tag}> element")
            self.seen.add(tag)
        if tag == "id":
            self.id = _stripped_text(child, "id")
        elif tag == "name":
            self.name = _stripped_text(child, "name")
        elif tag == "group":
            self.group = _stripped_text(child, "group")
        elif tag == "life":
            self.life = _parse_life(child)
        elif tag == "modal":
            self.modal = _parse_modal(child)
        elif tag == "response-number":
            self.response_number = _parse_response_number(child)
        elif tag == "string":
            self.default_info = _raw_text(child, "string")
        elif tag == "meta":
            self.metadata.append(_parse_meta(child))
        elif tag == "alternative":
            self.alternatives.append(_parse_alternative(child))
        return True


def _parse_node(elem: ET.Element, depth: int, depth_limit: int, ids: set[str]) -> IslNode:
    if depth > depth_limit:
        raise DepthLimitExceeded(f"nesting deeper than {depth_limit}")
    _reject_stray_text(elem)
    is_group = elem.tag == GROUP_TAG
    kind = None
    if not is_group:
        kind = KIND_BY_NAME.get(elem.tag)
        if kind is None:
            raise UnknownElement(f"unknown element <{elem.tag}>")

    fields = _Fields()
    children: list[IslNode] = []
    for child in elem:
        if fields.take(child):
            if child.tag == "alternative" and kind is not ActKind.SELECTION:
                raise UnknownElement(
                    f"<alternative> is only valid inside a selection, "
                    f"not <{elem.tag}>"
                )
            continue
        if not is_group:
            raise UnknownElement(f"unexpected <{child.tag}> inside <{elem.tag}>")
        children.append(_parse_node(child, depth + 1, depth_limit, ids))

    if not fields.id:
        raise MissingId(f"<{elem.tag}> without id")
    if is_group and fields.response_number is not None:
        raise UnknownElement("groups carry no response number")
    _register_id(fields.id, ids)
    for alt in fields.alternatives:
        _register_id(alt.id, ids)

    if is_group:
        return IslGroup(
            id=fields.id, life=fields.life, modal=fields.modal,
            default_info=fields.default_info, name=fields.name, group=fields.group,
            metadata=tuple(fields.metadata), children=tuple(children),
        )
    return InteractionAct(
        id=fields.id, kind=kind, life=fields.life, modal=fields.modal,
        default_info=fields.default_info, name=fields.name, group=fields.group,
        metadata=tuple(fields.metadata), response_number=fields.response_number,
        alternatives=tuple(fields.alternatives),
    )


def _register_id(node_id: str, ids: set[str]) -> None:
    if node_id in ids:
        raise DuplicateIdInDocument(f"id {node_id!r} appears more than once")
    ids.add(node_id)


def parse_downstream(text: str, depth_limit: int = DEFAULT_DEPTH_LIMIT) -> IslNode:
    """Parse a full service-to-engine document into an act tree.

    Missing life defaults to persistent, missing modal to false.
    """
    root = _root_element(text)
    tree = _parse_node(root, 1, depth_limit, set())
    violations = validate_tree(tree)
    if violations:
        raise InvalidTree(violations)
    return tree


def _serialize_life(life: LifeCycle, out: list[str], pad: str) -> None:
    if life.is_temporary:
        duration = repr(life.duration) if life.duration is not None else "0"
        out.append(f"{pad}<life duration={quoteattr(duration)}>temporary</life>")
    else:
        out.append(f"{pad}<life>{life.mode}</life>")


def _esc(text: str) -> str:
    return escape(text, {"\r": "&#13;"})


def _serialize_fields(node, out: list[str], pad: str, response_number=None) -> None:
    out.append(f"{pad}<id>{_esc(node.id)}</id>")
    if node.name is not None:
        out.append(f"{pad}<name>{_esc(node.name)}</name>")
    if node.group is not None:
        out.append(f"{pad}<group>{_esc(node.group)}</group>")
    _serialize_life(node.life, out, pad)
    out.append(f"{pad}<modal>{'true' if node.modal else 'false'}</modal>")
    if response_number is not None:
        out.append(f"{pad}<response-number>{response_number}</response-number>")
    out.append(f"{pad}<string>{_esc(node.default_info)}</string>")
    for key, value in node.metadata:
        out.append(f"{pad}<meta key={quoteattr(key)}>{_esc(value)}</meta>")


def _serialize_node(node: IslNode, out: list[str], indent: int) -> None:
    pad = "  " * indent
    inner = "  " * (indent + 1)
    if isinstance(node, IslGroup):
        out.append(f"{pad}<{GROUP_TAG}>")
        _serialize_fields(node, out, inner)
        for child in node.children:
            _serialize_node(child, out, indent + 1)
        out.append(f"{pad}</{GROUP_TAG}>")
        return

    tag = node.kind.value
    out.append(f"{pad}<{tag}>")
    _serialize_fields(node, out, inner,
                      response_number=node.response_number
                      if node.kind is ActKind.SELECTION else None)
    for alt in node.alternatives:
        attr = f" returns={quoteattr(alt.returns.value)}" if alt.returns else ""
        out.append(f"{inner}<alternative{attr}>")
        out.append(f"{inner}  <id>{_esc(alt.id)}</id>")
        out.append(f"{inner}  <string>{_esc(alt.label)}</string>")
        out.append(f"{inner}  <return-value>{_esc(alt.return_value)}</return-value>")
        out.append(f"{inner}</alternative>")
    out.append(f"{pad}</{tag}>")


def serialize_downstream(tree: IslNode) -> str:
    """Serialize a valid act tree to canonical downstream form.

    Canonical means: fixed element order (id, name, group, life, modal,
    response-number, string, meta, children/alternatives) and life/modal
    always explicit, so the output is self-describing.
    """
    violations = validate_tree(tree)
    if violations:
        raise InvalidTree(violations)
    out: list[str] = []
    _serialize_node(tree, out, 0)
    return "\n".join(out) + "\n"


def parse_upstream(text: str) -> list[UpstreamResponse]:
    """Parse an engine-to-service document into its responses.

    Accepts both the wrapped form (an ``isl-response`` root holding one
    element per response) and a bare single response element.
    """
    root = _root_element(text)
    if root.tag == UPSTREAM_TAG:
        _reject_stray_text(root)
        return [_parse_response(child) for child in root]
    return [_parse_response(root)]


def _parse_response(elem: ET.Element) -> UpstreamResponse:
    kind = KIND_BY_NAME.get(elem.tag)
    if kind is None:
        raise UnknownElement(f"unknown response element <{elem.tag}>")
    if kind is ActKind.OUTPUT:
        raise UnknownElement("output acts never travel upstream")
    _reject_stray_text(elem)
    act_id = None
    payload = None
    for child in elem:
        if child.tag == "id":
            act_id = _stripped_text(child, "id")
        elif child.tag == "value":
            payload = _raw_text(child, "value")
        else:
            raise UnknownElement(f"unexpected <{child.tag}> inside response")
    if not act_id:
        raise MissingId(f"<{elem.tag}> response without id")
    return UpstreamResponse(act_id, kind, payload)


def _serialize_response(resp: UpstreamResponse, out: list[str], pad: str) -> None:
    if not resp.act_id:
        raise InvalidResponse("response without act id")
    if resp.kind is ActKind.OUTPUT:
        raise InvalidResponse("output acts never travel upstream")
    tag = resp.kind.value
    out.append(f"{pad}<{tag}>")
    out.append(f"{pad}  <id>{_esc(resp.act_id)}</id>")
    if resp.payload is not None:
        out.append(f"{pad}  <value>{_esc(resp.payload)}</value>")
    out.append(f"{pad}</{tag}>")


def serialize_upstream(responses: list[UpstreamResponse]) -> str:
    """Serialize responses; a single response becomes a bare element."""
    out: list[str] = []
    if len(responses) == 1:
        _serialize_response(responses[0], out, "")
    else:
        out.append(f"<{UPSTREAM_TAG}>")
        for resp in responses:
            _serialize_response(resp, out, "  ")
        out.append(f"</{UPSTREAM_TAG}>")
    return "\n".join(out) + "\n"
