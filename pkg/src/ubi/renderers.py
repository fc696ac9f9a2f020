"""Concrete presentation layers over a session: plain text and static HTML.

Both renderers are pure functions of session state.  They share a widget
tree built from the live components plus each act's resolved presentation;
the text surface is deterministic (golden-testable) and reports an ordinal
index of actionable components so scripts can drive a session, the HTML
surface emits one named form control per actionable component.

Directive vocabularies are namespaced per renderer (``text.*``, ``html.*``,
``web.*``).  A directive aimed at some other renderer is ignored with a
logged warning and the default widget applies, so one form can serve
several engine types at once.

The HTML engine deliberately enforces neither modality nor life cycles:
pages are regenerated per interaction and cannot be updated by push, so
those semantics are applied by the session core when actions arrive, not
in the markup.
"""

from __future__ import annotations

import html as _html
import logging
from dataclasses import dataclass

from .acts import ActKind, InteractionAct, IslGroup
from .forms import CustomizationForm, resolve
from .engine import Session

log = logging.getLogger(__name__)

GROUP_WIDGET = "group"

_TEXT_DEFAULTS = {
    ActKind.INPUT: "text.field",
    ActKind.OUTPUT: "text.label",
    ActKind.SELECTION: "text.buttons",
    ActKind.MODIFICATION: "text.edit",
    ActKind.CREATE: "text.button",
    ActKind.DESTROY: "text.button",
    ActKind.START: "text.button",
    ActKind.STOP: "text.button",
}

_HTML_DEFAULTS = {
    ActKind.INPUT: "html.textfield-with-submit",
    ActKind.OUTPUT: "html.text",
    ActKind.SELECTION: "html.buttons",
    ActKind.MODIFICATION: "html.textfield-with-submit",
    ActKind.CREATE: "html.button",
    ActKind.DESTROY: "html.button",
    ActKind.START: "html.button",
    ActKind.STOP: "html.button",
}

_KNOWN_WIDGETS = {
    "text": {"text.label", "text.field", "text.edit", "text.button",
             "text.buttons", "text.menu"},
    "html": {"html.text", "html.textfield-with-submit", "html.buttons",
             "html.button", "html.menu"},
}

_DEFAULTS = {"text": _TEXT_DEFAULTS, "html": _HTML_DEFAULTS}


def default_widget(kind: ActKind, renderer: str) -> str:
    """The widget class used when no form directive applies. Total and
    stable."""
    return _DEFAULTS[renderer][kind]


def parse_directive(data: str) -> tuple[str, dict[str, str]]:
    """Split directive data into widget class and key=value options."""
    parts = data.split()
    options = {}
    for part in parts[1:]:
        key, _, value = part.partition("=")
        options[key] = value
    return (parts[0] if parts else ""), options


@dataclass(frozen=True)
class RenderNode:
    """One widget in a renderer-agnostic UI tree."""

    component_id: str
    widget: str
    label: str
    actionable: bool
    kind: str
    children: tuple["RenderNode", ...] = ()
    payload_hint: str | None = None
    resources: tuple[str, ...] = ()


def _pick_widget(act, presentation, renderer: str) -> tuple[str, dict[str, str]]:
    fallback = default_widget(act.kind, renderer)
    if presentation.directive is None:
        return fallback, {}
    widget, options = parse_directive(presentation.directive)
    namespace = widget.partition(".")[0]
    if namespace != renderer:
        if namespace not in _KNOWN_WIDGETS:
            log.warning("directive %r targets unknown namespace %r; "
                        "using default for %s", widget, namespace, act.id)
        return fallback, {}
    if widget not in _KNOWN_WIDGETS[renderer]:
        log.warning("unknown %s widget %r; using default for %s",
                    renderer, widget, act.id)
        return fallback, {}
    return widget, options


def _label(act) -> str:
    return act.default_info or act.name or act.id


def build_widget_tree(session: Session, renderer: str,
                      form: CustomizationForm | None = None) -> list[RenderNode]:
    """Widget nodes for every live component, in presentation order."""

    def presentation_of(record):
        if form is None:
            return record.presentation
        return resolve(record.act, form)

    def build(act_id: str) -> RenderNode:
        record = session.live[act_id]
        act = record.act
        if isinstance(act, IslGroup):
            return RenderNode(
                component_id=act.id, widget=GROUP_WIDGET,
                label=act.default_info, actionable=False, kind="group",
                children=tuple(build(child) for child in record.children),
            )
        presentation = presentation_of(record)
        widget, options = _pick_widget(act, presentation, renderer)
        resources = presentation.resources
        if act.kind is ActKind.SELECTION:
            excluded = options.get("exclude")
            alternatives = tuple(a for a in act.alternatives
                                 if a.return_value != excluded)
            as_menu = widget.endswith(".menu")
            children = tuple(
                RenderNode(
                    component_id=alt.id, widget=widget,
                    label=alt.label or alt.return_value,
                    actionable=not as_menu, kind="alternative",
                    payload_hint=alt.return_value,
                )
                for alt in alternatives
            )
            return RenderNode(
                component_id=act.id, widget=widget, label=_label(act),
                actionable=as_menu, kind=act.kind.value, children=children,
                resources=resources,
            )
        actionable = act.kind is not ActKind.OUTPUT
        return RenderNode(
            component_id=act.id, widget=widget, label=_label(act),
            actionable=actionable, kind=act.kind.value, resources=resources,
        )

    return [build(root_id) for root_id in session.roots]


def _walk_actionables(nodes):
    for node in nodes:
        if node.actionable:
            yield node
        yield from _walk_actionables(node.children)


def render_text(session: Session, form: CustomizationForm | None = None
                ) -> tuple[str, dict[int, str]]:
    """A deterministic plain-text screen plus an ordinal→component index.

    Equal session state renders byte-identically.  Actionable components are
    numbered in presentation order; a modal holder is announced in a banner
    but blocked components stay listed, their actions are refused by the
    session core.
    """
    tree = build_widget_tree(session, "text", form)
    lines: list[str] = []
    index: dict[int, str] = {}
    if session.modal_holder is not None:
        lines.append(f"!! {session.modal_holder} is modal; "
                     f"other components are locked !!")

    def number(node: RenderNode) -> int:
        ordinal = len(index) + 1
        index[ordinal] = node.component_id
        return ordinal

    def emit(node: RenderNode, depth: int) -> None:
        pad = "  " * depth
        if node.widget == GROUP_WIDGET:
            if node.label:
                lines.append(f"{pad}== {node.label} ==")
            for child in node.children:
                emit(child, depth + 1)
        elif node.kind == "selection":
            if node.widget == "text.menu":
                choices = " / ".join(c.label for c in node.children)
                lines.append(f"{pad}[{number(node)}] {node.label} "
                             f"(menu: {choices})")
            else:
                lines.append(f"{pad}{node.label}:")
                for child in node.children:
                    lines.append(f"{pad}  [{number(child)}] {child.label}")
        elif node.actionable:
            lines.append(f"{pad}[{number(node)}] {node.label} ({node.kind})")
        else:
            lines.append(f"{pad}{node.label}")

    for root in tree:
        emit(root, 0)
    screen = "\n".join(lines)
    return (screen + "\n" if screen else ""), index


def render_html(session: Session, form: CustomizationForm | None = None) -> str:
    """One self-contained page; every actionable component is a form control
    whose submitted name is the component id."""
    tree = build_widget_tree(session, "html", form)
    esc = _html.escape
    body: list[str] = []

    def emit(node: RenderNode, depth: int) -> None:
        pad = "  " * depth
        if node.widget == GROUP_WIDGET:
            body.append(f"{pad}<fieldset>")
            if node.label:
                body.append(f"{pad}  <legend>{esc(node.label)}</legend>")
            for child in node.children:
                emit(child, depth + 1)
            body.append(f"{pad}</fieldset>")
            return
        if node.kind == "selection":
            if node.widget == "html.menu":
                options = "".join(
                    f'<option value="{esc(c.payload_hint, quote=True)}">'
                    f"{esc(c.label)}</option>"
                    for c in node.children
                )
                body.append(
                    f"{pad}<label>{esc(node.label)} "
                    f'<select name="{esc(node.component_id, quote=True)}">'
                    f"{options}</select></label> "
                    f"<button type=\"submit\">go</button>"
                )
                return
            buttons = " ".join(
                f'<button type="submit" name="{esc(c.component_id, quote=True)}"'
                f' value="{esc(c.payload_hint, quote=True)}">{esc(c.label)}'
                f"</button>"
                for c in node.children
            )
            body.append(f"{pad}<div>{esc(node.label)}: {buttons}</div>")
            return
        if node.kind == "output":
            body.append(f"{pad}<p>{esc(node.label)}</p>")
            for resource in node.resources:
                body.append(f'{pad}<img src="{esc(resource, quote=True)}" '
                            f'alt="{esc(node.component_id, quote=True)}">')
            return
        if node.widget == "html.textfield-with-submit":
            body.append(
                f"{pad}<label>{esc(node.label)} "
                f'<input type="text" name="{esc(node.component_id, quote=True)}">'
                f"</label> <button type=\"submit\">send</button>"
            )
            return
        body.append(
            f'{pad}<button type="submit" '
            f'name="{esc(node.component_id, quote=True)}" value="">'
            f"{esc(node.label)}</button>"
        )

    for root in tree:
        emit(root, 2)
    content = "\n".join(body)
    if content:
        content += "\n"
    return (
        "<!DOCTYPE html>\n"
        "<html>\n"
        "<head><meta charset=\"utf-8\"><title>"
        f"{esc(session.session_id)}</title></head>\n"
        "<body>\n"
        "  <form method=\"post\" action=\"/action\">\n"
        f"{content}"
        "  </form>\n"
        "</body>\n"
        "</html>\n"
    )


def actionable_index(session: Session, renderer: str = "text",
                     form: CustomizationForm | None = None) -> dict[int, str]:
    """Ordinal→component id of every actionable widget for a renderer."""
    tree = build_widget_tree(session, renderer, form)
    return {n + 1: node.component_id
            for n, node in enumerate(_walk_actionables(tree))}
