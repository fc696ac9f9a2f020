/**
 * Widget construction: one DOM element per live component.
 *
 * The widget class comes from the act's resolved directive when it names a
 * `web.*` template, otherwise from per-kind defaults (output becomes a text
 * block, input a field with a submit button, selection a button row,
 * modification an editable field, the rest plain buttons). Directives aimed
 * at other renderers are ignored silently; directives naming an unknown
 * namespace or an unknown web template fall back with a console warning.
 *
 * Every component element carries `data-act-id`, so the page inventory can
 * be read straight off the DOM and compared with the session core.
 */

import { ActKind, InteractionAct, IslNode, isGroup, metadataValue } from "./isl.js";
import { ResolvedPresentation } from "./forms.js";

export type EmitFn = (componentId: string, payload: string | null) => void;

export const WEB_DEFAULTS: Record<ActKind, string> = {
  input: "web.field",
  output: "web.text",
  selection: "web.buttons",
  modification: "web.field",
  create: "web.button",
  destroy: "web.button",
  start: "web.button",
  stop: "web.button",
};

const KNOWN_NAMESPACES = new Set(["text", "html", "web"]);

const KNOWN_WEB_WIDGETS = new Set([
  "web.text",
  "web.field",
  "web.buttons",
  "web.menu",
  "web.button",
]);

const TREND_COLORS: Record<string, string> = { down: "red", up: "blue" };

export function parseDirective(data: string): [string, Record<string, string>] {
  const parts = data.split(/\s+/).filter(Boolean);
  const options: Record<string, string> = {};
  for (const part of parts.slice(1)) {
    const eq = part.indexOf("=");
    if (eq === -1) options[part] = "";
    else options[part.slice(0, eq)] = part.slice(eq + 1);
  }
  return [parts[0] ?? "", options];
}

export function pickWidget(
  act: InteractionAct,
  presentation: ResolvedPresentation,
): [string, Record<string, string>] {
  const fallback = WEB_DEFAULTS[act.kind];
  if (presentation.directive === null) return [fallback, {}];
  const [widget, options] = parseDirective(presentation.directive);
  const namespace = widget.split(".")[0];
  if (namespace !== "web") {
    if (!KNOWN_NAMESPACES.has(namespace)) {
      console.warn(
        `directive ${JSON.stringify(widget)} targets unknown namespace ` +
          `${JSON.stringify(namespace)}; using default for ${act.id}`,
      );
    }
    return [fallback, {}];
  }
  if (!KNOWN_WEB_WIDGETS.has(widget)) {
    console.warn(
      `unknown web widget ${JSON.stringify(widget)}; using default for ${act.id}`,
    );
    return [fallback, {}];
  }
  return [widget, options];
}

function labelOf(act: IslNode): string {
  return act.info || act.name || act.id;
}

function applyTrend(element: HTMLElement, act: IslNode): void {
  const trend = metadataValue(act, "trend");
  if (trend === null) return;
  element.classList.add(`trend-${trend}`);
  const color = TREND_COLORS[trend];
  if (color) element.style.color = color;
}

/** The container new children of a group element are appended to. */
export function childSlot(element: HTMLElement): HTMLElement {
  return (element.querySelector(":scope > .ubi-children") as HTMLElement) ?? element;
}

function renderGroup(act: IslNode, doc: Document): HTMLElement {
  const section = doc.createElement("section");
  section.className = "ubi-group";
  if (act.info) {
    const heading = doc.createElement("h3");
    heading.className = "ubi-group-label";
    heading.textContent = act.info;
    section.appendChild(heading);
  }
  const slot = doc.createElement("div");
  slot.className = "ubi-children";
  section.appendChild(slot);
  return section;
}

function renderOutput(
  act: InteractionAct,
  presentation: ResolvedPresentation,
  doc: Document,
): HTMLElement {
  const block = doc.createElement("div");
  block.className = "ubi-output";
  const text = doc.createElement("span");
  text.textContent = labelOf(act);
  block.appendChild(text);
  applyTrend(block, act);
  for (const resource of presentation.resources) {
    const img = doc.createElement("img");
    img.className = "ubi-resource";
    img.src = resource;
    img.alt = act.id;
    block.appendChild(img);
  }
  return block;
}

function renderSelection(
  act: InteractionAct,
  widget: string,
  options: Record<string, string>,
  emit: EmitFn,
  doc: Document,
): HTMLElement {
  const excluded = options["exclude"];
  const alternatives = act.alternatives.filter((a) => a.returnValue !== excluded);
  const box = doc.createElement("div");
  box.className = "ubi-selection";
  const label = doc.createElement("span");
  label.className = "ubi-label";
  label.textContent = labelOf(act) + ":";
  box.appendChild(label);

  if (widget === "web.menu") {
    const select = doc.createElement("select");
    select.className = "ubi-menu";
    for (const alt of alternatives) {
      const option = doc.createElement("option");
      option.value = alt.returnValue;
      option.textContent = alt.label || alt.returnValue;
      select.appendChild(option);
    }
    const go = doc.createElement("button");
    go.type = "button";
    go.className = "ubi-go";
    go.textContent = "go";
    go.addEventListener("click", () => emit(act.id, select.value));
    box.appendChild(select);
    box.appendChild(go);
    return box;
  }

  for (const alt of alternatives) {
    const button = doc.createElement("button");
    button.type = "button";
    button.className = "ubi-alt";
    button.dataset.componentId = alt.id;
    button.value = alt.returnValue;
    button.textContent = alt.label || alt.returnValue;
    button.addEventListener("click", () => emit(alt.id, null));
    box.appendChild(button);
  }
  return box;
}

function renderField(act: InteractionAct, emit: EmitFn, doc: Document): HTMLElement {
  const box = doc.createElement("div");
  box.className = "ubi-input";
  const label = doc.createElement("label");
  label.textContent = labelOf(act) + " ";
  const field = doc.createElement("input");
  field.type = "text";
  field.className = "ubi-field";
  field.value = metadataValue(act, "value") ?? "";
  label.appendChild(field);
  const send = doc.createElement("button");
  send.type = "button";
  send.className = "ubi-send";
  send.textContent = "send";
  const submit = () => emit(act.id, field.value);
  send.addEventListener("click", submit);
  field.addEventListener("keydown", (event) => {
    if ((event as KeyboardEvent).key === "Enter") submit();
  });
  box.appendChild(label);
  box.appendChild(send);
  return box;
}

function renderButton(act: InteractionAct, emit: EmitFn, doc: Document): HTMLElement {
  const button = doc.createElement("button");
  button.type = "button";
  button.className = "ubi-action";
  button.dataset.componentId = act.id;
  button.textContent = labelOf(act);
  button.addEventListener("click", () => emit(act.id, null));
  return button;
}

export function renderComponent(
  act: IslNode,
  presentation: ResolvedPresentation,
  emit: EmitFn,
  doc: Document,
): HTMLElement {
  let element: HTMLElement;
  if (isGroup(act)) {
    element = renderGroup(act, doc);
  } else {
    const [widget, options] = pickWidget(act, presentation);
    if (act.kind === "output") {
      element = renderOutput(act, presentation, doc);
    } else if (act.kind === "selection") {
      element = renderSelection(act, widget, options, emit, doc);
    } else {
      // the directive may move an act between field and button shapes;
      // anything else falls back to the kind's own default
      const shape = widget === "web.field" || widget === "web.button"
        ? widget
        : WEB_DEFAULTS[act.kind];
      element = shape === "web.field"
        ? renderField(act, emit, doc)
        : renderButton(act, emit, doc);
    }
    element.classList.add(`ubi-kind-${act.kind}`);
  }
  element.dataset.actId = act.id;
  if (act.modal) element.classList.add("ubi-modal");
  return element;
}
