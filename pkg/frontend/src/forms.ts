/**
 * Customization forms: presentation hints the service hands over at
 * session start (already flattened; parent chains are folded server side).
 *
 * Selectors address acts by symbolic group, kind and symbolic name in any
 * combination. The directive comes from the most specific matching entry;
 * resources collect from every match, most specific first. Specificity:
 * more dimensions beat fewer, and name beats kind beats group.
 */

import { parseXml, XmlElement, XmlSyntaxError } from "./xml.js";
import { ACT_KINDS, ActKind, IslNode, MalformedDocument, isGroup } from "./isl.js";

export const DIRECTIVE = "directive";
export const RESOURCE = "resource";

const SELECTOR_TAGS: Record<string, "group" | "kind" | "name"> = {
  group: "group",
  element: "kind",
  id: "name",
};

export class FormError extends Error {}
export class UnknownSelectorElement extends FormError {}
export class DuplicateSelector extends FormError {}

export interface FormSelector {
  group: string | null;
  kind: ActKind | null;
  name: string | null;
}

export interface FormEntry {
  selector: FormSelector;
  kind: typeof DIRECTIVE | typeof RESOURCE;
  data: string;
}

export interface CustomizationForm {
  id: string;
  entries: FormEntry[];
}

export const EMPTY_FORM: CustomizationForm = { id: "", entries: [] };

export interface ResolvedPresentation {
  directive: string | null;
  resources: string[];
  isDefault: boolean;
}

export const DEFAULT_PRESENTATION: ResolvedPresentation = {
  directive: null,
  resources: [],
  isDefault: true,
};

export function selectorRank(selector: FormSelector): number {
  const g = selector.group !== null;
  const k = selector.kind !== null;
  const n = selector.name !== null;
  if (g && k && n) return 7;
  if (g && n) return 6;
  if (g && k) return 5;
  if (k && n) return 4;
  if (n) return 3;
  if (k) return 2;
  return 1;
}

function matches(
  selector: FormSelector,
  kind: ActKind | null,
  name: string | null,
  group: string | null,
): boolean {
  if (selector.group !== null && selector.group !== group) return false;
  if (selector.kind !== null && selector.kind !== kind) return false;
  if (selector.name !== null && selector.name !== name) return false;
  return true;
}

function rejectStrayText(elem: XmlElement): void {
  const chunks = [elem.text, ...elem.children.map((c) => c.tail)];
  for (const chunk of chunks) {
    if (chunk.trim()) {
      throw new MalformedDocument(
        `stray text ${JSON.stringify(chunk.trim())} inside <${elem.tag}>`,
      );
    }
  }
}

function nameAttr(elem: XmlElement): string {
  const name = elem.attrs["name"];
  if (!name) throw new MalformedDocument(`<${elem.tag}> requires a name attribute`);
  return name;
}

function parseData(elem: XmlElement): string {
  rejectStrayText(elem);
  let data: string | null = null;
  for (const child of elem.children) {
    if (child.tag !== "data") {
      throw new UnknownSelectorElement(`unexpected <${child.tag}> inside <${elem.tag}>`);
    }
    if (data !== null) {
      throw new MalformedDocument(`repeated <data> inside <${elem.tag}>`);
    }
    if (child.children.length) {
      throw new MalformedDocument("data element must not contain child elements");
    }
    data = child.text.trim();
  }
  if (data === null) {
    throw new MalformedDocument(`<${elem.tag}> without a <data> element`);
  }
  return data;
}

function parseSelectorElement(
  elem: XmlElement,
  dims: FormSelector,
  entries: FormEntry[],
  seen: Set<string>,
): void {
  const dimension = SELECTOR_TAGS[elem.tag];
  if (dims[dimension] !== null) {
    throw new MalformedDocument(`${dimension} level set twice in one selector`);
  }
  let value: string | ActKind = nameAttr(elem);
  if (dimension === "kind") {
    if (!(ACT_KINDS as readonly string[]).includes(value)) {
      throw new UnknownSelectorElement(`unknown act kind ${JSON.stringify(value)}`);
    }
  }
  const selector: FormSelector = { ...dims, [dimension]: value };
  rejectStrayText(elem);
  for (const child of elem.children) {
    if (child.tag in SELECTOR_TAGS) {
      parseSelectorElement(child, selector, entries, seen);
    } else if (child.tag === DIRECTIVE || child.tag === RESOURCE) {
      const key = `${selector.group}\0${selector.kind}\0${selector.name}\0${child.tag}`;
      if (seen.has(key)) {
        throw new DuplicateSelector(`second ${child.tag} for the same selector`);
      }
      seen.add(key);
      entries.push({ selector, kind: child.tag, data: parseData(child) });
    } else {
      throw new UnknownSelectorElement(`unknown selector element <${child.tag}>`);
    }
  }
}

export function parseForm(text: string): CustomizationForm {
  let root: XmlElement;
  try {
    root = parseXml(text);
  } catch (err) {
    if (err instanceof XmlSyntaxError) throw new MalformedDocument(err.message);
    throw err;
  }

  const entries: FormEntry[] = [];
  const seen = new Set<string>();
  const none: FormSelector = { group: null, kind: null, name: null };
  if (root.tag in SELECTOR_TAGS) {
    parseSelectorElement(root, none, entries, seen);
    return { id: "", entries };
  }
  if (root.tag !== "form") {
    throw new UnknownSelectorElement(`unknown root element <${root.tag}>`);
  }
  rejectStrayText(root);
  for (const child of root.children) {
    if (!(child.tag in SELECTOR_TAGS)) {
      throw new UnknownSelectorElement(`unknown selector element <${child.tag}>`);
    }
    parseSelectorElement(child, none, entries, seen);
  }
  return { id: root.attrs["id"] ?? "", entries };
}

export function resolveFields(
  form: CustomizationForm,
  kind: ActKind | null,
  name: string | null,
  group: string | null,
): ResolvedPresentation {
  let directive: FormEntry | null = null;
  const resources: FormEntry[] = [];
  for (const entry of form.entries) {
    if (!matches(entry.selector, kind, name, group)) continue;
    if (entry.kind === DIRECTIVE) {
      if (directive === null || selectorRank(entry.selector) > selectorRank(directive.selector)) {
        directive = entry;
      }
    } else {
      resources.push(entry);
    }
  }
  resources.sort((a, b) => selectorRank(b.selector) - selectorRank(a.selector));
  if (directive === null && !resources.length) return DEFAULT_PRESENTATION;
  return {
    directive: directive ? directive.data : null,
    resources: resources.map((e) => e.data),
    isDefault: directive === null,
  };
}

export function resolve(act: IslNode, form: CustomizationForm): ResolvedPresentation {
  return resolveFields(form, isGroup(act) ? null : act.kind, act.name, act.group);
}
