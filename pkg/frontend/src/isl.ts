/**
 * Downstream documents: act trees the service presents.
 *
 * Field vocabulary, defaults and error classification mirror the service
 * side codec, so a document either parses into the same shape here or
 * raises the matching error class. Missing life defaults to persistent,
 * missing modal to false.
 */

import { parseXml, XmlElement, XmlSyntaxError } from "./xml.js";

export type ActKind =
  | "input"
  | "output"
  | "selection"
  | "modification"
  | "create"
  | "destroy"
  | "start"
  | "stop";

export const ACT_KINDS: readonly ActKind[] = [
  "input",
  "output",
  "selection",
  "modification",
  "create",
  "destroy",
  "start",
  "stop",
];

export const GROUP_TAG = "isl";
export const DEFAULT_DEPTH_LIMIT = 32;

export interface LifeCycle {
  mode: "persistent" | "confirmed" | "temporary";
  duration: number | null;
}

export const PERSISTENT: LifeCycle = { mode: "persistent", duration: null };

export interface Alternative {
  id: string;
  label: string;
  returnValue: string;
  returns: "create" | "stop" | null;
}

export interface InteractionAct {
  node: "act";
  id: string;
  kind: ActKind;
  life: LifeCycle;
  modal: boolean;
  info: string;
  name: string | null;
  group: string | null;
  metadata: Array<[string, string]>;
  responseNumber: number | null;
  alternatives: Alternative[];
}

export interface IslGroup {
  node: "group";
  id: string;
  life: LifeCycle;
  modal: boolean;
  info: string;
  name: string | null;
  group: string | null;
  metadata: Array<[string, string]>;
  children: IslNode[];
}

export type IslNode = InteractionAct | IslGroup;

export class IslError extends Error {}
export class MalformedDocument extends IslError {}
export class UnknownElement extends IslError {}
export class MissingId extends IslError {}
export class InvalidLifeValue extends IslError {}
export class InvalidFieldValue extends IslError {}
export class DuplicateIdInDocument extends IslError {}
export class DepthLimitExceeded extends IslError {}
export class InvalidTree extends IslError {}

export function isGroup(node: IslNode): node is IslGroup {
  return node.node === "group";
}

export function* iterNodes(root: IslNode): Generator<IslNode> {
  const stack: IslNode[] = [root];
  while (stack.length) {
    const node = stack.pop()!;
    yield node;
    if (isGroup(node)) {
      for (let i = node.children.length - 1; i >= 0; i--) {
        stack.push(node.children[i]);
      }
    }
  }
}

/** Every id the node contributes to the page: its own plus alternatives. */
export function* componentIds(node: IslNode): Generator<string> {
  yield node.id;
  if (!isGroup(node)) {
    for (const alt of node.alternatives) yield alt.id;
  }
}

export function metadataValue(node: IslNode, key: string): string | null {
  for (const [k, v] of node.metadata) {
    if (k === key) return v;
  }
  return null;
}

const ACT_FIELD_TAGS = new Set([
  "id", "name", "group", "life", "modal", "response-number", "string", "meta",
]);

function strippedText(elem: XmlElement, what: string): string {
  if (elem.children.length) {
    throw new MalformedDocument(`${what} element must not contain child elements`);
  }
  return elem.text.trim();
}

function rawText(elem: XmlElement, what: string): string {
  if (elem.children.length) {
    throw new MalformedDocument(`${what} element must not contain child elements`);
  }
  return elem.text;
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

function parseLife(elem: XmlElement): LifeCycle {
  const mode = strippedText(elem, "life");
  if (mode !== "temporary" && mode !== "confirmed" && mode !== "persistent") {
    throw new InvalidLifeValue(`unknown life cycle value: ${JSON.stringify(mode)}`);
  }
  const duration = elem.attrs["duration"];
  if (mode === "temporary") {
    if (duration === undefined) {
      throw new InvalidLifeValue("temporary life cycle requires a duration attribute");
    }
    const seconds = Number(duration);
    if (!Number.isFinite(seconds)) {
      throw new InvalidLifeValue(`bad duration: ${JSON.stringify(duration)}`);
    }
    if (!(seconds > 0)) {
      throw new InvalidLifeValue(`duration must be > 0, got ${JSON.stringify(duration)}`);
    }
    return { mode, duration: seconds };
  }
  if (duration !== undefined) {
    throw new InvalidLifeValue(`${mode} life cycle carries no duration`);
  }
  return { mode, duration: null };
}

function parseModal(elem: XmlElement): boolean {
  const value = strippedText(elem, "modal");
  if (value === "true") return true;
  if (value === "false") return false;
  throw new InvalidFieldValue(`modal must be true or false, got ${JSON.stringify(value)}`);
}

function parseResponseNumber(elem: XmlElement): number {
  const value = strippedText(elem, "response-number");
  const number = /^-?\d+$/.test(value) ? parseInt(value, 10) : NaN;
  if (Number.isNaN(number)) {
    throw new InvalidFieldValue(`bad response number: ${JSON.stringify(value)}`);
  }
  if (number < 1) {
    throw new InvalidFieldValue(`response number must be positive, got ${number}`);
  }
  return number;
}

function parseMeta(elem: XmlElement): [string, string] {
  const key = elem.attrs["key"];
  if (key === undefined) {
    throw new MalformedDocument("meta element requires a key attribute");
  }
  return [key, rawText(elem, "meta")];
}

function parseAlternative(elem: XmlElement): Alternative {
  rejectStrayText(elem);
  let id = "";
  let label = "";
  let returnValue = "";
  for (const child of elem.children) {
    if (child.tag === "id") id = strippedText(child, "id");
    else if (child.tag === "string") label = rawText(child, "string");
    else if (child.tag === "return-value") returnValue = strippedText(child, "return-value");
    else throw new UnknownElement(`unexpected <${child.tag}> inside alternative`);
  }
  if (!id) throw new MissingId("alternative without id");
  let returns: "create" | "stop" | null = null;
  const attr = elem.attrs["returns"];
  if (attr !== undefined) {
    if (attr !== "create" && attr !== "stop") {
      throw new InvalidFieldValue(
        `alternative returns must be create or stop, got ${JSON.stringify(attr)}`,
      );
    }
    returns = attr;
  }
  return { id, label, returnValue, returns };
}

function registerId(id: string, ids: Set<string>): void {
  if (ids.has(id)) {
    throw new DuplicateIdInDocument(`id ${JSON.stringify(id)} appears more than once`);
  }
  ids.add(id);
}

function parseNode(
  elem: XmlElement,
  depth: number,
  depthLimit: number,
  ids: Set<string>,
): IslNode {
  if (depth > depthLimit) {
    throw new DepthLimitExceeded(`nesting deeper than ${depthLimit}`);
  }
  rejectStrayText(elem);
  const group = elem.tag === GROUP_TAG;
  let kind: ActKind | null = null;
  if (!group) {
    if (!(ACT_KINDS as readonly string[]).includes(elem.tag)) {
      throw new UnknownElement(`unknown element <${elem.tag}>`);
    }
    kind = elem.tag as ActKind;
  }

  let id = "";
  let name: string | null = null;
  let ownGroup: string | null = null;
  let life = PERSISTENT;
  let modal = false;
  let info = "";
  const metadata: Array<[string, string]> = [];
  let responseNumber: number | null = null;
  const alternatives: Alternative[] = [];
  const children: IslNode[] = [];
  const seen = new Set<string>();

  for (const child of elem.children) {
    const tag = child.tag;
    if (ACT_FIELD_TAGS.has(tag) || tag === "alternative") {
      if (tag !== "meta" && tag !== "alternative") {
        if (seen.has(tag)) throw new MalformedDocument(`repeated <${tag}> element`);
        seen.add(tag);
      }
      if (tag === "id") id = strippedText(child, "id");
      else if (tag === "name") name = strippedText(child, "name");
      else if (tag === "group") ownGroup = strippedText(child, "group");
      else if (tag === "life") life = parseLife(child);
      else if (tag === "modal") modal = parseModal(child);
      else if (tag === "response-number") responseNumber = parseResponseNumber(child);
      else if (tag === "string") info = rawText(child, "string");
      else if (tag === "meta") metadata.push(parseMeta(child));
      else {
        if (kind !== "selection") {
          throw new UnknownElement(
            `<alternative> is only valid inside a selection, not <${elem.tag}>`,
          );
        }
        alternatives.push(parseAlternative(child));
      }
      continue;
    }
    if (!group) {
      throw new UnknownElement(`unexpected <${child.tag}> inside <${elem.tag}>`);
    }
    children.push(parseNode(child, depth + 1, depthLimit, ids));
  }

  if (!id) throw new MissingId(`<${elem.tag}> without id`);
  if (group && responseNumber !== null) {
    throw new UnknownElement("groups carry no response number");
  }
  registerId(id, ids);
  for (const alt of alternatives) registerId(alt.id, ids);

  if (group) {
    return {
      node: "group", id, life, modal, info, name, group: ownGroup,
      metadata, children,
    };
  }
  return {
    node: "act", id, kind: kind!, life, modal, info, name, group: ownGroup,
    metadata, responseNumber, alternatives,
  };
}

/** Tree invariants beyond what parsing itself enforces. */
function checkTree(root: IslNode): void {
  for (const node of iterNodes(root)) {
    if (isGroup(node)) continue;
    if (node.kind === "selection") {
      if (node.responseNumber === null) {
        throw new InvalidTree(`${node.id}: selection acts carry a response number`);
      }
      if (!node.alternatives.length) {
        throw new InvalidTree(`${node.id}: selection acts carry at least one alternative`);
      }
      if (node.responseNumber > node.alternatives.length) {
        throw new InvalidTree(
          `${node.id}: response number ${node.responseNumber} not in ` +
            `1..${node.alternatives.length}`,
        );
      }
    } else if (node.responseNumber !== null) {
      throw new InvalidTree(`${node.id}: ${node.kind} acts carry no response number`);
    }
  }
}

export function parseDownstream(
  text: string,
  depthLimit: number = DEFAULT_DEPTH_LIMIT,
): IslNode {
  let root: XmlElement;
  try {
    root = parseXml(text);
  } catch (err) {
    if (err instanceof XmlSyntaxError) throw new MalformedDocument(err.message);
    throw err;
  }
  const tree = parseNode(root, 1, depthLimit, new Set());
  checkTree(tree);
  return tree;
}
