/**
 * Upstream documents: the responses user actions turn into.
 *
 * Serialization is canonical and matches the service side byte for byte:
 * a single response is a bare element, several are wrapped in
 * `<isl-response>`, and each response carries its id plus an optional
 * value. Output never travels upstream.
 */

import { parseXml, XmlElement, XmlSyntaxError } from "./xml.js";
import {
  ACT_KINDS,
  ActKind,
  IslError,
  MalformedDocument,
  MissingId,
  UnknownElement,
} from "./isl.js";

export const UPSTREAM_TAG = "isl-response";

export type ResponseKind = Exclude<ActKind, "output">;

export interface UpstreamResponse {
  actId: string;
  kind: ResponseKind;
  payload: string | null;
}

export class InvalidResponse extends IslError {}

function escapeText(text: string): string {
  return text
    .replace(/&/g, "&amp;")
    .replace(/</g, "&lt;")
    .replace(/>/g, "&gt;")
    .replace(/\r/g, "&#13;");
}

function serializeResponse(resp: UpstreamResponse, out: string[], pad: string): void {
  if (!resp.actId) throw new InvalidResponse("response without act id");
  if ((resp.kind as string) === "output") {
    throw new InvalidResponse("output acts never travel upstream");
  }
  out.push(`${pad}<${resp.kind}>`);
  out.push(`${pad}  <id>${escapeText(resp.actId)}</id>`);
  if (resp.payload !== null) {
    out.push(`${pad}  <value>${escapeText(resp.payload)}</value>`);
  }
  out.push(`${pad}</${resp.kind}>`);
}

export function serializeUpstream(responses: UpstreamResponse[]): string {
  const out: string[] = [];
  if (responses.length === 1) {
    serializeResponse(responses[0], out, "");
  } else {
    out.push(`<${UPSTREAM_TAG}>`);
    for (const resp of responses) serializeResponse(resp, out, "  ");
    out.push(`</${UPSTREAM_TAG}>`);
  }
  return out.join("\n") + "\n";
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

function parseResponse(elem: XmlElement): UpstreamResponse {
  if (!(ACT_KINDS as readonly string[]).includes(elem.tag)) {
    throw new UnknownElement(`unknown response element <${elem.tag}>`);
  }
  if (elem.tag === "output") {
    throw new UnknownElement("output acts never travel upstream");
  }
  rejectStrayText(elem);
  let actId = "";
  let payload: string | null = null;
  for (const child of elem.children) {
    if (child.tag === "id") {
      if (child.children.length) {
        throw new MalformedDocument("id element must not contain child elements");
      }
      actId = child.text.trim();
    } else if (child.tag === "value") {
      if (child.children.length) {
        throw new MalformedDocument("value element must not contain child elements");
      }
      payload = child.text;
    } else {
      throw new UnknownElement(`unexpected <${child.tag}> inside response`);
    }
  }
  if (!actId) throw new MissingId(`<${elem.tag}> response without id`);
  return { actId, kind: elem.tag as ResponseKind, payload };
}

export function parseUpstream(text: string): UpstreamResponse[] {
  let root: XmlElement;
  try {
    root = parseXml(text);
  } catch (err) {
    if (err instanceof XmlSyntaxError) throw new MalformedDocument(err.message);
    throw err;
  }
  if (root.tag === UPSTREAM_TAG) {
    rejectStrayText(root);
    return root.children.map(parseResponse);
  }
  return [parseResponse(root)];
}
