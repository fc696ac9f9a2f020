/**
 * Small strict XML reader for the session grammars.
 *
 * Covers exactly what the wire carries: elements, attributes, character
 * data and the five predefined entities plus numeric references. Text
 * placement mirrors the usual tree model (`text` before the first child,
 * `tail` after each child) so grammar rules about stray text transfer
 * one to one. Anything outside that subset (CDATA, doctypes, processing
 * instructions in content) is rejected rather than guessed at.
 */

export class XmlSyntaxError extends Error {}

export interface XmlElement {
  tag: string;
  attrs: Record<string, string>;
  children: XmlElement[];
  /** character data between the start tag and the first child */
  text: string;
  /** character data between this element's end tag and the next sibling */
  tail: string;
}

const NAME_START = /[A-Za-z_:]/;
const NAME_CHAR = /[A-Za-z0-9_:.\-]/;

class Scanner {
  pos = 0;

  constructor(readonly source: string) {}

  get done(): boolean {
    return this.pos >= this.source.length;
  }

  peek(offset = 0): string {
    return this.source[this.pos + offset] ?? "";
  }

  startsWith(token: string): boolean {
    return this.source.startsWith(token, this.pos);
  }

  fail(message: string): never {
    throw new XmlSyntaxError(`${message} at offset ${this.pos}`);
  }

  expect(token: string): void {
    if (!this.startsWith(token)) {
      this.fail(`expected ${JSON.stringify(token)}`);
    }
    this.pos += token.length;
  }

  skipWhitespace(): void {
    while (!this.done && /\s/.test(this.peek())) this.pos += 1;
  }

  skipComment(): void {
    this.expect("<!--");
    const end = this.source.indexOf("-->", this.pos);
    if (end === -1) this.fail("unterminated comment");
    this.pos = end + 3;
  }

  name(): string {
    if (!NAME_START.test(this.peek())) this.fail("expected a name");
    const start = this.pos;
    this.pos += 1;
    while (!this.done && NAME_CHAR.test(this.peek())) this.pos += 1;
    return this.source.slice(start, this.pos);
  }

  entity(): string {
    this.expect("&");
    const end = this.source.indexOf(";", this.pos);
    if (end === -1 || end - this.pos > 10) this.fail("unterminated entity");
    const body = this.source.slice(this.pos, end);
    this.pos = end + 1;
    switch (body) {
      case "lt": return "<";
      case "gt": return ">";
      case "amp": return "&";
      case "quot": return '"';
      case "apos": return "'";
    }
    if (body.startsWith("#")) {
      const code = body.startsWith("#x") || body.startsWith("#X")
        ? parseInt(body.slice(2), 16)
        : parseInt(body.slice(1), 10);
      if (Number.isNaN(code)) this.fail(`bad character reference &${body};`);
      return String.fromCodePoint(code);
    }
    this.fail(`undefined entity &${body};`);
  }
}

function parseAttributes(s: Scanner): Record<string, string> {
  const attrs: Record<string, string> = {};
  for (;;) {
    s.skipWhitespace();
    const c = s.peek();
    if (c === ">" || c === "/" || c === "") return attrs;
    const key = s.name();
    s.skipWhitespace();
    s.expect("=");
    s.skipWhitespace();
    const quote = s.peek();
    if (quote !== '"' && quote !== "'") s.fail("attribute value must be quoted");
    s.pos += 1;
    let value = "";
    while (!s.done && s.peek() !== quote) {
      if (s.peek() === "<") s.fail("raw '<' in attribute value");
      value += s.peek() === "&" ? s.entity() : s.source[s.pos++];
    }
    s.expect(quote);
    if (key in attrs) s.fail(`duplicate attribute ${key}`);
    attrs[key] = value;
  }
}

function parseElement(s: Scanner): XmlElement {
  s.expect("<");
  const tag = s.name();
  const attrs = parseAttributes(s);
  const element: XmlElement = { tag, attrs, children: [], text: "", tail: "" };
  if (s.startsWith("/>")) {
    s.pos += 2;
    return element;
  }
  s.expect(">");

  let textTarget: "text" | "tail" = "text";
  const append = (chunk: string) => {
    if (textTarget === "text") element.text += chunk;
    else element.children[element.children.length - 1].tail += chunk;
  };

  for (;;) {
    if (s.done) s.fail(`unclosed <${tag}>`);
    const c = s.peek();
    if (c === "<") {
      if (s.startsWith("</")) {
        s.pos += 2;
        const closing = s.name();
        if (closing !== tag) s.fail(`mismatched </${closing}>, expected </${tag}>`);
        s.skipWhitespace();
        s.expect(">");
        return element;
      }
      if (s.startsWith("<!--")) {
        s.skipComment();
        continue;
      }
      if (s.startsWith("<!") || s.startsWith("<?")) {
        s.fail("unsupported markup in element content");
      }
      element.children.push(parseElement(s));
      textTarget = "tail";
      continue;
    }
    if (c === "&") {
      append(s.entity());
      continue;
    }
    append(c);
    s.pos += 1;
  }
}

function skipProlog(s: Scanner): void {
  for (;;) {
    s.skipWhitespace();
    if (s.startsWith("<?")) {
      const end = s.source.indexOf("?>", s.pos);
      if (end === -1) s.fail("unterminated processing instruction");
      s.pos = end + 2;
    } else if (s.startsWith("<!--")) {
      s.skipComment();
    } else {
      return;
    }
  }
}

export function parseXml(text: string): XmlElement {
  const s = new Scanner(text.replace(/^﻿/, ""));
  skipProlog(s);
  if (s.done || s.peek() !== "<") s.fail("expected a root element");
  if (s.startsWith("<!")) s.fail("unsupported markup");
  const root = parseElement(s);
  skipProlog(s);
  if (!s.done) s.fail("content after the root element");
  root.tail = "";
  return root;
}
