/**
 * Session frames in the message-per-frame grammar.
 *
 * On channels that preserve message boundaries (the page WebSocket) a frame
 * is one text message: a header line `UBI/1.0 <TYPE> <session-id>`, a blank
 * line, then the body. No length prefix; the channel already frames it.
 */

export const PROTOCOL = "UBI/1.0";

export const FRAME_TYPES = [
  "HELLO",
  "WELCOME",
  "PRESENT",
  "REMOVE",
  "ACTION",
  "PING",
  "BYE",
] as const;

export type FrameType = (typeof FRAME_TYPES)[number];

export interface Frame {
  type: FrameType;
  sessionId: string;
  body: string;
}

export class FrameError extends Error {}

function isFrameType(value: string): value is FrameType {
  return (FRAME_TYPES as readonly string[]).includes(value);
}

function checkSessionId(sessionId: string): void {
  if (!sessionId || /[\s]/.test(sessionId) || !/^[\x21-\x7e]+$/.test(sessionId)) {
    throw new FrameError("malformed session id");
  }
}

export function encodeMessage(frame: Frame): string {
  if (!isFrameType(frame.type)) {
    throw new FrameError(`unknown frame type ${JSON.stringify(frame.type)}`);
  }
  checkSessionId(frame.sessionId);
  return `${PROTOCOL} ${frame.type} ${frame.sessionId}\n\n${frame.body}`;
}

export function decodeMessage(text: string): Frame {
  const split = text.indexOf("\n\n");
  if (split === -1) {
    throw new FrameError("missing blank line after header");
  }
  const header = text.slice(0, split);
  const body = text.slice(split + 2);
  const parts = header.split(" ");
  if (parts.length !== 3 || parts[0] !== PROTOCOL) {
    throw new FrameError(`expected a ${PROTOCOL} header line`);
  }
  const [, type, sessionId] = parts;
  if (!isFrameType(type)) {
    throw new FrameError(`unknown frame type ${JSON.stringify(type)}`);
  }
  checkSessionId(sessionId);
  return { type, sessionId, body };
}

/** HELLO body: one key=value line per descriptor field. */
export function formatDescriptor(
  engine: string,
  form?: string,
  detail?: string,
): string {
  const lines = [`engine=${engine}`];
  if (form !== undefined) lines.push(`form=${form}`);
  if (detail !== undefined) lines.push(`detail=${detail}`);
  return lines.map((line) => line + "\n").join("");
}
