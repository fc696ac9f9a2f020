/** Shared plumbing for the engine test suites. */

import { spawnSync } from "node:child_process";
import { mkdtempSync, readFileSync, writeFileSync, rmSync } from "node:fs";
import { tmpdir } from "node:os";
import path from "node:path";
import { fileURLToPath } from "node:url";

import { Frame, FrameType } from "../src/frames.js";
import { SocketLike } from "../src/client.js";

const HERE = path.dirname(fileURLToPath(import.meta.url));

/** Repository root: the service package this engine talks to. */
export const REPO_ROOT = path.resolve(HERE, "..", "..");
export const FIXTURES = path.join(REPO_ROOT, "tests", "fixtures");
export const PYTHON = process.env.PYTHON ?? "python3";

export function readFixture(...parts: string[]): string {
  return readFileSync(path.join(FIXTURES, ...parts), "utf8");
}

export interface CliResult {
  status: number;
  stdout: string;
  stderr: string;
}

/** Run the service package's command line front end. */
export function runCli(args: string[]): CliResult {
  const proc = spawnSync(PYTHON, ["-m", "ubi", ...args], {
    cwd: REPO_ROOT,
    encoding: "utf8",
  });
  if (proc.error) throw proc.error;
  return { status: proc.status ?? -1, stdout: proc.stdout, stderr: proc.stderr };
}

/** Check a document against the service-side grammar; returns the report. */
export function validateWithService(
  text: string,
  direction: "down" | "up" | "form",
): CliResult {
  const dir = mkdtempSync(path.join(tmpdir(), "ubi-doc-"));
  const file = path.join(dir, "doc.isl");
  try {
    writeFileSync(file, text, "utf8");
    return runCli(["validate", file, "--direction", direction]);
  } finally {
    rmSync(dir, { recursive: true, force: true });
  }
}

export interface TranscriptEntry {
  direction: "up" | "down";
  frame: Frame;
}

/** Parse a transcript dump produced by the demo command. */
export function parseDump(dump: string): TranscriptEntry[] {
  const entries: TranscriptEntry[] = [];
  let current: { direction: "up" | "down"; type: FrameType; bytes: number } | null = null;
  let body: string[] = [];
  const flush = () => {
    if (!current) return;
    const text = current.bytes === 0 ? "" : body.join("\n") + "\n";
    entries.push({
      direction: current.direction,
      frame: { type: current.type, sessionId: "demo", body: text },
    });
    current = null;
    body = [];
  };
  for (const line of dump.split("\n")) {
    const head = /^\d{4} +(up|down) (\w+) (\d+)B$/.exec(line);
    if (head) {
      flush();
      current = {
        direction: head[1] as "up" | "down",
        type: head[2] as FrameType,
        bytes: parseInt(head[3], 10),
      };
      continue;
    }
    if (line.startsWith("     | ")) body.push(line.slice(7));
  }
  flush();
  return entries;
}

/** Record a scripted loopback session through the demo command. */
export function demoTranscript(
  service: string,
  script: string,
  extra: string[] = [],
): TranscriptEntry[] {
  const result = runCli([
    "demo",
    "--service",
    service,
    "--script",
    path.join(FIXTURES, "scripts", script),
    ...extra,
  ]);
  if (result.status !== 0) {
    throw new Error(`demo failed (${result.status}): ${result.stderr}`);
  }
  return parseDump(result.stdout);
}

/** In-memory socket: the test plays the service side. */
export class FakeSocket implements SocketLike {
  static instances: FakeSocket[] = [];
  readonly outbox: string[] = [];
  closed = false;
  onopen: (() => void) | null = null;
  onmessage: ((event: { data: unknown }) => void) | null = null;
  onerror: (() => void) | null = null;
  onclose: (() => void) | null = null;

  constructor(readonly url: string) {
    FakeSocket.instances.push(this);
  }

  send(data: string): void {
    this.outbox.push(data);
  }

  close(): void {
    this.closed = true;
  }

  open(): void {
    this.onopen?.();
  }

  deliver(text: string): void {
    this.onmessage?.({ data: text });
  }
}

export function makeRoot(): HTMLElement {
  const root = document.createElement("div");
  document.body.appendChild(root);
  return root;
}
