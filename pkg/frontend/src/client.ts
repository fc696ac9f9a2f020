/**
 * The page-side session: one WebSocket, one session core, one widget tree.
 *
 * Frames are processed strictly in arrival order. The core owns life cycle
 * and modality; this layer translates its mutation stream into DOM changes,
 * schedules the next temporary expiry, paints the status line, and turns
 * widget events into ACTION frames. Actions the core refuses (modality,
 * spent selections, outputs) produce no frame at all.
 */

import { Frame, decodeMessage, encodeMessage, formatDescriptor } from "./frames.js";
import { parseDownstream } from "./isl.js";
import { CustomizationForm, EMPTY_FORM, parseForm } from "./forms.js";
import { ClientCore, EngineError, Mutation } from "./core.js";
import { childSlot, renderComponent } from "./widgets.js";
import { serializeUpstream } from "./upstream.js";

export interface SocketLike {
  send(data: string): void;
  close(): void;
  onopen: (() => void) | null;
  onmessage: ((event: { data: unknown }) => void) | null;
  onerror: (() => void) | null;
  onclose: (() => void) | null;
}

export type SocketFactory = (url: string) => SocketLike;

export type ClientState = "idle" | "connecting" | "open" | "closed";

export interface ClientOptions {
  root: HTMLElement;
  form?: string;
  detail?: string;
  sessionId?: string;
  socketFactory?: SocketFactory;
  clock?: () => number;
  /** send a PING every this many seconds to keep idle sessions alive */
  keepaliveSeconds?: number;
}

function randomSessionId(): string {
  let id = "w";
  for (let i = 0; i < 4; i++) {
    id += Math.floor(Math.random() * 0xffff).toString(16).padStart(4, "0");
  }
  return id;
}

export class UbiClient {
  readonly sessionId: string;
  core: ClientCore;
  readonly sent: Frame[] = [];
  readonly received: Frame[] = [];
  state: ClientState = "idle";

  private readonly root: HTMLElement;
  private readonly doc: Document;
  private readonly statusLine: HTMLElement;
  private readonly banner: HTMLElement;
  private readonly bannerText: HTMLElement;
  private readonly overlay: HTMLElement;
  private readonly page: HTMLElement;
  private readonly elements = new Map<string, HTMLElement>();
  private readonly socketFactory: SocketFactory;
  private readonly clock: () => number;
  private readonly formId?: string;
  private readonly detail?: string;
  private readonly keepaliveSeconds: number;
  private socket: SocketLike | null = null;
  private lastUrl = "";
  private opened = false;
  private expiryHandle: ReturnType<typeof setTimeout> | null = null;
  private keepaliveHandle: ReturnType<typeof setInterval> | null = null;
  private form: CustomizationForm = EMPTY_FORM;

  constructor(options: ClientOptions) {
    this.root = options.root;
    this.doc = this.root.ownerDocument;
    this.formId = options.form;
    this.detail = options.detail;
    this.sessionId = options.sessionId ?? randomSessionId();
    this.clock = options.clock ?? (() => Date.now() / 1000);
    this.core = new ClientCore(EMPTY_FORM, this.clock);
    this.socketFactory =
      options.socketFactory ?? ((url) => new WebSocket(url) as unknown as SocketLike);
    this.keepaliveSeconds = options.keepaliveSeconds ?? 0;

    this.statusLine = this.scaffold("div", "ubi-status");
    this.statusLine.dataset.state = "idle";
    this.statusLine.textContent = "not connected";
    this.banner = this.scaffold("div", "ubi-banner");
    this.banner.hidden = true;
    this.bannerText = this.doc.createElement("span");
    this.bannerText.className = "ubi-banner-text";
    this.banner.appendChild(this.bannerText);
    const retry = this.doc.createElement("button");
    retry.type = "button";
    retry.className = "ubi-retry";
    retry.textContent = "Retry";
    retry.addEventListener("click", () => this.connect(this.lastUrl));
    this.banner.appendChild(retry);
    this.overlay = this.scaffold("div", "ubi-overlay");
    this.overlay.hidden = true;
    this.page = this.scaffold("main", "ubi-page");
  }

  private scaffold(tag: string, className: string): HTMLElement {
    const element = this.doc.createElement(tag);
    element.className = className;
    this.root.appendChild(element);
    return element;
  }

  /** Open the session. A second call while one is underway is refused. */
  connect(url: string): boolean {
    if (this.state === "connecting" || this.state === "open") {
      console.warn("already connected; one session per page");
      return false;
    }
    this.lastUrl = url;
    this.reset();
    this.setState("connecting", "connecting…");
    this.banner.hidden = true;
    let socket: SocketLike;
    try {
      socket = this.socketFactory(url);
    } catch (err) {
      this.fail(`could not open a connection to ${url}`);
      return true;
    }
    this.socket = socket;
    socket.onopen = () => {
      const hello: Frame = {
        type: "HELLO",
        sessionId: this.sessionId,
        body: formatDescriptor("web", this.formId, this.detail),
      };
      this.send(hello);
    };
    socket.onmessage = (event) => this.onMessage(String(event.data));
    socket.onerror = () => this.fail(`connection to ${url} failed`);
    socket.onclose = () => {
      if (this.state === "connecting") this.fail(`connection to ${url} failed`);
      else if (this.state === "open") this.fail("connection lost");
    };
    return true;
  }

  /** User action on a component; false when nothing was sent. */
  emitAction(componentId: string, payload: string | null = null): boolean {
    if (this.state !== "open" || this.core.ended) {
      console.warn(`dropping action on ${componentId}: session not open`);
      return false;
    }
    let result;
    try {
      result = this.core.handleAction(componentId, payload);
    } catch (err) {
      if (err instanceof EngineError) {
        console.warn(`action on ${componentId} refused: ${(err as Error).message}`);
        return false;
      }
      throw err;
    }
    this.send({
      type: "ACTION",
      sessionId: this.sessionId,
      body: serializeUpstream(result.responses),
    });
    this.applyMutations(result.mutations);
    this.afterBatch();
    return true;
  }

  /** Orderly shutdown: BYE, then close the socket. */
  close(): void {
    if (this.socket && this.state === "open") {
      this.send({ type: "BYE", sessionId: this.sessionId, body: "" });
    }
    this.teardownSocket();
    this.setState("closed", "session over");
  }

  /** Component ids currently present in the page, for parity checks. */
  inventory(): string[] {
    return Array.from(this.page.querySelectorAll("[data-act-id]")).map(
      (el) => (el as HTMLElement).dataset.actId!,
    );
  }

  // -- frame handling --------------------------------------------------------

  private onMessage(text: string): void {
    let frame: Frame;
    try {
      frame = decodeMessage(text);
    } catch (err) {
      this.fail(`unreadable frame: ${(err as Error).message}`);
      return;
    }
    this.received.push(frame);
    try {
      this.dispatch(frame);
    } catch (err) {
      this.fail(`protocol failure on ${frame.type}: ${(err as Error).message}`);
    }
  }

  private dispatch(frame: Frame): void {
    if ((frame.type === "PRESENT" || frame.type === "REMOVE") && this.state !== "open") {
      throw new Error(`${frame.type} before WELCOME`);
    }
    switch (frame.type) {
      case "WELCOME": {
        if (frame.body.trim()) {
          try {
            this.form = parseForm(frame.body);
          } catch (err) {
            console.warn(`ignoring unreadable form: ${(err as Error).message}`);
            this.form = EMPTY_FORM;
          }
        }
        this.core.setForm(this.form);
        this.opened = true;
        this.setState("open", "connected");
        this.banner.hidden = true;
        this.startKeepalive();
        return;
      }
      case "PRESENT": {
        const mutations = this.core.applyDocument(parseDownstream(frame.body));
        this.applyMutations(mutations);
        this.afterBatch();
        if (this.core.ended) this.setState("closed", "session over");
        return;
      }
      case "REMOVE": {
        const ids = frame.body.split("\n").filter((line) => line.length > 0);
        this.applyMutations(this.core.serviceRemove(ids));
        this.afterBatch();
        return;
      }
      case "PING":
        return; // keepalive echo; nothing to do
      case "BYE": {
        this.teardownSocket();
        this.setState("closed", "session over");
        return;
      }
      default:
        throw new Error(`${frame.type} flows engine to service`);
    }
  }

  // -- DOM application ---------------------------------------------------------

  private applyMutations(mutations: Mutation[]): void {
    for (const mutation of mutations) {
      if (mutation.op === "add") {
        const element = renderComponent(
          mutation.act,
          mutation.presentation,
          (componentId, payload) => this.emitAction(componentId, payload),
          this.doc,
        );
        const parentId = this.core.live.get(mutation.act.id)!.parentId;
        const parent = parentId === null ? this.page : childSlot(this.elements.get(parentId)!);
        parent.appendChild(element);
        this.elements.set(mutation.act.id, element);
      } else if (mutation.op === "remove") {
        const element = this.elements.get(mutation.actId);
        if (element) element.remove();
        this.elements.delete(mutation.actId);
      }
      // lock/unlock are recomputed wholesale in afterBatch
    }
  }

  private afterBatch(): void {
    this.refreshModal();
    this.armExpiry();
  }

  private refreshModal(): void {
    const holderId = this.core.modalHolder;
    const holder = holderId === null ? null : this.elements.get(holderId) ?? null;
    this.overlay.hidden = holder === null;
    const controls = this.page.querySelectorAll("button, input, select");
    for (const control of Array.from(controls)) {
      const blocked = holder !== null && !holder.contains(control);
      (control as HTMLButtonElement).disabled = blocked;
    }
  }

  private armExpiry(): void {
    if (this.expiryHandle !== null) {
      clearTimeout(this.expiryHandle);
      this.expiryHandle = null;
    }
    const next = this.core.nextExpiry();
    if (next === null || this.core.ended) return;
    const delay = Math.max(0, (next - this.clock()) * 1000);
    this.expiryHandle = setTimeout(() => {
      this.expiryHandle = null;
      this.applyMutations(this.core.tick(this.clock()));
      this.afterBatch();
    }, delay);
  }

  // -- plumbing ----------------------------------------------------------------

  private send(frame: Frame): void {
    this.socket!.send(encodeMessage(frame));
    this.sent.push(frame);
  }

  private startKeepalive(): void {
    if (this.keepaliveSeconds <= 0 || this.keepaliveHandle !== null) return;
    this.keepaliveHandle = setInterval(() => {
      if (this.state === "open") {
        this.send({ type: "PING", sessionId: this.sessionId, body: "" });
      }
    }, this.keepaliveSeconds * 1000);
  }

  private setState(state: ClientState, message: string): void {
    this.state = state;
    this.statusLine.dataset.state = state;
    this.statusLine.textContent = message;
  }

  private fail(message: string): void {
    this.teardownSocket();
    this.bannerText.textContent = message;
    this.banner.hidden = false;
    this.setState(this.opened ? "closed" : "idle", "disconnected");
  }

  /** Fresh page and core for a (re)connect; transcripts are kept. */
  private reset(): void {
    this.teardownSocket();
    this.elements.clear();
    this.page.innerHTML = "";
    this.overlay.hidden = true;
    this.opened = false;
    this.form = EMPTY_FORM;
    this.core = new ClientCore(EMPTY_FORM, this.clock);
  }

  private teardownSocket(): void {
    if (this.keepaliveHandle !== null) {
      clearInterval(this.keepaliveHandle);
      this.keepaliveHandle = null;
    }
    if (this.expiryHandle !== null) {
      clearTimeout(this.expiryHandle);
      this.expiryHandle = null;
    }
    const socket = this.socket;
    this.socket = null;
    if (socket) {
      socket.onopen = socket.onmessage = socket.onerror = socket.onclose = null;
      try {
        socket.close();
      } catch {
        // already gone
      }
    }
  }
}
