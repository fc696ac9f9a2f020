/**
 * Client-side session core: which components are live, who holds the modal
 * lock, which temporary components are due for removal, and what a user
 * action turns into. The semantics deliberately match the service-side
 * engine so the page and the service never disagree about the live set.
 *
 * Every state change comes back as a mutation list; the widget layer
 * consumes mutations without re-implementing any rules. Time is injected.
 */

import {
  Alternative,
  InteractionAct,
  IslNode,
  componentIds,
  isGroup,
  iterNodes,
} from "./isl.js";
import { CustomizationForm, EMPTY_FORM, ResolvedPresentation, resolve } from "./forms.js";
import { UpstreamResponse } from "./upstream.js";

export const EXPIRED = "expired";
export const CONFIRMED_DONE = "confirmed";
export const SERVICE = "service";
export const SESSION_END = "session-end";

export class EngineError extends Error {}
export class UnknownComponent extends EngineError {}
export class NotActionable extends EngineError {}
export class ActionOnOutput extends NotActionable {}
export class BlockedByModal extends EngineError {}
export class ResponseCountExceeded extends EngineError {}
export class DuplicateLiveId extends EngineError {}
export class InvalidActionPayload extends EngineError {}
export class SessionEnded extends EngineError {}

export type Mutation =
  | { op: "add"; act: IslNode; presentation: ResolvedPresentation }
  | { op: "remove"; actId: string; reason: string }
  | { op: "lock"; exceptId: string }
  | { op: "unlock" };

export interface LiveComponent {
  act: IslNode;
  presentation: ResolvedPresentation;
  createdAt: number;
  seq: number;
  parentId: string | null;
  children: string[];
  responsesUsed: number;
  expiresAt: number | null;
}

interface Timer {
  at: number;
  seq: number;
  actId: string;
}

export class ClientCore {
  readonly live = new Map<string, LiveComponent>();
  readonly roots: string[] = [];
  readonly altOwner = new Map<string, string>();
  modalHolder: string | null = null;
  ended = false;

  private form: CustomizationForm;
  private readonly clock: () => number;
  private readonly modalQueue: string[] = [];
  private readonly timers: Timer[] = [];
  private seq = 0;
  private lastTick: number | null = null;

  constructor(form: CustomizationForm = EMPTY_FORM, clock: () => number = () => 0) {
    this.form = form;
    this.clock = clock;
  }

  setForm(form: CustomizationForm): void {
    this.form = form;
  }

  get(actId: string): LiveComponent {
    const record = this.live.get(actId);
    if (!record) throw new UnknownComponent(`no live component ${JSON.stringify(actId)}`);
    return record;
  }

  /** The live act a UI component belongs to; alternatives map to their selection. */
  ownerOf(componentId: string): string {
    const owner = this.altOwner.get(componentId);
    if (owner !== undefined) return owner;
    if (this.live.has(componentId)) return componentId;
    throw new UnknownComponent(`no live component ${JSON.stringify(componentId)}`);
  }

  /** True when the modal holder's subtree does not contain the target. */
  isBlocked(componentId: string): boolean {
    if (this.modalHolder === null) return false;
    let nodeId: string | null = this.ownerOf(componentId);
    while (nodeId !== null) {
      if (nodeId === this.modalHolder) return false;
      nodeId = this.live.get(nodeId)!.parentId;
    }
    return true;
  }

  /** Earliest pending expiry, in session seconds, or null. */
  nextExpiry(): number | null {
    let best: number | null = null;
    for (const timer of this.timers) {
      const record = this.live.get(timer.actId);
      if (!record || record.seq !== timer.seq) continue;
      if (best === null || timer.at < best) best = timer.at;
    }
    return best;
  }

  applyDocument(tree: IslNode): Mutation[] {
    this.requireOpen();
    for (const node of iterNodes(tree)) {
      if (!isGroup(node) && node.kind === "stop") {
        return this.endComponents();
      }
    }

    const fresh = new Set<string>();
    for (const node of iterNodes(tree)) {
      if (!isGroup(node) && node.kind === "start") continue;
      for (const newId of componentIds(node)) {
        if (this.live.has(newId) || this.altOwner.has(newId) || fresh.has(newId)) {
          throw new DuplicateLiveId(`id ${JSON.stringify(newId)} is already live`);
        }
        fresh.add(newId);
      }
    }

    const out: Mutation[] = [];
    this.addNode(tree, null, out);
    this.settleModal(out);
    return out;
  }

  private addNode(node: IslNode, parentId: string | null, out: Mutation[]): void {
    if (!isGroup(node) && node.kind === "start") return;
    const record: LiveComponent = {
      act: node,
      presentation: resolve(node, this.form),
      createdAt: this.clock(),
      seq: this.seq++,
      parentId,
      children: [],
      responsesUsed: 0,
      expiresAt: null,
    };
    this.live.set(node.id, record);
    if (parentId === null) this.roots.push(node.id);
    else this.live.get(parentId)!.children.push(node.id);
    if (!isGroup(node)) {
      for (const alt of node.alternatives) this.altOwner.set(alt.id, node.id);
    }
    if (node.life.mode === "temporary") {
      record.expiresAt = record.createdAt + node.life.duration!;
      this.timers.push({ at: record.expiresAt, seq: record.seq, actId: node.id });
    }
    if (node.modal) this.modalQueue.push(node.id);
    out.push({ op: "add", act: node, presentation: record.presentation });
    if (isGroup(node)) {
      for (const child of node.children) this.addNode(child, node.id, out);
    }
  }

  /**
   * Turn a user action on a component into upstream responses. The
   * component is an act id or a selection alternative's id; a selection may
   * also be addressed by its own id with the chosen alternative's return
   * value as payload.
   */
  handleAction(
    componentId: string,
    payload: string | null = null,
  ): { responses: UpstreamResponse[]; mutations: Mutation[] } {
    this.requireOpen();
    const ownerId = this.ownerOf(componentId);
    const record = this.live.get(ownerId)!;
    const act = record.act;

    if (isGroup(act)) {
      throw new NotActionable(`groups accept no actions (${JSON.stringify(componentId)})`);
    }
    if (act.kind === "output") {
      throw new ActionOnOutput(`output ${JSON.stringify(componentId)} presents only`);
    }
    if (this.isBlocked(componentId)) {
      throw new BlockedByModal(
        `${JSON.stringify(componentId)} is blocked while ` +
          `${JSON.stringify(this.modalHolder)} is modal`,
      );
    }

    let response: UpstreamResponse;
    if (act.kind === "selection") {
      response = this.selectionResponse(record, act, componentId, payload);
    } else {
      response = { actId: act.id, kind: act.kind, payload };
    }

    const mutations: Mutation[] = [];
    if (act.life.mode === "confirmed") {
      this.removeSubtree(ownerId, CONFIRMED_DONE, mutations);
      this.settleModal(mutations);
    }
    return { responses: [response], mutations };
  }

  private selectionResponse(
    record: LiveComponent,
    act: InteractionAct,
    componentId: string,
    payload: string | null,
  ): UpstreamResponse {
    let alt: Alternative;
    if (componentId === act.id) {
      const match = act.alternatives.find((a) => a.returnValue === payload);
      if (!match) {
        throw new InvalidActionPayload(
          `${JSON.stringify(payload)} names no alternative of ${JSON.stringify(act.id)}`,
        );
      }
      alt = match;
    } else {
      alt = act.alternatives.find((a) => a.id === componentId)!;
    }
    if (record.responsesUsed >= (act.responseNumber ?? 1)) {
      throw new ResponseCountExceeded(
        `selection ${JSON.stringify(act.id)} already used its ` +
          `${act.responseNumber} response(s)`,
      );
    }
    record.responsesUsed += 1;
    if (alt.returns !== null) {
      // direct activation forwards caller data; addressing the selection
      // by id spends the payload on alternative matching
      const carried = componentId === alt.id ? payload : null;
      return { actId: alt.id, kind: alt.returns, payload: carried };
    }
    return { actId: act.id, kind: "selection", payload: alt.returnValue };
  }

  /** Remove every temporary component whose time is up (inclusive). */
  tick(now?: number): Mutation[] {
    if (this.ended) return [];
    const at = now ?? this.clock();
    if (this.lastTick !== null && at < this.lastTick) {
      throw new Error(`time went backwards: ${at} < ${this.lastTick}`);
    }
    this.lastTick = at;

    const out: Mutation[] = [];
    this.timers.sort((a, b) => a.at - b.at || a.seq - b.seq);
    while (this.timers.length && this.timers[0].at <= at) {
      const timer = this.timers.shift()!;
      const record = this.live.get(timer.actId);
      if (!record || record.seq !== timer.seq) continue;
      this.removeSubtree(timer.actId, EXPIRED, out);
    }
    if (out.length) this.settleModal(out);
    return out;
  }

  /** Remove the given components (and their subtrees) on service order. */
  serviceRemove(ids: string[]): Mutation[] {
    this.requireOpen();
    for (const actId of ids) {
      if (!this.live.has(actId)) {
        throw new UnknownComponent(`no live component ${JSON.stringify(actId)}`);
      }
    }
    const out: Mutation[] = [];
    for (const actId of ids) {
      if (this.live.has(actId)) this.removeSubtree(actId, SERVICE, out);
    }
    this.settleModal(out);
    return out;
  }

  endComponents(): Mutation[] {
    const out: Mutation[] = [];
    for (const rootId of [...this.roots]) {
      this.removeSubtree(rootId, SESSION_END, out);
    }
    this.settleModal(out);
    this.ended = true;
    return out;
  }

  private removeSubtree(actId: string, reason: string, out: Mutation[]): void {
    const record = this.live.get(actId)!;
    if (record.parentId === null) {
      this.roots.splice(this.roots.indexOf(actId), 1);
    } else {
      const siblings = this.live.get(record.parentId)!.children;
      siblings.splice(siblings.indexOf(actId), 1);
    }
    this.discard(actId, reason, out);
  }

  private discard(actId: string, reason: string, out: Mutation[]): void {
    const record = this.live.get(actId)!;
    this.live.delete(actId);
    if (!isGroup(record.act)) {
      for (const alt of record.act.alternatives) this.altOwner.delete(alt.id);
    }
    const queued = this.modalQueue.indexOf(actId);
    if (queued !== -1) this.modalQueue.splice(queued, 1);
    out.push({ op: "remove", actId, reason });
    for (const childId of record.children) this.discard(childId, reason, out);
  }

  private settleModal(out: Mutation[]): void {
    const holder = this.modalHolder;
    if (holder !== null && this.live.has(holder)) return;
    let nextHolder: string | null = null;
    while (this.modalQueue.length) {
      const candidate = this.modalQueue[0];
      if (this.live.has(candidate)) {
        nextHolder = candidate;
        this.modalQueue.shift();
        break;
      }
      this.modalQueue.shift();
    }
    if (holder !== null) out.push({ op: "unlock" });
    if (nextHolder !== null) out.push({ op: "lock", exceptId: nextHolder });
    this.modalHolder = nextHolder;
  }

  private requireOpen(): void {
    if (this.ended) throw new SessionEnded("session has ended");
  }
}
