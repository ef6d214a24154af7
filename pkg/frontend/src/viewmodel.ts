/**
 * Session state for the explorer, kept free of DOM concerns.
 *
 * The store never computes a probability. It forwards user actions to
 * the service, remembers the latest responses, and lets the renderer
 * draw them. User actions are serialized through a promise chain so at
 * most one mutation is in flight per session.
 */

import {
  Api,
  ApiError,
  Counters,
  ModelStructure,
  PosteriorsResult,
  SessionView,
  TransportError,
} from "./api.js";

export interface AppState {
  phase: "empty" | "ready";
  busy: boolean;
  /** Transport failure or unexpected service error, rendered as a banner. */
  fault: string | null;
  /** Rejected evidence input (unknown variable, state outside its domain). */
  formError: string | null;
  /** Component the service asked us to open before the evidence lands. */
  expandHint: string | null;
  structure: ModelStructure | null;
  view: SessionView | null;
  counters: Counters;
  /** Latest posterior payload; null until the first propagation. */
  report: PosteriorsResult | null;
}

export type Listener = (state: AppState) => void;

function initialState(): AppState {
  return {
    phase: "empty",
    busy: false,
    fault: null,
    formError: null,
    expandHint: null,
    structure: null,
    view: null,
    counters: {},
    report: null,
  };
}

/**
 * Variables the session may currently observe: everything living on the
 * top level or inside an expanded refinement.
 */
export function visibleVariables(structure: ModelStructure, view: SessionView): string[] {
  const open = new Set<string>([""]);
  for (const level of view.expanded) open.add(level);
  return Object.keys(structure.variables)
    .filter((name) => {
      const info = structure.variables[name];
      return info !== undefined && open.has(info.level);
    })
    .sort();
}

export class DiagnosisSession {
  private state = initialState();
  private listeners: Listener[] = [];
  private chain: Promise<void> = Promise.resolve();
  private sessionId: string | null = null;

  constructor(private readonly api: Api) {}

  getState(): AppState {
    return this.state;
  }

  subscribe(listener: Listener): () => void {
    this.listeners.push(listener);
    return () => {
      this.listeners = this.listeners.filter((l) => l !== listener);
    };
  }

  private patch(partial: Partial<AppState>): void {
    this.state = { ...this.state, ...partial };
    for (const listener of this.listeners) listener(this.state);
  }

  /** Queue a mutation; rejections are absorbed into the fault banners. */
  private enqueue(job: () => Promise<void>): Promise<void> {
    const run = this.chain.then(async () => {
      this.patch({ busy: true, fault: null, formError: null });
      try {
        await job();
      } catch (err) {
        this.absorb(err);
      } finally {
        this.patch({ busy: false });
      }
    });
    this.chain = run;
    return run;
  }

  private absorb(err: unknown): void {
    if (err instanceof ApiError) {
      if (err.view) this.patch({ view: err.view });
      if (err.counters) this.patch({ counters: err.counters });
      if (err.code === "hidden-variable" && err.expand) {
        this.patch({ expandHint: err.expand, formError: err.message });
      } else if (err.code === "unknown-variable") {
        this.patch({ formError: err.message });
      } else {
        this.patch({ fault: `${err.code}: ${err.message}` });
      }
    } else if (err instanceof TransportError) {
      this.patch({ fault: "service unreachable: " + err.message });
    } else {
      this.patch({ fault: String(err) });
    }
  }

  private need(): string {
    if (this.sessionId === null) throw new Error("no session loaded");
    return this.sessionId;
  }

  /** Propagate the visible scope and pull the fresh posterior block. */
  private async refreshReport(): Promise<void> {
    const sid = this.need();
    await this.api.propagate(sid, "visible");
    const report = await this.api.posteriors(sid);
    this.patch({ report, view: report.view, counters: report.counters });
  }

  /** Create a model from raw document text and open a session on it. */
  load(documentText: string): Promise<void> {
    return this.enqueue(async () => {
      const model = await this.api.createModel(documentText);
      const session = await this.api.createSession(model.model_id);
      this.sessionId = session.session_id;
      this.patch({
        phase: "ready",
        structure: model.structure,
        view: session.view,
        counters: session.counters,
        report: null,
        expandHint: null,
      });
      await this.refreshReport();
    });
  }

  /** Reattach to an existing session, e.g. after a page reload. */
  resume(sessionId: string): Promise<void> {
    return this.enqueue(async () => {
      const envelope = await this.api.counters(sessionId);
      const structure = await this.api.getStructure(envelope.view.model_id);
      this.sessionId = sessionId;
      this.patch({
        phase: "ready",
        structure,
        view: envelope.view,
        counters: envelope.counters,
        report: null,
        expandHint: null,
      });
      if (envelope.view.dirty.length === 0 || envelope.view.impossible) {
        const report = await this.api.posteriors(sessionId);
        this.patch({ report, view: report.view, counters: report.counters });
      }
    });
  }

  submitEvidence(variable: string, state: string): Promise<void> {
    return this.enqueue(async () => {
      await this.api.updateEvidence(this.need(), { assert: { [variable]: state } });
      this.patch({ expandHint: null });
      await this.refreshReport();
    });
  }

  retract(variable: string): Promise<void> {
    return this.enqueue(async () => {
      await this.api.updateEvidence(this.need(), { retract: [variable] });
      await this.refreshReport();
    });
  }

  clearEvidence(): Promise<void> {
    return this.enqueue(async () => {
      const names = Object.keys(this.state.view?.evidence ?? {});
      if (names.length > 0) {
        await this.api.updateEvidence(this.need(), { retract: names });
      }
      await this.refreshReport();
    });
  }

  open(component: string): Promise<void> {
    return this.enqueue(async () => {
      await this.api.expand(this.need(), component);
      this.patch({ expandHint: null });
      await this.refreshReport();
    });
  }

  close(component: string): Promise<void> {
    return this.enqueue(async () => {
      await this.api.collapse(this.need(), component);
      await this.refreshReport();
    });
  }
}
