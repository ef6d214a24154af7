/**
 * Typed client for the hierax diagnosis service.
 *
 * Every probability that crosses this boundary stays a string. The
 * service renders decimals once, canonically, and the UI must display
 * them byte for byte; parsing happens only for bar geometry.
 */

export type Decimal = string;

export interface SessionView {
  session_id: string;
  model_id: string;
  evidence: Record<string, string>;
  expanded: string[];
  /** Levels whose cached messages are stale. Empty means clean. */
  dirty: string[];
  impossible: boolean;
}

export interface PortBinding {
  port: string;
  variable: string;
}

export interface ComponentNode {
  path: string;
  refined: boolean;
  mode_variable: string;
  mode_states: string[];
  output_variable: string;
  output_states: string[];
  inputs: PortBinding[];
  children: ComponentNode[];
}

export interface SystemInput {
  name: string;
  states: string[];
}

export interface VariableInfo {
  level: string;
  states: string[];
}

export interface ModelStructure {
  components: ComponentNode[];
  system_inputs: SystemInput[];
  variables: Record<string, VariableInfo>;
  /** Dot-path per hierarchy level; "" is the top. */
  levels: string[];
}

export interface ModelCreated {
  model_id: string;
  structure: ModelStructure;
}

export type Counters = Record<string, number>;

/** Shared tail of every session-scoped response. */
export interface SessionEnvelope {
  counters: Counters;
  view: SessionView;
}

export interface SessionCreated extends SessionEnvelope {
  session_id: string;
  model_id: string;
}

export interface PropagateResult extends SessionEnvelope {
  notice: string;
  impossible: boolean;
  likelihood: Decimal;
}

export interface RankingEntry {
  component: string;
  variable: string;
  states: string[];
  probabilities: Decimal[];
  ok_state: string;
  ok_probability: Decimal;
}

export interface PosteriorsResult extends SessionEnvelope {
  impossible: boolean;
  likelihood: Decimal;
  posteriors: Record<string, Decimal[]>;
  ranking: RankingEntry[];
}

export interface EvidenceChanges {
  assert?: Record<string, string>;
  retract?: string[];
}

export type Scope = "visible" | "global";

export interface Api {
  createModel(document: string): Promise<ModelCreated>;
  getStructure(modelId: string): Promise<ModelStructure>;
  createSession(modelId: string): Promise<SessionCreated>;
  updateEvidence(sessionId: string, changes: EvidenceChanges): Promise<SessionEnvelope>;
  propagate(sessionId: string, scope: Scope): Promise<PropagateResult>;
  expand(sessionId: string, component: string): Promise<SessionEnvelope>;
  collapse(sessionId: string, component: string): Promise<SessionEnvelope>;
  posteriors(sessionId: string): Promise<PosteriorsResult>;
  counters(sessionId: string): Promise<SessionEnvelope>;
}

/** Non-2xx response decoded from the service's error body. */
export class ApiError extends Error {
  constructor(
    readonly status: number,
    readonly code: string,
    message: string,
    /** Component to open first, set on hidden-variable conflicts. */
    readonly expand?: string,
    readonly view?: SessionView,
    readonly counters?: Counters,
  ) {
    super(message);
    this.name = "ApiError";
  }
}

/** The fetch itself failed: wrong URL, service down, network refused. */
export class TransportError extends Error {
  constructor(message: string) {
    super(message);
    this.name = "TransportError";
  }
}

interface ErrorBody {
  error?: string;
  message?: string;
  expand?: string;
  view?: SessionView;
  counters?: Counters;
}

export class HttpApi implements Api {
  constructor(private readonly baseUrl: string) {}

  private async request<T>(path: string, init?: RequestInit): Promise<T> {
    let resp: Response;
    try {
      resp = await fetch(this.baseUrl + path, init);
    } catch (err) {
      throw new TransportError(err instanceof Error ? err.message : String(err));
    }
    const text = await resp.text();
    if (!resp.ok) {
      let body: ErrorBody = {};
      try {
        body = JSON.parse(text) as ErrorBody;
      } catch {
        // non-JSON error page; fall through with the raw text
      }
      throw new ApiError(
        resp.status,
        body.error ?? "http-error",
        body.message ?? text,
        body.expand,
        body.view,
        body.counters,
      );
    }
    return JSON.parse(text) as T;
  }

  private post<T>(path: string, payload: string): Promise<T> {
    return this.request<T>(path, {
      method: "POST",
      headers: { "Content-Type": "application/json" },
      body: payload,
    });
  }

  createModel(document: string): Promise<ModelCreated> {
    return this.post("/models", document);
  }

  async getStructure(modelId: string): Promise<ModelStructure> {
    const wrapped = await this.request<{ structure: ModelStructure }>(
      `/models/${modelId}/structure`,
    );
    return wrapped.structure;
  }

  createSession(modelId: string): Promise<SessionCreated> {
    return this.post("/sessions", JSON.stringify({ model_id: modelId }));
  }

  updateEvidence(sessionId: string, changes: EvidenceChanges): Promise<SessionEnvelope> {
    return this.post(`/sessions/${sessionId}/evidence`, JSON.stringify(changes));
  }

  propagate(sessionId: string, scope: Scope): Promise<PropagateResult> {
    return this.post(`/sessions/${sessionId}/propagate`, JSON.stringify({ scope }));
  }

  expand(sessionId: string, component: string): Promise<SessionEnvelope> {
    return this.post(`/sessions/${sessionId}/expand`, JSON.stringify({ component }));
  }

  collapse(sessionId: string, component: string): Promise<SessionEnvelope> {
    return this.post(`/sessions/${sessionId}/collapse`, JSON.stringify({ component }));
  }

  posteriors(sessionId: string): Promise<PosteriorsResult> {
    return this.request(`/sessions/${sessionId}/posteriors`);
  }

  counters(sessionId: string): Promise<SessionEnvelope> {
    return this.request(`/sessions/${sessionId}/counters`);
  }
}
