/** HTTP + WebSocket session client, usable from the browser and node. */

export interface InputAck {
  u_applied: [number, number, number];
  clamped: boolean;
  tick: number;
}

export interface SessionSnapshot {
  session: string;
  tick: number;
  t: number;
  running: boolean;
  speed_scale: number;
  filter_on: boolean;
  q_ref: number[];
  q_exc: number[];
}

export interface SessionOptions {
  dt?: number;
  pace?: number;
  alpha_gain?: number;
  u_max?: number;
}

type FetchLike = typeof fetch;

export class SessionClient {
  constructor(
    readonly base: string,
    private readonly fetchImpl: FetchLike = fetch,
  ) {}

  private async post<T>(path: string, body?: unknown): Promise<T> {
    const res = await this.fetchImpl(`${this.base}${path}`, {
      method: "POST",
      headers: { "content-type": "application/json" },
      body: body === undefined ? undefined : JSON.stringify(body),
    });
    if (!res.ok) {
      throw new Error(`${path} -> ${res.status}: ${await res.text()}`);
    }
    return (await res.json()) as T;
  }

  private async get<T>(path: string): Promise<T> {
    const res = await this.fetchImpl(`${this.base}${path}`);
    if (!res.ok) {
      throw new Error(`${path} -> ${res.status}: ${await res.text()}`);
    }
    return (await res.json()) as T;
  }

  models(): Promise<{ models: { id: string }[] }> {
    return this.get("/models");
  }

  create(model: string, opts: SessionOptions = {}): Promise<SessionSnapshot> {
    return this.post("/sessions", { model, ...opts });
  }

  snapshot(id: string): Promise<SessionSnapshot> {
    return this.get(`/sessions/${id}`);
  }

  start(id: string): Promise<unknown> {
    return this.post(`/sessions/${id}/start`);
  }

  pause(id: string): Promise<unknown> {
    return this.post(`/sessions/${id}/pause`);
  }

  reset(id: string): Promise<unknown> {
    return this.post(`/sessions/${id}/reset`);
  }

  sendInput(
    id: string,
    u: [number, number, number],
    speed_scale?: number,
    filter_on?: boolean,
  ): Promise<InputAck> {
    const body: Record<string, unknown> = { u };
    if (speed_scale !== undefined) body.speed_scale = speed_scale;
    if (filter_on !== undefined) body.filter_on = filter_on;
    return this.post(`/sessions/${id}/input`, body);
  }

  streamUrl(id: string): string {
    return `${this.base.replace(/^http/, "ws")}/sessions/${id}/stream`;
  }
}
