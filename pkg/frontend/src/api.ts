// Typed contracts for the caisim HTTP API. The dashboard talks only to these
// routes; every number it renders comes from the server.

export type RunStatus = "configured" | "running" | "paused" | "finished" | "failed";
export type PolicyName = "internal" | "one-agent" | "two-agent" | "rl-agent";

export const POLICY_NAMES: PolicyName[] = [
  "internal", "one-agent", "two-agent", "rl-agent",
];

export interface IterationEvent {
  type: "iteration";
  seq: number;
  iteration: number;
  mode: "normal" | "disrupted";
  policy_active: PolicyName;
  action_kind: "autonomous" | "human";
  t: number;
  c: number;
  h: number;
  p_hat: number;
  predicted_class: string;
  true_class: string;
  acr: number;
  state_name: string;
  cycle: number;
}

export interface StateChangeEvent {
  type: "state_change";
  seq: number;
  iteration: number;
  state: string;
  cycle: number;
  acr_threshold: number | null;
}

export interface MetricsReport {
  policy: PolicyName;
  seed: number;
  cycle: number;
  duration_ratio: number;
  fluctuation_ratio: number;
  co2_mean: number;
  human_dependency: number;
}

export interface MetricsEvent {
  type: "metrics";
  seq: number;
  iteration: number;
  reports: MetricsReport[];
}

export interface StatusEvent {
  type: "status";
  seq: number;
  iteration: number;
  status: RunStatus;
  error?: string;
}

export type RunEvent =
  | IterationEvent
  | StateChangeEvent
  | MetricsEvent
  | StatusEvent;

export interface RunHandle {
  run_id: string;
  status: RunStatus;
  cursor: number;
  policy: PolicyName;
  disrupted: boolean;
  error: string | null;
}

export interface FieldError {
  field: string;
  message: string;
}

export type ControlCommand =
  | { command: "switch_policy"; policy: PolicyName }
  | { command: "inject_disruption"; disruptor?: { kind: string; factor?: number } }
  | { command: "fix_disruption" }
  | { command: "pause" }
  | { command: "resume" };

export class ApiError extends Error {
  constructor(public status: number, message: string,
              public fieldErrors: FieldError[] = []) {
    super(message);
  }
}

const BASE = "";

async function parseError(response: Response): Promise<ApiError> {
  let detail = response.statusText;
  let fields: FieldError[] = [];
  try {
    const body = await response.json();
    if (Array.isArray(body.errors)) {
      fields = body.errors;
      detail = fields.map((e) => `${e.field}: ${e.message}`).join("; ");
    } else if (body.detail) {
      detail = String(body.detail);
    }
  } catch {
    // non-JSON body, keep the status text
  }
  return new ApiError(response.status, detail, fields);
}

export async function createRun(config: Record<string, unknown>): Promise<string> {
  const response = await fetch(`${BASE}/runs`, {
    method: "POST",
    headers: { "Content-Type": "application/json" },
    body: JSON.stringify(config),
  });
  if (!response.ok) throw await parseError(response);
  const body = await response.json();
  return body.run_id as string;
}

export async function getRun(runId: string): Promise<RunHandle> {
  const response = await fetch(`${BASE}/runs/${runId}`);
  if (!response.ok) throw await parseError(response);
  return (await response.json()) as RunHandle;
}

export async function sendControl(runId: string, command: ControlCommand):
    Promise<number> {
  const response = await fetch(`${BASE}/runs/${runId}/control`, {
    method: "POST",
    headers: { "Content-Type": "application/json" },
    body: JSON.stringify(command),
  });
  if (!response.ok) throw await parseError(response);
  const body = await response.json();
  return body.acknowledged_iteration as number;
}

export function eventStreamUrl(runId: string, fromIteration: number): string {
  return `${BASE}/runs/${runId}/events?from=${fromIteration}`;
}
