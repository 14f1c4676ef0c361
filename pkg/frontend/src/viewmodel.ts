// Pure view state derived from the event stream and control acknowledgments.
// No metric or state inference happens here: the server's events are folded
// verbatim, which is what makes a reload-and-replay reconstruct the exact
// same view.

import type {
  IterationEvent, MetricsReport, PolicyName, RunEvent, RunStatus,
} from "./api.js";

export interface AcrPoint {
  iteration: number;
  acr: number;
  mode: "normal" | "disrupted";
}

export interface StateBand {
  state: string;
  cycle: number;
  start: number;
  end: number | null; // null while the band is still open
}

export interface LogEntry {
  iteration: number;
  actionKind: string;
  policyActive: PolicyName;
  selectedPolicy: PolicyName;
  pHat: number;
  predictedClass: string;
  trueClass: string;
  mode: string;
  stateName: string;
}

export interface RunViewModel {
  runId: string;
  status: RunStatus;
  points: AcrPoint[];
  bands: StateBand[];
  threshold: number | null;
  currentState: string;
  currentCycle: number;
  log: LogEntry[];
  metrics: MetricsReport[];
  selectedPolicy: PolicyName;
  pendingPolicy: { policy: PolicyName; fromIteration: number } | null;
  disruptionActive: boolean;
  lastIteration: number;
  error: string | null;
}

export const LOG_LIMIT = 12;

export function initialViewModel(runId: string,
                                 policy: PolicyName = "internal"): RunViewModel {
  return {
    runId,
    status: "configured",
    points: [],
    bands: [],
    threshold: null,
    currentState: "unstarted",
    currentCycle: 0,
    log: [],
    metrics: [],
    selectedPolicy: policy,
    pendingPolicy: null,
    disruptionActive: false,
    lastIteration: -1,
    error: null,
  };
}

/** Iteration to resume the event stream from after a drop. */
export function reconnectFrom(vm: RunViewModel): number {
  return vm.lastIteration + 1;
}

export function applyEvent(vm: RunViewModel, event: RunEvent): RunViewModel {
  switch (event.type) {
    case "iteration":
      return applyIteration(vm, event);
    case "state_change": {
      const bands = vm.bands.slice();
      const open = bands[bands.length - 1];
      if (open && open.end === null) {
        bands[bands.length - 1] = { ...open, end: event.iteration };
      }
      bands.push({ state: event.state, cycle: event.cycle,
                   start: event.iteration, end: null });
      return {
        ...vm,
        bands,
        currentState: event.state,
        currentCycle: event.cycle,
        threshold: event.acr_threshold ?? vm.threshold,
      };
    }
    case "metrics":
      return { ...vm, metrics: event.reports };
    case "status":
      return { ...vm, status: event.status, error: event.error ?? vm.error };
    default:
      return vm;
  }
}

function applyIteration(vm: RunViewModel, event: IterationEvent): RunViewModel {
  if (event.iteration <= vm.lastIteration) {
    return vm; // replayed duplicate after a reconnect
  }
  const selected =
    vm.pendingPolicy && event.iteration >= vm.pendingPolicy.fromIteration
      ? vm.pendingPolicy.policy
      : vm.selectedPolicy;
  const entry: LogEntry = {
    iteration: event.iteration,
    actionKind: event.action_kind,
    policyActive: event.policy_active,
    selectedPolicy: selected,
    pHat: event.p_hat,
    predictedClass: event.predicted_class,
    trueClass: event.true_class,
    mode: event.mode,
    stateName: event.state_name,
  };
  const promote =
    vm.pendingPolicy && event.iteration >= vm.pendingPolicy.fromIteration;
  return {
    ...vm,
    points: [...vm.points, { iteration: event.iteration, acr: event.acr,
                             mode: event.mode }],
    log: [entry, ...vm.log].slice(0, LOG_LIMIT),
    disruptionActive: event.mode === "disrupted",
    lastIteration: event.iteration,
    selectedPolicy: promote ? vm.pendingPolicy!.policy : vm.selectedPolicy,
    pendingPolicy: promote ? null : vm.pendingPolicy,
    currentState: event.state_name,
    currentCycle: event.cycle,
  };
}

/** Record a control acknowledgment; the switch shows up in the log from the
 * acknowledged iteration onward. */
export function applyPolicyAck(vm: RunViewModel, policy: PolicyName,
                               ackIteration: number): RunViewModel {
  return { ...vm, pendingPolicy: { policy, fromIteration: ackIteration } };
}

/** Bands with the trailing open band closed at the trace end, for rendering
 * and for comparison against an exported segments.csv. */
export function closedBands(vm: RunViewModel): StateBand[] {
  return vm.bands.map((band, i) =>
    i === vm.bands.length - 1 && band.end === null
      ? { ...band, end: vm.lastIteration + 1 }
      : band);
}

export interface ControlAvailability {
  disrupt: boolean;
  fix: boolean;
  pause: boolean;
  resume: boolean;
  switchPolicy: boolean;
}

export function controlAvailability(vm: RunViewModel): ControlAvailability {
  const live = vm.status === "running" || vm.status === "paused";
  return {
    disrupt: live && !vm.disruptionActive,
    fix: live && vm.disruptionActive,
    pause: vm.status === "running",
    resume: vm.status === "paused",
    switchPolicy: live,
  };
}
