// DOM wiring: a configure form that posts a run, then a live view fed by the
// event stream. All state lives in the view model; the DOM is re-rendered
// from it after every event batch.

import {
  ApiError, ControlCommand, POLICY_NAMES, PolicyName, RunEvent,
  createRun, eventStreamUrl, getRun, sendControl,
} from "./api.js";
import { drawChart } from "./chart.js";
import {
  RunViewModel, applyEvent, applyPolicyAck, controlAvailability,
  initialViewModel, reconnectFrom,
} from "./viewmodel.js";

const app = document.getElementById("app") as HTMLDivElement;

let vm: RunViewModel | null = null;
let source: EventSource | null = null;
let retryTimer: number | null = null;

function route(): void {
  const match = window.location.hash.match(/^#run\/(\w+)$/);
  if (source) {
    source.close();
    source = null;
  }
  if (match) {
    openRunView(match[1]);
  } else {
    renderConfigForm();
  }
}

window.addEventListener("hashchange", route);
route();

// -- configure form ----------------------------------------------------------

function renderConfigForm(errors: Record<string, string> = {}): void {
  app.innerHTML = `
    <h1>caisim</h1>
    <form id="config-form" class="config">
      ${numberField("seed", 42, errors)}
      ${numberField("m", 5, errors)}
      ${numberField("steady_len", 30, errors)}
      ${numberField("cycles", 1, errors)}
      ${numberField("pace_hz", 20, errors)}
      <label>policy
        <select name="policy">
          ${POLICY_NAMES.map((p) => `<option value="${p}">${p}</option>`).join("")}
        </select>
      </label>
      <label>disruptor
        <select name="disruptor">
          <option value="darkness">darkness</option>
          <option value="histogram_equalization">histogram equalization</option>
        </select>
      </label>
      ${numberField("darkness_factor", 0.2, errors, "0.01")}
      <label class="checkbox">
        <input type="checkbox" name="auto_schedule" checked/> scheduled disruption
      </label>
      <button type="submit">start run</button>
    </form>
    <div id="form-error" class="error"></div>`;
  const form = document.getElementById("config-form") as HTMLFormElement;
  form.addEventListener("submit", async (event) => {
    event.preventDefault();
    const data = new FormData(form);
    const kind = String(data.get("disruptor"));
    const disruptor: Record<string, unknown> = { kind };
    if (kind === "darkness") {
      disruptor.factor = Number(data.get("darkness_factor"));
    }
    const config = {
      seed: Number(data.get("seed")),
      m: Number(data.get("m")),
      steady_len: Number(data.get("steady_len")),
      cycles: Number(data.get("cycles")),
      pace_hz: Number(data.get("pace_hz")),
      policy: String(data.get("policy")),
      auto_schedule: data.get("auto_schedule") === "on",
      disruptor,
    };
    try {
      const runId = await createRun(config);
      window.location.hash = `#run/${runId}`;
    } catch (err) {
      if (err instanceof ApiError && err.fieldErrors.length > 0) {
        const map: Record<string, string> = {};
        for (const fe of err.fieldErrors) map[fe.field] = fe.message;
        renderConfigForm(map);
      } else {
        (document.getElementById("form-error") as HTMLDivElement).textContent =
          String(err instanceof Error ? err.message : err);
      }
    }
  });
}

function numberField(name: string, value: number,
                     errors: Record<string, string>, step = "1"): string {
  const error = errors[name]
    ? `<span class="field-error">${errors[name]}</span>` : "";
  return `<label>${name}
    <input type="number" name="${name}" value="${value}" step="${step}"/>
    ${error}</label>`;
}

// -- live view -----------------------------------------------------------------

async function openRunView(runId: string): Promise<void> {
  let policy: PolicyName = "internal";
  try {
    const handle = await getRun(runId);
    policy = handle.policy;
  } catch (err) {
    app.innerHTML = `<p class="error">run ${runId} not found</p>
      <p><a href="#">back</a></p>`;
    return;
  }
  vm = initialViewModel(runId, policy);
  renderRunView();
  subscribe(runId);
}

function subscribe(runId: string): void {
  if (!vm) return;
  source = new EventSource(eventStreamUrl(runId, reconnectFrom(vm)));
  hideBanner();
  let pending: RunEvent[] = [];
  let flushScheduled = false;
  source.onmessage = (message) => {
    pending.push(JSON.parse(message.data) as RunEvent);
    if (!flushScheduled) {
      flushScheduled = true;
      requestAnimationFrame(() => {
        if (vm) {
          for (const event of pending) vm = applyEvent(vm, event);
          pending = [];
          renderRunView();
        }
        flushScheduled = false;
      });
    }
  };
  source.onerror = () => {
    source?.close();
    source = null;
    if (vm && (vm.status === "finished" || vm.status === "failed")) {
      return; // stream ended with the run
    }
    showBanner("connection lost, retrying…");
    retryTimer = window.setTimeout(() => subscribe(runId), 1000);
  };
}

function showBanner(text: string): void {
  const banner = document.getElementById("banner");
  if (banner) {
    banner.textContent = text;
    banner.classList.add("visible");
  }
}

function hideBanner(): void {
  document.getElementById("banner")?.classList.remove("visible");
}

function toast(text: string): void {
  const el = document.getElementById("toast");
  if (!el) return;
  el.textContent = text;
  el.classList.add("visible");
  window.setTimeout(() => el.classList.remove("visible"), 3000);
}

async function control(command: ControlCommand): Promise<void> {
  if (!vm) return;
  try {
    const ack = await sendControl(vm.runId, command);
    if (command.command === "switch_policy") {
      vm = applyPolicyAck(vm, command.policy, ack);
    }
    renderRunView();
  } catch (err) {
    if (err instanceof ApiError && err.status === 409) {
      toast(`rejected: ${err.message}`);
    } else {
      toast(String(err instanceof Error ? err.message : err));
    }
  }
}

function renderRunView(): void {
  if (!vm) return;
  if (!document.getElementById("run-view")) {
    app.innerHTML = `
      <div id="run-view">
        <div class="header">
          <a href="#">&larr; new run</a>
          <h1>run <code>${vm.runId}</code></h1>
          <span id="status-badge" class="badge"></span>
          <span id="state-badge" class="badge"></span>
        </div>
        <div id="banner" class="banner"></div>
        <canvas id="chart" width="860" height="300"></canvas>
        <div class="controls">
          <select id="policy-select">
            ${POLICY_NAMES.map((p) => `<option value="${p}">${p}</option>`).join("")}
          </select>
          <button id="switch-policy">switch policy</button>
          <button id="disrupt">inject disruption</button>
          <button id="fix">fix disruption</button>
          <button id="pause">pause</button>
          <button id="resume">resume</button>
        </div>
        <div class="panels">
          <div>
            <h2>action log</h2>
            <table id="log"><thead><tr>
              <th>iter</th><th>state</th><th>mode</th><th>action</th>
              <th>policy</th><th>selected</th><th>p&#770;</th>
              <th>predicted</th><th>true</th>
            </tr></thead><tbody></tbody></table>
          </div>
          <div>
            <h2>metrics per cycle</h2>
            <table id="metrics"><thead><tr>
              <th>cycle</th><th>duration</th><th>fluctuation</th>
              <th>CO&#8322; mean</th><th>human dep.</th>
            </tr></thead><tbody></tbody></table>
          </div>
        </div>
        <div id="toast" class="toast"></div>
      </div>`;
    wireControls();
  }
  updateRunView();
}

function wireControls(): void {
  const policySelect =
    document.getElementById("policy-select") as HTMLSelectElement;
  if (vm) policySelect.value = vm.selectedPolicy;
  on("switch-policy", () => control({
    command: "switch_policy",
    policy: policySelect.value as PolicyName,
  }));
  on("disrupt", () => control({ command: "inject_disruption" }));
  on("fix", () => control({ command: "fix_disruption" }));
  on("pause", () => control({ command: "pause" }));
  on("resume", () => control({ command: "resume" }));
}

function on(id: string, handler: () => void): void {
  document.getElementById(id)?.addEventListener("click", handler);
}

function updateRunView(): void {
  if (!vm) return;
  const status = document.getElementById("status-badge");
  if (status) {
    status.textContent = vm.status;
    status.className = `badge status-${vm.status}`;
  }
  const state = document.getElementById("state-badge");
  if (state) {
    state.textContent = `${vm.currentState} (cycle ${vm.currentCycle})`;
    state.className = `badge state-${vm.currentState}`;
  }
  const canvas = document.getElementById("chart") as HTMLCanvasElement | null;
  if (canvas) drawChart(canvas, vm);

  const availability = controlAvailability(vm);
  setEnabled("disrupt", availability.disrupt);
  setEnabled("fix", availability.fix);
  setEnabled("pause", availability.pause);
  setEnabled("resume", availability.resume);
  setEnabled("switch-policy", availability.switchPolicy);

  const logBody = document.querySelector("#log tbody");
  if (logBody) {
    logBody.innerHTML = vm.log.map((entry) => `<tr>
      <td>${entry.iteration}</td><td>${entry.stateName}</td>
      <td>${entry.mode}</td><td>${entry.actionKind}</td>
      <td>${entry.policyActive}</td><td>${entry.selectedPolicy}</td>
      <td>${entry.pHat.toFixed(3)}</td>
      <td>${entry.predictedClass}</td><td>${entry.trueClass}</td>
    </tr>`).join("");
  }
  const metricsBody = document.querySelector("#metrics tbody");
  if (metricsBody) {
    metricsBody.innerHTML = vm.metrics.map((report) => `<tr>
      <td>${report.cycle}</td>
      <td>${report.duration_ratio.toFixed(3)}</td>
      <td>${report.fluctuation_ratio.toFixed(3)}</td>
      <td>${report.co2_mean.toExponential(2)}</td>
      <td>${report.human_dependency.toFixed(3)}</td>
    </tr>`).join("");
  }
}

function setEnabled(id: string, enabled: boolean): void {
  const el = document.getElementById(id) as HTMLButtonElement | null;
  if (el) el.disabled = !enabled;
}

export { retryTimer };
