// DOM wiring for the provider console: step tracker on the left, transcript
// and compose box in the middle, suggestion panel on the right. All state
// changes flow through the pure reducers in state.ts.

import { ApiClient, openStream } from "./api.js";
import {
  applyGoals,
  applySuggestions,
  buildOutgoing,
  canSend,
  clearCompose,
  ConsoleViewState,
  editDraft,
  initView,
  insertSuggestion,
  reduceEvent,
  selectStep,
  stepTrackerRows,
  toggleGoal,
} from "./state.js";
import type { SessionEvent, SessionState } from "./types.js";

const params = new URLSearchParams(location.search);
const api = new ApiClient("");
let sessionId = params.get("session") ?? "";
const adminMode = params.get("admin") === "1";
const demoMode = params.get("demo") === "1";

let view: ConsoleViewState;
let serverState: SessionState | null = null;
let lastClientRt: number | null = null;
let lastServerRt: number | null = null;

function el<K extends keyof HTMLElementTagNameMap>(
  tag: K,
  attrs: Record<string, string> = {},
  ...children: (Node | string)[]
): HTMLElementTagNameMap[K] {
  const node = document.createElement(tag);
  for (const [key, value] of Object.entries(attrs)) {
    if (key === "class") node.className = value;
    else node.setAttribute(key, value);
  }
  node.append(...children);
  return node;
}

function byId(id: string): HTMLElement {
  const node = document.getElementById(id);
  if (!node) throw new Error(`missing element #${id}`);
  return node;
}

async function boot(): Promise<void> {
  if (!sessionId) {
    const created = await api.createSession(
      { client_id: "c_demo", name: "Irina", linked_symptoms: [], linked_goals: [], linked_solutions: [] },
      "intervention",
      7,
    );
    sessionId = created.session_id;
    history.replaceState(null, "", `?session=${sessionId}${demoMode ? "&demo=1" : ""}`);
  }
  serverState = await api.getState(sessionId);
  view = initView(serverState.steps);
  view = selectStep(view, serverState.selected_step);

  openStream(api.streamUrl(sessionId), onEvent, () => setStatus("stream closed, reload to reconnect"));
  await refreshSuggestions();
  render();
}

function onEvent(event: SessionEvent): void {
  view = reduceEvent(view, event, performance.now());
  if (event.kind === "suggestion_list" || event.kind === "step_complete") {
    // panel contents are always re-requested for the selected step
    void refreshSuggestions();
  }
  if (event.kind === "message" && event.actor === "provider") {
    const rt = event.payload["rt_seconds"];
    lastServerRt = typeof rt === "number" ? rt : null;
  }
  render();
}

async function refreshSuggestions(): Promise<void> {
  if (!sessionId || !view) return;
  try {
    const response = await api.getSuggestions(sessionId, view.selectedStep);
    view = applySuggestions(view, response);
  } catch (error) {
    setStatus(String(error));
  }
  render();
}

async function onStepClick(key: string): Promise<void> {
  view = selectStep(view, key);
  await refreshSuggestions();
}

async function onShowGoals(): Promise<void> {
  try {
    const goals = await api.getGoals(sessionId);
    view = applyGoals(view, goals.options);
  } catch (error) {
    setStatus(`goals unavailable yet: ${String(error)}`);
  }
  render();
}

async function onSend(): Promise<void> {
  if (!canSend(view)) return;
  const outgoing = buildOutgoing(view, performance.now());
  lastClientRt = outgoing.clientRtSeconds;
  try {
    const ack = await api.postProviderMessage(
      sessionId,
      outgoing.text,
      outgoing.suggestion_id,
      outgoing.goal_ids,
    );
    lastServerRt = ack.rt_seconds;
    view = clearCompose(view);
    view = selectStep(view, ack.selected_step);
    await refreshSuggestions();
  } catch (error) {
    setStatus(`send failed, draft kept: ${String(error)}`);
  }
  render();
}

async function onDemoClientSend(text: string): Promise<void> {
  if (!text.trim()) return;
  await api.postClientMessage(sessionId, text);
}

function setStatus(text: string): void {
  byId("status").textContent = text;
}

function render(): void {
  renderTracker();
  renderTranscript();
  renderSuggestions();
  renderGoals();
  renderCompose();
  renderHeader();
}

function renderHeader(): void {
  const condition = adminMode && serverState ? ` [${serverState.condition}]` : "";
  byId("title").textContent = `Session with ${view.clientName || "client"}${condition}`;
  const rtBits: string[] = [];
  if (lastClientRt !== null) rtBits.push(`client RT ${lastClientRt.toFixed(3)}s`);
  if (lastServerRt !== null) rtBits.push(`server RT ${lastServerRt.toFixed(3)}s`);
  byId("rt").textContent = rtBits.join("  ·  ");
}

function renderTracker(): void {
  const root = byId("tracker");
  root.replaceChildren();
  for (const row of stepTrackerRows(view)) {
    const button = el(
      "button",
      { class: `step${row.selected ? " selected" : ""}${row.completed ? " completed" : ""}` },
      el("span", { class: "check" }, row.completed ? "✓" : "○"),
      el("span", {}, row.label + (row.empathic ? " ♥" : "")),
    );
    button.addEventListener("click", () => void onStepClick(row.key));
    root.append(el("li", {}, button));
  }
}

function renderTranscript(): void {
  const root = byId("transcript");
  root.replaceChildren();
  for (const entry of view.transcript) {
    const meta = entry.suggestionId ? ` (from ${entry.suggestionId})` : "";
    root.append(
      el(
        "div",
        { class: `bubble ${entry.actor}` },
        el("div", { class: "text" }, entry.text),
        el("div", { class: "meta" }, `${entry.actor}${meta} · ${entry.at}`),
      ),
    );
  }
  root.scrollTop = root.scrollHeight;
}

function renderSuggestions(): void {
  const root = byId("suggestions");
  root.replaceChildren();
  const suggestions = view.suggestions;
  if (!suggestions) return;

  if (suggestions.empathic.length > 0) {
    root.append(el("h3", {}, `Empathic responses (${suggestions.empathic.length})`));
    for (const item of suggestions.empathic) {
      const button = el("button", { class: "suggestion empathic" }, `${item.rank}. ${item.text}`);
      button.addEventListener("click", () => {
        view = insertSuggestion(view, item.text, item.id);
        render();
      });
      root.append(button);
    }
  }
  root.append(el("h3", {}, "Therapeutic responses"));
  for (const item of suggestions.therapeutic) {
    const button = el("button", { class: "suggestion" }, item.text);
    button.addEventListener("click", () => {
      view = insertSuggestion(view, item.text, null);
      render();
    });
    root.append(button);
  }
  for (const item of suggestions.blocked) {
    root.append(
      el(
        "button",
        { class: "suggestion blocked", disabled: "disabled", title: `missing: ${item.missing.join(", ")}` },
        el("span", {}, item.template),
        el("span", { class: "missing" }, ` missing: ${item.missing.join(", ")}`),
      ),
    );
  }
  if (view.selectedStep === "goal_setting") {
    const button = el("button", { class: "goals-btn" }, "Show goal options");
    button.addEventListener("click", () => void onShowGoals());
    root.append(button);
  }
}

function renderGoals(): void {
  const root = byId("goals");
  root.replaceChildren();
  if (!view.goalOptions) return;
  root.append(el("h3", {}, "Goal options"));
  for (const option of view.goalOptions) {
    const selected = view.compose.selectedGoalIds.includes(option.id);
    const button = el("button", { class: `goal${selected ? " picked" : ""}` }, option.text);
    button.addEventListener("click", () => {
      view = toggleGoal(view, option.id);
      render();
    });
    root.append(button);
  }
}

function renderCompose(): void {
  const draft = byId("draft") as HTMLTextAreaElement;
  if (draft.value !== view.compose.draft) draft.value = view.compose.draft;
  const attached = view.compose.attachedSuggestionId;
  byId("attach").textContent = attached
    ? `suggestion ${attached} attached; edits keep it`
    : view.compose.selectedGoalIds.length
      ? `goals: ${view.compose.selectedGoalIds.join(", ")}`
      : "";
  (byId("send") as HTMLButtonElement).disabled = !canSend(view);
}

export function start(): void {
  byId("send").addEventListener("click", () => void onSend());
  const draft = byId("draft") as HTMLTextAreaElement;
  draft.addEventListener("input", () => {
    view = editDraft(view, draft.value);
    (byId("send") as HTMLButtonElement).disabled = !canSend(view);
  });
  const demoRow = byId("demo-row");
  if (demoMode) {
    demoRow.style.display = "flex";
    const demoInput = byId("demo-text") as HTMLInputElement;
    byId("demo-send").addEventListener("click", () => {
      void onDemoClientSend(demoInput.value);
      demoInput.value = "";
    });
  }
  boot().catch((error) => setStatus(`failed to start: ${String(error)}`));
}

start();
