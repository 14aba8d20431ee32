// Pure view-state layer. Every ordering, fill, and blocking decision arrives
// from the server; these reducers only project events and responses into
// something renderable, so replaying a session's event stream rebuilds the
// exact same view.

import type {
  EmpathicSuggestion,
  SessionEvent,
  StepInfo,
  SuggestionsResponse,
  TranscriptEntry,
} from "./types.js";

export interface ComposeState {
  draft: string;
  attachedSuggestionId: string | null;
  selectedGoalIds: string[];
}

export interface ConsoleViewState {
  steps: StepInfo[];
  completed: Set<string>;
  selectedStep: string;
  transcript: TranscriptEntry[];
  empathic: EmpathicSuggestion[];
  suggestions: SuggestionsResponse | null;
  goalOptions: { id: string; text: string }[] | null;
  linked: { kind: string; node: string }[];
  compose: ComposeState;
  pendingRtAnchorMs: number | null;
  clientName: string;
  closed: boolean;
}

export function initView(steps: StepInfo[]): ConsoleViewState {
  const ordered = [...steps].sort((a, b) => a.ordinal - b.ordinal);
  return {
    steps: ordered,
    completed: new Set(),
    selectedStep: ordered.length ? ordered[0].key : "",
    transcript: [],
    empathic: [],
    suggestions: null,
    goalOptions: null,
    linked: [],
    compose: { draft: "", attachedSuggestionId: null, selectedGoalIds: [] },
    pendingRtAnchorMs: null,
    clientName: "",
    closed: false,
  };
}

function firstUncompleted(state: ConsoleViewState): string {
  for (const step of state.steps) {
    if (!state.completed.has(step.key)) return step.key;
  }
  return state.steps.length ? state.steps[state.steps.length - 1].key : "";
}

/** Apply one `{event}` frame from the stream. `nowMs` anchors client-side RT. */
export function reduceEvent(
  state: ConsoleViewState,
  event: SessionEvent,
  nowMs?: number,
): ConsoleViewState {
  switch (event.kind) {
    case "init": {
      const profile = event.payload.profile as { name?: string } | undefined;
      return { ...state, clientName: profile?.name ?? "" };
    }
    case "message": {
      const text = String(event.payload.text ?? "");
      if (event.actor === "client") {
        return {
          ...state,
          transcript: [...state.transcript, { actor: "client", text, at: event.timestamp }],
          pendingRtAnchorMs: nowMs ?? null,
        };
      }
      const entry: TranscriptEntry = {
        actor: "provider",
        text,
        at: event.timestamp,
        suggestionId: (event.payload.suggestion_id as string) ?? undefined,
        goalIds: (event.payload.goal_ids as string[]) ?? undefined,
      };
      return { ...state, transcript: [...state.transcript, entry], pendingRtAnchorMs: null };
    }
    case "suggestion_list": {
      // the panel shows texts; items carry ids and ranks in server order
      const items = (event.payload.items as { response: string; rank: number; score: number }[]) ?? [];
      const empathic = items.map((item) => ({
        id: item.response,
        text: "",
        rank: item.rank,
        score: item.score,
      }));
      return { ...state, empathic };
    }
    case "goal_options": {
      const options = (event.payload.options as string[]) ?? [];
      return { ...state, goalOptions: options.map((id) => ({ id, text: id })) };
    }
    case "selection": {
      const kind = event.payload.link as string | undefined;
      if (!kind) return state;
      const node = String(event.payload.node);
      const linked = [...state.linked.filter((l) => !(l.kind === kind && l.node === node)), { kind, node }];
      return { ...state, linked };
    }
    case "step_complete": {
      const completed = new Set(state.completed);
      completed.add(String(event.payload.step));
      const next = { ...state, completed };
      return { ...next, selectedStep: firstUncompleted(next), closed: isAllComplete(next) };
    }
    default:
      return state;
  }
}

export function isAllComplete(state: ConsoleViewState): boolean {
  return state.steps.length > 0 && state.steps.every((s) => state.completed.has(s.key));
}

export function replayView(steps: StepInfo[], events: SessionEvent[]): ConsoleViewState {
  let state = initView(steps);
  for (const event of events) {
    state = reduceEvent(state, event);
  }
  return state;
}

/** Step tracker rows: ordinal order, check marks from completion state. */
export function stepTrackerRows(state: ConsoleViewState) {
  return state.steps.map((step) => ({
    key: step.key,
    label: step.label,
    empathic: step.empathic,
    completed: state.completed.has(step.key),
    selected: state.selectedStep === step.key,
  }));
}

export function selectStep(state: ConsoleViewState, key: string): ConsoleViewState {
  if (!state.steps.some((s) => s.key === key)) return state;
  return { ...state, selectedStep: key };
}

/** Server response for the selected step; list order is preserved verbatim. */
export function applySuggestions(
  state: ConsoleViewState,
  response: SuggestionsResponse,
): ConsoleViewState {
  const next = { ...state, suggestions: response };
  if (response.empathic.length > 0) {
    next.empathic = response.empathic;
  }
  return next;
}

export function applyGoals(state: ConsoleViewState, options: { id: string; text: string }[]): ConsoleViewState {
  return { ...state, goalOptions: options };
}

/** Selecting a suggestion copies its text into the compose box for editing.
 * Only empathic picks attach a suggestion id; templates contribute text only. */
export function insertSuggestion(
  state: ConsoleViewState,
  text: string,
  suggestionId: string | null,
): ConsoleViewState {
  return {
    ...state,
    compose: { ...state.compose, draft: text, attachedSuggestionId: suggestionId },
  };
}

/** Edits keep the attached suggestion id so the server logs both. */
export function editDraft(state: ConsoleViewState, text: string): ConsoleViewState {
  return { ...state, compose: { ...state.compose, draft: text } };
}

export function toggleGoal(state: ConsoleViewState, goalId: string): ConsoleViewState {
  const selected = state.compose.selectedGoalIds.includes(goalId)
    ? state.compose.selectedGoalIds.filter((g) => g !== goalId)
    : [...state.compose.selectedGoalIds, goalId];
  return { ...state, compose: { ...state.compose, selectedGoalIds: selected } };
}

export function canSend(state: ConsoleViewState): boolean {
  return state.compose.draft.trim().length > 0 && !state.closed;
}

export interface OutgoingMessage {
  text: string;
  suggestion_id?: string;
  goal_ids?: string[];
  clientRtSeconds: number | null;
}

/** Snapshot the compose box for sending; the caller posts it and, on ack,
 * applies clearCompose. */
export function buildOutgoing(state: ConsoleViewState, nowMs: number): OutgoingMessage {
  const rt =
    state.pendingRtAnchorMs !== null ? Math.round(nowMs - state.pendingRtAnchorMs) / 1000 : null;
  const message: OutgoingMessage = { text: state.compose.draft, clientRtSeconds: rt };
  if (state.compose.attachedSuggestionId) {
    message.suggestion_id = state.compose.attachedSuggestionId;
  }
  if (state.compose.selectedGoalIds.length > 0) {
    message.goal_ids = [...state.compose.selectedGoalIds];
  }
  return message;
}

export function clearCompose(state: ConsoleViewState): ConsoleViewState {
  return {
    ...state,
    compose: { draft: "", attachedSuggestionId: null, selectedGoalIds: [] },
    goalOptions: null,
  };
}

/** Equality over the renderable projection, for reload-reconstruction checks. */
export function viewFingerprint(state: ConsoleViewState): string {
  return JSON.stringify({
    steps: stepTrackerRows(state),
    transcript: state.transcript,
    empathic: state.empathic.map((e) => e.id),
    linked: state.linked,
    clientName: state.clientName,
    closed: state.closed,
  });
}
