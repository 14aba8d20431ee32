// Thin client over the session service HTTP API plus the event stream.

import type { GoalsResponse, SessionEvent, SessionState, SuggestionsResponse } from "./types.js";

export class ApiClient {
  constructor(private baseUrl: string = "") {}

  private async call<T>(method: string, path: string, body?: unknown): Promise<T> {
    const response = await fetch(this.baseUrl + path, {
      method,
      headers: body === undefined ? undefined : { "Content-Type": "application/json" },
      body: body === undefined ? undefined : JSON.stringify(body),
    });
    if (!response.ok) {
      const detail = await response.text();
      throw new Error(`${method} ${path} -> ${response.status}: ${detail}`);
    }
    return (await response.json()) as T;
  }

  createSession(profile: Record<string, unknown>, condition: string, seed: number): Promise<{ session_id: string }> {
    return this.call("POST", "/sessions", { profile, condition, seed });
  }

  getState(sessionId: string): Promise<SessionState> {
    return this.call("GET", `/sessions/${sessionId}/state`);
  }

  getEvents(sessionId: string): Promise<{ events: SessionEvent[] }> {
    return this.call("GET", `/sessions/${sessionId}/events`);
  }

  getSuggestions(sessionId: string, step: string): Promise<SuggestionsResponse> {
    return this.call("GET", `/sessions/${sessionId}/suggestions?step=${encodeURIComponent(step)}`);
  }

  getGoals(sessionId: string): Promise<GoalsResponse> {
    return this.call("GET", `/sessions/${sessionId}/goals`);
  }

  postClientMessage(sessionId: string, text: string): Promise<{ delivered_at: string }> {
    return this.call("POST", `/sessions/${sessionId}/client-message`, { text });
  }

  postProviderMessage(
    sessionId: string,
    text: string,
    suggestionId?: string,
    goalIds?: string[],
  ): Promise<{ rt_seconds: number | null; completed_step: string; selected_step: string }> {
    return this.call("POST", `/sessions/${sessionId}/provider-message`, {
      text,
      suggestion_id: suggestionId ?? null,
      goal_ids: goalIds ?? null,
    });
  }

  streamUrl(sessionId: string): string {
    const base = this.baseUrl || (typeof location !== "undefined" ? location.origin : "");
    return base.replace(/^http/, "ws") + `/sessions/${sessionId}/stream`;
  }
}

export interface StreamHandle {
  close(): void;
}

/** Open the event stream; calls onEvent for the replayed log and every new
 * event, and onClose when the socket drops (the caller decides on retry). */
export function openStream(
  url: string,
  onEvent: (event: SessionEvent) => void,
  onClose?: () => void,
): StreamHandle {
  const socket = new WebSocket(url);
  socket.onmessage = (frame) => {
    try {
      const parsed = JSON.parse(String(frame.data));
      if (parsed.event) onEvent(parsed.event as SessionEvent);
    } catch {
      console.warn("dropped malformed frame", frame.data);
    }
  };
  if (onClose) socket.onclose = onClose;
  return { close: () => socket.close() };
}
