// Payload shapes mirrored from the session service API.

export interface SessionEvent {
  timestamp: string;
  actor: "client" | "provider" | "system";
  kind: "init" | "message" | "suggestion_list" | "goal_options" | "selection" | "step_complete";
  payload: Record<string, unknown>;
}

export interface StepInfo {
  key: string;
  label: string;
  ordinal: number;
  empathic: boolean;
}

export interface SessionState {
  session_id: string;
  condition: string;
  selected_step: string;
  completed: string[];
  slots: Record<string, string | null>;
  finishable: boolean;
  closed: boolean;
  steps: (StepInfo & { completed: boolean; selected: boolean })[];
}

export interface TherapeuticSuggestion {
  id: string;
  action: string;
  text: string;
}

export interface EmpathicSuggestion {
  id: string;
  text: string;
  rank: number;
  score: number;
}

export interface BlockedSuggestion {
  id: string;
  action: string;
  template: string;
  missing: string[];
}

export interface SuggestionsResponse {
  step: string;
  therapeutic: TherapeuticSuggestion[];
  empathic: EmpathicSuggestion[];
  blocked: BlockedSuggestion[];
}

export interface GoalOption {
  id: string;
  text: string;
}

export interface GoalsResponse {
  mode: string;
  options: GoalOption[];
}

export interface TranscriptEntry {
  actor: "client" | "provider";
  text: string;
  at: string;
  suggestionId?: string;
  goalIds?: string[];
}
