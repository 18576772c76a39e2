/**
 * UI state machine for the three-window flow:
 * garments -> personalize (upload + draw) -> result (view + erase).
 *
 * Transitions are pure functions returning a new state; illegal view jumps
 * (personalize without a session, result without a generated image) are
 * rejected so the invariant "no result view without a stored result" holds
 * by construction.
 */

export type View = "garments" | "personalize" | "result";
export type BrushMode = "draw" | "erase-stroke";

export interface UiState {
  view: View;
  selectedGarment: string | null;
  session: string | null;
  brush: { radius: number; mode: BrushMode };
  pending: boolean;
  hasResult: boolean;
}

export const DEFAULT_BRUSH_RADIUS = 16;

export function initialState(): UiState {
  return {
    view: "garments",
    selectedGarment: null,
    session: null,
    brush: { radius: DEFAULT_BRUSH_RADIUS, mode: "draw" },
    pending: false,
    hasResult: false,
  };
}

export function selectGarment(state: UiState, garmentId: string): UiState {
  return { ...state, selectedGarment: garmentId, view: "personalize" };
}

export function sessionCreated(state: UiState, sessionId: string): UiState {
  return { ...state, session: sessionId, hasResult: false };
}

export function showView(state: UiState, view: View): UiState {
  if (view === "personalize" && state.session === null && state.selectedGarment === null) {
    return state;
  }
  if (view === "result" && !state.hasResult) {
    return state;
  }
  return { ...state, view };
}

export function beginGenerate(state: UiState): UiState {
  if (state.pending || state.session === null || state.selectedGarment === null) {
    return state;
  }
  return { ...state, pending: true };
}

export function generateSucceeded(state: UiState): UiState {
  return { ...state, pending: false, hasResult: true, view: "result" };
}

export function generateFailed(state: UiState): UiState {
  return { ...state, pending: false };
}

export function setBrush(state: UiState, radius: number, mode: BrushMode): UiState {
  return { ...state, brush: { radius: Math.max(1, radius), mode } };
}

export function canGenerate(state: UiState): boolean {
  return !state.pending && state.session !== null && state.selectedGarment !== null;
}
