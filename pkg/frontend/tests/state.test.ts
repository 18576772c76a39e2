import { describe, expect, it } from "vitest";

import * as s from "../src/state.js";

describe("ui state machine", () => {
  it("starts on the garments view with nothing selected", () => {
    const st = s.initialState();
    expect(st.view).toBe("garments");
    expect(st.selectedGarment).toBeNull();
    expect(st.session).toBeNull();
    expect(st.hasResult).toBe(false);
    expect(st.brush.radius).toBe(s.DEFAULT_BRUSH_RADIUS);
  });

  it("selecting a garment advances to personalize", () => {
    const st = s.selectGarment(s.initialState(), "fx-stripes");
    expect(st.view).toBe("personalize");
    expect(st.selectedGarment).toBe("fx-stripes");
  });

  it("never reaches the result view without a stored result", () => {
    let st = s.selectGarment(s.initialState(), "g");
    st = s.sessionCreated(st, "abc");
    expect(s.showView(st, "result").view).not.toBe("result");
    st = s.beginGenerate(st);
    expect(s.showView(st, "result").view).not.toBe("result");
    st = s.generateSucceeded(st);
    expect(st.view).toBe("result");
    expect(s.showView(st, "result").view).toBe("result");
  });

  it("blocks personalize until a garment or session exists", () => {
    const st = s.initialState();
    expect(s.showView(st, "personalize").view).toBe("garments");
  });

  it("only one generate can be in flight", () => {
    let st = s.sessionCreated(s.selectGarment(s.initialState(), "g"), "sid");
    expect(s.canGenerate(st)).toBe(true);
    st = s.beginGenerate(st);
    expect(st.pending).toBe(true);
    expect(s.canGenerate(st)).toBe(false);
    expect(s.beginGenerate(st)).toEqual(st); // no-op while pending
    const failed = s.generateFailed(st);
    expect(failed.pending).toBe(false);
    expect(failed.hasResult).toBe(false);
  });

  it("a new session clears any previous result", () => {
    let st = s.sessionCreated(s.selectGarment(s.initialState(), "g"), "one");
    st = s.generateSucceeded(s.beginGenerate(st));
    expect(st.hasResult).toBe(true);
    st = s.sessionCreated(st, "two");
    expect(st.hasResult).toBe(false);
  });

  it("brush radius never drops below one pixel", () => {
    const st = s.setBrush(s.initialState(), -5, "erase-stroke");
    expect(st.brush.radius).toBe(1);
    expect(st.brush.mode).toBe("erase-stroke");
  });
});
