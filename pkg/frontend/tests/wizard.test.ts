import { afterEach, beforeEach, describe, expect, it, vi } from "vitest";

import { Session } from "../src/state.js";
import { mountWizard } from "../src/wizard.js";
import type { ScreeningRequest, ScreeningResponse } from "../src/types.js";

const RESPONSE: ScreeningResponse = {
  probability: 0.5,
  risk_band: "Elevated",
  model_version: "20240401-7f3a",
  disclaimer: "Screening aid only; not a diagnosis.",
};

type Behavior = (request: ScreeningRequest) => Promise<ScreeningResponse>;

function setup(initial?: Behavior) {
  let behavior: Behavior = initial ?? (async () => RESPONSE);
  const submit = vi.fn((request: ScreeningRequest) => behavior(request));
  const session = new Session(submit);
  const root = document.createElement("div");
  document.body.append(root);
  mountWizard(root, session);

  const q = <T extends HTMLElement>(selector: string): T => {
    const node = root.querySelector<T>(selector);
    if (node === null) throw new Error(`missing ${selector}`);
    return node;
  };

  return {
    root,
    session,
    submit,
    setBehavior: (b: Behavior) => (behavior = b),
    intro: q<HTMLElement>(".step-intro"),
    describe: q<HTMLElement>(".step-describe"),
    result: q<HTMLElement>(".step-result"),
    beginBtn: q<HTMLButtonElement>("button.begin"),
    submitBtn: q<HTMLButtonElement>("button.submit"),
    backBtn: q<HTMLButtonElement>("button.back"),
    restartBtn: q<HTMLButtonElement>("button.restart-timer"),
    startOverBtn: q<HTMLButtonElement>("button.start-over"),
    descriptionBox: q<HTMLTextAreaElement>("textarea.description"),
    ageInput: q<HTMLInputElement>("input.age"),
    genderSelect: q<HTMLSelectElement>("select.gender"),
    timerBox: q<HTMLElement>("p.timer"),
    timeUp: q<HTMLElement>("p.time-up"),
    errorBox: q<HTMLElement>("p.error"),
  };
}

function type(node: HTMLTextAreaElement | HTMLInputElement, value: string): void {
  node.value = value;
  node.dispatchEvent(new Event("input", { bubbles: true }));
}

function choose(node: HTMLSelectElement, value: string): void {
  node.value = value;
  node.dispatchEvent(new Event("change", { bubbles: true }));
}

function fillForm(w: ReturnType<typeof setup>): void {
  type(w.descriptionBox, "a woman dries dishes while the sink overflows");
  type(w.ageInput, "71");
  choose(w.genderSelect, "female");
}

const flush = () => new Promise<void>((resolve) => setTimeout(resolve, 0));

afterEach(() => {
  document.body.textContent = "";
});

describe("wizard flow", () => {
  it("walks intro, describe, result in order", async () => {
    const w = setup();
    expect(w.intro.hidden).toBe(false);
    expect(w.describe.hidden).toBe(true);
    expect(w.result.hidden).toBe(true);

    w.beginBtn.click();
    expect(w.intro.hidden).toBe(true);
    expect(w.describe.hidden).toBe(false);

    fillForm(w);
    w.submitBtn.click();
    await flush();

    expect(w.describe.hidden).toBe(true);
    expect(w.result.hidden).toBe(false);
  });

  it("renders probability, band, and disclaimer from the response", async () => {
    const w = setup();
    w.beginBtn.click();
    fillForm(w);
    w.submitBtn.click();
    await flush();

    expect(w.result.querySelector("p.probability")?.textContent).toBe(
      "Probability: 50.0%",
    );
    expect(w.result.querySelector("p.band")?.textContent).toBe(
      "Risk band: Elevated",
    );
    expect(w.result.querySelector("p.disclaimer")?.textContent).toBe(
      RESPONSE.disclaimer,
    );
    expect(w.result.querySelector("p.model-version")?.textContent).toContain(
      RESPONSE.model_version,
    );
  });

  it("sends exactly the wire fields the service expects", async () => {
    const w = setup();
    w.beginBtn.click();
    fillForm(w);
    w.submitBtn.click();
    await flush();

    expect(w.submit).toHaveBeenCalledWith({
      description_text: "a woman dries dishes while the sink overflows",
      age: 71,
      gender: "female",
      speaking_duration: 60,
    });
  });

  it("blocks an empty description before any request is made", async () => {
    const w = setup();
    w.beginBtn.click();
    type(w.ageInput, "71");
    choose(w.genderSelect, "female");
    w.submitBtn.click();
    await flush();

    expect(w.submit).not.toHaveBeenCalled();
    expect(w.errorBox.hidden).toBe(false);
    expect(w.errorBox.textContent).toMatch(/describe the picture/i);
    expect(w.describe.hidden).toBe(false);
  });

  it("keeps the typed text and stays on describe when the service fails", async () => {
    const w = setup(async () => {
      throw new Error("scoring model is not loaded");
    });
    w.beginBtn.click();
    fillForm(w);
    w.submitBtn.click();
    await flush();

    expect(w.describe.hidden).toBe(false);
    expect(w.errorBox.hidden).toBe(false);
    expect(w.errorBox.textContent).toBe("scoring model is not loaded");
    expect(w.descriptionBox.value).toBe(
      "a woman dries dishes while the sink overflows",
    );
    expect(w.ageInput.value).toBe("71");

    // a retry after the service recovers goes straight through
    w.setBehavior(async () => RESPONSE);
    w.submitBtn.click();
    await flush();
    expect(w.result.hidden).toBe(false);
  });

  it("disables the submit button while a request is in flight", async () => {
    let release: (r: ScreeningResponse) => void = () => {};
    const w = setup(
      () => new Promise<ScreeningResponse>((resolve) => (release = resolve)),
    );
    w.beginBtn.click();
    fillForm(w);
    w.submitBtn.click();

    expect(w.submitBtn.disabled).toBe(true);
    expect(w.submitBtn.textContent).toBe("Scoring…");

    release(RESPONSE);
    await flush();
    expect(w.result.hidden).toBe(false);
    expect(w.submitBtn.disabled).toBe(false);
  });

  it("start over returns to a blank intro", async () => {
    const w = setup();
    w.beginBtn.click();
    fillForm(w);
    w.submitBtn.click();
    await flush();

    w.startOverBtn.click();
    expect(w.intro.hidden).toBe(false);
    expect(w.descriptionBox.value).toBe("");
    expect(w.ageInput.value).toBe("");
  });
});

describe("wizard timer", () => {
  beforeEach(() => vi.useFakeTimers());
  afterEach(() => vi.useRealTimers());

  it("counts down once describing starts", () => {
    const w = setup();
    w.beginBtn.click();
    expect(w.timerBox.textContent).toBe("60s remaining");
    vi.advanceTimersByTime(3000);
    expect(w.timerBox.textContent).toBe("57s remaining");
  });

  it("prompts at zero without leaving the step", () => {
    const w = setup();
    w.beginBtn.click();
    expect(w.timeUp.hidden).toBe(true);
    vi.advanceTimersByTime(60_000);
    expect(w.timerBox.textContent).toBe("0s remaining");
    expect(w.timeUp.hidden).toBe(false);
    expect(w.describe.hidden).toBe(false);
    expect(w.submitBtn.disabled).toBe(false);
  });

  it("restart brings back the full minute", () => {
    const w = setup();
    w.beginBtn.click();
    vi.advanceTimersByTime(60_000);
    w.restartBtn.click();
    expect(w.timerBox.textContent).toBe("60s remaining");
    expect(w.timeUp.hidden).toBe(true);
    vi.advanceTimersByTime(1000);
    expect(w.timerBox.textContent).toBe("59s remaining");
  });

  it("leaving the step stops the countdown", () => {
    const w = setup();
    w.beginBtn.click();
    vi.advanceTimersByTime(10_000);
    w.backBtn.click();
    vi.advanceTimersByTime(10_000);
    expect(w.session.getState().timer.elapsed).toBe(0);
    expect(w.session.getState().timer.running).toBe(false);
  });
});
