import { Session } from "./state.js";
import type { Gender, SessionState } from "./state.js";

/* The DOM for all three steps is built once; state changes only toggle
   visibility and rewrite the dynamic text nodes.  Inputs are never
   re-rendered, so typed content survives every error path. */

const PICTURE_PROMPT =
  "Imagine a busy kitchen: a woman is drying dishes at an overflowing " +
  "sink while, behind her, two children reach into a cookie jar from a " +
  "tipping stool. Describe everything you see happening, in your own " +
  "words, for about one minute.";

function el<K extends keyof HTMLElementTagNameMap>(
  tag: K,
  className?: string,
  text?: string,
): HTMLElementTagNameMap[K] {
  const node = document.createElement(tag);
  if (className) node.className = className;
  if (text !== undefined) node.textContent = text;
  return node;
}

export function mountWizard(root: HTMLElement, session: Session): void {
  root.textContent = "";

  // -- intro ------------------------------------------------------------
  const intro = el("section", "step step-intro");
  intro.append(
    el("h1", undefined, "Speech screening"),
    el(
      "p",
      "intro-text",
      "This tool looks at how a short picture description is worded and " +
        "estimates a screening probability. It takes about a minute.",
    ),
    el("p", "intro-text", "You will see a scene to describe. Speak or type freely; there are no wrong answers."),
  );
  const beginBtn = el("button", "begin", "Begin");
  beginBtn.type = "button";
  intro.append(beginBtn);

  // -- describe ---------------------------------------------------------
  const describe = el("section", "step step-describe");
  describe.append(el("h2", undefined, "Describe the picture"));
  describe.append(el("p", "prompt", PICTURE_PROMPT));

  const timerBox = el("p", "timer");
  const timeUp = el("p", "time-up", "Time is up. Submit whenever you are ready.");
  timeUp.hidden = true;
  const restartBtn = el("button", "restart-timer", "Restart timer");
  restartBtn.type = "button";

  const description = el("textarea", "description");
  description.rows = 6;
  description.placeholder = "Type your description here";

  const ageInput = el("input", "age");
  ageInput.type = "number";
  ageInput.min = "0";
  ageInput.max = "130";
  ageInput.placeholder = "Age";

  const genderSelect = el("select", "gender");
  for (const [value, label] of [
    ["", "Gender"],
    ["female", "Female"],
    ["male", "Male"],
  ]) {
    const opt = el("option", undefined, label);
    opt.value = value;
    genderSelect.append(opt);
  }

  const durationInput = el("input", "duration");
  durationInput.type = "number";
  durationInput.min = "1";
  durationInput.value = String(session.timerSeconds);

  const errorBox = el("p", "error");
  errorBox.hidden = true;

  const submitBtn = el("button", "submit", "Submit description");
  submitBtn.type = "button";
  const backBtn = el("button", "back", "Back");
  backBtn.type = "button";

  describe.append(
    timerBox,
    timeUp,
    restartBtn,
    description,
    ageInput,
    genderSelect,
    el("label", "duration-label", "Seconds spent speaking"),
    durationInput,
    errorBox,
    submitBtn,
    backBtn,
  );

  // -- result -----------------------------------------------------------
  const result = el("section", "step step-result");
  result.append(el("h2", undefined, "Screening result"));
  const probability = el("p", "probability");
  const band = el("p", "band");
  const version = el("p", "model-version");
  const disclaimer = el("p", "disclaimer");
  const againBtn = el("button", "start-over", "Start over");
  againBtn.type = "button";
  result.append(probability, band, version, disclaimer, againBtn);

  root.append(intro, describe, result);

  // -- events -----------------------------------------------------------
  beginBtn.addEventListener("click", () => session.begin());
  backBtn.addEventListener("click", () => session.backToIntro());
  restartBtn.addEventListener("click", () => session.restartTimer());
  againBtn.addEventListener("click", () => session.reset());
  submitBtn.addEventListener("click", () => {
    void session.submitForm();
  });

  description.addEventListener("input", () =>
    session.updateForm({ descriptionText: description.value }),
  );
  ageInput.addEventListener("input", () =>
    session.updateForm({
      age: ageInput.value === "" ? null : Number(ageInput.value),
    }),
  );
  genderSelect.addEventListener("change", () =>
    session.updateForm({
      gender: genderSelect.value === "" ? null : (genderSelect.value as Gender),
    }),
  );
  durationInput.addEventListener("input", () =>
    session.updateForm({ speakingDuration: Number(durationInput.value) }),
  );

  // -- render -----------------------------------------------------------
  function render(state: SessionState): void {
    intro.hidden = state.step !== "intro";
    describe.hidden = state.step !== "describe";
    result.hidden = state.step !== "result";

    timerBox.textContent = `${session.remainingSeconds()}s remaining`;
    timeUp.hidden = !state.timer.expired;

    errorBox.hidden = state.error === null;
    errorBox.textContent = state.error ?? "";
    submitBtn.disabled = state.pending;
    submitBtn.textContent = state.pending ? "Scoring…" : "Submit description";

    if (state.step === "result" && state.lastResponse !== null) {
      const r = state.lastResponse;
      probability.textContent = `Probability: ${(r.probability * 100).toFixed(1)}%`;
      band.textContent = `Risk band: ${r.risk_band}`;
      version.textContent = `Model ${r.model_version}`;
      disclaimer.textContent = r.disclaimer;
    }

    if (state.step === "intro" && description.value !== state.form.descriptionText) {
      // only a full reset rewrites the inputs
      description.value = state.form.descriptionText;
      ageInput.value = state.form.age === null ? "" : String(state.form.age);
      genderSelect.value = state.form.gender ?? "";
      durationInput.value = String(state.form.speakingDuration);
    }
  }

  session.subscribe(render);
  render(session.getState());
}
