import type { Gender, ScreeningRequest, ScreeningResponse } from "./types.js";

export type Step = "intro" | "describe" | "result";

export interface FormFields {
  descriptionText: string;
  age: number | null;
  gender: Gender | null;
  speakingDuration: number;
}

export interface TimerState {
  running: boolean;
  elapsed: number;
  expired: boolean;
}

export interface SessionState {
  step: Step;
  form: FormFields;
  lastResponse: ScreeningResponse | null;
  error: string | null;
  pending: boolean;
  timer: TimerState;
}

export type SubmitFn = (request: ScreeningRequest) => Promise<ScreeningResponse>;

const TIMER_SECONDS = 60;

function freshForm(): FormFields {
  return {
    descriptionText: "",
    age: null,
    gender: null,
    speakingDuration: TIMER_SECONDS,
  };
}

function freshState(): SessionState {
  return {
    step: "intro",
    form: freshForm(),
    lastResponse: null,
    error: null,
    pending: false,
    timer: { running: false, elapsed: 0, expired: false },
  };
}

/** First user-facing reason the form is not submittable, or null. */
export function validateForm(form: FormFields): string | null {
  if (form.descriptionText.trim() === "") {
    return "Please describe the picture before submitting.";
  }
  if (form.age === null || !Number.isFinite(form.age)) {
    return "Please enter your age.";
  }
  if (form.age < 0 || form.age > 130) {
    return "Age must be between 0 and 130.";
  }
  if (form.gender === null) {
    return "Please select a gender.";
  }
  if (!(form.speakingDuration > 0)) {
    return "Speaking time must be a positive number of seconds.";
  }
  return null;
}

/**
 * The whole wizard as a store: three steps, the form, one optional
 * response, and a countdown that only runs while describing.
 *
 * Invariants kept here rather than in the view: the result step is only
 * entered with a response in hand, a failed submission never touches the
 * form, and at most one request is in flight.
 */
export class Session {
  private state: SessionState = freshState();
  private listeners = new Set<(s: SessionState) => void>();
  private ticker: ReturnType<typeof setInterval> | null = null;

  constructor(
    private readonly submit: SubmitFn,
    readonly timerSeconds: number = TIMER_SECONDS,
  ) {}

  getState(): SessionState {
    return this.state;
  }

  subscribe(fn: (s: SessionState) => void): () => void {
    this.listeners.add(fn);
    return () => this.listeners.delete(fn);
  }

  private set(patch: Partial<SessionState>): void {
    this.state = { ...this.state, ...patch };
    for (const fn of this.listeners) fn(this.state);
  }

  remainingSeconds(): number {
    return Math.max(0, this.timerSeconds - this.state.timer.elapsed);
  }

  /** Intro -> Describe; the countdown starts here and only here. */
  begin(): void {
    if (this.state.step !== "intro") return;
    this.set({ step: "describe", error: null });
    this.startTimer();
  }

  /** Describe -> Intro; leaving the step cancels the countdown. */
  backToIntro(): void {
    if (this.state.step !== "describe" || this.state.pending) return;
    this.stopTimer();
    this.set({ step: "intro", timer: { running: false, elapsed: 0, expired: false } });
  }

  updateForm(patch: Partial<FormFields>): void {
    this.set({ form: { ...this.state.form, ...patch }, error: null });
  }

  restartTimer(): void {
    if (this.state.step !== "describe") return;
    this.stopTimer();
    this.set({ timer: { running: false, elapsed: 0, expired: false } });
    this.startTimer();
  }

  private startTimer(): void {
    this.set({ timer: { running: true, elapsed: 0, expired: false } });
    this.ticker = setInterval(() => this.tick(), 1000);
  }

  private stopTimer(): void {
    if (this.ticker !== null) {
      clearInterval(this.ticker);
      this.ticker = null;
    }
  }

  private tick(): void {
    const elapsed = this.state.timer.elapsed + 1;
    if (elapsed >= this.timerSeconds) {
      // the prompt appears, but submission stays voluntary
      this.stopTimer();
      this.set({ timer: { running: false, elapsed: this.timerSeconds, expired: true } });
    } else {
      this.set({ timer: { ...this.state.timer, elapsed } });
    }
  }

  async submitForm(): Promise<void> {
    if (this.state.step !== "describe" || this.state.pending) return;
    const problem = validateForm(this.state.form);
    if (problem !== null) {
      this.set({ error: problem });
      return;
    }
    const f = this.state.form;
    const request: ScreeningRequest = {
      description_text: f.descriptionText,
      age: f.age as number,
      gender: f.gender as Gender,
      speaking_duration: f.speakingDuration,
    };
    this.set({ pending: true, error: null });
    try {
      const response = await this.submit(request);
      this.stopTimer();
      this.set({ pending: false, lastResponse: response, step: "result" });
    } catch (err) {
      // the typed description and demographics stay exactly as entered
      const message = err instanceof Error ? err.message : String(err);
      this.set({ pending: false, error: message });
    }
  }

  /** Result -> Intro with a clean slate. */
  reset(): void {
    if (this.state.step !== "result") return;
    this.stopTimer();
    this.state = freshState();
    for (const fn of this.listeners) fn(this.state);
  }
}
