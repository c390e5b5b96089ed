/** The participant study app: renders the current step and walks the
 * procedure one gated step at a time. All navigation state is fetched
 * from the server, so reload/back/refresh always land on the current
 * step. */

import { ParticipantApi, type ApiError } from "./api";
import { applyProceed, fromProcedureView, tickPause, type StepViewModel } from "./gate";
import { render, type FrameParams } from "./render";
import { NavigatorClient } from "./sse";

export interface StudyAppConfig {
  root: HTMLElement;
  baseUrl: string;
  participantUuid: string;
  loggerKey: string;
  fetchFn?: typeof fetch;
  /** Backoff base for SSE reconnects (ms). */
  backoffBaseMs?: number;
  /** Poll interval for manual-pause release checks (ms). */
  pausePollMs?: number;
  /** Countdown tick for timed pauses (ms). */
  tickMs?: number;
}

export class StudyApp {
  private readonly api: ParticipantApi;
  private readonly params: FrameParams;
  private readonly fetchFn: typeof fetch;
  private model: StepViewModel | null = null;
  private navigator: NavigatorClient | null = null;
  private pauseTimer: ReturnType<typeof setInterval> | null = null;
  private destroyed = false;

  constructor(private readonly config: StudyAppConfig) {
    this.fetchFn = config.fetchFn ?? globalThis.fetch.bind(globalThis);
    this.api = new ParticipantApi(config.baseUrl, config.participantUuid, config.loggerKey, this.fetchFn);
    this.params = {
      baseUrl: config.baseUrl,
      participantUuid: config.participantUuid,
      loggerKey: config.loggerKey,
    };
  }

  currentModel(): StepViewModel | null {
    return this.model;
  }

  async start(): Promise<void> {
    await this.refresh();
  }

  destroy(): void {
    this.destroyed = true;
    this.teardownStepMachinery();
    this.config.root.textContent = "";
  }

  private teardownStepMachinery(): void {
    this.navigator?.close();
    this.navigator = null;
    if (this.pauseTimer !== null) clearInterval(this.pauseTimer);
    this.pauseTimer = null;
  }

  private async refresh(): Promise<void> {
    const view = await this.api.procedure();
    if (this.destroyed) return;
    this.teardownStepMachinery();
    this.model = fromProcedureView(view);
    this.renderCurrent();
    this.armStepMachinery();
  }

  private renderCurrent(): void {
    if (this.model === null) return;
    render(this.config.root, this.model, this.params, { onNext: () => void this.next() });
  }

  private armStepMachinery(): void {
    const model = this.model;
    if (model === null || model.complete || model.step === null) return;
    const step = model.step;

    if ((step.type === "condition" || step.type === "questionnaire") && model.gate === "locked") {
      this.navigator = new NavigatorClient(this.api.navigatorUrl(step.index), {
        headers: { "Logger-Api-Key": this.api.key },
        fetchFn: this.fetchFn,
        backoffBaseMs: this.config.backoffBaseMs ?? 1000,
        onEvent: (event) => {
          if (event.name === "proceed" && this.model !== null) {
            this.model = applyProceed(this.model);
            this.renderCurrent();
          }
        },
      });
      this.navigator.start();
    }

    if (step.type === "pause" && model.gate === "locked") {
      if (step.mode === "timed") {
        const tickMs = this.config.tickMs ?? 1000;
        this.pauseTimer = setInterval(() => {
          if (this.model === null) return;
          this.model = tickPause(this.model, tickMs / 1000);
          this.renderCurrent();
          if (this.model.gate === "unlocked" && this.pauseTimer !== null) {
            clearInterval(this.pauseTimer);
            this.pauseTimer = null;
          }
        }, tickMs);
      } else {
        const pollMs = this.config.pausePollMs ?? 5000;
        this.pauseTimer = setInterval(() => {
          void this.pollPause();
        }, pollMs);
      }
    }
  }

  private async pollPause(): Promise<void> {
    try {
      const view = await this.api.procedure();
      if (this.destroyed || this.model === null) return;
      const fresh = fromProcedureView(view);
      if (fresh.gate === "unlocked" || fresh.progress !== this.model.progress) {
        this.teardownStepMachinery();
        this.model = fresh;
        this.renderCurrent();
      }
    } catch {
      // transient failure: keep polling
    }
  }

  private async next(): Promise<void> {
    if (this.model === null || this.model.gate === "locked" || this.model.complete) return;
    try {
      await this.api.advance();
    } catch (error) {
      const apiError = error as ApiError;
      if (apiError.status === 409) {
        // server disagrees (e.g. timed pause not quite open): re-sync
        await this.refresh();
        return;
      }
      throw error;
    }
    await this.refresh();
  }
}
