/** REST client for the participant-facing endpoints. */

export interface StepDescriptor {
  index: number;
  type: "text" | "condition" | "questionnaire" | "pause";
  element_id: string;
  title?: string;
  body?: string;
  name?: string;
  prototype_url?: string;
  config?: Record<string, unknown>;
  survey_url?: string;
  resolved_url?: string;
  mode?: "timed" | "manual";
  duration?: number | null;
  info?: { title: string; body: string };
}

export interface PauseGate {
  open: boolean;
  remaining_seconds: number | null;
}

export interface ProcedureView {
  participant_uuid: string;
  study: { id: string; title: string; description: string; consent: string };
  progress: number;
  state: "registered" | "in_progress" | "paused" | "done";
  task_done: boolean;
  step_count: number;
  procedure: { id: string; variant_index: number; steps: StepDescriptor[] };
  current_step: StepDescriptor | null;
  pause: PauseGate | null;
}

export interface AdvanceResult {
  complete: boolean;
  progress: number;
  step: StepDescriptor | null;
}

export interface ApiError {
  status: number;
  code: string;
  message: string;
}

export class ParticipantApi {
  constructor(
    private readonly baseUrl: string,
    private readonly participantUuid: string,
    private readonly loggerKey: string,
    private readonly fetchFn: typeof fetch = globalThis.fetch.bind(globalThis),
  ) {}

  private headers(): Record<string, string> {
    return { "Logger-Api-Key": this.loggerKey };
  }

  private async check<T>(response: Response): Promise<T> {
    if (response.ok) return (await response.json()) as T;
    let code = "error";
    let message = response.statusText;
    try {
      const body = (await response.json()) as { code?: string; message?: string };
      code = body.code ?? code;
      message = body.message ?? message;
    } catch {
      // non-JSON error body
    }
    const error: ApiError = { status: response.status, code, message };
    throw error;
  }

  async procedure(): Promise<ProcedureView> {
    const response = await this.fetchFn(
      `${this.baseUrl}/api/v1/participants/${this.participantUuid}/procedure`,
      { headers: this.headers() },
    );
    return this.check<ProcedureView>(response);
  }

  async advance(): Promise<AdvanceResult> {
    const response = await this.fetchFn(
      `${this.baseUrl}/api/v1/participants/${this.participantUuid}/advance`,
      { method: "POST", headers: this.headers() },
    );
    return this.check<AdvanceResult>(response);
  }

  navigatorUrl(stepIndex: number): string {
    return `${this.baseUrl}/api/v1/participants/${this.participantUuid}/navigator?step=${stepIndex}`;
  }

  get key(): string {
    return this.loggerKey;
  }
}

export async function registerForStudy(
  baseUrl: string,
  studyId: string,
  inviteToken?: string,
  fetchFn: typeof fetch = globalThis.fetch.bind(globalThis),
): Promise<{ participant_uuid: string; logger_key: string }> {
  const response = await fetchFn(`${baseUrl}/api/v1/studies/${studyId}/participants`, {
    method: "POST",
    headers: { "Content-Type": "application/json" },
    body: inviteToken ? JSON.stringify({ invite_token: inviteToken }) : "{}",
  });
  if (response.status !== 201) {
    const body = (await response.json().catch(() => ({}))) as { code?: string; message?: string };
    throw { status: response.status, code: body.code ?? "error", message: body.message ?? "" } as ApiError;
  }
  return (await response.json()) as { participant_uuid: string; logger_key: string };
}
