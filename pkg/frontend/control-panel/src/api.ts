/** Admin REST client. Every panel action is an API call; the panel
 * never mutates state client-side only. */

export interface PanelError {
  status: number;
  code: string;
  message: string;
}

export class AdminApi {
  private token: string | null = null;

  constructor(
    private readonly baseUrl: string,
    private readonly fetchFn: typeof fetch = globalThis.fetch.bind(globalThis),
  ) {}

  private headers(json = true): Record<string, string> {
    const headers: Record<string, string> = {};
    if (json) headers["Content-Type"] = "application/json";
    if (this.token !== null) headers["Authorization"] = `Bearer ${this.token}`;
    return headers;
  }

  private async check<T>(response: Response): Promise<T> {
    if (response.ok || response.status === 201) return (await response.json()) as T;
    let code = "error";
    let message = response.statusText;
    try {
      const body = (await response.json()) as { code?: string; message?: string };
      code = body.code ?? code;
      message = body.message ?? message;
    } catch {
      // not JSON
    }
    throw { status: response.status, code, message } as PanelError;
  }

  async login(email: string, password: string): Promise<void> {
    const response = await this.fetchFn(`${this.baseUrl}/api/v1/auth/login`, {
      method: "POST",
      headers: { "Content-Type": "application/json" },
      body: JSON.stringify({ email, password }),
    });
    const body = await this.check<{ token: string }>(response);
    this.token = body.token;
  }

  async listStudies(): Promise<Array<Record<string, any>>> {
    const response = await this.fetchFn(`${this.baseUrl}/api/v1/studies`, { headers: this.headers(false) });
    const body = await this.check<{ studies: Array<Record<string, any>> }>(response);
    return body.studies;
  }

  async createStudy(fields: Record<string, unknown>, config: Record<string, unknown>): Promise<Record<string, any>> {
    const response = await this.fetchFn(`${this.baseUrl}/api/v1/studies`, {
      method: "POST",
      headers: this.headers(),
      body: JSON.stringify({ ...fields, procedure_config: config }),
    });
    return this.check(response);
  }

  async studyDetail(studyId: string): Promise<Record<string, any>> {
    const response = await this.fetchFn(`${this.baseUrl}/api/v1/studies/${studyId}`, {
      headers: this.headers(false),
    });
    return this.check(response);
  }

  async patchStudy(studyId: string, patch: Record<string, unknown>): Promise<Record<string, any>> {
    const response = await this.fetchFn(`${this.baseUrl}/api/v1/studies/${studyId}`, {
      method: "PATCH",
      headers: this.headers(),
      body: JSON.stringify(patch),
    });
    return this.check(response);
  }

  async activateStudy(studyId: string): Promise<Record<string, any>> {
    return this.patchStudy(studyId, { state: "active" });
  }

  async duplicateStudy(studyId: string): Promise<Record<string, any>> {
    const response = await this.fetchFn(`${this.baseUrl}/api/v1/studies/${studyId}/duplicate`, {
      method: "POST",
      headers: this.headers(false),
    });
    return this.check(response);
  }

  /** Raw document bytes for the download button. */
  async exportStudy(studyId: string, includeLogs = false): Promise<string> {
    const response = await this.fetchFn(
      `${this.baseUrl}/api/v1/studies/${studyId}/export?include_logs=${includeLogs}`,
      { headers: this.headers(false) },
    );
    if (!response.ok) return this.check(response);
    return response.text();
  }

  async importStudy(document: string): Promise<Record<string, any>> {
    const response = await this.fetchFn(`${this.baseUrl}/api/v1/studies/import`, {
      method: "POST",
      headers: this.headers(false),
      body: document,
    });
    return this.check(response);
  }

  async releasePause(participantUuid: string): Promise<Record<string, any>> {
    const response = await this.fetchFn(
      `${this.baseUrl}/api/v1/participants/${participantUuid}/pause/release`,
      { method: "POST", headers: this.headers(false) },
    );
    return this.check(response);
  }

  async logsPreview(studyId: string, page = 1, pageSize = 50): Promise<Record<string, any>> {
    const response = await this.fetchFn(
      `${this.baseUrl}/api/v1/studies/${studyId}/logs?page=${page}&page_size=${pageSize}`,
      { headers: this.headers(false) },
    );
    return this.check(response);
  }

  logsCsvUrl(studyId: string, condition?: string): string {
    const suffix = condition ? `?condition=${encodeURIComponent(condition)}` : "";
    return `${this.baseUrl}/api/v1/studies/${studyId}/logs.csv${suffix}`;
  }

  async createInvite(studyId: string): Promise<{ token: string; study_id: string }> {
    const response = await this.fetchFn(`${this.baseUrl}/api/v1/studies/${studyId}/invites`, {
      method: "POST",
      headers: this.headers(false),
    });
    return this.check(response);
  }
}
