/** Helpers for tests that talk to the live backend started by the
 * global setup: connection info, admin login, study builders. */

import { readFileSync } from "node:fs";
import { tmpdir } from "node:os";
import { join } from "node:path";

export interface BackendInfo {
  baseUrl: string;
  adminEmail: string;
  adminPassword: string;
}

export function backendInfo(): BackendInfo {
  if (process.env.SA_BASE_URL) {
    return {
      baseUrl: process.env.SA_BASE_URL,
      adminEmail: process.env.SA_ADMIN_EMAIL ?? "",
      adminPassword: process.env.SA_ADMIN_PASSWORD ?? "",
    };
  }
  const raw = readFileSync(join(tmpdir(), "studyalign-frontend-tests.json"), "utf-8");
  return JSON.parse(raw) as BackendInfo;
}

export async function adminToken(info: BackendInfo): Promise<string> {
  const response = await fetch(`${info.baseUrl}/api/v1/auth/login`, {
    method: "POST",
    headers: { "Content-Type": "application/json" },
    body: JSON.stringify({ email: info.adminEmail, password: info.adminPassword }),
  });
  if (!response.ok) throw new Error(`login failed: ${await response.text()}`);
  const body = (await response.json()) as { token: string };
  return body.token;
}

export function studyFields(overrides: Record<string, unknown> = {}): Record<string, unknown> {
  return {
    title: "Frontend integration study",
    description: "<p>about</p>",
    consent: "<p>consent</p>",
    start_date: "2020-01-01T00:00:00+00:00",
    end_date: "2099-01-01T00:00:00+00:00",
    planned_participants: 50,
    access_mode: "open",
    ...overrides,
  };
}

type Element = Record<string, unknown>;

export const textEl = (title: string, body = "<p>hi</p>"): Element => ({ type: "text", title, body });
export const condEl = (name: string, url?: string): Element => ({
  type: "condition",
  name,
  prototype_url: url ?? `https://proto.example/${name}`,
  config: {},
});
export const questEl = (name: string, url?: string): Element => ({
  type: "questionnaire",
  name,
  survey_url: url ?? `https://survey.example/${name}`,
});

export function configOf(...elements: Array<Element | [Element, boolean]>): Record<string, unknown> {
  return {
    steps: elements.map((item, index) => {
      const [element, flagged] = Array.isArray(item) ? item : [item, false];
      return { order: index + 1, counterbalance: flagged, element };
    }),
  };
}

export async function createActiveStudy(
  info: BackendInfo,
  token: string,
  config: Record<string, unknown>,
): Promise<string> {
  const headers = { "Content-Type": "application/json", Authorization: `Bearer ${token}` };
  const created = await fetch(`${info.baseUrl}/api/v1/studies`, {
    method: "POST",
    headers,
    body: JSON.stringify({ ...studyFields(), procedure_config: config }),
  });
  if (created.status !== 201) throw new Error(`create failed: ${await created.text()}`);
  const detail = (await created.json()) as { study: { id: string } };
  const activated = await fetch(`${info.baseUrl}/api/v1/studies/${detail.study.id}`, {
    method: "PATCH",
    headers,
    body: JSON.stringify({ state: "active" }),
  });
  if (!activated.ok) throw new Error(`activate failed: ${await activated.text()}`);
  return detail.study.id;
}

export interface Registration {
  participant_uuid: string;
  logger_key: string;
  study_id: string;
  procedure: { steps: Array<Record<string, any>> };
}

export async function registerParticipant(info: BackendInfo, studyId: string): Promise<Registration> {
  const response = await fetch(`${info.baseUrl}/api/v1/studies/${studyId}/participants`, {
    method: "POST",
  });
  if (response.status !== 201) throw new Error(`register failed: ${await response.text()}`);
  return (await response.json()) as Registration;
}
