/** SDK durability against the real backend: events survive a simulated
 * reload, and a dropped flush retried with the same client_batch_id
 * yields exactly one server copy. */

import { beforeAll, describe, expect, it } from "vitest";

import { StudyAlignLogger } from "../src/logger";
import {
  adminToken,
  backendInfo,
  condEl,
  configOf,
  createActiveStudy,
  registerParticipant,
  textEl,
  type BackendInfo,
  type Registration,
} from "../../shared/test-backend";
import { MemoryStorage } from "./buffer.test";

let info: BackendInfo;
let token: string;

beforeAll(async () => {
  info = backendInfo();
  token = await adminToken(info);
});

async function freshParticipant(): Promise<{ studyId: string; reg: Registration; conditionId: string }> {
  const studyId = await createActiveStudy(info, token, configOf(condEl("a"), textEl("end")));
  const reg = await registerParticipant(info, studyId);
  const conditionId = reg.procedure.steps[0]!["element_id"] as string;
  return { studyId, reg, conditionId };
}

async function serverEventCount(studyId: string): Promise<number> {
  const response = await fetch(`${info.baseUrl}/api/v1/studies/${studyId}/logs.csv`, {
    headers: { Authorization: `Bearer ${token}` },
  });
  const text = await response.text();
  return text.trim().split("\n").length - 1;
}

function sdkConfig(reg: Registration, conditionId: string, storage: MemoryStorage, fetchFn?: typeof fetch) {
  return {
    baseUrl: info.baseUrl,
    participantUuid: reg.participant_uuid,
    loggerKey: reg.logger_key,
    conditionId,
    flushIntervalMs: 0,
    storage,
    fetchFn,
  };
}

describe("SDK against the live backend", () => {
  it("buffered events survive a reload and flush on re-init", async () => {
    const { studyId, reg, conditionId } = await freshParticipant();
    const storage = new MemoryStorage();

    const before = new StudyAlignLogger(sdkConfig(reg, conditionId, storage));
    for (let i = 0; i < 7; i += 1) before.logInteraction("click", { type: "click", seq: i });
    expect(before.bufferedCount()).toBe(7);
    before.dispose(); // page unload: nothing flushed, buffer persisted

    expect(await serverEventCount(studyId)).toBe(0);

    const after = new StudyAlignLogger(sdkConfig(reg, conditionId, storage));
    expect(after.bufferedCount()).toBe(7);
    const result = await after.flush();
    expect(result.sent).toBe(7);
    expect(await serverEventCount(studyId)).toBe(7);
    after.dispose();
  });

  it("a dropped flush retried with the same batch id stores exactly one copy", async () => {
    const { studyId, reg, conditionId } = await freshParticipant();
    const storage = new MemoryStorage();

    // Drop the connection after the server handled the request: the
    // response is lost, the SDK must retry with the same batch id.
    const batchIds: string[] = [];
    let dropResponses = 1;
    const flaky = (async (input: any, initArg?: any) => {
      const url = String(input);
      if (url.endsWith("/api/v1/logs/batch")) {
        batchIds.push((JSON.parse(initArg.body as string) as { client_batch_id: string }).client_batch_id);
        const response = await fetch(input, initArg);
        if (dropResponses > 0) {
          dropResponses -= 1;
          throw new TypeError("connection reset while reading response");
        }
        return response;
      }
      return fetch(input, initArg);
    }) as typeof fetch;

    const logger = new StudyAlignLogger(sdkConfig(reg, conditionId, storage, flaky));
    for (let i = 0; i < 5; i += 1) logger.logInteraction("keydown", { type: "keydown", seq: i });

    const first = await logger.flush(); // server stored it, client saw a failure
    expect(first.sent).toBe(0);
    expect(logger.bufferedCount()).toBe(5);
    expect(await serverEventCount(studyId)).toBe(5);

    const second = await logger.flush(); // replay, same id: no new rows
    expect(second.sent).toBe(5);
    expect(logger.bufferedCount()).toBe(0);
    expect(batchIds).toHaveLength(2);
    expect(batchIds[0]).toBe(batchIds[1]);
    expect(await serverEventCount(studyId)).toBe(5);
    logger.dispose();
  });

  it("taskFinished drains the buffer and opens the navigator gate", async () => {
    const { studyId, reg, conditionId } = await freshParticipant();
    const logger = new StudyAlignLogger(sdkConfig(reg, conditionId, new MemoryStorage()));
    for (let i = 0; i < 10; i += 1) logger.logInteraction("click", { type: "click", seq: i });

    await logger.taskFinished();
    expect(await serverEventCount(studyId)).toBe(10);

    // gate is open: advance succeeds
    const advanced = await fetch(`${info.baseUrl}/api/v1/participants/${reg.participant_uuid}/advance`, {
      method: "POST",
      headers: { "Logger-Api-Key": reg.logger_key },
    });
    expect(advanced.status).toBe(200);
    const body = (await advanced.json()) as { progress: number };
    expect(body.progress).toBe(1);

    // double finish stays idempotent server-side
    const again = await fetch(
      `${info.baseUrl}/api/v1/participants/${reg.participant_uuid}/steps/0/finished`,
      { method: "POST", headers: { "Logger-Api-Key": reg.logger_key } },
    );
    expect(again.status).toBe(409); // already advanced: out of sequence
    logger.dispose();
  });
});
