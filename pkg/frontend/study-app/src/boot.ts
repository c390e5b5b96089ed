/** Entry point for the deployed app: participants open a study link,
 * get registered (or resume their existing session after a reload),
 * and land in the StudyApp.
 *
 * Link format: /<study-id> for open studies, with the invite token for
 * closed studies carried as ?invite=<token> (or a second path
 * segment). The issued participant credentials are kept in local
 * storage so reloads resume the same session instead of registering
 * again.
 */

import { registerForStudy } from "./api";
import { StudyApp } from "./app";

interface SessionRecord {
  participant_uuid: string;
  logger_key: string;
}

export interface BootOptions {
  root: HTMLElement;
  baseUrl: string;
  /** Defaults to window.location.pathname. */
  path?: string;
  /** Defaults to window.location.search. */
  search?: string;
  storage?: Pick<Storage, "getItem" | "setItem" | "removeItem">;
  fetchFn?: typeof fetch;
  pausePollMs?: number;
  backoffBaseMs?: number;
}

export function parseStudyLink(path: string, search: string): { studyId: string; inviteToken?: string } {
  const segments = path.split("/").filter((s) => s.length > 0);
  const studyId = segments[0] ?? "";
  if (studyId === "") throw new Error("study link is missing the study id");
  const params = new URLSearchParams(search);
  const inviteToken = params.get("invite") ?? segments[1];
  return inviteToken ? { studyId, inviteToken } : { studyId };
}

export async function bootStudyApp(options: BootOptions): Promise<StudyApp> {
  const path = options.path ?? window.location.pathname;
  const search = options.search ?? window.location.search;
  const storage = options.storage ?? window.localStorage;
  const { studyId, inviteToken } = parseStudyLink(path, search);

  const sessionKey = `studyalign:session:${studyId}`;
  let session: SessionRecord | null = null;
  const raw = storage.getItem(sessionKey);
  if (raw !== null) {
    try {
      session = JSON.parse(raw) as SessionRecord;
    } catch {
      storage.removeItem(sessionKey);
    }
  }
  if (session === null) {
    const created = await registerForStudy(options.baseUrl, studyId, inviteToken, options.fetchFn);
    session = { participant_uuid: created.participant_uuid, logger_key: created.logger_key };
    storage.setItem(sessionKey, JSON.stringify(session));
  }

  const app = new StudyApp({
    root: options.root,
    baseUrl: options.baseUrl,
    participantUuid: session.participant_uuid,
    loggerKey: session.logger_key,
    fetchFn: options.fetchFn,
    pausePollMs: options.pausePollMs,
    backoffBaseMs: options.backoffBaseMs,
  });
  await app.start();
  return app;
}
