// Client protocol behavior against a scripted fetch.

import { describe, expect, it } from "vitest";
import { Api, ApiError, type ResponseLike } from "../src/api";

interface Recorded {
  url: string;
  init: RequestInit;
}

function reply(status: number, body: unknown, url = ""): ResponseLike {
  return {
    status,
    ok: status < 400,
    url,
    json: async () => body,
  };
}

function scripted(responses: ResponseLike[]): { api: Api; calls: Recorded[] } {
  const calls: Recorded[] = [];
  const api = new Api("", async (url, init) => {
    calls.push({ url, init });
    const next = responses.shift();
    if (!next) throw new Error(`unexpected request ${init.method} ${url}`);
    return next;
  });
  return { api, calls };
}

const LOGIN_DOC = {
  token: "tok-1",
  user: { id: "u1", class: "Staff", name: "Referee One", role: "lecturer" },
};

describe("sessions", () => {
  it("attaches the bearer token after login", async () => {
    const { api, calls } = scripted([
      reply(200, LOGIN_DOC),
      reply(200, { tasks: [] }),
    ]);
    await api.login("ref1", "ref1pw");
    await api.tasks();
    const headers = calls[1].init.headers as Record<string, string>;
    expect(headers["Authorization"]).toBe("Bearer tok-1");
  });

  it("turns error bodies into typed errors", async () => {
    const { api } = scripted([
      reply(422, { error: "validation", message: "the submission is invalid", fields: { "t.grade2": "not a decimal" } }),
    ]);
    api.token = "tok-1";
    const failure = await api.submitAction("/action/i-1", { "t.grade2": "x" }).catch((e) => e);
    expect(failure).toBeInstanceOf(ApiError);
    expect(failure.status).toBe(422);
    expect(failure.fields["t.grade2"]).toBe("not a decimal");
  });

  it("drops the token on logout", async () => {
    const { api, calls } = scripted([reply(200, LOGIN_DOC), reply(401, {})]);
    await api.login("ref1", "ref1pw");
    api.logout();
    await expect(api.tasks()).rejects.toMatchObject({ status: 401 });
    const headers = calls[1].init.headers as Record<string, string>;
    expect(headers["Authorization"]).toBeUndefined();
  });
});

describe("the step protocol", () => {
  const RENDER_DOC = {
    instance: "i",
    action: "SetGrade1",
    page: "SetGrade1Page",
    elements: [],
    decisions: [],
    fields: {},
  };

  it("reads the landing URL of a followed redirect", async () => {
    const { api, calls } = scripted([
      reply(200, RENDER_DOC, "http://server.test/action/i-1"),
    ]);
    api.token = "tok-1";
    const step = await api.startActivity("GradeThesis");
    expect(calls[0].url).toBe("/activity/GradeThesis");
    expect(step).toEqual({ kind: "view", view: { path: "/action/i-1", doc: RENDER_DOC } });
  });

  it("recognizes the finished reply", async () => {
    const { api } = scripted([reply(200, { status: "finished", instance: "i" })]);
    api.token = "tok-1";
    const step = await api.submitAction("/action/i-4", {});
    expect(step).toEqual({ kind: "finished", instance: "i" });
  });

  it("surfaces 410 for stale steps", async () => {
    const { api } = scripted([
      reply(410, { error: "gone", message: "this step was already completed", fields: {} }),
    ]);
    api.token = "tok-1";
    await expect(api.getAction("/action/i-0")).rejects.toMatchObject({ status: 410, code: "gone" });
  });
});
