// Thin typed client over the workflow server. The only URLs it ever builds
// are the fixed route table; action URLs always come from the server (the
// Location of a followed redirect, or a task's actionId).

import type {
  ActionDoc,
  ClassListDoc,
  ErrorDoc,
  FinishedDoc,
  LoginDoc,
  MenuDoc,
  ObjectDoc,
  TaskDoc,
} from "./types";

export class ApiError extends Error {
  constructor(
    readonly status: number,
    readonly code: string,
    message: string,
    readonly fields: Record<string, string> = {},
  ) {
    super(message);
  }
}

// The slice of fetch/Response the client depends on; tests substitute a fake.
export interface ResponseLike {
  status: number;
  ok: boolean;
  url: string;
  json(): Promise<unknown>;
}

export type FetchLike = (url: string, init: RequestInit) => Promise<ResponseLike>;

export interface ActionView {
  path: string; // server-assigned /action/{id}, usable for re-GET
  doc: ActionDoc;
}

export type StepResult =
  | { kind: "view"; view: ActionView }
  | { kind: "finished"; instance: string };

async function errorFrom(response: ResponseLike): Promise<ApiError> {
  let doc: Partial<ErrorDoc> = {};
  try {
    doc = (await response.json()) as ErrorDoc;
  } catch {
    // tolerate empty bodies; the status still tells the story
  }
  return new ApiError(
    response.status,
    doc.error ?? "error",
    doc.message ?? `request failed with status ${response.status}`,
    doc.fields ?? {},
  );
}

export class Api {
  token: string | null = null;

  constructor(
    private readonly base: string = "",
    private readonly fetchImpl: FetchLike = (url, init) => fetch(url, init),
  ) {}

  private async request(method: string, path: string, body?: unknown): Promise<ResponseLike> {
    const headers: Record<string, string> = { "Content-Type": "application/json" };
    if (this.token) headers["Authorization"] = `Bearer ${this.token}`;
    const response = await this.fetchImpl(this.base + path, {
      method,
      headers,
      body: body === undefined ? undefined : JSON.stringify(body),
    });
    if (response.status >= 400) throw await errorFrom(response);
    return response;
  }

  private async json<T>(method: string, path: string, body?: unknown): Promise<T> {
    return (await (await this.request(method, path, body)).json()) as T;
  }

  async login(login: string, password: string): Promise<LoginDoc> {
    this.token = null;
    const doc = await this.json<LoginDoc>("POST", "/login", { login, password });
    this.token = doc.token;
    return doc;
  }

  logout(): void {
    this.token = null;
  }

  menu(): Promise<MenuDoc> {
    return this.json("GET", "/menu");
  }

  async tasks(): Promise<TaskDoc[]> {
    return (await this.json<{ tasks: TaskDoc[] }>("GET", "/tasks")).tasks;
  }

  async activities(): Promise<string[]> {
    return (await this.json<{ activities: string[] }>("GET", "/activities")).activities;
  }

  // The browser follows the 303 itself; response.url names where we landed.
  private async step(method: string, path: string, body?: unknown): Promise<StepResult> {
    const response = await this.request(method, path, body);
    const doc = (await response.json()) as ActionDoc | FinishedDoc;
    if ("status" in doc && doc.status === "finished") {
      return { kind: "finished", instance: doc.instance };
    }
    const landed = new URL(response.url, "http://relative.invalid");
    return { kind: "view", view: { path: landed.pathname, doc: doc as ActionDoc } };
  }

  startActivity(name: string): Promise<StepResult> {
    return this.step("POST", `/activity/${name}`, {});
  }

  getAction(path: string): Promise<StepResult> {
    return this.step("GET", path);
  }

  submitAction(path: string, body: Record<string, string>): Promise<StepResult> {
    return this.step("POST", path, body);
  }

  listClass(name: string): Promise<ClassListDoc> {
    return this.json("GET", `/class/${name}`);
  }

  classForm(name: string): Promise<ObjectDoc> {
    return this.json("GET", `/class/${name}/new`);
  }

  classDetail(name: string, id: string): Promise<ObjectDoc> {
    return this.json("GET", `/class/${name}/${id}`);
  }

  createObject(name: string, fields: Record<string, string>): Promise<ObjectDoc> {
    return this.json("POST", `/class/${name}`, { fields });
  }

  updateObject(name: string, id: string, fields: Record<string, string>): Promise<ObjectDoc> {
    return this.json("PUT", `/class/${name}/${id}`, { fields });
  }

  async deleteObject(name: string, id: string): Promise<void> {
    await this.request("DELETE", `/class/${name}/${id}`);
  }
}
