// Single-page client: login, menu with task inbox, descriptor-driven action
// forms, and the default class screens. All rendering is driven by server
// documents; there is no per-page code.

import { Api, ApiError, type ActionView, type StepResult } from "./api";
import {
  canSubmit,
  fieldErrors,
  initialState,
  submissionBody,
  unknownElementKinds,
  type FormState,
} from "./render";
import type { MenuDoc, ObjectDoc, PageElement, SessionUser } from "./types";

export const TASK_POLL_MS = 5000;

type Attrs = Record<string, string | ((event: Event) => void)>;

function el(tag: string, attrs: Attrs = {}, ...children: (Node | string)[]): HTMLElement {
  const node = document.createElement(tag);
  for (const [key, value] of Object.entries(attrs)) {
    if (typeof value === "function") node.addEventListener(key, value);
    else node.setAttribute(key, value);
  }
  for (const child of children) {
    node.append(typeof child === "string" ? document.createTextNode(child) : child);
  }
  return node;
}

export class App {
  user: SessionUser | null = null;
  private pollTimer: ReturnType<typeof setInterval> | null = null;
  private busy = false; // at most one in-flight submit

  constructor(
    readonly api: Api,
    private readonly root: HTMLElement,
  ) {}

  start(): void {
    this.showLogin();
  }

  stop(): void {
    if (this.pollTimer !== null) {
      clearInterval(this.pollTimer);
      this.pollTimer = null;
    }
  }

  private swap(...children: (Node | string)[]): void {
    if (this.pollTimer !== null) {
      clearInterval(this.pollTimer);
      this.pollTimer = null;
    }
    this.root.replaceChildren(...children);
  }

  private banner(kind: "error" | "notice", text: string): HTMLElement {
    return el("p", { class: `banner ${kind}` }, text);
  }

  // -- login ------------------------------------------------------------------

  showLogin(message?: string): void {
    this.user = null;
    this.api.logout();
    const login = el("input", { class: "login-user", autocomplete: "username" }) as HTMLInputElement;
    const password = el("input", {
      class: "login-password",
      type: "password",
      autocomplete: "current-password",
    }) as HTMLInputElement;
    const status = el("p", { class: "login-status" }, message ?? "");
    const submit = async () => {
      try {
        const doc = await this.api.login(login.value, password.value);
        this.user = doc.user;
        await this.showHome();
      } catch (error) {
        status.textContent = error instanceof ApiError ? error.message : String(error);
      }
    };
    this.swap(
      el("h1", {}, "Sign in"),
      el("form", { class: "login", submit: (e) => { e.preventDefault(); void submit(); } },
        el("label", {}, "Login ", login),
        el("label", {}, "Password ", password),
        el("button", { type: "submit" }, "Sign in"),
      ),
      status,
    );
  }

  // -- home: menu, notifications, task inbox ------------------------------------

  async showHome(): Promise<void> {
    let menu: MenuDoc;
    try {
      menu = await this.api.menu();
    } catch (error) {
      return this.handleSessionError(error);
    }

    const inbox = el("div", { class: "tasks" });
    const refresh = async () => {
      try {
        this.renderTasks(inbox, await this.api.tasks());
      } catch {
        // polling must never take the screen down; next poll retries
      }
    };

    const entries = el("ul", { class: "menu" });
    for (const entry of menu.entries) {
      const item = el("li", {});
      if (entry.kind === "page" && entry.render) {
        item.append(...entry.render.elements.map((e) => this.staticElement(e)));
      } else if (entry.kind === "activity") {
        item.append(
          el("button", { class: "start-activity", click: () => void this.startActivity(entry.name) },
            `Start ${entry.name}`),
        );
      } else if (entry.kind === "list") {
        item.append(
          el("button", { class: "open-list", click: () => void this.showClassList(entry.name) },
            `${entry.name} list`),
        );
      } else {
        item.append(
          el("button", { class: "open-create", click: () => void this.showClassForm(entry.name) },
            `New ${entry.name}`),
        );
      }
      entries.append(item);
    }

    const notifications = el("ul", { class: "notifications" });
    for (const message of menu.notifications) {
      notifications.append(el("li", {}, message));
    }

    this.swap(
      el("header", {},
        el("h1", {}, menu.application),
        el("span", { class: "whoami" }, this.user ? `Signed in as ${this.user.name}` : ""),
        el("button", { class: "logout", click: () => this.showLogin() }, "Sign out"),
      ),
      menu.notifications.length
        ? el("section", {}, el("h2", {}, "Notifications"), notifications)
        : "",
      el("section", {}, el("h2", {}, "Menu"), entries),
      el("section", {}, el("h2", {}, "Your tasks"), inbox),
    );
    await refresh();
    this.pollTimer = setInterval(() => void refresh(), TASK_POLL_MS);
  }

  private renderTasks(container: HTMLElement, tasks: { actionId: string; activity: string; action: string }[]): void {
    if (tasks.length === 0) {
      container.replaceChildren(el("p", { class: "empty" }, "No pending tasks."));
      return;
    }
    const list = el("ul", {});
    for (const task of tasks) {
      list.append(
        el("li", {},
          el("button", {
            class: "open-task",
            click: () => void this.openAction(`/action/${task.actionId}`),
          }, `${task.activity}: ${task.action}`),
        ),
      );
    }
    container.replaceChildren(list);
  }

  private staticElement(element: PageElement): Node {
    switch (element.kind) {
      case "heading":
        return el(`h${Math.min(element.level + 1, 6)}`, {}, element.text);
      case "text":
        return el("p", {}, element.text);
      default:
        return el("p", { class: "banner error" }, `cannot render element kind '${element.kind}'`);
    }
  }

  // -- workflow actions ----------------------------------------------------------

  async startActivity(name: string): Promise<void> {
    try {
      this.applyStep(await this.api.startActivity(name));
    } catch (error) {
      this.handleSessionError(error);
    }
  }

  async openAction(path: string): Promise<void> {
    try {
      this.applyStep(await this.api.getAction(path));
    } catch (error) {
      if (error instanceof ApiError && error.status === 410) {
        this.showGone();
        return;
      }
      this.handleSessionError(error);
    }
  }

  private applyStep(step: StepResult): void {
    if (step.kind === "finished") this.showFinished();
    else this.showAction(step.view);
  }

  showAction(view: ActionView, state?: FormState, problems: Record<string, string> = {}, notice = ""): void {
    const doc = view.doc;
    const formState = state ?? initialState(doc);
    const body = el("div", { class: "action-form" });

    for (const kind of unknownElementKinds(doc)) {
      body.append(this.banner("error", `cannot render element kind '${kind}'`));
    }
    if (notice) body.append(this.banner("error", notice));

    for (const element of doc.elements) {
      switch (element.kind) {
        case "heading":
        case "text":
          body.append(this.staticElement(element));
          break;
        case "output":
          body.append(
            el("p", { class: "output" },
              el("span", { class: "label" }, `${element.label}: `),
              el("span", { class: "value" }, element.value)),
          );
          break;
        case "input": {
          const input = el("input", {
            class: "field",
            name: element.name,
            value: formState.values[element.name] ?? "",
            input: (event) => {
              formState.values[element.name] = (event.target as HTMLInputElement).value;
              update();
            },
          }) as HTMLInputElement;
          input.value = formState.values[element.name] ?? "";
          const problem = el("span", { class: "field-error", "data-for": element.name },
            problems[element.name] ?? "");
          body.append(el("label", { class: "field-row" }, `${element.label} `, input, problem));
          break;
        }
        case "table": {
          const table = el("table", { class: element.selectable ? "selectable" : "plain" });
          table.append(el("tr", {}, ...element.columns.map((c) => el("th", {}, c))));
          for (const row of element.rows) {
            const cells = row.cells.map((c) => el("td", {}, c));
            if (element.selectable) {
              const radio = el("input", {
                type: "radio",
                name: `select-${element.param}`,
                value: row.id,
                change: () => {
                  formState.selection = row.id;
                  update();
                },
              }) as HTMLInputElement;
              radio.checked = formState.selection === row.id;
              cells.unshift(el("td", {}, radio));
            }
            table.append(el("tr", { "data-id": row.id }, ...cells));
          }
          body.append(table);
          break;
        }
        default:
          break; // already reported as a banner
      }
    }

    const submitButtons: HTMLButtonElement[] = [];
    const submit = async (decision: string | null) => {
      if (this.busy) return;
      this.busy = true;
      try {
        const payload = submissionBody(doc, formState, decision);
        this.applyStep(await this.api.submitAction(view.path, payload));
      } catch (error) {
        if (error instanceof ApiError && error.status === 422) {
          this.showAction(view, formState, error.fields);
        } else if (error instanceof ApiError && error.status === 410) {
          this.showGone();
        } else if (error instanceof ApiError && error.status === 403) {
          // The follow-up landed on another participant's action: our part is done.
          this.showHandedOff();
        } else if (error instanceof ApiError && error.status === 409) {
          this.showAction(view, formState, {}, "Another submission is running; try again.");
        } else {
          this.handleSessionError(error);
        }
      } finally {
        this.busy = false;
      }
    };

    const buttons = el("div", { class: "buttons" });
    if (doc.decisions.length > 0) {
      for (const decision of doc.decisions) {
        const button = el("button", { class: "decision", click: () => void submit(decision) },
          decision) as HTMLButtonElement;
        submitButtons.push(button);
        buttons.append(button);
      }
    } else {
      const button = el("button", { class: "submit", click: () => void submit(null) },
        "Submit") as HTMLButtonElement;
      submitButtons.push(button);
      buttons.append(button);
    }

    const update = () => {
      const ready = canSubmit(doc, formState);
      for (const button of submitButtons) button.disabled = !ready;
      const live = fieldErrors(doc, formState);
      for (const span of body.querySelectorAll<HTMLElement>(".field-error")) {
        const name = span.getAttribute("data-for") ?? "";
        span.textContent = live[name] ?? problems[name] ?? "";
        if (live[name] === undefined) delete problems[name];
      }
    };

    this.swap(
      el("header", {},
        el("h1", {}, doc.action),
        el("button", { class: "home", click: () => void this.showHome() }, "Back to menu"),
      ),
      body,
      buttons,
    );
    update();
  }

  showFinished(): void {
    this.swap(
      el("h1", {}, "Workflow step complete"),
      this.banner("notice", "The workflow instance has finished."),
      el("button", { class: "home", click: () => void this.showHome() }, "Back to menu"),
    );
  }

  showGone(): void {
    this.swap(
      el("h1", {}, "Nothing to do here"),
      this.banner("notice", "This workflow step was completed elsewhere."),
      el("button", { class: "home", click: () => void this.showHome() }, "Back to menu"),
    );
  }

  showHandedOff(): void {
    this.swap(
      el("h1", {}, "Handed off"),
      this.banner("notice", "The next step belongs to another participant."),
      el("button", { class: "home", click: () => void this.showHome() }, "Back to menu"),
    );
  }

  // -- default class screens ------------------------------------------------------

  async showClassList(name: string): Promise<void> {
    let doc;
    try {
      doc = await this.api.listClass(name);
    } catch (error) {
      return this.handleSessionError(error);
    }
    const body = el("div", { class: "class-list" });
    for (const element of doc.elements) {
      if (element.kind === "table") {
        const table = el("table", {});
        table.append(el("tr", {}, ...element.columns.map((c) => el("th", {}, c)), el("th", {})));
        for (const row of element.rows) {
          table.append(
            el("tr", { "data-id": row.id },
              ...row.cells.map((c) => el("td", {}, c)),
              el("td", {},
                el("button", {
                  class: "delete",
                  click: async () => {
                    try {
                      await this.api.deleteObject(name, row.id);
                      await this.showClassList(name);
                    } catch (error) {
                      this.handleSessionError(error);
                    }
                  },
                }, "Delete"),
              ),
            ),
          );
        }
        body.append(table);
      } else {
        body.append(this.staticElement(element));
      }
    }
    this.swap(
      el("header", {},
        el("h1", {}, `${name} list`),
        el("button", { class: "home", click: () => void this.showHome() }, "Back to menu"),
      ),
      body,
    );
  }

  async showClassForm(name: string): Promise<void> {
    let doc: ObjectDoc;
    try {
      doc = await this.api.classForm(name);
    } catch (error) {
      return this.handleSessionError(error);
    }
    const elements = doc.elements ?? [];
    const values: Record<string, string> = {};
    const body = el("div", { class: "class-form" });
    const status = el("p", { class: "form-status" }, "");
    for (const element of elements) {
      if (element.kind === "input") {
        const input = el("input", {
          class: "field",
          name: element.name,
          type: element.name === "password" ? "password" : "text",
          input: (event) => {
            values[element.name] = (event.target as HTMLInputElement).value;
          },
        });
        body.append(el("label", { class: "field-row" }, `${element.label} `, input,
          el("span", { class: "field-error", "data-for": element.name }, "")));
      } else {
        body.append(this.staticElement(element));
      }
    }
    const save = async () => {
      try {
        await this.api.createObject(name, values);
        await this.showHome();
      } catch (error) {
        if (error instanceof ApiError && error.status === 422) {
          for (const span of body.querySelectorAll<HTMLElement>(".field-error")) {
            span.textContent = error.fields[span.getAttribute("data-for") ?? ""] ?? "";
          }
          status.textContent = error.message;
        } else {
          this.handleSessionError(error);
        }
      }
    };
    this.swap(
      el("header", {},
        el("h1", {}, `New ${name}`),
        el("button", { class: "home", click: () => void this.showHome() }, "Back to menu"),
      ),
      body,
      status,
      el("button", { class: "save", click: () => void save() }, "Save"),
    );
  }

  // -- shared error handling --------------------------------------------------------

  private handleSessionError(error: unknown): void {
    if (error instanceof ApiError && error.status === 401) {
      this.showLogin("Your session ended; sign in again.");
      return;
    }
    const message = error instanceof Error ? error.message : String(error);
    this.root.prepend(this.banner("error", message));
  }
}
