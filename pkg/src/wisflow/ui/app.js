"use strict";
(() => {
  // src/api.ts
  var ApiError = class extends Error {
    constructor(status, code, message, fields = {}) {
      super(message);
      this.status = status;
      this.code = code;
      this.fields = fields;
    }
  };
  async function errorFrom(response) {
    let doc = {};
    try {
      doc = await response.json();
    } catch {
    }
    return new ApiError(
      response.status,
      doc.error ?? "error",
      doc.message ?? `request failed with status ${response.status}`,
      doc.fields ?? {}
    );
  }
  var Api = class {
    constructor(base = "", fetchImpl = (url, init) => fetch(url, init)) {
      this.base = base;
      this.fetchImpl = fetchImpl;
      this.token = null;
    }
    async request(method, path, body) {
      const headers = { "Content-Type": "application/json" };
      if (this.token) headers["Authorization"] = `Bearer ${this.token}`;
      const response = await this.fetchImpl(this.base + path, {
        method,
        headers,
        body: body === void 0 ? void 0 : JSON.stringify(body)
      });
      if (response.status >= 400) throw await errorFrom(response);
      return response;
    }
    async json(method, path, body) {
      return await (await this.request(method, path, body)).json();
    }
    async login(login, password) {
      this.token = null;
      const doc = await this.json("POST", "/login", { login, password });
      this.token = doc.token;
      return doc;
    }
    logout() {
      this.token = null;
    }
    menu() {
      return this.json("GET", "/menu");
    }
    async tasks() {
      return (await this.json("GET", "/tasks")).tasks;
    }
    async activities() {
      return (await this.json("GET", "/activities")).activities;
    }
    // The browser follows the 303 itself; response.url names where we landed.
    async step(method, path, body) {
      const response = await this.request(method, path, body);
      const doc = await response.json();
      if ("status" in doc && doc.status === "finished") {
        return { kind: "finished", instance: doc.instance };
      }
      const landed = new URL(response.url, "http://relative.invalid");
      return { kind: "view", view: { path: landed.pathname, doc } };
    }
    startActivity(name) {
      return this.step("POST", `/activity/${name}`, {});
    }
    getAction(path) {
      return this.step("GET", path);
    }
    submitAction(path, body) {
      return this.step("POST", path, body);
    }
    listClass(name) {
      return this.json("GET", `/class/${name}`);
    }
    classForm(name) {
      return this.json("GET", `/class/${name}/new`);
    }
    classDetail(name, id) {
      return this.json("GET", `/class/${name}/${id}`);
    }
    createObject(name, fields) {
      return this.json("POST", `/class/${name}`, { fields });
    }
    updateObject(name, id, fields) {
      return this.json("PUT", `/class/${name}/${id}`, { fields });
    }
    async deleteObject(name, id) {
      await this.request("DELETE", `/class/${name}/${id}`);
    }
  };

  // src/render.ts
  function initialState(doc) {
    const values = {};
    for (const element of doc.elements) {
      if (element.kind === "input") values[element.name] = element.value;
    }
    return { values, selection: null };
  }
  function editableFields(doc) {
    return doc.elements.filter((e) => e.kind === "input");
  }
  function selectableTable(doc) {
    for (const element of doc.elements) {
      if (element.kind === "table" && element.selectable) return element;
    }
    return null;
  }
  function unknownElementKinds(doc) {
    const known = /* @__PURE__ */ new Set(["heading", "text", "output", "input", "table"]);
    const seen = [];
    for (const element of doc.elements) {
      const kind = element.kind;
      if (!known.has(kind) && !seen.includes(kind)) seen.push(kind);
    }
    return seen;
  }
  var INT_RE = /^-?\d+$/;
  var DECIMAL_RE = /^-?\d+(\.\d+)?$/;
  var DATE_RE = /^\d{4}-\d{2}-\d{2}$/;
  var EMAIL_RE = /^[^\s@]+@[^\s@]+\.[^\s@]+$/;
  function fieldError(type, text) {
    if (text === "") return null;
    switch (type) {
      case "String":
      case "Text":
        return null;
      case "Int":
        return INT_RE.test(text) ? null : "must be a whole number";
      case "Decimal":
        return DECIMAL_RE.test(text) ? null : "must be a number like 1.3";
      case "Bool":
        return text === "true" || text === "false" ? null : "must be true or false";
      case "Date": {
        if (!DATE_RE.test(text)) return "must be a date like 2026-01-31";
        const [y, m, d] = text.split("-").map(Number);
        const date = new Date(Date.UTC(y, m - 1, d));
        const real = date.getUTCFullYear() === y && date.getUTCMonth() === m - 1 && date.getUTCDate() === d;
        return real ? null : "not a real calendar date";
      }
      case "Email":
        return EMAIL_RE.test(text) ? null : "must be an address like a@b.org";
    }
  }
  function fieldErrors(doc, state) {
    const problems = {};
    for (const field of editableFields(doc)) {
      const error = fieldError(field.type, state.values[field.name] ?? "");
      if (error) problems[field.name] = error;
    }
    return problems;
  }
  function canSubmit(doc, state) {
    if (Object.keys(fieldErrors(doc, state)).length > 0) return false;
    const table = selectableTable(doc);
    if (table && table.rows.length > 0 && state.selection === null) return false;
    return true;
  }
  function submissionBody(doc, state, decision) {
    const body = {};
    for (const field of editableFields(doc)) {
      body[field.name] = state.values[field.name] ?? "";
    }
    if (selectableTable(doc) && state.selection !== null) {
      body["_selection"] = state.selection;
    }
    if (decision !== null) body["_decision"] = decision;
    return body;
  }

  // src/app.ts
  var TASK_POLL_MS = 5e3;
  function el(tag, attrs = {}, ...children) {
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
  var App = class {
    // at most one in-flight submit
    constructor(api, root2) {
      this.api = api;
      this.root = root2;
      this.user = null;
      this.pollTimer = null;
      this.busy = false;
    }
    start() {
      this.showLogin();
    }
    stop() {
      if (this.pollTimer !== null) {
        clearInterval(this.pollTimer);
        this.pollTimer = null;
      }
    }
    swap(...children) {
      if (this.pollTimer !== null) {
        clearInterval(this.pollTimer);
        this.pollTimer = null;
      }
      this.root.replaceChildren(...children);
    }
    banner(kind, text) {
      return el("p", { class: `banner ${kind}` }, text);
    }
    // -- login ------------------------------------------------------------------
    showLogin(message) {
      this.user = null;
      this.api.logout();
      const login = el("input", { class: "login-user", autocomplete: "username" });
      const password = el("input", {
        class: "login-password",
        type: "password",
        autocomplete: "current-password"
      });
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
        el(
          "form",
          { class: "login", submit: (e) => {
            e.preventDefault();
            void submit();
          } },
          el("label", {}, "Login ", login),
          el("label", {}, "Password ", password),
          el("button", { type: "submit" }, "Sign in")
        ),
        status
      );
    }
    // -- home: menu, notifications, task inbox ------------------------------------
    async showHome() {
      let menu;
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
        }
      };
      const entries = el("ul", { class: "menu" });
      for (const entry of menu.entries) {
        const item = el("li", {});
        if (entry.kind === "page" && entry.render) {
          item.append(...entry.render.elements.map((e) => this.staticElement(e)));
        } else if (entry.kind === "activity") {
          item.append(
            el(
              "button",
              { class: "start-activity", click: () => void this.startActivity(entry.name) },
              `Start ${entry.name}`
            )
          );
        } else if (entry.kind === "list") {
          item.append(
            el(
              "button",
              { class: "open-list", click: () => void this.showClassList(entry.name) },
              `${entry.name} list`
            )
          );
        } else {
          item.append(
            el(
              "button",
              { class: "open-create", click: () => void this.showClassForm(entry.name) },
              `New ${entry.name}`
            )
          );
        }
        entries.append(item);
      }
      const notifications = el("ul", { class: "notifications" });
      for (const message of menu.notifications) {
        notifications.append(el("li", {}, message));
      }
      this.swap(
        el(
          "header",
          {},
          el("h1", {}, menu.application),
          el("span", { class: "whoami" }, this.user ? `Signed in as ${this.user.name}` : ""),
          el("button", { class: "logout", click: () => this.showLogin() }, "Sign out")
        ),
        menu.notifications.length ? el("section", {}, el("h2", {}, "Notifications"), notifications) : "",
        el("section", {}, el("h2", {}, "Menu"), entries),
        el("section", {}, el("h2", {}, "Your tasks"), inbox)
      );
      await refresh();
      this.pollTimer = setInterval(() => void refresh(), TASK_POLL_MS);
    }
    renderTasks(container, tasks) {
      if (tasks.length === 0) {
        container.replaceChildren(el("p", { class: "empty" }, "No pending tasks."));
        return;
      }
      const list = el("ul", {});
      for (const task of tasks) {
        list.append(
          el(
            "li",
            {},
            el("button", {
              class: "open-task",
              click: () => void this.openAction(`/action/${task.actionId}`)
            }, `${task.activity}: ${task.action}`)
          )
        );
      }
      container.replaceChildren(list);
    }
    staticElement(element) {
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
    async startActivity(name) {
      try {
        this.applyStep(await this.api.startActivity(name));
      } catch (error) {
        this.handleSessionError(error);
      }
    }
    async openAction(path) {
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
    applyStep(step) {
      if (step.kind === "finished") this.showFinished();
      else this.showAction(step.view);
    }
    showAction(view, state, problems = {}, notice = "") {
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
              el(
                "p",
                { class: "output" },
                el("span", { class: "label" }, `${element.label}: `),
                el("span", { class: "value" }, element.value)
              )
            );
            break;
          case "input": {
            const input = el("input", {
              class: "field",
              name: element.name,
              value: formState.values[element.name] ?? "",
              input: (event) => {
                formState.values[element.name] = event.target.value;
                update();
              }
            });
            input.value = formState.values[element.name] ?? "";
            const problem = el(
              "span",
              { class: "field-error", "data-for": element.name },
              problems[element.name] ?? ""
            );
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
                  }
                });
                radio.checked = formState.selection === row.id;
                cells.unshift(el("td", {}, radio));
              }
              table.append(el("tr", { "data-id": row.id }, ...cells));
            }
            body.append(table);
            break;
          }
          default:
            break;
        }
      }
      const submitButtons = [];
      const submit = async (decision) => {
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
          const button = el(
            "button",
            { class: "decision", click: () => void submit(decision) },
            decision
          );
          submitButtons.push(button);
          buttons.append(button);
        }
      } else {
        const button = el(
          "button",
          { class: "submit", click: () => void submit(null) },
          "Submit"
        );
        submitButtons.push(button);
        buttons.append(button);
      }
      const update = () => {
        const ready = canSubmit(doc, formState);
        for (const button of submitButtons) button.disabled = !ready;
        const live = fieldErrors(doc, formState);
        for (const span of body.querySelectorAll(".field-error")) {
          const name = span.getAttribute("data-for") ?? "";
          span.textContent = live[name] ?? problems[name] ?? "";
          if (live[name] === void 0) delete problems[name];
        }
      };
      this.swap(
        el(
          "header",
          {},
          el("h1", {}, doc.action),
          el("button", { class: "home", click: () => void this.showHome() }, "Back to menu")
        ),
        body,
        buttons
      );
      update();
    }
    showFinished() {
      this.swap(
        el("h1", {}, "Workflow step complete"),
        this.banner("notice", "The workflow instance has finished."),
        el("button", { class: "home", click: () => void this.showHome() }, "Back to menu")
      );
    }
    showGone() {
      this.swap(
        el("h1", {}, "Nothing to do here"),
        this.banner("notice", "This workflow step was completed elsewhere."),
        el("button", { class: "home", click: () => void this.showHome() }, "Back to menu")
      );
    }
    showHandedOff() {
      this.swap(
        el("h1", {}, "Handed off"),
        this.banner("notice", "The next step belongs to another participant."),
        el("button", { class: "home", click: () => void this.showHome() }, "Back to menu")
      );
    }
    // -- default class screens ------------------------------------------------------
    async showClassList(name) {
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
              el(
                "tr",
                { "data-id": row.id },
                ...row.cells.map((c) => el("td", {}, c)),
                el(
                  "td",
                  {},
                  el("button", {
                    class: "delete",
                    click: async () => {
                      try {
                        await this.api.deleteObject(name, row.id);
                        await this.showClassList(name);
                      } catch (error) {
                        this.handleSessionError(error);
                      }
                    }
                  }, "Delete")
                )
              )
            );
          }
          body.append(table);
        } else {
          body.append(this.staticElement(element));
        }
      }
      this.swap(
        el(
          "header",
          {},
          el("h1", {}, `${name} list`),
          el("button", { class: "home", click: () => void this.showHome() }, "Back to menu")
        ),
        body
      );
    }
    async showClassForm(name) {
      let doc;
      try {
        doc = await this.api.classForm(name);
      } catch (error) {
        return this.handleSessionError(error);
      }
      const elements = doc.elements ?? [];
      const values = {};
      const body = el("div", { class: "class-form" });
      const status = el("p", { class: "form-status" }, "");
      for (const element of elements) {
        if (element.kind === "input") {
          const input = el("input", {
            class: "field",
            name: element.name,
            type: element.name === "password" ? "password" : "text",
            input: (event) => {
              values[element.name] = event.target.value;
            }
          });
          body.append(el(
            "label",
            { class: "field-row" },
            `${element.label} `,
            input,
            el("span", { class: "field-error", "data-for": element.name }, "")
          ));
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
            for (const span of body.querySelectorAll(".field-error")) {
              span.textContent = error.fields[span.getAttribute("data-for") ?? ""] ?? "";
            }
            status.textContent = error.message;
          } else {
            this.handleSessionError(error);
          }
        }
      };
      this.swap(
        el(
          "header",
          {},
          el("h1", {}, `New ${name}`),
          el("button", { class: "home", click: () => void this.showHome() }, "Back to menu")
        ),
        body,
        status,
        el("button", { class: "save", click: () => void save() }, "Save")
      );
    }
    // -- shared error handling --------------------------------------------------------
    handleSessionError(error) {
      if (error instanceof ApiError && error.status === 401) {
        this.showLogin("Your session ended; sign in again.");
        return;
      }
      const message = error instanceof Error ? error.message : String(error);
      this.root.prepend(this.banner("error", message));
    }
  };

  // src/main.ts
  var root = document.getElementById("app");
  if (!root) throw new Error("missing #app mount point");
  new App(new Api(""), root).start();
})();
