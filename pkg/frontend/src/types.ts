// Wire format of the workflow server. Everything here mirrors the JSON the
// server actually sends; the client adds no shapes of its own on top.

export type BuiltinType =
  | "String"
  | "Text"
  | "Email"
  | "Date"
  | "Int"
  | "Decimal"
  | "Bool";

export interface HeadingElement {
  kind: "heading";
  level: number;
  text: string;
}

export interface TextElement {
  kind: "text";
  text: string;
}

export interface OutputElement {
  kind: "output";
  label: string;
  value: string;
}

export interface InputElement {
  kind: "input";
  name: string; // submission key, e.g. "t.grade2"
  label: string;
  type: BuiltinType;
  value: string;
}

export interface TableRow {
  id: string;
  cells: string[];
}

export interface TableElement {
  kind: "table";
  param: string;
  selectable: boolean;
  columns: string[];
  rows: TableRow[];
}

export type PageElement =
  | HeadingElement
  | TextElement
  | OutputElement
  | InputElement
  | TableElement;

// GET /action/{id} and the body behind a followed 303.
export interface ActionDoc {
  instance: string;
  action: string;
  page: string;
  elements: PageElement[];
  decisions: string[];
  fields: Record<string, string>;
}

export interface StaticPageDoc {
  page: string;
  elements: PageElement[];
}

export interface MenuEntry {
  kind: "page" | "activity" | "list" | "create";
  name: string;
  render?: StaticPageDoc;
}

export interface MenuDoc {
  application: string;
  entries: MenuEntry[];
  notifications: string[];
}

export interface TaskDoc {
  instance: string;
  activity: string;
  action: string;
  actionId: string;
}

export interface SessionUser {
  id: string;
  class: string;
  name: string;
  role: string;
}

export interface LoginDoc {
  token: string;
  user: SessionUser;
}

// GET /class/{C} and GET /class/{C}/new reuse page elements so the same
// renderer draws them.
export interface ClassListDoc {
  class: string;
  elements: PageElement[];
  ids: string[];
}

export interface ObjectDoc {
  class: string;
  id: string;
  values: Record<string, string>;
  links: Record<string, string[]>;
  elements?: PageElement[];
  fields?: Record<string, string>;
}

export interface ErrorDoc {
  error: string;
  message: string;
  fields: Record<string, string>;
}

export interface FinishedDoc {
  status: "finished";
  instance: string;
}
