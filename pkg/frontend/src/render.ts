// Pure view-model for descriptor-driven forms: what to draw, which fields are
// editable, whether the form may be submitted. No DOM in here.

import type { ActionDoc, BuiltinType, InputElement, PageElement, TableElement } from "./types";

export interface FormState {
  values: Record<string, string>; // field name -> current text
  selection: string | null; // selected row id of the selectable table
}

export function initialState(doc: { elements: PageElement[] }): FormState {
  const values: Record<string, string> = {};
  for (const element of doc.elements) {
    if (element.kind === "input") values[element.name] = element.value;
  }
  return { values, selection: null };
}

export function editableFields(doc: { elements: PageElement[] }): InputElement[] {
  return doc.elements.filter((e): e is InputElement => e.kind === "input");
}

export function selectableTable(doc: { elements: PageElement[] }): TableElement | null {
  for (const element of doc.elements) {
    if (element.kind === "table" && element.selectable) return element;
  }
  return null;
}

export function unknownElementKinds(doc: { elements: PageElement[] }): string[] {
  const known = new Set(["heading", "text", "output", "input", "table"]);
  const seen: string[] = [];
  for (const element of doc.elements) {
    const kind = (element as { kind: string }).kind;
    if (!known.has(kind) && !seen.includes(kind)) seen.push(kind);
  }
  return seen;
}

const INT_RE = /^-?\d+$/;
const DECIMAL_RE = /^-?\d+(\.\d+)?$/;
const DATE_RE = /^\d{4}-\d{2}-\d{2}$/;
const EMAIL_RE = /^[^\s@]+@[^\s@]+\.[^\s@]+$/;

// Empty text is always acceptable: the server stores it as "unset" and
// enforces its own required rules.
export function fieldError(type: BuiltinType, text: string): string | null {
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
      const real =
        date.getUTCFullYear() === y && date.getUTCMonth() === m - 1 && date.getUTCDate() === d;
      return real ? null : "not a real calendar date";
    }
    case "Email":
      return EMAIL_RE.test(text) ? null : "must be an address like a@b.org";
  }
}

export function fieldErrors(
  doc: { elements: PageElement[] },
  state: FormState,
): Record<string, string> {
  const problems: Record<string, string> = {};
  for (const field of editableFields(doc)) {
    const error = fieldError(field.type, state.values[field.name] ?? "");
    if (error) problems[field.name] = error;
  }
  return problems;
}

// Submit stays disabled until every field parses and a selectable table has a
// chosen row.
export function canSubmit(doc: { elements: PageElement[] }, state: FormState): boolean {
  if (Object.keys(fieldErrors(doc, state)).length > 0) return false;
  const table = selectableTable(doc);
  if (table && table.rows.length > 0 && state.selection === null) return false;
  return true;
}

export function submissionBody(
  doc: ActionDoc,
  state: FormState,
  decision: string | null,
): Record<string, string> {
  const body: Record<string, string> = {};
  for (const field of editableFields(doc)) {
    body[field.name] = state.values[field.name] ?? "";
  }
  if (selectableTable(doc) && state.selection !== null) {
    body["_selection"] = state.selection;
  }
  if (decision !== null) body["_decision"] = decision;
  return body;
}
