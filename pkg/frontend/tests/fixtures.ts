// Action documents captured from a live server run of the bundled example.

import type { ActionDoc } from "../src/types";

export const SELECT_REF_DOC: ActionDoc = {
  instance: "ufoy6",
  action: "AssignRef2",
  page: "SelectSecondaryRef",
  elements: [
    { kind: "heading", level: 1, text: "Select the second referee" },
    { kind: "text", text: "The selected staff member will grade the thesis after you." },
    {
      kind: "table",
      param: "staff",
      selectable: true,
      columns: ["name", "email"],
      rows: [
        { id: "gmx1t", cells: ["Referee One", "ref1@example.org"] },
        { id: "f3a7n", cells: ["Referee Two", "ref2@example.org"] },
      ],
    },
  ],
  decisions: [],
  fields: {},
};

export const SET_GRADE2_DOC: ActionDoc = {
  instance: "ufoy6",
  action: "SetGrade2",
  page: "SetGrade2Page",
  elements: [
    { kind: "heading", level: 1, text: "Second grading" },
    { kind: "output", label: "title", value: "On Parsers" },
    { kind: "output", label: "grade1", value: "1.3" },
    { kind: "input", name: "t.grade2", label: "grade2", type: "Decimal", value: "" },
  ],
  decisions: ["SaveAndNotify", "Save"],
  fields: { "t.grade2": "Decimal" },
};
