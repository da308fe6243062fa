"""Bundled example: a two-referee thesis grading office.

Used by ``wisflow init`` to scaffold a model directory and by the test suite
as a known-good system. The first referee picks the second one, both enter
their grades, and the second referee decides whether saving the result also
notifies the participants.
"""

from __future__ import annotations

import json
from pathlib import Path

CLASS_MODEL = """\
classdiagram Thesis {

  class Staff <<user>> {
    login: String;
    password: String;
    name: String;
    email: Email;
    role: String;
  }

  class ThesisData {
    title: String;
    grade1: Decimal;
    grade2: Decimal;
    -> primaryRef: Staff (one);
    -> secondaryRef: Staff (one);
  }
}
"""

ACTIVITY = """\
activity GradeThesis {

  role Referee1 { AssignRef2, SetGrade1 }
  role Referee2 { SetGrade2, Saved }

  action AssignRef2 {
    out : ThesisData o;
    var : Set<Staff> allStaff, Staff actualUser, Staff selectedUser;

    cmd : allStaff = Staff.loadAll();
    cmd : actualUser = getActualUser();
    view : SelectSecondaryRef(allStaff);
    java : {
      selectedUser = allStaff.iterator().next();
      o = new ThesisData();
      o.setPrimaryRef(actualUser);
      o.setSecondaryRef(selectedUser);
    }
    cmd : assignRole(Referee2, selectedUser)
  }

  action SetGrade1 {
    in : ThesisData i;
    out : ThesisData o;

    view : SetGrade1Page(i);
    java : {
      o = i;
    }
  }

  action SetGrade2 {
    in : ThesisData i;
    out : ThesisData o;

    view : SetGrade2Page(i);
    java : {
      o = i;
    }
  }

  action SaveAndNotify {
    in : ThesisData i;
    out : ThesisData o;

    cmd : save(i);
    cmd : notify("Thesis grading completed.");
    java : {
      o = i;
    }
  }

  action Save {
    in : ThesisData i;
    out : ThesisData o;

    cmd : save(i);
    java : {
      o = i;
    }
  }

  action Saved {
    in : ThesisData i;

    view : SavedPage(i);
  }

  initial -> AssignRef2;
  AssignRef2.o -> SetGrade1.i;
  SetGrade1.o -> SetGrade2.i;
  SetGrade2.o -> SaveAndNotify.i | Save.i;
  SaveAndNotify.o -> Saved.i;
  Save.o -> Saved.i;
  Saved -> final;
}
"""

PAGE_SELECT_REF = """\
page SelectSecondaryRef(Set<Staff> staff) {
  heading1 "Select the second referee";
  text "The selected staff member will grade the thesis after you.";
  table staff selectable (name, email);
}
"""

PAGE_SET_GRADE1 = """\
page SetGrade1Page(ThesisData t) {
  heading1 "First grading";
  input t.title;
  input t.grade1;
}
"""

PAGE_SET_GRADE2 = """\
page SetGrade2Page(ThesisData t) {
  heading1 "Second grading";
  output t.title;
  output t.grade1;
  input t.grade2;
}
"""

PAGE_SAVED = """\
page SavedPage(ThesisData t) {
  heading1 "Grading saved";
  text "Submit to finish the workflow.";
  output t.title;
  output t.grade1;
  output t.grade2;
}
"""

PAGE_WELCOME = """\
page Welcome() {
  heading1 "Thesis office";
  text "Start the grading workflow from the menu.";
}
"""

APP = """\
application ThesisOffice {
  roles { lecturer, admin }

  menu {
    page Welcome;
    activity GradeThesis;
    list ThesisData;
    list Staff;
    create Staff;
  }

  rights {
    allow lecturer: activity GradeThesis, list ThesisData, list Staff;
    allow admin: list Staff, create Staff;
  }
}
"""

SEED = {
    "Staff": [
        {
            "login": "ref1",
            "password": "ref1pw",
            "name": "Referee One",
            "email": "ref1@example.org",
            "role": "lecturer",
        },
        {
            "login": "ref2",
            "password": "ref2pw",
            "name": "Referee Two",
            "email": "ref2@example.org",
            "role": "lecturer",
        },
    ]
}

FILES = {
    "thesis.cd": CLASS_MODEL,
    "gradethesis.act": ACTIVITY,
    "selectsecondaryref.page": PAGE_SELECT_REF,
    "setgrade1page.page": PAGE_SET_GRADE1,
    "setgrade2page.page": PAGE_SET_GRADE2,
    "savedpage.page": PAGE_SAVED,
    "welcome.page": PAGE_WELCOME,
    "thesisoffice.app": APP,
}


def write_example(directory: str | Path) -> list[Path]:
    """Write the example model files plus seed data into ``directory``."""
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    written = []
    for name, content in FILES.items():
        path = directory / name
        path.write_text(content, encoding="utf-8")
        written.append(path)
    seed_path = directory / "seed.json"
    seed_path.write_text(json.dumps(SEED, indent=2) + "\n", encoding="utf-8")
    written.append(seed_path)
    return written
