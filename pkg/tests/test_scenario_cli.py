"""Scenario validation and the command-line front end."""

import copy
import json

from learnmesh.cli import main
from learnmesh.metrics import parse_trace
from learnmesh.scenario import parse_scenario, scenario_diagnostics


def base_doc():
    return {
        "name": "mini",
        "ticks": 12,
        "area": {"width": 40, "height": 30},
        "exchange_budget": 20,
        "nodes": [
            {
                "id": "s1",
                "role": "staff",
                "interests": ["algebra"],
                "radio_range": 25,
                "speed": [0, 0],
                "pause": [0, 0],
                "position": [20, 15],
                "budget": 100,
            },
            {
                "id": "a",
                "role": "student",
                "interests": ["algebra"],
                "radio_range": 20,
                "speed": [1, 2],
                "pause": [0, 1],
            },
            {
                "id": "b",
                "role": "student",
                "interests": ["algebra"],
                "radio_range": 20,
                "speed": [1, 2],
                "pause": [0, 1],
            },
        ],
        "catalog": {
            "materials": [
                {"id": "m1", "origin": "s1", "topics": ["algebra"], "size": 2}
            ],
            "components": [
                {"id": "comp", "origin": "s1", "renders": "multiple-choice"}
            ],
            "questions": [
                {
                    "id": "q1",
                    "origin": "s1",
                    "qtype": "multiple-choice",
                    "anchors": ["m1"],
                    "component": "comp",
                }
            ],
            "links": [],
            "annotations": [],
            "evaluations": [],
            "courses": [
                {
                    "id": "crs",
                    "origin": "s1",
                    "members": ["q1"],
                    "program": [{"kind": "free"}],
                }
            ],
        },
        "initial_stores": {"s1": ["m1", "comp", "q1", "crs"]},
        "lectures": [
            {"tick": 0, "staff": "s1", "material": "m1", "attendees": ["a"]}
        ],
        "quiz": {
            "deadline": 8,
            "base_points": 100,
            "joker_limit": 1,
            "joker_rate": 0.0,
            "players": ["a", "b"],
            "course": "crs",
        },
    }


def doc_with(**overrides):
    doc = copy.deepcopy(base_doc())
    doc.update(overrides)
    return doc


class TestValidation:
    def test_well_formed_document_passes(self):
        assert scenario_diagnostics(base_doc()) == []
        assert parse_scenario(base_doc()) is not None

    def test_unknown_course_member_named_in_diagnostic(self):
        doc = base_doc()
        doc["catalog"]["courses"][0]["members"] = ["q1", "ghost"]
        diags = scenario_diagnostics(doc)
        assert any("ghost" in d for d in diags)

    def test_negative_radio_range(self):
        doc = base_doc()
        doc["nodes"][1]["radio_range"] = -5
        assert any("radio_range" in d for d in scenario_diagnostics(doc))

    def test_quiz_deadline_must_precede_horizon(self):
        doc = base_doc()
        doc["quiz"]["deadline"] = 12
        assert any("deadline" in d for d in scenario_diagnostics(doc))

    def test_identifier_charset_enforced(self):
        doc = base_doc()
        doc["nodes"][1]["interests"] = ["al gebra"]
        assert scenario_diagnostics(doc)

    def test_component_must_render_question_type(self):
        doc = base_doc()
        doc["catalog"]["questions"][0]["qtype"] = "gap-text"
        diags = scenario_diagnostics(doc)
        assert any("render" in d for d in diags)

    def test_course_members_must_be_questions(self):
        doc = base_doc()
        doc["catalog"]["courses"][0]["members"] = ["m1"]
        assert any("members" in d for d in scenario_diagnostics(doc))

    def test_staff_needs_backbone(self):
        doc = base_doc()
        doc["nodes"][0]["backbone"] = False
        assert any("backbone" in d for d in scenario_diagnostics(doc))

    def test_initial_store_must_use_known_ids(self):
        doc = base_doc()
        doc["initial_stores"]["s1"].append("nothing")
        assert any("nothing" in d for d in scenario_diagnostics(doc))

    def test_program_member_scope_checked(self):
        doc = base_doc()
        doc["catalog"]["courses"][0]["program"] = [
            {"kind": "ordering", "chains": [["q1", "m1"]], "forced": []}
        ]
        assert any("member" in d for d in scenario_diagnostics(doc))

    def test_quiz_player_must_be_student_node(self):
        doc = base_doc()
        doc["quiz"]["players"] = ["a", "zz"]
        assert any("zz" in d for d in scenario_diagnostics(doc))

    def test_diagnostics_accumulate(self):
        doc = base_doc()
        doc["nodes"][1]["radio_range"] = -5
        doc["quiz"]["deadline"] = 50
        assert len(scenario_diagnostics(doc)) >= 2


class TestCli:
    def write_doc(self, tmp_path, doc, name="scn.json"):
        path = tmp_path / name
        path.write_text(json.dumps(doc))
        return str(path)

    def test_validate_ok(self, tmp_path, capsys):
        path = self.write_doc(tmp_path, base_doc())
        assert main(["validate", path]) == 0
        assert capsys.readouterr().out.strip() == "ok"

    def test_validate_failure_lists_diagnostics(self, tmp_path, capsys):
        doc = base_doc()
        doc["nodes"][1]["radio_range"] = -5
        path = self.write_doc(tmp_path, doc)
        assert main(["validate", path]) == 1
        assert "radio_range" in capsys.readouterr().err

    def test_missing_scenario_file_nonzero_no_outputs(self, tmp_path, capsys):
        out = tmp_path / "out"
        code = main(
            ["run", "--scenario", str(tmp_path / "absent.json"),
             "--seed", "1", "--out", str(out)]
        )
        assert code != 0
        assert not out.exists()

    def test_run_writes_all_outputs(self, tmp_path):
        path = self.write_doc(tmp_path, base_doc())
        out = tmp_path / "out"
        assert main(["run", "--scenario", path, "--seed", "3",
                     "--out", str(out)]) == 0
        names = sorted(p.name for p in out.iterdir())
        assert names == ["metrics.csv", "metrics.json", "ranking.csv", "trace.tsv"]
        meta, records = parse_trace((out / "trace.tsv").read_text())
        assert meta.seed == 3
        assert records[-1].kind == "end"

    def test_format_json_only(self, tmp_path):
        path = self.write_doc(tmp_path, base_doc())
        out = tmp_path / "outj"
        assert main(["run", "--scenario", path, "--seed", "3", "--out",
                     str(out), "--format", "json"]) == 0
        names = sorted(p.name for p in out.iterdir())
        assert "metrics.json" in names and "metrics.csv" not in names
        json.loads((out / "metrics.json").read_text())  # must be one document

    def test_seed_sweep_writes_subdirs(self, tmp_path):
        path = self.write_doc(tmp_path, base_doc())
        out = tmp_path / "sweep"
        assert main(["run", "--scenario", path, "--seeds", "4..6",
                     "--out", str(out), "--format", "csv"]) == 0
        assert sorted(p.name for p in out.iterdir()) == [
            "seed-4", "seed-5", "seed-6"
        ]

    def test_ticks_override_conflicting_with_deadline(self, tmp_path, capsys):
        path = self.write_doc(tmp_path, base_doc())
        assert main(["run", "--scenario", path, "--seed", "1", "--ticks", "5",
                     "--out", str(tmp_path / "x")]) == 1
        assert "deadline" in capsys.readouterr().err

    def test_missing_seed_is_usage_error(self, tmp_path):
        path = self.write_doc(tmp_path, base_doc())
        assert main(["run", "--scenario", path,
                     "--out", str(tmp_path / "y")]) == 2

    def test_report_round_trips_run_metrics(self, tmp_path, capsys):
        path = self.write_doc(tmp_path, base_doc())
        out = tmp_path / "rt"
        main(["run", "--scenario", path, "--seed", "5", "--out", str(out)])
        assert main(["report", str(out / "trace.tsv")]) == 0
        replayed = capsys.readouterr().out
        assert replayed == (out / "metrics.csv").read_text()

    def test_report_rejects_truncated_trace(self, tmp_path, capsys):
        path = self.write_doc(tmp_path, base_doc())
        out = tmp_path / "trunc"
        main(["run", "--scenario", path, "--seed", "5", "--out", str(out)])
        text = (out / "trace.tsv").read_text()
        clipped = tmp_path / "clipped.tsv"
        clipped.write_text(text[: len(text) // 2])
        assert main(["report", str(clipped)]) == 2
        assert "truncated" in capsys.readouterr().err.lower()

    def test_report_on_corrupted_line_names_line_number(self, tmp_path, capsys):
        path = self.write_doc(tmp_path, base_doc())
        out = tmp_path / "corrupt"
        main(["run", "--scenario", path, "--seed", "5", "--out", str(out)])
        lines = (out / "trace.tsv").read_text().splitlines()
        lines[10] = "garbage without tabs"
        bad = tmp_path / "bad.tsv"
        bad.write_text("\n".join(lines) + "\n")
        assert main(["report", str(bad)]) == 2
        assert "11" in capsys.readouterr().err

    def test_byte_identical_across_invocations(self, tmp_path):
        path = self.write_doc(tmp_path, base_doc())
        outs = []
        for name in ("r1", "r2"):
            out = tmp_path / name
            main(["run", "--scenario", path, "--seed", "7", "--out", str(out)])
            outs.append(
                {
                    p.name: p.read_bytes()
                    for p in out.iterdir()
                }
            )
        assert outs[0] == outs[1]
