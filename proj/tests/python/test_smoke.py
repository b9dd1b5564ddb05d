"""Smoke tests for the judgekit extension module."""

import json
import os
import pathlib

import pytest

import judgekit


SOURCE_DIR = pathlib.Path(os.environ["JUDGEKIT_SOURCE_DIR"])


def make_sample(**overrides):
    sample = {
        "id": "py-1",
        "source": "arena",
        "language": "ko",
        "joshi_class": 4,
        "format": {"kind": "pairwise", "score_labels": ["Assistant A", "Assistant B"]},
        "instruction": "Judge which assistant answered better.",
        "input": "처형이란 무엇인가?",
        "responses": ["첫 번째 응답", "두 번째 응답"],
        "rubric_key": "default",
        "gold_score": "Assistant B",
        "token_length": 24,
        "metadata": {},
    }
    sample.update(overrides)
    return sample


def test_render_prompt_languages():
    assets = str(SOURCE_DIR / "assets")
    eng = json.loads(
        judgekit.render_prompt(json.dumps(make_sample()), "eng_eng", assets)
    )
    tgt = json.loads(
        judgekit.render_prompt(json.dumps(make_sample()), "tgt_eng", assets)
    )
    assert eng["prompt_language"] == "en"
    assert tgt["prompt_language"] == "ko"
    assert tgt["thinking_language"] == "en"
    assert "처형이란 무엇인가?" in eng["user_message"]
    assert "처형이란 무엇인가?" in tgt["user_message"]
    assert eng["user_message"].startswith("# ")
    assert not eng["user_message"].endswith("\n")


def test_split_parse_round_trip():
    raw = '<think>\nbecause reasons\n</think>\n{"explanation": "fine", "score": "Assistant B"}'
    split = json.loads(judgekit.split_reasoning(raw))
    assert split["had_think_block"]
    assert split["trace"] == "\nbecause reasons\n"
    fmt = json.dumps({"kind": "pairwise", "score_labels": ["Assistant A", "Assistant B"]})
    verdict = json.loads(judgekit.parse_verdict(split["answer_region"], fmt))
    assert verdict["score"] == "Assistant B"
    assert judgekit.grade(json.dumps(verdict), "Assistant B", fmt)
    rendered = judgekit.render_verdict(json.dumps(verdict))
    again = json.loads(judgekit.parse_verdict(rendered, fmt))
    assert again["score"] == "Assistant B"


def test_parse_verdict_raises_on_garbage():
    fmt = json.dumps({"kind": "binary", "score_labels": ["true", "false"]})
    with pytest.raises(ValueError, match="no_json_found"):
        judgekit.parse_verdict("no object here", fmt)


def test_select_final_counts():
    pool = []
    for i in range(30):
        pool.append(
            {
                "sample": make_sample(id=f"m{100 + i}", language="en"),
                "band": i % 3,
            }
        )
    for i in range(50):
        pool.append(
            {"sample": make_sample(id=f"t{100 + i}", language="en"), "band": 3}
        )
    for i in range(50):
        pool.append(
            {"sample": make_sample(id=f"f{100 + i}", language="en"), "band": 4}
        )
    policy = {"banded_sources": ["arena"], "target_size": 60, "strict": True}
    result = json.loads(
        judgekit.select_final(json.dumps(pool), json.dumps(policy), seed=2024)
    )
    assert result["mandatory_count"] == 30
    assert len(result["selected"]) == 60
    assert result["band3_draws"] + result["band4_draws"] == 30
    replay = json.loads(
        judgekit.select_final(json.dumps(pool), json.dumps(policy), seed=2024)
    )
    assert replay == result


def test_order_curriculum_permutation():
    keys = [
        {"id": f"k{i}", "correctness": i % 6, "token_length": (i * 37) % 100, "is_english": i % 2 == 0}
        for i in range(40)
    ]
    for name in judgekit.curricula():
        order = judgekit.order_curriculum(json.dumps(keys), name, 7)
        assert sorted(order) == list(range(40))
    e2h = judgekit.order_curriculum(json.dumps(keys), "easy_to_hard", 7)
    bands = [keys[i]["correctness"] for i in e2h]
    assert bands == sorted(bands, reverse=True)


def test_accuracy_and_rounding():
    results = []
    for group, (correct, total) in {
        "a": (9274, 10000),
        "b": (7675, 10000),
        "c": (8676, 10000),
        "d": (9464, 10000),
    }.items():
        for i in range(total):
            results.append(
                {
                    "sample_id": f"{group}-{i}",
                    "predicted": "x" if i < correct else "y",
                    "gold": "x",
                    "correct": i < correct,
                    "groups": {"category": group},
                    "trace": "",
                    "error": "",
                }
            )
    table = json.loads(
        judgekit.accuracy(json.dumps(results), "category", "category_mean")
    )
    assert judgekit.round_half_up_2(table["overall"] * 100) == "87.72"
    assert judgekit.round_half_up_2(0.125) == "0.13"
    assert judgekit.round_half_up_2(-1.234) == "-1.23"


def test_stage_names_and_dry_run(tmp_path):
    names = judgekit.stage_names()
    assert "select" in names and "eval" in names
    manifest = {
        "stage": "select",
        "seed": 9,
        "inputs": {"pool": "pool.jsonl"},
        "outputs": {"selected": "out/selected.jsonl"},
    }
    path = tmp_path / "manifest.json"
    path.write_text(json.dumps(manifest))
    plan = json.loads(judgekit.run_stage(str(path), dry_run=True))
    assert plan["stage"] == "select"
    assert plan["seed"] == 9
    assert plan["dry_run"] is True
    assert not (tmp_path / "out").exists()


def test_cli_help():
    code, out, err = judgekit.main(["--help"])
    assert code == 0
    for name in judgekit.stage_names():
        assert name in out
    code, _, err = judgekit.main(["frobnicate"])
    assert code == 2
    assert "frobnicate" in err
