from __future__ import annotations

import json
import signal
import socket
import subprocess
import sys
import time
from pathlib import Path

import httpx
import pytest

from storyhost.cli import main
from storyhost.events import read_log

PACKAGE_DOC = {
    "schema_version": 1,
    "character": {
        "name": "Vala",
        "personality": "A wry courier who answers plainly.",
        "worldview": "A rain-soaked port town of canals and cranes.",
        "canon_facts": [],
    },
    "start": "n0",
    "warmup_days": 1,
    "nodes": {
        "n0": {"day_index": 0, "body": "Day zero. The job arrives.",
               "summary": "The courier took a mysterious job.", "successor": "n1"},
        "n1": {"day_index": 1, "body": "A fork in the canal.",
               "summary": "The courier reached a fork.",
               "choices": [
                   {"emoji": "⬅️", "caption": "west", "target": "end-west"},
                   {"emoji": "➡️", "caption": "east", "target": "end-east"},
               ]},
        "end-west": {"day_index": 2, "body": "West: quiet.", "terminal": True},
        "end-east": {"day_index": 2, "body": "East: loud.", "terminal": True},
    },
}

SCRIPT_DOC = {
    "schema_version": 1,
    "day_seconds": 2.0,
    "filter_keywords": ["crap"],
    "agents": [
        {"user_id": "ann", "actions": [
            {"day": 0, "offset": 0.2, "type": "chat", "text": "hello"},
            {"day": 1, "offset": 0.3, "type": "vote", "choice": 1},
        ]},
        {"user_id": "bob", "actions": [
            {"day": 1, "offset": 0.4, "type": "vote", "choice": 1},
        ]},
    ],
}


@pytest.fixture
def package_path(tmp_path) -> Path:
    path = tmp_path / "pkg.json"
    path.write_text(json.dumps(PACKAGE_DOC), encoding="utf-8")
    return path


@pytest.fixture
def script_path(tmp_path) -> Path:
    path = tmp_path / "script.json"
    path.write_text(json.dumps(SCRIPT_DOC), encoding="utf-8")
    return path


def test_validate_ok(package_path, capsys):
    assert main(["validate", str(package_path)]) == 0
    assert "ok (4 nodes)" in capsys.readouterr().out


def test_validate_reports_defects(tmp_path, capsys):
    doc = json.loads(json.dumps(PACKAGE_DOC))
    doc["nodes"]["n1"]["choices"][1]["target"] = "nowhere"
    path = tmp_path / "broken.json"
    path.write_text(json.dumps(doc), encoding="utf-8")
    assert main(["validate", str(path)]) == 1
    captured = capsys.readouterr()
    assert "dangling-target" in captured.out
    assert "defect(s) found" in captured.err


def test_validate_unreadable_package(tmp_path, capsys):
    bad = tmp_path / "bad.json"
    bad.write_text("{not json", encoding="utf-8")
    assert main(["validate", str(bad)]) == 2
    assert "error:" in capsys.readouterr().err
    assert main(["validate", str(tmp_path / "missing.json")]) == 2


def test_simulate_happy_path(package_path, script_path, tmp_path, capsys):
    out = tmp_path / "run.ndjson"
    assert main(["simulate", str(package_path), str(script_path),
                 "--out", str(out)]) == 0
    printed = capsys.readouterr().out
    assert "simulation complete: released n0 -> n1 -> end-east" in printed
    assert f"log written to {out}" in printed
    assert '"total_votes": 2' in printed
    assert "avg votes per day" in printed
    kinds = [r["kind"] for r in read_log(out)]
    assert kinds.count("story_release") == 2


def test_simulate_same_seed_is_byte_identical(package_path, script_path, tmp_path):
    a, b = tmp_path / "a.ndjson", tmp_path / "b.ndjson"
    assert main(["simulate", str(package_path), str(script_path),
                 "--seed", "5", "--out", str(a)]) == 0
    assert main(["simulate", str(package_path), str(script_path),
                 "--seed", "5", "--out", str(b)]) == 0
    assert a.read_bytes() == b.read_bytes()


def test_simulate_overwrites_stale_log(package_path, script_path, tmp_path):
    out = tmp_path / "run.ndjson"
    out.write_text("stale junk\n", encoding="utf-8")
    assert main(["simulate", str(package_path), str(script_path),
                 "--out", str(out)]) == 0
    assert "stale junk" not in out.read_text(encoding="utf-8")


def test_simulate_rejects_defective_package(tmp_path, script_path, capsys):
    doc = json.loads(json.dumps(PACKAGE_DOC))
    del doc["nodes"]["end-east"]
    path = tmp_path / "broken.json"
    path.write_text(json.dumps(doc), encoding="utf-8")
    assert main(["simulate", str(path), str(script_path)]) == 1
    assert "dangling-target" in capsys.readouterr().err


def test_simulate_bad_script(package_path, tmp_path, capsys):
    missing = tmp_path / "nope.json"
    assert main(["simulate", str(package_path), str(missing)]) == 2

    bad_schema = tmp_path / "bad.json"
    bad_schema.write_text(json.dumps({"schema_version": 9}), encoding="utf-8")
    assert main(["simulate", str(package_path), str(bad_schema)]) == 1
    assert "schema_version" in capsys.readouterr().err


def test_metrics_reads_simulation_log(package_path, script_path, tmp_path, capsys):
    out = tmp_path / "run.ndjson"
    main(["simulate", str(package_path), str(script_path), "--out", str(out)])
    capsys.readouterr()
    assert main(["metrics", str(out), "--community-total", "10"]) == 0
    printed = capsys.readouterr().out
    report = json.loads(printed[:printed.rindex("}") + 1])
    assert report["total_messages"] == 1
    assert report["total_votes"] == 2
    assert report["channel_share"] == pytest.approx(0.1)
    assert "channel share" in printed


def test_metrics_missing_or_incompatible_log(tmp_path, capsys):
    assert main(["metrics", str(tmp_path / "missing.ndjson")]) == 2
    headerless = tmp_path / "headerless.ndjson"
    headerless.write_text('{"ts": 1, "kind": "chat"}\n', encoding="utf-8")
    assert main(["metrics", str(headerless)]) == 2
    assert "error" in capsys.readouterr().err


# --- the serve command, exercised as a real process ------------------------


def free_port() -> int:
    with socket.socket() as sock:
        sock.bind(("127.0.0.1", 0))
        return sock.getsockname()[1]


def wait_for_health(base: str, deadline: float = 15.0) -> None:
    cutoff = time.time() + deadline
    while time.time() < cutoff:
        try:
            if httpx.get(f"{base}/healthz", timeout=1.0).status_code == 200:
                return
        except httpx.HTTPError:
            time.sleep(0.1)
    raise RuntimeError(f"{base} never became healthy")


@pytest.fixture
def serve_config(tmp_path) -> Path:
    path = tmp_path / "serve.json"
    path.write_text(json.dumps({
        "filter_keywords": ["crap"],
        "day_seconds": 60.0,
        "provider": {"kind": "scripted", "default_reply": "Noted."},
    }), encoding="utf-8")
    return path


def test_serve_round_trip(package_path, serve_config, tmp_path):
    port = free_port()
    log_path = tmp_path / "serve.ndjson"
    proc = subprocess.Popen(
        [sys.executable, "-m", "storyhost", "serve", str(package_path),
         "--config", str(serve_config), "--port", str(port),
         "--log", str(log_path), "--virtual-clock", "--tick-interval", "0.05"],
        stdout=subprocess.PIPE, stderr=subprocess.PIPE)
    base = f"http://127.0.0.1:{port}"
    try:
        wait_for_health(base)
        token = httpx.post(f"{base}/join", json={}).json()["token"]
        chat = httpx.post(f"{base}/chat", json={"text": "hello"},
                          headers={"X-User-Token": token}).json()
        assert chat["reply"] == "Noted."
        jumped = httpx.post(f"{base}/admin/clock",
                            json={"virtual_now": 60.0}).json()
        assert jumped["released"] == ["n1"]
        vote = httpx.post(f"{base}/story/vote", json={"choice_index": 0},
                          headers={"X-User-Token": token}).json()
        assert vote["voters"] == 1
    finally:
        proc.send_signal(signal.SIGTERM)
        proc.wait(timeout=15)
    # The log survives shutdown and reads back as a coherent record stream.
    kinds = [r["kind"] for r in read_log(log_path)]
    assert kinds[0] == "engine_start"
    assert "chat" in kinds and "vote" in kinds and "story_release" in kinds


def test_serve_refuses_taken_port(package_path, serve_config, tmp_path):
    with socket.socket() as sock:
        sock.bind(("127.0.0.1", 0))
        sock.listen(1)
        port = sock.getsockname()[1]
        proc = subprocess.run(
            [sys.executable, "-m", "storyhost", "serve", str(package_path),
             "--config", str(serve_config), "--port", str(port),
             "--log", str(tmp_path / "x.ndjson")],
            capture_output=True, text=True, timeout=30)
    assert proc.returncode == 2
    assert "already in use" in proc.stderr


def test_serve_clues_round_trip(tmp_path):
    corpus_path = tmp_path / "clues.json"
    corpus_path.write_text(json.dumps([
        {"id": "domain", "keyword": "information about Domain",
         "reply_text": "Domain is the quiet part said loud."},
    ]), encoding="utf-8")
    port = free_port()
    proc = subprocess.Popen(
        [sys.executable, "-m", "storyhost", "serve-clues", str(corpus_path),
         "--port", str(port)],
        stdout=subprocess.PIPE, stderr=subprocess.PIPE)
    base = f"http://127.0.0.1:{port}"
    try:
        wait_for_health(base)
        hit = httpx.post(f"{base}/match",
                         json={"sentence": "any information about Domain?"}).json()
        assert hit["id"] == "domain"
    finally:
        proc.send_signal(signal.SIGTERM)
        proc.wait(timeout=15)
