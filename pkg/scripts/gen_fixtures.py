#!/usr/bin/env python3
"""Regenerate the bundled test fixtures and golden pipeline outputs.

Everything here is seeded and deterministic. Run from the repo root:

    python scripts/gen_fixtures.py

Outputs land in tests/fixtures/ (pipeline inputs) and tests/golden/pipeline/
(expected stage outputs). The pipeline is executed twice and compared to
guarantee the goldens themselves are reproducible.
"""

from __future__ import annotations

import filecmp
import json
import random
import shutil
import sys
from pathlib import Path

ROOT = Path(__file__).resolve().parent.parent
sys.path.insert(0, str(ROOT / "src"))

from cantolex import annotation, llm  # noqa: E402
from cantolex.cli import main as cli_main  # noqa: E402
from cantolex.lexicon import DIMENSION_SET  # noqa: E402
from cantolex.service import SessionStore, load_assignment_manifest  # noqa: E402

FIXTURES = ROOT / "tests" / "fixtures"
GOLDEN = ROOT / "tests" / "golden" / "pipeline"

DICTIONARY = {
    "開心": "a", "嬲": "a", "好食": "a", "正": "a", "靚": "a", "勁": "a",
    "差": "a", "伏": "a", "無聊": "a", "嘔心": "a", "核突": "a", "興奮": "a",
    "失望": "an", "驚": "v", "喊": "v", "笑": "v", "擔心": "v", "討厭": "v",
    "鍾意": "v", "憎": "v", "期待": "v", "係": "v", "開": "v",
    "一流": "i", "獲益良多": "i", "信得過": "l", "估唔到": "l", "麻麻地": "z",
    "餐廳": "n", "電影": "n", "老闆": "n", "嘢食": "n", "戲院": "n", "香港": "ns",
    "好": "d", "唔": "d", "咗": "u", "嘅": "u", "心": "n",
}

EMOTION_WORDS = [w for w, p in DICTIONARY.items() if p in
                 {"a", "ad", "ag", "an", "b", "g", "h", "i", "j", "l", "q", "v", "vn", "z"}]

NEUTRAL_FILLER = ["餐廳", "電影", "老闆", "嘢食", "戲院", "香港", "好", "唔", "咗", "嘅"]

# what the scripted endpoint "believes" about each word; 無聊 carries one
# bogus label (dropped with a note), 麻麻地 only bogus ones (rejected), and
# 係/開 are never returned (unannotated after the re-queue round)
EMOTION_TRUTH = {
    "開心": ["joy", "positive"], "嬲": ["anger", "negative"], "好食": ["positive"],
    "正": ["positive", "joy"], "靚": ["positive"], "勁": ["positive"],
    "差": ["negative"], "伏": ["negative", "disgust"], "無聊": ["boredom", "negative"],
    "嘔心": ["disgust", "negative"], "核突": ["disgust"], "興奮": ["anticipation", "joy"],
    "失望": ["sadness", "negative"], "驚": ["fear", "negative"], "喊": ["sadness"],
    "笑": ["joy"], "擔心": ["fear"], "討厭": ["disgust", "negative"],
    "鍾意": ["joy", "positive"], "憎": ["anger", "disgust"], "期待": ["anticipation", "positive"],
    "一流": ["positive", "joy"], "獲益良多": ["positive", "trust"],
    "信得過": ["trust", "positive"], "估唔到": ["surprise"], "麻麻地": ["meh"],
}

BASE_YUE = {
    "開心": ["joy", "positive"], "嬲": ["anger", "negative"], "驚": ["fear", "negative"],
    "靚": ["positive"], "差": ["negative"], "信得過": ["trust", "positive"],
    "期待": ["anticipation", "positive"], "嘔心": ["disgust", "negative"],
    "失望": ["sadness", "negative"], "估唔到": ["surprise"], "餐廳": [], "電影": [],
}

TOY_EN = {
    "happy": ["joy", "positive"], "great": ["positive", "joy"], "laugh": ["joy"],
    "angry": ["anger", "negative"], "awful": ["negative", "anger"], "hate": ["anger", "disgust", "negative"],
    "scared": ["fear", "negative"], "sad": ["sadness", "negative"], "worried": ["fear"],
    "gross": ["disgust", "negative"], "boring": ["negative"], "surprising": ["surprise"],
    "reliable": ["trust", "positive"], "hopeful": ["anticipation", "positive"],
    "tasty": ["positive"], "pretty": ["positive"], "love": ["joy", "positive", "trust"],
    "cry": ["sadness"], "fear": ["fear"], "joy": ["joy", "positive"],
    "delight": ["joy"], "disgust": ["disgust"], "anger": ["anger"], "terror": ["fear", "negative"],
    "despair": ["sadness", "negative"], "shock": ["surprise"], "trust": ["trust"],
    "expect": ["anticipation"], "fine": ["positive"], "bad": ["negative"],
    "horrible": ["negative", "disgust"], "wonderful": ["positive", "joy"],
    "nervous": ["fear", "anticipation"], "upset": ["sadness", "anger"],
    "calm": ["positive", "trust"], "amazing": ["surprise", "positive"],
    "dull": ["negative"], "sweet": ["positive", "joy"], "bitter": ["negative", "disgust"],
    "proud": ["joy", "positive", "trust"],
}

TOY_ZH = {
    "開心": ["joy", "positive"], "很棒": ["positive", "joy"], "笑": ["joy"],
    "生氣": ["anger", "negative"], "糟糕": ["negative", "anger"], "討厭": ["anger", "disgust", "negative"],
    "害怕": ["fear", "negative"], "難過": ["sadness", "negative"], "擔心": ["fear"],
    "噁心": ["disgust", "negative"], "無聊": ["negative"], "驚訝": ["surprise"],
    "可靠": ["trust", "positive"], "期待": ["anticipation", "positive"],
    "好吃": ["positive"], "漂亮": ["positive"], "喜愛": ["joy", "positive", "trust"],
    "哭": ["sadness"], "恐懼": ["fear"], "快樂": ["joy", "positive"],
    "高興": ["joy"], "厭惡": ["disgust"], "憤怒": ["anger"], "恐怖": ["fear", "negative"],
    "絕望": ["sadness", "negative"], "震驚": ["surprise"], "信任": ["trust"],
    "盼望": ["anticipation"], "不錯": ["positive"], "不好": ["negative"],
    "可怕": ["negative", "disgust"], "精彩": ["positive", "joy"],
    "緊張": ["fear", "anticipation"], "傷心": ["sadness", "anger"],
    "平靜": ["positive", "trust"], "驚人": ["surprise", "positive"],
    "乏味": ["negative"], "甜美": ["positive", "joy"], "苦澀": ["negative", "disgust"],
    "自豪": ["joy", "positive", "trust"],
}

TRILINGUAL = [
    {
        "id": "d1",
        "versions": {
            "en": "What a happy day, great food and a good laugh!",
            "zh": "開心的一天，很棒，好吃",
            "yue": "今日好開心，啲嘢好食，正！",
        },
        "gold": ["joy"],
    },
    {
        "id": "d2",
        "versions": {
            # the zh rendering loses the disgust reading the en version carries
            "en": "Angry and awful service. I hate it.",
            "zh": "生氣，糟糕的服務",
            "yue": "好嬲，啲服務好差，我好憎",
        },
        "gold": ["anger"],
    },
    {
        "id": "d3",
        "versions": {
            "en": "Scared and sad, worried all night.",
            "zh": "害怕又難過，擔心一整夜",
            "yue": "好驚又好失望，成晚擔心",
        },
        "gold": ["fear", "sadness"],
    },
    {
        "id": "d4",
        "versions": {
            "en": "Gross, awful and boring.",
            "zh": "噁心，糟糕，無聊",
            "yue": "好核突，好伏，無聊",
        },
        "gold": ["disgust"],
    },
    {
        "id": "d5",
        "versions": {
            # the zh rendering loses the anticipation reading
            "en": "Surprising but reliable, hopeful!",
            "zh": "驚訝但可靠",
            "yue": "估唔到咁信得過，好期待",
        },
        "gold": ["surprise", "trust"],
    },
    {
        "id": "d6",
        "versions": {
            "en": "The restaurant is on the corner.",
            "zh": "餐廳在街角",
            "yue": "間餐廳喺街角",
        },
        "gold": [],
    },
]

TOPIC_TEMPLATES = [
    "{w1}嘅{n1}",
    "{n1}真係{w1}",
    "今日去咗{n1}",
    "{w1}定{w2}？",
    "大家覺得{n1}點？",
]

REPLY_TEMPLATES = [
    "好{w1}呀",
    "我覺得{w1}",
    "{w1}到爆",
    "唔{w1}，不過{w2}",
    "{n1}都係咁{w1}",
    "真係{w1}，{w2}",
    "ok la",
    "{w1}！",
    "有啲{w1}有啲{w2}",
]


def write_threads(path: Path) -> None:
    rng = random.Random(20240501)
    records = []
    for i in range(50):
        def fill(template: str) -> str:
            return template.format(
                w1=rng.choice(EMOTION_WORDS),
                w2=rng.choice(EMOTION_WORDS),
                n1=rng.choice(NEUTRAL_FILLER[:6]),
            )

        topic = fill(rng.choice(TOPIC_TEMPLATES))
        replies = [fill(rng.choice(REPLY_TEMPLATES)) for _ in range(rng.randint(1, 5))]
        records.append({"id": f"thread-{i:03d}", "topic": topic, "replies": replies})
    path.write_text(
        "".join(json.dumps(r, ensure_ascii=False, sort_keys=True) + "\n" for r in records),
        "utf-8",
    )


def write_dictionary(path: Path) -> None:
    path.write_text(
        "".join(f"{term}\t{pos}\n" for term, pos in sorted(DICTIONARY.items())), "utf-8"
    )


def write_lexicon_tsv(path: Path, table: dict[str, list[str]]) -> None:
    dims = (
        "anger", "anticipation", "disgust", "fear", "joy",
        "negative", "positive", "sadness", "surprise", "trust",
    )
    lines = []
    for term in sorted(table):
        for dim in dims:
            lines.append(f"{term}\t{dim}\t{1 if dim in table[term] else 0}\n")
    path.write_text("".join(lines), "utf-8")


def write_tmap(path: Path) -> None:
    tmap = {
        "開心": [
            {"expression": "開心", "contributors": ["nrc-translated"]},
            {"expression": "開心到飛起", "contributors": ["llm"]},
        ],
        "嬲": [
            {"expression": "嬲", "contributors": ["nrc-translated"]},
            {"expression": "好嬲", "contributors": ["human"]},
            {"expression": "谷氣", "contributors": ["llm", "human"]},
        ],
        "差": [
            {"expression": "差", "contributors": ["nrc-translated"]},
            {"expression": "麻麻地", "contributors": ["human"]},
        ],
        "靚": [{"expression": "靚", "contributors": ["nrc-translated"]}],
    }
    path.write_text(json.dumps(tmap, ensure_ascii=False, indent=2, sort_keys=True), "utf-8")


class RecordingTransport:
    """Wraps the scripted responder and remembers every (digest, response)."""

    def __init__(self):
        self.fixtures: dict[str, list[str]] = {}
        self.counts: dict[str, int] = {}

    def send(self, prompt: str, params) -> str:
        digest = llm.prompt_digest(prompt)
        batch = prompt.split("\n\n", 1)[1].split("\n")
        attempt = self.counts.get(digest, 0)
        self.counts[digest] = attempt + 1
        response = self._respond(batch, attempt)
        self.fixtures.setdefault(digest, []).append(response)
        return response

    @staticmethod
    def _respond(batch: list[str], attempt: int) -> str:
        if "開心" in batch and attempt == 0:
            return "Let me think about these Cantonese words step by step..."
        payload = {w: EMOTION_TRUTH[w] for w in batch if w in EMOTION_TRUTH}
        if "嬲" in batch:
            payload["香港"] = ["positive"]
        return "Here are the words with distinct emotions:\n" + json.dumps(
            payload, ensure_ascii=False, sort_keys=True
        )


def build_replay_fixture(words_file: Path, replay_path: Path) -> None:
    words = [w for w in words_file.read_text("utf-8").split("\n") if w]
    transport = RecordingTransport()
    llm.annotate_batch(transport, "emotion", words, retries=2, batch_cap=10)
    collapsed = {
        digest: responses[0] if len(responses) == 1 else responses
        for digest, responses in transport.fixtures.items()
    }
    replay_path.write_text(
        json.dumps(collapsed, ensure_ascii=False, indent=2, sort_keys=True), "utf-8"
    )


def human_response(word: str, annotator: str) -> dict:
    rng = random.Random(f"{annotator}:{word}")
    labels = set(EMOTION_TRUTH.get(word, ())) & DIMENSION_SET
    ordered = sorted(labels)
    if ordered and rng.random() < 0.25:
        ordered = ordered[1:]
    if rng.random() < 0.2:
        extra = rng.choice(sorted(DIMENSION_SET))
        if extra not in ordered:
            ordered = sorted([*ordered, extra])
    return {"labels": ordered, "wrong_word": False, "better_expression": None}


def build_human_records(tasks_path: Path, assignments_path: Path, out_path: Path, tmp: Path) -> None:
    """Drive the annotation service store exactly as the UI would."""
    tasks = {t.id: t for t in annotation.tasks_from_jsonl(tasks_path)}
    assignments = load_assignment_manifest(assignments_path)
    store = SessionStore(tasks, assignments, tmp / "journal.ndjson")
    wrong_word_target = None
    for annotator in sorted(assignments):
        while True:
            task = store.next_task(annotator)
            if task is None:
                break
            if wrong_word_target is None:
                wrong_word_target = task.word
            if task.word == wrong_word_target:
                payload = {"labels": [], "wrong_word": True, "better_expression": None}
            else:
                payload = human_response(task.word, annotator)
            store.submit(annotator, task.id, payload)
    store.export_to_file(out_path)
    store.close()


def run_pipeline(build_dir: Path) -> None:
    build_dir.mkdir(parents=True, exist_ok=True)
    fx = FIXTURES

    def run(argv: list[str]) -> None:
        code = cli_main(["--quiet", *argv])
        if code != 0:
            raise SystemExit(f"pipeline stage failed: {argv} -> {code}")

    run([
        "mine-terms",
        "--corpus", str(fx / "threads.jsonl"),
        "--dict", str(fx / "dict.tsv"),
        "--top-k", "24",
        "--out", str(build_dir / "terms.tsv"),
    ])
    words_file = build_dir / "candidate_words.txt"
    words_file.write_text(
        "".join(line.split("\t")[0] + "\n"
                for line in (build_dir / "terms.tsv").read_text("utf-8").splitlines()),
        "utf-8",
    )
    run([
        "llm-annotate",
        "--kind", "emotion",
        "--words", str(words_file),
        "--replay", str(fx / "replay.json"),
        "--batch-cap", "10",
        "--out", str(build_dir / "llm_records.jsonl"),
        "--report", str(build_dir / "llm_report.json"),
        "--out-words", str(build_dir / "accepted_words.txt"),
    ])
    run([
        "make-tasks",
        "--kind", "emotion-annotation",
        "--words", str(build_dir / "accepted_words.txt"),
        "--sample-half",
        "--sample-seed", "7",
        "--portions", "3",
        "--groups", "A,B",
        "--seed", "11",
        "--out-tasks", str(build_dir / "tasks.jsonl"),
        "--out-assignments", str(build_dir / "assignments.json"),
    ])
    run([
        "aggregate",
        "--records", str(build_dir / "llm_records.jsonl"), str(fx / "human_records.jsonl"),
        "--tasks", str(build_dir / "tasks.jsonl"),
        "--raters", "auto",
        "--out", str(build_dir / "aggregated.jsonl"),
    ])
    run([
        "build-lexicon",
        "--name", "toy-collab",
        "--base", str(fx / "base-yue.tsv"),
        "--tmap", str(fx / "tmap.json"),
        "--aggregated", str(build_dir / "aggregated.jsonl"),
        "--out", str(build_dir / "lexicon.tsv"),
    ])
    run([
        "evaluate",
        "--datasets", str(fx / "trilingual.jsonl"),
        "--lexicon", f"toy-collab={build_dir / 'lexicon.tsv'}:yue:substring",
        "--lexicon", f"toy-zh={fx / 'toy-zh.tsv'}:zh:substring",
        "--baseline", f"toy-en={fx / 'toy-en.tsv'}:en:token",
        "--reference", "toy-zh",
        "--out-json", str(build_dir / "report.json"),
        "--out-table", str(build_dir / "report.txt"),
    ])


GOLDEN_FILES = [
    "terms.tsv",
    "candidate_words.txt",
    "llm_records.jsonl",
    "llm_report.json",
    "accepted_words.txt",
    "tasks.jsonl",
    "assignments.json",
    "aggregated.jsonl",
    "lexicon.tsv",
    "report.json",
    "report.txt",
]


def main() -> None:
    FIXTURES.mkdir(parents=True, exist_ok=True)
    GOLDEN.mkdir(parents=True, exist_ok=True)

    write_threads(FIXTURES / "threads.jsonl")
    write_dictionary(FIXTURES / "dict.tsv")
    write_lexicon_tsv(FIXTURES / "toy-en.tsv", TOY_EN)
    write_lexicon_tsv(FIXTURES / "toy-zh.tsv", TOY_ZH)
    write_lexicon_tsv(FIXTURES / "base-yue.tsv", BASE_YUE)
    write_tmap(FIXTURES / "tmap.json")
    (FIXTURES / "trilingual.jsonl").write_text(
        "".join(json.dumps(d, ensure_ascii=False, sort_keys=True) + "\n" for d in TRILINGUAL),
        "utf-8",
    )

    import tempfile

    with tempfile.TemporaryDirectory() as tmp:
        tmp_path = Path(tmp)
        # stage 1: mine terms so the replay fixture can cover the real prompts
        pre = tmp_path / "pre"
        pre.mkdir()
        code = cli_main([
            "--quiet", "mine-terms",
            "--corpus", str(FIXTURES / "threads.jsonl"),
            "--dict", str(FIXTURES / "dict.tsv"),
            "--top-k", "24",
            "--out", str(pre / "terms.tsv"),
        ])
        assert code == 0
        words_file = pre / "words.txt"
        words_file.write_text(
            "".join(line.split("\t")[0] + "\n"
                    for line in (pre / "terms.tsv").read_text("utf-8").splitlines()),
            "utf-8",
        )
        build_replay_fixture(words_file, FIXTURES / "replay.json")

        # stage 2: derive tasks (llm-annotate + make-tasks), then simulate the
        # human annotators through the service store
        code = cli_main([
            "--quiet", "llm-annotate",
            "--kind", "emotion",
            "--words", str(words_file),
            "--replay", str(FIXTURES / "replay.json"),
            "--batch-cap", "10",
            "--out", str(pre / "llm_records.jsonl"),
            "--out-words", str(pre / "accepted_words.txt"),
        ])
        assert code == 0
        code = cli_main([
            "--quiet", "make-tasks",
            "--kind", "emotion-annotation",
            "--words", str(pre / "accepted_words.txt"),
            "--sample-half",
            "--sample-seed", "7",
            "--portions", "3",
            "--groups", "A,B",
            "--seed", "11",
            "--out-tasks", str(pre / "tasks.jsonl"),
            "--out-assignments", str(pre / "assignments.json"),
        ])
        assert code == 0
        build_human_records(
            pre / "tasks.jsonl", pre / "assignments.json",
            FIXTURES / "human_records.jsonl", tmp_path,
        )

        # stage 3: full pipeline twice, require byte-identical outputs
        run_a = tmp_path / "run_a"
        run_b = tmp_path / "run_b"
        run_pipeline(run_a)
        run_pipeline(run_b)
        for name in GOLDEN_FILES:
            if not filecmp.cmp(run_a / name, run_b / name, shallow=False):
                raise SystemExit(f"pipeline output {name} is not reproducible")
            shutil.copy(run_a / name, GOLDEN / name)

    print(f"fixtures -> {FIXTURES}")
    print(f"goldens  -> {GOLDEN}")
    for name in GOLDEN_FILES:
        print(f"  {name}: {(GOLDEN / name).stat().st_size} bytes")


if __name__ == "__main__":
    main()
