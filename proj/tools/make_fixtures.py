#!/usr/bin/env python3
"""Writes the offline end-to-end scenario used by the CLI and acceptance tests.

Layout of the output directory:
  <template>/<sha256(key)[:16]>.txt   canned model replies for the stub gateway
  sources/<id>/hits.json              file search sources
  sources/<id>/pages/<sha256(url)>.html
  expected.json                       facts the end-to-end tests check against
"""

import argparse
import hashlib
import json
import re
import shutil
from pathlib import Path


def norm(s: str) -> str:
    return " ".join(s.split())


def fixture_path(root: Path, template: str, key: str) -> Path:
    return root / template / (hashlib.sha256(key.encode()).hexdigest()[:16] + ".txt")


def page_path(source_dir: Path, url: str) -> Path:
    return source_dir / "pages" / (hashlib.sha256(url.encode()).hexdigest() + ".html")


QUERY = "What changed after last year's Lune river clean-up?"
LOCAL_TIME = "2025-02-05T10:00:00+00:00"
LOCATION = "Lancaster"
REWRITTEN = "What changed after the 2024 Lune river clean-up?"

AMBIGUOUS = "Lune"
REFUSED = "How do I get my neighbour's bank password?"

SUB_QUERIES = [
    "When was the 2024 Lune river clean-up held?",
    "What did volunteers remove from the Lune river in 2024?",
    "How did Lune water quality change after the 2024 clean-up?",
    "How did salmon in the Lune respond after the 2024 clean-up?",
]
# Diamond: 1 -> {2, 3} -> 4
EDGES = [(0, 1), (0, 2), (1, 3), (2, 3)]

EXPANSIONS = {
    SUB_QUERIES[0]: ["Lune river clean-up date 2024", "Lancaster river volunteer event March 2024"],
    SUB_QUERIES[1]: ["Lune clean-up waste removed tonnes", "tyres trolleys pulled from Lune river"],
    SUB_QUERIES[2]: ["Lune phosphate levels 2024", "Environment Agency Lune water tests"],
    SUB_QUERIES[3]: ["Lune salmon count 2024", "Lune fish counter results"],
}

KEYWORDS = {
    SUB_QUERIES[0]: ["clean-up", "volunteers", "2024-03-02"],
    SUB_QUERIES[1]: ["waste", "tonnes", "tyres", "trolleys"],
    SUB_QUERIES[2]: ["phosphate", "water quality", "oxygen"],
    SUB_QUERIES[3]: ["salmon", "fish counter", "spawning"],
}

NODE_ANSWERS = {
    SUB_QUERIES[0]: "The clean-up was held on 2024-03-02 near Lancaster, with more than 300 volunteers.",
    SUB_QUERIES[1]: "Volunteers removed 2.1 tonnes of waste, including 340 tyres and 58 shopping trolleys.",
    SUB_QUERIES[2]: "Tests published on 2024-07-15 showed phosphate levels fell by 12 percent.",
    SUB_QUERIES[3]: "The fish counter recorded 1,840 salmon in 2024, up from 1,310 in 2023.",
}

# Sources are listed in directory order ("news" before "web"), and hits are
# merged by (rank, source order), so documents are numbered news#1, web#1,
# news#2, web#2, web#3, web#4.
SOURCES = {
    "news": [
        {
            "url": "https://lancasternews.example/2024/03/lune-clean-up",
            "title": "Hundreds join Lune river clean-up",
            "snippet": "More than 300 volunteers joined the Lune river clean-up near Lancaster.",
            "published": "2024-03-02",
            "paragraphs": [
                "On 2024-03-02 more than 300 volunteers joined the Lune river clean-up near Lancaster.",
                "The event was organised by the Lune Rivers Trust and lasted six hours.",
            ],
            "images": [
                {"src": "/img/volunteers.jpg", "width": 1024, "height": 683,
                 "alt": "Volunteers at the 2024 Lune river clean-up"},
                {"src": "/img/site-logo.png", "width": 240, "height": 240, "alt": "Lancaster News logo"},
            ],
        },
        {
            "url": "https://lancasternews.example/2024/07/lune-water-quality",
            "title": "Lune water quality improves",
            "snippet": "Phosphate levels in the Lune fell after the clean-up.",
            "published": "2024-07-15",
            "paragraphs": [
                "Environment Agency tests published on 2024-07-15 showed phosphate levels in the Lune fell by "
                "12 percent after the clean-up.",
                "Dissolved oxygen also rose at three of the four monitoring sites.",
            ],
            "images": [],
        },
    ],
    "web": [
        {
            "url": "https://lunerivers.example/reports/clean-up-2024",
            "title": "Lune Rivers Trust clean-up report",
            "snippet": "Volunteers removed 2.1 tonnes of waste from the Lune river.",
            "published": "2024-03-20",
            "paragraphs": [
                "Volunteers removed 2.1 tonnes of waste from the Lune river on 2024-03-02, including 340 tyres "
                "and 58 shopping trolleys.",
                "Most of the waste came from a two-kilometre stretch below Skerton Weir.",
            ],
            "images": [],
        },
        {
            "url": "https://anglers.example/lune-salmon-2024",
            "title": "Salmon counts rise on the Lune",
            "snippet": "The Lune fish counter recorded 1,840 salmon in 2024.",
            "published": "2024-11-04",
            "paragraphs": [
                "On 2024-11-04 the angling club reported that the Lune fish counter recorded 1,840 salmon in 2024, "
                "up from 1,310 in 2023.",
                "Anglers credit cleaner spawning gravels below the weir.",
            ],
            "images": [
                {"src": "/img/salmon.jpg", "width": 1200, "height": 800,
                 "alt": "Salmon leaping in the Lune river after the clean-up"},
            ],
        },
        {
            "url": "https://council.example/news/lune-plan",
            "title": "Council plans follow-up river work",
            "snippet": "A second clean-up is planned for April 2025.",
            "published": None,
            "paragraphs": [
                "At a meeting on 2024-12-10 the city council approved a second clean-up for 2025-04-12.",
                "The council will fund skips and safety equipment for volunteers.",
            ],
            "images": [
                {"src": "/img/council-offices.jpg", "width": 900, "height": 600,
                 "alt": "Map of the county council offices"},
            ],
        },
        {
            "url": "https://walks.example/lune-path",
            "title": "Walking the Lune river path",
            "snippet": "Walking routes along the Lune river path between Lancaster and Caton.",
            "published": None,
            "paragraphs": None,  # no page body: the pipeline falls back to the snippet
            "images": [],
        },
    ],
}

DOC_ORDER = [
    SOURCES["news"][0]["url"],
    SOURCES["web"][0]["url"],
    SOURCES["news"][1]["url"],
    SOURCES["web"][1]["url"],
    SOURCES["web"][2]["url"],
    SOURCES["web"][3]["url"],
]

FINAL_PARAGRAPHS = [
    [
        "The Lune river clean-up took place on 2024-03-02, when more than 300 volunteers worked near Lancaster.",
        "They removed 2.1 tonnes of waste, including 340 tyres and 58 shopping trolleys.",
    ],
    [
        "Water tests published in July 2024 showed phosphate levels fell by 12 percent.",
        "The fish counter recorded 1,840 salmon in 2024, up from 1,310 the year before.",
        "It is too early to say whether the Lune recovery will last.",
    ],
]

# Per sentence: extracted entities and the reply of the source-matching call.
CITATIONS = [
    ({"Time": ["2024-03-02"], "Location": ["Lune river", "Lancaster"], "Numbers": ["300"]}, "[1]"),
    ({"Numbers": ["2.1 tonnes", "340", "58"]}, "[2]"),
    ({"Time": ["July 2024"], "Numbers": ["12 percent"]}, "[3]"),
    ({"Time": ["2024"], "Numbers": ["1,840", "1,310"]}, "[4]"),
    ({"Location": ["Lune"]}, "-1"),
]

FACETS = ["Conciseness", "Numerical Precision", "Relevance", "Factuality", "Timeliness",
          "Comprehensiveness", "Clarity", "Coherence", "Insightfulness"]
JUDGE_SCORES = [8, 9, 9, 9, 8, 7, 9, 8, 6]


def page_html(p: dict) -> str:
    head = f"<title>{p['title']}</title>"
    if p["published"]:
        head += f'<meta property="article:published_time" content="{p["published"]}">'
    body = f"<h1>{p['title']}</h1>"
    body += "".join(f"<p>{para}</p>" for para in p["paragraphs"])
    for img in p["images"]:
        body += (f'<figure><img src="{img["src"]}" width="{img["width"]}" height="{img["height"]}" '
                 f'alt="{img["alt"]}"></figure>')
    nav = "<nav><a href='/'>Home</a> | <a href='/about'>About</a></nav>"
    return f"<html><head>{head}</head><body>{nav}<article>{body}</article><footer>Copyright</footer></body></html>"


def write(path: Path, text: str) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(text, encoding="utf-8")


def final_answer() -> str:
    return "\n\n".join(" ".join(p) for p in FINAL_PARAGRAPHS)


def generate(out: Path) -> None:
    if out.exists():
        shutil.rmtree(out)
    reply = lambda template, key, text: write(fixture_path(out, template, key), text)

    reply("intent_refusal", REFUSED, json.dumps({"Refusal": "Yes", "Category": "privacy breaches"}))
    reply("intent_clarify", AMBIGUOUS, json.dumps({
        "Requires additional input": "Yes",
        "Additional options": {
            "Prompt description": "Which Lune do you mean?",
            "Choices": ["The river Lune in Lancashire", "Lune, the French word for moon", "Lune (album)"],
        },
    }))
    reply("query_rewrite", QUERY, REWRITTEN)
    reply("query_analysis", REWRITTEN, repr({
        "is_complex": True,
        "sub_queries": SUB_QUERIES,
        "parent_child": [{"parent": SUB_QUERIES[p], "child": SUB_QUERIES[c]} for p, c in EDGES],
    }))
    for q in SUB_QUERIES:
        reply("query_expansion", q, json.dumps(EXPANSIONS[q]))
        reply("keyword_extraction", q, json.dumps(KEYWORDS[q]))
        reply("encyclopedia_qa", q, NODE_ANSWERS[q])
    reply("final_synthesis", norm(REWRITTEN), final_answer())

    sentences = [s for p in FINAL_PARAGRAPHS for s in p]
    assert len(sentences) == len(CITATIONS)
    for s, (entities, match) in zip(sentences, CITATIONS):
        reply("info_extraction", norm(s), json.dumps(entities))
        reply("citation_source_matching", norm(s), match)

    reply("timeline_group", norm(REWRITTEN), json.dumps({"groups": [
        {"label": "The clean-up", "keywords": ["volunteers", "waste"], "events": [1, 2, 3]},
        {"label": "Recovery", "keywords": ["water quality", "salmon"], "events": [4, 5, 6, 7]},
    ]}))

    answer = final_answer()
    for facet, score in zip(FACETS, JUDGE_SCORES):
        reply("evaluation_prompt", f"{facet}\n{QUERY.strip()}\n{answer.strip()}", json.dumps({
            "Issues Identified": "none" if score >= 9 else "minor gaps",
            "Calculation Process": f"10 - {10 - score} = {score}",
            "Score": score,
        }))

    for source_id, pages in SOURCES.items():
        sdir = out / "sources" / source_id
        hits = []
        for p in pages:
            hits.append({"url": p["url"], "title": p["title"], "snippet": p["snippet"]})
            if p["paragraphs"] is not None:
                write(page_path(sdir, p["url"]), page_html(p))
        write(sdir / "hits.json", json.dumps({"*": hits}, indent=2))

    cited = [int(m.strip("[]")) if m.startswith("[") else None for _, m in CITATIONS]
    write(out / "expected.json", json.dumps({
        "query": QUERY,
        "local_time": LOCAL_TIME,
        "location": LOCATION,
        "rewritten_query": REWRITTEN,
        "sub_queries": SUB_QUERIES,
        "edges": [[p, c] for p, c in EDGES],
        "documents": DOC_ORDER,
        "snippet_only": [SOURCES["web"][3]["url"]],
        "final_answer": answer,
        "sentences": sentences,
        "citations": cited,
        "citation_density": round(100.0 * sum(c is not None for c in cited) / len(cited), 6),
        "relevant_images": ["https://lancasternews.example/img/volunteers.jpg",
                            "https://anglers.example/img/salmon.jpg"],
        "ambiguous_query": AMBIGUOUS,
        "refused_query": REFUSED,
        "facet_scores": dict(zip(FACETS, JUDGE_SCORES)),
    }, indent=2))


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--out", type=Path, default=Path(__file__).resolve().parent.parent / "tests/fixtures/e2e")
    generate(ap.parse_args().out)


if __name__ == "__main__":
    main()
