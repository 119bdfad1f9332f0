"""Stand-in reader for protocol tests: answers with quoted values of the context.

--crash-once PATH exits without replying to the first request if PATH does
not exist yet (creating it), to exercise restarts.
"""

import os
import re
import sys

HERE = os.path.dirname(os.path.abspath(__file__))
sys.path.insert(0, os.path.join(HERE, "..", "..", "..", "..", "adapter"))

import tsqa_adapter  # noqa: E402

WORD = re.compile(r"\w+")
STOP = {"what", "is", "the", "of", "its", "and", "s", "a"}


def words(text):
    return {w.lower() for w in WORD.findall(text)} - STOP


def quoted_spans(question, context, top_k, max_answer_len):
    q = words(question)
    out = []
    for m in re.finditer(r'is "([^"]+)"', context):
        clause_start = max(context.rfind(",", 0, m.start()), context.rfind(".", 0, m.start())) + 1
        clause = words(context[clause_start:m.start()])
        sentence_start = context.rfind(". ", 0, m.start()) + 1
        sentence = words(context[sentence_start:m.start()])
        score = (len(q & clause) / (len(clause) or 1) + len(q & sentence) / (len(q) or 1)) / 2
        if len(WORD.findall(m.group(1))) <= max_answer_len:
            out.append({"text": m.group(1), "score": score, "start": m.start(1), "end": m.end(1)})
    return out


def main():
    args = sys.argv[1:]
    if args[:1] == ["--crash-once"]:
        marker = args[1]
        if not os.path.exists(marker):
            open(marker, "w").close()
            sys.stdin.readline()
            sys.exit(3)
    tsqa_adapter.serve(quoted_spans)


if __name__ == "__main__":
    main()
