"""Extractive QA reader served over newline-delimited JSON on stdin/stdout.

Each request line is an object with ``id``, ``question``, ``context``,
``top_k`` and ``max_answer_len``. Each response line echoes ``id`` and
carries ``answers`` (``text``, ``score``, ``start``, ``end``, offsets in
code points into ``context``) and optionally ``error``.

    python3 tsqa_adapter.py --model deepset/roberta-large-squad2 --device cpu
"""

import argparse
import json
import sys

DEFAULT_MODEL = "deepset/roberta-large-squad2"


class RequestError(Exception):
    pass


def parse_request(line):
    try:
        req = json.loads(line)
    except json.JSONDecodeError as e:
        raise RequestError("malformed JSON: %s" % e) from None
    if not isinstance(req, dict):
        raise RequestError("request must be a JSON object")
    return req


def validate(req):
    for key, kind in (("question", str), ("context", str), ("top_k", int), ("max_answer_len", int)):
        if not isinstance(req.get(key), kind) or isinstance(req.get(key), bool):
            raise RequestError("field %r missing or not a %s" % (key, kind.__name__))
    if not req["question"].strip():
        raise RequestError("question is empty")
    if not req["context"]:
        raise RequestError("context is empty")
    if req["top_k"] < 1 or req["max_answer_len"] < 1:
        raise RequestError("top_k and max_answer_len must be positive")


def clean_answers(context, answers, top_k):
    """Keeps spans that match their text, best first."""
    out = []
    for a in answers:
        start, end = int(a["start"]), int(a["end"])
        if 0 <= start < end <= len(context) and context[start:end] == a["text"]:
            out.append({"text": a["text"], "score": float(a["score"]), "start": start, "end": end})
    out.sort(key=lambda a: (-a["score"], a["start"]))
    return out[:top_k]


def handle_line(line, answer_fn):
    req_id = "unknown"
    try:
        req = parse_request(line)
        if isinstance(req.get("id"), str):
            req_id = req["id"]
        else:
            raise RequestError("field 'id' missing or not a string")
        validate(req)
        answers = answer_fn(req["question"], req["context"], req["top_k"], req["max_answer_len"])
        return {"id": req_id, "answers": clean_answers(req["context"], answers, req["top_k"])}
    except RequestError as e:
        return {"id": req_id, "answers": [], "error": str(e)}
    except Exception as e:  # inference failure
        return {"id": req_id, "answers": [], "error": "inference failed: %s" % e}


def serve(answer_fn, stdin=sys.stdin, stdout=sys.stdout):
    for line in stdin:
        if not line.strip():
            continue
        stdout.write(json.dumps(handle_line(line, answer_fn)) + "\n")
        stdout.flush()


def transformer_answer_fn(model, device):
    from transformers import pipeline

    qa = pipeline(
        "question-answering",
        model=model,
        tokenizer=model,
        device=0 if device == "accelerator" else -1,
    )

    def answer(question, context, top_k, max_answer_len):
        result = qa(
            question=question,
            context=context,
            top_k=top_k,
            max_answer_len=max_answer_len,
            handle_impossible_answer=False,
        )
        if isinstance(result, dict):
            result = [result]
        return [
            {"text": r["answer"], "score": r["score"], "start": r["start"], "end": r["end"]}
            for r in result
            if r["answer"]
        ]

    return answer


def main(argv=None):
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--model", default=DEFAULT_MODEL)
    parser.add_argument("--device", choices=["cpu", "accelerator"], default="cpu")
    args = parser.parse_args(argv)
    try:
        import torch

        torch.manual_seed(0)
        answer_fn = transformer_answer_fn(args.model, args.device)
    except Exception as e:
        print("could not load model %s: %s" % (args.model, e), file=sys.stderr)
        return 1
    serve(answer_fn)
    return 0


if __name__ == "__main__":
    sys.exit(main())
