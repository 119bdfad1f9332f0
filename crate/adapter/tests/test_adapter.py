import io
import json
import os
import sys
import unittest

sys.path.insert(0, os.path.join(os.path.dirname(os.path.abspath(__file__)), ".."))

import tsqa_adapter  # noqa: E402


def first_word(question, context, top_k, max_answer_len):
    end = context.find(" ")
    return [{"text": context[:end], "score": 0.5, "start": 0, "end": end}, {"text": "bogus", "score": 0.9, "start": 0, "end": 3}]


def run(lines):
    out = io.StringIO()
    tsqa_adapter.serve(first_word, io.StringIO("".join(l + "\n" for l in lines)), out)
    return [json.loads(l) for l in out.getvalue().splitlines()]


def request(i, question="What?", context="Paper 2's scope is \"Statement level\"."):
    return json.dumps({"id": "r%d" % i, "question": question, "context": context, "top_k": 3, "max_answer_len": 15})


class ProtocolTest(unittest.TestCase):
    def test_one_response_per_request_in_order(self):
        lines = []
        for i in range(100):
            lines.append(request(i) if i % 3 else "{not json")
        replies = run(lines)
        self.assertEqual(len(replies), 100)
        for i, r in enumerate(replies):
            if i % 3:
                self.assertEqual(r["id"], "r%d" % i)
                self.assertNotIn("error", r)
            else:
                self.assertEqual(r["id"], "unknown")
                self.assertIn("error", r)

    def test_extractive_answers_only(self):
        (r,) = run([request(1)])
        self.assertEqual([a["text"] for a in r["answers"]], ["Paper"])

    def test_empty_question_is_an_error(self):
        (r, s) = run([request(1, question="  "), request(2)])
        self.assertIn("error", r)
        self.assertEqual(r["id"], "r1")
        self.assertEqual(s["id"], "r2")

    def test_same_request_same_response(self):
        a, b = run([request(1), request(1)])
        self.assertEqual(a, b)


if __name__ == "__main__":
    unittest.main()
