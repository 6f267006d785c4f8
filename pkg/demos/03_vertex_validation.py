"""
Vertex requirements and the mechanical validator
================================================

A graph vertex must be concise (at most two clauses), agent-centered
(exactly one explicitly named subject, no pronouns), and in active
voice. The validator is a surface heuristic over finite-verb groups; it
exists to gatekeep model output, not to be a grammar.
"""

from ncg.extraction import validate_vertex

sentences = [
    "The emperor ordered new clothes.",
    "The clothes were admired by everyone.",
    "He left because she called and they argued and it rained.",
    "The king and the queen greeted the guests.",
    "The crow dropped the cheese when the fox spoke.",
]

for sentence in sentences:
    report = validate_vertex(sentence)
    verdict = "ok" if report.ok else ", ".join(report.violations)
    print(f"{verdict:<28} clauses={report.clause_count}  {sentence}")
