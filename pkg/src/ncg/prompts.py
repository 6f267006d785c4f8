"""Prompt catalog and template rendering.

Templates reference variables as ``{name}``; rendering substitutes every
placeholder and fails loudly when one is left unbound. Instruction blocks
for extraction, zero-shot labeling, and pairwise judging are kept
byte-stable since cassette hashes depend on the rendered text.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field

from .errors import TemplateError

_PLACEHOLDER = re.compile(r"\{([a-z_][a-z0-9_]*)\}")


@dataclass(frozen=True)
class PromptTemplate:
    id: str
    text: str

    @property
    def variables(self) -> frozenset[str]:
        return frozenset(_PLACEHOLDER.findall(self.text))


@dataclass(frozen=True)
class PromptSpec:
    """A catalog template plus the bindings needed to render it."""

    template_id: str
    variables: dict[str, str] = field(default_factory=dict)
    system_preamble: str | None = None


VERTEX_EXTRACTION_INSTRUCTIONS = """\
1. I will input a paragraph to you and you need to do the following.
2. You should summarize the sentences. All sentences should be SIMPLE sentences.
3. If the story is told in first person POV, try to find out the speaker's name or something to refer to the speaker. If you really can't find anything, sub the speaker with 'The Protagonist'.
4. Then, sub ALL pronouns, including the ones in the sentence, with the thing that they refer to.
5. Then, Break ALL clauses into SIMPLE SENTENCES. Delete unimportant clause-level information. Be CONCISE.
6. Your output at this time shall have LITTLE TO NO clauses.
7. You need to check the sentences. If they contain clause, BREAK IT INTO TWO SENTENCES.
8. The sentences, in their order, should give a continuous flow. DO NOT eliminate any important information that shows causal relationship.
9. However, only information that pushes the plot/story is needed. Be concise and do not include ANY irrelevant information.
10. Eventually, give me a summarization that focuses on causal relationships for the story."""

STAC_ZERO_SHOT_INSTRUCTIONS = """\
Classify each sentence in each chunk individually into either a situation, a task, an action or a consequence. Note that the sentences ARE NOT related.
We do these as follows:

1. Situation: Something that sets the stage of the BACKGROUND, without implying a particular action or task. The sentence will typically set the stage for something that happens later. Generally, it focuses on things that already happened at a certain stage of the story or something that would impact stuff later.

2. Task:  Describes an explicit requirement, want, or responsibility that needs to be fulfilled. The sentence would explicitly(the action’s name shall be mentioned)  mention some event that one subject would accomplish later, but hasn’t accomplished yet. If the sentence implies an action due to outforce changes, it’s categorized as a situation.

3. Action: This refers to an activity that is BEING or HAS JUST BEEN carried out by someone. It requires someone to ACTIVELY do the action. Otherwise, it shall be a situation or a consequence.

4. Consequence: Describes when something happens as a result of at least one thing prior AND has an everlasting impact. It’s always an action that ‘finishes’ (the action changed some state and does not normally change back) or a straightforward state change. It’s different from a situation by the fact that it should be a result of something mentioned before in the paragraph, whereas a situation happens spontaneously."""

TRAIT_INSTRUCTIONS = {
    "impact": """\
IMPACT:
I would give you a bunch of sentences and I want you to tell if the main event in the sentence has a lasting impact or if the main event is already resolved.
for instance:
- the door is left opened - impactful, focuses on shifting of door's state
-He opened the door. - resolved, focuses on the person
Border cases:
- If you cannot determine any main event from the sentence, mark it as resolved because of a lack of state of change.""",
    "boundedness": """\
BOUNDEDNESS:
I would give you a bunch of sentences, not in any order,  and i want you to tell if the sentence's time span, labeled as 'Episodic', 'Habitual', or "Static'.

They are defined as follows:
- The event is Episodic if it happens only once And is at a specific time period (you may not know that period, but you know the period exists and has a bound)
- The Event is Habitual if the event happens on a regular basis. (There isn't a bound. The event is constant with intervals).
- The Event is Static if the Event describes a characteristic of the subject or if the event is constant and doesn't not have a clear bound. (Lacking Past OR future bound satisfies the category ).""",
    "specificity": """\
SPECIFICITY:
I would give you a bunch of sentences, not in any order,  and i want you to tell if the sentence has a proper noun or a common noun main subject, labeled as 'Specific' or 'Generic'. Define Strictly on the subject, not the implied subject.

They are defined as follows:
- All proper nouns are Specific. We Treat 'The Protagonist' and Any type of PRONOUNS  as proper nouns in this case and are therefore Specific. Anything in First person POV is Specific.
- Anything you can point to as 'It is THE ONE thing that does it' is Specific and treated as a proper noun. In a fairy tale, The Duck or A Tiger would be Specific because though they are not given a name, they act like proper nouns. (Think it like how the tiger's name would be Tiger)
- As an addition to 2, any live thing or personified thing the Starts with 'the' are treated as proper nouns and are thus Specific.
- A common noun, when can STRICTLY trace back to proper noun""",
    "eventivity": """\
EVENTIVITY:
I will give you a bunch of sentences. Classify each sentence in each chunk into either Stative, Dynamically Active or Mentally Active.
Do these as follows:
Check if the sentence describes a stative action (Labeled Stative). This includes possession(Have, consist, contain, etc.), thoughts(Think, remember, suspect, realize, etc.), senses(Feel, seem. etc.), and emotions that do not trigger an action (like, dislike, appreciate, etc.)

Or the sentence describes a dynamic action (Labeled Dynamically Active, which is characterized by more physical than mental movement). This includes the majority of the verbs(Jump, Walk, Suggest, Answer, etc.). Note that Talking or Expressing an opinion would be a dynamic action, because no mental action actually takes place.

Or a mental action (Labeled Mentally Active). This includes action that happens mentally rather than physically, like decide, want, desire, hope, etc.""",
    "time_end": """\
TIME END:
Classify each sentence in each chunk into either Time End Current (Label as C), Or Time End Future(Label as F).

We do these as follows:
Check if the Events will be continue happened after the sentence end itslef (In this case we label F(Future))
Def of End Future:
A conclusion about what is happening now
(Things will continue [according to logic])
(Things will continue [for sure])
Things don't end with the statement.""",
    "time_start": """\
TIME START:
Classify each sentence in each chunk into either Time Start Past, Or Time Start Now.

We do these as follows:
Check if the Events happened as we stated (In this case we label C(Current))
or the events happened as the sentences happened before (In this case we label P(Past))

If you find the event being persistent or stative and therefore does not have an explicitly start time, treat its start time as infinitely in the past and therefore label it as P.""",
    "initiative": """\
INITIATIVE:
I would give you a bunch of sentences, not in any order,  and i want you to tell if the sentence represents an action it initiates or Receives.
Define the main action and the main target through common sense and content. (NOT the subject). Now, I want you to tell me whether the target actively does(initiate), or receives an action(Receive).
If the sentence itself is in passive form, it's automatically Receive.
If the sentence itself is in active form,  think about if the subject is able to do the action out of CHOICE or the action spontaneously happens. If the subject consciously does the action, it's an Initiate action. If not so, the subject Receives the action.""",
}

GRAPH_JUDGING_INSTRUCTIONS = """\
Input Story: {story}
Causal Graph 1: {graph_a}
Causal Graph 2: {graph_b}

Your job is to make judgement for each of the Causal Graph, determine which one is better in each of the dimension, here is the dimension description:
1. Causality vs. Chronology: Does the diagram emphasize actual cause-and-effect rather than merely stringing events in time?
2. Explicit Motivations/Intent: Are the driving reasons (e.g., revenge, pride, fear) clearly shown so the reader sees why a character or force triggers the next event?
3. Granularity (Level of Detail): Is the diagram capturing just enough detail to show cause-effect without trivial or irrelevant steps?
4. Logical Completeness: Does it include all critical causes and effects for key outcomes, so nothing pivotal is left out?
5. Hierarchy or Grouping: Does the diagram organize events into higher-level groupings or phases?
6. Accuracy of Connections: Do arrows represent genuine causal links (A enables or drives B), and are there any missing or spurious connections?
7. Decision Points as Branches: Does the diagram explicitly show branching where a choice between alternatives is made?
8. Ease of Reading: Is the diagram easy to interpret visually, with a clear layout and labeling?

You must choose exactly one graph per dimension; ties are not allowed.
Answer with exactly eight lines, one per dimension, in the format:
<dimension number>: Graph 1
or
<dimension number>: Graph 2"""

SUMMARY_RUBRIC_INSTRUCTIONS = """\
Score the following summary of a narrative on three dimensions, each from 0 to 5 (half points allowed):
1. Conciseness and Sentence Structure: clean sentence flow, minimal subordination, and avoidance of redundancy.
2. Coverage and Coherence: inclusion of all key story events in proper logical order.
3. Information Span and Economy: avoidance of unnecessary elaboration or repeated ideas.

Summary:
{summary}

Answer with exactly one line in the format:
scores: <conciseness>, <coverage>, <span>"""

_ANSWER_YES_NO = (
    "Answer exactly YES or NO on the first line, then one-sentence rationale."
)


def _catalog() -> dict[str, PromptTemplate]:
    templates = [
        PromptTemplate(
            id="vertex_extraction",
            text=VERTEX_EXTRACTION_INSTRUCTIONS
            + "\n\nParagraph:\n{paragraph}\n\n"
            + "Output exactly one simple sentence per line, nothing else.",
        ),
        PromptTemplate(
            id="vertex_repair",
            text=(
                "The sentence below was produced while simplifying a narrative, but it "
                "violates these requirements: {violations}.\n"
                "Requirements: at most two clauses; exactly one explicitly named subject "
                "with no pronouns; active voice.\n"
                "Rewrite it as one or more SIMPLE sentences that satisfy every requirement "
                "and preserve the meaning.\n\n"
                "Sentence: {sentence}\n\n"
                "Output exactly one simple sentence per line, nothing else."
            ),
        ),
        PromptTemplate(
            id="stac_zero_shot",
            text=STAC_ZERO_SHOT_INSTRUCTIONS
            + "\n\nSentence: {sentence}\n\n"
            + "Answer with exactly one word on the first line: Situation, Task, Action, or Consequence.",
        ),
        PromptTemplate(
            id="bond_conditioning",
            text=(
                "You will help assemble a causal graph over narrative events. Every event "
                "carries one label: Situation, Task, Action, or Consequence. A directed "
                "causal edge is only legal when its (source label, target label) pair "
                "appears in the bond table below. Internalize this table; later questions "
                "must respect it.\n\nBond table:\n{bond_table}\n\n"
                "Pairs not listed are never legal edges."
            ),
        ),
        PromptTemplate(
            id="edge_proposal",
            text=(
                "Consider two events from the same narrative.\n"
                'Event A ({from_label}): "{from_text}"\n'
                'Event B ({to_label}): "{to_text}"\n\n'
                "Under the bond table, a {from_label}→{to_label} edge is legal. "
                "Does event A cause or directly enable event B in this story?\n"
                + _ANSWER_YES_NO
            ),
        ),
        PromptTemplate(
            id="counterfactual_prune",
            text=(
                "A causal edge was proposed between two events.\n"
                'Event A: "{cause_text}"\n'
                'Event B: "{effect_text}"\n\n'
                "If A did not occur, would B still happen?\n" + _ANSWER_YES_NO
            ),
        ),
        PromptTemplate(
            id="isolate_why",
            text=(
                "In the causal graph of this narrative, the following event is isolated "
                "(no causes and no effects were found for it):\n"
                'Isolated event {vertex_id} ({vertex_label}): "{vertex_text}"\n\n'
                "Why does this event appear in the story? Review the other events:\n"
                "{candidates}\n\n"
                "Name any overlooked direct cause or effect of the isolated event.\n"
                "Answer with one line per link, in the exact format:\n"
                "CAUSE: <event id>   (that event causes the isolated event)\n"
                "EFFECT: <event id>  (the isolated event causes that event)\n"
                "If there is truly no link, answer exactly NONE."
            ),
        ),
        PromptTemplate(id="graph_judging", text=GRAPH_JUDGING_INSTRUCTIONS),
        PromptTemplate(id="summary_rubric", text=SUMMARY_RUBRIC_INSTRUCTIONS),
    ]
    for trait, text in TRAIT_INSTRUCTIONS.items():
        answers = {
            "impact": "Impactful or Resolved",
            "boundedness": "Episodic, Habitual, or Static",
            "specificity": "Specific or Generic",
            "eventivity": "Stative, Dynamically Active, or Mentally Active",
            "time_end": "Current or Future",
            "time_start": "Past or Current",
            "initiative": "Initiate or Receive",
        }[trait]
        templates.append(
            PromptTemplate(
                id=f"trait_{trait}",
                text=text
                + "\n\nSentence: {sentence}\n\n"
                + f"Answer with exactly one label on the first line: {answers}.",
            )
        )
    return {t.id: t for t in templates}


CATALOG: dict[str, PromptTemplate] = _catalog()


def get_template(template_id: str) -> PromptTemplate:
    try:
        return CATALOG[template_id]
    except KeyError:
        raise TemplateError(f"unknown template: {template_id!r}") from None


def render_prompt(spec: PromptSpec) -> str:
    """Substitute `spec.variables` into its template.

    Raises TemplateError listing any placeholder left unbound; unused
    bindings are rejected too since they signal a caller bug.
    """
    template = get_template(spec.template_id)
    referenced = template.variables
    missing = sorted(referenced - set(spec.variables))
    if missing:
        raise TemplateError(
            f"template {spec.template_id!r} has unbound variable(s): {', '.join(missing)}"
        )
    extra = sorted(set(spec.variables) - referenced)
    if extra:
        raise TemplateError(
            f"template {spec.template_id!r} does not reference: {', '.join(extra)}"
        )

    def _sub(match: re.Match) -> str:
        return str(spec.variables[match.group(1)])

    rendered = _PLACEHOLDER.sub(_sub, template.text)
    if not rendered.strip():
        raise TemplateError(f"template {spec.template_id!r} rendered empty")
    return rendered
