"""Vertex extraction: narrative simplification through the gateway plus a
mechanical validator for the three vertex requirements (concise,
agent-centered, active voice).

The validator is a surface heuristic, deliberately free of any parser
dependency: clause count is the number of finite-verb groups, the agent
check wants exactly one subject noun phrase and no blacklisted pronouns,
and the voice check looks for the be-auxiliary + past-participle pattern.
It exists to gatekeep LLM output, not to be a grammar.
"""

from __future__ import annotations

import logging
import re
from dataclasses import dataclass, field
from typing import Optional

from .errors import ExtractionError
from .gateway import GenerationParams, LLMGateway
from .model import Vertex
from .prompts import PromptSpec

logger = logging.getLogger(__name__)

DEFAULT_MAX_VERTICES = 40

RULE_CONCISE = "concise"
RULE_AGENT = "agent-centered"
RULE_ACTIVE = "active-voice"


@dataclass(frozen=True)
class NarrativeText:
    """A narrative plus its paragraph segmentation (character ranges)."""

    id: str
    body: str
    title: Optional[str] = None
    paragraphs: tuple[tuple[int, int], ...] = ()

    def __post_init__(self):
        if not self.body.strip():
            raise ValueError(f"narrative {self.id!r} has empty body")
        prev_end = -1
        for start, end in self.paragraphs:
            if start < prev_end or end < start:
                raise ValueError(f"narrative {self.id!r} has bad paragraph ranges")
            prev_end = end

    @classmethod
    def from_text(cls, narrative_id: str, body: str, title: Optional[str] = None) -> "NarrativeText":
        ranges = []
        for match in re.finditer(r"[^\n]+(?:\n(?!\s*\n)[^\n]*)*", body):
            if match.group().strip():
                ranges.append((match.start(), match.end()))
        return cls(id=narrative_id, body=body, title=title, paragraphs=tuple(ranges))

    def paragraph_texts(self) -> list[str]:
        return [self.body[s:e].strip() for s, e in self.paragraphs]


@dataclass(frozen=True)
class ValidationReport:
    sentence: str
    clause_count: int
    has_single_explicit_agent: bool
    is_active_voice: bool
    violations: tuple[str, ...] = field(default_factory=tuple)

    @property
    def ok(self) -> bool:
        return not self.violations


# --- lexicons ---------------------------------------------------------------

AUXILIARIES = frozenset(
    """am is are was were be been being has have had do does did
    will would shall should can could may might must ought""".split()
)

BE_FORMS = frozenset("am is are was were be been being".split())

PERSONAL_PRONOUNS = frozenset(
    """i me my mine myself we us our ours ourselves
    you your yours yourself yourselves
    he him his himself she her hers herself it its itself
    they them their theirs themselves""".split()
)

DEMONSTRATIVES = frozenset("this that these those".split())

# Simple pasts that no suffix rule can catch.
IRREGULAR_PASTS = frozenset(
    """went saw said made took told came left got gave found thought knew
    felt became began brought bought caught chose drew drank drove ate fell
    fought flew forgot grew heard held kept led lost meant met paid put ran
    read rode rose sat sold sent set shook sang sank slept spoke spent stood
    stole swam taught threw understood woke wore won wrote wept rang lay hid
    hit hurt cut let built dealt dug hung shone shot slid struck swore tore
    bore bit bled blew broke bred crept froze knelt lit sought spat sprang
    stuck stung swept swung wound flung clung strove slew forgave withdrew
    arose awoke beheld bent bound burst cost dreamt fled forbade lent
    shed shrank smelt sped spilt split spread stank strode swelled""".split()
)

# Participles that are never finite on their own.
PARTICIPLES_ONLY = frozenset(
    """taken given seen known shown thrown broken chosen written eaten driven
    drawn worn torn begun sung sunk swum spoken stolen frozen beaten bitten
    forbidden forgotten gotten hidden ridden risen shaken woken flown grown
    blown gone done been born borne sworn woven fallen arisen slain lain
    mistaken proven striven""".split()
)

# Irregular verbs whose simple past doubles as the participle, so they can
# complete a be-auxiliary passive ("was told", "was struck").
PAST_EQ_PARTICIPLE = frozenset(
    """said told found held heard kept left lost meant met paid put read sent
    set shot sold spent taught thought brought bought caught fought felt
    built dealt dug hung led lit sought stuck stung struck swept swung wound
    won bound fed bled bred sped shut cut hit hurt let cast spun strung flung
    clung made had""".split()
)

VERB_LEMMAS = frozenset(
    """accept admire agree announce answer appear argue arrive ask attack
    bake become beg begin believe belong blame boil borrow bow break bring
    build burn bury buy call calm capture carry cast catch chase choose
    claim clean climb close collect come command comfort contain cook count
    cover crawl cross cry cure dance dare decide declare deceive demand earn
    describe desire die dig discover dislike drop drink drive drown eat
    empty enjoy enter escape explain face fall fear feed feel fetch fight
    fill find finish fix flatter flee float fly follow forget forgive free
    fry gather give glance go grab greet grind grow guard happen harvest
    hate heal hear help hide hold hope hunt hurry imagine invite join jump
    keep kick kiss kneel knock know land laugh lead lean leap learn leave
    lend lie lift light like listen live lock look lose love make marry
    measure meet mock move need nod notice obey offer open order own paint
    pass pat pause pay pick plan plant play point poison pour praise prefer
    prepare pretend promise protect pull punish push raise reach read
    realize receive refuse release remain remember remove reply rescue rest
    return reward ride ring rise roam roll rule run rush save say scare
    scream search see seek seem seize sell send serve settle sew shake share
    shine shout show shut sing sink sit sleep slide slip smell smile snatch
    sneak snow speak spend spin stand care start starve stay steal stop
    stroke study stumble succeed suffer suggest swear sweep swim take talk
    taste teach tell thank think threaten throw touch travel tremble trick
    trip trust try turn understand visit wait wake walk wander want warn
    wash watch wave wear weave weep weigh whisper win wish wonder work
    worry wrap write yell""".split()
)

# Adverbs and negators tolerated inside a verb group ("has just finished").
GROUP_GAP_WORDS = frozenset(
    """not never just already often always also still soon quickly slowly
    quietly suddenly finally almost nearly barely really truly even once
    twice again carefully secretly eagerly gladly""".split()
)

SUBORDINATORS = frozenset(
    """because although though while when whenever since if unless until
    after before once whereas that which who whom whose where why lest""".split()
)

COORDINATORS = frozenset("and but or nor yet so".split())

ARTICLES = frozenset("the a an".split())

# -ed words that are not verb forms.
ED_EXCEPTIONS = frozenset(
    """hundred kindred sacred wicked naked wretched crooked rugged ragged
    jagged hatred shed bed red wed sled seed need deed feed reed speed
    greed creed weed indeed""".split()
)

_WORD_RE = re.compile(r"[A-Za-z]+(?:'[A-Za-z]+)?|[.,;:!?()—–-]")


def _tokenize(sentence: str) -> list[str]:
    return _WORD_RE.findall(sentence)


def _present_inflections(lemma: str) -> set[str]:
    forms = {lemma}
    if lemma.endswith("y") and len(lemma) > 2 and lemma[-2] not in "aeiou":
        forms.add(lemma[:-1] + "ies")
    elif lemma.endswith(("s", "x", "z", "ch", "sh", "o")):
        forms.add(lemma + "es")
    else:
        forms.add(lemma + "s")
    return forms


PRESENT_FORMS = frozenset(f for lemma in VERB_LEMMAS for f in _present_inflections(lemma))


def _is_finite_verb(token: str) -> bool:
    if token in AUXILIARIES or token in IRREGULAR_PASTS or token in PRESENT_FORMS:
        return True
    if token in PARTICIPLES_ONLY or token.endswith("ing"):
        return False
    return token.endswith("ed") and len(token) > 3 and token not in ED_EXCEPTIONS


def _is_participle(token: str) -> bool:
    if token in PARTICIPLES_ONLY or token in PAST_EQ_PARTICIPLE:
        return True
    return token.endswith("ed") and len(token) > 3 and token not in ED_EXCEPTIONS


def _is_verbish(token: str) -> bool:
    return (
        _is_finite_verb(token)
        or _is_participle(token)
        or (token.endswith("ing") and len(token) > 4)
    )


@dataclass
class _VerbGroup:
    tokens: list[str]
    start_index: int

    @property
    def finite(self) -> bool:
        return any(_is_finite_verb(t) for t in self.tokens)

    @property
    def passive(self) -> bool:
        for i, tok in enumerate(self.tokens):
            if tok in BE_FORMS:
                for later in self.tokens[i + 1 :]:
                    if _is_participle(later):
                        return True
        return False


def _is_bare_lemma(token: str) -> bool:
    return (
        token in VERB_LEMMAS
        and token not in AUXILIARIES
        and token not in IRREGULAR_PASTS
    )


def _verb_groups(tokens: list[str]) -> list[_VerbGroup]:
    """Maximal runs of verb-like tokens; splits are forced at punctuation,
    subordinators, and coordinators.

    Two noun/verb disambiguation rules: a token right after an article is
    never a verb ("the harvest filled..."), and a bare-lemma first token
    followed by a later finite verb is a subject, not a verb
    ("Trust drained away.").
    """
    groups: list[_VerbGroup] = []
    current: Optional[_VerbGroup] = None
    prev_word: Optional[str] = None
    for i, raw in enumerate(tokens):
        tok = raw.lower()
        if not raw[0].isalpha() or tok in SUBORDINATORS or tok in COORDINATORS:
            current = None
            prev_word = None
            continue
        if _is_verbish(tok) and prev_word not in ARTICLES:
            if current is None:
                current = _VerbGroup(tokens=[tok], start_index=i)
                groups.append(current)
            else:
                current.tokens.append(tok)
        elif current is not None and tok in GROUP_GAP_WORDS:
            current.tokens.append(tok)
        else:
            current = None
        prev_word = tok
    if groups and groups[0].start_index == 0 and _is_bare_lemma(groups[0].tokens[0]):
        head = groups[0]
        if len(head.tokens) > 1 and any(_is_finite_verb(t) for t in head.tokens[1:]):
            head.tokens.pop(0)
            head.start_index += 1
        elif len(groups) >= 2 and any(g.finite for g in groups[1:]):
            groups = groups[1:]
    return groups


def _unresolved_pronouns(tokens: list[str]) -> list[str]:
    found = []
    for i, raw in enumerate(tokens):
        tok = raw.lower()
        if tok in PERSONAL_PRONOUNS:
            found.append(raw)
        elif tok in DEMONSTRATIVES:
            # Demonstrative counts as a pronoun only in subject position:
            # sentence-initial and immediately followed by a finite verb.
            if i == 0 and i + 1 < len(tokens) and _is_finite_verb(tokens[i + 1].lower()):
                found.append(raw)
    return found


def validate_vertex(sentence: str) -> ValidationReport:
    """Check one candidate vertex sentence against the three requirements."""
    if not sentence.strip():
        raise ValueError("sentence must be nonempty")
    tokens = _tokenize(sentence)
    groups = _verb_groups(tokens)
    finite_groups = [g for g in groups if g.finite]
    clause_count = len(finite_groups)

    is_active = not any(g.passive for g in groups)

    pronouns = _unresolved_pronouns(tokens)
    if finite_groups:
        subject_tokens = tokens[: finite_groups[0].start_index]
    else:
        subject_tokens = tokens
    lowered = [t.lower() for t in subject_tokens if t[0].isalpha()]
    has_subject = any(t not in ARTICLES for t in lowered)
    multiple_subjects = any(t in COORDINATORS for t in lowered)
    single_agent = has_subject and not multiple_subjects and not pronouns

    violations = []
    if clause_count > 2:
        violations.append(RULE_CONCISE)
    if not single_agent:
        violations.append(RULE_AGENT)
    if not is_active:
        violations.append(RULE_ACTIVE)

    return ValidationReport(
        sentence=sentence,
        clause_count=clause_count,
        has_single_explicit_agent=single_agent,
        is_active_voice=is_active,
        violations=tuple(violations),
    )


def _response_sentences(response: str) -> list[str]:
    """Split an extraction response into candidate sentences, stripping
    list markers the model may have added."""
    out = []
    for line in response.splitlines():
        line = re.sub(r"^\s*(?:[-*•]|\d+[.)])\s*", "", line).strip()
        if line:
            out.append(line)
    return out


def extract_vertices(
    text: NarrativeText,
    gateway: LLMGateway,
    params: GenerationParams,
    max_vertices: int = DEFAULT_MAX_VERTICES,
    repair: bool = True,
) -> list[Vertex]:
    """Run the four-step simplification workflow over each paragraph and
    validate every produced sentence.

    A sentence that fails validation gets one repair round (the violated
    rules are named in the follow-up prompt); if the rewrite still fails it
    is dropped with a warning. Narrative order is preserved and ids are
    assigned sequentially.
    """
    vertices: list[Vertex] = []
    counter = 0
    paragraphs = text.paragraph_texts() or [text.body.strip()]
    spans = list(text.paragraphs) or [(0, len(text.body))]

    for paragraph, span in zip(paragraphs, spans):
        if len(vertices) >= max_vertices:
            break
        response = gateway.complete(
            PromptSpec(template_id="vertex_extraction", variables={"paragraph": paragraph}),
            params,
        )
        for sentence in _response_sentences(response):
            if len(vertices) >= max_vertices:
                break
            accepted = _accept_sentence(sentence, gateway, params, repair)
            for final_text in accepted:
                if len(vertices) >= max_vertices:
                    break
                counter += 1
                vertices.append(
                    Vertex(id=f"v{counter:03d}", text=final_text, source_span=span)
                )

    if not vertices:
        raise ExtractionError(f"no vertices extracted from narrative {text.id!r}")
    return vertices


def _accept_sentence(
    sentence: str, gateway: LLMGateway, params: GenerationParams, repair: bool
) -> list[str]:
    report = validate_vertex(sentence)
    if report.ok:
        return [sentence]
    if not repair:
        logger.warning("dropping sentence %r (violations: %s)", sentence, report.violations)
        return []
    response = gateway.complete(
        PromptSpec(
            template_id="vertex_repair",
            variables={"sentence": sentence, "violations": ", ".join(report.violations)},
        ),
        params,
    )
    accepted = []
    for candidate in _response_sentences(response):
        if validate_vertex(candidate).ok:
            accepted.append(candidate)
        else:
            logger.warning("dropping unrepaired sentence %r", candidate)
    return accepted
