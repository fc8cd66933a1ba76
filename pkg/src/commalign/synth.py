"""Synthetic commentary/event corpus generator.

Produces a seeded, fully reproducible corpus with known ground truth:
templated paraphrases per event type, optional macro sentences describing
several events, distractor chatter with no aligned events, and a
configurable frequency skew so one background event type can dominate the
event log while rarely appearing in the truth.

Clauses of a multi-event sentence are joined with "; ", so the number of
described events can be recovered from the text alone (used by tests).
"""

from __future__ import annotations

import random
from dataclasses import dataclass
from typing import Sequence

from .corpus import Event, GroundTruth, Sentence

__all__ = ["SynthParams", "generate_synthetic_corpus", "EVENT_TYPE_BANK"]


# (templates, qualifiers, player arity). Template slots: {p1}, {p2}.
EVENT_TYPE_BANK: dict[str, tuple[tuple[str, ...], tuple[str, ...], int]] = {
    "pass": (
        (
            "{p1} slides a pass across to {p2}",
            "{p1} feeds {p2} with a clever ball",
            "{p1} and {p2} link up in midfield",
            "neat passing as {p1} finds {p2}",
            "{p1} works it short to {p2}",
        ),
        ("Long Ball", "Head Pass", "Through Ball", "Cross"),
        2,
    ),
    "shot": (
        (
            "{p1} lets fly from distance",
            "a fierce drive from {p1} towards goal",
            "{p1} shoots from the edge of the box",
            "{p1} tries his luck with a shot",
        ),
        ("Right Foot", "Left Foot", "Volley"),
        1,
    ),
    "miss": (
        (
            "{p1} drags the effort well wide",
            "wild shot from {p1} sails over the bar",
            "{p1} misses the target from close range",
            "poor effort from {p1} goes wide",
        ),
        ("Right Foot", "Left Foot", "Header"),
        1,
    ),
    "save": (
        (
            "{p1} forces a smart save from the keeper",
            "the goalkeeper tips the shot from {p1} around the post",
            "brilliant stop denies {p1} there",
            "{p1} sees his strike saved low down",
        ),
        ("Parried", "Caught", "Tipped Over"),
        1,
    ),
    "goal": (
        (
            "goal for the visitors as {p1} converts",
            "{p1} scores with a composed finish",
            "{p1} buries it in the bottom corner what a goal",
            "the net bulges {p1} makes it count",
        ),
        ("Right Foot", "Left Foot", "Header"),
        1,
    ),
    "foul": (
        (
            "{p1} brings down {p2} and the whistle goes",
            "clumsy challenge by {p1} on {p2} gives away a foul",
            "free kick after {p1} catches {p2} late",
            "{p1} fouls {p2} in a dangerous area",
        ),
        ("Trip", "Push", "Late Tackle"),
        2,
    ),
    "card": (
        (
            "{p1} goes into the book for that one",
            "yellow card shown to {p1}",
            "the referee cautions {p1} after the foul",
            "booking for {p1} no complaints there",
        ),
        ("Yellow", "Second Yellow", "Red"),
        1,
    ),
    "corner": (
        (
            "{p1} swings the corner into the box",
            "corner taken short by {p1}",
            "another corner this time delivered by {p1}",
            "{p1} whips the corner towards the near post",
        ),
        ("Inswing", "Outswing", "Short"),
        1,
    ),
    "tackle": (
        (
            "{p1} wins the ball cleanly from {p2}",
            "strong tackle by {p1} halts {p2}",
            "{p1} dispossesses {p2} with a sliding challenge",
            "{p2} is robbed by a firm tackle from {p1}",
        ),
        ("Standing", "Sliding"),
        2,
    ),
    "clearance": (
        (
            "{p1} hacks the danger clear",
            "headed clearance by {p1} relieves the pressure",
            "{p1} boots it away from the back line",
            "desperate clearance from {p1}",
        ),
        ("Head", "Foot"),
        1,
    ),
    "offside": (
        (
            "the flag is up against {p1}",
            "{p1} strays offside again",
            "offside call halts {p1} in full flight",
            "{p1} times the run badly and is flagged",
        ),
        ("Near Side", "Far Side"),
        1,
    ),
    "interception": (
        (
            "{p1} reads it well and cuts out the ball",
            "interception by {p1} starts a counter",
            "{p1} steps in to intercept the pass",
            "alert play from {p1} to pick off the ball",
        ),
        ("High", "Low"),
        1,
    ),
    "take_on": (
        (
            "{p1} skips past {p2} with a lovely touch",
            "{p1} beats {p2} on the wing",
            "great feet from {p1} leave {p2} behind",
            "{p1} dribbles around {p2}",
        ),
        ("Inside", "Outside"),
        2,
    ),
}

DISTRACTOR_TEMPLATES: tuple[str, ...] = (
    "possession is running at {n} percent for the home side",
    "the attendance tonight is announced as {m} thousand",
    "a light drizzle is starting to fall over the ground",
    "both sides have managed {n} attempts so far this half",
    "the league table will make for grim reading after today",
    "conditions are blustery and the surface looks heavy",
    "the fourth official signals {n} minutes of added time",
    "these two clubs have met {n} times in recent seasons",
    "the travelling supporters are in fine voice tonight",
    "temperatures have dipped sharply since the warm up",
    "the club confirmed a new sponsorship deal this morning",
    "statistics show {n} completed passes in the opening spell",
)

_NAME_PREFIXES = (
    "Ash", "Bram", "Cald", "Dray", "Elm", "Fair", "Gos", "Hale", "Ives",
    "Kerr", "Lock", "Marsh", "Nash", "Oakden", "Pren", "Quill", "Rud",
    "Staf", "Thorn", "Ves", "Wick", "Yor",
)
_NAME_SUFFIXES = (
    "beck", "bourne", "by", "cott", "dale", "field", "ford", "gate", "ham",
    "hurst", "ley", "mere", "ridge", "shaw", "stone", "ton", "well", "worth",
)

NAME_POOL: tuple[str, ...] = tuple(
    p + s for p in _NAME_PREFIXES for s in _NAME_SUFFIXES
)


@dataclass(frozen=True)
class SynthParams:
    games: int = 10
    sentences_per_game: int = 40
    event_rate: float = 0.05
    templates_per_type: int = 3
    distractor_rate: float = 0.1
    macro_rate: float = 0.2
    max_macro_size: int = 3
    roster_size: int = 14
    seed: int = 0
    # Frequency skew: background events draw `common_type` with probability
    # `common_type_share`; described events draw it with `described_common_share`.
    common_type: str = "pass"
    common_type_share: float = 0.6
    described_common_share: float = 0.05
    sentence_gap: int = 60
    described_jitter: int = 40

    def __post_init__(self) -> None:
        if self.games < 1 or self.sentences_per_game < 1:
            raise ValueError("need at least one game and one sentence per game")
        if self.max_macro_size < 1:
            raise ValueError("max_macro_size must be >= 1")
        if self.common_type not in EVENT_TYPE_BANK:
            raise ValueError(f"unknown common_type {self.common_type!r}")
        if not 0 <= self.distractor_rate <= 1 or not 0 <= self.macro_rate <= 1:
            raise ValueError("rates must lie in [0, 1]")


def _pick_templates(rng: random.Random, params: SynthParams) -> dict[str, list[str]]:
    in_play: dict[str, list[str]] = {}
    for etype in sorted(EVENT_TYPE_BANK):
        templates = EVENT_TYPE_BANK[etype][0]
        k = min(params.templates_per_type, len(templates))
        in_play[etype] = rng.sample(list(templates), k)
    return in_play


def _make_event(
    rng: random.Random,
    event_id: str,
    game_id: str,
    t: int,
    etype: str,
    roster: Sequence[str],
    teams: Sequence[str],
) -> Event:
    _, qualifiers, arity = EVENT_TYPE_BANK[etype]
    players = rng.sample(list(roster), arity)
    args = [("qualifier", rng.choice(list(qualifiers))), ("team", rng.choice(list(teams)))]
    if rng.random() < 0.5:
        args.append(("outcome", rng.choice(["successful", "unsuccessful"])))
    return Event(event_id, game_id, t, etype, tuple(sorted(args)), tuple(players))


def _render_clause(rng: random.Random, event: Event, templates: dict[str, list[str]]) -> str:
    template = rng.choice(templates[event.event_type])
    p1 = event.string_args[0]
    p2 = event.string_args[1] if len(event.string_args) > 1 else p1
    return template.format(p1=p1, p2=p2)


def generate_synthetic_corpus(
    params: SynthParams,
) -> tuple[list[Sentence], list[Event], GroundTruth]:
    """Generate a seeded corpus; identical params yield identical output."""
    rng = random.Random(params.seed)
    templates = _pick_templates(rng, params)
    other_types = [t for t in sorted(EVENT_TYPE_BANK) if t != params.common_type]

    sentences: list[Sentence] = []
    events: list[Event] = []
    truth: dict[str, frozenset[str]] = {}

    for g in range(params.games):
        game_id = f"g{g:02d}"
        roster = rng.sample(NAME_POOL, params.roster_size)
        teams = (f"{game_id}_home", f"{game_id}_away")
        duration = (params.sentences_per_game + 1) * params.sentence_gap
        event_counter = 0

        def next_event_id() -> str:
            nonlocal event_counter
            event_counter += 1
            return f"{game_id}e{event_counter:04d}"

        for i in range(params.sentences_per_game):
            sid = f"{game_id}s{i:03d}"
            t_s = (i + 1) * params.sentence_gap
            if rng.random() < params.distractor_rate:
                template = rng.choice(DISTRACTOR_TEMPLATES)
                text = template.format(n=rng.randint(2, 60), m=rng.randint(10, 60))
                sentences.append(Sentence.from_text(sid, game_id, t_s, text))
                truth[sid] = frozenset()
                continue

            if params.max_macro_size > 1 and rng.random() < params.macro_rate:
                m = rng.randint(2, params.max_macro_size)
            else:
                m = 1
            if rng.random() < params.described_common_share:
                first_type = params.common_type
            else:
                first_type = rng.choice(other_types)
            extra = [t for t in other_types if t != first_type]
            etypes = [first_type] + rng.sample(extra, m - 1)

            described: list[Event] = []
            for etype in etypes:
                t_e = t_s + rng.randint(-params.described_jitter, params.described_jitter)
                t_e = max(0, min(duration, t_e))
                described.append(
                    _make_event(rng, next_event_id(), game_id, t_e, etype, roster, teams)
                )
            clauses = [_render_clause(rng, ev, templates) for ev in described]
            text = "; ".join(clauses)
            sentences.append(Sentence.from_text(sid, game_id, t_s, text))
            truth[sid] = frozenset(ev.event_id for ev in described)
            events.extend(described)

        n_background = round(params.event_rate * duration)
        for _ in range(n_background):
            t_e = rng.randint(0, duration)
            if rng.random() < params.common_type_share:
                etype = params.common_type
            else:
                etype = rng.choice(other_types)
            events.append(
                _make_event(rng, next_event_id(), game_id, t_e, etype, roster, teams)
            )

    sentences.sort(key=lambda s: (s.game_id, s.t, s.sentence_id))
    events.sort(key=lambda e: (e.game_id, e.t, e.event_id))
    return sentences, events, GroundTruth(truth)
