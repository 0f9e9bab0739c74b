"""Random schemas/questions for property tests, drawn from a small shared vocabulary
so that exact and partial matches actually occur."""

import random

from schemalink.model import Column, Schema, Table, normalize_name, tokenize

VOCAB = [
    "name", "names", "id", "student", "students", "record", "company", "country",
    "countries", "age", "first", "high", "schooler", "schoolers", "city", "code",
    "pet", "pets", "type", "the", "of", "number", "singer", "singers", "rank", "points",
]
PUNCT = [",", "?", ".", "'"]


def _identifier(rng):
    words = rng.sample(VOCAB, rng.choice([1, 1, 2, 2, 3]))
    style = rng.choice(["snake", "camel", "upper", "plain"])
    if style == "snake":
        return "_".join(words)
    if style == "camel":
        return words[0] + "".join(w.capitalize() for w in words[1:])
    if style == "upper":
        return "_".join(words).upper()
    return "_".join(w.capitalize() for w in words)


def random_schema(rng, db_id="db"):
    tables, seen_tables = [], set()
    for _ in range(rng.randint(1, 4)):
        tname = _identifier(rng)
        key = tuple(normalize_name(tname))
        if key in seen_tables:
            continue
        seen_tables.add(key)
        cols, seen_cols = [], set()
        for _ in range(rng.randint(0, 4)):
            cname = _identifier(rng)
            ckey = tuple(normalize_name(cname))
            if ckey in seen_cols:
                continue
            seen_cols.add(ckey)
            natural = " ".join(normalize_name(cname)) if rng.random() < 0.5 else ""
            cols.append(Column(cname, natural))
        tables.append(Table(tname, "", tuple(cols)))
    return Schema(db_id, tuple(tables))


def random_question(rng):
    words = []
    for _ in range(rng.randint(0, 14)):
        if rng.random() < 0.12:
            words.append(rng.choice(PUNCT))
        else:
            w = rng.choice(VOCAB)
            words.append(w.capitalize() if rng.random() < 0.2 else w)
    return tokenize(" ".join(words))


def random_case(seed):
    rng = random.Random(seed)
    return random_question(rng), random_schema(rng)
