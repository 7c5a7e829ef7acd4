#!/usr/bin/env python3
"""Regenerate the bundled demo corpus (deterministic).

Produces src/textatlas/data/demo_corpus.jsonl: 200 short cooking-blog style
documents spread over a handful of themes, with ordinary English filler so
the tokenizer has stopwords to strip. Output is stable for a fixed seed.
"""

import json
import random
from pathlib import Path

THEMES = {
    "dessert": [
        "cake", "cookie", "cookies", "sugar", "frosting", "chocolate", "vanilla",
        "caramel", "pie", "crust", "cream", "butter", "brownie", "custard",
        "meringue", "sprinkles", "ganache", "fudge", "tart", "pudding",
        "cinnamon", "honey", "maple", "syrup", "icing", "shortbread",
    ],
    "meat": [
        "beef", "steak", "brisket", "pork", "ribs", "bacon", "sausage",
        "chicken", "thighs", "roast", "grill", "smoker", "marinade", "rub",
        "glaze", "lamb", "meatballs", "burger", "patty", "jerky", "carnitas",
        "drumstick", "sirloin", "tenderloin", "gravy", "charred",
    ],
    "pasta": [
        "pasta", "spaghetti", "penne", "lasagna", "noodles", "linguine",
        "ravioli", "gnocchi", "parmesan", "marinara", "alfredo", "pesto",
        "garlic", "basil", "oregano", "ricotta", "mozzarella", "carbonara",
        "orzo", "fettuccine", "sauce", "semolina", "rigatoni", "tortellini",
    ],
    "drinks": [
        "smoothie", "lemonade", "cocktail", "juice", "tea", "coffee", "latte",
        "espresso", "cider", "punch", "mocktail", "soda", "shake", "fizz",
        "infusion", "tonic", "spritzer", "cocoa", "matcha", "chai", "nectar",
        "slush", "frappe", "cordial",
    ],
    "salad": [
        "salad", "lettuce", "arugula", "spinach", "kale", "cucumber",
        "tomato", "avocado", "vinaigrette", "dressing", "croutons", "feta",
        "olives", "radish", "carrot", "beet", "quinoa", "slaw", "herbs",
        "sprouts", "pepper", "onion", "citrus", "walnuts",
    ],
    "bread": [
        "bread", "dough", "yeast", "sourdough", "starter", "loaf", "crumb",
        "knead", "proof", "bake", "oven", "flour", "rye", "baguette",
        "brioche", "focaccia", "rolls", "biscuits", "muffin", "scone",
        "pretzel", "crusty", "wheat", "grain",
    ],
    "soup": [
        "soup", "broth", "stew", "chowder", "bisque", "stock", "simmer",
        "ladle", "lentils", "beans", "barley", "miso", "ramen", "pho",
        "minestrone", "gumbo", "chili", "celery", "leek", "parsnip",
        "thyme", "bouillon", "dumplings", "noodle",
    ],
    "breakfast": [
        "pancakes", "waffles", "omelette", "eggs", "toast", "granola",
        "oatmeal", "porridge", "bagel", "hash", "frittata", "crepes",
        "benedict", "scramble", "yogurt", "berries", "banana", "jam",
        "butter", "bacon", "sausage", "grits", "muesli", "compote",
    ],
}

STORY = [
    "grandmother", "grandfather", "mother", "father", "sister", "brother",
    "friend", "friends", "family", "kitchen", "summer", "winter", "holiday",
    "childhood", "memory", "memories", "tradition", "weekend", "garden",
    "market", "neighbor", "picnic", "birthday", "dinner", "lunch", "evening",
    "morning", "table", "recipe", "cookbook", "notes", "story", "love",
    "comfort", "home", "farm", "village", "travel", "trip", "restaurant",
]

ACTIONS = [
    "baked", "cooked", "stirred", "whisked", "folded", "chopped", "diced",
    "sliced", "seared", "braised", "roasted", "toasted", "blended", "mixed",
    "kneaded", "rested", "chilled", "frozen", "warmed", "served", "plated",
    "tasted", "seasoned", "sprinkled", "drizzled", "layered", "mashed",
    "peeled", "grated", "measured", "poured", "simmered", "caramelized",
]

DESCRIPTORS = [
    "golden", "crispy", "tender", "fluffy", "rich", "creamy", "tangy",
    "sweet", "savory", "smoky", "bright", "fresh", "hearty", "delicate",
    "zesty", "silky", "crunchy", "juicy", "fragrant", "warm", "cozy",
    "simple", "quick", "slow", "perfect", "favorite", "classic", "rustic",
]

FILLER_SENTENCES = [
    "The {d} {t} was {d2} and everyone at the table asked for more.",
    "My {s} always {a} the {t} before the {s2} arrived.",
    "We {a} the {t2} with {t3} until it turned {d}.",
    "This is the {d} {t} my {s} taught me one {s2}.",
    "You can keep the {t} in the fridge and it stays {d}.",
    "I {a} a little {t2} over the {t3} and let it rest.",
    "Every {s2} we would gather in the {s} and share this {t}.",
    "A {d} bowl of {t} is the best part of any {s2}.",
    "Do not rush it, the {t} needs to be {a} slowly.",
    "The secret is a {d} pinch of {t2} and plenty of patience.",
    "It smells {d} while the {t} is in the oven.",
    "My {s} wrote this recipe in an old {s2} notebook.",
]


def build(seed: int = 20210, n_docs: int = 200) -> list[dict]:
    rng = random.Random(seed)
    theme_names = list(THEMES)
    docs = []
    for i in range(n_docs):
        theme = theme_names[i % len(theme_names)]
        pool = THEMES[theme]
        main = rng.sample(pool, 6)
        title = f"{rng.choice(DESCRIPTORS).title()} {main[0].title()} {rng.choice(['Recipe', 'Favorite', 'Classic', 'Story'])}"
        n_sentences = rng.randint(8, 22)
        sentences = []
        for _ in range(n_sentences):
            tpl = rng.choice(FILLER_SENTENCES)
            sentences.append(tpl.format(
                t=rng.choice(main),
                t2=rng.choice(pool),
                t3=rng.choice(pool),
                d=rng.choice(DESCRIPTORS),
                d2=rng.choice(DESCRIPTORS),
                a=rng.choice(ACTIONS),
                s=rng.choice(STORY),
                s2=rng.choice(STORY),
            ))
        body = " ".join(sentences)
        docs.append({"id": f"doc-{i:04d}", "title": title, "body": body})
    return docs


def main() -> None:
    out = Path(__file__).resolve().parents[1] / "src" / "textatlas" / "data" / "demo_corpus.jsonl"
    docs = build()
    with open(out, "w", encoding="utf-8") as fh:
        for record in docs:
            fh.write(json.dumps(record, ensure_ascii=False, sort_keys=True) + "\n")
    print(f"wrote {len(docs)} records to {out}")


if __name__ == "__main__":
    main()
