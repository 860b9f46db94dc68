#!/usr/bin/env python3
"""Regenerates the bundled fixture corpus and query set.

The corpus is synthetic but retrieval-shaped: 200 documents over 10 topics
with a shared function-word layer, a general mid-frequency layer, and
per-topic content words, so BM25 pools, low-idf slices, and language models
all behave the way the pipeline expects. Output is committed; rerunning this
script reproduces it byte-for-byte.
"""

import json
import random

SEED = 20240229

FUNCTION_WORDS = (
    "the of and to in a is that for it on with as are be this by from at or "
    "an was we which has have not but they were their can all one more when "
    "there been if out up so no its about into than them only over such our "
    "these some him then now made may after also did many most"
).split()

GENERAL_WORDS = (
    "report group public national state local official member question press "
    "service system program work part point case fact fair small large early "
    "late open close high low long short great little own old new good last "
    "first next level area issue plan term week month year day home water "
    "light land road city town country region north south east west street "
    "house office court board panel staff chief head front back side place "
    "order form line word name note page story record result number figure "
    "market price trade cost share fund bank debt loan rate tax income money "
    "study review survey sample test model method process change growth fall "
    "rise drop gain loss total half third quarter major minor human person "
    "people family child parent school student teacher class course paper"
).split()

TOPICS = {
    "harvest": (
        "harvest grain wheat maize crop farm farmer field soil irrigation "
        "drought seed fertilizer yield barn silo tractor plough livestock "
        "pasture orchard vineyard granary agronomy"
    ).split(),
    "glacier": (
        "glacier ice melt polar arctic tundra permafrost iceberg snowfall "
        "blizzard expedition fjord moraine crevasse altitude summit ridge "
        "avalanche frost thaw climatology borehole sediment"
    ).split(),
    "orchestra": (
        "orchestra violin cello symphony conductor concerto rehearsal "
        "woodwind brass percussion soprano tenor aria opera chorus melody "
        "harmony tempo quartet composer premiere podium encore"
    ).split(),
    "reactor": (
        "reactor uranium fission coolant turbine megawatt fuel rod "
        "containment neutron isotope enrichment meltdown shielding "
        "radiation decommission inspector safeguard plutonium cooling "
        "criticality moderator vessel"
    ).split(),
    "harbor": (
        "harbor vessel cargo freight dock pier tugboat container customs "
        "anchorage mooring ballast hull keel deck navigation lighthouse "
        "ferry shipyard stevedore manifest quay berth"
    ).split(),
    "senate": (
        "senate ballot election campaign candidate legislature amendment "
        "veto statute caucus coalition incumbent constituency referendum "
        "lobbying filibuster quorum mandate bipartisan gubernatorial "
        "ordinance repeal tribunal"
    ).split(),
    "epidemic": (
        "epidemic vaccine virus outbreak quarantine infection pathogen "
        "antibody immunity symptom diagnosis clinic hospital ward dosage "
        "inoculation epidemiology contagion incubation ventilator serum "
        "antigen mutation"
    ).split(),
    "telescope": (
        "telescope galaxy nebula quasar orbit satellite astronomer "
        "observatory spectrum luminosity parallax supernova asteroid comet "
        "eclipse photometry aperture celestial planetary cosmology redshift "
        "interstellar stellar"
    ).split(),
    "quarry": (
        "quarry granite marble limestone excavation blasting gravel bedrock "
        "drill crusher aggregate masonry sandstone geology stratum mineral "
        "ore smelter slag kiln cement mortar chisel"
    ).split(),
    "regatta": (
        "regatta sailing yacht crew helmsman spinnaker rigging mast rudder "
        "tack gybe windward leeward buoy course knot capsize trophy "
        "clubhouse oarsman sculler coxswain stroke"
    ).split(),
}

# Each query pairs distinctive words from one topic; the third term, when
# present, leans on a neighbouring topic to keep the pools from being pure.
QUERIES = [
    ("q01", "harvest drought"),
    ("q02", "glacier expedition"),
    ("q03", "orchestra premiere"),
    ("q04", "reactor containment inspector"),
    ("q05", "harbor customs manifest"),
    ("q06", "senate referendum"),
    ("q07", "epidemic quarantine"),
    ("q08", "telescope supernova"),
    ("q09", "quarry excavation"),
    ("q10", "regatta capsize trophy"),
]


def zipf_choice(rng, words):
    n = len(words)
    weights = [1.0 / (i + 1) for i in range(n)]
    total = sum(weights)
    x = rng.random() * total
    acc = 0.0
    for i, w in enumerate(weights):
        acc += w
        if x <= acc:
            return words[i]
    return words[-1]


def make_doc(rng, topic_names, topic_idx):
    topic = topic_names[topic_idx]
    neighbour = topic_names[(topic_idx + rng.choice([1, 3])) % len(topic_names)]
    length = rng.randint(80, 150)
    tokens = []
    for _ in range(length):
        roll = rng.random()
        if roll < 0.30:
            tokens.append(zipf_choice(rng, FUNCTION_WORDS))
        elif roll < 0.60:
            tokens.append(zipf_choice(rng, TOPICS[topic]))
        elif roll < 0.72:
            tokens.append(zipf_choice(rng, TOPICS[neighbour]))
        else:
            tokens.append(rng.choice(GENERAL_WORDS))
    return " ".join(tokens)


def main():
    rng = random.Random(SEED)
    topic_names = sorted(TOPICS)
    with open("corpus.jsonl", "w") as f:
        for i in range(200):
            doc_id = f"d{i + 1:03d}"
            text = make_doc(rng, topic_names, i % len(topic_names))
            f.write(json.dumps({"id": doc_id, "text": text}) + "\n")
    with open("queries.tsv", "w") as f:
        for qid, text in QUERIES:
            f.write(f"{qid}\t{text}\n")


if __name__ == "__main__":
    main()
