"""Published reference numbers for the 17-event multimedia rumor benchmark.

These are constants for side-by-side display and for validating a real
corpus download; nothing in the pipeline trains or tunes against them. The
three reference systems (UoS-ITI, MCG-ICT, CERTH-UNITN) are the top scorers
of the underlying verification task; their scores are embedded rather than
re-implemented.

Note on naming: the published task-setting summary lists a row "BFG"
(0.810 / 0.739) whose event average equals the per-event TFB column; it is
recorded here as TFB. See README for details.
"""

CANONICAL_EVENTS = {
    1: "Hurricane Sandy",
    2: "Boston Marathon bombing",
    3: "Sochi Olympics",
    4: "MA flight 370",
    5: "Bring Back Our Girls",
    6: "Columbian Chemicals",
    7: "Passport hoax",
    8: "Rock Elephant",
    9: "Underwater bedroom",
    10: "Livr mobile app",
    11: "Pig fish",
    12: "Solar Eclipse",
    13: "Girl with Samurai boots",
    14: "Nepal Earthquake",
    15: "Garissa Attack",
    16: "Syrian boy",
    17: "Varoufakis and zdf",
}

# (event_id, platform) -> (real, fake, others); twitter has no "others".
EXPECTED_COUNTS = {
    (1, "twitter"): (4664, 5558, 0),
    (1, "google"): (1836, 165, 203),
    (1, "baidu"): (693, 134, 291),
    (2, "twitter"): (344, 189, 0),
    (2, "google"): (619, 54, 49),
    (2, "baidu"): (317, 55, 16),
    (3, "twitter"): (0, 274, 0),
    (3, "google"): (139, 132, 76),
    (3, "baidu"): (64, 124, 53),
    (4, "twitter"): (0, 310, 0),
    (4, "google"): (143, 65, 115),
    (4, "baidu"): (80, 59, 31),
    (5, "twitter"): (0, 131, 0),
    (5, "google"): (29, 42, 37),
    (5, "baidu"): (2, 6, 4),
    (6, "twitter"): (0, 185, 0),
    (6, "google"): (35, 2, 26),
    (6, "baidu"): (19, 1, 0),
    (7, "twitter"): (0, 44, 0),
    (7, "google"): (24, 0, 2),
    (7, "baidu"): (16, 0, 4),
    (8, "twitter"): (0, 13, 0),
    (8, "google"): (3, 17, 0),
    (8, "baidu"): (4, 2, 14),
    (9, "twitter"): (0, 113, 0),
    (9, "google"): (1, 58, 0),
    (9, "baidu"): (0, 37, 13),
    (10, "twitter"): (0, 9, 0),
    (10, "google"): (0, 4, 11),
    (10, "baidu"): (0, 0, 0),
    (11, "twitter"): (0, 14, 0),
    (11, "google"): (3, 13, 4),
    (11, "baidu"): (1, 12, 7),
    (12, "twitter"): (140, 137, 0),
    (12, "google"): (40, 64, 39),
    (12, "baidu"): (0, 10, 91),
    (13, "twitter"): (0, 218, 0),
    (13, "google"): (2, 52, 6),
    (13, "baidu"): (2, 48, 0),
    (14, "twitter"): (1004, 356, 0),
    (14, "google"): (257, 60, 107),
    (14, "baidu"): (159, 19, 81),
    (15, "twitter"): (73, 6, 0),
    (15, "google"): (60, 0, 3),
    (15, "baidu"): (36, 1, 0),
    (16, "twitter"): (0, 1786, 0),
    (16, "google"): (4, 1, 3),
    (16, "baidu"): (0, 0, 0),
    (17, "twitter"): (0, 61, 0),
    (17, "google"): (2, 0, 18),
    (17, "baidu"): (0, 0, 0),
}

EXPECTED_TOTALS = {
    "twitter": (6225, 9404, 0),
    "google": (3197, 729, 699),
    "baidu": (1393, 508, 605),
}

# Reference-system F1, task setting and event-setting average.
BASELINE_TASK_F1 = {"UoS-ITI": 0.830, "MCG-ICT": 0.942, "CERTH-UNITN": 0.911}
BASELINE_EVENT_AVG_F1 = {"UoS-ITI": 0.224, "MCG-ICT": 0.756, "CERTH-UNITN": 0.693}

# Reference-system per-event F1 in canonical event order 1..17.
BASELINE_EVENT_F1 = {
    "UoS-ITI": (0.658, 0.007, 0.057, 0.538, 0.000, 0.555, 0.000, 0.000, 0.000,
                0.000, 0.000, 0.000, 0.000, 0.000, 0.000, 1.000, 1.000),
    "MCG-ICT": (0.594, 0.494, 0.882, 0.826, 0.988, 0.949, 1.000, 0.870, 0.772,
                0.615, 0.963, 0.655, 0.954, 0.330, 0.130, 0.990, 0.827),
    "CERTH-UNITN": (0.718, 0.745, 0.595, 0.717, 0.947, 0.916, 0.475, 1.000, 0.996,
                    0.821, 0.000, 0.754, 0.795, 0.419, 0.156, 0.999, 1.000),
}

# Published results for the evidence-feature method itself (task, event-avg).
PUBLISHED_CCP_F1 = {"TFG": (0.908, 0.822), "TFB": (0.810, 0.739), "COMBO": (0.899, 0.816)}

# Published transfer experiment averages (random baseline vs transferred model).
PUBLISHED_TRANSFER_AVG = {"Random": 0.312, "Transfer": 0.531}


def is_canonical_corpus(event_names: dict[int, str]) -> bool:
    """True when the corpus carries exactly the canonical 17 events."""
    return event_names == CANONICAL_EVENTS


def expected_counts_table() -> dict[tuple[int, str, str], int]:
    """EXPECTED_COUNTS re-keyed to (event_id, platform, label)."""
    table = {}
    for (ev, platform), (real, fake, others) in EXPECTED_COUNTS.items():
        table[(ev, platform, "real")] = real
        table[(ev, platform, "fake")] = fake
        table[(ev, platform, "others")] = others
    return table
