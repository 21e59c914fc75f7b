"""Seeded synthetic career-domain dataset generator.

Fills per-subcategory templates with entity lexicon values, injects
nonnative-style noise into the context words (typos, dropped articles,
adjacent swaps), and emits the matching gazetteer, taxonomy, and starter
rules. Gold entity char spans are exact by construction: the query text is
assembled token-by-token after noise, with spans recorded at assembly time.
"""
from __future__ import annotations

import math
import random
from dataclasses import dataclass, field

from .gazetteer import Gazetteer
from .rules import Rule
from .text import Dataset, LabeledExample, RawQuery, Taxonomy, build_vocab, tokenize

# --------------------------------------------------------------------------
# Taxonomy: 9 categories, 19 subcategories, 14 entity types
# --------------------------------------------------------------------------

CATEGORIES = {
    "find_colleges": ["colleges_in_city", "colleges_for_degree", "college_ranking"],
    "exams": ["exam_dates", "exam_eligibility", "exam_preparation"],
    "coaching_institutes": ["coaching_for_exam_in_city", "coaching_institute_info"],
    "scholarships": ["scholarship_for_degree", "scholarship_eligibility"],
    "jobs": ["jobs_for_skill", "jobs_in_city"],
    "courses": ["course_info", "course_duration"],
    "career_guidance": ["career_after_degree", "stream_selection"],
    "fees": ["fee_info"],
    "admissions": ["admission_process", "admission_deadline"],
}

ENTITY_TYPES = ["city", "college", "degree", "exam", "institute", "course",
                "skill", "company", "job_role", "stream", "scholarship",
                "duration", "fee_amount", "date"]

# NER-2 clubbing: categories grouped by shared slot-entity types.
CLUB_GROUPS = [
    (["find_colleges", "admissions", "fees"],
     ["city", "college", "degree", "stream", "course", "date", "exam",
      "fee_amount", "institute"]),
    (["exams", "coaching_institutes", "scholarships"],
     ["exam", "date", "degree", "stream", "institute", "city", "scholarship"]),
    (["jobs", "career_guidance"],
     ["job_role", "skill", "city", "company", "degree", "stream"]),
    (["courses"],
     ["course", "duration", "institute", "degree", "city"]),
]


def default_taxonomy() -> Taxonomy:
    return Taxonomy(CATEGORIES, ENTITY_TYPES)


def club_groups(taxonomy: Taxonomy) -> dict:
    groups = {}
    for cats, types in CLUB_GROUPS:
        for c in cats:
            groups[taxonomy.category_id(c)] = frozenset(types)
    return groups


# --------------------------------------------------------------------------
# Entity lexicons (deterministic construction, no RNG)
# --------------------------------------------------------------------------

_CITY_SEEDS = [
    "mumbai", "delhi", "new delhi", "pune", "bangalore", "chennai", "kolkata",
    "hyderabad", "jaipur", "lucknow", "nagpur", "indore", "bhopal", "patna",
    "kanpur", "surat", "vadodara", "nashik", "rajkot", "amritsar", "varanasi",
    "agra", "meerut", "ranchi", "raipur", "guwahati", "kochi", "mysore",
    "chandigarh", "dehradun", "shimla", "gwalior", "jodhpur", "udaipur",
]
_CITY_PRE = ["ram", "kot", "bhan", "chand", "sita", "nav", "gopal", "hari",
             "moti", "sundar", "bala", "keshav", "madho", "raj", "veer",
             "anand", "kiran", "prem", "shanti", "vijay", "amar", "bhim",
             "daulat", "fateh", "girdhar", "jag", "kishan", "lakshman",
             "mahendra", "narain", "partap", "ratan", "sawai", "tej",
             "uday", "yash", "ajit", "bhupal", "charan", "dev", "gokul",
             "hira", "ishwar", "jai", "kunwar", "lal", "mangal", "nand",
             "onkar", "pritam", "roshan", "sohan", "trilok", "umed",
             "vasant", "zorawar", "badri", "dhani", "ganga", "jamuna",
             "akbar", "birbal", "champa", "dhruv", "ekta", "farid", "gauri",
             "heman", "indar", "jaswant", "karan", "lakhan", "mohan",
             "naresh", "omi", "pawan", "qadir", "rustam", "shyam", "tulsi",
             "ugra", "vikram", "waris", "xaver", "yamun"]
_CITY_SUF = ["pur", "garh", "nagar", "abad", "ganj", "kota", "wada", "palli",
             "gaon", "khera", "sarai", "bari", "mau", "tola", "dih", "pet",
             "kund", "vihar", "dwar", "tal"]

_NAME_SEEDS = ["sharma", "verma", "patel", "reddy", "iyer", "khanna", "mehta",
               "joshi", "kulkarni", "desai", "chopra", "malhotra", "saxena",
               "trivedi", "bhatt", "rao", "nair", "menon", "pillai", "gupta",
               "mishra", "pandey", "dubey", "tiwari", "shukla", "agarwal",
               "bansal", "goyal", "jindal", "mittal"]
_NAME_SYL1 = ["ba", "cha", "dha", "ga", "ja", "ka", "la", "ma", "na", "pa",
              "ra", "sa", "ta", "va", "ya", "bha", "gha", "kha"]
_NAME_SYL2 = ["ndari", "tkar", "rode", "lekar", "nde", "shpande", "wari",
              "dgil", "thore", "skar", "mbre", "dkar"]
_NAME_PARTS = _NAME_SEEDS + [a + b for a in _NAME_SYL1 for b in _NAME_SYL2]

_FIELDS = ["technology", "engineering", "science", "management", "commerce",
           "arts", "medicine", "law", "pharmacy", "architecture"]

_DEGREES = [
    "b tech", "btech", "m tech", "mtech", "mba", "bba", "b sc", "m sc", "bsc",
    "msc", "phd", "b com", "m com", "bcom", "mcom", "ba", "ma", "llb", "llm",
    "mbbs", "bds", "b pharma", "m pharma", "bca", "mca", "b arch", "b ed",
    "m ed", "b des", "polytechnic diploma",
]

_EXAM_SEEDS = ["jee", "jee main", "jee advanced", "neet", "cat", "gate", "gre",
               "gmat", "ielts", "toefl", "upsc", "ssc cgl", "clat", "bitsat",
               "comedk", "mat", "xat", "snap", "nmat", "mh cet", "kcet",
               "wbjee", "viteee", "nda", "cds", "net", "jee mains"]
_EXAM_SYN = ["natex", "ugtap", "scholex", "entrex", "medcat", "lawcet",
             "agricet", "pharmcet", "designat", "statex"] + [
    a + b for a in ("vid", "shik", "pragy", "bodh", "gyan", "medh", "tarkt",
                    "sankalp", "abhyas", "nipun", "kaushal", "pratibh")
    for b in ("cet", "tex", "sat", "nat", "mat", "pat")]

_COURSES = [
    "data science", "machine learning", "web development", "graphic design",
    "digital marketing", "cloud computing", "cyber security", "app development",
    "artificial intelligence", "blockchain", "data analytics", "ui design",
    "video editing", "content writing", "financial modelling", "stock trading",
    "interior design", "fashion design", "animation", "game development",
    "ethical hacking", "devops", "full stack development", "embedded systems",
    "robotics", "biotechnology", "foreign languages", "public speaking",
    "photography", "event management", "hotel management", "supply chain",
]

_SKILLS = ["python", "java", "sql", "excel", "communication", "leadership",
           "javascript", "react", "nodejs", "django", "tableau", "powerbi",
           "photoshop", "autocad", "matlab", "sap", "salesforce", "writing",
           "negotiation", "accounting", "testing", "networking", "linux",
           "marketing", "teamwork", "golang", "kotlin", "swift", "rust",
           "statistics", "tensorflow", "hadoop", "spark", "selenium"]

_COMPANY_SUF = ["technologies", "solutions", "systems", "infotech", "labs",
                "consulting", "industries"]

_JOB_ROLES = [
    "software engineer", "data analyst", "data scientist", "web developer",
    "product manager", "business analyst", "graphic designer", "accountant",
    "hr executive", "sales manager", "content writer", "digital marketer",
    "civil engineer", "mechanical engineer", "network administrator",
    "quality analyst", "project coordinator", "financial advisor",
    "ux designer", "devops engineer", "teacher", "pharmacist", "lab technician",
    "operations manager", "customer support executive",
]

_STREAMS = ["science", "commerce", "arts", "humanities", "engineering",
            "medical", "law", "management", "design", "vocational",
            "agriculture", "pharmacy"]

_DURATIONS = ["6 months", "3 months", "1 year", "2 years", "3 years",
              "4 years", "18 months", "9 months", "5 years", "8 weeks",
              "12 weeks", "45 days", "100 hours", "2 months", "30 days"]

_FEES = ["50000 rupees", "80000 rupees", "1 lakh", "2 lakhs", "5 lakhs",
         "10 lakhs", "25000 rupees", "15000 rupees", "3 lakhs", "75000 rupees",
         "40000 rupees", "12 lakhs", "60000 rupees", "90000 rupees"]

_MONTHS = ["january", "february", "march", "april", "may", "june", "july",
           "august", "september", "october", "november", "december"]

# fused suffixes keep coaching brand names opaque single tokens
_INSTITUTE_SUF = ["alaya", "kendra", "shala"]
_SCHOLARSHIP_SUF = ["shri", "nidhi", "vritti"]


def _build_lexicons() -> dict:
    lex = {}
    cities = list(_CITY_SEEDS)
    for p in _CITY_PRE:
        for s in _CITY_SUF:
            cities.append(p + s)
    lex["city"] = cities

    colleges = []
    for name in _NAME_PARTS:
        for fld in _FIELDS[:5]:
            colleges.append(f"{name} institute of {fld}")
    for city in _CITY_SEEDS[:20]:
        colleges.append(f"national college of {city}")
    lex["college"] = colleges

    lex["degree"] = list(_DEGREES)
    lex["exam"] = _EXAM_SEEDS + _EXAM_SYN
    insts = [name + suf for name in _NAME_PARTS for suf in _INSTITUTE_SUF]
    insts += ["fiitjee", "resonance", "narayana", "aakash", "allen", "pace"]
    lex["institute"] = insts
    lex["course"] = list(_COURSES)
    lex["skill"] = list(_SKILLS)
    companies = []
    for name in _NAME_PARTS[:20]:
        for suf in _COMPANY_SUF[:4]:
            companies.append(f"{name} {suf}")
    companies += ["infosys", "wipro", "tcs", "hcl", "cognizant", "accenture"]
    lex["company"] = companies
    lex["job_role"] = list(_JOB_ROLES)
    lex["stream"] = list(_STREAMS)
    scholarships = [name + suf for name in _NAME_PARTS
                    for suf in _SCHOLARSHIP_SUF]
    scholarships += ["kvpy", "inspire", "pragati", "saksham", "swanath"]
    lex["scholarship"] = scholarships
    lex["duration"] = list(_DURATIONS)
    lex["fee_amount"] = list(_FEES)
    dates = list(_MONTHS)
    for m in _MONTHS:
        dates.append(f"{m} 2026")
        dates.append(f"15 {m}")
    lex["date"] = dates
    return {t: [tuple(v.split()) for v in vals] for t, vals in lex.items()}


LEXICONS = _build_lexicons()

# --------------------------------------------------------------------------
# Templates ({type} placeholders refer to entity types)
# --------------------------------------------------------------------------

TEMPLATES = {
    "colleges_in_city": [
        "which are the best colleges in {city}",
        "show me some colleges near {city}",
        "show me some colleges near {city} for {degree}",
        "list the top colleges in {city}",
        "suggest some good colleges around {city} please",
        "i am looking for colleges in {city}",
    ],
    "colleges_for_degree": [
        "which colleges offer {degree}",
        "best colleges for {degree} in {city}",
        "where can i study {degree}",
        "top colleges for doing {degree}",
        "i want to do {degree} which college should i join",
    ],
    "college_ranking": [
        "what is the ranking of {college}",
        "is {college} better than other colleges",
        "how good is {college} for {stream}",
        "tell me the rank of {college}",
        "where does {college} stand in rankings",
        "tell me about {college}",
        "reviews of {college}",
        "how good is {college}",
        "should i join {college}",
    ],
    "exam_dates": [
        "when will {exam} be held",
        "what is the date of {exam}",
        "is {exam} happening in {date}",
        "tell me the exam date for {exam}",
        "when is {exam} this time",
        "tell me about {exam}",
    ],
    "exam_eligibility": [
        "am i eligible for {exam} after {degree}",
        "what is the eligibility for {exam}",
        "can i give {exam} with {stream} stream",
        "who is eligible to write {exam}",
        "eligibility criteria for {exam}",
        "am i eligible for {exam}",
        "who can apply for {exam}",
    ],
    "exam_preparation": [
        "how to prepare for {exam}",
        "best books for {exam} preparation",
        "tips to crack {exam}",
        "how should i start preparing for {exam}",
        "study plan for {exam} in {duration}",
    ],
    "coaching_for_exam_in_city": [
        "coaching institutes in {city} for {exam}",
        "best coaching near {city} for {exam}",
        "suggest {exam} coaching classes in {city}",
        "where can i join coaching for {exam} in {city}",
        "good coaching centers for {exam} around {city}",
    ],
    "coaching_institute_info": [
        "tell me about {institute}",
        "is {institute} good for {exam}",
        "reviews of {institute}",
        "how is {institute} for preparation",
        "should i join {institute}",
        "how good is {institute}",
    ],
    "scholarship_for_degree": [
        "scholarships for {degree} students",
        "any scholarship available for {degree}",
        "how to get {scholarship} for {degree}",
        "which scholarship can i get for {degree}",
        "is there any scholarship for doing {degree}",
    ],
    "scholarship_eligibility": [
        "am i eligible for {scholarship}",
        "eligibility criteria for {scholarship}",
        "who can apply for {scholarship}",
        "what marks are needed for {scholarship}",
        "can i apply for {scholarship} after {stream}",
        "tell me about {scholarship}",
    ],
    "jobs_for_skill": [
        "jobs for people with {skill} skills",
        "what jobs can i get with {skill}",
        "openings at {company} for {skill}",
        "which companies hire for {skill}",
        "can {skill} get me a job at {company}",
    ],
    "jobs_in_city": [
        "jobs in {city} for {job_role}",
        "any {job_role} vacancy in {city}",
        "is {company} hiring in {city}",
        "find me {job_role} openings in {city}",
        "companies hiring {job_role} in {city}",
    ],
    "course_info": [
        "tell me about the {course} course",
        "what is covered in {course}",
        "is {course} worth learning at {institute}",
        "details of the {course} course please",
        "what will i learn in {course}",
    ],
    "course_duration": [
        "how long is the {course} course",
        "duration of {course} at {institute}",
        "can i finish {course} in {duration}",
        "how much time does {course} take",
        "is {course} completed within {duration}",
    ],
    "career_after_degree": [
        "what can i do after {degree}",
        "career options after {degree}",
        "jobs after {degree} in {stream}",
        "which career path is good after {degree}",
        "what should i pursue after finishing {degree}",
    ],
    "stream_selection": [
        "should i choose {stream} or not",
        "which stream is best for becoming {job_role}",
        "is {stream} good for becoming {job_role}",
        "help me pick between {stream} and other streams",
        "is {stream} the right stream for me",
    ],
    "fee_info": [
        "what is the fee of {college}",
        "fees for {degree} at {college}",
        "is {fee_amount} enough for {course}",
        "how much does {course} cost at {institute}",
        "what are the charges for {degree} in {college}",
        "will the fee be more than {fee_amount} at {college}",
    ],
    "admission_process": [
        "how to get admission in {college}",
        "admission process for {degree} at {college}",
        "documents needed for admission to {college}",
        "what is the procedure to join {college}",
        "steps for taking admission in {college}",
    ],
    "admission_deadline": [
        "last date to apply to {college}",
        "when does admission close at {college}",
        "is {date} the deadline for {college} admission",
        "till when can i apply to {college}",
        "application deadline of {college} please",
    ],
}

STARTER_RULES = [
    # (category, subcategory, kind, pattern, priority)
    ("find_colleges", "college_ranking", "keyword", "ranking", 5),
    ("find_colleges", "college_ranking", "keyword", "rankings", 5),
    ("exams", "exam_preparation", "keyword", "prepare", 5),
    ("exams", "exam_preparation", "keyword", "preparation", 5),
    ("exams", "exam_preparation", "keyword", "preparing", 5),
    ("exams", "exam_eligibility", "keyword", "eligible", 6),
    ("exams", "exam_eligibility", "keyword", "eligibility", 6),
    ("courses", "course_duration", "keyword", "duration", 5),
    ("courses", "course_duration", "phrase", "how long", 5),
    ("admissions", "admission_deadline", "keyword", "deadline", 5),
    ("admissions", "admission_deadline", "phrase", "last date", 5),
]


def starter_rules(taxonomy: Taxonomy):
    return [Rule(taxonomy.subcategory_id(s), taxonomy.category_id(c), k,
                 tuple(p.split()), pr)
            for c, s, k, p, pr in STARTER_RULES]


# --------------------------------------------------------------------------
# Noise
# --------------------------------------------------------------------------

ARTICLES = {"a", "an", "the"}


@dataclass(frozen=True)
class NoiseRates:
    typo: float = 0.09
    article_drop: float = 0.30
    word_swap: float = 0.05

    def __post_init__(self):
        for r in (self.typo, self.article_drop, self.word_swap):
            if not 0.0 <= r < 1.0:
                raise ValueError("noise rates must be in [0, 1)")


def typo(token: str, rng: random.Random) -> str:
    """One character edit: swap of an unequal adjacent pair, else a deletion."""
    if len(token) < 2:
        return token
    pairs = [i for i in range(len(token) - 1) if token[i] != token[i + 1]]
    if pairs and rng.random() < 0.5:
        i = rng.choice(pairs)
        return token[:i] + token[i + 1] + token[i] + token[i + 2:]
    i = rng.randrange(len(token))
    return token[:i] + token[i + 1:]


def _noise_marked(marked, rates: NoiseRates, rng: random.Random):
    """Noise a list of [token, meta] cells; cells with meta is not None are
    entity tokens and are never altered, dropped, or swapped."""
    kept = []
    for tok, meta in marked:
        if meta is None and tok in ARTICLES and rng.random() < rates.article_drop:
            continue
        kept.append([tok, meta])
    if not kept:
        kept = [list(c) for c in marked]
    i = 0
    while i < len(kept) - 1:
        if (kept[i][1] is None and kept[i + 1][1] is None
                and rng.random() < rates.word_swap):
            kept[i], kept[i + 1] = kept[i + 1], kept[i]
            i += 2
            continue
        i += 1
    out = []
    for tok, meta in kept:
        if meta is None and rng.random() < rates.typo:
            tok = typo(tok, rng)
            if not tok:
                continue
        out.append([tok, meta])
    return out


def inject_noise(tokens, rates: NoiseRates, rng: random.Random,
                 protected=frozenset()):
    """Noised copy of tokens; indices in `protected` are never altered,
    dropped, or swapped."""
    marked = [[t, i if i in protected else None] for i, t in enumerate(tokens)]
    return [tok for tok, _ in _noise_marked(marked, rates, rng)]


# --------------------------------------------------------------------------
# Generation
# --------------------------------------------------------------------------

@dataclass(frozen=True)
class GenSpec:
    total: int = 15687
    noise: NoiseRates = field(default_factory=NoiseRates)
    entity_typo: bool = False
    entity_typo_rate: float = 0.30
    seed: int = 0


def _assemble(cells):
    """cells: list of [token, meta] where meta is (entity_id, type) or None.

    Returns (text, spans): tokens joined by single spaces, one char span per
    contiguous run of tokens sharing an entity_id.
    """
    text = " ".join(tok for tok, _ in cells)
    spans = []
    pos = 0
    cur_id, cur_type, cur_start, cur_end = None, None, 0, 0
    for tok, meta in cells:
        start, end = pos, pos + len(tok)
        pos = end + 1
        eid = meta[0] if meta else None
        if eid is not None and eid == cur_id:
            cur_end = end
            continue
        if cur_id is not None:
            spans.append((cur_start, cur_end, cur_type))
        if eid is not None:
            cur_id, cur_type, cur_start, cur_end = eid, meta[1], start, end
        else:
            cur_id = None
    if cur_id is not None:
        spans.append((cur_start, cur_end, cur_type))
    return text, spans


def _fill_template(template, rng, entity_typo, entity_typo_rate):
    """Expand a template into [token, meta] cells with entities filled in;
    meta is (entity_id, type) for entity tokens, None otherwise."""
    cells = []
    eid = 0
    for word in template.split():
        if word.startswith("{") and word.endswith("}"):
            typ = word[1:-1]
            value = list(rng.choice(LEXICONS[typ]))
            if entity_typo and rng.random() < entity_typo_rate:
                # perturb the longest token so fuzzy tiers still reach it
                j = max(range(len(value)), key=lambda k: len(value[k]))
                if len(value[j]) >= 6:
                    value[j] = typo(value[j], rng)
            for tok in value:
                cells.append([tok, (eid, typ)])
            eid += 1
        else:
            cells.append([word, None])
    return cells


def generate(spec: GenSpec):
    """Returns (Dataset, Gazetteer). Deterministic per spec.seed."""
    taxonomy = default_taxonomy()
    rng = random.Random(spec.seed)
    subs = list(range(taxonomy.n_subcategories))
    per_sub = spec.total // len(subs)
    extra = spec.total - per_sub * len(subs)

    examples = []
    for sub in subs:
        name = taxonomy.subcategory_names[sub]
        cat = taxonomy.cat_of_sub[sub]
        count = per_sub + (1 if sub < extra else 0)
        templates = TEMPLATES[name]
        for _ in range(count):
            cells = _fill_template(rng.choice(templates), rng,
                                   spec.entity_typo, spec.entity_typo_rate)
            noised = _noise_marked(cells, spec.noise, rng)
            text, spans = _assemble(noised)
            examples.append(LabeledExample(RawQuery(text), cat, sub, tuple(spans)))
    rng.shuffle(examples)

    vocab = build_vocab(tokenize(ex.raw).tokens for ex in examples)
    dataset = Dataset(examples, taxonomy, vocab)
    gaz = Gazetteer({t: set(vals) for t, vals in LEXICONS.items()},
                    club_groups(taxonomy))
    return dataset, gaz
