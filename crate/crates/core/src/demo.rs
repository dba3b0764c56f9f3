//! Small seeded SQLite databases and the worked examples that run on them.
//!
//! Each database is written to `<dir>/<db_id>/<db_id>.sqlite`, the same
//! layout benchmark database folders use.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use rusqlite::Connection;

use crate::aggregate::{build_decision_vector, fit_label_model, registry_names, DecisionVector, FitConfig, FitError, LabelModelParams};
use crate::catalog::{build_catalog, BuildOptions};
use crate::exec::{Database, ExecLimits};
use crate::harness::metrics::result_sets_equal;
use crate::llm::MockClient;
use crate::pipeline::{Detector, DetectorConfig};
use crate::signals::SignalId;

pub const DB_IDS: [&str; 6] = [
    "financial",
    "toxicology",
    "codebase_community",
    "california_schools",
    "card_games",
    "formula_1",
];

pub const FIG2_QUESTION: &str = "How many female clients opened their accounts in Jesenik branch?";
pub const FIG2_EVIDENCE: &str = "Female refers to gender = 'F'; A2 refers to district names";
pub const FIG2_PREDICTED: &str = "SELECT (SELECT COUNT(DISTINCT client.client_id) FROM client \
INNER JOIN account ON client.client_id = account.account_id \
INNER JOIN district ON account.district_id = district.district_id \
WHERE district.a2 = 'jesenik' AND client.gender = 'Female') AS num_female_clients";
pub const FIG2_GOLD: &str = "SELECT COUNT(T1.client_id) FROM client AS T1 \
INNER JOIN district AS T2 ON T1.district_id = T2.district_id \
WHERE T1.gender = 'F' AND T2.A2 = 'Jesenik'";

/// An incorrect query, its correction, and the signal that separates them.
#[derive(Clone, Debug)]
pub struct DemoCase {
    pub signal: SignalId,
    pub db_id: &'static str,
    pub question: &'static str,
    pub evidence: &'static str,
    pub incorrect: &'static str,
    pub correct: &'static str,
}

/// One pair per database signal.
pub fn signal_cases() -> Vec<DemoCase> {
    vec![
        DemoCase {
            signal: SignalId::AbnormalResult,
            db_id: "card_games",
            question: "List the ids of cards that have both a card kingdom foil id and a card kingdom id.",
            evidence: "",
            incorrect: "SELECT c.id FROM cards c WHERE c.cardKingdomFoilId = c.cardKingdomId \
AND c.cardKingdomId IS NOT NULL AND c.hasFoil = 1 AND c.isFullArt = 0 \
AND c.isOversized = 0 AND c.isPromo = 0",
            correct: "SELECT id FROM cards WHERE cardKingdomFoilId IS NOT NULL AND cardKingdomId IS NOT NULL",
        },
        DemoCase {
            signal: SignalId::EmptyPredicate,
            db_id: "toxicology",
            question: "Which atoms are connected by the bond TR000_2_5?",
            evidence: "",
            incorrect: "SELECT c.atom_id, c.atom_id2 FROM connected c JOIN bond b ON c.bond_id = b.bond_id \
WHERE b.bond_id = 'TR_000_2_5'",
            correct: "SELECT T.atom_id FROM connected AS T WHERE T.bond_id = 'TR000_2_5'",
        },
        DemoCase {
            signal: SignalId::IncorrectFilterInSubquery,
            db_id: "codebase_community",
            question: "What are the names of the badges obtained by the user whose display name is Pierre?",
            evidence: "",
            incorrect: "SELECT Name FROM badges WHERE UserId = (SELECT Id FROM users WHERE DisplayName = 'Pierre')",
            correct: "SELECT Name FROM badges WHERE UserId IN (SELECT Id FROM users WHERE DisplayName = 'Pierre')",
        },
        DemoCase {
            signal: SignalId::IncorrectGroupBy,
            db_id: "california_schools",
            question: "Which cities have the top 5 lowest enrollment number for students in grades 1 through 12?",
            evidence: "K-12 refers to students in grades 1 through 12.",
            incorrect: "SELECT s.City, f.`Enrollment (K-12)` FROM frpm f JOIN schools s ON f.CDSCode = s.CDSCode \
GROUP BY s.City, f.`Enrollment (K-12)` ORDER BY SUM(f.`Enrollment (K-12)`) ASC LIMIT 5",
            correct: "SELECT T2.City FROM frpm AS T1 INNER JOIN schools AS T2 ON T1.CDSCode = T2.CDSCode \
GROUP BY T2.City ORDER BY SUM(T1.`Enrollment (K-12)`) ASC LIMIT 5",
        },
        DemoCase {
            signal: SignalId::IncorrectJoinPredicate,
            db_id: "financial",
            question: FIG2_QUESTION,
            evidence: FIG2_EVIDENCE,
            incorrect: "SELECT (SELECT COUNT(DISTINCT client.client_id) FROM client \
INNER JOIN account ON client.client_id = account.account_id \
INNER JOIN district ON account.district_id = district.district_id \
WHERE district.a2 = 'Jesenik' AND client.gender = 'F') AS num_female_clients",
            correct: FIG2_GOLD,
        },
        DemoCase {
            signal: SignalId::SuboptimalJoinTree,
            db_id: "financial",
            question: "Which region does the client with id 3541 come from?",
            evidence: "A3 refers to the region",
            incorrect: "SELECT d.a3 FROM client c JOIN disp di ON c.client_id = di.client_id \
JOIN account a ON di.account_id = a.account_id JOIN district d ON a.district_id = d.district_id \
WHERE c.client_id = 3541 LIMIT 1",
            correct: "SELECT T1.a3 FROM district T1 INNER JOIN client T2 ON T1.district_id = T2.district_id \
WHERE T2.client_id = 3541",
        },
        DemoCase {
            signal: SignalId::TableSimilarity,
            db_id: "formula_1",
            question: "What are the average points Lewis Hamilton had in the driver standings of the Turkish Grand Prix?",
            evidence: "",
            incorrect: "SELECT AVG(r.points) AS avg_score FROM results r JOIN drivers d ON r.driverId = d.driverId \
JOIN races ra ON r.raceId = ra.raceId WHERE d.forename = 'Lewis' AND d.surname = 'Hamilton' \
AND ra.raceId IN (SELECT raceId FROM races WHERE name LIKE '%Turkish Grand Prix%')",
            correct: "SELECT AVG(T2.points) FROM drivers AS T1 INNER JOIN driverStandings AS T2 ON T1.driverId = T2.driverId \
INNER JOIN races AS T3 ON T3.raceId = T2.raceId WHERE T1.forename = 'Lewis' AND T1.surname = 'Hamilton' \
AND T3.name = 'Turkish Grand Prix'",
        },
        DemoCase {
            signal: SignalId::UnnecessarySubquery,
            db_id: "card_games",
            question: "Which promotional card has the most rulings? Give its name, artist and promo status.",
            evidence: "",
            incorrect: "SELECT (SELECT c.name FROM cards c WHERE c.uuid = (SELECT uuid FROM rulings)) AS card_name, \
(SELECT c.artist FROM cards c WHERE c.uuid = (SELECT uuid FROM rulings)) AS artist, \
(SELECT c.ispromo FROM cards c WHERE c.uuid = (SELECT uuid FROM rulings)) AS is_promo",
            correct: "SELECT T1.name, T1.artist, T1.isPromo FROM cards AS T1 INNER JOIN rulings AS T2 ON T1.uuid = T2.uuid \
WHERE T1.isPromo = 1 GROUP BY T1.artist ORDER BY COUNT(DISTINCT T1.uuid) DESC LIMIT 1",
        },
        DemoCase {
            signal: SignalId::ValueAmbiguity,
            db_id: "card_games",
            question: "List the artists of the cards that have Phyrexian as their language.",
            evidence: "",
            incorrect: "SELECT c.`artist` FROM `cards` c JOIN `foreign_data` f ON c.`uuid`=f.`uuid` \
WHERE c.`watermark`='phyrexian' AND c.`artist` IS NOT NULL GROUP BY c.`artist`",
            correct: "SELECT T1.artist FROM cards AS T1 INNER JOIN foreign_data AS T2 ON T1.uuid = T2.uuid \
WHERE T2.language = 'Phyrexian'",
        },
    ]
}

/// A query for the correction suite, its gold query and the rewrites a
/// scripted fixer applies, keyed by the SQL it is shown.
#[derive(Clone, Debug)]
pub struct CorrectionCase {
    pub id: &'static str,
    pub db_id: &'static str,
    pub question: &'static str,
    pub evidence: &'static str,
    pub sql: &'static str,
    pub gold: &'static str,
    pub rewrites: Vec<(&'static str, &'static str)>,
}

impl CorrectionCase {
    pub fn is_broken(&self) -> bool {
        self.sql != self.gold
    }
}

const FIG2_JOIN_FIXED: &str = "SELECT COUNT(DISTINCT client.client_id) FROM client \
INNER JOIN district ON client.district_id = district.district_id \
WHERE district.a2 = 'jesenik' AND client.gender = 'Female'";
const FIG2_FIXED: &str = "SELECT COUNT(DISTINCT client.client_id) FROM client \
INNER JOIN district ON client.district_id = district.district_id \
WHERE district.a2 = 'Jesenik' AND client.gender = 'F'";
const EMPTY_GOLD: &str = "SELECT c.atom_id, c.atom_id2 FROM connected c JOIN bond b ON c.bond_id = b.bond_id \
WHERE b.bond_id = 'TR000_2_5'";
const REDUNDANT_CORRECT: &str = "SELECT d.a3 FROM client c JOIN disp di ON c.client_id = di.client_id \
JOIN account a ON di.account_id = a.account_id JOIN district d ON a.district_id = d.district_id \
WHERE c.client_id = 50";

/// Six broken and four correct queries with the rewrites a scripted fixer
/// applies to them.
pub fn correction_suite() -> Vec<CorrectionCase> {
    let cases = signal_cases();
    let case = |s: SignalId| cases.iter().find(|c| c.signal == s).expect("demo case").clone();
    let join = case(SignalId::IncorrectJoinPredicate);
    let subq = case(SignalId::IncorrectFilterInSubquery);
    let tree = case(SignalId::SuboptimalJoinTree);
    let value = case(SignalId::ValueAmbiguity);
    let empty = case(SignalId::EmptyPredicate);
    let group = case(SignalId::IncorrectGroupBy);
    vec![
        CorrectionCase {
            id: "fig2",
            db_id: "financial",
            question: FIG2_QUESTION,
            evidence: FIG2_EVIDENCE,
            sql: FIG2_PREDICTED,
            gold: FIG2_GOLD,
            rewrites: vec![(FIG2_PREDICTED, FIG2_JOIN_FIXED), (FIG2_JOIN_FIXED, FIG2_FIXED)],
        },
        CorrectionCase {
            id: "empty_predicate",
            db_id: empty.db_id,
            question: empty.question,
            evidence: empty.evidence,
            sql: empty.incorrect,
            gold: EMPTY_GOLD,
            rewrites: vec![(empty.incorrect, EMPTY_GOLD)],
        },
        CorrectionCase {
            id: "subquery_filter",
            db_id: subq.db_id,
            question: subq.question,
            evidence: subq.evidence,
            sql: subq.incorrect,
            gold: subq.correct,
            rewrites: vec![(subq.incorrect, subq.correct)],
        },
        CorrectionCase {
            id: "join_predicate",
            db_id: join.db_id,
            question: join.question,
            evidence: join.evidence,
            sql: join.incorrect,
            gold: join.correct,
            rewrites: vec![(join.incorrect, join.correct)],
        },
        CorrectionCase {
            id: "suboptimal_join",
            db_id: tree.db_id,
            question: tree.question,
            evidence: tree.evidence,
            sql: tree.incorrect,
            gold: tree.correct,
            rewrites: vec![(tree.incorrect, tree.correct)],
        },
        CorrectionCase {
            id: "value_ambiguity",
            db_id: value.db_id,
            question: value.question,
            evidence: value.evidence,
            sql: value.incorrect,
            gold: value.correct,
            rewrites: vec![(value.incorrect, value.correct)],
        },
        CorrectionCase {
            id: "fig2_gold",
            db_id: "financial",
            question: FIG2_QUESTION,
            evidence: FIG2_EVIDENCE,
            sql: FIG2_GOLD,
            gold: FIG2_GOLD,
            rewrites: vec![],
        },
        CorrectionCase {
            id: "subquery_in",
            db_id: subq.db_id,
            question: subq.question,
            evidence: subq.evidence,
            sql: subq.correct,
            gold: subq.correct,
            rewrites: vec![],
        },
        CorrectionCase {
            id: "group_by",
            db_id: group.db_id,
            question: group.question,
            evidence: group.evidence,
            sql: group.correct,
            gold: group.correct,
            rewrites: vec![],
        },
        CorrectionCase {
            id: "redundant_join",
            db_id: "financial",
            question: "Which region does the client with id 50 come from?",
            evidence: "A3 refers to the region",
            sql: REDUNDANT_CORRECT,
            gold: REDUNDANT_CORRECT,
            // The fixer drops the redundant join but picks the wrong district.
            rewrites: vec![(REDUNDANT_CORRECT, "SELECT T1.a3 FROM district T1 WHERE T1.district_id = 5")],
        },
    ]
}

fn between<'a>(text: &'a str, start: &str, end: &str) -> Option<&'a str> {
    let from = text.find(start)? + start.len();
    let len = text[from..].find(end)?;
    Some(&text[from..from + len])
}

/// A mock model for one correction case.
///
/// The fixer applies the case's rewrites (returning the input unchanged
/// otherwise), the selector picks the first report, and the auditor runs
/// both candidates against `db_path` and picks the one matching the gold
/// result.
pub fn scripted_correction_client(case: &CorrectionCase, db_path: &Path) -> MockClient {
    let rewrites: Vec<(String, String)> = case.rewrites.iter().map(|(a, b)| (a.to_string(), b.to_string())).collect();
    let gold = case.gold.to_string();
    let path = db_path.to_path_buf();
    MockClient::new()
        .named(format!("scripted-{}", case.id))
        .when_contains("[Error Reports]", "```json\n{\"most_critical\": 0, \"reason\": \"ranked first\"}\n```")
        .handler(move |prompt| {
            let old = between(prompt, "[Old SQL]\n```sql\n", "\n```")?;
            let new = rewrites.iter().find(|(a, _)| a == old).map(|(_, b)| b.as_str()).unwrap_or(old);
            Some(format!("```sql\n{new}\n```"))
        })
        .handler(move |prompt| {
            let a = between(prompt, "[SQL query A]\n", "\n\n[SQL query B]")?;
            let b = between(prompt, "[SQL query B]\n", "\n\n[Answer]")?;
            let db = Database::open(&path).ok()?;
            let limits = ExecLimits::default();
            let expected = db.run(&gold, &limits).ok()?;
            let matches = |sql: &str| db.run(sql, &limits).is_ok_and(|r| result_sets_equal(&r, &expected));
            let choice = if matches(b) && !matches(a) { "B" } else { "A" };
            Some(format!("{{\"choice\": \"{choice}\", \"explanation\": \"result comparison\"}}"))
        })
}

/// Database-signal decision vectors for every demo query: the Fig. 2 pair
/// first, then each incorrect/correct pair of [`signal_cases`]. The flag is
/// true for incorrect queries.
pub fn fixture_vectors(dir: &Path) -> Result<Vec<(DecisionVector, bool)>, Box<dyn std::error::Error>> {
    let mut queries = vec![("financial", FIG2_QUESTION, FIG2_EVIDENCE, FIG2_PREDICTED, true)];
    queries.push(("financial", FIG2_QUESTION, FIG2_EVIDENCE, FIG2_GOLD, false));
    for c in signal_cases() {
        queries.push((c.db_id, c.question, c.evidence, c.incorrect, true));
        queries.push((c.db_id, c.question, c.evidence, c.correct, false));
    }
    let config = DetectorConfig {
        enabled: SignalId::DB.to_vec(),
        ..Default::default()
    };
    let mut out = Vec::new();
    for db_id in DB_IDS {
        let db = Database::open(write_database(dir, db_id)?)?;
        let catalog = build_catalog(&db, &BuildOptions::default())?;
        let detector = Detector::with_config(&catalog, &db, config.clone());
        for (i, (_, q, e, sql, wrong)) in queries.iter().enumerate().filter(|(_, c)| c.0 == db_id) {
            let outcomes = detector.detect(q, e, sql);
            out.push((i, build_decision_vector(format!("demo-{i}"), &outcomes), *wrong));
        }
    }
    out.sort_by_key(|(i, _, _)| *i);
    Ok(out.into_iter().map(|(_, v, w)| (v, w)).collect())
}

/// The label model fitted on [`fixture_vectors`].
pub fn fixture_label_model(vectors: &[(DecisionVector, bool)]) -> Result<LabelModelParams, FitError> {
    let v: Vec<DecisionVector> = vectors.iter().map(|(v, _)| v.clone()).collect();
    fit_label_model(&v, &registry_names(), &FitConfig::default())
}

/// Writes every demo database under `dir` and returns their paths.
pub fn write_all(dir: &Path) -> rusqlite::Result<Vec<PathBuf>> {
    DB_IDS.iter().map(|id| write_database(dir, id)).collect()
}

/// Writes one demo database; an existing file is replaced.
pub fn write_database(dir: &Path, db_id: &str) -> rusqlite::Result<PathBuf> {
    let folder = dir.join(db_id);
    std::fs::create_dir_all(&folder).map_err(|e| rusqlite::Error::ToSqlConversionFailure(Box::new(e)))?;
    let path = folder.join(format!("{db_id}.sqlite"));
    if path.exists() {
        std::fs::remove_file(&path).map_err(|e| rusqlite::Error::ToSqlConversionFailure(Box::new(e)))?;
    }
    let sql = match db_id {
        "financial" => financial(),
        "toxicology" => toxicology(),
        "codebase_community" => codebase_community(),
        "california_schools" => california_schools(),
        "card_games" => card_games(),
        "formula_1" => formula_1(),
        other => return Err(rusqlite::Error::InvalidParameterName(format!("unknown demo database {other}"))),
    };
    let conn = Connection::open(&path)?;
    conn.execute_batch(&format!("BEGIN;\n{sql}\nCOMMIT;"))?;
    Ok(path)
}

fn q(s: &str) -> String {
    format!("'{}'", s.replace('\'', "''"))
}

fn opt(s: Option<String>) -> String {
    s.map(|v| q(&v)).unwrap_or_else(|| "NULL".into())
}

fn financial() -> String {
    let mut s = String::from(
        "CREATE TABLE district (district_id INTEGER PRIMARY KEY, A2 TEXT, A3 TEXT, A4 INTEGER);
CREATE TABLE client (client_id INTEGER PRIMARY KEY, gender TEXT, birth_date DATE,
  district_id INTEGER REFERENCES district(district_id));
CREATE TABLE account (account_id INTEGER PRIMARY KEY, district_id INTEGER REFERENCES district(district_id),
  frequency TEXT, date DATE);
CREATE TABLE disp (disp_id INTEGER PRIMARY KEY, client_id INTEGER REFERENCES client(client_id),
  account_id INTEGER REFERENCES account(account_id), type TEXT);
CREATE TABLE loan (loan_id INTEGER PRIMARY KEY, account_id INTEGER REFERENCES account(account_id),
  amount INTEGER, duration INTEGER, status TEXT);
",
    );
    let districts = [
        (1, "Jesenik", "north Moravia", 42821),
        (2, "Praha", "Prague", 1204953),
        (3, "Brno", "south Moravia", 387570),
        (4, "Kolin", "central Bohemia", 95616),
        (5, "Beroun", "central Bohemia", 75232),
        (6, "Tabor", "south Bohemia", 103347),
    ];
    for (id, a2, a3, a4) in districts {
        let _ = writeln!(s, "INSERT INTO district VALUES ({id}, {}, {}, {a4});", q(a2), q(a3));
    }
    let client_district = |i: u32| if i <= 40 { 1 } else { 2 + i % 5 };
    let frequencies = ["POPLATEK MESICNE", "POPLATEK TYDNE", "POPLATEK PO OBRATU"];
    for i in 1..=100u32 {
        let gender = match i {
            1..=26 => "F",
            27..=40 => "M",
            _ if i % 2 == 0 => "F",
            _ => "M",
        };
        let birth = format!("19{:02}-{:02}-{:02}", 40 + i % 50, 1 + i % 12, 1 + i % 28);
        let _ = writeln!(
            s,
            "INSERT INTO client VALUES ({i}, {}, {}, {});",
            q(gender),
            q(&birth),
            client_district(i)
        );
        let acc_district = match i {
            24..=26 => 2,
            _ => client_district(i),
        };
        let opened = format!("199{}-{:02}-{:02}", 3 + i % 5, 1 + i % 12, 1 + i % 28);
        let _ = writeln!(
            s,
            "INSERT INTO account VALUES ({i}, {acc_district}, {}, {});",
            q(frequencies[i as usize % 3]),
            q(&opened)
        );
        let _ = writeln!(s, "INSERT INTO disp VALUES ({i}, {i}, {i}, 'OWNER');");
    }
    s.push_str(
        "INSERT INTO client VALUES (3541, 'M', '1975-04-12', 3);
INSERT INTO account VALUES (3541, 4, 'POPLATEK MESICNE', '1996-02-21');
INSERT INTO disp VALUES (3541, 3541, 3541, 'OWNER');
INSERT INTO disp VALUES (101, 42, 41, 'DISPONENT');
INSERT INTO disp VALUES (102, 44, 43, 'DISPONENT');
",
    );
    let statuses = ["A", "B", "C", "D"];
    for k in 0..12u32 {
        let account = 3 + k * 7;
        let _ = writeln!(
            s,
            "INSERT INTO loan VALUES ({}, {account}, {}, {}, {});",
            5000 + k,
            20000 + 1500 * k,
            12 * (1 + k % 5),
            q(statuses[k as usize % 4])
        );
    }
    s
}

fn toxicology() -> String {
    let mut s = String::from(
        "CREATE TABLE molecule (molecule_id TEXT PRIMARY KEY, label TEXT);
CREATE TABLE atom (atom_id TEXT PRIMARY KEY, molecule_id TEXT REFERENCES molecule(molecule_id), element TEXT);
CREATE TABLE bond (bond_id TEXT PRIMARY KEY, molecule_id TEXT REFERENCES molecule(molecule_id), bond_type TEXT);
CREATE TABLE connected (atom_id TEXT REFERENCES atom(atom_id), atom_id2 TEXT REFERENCES atom(atom_id),
  bond_id TEXT REFERENCES bond(bond_id), PRIMARY KEY (atom_id, atom_id2));
",
    );
    let elements = ["c", "h", "o", "n", "cl", "c"];
    let bonds: [(u32, u32, &str); 5] = [(1, 2, "-"), (2, 3, "="), (2, 5, "-"), (3, 4, "-"), (5, 6, "#")];
    for m in 0..6u32 {
        let mol = format!("TR00{m}");
        let label = if m % 2 == 0 { "+" } else { "-" };
        let _ = writeln!(s, "INSERT INTO molecule VALUES ({}, {});", q(&mol), q(label));
        for a in 1..=6u32 {
            let el = elements[((a + m) % 6) as usize];
            let _ = writeln!(s, "INSERT INTO atom VALUES ({}, {}, {});", q(&format!("{mol}_{a}")), q(&mol), q(el));
        }
        for (i, (a, b, ty)) in bonds.iter().enumerate() {
            if m % 2 == 1 && i == 4 {
                continue;
            }
            let bond = format!("{mol}_{a}_{b}");
            let _ = writeln!(s, "INSERT INTO bond VALUES ({}, {}, {});", q(&bond), q(&mol), q(ty));
            let (x, y) = (format!("{mol}_{a}"), format!("{mol}_{b}"));
            let _ = writeln!(s, "INSERT INTO connected VALUES ({}, {}, {});", q(&x), q(&y), q(&bond));
            let _ = writeln!(s, "INSERT INTO connected VALUES ({}, {}, {});", q(&y), q(&x), q(&bond));
        }
    }
    s
}

fn codebase_community() -> String {
    let mut s = String::from(
        "CREATE TABLE users (Id INTEGER PRIMARY KEY, DisplayName TEXT, Reputation INTEGER, Location TEXT);
CREATE TABLE badges (Id INTEGER PRIMARY KEY, UserId INTEGER REFERENCES users(Id), Name TEXT, Date DATETIME);
CREATE TABLE posts (Id INTEGER PRIMARY KEY, OwnerUserId INTEGER REFERENCES users(Id), Title TEXT, Score INTEGER);
",
    );
    let users = [
        (1, "Jarrod Dixon", 101, Some("Corvallis, OR")),
        (2, "Geoff Dalgas", 1, None),
        (3, "Emmett", 537, Some("Harrisonburg, VA")),
        (10, "Pierre", 212, Some("Paris, France")),
        (11, "Pierre", 48, Some("Lyon, France")),
        (12, "csgillespie", 6764, Some("Newcastle, United Kingdom")),
        (13, "whuber", 87393, Some("Washington, DC")),
    ];
    for (id, name, rep, loc) in users {
        let _ = writeln!(
            s,
            "INSERT INTO users VALUES ({id}, {}, {rep}, {});",
            q(name),
            opt(loc.map(String::from))
        );
    }
    let badges = [
        (1, 10, "Teacher"),
        (2, 10, "Student"),
        (3, 11, "Editor"),
        (4, 11, "Supporter"),
        (5, 12, "Teacher"),
        (6, 12, "Necromancer"),
        (7, 13, "Great Answer"),
        (8, 3, "Autobiographer"),
        (9, 1, "Supporter"),
    ];
    for (id, user, name) in badges {
        let date = format!("2011-0{}-1{} 10:00:00", 1 + id % 9, id % 10);
        let _ = writeln!(s, "INSERT INTO badges VALUES ({id}, {user}, {}, {});", q(name), q(&date));
    }
    let posts = [
        (1, 12, "Eliciting priors from experts", 23),
        (2, 13, "What is normality?", 45),
        (3, 10, "Measures of central tendency", 7),
        (4, 3, "Bayesian and frequentist reasoning", 31),
    ];
    for (id, owner, title, score) in posts {
        let _ = writeln!(s, "INSERT INTO posts VALUES ({id}, {owner}, {}, {score});", q(title));
    }
    s
}

fn california_schools() -> String {
    let mut s = String::from(
        "CREATE TABLE schools (CDSCode TEXT PRIMARY KEY, County TEXT, City TEXT, School TEXT,
  Street TEXT, StreetAbr TEXT, MailStreet TEXT, Zip TEXT);
CREATE TABLE frpm (CDSCode TEXT PRIMARY KEY REFERENCES schools(CDSCode), `County Name` TEXT,
  `School Name` TEXT, `Enrollment (K-12)` REAL, `Free Meal Count (K-12)` REAL);
CREATE TABLE satscores (cds TEXT PRIMARY KEY REFERENCES schools(CDSCode), sname TEXT,
  NumTstTakr INTEGER, AvgScrRead INTEGER, AvgScrMath INTEGER);
",
    );
    let schools = [
        ("Alameda", "Oakland", "Lincoln Elementary", "225 11th Street", "225 11th St.", 411.0f64),
        ("Alameda", "Oakland", "Oakland Tech High", "4351 Broadway", "4351 Broadway", 2015.0),
        ("Alameda", "Berkeley", "Berkeley High", "1980 Allston Way", "1980 Allston Wy.", 3210.0),
        ("Alameda", "Hayward", "Tennyson High", "27035 Whitman Road", "27035 Whitman Rd.", 1520.0),
        ("Fresno", "Fresno", "Roosevelt High", "4250 East Tulare Street", "4250 East Tulare St.", 1935.0),
        ("Fresno", "Fresno", "Edison Elementary", "540 East California Avenue", "540 East California Ave.", 380.0),
        ("Fresno", "Clovis", "Clovis West High", "1070 East Teague Avenue", "1070 East Teague Ave.", 2140.0),
        ("Yolo", "Davis", "Davis Senior High", "315 West 14th Street", "315 West 14th St.", 1710.0),
        ("Sacramento", "Sacramento", "McClatchy High", "3066 Freeport Boulevard", "3066 Freeport Blvd.", 2302.0),
        ("Alpine", "Markleeville", "Diamond Valley Elementary", "35 Hawkside Drive", "35 Hawkside Dr.", 88.0),
        ("Inyo", "Bishop", "Bishop Union High", "301 North Fowler Street", "301 North Fowler St.", 640.0),
        ("Modoc", "Alturas", "Modoc High", "900 North Main Street", "900 North Main St.", 211.0),
    ];
    for (i, (county, city, school, street, abr, enrollment)) in schools.iter().enumerate() {
        let cds = format!("0161119{:07}", 1000 + i * 37);
        let mail = if i % 3 == 0 {
            format!("P.O. Box {}", 100 + i)
        } else {
            abr.to_string()
        };
        let _ = writeln!(
            s,
            "INSERT INTO schools VALUES ({}, {}, {}, {}, {}, {}, {}, {});",
            q(&cds),
            q(county),
            q(city),
            q(school),
            q(street),
            q(abr),
            q(&mail),
            q(&format!("9{:04}", 4000 + i * 13))
        );
        let _ = writeln!(
            s,
            "INSERT INTO frpm VALUES ({}, {}, {}, {enrollment:.1}, {:.1});",
            q(&cds),
            q(county),
            q(school),
            (enrollment * 0.41).round()
        );
        if school.ends_with("High") {
            let _ = writeln!(
                s,
                "INSERT INTO satscores VALUES ({}, {}, {}, {}, {});",
                q(&cds),
                q(school),
                (enrollment / 4.0).round(),
                430 + (i * 17) % 120,
                440 + (i * 23) % 130
            );
        }
    }
    s
}

fn card_games() -> String {
    let mut s = String::from(
        "CREATE TABLE cards (id INTEGER PRIMARY KEY, uuid TEXT UNIQUE, name TEXT, artist TEXT, watermark TEXT,
  setCode TEXT, cardKingdomFoilId TEXT, cardKingdomId TEXT, hasFoil INTEGER, isFullArt INTEGER,
  isOversized INTEGER, isPromo INTEGER, rarity TEXT);
CREATE TABLE foreign_data (id INTEGER PRIMARY KEY, uuid TEXT REFERENCES cards(uuid), language TEXT, name TEXT);
CREATE TABLE rulings (id INTEGER PRIMARY KEY, uuid TEXT REFERENCES cards(uuid), date DATE, text TEXT);
CREATE TABLE sets (id INTEGER PRIMARY KEY, code TEXT UNIQUE, name TEXT, totalSetSize INTEGER);
",
    );
    let names = [
        "Angel of Mercy",
        "Aven Cloudchaser",
        "Ballista Squad",
        "Bandage",
        "Beacon of Immortality",
        "Benalish Knight",
        "Cho-Manno, Revolutionary",
        "Condemn",
        "Demystify",
        "Field Marshal",
    ];
    let artists = ["Volkan Baga", "Kev Walker", "Pete Venters", "Rebecca Guay", "Mark Poole", "Ron Spencer"];
    let sets = ["10E", "UNH", "ARN"];
    let rarities = ["common", "uncommon", "rare"];
    for i in 1..=30u32 {
        let uuid = format!("5f8287b1-5bb6-5f4c-ad17-{:012x}", 0x316a40d5bb00u64 + i as u64);
        let name = if i <= 10 {
            names[(i - 1) as usize].to_string()
        } else {
            format!("{} {}", names[(i % 10) as usize], i)
        };
        let watermark = match i % 10 {
            0 => Some("phyrexian".to_string()),
            4 => Some("mirran".to_string()),
            _ => None,
        };
        let foil = (i % 3 != 0).then(|| (120_000 + i).to_string());
        let plain = (i % 4 != 0).then(|| (110_000 + i).to_string());
        let _ = writeln!(
            s,
            "INSERT INTO cards VALUES ({i}, {}, {}, {}, {}, {}, {}, {}, {}, {}, 0, {}, {});",
            q(&uuid),
            q(&name),
            q(artists[(i % 6) as usize]),
            opt(watermark),
            q(sets[(i % 3) as usize]),
            opt(foil),
            opt(plain),
            i % 2,
            u32::from(i % 7 == 0),
            u32::from(i % 5 == 0),
            q(rarities[(i % 3) as usize])
        );
        if i <= 12 {
            let language = match i {
                3 | 7 => "Phyrexian",
                _ => ["German", "French", "Japanese", "Spanish"][(i % 4) as usize],
            };
            let _ = writeln!(
                s,
                "INSERT INTO foreign_data VALUES ({i}, {}, {}, {});",
                q(&uuid),
                q(language),
                q(&format!("{name} ({language})"))
            );
        }
        if [2u32, 5, 9, 10, 15].contains(&i) {
            for k in 0..(1 + i % 3) {
                let _ = writeln!(
                    s,
                    "INSERT INTO rulings VALUES ({}, {}, {}, {});",
                    i * 10 + k,
                    q(&uuid),
                    q(&format!("2009-10-0{}", 1 + k)),
                    q(&format!("Ruling {k} for {name}."))
                );
            }
        }
    }
    for (i, (code, name, size)) in [("10E", "Tenth Edition", 383), ("UNH", "Unhinged", 141), ("ARN", "Arabian Nights", 92)]
        .iter()
        .enumerate()
    {
        let _ = writeln!(s, "INSERT INTO sets VALUES ({}, {}, {}, {size});", i + 1, q(code), q(name));
    }
    s
}

fn formula_1() -> String {
    let mut s = String::from(
        "CREATE TABLE drivers (driverId INTEGER PRIMARY KEY, forename TEXT, surname TEXT, nationality TEXT);
CREATE TABLE races (raceId INTEGER PRIMARY KEY, year INTEGER, round INTEGER, name TEXT);
CREATE TABLE results (resultId INTEGER PRIMARY KEY, raceId INTEGER REFERENCES races(raceId),
  driverId INTEGER REFERENCES drivers(driverId), position INTEGER, points REAL);
CREATE TABLE driverStandings (driverStandingsId INTEGER PRIMARY KEY, raceId INTEGER REFERENCES races(raceId),
  driverId INTEGER REFERENCES drivers(driverId), points REAL, position INTEGER, wins INTEGER);
",
    );
    let drivers = [
        (1, "Lewis", "Hamilton", "British"),
        (2, "Nick", "Heidfeld", "German"),
        (3, "Nico", "Rosberg", "German"),
        (4, "Fernando", "Alonso", "Spanish"),
        (5, "Sebastian", "Vettel", "German"),
    ];
    for (id, f, l, n) in drivers {
        let _ = writeln!(s, "INSERT INTO drivers VALUES ({id}, {}, {}, {});", q(f), q(l), q(n));
    }
    let races = [
        (1, 2008, 1, "Australian Grand Prix"),
        (2, 2008, 2, "Malaysian Grand Prix"),
        (3, 2008, 5, "Turkish Grand Prix"),
        (4, 2009, 1, "Australian Grand Prix"),
        (5, 2009, 7, "Turkish Grand Prix"),
    ];
    for (id, year, round, name) in races {
        let _ = writeln!(s, "INSERT INTO races VALUES ({id}, {year}, {round}, {});", q(name));
    }
    let points = [10.0, 8.0, 6.0, 5.0, 4.0];
    let mut totals = [0.0f64; 6];
    let mut wins = [0u32; 6];
    let mut result_id = 1;
    for (race, year, _, _) in races {
        if race == 4 {
            totals = [0.0; 6];
            wins = [0; 6];
        }
        for pos in 0..5usize {
            let driver = 1 + (pos + race as usize * 2 + year as usize) % 5;
            totals[driver] += points[pos];
            if pos == 0 {
                wins[driver] += 1;
            }
            let _ = writeln!(
                s,
                "INSERT INTO results VALUES ({result_id}, {race}, {driver}, {}, {:.1});",
                pos + 1,
                points[pos]
            );
            result_id += 1;
        }
        let mut order: Vec<usize> = (1..=5).collect();
        order.sort_by(|a, b| totals[*b].total_cmp(&totals[*a]).then(a.cmp(b)));
        for (rank, driver) in order.iter().enumerate() {
            let _ = writeln!(
                s,
                "INSERT INTO driverStandings VALUES ({}, {race}, {driver}, {:.1}, {}, {});",
                race * 10 + *driver as i32,
                totals[*driver],
                rank + 1,
                wins[*driver]
            );
        }
    }
    s
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::exec::{Cell, Database, ExecLimits};

    #[test]
    fn fig2_gold_counts_26_and_join_variant_23() {
        let dir = tempfile::tempdir().unwrap();
        let db = Database::open(write_database(dir.path(), "financial").unwrap()).unwrap();
        let limits = ExecLimits::default();
        let gold = db.run(FIG2_GOLD, &limits).unwrap();
        assert_eq!(gold.rows, vec![vec![Cell::Integer(26)]]);
        let join_row = &signal_cases()[4];
        let wrong = db.run(join_row.incorrect, &limits).unwrap();
        assert_eq!(wrong.rows, vec![vec![Cell::Integer(23)]]);
        let predicted = db.run(FIG2_PREDICTED, &limits).unwrap();
        assert_eq!(predicted.rows, vec![vec![Cell::Integer(0)]]);
    }

    #[test]
    fn every_case_executes() {
        let dir = tempfile::tempdir().unwrap();
        write_all(dir.path()).unwrap();
        for case in signal_cases() {
            let db = Database::open(dir.path().join(case.db_id).join(format!("{}.sqlite", case.db_id))).unwrap();
            let limits = ExecLimits::default();
            db.run(case.incorrect, &limits).unwrap();
            let good = db.run(case.correct, &limits).unwrap();
            assert!(good.row_count > 0, "{:?}", case.signal);
        }
    }
}
