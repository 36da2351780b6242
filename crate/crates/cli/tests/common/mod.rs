//! Fixture builders and helpers shared by the CLI test targets.
#![allow(dead_code)]

use std::fmt::Write as _;
use std::io::{BufRead, BufReader, Write};
use std::net::TcpListener;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};
use std::sync::{Arc, Mutex};

use chrono::{DateTime, Datelike, Duration, NaiveDate, TimeZone, Utc};
use chrono_tz::Europe::Berlin;
use percent_encoding::percent_decode_str;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub const QUERIES: [&str; 16] = [
    "AfD",
    "Alexander Gauland",
    "Alice Weidel",
    "Angela Merkel",
    "Bündnis 90/Die Grünen",
    "CDU",
    "CSU",
    "Cem Özdemir",
    "Christian Lindner",
    "Die Linke",
    "FDP",
    "Horst Seehofer",
    "Katrin Göring-Eckardt",
    "Martin Schulz",
    "SPD",
    "Sahra Wagenknecht",
];

pub const SUGGESTION_HEADER: &str = "source,queryterm,date,suggestterm,position\n";
pub const RESULT_HEADER: &str =
    "request_id,query,timestamp,rank,url,result_type,country,keyboard\n";

pub fn rankstab(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_rankstab"))
        .args(args)
        .env("RUST_LOG", "error")
        .output()
        .expect("run rankstab")
}

pub fn path_str(p: &Path) -> &str {
    p.to_str().expect("utf-8 path")
}

pub fn berlin(date: NaiveDate, h: u32, m: u32, s: u32) -> DateTime<Utc> {
    Berlin
        .with_ymd_and_hms(date.year(), date.month(), date.day(), h, m, s)
        .unwrap()
        .with_timezone(&Utc)
}

pub fn local(ts: DateTime<Utc>) -> String {
    ts.with_timezone(&Berlin)
        .format("%Y-%m-%d %H:%M:%S")
        .to_string()
}

pub fn first_day() -> NaiveDate {
    NaiveDate::from_ymd_opt(2017, 8, 4).unwrap()
}

/// Suggestion spelling of a query; differs from the result log for two parties.
pub fn suggestion_spelling(query: &str) -> &str {
    match query {
        "Bündnis 90/Die Grünen" => "Grüne",
        "Die Linke" => "Linke",
        other => other,
    }
}

pub const ALIASES: &str = "\
# spellings in the two logs
Bündnis 90/Die Grünen = grüne
Grüne = grüne
Die Linke = dielinke
Linke = dielinke
CDU = MISSING
";

pub struct FixturePaths {
    pub suggestions: PathBuf,
    pub results: PathBuf,
    pub aliases: PathBuf,
}

fn evolve(list: &mut [String], pool: &[String], rng: &mut ChaCha8Rng, p_swap: f64, p_replace: f64) {
    if rng.gen_bool(p_swap) && list.len() > 1 {
        let i = rng.gen_range(0..list.len() - 1);
        list.swap(i, i + 1);
    }
    if rng.gen_bool(p_replace) {
        let fresh: Vec<&String> = pool.iter().filter(|t| !list.contains(t)).collect();
        if let Some(new) = fresh.choose(rng) {
            let i = rng.gen_range(0..list.len());
            list[i] = (*new).clone();
        }
    }
}

/// Two months of simulated collection for all 16 queries: suggestions twice
/// a day, search results six times a day with three requests per round.
/// The output depends on `seed` only.
pub fn write_synthetic(dir: &Path, seed: u64) -> FixturePaths {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let days = 58;
    let mut sugg = String::from(SUGGESTION_HEADER);
    let mut res = String::from(RESULT_HEADER);

    for (qi, query) in QUERIES.iter().enumerate() {
        let slug: String = query
            .to_lowercase()
            .chars()
            .filter(|c| c.is_alphanumeric())
            .collect();
        let term_pool: Vec<String> = (0..16)
            .map(|i| format!("{} {i}", query.to_lowercase()))
            .collect();
        let url_pool: Vec<String> = (0..24)
            .map(|i| format!("https://{slug}.example/{i}"))
            .collect();
        let mut terms: Vec<String> = term_pool[..10].to_vec();
        let mut urls: Vec<String> = url_pool[..10].to_vec();

        for day in 0..days {
            let date = first_day() + Duration::days(day);
            if *query != "CDU" {
                for hour in [5, 17] {
                    evolve(&mut terms, &term_pool, &mut rng, 0.3, 0.1);
                    let at = berlin(date, hour, rng.gen_range(0..40), rng.gen_range(0..60));
                    for (pos, t) in terms.iter().enumerate() {
                        let _ = writeln!(
                            sugg,
                            "google,{},{},{t},{pos}",
                            suggestion_spelling(query),
                            local(at)
                        );
                    }
                }
            }
            for slot in 0..6u32 {
                evolve(&mut urls, &url_pool, &mut rng, 0.3, 0.1);
                let start = berlin(date, 4 * slot, rng.gen_range(0..25), 0);
                for k in 0..3 {
                    let mut list = urls.clone();
                    evolve(&mut list, &url_pool, &mut rng, 0.4, 0.15);
                    let id = format!("{qi}-{day}-{slot}-{k}");
                    let at = local(start + Duration::seconds(7 * k));
                    let country = if rng.gen_bool(0.02) { "AT" } else { "DE" };
                    for (rank, url) in list.iter().enumerate() {
                        let _ = writeln!(
                            res,
                            "{id},{query},{at},{},{url},organic,{country},de",
                            rank + 1
                        );
                    }
                    if rng.gen_bool(0.3) {
                        let _ = writeln!(
                            res,
                            "{id},{query},{at},11,https://ads.example/{slug},ad,{country},de"
                        );
                    }
                }
            }
        }
    }

    let paths = FixturePaths {
        suggestions: dir.join("suggestions.csv"),
        results: dir.join("results.csv"),
        aliases: dir.join("aliases.txt"),
    };
    std::fs::write(&paths.suggestions, sugg).unwrap();
    std::fs::write(&paths.results, res).unwrap();
    std::fs::write(&paths.aliases, ALIASES).unwrap();
    paths
}

/// Ten days of unchanging lists for all 16 queries.
pub fn write_constant(dir: &Path) -> FixturePaths {
    let mut sugg = String::from(SUGGESTION_HEADER);
    let mut res = String::from(RESULT_HEADER);
    for (qi, query) in QUERIES.iter().enumerate() {
        for day in 0..10 {
            let date = first_day() + Duration::days(day);
            for hour in [5, 17] {
                let at = local(berlin(date, hour, 3, 0));
                for pos in 0..8 {
                    let _ = writeln!(sugg, "google,{query},{at},term {qi} {pos},{pos}");
                }
            }
            for slot in 0..6 {
                let at = local(berlin(date, 4 * slot, 5, 0));
                for rank in 1..=10 {
                    let _ = writeln!(res, "{qi}-{day}-{slot},{query},{at},{rank},https://{qi}.example/{rank},organic,DE,de");
                }
            }
        }
    }
    let paths = FixturePaths {
        suggestions: dir.join("suggestions.csv"),
        results: dir.join("results.csv"),
        aliases: dir.join("aliases.txt"),
    };
    std::fs::write(&paths.suggestions, sugg).unwrap();
    std::fs::write(&paths.results, res).unwrap();
    std::fs::write(&paths.aliases, "").unwrap();
    paths
}

/// Rounds of the disruption fixture.
pub const DISRUPTION_ROUNDS: usize = 60;
/// Rounds whose CSU lists share nothing with any other list.
pub const DISRUPTED: std::ops::RangeInclusive<usize> = 20..=25;
/// From this round on the top two SPD suggestions are swapped.
pub const SWAP_FROM: usize = 30;

/// Round `i` of the disruption fixture: twice a day from 4 August, one
/// minute after the scheduled time.
pub fn disruption_round_time(i: usize) -> DateTime<Utc> {
    let date = first_day() + Duration::days((i / 2) as i64);
    berlin(date, if i.is_multiple_of(2) { 5 } else { 17 }, 1, 0)
}

/// Suggestion log with four queries over 30 days. CSU is replaced by
/// fresh, mutually disjoint lists during [`DISRUPTED`]; SPD swaps its top
/// two suggestions from [`SWAP_FROM`] on; AfD and FDP never change.
pub fn write_disruption(dir: &Path) -> PathBuf {
    let mut sugg = String::from(SUGGESTION_HEADER);
    let base = |q: &str| -> Vec<String> {
        (0..10)
            .map(|i| format!("{} {i}", q.to_lowercase()))
            .collect()
    };
    for query in ["AfD", "CSU", "FDP", "SPD"] {
        for i in 0..DISRUPTION_ROUNDS {
            let mut list = base(query);
            if query == "CSU" && DISRUPTED.contains(&i) {
                list = (0..10).map(|k| format!("csu event {i} {k}")).collect();
            }
            if query == "SPD" && i >= SWAP_FROM {
                list.swap(0, 1);
            }
            let at = local(disruption_round_time(i));
            for (pos, t) in list.iter().enumerate() {
                let _ = writeln!(sugg, "google,{query},{at},{t},{pos}");
            }
        }
    }
    let path = dir.join("disruption.csv");
    std::fs::write(&path, sugg).unwrap();
    path
}

/// Result log with one query, two rounds and eight requests, of which five
/// carry distinct lists. An ad row and a row from Austria are filtered out
/// before the lists are formed.
pub fn write_duplicate_lists(dir: &Path) -> PathBuf {
    let lists: [(&str, u32, &[&str]); 8] = [
        ("r1", 0, &["a", "b", "c"]),
        ("r2", 0, &["a", "b", "c"]),
        ("r3", 0, &["b", "a", "c"]),
        ("r4", 0, &["a", "b", "d"]),
        ("r5", 4, &["a", "b", "c"]),
        ("r6", 4, &["c", "b", "a"]),
        ("r7", 4, &["c", "b", "a"]),
        ("r8", 4, &["a", "b"]),
    ];
    let mut res = String::from(RESULT_HEADER);
    for (id, hour, urls) in lists {
        let at = local(berlin(first_day(), hour, 10, 0));
        for (i, u) in urls.iter().enumerate() {
            let _ = writeln!(
                res,
                "{id},AfD,{at},{},https://{u}.example/,organic,DE,de",
                i + 1
            );
        }
    }
    let early = local(berlin(first_day(), 0, 10, 0));
    let late = local(berlin(first_day(), 4, 10, 0));
    let _ = writeln!(res, "r1,AfD,{early},4,https://ad.example/,ad,DE,de");
    let _ = writeln!(res, "r8,AfD,{late},3,https://x.example/,organic,AT,de");
    let path = dir.join("duplicates.csv");
    std::fs::write(&path, res).unwrap();
    path
}

/// Reads an analysis CSV into (timepoint, min, res, ext, smoothed) rows.
pub fn read_series(path: &Path) -> Vec<(String, [f64; 4])> {
    let text = std::fs::read_to_string(path).unwrap_or_else(|e| panic!("{}: {e}", path.display()));
    let mut lines = text.lines();
    assert_eq!(
        lines.next(),
        Some("timepoint,rbo_min,rbo_res,rbo_ext,rbo_ext_smoothed")
    );
    lines
        .map(|line| {
            let mut parts = line.split(',');
            let t = parts.next().unwrap().to_string();
            let v: Vec<f64> = parts.map(|x| x.parse().unwrap()).collect();
            (t, [v[0], v[1], v[2], v[3]])
        })
        .collect()
}

#[derive(Debug, Clone)]
pub struct Seen {
    pub query: String,
    pub headers: Vec<String>,
}

/// Minimal HTTP/1.1 server answering `GET ...?q=...` with `handler(q)`.
pub struct MockEndpoint {
    pub base: String,
    seen: Arc<Mutex<Vec<Seen>>>,
}

impl MockEndpoint {
    pub fn start(handler: impl Fn(&str) -> (u16, String) + Send + Sync + 'static) -> Self {
        let listener = TcpListener::bind("127.0.0.1:0").unwrap();
        let base = format!("http://{}", listener.local_addr().unwrap());
        let seen = Arc::new(Mutex::new(Vec::new()));
        let log = Arc::clone(&seen);
        std::thread::spawn(move || {
            for stream in listener.incoming() {
                let Ok(mut stream) = stream else { continue };
                let mut reader = BufReader::new(stream.try_clone().unwrap());
                let mut request_line = String::new();
                if reader.read_line(&mut request_line).is_err() {
                    continue;
                }
                let mut headers = Vec::new();
                loop {
                    let mut line = String::new();
                    if reader.read_line(&mut line).unwrap_or(0) == 0 || line == "\r\n" {
                        break;
                    }
                    headers.push(line.trim_end().to_ascii_lowercase());
                }
                let target = request_line.split_whitespace().nth(1).unwrap_or("");
                let raw = target.split_once("q=").map_or("", |(_, q)| q);
                let query = percent_decode_str(raw).decode_utf8_lossy().into_owned();
                log.lock().unwrap().push(Seen {
                    query: query.clone(),
                    headers,
                });
                let (status, body) = handler(&query);
                let reply = format!(
                    "HTTP/1.1 {status} X\r\nContent-Type: application/json\r\nContent-Length: {}\r\nConnection: close\r\n\r\n{body}",
                    body.len()
                );
                let _ = stream.write_all(reply.as_bytes());
            }
        });
        Self { base, seen }
    }

    pub fn template(&self) -> String {
        format!("{}/complete?client=firefox&q={{query}}", self.base)
    }

    pub fn seen(&self) -> Vec<Seen> {
        self.seen.lock().unwrap().clone()
    }
}

/// `[query, [terms...]]` with the terms JSON-quoted.
pub fn suggest_payload(query: &str, terms: &[String]) -> String {
    let quote = |s: &str| format!("\"{}\"", s.replace('\\', "\\\\").replace('"', "\\\""));
    let list: Vec<String> = terms.iter().map(|t| quote(t)).collect();
    format!("[{},[{}]]", quote(query), list.join(","))
}
