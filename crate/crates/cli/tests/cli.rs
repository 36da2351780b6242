mod common;

use std::path::Path;

use common::*;

fn stderr(out: &std::process::Output) -> String {
    String::from_utf8_lossy(&out.stderr).into_owned()
}

fn entries(dir: &Path) -> Vec<String> {
    let mut names: Vec<String> = std::fs::read_dir(dir)
        .unwrap()
        .map(|e| e.unwrap().file_name().to_string_lossy().into_owned())
        .collect();
    names.sort();
    names
}

fn analyze_constant(
    dir: &Path,
    extra: &[&str],
) -> (FixturePaths, std::path::PathBuf, std::process::Output) {
    let fx = write_constant(dir);
    let out_dir = dir.join("out");
    let mut args = vec![
        "analyze",
        "--suggestions",
        path_str(&fx.suggestions),
        "--results",
        path_str(&fx.results),
        "--out-dir",
        path_str(&out_dir),
    ];
    args.extend_from_slice(extra);
    let out = rankstab(&args);
    (fx, out_dir, out)
}

#[test]
fn constant_lists_give_flat_series_and_a_valid_grid() {
    let tmp = tempfile::tempdir().unwrap();
    let (_, out_dir, out) = analyze_constant(tmp.path(), &[]);
    assert!(out.status.success(), "{}", stderr(&out));

    let names = entries(&out_dir);
    let csvs: Vec<&String> = names.iter().filter(|n| n.ends_with(".csv")).collect();
    assert_eq!(csvs.len(), 16 * 2 * 2);
    for name in csvs {
        let text = std::fs::read_to_string(out_dir.join(name)).unwrap();
        assert_eq!(
            text.lines().next(),
            Some("timepoint,rbo_min,rbo_res,rbo_ext,rbo_ext_smoothed")
        );
        for (_, values) in read_series(&out_dir.join(name)) {
            assert_eq!(values[2], 1.0, "{name}");
            assert_eq!(values[3], 1.0, "{name}");
        }
    }

    for mode in ["successive", "fixed"] {
        let text = std::fs::read_to_string(out_dir.join(format!("{mode}.svg"))).unwrap();
        let doc = roxmltree::Document::parse(&text).expect("well-formed SVG");
        let has_class = |n: &roxmltree::Node, class: &str| {
            n.attribute("class")
                .is_some_and(|c| c.split_whitespace().any(|c| c == class))
        };
        let panels: Vec<_> = doc
            .descendants()
            .filter(|n| has_class(n, "panel"))
            .collect();
        assert_eq!(panels.len(), 16);
        for panel in panels {
            let refs: Vec<_> = panel
                .descendants()
                .filter(|n| has_class(n, "ref-line"))
                .collect();
            assert_eq!(refs.len(), 1, "{:?}", panel.attribute("data-query"));
            let frame = panel.descendants().find(|n| has_class(n, "frame")).unwrap();
            let num =
                |n: &roxmltree::Node, a: &str| n.attribute(a).unwrap().parse::<f64>().unwrap();
            let mid = num(&frame, "y") + num(&frame, "height") / 2.0;
            assert!((num(&refs[0], "y1") - mid).abs() < 0.01);
            assert_eq!(refs[0].attribute("data-value"), Some("0.5"));
            assert_eq!(
                panel
                    .descendants()
                    .filter(|n| has_class(n, "series"))
                    .count(),
                2
            );
        }
    }
}

#[test]
fn out_of_range_parameter_is_a_config_error() {
    let tmp = tempfile::tempdir().unwrap();
    for bad in [
        ["--p", "1.5"],
        ["--p", "0"],
        ["--threshold", "3/2"],
        ["--window-days", "-1"],
    ] {
        let (_, out_dir, out) = analyze_constant(tmp.path(), &bad);
        assert_eq!(out.status.code(), Some(3), "{bad:?}: {}", stderr(&out));
        assert!(!out_dir.exists() || entries(&out_dir).is_empty());
    }
}

#[test]
fn unknown_flag_is_a_config_error() {
    let out = rankstab(&["analyze", "--no-such-flag"]);
    assert_eq!(out.status.code(), Some(3));
}

#[test]
fn missing_input_file_is_an_input_error() {
    let tmp = tempfile::tempdir().unwrap();
    let missing = tmp.path().join("nope.csv");
    let out = rankstab(&[
        "analyze",
        "--suggestions",
        path_str(&missing),
        "--out-dir",
        path_str(tmp.path()),
    ]);
    assert_eq!(out.status.code(), Some(2), "{}", stderr(&out));
    assert!(stderr(&out).contains("nope.csv"));
}

#[test]
fn malformed_rows_fail_only_in_strict_mode() {
    let tmp = tempfile::tempdir().unwrap();
    let input = tmp.path().join("s.csv");
    let mut text = String::from(SUGGESTION_HEADER);
    text.push_str("google,AfD,2017-08-04 05:00:00,afd wahlprogramm,0\n");
    text.push_str("google,AfD,2017-08-04 05:00:00,afd umfrage,first\n");
    text.push_str("google,AfD,2017-08-04 17:00:00,afd wahlprogramm,0\n");
    std::fs::write(&input, text).unwrap();
    let out_dir = tmp.path().join("out");

    let lenient = rankstab(&[
        "analyze",
        "--suggestions",
        path_str(&input),
        "--out-dir",
        path_str(&out_dir),
    ]);
    assert!(lenient.status.success(), "{}", stderr(&lenient));

    let strict = rankstab(&[
        "analyze",
        "--suggestions",
        path_str(&input),
        "--out-dir",
        path_str(&tmp.path().join("strict")),
        "--strict",
    ]);
    assert_eq!(strict.status.code(), Some(2));
    assert!(stderr(&strict).contains("line 3"), "{}", stderr(&strict));
}

#[test]
fn column_mapping_renames_result_columns() {
    let tmp = tempfile::tempdir().unwrap();
    let results = tmp.path().join("r.tsv");
    let mut text = String::from("id\tterm\twhen\tpos\tlink\tkind\tcc\tkb\n");
    for (req, at) in [("a", "2017-08-04 08:00:00"), ("b", "2017-08-04 12:00:00")] {
        for rank in 1..=3 {
            text.push_str(&format!(
                "{req}\tSPD\t{at}\t{rank}\thttps://{rank}.example/\torganic\tDE\tde\n"
            ));
        }
    }
    std::fs::write(&results, text).unwrap();
    let columns = tmp.path().join("columns.toml");
    std::fs::write(
        &columns,
        r#"source = "bing"
delimiter = "\t"

[columns]
request_id = "id"
query = "term"
timestamp = "when"
rank = "pos"
url = "link"
result_type = "kind"
country = "cc"
keyboard = "kb"
"#,
    )
    .unwrap();
    let out_dir = tmp.path().join("out");
    let out = rankstab(&[
        "analyze",
        "--results",
        path_str(&results),
        "--columns",
        path_str(&columns),
        "--format",
        "csv",
        "--out-dir",
        path_str(&out_dir),
    ]);
    assert!(out.status.success(), "{}", stderr(&out));
    let rows = read_series(&out_dir.join("successive_results_bing_spd.csv"));
    assert_eq!(rows.len(), 1);
    assert_eq!(rows[0].1[2], 1.0);
}

#[test]
fn broken_column_mapping_is_a_config_error() {
    let tmp = tempfile::tempdir().unwrap();
    let fx = write_constant(tmp.path());
    let columns = tmp.path().join("columns.toml");
    for body in ["source = ", "colour = \"red\"\n", "delimiter = \"ab\"\n"] {
        std::fs::write(&columns, body).unwrap();
        let out = rankstab(&[
            "analyze",
            "--results",
            path_str(&fx.results),
            "--columns",
            path_str(&columns),
            "--out-dir",
            path_str(&tmp.path().join("out")),
        ]);
        assert_eq!(out.status.code(), Some(3), "{body:?}: {}", stderr(&out));
    }
}

#[test]
fn mapped_column_absent_from_header_is_an_input_error() {
    let tmp = tempfile::tempdir().unwrap();
    let fx = write_constant(tmp.path());
    let columns = tmp.path().join("columns.toml");
    std::fs::write(&columns, "[columns]\nrank = \"position\"\n").unwrap();
    let out = rankstab(&[
        "analyze",
        "--results",
        path_str(&fx.results),
        "--columns",
        path_str(&columns),
        "--out-dir",
        path_str(&tmp.path().join("out")),
    ]);
    assert_eq!(out.status.code(), Some(2), "{}", stderr(&out));
    assert!(stderr(&out).contains("position"));
}

#[test]
fn failed_write_removes_partial_outputs() {
    let tmp = tempfile::tempdir().unwrap();
    let out_dir = tmp.path().join("out");
    // The fixed-mode plot is written last; a directory in its place makes that write fail.
    std::fs::create_dir_all(out_dir.join("fixed.svg")).unwrap();
    let (_, _, out) = analyze_constant(tmp.path(), &[]);
    assert_eq!(out.status.code(), Some(4), "{}", stderr(&out));
    assert_eq!(entries(&out_dir), ["fixed.svg"]);
}

#[test]
fn aliases_merge_spellings_and_flag_missing_queries() {
    let tmp = tempfile::tempdir().unwrap();
    let fx = write_synthetic(tmp.path(), 7);
    let out_dir = tmp.path().join("out");
    let out = rankstab(&[
        "analyze",
        "--suggestions",
        path_str(&fx.suggestions),
        "--results",
        path_str(&fx.results),
        "--aliases",
        path_str(&fx.aliases),
        "--mode",
        "fixed",
        "--out-dir",
        path_str(&out_dir),
    ]);
    assert!(out.status.success(), "{}", stderr(&out));
    let names = entries(&out_dir);
    assert!(!names.iter().any(|n| n.starts_with("successive")));
    assert!(names.contains(&"fixed_results_google_cdu.csv".to_string()));
    assert!(!names.contains(&"fixed_suggestions_google_cdu.csv".to_string()));
    let svg = std::fs::read_to_string(out_dir.join("fixed.svg")).unwrap();
    let doc = roxmltree::Document::parse(&svg).unwrap();
    let panels = doc
        .descendants()
        .filter(|n| n.attribute("class") == Some("panel"))
        .count();
    assert_eq!(panels, 16);
}

#[test]
fn bad_alias_file_is_a_config_error() {
    let tmp = tempfile::tempdir().unwrap();
    let fx = write_constant(tmp.path());
    std::fs::write(&fx.aliases, "this line has no separator\n").unwrap();
    let out = rankstab(&[
        "analyze",
        "--suggestions",
        path_str(&fx.suggestions),
        "--aliases",
        path_str(&fx.aliases),
        "--out-dir",
        path_str(&tmp.path().join("out")),
    ]);
    assert_eq!(out.status.code(), Some(3), "{}", stderr(&out));
}

#[test]
fn report_on_empty_logs_prints_zeros() {
    let tmp = tempfile::tempdir().unwrap();
    let sugg = tmp.path().join("s.csv");
    let res = tmp.path().join("r.csv");
    std::fs::write(&sugg, SUGGESTION_HEADER).unwrap();
    std::fs::write(&res, RESULT_HEADER).unwrap();
    let out = rankstab(&[
        "report",
        "--suggestions",
        path_str(&sugg),
        "--results",
        path_str(&res),
    ]);
    assert!(out.status.success(), "{}", stderr(&out));
    let text = String::from_utf8_lossy(&out.stdout);
    assert!(text.contains("unique suggestion terms: 0"), "{text}");
    assert!(text.contains("requests: 0"), "{text}");
    assert!(text.contains("unique result lists: 0"), "{text}");
}

#[test]
fn report_marks_queries_without_data() {
    let tmp = tempfile::tempdir().unwrap();
    let fx = write_synthetic(tmp.path(), 3);
    let out = rankstab(&[
        "report",
        "--suggestions",
        path_str(&fx.suggestions),
        "--aliases",
        path_str(&fx.aliases),
    ]);
    assert!(out.status.success(), "{}", stderr(&out));
    let text = String::from_utf8_lossy(&out.stdout);
    let cdu = text.lines().find(|l| l.contains("CDU")).expect("CDU row");
    assert!(cdu.contains("MISSING"), "{cdu}");
}

fn crawl_config(dir: &Path, endpoint: &str) -> std::path::PathBuf {
    let path = dir.join("crawl.toml");
    std::fs::write(
        &path,
        format!(
            r#"output = "{}"

[[target]]
source = "google"
endpoint = "{endpoint}"
queries = ["Angela Merkel", "Martin Schulz"]
schedule = ["05:00", "17:00"]
"#,
            dir.join("crawled.csv").display()
        ),
    )
    .unwrap();
    path
}

#[test]
fn crawl_dry_run_lists_slots_without_fetching() {
    let server = MockEndpoint::start(|_| (200, "[\"\",[]]".into()));
    let tmp = tempfile::tempdir().unwrap();
    let config = crawl_config(tmp.path(), &server.template());
    let out = rankstab(&[
        "crawl",
        "--config",
        path_str(&config),
        "--dry-run",
        "--max-slots",
        "3",
    ]);
    assert!(out.status.success(), "{}", stderr(&out));
    let text = String::from_utf8_lossy(&out.stdout);
    assert_eq!(
        text.matches("google: Angela Merkel, Martin Schulz").count(),
        3,
        "{text}"
    );
    assert!(text.contains("crawled.csv"));
    assert!(server.seen().is_empty());
    assert!(!tmp.path().join("crawled.csv").exists());
}

#[test]
fn invalid_crawl_config_names_the_field() {
    let tmp = tempfile::tempdir().unwrap();
    let config = crawl_config(tmp.path(), "https://example.invalid/complete?q=fixed");
    let out = rankstab(&["crawl", "--config", path_str(&config), "--dry-run"]);
    assert_eq!(out.status.code(), Some(3));
    assert!(
        stderr(&out).contains("target[0].endpoint"),
        "{}",
        stderr(&out)
    );

    std::fs::write(&config, "[[target]]\nsource = \"google\"\n").unwrap();
    let out = rankstab(&["crawl", "--config", path_str(&config), "--dry-run"]);
    assert_eq!(out.status.code(), Some(3), "{}", stderr(&out));
}
