//! Reading and writing result files.
//!
//! Real seasons come as CSV with header `season,date,home,away,outcome`
//! (outcome `H`, `A` or `D`) or as JSON lines with the same fields. Draws are
//! dropped on load. Synthetic result sets use `order,home,away,home_won`
//! with numeric team ids.

use std::collections::{BTreeSet, HashMap};
use std::fs::File;
use std::io::{BufRead, BufReader, Read, Write};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::FitnessVector;
use crate::synth::{GameRecord, ResultSet};

pub const SEASON_CSV_HEADER: [&str; 5] = ["season", "date", "home", "away", "outcome"];
pub const RESULTS_CSV_HEADER: [&str; 4] = ["order", "home", "away", "home_won"];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Outcome {
    HomeWin,
    AwayWin,
    Draw,
}

impl std::str::FromStr for Outcome {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s.trim() {
            "H" | "h" => Ok(Outcome::HomeWin),
            "A" | "a" => Ok(Outcome::AwayWin),
            "D" | "d" => Ok(Outcome::Draw),
            other => Err(format!("unknown outcome `{other}` (expected H, A or D)")),
        }
    }
}

/// One input row before draw filtering.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RawGameRow {
    pub season: String,
    pub date_order: String,
    pub home_name: String,
    pub away_name: String,
    pub outcome: Outcome,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SeasonData {
    pub season: String,
    /// Team names; the index is the team id used in `results`.
    pub team_names: Vec<String>,
    pub results: ResultSet,
}

impl SeasonData {
    /// Wraps a synthetic result set with generated names `T00`, `T01`, ...
    pub fn from_results(season: impl Into<String>, results: ResultSet) -> Self {
        let width = results.n_teams().saturating_sub(1).to_string().len().max(2);
        let team_names = (0..results.n_teams()).map(|i| format!("T{i:0width$}")).collect();
        Self { season: season.into(), team_names, results }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum InputFormat {
    Csv,
    JsonLines,
}

impl InputFormat {
    /// `.jsonl` / `.ndjson` are JSON lines, anything else CSV.
    pub fn from_path(path: &Path) -> Self {
        match path.extension().and_then(|e| e.to_str()) {
            Some("jsonl" | "ndjson") => InputFormat::JsonLines,
            _ => InputFormat::Csv,
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct LoadReport {
    pub rows: usize,
    pub draws: usize,
    /// Seasons that had no games left after dropping draws.
    pub skipped_seasons: Vec<String>,
}

impl LoadReport {
    pub fn draw_fraction(&self) -> f64 {
        if self.rows == 0 {
            0.0
        } else {
            self.draws as f64 / self.rows as f64
        }
    }
}

pub fn load_seasons(path: &Path, format: InputFormat) -> Result<Vec<SeasonData>> {
    Ok(load_seasons_with_report(path, format)?.0)
}

pub fn load_seasons_with_report(path: &Path, format: InputFormat) -> Result<(Vec<SeasonData>, LoadReport)> {
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    read_seasons(file, format, path)
}

/// Parses season rows from `reader`; `source` is only used in error messages.
pub fn read_seasons<R: Read>(reader: R, format: InputFormat, source: &Path) -> Result<(Vec<SeasonData>, LoadReport)> {
    let rows = match format {
        InputFormat::Csv => parse_csv_rows(reader, source)?,
        InputFormat::JsonLines => parse_jsonl_rows(reader, source)?,
    };
    Ok(group_seasons(rows))
}

fn parse_error(source: &Path, line: u64, message: impl Into<String>) -> Error {
    Error::Parse { path: source.to_path_buf(), line, message: message.into() }
}

fn csv_error(source: &Path, err: csv::Error) -> Error {
    let line = err.position().map(|p| p.line()).unwrap_or(0);
    parse_error(source, line, err.to_string())
}

fn parse_csv_rows<R: Read>(reader: R, source: &Path) -> Result<Vec<RawGameRow>> {
    let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(reader);
    let headers = rdr.headers().map_err(|e| csv_error(source, e))?.clone();
    let column = |name: &str| {
        headers
            .iter()
            .position(|h| h.eq_ignore_ascii_case(name))
            .ok_or_else(|| parse_error(source, 1, format!("missing column `{name}`")))
    };
    let idx: Vec<usize> = SEASON_CSV_HEADER.iter().map(|c| column(c)).collect::<Result<_>>()?;
    let mut rows = Vec::new();
    for record in rdr.records() {
        let record = record.map_err(|e| csv_error(source, e))?;
        let line = record.position().map(|p| p.line()).unwrap_or(0);
        let field = |i: usize| record.get(idx[i]).unwrap_or("").to_string();
        rows.push(make_row(source, line, field(0), field(1), field(2), field(3), &field(4))?);
    }
    Ok(rows)
}

#[derive(Deserialize)]
struct JsonRow {
    season: serde_json::Value,
    date: serde_json::Value,
    home: String,
    away: String,
    outcome: String,
}

fn json_text(v: &serde_json::Value) -> String {
    match v {
        serde_json::Value::String(s) => s.clone(),
        other => other.to_string(),
    }
}

fn parse_jsonl_rows<R: Read>(reader: R, source: &Path) -> Result<Vec<RawGameRow>> {
    let mut rows = Vec::new();
    for (i, line) in BufReader::new(reader).lines().enumerate() {
        let line_no = i as u64 + 1;
        let line = line.map_err(|e| Error::io(source, e))?;
        if line.trim().is_empty() {
            continue;
        }
        let row: JsonRow = serde_json::from_str(&line).map_err(|e| parse_error(source, line_no, e.to_string()))?;
        rows.push(make_row(source, line_no, json_text(&row.season), json_text(&row.date), row.home, row.away, &row.outcome)?);
    }
    Ok(rows)
}

fn make_row(
    source: &Path,
    line: u64,
    season: String,
    date: String,
    home: String,
    away: String,
    outcome: &str,
) -> Result<RawGameRow> {
    if season.is_empty() || home.is_empty() || away.is_empty() {
        return Err(parse_error(source, line, "empty season or team name"));
    }
    if home == away {
        return Err(parse_error(source, line, format!("team `{home}` listed as both home and away")));
    }
    let outcome = outcome.parse().map_err(|m: String| parse_error(source, line, m))?;
    Ok(RawGameRow { season, date_order: date, home_name: home, away_name: away, outcome })
}

/// Groups rows by season in order of first appearance, drops draws and sorts
/// each season chronologically. Dates compare numerically when every date
/// in the season is an integer, as strings otherwise; ties keep file order.
pub fn group_seasons(rows: Vec<RawGameRow>) -> (Vec<SeasonData>, LoadReport) {
    let mut report = LoadReport { rows: rows.len(), ..Default::default() };
    let mut order: Vec<String> = Vec::new();
    let mut by_season: HashMap<String, Vec<RawGameRow>> = HashMap::new();
    for row in rows {
        if !by_season.contains_key(&row.season) {
            order.push(row.season.clone());
        }
        by_season.entry(row.season.clone()).or_default().push(row);
    }

    let mut seasons = Vec::new();
    for name in order {
        let mut rows = by_season.remove(&name).unwrap_or_default();
        let before = rows.len();
        rows.retain(|r| r.outcome != Outcome::Draw);
        report.draws += before - rows.len();
        if rows.is_empty() {
            log::warn!("season `{name}` has no decided games; skipped");
            report.skipped_seasons.push(name);
            continue;
        }
        let numeric: Option<Vec<i64>> = rows.iter().map(|r| r.date_order.trim().parse().ok()).collect();
        match numeric {
            Some(keys) => {
                let mut idx: Vec<usize> = (0..rows.len()).collect();
                idx.sort_by_key(|&i| keys[i]);
                rows = idx.into_iter().map(|i| rows[i].clone()).collect();
            }
            None => rows.sort_by(|a, b| a.date_order.cmp(&b.date_order)),
        }

        let names: BTreeSet<&str> = rows.iter().flat_map(|r| [r.home_name.as_str(), r.away_name.as_str()]).collect();
        let team_names: Vec<String> = names.into_iter().map(str::to_string).collect();
        let id: HashMap<&str, usize> = team_names.iter().enumerate().map(|(i, n)| (n.as_str(), i)).collect();
        let games = rows
            .iter()
            .enumerate()
            .map(|(k, r)| GameRecord {
                home: id[r.home_name.as_str()],
                away: id[r.away_name.as_str()],
                home_won: r.outcome == Outcome::HomeWin,
                order: k as u64,
            })
            .collect();
        let results = ResultSet::new(team_names.len(), games).expect("interned ids are in range");
        seasons.push(SeasonData { season: name, team_names, results });
    }
    (seasons, report)
}

/// The first `floor(frac * N_S)` games of the season.
pub fn truncate_season(season: &SeasonData, frac: f64) -> Result<ResultSet> {
    if !(frac > 0.0 && frac <= 1.0) {
        return Err(Error::invalid("frac", format!("must lie in (0, 1], got {frac}")));
    }
    let count = (frac * season.results.len() as f64).floor() as usize;
    Ok(season.results.prefix(count))
}

pub fn write_results_csv<W: Write>(results: &ResultSet, writer: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    w.write_record(RESULTS_CSV_HEADER)?;
    for g in results.games() {
        w.write_record([g.order.to_string(), g.home.to_string(), g.away.to_string(), (g.home_won as u8).to_string()])?;
    }
    w.flush().map_err(|e| Error::io("<results>", e))?;
    Ok(())
}

/// Reads a result-set CSV. Without `n_teams` the roster size is one more
/// than the largest team id seen.
pub fn read_results_csv<R: Read>(reader: R, source: &Path, n_teams: Option<usize>) -> Result<ResultSet> {
    let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(reader);
    let headers = rdr.headers().map_err(|e| csv_error(source, e))?.clone();
    if !is_results_header(headers.iter()) {
        return Err(parse_error(source, 1, format!("expected header `{}`", RESULTS_CSV_HEADER.join(","))));
    }
    let mut games = Vec::new();
    for record in rdr.records() {
        let record = record.map_err(|e| csv_error(source, e))?;
        let line = record.position().map(|p| p.line()).unwrap_or(0);
        let int = |i: usize, what: &str| -> Result<u64> {
            record
                .get(i)
                .unwrap_or("")
                .parse()
                .map_err(|_| parse_error(source, line, format!("`{what}` is not a non-negative integer")))
        };
        let won = match record.get(3).unwrap_or("") {
            "1" | "true" | "TRUE" | "True" => true,
            "0" | "false" | "FALSE" | "False" => false,
            other => return Err(parse_error(source, line, format!("`home_won` must be 0/1 or true/false, got `{other}`"))),
        };
        let game = GameRecord { order: int(0, "order")?, home: int(1, "home")? as usize, away: int(2, "away")? as usize, home_won: won };
        if game.home == game.away {
            return Err(parse_error(source, line, format!("team {} listed as both home and away", game.home)));
        }
        games.push(game);
    }
    let seen = games.iter().map(|g| g.home.max(g.away) + 1).max().unwrap_or(0);
    let n = n_teams.unwrap_or(seen);
    if n < seen {
        return Err(parse_error(source, 0, format!("team id {} out of range for {n} teams", seen - 1)));
    }
    games.sort_by_key(|g| g.order);
    ResultSet::new(n.max(1), games)
}

pub fn load_results_csv(path: &Path, n_teams: Option<usize>) -> Result<ResultSet> {
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    read_results_csv(file, path, n_teams)
}

pub fn is_results_header<'a>(fields: impl IntoIterator<Item = &'a str>) -> bool {
    fields.into_iter().map(str::trim).eq(RESULTS_CSV_HEADER)
}

/// Whether the file at `path` starts with the result-set header.
pub fn sniff_results_csv(path: &Path) -> Result<bool> {
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    let mut first = String::new();
    BufReader::new(file).read_line(&mut first).map_err(|e| Error::io(path, e))?;
    Ok(is_results_header(first.trim_start_matches('\u{feff}').trim().split(',')))
}

pub fn write_fitness_csv<W: Write>(fitness: &FitnessVector, writer: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    w.write_record(["team", "fitness"])?;
    for (i, f) in fitness.values().iter().enumerate() {
        w.write_record([i.to_string(), f.to_string()])?;
    }
    w.flush().map_err(|e| Error::io("<fitness>", e))?;
    Ok(())
}

pub fn load_fitness_csv(path: &Path) -> Result<FitnessVector> {
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(file);
    let mut rows: Vec<(usize, f64)> = Vec::new();
    for record in rdr.records() {
        let record = record.map_err(|e| csv_error(path, e))?;
        let line = record.position().map(|p| p.line()).unwrap_or(0);
        let team = record.get(0).unwrap_or("").parse().map_err(|_| parse_error(path, line, "bad team id"))?;
        let value = record.get(1).unwrap_or("").parse().map_err(|_| parse_error(path, line, "bad fitness value"))?;
        rows.push((team, value));
    }
    rows.sort_by_key(|r| r.0);
    if rows.iter().enumerate().any(|(i, r)| r.0 != i) {
        return Err(parse_error(path, 0, "team ids must be 0..N without gaps"));
    }
    Ok(FitnessVector::new(rows.into_iter().map(|r| r.1).collect()))
}

/// Path of the fitness file written next to a generated result set.
pub fn fitness_sidecar_path(results_path: &Path) -> PathBuf {
    let stem = results_path.file_stem().and_then(|s| s.to_str()).unwrap_or("results");
    results_path.with_file_name(format!("{stem}.fitness.csv"))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn read(text: &str) -> Result<(Vec<SeasonData>, LoadReport)> {
        read_seasons(text.as_bytes(), InputFormat::Csv, Path::new("test.csv"))
    }

    #[test]
    fn draws_are_dropped() {
        let (s, report) = read("season,date,home,away,outcome\n2020,1,A,B,H\n2020,2,B,C,D\n2020,3,C,A,A\n").unwrap();
        assert_eq!(s.len(), 1);
        assert_eq!(s[0].results.len(), 2);
        assert_eq!(report.draws, 1);
        assert!((report.draw_fraction() - 1.0 / 3.0).abs() < 1e-15);
    }

    #[test]
    fn interleaved_seasons() {
        let text = "season,date,home,away,outcome\n\
                    s1,2020-01-03,A,B,H\n\
                    s2,2021-01-01,X,Y,A\n\
                    s1,2020-01-01,B,C,A\n\
                    s2,2021-01-02,Y,Z,H\n\
                    s1,2020-01-02,C,A,H\n";
        let (s, _) = read(text).unwrap();
        assert_eq!(s.len(), 2);
        assert_eq!(s[0].season, "s1");
        assert_eq!(s[0].team_names, ["A", "B", "C"]);
        // chronological: B-C (A wins -> C), C-A (H -> C), A-B (H -> A)
        let g = s[0].results.games();
        assert_eq!((g[0].home, g[0].away, g[0].home_won), (1, 2, false));
        assert_eq!((g[1].home, g[1].away), (2, 0));
        assert_eq!((g[2].home, g[2].away), (0, 1));
        assert_eq!(s[1].results.len(), 2);
    }

    #[test]
    fn numeric_dates_sort_numerically_and_ties_keep_file_order() {
        let text = "season,date,home,away,outcome\nx,10,A,B,H\nx,9,B,C,H\nx,9,C,A,H\n";
        let (s, _) = read(text).unwrap();
        let g = s[0].results.games();
        assert_eq!((g[0].home, g[1].home, g[2].home), (1, 2, 0));
    }

    #[test]
    fn self_game_is_a_parse_error() {
        match read("season,date,home,away,outcome\n1,1,A,B,H\n1,2,A,A,H\n") {
            Err(Error::Parse { line, .. }) => assert_eq!(line, 3),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn bad_outcome_reports_line() {
        match read("season,date,home,away,outcome\n1,1,A,B,X\n") {
            Err(Error::Parse { line, message, .. }) => {
                assert_eq!(line, 2);
                assert!(message.contains("X"));
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn malformed_row() {
        assert!(matches!(read("season,date,home,away,outcome\n1,1,A\n"), Err(Error::Parse { line: 2, .. })));
        assert!(matches!(read("season,date,home\n1,1,A\n"), Err(Error::Parse { .. })));
    }

    #[test]
    fn all_draw_season_is_skipped() {
        let (s, report) = read("season,date,home,away,outcome\na,1,A,B,D\nb,1,A,B,H\n").unwrap();
        assert_eq!(s.len(), 1);
        assert_eq!(report.skipped_seasons, ["a"]);
    }

    #[test]
    fn quoted_fields() {
        let (s, _) = read("season,date,home,away,outcome\n\"2019/20\",1,\"Team, A\",B,H\n").unwrap();
        assert_eq!(s[0].team_names, ["B", "Team, A"]);
    }

    #[test]
    fn json_lines() {
        let text = "{\"season\":2020,\"date\":\"2020-01-01\",\"home\":\"A\",\"away\":\"B\",\"outcome\":\"A\"}\n\n\
                    {\"season\":2020,\"date\":\"2020-01-02\",\"home\":\"B\",\"away\":\"A\",\"outcome\":\"D\"}\n";
        let (s, report) = read_seasons(text.as_bytes(), InputFormat::JsonLines, Path::new("t.jsonl")).unwrap();
        assert_eq!(s[0].season, "2020");
        assert_eq!(s[0].results.len(), 1);
        assert_eq!(report.draws, 1);
        assert!(matches!(
            read_seasons("{\"season\":1}\n".as_bytes(), InputFormat::JsonLines, Path::new("t.jsonl")),
            Err(Error::Parse { line: 1, .. })
        ));
    }

    #[test]
    fn reading_twice_is_identical() {
        let text = "season,date,home,away,outcome\n1,1,A,B,H\n1,2,B,C,A\n2,1,C,D,H\n";
        assert_eq!(read(text).unwrap(), read(text).unwrap());
    }

    fn season_of(n_games: usize) -> SeasonData {
        let games = (0..n_games)
            .map(|k| GameRecord { home: k % 2, away: 1 - k % 2, home_won: true, order: k as u64 })
            .collect();
        SeasonData { season: "s".into(), team_names: vec!["a".into(), "b".into()], results: ResultSet::new(2, games).unwrap() }
    }

    #[test]
    fn truncation() {
        let s = season_of(101);
        assert_eq!(truncate_season(&s, 1.0).unwrap(), s.results);
        assert_eq!(truncate_season(&s, 0.5).unwrap().len(), 50);
        assert!(truncate_season(&s, 0.005).unwrap().is_empty());
        assert!(truncate_season(&s, 0.0).is_err());
    }

    #[test]
    fn results_csv_round_trip() {
        let (_, r) = crate::synth::simulate_season(&crate::model::LeagueConfig { n_teams: 7, seed: 1, ..Default::default() }).unwrap();
        let mut buf = Vec::new();
        write_results_csv(&r, &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert!(text.starts_with("order,home,away,home_won\n"));
        let back = read_results_csv(text.as_bytes(), Path::new("r.csv"), Some(7)).unwrap();
        assert_eq!(back, r);
    }

    #[test]
    fn results_csv_errors() {
        let p = Path::new("r.csv");
        assert!(matches!(read_results_csv("a,b\n".as_bytes(), p, None), Err(Error::Parse { line: 1, .. })));
        assert!(matches!(
            read_results_csv("order,home,away,home_won\n0,1,1,1\n".as_bytes(), p, None),
            Err(Error::Parse { line: 2, .. })
        ));
        assert!(matches!(
            read_results_csv("order,home,away,home_won\n0,1,2,yes\n".as_bytes(), p, None),
            Err(Error::Parse { line: 2, .. })
        ));
        assert!(read_results_csv("order,home,away,home_won\n0,1,5,1\n".as_bytes(), p, Some(3)).is_err());
    }

    #[test]
    fn sidecar_path() {
        assert_eq!(fitness_sidecar_path(Path::new("out/r.csv")), Path::new("out/r.fitness.csv"));
    }
}
