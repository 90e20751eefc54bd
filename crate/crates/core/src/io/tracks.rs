//! Trajectory and waypoint CSV files.
//!
//! A trajectory file has one row per time step with the columns
//! `track_id, frame, timestamp_ms` followed by either Cartesian `x, y` or a
//! path coordinate `s`, and optionally the path-frame velocity `v` and
//! acceleration `a`. Rows are grouped per track and ordered by frame.

use std::collections::HashMap;
use std::fs::File;
use std::io::{Read, Write};
use std::path::Path;

use crate::error::{Error, Result};
use crate::features::{kinematic_profile, ReferencePath, SdTrajectory, DEFAULT_CORRIDOR};
use crate::types::Trajectory;

/// Largest allowed deviation of an inter-frame timestamp delta from the
/// track's first delta.
const DT_TOLERANCE_MS: i64 = 1;

#[derive(Debug, Clone, PartialEq)]
pub enum TrackPositions {
    Xy(Vec<[f64; 2]>),
    S(Vec<f64>),
}

#[derive(Debug, Clone, PartialEq)]
pub struct Track {
    pub id: String,
    pub frames: Vec<i64>,
    pub timestamps_ms: Vec<i64>,
    pub dt: f64,
    pub positions: TrackPositions,
    pub velocity: Option<Vec<f64>>,
    pub acceleration: Option<Vec<f64>>,
}

impl Track {
    pub fn len(&self) -> usize {
        self.frames.len()
    }

    pub fn is_empty(&self) -> bool {
        self.frames.is_empty()
    }

    /// Path-frame longitudinal trajectory with states `[s, v]` and actions
    /// `[a]`. Cartesian tracks are projected onto `path`. Missing `v` or
    /// `a` columns are filled by finite differences of the positions.
    pub fn to_trajectory(&self, path: Option<&ReferencePath>) -> Result<Trajectory> {
        let s = match &self.positions {
            TrackPositions::S(s) => s.clone(),
            TrackPositions::Xy(xy) => {
                let path = path.ok_or_else(|| {
                    Error::invalid(format!("track {} has x/y positions and needs a reference path", self.id))
                })?;
                path.project(xy, self.dt, DEFAULT_CORRIDOR)?.s().to_vec()
            }
        };
        let (v, a) = match (&self.velocity, &self.acceleration) {
            (Some(v), Some(a)) => (v.clone(), a.clone()),
            (v, a) => {
                let profile = kinematic_profile(&SdTrajectory::on_path(s.clone(), self.dt)?)?;
                (v.clone().unwrap_or(profile.v), a.clone().unwrap_or(profile.a))
            }
        };
        let states = s.iter().zip(&v).map(|(s, v)| vec![*s, *v]).collect();
        let actions = a.iter().map(|a| vec![*a]).collect();
        Trajectory::from_rows(states, actions, self.dt)
    }
}

fn io_error(path: &Path, e: std::io::Error) -> Error {
    Error::Io(std::io::Error::new(e.kind(), format!("{}: {e}", path.display())))
}

pub(crate) fn open(path: &Path) -> Result<File> {
    File::open(path).map_err(|e| io_error(path, e))
}

pub(crate) fn create(path: &Path) -> Result<File> {
    File::create(path).map_err(|e| io_error(path, e))
}

struct Columns {
    track: usize,
    frame: usize,
    timestamp: usize,
    x: Option<usize>,
    y: Option<usize>,
    s: Option<usize>,
    v: Option<usize>,
    a: Option<usize>,
}

impl Columns {
    fn from_headers(headers: &csv::StringRecord) -> Result<Self> {
        let find = |name: &str| headers.iter().position(|h| h.trim() == name);
        let need = |name: &str| {
            find(name).ok_or_else(|| Error::Schema {
                row: 1,
                message: format!("missing column {name}"),
            })
        };
        let cols = Columns {
            track: need("track_id")?,
            frame: need("frame")?,
            timestamp: need("timestamp_ms")?,
            x: find("x"),
            y: find("y"),
            s: find("s"),
            v: find("v"),
            a: find("a"),
        };
        let xy = cols.x.is_some() && cols.y.is_some();
        if xy == cols.s.is_some() {
            return Err(Error::Schema {
                row: 1,
                message: "need either both x and y columns or an s column".into(),
            });
        }
        Ok(cols)
    }
}

struct Row {
    frame: i64,
    timestamp: i64,
    position: [f64; 2],
    v: Option<f64>,
    a: Option<f64>,
}

fn field<'a>(rec: &'a csv::StringRecord, i: usize, row: usize, name: &str) -> Result<&'a str> {
    rec.get(i).map(str::trim).ok_or_else(|| Error::Schema {
        row,
        message: format!("missing value for {name}"),
    })
}

fn parse_int(rec: &csv::StringRecord, i: usize, row: usize, name: &str) -> Result<i64> {
    let raw = field(rec, i, row, name)?;
    raw.parse().map_err(|_| Error::Schema {
        row,
        message: format!("{name} {raw:?} is not an integer"),
    })
}

fn parse_real(rec: &csv::StringRecord, i: usize, row: usize, name: &str) -> Result<f64> {
    let raw = field(rec, i, row, name)?;
    match raw.parse::<f64>() {
        Ok(v) if v.is_finite() => Ok(v),
        _ => Err(Error::Schema {
            row,
            message: format!("{name} {raw:?} is not a finite number"),
        }),
    }
}

/// Parses a trajectory CSV. Row numbers in errors count the header as row 1.
pub fn read_tracks<R: Read>(reader: R) -> Result<Vec<Track>> {
    let mut rdr = csv::ReaderBuilder::new().flexible(true).from_reader(reader);
    let cols = Columns::from_headers(rdr.headers()?)?;
    let mut order: Vec<String> = Vec::new();
    let mut rows: HashMap<String, Vec<(usize, Row)>> = HashMap::new();
    let mut seen: HashMap<(String, i64), usize> = HashMap::new();
    for (i, rec) in rdr.records().enumerate() {
        let rec = rec?;
        let row = i + 2;
        let id = field(&rec, cols.track, row, "track_id")?.to_string();
        if id.is_empty() {
            return Err(Error::Schema {
                row,
                message: "empty track_id".into(),
            });
        }
        let frame = parse_int(&rec, cols.frame, row, "frame")?;
        if let Some(first) = seen.insert((id.clone(), frame), row) {
            return Err(Error::Schema {
                row,
                message: format!("duplicate frame {frame} of track {id} (first at row {first})"),
            });
        }
        let position = match (cols.x, cols.y, cols.s) {
            (Some(x), Some(y), None) => [parse_real(&rec, x, row, "x")?, parse_real(&rec, y, row, "y")?],
            (_, _, Some(s)) => [parse_real(&rec, s, row, "s")?, 0.0],
            _ => unreachable!("column layout checked on the header"),
        };
        let parsed = Row {
            frame,
            timestamp: parse_int(&rec, cols.timestamp, row, "timestamp_ms")?,
            position,
            v: cols.v.map(|c| parse_real(&rec, c, row, "v")).transpose()?,
            a: cols.a.map(|c| parse_real(&rec, c, row, "a")).transpose()?,
        };
        if !rows.contains_key(&id) {
            order.push(id.clone());
        }
        rows.entry(id).or_default().push((row, parsed));
    }
    order
        .into_iter()
        .map(|id| {
            let mut r = rows.remove(&id).unwrap_or_default();
            r.sort_by_key(|(_, row)| row.frame);
            assemble(id, r, cols.s.is_some())
        })
        .collect()
}

fn assemble(id: String, rows: Vec<(usize, Row)>, path_frame: bool) -> Result<Track> {
    if rows.len() < 2 {
        return Err(Error::invalid(format!("track {id} has fewer than two rows")));
    }
    let base = rows[1].1.timestamp - rows[0].1.timestamp;
    if base <= 0 {
        return Err(Error::invalid(format!("track {id}: timestamps must increase with frame")));
    }
    for w in rows.windows(2) {
        let delta = w[1].1.timestamp - w[0].1.timestamp;
        if (delta - base).abs() > DT_TOLERANCE_MS {
            return Err(Error::invalid(format!(
                "track {id}: non-constant sampling interval ({delta} ms at row {} vs {base} ms)",
                w[1].0
            )));
        }
    }
    let span = rows[rows.len() - 1].1.timestamp - rows[0].1.timestamp;
    let dt = span as f64 / (rows.len() - 1) as f64 / 1000.0;
    let positions = if path_frame {
        TrackPositions::S(rows.iter().map(|(_, r)| r.position[0]).collect())
    } else {
        TrackPositions::Xy(rows.iter().map(|(_, r)| r.position).collect())
    };
    let optional = |get: fn(&Row) -> Option<f64>| rows.iter().map(|(_, r)| get(r)).collect::<Option<Vec<f64>>>();
    Ok(Track {
        id,
        frames: rows.iter().map(|(_, r)| r.frame).collect(),
        timestamps_ms: rows.iter().map(|(_, r)| r.timestamp).collect(),
        dt,
        velocity: optional(|r| r.v),
        acceleration: optional(|r| r.a),
        positions,
    })
}

pub fn load_tracks(path: &Path) -> Result<Vec<Track>> {
    read_tracks(open(path)?)
}

/// Writes longitudinal trajectories (`[s, v]` states, `[a]` actions) as
/// `track_id, frame, timestamp_ms, s, v, a` rows, frames counting from 0.
pub fn write_trajectories<W: Write>(writer: W, ids: &[String], trajectories: &[Trajectory]) -> Result<()> {
    write_trajectories_from(writer, ids, trajectories, &vec![(0, 0); ids.len()])
}

/// [`write_trajectories`] with each track's first `(frame, timestamp_ms)`.
pub fn write_trajectories_from<W: Write>(
    writer: W,
    ids: &[String],
    trajectories: &[Trajectory],
    starts: &[(i64, i64)],
) -> Result<()> {
    if ids.len() != trajectories.len() {
        return Err(Error::dims("track ids", trajectories.len(), ids.len()));
    }
    if starts.len() != trajectories.len() {
        return Err(Error::dims("track starts", trajectories.len(), starts.len()));
    }
    let mut w = csv::Writer::from_writer(writer);
    w.write_record(["track_id", "frame", "timestamp_ms", "s", "v", "a"])?;
    for ((id, t), (frame0, ts0)) in ids.iter().zip(trajectories).zip(starts) {
        if t.state_dim() != 2 || t.action_dim() != 1 {
            return Err(Error::invalid(format!(
                "track {id}: only [position, velocity] states with one action can be written"
            )));
        }
        for (k, (x, u)) in t.states().iter().zip(t.actions()).enumerate() {
            let ts = ts0 + (k as f64 * t.dt() * 1000.0).round() as i64;
            w.write_record([
                id.clone(),
                (frame0 + k as i64).to_string(),
                ts.to_string(),
                x.as_slice()[0].to_string(),
                x.as_slice()[1].to_string(),
                u.as_slice()[0].to_string(),
            ])?;
        }
    }
    w.flush()?;
    Ok(())
}

pub fn save_trajectories(path: &Path, ids: &[String], trajectories: &[Trajectory]) -> Result<()> {
    write_trajectories(create(path)?, ids, trajectories)
}

/// Parses an `x, y` waypoint CSV into a reference path.
pub fn read_waypoints<R: Read>(reader: R) -> Result<ReferencePath> {
    let mut rdr = csv::Reader::from_reader(reader);
    let headers = rdr.headers()?.clone();
    let find = |name: &str| {
        headers.iter().position(|h| h.trim() == name).ok_or_else(|| Error::Schema {
            row: 1,
            message: format!("missing column {name}"),
        })
    };
    let (x, y) = (find("x")?, find("y")?);
    let mut points = Vec::new();
    for (i, rec) in rdr.records().enumerate() {
        let rec = rec?;
        points.push([parse_real(&rec, x, i + 2, "x")?, parse_real(&rec, y, i + 2, "y")?]);
    }
    ReferencePath::new(points)
}

pub fn load_waypoints(path: &Path) -> Result<ReferencePath> {
    read_waypoints(open(path)?)
}

pub fn write_waypoints<W: Write>(writer: W, path: &ReferencePath) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    w.write_record(["x", "y"])?;
    for p in path.waypoints() {
        w.write_record([p[0].to_string(), p[1].to_string()])?;
    }
    w.flush()?;
    Ok(())
}

pub fn save_waypoints(file: &Path, path: &ReferencePath) -> Result<()> {
    write_waypoints(create(file)?, path)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn parse(text: &str) -> Result<Vec<Track>> {
        read_tracks(text.as_bytes())
    }

    #[test]
    fn three_tracks_at_five_hertz() {
        let mut text = String::from("track_id,frame,timestamp_ms,x,y\n");
        for id in ["a", "b", "c"] {
            for k in 0..6 {
                text += &format!("{id},{k},{},{},{}\n", 1000 + 200 * k, k as f64 * 2.0, 0.5);
            }
        }
        let tracks = parse(&text).unwrap();
        assert_eq!(tracks.len(), 3);
        assert_eq!(tracks.iter().map(|t| t.id.as_str()).collect::<Vec<_>>(), ["a", "b", "c"]);
        for t in &tracks {
            assert_eq!(t.dt, 0.2);
            assert_eq!(t.len(), 6);
            assert!(matches!(t.positions, TrackPositions::Xy(_)));
        }
    }

    #[test]
    fn rows_are_sorted_by_frame() {
        let t = parse("track_id,frame,timestamp_ms,s\nq,2,200,4.0\nq,0,0,0.0\nq,1,100,1.5\n").unwrap();
        assert_eq!(t[0].frames, [0, 1, 2]);
        assert_eq!(t[0].positions, TrackPositions::S(vec![0.0, 1.5, 4.0]));
    }

    #[test]
    fn duplicate_frame_reports_its_row() {
        let e = parse("track_id,frame,timestamp_ms,s\na,0,0,0\na,1,100,1\na,1,100,1\n").unwrap_err();
        assert!(matches!(e, Error::Schema { row: 4, .. }), "{e}");
    }

    #[test]
    fn uneven_sampling_names_the_track() {
        let e = parse("track_id,frame,timestamp_ms,s\nok,0,0,0\nok,1,100,1\nbad,0,0,0\nbad,1,100,1\nbad,2,250,2\n")
            .unwrap_err();
        assert!(e.to_string().contains("track bad"), "{e}");
    }

    #[test]
    fn schema_errors_carry_rows() {
        let missing = parse("track_id,frame,x,y\n").unwrap_err();
        assert!(matches!(missing, Error::Schema { row: 1, .. }));
        let bad = parse("track_id,frame,timestamp_ms,s\na,0,0,0\na,1,100,nan\n").unwrap_err();
        assert!(matches!(bad, Error::Schema { row: 3, .. }), "{bad}");
        let both = parse("track_id,frame,timestamp_ms,x,y,s\n").unwrap_err();
        assert!(matches!(both, Error::Schema { row: 1, .. }));
    }

    #[test]
    fn cartesian_tracks_need_a_path() {
        let t = parse("track_id,frame,timestamp_ms,x,y\na,0,0,0,0\na,1,100,1,0\na,2,200,2,0\na,3,300,3,0\n").unwrap();
        assert!(t[0].to_trajectory(None).is_err());
        let path = ReferencePath::new(vec![[-1.0, 0.0], [4.0, 0.0], [10.0, 0.0]]).unwrap();
        let traj = t[0].to_trajectory(Some(&path)).unwrap();
        assert!((traj.states()[2].as_slice()[0] - 3.0).abs() < 1e-12);
        assert!((traj.states()[2].as_slice()[1] - 10.0).abs() < 1e-9);
    }

    #[test]
    fn waypoints_round_trip() {
        let path = ReferencePath::circle_arc(30.0, 2.0, 1.2).unwrap();
        let mut buf = Vec::new();
        write_waypoints(&mut buf, &path).unwrap();
        assert_eq!(read_waypoints(buf.as_slice()).unwrap(), path);
    }
}
