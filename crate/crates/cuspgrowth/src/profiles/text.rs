//! TOML form of a profile.

use serde::{Deserialize, Serialize};

use super::{Bridge, CurvatureBounds, Envelope, PieceForm, Profile, ProfilePiece};
use crate::error::{Error, Result};

#[derive(Serialize, Deserialize)]
struct ProfileDoc {
    bounds: CurvatureBounds,
    pieces: Vec<PieceDoc>,
}

#[derive(Serialize, Deserialize)]
struct PieceDoc {
    t0: f64,
    t1: f64,
    form: String,
    params: Params,
}

#[derive(Default, Serialize, Deserialize)]
struct Params {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    rate: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    power: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    start: Option<Envelope>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    end: Option<Envelope>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    q: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    r: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    log_q: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    log_r: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    ramp: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    cruise: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    knots: Option<Vec<[f64; 4]>>,
}

pub(super) fn to_text(p: &Profile) -> String {
    let pieces = p
        .pieces()
        .iter()
        .map(|piece| {
            let params = match &piece.form {
                PieceForm::PureExp { rate } => Params {
                    rate: Some(*rate),
                    ..Params::default()
                },
                PieceForm::PolyExp { power, rate } => Params {
                    rate: Some(*rate),
                    power: Some(*power),
                    ..Params::default()
                },
                PieceForm::Bridge(b) => Params {
                    start: Some(b.start),
                    end: Some(b.end),
                    q: Some(b.q),
                    r: Some(b.r),
                    log_q: Some(b.log_q),
                    log_r: Some(b.log_r),
                    ramp: Some(b.ramp),
                    cruise: Some(b.cruise),
                    knots: Some(b.knots.clone()),
                    ..Params::default()
                },
            };
            PieceDoc {
                t0: piece.t0,
                t1: piece.t1,
                form: piece.kind().to_string(),
                params,
            }
        })
        .collect();
    let doc = ProfileDoc {
        bounds: p.bounds,
        pieces,
    };
    toml::to_string(&doc).expect("profile documents always serialize")
}

fn need<T>(v: Option<T>, name: &str) -> Result<T> {
    v.ok_or_else(|| Error::Parse(format!("missing parameter `{name}`")))
}

pub(super) fn from_text(s: &str) -> Result<Profile> {
    let doc: ProfileDoc = toml::from_str(s).map_err(|e| Error::Parse(e.to_string()))?;
    let mut pieces = Vec::with_capacity(doc.pieces.len());
    for d in doc.pieces {
        let p = d.params;
        let piece = match d.form.as_str() {
            "pure_exp" => ProfilePiece::pure_exp(d.t0, d.t1, need(p.rate, "rate")?)?,
            "poly_exp" => ProfilePiece::poly_exp(d.t0, d.t1, need(p.power, "power")?, need(p.rate, "rate")?)?,
            "bridge" => {
                let knots = need(p.knots, "knots")?;
                if knots.len() < 2 || knots.windows(2).any(|w| !(w[1][0] > w[0][0])) {
                    return Err(Error::Parse("bridge knots must be strictly increasing".into()));
                }
                ProfilePiece {
                    t0: d.t0,
                    t1: d.t1,
                    form: PieceForm::Bridge(Box::new(Bridge {
                        start: need(p.start, "start")?,
                        end: need(p.end, "end")?,
                        q: need(p.q, "q")?,
                        r: need(p.r, "r")?,
                        log_q: need(p.log_q, "log_q")?,
                        log_r: need(p.log_r, "log_r")?,
                        ramp: need(p.ramp, "ramp")?,
                        cruise: need(p.cruise, "cruise")?,
                        knots,
                    })),
                }
            }
            other => return Err(Error::Parse(format!("unknown piece form `{other}`"))),
        };
        pieces.push(piece);
    }
    Profile::new(doc.bounds, pieces)
}
