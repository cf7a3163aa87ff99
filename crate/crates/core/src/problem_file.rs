//! Declarative problem files (TOML).
//!
//! ```toml
//! kind = "box"                  # box (default) | ring | plane_bound
//!
//! [domain]
//! lo = [0.0]
//! hi = [2.0]
//!
//! [[payoff.pieces]]
//! lo = [0.0]
//! hi = [1.0]
//! hi_closed = [false]           # faces default to closed below, open above
//! constant = 0.0                # except on the domain's upper faces
//!
//! [[payoff.pieces]]
//! lo = [1.0]
//! hi = [2.0]
//! constant = 0.0
//! coeffs = [1.0]
//!
//! [[payoff.spikes]]             # optional
//! point = [1.0]
//! value = 1.0
//!
//! [cost]
//! kind = "scaled_norm"          # scaled_norm | separable | convex_radial
//! alpha = 2.0
//! ```
//!
//! A ring problem (`kind = "ring"`) uses the domain `[0, L]` as its chart, a
//! `scaled_norm` cost whose `alpha` scales the ring distance and an optional
//! `[ring] metric = "geodesic" | "chart"`. A plane-bound pair
//! (`kind = "plane_bound"`) reads the window from `domain`, the bounded
//! payoff from `payoff`, a `convex_radial` cost, and
//! `[plane_bound] plane = { constant, coeffs }` plus
//! `anchors = { lo, hi }`.

use serde::{Deserialize, Serialize};
use toml::Spanned;

use crate::cost::CostSpec;
use crate::domain::BoxDomain;
use crate::error::{Error, Result};
use crate::manifold::{RingDomain, RingMetric, RingProblem};
use crate::payoff::{AffineExpr, Piece, PiecewisePayoff, Region, Spike};
use crate::plane_bound::PlaneBoundProblem;
use crate::problem::Problem;
use crate::scenarios::ProblemKind;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
enum Kind {
    #[default]
    Box,
    Ring,
    PlaneBound,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct FileDoc {
    #[serde(default)]
    kind: Kind,
    domain: Spanned<BoxDef>,
    payoff: PayoffDef,
    cost: Spanned<CostSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    ring: Option<RingDef>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    plane_bound: Option<PlaneDef>,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct BoxDef {
    lo: Vec<f64>,
    hi: Vec<f64>,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct PayoffDef {
    pieces: Vec<Spanned<PieceDef>>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    spikes: Vec<Spanned<Spike>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    bound: Option<f64>,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct PieceDef {
    lo: Vec<f64>,
    hi: Vec<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    lo_closed: Option<Vec<bool>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    hi_closed: Option<Vec<bool>>,
    constant: f64,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    coeffs: Vec<f64>,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RingDef {
    #[serde(default)]
    metric: RingMetric,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct PlaneDef {
    plane: AffineExpr,
    anchors: BoxDef,
}

fn line_of(src: &str, offset: usize) -> usize {
    src[..offset.min(src.len())].matches('\n').count() + 1
}

fn key_line(src: &str, key: &str) -> Option<usize> {
    src.lines().position(|l| {
        let l = l.trim_start().trim_start_matches('[');
        l.strip_prefix(key)
            .is_some_and(|rest| rest.trim_start().starts_with(['.', ']', '=']))
    })
    .map(|i| i + 1)
}

/// Field-path prefixes with the line where each starts.
struct Locator {
    entries: Vec<(String, usize)>,
}

impl Locator {
    fn cite(&self, e: Error) -> Error {
        let msg = e.to_string();
        let hit = self
            .entries
            .iter()
            .filter(|(field, _)| msg.contains(field.as_str()))
            .max_by_key(|(field, _)| field.len());
        match hit {
            Some((_, line)) => Error::Parse(format!("line {line}: {msg}")),
            None => Error::Parse(msg),
        }
    }

    fn at(&self, field: &str, reason: impl std::fmt::Display) -> Error {
        let line = self.entries.iter().find(|(f, _)| f == field).map(|e| e.1);
        match line {
            Some(l) => Error::Parse(format!("line {l}: {field}: {reason}")),
            None => Error::Parse(format!("{field}: {reason}")),
        }
    }
}

/// Parses a problem file. Errors name the offending field and its line.
pub fn parse_problem(src: &str) -> Result<ProblemKind> {
    let doc: FileDoc = toml::from_str(src).map_err(|e| {
        let span = e.span().map(|s| format!("line {}: ", line_of(src, s.start)));
        Error::Parse(format!("{}{}", span.unwrap_or_default(), e.message()))
    })?;

    let mut entries = vec![
        ("domain".to_string(), line_of(src, doc.domain.span().start)),
        ("cost".to_string(), line_of(src, doc.cost.span().start)),
    ];
    for (k, p) in doc.payoff.pieces.iter().enumerate() {
        entries.push((format!("payoff.pieces[{k}]"), line_of(src, p.span().start)));
    }
    for (k, s) in doc.payoff.spikes.iter().enumerate() {
        entries.push((format!("payoff.spikes[{k}]"), line_of(src, s.span().start)));
    }
    if let Some(first) = doc.payoff.pieces.first() {
        entries.push(("payoff.pieces".into(), line_of(src, first.span().start)));
    }
    if let Some(first) = doc.payoff.spikes.first() {
        entries.push(("payoff.spikes".into(), line_of(src, first.span().start)));
    }
    // implicit tables carry no span; cite their first header or key line
    for key in ["ring", "plane_bound"] {
        if let Some(line) = key_line(src, key) {
            entries.push((key.into(), line));
        }
    }
    let loc = Locator { entries };

    let domain = BoxDomain::new(doc.domain.get_ref().lo.clone(), doc.domain.get_ref().hi.clone())
        .map_err(|e| loc.at("domain", e))?;
    let n = domain.dim();
    let pieces = doc
        .payoff
        .pieces
        .iter()
        .enumerate()
        .map(|(k, p)| piece_from(p.get_ref(), &domain).map_err(|e| loc.at(&format!("payoff.pieces[{k}]"), e)))
        .collect::<Result<Vec<_>>>()?;
    let spikes = doc.payoff.spikes.iter().map(|s| s.get_ref().clone()).collect();
    let payoff = PiecewisePayoff::new(&domain, pieces, spikes, doc.payoff.bound).map_err(|e| loc.cite(e))?;
    let cost = doc.cost.get_ref().clone();
    cost.validate(n).map_err(|e| loc.at("cost", e))?;

    match doc.kind {
        Kind::Box => {
            if doc.ring.is_some() || doc.plane_bound.is_some() {
                return Err(Error::Parse(
                    "`ring` and `plane_bound` tables need a matching `kind`".into(),
                ));
            }
            Ok(ProblemKind::Box(Problem::new(payoff, cost, domain).map_err(|e| loc.cite(e))?))
        }
        Kind::Ring => {
            if n != 1 || domain.lo()[0] != 0.0 {
                return Err(loc.at("domain", "a ring chart is an interval [0, L]"));
            }
            let CostSpec::ScaledNorm { alpha } = cost else {
                return Err(loc.at("cost", "ring problems take a scaled_norm cost"));
            };
            let metric = doc.ring.as_ref().map(|r| r.metric).unwrap_or_default();
            let ring = RingDomain::new(domain.hi()[0]).map_err(|e| loc.at("domain", e))?;
            Ok(ProblemKind::Ring(
                RingProblem::new(payoff, ring, metric, alpha).map_err(|e| loc.at("cost", e))?,
            ))
        }
        Kind::PlaneBound => {
            let Some(pd) = doc.plane_bound.as_ref() else {
                return Err(Error::Parse("plane_bound: table is required for kind = \"plane_bound\"".into()));
            };
            let anchors = BoxDomain::new(pd.anchors.lo.clone(), pd.anchors.hi.clone())
                .map_err(|e| loc.at("plane_bound", format!("anchors: {e}")))?;
            Ok(ProblemKind::PlaneBound(
                PlaneBoundProblem::new(pd.plane.clone(), payoff, cost, anchors, domain)
                    .map_err(|e| loc.at("plane_bound", e))?,
            ))
        }
    }
}

fn piece_from(p: &PieceDef, domain: &BoxDomain) -> Result<Piece> {
    let n = domain.dim();
    let lo_closed = p.lo_closed.clone().unwrap_or_else(|| vec![true; n]);
    let hi_closed = p.hi_closed.clone().unwrap_or_else(|| {
        p.hi
            .iter()
            .zip(domain.hi())
            .map(|(a, b)| a == b)
            .collect()
    });
    if lo_closed.len() != n || hi_closed.len() != n {
        return Err(Error::input(format!("face flags need {n} entries")));
    }
    Ok(Piece::new(
        Region {
            lo: p.lo.clone(),
            hi: p.hi.clone(),
            lo_closed,
            hi_closed,
        },
        AffineExpr::new(p.constant, p.coeffs.clone()),
    ))
}

fn spanned<T>(v: T) -> Spanned<T> {
    Spanned::new(0..0, v)
}

fn payoff_def(payoff: &PiecewisePayoff) -> PayoffDef {
    PayoffDef {
        pieces: payoff
            .pieces()
            .iter()
            .map(|p| {
                spanned(PieceDef {
                    lo: p.region.lo.clone(),
                    hi: p.region.hi.clone(),
                    lo_closed: Some(p.region.lo_closed.clone()),
                    hi_closed: Some(p.region.hi_closed.clone()),
                    constant: p.expr.constant,
                    coeffs: p.expr.coeffs.clone(),
                })
            })
            .collect(),
        spikes: payoff.spikes().iter().cloned().map(spanned).collect(),
        bound: None,
    }
}

fn box_def(d: &BoxDomain) -> BoxDef {
    BoxDef {
        lo: d.lo().to_vec(),
        hi: d.hi().to_vec(),
    }
}

/// Writes a problem in the file format; [`parse_problem`] reads it back.
pub fn export_problem(problem: &ProblemKind) -> Result<String> {
    let doc = match problem {
        ProblemKind::Box(p) => FileDoc {
            kind: Kind::Box,
            domain: spanned(box_def(p.domain())),
            payoff: payoff_def(p.payoff()),
            cost: spanned(p.cost().clone()),
            ring: None,
            plane_bound: None,
        },
        ProblemKind::Ring(r) => FileDoc {
            kind: Kind::Ring,
            domain: spanned(box_def(&r.domain().as_box())),
            payoff: payoff_def(r.payoff()),
            cost: spanned(CostSpec::scaled_norm(r.scale())),
            ring: Some(RingDef { metric: r.metric() }),
            plane_bound: None,
        },
        ProblemKind::PlaneBound(pb) => FileDoc {
            kind: Kind::PlaneBound,
            domain: spanned(box_def(pb.window())),
            payoff: payoff_def(pb.bound_problem().payoff()),
            cost: spanned(pb.cost().clone()),
            ring: None,
            plane_bound: Some(PlaneDef {
                plane: pb.plane().clone(),
                anchors: box_def(pb.anchors()),
            }),
        },
    };
    toml::to_string(&doc).map_err(|e| Error::Io(e.to_string()))
}
