//! Exact event-driven flow through a field of overlapping barriers.
//!
//! The potential is k·U where k counts the disks containing the particle, so
//! motion is straight between boundary crossings and each crossing is one
//! local Snell step with Δφ = ±U.

use serde::{Deserialize, Serialize};

use super::field::{Grid, ObstacleSource};
use crate::geometry::Vec2;
use crate::scattering::{refract_velocity, Refraction, ScatteringModel};
use crate::{Error, Result};

pub const DEFAULT_EVENT_CAP: usize = 1_000_000;
pub const TANGENCY_TOL: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ParticleState {
    pub position: Vec2,
    pub velocity: Vec2,
    pub time: f64,
    /// Number of disks containing the position.
    pub coverage: u32,
}

impl ParticleState {
    pub fn new(position: Vec2, velocity: Vec2) -> Self {
        ParticleState {
            position,
            velocity,
            time: 0.0,
            coverage: 0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum EventKind {
    Entry,
    Exit,
    Reflect,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrajectoryEvent {
    pub time: f64,
    pub disk: u32,
    pub kind: EventKind,
    /// (v̂ × (x − c))/ε with the velocity before the event.
    pub impact: f64,
    pub position: Vec2,
    /// Velocity after the event.
    pub velocity: Vec2,
    pub tangency: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct Pathologies {
    pub overlap: bool,
    pub recollision: bool,
    pub interference: bool,
    pub chi1_violation: bool,
}

impl Pathologies {
    pub fn any(&self) -> bool {
        self.overlap || self.recollision || self.interference || self.chi1_violation
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrajectoryLog {
    pub start: ParticleState,
    pub end: ParticleState,
    pub radius: f64,
    pub events: Vec<TrajectoryEvent>,
    pub pathologies: Pathologies,
    /// Disks that come within ε of the path, sorted by id.
    pub internal_ids: Vec<u32>,
    pub internal_centers: Vec<Vec2>,
}

impl TrajectoryLog {
    /// Vertices of the piecewise-linear path.
    pub fn polyline(&self) -> Vec<Vec2> {
        let mut pts = Vec::with_capacity(self.events.len() + 2);
        pts.push(self.start.position);
        pts.extend(self.events.iter().map(|e| e.position));
        pts.push(self.end.position);
        pts
    }
}

#[derive(Debug, Clone, Copy)]
pub struct EvolveOptions {
    pub event_cap: usize,
    pub tangency_tol: f64,
}

impl Default for EvolveOptions {
    fn default() -> Self {
        EvolveOptions {
            event_cap: DEFAULT_EVENT_CAP,
            tangency_tol: TANGENCY_TOL,
        }
    }
}

/// Runs the Hamiltonian flow for `duration` from `start`.
pub fn evolve<S: ObstacleSource + ?Sized>(
    field: &S,
    model: &ScatteringModel,
    start: ParticleState,
    duration: f64,
) -> Result<(ParticleState, TrajectoryLog)> {
    evolve_with(field, model, start, duration, EvolveOptions::default())
}

#[derive(Debug, Clone, Copy)]
struct Hit {
    s: f64,
    disk: u32,
    center: Vec2,
    exit: bool,
}

struct Tracer<'a, S: ?Sized> {
    field: &'a S,
    grid: Grid,
    radius: f64,
    stamps: Vec<u32>,
    generation: u32,
}

impl<'a, S: ObstacleSource + ?Sized> Tracer<'a, S> {
    fn new(field: &'a S) -> Self {
        Tracer {
            field,
            grid: field.grid(),
            radius: field.radius(),
            stamps: Vec::new(),
            generation: 0,
        }
    }

    fn containing(&self, p: Vec2) -> Vec<u32> {
        let (ix, iy) = self.grid.cell_of(p);
        let r2 = self.radius * self.radius;
        let mut out = Vec::new();
        for dy in -1..=1 {
            for dx in -1..=1 {
                self.field.visit_cell(ix + dx, iy + dy, &mut |id, c| {
                    if (p - c).norm_sq() < r2 {
                        out.push(id);
                    }
                });
            }
        }
        out.sort_unstable();
        out
    }

    /// Earliest boundary crossing within `max_s`.
    fn next_hit(&mut self, p: Vec2, v: Vec2, max_s: f64, coverage: &[u32]) -> Option<Hit> {
        let eps = self.radius;
        let mut best: Option<Hit> = None;
        for &d in coverage {
            let c = self.field.center(d);
            let s = exit_time(c, eps, p, v);
            if s <= max_s && best.is_none_or(|b| s < b.s) {
                best = Some(Hit {
                    s,
                    disk: d,
                    center: c,
                    exit: true,
                });
            }
        }

        self.generation = self.generation.wrapping_add(1);
        if self.generation == 0 {
            self.stamps.iter_mut().for_each(|s| *s = 0);
            self.generation = 1;
        }
        let g = self.grid;
        let h = g.cell;
        let (mut ix, mut iy) = g.cell_of(p);
        let step_x: i64 = if v.x > 0.0 { 1 } else { -1 };
        let step_y: i64 = if v.y > 0.0 { 1 } else { -1 };
        let boundary = |i: i64, o: f64, step: i64| o + (i + i64::from(step > 0)) as f64 * h;
        let mut t_max_x = if v.x != 0.0 {
            (boundary(ix, g.origin.x, step_x) - p.x) / v.x
        } else {
            f64::INFINITY
        };
        let mut t_max_y = if v.y != 0.0 {
            (boundary(iy, g.origin.y, step_y) - p.y) / v.y
        } else {
            f64::INFINITY
        };
        let dt_x = if v.x != 0.0 { h / v.x.abs() } else { f64::INFINITY };
        let dt_y = if v.y != 0.0 { h / v.y.abs() } else { f64::INFINITY };

        for dy in -1..=1 {
            for dx in -1..=1 {
                self.scan(ix + dx, iy + dy, p, v, max_s, coverage, &mut best);
            }
        }
        loop {
            let t_exit = t_max_x.min(t_max_y);
            if best.is_some_and(|b| b.s <= t_exit) || t_exit >= max_s {
                break;
            }
            if let Some((nx, ny)) = g.extent {
                if ix < -1 || iy < -1 || ix > nx || iy > ny {
                    break;
                }
            }
            if t_max_x < t_max_y {
                ix += step_x;
                t_max_x += dt_x;
                for dy in -1..=1 {
                    self.scan(ix + step_x, iy + dy, p, v, max_s, coverage, &mut best);
                }
            } else {
                iy += step_y;
                t_max_y += dt_y;
                for dx in -1..=1 {
                    self.scan(ix + dx, iy + step_y, p, v, max_s, coverage, &mut best);
                }
            }
        }
        best
    }

    #[allow(clippy::too_many_arguments)]
    fn scan(&mut self, ix: i64, iy: i64, p: Vec2, v: Vec2, max_s: f64, coverage: &[u32], best: &mut Option<Hit>) {
        let eps = self.radius;
        let generation = self.generation;
        let stamps = &mut self.stamps;
        self.field.visit_cell(ix, iy, &mut |id, c| {
            let i = id as usize;
            if i >= stamps.len() {
                stamps.resize((i + 1).max(2 * stamps.len()), 0);
            }
            if stamps[i] == generation {
                return;
            }
            stamps[i] = generation;
            if coverage.contains(&id) {
                return;
            }
            if let Some(s) = entry_time(c, eps, p, v) {
                if s <= max_s && best.is_none_or(|b| s < b.s) {
                    *best = Some(Hit {
                        s,
                        disk: id,
                        center: c,
                        exit: false,
                    });
                }
            }
        });
    }
}

/// First time a ray from outside enters the disk, if it does.
#[inline]
fn entry_time(c: Vec2, eps: f64, p: Vec2, v: Vec2) -> Option<f64> {
    let w = p - c;
    let b = w.dot(v);
    if b >= 0.0 {
        return None;
    }
    let a = v.norm_sq();
    let cc = w.norm_sq() - eps * eps;
    // b² − a·cc without the cancellation between two O(|w|²) terms.
    let cross = w.cross(v);
    let disc = a * eps * eps - cross * cross;
    if disc <= 0.0 {
        return None;
    }
    if cc <= 0.0 {
        return Some(0.0);
    }
    let q = -b + disc.sqrt();
    Some(cc / q)
}

/// Time at which a ray starting inside the disk leaves it.
#[inline]
fn exit_time(c: Vec2, eps: f64, p: Vec2, v: Vec2) -> f64 {
    let w = p - c;
    let a = v.norm_sq();
    let b = w.dot(v);
    let cc = w.norm_sq() - eps * eps;
    let cross = w.cross(v);
    let disc = a * eps * eps - cross * cross;
    if disc < 0.0 {
        return 0.0;
    }
    let sq = disc.sqrt();
    let s = if b < 0.0 {
        (-b + sq) / a
    } else {
        let q = -(b + sq);
        if q == 0.0 {
            0.0
        } else {
            cc / q
        }
    };
    s.max(0.0)
}

pub fn evolve_with<S: ObstacleSource + ?Sized>(
    field: &S,
    model: &ScatteringModel,
    start: ParticleState,
    duration: f64,
    opts: EvolveOptions,
) -> Result<(ParticleState, TrajectoryLog)> {
    if !(duration >= 0.0) {
        return Err(Error::domain(format!("duration must be nonnegative, got {duration}")));
    }
    if start.velocity.norm_sq() == 0.0 {
        return Err(Error::domain("particle at rest"));
    }
    let domain = field.domain();
    if let Some(d) = domain {
        if !d.contains(start.position) {
            return Err(Error::OutOfDomain { time: 0.0 });
        }
    }
    let eps = field.radius();
    let u = model.barrier();
    let mut tracer = Tracer::new(field);
    let initial = tracer.containing(start.position);
    let mut coverage = initial.clone();
    let mut pos = start.position;
    let mut vel = start.velocity;
    let mut t = 0.0;
    let mut events: Vec<TrajectoryEvent> = Vec::new();
    let start_state = ParticleState {
        coverage: coverage.len() as u32,
        time: start.time,
        ..start
    };

    loop {
        let remaining = duration - t;
        let Some(hit) = tracer.next_hit(pos, vel, remaining, &coverage) else {
            pos += vel * remaining;
            t = duration;
            break;
        };
        pos += vel * hit.s;
        t += hit.s;
        if let Some(d) = domain {
            if !d.contains(pos) {
                return Err(Error::OutOfDomain { time: start.time + t });
            }
        }
        let offset = pos - hit.center;
        let vhat = vel.normalized();
        let impact = vhat.cross(offset) / eps;
        let (kind, new_vel, tangency) = if hit.exit {
            let normal = offset.normalized();
            let out = refract_velocity(vel, normal, -u)?.velocity();
            coverage.retain(|&d| d != hit.disk);
            (EventKind::Exit, out, false)
        } else {
            let normal = (-offset).normalized();
            let vn = vel.dot(normal);
            let disc = vn * vn - 2.0 * u;
            let speed2 = vel.norm_sq();
            let near_branch = u > 0.0 && disc.abs() <= opts.tangency_tol * speed2;
            let grazing = 1.0 - impact.abs() <= opts.tangency_tol;
            if near_branch {
                // Resolve on the transmitted side with a vanishing normal component.
                let tangential = vel - normal * vn;
                let vn_out = disc.max(0.0).sqrt().copysign(vn);
                coverage.push(hit.disk);
                (EventKind::Entry, tangential + normal * vn_out, true)
            } else {
                match refract_velocity(vel, normal, u)? {
                    Refraction::Transmitted(w) => {
                        coverage.push(hit.disk);
                        (EventKind::Entry, w, grazing)
                    }
                    Refraction::Reflected(w) => (EventKind::Reflect, w, grazing),
                }
            }
        };
        vel = new_vel;
        events.push(TrajectoryEvent {
            time: start.time + t,
            disk: hit.disk,
            kind,
            impact,
            position: pos,
            velocity: vel,
            tangency,
        });
        if events.len() > opts.event_cap {
            let end = ParticleState {
                position: pos,
                velocity: vel,
                time: start.time + t,
                coverage: coverage.len() as u32,
            };
            let log = finish_log(field, start_state, end, eps, events, &initial, &coverage);
            return Err(Error::EventCap {
                cap: opts.event_cap,
                time: start.time + t,
                partial: Box::new(log),
            });
        }
    }
    if let Some(d) = domain {
        if !d.contains(pos) {
            return Err(Error::OutOfDomain { time: start.time + t });
        }
    }
    coverage.sort_unstable();
    let end = ParticleState {
        position: pos,
        velocity: vel,
        time: start.time + duration,
        coverage: coverage.len() as u32,
    };
    let log = finish_log(field, start_state, end, eps, events, &initial, &coverage);
    Ok((end, log))
}

fn finish_log<S: ObstacleSource + ?Sized>(
    field: &S,
    start: ParticleState,
    end: ParticleState,
    radius: f64,
    events: Vec<TrajectoryEvent>,
    initial: &[u32],
    final_cover: &[u32],
) -> TrajectoryLog {
    let mut internal: Vec<u32> = events
        .iter()
        .map(|e| e.disk)
        .chain(initial.iter().copied())
        .chain(final_cover.iter().copied())
        .collect();
    internal.sort_unstable();
    internal.dedup();
    let centers: Vec<Vec2> = internal.iter().map(|&id| field.center(id)).collect();

    // A visit starts with an entry or a reflection (or at t = 0 inside a disk).
    let mut visits: std::collections::HashMap<u32, u32> = initial.iter().map(|&d| (d, 1)).collect();
    for e in &events {
        if matches!(e.kind, EventKind::Entry | EventKind::Reflect) {
            *visits.entry(e.disk).or_insert(0) += 1;
        }
    }
    let recollision = visits.values().any(|&n| n >= 2);

    let diam2 = 4.0 * radius * radius;
    let mut overlap = false;
    'outer: for i in 0..centers.len() {
        for j in i + 1..centers.len() {
            if (centers[i] - centers[j]).norm_sq() < diam2 {
                overlap = true;
                break 'outer;
            }
        }
    }

    TrajectoryLog {
        start,
        end,
        radius,
        events,
        pathologies: Pathologies {
            overlap,
            recollision,
            // Read backwards in time a revisit is an interference, so on a
            // physical trajectory the two events coincide.
            interference: recollision,
            chi1_violation: !initial.is_empty() || !final_cover.is_empty(),
        },
        internal_ids: internal,
        internal_centers: centers,
    }
}
