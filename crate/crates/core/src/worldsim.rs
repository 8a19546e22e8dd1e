//! Procedural world simulator: obstacle fields, proximity sensing, a
//! ray-cast grayscale forward camera, and weather degradation.
//!
//! World coordinates are metres with `x` along columns and `y` along rows,
//! so grid cell `(row, col)` covers `[col, col+1) × [row, row+1)`.

use alloc::vec;
use alloc::vec::Vec;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::gridmap::{Action, GridCoord, SearchArea};
use crate::math;
use crate::rng::seeded;

pub const FRAME_SIZE: usize = 84;
pub const FRAME_PIXELS: usize = FRAME_SIZE * FRAME_SIZE;
/// Horizontal field of view of the synthetic camera, radians.
pub const CAMERA_FOV: f64 = core::f64::consts::FRAC_PI_2;
/// Maximum ray length, metres.
pub const CAMERA_RANGE: f64 = 20.0;
/// Proximity sensing threshold, metres.
pub const SENSE_RANGE: f64 = 1.0;
pub const DEFAULT_OBSTACLE_RADIUS: f64 = 0.3;
/// Upper bound on obstacle density (one obstacle per square metre).
pub const MAX_DENSITY: f64 = 100.0;

const PLACEMENT_ATTEMPTS: usize = 10_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Domain {
    Forest,
    Plain,
    Savanna,
}

impl Domain {
    /// Obstacles per 100 m².
    pub fn default_density(self) -> f64 {
        match self {
            Domain::Forest => 12.0,
            Domain::Plain => 1.0,
            Domain::Savanna => 2.0,
        }
    }

    /// One mover per 1000 m² in the savanna, none elsewhere.
    pub fn default_dynamic_count(self, width_m: u32, height_m: u32) -> u32 {
        match self {
            Domain::Savanna => ((width_m as u64 * height_m as u64) / 1000).max(1) as u32,
            _ => 0,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Domain::Forest => "forest",
            Domain::Plain => "plain",
            Domain::Savanna => "savanna",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "forest" => Some(Domain::Forest),
            "plain" => Some(Domain::Plain),
            "savanna" => Some(Domain::Savanna),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WorldSpec {
    pub domain: Domain,
    pub width_m: u32,
    pub height_m: u32,
    /// Obstacles per 100 m².
    pub obstacle_density: f64,
    pub dynamic_count: u32,
    pub obstacle_radius: f64,
    pub start: GridCoord,
    pub goal: GridCoord,
    pub seed: u64,
}

impl WorldSpec {
    /// Spec with the domain's default density and mover count.
    pub fn for_domain(domain: Domain, width_m: u32, height_m: u32, start: GridCoord, goal: GridCoord, seed: u64) -> Self {
        Self {
            domain,
            width_m,
            height_m,
            obstacle_density: domain.default_density(),
            dynamic_count: domain.default_dynamic_count(width_m, height_m),
            obstacle_radius: DEFAULT_OBSTACLE_RADIUS,
            start,
            goal,
            seed,
        }
    }

    pub fn area(&self) -> SearchArea {
        SearchArea::new(self.width_m, self.height_m)
    }

    pub fn obstacle_count(&self) -> usize {
        math::round(self.obstacle_density * self.width_m as f64 * self.height_m as f64 / 100.0) as usize
    }

    pub fn validate(&self) -> Result<()> {
        if self.width_m == 0 || self.height_m == 0 {
            return Err(Error::InvalidWorld("world must have positive width and height"));
        }
        if !self.obstacle_density.is_finite() || self.obstacle_density < 0.0 {
            return Err(Error::InvalidWorld("obstacle density must be a finite non-negative number"));
        }
        if self.obstacle_density > MAX_DENSITY {
            return Err(Error::InvalidWorld("obstacle density exceeds 100 per 100 m²"));
        }
        if !(self.obstacle_radius.is_finite() && self.obstacle_radius > 0.0) {
            return Err(Error::InvalidWorld("obstacle radius must be positive"));
        }
        if self.dynamic_count > 0 && self.domain != Domain::Savanna {
            return Err(Error::InvalidWorld("moving obstacles are only allowed in the savanna"));
        }
        let area = self.area();
        if !area.contains(self.start) || !area.contains(self.goal) {
            return Err(Error::InvalidWorld("start and goal must lie inside the world"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Obstacle {
    pub x: f64,
    pub y: f64,
    pub r: f64,
    #[serde(default)]
    pub vx: f64,
    #[serde(default)]
    pub vy: f64,
    #[serde(default)]
    pub shade: f64,
}

impl Obstacle {
    pub fn is_dynamic(&self) -> bool {
        self.vx != 0.0 || self.vy != 0.0
    }

    /// Strict disc / unit-cell overlap test.
    pub fn intersects_cell(&self, cell: GridCoord) -> bool {
        let (x0, y0) = (cell.col as f64, cell.row as f64);
        let cx = self.x.clamp(x0, x0 + 1.0);
        let cy = self.y.clamp(y0, y0 + 1.0);
        let (dx, dy) = (self.x - cx, self.y - cy);
        dx * dx + dy * dy < self.r * self.r
    }

    /// Distance from a point to the disc edge (0 inside the disc).
    pub fn edge_distance(&self, x: f64, y: f64) -> f64 {
        (math::hypot(self.x - x, self.y - y) - self.r).max(0.0)
    }
}

pub fn cell_center(c: GridCoord) -> (f64, f64) {
    (c.col as f64 + 0.5, c.row as f64 + 0.5)
}

/// Static obstacles bucketed by every cell their disc overlaps; movers are
/// kept in a flat list.
#[derive(Debug, Clone, PartialEq)]
struct CellIndex {
    width: usize,
    height: usize,
    buckets: Vec<Vec<u32>>,
    dynamic: Vec<u32>,
}

impl CellIndex {
    fn build(width: u32, height: u32, obstacles: &[Obstacle]) -> Self {
        let (w, h) = (width as usize, height as usize);
        let mut buckets = vec![Vec::new(); w * h];
        let mut dynamic = Vec::new();
        for (id, o) in obstacles.iter().enumerate() {
            if o.is_dynamic() {
                dynamic.push(id as u32);
                continue;
            }
            for c in covered_cells(o, width, height) {
                buckets[c.row as usize * w + c.col as usize].push(id as u32);
            }
        }
        Self { width: w, height: h, buckets, dynamic }
    }

    fn at(&self, c: GridCoord) -> &[u32] {
        if c.row < 0 || c.col < 0 || c.row as usize >= self.height || c.col as usize >= self.width {
            return &[];
        }
        &self.buckets[c.row as usize * self.width + c.col as usize]
    }
}

fn covered_cells(o: &Obstacle, width: u32, height: u32) -> impl Iterator<Item = GridCoord> + '_ {
    let r0 = math::floor(o.y - o.r).max(0.0) as i32;
    let r1 = (math::floor(o.y + o.r) as i32).min(height as i32 - 1);
    let c0 = math::floor(o.x - o.r).max(0.0) as i32;
    let c1 = (math::floor(o.x + o.r) as i32).min(width as i32 - 1);
    (r0..=r1)
        .flat_map(move |r| (c0..=c1).map(move |c| GridCoord::new(r, c)))
        .filter(move |c| o.intersects_cell(*c))
}

#[derive(Debug, Clone, PartialEq)]
pub struct World {
    spec: WorldSpec,
    obstacles: Vec<Obstacle>,
    index: CellIndex,
}

impl World {
    /// Assemble a world from an explicit obstacle list (e.g. a loaded world file).
    pub fn from_parts(spec: WorldSpec, obstacles: Vec<Obstacle>) -> Result<Self> {
        spec.validate()?;
        if obstacles.iter().any(|o| !(o.r > 0.0) || !o.x.is_finite() || !o.y.is_finite()) {
            return Err(Error::InvalidWorld("obstacle radius must be positive and position finite"));
        }
        let index = CellIndex::build(spec.width_m, spec.height_m, &obstacles);
        Ok(Self { spec, obstacles, index })
    }

    pub fn spec(&self) -> &WorldSpec {
        &self.spec
    }

    pub fn obstacles(&self) -> &[Obstacle] {
        &self.obstacles
    }

    pub fn area(&self) -> SearchArea {
        self.spec.area()
    }

    /// Obstacles whose disc overlaps `cell`.
    pub fn obstacles_in_cell(&self, cell: GridCoord) -> impl Iterator<Item = &Obstacle> + '_ {
        let statics = self.index.at(cell).iter();
        let movers = self.index.dynamic.iter();
        statics
            .chain(movers)
            .map(move |&id| &self.obstacles[id as usize])
            .filter(move |o| o.intersects_cell(cell))
    }

    /// True when no obstacle disc overlaps the cell.
    pub fn is_clear(&self, cell: GridCoord) -> bool {
        self.area().contains(cell) && self.obstacles_in_cell(cell).next().is_none()
    }

    /// Cells reachable from `from` through obstacle-free cells (4-connected).
    pub fn clear_component(&self, from: GridCoord) -> Vec<GridCoord> {
        let area = self.area();
        if !self.is_clear(from) {
            return Vec::new();
        }
        let w = area.width as usize;
        let mut seen = vec![false; w * area.height as usize];
        let mut queue = alloc::collections::VecDeque::new();
        let mut out = Vec::new();
        seen[from.row as usize * w + from.col as usize] = true;
        queue.push_back(from);
        while let Some(c) = queue.pop_front() {
            out.push(c);
            for a in Action::ALL {
                let n = c.step(a);
                if area.contains(n) && !seen[n.row as usize * w + n.col as usize] && self.is_clear(n) {
                    seen[n.row as usize * w + n.col as usize] = true;
                    queue.push_back(n);
                }
            }
        }
        out.sort();
        out
    }

    fn candidates_near(&self, center: GridCoord, radius_cells: i32) -> Vec<u32> {
        let mut ids: Vec<u32> = Vec::new();
        for r in center.row - radius_cells..=center.row + radius_cells {
            for c in center.col - radius_cells..=center.col + radius_cells {
                ids.extend_from_slice(self.index.at(GridCoord::new(r, c)));
            }
        }
        ids.extend_from_slice(&self.index.dynamic);
        ids.sort_unstable();
        ids.dedup();
        ids
    }
}

pub fn generate_world(spec: &WorldSpec) -> Result<World> {
    spec.validate()?;
    let mut rng = seeded(spec.seed);
    let (w, h) = (spec.width_m as f64, spec.height_m as f64);
    let keep_clear = |o: &Obstacle| !o.intersects_cell(spec.start) && !o.intersects_cell(spec.goal);
    let place = |rng: &mut crate::rng::SimRng, moving: bool| -> Result<Obstacle> {
        for _ in 0..PLACEMENT_ATTEMPTS {
            let mut o = Obstacle {
                x: rng.gen::<f64>() * w,
                y: rng.gen::<f64>() * h,
                r: spec.obstacle_radius,
                vx: 0.0,
                vy: 0.0,
                shade: rng.gen::<f64>(),
            };
            if moving {
                let speed = 0.5 + rng.gen::<f64>();
                let heading = rng.gen::<f64>() * core::f64::consts::TAU;
                o.vx = speed * math::cos(heading);
                o.vy = speed * math::sin(heading);
            }
            if keep_clear(&o) {
                return Ok(o);
            }
        }
        Err(Error::Generation)
    };
    let mut obstacles = Vec::with_capacity(spec.obstacle_count() + spec.dynamic_count as usize);
    for _ in 0..spec.obstacle_count() {
        obstacles.push(place(&mut rng, false)?);
    }
    for _ in 0..spec.dynamic_count {
        obstacles.push(place(&mut rng, true)?);
    }
    World::from_parts(spec.clone(), obstacles)
}

/// Neighbour cells (in N, S, E, W order) that overlap an obstacle whose
/// edge lies within [`SENSE_RANGE`] of the agent's cell centre.
pub fn sense_obstacles(world: &World, agent: GridCoord) -> Vec<GridCoord> {
    let (ax, ay) = cell_center(agent);
    Action::ALL
        .into_iter()
        .map(|a| agent.step(a))
        .filter(|n| world.area().contains(*n))
        .filter(|n| world.obstacles_in_cell(*n).any(|o| o.edge_distance(ax, ay) < SENSE_RANGE))
        .collect()
}

fn heading(facing: Action) -> (f64, f64) {
    match facing {
        Action::North => (0.0, -1.0),
        Action::South => (0.0, 1.0),
        Action::East => (1.0, 0.0),
        Action::West => (-1.0, 0.0),
    }
}

/// 84×84 grayscale frame, row-major, values in `[-1, 1]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CameraFrame {
    pixels: Vec<f64>,
}

impl CameraFrame {
    pub fn new(pixels: Vec<f64>) -> Result<Self> {
        if pixels.len() != FRAME_PIXELS {
            return Err(Error::Shape { expected: FRAME_PIXELS, got: pixels.len() });
        }
        Ok(Self { pixels: pixels.into_iter().map(|p| p.clamp(-1.0, 1.0)).collect() })
    }

    pub fn filled(value: f64) -> Self {
        Self { pixels: vec![value.clamp(-1.0, 1.0); FRAME_PIXELS] }
    }

    /// Sky-to-ground gradient used where no obstacle is hit.
    pub fn background() -> Self {
        let mut pixels = vec![0.0; FRAME_PIXELS];
        for (row, line) in pixels.chunks_mut(FRAME_SIZE).enumerate() {
            line.fill(background_pixel(row));
        }
        Self { pixels }
    }

    pub fn pixels(&self) -> &[f64] {
        &self.pixels
    }

    pub fn get(&self, row: usize, col: usize) -> f64 {
        self.pixels[row * FRAME_SIZE + col]
    }

    pub fn mean(&self) -> f64 {
        self.pixels.iter().sum::<f64>() / FRAME_PIXELS as f64
    }

    pub fn range(&self) -> (f64, f64) {
        self.pixels
            .iter()
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &p| (lo.min(p), hi.max(p)))
    }

    /// Area-averaged resize to `size × size` (identity at 84).
    pub fn resized(&self, size: usize) -> Vec<f64> {
        if size == FRAME_SIZE {
            return self.pixels.clone();
        }
        let mut out = vec![0.0; size * size];
        let scale = FRAME_SIZE as f64 / size as f64;
        for (oi, o) in out.iter_mut().enumerate() {
            let (orow, ocol) = (oi / size, oi % size);
            let (y0, y1) = (orow as f64 * scale, (orow + 1) as f64 * scale);
            let (x0, x1) = (ocol as f64 * scale, (ocol + 1) as f64 * scale);
            let mut acc = 0.0;
            let mut weight = 0.0;
            for r in math::floor(y0) as usize..(math::ceil(y1) as usize).min(FRAME_SIZE) {
                let wy = (y1.min(r as f64 + 1.0) - y0.max(r as f64)).max(0.0);
                for c in math::floor(x0) as usize..(math::ceil(x1) as usize).min(FRAME_SIZE) {
                    let wx = (x1.min(c as f64 + 1.0) - x0.max(c as f64)).max(0.0);
                    acc += self.pixels[r * FRAME_SIZE + c] * wx * wy;
                    weight += wx * wy;
                }
            }
            *o = acc / weight;
        }
        out
    }
}

fn background_pixel(row: usize) -> f64 {
    1.0 - 0.8 * row as f64 / (FRAME_SIZE - 1) as f64
}

fn ray_disc(ox: f64, oy: f64, dx: f64, dy: f64, o: &Obstacle) -> Option<f64> {
    let (fx, fy) = (ox - o.x, oy - o.y);
    let b = fx * dx + fy * dy;
    let c = fx * fx + fy * fy - o.r * o.r;
    if c <= 0.0 {
        return Some(0.0);
    }
    let disc = b * b - c;
    if disc < 0.0 {
        return None;
    }
    let t = -b - math::sqrt(disc);
    (t > 0.0).then_some(t)
}

/// Pinhole ray-cast of the forward view from the agent's cell centre.
pub fn render_frame(world: &World, agent: GridCoord, facing: Action) -> CameraFrame {
    let mut frame = CameraFrame::background();
    let (ox, oy) = cell_center(agent);
    let (hx, hy) = heading(facing);
    // right-hand vector of the heading
    let (rx, ry) = (-hy, hx);
    let reach = CAMERA_RANGE as i32 + 2;
    let ids = world.candidates_near(agent, reach);
    let half_w = math::tan(CAMERA_FOV / 2.0);
    let horizon = FRAME_SIZE as f64 / 2.0;
    for col in 0..FRAME_SIZE {
        let u = (2.0 * (col as f64 + 0.5) / FRAME_SIZE as f64 - 1.0) * half_w;
        let (dx, dy) = (hx + u * rx, hy + u * ry);
        let norm = math::hypot(dx, dy);
        let (dx, dy) = (dx / norm, dy / norm);
        let mut nearest: Option<(f64, f64)> = None;
        for &id in &ids {
            let o = &world.obstacles[id as usize];
            if let Some(t) = ray_disc(ox, oy, dx, dy, o) {
                if t <= CAMERA_RANGE && nearest.is_none_or(|(bt, _)| t < bt) {
                    nearest = Some((t, o.shade));
                }
            }
        }
        if let Some((d, shade)) = nearest {
            let value = -1.0 + 2.0 * (d / CAMERA_RANGE);
            let half = math::ceil(horizon * (0.5 + 0.5 * shade) / d.max(1.0)).min(horizon) as usize;
            let top = FRAME_SIZE / 2 - half;
            for row in top..(FRAME_SIZE / 2 + half).min(FRAME_SIZE) {
                frame.pixels[row * FRAME_SIZE + col] = value;
            }
        }
    }
    frame
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum WeatherKind {
    Clear,
    Snow,
    Dust,
    Fog,
}

impl WeatherKind {
    pub fn name(self) -> &'static str {
        match self {
            WeatherKind::Clear => "clear",
            WeatherKind::Snow => "snow",
            WeatherKind::Dust => "dust",
            WeatherKind::Fog => "fog",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "clear" => Some(WeatherKind::Clear),
            "snow" => Some(WeatherKind::Snow),
            "dust" => Some(WeatherKind::Dust),
            "fog" => Some(WeatherKind::Fog),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WeatherCondition {
    kind: WeatherKind,
    intensity: f64,
}

impl WeatherCondition {
    pub const LIGHT: f64 = 0.15;
    pub const HEAVY: f64 = 0.30;

    pub fn new(kind: WeatherKind, intensity: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&intensity) {
            return Err(Error::InvalidWorld("weather intensity must lie in [0, 1]"));
        }
        if kind == WeatherKind::Clear && intensity != 0.0 {
            return Err(Error::InvalidWorld("clear weather has zero intensity"));
        }
        Ok(Self { kind, intensity })
    }

    pub fn clear() -> Self {
        Self { kind: WeatherKind::Clear, intensity: 0.0 }
    }

    pub fn kind(&self) -> WeatherKind {
        self.kind
    }

    pub fn intensity(&self) -> f64 {
        self.intensity
    }

    pub fn visibility(&self) -> f64 {
        1.0 - self.intensity
    }
}

fn box_blur(pixels: &[f64], radius: usize) -> Vec<f64> {
    if radius == 0 {
        return pixels.to_vec();
    }
    let n = FRAME_SIZE;
    let pass = |src: &[f64], horizontal: bool| -> Vec<f64> {
        let mut out = vec![0.0; src.len()];
        for r in 0..n {
            for c in 0..n {
                let (lo, hi) = if horizontal {
                    (c.saturating_sub(radius), (c + radius).min(n - 1))
                } else {
                    (r.saturating_sub(radius), (r + radius).min(n - 1))
                };
                let mut acc = 0.0;
                for k in lo..=hi {
                    acc += if horizontal { src[r * n + k] } else { src[k * n + c] };
                }
                out[r * n + c] = acc / (hi - lo + 1) as f64;
            }
        }
        out
    };
    pass(&pass(pixels, true), false)
}

pub fn apply_weather(frame: &CameraFrame, weather: WeatherCondition, rng_seed: u64) -> CameraFrame {
    let w = weather.intensity;
    let mut rng = seeded(rng_seed);
    let mut speckle = |pixels: &mut [f64], prob: f64, value: f64| {
        for p in pixels.iter_mut() {
            if rng.gen::<f64>() < prob {
                *p = value;
            }
        }
    };
    let pixels: Vec<f64> = match weather.kind {
        WeatherKind::Clear => return frame.clone(),
        WeatherKind::Fog => {
            let hazed: Vec<f64> = frame.pixels.iter().map(|p| (1.0 - w) * p + w * 0.8).collect();
            box_blur(&hazed, math::ceil(4.0 * w) as usize)
        }
        WeatherKind::Dust => {
            let mut out: Vec<f64> = frame.pixels.iter().map(|p| (1.0 - w) * p + w * 0.3).collect();
            speckle(&mut out, w / 2.0, 0.4);
            out
        }
        WeatherKind::Snow => {
            let mut out: Vec<f64> = frame.pixels.iter().map(|p| (1.0 - w / 2.0) * p + (w / 2.0) * 0.9).collect();
            speckle(&mut out, w, 1.0);
            out
        }
    };
    CameraFrame { pixels: pixels.into_iter().map(|p| p.clamp(-1.0, 1.0)).collect() }
}

/// Advance movers by `dt` seconds, reflecting off the world bounds.
pub fn step_dynamics(world: &World, dt: f64) -> World {
    let mut next = world.clone();
    next.advance(dt);
    next
}

impl World {
    /// In-place form of [`step_dynamics`].
    pub fn advance(&mut self, dt: f64) {
        if self.index.dynamic.is_empty() || !(dt > 0.0) {
            return;
        }
        let (w, h) = (self.spec.width_m as f64, self.spec.height_m as f64);
        let reflect = |pos: &mut f64, vel: &mut f64, limit: f64| {
            if *pos < 0.0 {
                *pos = -*pos;
                *vel = -*vel;
            } else if *pos > limit {
                *pos = 2.0 * limit - *pos;
                *vel = -*vel;
            }
            *pos = pos.clamp(0.0, limit);
        };
        for &id in &self.index.dynamic {
            let o = &mut self.obstacles[id as usize];
            o.x += o.vx * dt;
            o.y += o.vy * dt;
            reflect(&mut o.x, &mut o.vx, w);
            reflect(&mut o.y, &mut o.vy, h);
        }
    }

    pub fn has_movers(&self) -> bool {
        !self.index.dynamic.is_empty()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn spec(density: f64) -> WorldSpec {
        WorldSpec {
            domain: Domain::Forest,
            width_m: 100,
            height_m: 100,
            obstacle_density: density,
            dynamic_count: 0,
            obstacle_radius: DEFAULT_OBSTACLE_RADIUS,
            start: GridCoord::new(10, 10),
            goal: GridCoord::new(80, 80),
            seed: 7,
        }
    }

    fn world_with(obstacles: Vec<Obstacle>) -> World {
        let mut s = spec(0.0);
        s.width_m = 40;
        s.height_m = 40;
        s.goal = GridCoord::new(30, 30);
        World::from_parts(s, obstacles).unwrap()
    }

    fn disc(x: f64, y: f64) -> Obstacle {
        Obstacle { x, y, r: 0.3, vx: 0.0, vy: 0.0, shade: 0.5 }
    }

    #[test]
    fn zero_density_yields_empty_world() {
        assert!(generate_world(&spec(0.0)).unwrap().obstacles().is_empty());
    }

    #[test]
    fn generation_is_seed_deterministic() {
        let a = generate_world(&spec(12.0)).unwrap();
        let b = generate_world(&spec(12.0)).unwrap();
        assert_eq!(a.obstacles(), b.obstacles());
        let mut other = spec(12.0);
        other.seed = 8;
        assert_ne!(a.obstacles(), generate_world(&other).unwrap().obstacles());
    }

    #[test]
    fn forest_count_and_clear_endpoints() {
        let s = spec(12.0);
        let w = generate_world(&s).unwrap();
        assert_eq!(w.obstacles().len(), 1200);
        assert!(w.obstacles().iter().all(|o| !o.intersects_cell(s.start) && !o.intersects_cell(s.goal)));
        assert!(w.is_clear(s.start) && w.is_clear(s.goal));
    }

    #[test]
    fn invalid_specs_rejected() {
        assert!(generate_world(&spec(-1.0)).is_err());
        assert!(generate_world(&spec(f64::NAN)).is_err());
        assert!(generate_world(&spec(101.0)).is_err());
        let mut s = spec(1.0);
        s.dynamic_count = 3;
        assert!(generate_world(&s).is_err());
    }

    #[test]
    fn tiny_world_cannot_keep_endpoints_clear() {
        let mut s = spec(100.0);
        s.width_m = 1;
        s.height_m = 1;
        s.start = GridCoord::new(0, 0);
        s.goal = GridCoord::new(0, 0);
        assert_eq!(generate_world(&s).unwrap_err(), Error::Generation);
    }

    #[test]
    fn sensing_examples() {
        let agent = GridCoord::new(20, 20);
        let (ax, ay) = cell_center(agent);
        let w = world_with(vec![disc(ax, ay - 0.8)]);
        assert_eq!(sense_obstacles(&w, agent), vec![GridCoord::new(19, 20)]);

        let w = world_with(vec![disc(ax, ay - 1.5)]);
        assert!(sense_obstacles(&w, agent).is_empty());

        let w = world_with(vec![disc(ax + 0.9, ay), disc(ax - 0.9, ay)]);
        assert_eq!(sense_obstacles(&w, agent), vec![GridCoord::new(20, 21), GridCoord::new(20, 19)]);
    }

    #[test]
    fn empty_world_renders_background() {
        let w = world_with(vec![]);
        assert_eq!(render_frame(&w, GridCoord::new(5, 5), Action::North), CameraFrame::background());
    }

    #[test]
    fn obstacle_ahead_darkens_frame() {
        let agent = GridCoord::new(20, 20);
        let (ax, ay) = cell_center(agent);
        let w = world_with(vec![disc(ax, ay - 2.0)]);
        let f = render_frame(&w, agent, Action::North);
        assert!(f.mean() < CameraFrame::background().mean());
        assert_eq!(f, render_frame(&w, agent, Action::North));
        // looking away leaves the view empty
        assert_eq!(render_frame(&w, agent, Action::South), CameraFrame::background());
    }

    #[test]
    fn frame_values_stay_in_range() {
        let w = generate_world(&spec(12.0)).unwrap();
        for facing in Action::ALL {
            let (lo, hi) = render_frame(&w, GridCoord::new(50, 50), facing).range();
            assert!(lo >= -1.0 && hi <= 1.0);
        }
    }

    #[test]
    fn clear_weather_is_identity() {
        let f = CameraFrame::background();
        assert_eq!(apply_weather(&f, WeatherCondition::clear(), 3), f);
    }

    #[test]
    fn fog_formula_before_blur() {
        // a flat frame is unchanged by the blur, exposing the haze formula
        let f = CameraFrame::filled(0.0);
        let fog = apply_weather(&f, WeatherCondition::new(WeatherKind::Fog, 0.30).unwrap(), 1);
        assert!(fog.pixels().iter().all(|p| (p - 0.24).abs() < 1e-12));
    }

    #[test]
    fn weather_validation() {
        assert!(WeatherCondition::new(WeatherKind::Clear, 0.15).is_err());
        assert!(WeatherCondition::new(WeatherKind::Snow, 1.5).is_err());
        let light = WeatherCondition::new(WeatherKind::Snow, WeatherCondition::LIGHT).unwrap();
        let heavy = WeatherCondition::new(WeatherKind::Dust, WeatherCondition::HEAVY).unwrap();
        assert!((light.visibility() - 0.85).abs() < 1e-12);
        assert!((heavy.visibility() - 0.70).abs() < 1e-12);
    }

    #[test]
    fn dynamics_examples() {
        let w = world_with(vec![disc(5.0, 5.0)]);
        assert_eq!(step_dynamics(&w, 1.0), w);

        let mut s = spec(0.0);
        s.domain = Domain::Savanna;
        s.width_m = 40;
        s.height_m = 40;
        s.goal = GridCoord::new(30, 30);
        s.dynamic_count = 2;
        let mover = Obstacle { x: 10.0, y: 10.0, r: 0.3, vx: 1.0, vy: 0.0, shade: 0.5 };
        let edge = Obstacle { x: 39.5, y: 10.0, r: 0.3, vx: 1.0, vy: 0.0, shade: 0.5 };
        let w = World::from_parts(s, vec![mover, edge]).unwrap();
        let n = step_dynamics(&w, 1.0);
        assert_eq!((n.obstacles()[0].x, n.obstacles()[0].y), (11.0, 10.0));
        assert_eq!(n.obstacles()[1].x, 39.5);
        assert_eq!(n.obstacles()[1].vx, -1.0);
    }

    #[test]
    fn resize_preserves_flat_frames() {
        let f = CameraFrame::filled(0.25);
        let small = f.resized(16);
        assert_eq!(small.len(), 256);
        assert!(small.iter().all(|p| (p - 0.25).abs() < 1e-12));
        assert_eq!(f.resized(84), f.pixels());
    }
}
