//! Dual-map representation: the 10×10 egocentric decision map and the
//! search-area-sized global map.
//!
//! Cells are 1 m squares addressed by `(row, col)`. Rows grow southward and
//! columns eastward, so `North` is `row - 1` and `East` is `col + 1`.

use alloc::vec;
use alloc::vec::Vec;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Side length of the decision map.
pub const LOCAL_SIZE: usize = 10;
/// Number of cells in the decision map.
pub const LOCAL_CELLS: usize = LOCAL_SIZE * LOCAL_SIZE;
/// Local coordinate the agent occupies when a decision map is spawned.
pub const AGENT_ANCHOR: GridCoord = GridCoord::new(5, 5);
/// Number of cells on the outer ring of the decision map.
pub const RING_CELLS: usize = 4 * LOCAL_SIZE - 4;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct GridCoord {
    pub row: i32,
    pub col: i32,
}

impl GridCoord {
    pub const fn new(row: i32, col: i32) -> Self {
        Self { row, col }
    }

    pub fn step(self, action: Action) -> Self {
        let (dr, dc) = action.delta();
        Self::new(self.row + dr, self.col + dc)
    }

    pub fn offset(self, other: GridCoord) -> Self {
        Self::new(self.row + other.row, self.col + other.col)
    }

    pub fn minus(self, other: GridCoord) -> Self {
        Self::new(self.row - other.row, self.col - other.col)
    }

    /// Squared Euclidean distance; exact, so it is used for all argmin decisions.
    pub fn distance_sq(self, other: GridCoord) -> i64 {
        let dr = (self.row - other.row) as i64;
        let dc = (self.col - other.col) as i64;
        dr * dr + dc * dc
    }

    pub fn distance(self, other: GridCoord) -> f64 {
        crate::math::sqrt(self.distance_sq(other) as f64)
    }

    pub fn manhattan(self, other: GridCoord) -> u32 {
        self.row.abs_diff(other.row) + self.col.abs_diff(other.col)
    }
}

/// Grid-frame move. The discriminant order is the network's output order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Action {
    North = 0,
    South = 1,
    East = 2,
    West = 3,
}

impl Action {
    pub const ALL: [Action; 4] = [Action::North, Action::South, Action::East, Action::West];

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn from_index(i: usize) -> Option<Action> {
        Self::ALL.get(i).copied()
    }

    pub fn delta(self) -> (i32, i32) {
        match self {
            Action::North => (-1, 0),
            Action::South => (1, 0),
            Action::East => (0, 1),
            Action::West => (0, -1),
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Action::North => "north",
            Action::South => "south",
            Action::East => "east",
            Action::West => "west",
        }
    }
}

/// Set of actions, one bit per [`Action`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
pub struct ActionMask(u8);

impl ActionMask {
    pub const EMPTY: ActionMask = ActionMask(0);
    pub const ALL: ActionMask = ActionMask(0b1111);

    pub fn from_bits(bits: u8) -> Self {
        Self(bits & 0b1111)
    }

    pub fn bits(self) -> u8 {
        self.0
    }

    pub fn with(self, action: Action) -> Self {
        Self(self.0 | (1 << action.index()))
    }

    pub fn contains(self, action: Action) -> bool {
        self.0 & (1 << action.index()) != 0
    }

    pub fn is_empty(self) -> bool {
        self.0 == 0
    }

    pub fn count(self) -> usize {
        self.0.count_ones() as usize
    }

    pub fn iter(self) -> impl Iterator<Item = Action> {
        Action::ALL.into_iter().filter(move |a| self.contains(*a))
    }
}

impl FromIterator<Action> for ActionMask {
    fn from_iter<I: IntoIterator<Item = Action>>(iter: I) -> Self {
        iter.into_iter().fold(ActionMask::EMPTY, ActionMask::with)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CellState {
    Free,
    Visited,
    Blocked,
    Current,
    #[serde(rename = "target")]
    TargetCell,
}

impl CellState {
    pub fn name(self) -> &'static str {
        match self {
            CellState::Free => "free",
            CellState::Visited => "visited",
            CellState::Blocked => "blocked",
            CellState::Current => "current",
            CellState::TargetCell => "target",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        Some(match s {
            "free" => CellState::Free,
            "visited" => CellState::Visited,
            "blocked" => CellState::Blocked,
            "current" => CellState::Current,
            "target" => CellState::TargetCell,
            _ => return None,
        })
    }

    /// Decision-map pixel coding.
    pub fn pixel(self) -> f64 {
        match self {
            CellState::Free => 1.0,
            CellState::TargetCell => 0.5,
            CellState::Visited => 0.0,
            CellState::Current => -0.5,
            CellState::Blocked => -1.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum ConstraintClass {
    /// Move is voided.
    Hard,
    /// Move is permitted with a penalty.
    Soft,
    None,
}

/// The five reward branches, in precedence order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Reward {
    Reached,
    Blocked,
    Visited,
    Valid,
    Invalid,
}

impl Reward {
    pub const REACHED: f64 = 1.0;
    pub const BLOCKED: f64 = -1.50;
    pub const VISITED: f64 = -0.25;
    pub const VALID: f64 = -0.04;
    pub const INVALID: f64 = -0.75;

    pub fn value(self) -> f64 {
        match self {
            Reward::Reached => Self::REACHED,
            Reward::Blocked => Self::BLOCKED,
            Reward::Visited => Self::VISITED,
            Reward::Valid => Self::VALID,
            Reward::Invalid => Self::INVALID,
        }
    }
}

/// Extent of the search area in cells.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct SearchArea {
    pub width: u32,
    pub height: u32,
}

impl SearchArea {
    pub fn new(width: u32, height: u32) -> Self {
        Self { width, height }
    }

    pub fn contains(self, c: GridCoord) -> bool {
        c.row >= 0 && c.col >= 0 && (c.row as u32) < self.height && (c.col as u32) < self.width
    }

    fn check(self, c: GridCoord) -> Result<()> {
        if self.contains(c) {
            Ok(())
        } else {
            Err(Error::OutOfBounds { row: c.row, col: c.col, width: self.width, height: self.height })
        }
    }
}

fn local_index(c: GridCoord) -> usize {
    c.row as usize * LOCAL_SIZE + c.col as usize
}

fn in_window(c: GridCoord) -> bool {
    c.row >= 0 && c.col >= 0 && (c.row as usize) < LOCAL_SIZE && (c.col as usize) < LOCAL_SIZE
}

/// True for the 36 cells on the outer ring of the decision map.
pub fn is_ring(c: GridCoord) -> bool {
    let last = LOCAL_SIZE as i32 - 1;
    in_window(c) && (c.row == 0 || c.col == 0 || c.row == last || c.col == last)
}

/// The 10×10 decision map m̂.
///
/// The grid stores only `Free`, `Visited`, `Blocked` and `Current`; the
/// target cell is tracked by coordinate and reported as `TargetCell` by
/// [`LocalMap::state`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct LocalMap {
    cells: [CellState; LOCAL_CELLS],
    agent: GridCoord,
    origin: GridCoord,
    target: GridCoord,
    area: SearchArea,
}

impl LocalMap {
    /// Fresh map centred so the agent sits at local `(5, 5)`. Cells that fall
    /// outside the search area are marked `Blocked`.
    pub fn spawn(agent_global: GridCoord, goal_global: GridCoord, area: SearchArea) -> Result<Self> {
        area.check(agent_global)?;
        let origin = agent_global.minus(AGENT_ANCHOR);
        let mut cells = [CellState::Free; LOCAL_CELLS];
        for (i, cell) in cells.iter_mut().enumerate() {
            let g = origin.offset(GridCoord::new((i / LOCAL_SIZE) as i32, (i % LOCAL_SIZE) as i32));
            if !area.contains(g) {
                *cell = CellState::Blocked;
            }
        }
        cells[local_index(AGENT_ANCHOR)] = CellState::Current;
        let mut map = Self { cells, agent: AGENT_ANCHOR, origin, target: AGENT_ANCHOR, area };
        map.target = select_target_cell(&map, goal_global);
        Ok(map)
    }

    pub fn agent(&self) -> GridCoord {
        self.agent
    }

    pub fn agent_global(&self) -> GridCoord {
        self.origin.offset(self.agent)
    }

    pub fn origin(&self) -> GridCoord {
        self.origin
    }

    pub fn target(&self) -> GridCoord {
        self.target
    }

    pub fn target_global(&self) -> GridCoord {
        self.origin.offset(self.target)
    }

    pub fn area(&self) -> SearchArea {
        self.area
    }

    pub fn to_global(&self, local: GridCoord) -> GridCoord {
        self.origin.offset(local)
    }

    pub fn to_local(&self, global: GridCoord) -> Option<GridCoord> {
        let l = global.minus(self.origin);
        in_window(l).then_some(l)
    }

    /// State of a local cell, `None` outside the window.
    pub fn state(&self, local: GridCoord) -> Option<CellState> {
        if !in_window(local) {
            return None;
        }
        if local == self.agent {
            Some(CellState::Current)
        } else if local == self.target && self.cells[local_index(local)] != CellState::Blocked {
            Some(CellState::TargetCell)
        } else {
            Some(self.cells[local_index(local)])
        }
    }

    /// Underlying occupancy, ignoring the target overlay.
    pub fn base_state(&self, local: GridCoord) -> Option<CellState> {
        in_window(local).then(|| self.cells[local_index(local)])
    }

    /// True when sensing has blocked the current target cell.
    pub fn target_blocked(&self) -> bool {
        self.cells[local_index(self.target)] == CellState::Blocked
    }

    pub fn reached_target(&self) -> bool {
        self.agent == self.target
    }

    /// Recompute the target cell for `goal_global`.
    pub fn retarget(&mut self, goal_global: GridCoord) {
        self.target = select_target_cell(self, goal_global);
    }

    pub fn classify(&self, action: Action) -> ConstraintClass {
        let dest = self.agent.step(action);
        match self.base_state(dest) {
            None | Some(CellState::Blocked) => ConstraintClass::Hard,
            Some(CellState::Visited) => ConstraintClass::Soft,
            Some(_) => ConstraintClass::None,
        }
    }

    /// Actions whose destination lies in the free or visited cells.
    pub fn valid_actions(&self) -> ActionMask {
        Action::ALL
            .into_iter()
            .filter(|a| self.classify(*a) != ConstraintClass::Hard)
            .collect()
    }

    pub fn apply_move(&self, action: Action) -> Result<Self> {
        if self.classify(action) == ConstraintClass::Hard {
            return Err(Error::HardConstraint(action));
        }
        let dest = self.agent.step(action);
        let mut next = *self;
        next.cells[local_index(self.agent)] = CellState::Visited;
        next.cells[local_index(dest)] = CellState::Current;
        next.agent = dest;
        Ok(next)
    }

    /// Mark a global cell as an obstacle. Returns true if the cell was newly
    /// blocked. The agent's own cell is never blocked.
    pub fn mark_blocked(&mut self, global: GridCoord) -> bool {
        match self.to_local(global) {
            Some(l) if l != self.agent => {
                let cell = &mut self.cells[local_index(l)];
                let fresh = *cell != CellState::Blocked;
                *cell = CellState::Blocked;
                fresh
            }
            _ => false,
        }
    }

    /// Row-major raster in `[-1, 1]`.
    pub fn render(&self) -> [f64; LOCAL_CELLS] {
        let mut out = [0.0; LOCAL_CELLS];
        for (i, px) in out.iter_mut().enumerate() {
            let c = GridCoord::new((i / LOCAL_SIZE) as i32, (i % LOCAL_SIZE) as i32);
            *px = self.state(c).map_or(-1.0, CellState::pixel);
        }
        out
    }

    /// Local coordinates currently holding `state` in the underlying grid.
    pub fn cells_in(&self, state: CellState) -> impl Iterator<Item = GridCoord> + '_ {
        (0..LOCAL_CELLS)
            .filter(move |&i| self.cells[i] == state)
            .map(|i| GridCoord::new((i / LOCAL_SIZE) as i32, (i % LOCAL_SIZE) as i32))
    }
}

/// Target cell for `goal_global`: the goal itself when it lies inside the
/// window, otherwise the ring cell closest (Euclidean) to the goal. Ring
/// cells that are blocked or occupied by the agent are skipped while any
/// other candidate exists; ties go to the first cell in row-major order.
pub fn select_target_cell(local: &LocalMap, goal_global: GridCoord) -> GridCoord {
    if let Some(l) = local.to_local(goal_global) {
        return l;
    }
    let ring = || {
        (0..LOCAL_CELLS)
            .map(|i| GridCoord::new((i / LOCAL_SIZE) as i32, (i % LOCAL_SIZE) as i32))
            .filter(|c| is_ring(*c))
    };
    let argmin = |eligible: &dyn Fn(GridCoord) -> bool| {
        let mut best: Option<(i64, GridCoord)> = None;
        for c in ring().filter(|c| eligible(*c)) {
            let d = local.to_global(c).distance_sq(goal_global);
            if best.is_none_or(|(bd, _)| d < bd) {
                best = Some((d, c));
            }
        }
        best.map(|(_, c)| c)
    };
    argmin(&|c| c != local.agent && local.cells[local_index(c)] != CellState::Blocked)
        .or_else(|| argmin(&|c| c != local.agent))
        .unwrap_or(local.agent)
}

/// Reward for the cell reached (or attempted) by a move. `goal` is the
/// global cell whose arrival counts as success.
pub fn reward(outcome_global: GridCoord, local: &LocalMap, goal: GridCoord) -> Reward {
    if outcome_global == goal {
        return Reward::Reached;
    }
    if !local.area.contains(outcome_global) {
        return Reward::Invalid;
    }
    match local.to_local(outcome_global).and_then(|l| local.base_state(l)) {
        Some(CellState::Blocked) => Reward::Blocked,
        Some(CellState::Visited) => Reward::Visited,
        Some(CellState::Free) | Some(CellState::Current) | Some(CellState::TargetCell) => Reward::Valid,
        None => Reward::Invalid,
    }
}

/// The global map M.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GlobalMap {
    width: u32,
    height: u32,
    cells: Vec<CellState>,
    start: GridCoord,
    goal: GridCoord,
    agent: GridCoord,
}

impl GlobalMap {
    pub fn new(width: u32, height: u32, start: GridCoord, goal: GridCoord) -> Result<Self> {
        if width == 0 || height == 0 {
            return Err(Error::InvalidWorld("search area must be non-empty"));
        }
        let area = SearchArea::new(width, height);
        area.check(start)?;
        area.check(goal)?;
        Ok(Self {
            width,
            height,
            cells: vec![CellState::Free; width as usize * height as usize],
            start,
            goal,
            agent: start,
        })
    }

    pub fn width(&self) -> u32 {
        self.width
    }

    pub fn height(&self) -> u32 {
        self.height
    }

    pub fn area(&self) -> SearchArea {
        SearchArea::new(self.width, self.height)
    }

    pub fn start(&self) -> GridCoord {
        self.start
    }

    pub fn goal(&self) -> GridCoord {
        self.goal
    }

    pub fn agent(&self) -> GridCoord {
        self.agent
    }

    fn index(&self, c: GridCoord) -> Option<usize> {
        self.area().contains(c).then(|| c.row as usize * self.width as usize + c.col as usize)
    }

    /// Stored occupancy (`Free`, `Visited` or `Blocked`).
    pub fn state(&self, c: GridCoord) -> Option<CellState> {
        self.index(c).map(|i| self.cells[i])
    }

    /// Write a cell directly. `Blocked` is absorbing; attempts to overwrite it
    /// are ignored.
    pub fn set(&mut self, c: GridCoord, state: CellState) -> Result<()> {
        let i = self
            .index(c)
            .ok_or(Error::OutOfBounds { row: c.row, col: c.col, width: self.width, height: self.height })?;
        if self.cells[i] != CellState::Blocked {
            self.cells[i] = state;
        }
        Ok(())
    }

    /// Copy every non-free cell of a finished (or active) decision map into M.
    /// Cells clipped outside the search area are ignored; `Blocked` in M is
    /// never downgraded.
    pub fn merge(&mut self, local: &LocalMap) {
        for state in [CellState::Visited, CellState::Blocked] {
            for l in local.cells_in(state) {
                if let Some(i) = self.index(local.to_global(l)) {
                    if self.cells[i] != CellState::Blocked {
                        self.cells[i] = state;
                    }
                }
            }
        }
        self.agent = local.agent_global();
    }

    /// Spawn a decision map at `agent`, carrying over obstacles already
    /// recorded in M, and aim it at the mission goal.
    pub fn spawn_local(&self, agent: GridCoord) -> Result<LocalMap> {
        let mut local = LocalMap::spawn(agent, self.goal, self.area())?;
        let mut imported = false;
        for r in 0..LOCAL_SIZE as i32 {
            for c in 0..LOCAL_SIZE as i32 {
                let g = local.to_global(GridCoord::new(r, c));
                if self.state(g) == Some(CellState::Blocked) {
                    imported |= local.mark_blocked(g);
                }
            }
        }
        if imported {
            local.retarget(self.goal);
        }
        Ok(local)
    }

    pub fn count(&self, state: CellState) -> usize {
        self.cells.iter().filter(|s| **s == state).count()
    }

    /// Every non-free cell, plus the agent (`current`) and goal (`target`).
    pub fn annotated_cells(&self) -> Vec<(GridCoord, CellState)> {
        let mut out = Vec::new();
        for (i, s) in self.cells.iter().enumerate() {
            let c = GridCoord::new((i / self.width as usize) as i32, (i % self.width as usize) as i32);
            if c == self.agent && *s != CellState::Blocked {
                out.push((c, CellState::Current));
            } else if c == self.goal && *s != CellState::Blocked {
                out.push((c, CellState::TargetCell));
            } else if *s != CellState::Free {
                out.push((c, *s));
            }
        }
        out
    }

    /// Rebuild a map from annotated cells (the inverse of [`annotated_cells`]).
    ///
    /// [`annotated_cells`]: GlobalMap::annotated_cells
    pub fn from_cells(
        width: u32,
        height: u32,
        start: GridCoord,
        goal: GridCoord,
        cells: &[(GridCoord, CellState)],
    ) -> Result<Self> {
        let mut map = Self::new(width, height, start, goal)?;
        for &(c, s) in cells {
            match s {
                CellState::Current => map.agent = c,
                CellState::TargetCell | CellState::Free => {}
                _ => map.set(c, s)?,
            }
        }
        Ok(map)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn big() -> SearchArea {
        SearchArea::new(300, 300)
    }

    #[test]
    fn spawn_centres_agent() {
        let m = LocalMap::spawn(GridCoord::new(50, 50), GridCoord::new(50, 200), big()).unwrap();
        assert_eq!(m.agent(), GridCoord::new(5, 5));
        assert_eq!(m.origin(), GridCoord::new(45, 45));
        assert_eq!(m.state(GridCoord::new(5, 5)), Some(CellState::Current));
    }

    #[test]
    fn spawn_near_border_blocks_clipped_rows() {
        let m = LocalMap::spawn(GridCoord::new(2, 50), GridCoord::new(0, 50), big()).unwrap();
        for r in 0..3 {
            for c in 0..10 {
                assert_eq!(m.base_state(GridCoord::new(r, c)), Some(CellState::Blocked), "({r},{c})");
            }
        }
        assert_eq!(m.base_state(GridCoord::new(3, 0)), Some(CellState::Free));
        // target skips the clipped ring and stays inside the search area
        assert!(m.area().contains(m.target_global()));
    }

    #[test]
    fn spawn_outside_area_is_error() {
        assert!(LocalMap::spawn(GridCoord::new(-1, 0), GridCoord::new(0, 0), big()).is_err());
    }

    #[test]
    fn target_cell_examples() {
        let m = LocalMap::spawn(GridCoord::new(50, 50), GridCoord::new(52, 53), big()).unwrap();
        assert_eq!(m.target(), GridCoord::new(7, 8));
        let m = LocalMap::spawn(GridCoord::new(50, 50), GridCoord::new(50, 200), big()).unwrap();
        assert_eq!(m.target(), GridCoord::new(5, 9));
        let m = LocalMap::spawn(GridCoord::new(50, 50), GridCoord::new(200, 200), big()).unwrap();
        assert_eq!(m.target(), GridCoord::new(9, 9));
    }

    fn centred() -> LocalMap {
        LocalMap::spawn(GridCoord::new(50, 50), GridCoord::new(50, 200), big()).unwrap()
    }

    #[test]
    fn classify_examples() {
        let mut m = centred();
        m.mark_blocked(GridCoord::new(50, 51));
        assert_eq!(m.classify(Action::East), ConstraintClass::Hard);
        let m2 = m.apply_move(Action::West).unwrap().apply_move(Action::East).unwrap();
        assert_eq!(m2.classify(Action::West), ConstraintClass::Soft);
        assert_eq!(m2.classify(Action::North), ConstraintClass::None);
    }

    #[test]
    fn classify_outside_window_is_hard() {
        let mut m = centred();
        for _ in 0..4 {
            m = m.apply_move(Action::East).unwrap();
        }
        assert_eq!(m.agent(), GridCoord::new(5, 9));
        assert_eq!(m.classify(Action::East), ConstraintClass::Hard);
    }

    #[test]
    fn apply_move_examples() {
        let m = centred();
        let n = m.apply_move(Action::North).unwrap();
        assert_eq!(n.agent(), GridCoord::new(4, 5));
        assert_eq!(n.state(GridCoord::new(5, 5)), Some(CellState::Visited));

        let back = n.apply_move(Action::South).unwrap();
        assert_eq!(back.agent(), GridCoord::new(5, 5));

        let mut b = centred();
        b.mark_blocked(GridCoord::new(49, 50));
        assert_eq!(b.apply_move(Action::North), Err(Error::HardConstraint(Action::North)));
    }

    #[test]
    fn reward_branches() {
        let goal = GridCoord::new(50, 52);
        let mut m = LocalMap::spawn(GridCoord::new(50, 50), goal, big()).unwrap();
        m.mark_blocked(GridCoord::new(49, 50));
        let m = m.apply_move(Action::West).unwrap().apply_move(Action::East).unwrap();
        assert_eq!(reward(goal, &m, goal).value(), 1.0);
        assert_eq!(reward(GridCoord::new(49, 50), &m, goal).value(), -1.50);
        assert_eq!(reward(GridCoord::new(50, 49), &m, goal).value(), -0.25);
        assert_eq!(reward(GridCoord::new(51, 50), &m, goal).value(), -0.04);
        assert_eq!(reward(GridCoord::new(-1, 50), &m, goal).value(), -0.75);
        assert_eq!(reward(GridCoord::new(50, 80), &m, goal).value(), -0.75);
    }

    #[test]
    fn reward_outside_search_area_beats_clipped_block() {
        let m = LocalMap::spawn(GridCoord::new(0, 5), GridCoord::new(0, 8), big()).unwrap();
        assert_eq!(reward(GridCoord::new(-1, 5), &m, GridCoord::new(0, 8)), Reward::Invalid);
    }

    #[test]
    fn render_fresh_map() {
        let m = centred();
        let r = m.render();
        assert_eq!(r.iter().filter(|v| **v == 1.0).count(), 98);
        assert_eq!(r[55], -0.5);
        assert_eq!(r[59], 0.5);
    }

    #[test]
    fn render_after_north_move() {
        let r = centred().apply_move(Action::North).unwrap().render();
        assert_eq!(r[55], 0.0);
        assert_eq!(r[45], -0.5);
    }

    #[test]
    fn render_blocked_ring() {
        let mut m = centred();
        for r in 0..10 {
            for c in 0..10 {
                if is_ring(GridCoord::new(r, c)) {
                    m.mark_blocked(m.to_global(GridCoord::new(r, c)));
                }
            }
        }
        let r = m.render();
        let ring: Vec<usize> = (0..100).filter(|i| is_ring(GridCoord::new(*i as i32 / 10, *i as i32 % 10))).collect();
        assert_eq!(ring.len(), RING_CELLS);
        assert!(ring.iter().all(|i| r[*i] == -1.0));
    }

    #[test]
    fn merge_copies_non_free_cells() {
        let mut g = GlobalMap::new(100, 100, GridCoord::new(50, 50), GridCoord::new(90, 90)).unwrap();
        let mut m = g.spawn_local(GridCoord::new(50, 50)).unwrap();
        m.mark_blocked(GridCoord::new(40, 40).offset(GridCoord::new(8, 8)));
        let m = m
            .apply_move(Action::North)
            .unwrap()
            .apply_move(Action::North)
            .unwrap()
            .apply_move(Action::North)
            .unwrap();
        g.merge(&m);
        assert_eq!(g.count(CellState::Visited), 3);
        assert_eq!(g.count(CellState::Blocked), 1);
        assert_eq!(g.agent(), GridCoord::new(47, 50));
    }

    #[test]
    fn merge_never_downgrades_blocked() {
        let mut g = GlobalMap::new(100, 100, GridCoord::new(50, 50), GridCoord::new(90, 90)).unwrap();
        g.set(GridCoord::new(50, 51), CellState::Blocked).unwrap();
        let m = LocalMap::spawn(GridCoord::new(50, 50), g.goal(), g.area())
            .unwrap()
            .apply_move(Action::East)
            .unwrap()
            .apply_move(Action::East)
            .unwrap();
        g.merge(&m);
        assert_eq!(g.state(GridCoord::new(50, 51)), Some(CellState::Blocked));
    }

    #[test]
    fn merge_of_empty_map_is_identity() {
        let mut g = GlobalMap::new(100, 100, GridCoord::new(50, 50), GridCoord::new(90, 90)).unwrap();
        let before = g.clone();
        let m = g.spawn_local(GridCoord::new(50, 50)).unwrap();
        g.merge(&m);
        assert_eq!(g, before);
    }

    #[test]
    fn spawn_local_imports_known_obstacles() {
        let mut g = GlobalMap::new(100, 100, GridCoord::new(50, 50), GridCoord::new(50, 90)).unwrap();
        g.set(GridCoord::new(50, 54), CellState::Blocked).unwrap();
        let m = g.spawn_local(GridCoord::new(50, 50)).unwrap();
        assert_eq!(m.state(GridCoord::new(5, 9)), Some(CellState::Blocked));
        assert_ne!(m.target(), GridCoord::new(5, 9));
    }

    #[test]
    fn annotated_cells_round_trip() {
        let mut g = GlobalMap::new(20, 10, GridCoord::new(1, 1), GridCoord::new(8, 18)).unwrap();
        g.set(GridCoord::new(3, 3), CellState::Blocked).unwrap();
        g.set(GridCoord::new(1, 2), CellState::Visited).unwrap();
        let cells = g.annotated_cells();
        let back = GlobalMap::from_cells(20, 10, g.start(), g.goal(), &cells).unwrap();
        assert_eq!(back, g);
    }
}
