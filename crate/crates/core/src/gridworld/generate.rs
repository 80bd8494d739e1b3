//! Seeded generator for desk-scale apartments: a block of rectangular rooms
//! joined by doors, with furniture clutter and labelled objects.

use std::collections::{BTreeMap, BTreeSet, VecDeque};

use rand::seq::SliceRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};

use super::scene::{AgentPose, CellKind, Episode, GoalKind, GoalSpec, Grid, Scene, SceneObject, TaskKind};
use super::{GridError, Result};
use crate::geometry::Cell;
use crate::perception::token_match;
use crate::rng::{rng_from_seed, SimRng};

const MAX_ATTEMPTS: usize = 64;
const DOOR_WIDTH: usize = 3;

const ROOM_NAMES: [&str; 10] = [
    "living room",
    "kitchen",
    "bedroom",
    "bathroom",
    "office",
    "hallway",
    "dining room",
    "laundry room",
    "nursery",
    "studio",
];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ObjectTemplate {
    pub category: String,
    #[serde(default)]
    pub subcategories: Vec<String>,
    #[serde(default)]
    pub colors: Vec<String>,
    #[serde(default)]
    pub states: Vec<String>,
}

impl ObjectTemplate {
    fn new(category: &str, subcategories: &[&str], colors: &[&str], states: &[&str]) -> Self {
        let owned = |xs: &[&str]| xs.iter().map(|s| s.to_string()).collect();
        Self {
            category: category.into(),
            subcategories: owned(subcategories),
            colors: owned(colors),
            states: owned(states),
        }
    }
}

/// Household object vocabulary used by the bundled generator configs.
pub fn default_vocabulary() -> Vec<ObjectTemplate> {
    const COLORS: &[&str] = &["white", "black", "brown", "gray", "blue", "green", "red", "beige"];
    vec![
        ObjectTemplate::new("chair", &["armchair", "stool", "recliner"], COLORS, &[]),
        ObjectTemplate::new("sofa", &["couch", "loveseat"], COLORS, &[]),
        ObjectTemplate::new("bed", &["bunk bed", "crib"], COLORS, &["made", "unmade"]),
        ObjectTemplate::new("table", &["desk", "nightstand"], COLORS, &["clean", "cluttered"]),
        ObjectTemplate::new("tv", &["monitor"], &["black", "gray"], &["on", "off"]),
        ObjectTemplate::new("laptop", &[], &["black", "gray", "white"], &["open", "closed"]),
        ObjectTemplate::new("plant", &["cactus", "fern"], &["green"], &[]),
        ObjectTemplate::new("toilet", &[], &["white"], &["open", "closed"]),
        ObjectTemplate::new("sink", &[], &["white", "gray"], &[]),
        ObjectTemplate::new("oven", &["microwave"], &["black", "white", "gray"], &["open", "closed"]),
        ObjectTemplate::new("refrigerator", &[], &["white", "gray"], &["open", "closed"]),
        ObjectTemplate::new("lamp", &["floor lamp"], &["white", "black", "yellow"], &["on", "off"]),
        ObjectTemplate::new("bookshelf", &[], &["brown", "white"], &[]),
        ObjectTemplate::new("washing machine", &[], &["white"], &["open", "closed"]),
        ObjectTemplate::new("gas boiler", &[], &["white", "gray"], &[]),
    ]
}

const CYLINDER_COLORS: [&str; 8] = ["white", "red", "blue", "green", "yellow", "black", "orange", "purple"];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GenConfig {
    pub name: String,
    pub rooms: usize,
    /// Interior side length of each room, in cells.
    pub room_size: usize,
    pub resolution: f64,
    pub vocabulary: Vec<ObjectTemplate>,
    /// Household objects to place.
    pub objects: usize,
    /// Colored cylinders (multi-object navigation targets), each a distinct color.
    pub cylinders: usize,
    /// Fraction of room interiors covered by furniture blocks, in (0, 1).
    pub density: f64,
}

impl Default for GenConfig {
    fn default() -> Self {
        Self {
            name: "generated".into(),
            rooms: 4,
            room_size: 14,
            resolution: 0.25,
            vocabulary: default_vocabulary(),
            objects: 12,
            cylinders: 0,
            density: 0.05,
        }
    }
}

impl GenConfig {
    /// The bundled multi-object configuration used by the memory ablation.
    pub fn multion() -> Self {
        Self {
            name: "multion".into(),
            rooms: 4,
            room_size: 14,
            objects: 10,
            cylinders: 4,
            density: 0.05,
            ..Self::default()
        }
    }

    fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(GridError::Validation(m.into()));
        if self.rooms == 0 {
            return bad("rooms must be at least 1");
        }
        if self.room_size < DOOR_WIDTH + 2 {
            return bad("room_size too small for a door");
        }
        if !(self.density > 0.0 && self.density < 1.0) {
            return bad("density must lie in (0, 1)");
        }
        if self.resolution.is_nan() || self.resolution <= 0.0 {
            return bad("resolution must be positive");
        }
        if self.objects > 0 && self.vocabulary.is_empty() {
            return bad("object vocabulary is empty");
        }
        if self.cylinders > CYLINDER_COLORS.len() {
            return bad("too many cylinders for the color palette");
        }
        Ok(())
    }
}

struct Layout {
    grid: Grid,
    /// Interior cells of each room, indexed by room.
    room_cells: Vec<Vec<Cell>>,
    door_cells: BTreeSet<Cell>,
}

fn carve_layout(cfg: &GenConfig, rng: &mut SimRng) -> Layout {
    let slots_c = (cfg.rooms as f64).sqrt().ceil() as usize;
    let slots_r = cfg.rooms.div_ceil(slots_c);
    let span = cfg.room_size + 1;
    let rows = slots_r * span + 1;
    let cols = slots_c * span + 1;
    let mut grid = Grid::new(rows, cols, CellKind::Obstacle);
    let origin = |k: usize| ((k / slots_c) * span + 1, (k % slots_c) * span + 1);
    let mut room_cells = Vec::with_capacity(cfg.rooms);
    for k in 0..cfg.rooms {
        let (r0, c0) = origin(k);
        let mut cells = Vec::new();
        for r in r0..r0 + cfg.room_size {
            for c in c0..c0 + cfg.room_size {
                grid.set(Cell::new(r, c), CellKind::Free);
                cells.push(Cell::new(r, c));
            }
        }
        room_cells.push(cells);
    }
    // Doors along a spanning tree (each room links to the left or upper
    // neighbour), plus a few extra loops.
    let mut door_cells = BTreeSet::new();
    let mut open_door = |grid: &mut Grid, a: usize, b: usize, rng: &mut SimRng| {
        let (ra, ca) = origin(a);
        let (rb, cb) = origin(b);
        let offset = rng.gen_range(1..=cfg.room_size - DOOR_WIDTH - 1);
        for i in 0..DOOR_WIDTH {
            let cell = if ra == rb {
                // horizontal neighbours: shared vertical wall
                Cell::new(ra + offset + i, ca.max(cb) - 1)
            } else {
                Cell::new(ra.max(rb) - 1, ca + offset + i)
            };
            grid.set(cell, CellKind::Free);
            door_cells.insert(cell);
        }
    };
    for k in 1..cfg.rooms {
        let left = (k % slots_c > 0).then(|| k - 1);
        let up = (k >= slots_c).then(|| k - slots_c);
        let parent = match (left, up) {
            (Some(l), Some(u)) => {
                if rng.gen_bool(0.5) {
                    l
                } else {
                    u
                }
            }
            (Some(l), None) => l,
            (None, Some(u)) => u,
            (None, None) => unreachable!("row-major rooms always have a placed neighbour"),
        };
        open_door(&mut grid, k, parent, rng);
        let other = if Some(parent) == left { up } else { left };
        if let Some(o) = other {
            if rng.gen_bool(0.3) {
                open_door(&mut grid, k, o, rng);
            }
        }
    }
    Layout {
        grid,
        room_cells,
        door_cells,
    }
}

fn near(cell: Cell, others: &BTreeSet<Cell>, radius: usize) -> bool {
    others
        .iter()
        .any(|o| o.row.abs_diff(cell.row) <= radius && o.col.abs_diff(cell.col) <= radius)
}

fn place_clutter(cfg: &GenConfig, layout: &mut Layout, rng: &mut SimRng) {
    for cells in &layout.room_cells {
        let target = (cfg.density * cells.len() as f64).round() as usize;
        let mut covered = 0;
        let mut tries = 0;
        while covered < target && tries < 200 {
            tries += 1;
            let (h, w) = *[(2, 2), (2, 3), (3, 2), (1, 3), (3, 1)].choose(rng).unwrap();
            let anchor = *cells.choose(rng).unwrap();
            let block: Vec<Cell> = (0..h)
                .flat_map(|dr| (0..w).map(move |dc| Cell::new(anchor.row + dr, anchor.col + dc)))
                .collect();
            let fits = block.iter().all(|c| cells.contains(c) && layout.grid.is_free(*c))
                && !block.iter().any(|c| near(*c, &layout.door_cells, 2));
            if fits {
                for c in &block {
                    layout.grid.set(*c, CellKind::Obstacle);
                }
                covered += block.len();
            }
        }
        if covered < target {
            // Could not reach the requested coverage with blocks; flood the
            // remainder so infeasible densities are detected downstream.
            for c in cells {
                if covered >= target {
                    break;
                }
                if layout.grid.is_free(*c) && !layout.door_cells.contains(c) {
                    layout.grid.set(*c, CellKind::Obstacle);
                    covered += 1;
                }
            }
        }
    }
}

/// True when every free cell is 4-connected to every other.
pub(crate) fn free_space_connected(grid: &Grid) -> bool {
    let Some(start) = grid.free_cells().next() else {
        return false;
    };
    let mut seen = vec![false; grid.rows() * grid.cols()];
    let mut queue = VecDeque::from([start]);
    seen[start.row * grid.cols() + start.col] = true;
    let mut count = 1;
    while let Some(cell) = queue.pop_front() {
        for n in cell.neighbors4(grid.rows(), grid.cols()) {
            let idx = n.row * grid.cols() + n.col;
            if grid.is_free(n) && !seen[idx] {
                seen[idx] = true;
                count += 1;
                queue.push_back(n);
            }
        }
    }
    count == grid.free_cells().count()
}

fn clearance_ok(grid: &Grid, cell: Cell) -> bool {
    cell.neighbors8(grid.rows(), grid.cols())
        .filter(|n| grid.is_free(*n))
        .count()
        == 8
}

fn room_of(layout: &Layout, cell: Cell) -> usize {
    layout
        .room_cells
        .iter()
        .position(|cells| cells.contains(&cell))
        .unwrap_or(0)
}

fn try_generate(cfg: &GenConfig, rng: &mut SimRng) -> std::result::Result<Scene, String> {
    let mut layout = carve_layout(cfg, rng);
    place_clutter(cfg, &mut layout, rng);
    if !free_space_connected(&layout.grid) {
        return Err("free space is disconnected".into());
    }
    let mut names: Vec<&str> = ROOM_NAMES.to_vec();
    names.shuffle(rng);
    let room_name = |k: usize| names.get(k).map_or_else(|| format!("room {k}"), |s| s.to_string());

    let mut candidates: Vec<Cell> = layout
        .grid
        .free_cells()
        .filter(|c| clearance_ok(&layout.grid, *c) && !layout.door_cells.contains(c))
        .collect();
    candidates.shuffle(rng);
    let needed = cfg.objects + cfg.cylinders;
    let mut taken: BTreeSet<Cell> = BTreeSet::new();
    let mut chosen = Vec::with_capacity(needed);
    for cell in candidates {
        if chosen.len() == needed {
            break;
        }
        if near(cell, &taken, 2) {
            continue;
        }
        taken.insert(cell);
        chosen.push(cell);
    }
    if chosen.len() < needed {
        return Err(format!("only {} of {needed} object positions available", chosen.len()));
    }

    let mut objects = Vec::with_capacity(needed);
    let mut cylinder_colors: Vec<&str> = CYLINDER_COLORS.to_vec();
    cylinder_colors.shuffle(rng);
    for (i, cell) in chosen.into_iter().enumerate() {
        let id = i as u32 + 1;
        let mut attributes = BTreeMap::new();
        attributes.insert("room".to_string(), room_name(room_of(&layout, cell)));
        let (category, subcategory) = if i < cfg.cylinders {
            attributes.insert("color".into(), cylinder_colors[i].to_string());
            ("cylinder".to_string(), "cylinder".to_string())
        } else {
            let t = cfg.vocabulary.choose(rng).unwrap();
            if let Some(color) = t.colors.choose(rng) {
                attributes.insert("color".into(), color.clone());
            }
            if let Some(state) = t.states.choose(rng) {
                attributes.insert("state".into(), state.clone());
            }
            let sub = t
                .subcategories
                .choose(rng)
                .cloned()
                .unwrap_or_else(|| t.category.clone());
            (t.category.clone(), sub)
        };
        objects.push(SceneObject {
            id,
            category,
            subcategory,
            attributes,
            position: cell.center(cfg.resolution),
            image_ref: Some(format!("img_{id:03}")),
        });
    }
    Scene::new(cfg.name.clone(), cfg.resolution, layout.grid, objects).map_err(|e| e.to_string())
}

/// Generates a scene. Deterministic in `(config, seed)`; free space is always
/// connected.
pub fn generate_scene(config: &GenConfig, seed: u64) -> Result<Scene> {
    config.validate()?;
    let mut rng = rng_from_seed(seed);
    let mut last = String::new();
    for _ in 0..MAX_ATTEMPTS {
        match try_generate(config, &mut rng) {
            Ok(scene) => return Ok(scene),
            Err(reason) => last = reason,
        }
    }
    Err(GridError::Generation {
        attempts: MAX_ATTEMPTS,
        reason: last,
    })
}

fn objects_matching(scene: &Scene, query: &str) -> BTreeSet<u32> {
    scene
        .objects
        .iter()
        .filter(|o| token_match(o, query))
        .map(|o| o.id)
        .collect()
}

fn random_start(scene: &Scene, rng: &mut SimRng) -> AgentPose {
    let grid = &scene.grid;
    let cells: Vec<Cell> = grid.free_cells().filter(|c| clearance_ok(grid, *c)).collect();
    let cell = *cells.choose(rng).expect("generated scenes have open floor");
    let p = cell.center(scene.resolution);
    AgentPose::new(p.x, p.y, 30.0 * rng.gen_range(0..12) as f64)
}

fn category_goal(scene: &Scene, obj: &SceneObject) -> GoalSpec {
    GoalSpec {
        kind: GoalKind::Category,
        payload: obj.category.clone(),
        target_ids: objects_matching(scene, &obj.category),
        ground_truth_answer: None,
    }
}

fn description_goal(scene: &Scene, obj: &SceneObject) -> GoalSpec {
    let mut text = String::from("the ");
    if let Some(color) = obj.attributes.get("color") {
        text.push_str(color);
        text.push(' ');
    }
    text.push_str(&obj.subcategory);
    if let Some(room) = obj.attributes.get("room") {
        text.push_str(" in the ");
        text.push_str(room);
    }
    // Every object fitting the description is a valid target.
    let targets = scene
        .objects
        .iter()
        .filter(|o| {
            o.subcategory == obj.subcategory
                && o.attributes.get("color") == obj.attributes.get("color")
                && o.attributes.get("room") == obj.attributes.get("room")
        })
        .map(|o| o.id)
        .collect();
    GoalSpec {
        kind: GoalKind::Description,
        payload: text,
        target_ids: targets,
        ground_truth_answer: None,
    }
}

fn image_goal(obj: &SceneObject) -> GoalSpec {
    GoalSpec {
        kind: GoalKind::Image,
        payload: obj.image_ref.clone().expect("generated objects carry image refs"),
        target_ids: [obj.id].into(),
        ground_truth_answer: None,
    }
}

fn question_goal(scene: &Scene, obj: &SceneObject, rng: &mut SimRng) -> Option<GoalSpec> {
    // Only ask about categories that occur once, so the answer is unambiguous.
    if scene.objects.iter().filter(|o| o.category == obj.category).count() != 1 {
        return None;
    }
    let mut options = Vec::new();
    if let Some(color) = obj.attributes.get("color") {
        options.push((format!("what color is the {}", obj.category), color.clone()));
    }
    if let Some(state) = obj.attributes.get("state") {
        options.push((format!("is the {} {}", obj.category, state), "yes".to_string()));
    }
    if let Some(room) = obj.attributes.get("room") {
        options.push((format!("which room is the {} in", obj.category), room.clone()));
    }
    let (question, answer) = options.choose(rng)?.clone();
    Some(GoalSpec {
        kind: GoalKind::Question,
        payload: question,
        target_ids: [obj.id].into(),
        ground_truth_answer: Some(answer),
    })
}

/// Default per-goal step budget for a task.
pub fn default_budget(task: TaskKind) -> u32 {
    match task {
        TaskKind::Multion => 2500,
        TaskKind::Ovon | TaskKind::Goat | TaskKind::Eqa => 500,
    }
}

/// Samples `count` episodes of one task kind on `scene`.
pub fn generate_episodes(scene: &Scene, task: TaskKind, count: usize, seed: u64) -> Result<Vec<Episode>> {
    let mut rng = rng_from_seed(seed);
    let household: Vec<&SceneObject> = scene.objects.iter().filter(|o| o.category != "cylinder").collect();
    let cylinders: Vec<&SceneObject> = scene.objects.iter().filter(|o| o.category == "cylinder").collect();
    let mut episodes = Vec::with_capacity(count);
    for _ in 0..count {
        let goals = match task {
            TaskKind::Ovon => {
                let obj = household
                    .choose(&mut rng)
                    .ok_or_else(|| GridError::Validation("scene has no household objects".into()))?;
                vec![category_goal(scene, obj)]
            }
            TaskKind::Goat => {
                let n = rng.gen_range(5..=10);
                let mut goals = Vec::with_capacity(n);
                for _ in 0..n {
                    let obj = household
                        .choose(&mut rng)
                        .ok_or_else(|| GridError::Validation("scene has no household objects".into()))?;
                    goals.push(match rng.gen_range(0..3) {
                        0 => category_goal(scene, obj),
                        1 => description_goal(scene, obj),
                        _ => image_goal(obj),
                    });
                }
                goals
            }
            TaskKind::Multion => {
                if cylinders.len() < 3 {
                    return Err(GridError::Validation("multi-object episodes need 3 cylinders".into()));
                }
                cylinders
                    .choose_multiple(&mut rng, 3)
                    .map(|obj| {
                        let payload = format!("{} cylinder", obj.attributes["color"]);
                        GoalSpec {
                            kind: GoalKind::Category,
                            target_ids: objects_matching(scene, &payload),
                            payload,
                            ground_truth_answer: None,
                        }
                    })
                    .collect()
            }
            TaskKind::Eqa => {
                let mut shuffled = household.clone();
                shuffled.shuffle(&mut rng);
                let goal = shuffled
                    .iter()
                    .find_map(|obj| question_goal(scene, obj, &mut rng))
                    .ok_or_else(|| GridError::Validation("no unambiguous question for this scene".into()))?;
                vec![goal]
            }
        };
        episodes.push(Episode {
            scene_ref: scene.name.clone(),
            start_pose: random_start(scene, &mut rng),
            goals,
            task_kind: task,
            step_budget_per_goal: default_budget(task),
            success_radius: 1.0,
        });
    }
    Ok(episodes)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn same_seed_same_scene() {
        let cfg = GenConfig {
            rooms: 1,
            vocabulary: vec![ObjectTemplate::new("chair", &[], &[], &[])],
            objects: 3,
            density: 0.02,
            ..GenConfig::default()
        };
        assert_eq!(generate_scene(&cfg, 7).unwrap(), generate_scene(&cfg, 7).unwrap());
        assert_ne!(
            generate_scene(&cfg, 7).unwrap().grid,
            generate_scene(&cfg, 8).unwrap().grid
        );
    }

    #[test]
    fn infeasible_density_fails() {
        let cfg = GenConfig {
            rooms: 1,
            room_size: 5,
            objects: 100,
            density: 0.99,
            ..GenConfig::default()
        };
        assert!(matches!(generate_scene(&cfg, 1), Err(GridError::Generation { .. })));
    }

    #[test]
    fn density_bounds_are_validated() {
        for density in [0.0, 1.0, -0.5] {
            let cfg = GenConfig {
                density,
                ..GenConfig::default()
            };
            assert!(matches!(generate_scene(&cfg, 1), Err(GridError::Validation(_))));
        }
    }

    #[test]
    fn episodes_validate_against_their_scene() {
        let scene = generate_scene(&GenConfig::multion(), 11).unwrap();
        for task in TaskKind::ALL {
            for ep in generate_episodes(&scene, task, 5, 3).unwrap() {
                ep.validate(&scene).unwrap();
                if task == TaskKind::Goat {
                    assert!((5..=10).contains(&ep.goals.len()));
                }
                if task == TaskKind::Multion {
                    assert_eq!(ep.goals.len(), 3);
                }
            }
        }
    }
}
