use std::collections::{BTreeMap, VecDeque};

use rand::seq::SliceRandom;
use rand::Rng as _;
use serde::{Deserialize, Serialize};

use crate::model::{Bounds, Cell, Footprint, ObjectInstance, OccupancyGrid, Scene, SceneKind, WorldPose};
use crate::rng::{seeded, Rng};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct FloorplanParams {
    pub side_m: f64,
    pub cells: usize,
    /// Probability of a door on a wall that the spanning tree did not use.
    pub extra_door_prob: f64,
}

impl Default for FloorplanParams {
    fn default() -> Self {
        Self { side_m: 14.0, cells: 100, extra_door_prob: 0.25 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Placement {
    Wall,
    Free,
}

#[derive(Debug, Clone, Copy)]
struct Furniture {
    category: &'static str,
    w: f64,
    h: f64,
    count: (u32, u32),
    placement: Placement,
}

const fn f(category: &'static str, w: f64, h: f64, lo: u32, hi: u32, placement: Placement) -> Furniture {
    Furniture { category, w, h, count: (lo, hi), placement }
}

use Placement::{Free, Wall};

fn furniture_for(room: &str) -> &'static [Furniture] {
    match room {
        "kitchen" => {
            const L: &[Furniture] = &[
                f("fridge", 0.8, 0.7, 1, 1, Wall),
                f("oven", 0.7, 0.6, 1, 1, Wall),
                f("sink", 0.8, 0.6, 1, 1, Wall),
                f("dining_table", 1.2, 0.8, 0, 1, Free),
                f("chair", 0.45, 0.45, 0, 2, Free),
                f("plant", 0.4, 0.4, 0, 1, Wall),
            ];
            L
        }
        "living_room" => {
            const L: &[Furniture] = &[
                f("couch", 2.0, 0.9, 1, 1, Wall),
                f("tv", 1.2, 0.4, 1, 1, Wall),
                f("armchair", 0.8, 0.8, 1, 2, Free),
                f("coffee_table", 1.0, 0.6, 0, 1, Free),
                f("plant", 0.4, 0.4, 0, 2, Wall),
            ];
            L
        }
        "bedroom" => {
            const L: &[Furniture] = &[
                f("bed", 1.6, 2.0, 1, 1, Wall),
                f("nightstand", 0.5, 0.4, 0, 2, Wall),
                f("wardrobe", 1.2, 0.6, 0, 1, Wall),
                f("plant", 0.4, 0.4, 0, 1, Wall),
            ];
            L
        }
        "bathroom" => {
            const L: &[Furniture] = &[
                f("toilet", 0.5, 0.7, 1, 1, Wall),
                f("bathtub", 1.6, 0.8, 0, 1, Wall),
                f("sink", 0.8, 0.6, 1, 1, Wall),
            ];
            L
        }
        "dining_room" => {
            const L: &[Furniture] = &[
                f("dining_table", 1.6, 0.9, 1, 1, Free),
                f("chair", 0.45, 0.45, 2, 4, Free),
                f("plant", 0.4, 0.4, 0, 1, Wall),
            ];
            L
        }
        "office" => {
            const L: &[Furniture] = &[
                f("desk", 1.4, 0.7, 1, 1, Wall),
                f("chair", 0.45, 0.45, 1, 1, Free),
                f("bookshelf", 1.0, 0.4, 1, 1, Wall),
                f("plant", 0.4, 0.4, 0, 1, Wall),
            ];
            L
        }
        _ => {
            const L: &[Furniture] = &[f("shoe_rack", 0.8, 0.4, 0, 1, Wall), f("plant", 0.4, 0.4, 0, 1, Wall)];
            L
        }
    }
}

const ROOM_TYPES: [&str; 9] = [
    "kitchen",
    "living_room",
    "bedroom",
    "bedroom",
    "bathroom",
    "dining_room",
    "office",
    "hallway",
    "bedroom",
];

/// Axis-aligned room interior in cells, inclusive.
#[derive(Debug, Clone, Copy)]
struct Room {
    c0: usize,
    c1: usize,
    r0: usize,
    r1: usize,
}

/// Procedural 3x3-room floorplan with doors, room-typed furniture and a
/// single connected free space. Furniture is rasterized into the grid.
pub fn generate_floorplan(id: &str, params: &FloorplanParams, seed: u64) -> Scene {
    let mut rng = seeded(seed);
    let n = params.cells;
    let bounds = Bounds::square(params.side_m);
    let mut grid = OccupancyGrid::covering(&bounds, n, n).expect("square grid");
    let res = grid.resolution();

    for i in 0..n {
        for c in [Cell::new(i, 0), Cell::new(i, n - 1), Cell::new(0, i), Cell::new(n - 1, i)] {
            grid.set_obstacle(c, true);
        }
    }
    let third = n / 3;
    let jitter = (n / 14).max(1);
    let v = [
        third + rng.random_range(0..=2 * jitter) - jitter,
        2 * third + rng.random_range(0..=2 * jitter) - jitter,
    ];
    let h = [
        third + rng.random_range(0..=2 * jitter) - jitter,
        2 * third + rng.random_range(0..=2 * jitter) - jitter,
    ];
    for &col in &v {
        for r in 0..n {
            grid.set_obstacle(Cell::new(col, r), true);
        }
    }
    for &row in &h {
        for c in 0..n {
            grid.set_obstacle(Cell::new(c, row), true);
        }
    }
    let cuts_c = [0, v[0], v[1], n - 1];
    let cuts_r = [0, h[0], h[1], n - 1];
    let rooms: Vec<Room> = (0..9)
        .map(|k| {
            let (i, j) = (k % 3, k / 3);
            Room { c0: cuts_c[i] + 1, c1: cuts_c[i + 1] - 1, r0: cuts_r[j] + 1, r1: cuts_r[j + 1] - 1 }
        })
        .collect();

    // doors: random spanning tree over room adjacency plus a few extras
    let mut edges: Vec<(usize, usize)> = Vec::new();
    for k in 0..9 {
        if k % 3 < 2 {
            edges.push((k, k + 1));
        }
        if k / 3 < 2 {
            edges.push((k, k + 3));
        }
    }
    edges.shuffle(&mut rng);
    let mut parent: Vec<usize> = (0..9).collect();
    fn find(p: &mut [usize], x: usize) -> usize {
        let mut r = x;
        while p[r] != r {
            r = p[r];
        }
        p[x] = r;
        r
    }
    let door_w = ((0.9 / res).round() as usize).max(2);
    let mut doors: Vec<Cell> = Vec::new();
    for (a, b) in edges {
        let (ra, rb) = (find(&mut parent, a), find(&mut parent, b));
        let tree_edge = ra != rb;
        if tree_edge {
            parent[ra] = rb;
        } else if !rng.random_bool(params.extra_door_prob) {
            continue;
        }
        let (ra, rb) = (rooms[a], rooms[b]);
        if b == a + 1 {
            let col = ra.c1 + 1;
            let lo = ra.r0.max(rb.r0) + 2;
            let hi = ra.r1.min(rb.r1).saturating_sub(door_w + 1);
            let start = if hi > lo { rng.random_range(lo..hi) } else { lo };
            for r in start..start + door_w {
                grid.set_obstacle(Cell::new(col, r), false);
            }
            doors.push(Cell::new(col, start + door_w / 2));
        } else {
            let row = ra.r1 + 1;
            let lo = ra.c0.max(rb.c0) + 2;
            let hi = ra.c1.min(rb.c1).saturating_sub(door_w + 1);
            let start = if hi > lo { rng.random_range(lo..hi) } else { lo };
            for c in start..start + door_w {
                grid.set_obstacle(Cell::new(c, row), false);
            }
            doors.push(Cell::new(start + door_w / 2, row));
        }
    }

    let mut types = ROOM_TYPES;
    types.shuffle(&mut rng);
    let mut scene = Scene::new(id, SceneKind::Floorplan, bounds);
    let mut counters: BTreeMap<&str, usize> = BTreeMap::new();
    let door_clear = (1.0 / res).ceil() as i64;
    for (room, kind) in rooms.iter().zip(types) {
        for item in furniture_for(kind) {
            let count = rng.random_range(item.count.0..=item.count.1);
            for _ in 0..count {
                if let Some(pose) = place_furniture(&grid, room, item, &doors, door_clear, &mut rng) {
                    let k = counters.entry(item.category).or_default();
                    *k += 1;
                    let obj = ObjectInstance::new(
                        format!("{}_{}", item.category, k),
                        item.category,
                        Footprint::rect(item.w, item.h),
                        pose,
                    )
                    .fixed();
                    for c in super::env::covered_cells(&grid, &obj) {
                        grid.set_obstacle(c, true);
                    }
                    scene.objects.push(obj);
                }
            }
        }
    }
    keep_largest_component(&mut grid);
    scene.occupancy = Some(grid);
    scene
}

fn place_furniture(
    grid: &OccupancyGrid,
    room: &Room,
    item: &Furniture,
    doors: &[Cell],
    door_clear: i64,
    rng: &mut Rng,
) -> Option<WorldPose> {
    let res = grid.resolution();
    let origin = grid.origin();
    let (x0, x1) = (origin[0] + room.c0 as f64 * res, origin[0] + (room.c1 + 1) as f64 * res);
    let (y0, y1) = (origin[1] + room.r0 as f64 * res, origin[1] + (room.r1 + 1) as f64 * res);
    for _ in 0..60 {
        let rotated = rng.random_bool(0.5);
        let (w, h) = if rotated { (item.h, item.w) } else { (item.w, item.h) };
        if w + 0.2 > x1 - x0 || h + 0.2 > y1 - y0 {
            continue;
        }
        let (cx, cy) = match item.placement {
            Placement::Wall => match rng.random_range(0..4) {
                0 => (rng.random_range(x0 + w / 2.0..=x1 - w / 2.0), y0 + h / 2.0 + 0.02),
                1 => (rng.random_range(x0 + w / 2.0..=x1 - w / 2.0), y1 - h / 2.0 - 0.02),
                2 => (x0 + w / 2.0 + 0.02, rng.random_range(y0 + h / 2.0..=y1 - h / 2.0)),
                _ => (x1 - w / 2.0 - 0.02, rng.random_range(y0 + h / 2.0..=y1 - h / 2.0)),
            },
            Placement::Free => (
                rng.random_range(x0 + w / 2.0 + 0.6..=(x1 - w / 2.0 - 0.6).max(x0 + w / 2.0 + 0.6)),
                rng.random_range(y0 + h / 2.0 + 0.6..=(y1 - h / 2.0 - 0.6).max(y0 + h / 2.0 + 0.6)),
            ),
        };
        // heading 0 with swapped extents keeps the footprint axis aligned
        let heading = if rotated { std::f64::consts::FRAC_PI_2 } else { 0.0 };
        let pose = WorldPose::new(cx, cy, heading);
        let probe = ObjectInstance::new("probe", item.category, Footprint::rect(item.w, item.h), pose);
        let cells = super::env::covered_cells(grid, &probe);
        let pad = (0.3 / res).ceil() as i64;
        let blocked = cells.iter().any(|c| {
            let near_door = doors
                .iter()
                .any(|d| (d.col as i64 - c.col as i64).abs() <= door_clear && (d.row as i64 - c.row as i64).abs() <= door_clear);
            // keep a walkway around each piece: nothing but walls within `pad`
            let crowded = (-pad..=pad).any(|dr| {
                (-pad..=pad).any(|dc| {
                    let (cc, rr) = (c.col as i64 + dc, c.row as i64 + dr);
                    grid.in_grid(cc, rr) && {
                        let n = Cell::new(cc as usize, rr as usize);
                        grid.is_obstacle(n) && inside_room(room, n)
                    }
                })
            });
            near_door || crowded
        });
        if !blocked && !cells.is_empty() {
            return Some(pose);
        }
    }
    None
}

fn inside_room(room: &Room, c: Cell) -> bool {
    (room.c0..=room.c1).contains(&c.col) && (room.r0..=room.r1).contains(&c.row)
}

/// Turns every free cell outside the largest 4-connected component into an
/// obstacle so that all free space is mutually reachable.
fn keep_largest_component(grid: &mut OccupancyGrid) {
    let mut label = vec![usize::MAX; grid.len()];
    let mut sizes = Vec::new();
    let cells: Vec<Cell> = grid.free_cells().collect();
    for start in cells {
        if label[grid.index(start)] != usize::MAX {
            continue;
        }
        let id = sizes.len();
        let mut size = 0;
        let mut q = VecDeque::from([start]);
        label[grid.index(start)] = id;
        while let Some(c) = q.pop_front() {
            size += 1;
            for (nb, diag) in grid.neighbors8(c) {
                if diag || grid.is_obstacle(nb) || label[grid.index(nb)] != usize::MAX {
                    continue;
                }
                label[grid.index(nb)] = id;
                q.push_back(nb);
            }
        }
        sizes.push(size);
    }
    let Some(best) = (0..sizes.len()).max_by_key(|&i| (sizes[i], std::cmp::Reverse(i))) else { return };
    let all: Vec<Cell> = grid.free_cells().collect();
    for c in all {
        if label[grid.index(c)] != best {
            grid.set_obstacle(c, true);
        }
    }
}
