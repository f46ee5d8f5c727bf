//! Poisson obstacle fields and their uniform-grid broad phase.

use std::cell::RefCell;
use std::collections::HashMap;

use rand::{Rng, SeedableRng};
use rand_distr::{Distribution, Poisson};

use crate::geometry::{Aabb, Vec2};
use crate::rng::{derive_seed, StreamRng};
use crate::{Error, Result};

/// Default refusal threshold for eagerly sampled fields.
pub const DEFAULT_MEMORY_CAP: usize = 50_000_000;

/// Obstacle intensity μ_ε = μ·ε^{−(1+2α)}.
pub fn obstacle_intensity(mu: f64, epsilon: f64, alpha: f64) -> f64 {
    mu * epsilon.powf(-(1.0 + 2.0 * alpha))
}

/// Uniform grid geometry. Cell `(ix, iy)` covers
/// `[origin + ix·cell, origin + (ix+1)·cell)` in each axis.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Grid {
    pub origin: Vec2,
    pub cell: f64,
    /// Cell counts per axis for bounded grids.
    pub extent: Option<(i64, i64)>,
}

impl Grid {
    #[inline]
    pub fn cell_of(&self, p: Vec2) -> (i64, i64) {
        (
            ((p.x - self.origin.x) / self.cell).floor() as i64,
            ((p.y - self.origin.y) / self.cell).floor() as i64,
        )
    }

    #[inline]
    pub fn in_range(&self, ix: i64, iy: i64) -> bool {
        match self.extent {
            Some((nx, ny)) => ix >= 0 && iy >= 0 && ix < nx && iy < ny,
            None => true,
        }
    }
}

/// Cell size rule: at least one disk diameter, otherwise about one obstacle
/// per cell.
pub fn cell_size(radius: f64, intensity: f64) -> f64 {
    let typical = if intensity > 0.0 {
        1.0 / intensity.sqrt()
    } else {
        f64::INFINITY
    };
    (2.0 * radius).max(typical.min(1e6 * radius.max(1e-300)))
}

/// Broad-phase access to a set of equal disks.
///
/// Every disk whose centre lies in cell `(ix, iy)` is reported by
/// `visit_cell(ix, iy, ..)`; since cells are at least one diameter wide, a
/// disk touching a point is always found in the 3×3 block around the point's
/// cell.
pub trait ObstacleSource {
    fn radius(&self) -> f64;
    fn grid(&self) -> Grid;
    /// Region the trajectory must stay in, if the source is bounded.
    fn domain(&self) -> Option<Aabb>;
    fn visit_cell(&self, ix: i64, iy: i64, f: &mut dyn FnMut(u32, Vec2));
    fn center(&self, id: u32) -> Vec2;
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FieldConfig {
    /// μ_ε, obstacles per unit area.
    pub intensity: f64,
    pub domain: Aabb,
    /// Disk radius ε.
    pub radius: f64,
    pub memory_cap: usize,
}

impl FieldConfig {
    pub fn new(intensity: f64, domain: Aabb, radius: f64) -> Self {
        FieldConfig {
            intensity,
            domain,
            radius,
            memory_cap: DEFAULT_MEMORY_CAP,
        }
    }

    pub fn expected_count(&self) -> f64 {
        self.intensity * self.domain.area()
    }
}

/// A sampled configuration with a compressed-row cell index.
#[derive(Debug, Clone)]
pub struct ObstacleField {
    centers: Vec<Vec2>,
    radius: f64,
    intensity: f64,
    domain: Aabb,
    grid: Grid,
    cell_start: Vec<u32>,
    cell_items: Vec<u32>,
}

/// Draws N ~ Poisson(μ_ε|Λ|) centres uniformly on Λ.
pub fn sample_field<R: Rng + ?Sized>(config: &FieldConfig, rng: &mut R) -> Result<ObstacleField> {
    if !(config.intensity >= 0.0) || !(config.radius > 0.0) {
        return Err(Error::domain("field intensity must be nonnegative and radius positive"));
    }
    let mean = config.expected_count();
    if mean > config.memory_cap as f64 {
        return Err(Error::MemoryCap {
            expected: mean,
            cap: config.memory_cap,
        });
    }
    let count = if mean > 0.0 {
        let p = Poisson::new(mean).map_err(|e| Error::domain(e.to_string()))?;
        p.sample(rng) as usize
    } else {
        0
    };
    let d = config.domain;
    let centers = (0..count)
        .map(|_| {
            Vec2::new(
                d.min.x + rng.random::<f64>() * d.width(),
                d.min.y + rng.random::<f64>() * d.height(),
            )
        })
        .collect();
    Ok(ObstacleField::from_centers(centers, config.radius, config.intensity, d))
}

impl ObstacleField {
    pub fn from_centers(centers: Vec<Vec2>, radius: f64, intensity: f64, domain: Aabb) -> Self {
        let cell = cell_size(radius, intensity.max(centers.len() as f64 / domain.area().max(1e-300)));
        Self::with_cell(centers, radius, intensity, domain, cell)
    }

    fn with_cell(centers: Vec<Vec2>, radius: f64, intensity: f64, domain: Aabb, cell: f64) -> Self {
        let nx = ((domain.width() / cell).ceil() as i64).max(1);
        let ny = ((domain.height() / cell).ceil() as i64).max(1);
        let grid = Grid {
            origin: domain.min,
            cell,
            extent: Some((nx, ny)),
        };
        let ncell = (nx * ny) as usize;
        let slot = |c: Vec2| -> usize {
            let (ix, iy) = grid.cell_of(c);
            (iy.clamp(0, ny - 1) * nx + ix.clamp(0, nx - 1)) as usize
        };
        let mut cell_start = vec![0u32; ncell + 1];
        for &c in &centers {
            cell_start[slot(c) + 1] += 1;
        }
        for i in 0..ncell {
            cell_start[i + 1] += cell_start[i];
        }
        let mut fill = cell_start.clone();
        let mut cell_items = vec![0u32; centers.len()];
        for (i, &c) in centers.iter().enumerate() {
            let s = slot(c);
            cell_items[fill[s] as usize] = i as u32;
            fill[s] += 1;
        }
        ObstacleField {
            centers,
            radius,
            intensity,
            domain,
            grid,
            cell_start,
            cell_items,
        }
    }

    pub fn centers(&self) -> &[Vec2] {
        &self.centers
    }

    pub fn len(&self) -> usize {
        self.centers.len()
    }

    pub fn is_empty(&self) -> bool {
        self.centers.is_empty()
    }

    pub fn intensity(&self) -> f64 {
        self.intensity
    }

    pub fn domain_box(&self) -> Aabb {
        self.domain
    }

    /// The same field with a single cell: every query scans every disk.
    pub fn brute_force(&self) -> ObstacleField {
        let cell = self.domain.width().max(self.domain.height()) * (1.0 + 1e-9) + 2.0 * self.radius;
        Self::with_cell(self.centers.clone(), self.radius, self.intensity, self.domain, cell)
    }
}

impl ObstacleSource for ObstacleField {
    fn radius(&self) -> f64 {
        self.radius
    }

    fn grid(&self) -> Grid {
        self.grid
    }

    fn domain(&self) -> Option<Aabb> {
        Some(self.domain)
    }

    fn visit_cell(&self, ix: i64, iy: i64, f: &mut dyn FnMut(u32, Vec2)) {
        if !self.grid.in_range(ix, iy) {
            return;
        }
        let (nx, _) = self.grid.extent.expect("bounded grid");
        let s = (iy * nx + ix) as usize;
        for &id in &self.cell_items[self.cell_start[s] as usize..self.cell_start[s + 1] as usize] {
            f(id, self.centers[id as usize]);
        }
    }

    fn center(&self, id: u32) -> Vec2 {
        self.centers[id as usize]
    }
}

/// A Poisson field on the whole plane, generated cell by cell on first touch.
///
/// Each cell draws its own Poisson count and positions from a generator keyed
/// by `(seed, cell)`, so the configuration does not depend on the order in
/// which cells are visited. Intended for one trajectory at a time.
#[derive(Debug)]
pub struct LazyPoissonField {
    radius: f64,
    grid: Grid,
    seed: u64,
    per_cell: Option<Poisson<f64>>,
    cache: RefCell<LazyCache>,
}

#[derive(Debug, Default)]
struct LazyCache {
    cells: HashMap<(i64, i64), (u32, u32)>,
    centers: Vec<Vec2>,
}

impl LazyPoissonField {
    pub fn new(intensity: f64, radius: f64, seed: u64) -> Result<Self> {
        if !(intensity >= 0.0) || !(radius > 0.0) {
            return Err(Error::domain("field intensity must be nonnegative and radius positive"));
        }
        let cell = cell_size(radius, intensity);
        let mean = intensity * cell * cell;
        let per_cell = if mean > 0.0 {
            Some(Poisson::new(mean).map_err(|e| Error::domain(e.to_string()))?)
        } else {
            None
        };
        Ok(LazyPoissonField {
            radius,
            grid: Grid {
                origin: Vec2::ZERO,
                cell,
                extent: None,
            },
            seed,
            per_cell,
            cache: RefCell::new(LazyCache::default()),
        })
    }

    /// Number of obstacles materialised so far.
    pub fn generated(&self) -> usize {
        self.cache.borrow().centers.len()
    }

    fn materialise(&self, ix: i64, iy: i64) -> (u32, u32) {
        let mut cache = self.cache.borrow_mut();
        if let Some(&r) = cache.cells.get(&(ix, iy)) {
            return r;
        }
        let start = cache.centers.len() as u32;
        if let Some(p) = &self.per_cell {
            let key = ((ix as u32 as u64) << 32) | (iy as u32 as u64);
            let mut rng = StreamRng::seed_from_u64(derive_seed(self.seed, key));
            let n = p.sample(&mut rng) as usize;
            let h = self.grid.cell;
            let x0 = self.grid.origin.x + ix as f64 * h;
            let y0 = self.grid.origin.y + iy as f64 * h;
            for _ in 0..n {
                let c = Vec2::new(x0 + rng.random::<f64>() * h, y0 + rng.random::<f64>() * h);
                cache.centers.push(c);
            }
        }
        let r = (start, cache.centers.len() as u32 - start);
        cache.cells.insert((ix, iy), r);
        r
    }
}

impl ObstacleSource for LazyPoissonField {
    fn radius(&self) -> f64 {
        self.radius
    }

    fn grid(&self) -> Grid {
        self.grid
    }

    fn domain(&self) -> Option<Aabb> {
        None
    }

    fn visit_cell(&self, ix: i64, iy: i64, f: &mut dyn FnMut(u32, Vec2)) {
        let (start, len) = self.materialise(ix, iy);
        for id in start..start + len {
            let c = self.cache.borrow().centers[id as usize];
            f(id, c);
        }
    }

    fn center(&self, id: u32) -> Vec2 {
        self.cache.borrow().centers[id as usize]
    }
}
