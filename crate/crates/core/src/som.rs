//! Self-organizing map training and featuremap grid layouts.

use std::collections::HashMap;
use std::fmt;
use std::str::FromStr;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::catalog::ItemKey;
use crate::features::{FeatureKind, FeatureVector};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum SomError {
    #[error("no input vectors")]
    Empty,
    #[error("vector has {found} dims, map expects {expected}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("{items} items do not fit into {cells} cells")]
    Capacity { items: usize, cells: usize },
    #[error("invalid SOM parameters: {0}")]
    InvalidParams(String),
    #[error("layout mode {0} is not an ordering mode")]
    NotAnOrdering(LayoutMode),
}

/// Grid dimensions; cells are numbered row-major.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct GridShape {
    pub width: u32,
    pub height: u32,
}

impl GridShape {
    /// Near-square grid for `n` items: `W = ceil(sqrt(n))`, `H = ceil(n / W)`.
    pub fn for_items(n: usize) -> Self {
        let n = n.max(1);
        let mut w = (n as f64).sqrt().ceil() as usize;
        // Guard against sqrt rounding on large perfect squares.
        while w * w < n {
            w += 1;
        }
        while w > 1 && (w - 1) * (w - 1) >= n {
            w -= 1;
        }
        let h = n.div_ceil(w);
        GridShape {
            width: w as u32,
            height: h as u32,
        }
    }

    pub fn cells(&self) -> usize {
        self.width as usize * self.height as usize
    }

    pub fn coords(&self, cell: usize) -> (u32, u32) {
        (
            (cell % self.width as usize) as u32,
            (cell / self.width as usize) as u32,
        )
    }

    /// Squared Euclidean distance between two cells' grid coordinates.
    pub fn grid_distance_sq(&self, a: usize, b: usize) -> f64 {
        let (ax, ay) = self.coords(a);
        let (bx, by) = self.coords(b);
        let dx = f64::from(ax) - f64::from(bx);
        let dy = f64::from(ay) - f64::from(by);
        dx * dx + dy * dy
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SomParams {
    pub epochs: u32,
    pub eta0: f64,
    pub eta_final: f64,
    /// Initial neighbourhood radius; `None` means `max(W, H) / 2`.
    pub sigma0: Option<f64>,
    pub sigma_final: f64,
    pub seed: u64,
}

impl Default for SomParams {
    fn default() -> Self {
        SomParams {
            epochs: 40,
            eta0: 0.5,
            eta_final: 0.01,
            sigma0: None,
            sigma_final: 0.5,
            seed: 0,
        }
    }
}

impl SomParams {
    pub fn with_seed(seed: u64) -> Self {
        SomParams {
            seed,
            ..Self::default()
        }
    }

    /// Checks the parameter invariants and resolves the initial radius for `shape`.
    fn resolve_sigma0(&self, shape: GridShape) -> Result<f64, SomError> {
        let bad = |m: String| Err(SomError::InvalidParams(m));
        if self.epochs == 0 {
            return bad("epochs must be positive".into());
        }
        if !(self.eta_final > 0.0 && self.eta_final <= self.eta0 && self.eta0 <= 1.0) {
            return bad(format!(
                "need 0 < etaF <= eta0 <= 1, got etaF={} eta0={}",
                self.eta_final, self.eta0
            ));
        }
        let sigma0 = self
            .sigma0
            .unwrap_or(f64::from(shape.width.max(shape.height)) / 2.0);
        if !(self.sigma_final > 0.0 && self.sigma_final <= sigma0) {
            return bad(format!(
                "need 0 < sigmaF <= sigma0, got sigmaF={} sigma0={sigma0}",
                self.sigma_final
            ));
        }
        Ok(sigma0)
    }
}

/// Exponential decay from `start` to `end` over `epochs` steps.
pub fn decay(start: f64, end: f64, epoch: u32, epochs: u32) -> f64 {
    if epochs <= 1 {
        return start;
    }
    start * (end / start).powf(f64::from(epoch) / f64::from(epochs - 1))
}

/// A trained map: one weight vector per cell.
#[derive(Clone, Debug, PartialEq)]
pub struct SomGrid {
    shape: GridShape,
    dims: usize,
    weights: Vec<f64>,
    trained_with: FeatureKind,
}

impl SomGrid {
    /// A map with explicit weights, one row per cell in row-major order.
    pub fn from_weights(
        shape: GridShape,
        weights: Vec<Vec<f64>>,
        trained_with: FeatureKind,
    ) -> Result<Self, SomError> {
        if weights.len() != shape.cells() {
            return Err(SomError::Capacity {
                items: weights.len(),
                cells: shape.cells(),
            });
        }
        let dims = weights.first().map_or(0, Vec::len);
        if dims == 0 {
            return Err(SomError::Empty);
        }
        if let Some(w) = weights.iter().find(|w| w.len() != dims) {
            return Err(SomError::DimensionMismatch {
                expected: dims,
                found: w.len(),
            });
        }
        Ok(SomGrid {
            shape,
            dims,
            weights: weights.concat(),
            trained_with,
        })
    }

    pub fn shape(&self) -> GridShape {
        self.shape
    }

    pub fn dims(&self) -> usize {
        self.dims
    }

    pub fn trained_with(&self) -> FeatureKind {
        self.trained_with
    }

    pub fn unit(&self, cell: usize) -> &[f64] {
        &self.weights[cell * self.dims..(cell + 1) * self.dims]
    }

    /// Best-matching unit and its squared distance; ties go to the lowest cell.
    pub fn bmu_of(&self, v: &[f64]) -> Result<(usize, f64), SomError> {
        if v.len() != self.dims {
            return Err(SomError::DimensionMismatch {
                expected: self.dims,
                found: v.len(),
            });
        }
        let mut best = (0, f64::INFINITY);
        for cell in 0..self.shape.cells() {
            let d = sq_dist(self.unit(cell), v);
            if d < best.1 {
                best = (cell, d);
            }
        }
        Ok(best)
    }
}

fn sq_dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

fn to_f64(v: &FeatureVector) -> Vec<f64> {
    v.values().iter().map(|&x| f64::from(x)).collect()
}

pub fn bmu(grid: &SomGrid, v: &FeatureVector) -> Result<usize, SomError> {
    grid.bmu_of(&to_f64(v)).map(|(cell, _)| cell)
}

/// Online Kohonen trainer that can be advanced one epoch at a time.
pub struct SomTrainer {
    grid: SomGrid,
    inputs: Vec<Vec<f64>>,
    params: SomParams,
    sigma0: f64,
    rng: ChaCha8Rng,
    order: Vec<usize>,
    epoch: u32,
}

impl SomTrainer {
    /// Sets up training on a near-square grid for the input count, with
    /// unit weights drawn from the inputs by the seeded generator.
    pub fn new(vectors: &[FeatureVector], params: SomParams) -> Result<Self, SomError> {
        let shape = GridShape::for_items(vectors.len());
        Self::with_shape(vectors, params, shape)
    }

    pub fn with_shape(
        vectors: &[FeatureVector],
        params: SomParams,
        shape: GridShape,
    ) -> Result<Self, SomError> {
        let (inputs, kind) = check_inputs(vectors)?;
        let sigma0 = params.resolve_sigma0(shape)?;
        let mut rng = ChaCha8Rng::seed_from_u64(params.seed);
        let weights: Vec<Vec<f64>> = (0..shape.cells())
            .map(|_| inputs[rng.random_range(0..inputs.len())].clone())
            .collect();
        let grid = SomGrid::from_weights(shape, weights, kind)?;
        Ok(Self::assemble(grid, inputs, params, sigma0, rng))
    }

    /// Starts from caller-provided weights instead of sampled inputs.
    pub fn with_initial_grid(
        grid: SomGrid,
        vectors: &[FeatureVector],
        params: SomParams,
    ) -> Result<Self, SomError> {
        let (inputs, _) = check_inputs(vectors)?;
        if inputs[0].len() != grid.dims {
            return Err(SomError::DimensionMismatch {
                expected: grid.dims,
                found: inputs[0].len(),
            });
        }
        let sigma0 = params.resolve_sigma0(grid.shape)?;
        let rng = ChaCha8Rng::seed_from_u64(params.seed);
        Ok(Self::assemble(grid, inputs, params, sigma0, rng))
    }

    fn assemble(
        grid: SomGrid,
        inputs: Vec<Vec<f64>>,
        params: SomParams,
        sigma0: f64,
        rng: ChaCha8Rng,
    ) -> Self {
        let order = (0..inputs.len()).collect();
        SomTrainer {
            grid,
            inputs,
            params,
            sigma0,
            rng,
            order,
            epoch: 0,
        }
    }

    pub fn epoch(&self) -> u32 {
        self.epoch
    }

    pub fn is_done(&self) -> bool {
        self.epoch >= self.params.epochs
    }

    pub fn learning_rate(&self, epoch: u32) -> f64 {
        decay(
            self.params.eta0,
            self.params.eta_final,
            epoch,
            self.params.epochs,
        )
    }

    pub fn radius(&self, epoch: u32) -> f64 {
        decay(
            self.sigma0,
            self.params.sigma_final,
            epoch,
            self.params.epochs,
        )
    }

    /// Runs one epoch; returns `false` once all epochs are spent.
    pub fn step_epoch(&mut self) -> bool {
        if self.is_done() {
            return false;
        }
        let eta = self.learning_rate(self.epoch);
        let sigma = self.radius(self.epoch);
        let two_sigma_sq = 2.0 * sigma * sigma;
        let shape = self.grid.shape;
        let dims = self.grid.dims;
        self.order.shuffle(&mut self.rng);
        for &i in &self.order {
            let x = &self.inputs[i];
            let (b, _) = self.grid.bmu_of(x).expect("dims checked at construction");
            for u in 0..shape.cells() {
                let h = (-shape.grid_distance_sq(u, b) / two_sigma_sq).exp();
                let rate = eta * h;
                let w = &mut self.grid.weights[u * dims..(u + 1) * dims];
                for (wj, xj) in w.iter_mut().zip(x) {
                    *wj += rate * (xj - *wj);
                }
            }
        }
        self.epoch += 1;
        true
    }

    pub fn grid(&self) -> &SomGrid {
        &self.grid
    }

    pub fn finish(mut self) -> SomGrid {
        while self.step_epoch() {}
        self.grid
    }
}

fn check_inputs(vectors: &[FeatureVector]) -> Result<(Vec<Vec<f64>>, FeatureKind), SomError> {
    let first = vectors.first().ok_or(SomError::Empty)?;
    if let Some(v) = vectors.iter().find(|v| v.dims() != first.dims()) {
        return Err(SomError::DimensionMismatch {
            expected: first.dims(),
            found: v.dims(),
        });
    }
    Ok((vectors.iter().map(to_f64).collect(), first.kind()))
}

/// Trains a map sized for the input count. Deterministic given the seed.
pub fn train_som(
    vectors: &[(ItemKey, FeatureVector)],
    params: SomParams,
) -> Result<SomGrid, SomError> {
    let vs: Vec<FeatureVector> = vectors.iter().map(|(_, v)| v.clone()).collect();
    Ok(SomTrainer::new(&vs, params)?.finish())
}

/// Mean Euclidean distance from each vector to its best-matching unit.
pub fn quantization_error(grid: &SomGrid, vectors: &[FeatureVector]) -> Result<f64, SomError> {
    if vectors.is_empty() {
        return Err(SomError::Empty);
    }
    let mut total = 0.0;
    for v in vectors {
        total += grid.bmu_of(&to_f64(v))?.1.sqrt();
    }
    Ok(total / vectors.len() as f64)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum LayoutMode {
    Som,
    Confidence,
    Video,
}

impl fmt::Display for LayoutMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            LayoutMode::Som => "som",
            LayoutMode::Confidence => "confidence",
            LayoutMode::Video => "video",
        })
    }
}

impl FromStr for LayoutMode {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "som" => Ok(LayoutMode::Som),
            "confidence" => Ok(LayoutMode::Confidence),
            "video" => Ok(LayoutMode::Video),
            other => Err(format!(
                "unknown organization {other:?}, expected som, confidence or video"
            )),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Cell {
    pub cell: usize,
    pub item: ItemKey,
}

/// Placement of items onto grid cells, listed by ascending cell index.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GridLayout {
    pub mode: LayoutMode,
    pub width: u32,
    pub height: u32,
    pub cells: Vec<Cell>,
}

impl GridLayout {
    fn from_assignment(mode: LayoutMode, shape: GridShape, mut cells: Vec<Cell>) -> Self {
        cells.sort_by_key(|c| c.cell);
        GridLayout {
            mode,
            width: shape.width,
            height: shape.height,
            cells,
        }
    }

    pub fn shape(&self) -> GridShape {
        GridShape {
            width: self.width,
            height: self.height,
        }
    }

    pub fn item_at(&self, cell: usize) -> Option<&ItemKey> {
        self.cells
            .binary_search_by_key(&cell, |c| c.cell)
            .ok()
            .map(|i| &self.cells[i].item)
    }
}

/// Places each item on its best-matching unit, resolving collisions greedily.
///
/// Items go in order of (BMU distance, canonical key); an item whose BMU is
/// taken moves to the nearest free cell on the grid, lowest index on ties.
pub fn assign_unique_cells(
    grid: &SomGrid,
    items: &[(ItemKey, FeatureVector)],
) -> Result<GridLayout, SomError> {
    let shape = grid.shape;
    if items.len() > shape.cells() {
        return Err(SomError::Capacity {
            items: items.len(),
            cells: shape.cells(),
        });
    }
    let mut ranked = Vec::with_capacity(items.len());
    for (key, v) in items {
        let (cell, d) = grid.bmu_of(&to_f64(v))?;
        ranked.push((d, key, cell));
    }
    ranked.sort_by(|a, b| a.0.total_cmp(&b.0).then_with(|| a.1.cmp(b.1)));

    let mut taken = vec![false; shape.cells()];
    let mut cells = Vec::with_capacity(items.len());
    for (_, key, bmu_cell) in ranked {
        let cell = if !taken[bmu_cell] {
            bmu_cell
        } else {
            (0..shape.cells())
                .filter(|&c| !taken[c])
                .min_by(|&a, &b| {
                    shape
                        .grid_distance_sq(a, bmu_cell)
                        .total_cmp(&shape.grid_distance_sq(b, bmu_cell))
                        .then(a.cmp(&b))
                })
                .expect("capacity checked")
        };
        taken[cell] = true;
        cells.push(Cell {
            cell,
            item: key.clone(),
        });
    }
    Ok(GridLayout::from_assignment(LayoutMode::Som, shape, cells))
}

/// An item to be placed by a non-SOM ordering.
#[derive(Clone, Debug, PartialEq)]
pub struct LayoutItem {
    pub key: ItemKey,
    pub score: f64,
}

/// Row-major placement by score (descending) or by video affiliation
/// (video id, then ordinal). Ties fall back to the canonical key.
pub fn order_layout(
    items: &[LayoutItem],
    mode: LayoutMode,
    shape: GridShape,
) -> Result<GridLayout, SomError> {
    if items.len() > shape.cells() {
        return Err(SomError::Capacity {
            items: items.len(),
            cells: shape.cells(),
        });
    }
    let mut sorted: Vec<&LayoutItem> = items.iter().collect();
    match mode {
        LayoutMode::Confidence => {
            sorted.sort_by(|a, b| b.score.total_cmp(&a.score).then_with(|| a.key.cmp(&b.key)))
        }
        LayoutMode::Video => sorted.sort_by(|a, b| {
            a.key
                .video_id()
                .cmp(b.key.video_id())
                .then(a.key.ordinal().cmp(&b.key.ordinal()))
                .then_with(|| a.key.cmp(&b.key))
        }),
        LayoutMode::Som => return Err(SomError::NotAnOrdering(mode)),
    }
    let cells = sorted
        .into_iter()
        .enumerate()
        .map(|(cell, it)| Cell {
            cell,
            item: it.key.clone(),
        })
        .collect();
    Ok(GridLayout::from_assignment(mode, shape, cells))
}

/// True when no cell holds two items, every cell index is on the grid and
/// every expected item is placed exactly once.
pub fn is_bijective(layout: &GridLayout, expected: &[ItemKey]) -> bool {
    let cells = layout.shape().cells();
    let mut seen_cells = vec![false; cells];
    let mut seen_items: HashMap<&ItemKey, usize> = HashMap::new();
    for c in &layout.cells {
        if c.cell >= cells || std::mem::replace(&mut seen_cells[c.cell], true) {
            return false;
        }
        *seen_items.entry(&c.item).or_default() += 1;
    }
    layout.cells.len() == expected.len() && expected.iter().all(|k| seen_items.get(k) == Some(&1))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn fv(values: &[f32]) -> FeatureVector {
        FeatureVector::new_unchecked(FeatureKind::Motion, values.to_vec())
    }

    fn key(i: u32) -> ItemKey {
        ItemKey::shot("v", i)
    }

    #[test]
    fn grid_shapes() {
        let s = |n| {
            let g = GridShape::for_items(n);
            (g.width, g.height)
        };
        assert_eq!(s(5), (3, 2));
        assert_eq!(s(1), (1, 1));
        assert_eq!(s(4), (2, 2));
        assert_eq!(s(64), (8, 8));
        assert_eq!(s(65), (9, 8));
        for n in 1..500 {
            let g = GridShape::for_items(n);
            assert!(g.cells() >= n);
        }
    }

    #[test]
    fn bmu_rules() {
        let shape = GridShape {
            width: 2,
            height: 1,
        };
        let grid = SomGrid::from_weights(
            shape,
            vec![vec![0.0, 0.0], vec![10.0, 10.0]],
            FeatureKind::Motion,
        )
        .unwrap();
        assert_eq!(bmu(&grid, &fv(&[1.0, 1.0])).unwrap(), 0);
        assert_eq!(bmu(&grid, &fv(&[10.0, 10.0])).unwrap(), 1);
        assert!(bmu(&grid, &fv(&[1.0])).is_err());

        let shape = GridShape {
            width: 2,
            height: 2,
        };
        let grid = SomGrid::from_weights(
            shape,
            vec![vec![5.0], vec![1.0], vec![9.0], vec![3.0]],
            FeatureKind::Motion,
        )
        .unwrap();
        // 2 is equidistant to cells 1 and 3.
        assert_eq!(bmu(&grid, &fv(&[2.0])).unwrap(), 1);
    }

    #[test]
    fn decay_schedule_endpoints() {
        assert_eq!(decay(0.5, 0.01, 0, 40), 0.5);
        assert!((decay(0.5, 0.01, 39, 40) - 0.01).abs() < 1e-15);
        assert_eq!(decay(0.5, 0.01, 0, 1), 0.5);
    }

    #[test]
    fn single_vector_converges_by_closed_form() {
        // Start the lone unit 0.4 away from the input. With h = 1 at the BMU
        // every epoch scales the error by (1 - eta(t)).
        let v = fv(&[0.3, 0.7]);
        let shape = GridShape {
            width: 1,
            height: 1,
        };
        let init = SomGrid::from_weights(
            shape,
            vec![vec![f64::from(0.3f32) + 0.4, f64::from(0.7f32)]],
            FeatureKind::Motion,
        )
        .unwrap();
        let params = SomParams::default();
        let mut trainer =
            SomTrainer::with_initial_grid(init, std::slice::from_ref(&v), params).unwrap();
        let mut expected = 0.4;
        let mut last = quantization_error(trainer.grid(), std::slice::from_ref(&v)).unwrap();
        while trainer.step_epoch() {
            let eta = trainer.learning_rate(trainer.epoch() - 1);
            expected *= 1.0 - eta;
            let qe = quantization_error(trainer.grid(), std::slice::from_ref(&v)).unwrap();
            assert!(qe <= last);
            assert!((qe - expected).abs() < 1e-9, "{qe} vs {expected}");
            last = qe;
        }
        // 0.4 * prod(1 - eta(t)) = 0.4 * 0.0023240754 ~= 9.3e-4
        assert!(last < 1e-3);
        assert!((last - 0.4 * 0.002_324_075_436_355_04).abs() < 1e-9);
    }

    #[test]
    fn sampled_initialization_is_exact_for_one_vector() {
        let v = (key(0), fv(&[0.25, 0.5]));
        let grid = train_som(std::slice::from_ref(&v), SomParams::with_seed(9)).unwrap();
        assert_eq!(
            grid.shape(),
            GridShape {
                width: 1,
                height: 1
            }
        );
        assert!(quantization_error(&grid, &[v.1]).unwrap() < 1e-12);
    }

    #[test]
    fn same_seed_same_weights() {
        let items: Vec<_> = (0..12)
            .map(|i| (key(i), fv(&[i as f32 / 12.0, (i % 3) as f32 / 3.0, 0.5])))
            .collect();
        let a = train_som(&items, SomParams::with_seed(42)).unwrap();
        let b = train_som(&items, SomParams::with_seed(42)).unwrap();
        assert_eq!(a, b);
        let c = train_som(&items, SomParams::with_seed(43)).unwrap();
        assert_ne!(a, c);
    }

    #[test]
    fn training_errors() {
        assert_eq!(
            train_som(&[], SomParams::default()).unwrap_err(),
            SomError::Empty
        );
        let mixed = vec![(key(0), fv(&[0.0, 1.0])), (key(1), fv(&[0.0]))];
        assert!(matches!(
            train_som(&mixed, SomParams::default()).unwrap_err(),
            SomError::DimensionMismatch { .. }
        ));
        let one = vec![(key(0), fv(&[0.0]))];
        for bad in [
            SomParams {
                epochs: 0,
                ..Default::default()
            },
            SomParams {
                eta0: 1.5,
                ..Default::default()
            },
            SomParams {
                eta_final: 0.6,
                ..Default::default()
            },
            SomParams {
                sigma_final: 2.0,
                ..Default::default()
            },
        ] {
            assert!(matches!(
                train_som(&one, bad),
                Err(SomError::InvalidParams(_))
            ));
        }
    }

    #[test]
    fn collisions_move_to_nearest_free_cell() {
        // 2x1 grid, both items nearest to cell 0; the closer one keeps it.
        let shape = GridShape {
            width: 2,
            height: 1,
        };
        let grid =
            SomGrid::from_weights(shape, vec![vec![0.0], vec![10.0]], FeatureKind::Motion).unwrap();
        let items = vec![(key(1), fv(&[2.0])), (key(2), fv(&[1.0]))];
        let layout = assign_unique_cells(&grid, &items).unwrap();
        assert_eq!(layout.item_at(0), Some(&key(2)));
        assert_eq!(layout.item_at(1), Some(&key(1)));
    }

    #[test]
    fn distinct_bmus_are_kept() {
        let shape = GridShape {
            width: 2,
            height: 2,
        };
        let w = vec![vec![0.0], vec![1.0], vec![2.0], vec![3.0]];
        let grid = SomGrid::from_weights(shape, w, FeatureKind::Motion).unwrap();
        let items: Vec<_> = [3.0, 1.0, 0.0, 2.0]
            .iter()
            .enumerate()
            .map(|(i, &x)| (key(i as u32), fv(&[x])))
            .collect();
        let layout = assign_unique_cells(&grid, &items).unwrap();
        for (i, (k, v)) in items.iter().enumerate() {
            assert_eq!(layout.item_at(v.values()[0] as usize), Some(k), "item {i}");
        }
        let too_many: Vec<_> = (0..5).map(|i| (key(i), fv(&[0.0]))).collect();
        assert!(matches!(
            assign_unique_cells(&grid, &too_many),
            Err(SomError::Capacity { items: 5, cells: 4 })
        ));
    }

    #[test]
    fn confidence_and_video_orderings() {
        let shape = GridShape::for_items(3);
        let items = vec![
            LayoutItem {
                key: "v:a/s:0".parse().unwrap(),
                score: 0.9,
            },
            LayoutItem {
                key: "v:b/s:0".parse().unwrap(),
                score: 0.7,
            },
            LayoutItem {
                key: "v:c/s:0".parse().unwrap(),
                score: 0.8,
            },
        ];
        let l = order_layout(&items, LayoutMode::Confidence, shape).unwrap();
        let order: Vec<_> = l.cells.iter().map(|c| c.item.as_str()).collect();
        assert_eq!(order, ["v:a/s:0", "v:c/s:0", "v:b/s:0"]);

        let items = vec![
            LayoutItem {
                key: "v:v2/s:1".parse().unwrap(),
                score: 0.0,
            },
            LayoutItem {
                key: "v:v1/s:3".parse().unwrap(),
                score: 0.0,
            },
            LayoutItem {
                key: "v:v1/s:0".parse().unwrap(),
                score: 0.0,
            },
        ];
        let l = order_layout(&items, LayoutMode::Video, shape).unwrap();
        let order: Vec<_> = l.cells.iter().map(|c| c.item.as_str()).collect();
        assert_eq!(order, ["v:v1/s:0", "v:v1/s:3", "v:v2/s:1"]);

        let tied = vec![
            LayoutItem {
                key: "v:b/s:0".parse().unwrap(),
                score: 0.5,
            },
            LayoutItem {
                key: "v:a/s:0".parse().unwrap(),
                score: 0.5,
            },
        ];
        let l = order_layout(&tied, LayoutMode::Confidence, shape).unwrap();
        assert_eq!(l.cells[0].item.as_str(), "v:a/s:0");

        assert!(order_layout(&tied, LayoutMode::Som, shape).is_err());
        assert!(order_layout(
            &tied,
            LayoutMode::Confidence,
            GridShape {
                width: 1,
                height: 1
            }
        )
        .is_err());
    }

    #[test]
    fn video_ordering_uses_numeric_ordinals() {
        let items = vec![
            LayoutItem {
                key: "v:v1/s:10".parse().unwrap(),
                score: 0.0,
            },
            LayoutItem {
                key: "v:v1/s:2".parse().unwrap(),
                score: 0.0,
            },
        ];
        let l = order_layout(&items, LayoutMode::Video, GridShape::for_items(2)).unwrap();
        assert_eq!(l.cells[0].item.as_str(), "v:v1/s:2");
    }

    #[test]
    fn quantization_error_cases() {
        let shape = GridShape {
            width: 2,
            height: 1,
        };
        let grid = SomGrid::from_weights(
            shape,
            vec![vec![0.0, 0.0], vec![1.0, 1.0]],
            FeatureKind::Motion,
        )
        .unwrap();
        assert_eq!(
            quantization_error(&grid, &[fv(&[0.0, 0.0]), fv(&[1.0, 1.0])]).unwrap(),
            0.0
        );
        let far = SomGrid::from_weights(
            GridShape {
                width: 1,
                height: 1,
            },
            vec![vec![0.0, 0.0]],
            FeatureKind::Motion,
        )
        .unwrap();
        assert_eq!(quantization_error(&far, &[fv(&[3.0, 0.0])]).unwrap(), 3.0);
        assert_eq!(quantization_error(&grid, &[]).unwrap_err(), SomError::Empty);
    }
}
