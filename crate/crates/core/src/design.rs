//! Design measures, fill distances and posterior superlevel sets.

use std::fmt;
use std::sync::Arc;

use rand::Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;

use crate::error::{check_dim, Error, Result};
use crate::gp::Design;
use crate::quadrature::{linspace, BoxDomain};
use crate::rng;

/// Density used to decide membership of truncated measures and regions.
pub type ReferenceDensity = Arc<dyn Fn(&[f64]) -> f64 + Send + Sync>;

/// Default attempt budget for rejection sampling.
pub const REJECTION_CAP: usize = 1_000_000;

#[derive(Clone)]
pub enum DesignMeasure {
    GaussianDiag { center: Vec<f64>, std_devs: Vec<f64> },
    UniformBox(BoxDomain),
    /// Uniform on `{u ∈ proposal : reference(u) > threshold}`, drawn by
    /// rejection from the proposal box.
    PosteriorTruncated {
        reference: ReferenceDensity,
        threshold: f64,
        proposal: BoxDomain,
        cap: usize,
    },
}

impl fmt::Debug for DesignMeasure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            DesignMeasure::GaussianDiag { center, std_devs } => {
                write!(f, "GaussianDiag {{ center: {center:?}, std_devs: {std_devs:?} }}")
            }
            DesignMeasure::UniformBox(b) => write!(f, "UniformBox({b:?})"),
            DesignMeasure::PosteriorTruncated { threshold, proposal, cap, .. } => write!(
                f,
                "PosteriorTruncated {{ threshold: {threshold}, proposal: {proposal:?}, cap: {cap} }}"
            ),
        }
    }
}

impl DesignMeasure {
    pub fn gaussian(center: Vec<f64>, std_devs: Vec<f64>) -> Result<Self> {
        check_dim(center.len(), std_devs.len())?;
        if center.is_empty() || std_devs.iter().any(|s| !(*s > 0.0 && s.is_finite())) {
            return Err(Error::InvalidArgument(format!(
                "design standard deviations must be positive, got {std_devs:?}"
            )));
        }
        Ok(DesignMeasure::GaussianDiag { center, std_devs })
    }

    pub fn uniform(domain: BoxDomain) -> Self {
        DesignMeasure::UniformBox(domain)
    }

    pub fn truncated(reference: ReferenceDensity, threshold: f64, proposal: BoxDomain) -> Result<Self> {
        if !(threshold >= 0.0) {
            return Err(Error::InvalidArgument(format!("threshold must be >= 0, got {threshold}")));
        }
        Ok(DesignMeasure::PosteriorTruncated {
            reference,
            threshold,
            proposal,
            cap: REJECTION_CAP,
        })
    }

    pub fn dim(&self) -> usize {
        match self {
            DesignMeasure::GaussianDiag { center, .. } => center.len(),
            DesignMeasure::UniformBox(b) => b.dim(),
            DesignMeasure::PosteriorTruncated { proposal, .. } => proposal.dim(),
        }
    }

    /// Density of the measure. For the truncated variant the normalizing
    /// volume of the superlevel set is unknown, so the value is relative to
    /// the proposal box volume.
    pub fn density(&self, u: &[f64]) -> f64 {
        match self {
            DesignMeasure::GaussianDiag { center, std_devs } => center
                .iter()
                .zip(std_devs)
                .zip(u)
                .map(|((c, s), x)| {
                    let z = (x - c) / s;
                    (-0.5 * z * z).exp() / (s * (2.0 * std::f64::consts::PI).sqrt())
                })
                .product(),
            DesignMeasure::UniformBox(b) => {
                if b.contains(u) {
                    1.0 / b.volume()
                } else {
                    0.0
                }
            }
            DesignMeasure::PosteriorTruncated {
                reference,
                threshold,
                proposal,
                ..
            } => {
                if proposal.contains(u) && reference(u) > *threshold {
                    1.0 / proposal.volume()
                } else {
                    0.0
                }
            }
        }
    }

    fn draw_unchecked<R: Rng + ?Sized>(&self, rng: &mut R) -> Vec<f64> {
        match self {
            DesignMeasure::GaussianDiag { center, std_devs } => center
                .iter()
                .zip(std_devs)
                .map(|(c, s)| c + s * rng.sample::<f64, _>(StandardNormal))
                .collect(),
            DesignMeasure::UniformBox(b) | DesignMeasure::PosteriorTruncated { proposal: b, .. } => b
                .lower()
                .iter()
                .zip(b.upper())
                .map(|(l, h)| l + (h - l) * rng.random::<f64>())
                .collect(),
        }
    }

    /// Draws `n` i.i.d. points from `rng`.
    pub fn sample_with<R: Rng + ?Sized>(&self, n: usize, rng: &mut R) -> Result<Design> {
        if n == 0 {
            return Err(Error::InvalidArgument("design size must be >= 1".into()));
        }
        let mut points = Vec::with_capacity(n);
        match self {
            DesignMeasure::PosteriorTruncated {
                reference,
                threshold,
                cap,
                ..
            } => {
                let mut attempts = 0usize;
                while points.len() < n {
                    if attempts >= *cap {
                        return Err(Error::RejectionCap {
                            attempts,
                            acceptance_rate: points.len() as f64 / attempts as f64,
                        });
                    }
                    attempts += 1;
                    let u = self.draw_unchecked(rng);
                    if reference(&u) > *threshold {
                        points.push(u);
                    }
                }
            }
            _ => points.extend((0..n).map(|_| self.draw_unchecked(rng))),
        }
        Design::new(points)
    }
}

/// `n` i.i.d. points from `measure`, reproducible from `seed`.
pub fn sample_design(measure: &DesignMeasure, n: usize, seed: u64) -> Result<Design> {
    measure.sample_with(n, &mut rng::seeded(seed))
}

/// `{u : reference(u) > threshold}` inside a scan box.
#[derive(Clone)]
pub struct TruncationRegion {
    threshold: f64,
    scan_box: BoxDomain,
    reference: ReferenceDensity,
    intervals: Option<Vec<(f64, f64)>>,
}

impl fmt::Debug for TruncationRegion {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("TruncationRegion")
            .field("threshold", &self.threshold)
            .field("scan_box", &self.scan_box)
            .field("intervals", &self.intervals)
            .finish()
    }
}

impl TruncationRegion {
    pub fn threshold(&self) -> f64 {
        self.threshold
    }

    pub fn scan_box(&self) -> &BoxDomain {
        &self.scan_box
    }

    /// Superlevel intervals (1D only).
    pub fn intervals(&self) -> Option<&[(f64, f64)]> {
        self.intervals.as_deref()
    }

    pub fn contains(&self, u: &[f64]) -> bool {
        self.scan_box.contains(u) && (self.reference)(u) > self.threshold
    }

    /// Measure of the kept set (1D exact from the intervals; grid estimate otherwise).
    pub fn volume(&self, resolution: usize) -> f64 {
        match &self.intervals {
            Some(iv) => iv.iter().map(|(a, b)| b - a).sum(),
            None => {
                let pts = grid_points(&self.scan_box, resolution);
                let inside = pts.iter().filter(|p| self.contains(p)).count();
                self.scan_box.volume() * inside as f64 / pts.len() as f64
            }
        }
    }
}

/// Builds the superlevel set of `density` at `threshold`. In 1D the interval
/// endpoints are located by a grid scan and refined by bisection to 1e-8.
pub fn truncation_region(
    density: ReferenceDensity,
    threshold: f64,
    scan_box: BoxDomain,
    resolution: usize,
) -> Result<TruncationRegion> {
    if !(threshold >= 0.0) {
        return Err(Error::InvalidArgument(format!("threshold must be >= 0, got {threshold}")));
    }
    if resolution < 2 {
        return Err(Error::InvalidArgument("scan resolution must be >= 2".into()));
    }
    let above = |x: &[f64]| density(x) > threshold;
    let intervals = if scan_box.dim() == 1 {
        let xs = linspace(scan_box.lower()[0], scan_box.upper()[0], resolution);
        let flags: Vec<bool> = xs.iter().map(|x| above(&[*x])).collect();
        let refine = |mut inside: f64, mut outside: f64| {
            while (inside - outside).abs() > 1e-8 {
                let mid = 0.5 * (inside + outside);
                if above(&[mid]) {
                    inside = mid;
                } else {
                    outside = mid;
                }
            }
            0.5 * (inside + outside)
        };
        let mut out = Vec::new();
        let mut start: Option<f64> = None;
        for i in 0..xs.len() {
            match (flags[i], start) {
                (true, None) => start = Some(if i == 0 { xs[0] } else { refine(xs[i], xs[i - 1]) }),
                (false, Some(s)) => {
                    out.push((s, refine(xs[i - 1], xs[i])));
                    start = None;
                }
                _ => {}
            }
        }
        if let Some(s) = start {
            out.push((s, xs[xs.len() - 1]));
        }
        if out.is_empty() {
            return Err(Error::EmptyRegion { threshold });
        }
        Some(out)
    } else {
        if !grid_points(&scan_box, resolution).iter().any(|p| above(p)) {
            return Err(Error::EmptyRegion { threshold });
        }
        None
    };
    Ok(TruncationRegion {
        threshold,
        scan_box,
        reference: density,
        intervals,
    })
}

/// `c · N^(−2τ/d)`.
pub fn threshold_rule(c: f64, tau: f64, n: usize, dim: usize) -> f64 {
    c * (n as f64).powf(-2.0 * tau / dim as f64)
}

/// Region over which a fill distance is taken.
#[derive(Debug, Clone)]
pub enum FillRegion {
    Box(BoxDomain),
    Truncated(TruncationRegion),
}

impl FillRegion {
    pub fn dim(&self) -> usize {
        match self {
            FillRegion::Box(b) => b.dim(),
            FillRegion::Truncated(t) => t.scan_box.dim(),
        }
    }

    pub fn contains(&self, u: &[f64]) -> bool {
        match self {
            FillRegion::Box(b) => b.contains(u),
            FillRegion::Truncated(t) => t.contains(u),
        }
    }

    fn bounding_box(&self) -> &BoxDomain {
        match self {
            FillRegion::Box(b) => b,
            FillRegion::Truncated(t) => &t.scan_box,
        }
    }

    fn intervals_1d(&self) -> Option<Vec<(f64, f64)>> {
        match self {
            FillRegion::Box(b) if b.dim() == 1 => Some(vec![(b.lower()[0], b.upper()[0])]),
            FillRegion::Truncated(t) => t.intervals.clone(),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FillMethod {
    /// Sorting-based, exact in 1D.
    Exact,
    /// Supremum over a candidate grid with `resolution` points per axis.
    Grid { resolution: usize },
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FillDistance {
    /// `f64::INFINITY` when no design point lies in the region.
    pub value: f64,
    pub method: FillMethod,
}

/// Fill distance of the design points inside `region`: exact in 1D, a grid
/// supremum otherwise.
pub fn fill_distance(design: &Design, region: &FillRegion, resolution: usize) -> Result<FillDistance> {
    check_dim(region.dim(), design.dim())?;
    match region.intervals_1d() {
        Some(iv) => Ok(FillDistance {
            value: exact_fill_1d(design, region, &iv),
            method: FillMethod::Exact,
        }),
        None => grid_fill_distance(design, region, resolution),
    }
}

/// Grid-based fill distance regardless of dimension.
pub fn grid_fill_distance(design: &Design, region: &FillRegion, resolution: usize) -> Result<FillDistance> {
    check_dim(region.dim(), design.dim())?;
    if resolution < 2 {
        return Err(Error::InvalidArgument("fill-distance resolution must be >= 2".into()));
    }
    if region.dim() > 2 {
        return Err(Error::InvalidArgument("grid fill distance is limited to d <= 2".into()));
    }
    let method = FillMethod::Grid { resolution };
    let inside: Vec<&Vec<f64>> = design.points().iter().filter(|p| region.contains(p)).collect();
    if inside.is_empty() {
        return Ok(FillDistance { value: f64::INFINITY, method });
    }
    let bbox = region.bounding_box();
    let index = BucketIndex::new(&inside, bbox);
    let candidates = grid_points(bbox, resolution);
    let value = candidates
        .iter()
        .filter(|c| region.contains(c))
        .map(|c| index.nearest(c))
        .fold(0.0, f64::max);
    Ok(FillDistance { value, method })
}

fn exact_fill_1d(design: &Design, region: &FillRegion, intervals: &[(f64, f64)]) -> f64 {
    let mut xs: Vec<f64> = design
        .points()
        .iter()
        .filter(|p| region.contains(p))
        .map(|p| p[0])
        .collect();
    if xs.is_empty() {
        return f64::INFINITY;
    }
    xs.sort_by(f64::total_cmp);
    let nearest = |x: f64| {
        let i = xs.partition_point(|p| *p < x);
        let right = xs.get(i).map_or(f64::INFINITY, |p| p - x);
        let left = if i > 0 { x - xs[i - 1] } else { f64::INFINITY };
        left.min(right)
    };
    // the distance to the nearest point is piecewise linear, so its maximum
    // over an interval sits at an endpoint or at a midpoint between neighbours
    let mut h: f64 = 0.0;
    for &(a, b) in intervals {
        h = h.max(nearest(a)).max(nearest(b));
        for w in xs.windows(2) {
            let mid = 0.5 * (w[0] + w[1]);
            if mid > a && mid < b {
                h = h.max(nearest(mid));
            }
        }
    }
    h
}

fn grid_points(b: &BoxDomain, resolution: usize) -> Vec<Vec<f64>> {
    let axes: Vec<Vec<f64>> = b
        .lower()
        .iter()
        .zip(b.upper())
        .map(|(&l, &h)| linspace(l, h, resolution))
        .collect();
    match axes.len() {
        1 => axes[0].iter().map(|&x| vec![x]).collect(),
        2 => axes[0]
            .iter()
            .flat_map(|&x| axes[1].iter().map(move |&y| vec![x, y]))
            .collect(),
        _ => unreachable!("grids are limited to d <= 2"),
    }
}

/// Uniform bucketing of points for nearest-neighbour queries in d ≤ 2.
struct BucketIndex<'a> {
    lower: Vec<f64>,
    cell: f64,
    dims: Vec<usize>,
    buckets: Vec<Vec<&'a [f64]>>,
}

impl<'a> BucketIndex<'a> {
    fn new(points: &[&'a Vec<f64>], bbox: &BoxDomain) -> Self {
        let d = bbox.dim();
        let extent = bbox
            .lower()
            .iter()
            .zip(bbox.upper())
            .map(|(l, h)| h - l)
            .fold(0.0, f64::max)
            .max(f64::MIN_POSITIVE);
        let per_axis = (points.len() as f64).powf(1.0 / d as f64).ceil().max(1.0);
        let cell = extent / per_axis;
        let dims: Vec<usize> = bbox
            .lower()
            .iter()
            .zip(bbox.upper())
            .map(|(l, h)| (((h - l) / cell).ceil() as usize).max(1))
            .collect();
        let mut index = BucketIndex {
            lower: bbox.lower().to_vec(),
            cell,
            dims,
            buckets: Vec::new(),
        };
        index.buckets = vec![Vec::new(); index.dims.iter().product()];
        for p in points {
            let c = index.coords(p);
            let flat = index.flat(&c);
            index.buckets[flat].push(p.as_slice());
        }
        index
    }

    fn coords(&self, p: &[f64]) -> Vec<isize> {
        p.iter()
            .zip(&self.lower)
            .zip(&self.dims)
            .map(|((x, l), n)| (((x - l) / self.cell).floor() as isize).clamp(0, *n as isize - 1))
            .collect()
    }

    fn flat(&self, c: &[isize]) -> usize {
        c.iter().zip(&self.dims).fold(0, |acc, (i, n)| acc * n + *i as usize)
    }

    fn nearest(&self, q: &[f64]) -> f64 {
        let c = self.coords(q);
        let max_ring = *self.dims.iter().max().unwrap() as isize;
        let mut best = f64::INFINITY;
        for ring in 0..=max_ring {
            // every point outside rings < `ring` is at least (ring - 1) cells away
            if best.is_finite() && (ring - 1) as f64 * self.cell >= best {
                break;
            }
            self.visit_ring(&c, ring, |p| {
                let d = p.iter().zip(q).map(|(a, b)| (a - b) * (a - b)).sum::<f64>().sqrt();
                best = best.min(d);
            });
        }
        best
    }

    fn visit_ring<F: FnMut(&[f64])>(&self, c: &[isize], ring: isize, mut f: F) {
        let in_range = |i: isize, n: usize| i >= 0 && i < n as isize;
        match c.len() {
            1 => {
                for i in [c[0] - ring, c[0] + ring] {
                    if in_range(i, self.dims[0]) {
                        self.buckets[i as usize].iter().for_each(|p| f(p));
                    }
                    if ring == 0 {
                        break;
                    }
                }
            }
            _ => {
                for i in (c[0] - ring)..=(c[0] + ring) {
                    if !in_range(i, self.dims[0]) {
                        continue;
                    }
                    let edge = i == c[0] - ring || i == c[0] + ring;
                    let js: Vec<isize> = if edge {
                        ((c[1] - ring)..=(c[1] + ring)).collect()
                    } else if ring == 0 {
                        vec![c[1]]
                    } else {
                        vec![c[1] - ring, c[1] + ring]
                    };
                    for j in js {
                        if in_range(j, self.dims[1]) {
                            let flat = i as usize * self.dims[1] + j as usize;
                            self.buckets[flat].iter().for_each(|p| f(p));
                        }
                    }
                }
            }
        }
    }
}

/// One replicate of a fill-distance study.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FillSample {
    pub n: usize,
    pub replicate: usize,
    pub h: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FillSummary {
    pub n: usize,
    pub mean_h: f64,
    pub q10: f64,
    pub q90: f64,
    /// Empirical P[h > tail_threshold].
    pub tail_probability: f64,
    pub tail_std_error: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FillStudy {
    pub samples: Vec<FillSample>,
    pub summary: Vec<FillSummary>,
    pub tail_threshold: f64,
    /// Least-squares slope of log mean h against log N.
    pub slope: f64,
}

impl FillStudy {
    pub fn samples_csv(&self) -> String {
        let mut s = String::from("N,replicate,h\n");
        for r in &self.samples {
            s.push_str(&format!("{},{},{:e}\n", r.n, r.replicate, r.h));
        }
        s
    }

    pub fn summary_csv(&self) -> String {
        let mut s = String::from("N,mean_h,q10,q90,tail_probability,tail_std_error\n");
        for r in &self.summary {
            s.push_str(&format!(
                "{},{:e},{:e},{:e},{:e},{:e}\n",
                r.n, r.mean_h, r.q10, r.q90, r.tail_probability, r.tail_std_error
            ));
        }
        s
    }
}

/// Settings of [`fill_decay_study`].
#[derive(Debug, Clone)]
pub struct FillStudyConfig {
    pub n_list: Vec<usize>,
    pub replications: usize,
    pub seed: u64,
    /// Candidate-grid resolution for d ≥ 2.
    pub resolution: usize,
    /// Threshold h₀ of the tail probability; defaults to the median h at the
    /// smallest N.
    pub tail_threshold: Option<f64>,
}

/// Empirical quantile with linear interpolation between order statistics.
pub fn quantile(sorted: &[f64], q: f64) -> f64 {
    let pos = q * (sorted.len() - 1) as f64;
    let i = pos.floor() as usize;
    let t = pos - i as f64;
    if i + 1 < sorted.len() {
        (1.0 - t) * sorted[i] + t * sorted[i + 1]
    } else {
        sorted[i]
    }
}

/// Least-squares slope of `ys` against `xs`.
pub fn fit_slope(xs: &[f64], ys: &[f64]) -> f64 {
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    sxy / sxx
}

/// Monte Carlo study of how the fill distance of i.i.d. designs decays with N.
/// Replicate `r` of the `k`-th design size draws from stream `k·R + r`.
pub fn fill_decay_study(measure: &DesignMeasure, region: &FillRegion, cfg: &FillStudyConfig) -> Result<FillStudy> {
    check_dim(region.dim(), measure.dim())?;
    if cfg.n_list.len() < 2 || cfg.n_list.windows(2).any(|w| w[0] >= w[1]) || cfg.n_list[0] == 0 {
        return Err(Error::InvalidArgument(format!(
            "N list must hold at least two increasing sizes, got {:?}",
            cfg.n_list
        )));
    }
    if cfg.replications < 30 {
        return Err(Error::InvalidArgument(format!(
            "fill-distance studies need >= 30 replications, got {}",
            cfg.replications
        )));
    }
    let r = cfg.replications;
    let jobs: Vec<(usize, usize)> = (0..cfg.n_list.len())
        .flat_map(|k| (0..r).map(move |rep| (k, rep)))
        .collect();
    let samples = jobs
        .par_iter()
        .map(|&(k, rep)| {
            let n = cfg.n_list[k];
            let mut g = rng::stream(cfg.seed, (k * r + rep) as u64);
            let design = measure.sample_with(n, &mut g)?;
            let h = fill_distance(&design, region, cfg.resolution)?.value;
            Ok(FillSample { n, replicate: rep, h })
        })
        .collect::<Result<Vec<_>>>()?;

    let per_n: Vec<Vec<f64>> = samples
        .chunks(r)
        .map(|c| {
            let mut hs: Vec<f64> = c.iter().map(|s| s.h).collect();
            hs.sort_by(f64::total_cmp);
            hs
        })
        .collect();
    let tail_threshold = cfg.tail_threshold.unwrap_or_else(|| quantile(&per_n[0], 0.5));
    let summary: Vec<FillSummary> = cfg
        .n_list
        .iter()
        .zip(&per_n)
        .map(|(&n, hs)| {
            let p = hs.iter().filter(|h| **h > tail_threshold).count() as f64 / r as f64;
            FillSummary {
                n,
                mean_h: hs.iter().sum::<f64>() / r as f64,
                q10: quantile(hs, 0.1),
                q90: quantile(hs, 0.9),
                tail_probability: p,
                tail_std_error: (p * (1.0 - p) / r as f64).sqrt(),
            }
        })
        .collect();
    let lx: Vec<f64> = summary.iter().map(|s| (s.n as f64).ln()).collect();
    let ly: Vec<f64> = summary.iter().map(|s| s.mean_h.ln()).collect();
    Ok(FillStudy {
        samples,
        summary,
        tail_threshold,
        slope: fit_slope(&lx, &ly),
    })
}

/// Per-cell bookkeeping over a uniform partition of a box.
#[derive(Debug, Clone, PartialEq)]
pub struct PartitionCell {
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
    /// Largest density value seen on the cell's scan grid.
    pub sup_density: f64,
    /// Fill distance of the design points inside the cell.
    pub fill_distance: f64,
    pub points: usize,
}

/// Splits `scan_box` into `cells_per_dim` cells per axis and reports the
/// largest density value and the fill distance in each.
pub fn partition_report(
    density: &(dyn Fn(&[f64]) -> f64 + Sync),
    design: &Design,
    scan_box: &BoxDomain,
    cells_per_dim: usize,
    resolution: usize,
) -> Result<Vec<PartitionCell>> {
    check_dim(scan_box.dim(), design.dim())?;
    if cells_per_dim == 0 || scan_box.dim() > 2 {
        return Err(Error::InvalidArgument("partition needs >= 1 cell per axis and d <= 2".into()));
    }
    let edges: Vec<Vec<f64>> = scan_box
        .lower()
        .iter()
        .zip(scan_box.upper())
        .map(|(&l, &h)| linspace(l, h, cells_per_dim + 1))
        .collect();
    let index_sets: Vec<Vec<usize>> = match edges.len() {
        1 => (0..cells_per_dim).map(|i| vec![i]).collect(),
        _ => (0..cells_per_dim)
            .flat_map(|i| (0..cells_per_dim).map(move |j| vec![i, j]))
            .collect(),
    };
    index_sets
        .iter()
        .map(|idx| {
            let lower: Vec<f64> = idx.iter().zip(&edges).map(|(i, e)| e[*i]).collect();
            let upper: Vec<f64> = idx.iter().zip(&edges).map(|(i, e)| e[i + 1]).collect();
            let cell = BoxDomain::new(lower.clone(), upper.clone())?;
            let sup_density = grid_points(&cell, resolution)
                .iter()
                .map(|p| density(p))
                .fold(f64::NEG_INFINITY, f64::max);
            let points = design.points().iter().filter(|p| cell.contains(p)).count();
            let fill = fill_distance(design, &FillRegion::Box(cell), resolution)?.value;
            Ok(PartitionCell {
                lower,
                upper,
                sup_density,
                fill_distance: fill,
                points,
            })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn unit() -> FillRegion {
        FillRegion::Box(BoxDomain::interval(0.0, 1.0).unwrap())
    }

    fn std_normal_pdf() -> ReferenceDensity {
        Arc::new(|u: &[f64]| (-0.5 * u[0] * u[0]).exp() / (2.0 * std::f64::consts::PI).sqrt())
    }

    #[test]
    fn fill_distance_small_cases() {
        let f = |xs: &[f64]| fill_distance(&Design::from_scalars(xs), &unit(), 2).unwrap();
        assert_eq!(f(&[0.5]).value, 0.5);
        assert_eq!(f(&[0.5]).method, FillMethod::Exact);
        assert_eq!(f(&[0.0, 1.0]).value, 0.5);
        assert_eq!(f(&[0.0, 0.25, 0.5, 0.75, 1.0]).value, 0.125);
        assert_eq!(f(&[2.0]).value, f64::INFINITY);
    }

    #[test]
    fn uniform_grid_agrees_with_brute_force() {
        let xs = linspace(0.0, 1.0, 5);
        let brute = linspace(0.0, 1.0, 100_000)
            .iter()
            .map(|c| xs.iter().map(|x| (x - c).abs()).fold(f64::INFINITY, f64::min))
            .fold(0.0, f64::max);
        assert!((brute - 0.125).abs() < 1e-5);
    }

    #[test]
    fn two_dimensional_grid_fill() {
        let square = FillRegion::Box(BoxDomain::new(vec![0.0, 0.0], vec![1.0, 1.0]).unwrap());
        let d = Design::new(vec![vec![0.5, 0.5]]).unwrap();
        let h = fill_distance(&d, &square, 65).unwrap();
        assert!((h.value - 0.5f64.sqrt()).abs() < 1e-12);
        assert_eq!(h.method, FillMethod::Grid { resolution: 65 });
        // bucketed search matches brute force on a random design
        let design = sample_design(&DesignMeasure::uniform(square.bounding_box().clone()), 57, 3).unwrap();
        let fast = fill_distance(&design, &square, 101).unwrap().value;
        let brute = grid_points(square.bounding_box(), 101)
            .iter()
            .map(|c| {
                design
                    .points()
                    .iter()
                    .map(|p| ((p[0] - c[0]).powi(2) + (p[1] - c[1]).powi(2)).sqrt())
                    .fold(f64::INFINITY, f64::min)
            })
            .fold(0.0, f64::max);
        assert_eq!(fast, brute);
    }

    #[test]
    fn sampler_moments() {
        let u = sample_design(&DesignMeasure::uniform(BoxDomain::interval(-1.0, 1.0).unwrap()), 10_000, 1).unwrap();
        let xs: Vec<f64> = u.points().iter().map(|p| p[0]).collect();
        let m = xs.iter().sum::<f64>() / 1e4;
        let v = xs.iter().map(|x| (x - m).powi(2)).sum::<f64>() / 1e4;
        assert!(m.abs() < 0.03);
        assert!((v / (1.0 / 3.0) - 1.0).abs() < 0.05);

        let g = sample_design(&DesignMeasure::gaussian(vec![1.0], vec![1.0]).unwrap(), 10_000, 2).unwrap();
        let xs: Vec<f64> = g.points().iter().map(|p| p[0]).collect();
        let m = xs.iter().sum::<f64>() / 1e4;
        let v = xs.iter().map(|x| (x - m).powi(2)).sum::<f64>() / 1e4;
        assert!((m - 1.0).abs() < 3.0 * 0.01);
        assert!((v - 1.0).abs() < 3.0 * (2.0f64 / 1e4).sqrt());
        assert_eq!(g, sample_design(&DesignMeasure::gaussian(vec![1.0], vec![1.0]).unwrap(), 10_000, 2).unwrap());
    }

    #[test]
    fn truncated_sampling_respects_support() {
        let pdf = std_normal_pdf();
        let t = pdf(&[1.0]);
        let m = DesignMeasure::truncated(pdf.clone(), t, BoxDomain::interval(-8.0, 8.0).unwrap()).unwrap();
        let d = sample_design(&m, 10_000, 4).unwrap();
        assert!(d.points().iter().all(|p| pdf(p) > t));
        let too_high = DesignMeasure::PosteriorTruncated {
            reference: pdf,
            threshold: 1.0,
            proposal: BoxDomain::interval(-8.0, 8.0).unwrap(),
            cap: 10_000,
        };
        assert!(matches!(sample_design(&too_high, 1, 0), Err(Error::RejectionCap { attempts: 10_000, .. })));
    }

    #[test]
    fn superlevel_sets() {
        let pdf = std_normal_pdf();
        let b = BoxDomain::interval(-8.0, 8.0).unwrap();
        let r = truncation_region(pdf.clone(), pdf(&[1.0]), b.clone(), 1601).unwrap();
        let iv = r.intervals().unwrap();
        assert_eq!(iv.len(), 1);
        assert!((iv[0].0 + 1.0).abs() < 1e-6 && (iv[0].1 - 1.0).abs() < 1e-6, "{iv:?}");
        let all = truncation_region(pdf.clone(), 0.0, b.clone(), 101).unwrap();
        assert_eq!(all.intervals().unwrap(), &[(-8.0, 8.0)]);
        assert!(matches!(truncation_region(pdf, 1.0, b, 101), Err(Error::EmptyRegion { .. })));

        // two bumps give two intervals
        let bimodal: ReferenceDensity = Arc::new(|u: &[f64]| (-(u[0] - 2.0).powi(2)).exp() + (-(u[0] + 2.0).powi(2)).exp());
        let r = truncation_region(bimodal, 0.5, BoxDomain::interval(-5.0, 5.0).unwrap(), 501).unwrap();
        assert_eq!(r.intervals().unwrap().len(), 2);
        let design = Design::from_scalars(&[-2.0, 2.0, 0.0]);
        // the point at 0 lies outside the region and is ignored
        let h = fill_distance(&design, &FillRegion::Truncated(r.clone()), 2).unwrap().value;
        // inner endpoint 2 - x of the right bump is farthest: Newton on e^{-x^2} + e^{-(4-x)^2} = 1/2
        let mut x = 0.5f64.ln().abs().sqrt();
        for _ in 0..20 {
            let f = (-x * x).exp() + (-(4.0 - x).powi(2)).exp() - 0.5;
            let df = -2.0 * x * (-x * x).exp() + 2.0 * (4.0 - x) * (-(4.0 - x).powi(2)).exp();
            x -= f / df;
        }
        assert!((h - x).abs() < 1e-7, "{h} vs {x}");
        let grid = grid_fill_distance(&design, &FillRegion::Truncated(r), 2001).unwrap().value;
        assert!((grid - h).abs() <= 10.0 / 2000.0 + 1e-12);
    }

    #[test]
    fn threshold_rule_value() {
        assert_eq!(threshold_rule(2.0, 1.0, 4, 2), 0.5);
    }

    #[test]
    fn decay_study_1d() {
        let cfg = FillStudyConfig {
            n_list: vec![16, 64, 256],
            replications: 60,
            seed: 5,
            resolution: 2,
            tail_threshold: None,
        };
        let m = DesignMeasure::uniform(BoxDomain::interval(0.0, 1.0).unwrap());
        let a = fill_decay_study(&m, &unit(), &cfg).unwrap();
        let b = fill_decay_study(&m, &unit(), &cfg).unwrap();
        assert_eq!(a, b);
        assert!(a.slope < -0.6 && a.slope > -1.3, "{}", a.slope);
        assert!(a.summary.windows(2).all(|w| w[1].tail_probability <= w[0].tail_probability));
        assert_eq!(a.samples.len(), 180);
        assert!(a.summary_csv().starts_with("N,mean_h,q10,q90"));
        assert!(fill_decay_study(&m, &unit(), &FillStudyConfig { replications: 10, ..cfg }).is_err());
    }

    #[test]
    fn partition_cells() {
        let pdf = std_normal_pdf();
        let design = Design::from_scalars(&[-0.5, 0.5, 3.0]);
        let cells = partition_report(&*pdf, &design, &BoxDomain::interval(-4.0, 4.0).unwrap(), 4, 101).unwrap();
        assert_eq!(cells.len(), 4);
        assert_eq!(cells.iter().map(|c| c.points).sum::<usize>(), 3);
        assert_eq!(cells[0].fill_distance, f64::INFINITY);
        assert!((cells[1].sup_density - pdf(&[0.0])).abs() < 1e-12);
    }

    proptest! {
        #[test]
        fn adding_points_never_increases_fill(xs in proptest::collection::vec(0.0f64..1.0, 1..20), extra in -0.5f64..1.5) {
            let mut design = Design::from_scalars(&xs);
            let before = fill_distance(&design, &unit(), 2).unwrap().value;
            design.push(vec![extra]).unwrap();
            let after = fill_distance(&design, &unit(), 2).unwrap().value;
            prop_assert!(after <= before);
        }

        #[test]
        fn exact_matches_grid_within_spacing(xs in proptest::collection::vec(0.0f64..1.0, 1..15)) {
            let design = Design::from_scalars(&xs);
            let exact = fill_distance(&design, &unit(), 2).unwrap().value;
            let grid = grid_fill_distance(&design, &unit(), 1001).unwrap().value;
            prop_assert!((exact - grid).abs() <= 1.0 / 1000.0 + 1e-12);
            prop_assert!(grid <= exact + 1e-12);
        }
    }
}
