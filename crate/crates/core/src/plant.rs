//! Paint-plant instance generation, FIFO dispatch and the new-order
//! disruption.
//!
//! The plant is flattened to one processing step per batch: latex
//! formulation units run latex products, alkyd units run alkyd products,
//! and fill-out trains run anything. Disperser counts are carried in the
//! config for reference only.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::PlantError;
use crate::schedule::{
    ClassKind, ProductClass, ProductId, Resource, ResourceDoc, ResourceId, Schedule, ScheduleMetrics, Task,
    TaskId,
};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PlantConfig {
    pub n_latex_units: u32,
    pub n_alkyd_units: u32,
    pub n_fillout_trains: u32,
    /// Not enforced; the flattened model has no disperser contention.
    pub n_latex_dispersers: u32,
    pub n_alkyd_dispersers: u32,
    /// Processing rate bounds, units per hour.
    pub rate_range: (f64, f64),
    /// Batch size bounds, units.
    pub quantity_range: (f64, f64),
    pub n_products: u32,
    /// Orders in the initial (pre-disruption) schedule.
    pub n_orders: u32,
    /// Due date = sampled ideal finish times this factor.
    pub due_date_tightness: f64,
    pub seed: u64,
}

impl Default for PlantConfig {
    fn default() -> Self {
        Self {
            n_latex_units: 11,
            n_alkyd_units: 40,
            n_fillout_trains: 30,
            n_latex_dispersers: 4,
            n_alkyd_dispersers: 13,
            rate_range: (5.0, 15.0),
            quantity_range: (10.0, 60.0),
            n_products: 12,
            n_orders: 105,
            due_date_tightness: 0.8,
            seed: 0,
        }
    }
}

impl PlantConfig {
    pub const PRESETS: [&'static str; 2] = ["desk", "paper-full"];

    /// Four resources and 17 base orders; the test-scale instance.
    pub fn desk() -> Self {
        Self {
            n_latex_units: 1,
            n_alkyd_units: 2,
            n_fillout_trains: 1,
            n_latex_dispersers: 1,
            n_alkyd_dispersers: 1,
            n_products: 4,
            n_orders: 17,
            ..Self::default()
        }
    }

    /// The full case-study plant: 81 resources and 100 products.
    pub fn paper_full() -> Self {
        Self { n_products: 100, ..Self::default() }
    }

    pub fn preset(name: &str) -> Option<Self> {
        match name {
            "desk" => Some(Self::desk()),
            "paper-full" => Some(Self::paper_full()),
            _ => None,
        }
    }

    pub fn from_json(text: &str) -> Result<Self, PlantError> {
        let config: Self = serde_json::from_str(text)?;
        config.validate()?;
        Ok(config)
    }

    pub fn validate(&self) -> Result<(), PlantError> {
        let counts = [
            ("n_latex_units", self.n_latex_units),
            ("n_alkyd_units", self.n_alkyd_units),
            ("n_fillout_trains", self.n_fillout_trains),
            ("n_latex_dispersers", self.n_latex_dispersers),
            ("n_alkyd_dispersers", self.n_alkyd_dispersers),
            ("n_products", self.n_products),
        ];
        if let Some((name, _)) = counts.iter().find(|(_, n)| *n < 1) {
            return Err(PlantError::Config(format!("{name} must be >= 1")));
        }
        let total = self.n_latex_units as u64 + self.n_alkyd_units as u64 + self.n_fillout_trains as u64;
        if total > 100_000 || self.n_products > 100_000 || self.n_orders > 1_000_000 {
            return Err(PlantError::Config("instance too large".into()));
        }
        let range_ok = |(lo, hi): (f64, f64)| lo.is_finite() && hi.is_finite() && lo > 0.0 && lo <= hi;
        if !range_ok(self.rate_range) {
            return Err(PlantError::Config("rate_range needs 0 < min <= max".into()));
        }
        if !range_ok(self.quantity_range) {
            return Err(PlantError::Config("quantity_range needs 0 < min <= max".into()));
        }
        if !(self.due_date_tightness.is_finite() && self.due_date_tightness > 0.0) {
            return Err(PlantError::Config("due_date_tightness must be > 0".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Plant {
    pub config: PlantConfig,
    pub classes: Vec<ProductClass>,
    /// Resources with empty sequences.
    pub resources: Vec<Resource>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Order {
    pub id: TaskId,
    pub product: ProductId,
    pub quantity: f64,
    #[serde(rename = "due")]
    pub due_date: f64,
    #[serde(default)]
    pub arrival_index: u64,
}

impl Order {
    pub fn from_json(text: &str) -> Result<Self, PlantError> {
        let order: Self = serde_json::from_str(text)?;
        order.check()?;
        Ok(order)
    }

    fn check(&self) -> Result<(), PlantError> {
        if !(self.quantity.is_finite() && self.quantity > 0.0) {
            return Err(PlantError::Config(format!("order {} needs quantity > 0", self.id)));
        }
        if !(self.due_date.is_finite() && self.due_date >= 0.0) {
            return Err(PlantError::Config(format!("order {} needs due >= 0", self.id)));
        }
        Ok(())
    }

    fn to_task(self) -> Task {
        Task::new(self.id, format!("order-{}", self.id.0), self.product, self.quantity, self.due_date)
    }
}

pub fn orders_from_json(text: &str) -> Result<Vec<Order>, PlantError> {
    let orders: Vec<Order> = serde_json::from_str(text)?;
    orders.iter().try_for_each(Order::check)?;
    Ok(orders)
}

pub fn generate_plant(config: &PlantConfig) -> Result<Plant, PlantError> {
    config.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);

    let classes: Vec<ProductClass> = (1..=config.n_products)
        .map(|id| ProductClass { id, kind: if id % 2 == 1 { ClassKind::Latex } else { ClassKind::Alkyd } })
        .collect();
    let of_kind = |kind| classes.iter().filter(move |c| c.kind == kind).map(|c| c.id);

    let groups = [
        ("latex-unit", config.n_latex_units, of_kind(ClassKind::Latex).collect::<Vec<_>>()),
        ("alkyd-unit", config.n_alkyd_units, of_kind(ClassKind::Alkyd).collect()),
        ("fillout-train", config.n_fillout_trains, classes.iter().map(|c| c.id).collect()),
    ];
    let (lo, hi) = config.rate_range;
    let mut resources = Vec::new();
    for (prefix, count, caps) in groups {
        for k in 1..=count {
            let id = ResourceId(resources.len() as u32 + 1);
            let rate = rng.gen_range(lo..=hi);
            resources.push(Resource::new(id, format!("{prefix}-{k}"), rate, caps.iter().copied()));
        }
    }
    Ok(Plant { config: config.clone(), classes, resources })
}

/// Samples `n` orders. Due dates are each order's finish time under FIFO
/// dispatch, scaled by a uniform jitter in [0.8, 1.8) and the plant's
/// tightness factor, so the FIFO schedule is tardy but reorderable.
pub fn generate_orders(plant: &Plant, n: usize, seed: u64) -> Result<Vec<Order>, PlantError> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (qlo, qhi) = plant.config.quantity_range;
    let mut orders: Vec<Order> = (0..n)
        .map(|k| Order {
            id: TaskId(k as u32 + 1),
            product: plant.classes[rng.gen_range(0..plant.classes.len())].id,
            quantity: rng.gen_range(qlo..=qhi),
            due_date: 0.0,
            arrival_index: k as u64,
        })
        .collect();
    let fifo = fifo_schedule(plant, &orders)?;
    for order in &mut orders {
        let jitter: f64 = rng.gen_range(0.8..1.8);
        order.due_date = fifo.tasks[&order.id].finish() * jitter * plant.config.due_date_tightness;
    }
    Ok(orders)
}

/// Capable resource with the earliest availability; ties go to the lowest id.
fn dispatch_target(
    resources: &[Resource],
    available: impl Fn(usize) -> f64,
    product: ProductId,
) -> Option<usize> {
    resources
        .iter()
        .enumerate()
        .filter(|(_, r)| r.can_process(product))
        .min_by(|(i, a), (j, b)| available(*i).total_cmp(&available(*j)).then(a.id.cmp(&b.id)))
        .map(|(k, _)| k)
}

pub fn fifo_schedule(plant: &Plant, orders: &[Order]) -> Result<Schedule, PlantError> {
    let mut resources: Vec<Resource> =
        plant.resources.iter().map(|r| Resource { sequence: Vec::new(), ..r.clone() }).collect();
    let mut queue: Vec<&Order> = orders.iter().collect();
    queue.sort_by_key(|o| (o.arrival_index, o.id));

    let mut avail = vec![0.0f64; resources.len()];
    let mut tasks = Vec::with_capacity(orders.len());
    let mut seen = std::collections::BTreeSet::new();
    for order in queue {
        order.check()?;
        if !seen.insert(order.id) {
            return Err(PlantError::DuplicateOrder(order.id));
        }
        let k = dispatch_target(&resources, |k| avail[k], order.product)
            .ok_or(PlantError::Infeasible(order.id))?;
        avail[k] += order.quantity / resources[k].rate;
        resources[k].sequence.push(order.id);
        tasks.push(order.to_task());
    }
    Ok(Schedule::new(resources, tasks)?)
}

/// Appends `order` FIFO-style and returns the disrupted schedule with
/// metrics whose `init_tardiness` is the post-insertion total tardiness.
pub fn inject_new_order(
    schedule: &Schedule,
    order: &Order,
) -> Result<(Schedule, ScheduleMetrics), PlantError> {
    order.check()?;
    if schedule.tasks.contains_key(&order.id) {
        return Err(PlantError::DuplicateOrder(order.id));
    }
    let k =
        dispatch_target(&schedule.resources, |k| schedule.resources[k].available_at(schedule), order.product)
            .ok_or(PlantError::Infeasible(order.id))?;
    let mut next = schedule.clone();
    next.resources[k].sequence.push(order.id);
    next.tasks.insert(order.id, order.to_task());
    next.recompute_timing()?;
    let tot = next.compute_metrics(0.0).tot_tard;
    let metrics = next.compute_metrics(tot);
    Ok((next, metrics))
}

/// Samples the disruption: a mid-sized batch whose due date is a few times
/// its ideal finish (processing alone on the fastest capable resource), so
/// appending it at the end of a FIFO queue makes it late.
pub fn sample_new_order<R: Rng>(plant: &Plant, schedule: &Schedule, id: TaskId, rng: &mut R) -> Order {
    let (qlo, qhi) = plant.config.quantity_range;
    let product = plant.classes[rng.gen_range(0..plant.classes.len())].id;
    let quantity = rng.gen_range(qlo..=(0.4 * (qlo + qhi)).clamp(qlo, qhi));
    let ideal = schedule
        .resources
        .iter()
        .filter(|r| r.can_process(product))
        .map(|r| quantity / r.rate)
        .fold(f64::INFINITY, f64::min);
    let ideal = if ideal.is_finite() { ideal } else { 0.0 };
    let slack: f64 = rng.gen_range(1.25..3.75);
    let arrival_index = schedule.tasks.len() as u64;
    Order { id, product, quantity, due_date: ideal * slack * plant.config.due_date_tightness, arrival_index }
}

#[derive(Debug, Serialize, Deserialize)]
struct PlantDoc {
    config: PlantConfig,
    classes: Vec<ProductClass>,
    resources: Vec<ResourceDoc>,
}

impl Plant {
    pub fn to_json(&self) -> String {
        let doc = PlantDoc {
            config: self.config.clone(),
            classes: self.classes.clone(),
            resources: self
                .resources
                .iter()
                .map(|r| ResourceDoc {
                    id: r.id.0,
                    name: r.name.clone(),
                    rate: r.rate,
                    capabilities: r.capabilities.iter().copied().collect(),
                    sequence: Vec::new(),
                })
                .collect(),
        };
        serde_json::to_string_pretty(&doc).expect("plant serializes")
    }
}
