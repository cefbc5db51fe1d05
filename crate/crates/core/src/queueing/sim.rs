use rand::Rng;

use super::law::TimeLaw;
use crate::error::{Error, Result};

/// Nominal queue: FIFO, one or two identical servers, rare event "jobs in
/// system reach `level`".
#[derive(Debug, Clone)]
pub struct QueueModel {
    pub servers: usize,
    pub interarrival: TimeLaw,
    pub service: TimeLaw,
    pub level: usize,
}

impl QueueModel {
    pub fn new(servers: usize, interarrival: TimeLaw, service: TimeLaw, level: usize) -> Result<Self> {
        if !(1..=2).contains(&servers) {
            return Err(Error::InvalidArgument(format!("{servers} servers (1 or 2 supported)")));
        }
        if level < 2 {
            return Err(Error::InvalidArgument(format!("level {level} (must be >= 2)")));
        }
        Ok(Self {
            servers,
            interarrival,
            service,
            level,
        })
    }

    /// M/M/1 with arrival rate `mu` and service rate `nu`.
    pub fn mm1(mu: f64, nu: f64, level: usize) -> Result<Self> {
        Self::new(1, TimeLaw::exponential(mu)?, TimeLaw::exponential(nu)?, level)
    }

    pub fn with_level(&self, level: usize) -> Result<Self> {
        Self::new(self.servers, self.interarrival.clone(), self.service.clone(), level)
    }

    pub fn with_servers(&self, servers: usize) -> Result<Self> {
        Self::new(servers, self.interarrival.clone(), self.service.clone(), self.level)
    }
}

/// Durations drawn during one busy period, kept for proposal fitting.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct PathDraws {
    /// Every interarrival draw, in order.
    pub interarrivals: Vec<f64>,
    /// Completed services only.
    pub services: Vec<f64>,
}

/// Outcome of one busy period.
#[derive(Debug, Clone, PartialEq)]
pub struct BusyPeriodPath {
    /// Largest number of jobs in system.
    pub peak: usize,
    /// Completed services `L`.
    pub served: usize,
    pub arrival_draws: usize,
    pub service_draws: usize,
    /// `sum ln(p/q)` over every draw of the period.
    pub log_lr: f64,
    pub hit: bool,
    pub draws: Option<PathDraws>,
}

impl BusyPeriodPath {
    /// `phi * l`: the likelihood ratio on a hit, 0 otherwise.
    pub fn weight(&self) -> f64 {
        if self.hit {
            self.log_lr.exp()
        } else {
            0.0
        }
    }
}

/// Simulates one busy period starting from a single job that has just
/// arrived at an empty system.
///
/// Interarrivals come from `arrivals` and services from `services`; the
/// likelihood ratio is taken against the model's nominal laws. The period
/// ends when the system empties or holds `model.level` jobs. With `record`
/// the durations are returned in [`BusyPeriodPath::draws`].
pub fn simulate_busy_period<R: Rng + ?Sized>(
    model: &QueueModel,
    arrivals: &TimeLaw,
    services: &TimeLaw,
    rng: &mut R,
    record: bool,
) -> BusyPeriodPath {
    let mut path = BusyPeriodPath {
        peak: 1,
        served: 0,
        arrival_draws: 0,
        service_draws: 0,
        log_lr: 0.0,
        hit: false,
        draws: record.then(PathDraws::default),
    };
    let draw_arrival = |path: &mut BusyPeriodPath, rng: &mut R| {
        let x = arrivals.sample(rng.random::<f64>());
        path.arrival_draws += 1;
        path.log_lr += model.interarrival.ln_density(x) - arrivals.ln_density(x);
        if let Some(d) = path.draws.as_mut() {
            d.interarrivals.push(x);
        }
        x
    };
    let draw_service = |path: &mut BusyPeriodPath, rng: &mut R| {
        let y = services.sample(rng.random::<f64>());
        path.service_draws += 1;
        path.log_lr += model.service.ln_density(y) - services.ln_density(y);
        y
    };

    let mut in_system = 1usize;
    let mut completion = [f64::INFINITY; 2];
    let mut duration = [0.0; 2];
    duration[0] = draw_service(&mut path, rng);
    completion[0] = duration[0];
    let mut next_arrival = draw_arrival(&mut path, rng);
    let servers = model.servers;
    loop {
        let s = if servers == 2 && completion[1] < completion[0] { 1 } else { 0 };
        if next_arrival < completion[s] {
            let now = next_arrival;
            in_system += 1;
            path.peak = path.peak.max(in_system);
            if in_system >= model.level {
                path.hit = true;
                break;
            }
            if let Some(free) = (0..servers).find(|&i| completion[i].is_infinite()) {
                duration[free] = draw_service(&mut path, rng);
                completion[free] = now + duration[free];
            }
            next_arrival = now + draw_arrival(&mut path, rng);
        } else {
            let now = completion[s];
            in_system -= 1;
            path.served += 1;
            if let Some(d) = path.draws.as_mut() {
                d.services.push(duration[s]);
            }
            if in_system == 0 {
                break;
            }
            let busy_elsewhere = (0..servers).filter(|&i| i != s && completion[i].is_finite()).count();
            if in_system > busy_elsewhere {
                duration[s] = draw_service(&mut path, rng);
                completion[s] = now + duration[s];
            } else {
                completion[s] = f64::INFINITY;
            }
        }
    }
    path
}

/// Probability that a walk from 1 with up-probability `mu/(mu+nu)` reaches
/// `k` before 0; the M/M/1 level-crossing probability per busy period.
pub fn gambler_ruin_prob(mu: f64, nu: f64, k: usize) -> f64 {
    let r = nu / mu;
    if (r - 1.0).abs() < 1e-12 {
        return 1.0 / k as f64;
    }
    (1.0 - r) / (1.0 - r.powi(k as i32))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::stream;

    #[test]
    fn ruin_limits() {
        assert_eq!(gambler_ruin_prob(0.3, 0.7, 1), 1.0);
        assert!((gambler_ruin_prob(0.5, 0.5, 10) - 0.1).abs() < 1e-15);
        // r = 2: (1 - 2)/(1 - 4) = 1/3
        assert!((gambler_ruin_prob(1.0, 2.0, 2) - 1.0 / 3.0).abs() < 1e-15);
    }

    #[test]
    fn arrival_count_identity_on_hits() {
        for servers in [1, 2] {
            let model = QueueModel::mm1(1.0, 1.2, 5).unwrap().with_servers(servers).unwrap();
            let mut rng = stream(3, servers as u64);
            let mut hits = 0;
            for _ in 0..20_000 {
                let p = simulate_busy_period(&model, &model.interarrival, &model.service, &mut rng, true);
                assert_eq!(p.log_lr, 0.0);
                let d = p.draws.as_ref().unwrap();
                assert_eq!(d.services.len(), p.served);
                assert_eq!(d.interarrivals.len(), p.arrival_draws);
                if p.hit {
                    hits += 1;
                    assert_eq!(p.peak, 5);
                    assert_eq!(p.arrival_draws, 5 + p.served - 1);
                    // completed plus in service
                    assert_eq!(p.service_draws, p.served + servers.min(5));
                } else {
                    assert!(p.peak < 5);
                    assert_eq!(p.arrival_draws, p.served);
                    assert_eq!(p.service_draws, p.served);
                }
            }
            assert!(hits > 100);
        }
    }

    #[test]
    fn short_first_service_ends_period() {
        let model = QueueModel::mm1(1.0, 1.0, 2).unwrap();
        let mut rng = stream(11, 0);
        let mut seen = false;
        for _ in 0..1000 {
            let p = simulate_busy_period(&model, &model.interarrival, &model.service, &mut rng, true);
            let d = p.draws.unwrap();
            if d.services.first().is_some_and(|s| *s < d.interarrivals[0]) {
                assert!(!p.hit);
                assert_eq!(p.served, 1);
                seen = true;
            } else {
                assert!(p.hit);
            }
        }
        assert!(seen);
    }

    #[test]
    fn rejects_bad_models() {
        assert!(QueueModel::mm1(1.0, 1.0, 1).is_err());
        assert!(QueueModel::mm1(1.0, 1.0, 4).unwrap().with_servers(3).is_err());
    }
}
